// Copyright 2026 The s2mlp Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "s2mlp/autograd.hpp"
#include "s2mlp/errors.hpp"
#include "s2mlp/gradcheck.hpp"
#include "s2mlp/shift.hpp"

namespace s2mlp {
namespace {

using ad::Tape;
using ad::Var;

TEST(Autograd, LinearMapGivesOnes) {
  Tape<double> t;
  const auto x = t.leaf(TensorD({2, 3}, {1, 2, 3, 4, 5, 6}));
  const auto w = t.leaf(TensorD({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
  const auto b = t.leaf(TensorD({3}));
  const auto loss = ad::sum(t, ad::affine(t, x, w, b));
  const auto g = t.backward(loss);
  for (double v : g.of(x).values()) EXPECT_EQ(v, 1.0);
  EXPECT_EQ(g.of(b), TensorD({3}, {2, 2, 2}));
}

TEST(Autograd, GeluAtZero) {
  Tape<double> t;
  const auto x = t.leaf(TensorD({1}, {0.0}));
  const auto g = t.backward(ad::sum(t, ad::gelu(t, x)));
  EXPECT_NEAR(g.of(x)[0], 0.5, 1e-15);
}

TEST(Autograd, ShiftGradientIsAdjointOfOnes) {
  std::mt19937_64 rng(3);
  Tape<float> t;
  const auto x = t.leaf(oracle::random_integer_map({1, 4, 4, 4}, rng));
  const auto g = t.backward(ad::sum(t, ad::spatial_shift(t, x, ShiftSpec::first())));
  EXPECT_EQ(g.of(x), spatial_shift_adjoint(Tensor::full({1, 4, 4, 4}, 1.0f), ShiftSpec::first()));
}

TEST(Autograd, SharedSubexpressionsAccumulate) {
  Tape<double> t;
  const auto x = t.leaf(TensorD({3}, {0.3, -1.2, 2.0}));
  const auto y = ad::gelu(t, x);
  const auto loss = ad::sum(t, ad::add(t, y, y));
  const auto g = t.backward(loss);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(g.of(x)[i], 2.0 * gelu_derivative(x.value()[i]), 1e-15);
  // x reaches the loss directly and through gelu.
  Tape<double> u;
  const auto x2 = u.leaf(TensorD({3}, {0.3, -1.2, 2.0}));
  const auto g2 = u.backward(ad::sum(u, ad::add(u, ad::gelu(u, x2), x2)));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(g2.of(x2)[i], 1.0 + gelu_derivative(x2.value()[i]), 1e-15);
}

TEST(Autograd, EveryReachableNodeHasMatchingGradient) {
  std::mt19937_64 rng(5);
  Tape<double> t;
  const auto x = t.leaf(oracle::random_normal<double>({1, 2, 2, 8}, rng));
  const auto w = t.leaf(oracle::random_normal<double>({8, 8}, rng));
  const auto b = t.leaf(TensorD({8}));
  const auto h = ad::gelu(t, ad::affine(t, x, w, b));
  const auto loss = ad::sum(t, ad::spatial_shift(t, h, ShiftSpec::second()));
  const auto g = t.backward(loss);
  for (ad::NodeId id = 0; id < t.size(); ++id) {
    ASSERT_TRUE(g.has(id)) << id;
    EXPECT_EQ(g[id].dims(), t.node(id).dims);
    for (ad::NodeId in : t.node(id).inputs) EXPECT_LT(in, id);
  }
}

TEST(Autograd, Errors) {
  Tape<double> t;
  const auto x = t.leaf(TensorD({2}, {1, 2}));
  EXPECT_THROW(t.backward(x), ContractError);
  const std::array<Var<double>, 1> in{x};
  const auto c = t.custom("mystery", in, TensorD({1}, {3}));
  EXPECT_THROW(t.backward(c), UnsupportedOpError);
  const auto unused = t.leaf(TensorD({1}));
  const auto g = t.backward(ad::sum(t, x));
  EXPECT_THROW(g.of(unused), ContractError);

  Tape<double> frozen(Tape<double>::Mode::NoGrad);
  const auto y = frozen.leaf(TensorD({1}, {1}));
  EXPECT_EQ(frozen.size(), 0u);
  EXPECT_THROW(frozen.backward(ad::sum(frozen, y)), ContractError);
}

TEST(Autograd, CustomBackwardIsUsed) {
  Tape<double> t;
  const auto x = t.leaf(TensorD({2}, {1.5, -2.0}));
  const std::array<Var<double>, 1> in{x};
  TensorD sq({2});
  for (std::size_t i = 0; i < 2; ++i) sq[i] = x.value()[i] * x.value()[i];
  const auto y = t.custom("square", in, sq,
                          [](const TensorD& g, std::span<const TensorD* const> inputs) {
                            TensorD out(inputs[0]->dims());
                            for (std::size_t i = 0; i < out.size(); ++i) out[i] = 2 * (*inputs[0])[i] * g[i];
                            return std::vector<TensorD>{out};
                          });
  const auto g = t.backward(ad::sum(t, y));
  EXPECT_EQ(g.of(x), TensorD({2}, {3.0, -4.0}));
}

TEST(Autograd, DropPathMaskStatistics) {
  std::mt19937_64 rng(123);
  Tape<float> t(Tape<float>::Mode::NoGrad);
  const auto x = t.leaf(Tensor::full({10000, 1, 1, 1}, 1.0f));
  const auto y = ad::drop_path(t, x, 0.1, rng);
  std::size_t kept = 0;
  for (float v : y.value().values()) {
    if (v != 0.0f) {
      ++kept;
      EXPECT_FLOAT_EQ(v, 1.0f / 0.9f);
    }
  }
  EXPECT_NEAR(static_cast<double>(kept) / 10000.0, 0.9, 0.02);
  // The same seed reproduces the same mask.
  std::mt19937_64 again(123);
  EXPECT_EQ(ad::drop_path(t, x, 0.1, again).value(), y.value());
  std::mt19937_64 unused(0);
  EXPECT_EQ(ad::drop_path(t, x, 0.0, unused).value(), x.value());
}

TEST(Gradcheck, QuadraticIsExact) {
  std::mt19937_64 rng(1);
  const TensorD x0 = oracle::random_normal<double>({3, 4}, rng);
  const double err = ad::gradcheck(
      [](Tape<double>& t, const Var<double>& x) {
        auto sq = t.custom("square", std::array<Var<double>, 1>{x}, [&] {
          TensorD s(x.dims());
          for (std::size_t i = 0; i < s.size(); ++i) s[i] = x.value()[i] * x.value()[i];
          return s;
        }(), [](const TensorD& g, std::span<const TensorD* const> in) {
          TensorD out(in[0]->dims());
          for (std::size_t i = 0; i < out.size(); ++i) out[i] = 2 * (*in[0])[i] * g[i];
          return std::vector<TensorD>{out};
        });
        return ad::sum(t, sq);
      },
      x0, 1e-5);
  EXPECT_LE(err, 1e-8);
}

TEST(Gradcheck, DetectsAWrongGradient) {
  const double err = ad::gradcheck(
      [](Tape<double>& t, const Var<double>& x) {
        auto y = t.custom("wrong", std::array<Var<double>, 1>{x}, x.value(),
                          [](const TensorD& g, std::span<const TensorD* const>) {
                            TensorD out = g;
                            for (auto& v : out.values()) v *= 1.01;
                            return std::vector<TensorD>{out};
                          });
        return ad::sum(t, y);
      },
      TensorD({2}, {1.0, 2.0}));
  EXPECT_GT(err, 1e-3);
}

TEST(Gradcheck, RejectsBadStepAndNonFiniteValues) {
  auto f = [](Tape<double>& t, const Var<double>& x) { return ad::sum(t, x); };
  EXPECT_THROW(ad::gradcheck(f, TensorD({1}), 1e-2), ContractError);
  EXPECT_THROW(ad::gradcheck(f, TensorD({1}), 1e-8), ContractError);
  EXPECT_THROW(ad::gradcheck(f, TensorD({1}, {std::nan("")})), NumericError);
}

}  // namespace
}  // namespace s2mlp
