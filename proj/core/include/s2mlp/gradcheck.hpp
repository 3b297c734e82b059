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

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "s2mlp/autograd.hpp"

namespace s2mlp::ad {

/// A scalar-valued function built on a tape from a list of input leaves.
using ScalarFunction =
    std::function<Var<double>(Tape<double>&, std::span<const Var<double>> inputs)>;

struct GradcheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

/// Compares reverse-mode gradients with central differences
/// (f(x + h) - f(x - h)) / 2h over every coordinate of every input. The
/// per-coordinate error is |a - n| / max(|a|, |n|, 1e-8).
/// Requires h in [1e-6, 1e-3]; throws NumericError on a non-finite f.
GradcheckResult gradcheck(const ScalarFunction& f, std::vector<TensorD> inputs, double h = 1e-5);

/// Single-input form; returns the max relative error.
double gradcheck(const std::function<Var<double>(Tape<double>&, const Var<double>&)>& f,
                 const TensorD& x0, double h = 1e-5);

}  // namespace s2mlp::ad
