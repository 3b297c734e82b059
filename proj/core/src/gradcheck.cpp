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

#include "s2mlp/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace s2mlp::ad {

namespace {

double evaluate(const ScalarFunction& f, const std::vector<TensorD>& inputs) {
  Tape<double> tape(Tape<double>::Mode::NoGrad);
  std::vector<Var<double>> leaves;
  for (const auto& x : inputs) leaves.push_back(tape.leaf(x));
  const double v = f(tape, leaves).value()[0];
  if (!std::isfinite(v)) throw NumericError("gradcheck: function value is not finite");
  return v;
}

}  // namespace

GradcheckResult gradcheck(const ScalarFunction& f, std::vector<TensorD> inputs, double h) {
  if (!(h >= 1e-6 && h <= 1e-3)) {
    throw ContractError("gradcheck step must lie in [1e-6, 1e-3], got " + std::to_string(h));
  }
  Tape<double> tape;
  std::vector<Var<double>> leaves;
  for (const auto& x : inputs) leaves.push_back(tape.leaf(x));
  const Var<double> out = f(tape, leaves);
  if (!std::isfinite(out.value()[0])) {
    throw NumericError("gradcheck: function value is not finite");
  }
  const Gradients<double> grads = tape.backward(out);

  GradcheckResult res;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const bool reached = grads.has(leaves[k].id);
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double saved = inputs[k][i];
      inputs[k][i] = saved + h;
      const double fp = evaluate(f, inputs);
      inputs[k][i] = saved - h;
      const double fm = evaluate(f, inputs);
      inputs[k][i] = saved;

      const double numeric = (fp - fm) / (2.0 * h);
      const double analytic = reached ? grads.of(leaves[k])[i] : 0.0;
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      const double err = std::abs(analytic - numeric) / denom;
      ++res.coordinates;
      if (err > res.max_rel_error || res.coordinates == 1) {
        res.max_rel_error = err;
        res.worst_input = k;
        res.worst_index = i;
        res.analytic = analytic;
        res.numeric = numeric;
      }
    }
  }
  return res;
}

double gradcheck(const std::function<Var<double>(Tape<double>&, const Var<double>&)>& f,
                 const TensorD& x0, double h) {
  ScalarFunction g = [&f](Tape<double>& t, std::span<const Var<double>> in) {
    return f(t, in[0]);
  };
  return gradcheck(g, {x0}, h).max_rel_error;
}

}  // namespace s2mlp::ad
