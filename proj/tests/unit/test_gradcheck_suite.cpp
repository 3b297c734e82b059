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

#include <set>
#include <string>

#include <gtest/gtest.h>

#include "s2mlp/gradcheck_suite.hpp"

namespace s2mlp {
namespace {

TEST(GradcheckSuite, EveryCasePassesOnThreeSeeds) {
  const auto cases = run_gradcheck_suite();
  std::set<std::string> names;
  for (const auto& c : cases) {
    names.insert(c.name);
    EXPECT_TRUE(c.passed) << c.name << " seed " << c.seed << " error " << c.result.max_rel_error;
    EXPECT_LE(c.result.max_rel_error, 1e-5);
    EXPECT_GT(c.result.coordinates, 0u);
  }
  EXPECT_EQ(cases.size(), 3 * names.size());
  for (const char* required : {"affine", "layer_norm", "gelu", "add", "spatial_shift1", "spatial_shift2",
                               "patchify", "branch_softmax", "split_attention", "s2mlpv2_component",
                               "cm_mlp", "block_forward", "model", "smoothed_cross_entropy"}) {
    EXPECT_TRUE(names.count(required)) << required;
  }
}

TEST(GradcheckSuite, ToleranceIsApplied) {
  GradcheckSuiteOptions opts;
  opts.seeds = {1};
  opts.tolerance = 1e-300;
  bool any_failed = false;
  for (const auto& c : run_gradcheck_suite(opts)) any_failed |= !c.passed;
  EXPECT_TRUE(any_failed);
}

}  // namespace
}  // namespace s2mlp
