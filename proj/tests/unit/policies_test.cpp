// Copyright 2020 The Authors.
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

#include <gtest/gtest.h>

#include <set>

#include "gtboed/error.hpp"
#include "gtboed/policies.hpp"

namespace gtboed {
namespace {

std::string SyntheticAssay(size_t n, size_t groups, size_t size) {
  std::string text = "# synthetic assay\n";
  for (size_t g = 0; g < groups; ++g) {
    for (size_t u = 0; u < size; ++u) {
      if (u) text += ",";
      text += std::to_string((g * 7 + u * 11) % n);
    }
    text += "\n";
  }
  return text;
}

TEST(DorfmanTest, GroupSizeFormula) {
  EXPECT_EQ(DorfmanGroupSize(0.05, 10), 6u);
  EXPECT_EQ(DorfmanGroupSize(0.02, 10), 9u);
  EXPECT_EQ(DorfmanGroupSize(0.001, 10), 10u);
}

TEST(DorfmanTest, ContiguousPartition) {
  const GroupBatch b = DorfmanSplit(70, 0.05, 10);
  ASSERT_EQ(b.size(), 12u);
  for (size_t g = 0; g < 11; ++g) EXPECT_EQ(b[g].size(), 6u);
  EXPECT_EQ(b[11], (Group{66, 67, 68, 69}));
}

TEST(SplitPositivesTest, Examples) {
  TestHistory h;
  EXPECT_TRUE(SplitPositivesIndividually(h, {}).empty());
  h.Append({Group{0, 1, 2}, Group{3, 4, 5}}, {0, 1});
  EXPECT_EQ(SplitPositivesIndividually(h, {}), (GroupBatch{Group{3}, Group{4}, Group{5}}));
  TestHistory overlap;
  overlap.Append({Group{1, 2}, Group{2, 3}}, {1, 1});
  EXPECT_EQ(SplitPositivesIndividually(overlap, {}),
            (GroupBatch{Group{1}, Group{2}, Group{3}}));
  EXPECT_EQ(SplitPositivesIndividually(overlap, {Group{2}}),
            (GroupBatch{Group{1}, Group{3}}));
  overlap.Append({Group{1}}, {0});
  EXPECT_EQ(SplitPositivesIndividually(overlap, {}), (GroupBatch{Group{2}, Group{3}}));
}

TEST(BinarySplitTest, Examples) {
  TestHistory h;
  h.Append({Group{0, 1, 2, 3}, Group{4, 5, 6, 7, 8}, Group{9, 10}}, {1, 1, 0});
  EXPECT_EQ(BinarySplitPositives(h, {}),
            (GroupBatch{Group{0, 1}, Group{2, 3}, Group{4, 5, 6}, Group{7, 8}}));
  // Halves already emitted are not repeated.
  EXPECT_EQ(BinarySplitPositives(h, {Group{0, 1}, Group{2, 3}}),
            (GroupBatch{Group{4, 5, 6}, Group{7, 8}}));
}

TEST(MtGroupSizeTest, Examples) {
  EXPECT_EQ(MtGroupSize(0.05, NoiseModel::Constant(0.97, 0.85, 10), 10), 10u);
  EXPECT_EQ(MtGroupSize(0.05, NoiseModel::Constant(0.97, 0.85, 20), 20), 16u);
  EXPECT_EQ(MtGroupSize(0.5, NoiseModel::Constant(1, 1, 10), 10), 1u);
  EXPECT_EQ(MtGroupSize(0.1, NoiseModel::Constant(1, 1, 10), 10), 6u);
  try {
    MtGroupSize(0.05, NoiseModel::Constant(0.99, 0.5, 10), 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfiguration);
  }
}

TEST(MtRandomGroupsTest, SeededAndWellFormed) {
  const NoiseModel noise = NoiseModel::Constant(0.97, 0.85, 10);
  Rng a(1), b(1);
  const auto x = MtRandomGroups(70, 0.05, noise, 10, 8, a);
  EXPECT_EQ(x, MtRandomGroups(70, 0.05, noise, 10, 8, b));
  ASSERT_EQ(x.size(), 8u);
  for (const auto& g : x) {
    EXPECT_EQ(g.size(), 10u);
    EXPECT_NO_THROW(g.Validate(70, 10));
  }
}

TEST(FixedAssayTest, CursorMechanics) {
  const auto assay = FixedAssay::Parse(SyntheticAssay(70, 22, 10), 70, 10);
  ASSERT_EQ(assay.size(), 22u);
  const auto first = assay.Slice(0, 8);
  ASSERT_EQ(first.size(), 8u);
  EXPECT_EQ(first[0], assay.groups()[0]);
  EXPECT_EQ(assay.Slice(16, 8).size(), 6u);
  EXPECT_TRUE(assay.Slice(22, 8).empty());
  EXPECT_TRUE(assay.Slice(0, 0).empty());
}

TEST(FixedAssayTest, RejectsOversizedGroups) {
  try {
    FixedAssay::Parse("0,1\n" + SyntheticAssay(70, 1, 11), 70, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfiguration);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_THROW(FixedAssay::Parse("0,70\n", 70, 10), Error);
  EXPECT_THROW(FixedAssay::Parse("0;1\n", 70, 10), Error);
}

TEST(InformativeDorfmanTest, CostScan) {
  const NoiseModel exact = NoiseModel::Constant(1, 1, 10);
  const std::vector<double> p(10, 0.3);
  EXPECT_DOUBLE_EQ(InformativeDorfmanCost(p, 1, exact), 1.0);
  EXPECT_NEAR(InformativeDorfmanCost(p, 2, exact), 1.01, 1e-12);
  EXPECT_NEAR(InformativeDorfmanCost(p, 3, exact), 0.9903333333333333, 1e-12);
  EXPECT_NEAR(InformativeDorfmanCost(p, 4, exact), 1.009900, 1e-6);
  const auto b = InformativeDorfman(p, exact, 10);
  EXPECT_EQ(b[0].size(), 3u);
}

TEST(InformativeDorfmanTest, CertainInfectionsAreTestedAlone) {
  const NoiseModel noise = NoiseModel::Constant(0.97, 0.85, 10);
  const std::vector<double> p(4, 1.0);
  EXPECT_NEAR(InformativeDorfmanCost(p, 2, noise), 1.35, 1e-12);
  const auto b = InformativeDorfman(p, noise, 10);
  EXPECT_EQ(b.size(), 4u);
  EXPECT_EQ(InformativeDorfman(std::vector<double>{0.2}, noise, 10),
            (GroupBatch{Group{0}}));
}

TEST(InformativeDorfmanTest, PoolsLowestRiskFirst) {
  const NoiseModel noise = NoiseModel::Constant(0.97, 0.85, 10);
  const std::vector<double> p{0.9, 0.01, 0.02, 0.8, 0.01};
  const auto b = InformativeDorfman(p, noise, 10);
  std::set<uint32_t> seen;
  for (const auto& g : b) seen.insert(g.members().begin(), g.members().end());
  EXPECT_EQ(seen.size(), 5u);
  EXPECT_TRUE(b[0].Contains(1));
  EXPECT_TRUE(b[0].Contains(4));
}

struct PolicyHarness {
  Prior prior;
  NoiseModel noise;
  TestHistory history;
  std::vector<double> marginal;
  FixedAssay assay;
  Rng rng{1};

  SelectorContext Context() {
    SelectorContext c;
    c.prior = &prior;
    c.noise = &noise;
    c.max_group_size = 10;
    c.history = &history;
    c.marginal = &marginal;
    c.assay = &assay;
    c.rng = &rng;
    return c;
  }
};

TEST(PolicyTest, DorfmanStackMechanics) {
  PolicyHarness h{Prior::Uniform(70, 0.05), NoiseModel::Constant(0.97, 0.85, 10)};
  h.marginal = h.prior.rates;
  Policy policy(PolicySpec::Named("dorfman"));
  const auto first = policy.Step(8, h.Context());
  const auto partition = DorfmanSplit(70, 0.05, 10);
  EXPECT_EQ(first, GroupBatch(partition.begin(), partition.begin() + 8));
  EXPECT_EQ(policy.pending().size(), 4u);
  TestOutcomes y(8, 0);
  y[1] = 1;
  h.history.Append(first, y);
  const auto second = policy.Step(8, h.Context());
  ASSERT_EQ(second.size(), 8u);
  EXPECT_EQ(GroupBatch(second.begin(), second.begin() + 4),
            GroupBatch(partition.begin() + 8, partition.end()));
  EXPECT_EQ(GroupBatch(second.begin() + 4, second.end()),
            (GroupBatch{Group{6}, Group{7}, Group{8}, Group{9}}));
  EXPECT_EQ(policy.pending(), (GroupBatch{Group{10}, Group{11}}));
  EXPECT_EQ(policy.stage(), 1u);
}

TEST(PolicyTest, ExhaustedPolicyReturnsEmpty) {
  PolicyHarness h{Prior::Uniform(6, 0.05), NoiseModel::Constant(0.97, 0.85, 10)};
  Policy policy(PolicySpec::Named("dorfman"));
  const auto first = policy.Step(8, h.Context());
  ASSERT_EQ(first.size(), 1u);
  h.history.Append(first, {0});
  EXPECT_TRUE(policy.Step(8, h.Context()).empty());
}

TEST(PolicyTest, RandomAlwaysFillsTheBudget) {
  PolicyHarness h{Prior::Uniform(70, 0.05), NoiseModel::Constant(0.97, 0.85, 10)};
  Policy policy(PolicySpec::Named("random"));
  for (int cycle = 0; cycle < 3; ++cycle) {
    const auto b = policy.Step(8, h.Context());
    EXPECT_EQ(b.size(), 8u);
    EXPECT_TRUE(policy.pending().empty());
    h.history.Append(b, TestOutcomes(8, 0));
  }
}

TEST(PolicyTest, IndividualCoversEveryoneOnce) {
  PolicyHarness h{Prior::Uniform(70, 0.05), NoiseModel::Constant(0.97, 0.85, 10)};
  Policy policy(PolicySpec::Named("individual"));
  std::set<uint32_t> seen;
  for (int cycle = 0; cycle < 9; ++cycle) {
    const auto b = policy.Step(8, h.Context());
    EXPECT_EQ(b.size(), cycle < 8 ? 8u : 6u);
    for (const auto& g : b) seen.insert(g.members()[0]);
    h.history.Append(b, TestOutcomes(b.size(), 0));
  }
  EXPECT_EQ(seen.size(), 70u);
  EXPECT_TRUE(policy.Step(8, h.Context()).empty());
}

TEST(PolicyTest, OrigamiSwitchesAfterTheAssay) {
  PolicyHarness h{Prior::Uniform(70, 0.05), NoiseModel::Constant(0.97, 0.85, 10)};
  h.assay = FixedAssay::Parse(SyntheticAssay(70, 22, 10), 70, 10);
  h.marginal = h.prior.rates;
  Policy policy(PolicySpec::Named("origami_id"));
  size_t assay_groups = 0;
  for (int cycle = 0; cycle < 3; ++cycle) {
    const auto b = policy.Step(8, h.Context());
    for (const auto& g : b) {
      if (assay_groups < 22) {
        EXPECT_EQ(g, h.assay.groups()[assay_groups]);
        ++assay_groups;
      }
    }
    h.history.Append(b, TestOutcomes(b.size(), 0));
  }
  EXPECT_EQ(assay_groups, 22u);
  EXPECT_EQ(policy.stage(), 1u);
}

TEST(PolicySpecTest, NamesAndRequirements) {
  for (const auto& name : PolicySpec::Names()) {
    EXPECT_NO_THROW(PolicySpec::Named(name)) << name;
  }
  EXPECT_TRUE(PolicySpec::Named("g_mimax").NeedsPosterior());
  EXPECT_FALSE(PolicySpec::Named("random").NeedsPosterior());
  EXPECT_TRUE(PolicySpec::Named("origami_random").NeedsAssay());
  try {
    PolicySpec::Named("nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfiguration);
  }
}

TEST(PolicyTest, BudgetMustBePositive) {
  PolicyHarness h{Prior::Uniform(10, 0.05), NoiseModel::Constant(0.97, 0.85, 10)};
  Policy policy(PolicySpec::Named("random"));
  EXPECT_THROW(policy.Step(0, h.Context()), Error);
}

}  // namespace
}  // namespace gtboed
