/*
 * Copyright 2026 The scax Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <set>
#include <tuple>

#include "test_util.hpp"

using namespace scax;
using namespace scax::testing;

TEST(NumMicrobatches, DenseTableRow) {
  ParallelismConfig p;
  p.dp = 4;
  EXPECT_EQ(num_microbatches({176, 4}, p), 11);
}

TEST(NumMicrobatches, MoeTableRow) {
  ParallelismConfig p;
  p.dp = 16;
  EXPECT_EQ(num_microbatches({64, 1}, p), 4);
}

TEST(NumMicrobatches, Identity) {
  for (int dp : {1, 2, 3, 8})
    for (int m : {1, 2, 4})
      for (int k : {1, 5, 12}) {
        ParallelismConfig p;
        p.dp = dp;
        EXPECT_EQ(num_microbatches({static_cast<std::int64_t>(k) * dp * m, m}, p), k);
      }
}

TEST(NumMicrobatches, NonDivisibleNamesFactor) {
  ParallelismConfig p;
  p.dp = 4;
  try {
    num_microbatches({10, 4}, p);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("dp*microbatch_size"), std::string::npos);
  }
}

TEST(ValidateConfig, MoeTableRowIsValid) {
  const Workload w = moe40b();
  const auto v = validate_config(w.model, *w.batch, *w.parallelism, moe_topo());
  EXPECT_TRUE(v.empty()) << (v.empty() ? "" : v.front().code + ": " + v.front().message);
}

TEST(ValidateConfig, DenseTableRowIsValid) {
  const Workload w = dense17b();
  EXPECT_TRUE(validate_config(w.model, *w.batch, *w.parallelism, dense_topo()).empty());
}

TEST(ValidateConfig, TooFewMicrobatches) {
  const ModelSpec m = dense_model(8);
  const ParallelismConfig p = config(1, 1, 1, 4, 1, Schedule::DoraPP, 4, 8);
  const auto v = validate_config(m, {2, 1}, p, flat_topo(4));
  ASSERT_TRUE(has_violation(v, "batch.microbatches"));
  for (const auto& x : v)
    if (x.code == "batch.microbatches") { EXPECT_EQ(x.message, "microbatches < pipeline stages"); }
}

TEST(ValidateConfig, ContextShardTooShort) {
  ModelSpec m = dense_model(4, 1024, 8192);
  const ParallelismConfig p = config(1, 8, 1, 1, 1, Schedule::DoraPP, 1, 4);
  const auto v = validate_config(m, {1, 1}, p, flat_topo(8));
  ASSERT_TRUE(has_violation(v, "cp.shard"));
  for (const auto& x : v)
    if (x.code == "cp.shard") { EXPECT_EQ(x.message, "context shard below 2048 tokens"); }
}

TEST(ValidateConfig, ReportsEveryViolation) {
  const ModelSpec m = dense_model(8, 1024, 4096);
  ParallelismConfig p = config(1, 4, 1, 4, 1, Schedule::DoraPP, 4, 8);
  const auto v = validate_config(m, {2, 1}, p, flat_topo(8));
  EXPECT_TRUE(has_violation(v, "degree.product"));
  EXPECT_TRUE(has_violation(v, "batch.microbatches"));
  EXPECT_TRUE(has_violation(v, "cp.shard"));
}

TEST(ValidateConfig, MemoryFilter) {
  const Workload w = dense17b();
  Topology t = dense_topo();
  t.gpu.hbm_bytes = 1 << 30;
  EXPECT_TRUE(has_violation(validate_config(w.model, *w.batch, *w.parallelism, t), "memory"));
}

TEST(ValidateConfig, PartitionChecks) {
  const ModelSpec m = dense_model(8);
  ParallelismConfig p = config(1, 1, 1, 2, 1, Schedule::DoraPP, 4, 8);
  p.chunk_partition.chunk_sizes = {2, 2, 2, 1};
  EXPECT_TRUE(has_violation(validate_config(m, {4, 1}, p, flat_topo(2)), "partition.sum"));
  p = config(1, 1, 1, 2, 1, Schedule::DoraPP, 4, 8);
  p.chunk_partition.chunk_stage = {0, 0, 1, 1};
  EXPECT_TRUE(has_violation(validate_config(m, {4, 1}, p, flat_topo(2)), "partition.layout"));
}

TEST(ChunkStages, Layouts) {
  EXPECT_EQ(chunk_stages(Schedule::OneFOneB, 4, 4), (std::vector<int>{0, 1, 2, 3}));
  EXPECT_TRUE(chunk_stages(Schedule::OneFOneB, 8, 4).empty());
  EXPECT_EQ(chunk_stages(Schedule::DoraPP, 8, 4), (std::vector<int>{0, 1, 2, 3, 0, 1, 2, 3}));
  EXPECT_EQ(chunk_stages(Schedule::InterleavedZBV, 8, 4),
            (std::vector<int>{0, 1, 2, 3, 3, 2, 1, 0}));
  EXPECT_TRUE(chunk_stages(Schedule::InterleavedZBV, 4, 4).empty());
}

TEST(Memory, HsdpLargerThanFsdp) {
  const Workload w = dense17b();
  ParallelismConfig fsdp = *w.parallelism;
  ParallelismConfig hsdp = fsdp;
  hsdp.dp_scheme = {DpScheme::Kind::HSDP, 2, fsdp.dp / 2};
  EXPECT_GT(memory_estimate(w.model, *w.batch, hsdp).total(),
            memory_estimate(w.model, *w.batch, fsdp).total());
}

TEST(Memory, ActivationLinearInMicrobatch) {
  const Workload w = dense17b();
  const auto a = memory_estimate(w.model, {176, 2}, *w.parallelism);
  const auto b = memory_estimate(w.model, {176, 4}, *w.parallelism);
  EXPECT_DOUBLE_EQ(b.activation_bytes, 2.0 * a.activation_bytes);
  EXPECT_DOUBLE_EQ(a.model_state_bytes, b.model_state_bytes);
}

TEST(Memory, SingleLayerHandCount) {
  ModelSpec m = dense_model(1, 256, 2048);
  const ParallelismConfig p = config(1, 1, 1, 1, 1, Schedule::DoraPP, 1, 1);
  const double params = 4.0 * 256 * 256 + 3.0 * 256 * 1024;
  EXPECT_DOUBLE_EQ(memory_estimate(m, {1, 1}, p).model_state_bytes, params * (2 + 2 + 12));
}

TEST(Memory, MonotoneInShardAndTp) {
  const ModelSpec m = dense_model(8, 4096, 4096);
  double prev = INFINITY;
  for (int s : {1, 2, 4, 8}) {
    ParallelismConfig p = config(1, 1, 1, 1, 8, Schedule::DoraPP, 1, 8);
    p.dp_scheme = s == 8 ? DpScheme{} : DpScheme{DpScheme::Kind::HSDP, 8 / s, s};
    const double e = memory_estimate(m, {8, 1}, p).total();
    EXPECT_LE(e, prev);
    prev = e;
  }
  prev = INFINITY;
  for (int tp : {1, 2, 4, 8}) {
    const double e = memory_estimate(m, {8, 1}, config(tp, 1, 1, 1, 1, Schedule::DoraPP, 1, 8)).total();
    EXPECT_LE(e, prev);
    prev = e;
  }
}

TEST(Memory, ZbvHoldsFewerMicrobatches) {
  const ModelSpec m = dense_model(16);
  const auto d = memory_estimate(m, {8, 1}, config(1, 1, 1, 4, 1, Schedule::DoraPP, 8, 16));
  const auto z = memory_estimate(m, {8, 1}, config(1, 1, 1, 4, 1, Schedule::InterleavedZBV, 8, 16));
  EXPECT_DOUBLE_EQ(z.activation_bytes * 2.0, d.activation_bytes);
}

// Brute-force oracle: every 5-tuple of positive integers with the product
// constraint and ep | dp*cp.
TEST(DegreeTuples, MatchesBruteForce) {
  for (int world : {1, 2, 6, 12, 16, 64, 96, 128, 1024}) {
    std::set<std::tuple<int, int, int, int, int>> want;
    for (int tp = 1; tp <= world; ++tp)
      for (int cp = 1; tp * cp <= world; ++cp)
        for (int pp = 1; tp * cp * pp <= world; ++pp) {
          if (world % (tp * cp * pp) != 0) continue;
          const int dp = world / (tp * cp * pp);
          for (int ep = 1; ep <= dp * cp; ++ep)
            if ((dp * cp) % ep == 0) want.insert({tp, cp, ep, pp, dp});
        }
    std::set<std::tuple<int, int, int, int, int>> got;
    for (const auto& d : degree_tuples(world)) got.insert({d.tp, d.cp, d.ep, d.pp, d.dp});
    EXPECT_EQ(got, want) << "world " << world;
    EXPECT_EQ(got.size(), degree_tuples(world).size());
  }
}

TEST(Placement, ExactlyOneDimensionCrossesBuildings) {
  const Workload w = dense17b();
  const Topology t = dense_topo();
  const auto dpo = resolve_placement(*w.parallelism, t, Placement::DPOut);
  const auto ppo = resolve_placement(*w.parallelism, t, Placement::PPOut);
  EXPECT_TRUE(dpo.dp.cross_building());
  EXPECT_FALSE(dpo.boundary(0).cross_building());
  EXPECT_FALSE(ppo.dp.cross_building());
  EXPECT_TRUE(ppo.boundary(0).cross_building());
  EXPECT_FALSE(dpo.tp.cross_building());
  EXPECT_FALSE(ppo.tp.cross_building());
}
