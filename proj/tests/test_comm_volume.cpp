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

#include "test_util.hpp"

using namespace scax;
using namespace scax::testing;

TEST(PpP2pElements, HandEvaluated) {
  ModelSpec m;
  m.hidden_dim = 8192;
  m.seq_len = 8192;
  ParallelismConfig p;
  p.tp = 4;
  EXPECT_EQ(pp_p2p_elements(m, {1, 1}, p), 33554432);
  p.tp = 8;
  EXPECT_EQ(pp_p2p_elements(m, {1, 1}, p), 33554432 / 2);

  m.hidden_dim = 4;
  m.seq_len = 2;
  p.tp = 1;
  EXPECT_EQ(pp_p2p_elements(m, {1, 1}, p), 16);
}

TEST(PpP2pElements, IndependentOfFfnAndExperts) {
  ModelSpec a = dense_model(4, 1024, 4096);
  ModelSpec b = a;
  b.ffn_dim = 0;
  b.num_experts = 64;
  b.expert_ffn_dim = 2048;
  b.top_k = 2;
  const ParallelismConfig p;
  EXPECT_EQ(pp_p2p_elements(a, {4, 2}, p), pp_p2p_elements(b, {4, 2}, p));
}

TEST(PpP2pCount, DoraNonWrapBoundary) {
  // 11 microbatches, 2 chunks per stage on pp = 2: boundary 0 is crossed by
  // chunks 0->1 and 2->3.
  ParallelismConfig p = config(1, 1, 1, 2, 4, Schedule::DoraPP, 4, 8);
  EXPECT_EQ(pp_p2p_count({176, 4}, p, 0), 44);
  EXPECT_EQ(pp_p2p_count({176, 4}, p, 1), 22);  // wrap: chunk 1 -> 2
}

TEST(PpP2pCount, SingleStageHasNone) {
  const ParallelismConfig p = config(1, 1, 1, 1, 4, Schedule::DoraPP, 2, 8);
  EXPECT_EQ(pp_p2p_count({16, 1}, p, 0), 0);
}

TEST(PpP2pCount, ZbvWrapIsZero) {
  const ParallelismConfig p = config(1, 1, 1, 4, 1, Schedule::InterleavedZBV, 8, 8);
  EXPECT_EQ(pp_p2p_count({8, 1}, p, 3), 0);
  for (int b = 0; b < 3; ++b) EXPECT_EQ(pp_p2p_count({8, 1}, p, b), 2 * 8 * 2);
}

TEST(PpP2pCount, DoraWrapCarriesTraffic) {
  const ParallelismConfig p = config(1, 1, 1, 4, 1, Schedule::DoraPP, 8, 8);
  EXPECT_GT(pp_p2p_count({8, 1}, p, 3), 0);
}

TEST(DpLayerElements, MoeHandEvaluated) {
  ModelSpec m;
  m.hidden_dim = 1024;
  m.num_experts = 16;
  m.expert_ffn_dim = 4096;
  m.top_k = 2;
  ParallelismConfig p;
  p.tp = 4;
  p.ep = 16;
  EXPECT_EQ(dp_layer_elements(m, p), 4194304);
}

TEST(DpLayerElements, DegenerateFormsCoincide) {
  ModelSpec dense;
  dense.hidden_dim = 512;
  dense.ffn_dim = 0;
  ModelSpec moe = dense;
  moe.num_experts = 4;
  moe.expert_ffn_dim = 0;
  ParallelismConfig p;
  p.tp = 2;
  EXPECT_EQ(dp_layer_elements(dense, p), 4 * 512 * 512 / 2);
  EXPECT_EQ(dp_layer_elements(moe, p), 4 * 512 * 512 / 2);
}

TEST(DpLayerElements, LinearInExperts) {
  ModelSpec m;
  m.hidden_dim = 1024;
  m.expert_ffn_dim = 2048;
  m.top_k = 1;
  ParallelismConfig p;
  p.tp = 2;
  p.ep = 4;
  const std::int64_t slope = 3 * 1024 * 2048 / (2 * 4);
  std::int64_t prev = -1;
  for (int e = 4; e <= 64; e += 4) {
    m.num_experts = e;
    const std::int64_t v = dp_layer_elements(m, p);
    if (prev >= 0) { EXPECT_EQ(v - prev, slope * 4); }
    prev = v;
  }
  m.num_experts = 16;
  const auto one = dp_layer_elements(m, p) - 4 * 1024 * 1024 / 2;
  m.num_experts = 32;
  EXPECT_EQ(dp_layer_elements(m, p) - 4 * 1024 * 1024 / 2, 2 * one);
}

TEST(CrossBuildingBytes, DpOutConstantPpOutLinear) {
  const Workload w = dense17b();
  const Topology t = dense_topo();
  const ParallelismConfig& p = *w.parallelism;
  std::int64_t dp_ref = -1;
  std::int64_t pp_at_4 = 0;
  for (int mb : {4, 8, 16}) {
    const BatchSpec b{static_cast<std::int64_t>(mb) * p.dp * 4, 4};
    const auto d = cross_building_bytes(w.model, b, p, t, Placement::DPOut);
    const auto q = cross_building_bytes(w.model, b, p, t, Placement::PPOut);
    if (dp_ref < 0) dp_ref = d;
    EXPECT_EQ(d, dp_ref);
    if (mb == 4) pp_at_4 = q;
    EXPECT_EQ(q, pp_at_4 * mb / 4);
  }
  EXPECT_GT(dp_ref, 0);
}

TEST(CrossBuildingBytes, SingleBuildingIsZero) {
  const Workload w = dense17b();
  Topology t = dense_topo();
  t.buildings = {{64, 2}};
  for (Placement pl : kPlacements)
    EXPECT_EQ(cross_building_bytes(w.model, *w.batch, *w.parallelism, t, pl), 0);
}

TEST(CrossBuildingBytes, NonNegativeIntegersAcrossConfigs) {
  const Workload w = moe40b();
  const Topology t = moe_topo();
  for (int e : {16, 32, 64, 128}) {
    ModelSpec m = w.model;
    m.num_experts = e;
    for (Placement pl : kPlacements)
      EXPECT_GE(cross_building_bytes(m, *w.batch, *w.parallelism, t, pl), 0);
  }
}
