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

#include <cmath>
#include <random>

#include "test_util.hpp"

using namespace scax;
using namespace scax::testing;

namespace {

LinkProfile link(double gbps, double one_way_us, int qps = 1) {
  LinkProfile l;
  l.bandwidth_gbps = gbps;
  l.latency_us = one_way_us;
  l.qp_count = qps;
  return l;
}

// Closed form of E[1/(1 + Binomial(F-1, 1/P))]: the mean share a flow keeps
// when F flows hash uniformly onto P paths.
double ecmp_share_expectation(int flows, int paths) {
  const double q = 1.0 / paths;
  return (1.0 - std::pow(1.0 - q, flows)) / (flows * q);
}

// Independent Monte-Carlo estimate of the same quantity.
double ecmp_share_monte_carlo(int flows, int paths, int trials) {
  std::minstd_rand rng(12345);
  std::vector<int> load(paths), where(flows);
  double sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::fill(load.begin(), load.end(), 0);
    for (int f = 0; f < flows; ++f) ++load[where[f] = static_cast<int>(rng() % paths)];
    for (int f = 0; f < flows; ++f) sum += 1.0 / load[where[f]];
  }
  return sum / (static_cast<double>(trials) * flows);
}

}  // namespace

TEST(ThroughputBound, TwoMegabytesPerMillisecond) {
  EXPECT_DOUBLE_EQ(throughput_bound(2e6, 1e-3), 2e9);
  EXPECT_DOUBLE_EQ(Bps_to_gbps(throughput_bound(2e6, 1e-3)), 16.0);
  EXPECT_DOUBLE_EQ(throughput_bound(4e6, 1e-3), 2 * throughput_bound(2e6, 1e-3));
  const double gib = 1024.0 * 1024 * 1024;
  EXPECT_DOUBLE_EQ(throughput_bound(gib, 1e-3), gib * 1000);
  EXPECT_GT(throughput_bound(gib, 1e-3), gbps_to_Bps(400));
  EXPECT_THROW(throughput_bound(1.0, 0.0), ValidationError);
}

TEST(SprayingGoodput, WindowCapAtLongRtt) {
  // 512 packets of 4096 bytes on one QP over a 1000 us round trip.
  const LinkProfile l = link(400, 500, 1);
  EXPECT_DOUBLE_EQ(spraying_goodput(l), 512.0 * 4096 * 8 / 1e-3 / 1e9);
}

TEST(SprayingGoodput, ShortRttHitsLineRate) {
  LinkProfile l = link(400, 25, 1);
  const double window = Bps_to_gbps(512.0 * 4096 / 50e-6);
  EXPECT_NEAR(window, 335.54432, 1e-9);
  EXPECT_DOUBLE_EQ(spraying_goodput(l), window);
  l.qp_count = 2;
  EXPECT_DOUBLE_EQ(spraying_goodput(l), 400.0);
}

TEST(SprayingGoodput, LinearInQpsUntilLineRate) {
  const double one = spraying_goodput(link(400, 500, 1));
  for (int q : {2, 4, 8, 16, 32}) {
    const double got = spraying_goodput(link(400, 500, q));
    EXPECT_DOUBLE_EQ(got, std::min(400.0, q * one));
  }
}

TEST(EcmpGoodput, SingleFlowFullRate) {
  for (int paths : {1, 2, 16}) EXPECT_DOUBLE_EQ(ecmp_goodput(link(400, 25), 1, paths, 7), 400.0);
}

TEST(EcmpGoodput, MatchesBallsIntoBinsOracle) {
  for (auto [f, p] : {std::pair{4, 4}, {8, 8}, {16, 16}, {8, 32}}) {
    const double got = ecmp_goodput(link(1, 25), f, p, 99, 200000);
    const double mc = ecmp_share_monte_carlo(f, p, 1000000);
    const double exact = ecmp_share_expectation(f, p);
    EXPECT_NEAR(mc, exact, 2e-3);
    EXPECT_NEAR(got, exact, 3e-3) << f << " flows on " << p << " paths";
    if (f == p) { EXPECT_LT(got, 1.0); }
  }
}

TEST(EcmpGoodput, ManyPathsApproachFullRate) {
  const double few = ecmp_goodput(link(1, 25), 8, 8, 3);
  const double many = ecmp_goodput(link(1, 25), 8, 4096, 3);
  EXPECT_LT(few, many);
  EXPECT_GT(many, 0.99);
}

TEST(EcmpGoodput, DeterministicPerSeed) {
  EXPECT_EQ(ecmp_goodput(link(400, 25), 8, 8, 11), ecmp_goodput(link(400, 25), 8, 8, 11));
  EXPECT_THROW(ecmp_goodput(link(400, 25), 8, 0, 1), ValidationError);
}

TEST(GoBackN, LosslessIsIdentity) {
  for (double rtt : {1e-5, 1e-4, 1e-3})
    EXPECT_EQ(gobackn_inflation(0.0, rtt, 4096, 512, gbps_to_Bps(400)), 1.0);
}

TEST(GoBackN, GrowsWithRttAndLoss) {
  const double r = gbps_to_Bps(400);
  EXPECT_GT(gobackn_inflation(2e-4, 1e-4, 4096, 512, r), gobackn_inflation(2e-4, 1e-5, 4096, 512, r));
  // Past the in-flight cap the window stops growing.
  EXPECT_EQ(gobackn_inflation(2e-4, 1e-3, 4096, 512, r), gobackn_inflation(2e-4, 1e-4, 4096, 512, r));
  EXPECT_GT(gobackn_inflation(2e-3, 1e-4, 4096, 512, r), gobackn_inflation(2e-5, 1e-4, 4096, 512, r));
  EXPECT_THROW(gobackn_inflation(1.0, 1e-4, 4096, 512, r), ValidationError);
  EXPECT_THROW(gobackn_inflation(-0.1, 1e-4, 4096, 512, r), ValidationError);
}

TEST(GoBackN, HandEvaluated) {
  // Window = min(512, rate*rtt/payload) = 512 packets.
  const double p = 1e-3;
  EXPECT_DOUBLE_EQ(gobackn_inflation(p, 1e-3, 4096, 512, gbps_to_Bps(400)),
                   (1 + p * 511) / (1 - p));
}

TEST(P2pTime, ZeroBytesIsLatency) {
  EXPECT_DOUBLE_EQ(p2p_time(0, link(400, 50)), 50e-6);
}

TEST(P2pTime, HandEvaluatedEcmpSingleFlow) {
  LinkProfile l = link(400, 50);
  l.load_balancing = LoadBalancing::ECMP;
  l.ecmp_flows = 1;
  const double bytes = 32.0 * 1024 * 1024;
  EXPECT_NEAR(p2p_time(bytes, l), 50e-6 + bytes / 50e9, 1e-12);
  EXPECT_NEAR(p2p_time(bytes, l) * 1e6, 721.0, 0.2);
}

TEST(P2pTime, LinearInDistance) {
  const double bytes = 1 << 20;
  LinkProfile l = link(400, 0, 64);
  std::vector<double> t;
  for (double us : {100.0, 200.0, 300.0, 400.0}) {
    l.latency_us = us;
    t.push_back(p2p_time(bytes, l));
  }
  // Window-bound regime: latency plus bytes/(bytes/rtt) = 3x one-way latency.
  for (std::size_t i = 1; i < t.size(); ++i) EXPECT_NEAR(t[i] - t[i - 1], t[1] - t[0], 1e-12);
}

TEST(P2pTime, MonotoneInInputs) {
  LinkProfile l = link(400, 50, 4);
  l.loss_rate = 1e-4;
  const double base = p2p_time(1e8, l);
  EXPECT_LE(base, p2p_time(2e8, l));
  LinkProfile far = l;
  far.latency_us = 500;
  EXPECT_LE(base, p2p_time(1e8, far));
  LinkProfile lossy = l;
  lossy.loss_rate = 1e-3;
  EXPECT_LE(base, p2p_time(1e8, lossy));
  LinkProfile slow = l;
  slow.bandwidth_gbps = 100;
  EXPECT_LE(base, p2p_time(1e8, slow));
}

TEST(CollectiveTime, SingleMemberIsFree) {
  EXPECT_EQ(collective_time(Collective::AllReduce, 1e9, 1, link(400, 50)), 0.0);
}

TEST(CollectiveTime, RingFormula) {
  const LinkProfile l = link(400, 5, 64);
  const double bytes = 1e9;
  const int n = 4;
  const double step = bytes / n / gbps_to_Bps(400);
  EXPECT_NEAR(collective_time(Collective::AllGather, bytes, n, l), 3 * (step + 5e-6), 1e-12);
  EXPECT_NEAR(collective_time(Collective::AllReduce, bytes, n, l), 3 * (2 * step + 5e-6), 1e-12);
  EXPECT_DOUBLE_EQ(collective_time(Collective::ReduceScatter, bytes, n, l),
                   collective_time(Collective::AllGather, bytes, n, l));
}

TEST(CollectiveTime, LatencyDominatesLargeRings) {
  const LinkProfile l = link(400, 1000, 64);
  const double t = collective_time(Collective::AllGather, 1e8, 1024, l);
  const double wire = 1023 * (1e8 / 1024) / gbps_to_Bps(400);
  EXPECT_GT(t, 1023 * 1e-3);
  EXPECT_LT(wire / t, 0.01);
}

TEST(HsdpSync, OneReplicaIsFsdp) {
  const LinkProfile intra = link(400, 5, 8), cross = link(25, 50, 8);
  EXPECT_DOUBLE_EQ(hsdp_sync_time(1e9, 1, 8, intra, cross),
                   collective_time(Collective::ReduceScatter, 1e9, 8, intra));
  EXPECT_GT(hsdp_sync_time(1e9, 2, 4, intra, cross),
            collective_time(Collective::ReduceScatter, 1e9, 4, intra));
}

TEST(ChunkCompute, Ratios) {
  const ModelSpec m = dense_model(8, 4096, 4096);
  ParallelismConfig p = config(1, 1, 1, 2, 1, Schedule::DoraPP, 4, 8);
  const GpuSpec g;
  const double f = chunk_compute_time(m, 1, 2, p, Phase::Fwd, g);
  EXPECT_DOUBLE_EQ(chunk_compute_time(m, 1, 2, p, Phase::BwdFused, g), 2 * f);
  EXPECT_DOUBLE_EQ(chunk_compute_time(m, 2, 2, p, Phase::Fwd, g), 2 * f);
  const double dora = f + 2 * chunk_compute_time(m, 1, 2, p, Phase::BwdDx, g);
  p.schedule = Schedule::InterleavedZBV;
  const double zbv = f + 2 * chunk_compute_time(m, 1, 2, p, Phase::BwdDx, g);
  EXPECT_GT(zbv, dora);
  EXPECT_DOUBLE_EQ(chunk_compute_time(m, 1, 2, p, Phase::BwdDx, g),
                   chunk_compute_time(m, 1, 2, p, Phase::BwdDw, g));
}

TEST(ChunkCompute, FlopFormula) {
  ModelSpec m = dense_model(1, 1024, 2048);
  ParallelismConfig p;
  p.tp = 2;
  EXPECT_DOUBLE_EQ(layer_forward_flops(m, 4, p),
                   2.0 * 4 * 2048 * (4.0 * 1024 * 1024 + 3.0 * 1024 * 4096) / 2);
  m.num_experts = 8;
  m.expert_ffn_dim = 512;
  m.top_k = 2;
  EXPECT_DOUBLE_EQ(layer_forward_flops(m, 4, p),
                   2.0 * 4 * 2048 * (4.0 * 1024 * 1024 + 3.0 * 1024 * 1024) / 2);
}
