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
#include <functional>
#include <numeric>
#include <random>

#include "test_util.hpp"

using namespace scax;

namespace {

KernelDAG random_dag(std::mt19937_64& rng, int n, double density) {
  KernelDAG dag;
  std::uniform_real_distribution<double> dur(0.0, 10.0), coin(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    Kernel k;
    k.duration = {dur(rng), dur(rng)};
    dag.add(k);
  }
  // Edges only from lower to higher id, then ids are shuffled so the
  // insertion order is not a topological order.
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (coin(rng) < density) dag.edge(perm[b], perm[a]);
  return dag;
}

// Longest path ending at each node by memoized recursion over parents.
double brute_longest(const KernelDAG& dag, int placement) {
  std::vector<double> memo(dag.size(), -1.0);
  std::function<double(int)> finish = [&](int k) {
    if (memo[k] >= 0.0) return memo[k];
    double start = 0.0;
    for (int p : dag.parents[k]) start = std::max(start, finish(p));
    return memo[k] = start + dag.kernels[k].duration[placement];
  };
  double best = 0.0;
  for (std::size_t k = 0; k < dag.size(); ++k) best = std::max(best, finish(static_cast<int>(k)));
  return best;
}

}  // namespace

TEST(Reconstruct, MatchesBruteForceLongestPath) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 60);
    const KernelDAG dag = random_dag(rng, n, 0.05 + 0.3 * (trial % 4) / 3.0);
    const Timeline tl = reconstruct(dag);
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(tl.iteration[i], brute_longest(dag, i), 1e-9);
  }
}

TEST(Reconstruct, EmptyDagIsZero) {
  const Timeline tl = reconstruct(KernelDAG{});
  EXPECT_EQ(tl.iteration[0], 0.0);
  EXPECT_EQ(tl.iteration[1], 0.0);
}

TEST(Reconstruct, ChainSumsDurations) {
  KernelDAG dag;
  double sum0 = 0.0, sum1 = 0.0;
  int prev = -1;
  for (int i = 0; i < 10; ++i) {
    Kernel k;
    k.duration = {0.5 * i, 1.0 + i};
    sum0 += k.duration[0];
    sum1 += k.duration[1];
    const int id = dag.add(k);
    dag.edge(id, prev);
    prev = id;
  }
  const Timeline tl = reconstruct(dag);
  EXPECT_DOUBLE_EQ(tl.t(Placement::DPOut), sum0);
  EXPECT_DOUBLE_EQ(tl.t(Placement::PPOut), sum1);
}

TEST(Reconstruct, IndependentKernelsOverlap) {
  KernelDAG dag;
  for (double d : {3.0, 7.0, 5.0}) {
    Kernel k;
    k.duration = {d, d};
    dag.add(k);
  }
  EXPECT_DOUBLE_EQ(reconstruct(dag).iteration[0], 7.0);
}

TEST(Reconstruct, CycleNamesMember) {
  KernelDAG dag;
  for (int i = 0; i < 4; ++i) {
    Kernel k;
    k.duration = {1.0, 1.0};
    dag.add(k);
  }
  dag.edge(1, 0);
  dag.edge(2, 1);
  dag.edge(3, 2);
  dag.edge(1, 3);
  try {
    reconstruct(dag);
    FAIL() << "cycle not detected";
  } catch (const StructuralError& e) {
    const std::string msg = e.what();
    const bool names_member = msg.find("kernel 1") != std::string::npos ||
                              msg.find("kernel 2") != std::string::npos ||
                              msg.find("kernel 3") != std::string::npos;
    EXPECT_TRUE(names_member) << msg;
  }
}

TEST(Reconstruct, UnsetDurationRejected) {
  KernelDAG dag;
  Kernel k;
  k.duration = {1.0, std::nan("")};
  dag.add(k);
  EXPECT_THROW(reconstruct(dag), ValidationError);
}

TEST(Reconstruct, InsertionOrderIrrelevant) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const KernelDAG dag = random_dag(rng, 30, 0.15);
    std::vector<int> perm(dag.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> inv(dag.size());
    for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = static_cast<int>(i);
    KernelDAG shuffled;
    for (int old : perm) shuffled.add(dag.kernels[old]);
    for (std::size_t k = 0; k < dag.size(); ++k)
      for (int p : dag.parents[k]) shuffled.edge(inv[k], inv[p]);
    const Timeline a = reconstruct(dag), b = reconstruct(shuffled);
    EXPECT_DOUBLE_EQ(a.iteration[0], b.iteration[0]);
    EXPECT_DOUBLE_EQ(a.iteration[1], b.iteration[1]);
  }
}

TEST(Reconstruct, CrossBytesSummedPerPlacement) {
  KernelDAG dag;
  Kernel a;
  a.duration = {1.0, 1.0};
  a.bytes = 100;
  a.cross = {true, false};
  Kernel b = a;
  b.bytes = 40;
  b.cross = {true, true};
  dag.add(a);
  dag.add(b);
  const Timeline tl = reconstruct(dag);
  EXPECT_EQ(tl.cross_bytes[0], 140.0);
  EXPECT_EQ(tl.cross_bytes[1], 40.0);
}
