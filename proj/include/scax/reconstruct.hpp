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

#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <queue>
#include <vector>

#include "scax/schedule.hpp"

namespace scax {

struct Timeline {
  std::array<std::vector<double>, 2> start;
  std::array<std::vector<double>, 2> finish;
  std::array<double, 2> iteration{0.0, 0.0};
  std::array<double, 2> cross_bytes{0.0, 0.0};
  /// Per rank, by placement.
  std::array<std::vector<double>, 2> bubble;

  double t(Placement p) const { return iteration[index_of(p)]; }
  double best() const { return std::min(iteration[0], iteration[1]); }
  Placement best_placement() const {
    return iteration[1] < iteration[0] ? Placement::PPOut : Placement::DPOut;
  }
};

/// Processing order where every kernel follows its parents. Throws
/// StructuralError naming a kernel on a cycle.
inline std::vector<int> topological_order(const KernelDAG& dag) {
  const std::size_t n = dag.size();
  std::vector<int> indeg(n, 0);
  std::vector<std::vector<int>> children(n);
  for (std::size_t k = 0; k < n; ++k) {
    for (int par : dag.parents[k]) {
      if (par < 0 || static_cast<std::size_t>(par) >= n)
        throw StructuralError("kernel " + std::to_string(k) + " has a dangling parent");
      children[par].push_back(static_cast<int>(k));
      ++indeg[k];
    }
  }
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (std::size_t k = 0; k < n; ++k)
    if (indeg[k] == 0) ready.push(static_cast<int>(k));
  std::vector<int> order;
  order.reserve(n);
  while (!ready.empty()) {
    const int k = ready.top();
    ready.pop();
    order.push_back(k);
    for (int c : children[k])
      if (--indeg[c] == 0) ready.push(c);
  }
  if (order.size() == n) return order;

  // Walk parents among unprocessed kernels until one repeats; it lies on a cycle.
  int cur = 0;
  while (indeg[cur] == 0) ++cur;
  std::vector<bool> seen(n, false);
  while (!seen[cur]) {
    seen[cur] = true;
    for (int par : dag.parents[cur])
      if (indeg[par] > 0) {
        cur = par;
        break;
      }
  }
  throw StructuralError("cycle through kernel " + std::to_string(cur) + " (" +
                        dag.kernels[cur].label() + ")");
}

/// Dependency-driven iteration time: each kernel starts when its last parent
/// finishes and runs for its placement-specific duration. Both placements are
/// swept together.
inline Timeline reconstruct(const KernelDAG& dag) {
  const std::size_t n = dag.size();
  for (const Kernel& k : dag.kernels)
    for (double d : k.duration)
      if (std::isnan(d) || d < 0.0)
        throw ValidationError("kernel " + std::to_string(k.id) + " (" + k.label() +
                              ") has no valid duration");

  Timeline tl;
  for (int i = 0; i < 2; ++i) {
    tl.start[i].assign(n, 0.0);
    tl.finish[i].assign(n, 0.0);
  }
  for (int k : topological_order(dag)) {
    std::array<double, 2> begin{0.0, 0.0};
    for (int par : dag.parents[k])
      for (int i = 0; i < 2; ++i) begin[i] = std::max(begin[i], tl.finish[i][par]);
    for (int i = 0; i < 2; ++i) {
      const Kernel& ker = dag.kernels[k];
      tl.start[i][k] = begin[i];
      tl.finish[i][k] = begin[i] + ker.duration[i];
      tl.iteration[i] = std::max(tl.iteration[i], tl.finish[i][k]);
      if (ker.cross[i]) tl.cross_bytes[i] += ker.bytes;
    }
  }

  for (int i = 0; i < 2; ++i) {
    tl.bubble[i].assign(dag.rank_compute.size(), 0.0);
    for (std::size_t r = 0; r < dag.rank_compute.size(); ++r) {
      double busy = 0.0;
      for (int id : dag.rank_compute[r]) busy += dag.kernels[id].duration[i];
      tl.bubble[i][r] = tl.iteration[i] > 0.0 ? 1.0 - busy / tl.iteration[i] : 0.0;
    }
  }
  return tl;
}

/// 1 - compute-busy time / iteration time for one rank.
inline double bubble_fraction(const Timeline& tl, int rank, Placement p) {
  return tl.bubble[index_of(p)].at(rank);
}

}  // namespace scax
