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

// Loads a workload and topology, evaluates the workload's own configuration
// under both placements, then searches for a faster one.
//
//   scax_example fixtures/moe40b.json fixtures/two-building.json

#include <cstdio>
#include <exception>

#include "scax/scax.hpp"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::fprintf(stderr, "usage: %s workload.json topology.json\n", argv[0]);
    return 1;
  }
  try {
    const scax::Workload w = scax::read_workload(scax::load_json(argv[1]));
    const scax::Topology topo = scax::read_topology_doc(scax::load_json(argv[2]));
    if (!w.batch) {
      std::fprintf(stderr, "workload has no batch\n");
      return 1;
    }

    if (w.parallelism) {
      const auto e = scax::evaluate(w.model, *w.batch, *w.parallelism, topo);
      std::printf("reference  DP-out %.4f s  PP-out %.4f s\n", e.t(scax::Placement::DPOut),
                  e.t(scax::Placement::PPOut));
    }

    scax::SearchBudget budget;
    budget.seed = 7;
    const auto rep = scax::explore(w.model, *w.batch, topo, budget);
    if (!rep.feasible()) {
      std::printf("nothing fits\n");
      return 2;
    }
    for (std::size_t i = 0; i < rep.ranked.size() && i < 5; ++i) {
      const auto& r = rep.ranked[i];
      std::printf("%zu. %-5s %-14s tp%d cp%d ep%d pp%d dp%d mbs%lld  %.4f s\n", i + 1,
                  std::string(scax::to_string(r.p.placement)).c_str(),
                  std::string(scax::to_string(r.p.schedule)).c_str(), r.p.tp, r.p.cp, r.p.ep,
                  r.p.pp, r.p.dp, static_cast<long long>(r.batch.microbatch_size), r.iteration_s);
    }
    std::printf("load balancing: %s\n",
                std::string(scax::to_string(rep.recommendation.load_balancing)).c_str());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  }
  return 0;
}
