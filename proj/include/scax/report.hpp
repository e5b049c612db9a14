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

#include <cstdio>
#include <ostream>
#include <string>

#include "scax/explorer.hpp"
#include "scax/json_io.hpp"
#include "scax/reconstruct.hpp"

namespace scax {

/// Shortest text that reads back to the same double.
inline std::string num(double v) {
  char buf[32];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline json to_json(const SearchBudget& b) {
  return {{"top_k", b.top_k},
          {"perturbations_m", b.perturbations_m},
          {"chunk_configs_per_partition", b.chunk_configs_per_partition},
          {"max_evaluations", b.max_evaluations},
          {"max_wall_time_s", b.max_wall_time_s},
          {"seed", b.seed}};
}

inline json to_json(const NetworkRecommendation& r) {
  json lb{{"choice", std::string(to_string(r.load_balancing))},
          {"required_qp_count", r.required_qp_count},
          {"rationale", r.load_balancing_reason}};
  return {{"load_balancing", lb},
          {"congestion_control",
           {{"choice", r.congestion_control ? "Enabled" : "Disabled"},
            {"rationale", r.congestion_control_reason}}},
          {"loss_mitigation",
           {{"choice", r.selective_redundancy ? "SelectiveRedundancy" : "None"},
            {"rationale", r.loss_mitigation_reason}}},
          {"chunking_hint",
           {{"choice", r.imbalanced_chunking ? "ImbalancedTowardDistancedBuilding" : "Balanced"},
            {"rationale", r.chunking_reason}}}};
}

inline json to_json(const RankedConfig& r) {
  return {{"parallelism", to_json(r.p)},
          {"batch", to_json(r.batch)},
          {"iteration_s", r.iteration_s},
          {"other_placement_iteration_s", r.other_placement_s},
          {"cross_building_bytes", r.cross_bytes},
          {"memory_bytes", r.memory_bytes},
          {"max_bubble", r.max_bubble},
          {"partition_refined", r.refined}};
}

inline json to_json(const ExplorationReport& rep) {
  json ranked = json::array();
  for (const auto& r : rep.ranked) ranked.push_back(to_json(r));
  json j{{"version", std::string(kVersion)},
         {"feasible", rep.feasible()},
         {"templates", rep.templates},
         {"evaluations", rep.evaluations},
         {"budget_truncated", rep.truncated},
         {"ppout_stage_counts", rep.ppout_stages},
         {"ranked", ranked},
         {"recommendation", to_json(rep.recommendation)},
         {"budget", to_json(rep.budget)},
         {"assumptions", to_json(rep.assumptions)}};
  if (!rep.feasible()) {
    json b = json::object();
    for (const auto& [code, n] : rep.binding) b[code] = n;
    j["binding_constraints"] = b;
  }
  return j;
}

inline const char* kRankedCsvHeader =
    "rank,placement,schedule,dp_scheme,tp,cp,ep,pp,dp,microbatch_size,num_chunks,chunk_sizes,"
    "iteration_s,other_placement_s,cross_building_bytes,memory_bytes,max_bubble,refined\n";

inline std::string sizes_text(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "-" : "") + std::to_string(v[i]);
  return s;
}

inline void write_ranked_csv(std::ostream& os, const ExplorationReport& rep) {
  os << kRankedCsvHeader;
  for (std::size_t i = 0; i < rep.ranked.size(); ++i) {
    const auto& r = rep.ranked[i];
    os << i + 1 << ',' << to_string(r.p.placement) << ',' << to_string(r.p.schedule) << ','
       << dp_scheme_label(r.p.dp_scheme) << ',' << r.p.tp << ',' << r.p.cp << ',' << r.p.ep << ','
       << r.p.pp << ',' << r.p.dp << ',' << r.batch.microbatch_size << ','
       << r.p.chunk_partition.num_chunks() << ',' << sizes_text(r.p.chunk_partition.chunk_sizes)
       << ',' << num(r.iteration_s) << ',' << num(r.other_placement_s) << ',' << r.cross_bytes
       << ',' << num(r.memory_bytes) << ',' << num(r.max_bubble) << ',' << (r.refined ? 1 : 0)
       << '\n';
  }
}

/// One row per kernel with start/finish under both placements.
inline void write_timeline_csv(std::ostream& os, const KernelDAG& dag, const Timeline& tl) {
  os << "id,rank,kind,label,bytes,start_dpout_s,finish_dpout_s,start_ppout_s,finish_ppout_s,"
        "cross_dpout,cross_ppout\n";
  for (const Kernel& k : dag.kernels) {
    const char* kind = k.kind == KernelKind::Compute      ? "compute"
                       : k.kind == KernelKind::PPTransfer ? "pp_transfer"
                                                          : "dp_collective";
    os << k.id << ',' << k.rank << ',' << kind << ',' << k.label() << ','
       << static_cast<std::int64_t>(k.bytes) << ',' << num(tl.start[0][k.id]) << ','
       << num(tl.finish[0][k.id]) << ',' << num(tl.start[1][k.id]) << ','
       << num(tl.finish[1][k.id]) << ',' << (k.cross[0] ? 1 : 0) << ','
       << (k.cross[1] ? 1 : 0) << '\n';
  }
}

/// Single-config metrics under both placements.
inline json metrics_json(const ModelSpec& m, const BatchSpec& b, const ParallelismConfig& p,
                         const Timeline& tl, const Topology& topo, const Assumptions& a) {
  json per = json::object();
  for (Placement pl : kPlacements) {
    const int i = index_of(pl);
    per[std::string(to_string(pl))] = {
        {"iteration_s", tl.iteration[i]},
        {"cross_building_bytes", cross_building_bytes(m, b, p, topo, pl)},
        {"bubble", tl.bubble[i]}};
  }
  const auto mem = memory_estimate(m, b, p, a);
  return {{"version", std::string(kVersion)},
          {"parallelism", to_json(p)},
          {"batch", to_json(b)},
          {"microbatches", num_microbatches(b, p)},
          {"placements", per},
          {"memory_bytes", {{"model_state", mem.model_state_bytes},
                            {"activations", mem.activation_bytes},
                            {"total", mem.total()}}},
          {"assumptions", to_json(a)}};
}

}  // namespace scax
