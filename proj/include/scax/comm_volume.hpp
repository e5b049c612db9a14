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

#include <cstdint>
#include <vector>

#include "scax/core.hpp"
#include "scax/model.hpp"
#include "scax/placement.hpp"

namespace scax {

/// Elements in one activation (or activation-gradient) transfer between
/// pipeline stages: 2 * (H/tp) * (S/cp) * m.
inline std::int64_t pp_p2p_elements(const ModelSpec& m, const BatchSpec& b,
                                    const ParallelismConfig& p) {
  return 2 * (m.hidden_dim / p.tp) * (m.seq_len / p.cp) * b.microbatch_size;
}

/// Boundary index a chunk-to-chunk hop from stage `from` to stage `to`
/// travels over, or -1 for same-stage hops. Index pp-1 is the last-to-first
/// wrap link used by round-robin layouts.
inline int hop_boundary(Schedule s, int pp, int from, int to) {
  if (from == to || pp < 2) return -1;
  if (to == from + 1) return from;
  if (s != Schedule::InterleavedZBV && from == pp - 1 && to == 0) return pp - 1;
  if (to == from - 1) return to;
  throw ValidationError("chunk hop " + std::to_string(from) + "->" + std::to_string(to) +
                        " skips a stage");
}

/// Consecutive-chunk hops crossing each boundary (size pp; last entry is the
/// wrap link). Each hop carries one forward and one backward transfer.
inline std::vector<std::int64_t> chunk_crossings(const ParallelismConfig& p) {
  std::vector<std::int64_t> out(std::max(p.pp, 1), 0);
  if (p.pp < 2) return out;
  const auto& st = p.chunk_partition.chunk_stage;
  for (std::size_t c = 0; c + 1 < st.size(); ++c) {
    const int b = hop_boundary(p.schedule, p.pp, st[c], st[c + 1]);
    if (b >= 0) ++out[b];
  }
  return out;
}

/// Transfers per iteration over one boundary: 2 * microbatches * crossings.
inline std::int64_t pp_p2p_count(const BatchSpec& b, const ParallelismConfig& p, int boundary) {
  if (p.pp < 2) return 0;
  const auto cross = chunk_crossings(p);
  if (boundary < 0 || boundary >= static_cast<int>(cross.size())) return 0;
  return 2 * num_microbatches(b, p) * cross[boundary];
}

/// Elements one DP collective moves per layer per direction:
/// (4H^2 + 3HF)/tp dense, (4H^2 + 3H*F_e*E/ep)/tp MoE.
inline std::int64_t dp_layer_elements(const ModelSpec& m, const ParallelismConfig& p) {
  const std::int64_t h = m.hidden_dim;
  const std::int64_t ffn = m.is_moe() ? m.expert_ffn_dim * (m.num_experts / p.ep) : m.ffn_dim;
  return (4 * h * h + 3 * h * ffn) / p.tp;
}

/// Bytes one pipeline (one GPU per stage) sends over cross-building links per
/// iteration under a resolved placement: DP collectives whose ring leaves the building plus PP
/// transfers over straddling stage boundaries. Ring step factors are left to
/// the timing model.
inline std::int64_t cross_building_bytes(const ModelSpec& m, const BatchSpec& b,
                                         const ParallelismConfig& p, const GroupPlacement& gp) {
  const std::int64_t bpe = m.bytes_per_element;
  std::int64_t total = 0;
  if (p.dp > 1) {
    const std::int64_t v = dp_layer_elements(m, p) * bpe;
    if (p.dp_scheme.hsdp()) {
      const int s = p.dp_scheme.shard_degree;
      if (s > 1 && gp.hsdp_shard.cross_building()) total += m.num_layers * 2 * v;
      if (p.dp_scheme.replica_groups > 1 && gp.hsdp_replica.cross_building())
        total += m.num_layers * (2 * v / s);
    } else if (gp.dp.cross_building()) {
      total += m.num_layers * 2 * v;
    }
  }
  if (p.pp > 1) {
    const std::int64_t per = pp_p2p_elements(m, b, p) * bpe;
    for (int bd = 0; bd < p.pp; ++bd)
      if (gp.boundary(bd).cross_building()) total += pp_p2p_count(b, p, bd) * per;
  }
  return total;
}

inline std::int64_t cross_building_bytes(const ModelSpec& m, const BatchSpec& b,
                                         const ParallelismConfig& p, const Topology& topo,
                                         Placement placement) {
  return cross_building_bytes(m, b, p, resolve_placement(p, topo, placement));
}

}  // namespace scax
