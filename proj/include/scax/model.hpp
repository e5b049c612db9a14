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
#include <cstdint>
#include <string>
#include <vector>

#include "scax/core.hpp"

namespace scax {

/// Microbatches each pipeline processes per iteration.
inline std::int64_t num_microbatches(const BatchSpec& b, const ParallelismConfig& p) {
  if (b.microbatch_size < 1) throw ValidationError("microbatch_size must be >= 1");
  if (p.dp < 1) throw ValidationError("dp must be >= 1");
  const std::int64_t per_step = static_cast<std::int64_t>(p.dp) * b.microbatch_size;
  if (b.global_batch_size % per_step != 0) {
    throw ValidationError("global_batch_size " + std::to_string(b.global_batch_size) +
                          " is not divisible by dp*microbatch_size = " +
                          std::to_string(p.dp) + "*" + std::to_string(b.microbatch_size));
  }
  return b.global_batch_size / per_step;
}

// Chunk layouts ----------------------------------------------------------------

/// Stage of each chunk for a schedule: one chunk per stage (1F1B), round robin
/// (DoraPP), or first-to-last then last-to-first (ZBV). Empty if the chunk
/// count cannot form the layout.
inline std::vector<int> chunk_stages(Schedule s, int num_chunks, int pp) {
  std::vector<int> out;
  if (pp < 1 || num_chunks < 1) return out;
  switch (s) {
    case Schedule::OneFOneB:
      if (num_chunks != pp) return out;
      for (int i = 0; i < num_chunks; ++i) out.push_back(i);
      break;
    case Schedule::DoraPP:
      if (num_chunks % pp != 0) return out;
      for (int i = 0; i < num_chunks; ++i) out.push_back(i % pp);
      break;
    case Schedule::InterleavedZBV:
      if (num_chunks % (2 * pp) != 0) return out;
      for (int i = 0; i < num_chunks; ++i) {
        const int pos = i % (2 * pp);
        out.push_back(pos < pp ? pos : 2 * pp - 1 - pos);
      }
      break;
  }
  return out;
}

/// Near-uniform split of `layers` into `parts` contiguous pieces; earlier
/// pieces take the remainder.
inline std::vector<int> split_even(int layers, int parts) {
  std::vector<int> out(parts, layers / parts);
  for (int i = 0; i < layers % parts; ++i) ++out[i];
  return out;
}

inline ChunkPartition uniform_partition(int num_layers, int num_chunks, Schedule s, int pp) {
  ChunkPartition cp;
  cp.chunk_stage = chunk_stages(s, num_chunks, pp);
  if (cp.chunk_stage.empty() || num_chunks > num_layers) {
    cp.chunk_stage.clear();
    return cp;
  }
  cp.chunk_sizes = split_even(num_layers, num_chunks);
  return cp;
}

/// Layers resident on each stage.
inline std::vector<int> stage_layers(const ChunkPartition& cp, int pp) {
  std::vector<int> out(std::max(pp, 0), 0);
  for (int i = 0; i < cp.num_chunks() && i < static_cast<int>(cp.chunk_stage.size()); ++i) {
    const int s = cp.chunk_stage[i];
    if (s >= 0 && s < pp) out[s] += cp.chunk_sizes[i];
  }
  return out;
}

inline int max_stage_layers(const ModelSpec& m, const ParallelismConfig& p) {
  if (p.chunk_partition.chunk_sizes.empty())
    return static_cast<int>((m.num_layers + p.pp - 1) / p.pp);
  int best = 0;
  for (int v : stage_layers(p.chunk_partition, p.pp)) best = std::max(best, v);
  return best;
}

/// max/min chunk size ratio.
inline double chunk_spread(const std::vector<int>& sizes) {
  if (sizes.empty()) return 1.0;
  const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
  return *lo > 0 ? static_cast<double>(*hi) / *lo : INFINITY;
}

inline bool within_spread_cap(const std::vector<int>& sizes, double cap) {
  return chunk_spread(sizes) <= cap + 1e-12;
}

// Parameter counts ----------------------------------------------------------------

/// Per-layer parameters that every GPU of a TP group shares (attention and
/// dense FFN), before TP sharding.
inline double dense_layer_params(const ModelSpec& m) {
  const double h = static_cast<double>(m.hidden_dim);
  const double ffn = m.is_moe() ? 0.0 : 3.0 * h * static_cast<double>(m.ffn_dim);
  return 4.0 * h * h + ffn;
}

/// Per-layer expert parameters across all experts, before EP/TP sharding.
inline double expert_layer_params(const ModelSpec& m) {
  if (!m.is_moe()) return 0.0;
  return 3.0 * static_cast<double>(m.hidden_dim) * static_cast<double>(m.expert_ffn_dim) *
         static_cast<double>(m.num_experts);
}

inline double total_params(const ModelSpec& m) {
  return static_cast<double>(m.num_layers) * (dense_layer_params(m) + expert_layer_params(m));
}

// Memory -----------------------------------------------------------------------

struct MemoryEstimate {
  double model_state_bytes = 0.0;
  double activation_bytes = 0.0;
  double total() const { return model_state_bytes + activation_bytes; }
};

inline double inflight_microbatches(const ParallelismConfig& p) {
  if (p.schedule == Schedule::InterleavedZBV) return std::ceil(p.pp / 2.0);
  return p.pp;
}

/// Coarse per-GPU footprint for the most loaded stage. Parameters, gradients
/// and optimizer state shard over TP and the FSDP shard group (experts over
/// EP as well); activations scale with microbatch tokens, stage depth and the
/// schedule's in-flight microbatch count.
inline MemoryEstimate memory_estimate(const ModelSpec& m, const BatchSpec& b,
                                      const ParallelismConfig& p, const Assumptions& a = {}) {
  MemoryEstimate est;
  const double layers = max_stage_layers(m, p);
  const double bytes_per_param = a.param_bytes + a.grad_bytes + a.optimizer_bytes;
  const double shard = std::max(1, p.shard_degree());
  const double expert_shard = std::max(1.0, shard * p.cp / std::max(1, p.ep));

  const double dense = dense_layer_params(m) / p.tp / shard;
  const double experts = expert_layer_params(m) / p.tp / std::max(1, p.ep) / expert_shard;
  est.model_state_bytes = layers * (dense + experts) * bytes_per_param;

  double per_layer = a.activation_factor * static_cast<double>(b.microbatch_size) *
                     (static_cast<double>(m.seq_len) / p.cp) *
                     static_cast<double>(m.hidden_dim) * static_cast<double>(m.bytes_per_element);
  if (a.activation_tp_sharded) per_layer /= p.tp;
  est.activation_bytes = per_layer * layers * inflight_microbatches(p);
  return est;
}

// Validation -------------------------------------------------------------------

struct Violation {
  std::string code;
  std::string message;
};

inline constexpr std::int64_t kMinContextShardTokens = 2048;

inline int min_gpus_per_zone(const Topology& t) {
  int best = 0;
  for (const auto& b : t.buildings) {
    const int z = b.gpu_count / std::max(1, b.zones);
    best = best == 0 ? z : std::min(best, z);
  }
  return best;
}

/// Checks a chunk partition against the schedule's layout; appends violations.
inline void check_partition(const ModelSpec& m, const ParallelismConfig& p,
                            std::vector<Violation>& out) {
  const auto& cp = p.chunk_partition;
  if (cp.chunk_sizes.empty()) {
    out.push_back({"partition.empty", "chunk_partition has no chunks"});
    return;
  }
  if (cp.chunk_sizes.size() != cp.chunk_stage.size()) {
    out.push_back({"partition.shape", "chunk_sizes and chunk_stage lengths differ"});
    return;
  }
  std::int64_t sum = 0;
  for (int s : cp.chunk_sizes) {
    if (s < 1) out.push_back({"partition.size", "every chunk needs at least one layer"});
    sum += s;
  }
  if (sum != m.num_layers) {
    out.push_back({"partition.sum", "chunk sizes sum to " + std::to_string(sum) +
                                        " but the model has " + std::to_string(m.num_layers) +
                                        " layers"});
  }
  std::vector<int> per_stage(p.pp, 0);
  for (int s : cp.chunk_stage) {
    if (s < 0 || s >= p.pp) {
      out.push_back({"partition.stage", "chunk assigned to stage " + std::to_string(s) +
                                            " outside [0, pp)"});
      return;
    }
    ++per_stage[s];
  }
  for (int s = 0; s < p.pp; ++s) {
    if (per_stage[s] == 0)
      out.push_back({"partition.idle_stage", "stage " + std::to_string(s) + " has no chunk"});
  }
  if (chunk_stages(p.schedule, cp.num_chunks(), p.pp) != cp.chunk_stage) {
    out.push_back({"partition.layout", std::string("chunk_stage does not follow the ") +
                                           std::string(to_string(p.schedule)) + " layout"});
  }
}

inline std::vector<Violation> validate_config(const ModelSpec& m, const BatchSpec& b,
                                              const ParallelismConfig& p, const Topology& topo,
                                              const Assumptions& a = {}) {
  std::vector<Violation> out;
  const auto add = [&](std::string code, std::string msg) {
    out.push_back({std::move(code), std::move(msg)});
  };

  for (auto [name, v] : std::array<std::pair<const char*, int>, 5>{
           {{"tp", p.tp}, {"cp", p.cp}, {"ep", p.ep}, {"pp", p.pp}, {"dp", p.dp}}}) {
    if (v < 1) add("degree.positive", std::string(name) + " must be >= 1");
  }
  if (!out.empty()) return out;

  if (p.world_size() != topo.world_size()) {
    add("degree.product", "tp*cp*pp*dp = " + std::to_string(p.world_size()) +
                              " but the topology has " + std::to_string(topo.world_size()) +
                              " GPUs");
  }
  if ((p.dp * p.cp) % p.ep != 0) add("degree.ep", "ep must divide dp*cp");
  if (m.is_moe() && m.num_experts % p.ep != 0) add("degree.ep", "ep must divide num_experts");
  if (!m.is_moe() && p.ep != 1) add("degree.ep", "dense models require ep = 1");
  if (m.hidden_dim % p.tp != 0) add("degree.tp", "tp must divide hidden_dim");
  if (p.tp > topo.gpus_per_server) add("degree.tp", "tp exceeds GPUs per server");
  if (p.tp * p.cp * p.ep > min_gpus_per_zone(topo) && topo.world_size() > 0)
    add("degree.ep_zone", "expert/context group spans zones");

  if (p.dp_scheme.hsdp()) {
    const auto& s = p.dp_scheme;
    if (s.replica_groups < 1 || s.shard_degree < 1 || s.replica_groups * s.shard_degree != p.dp)
      add("dp.hsdp", "HSDP replica_groups * shard_degree must equal dp");
  }

  if (b.microbatch_size < 1) {
    add("batch.microbatch", "microbatch_size must be >= 1");
  } else if (b.global_batch_size % (static_cast<std::int64_t>(p.dp) * b.microbatch_size) != 0) {
    add("batch.divisible", "global_batch_size not divisible by dp*microbatch_size");
  } else if (num_microbatches(b, p) < p.pp) {
    add("batch.microbatches", "microbatches < pipeline stages");
  }

  if (m.seq_len % p.cp != 0) {
    add("cp.divisible", "cp must divide seq_len");
  } else if (m.seq_len / p.cp < kMinContextShardTokens) {
    add("cp.shard", "context shard below 2048 tokens");
  }

  check_partition(m, p, out);

  if (out.empty()) {
    const auto mem = memory_estimate(m, b, p, a);
    if (mem.total() > topo.gpu.hbm_bytes)
      add("memory", "estimated " + std::to_string(mem.total() / (1 << 30)) +
                        " GiB exceeds HBM " + std::to_string(topo.gpu.hbm_bytes / (1 << 30)) +
                        " GiB");
  }
  return out;
}

inline bool has_violation(const std::vector<Violation>& v, std::string_view code) {
  for (const auto& x : v)
    if (x.code == code) return true;
  return false;
}

// Degree enumeration ---------------------------------------------------------------

inline std::vector<int> divisors(std::int64_t n) {
  std::vector<int> out;
  for (std::int64_t d = 1; d <= n; ++d)
    if (n % d == 0) out.push_back(static_cast<int>(d));
  return out;
}

struct Degrees {
  int tp, cp, ep, pp, dp;
  bool operator==(const Degrees&) const = default;
};

/// All (tp, cp, ep, pp, dp) with tp*cp*pp*dp == world and ep | dp*cp.
inline std::vector<Degrees> degree_tuples(std::int64_t world) {
  std::vector<Degrees> out;
  for (int tp : divisors(world))
    for (int cp : divisors(world / tp))
      for (int pp : divisors(world / tp / cp)) {
        const int dp = static_cast<int>(world / tp / cp / pp);
        for (int ep : divisors(static_cast<std::int64_t>(dp) * cp)) out.push_back({tp, cp, ep, pp, dp});
      }
  return out;
}

}  // namespace scax
