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

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace scax {

inline constexpr std::string_view kVersion = "scax 0.1.0";

// Errors ---------------------------------------------------------------------

/// Malformed or incomplete input document.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration that violates a domain constraint.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A malformed kernel graph (cycle, dangling edge).
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Units ----------------------------------------------------------------------

inline constexpr double kMicro = 1e-6;
inline constexpr double kGbpsToBytesPerSec = 1e9 / 8.0;

inline constexpr double us_to_s(double us) { return us * kMicro; }
inline constexpr double gbps_to_Bps(double gbps) { return gbps * kGbpsToBytesPerSec; }
inline constexpr double Bps_to_gbps(double bps) { return bps / kGbpsToBytesPerSec; }

// Model ----------------------------------------------------------------------

struct ModelSpec {
  std::int64_t num_layers = 0;
  std::int64_t hidden_dim = 0;
  std::int64_t ffn_dim = 0;
  std::int64_t seq_len = 0;
  std::int64_t num_experts = 0;  // 0 means dense
  std::int64_t expert_ffn_dim = 0;
  std::int64_t top_k = 0;
  std::int64_t bytes_per_element = 2;

  bool is_moe() const { return num_experts > 0; }
  bool operator==(const ModelSpec&) const = default;
};

struct BatchSpec {
  std::int64_t global_batch_size = 0;
  std::int64_t microbatch_size = 1;
  bool operator==(const BatchSpec&) const = default;
};

// Parallelism ----------------------------------------------------------------

enum class Placement { DPOut, PPOut };
enum class Schedule { OneFOneB, DoraPP, InterleavedZBV };

struct DpScheme {
  enum class Kind { FSDP, HSDP } kind = Kind::FSDP;
  int replica_groups = 1;  // HSDP only
  int shard_degree = 1;    // HSDP only

  bool hsdp() const { return kind == Kind::HSDP; }
  bool operator==(const DpScheme&) const = default;
};

/// Layers per model chunk (model order) and the stage each chunk runs on.
struct ChunkPartition {
  std::vector<int> chunk_sizes;
  std::vector<int> chunk_stage;

  int num_chunks() const { return static_cast<int>(chunk_sizes.size()); }
  bool operator==(const ChunkPartition&) const = default;
};

struct ParallelismConfig {
  int tp = 1;
  int cp = 1;
  int ep = 1;
  int pp = 1;
  int dp = 1;
  Placement placement = Placement::DPOut;
  Schedule schedule = Schedule::DoraPP;
  DpScheme dp_scheme;
  ChunkPartition chunk_partition;

  std::int64_t world_size() const {
    return static_cast<std::int64_t>(tp) * cp * pp * dp;
  }
  /// Size of the group that shards parameters.
  int shard_degree() const { return dp_scheme.hsdp() ? dp_scheme.shard_degree : dp; }
  bool operator==(const ParallelismConfig&) const = default;
};

// Topology -------------------------------------------------------------------

enum class LoadBalancing { ECMP, PacketSpraying };

/// Ordered innermost to outermost.
enum class Tier { IntraServer = 0, IntraZone = 1, CrossZone = 2, CrossBuilding = 3 };

struct LinkTier {
  double bandwidth_gbps = 400.0;  // per GPU pair, before oversubscription
  double latency_us = 1.0;        // one way
  double loss_rate = 0.0;
  double oversubscription = 1.0;  // the x in 1:x
  bool operator==(const LinkTier&) const = default;
};

struct Building {
  int gpu_count = 0;
  int zones = 1;
  bool operator==(const Building&) const = default;
};

struct NicSpec {
  std::int64_t packet_payload = 4096;
  std::int64_t max_inflight_packets = 512;
  int qp_count = 4;
  LoadBalancing load_balancing = LoadBalancing::PacketSpraying;
  int ecmp_flows = 8;
  int ecmp_paths = 8;
  bool operator==(const NicSpec&) const = default;
};

struct GpuSpec {
  double hbm_bytes = 80.0 * 1024 * 1024 * 1024;
  double effective_flops = 989e12;
  bool operator==(const GpuSpec&) const = default;
};

struct Topology {
  std::vector<Building> buildings;
  int gpus_per_server = 8;
  LinkTier intra_server{900.0, 1.0, 0.0, 1.0};
  LinkTier intra_zone{400.0, 5.0, 0.0, 1.0};
  LinkTier cross_zone{400.0, 25.0, 0.0, 1.0};
  LinkTier cross_building{400.0, 50.0, 0.0, 1.0};
  /// Symmetric per-building-pair one-way latency; empty means uniform
  /// cross_building.latency_us.
  std::vector<std::vector<double>> cross_building_latency_us;
  NicSpec nic;
  GpuSpec gpu;

  int world_size() const {
    int n = 0;
    for (const auto& b : buildings) n += b.gpu_count;
    return n;
  }
  int num_buildings() const { return static_cast<int>(buildings.size()); }

  const LinkTier& tier(Tier t) const {
    switch (t) {
      case Tier::IntraServer: return intra_server;
      case Tier::IntraZone: return intra_zone;
      case Tier::CrossZone: return cross_zone;
      case Tier::CrossBuilding: return cross_building;
    }
    return cross_building;
  }

  double building_latency_us(int a, int b) const {
    if (a == b) return 0.0;
    if (cross_building_latency_us.empty()) return cross_building.latency_us;
    return cross_building_latency_us.at(a).at(b);
  }

  double max_cross_latency_us() const {
    double m = 0.0;
    for (int a = 0; a < num_buildings(); ++a)
      for (int b = 0; b < num_buildings(); ++b) m = std::max(m, building_latency_us(a, b));
    return m;
  }

  /// Sets every cross-building pair to the same one-way latency.
  void set_uniform_cross_latency(double us) {
    cross_building.latency_us = us;
    cross_building_latency_us.clear();
  }

  bool operator==(const Topology&) const = default;
};

// Tunable modeling constants echoed into every report.
struct Assumptions {
  double param_bytes = 2.0;
  double grad_bytes = 2.0;
  double optimizer_bytes = 12.0;
  double activation_factor = 16.0;
  bool activation_tp_sharded = true;
  double compute_efficiency = 0.85;
  /// Tokens at which a microbatch reaches half of peak efficiency; 0 disables.
  double saturation_tokens = 2048.0;
  double eps_zbv = 0.06;
  double eps_dora = 0.02;
  double chunk_spread_cap = 3.0;
  double cc_latency_threshold_us = 100.0;
  double redundancy_latency_threshold_us = 100.0;
  double imbalance_latency_threshold_us = 2000.0;
  double us_per_km = 5.0;
  double exploration_fraction = 0.5;
  bool operator==(const Assumptions&) const = default;
};

// Names ----------------------------------------------------------------------

inline std::string_view to_string(Placement p) {
  return p == Placement::DPOut ? "DPOut" : "PPOut";
}

inline std::string_view to_string(Schedule s) {
  switch (s) {
    case Schedule::OneFOneB: return "OneFOneB";
    case Schedule::DoraPP: return "DoraPP";
    case Schedule::InterleavedZBV: return "InterleavedZBV";
  }
  return "?";
}

inline std::string_view to_string(Tier t) {
  switch (t) {
    case Tier::IntraServer: return "intra_server";
    case Tier::IntraZone: return "intra_zone";
    case Tier::CrossZone: return "cross_zone";
    case Tier::CrossBuilding: return "cross_building";
  }
  return "?";
}

inline std::string_view to_string(LoadBalancing lb) {
  return lb == LoadBalancing::ECMP ? "ECMP" : "PacketSpraying";
}

inline std::string dp_scheme_label(const DpScheme& s) {
  if (!s.hsdp()) return "FSDP";
  return "HSDP" + std::to_string(s.replica_groups) + "x" + std::to_string(s.shard_degree);
}

}  // namespace scax
