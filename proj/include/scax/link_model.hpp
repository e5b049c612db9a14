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
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <random>
#include <tuple>
#include <vector>

#include "scax/core.hpp"
#include "scax/model.hpp"
#include "scax/placement.hpp"

namespace scax {

struct LinkProfile {
  double bandwidth_gbps = 400.0;  // after oversubscription
  double latency_us = 0.0;        // one way
  double loss_rate = 0.0;
  LoadBalancing load_balancing = LoadBalancing::PacketSpraying;
  int qp_count = 4;
  std::int64_t packet_payload = 4096;
  std::int64_t max_inflight_packets = 512;
  int ecmp_flows = 8;
  int ecmp_paths = 8;

  double rtt_s() const { return 2.0 * us_to_s(latency_us); }
  double rate_Bps() const { return gbps_to_Bps(bandwidth_gbps); }
  bool operator==(const LinkProfile&) const = default;
};

inline LinkProfile make_link(const Topology& topo, const LinkClass& lc) {
  const LinkTier& t = topo.tier(lc.tier);
  LinkProfile l;
  l.bandwidth_gbps = t.bandwidth_gbps / std::max(1.0, t.oversubscription);
  l.latency_us = lc.latency_us;
  l.loss_rate = t.loss_rate;
  l.load_balancing = topo.nic.load_balancing;
  l.qp_count = topo.nic.qp_count;
  l.packet_payload = topo.nic.packet_payload;
  l.max_inflight_packets = topo.nic.max_inflight_packets;
  l.ecmp_flows = topo.nic.ecmp_flows;
  l.ecmp_paths = topo.nic.ecmp_paths;
  return l;
}

/// Message size over round-trip time, bytes/s.
inline double throughput_bound(double message_bytes, double rtt_s) {
  if (rtt_s <= 0.0) throw ValidationError("rtt must be > 0");
  return message_bytes / rtt_s;
}

/// Line rate capped by the per-QP outstanding-packet window, Gbps.
inline double spraying_goodput(const LinkProfile& l) {
  const double rtt = l.rtt_s();
  if (rtt <= 0.0) return l.bandwidth_gbps;
  const double window = static_cast<double>(l.qp_count) *
                        static_cast<double>(l.max_inflight_packets) *
                        static_cast<double>(l.packet_payload);
  return std::min(l.bandwidth_gbps, Bps_to_gbps(window / rtt));
}

/// Mean per-flow goodput when `flows` are hashed uniformly onto `paths`, each
/// path able to carry the full line rate. Deterministic for a seed.
inline double ecmp_goodput(const LinkProfile& l, int flows, int paths, std::uint64_t seed,
                           int trials = 20000) {
  if (paths < 1) throw ValidationError("path_count must be >= 1");
  if (flows <= 1) return l.bandwidth_gbps;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, paths - 1);
  std::vector<int> load(paths);
  std::vector<int> where(flows);
  double sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::fill(load.begin(), load.end(), 0);
    for (int f = 0; f < flows; ++f) ++load[where[f] = pick(rng)];
    for (int f = 0; f < flows; ++f) sum += 1.0 / load[where[f]];
  }
  return l.bandwidth_gbps * sum / (static_cast<double>(trials) * flows);
}

namespace detail {

/// ECMP efficiency shared by all timing calls; fixed seed, memoized.
inline double ecmp_efficiency(int flows, int paths) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  const auto key = std::make_pair(flows, paths);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  LinkProfile unit;
  unit.bandwidth_gbps = 1.0;
  const double eff = ecmp_goodput(unit, flows, paths, 0x5ca1ab1eULL);
  cache.emplace(key, eff);
  return eff;
}

}  // namespace detail

/// Per-GPU-pair goodput under the link's load-balancing mode, Gbps.
inline double link_goodput(const LinkProfile& l) {
  if (l.load_balancing == LoadBalancing::PacketSpraying) return spraying_goodput(l);
  return l.bandwidth_gbps * detail::ecmp_efficiency(l.ecmp_flows, l.ecmp_paths);
}

/// Go-Back-N expected time multiplier (1 + p(W-1)) / (1 - p), W the window in
/// packets: min(max_inflight, rate*rtt/payload), at least one.
inline double gobackn_inflation(double p, double rtt_s, double payload_bytes, double max_inflight,
                                double rate_Bps) {
  if (p < 0.0 || p >= 1.0) throw ValidationError("loss rate must be in [0, 1)");
  if (p == 0.0) return 1.0;
  const double w = std::max(1.0, std::min(max_inflight, rate_Bps * rtt_s / payload_bytes));
  return (1.0 + p * (w - 1.0)) / (1.0 - p);
}

inline double gobackn_inflation(const LinkProfile& l, double rate_Bps) {
  return gobackn_inflation(l.loss_rate, l.rtt_s(), static_cast<double>(l.packet_payload),
                           static_cast<double>(l.max_inflight_packets), rate_Bps);
}

/// Point-to-point transfer: latency plus serialization at the lesser of the
/// goodput and the message-size bound, inflated for loss. `share` divides the
/// goodput among concurrent transfers on the same link class.
inline double p2p_time(double bytes, const LinkProfile& l, double share = 1.0) {
  const double lat = us_to_s(l.latency_us);
  if (bytes <= 0.0) return lat;
  double rate = gbps_to_Bps(link_goodput(l)) / std::max(1.0, share);
  if (l.rtt_s() > 0.0) rate = std::min(rate, throughput_bound(bytes, l.rtt_s()));
  return (lat + bytes / rate) * gobackn_inflation(l, rate);
}

enum class Collective { AllGather, ReduceScatter, AllReduce };

inline std::string_view to_string(Collective c) {
  switch (c) {
    case Collective::AllGather: return "AllGather";
    case Collective::ReduceScatter: return "ReduceScatter";
    case Collective::AllReduce: return "AllReduce";
  }
  return "?";
}

/// Ring collective over n members: (n-1) steps of total/n bytes plus one-way
/// latency each; AllReduce doubles the data term.
inline double collective_time(Collective kind, double total_bytes, int n, const LinkProfile& l,
                              double share = 1.0) {
  if (n < 1) throw ValidationError("group size must be >= 1");
  if (n == 1 || total_bytes <= 0.0) return 0.0;
  const double step = total_bytes / n;
  double rate = gbps_to_Bps(link_goodput(l)) / std::max(1.0, share);
  if (l.rtt_s() > 0.0) rate = std::min(rate, throughput_bound(step, l.rtt_s()));
  rate /= gobackn_inflation(l, rate);
  const double data = (kind == Collective::AllReduce ? 2.0 : 1.0) * step / rate;
  return (n - 1) * (data + us_to_s(l.latency_us));
}

/// Gradient sync under HSDP: ReduceScatter inside each s-member shard group,
/// then AllReduce of the 1/s shard across the r group leaders.
inline double hsdp_sync_time(double layer_bytes, int r, int s, const LinkProfile& intra,
                             const LinkProfile& cross, double intra_share = 1.0,
                             double cross_share = 1.0) {
  return collective_time(Collective::ReduceScatter, layer_bytes, s, intra, intra_share) +
         collective_time(Collective::AllReduce, layer_bytes / s, r, cross, cross_share);
}

// Compute ------------------------------------------------------------------------

enum class Phase { Fwd, BwdDx, BwdDw, BwdFused };

inline std::string_view to_string(Phase ph) {
  switch (ph) {
    case Phase::Fwd: return "F";
    case Phase::BwdDx: return "X";
    case Phase::BwdDw: return "W";
    case Phase::BwdFused: return "B";
  }
  return "?";
}

inline double layer_forward_flops(const ModelSpec& m, std::int64_t micro, const ParallelismConfig& p) {
  const double h = static_cast<double>(m.hidden_dim);
  const double f_active = m.is_moe() ? static_cast<double>(m.top_k * m.expert_ffn_dim)
                                     : static_cast<double>(m.ffn_dim);
  const double tokens = static_cast<double>(micro) * static_cast<double>(m.seq_len) / p.cp;
  return 2.0 * tokens * (4.0 * h * h + 3.0 * h * f_active) / p.tp;
}

/// Achieved fraction of peak for a microbatch of `tokens` per GPU.
inline double compute_efficiency(double tokens, const Assumptions& a) {
  double eff = a.compute_efficiency;
  if (a.saturation_tokens > 0.0) eff *= tokens / (tokens + a.saturation_tokens);
  return eff;
}

inline double split_overhead(Schedule s, const Assumptions& a) {
  switch (s) {
    case Schedule::InterleavedZBV: return a.eps_zbv;
    case Schedule::DoraPP: return a.eps_dora;
    case Schedule::OneFOneB: return 0.0;
  }
  return 0.0;
}

inline double chunk_compute_time(const ModelSpec& m, int chunk_layers, std::int64_t micro,
                                 const ParallelismConfig& p, Phase ph, const GpuSpec& gpu,
                                 const Assumptions& a = {}) {
  const double tokens = static_cast<double>(micro) * static_cast<double>(m.seq_len) / p.cp;
  const double fwd = chunk_layers * layer_forward_flops(m, micro, p) /
                     (gpu.effective_flops * compute_efficiency(tokens, a));
  switch (ph) {
    case Phase::Fwd: return fwd;
    case Phase::BwdFused: return 2.0 * fwd;
    case Phase::BwdDx:
    case Phase::BwdDw: return fwd * (1.0 + split_overhead(p.schedule, a));
  }
  return fwd;
}

}  // namespace scax
