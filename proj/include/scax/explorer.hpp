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
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "scax/comm_volume.hpp"
#include "scax/core.hpp"
#include "scax/model.hpp"
#include "scax/reconstruct.hpp"
#include "scax/schedule.hpp"

namespace scax {

struct SearchBudget {
  int top_k = 1000;
  int perturbations_m = 100;
  int chunk_configs_per_partition = 100;
  /// Distinct partitions evaluated per template; the space is enumerated
  /// exhaustively when it fits.
  int max_evaluations = 256;
  double max_wall_time_s = 0.0;  // 0 = unlimited
  std::uint64_t seed = 1;
  bool operator==(const SearchBudget&) const = default;

  void validate() const {
    if (top_k < 1 || perturbations_m < 1 || chunk_configs_per_partition < 1 ||
        max_evaluations < 1)
      throw InputError("budget: counts must be >= 1");
    if (max_wall_time_s < 0.0) throw InputError("budget.max_wall_time_s: must be >= 0");
  }
};

// Evaluation -----------------------------------------------------------------------

/// One config evaluated under both placements.
struct Evaluation {
  ParallelismConfig p;
  BatchSpec batch;
  std::array<double, 2> iteration{0.0, 0.0};
  std::array<std::int64_t, 2> cross_bytes{0, 0};
  std::array<std::vector<double>, 2> bubble;
  double memory_bytes = 0.0;

  double t(Placement pl) const { return iteration[index_of(pl)]; }
};

inline Evaluation evaluate(const ModelSpec& m, const BatchSpec& b, const ParallelismConfig& p,
                           const Topology& topo, const Assumptions& a = {}) {
  const PlacementMap pm = make_placement_map(p, topo);
  const KernelDAG dag = build_dag(m, b, p, pm, a);
  const Timeline tl = reconstruct(dag);
  Evaluation e;
  e.p = p;
  e.batch = b;
  e.iteration = tl.iteration;
  e.bubble = tl.bubble;
  for (Placement pl : kPlacements)
    e.cross_bytes[index_of(pl)] = cross_building_bytes(m, b, p, pm[pl]);
  e.memory_bytes = memory_estimate(m, b, p, a).total();
  return e;
}

/// Candidate under one placement, as ranked in reports.
struct RankedConfig {
  ParallelismConfig p;  // placement field set
  BatchSpec batch;
  double iteration_s = 0.0;
  double other_placement_s = 0.0;
  std::int64_t cross_bytes = 0;
  double memory_bytes = 0.0;
  double max_bubble = 0.0;
  bool refined = false;
};

/// Lexicographic config order used as the last tie-breaker.
inline auto config_key(const ParallelismConfig& p, const BatchSpec& b) {
  return std::make_tuple(p.tp, p.cp, p.ep, p.pp, p.dp, b.microbatch_size,
                         static_cast<int>(p.schedule), static_cast<int>(p.dp_scheme.kind),
                         p.dp_scheme.replica_groups, p.chunk_partition.chunk_sizes,
                         static_cast<int>(p.placement));
}

/// Faster first; ties by cross-building bytes, memory, then config order.
inline bool ranks_before(const RankedConfig& a, const RankedConfig& b) {
  if (a.iteration_s != b.iteration_s) return a.iteration_s < b.iteration_s;
  if (a.cross_bytes != b.cross_bytes) return a.cross_bytes < b.cross_bytes;
  if (a.memory_bytes != b.memory_bytes) return a.memory_bytes < b.memory_bytes;
  return config_key(a.p, a.batch) < config_key(b.p, b.batch);
}

inline RankedConfig ranked(const Evaluation& e, Placement pl) {
  RankedConfig r;
  r.p = e.p;
  r.p.placement = pl;
  r.batch = e.batch;
  r.iteration_s = e.t(pl);
  r.other_placement_s = e.t(pl == Placement::DPOut ? Placement::PPOut : Placement::DPOut);
  r.cross_bytes = e.cross_bytes[index_of(pl)];
  r.memory_bytes = e.memory_bytes;
  const auto& bub = e.bubble[index_of(pl)];
  r.max_bubble = bub.empty() ? 0.0 : *std::max_element(bub.begin(), bub.end());
  return r;
}

// Parallel map ---------------------------------------------------------------------

/// Runs fn(i) for i in [0, n) on a work queue; results land by index.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, Fn fn, int threads = 0) {
  std::vector<T> out(n);
  if (n == 0) return out;
  unsigned hw = threads > 0 ? static_cast<unsigned>(threads) : std::thread::hardware_concurrency();
  hw = std::max(1u, std::min<unsigned>(hw, static_cast<unsigned>(n)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  const auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        out[i] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  if (hw == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < hw; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (err) std::rethrow_exception(err);
  return out;
}

// Enumeration ----------------------------------------------------------------------

struct ExploreOptions {
  std::vector<int> tp;                // empty: accelerators per server
  std::vector<int> microbatch_sizes;  // empty: powers of two
  std::vector<Schedule> schedules{Schedule::OneFOneB, Schedule::DoraPP,
                                  Schedule::InterleavedZBV};
  std::vector<Placement> placements{Placement::DPOut, Placement::PPOut};
  bool fsdp = true;
  bool hsdp = true;
  std::optional<Degrees> degrees;  // pin (tp, cp, ep, pp, dp)
  int max_chunks_per_stage = 16;
  int refine_top = 8;
  int report_top = 20;
  int threads = 0;
};

inline int default_tp(const Topology& topo, std::int64_t world) {
  int best = 1;
  for (int d : divisors(world))
    if (d <= topo.gpus_per_server) best = d;
  return topo.gpus_per_server <= world && world % topo.gpus_per_server == 0 ? topo.gpus_per_server
                                                                           : best;
}

/// Chunks-per-stage options for a schedule.
inline std::vector<int> chunk_options(Schedule s, std::int64_t layers, int pp, int max_v) {
  std::vector<int> out;
  if (s == Schedule::OneFOneB) {
    if (pp <= layers) out.push_back(1);
    return out;
  }
  for (int v = s == Schedule::InterleavedZBV ? 2 : 1; v <= max_v && pp * v <= layers;
       v *= 2)
    out.push_back(v);
  return out;
}

struct Enumeration {
  std::vector<ParallelismConfig> templates;  // placement unset; uniform partitions
  std::vector<BatchSpec> batches;            // parallel to templates
  std::map<std::string, std::int64_t> rejected;  // violation code -> count
};

/// Valid, memory-feasible templates. Placement is left to the evaluator since
/// one DAG yields both timelines.
inline Enumeration enumerate_templates(const ModelSpec& m, const BatchSpec& batch,
                                       const Topology& topo, const ExploreOptions& opt,
                                       const Assumptions& a = {}) {
  Enumeration out;
  const std::int64_t world = topo.world_size();
  std::vector<int> tps = opt.tp;
  if (tps.empty()) tps.push_back(default_tp(topo, world));

  for (const Degrees& d : degree_tuples(world)) {
    if (std::find(tps.begin(), tps.end(), d.tp) == tps.end()) continue;
    if (opt.degrees && !(d == *opt.degrees)) continue;
    if (!m.is_moe() && d.ep != 1) continue;
    if (d.pp > m.num_layers) continue;
    std::vector<std::int64_t> mbs;
    if (!opt.microbatch_sizes.empty()) {
      for (int v : opt.microbatch_sizes) mbs.push_back(v);
    } else {
      for (std::int64_t v = 1; v <= batch.global_batch_size; v *= 2) mbs.push_back(v);
    }
    std::vector<DpScheme> schemes;
    if (opt.fsdp) schemes.push_back({});
    if (opt.hsdp && d.dp > 1)
      for (int r : divisors(d.dp))
        if (r > 1) schemes.push_back({DpScheme::Kind::HSDP, r, d.dp / r});

    for (std::int64_t mbsz : mbs) {
      BatchSpec b{batch.global_batch_size, mbsz};
      for (Schedule s : opt.schedules) {
        // Without a pipeline the schedules coincide; keep the first, one chunk.
        std::vector<int> vs = chunk_options(s, m.num_layers, d.pp, opt.max_chunks_per_stage);
        if (d.pp == 1) {
          if (s != opt.schedules.front()) continue;
          if (vs.size() > 1) vs.resize(1);
        }
        for (int v : vs) {
          for (const DpScheme& ds : schemes) {
            ParallelismConfig p;
            p.tp = d.tp;
            p.cp = d.cp;
            p.ep = d.ep;
            p.pp = d.pp;
            p.dp = d.dp;
            p.schedule = s;
            p.dp_scheme = ds;
            p.chunk_partition = uniform_partition(static_cast<int>(m.num_layers), d.pp * v, s, d.pp);
            if (p.chunk_partition.chunk_stage.empty()) continue;
            const auto viol = validate_config(m, b, p, topo, a);
            if (!viol.empty()) {
              for (const auto& x : viol) ++out.rejected[x.code];
              continue;
            }
            if (!within_spread_cap(p.chunk_partition.chunk_sizes, a.chunk_spread_cap)) {
              ++out.rejected["partition.spread"];
              continue;
            }
            out.templates.push_back(p);
            out.batches.push_back(b);
          }
        }
      }
    }
  }
  return out;
}

/// Whether a placement is distinct and puts a dimension that splits evenly
/// across buildings outermost. With one of pp, dp equal to 1 both orders give
/// the same ranks; the config is labeled by the dimension that remains.
inline bool placement_applies(const ParallelismConfig& p, const Topology& topo, Placement pl) {
  if (p.pp == 1) return pl == Placement::DPOut;
  if (p.dp == 1) return pl == Placement::PPOut && p.pp % std::max(1, topo.num_buildings()) == 0;
  const int nb = topo.num_buildings();
  if (nb <= 1) return true;
  return pl == Placement::DPOut ? p.dp % nb == 0 : p.pp % nb == 0;
}

/// Every valid, memory-feasible config under both placements.
inline std::vector<ParallelismConfig> enumerate_configs(const ModelSpec& m, const BatchSpec& batch,
                                                        const Topology& topo,
                                                        const ExploreOptions& opt = {},
                                                        const Assumptions& a = {}) {
  std::vector<ParallelismConfig> out;
  for (const auto& t : enumerate_templates(m, batch, topo, opt, a).templates)
    for (Placement pl : opt.placements)
      if (placement_applies(t, topo, pl)) {
        ParallelismConfig p = t;
        p.placement = pl;
        out.push_back(p);
      }
  return out;
}

// PP-out pruning --------------------------------------------------------------------

struct PruneState {
  std::vector<std::pair<int, double>> history;  // (pp, best PP-out time), pp ascending
};

enum class PruneDecision { Continue, Stop };

/// Stage counts grow from the minimum; stop as soon as a larger count fails
/// to improve on the best time seen so far.
inline PruneDecision prune_ppout(const PruneState& s) {
  if (s.history.size() < 2) return PruneDecision::Continue;
  double best = s.history.front().second;
  for (std::size_t i = 1; i < s.history.size(); ++i) {
    if (!(s.history[i].second < best)) return PruneDecision::Stop;
    best = s.history[i].second;
  }
  return PruneDecision::Continue;
}

// Partition search ----------------------------------------------------------------

struct PartitionResult {
  ChunkPartition partition;
  double iteration_s = 0.0;
  std::int64_t evaluations = 0;
  bool exhaustive = false;
  bool truncated = false;
};

namespace detail {

inline double binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (std::int64_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / i;
  return r;
}

/// Calls fn for every composition of n into k positive parts.
inline void for_each_composition(int n, int k, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> parts(k, 1);
  std::function<void(int, int)> rec = [&](int idx, int left) {
    if (idx == k - 1) {
      parts[idx] = left;
      fn(parts);
      return;
    }
    for (int v = 1; v <= left - (k - idx - 1); ++v) {
      parts[idx] = v;
      rec(idx + 1, left - v);
    }
  };
  if (k >= 1 && n >= k) rec(0, n);
}

/// Uniform random composition of n into k positive parts.
template <class Rng>
std::vector<int> random_composition(int n, int k, Rng& rng) {
  std::vector<int> cuts(n - 1);
  for (int i = 0; i < n - 1; ++i) cuts[i] = i + 1;
  std::shuffle(cuts.begin(), cuts.end(), rng);
  cuts.resize(k - 1);
  std::sort(cuts.begin(), cuts.end());
  std::vector<int> out;
  int prev = 0;
  for (int c : cuts) {
    out.push_back(c - prev);
    prev = c;
  }
  out.push_back(n - prev);
  return out;
}

inline double variance(const std::vector<int>& v) {
  double mean = 0.0;
  for (int x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double s = 0.0;
  for (int x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size());
}

/// Least-squares fit of y ~ w0 + w1*x1 + w2*x2 via the 3x3 normal equations.
inline std::array<double, 3> fit_linear(const std::vector<std::array<double, 3>>& rows) {
  double a[3][4] = {};
  for (const auto& r : rows) {
    const double x[3] = {1.0, r[0], r[1]};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) a[i][j] += x[i] * x[j];
      a[i][3] += x[i] * r[2];
    }
  }
  for (int i = 0; i < 3; ++i) a[i][i] += 1e-9;
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    for (int j = 0; j < 4; ++j) std::swap(a[c][j], a[piv][j]);
    if (std::abs(a[c][c]) < 1e-300) return {0.0, 0.0, 0.0};
    for (int r = 0; r < 3; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (int j = 0; j < 4; ++j) a[r][j] -= f * a[c][j];
    }
  }
  return {a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]};
}

}  // namespace detail

/// Searches chunk sizes for a template under its placement. Small spaces are
/// enumerated; otherwise an exploration phase samples stage totals and
/// chunkings (biased by a linear fit on largest chunk and size variance) and
/// an exploitation phase perturbs the best configs one layer at a time.
inline PartitionResult mc_partition_search(const ModelSpec& m, const BatchSpec& b,
                                           const ParallelismConfig& tmpl, const Topology& topo,
                                           const SearchBudget& budget, const Assumptions& a = {},
                                           std::uint64_t stream = 0) {
  const int nc = tmpl.chunk_partition.num_chunks();
  const int layers = static_cast<int>(m.num_layers);
  const Placement pl = tmpl.placement;
  const auto started = std::chrono::steady_clock::now();
  const auto out_of_time = [&] {
    if (budget.max_wall_time_s <= 0.0) return false;
    const std::chrono::duration<double> el = std::chrono::steady_clock::now() - started;
    return el.count() > budget.max_wall_time_s;
  };

  PartitionResult res;
  res.partition = tmpl.chunk_partition;
  res.iteration_s = std::numeric_limits<double>::infinity();
  std::map<std::vector<int>, double> seen;

  const auto eval = [&](const std::vector<int>& sizes) -> double {
    if (auto it = seen.find(sizes); it != seen.end()) return it->second;
    ParallelismConfig p = tmpl;
    p.chunk_partition.chunk_sizes = sizes;
    double t = std::numeric_limits<double>::infinity();
    if (validate_config(m, b, p, topo, a).empty()) {
      const PlacementMap pm = make_placement_map(p, topo);
      t = reconstruct(build_dag(m, b, p, pm, a)).t(pl);
    }
    seen.emplace(sizes, t);
    ++res.evaluations;
    if (t < res.iteration_s ||
        (t == res.iteration_s && sizes < res.partition.chunk_sizes)) {
      res.iteration_s = t;
      res.partition.chunk_sizes = sizes;
    }
    return t;
  };
  const auto capped = [&](const std::vector<int>& sizes) {
    return within_spread_cap(sizes, a.chunk_spread_cap);
  };

  if (detail::binomial(layers - 1, nc - 1) <= budget.max_evaluations) {
    res.exhaustive = true;
    detail::for_each_composition(layers, nc, [&](const std::vector<int>& sizes) {
      if (capped(sizes)) eval(sizes);
    });
    return res;
  }

  std::mt19937_64 rng(budget.seed * 0x9e3779b97f4a7c15ULL + stream);
  eval(tmpl.chunk_partition.chunk_sizes);

  const auto& st = tmpl.chunk_partition.chunk_stage;
  std::vector<std::vector<int>> on_stage(tmpl.pp);
  for (int c = 0; c < nc; ++c) on_stage[st[c]].push_back(c);

  // A random chunking of given stage totals, or empty if none met the cap.
  const auto chunking = [&](const std::vector<int>& totals) {
    for (int attempt = 0; attempt < 16; ++attempt) {
      std::vector<int> sizes(nc, 0);
      bool ok = true;
      for (int s = 0; s < tmpl.pp && ok; ++s) {
        const int k = static_cast<int>(on_stage[s].size());
        if (totals[s] < k) {
          ok = false;
          break;
        }
        const auto parts = detail::random_composition(totals[s], k, rng);
        for (int i = 0; i < k; ++i) sizes[on_stage[s][i]] = parts[i];
      }
      if (ok && capped(sizes)) return sizes;
    }
    return std::vector<int>{};
  };
  const auto features = [](const std::vector<int>& sizes) {
    return std::array<double, 2>{
        static_cast<double>(*std::max_element(sizes.begin(), sizes.end())),
        detail::variance(sizes)};
  };

  const int explore_budget =
      std::max(1, static_cast<int>(budget.max_evaluations * a.exploration_fraction));
  const int per_partition = std::max(1, budget.chunk_configs_per_partition);
  std::vector<std::array<double, 3>> samples;
  std::array<double, 3> w{0.0, 0.0, 0.0};
  int guided_after = explore_budget / 2;
  int stalls = 0;
  while (res.evaluations < explore_budget && stalls < 64 && !out_of_time()) {
    const auto totals = detail::random_composition(layers, tmpl.pp, rng);
    bool produced = false;
    for (int k = 0; k < per_partition && res.evaluations < explore_budget; ++k) {
      std::vector<int> sizes = chunking(totals);
      if (sizes.empty()) break;
      if (res.evaluations >= guided_after) {
        // Tournament on the fitted score.
        const auto score = [&](const std::vector<int>& s) {
          const auto f = features(s);
          return w[0] + w[1] * f[0] + w[2] * f[1];
        };
        for (int draw = 0; draw < 3; ++draw) {
          std::vector<int> alt = chunking(totals);
          if (!alt.empty() && score(alt) < score(sizes)) sizes = alt;
        }
      }
      if (seen.count(sizes)) continue;
      const double t = eval(sizes);
      produced = true;
      if (std::isfinite(t)) {
        const auto f = features(sizes);
        samples.push_back({f[0], f[1], t});
      }
      if (res.evaluations == guided_after && samples.size() >= 3) w = detail::fit_linear(samples);
    }
    stalls = produced ? 0 : stalls + 1;
  }

  std::vector<std::pair<double, std::vector<int>>> pool;
  for (const auto& [sizes, t] : seen)
    if (std::isfinite(t)) pool.emplace_back(t, sizes);
  std::sort(pool.begin(), pool.end());
  if (static_cast<int>(pool.size()) > budget.top_k) pool.resize(budget.top_k);

  for (const auto& entry : pool) {
    if (res.evaluations >= budget.max_evaluations || out_of_time()) break;
    std::vector<int> base = entry.second;
    for (int k = 0; k < budget.perturbations_m && res.evaluations < budget.max_evaluations; ++k) {
      std::uniform_int_distribution<int> pick(0, nc - 2);
      const int c = pick(rng);
      std::vector<int> next = base;
      const bool left = std::uniform_int_distribution<int>(0, 1)(rng) == 0;
      const int from = left ? c : c + 1;
      const int to = left ? c + 1 : c;
      if (next[from] <= 1) continue;
      --next[from];
      ++next[to];
      if (!capped(next) || seen.count(next)) continue;
      const double t = eval(next);
      if (t < entry.first) base = next;
    }
  }
  res.truncated = out_of_time();
  return res;
}

// Recommendations -------------------------------------------------------------------

struct NetworkRecommendation {
  LoadBalancing load_balancing = LoadBalancing::PacketSpraying;
  int required_qp_count = 0;
  bool congestion_control = true;
  bool selective_redundancy = false;
  bool imbalanced_chunking = false;
  std::string load_balancing_reason;
  std::string congestion_control_reason;
  std::string loss_mitigation_reason;
  std::string chunking_reason;
};

inline std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline NetworkRecommendation recommend_network(const Topology& topo,
                                               const ParallelismConfig& /*best*/,
                                               const Assumptions& a = {}) {
  NetworkRecommendation r;
  const double max_lat = topo.num_buildings() > 1 ? topo.max_cross_latency_us() : 0.0;
  const double rtt = 2.0 * us_to_s(max_lat);
  const double line = gbps_to_Bps(topo.cross_building.bandwidth_gbps /
                                  std::max(1.0, topo.cross_building.oversubscription));
  const double per_qp = static_cast<double>(topo.nic.max_inflight_packets) *
                        static_cast<double>(topo.nic.packet_payload);
  const double window_rate = rtt > 0.0 ? topo.nic.qp_count * per_qp / rtt : INFINITY;
  r.required_qp_count = rtt > 0.0 ? static_cast<int>(std::ceil(line * rtt / per_qp - 1e-9)) : 1;
  r.required_qp_count = std::max(1, r.required_qp_count);
  if (window_rate >= line) {
    r.load_balancing = LoadBalancing::PacketSpraying;
    r.load_balancing_reason = "window " + fmt_num(Bps_to_gbps(window_rate)) +
                              " Gbps >= line " + fmt_num(Bps_to_gbps(line)) + " Gbps";
  } else {
    r.load_balancing = LoadBalancing::ECMP;
    r.load_balancing_reason = "window " + fmt_num(Bps_to_gbps(window_rate)) + " Gbps < line " +
                              fmt_num(Bps_to_gbps(line)) + " Gbps; spraying needs >= " +
                              std::to_string(r.required_qp_count) + " QPs";
  }

  r.congestion_control = !(max_lat > a.cc_latency_threshold_us);
  r.congestion_control_reason = "max cross latency " + fmt_num(max_lat) + " us " +
                                (r.congestion_control ? "<= " : "> ") +
                                fmt_num(a.cc_latency_threshold_us) + " us";

  const double loss = topo.cross_building.loss_rate;
  r.selective_redundancy = max_lat > a.redundancy_latency_threshold_us && loss > 0.0;
  r.loss_mitigation_reason = "loss " + fmt_num(loss) + ", max cross latency " +
                             fmt_num(max_lat) + " us vs " +
                             fmt_num(a.redundancy_latency_threshold_us) + " us";

  double lo = INFINITY, hi = 0.0;
  for (int x = 0; x < topo.num_buildings(); ++x)
    for (int y = 0; y < topo.num_buildings(); ++y)
      if (x != y) {
        lo = std::min(lo, topo.building_latency_us(x, y));
        hi = std::max(hi, topo.building_latency_us(x, y));
      }
  const bool hetero = topo.num_buildings() > 2 && hi > lo;
  r.imbalanced_chunking = hetero && hi >= a.imbalance_latency_threshold_us;
  r.chunking_reason = std::string(hetero ? "heterogeneous" : "uniform") +
                      " cross latency, max " + fmt_num(topo.num_buildings() > 1 ? hi : 0.0) +
                      " us vs " + fmt_num(a.imbalance_latency_threshold_us) + " us";
  return r;
}

// Explore ---------------------------------------------------------------------------

struct ExplorationReport {
  std::vector<RankedConfig> ranked;
  NetworkRecommendation recommendation;
  Assumptions assumptions;
  SearchBudget budget;
  std::int64_t templates = 0;
  std::int64_t evaluations = 0;
  std::vector<int> ppout_stages;  // stage counts the PP-out branch evaluated
  std::map<std::string, std::int64_t> binding;  // filled when nothing is feasible
  bool truncated = false;

  bool feasible() const { return !ranked.empty(); }
  const RankedConfig& best() const { return ranked.front(); }
};

/// Enumerate, evaluate both placements per template, prune the PP-out branch
/// by stage count, refine the leading candidates' partitions, recommend.
inline ExplorationReport explore(const ModelSpec& m, const BatchSpec& batch, const Topology& topo,
                                 const SearchBudget& budget = {}, const ExploreOptions& opt = {},
                                 const Assumptions& a = {}) {
  ExplorationReport rep;
  rep.assumptions = a;
  rep.budget = budget;
  Enumeration en = enumerate_templates(m, batch, topo, opt, a);
  rep.templates = static_cast<std::int64_t>(en.templates.size());
  if (en.templates.empty()) {
    rep.binding = en.rejected;
    rep.recommendation = recommend_network(topo, {}, a);
    return rep;
  }

  const auto evals = parallel_map<Evaluation>(
      en.templates.size(),
      [&](std::size_t i) { return evaluate(m, en.batches[i], en.templates[i], topo, a); },
      opt.threads);
  rep.evaluations = static_cast<std::int64_t>(evals.size());

  const bool want_dp = std::find(opt.placements.begin(), opt.placements.end(),
                                 Placement::DPOut) != opt.placements.end();
  const bool want_pp = std::find(opt.placements.begin(), opt.placements.end(),
                                 Placement::PPOut) != opt.placements.end();

  std::vector<RankedConfig> cands;
  if (want_dp)
    for (const auto& e : evals)
      if (placement_applies(e.p, topo, Placement::DPOut))
        cands.push_back(ranked(e, Placement::DPOut));

  if (want_pp) {
    std::map<int, std::vector<std::size_t>> by_pp;
    for (std::size_t i = 0; i < evals.size(); ++i)
      if (placement_applies(evals[i].p, topo, Placement::PPOut)) by_pp[evals[i].p.pp].push_back(i);
    PruneState ps;
    for (const auto& [pp, idx] : by_pp) {
      double best = INFINITY;
      for (std::size_t i : idx) {
        cands.push_back(ranked(evals[i], Placement::PPOut));
        best = std::min(best, evals[i].t(Placement::PPOut));
      }
      ps.history.emplace_back(pp, best);
      rep.ppout_stages.push_back(pp);
      if (prune_ppout(ps) == PruneDecision::Stop) break;
    }
  }
  std::sort(cands.begin(), cands.end(), ranks_before);

  // Refine the leading distinct (template, placement) candidates.
  const std::size_t n_refine = std::min<std::size_t>(cands.size(), std::max(0, opt.refine_top));
  const auto refined = parallel_map<PartitionResult>(
      n_refine,
      [&](std::size_t i) {
        return mc_partition_search(m, cands[i].batch, cands[i].p, topo, budget, a, i + 1);
      },
      opt.threads);
  for (std::size_t i = 0; i < n_refine; ++i) {
    rep.evaluations += refined[i].evaluations;
    rep.truncated = rep.truncated || refined[i].truncated;
    if (!(refined[i].iteration_s < cands[i].iteration_s)) continue;
    ParallelismConfig p = cands[i].p;
    p.chunk_partition = refined[i].partition;
    RankedConfig rc = ranked(evaluate(m, cands[i].batch, p, topo, a), p.placement);
    rc.refined = true;
    cands.push_back(rc);
  }
  std::sort(cands.begin(), cands.end(), ranks_before);
  if (opt.report_top > 0 && static_cast<int>(cands.size()) > opt.report_top)
    cands.resize(opt.report_top);
  rep.ranked = std::move(cands);
  rep.recommendation = recommend_network(topo, rep.best().p, a);
  return rep;
}

}  // namespace scax
