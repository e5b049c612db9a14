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
#include <limits>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "scax/comm_volume.hpp"
#include "scax/core.hpp"
#include "scax/link_model.hpp"
#include "scax/model.hpp"
#include "scax/placement.hpp"

namespace scax {

enum class KernelKind { Compute, PPTransfer, DPCollective };
enum class DpLevel { Flat, Intra, Cross };

inline constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

inline int index_of(Placement p) { return p == Placement::DPOut ? 0 : 1; }
inline constexpr std::array<Placement, 2> kPlacements{Placement::DPOut, Placement::PPOut};

struct Kernel {
  int id = -1;
  KernelKind kind = KernelKind::Compute;
  int rank = 0;  // pipeline stage the kernel is issued from
  int chunk = -1;
  int microbatch = -1;
  Phase phase = Phase::Fwd;
  // transfers
  int boundary = -1;
  int peer = -1;
  bool backward = false;
  // DP collectives
  int layer = -1;
  Collective collective = Collective::AllGather;
  DpLevel level = DpLevel::Flat;

  double bytes = 0.0;
  std::array<double, 2> duration{kUnset, kUnset};  // by index_of(Placement)
  std::array<bool, 2> cross{false, false};

  double dur(Placement p) const { return duration[index_of(p)]; }
  bool is_comm() const { return kind != KernelKind::Compute; }

  std::string label() const {
    switch (kind) {
      case KernelKind::Compute:
        return std::string(to_string(phase)) + std::to_string(chunk) + "." +
               std::to_string(microbatch);
      case KernelKind::PPTransfer:
        return std::string(backward ? "Sb" : "Sf") + std::to_string(chunk) + "." +
               std::to_string(microbatch) + ">" + std::to_string(peer);
      case KernelKind::DPCollective: {
        const char* lvl = level == DpLevel::Cross ? "x" : "";
        return std::string(collective == Collective::AllGather       ? "AG"
                           : collective == Collective::ReduceScatter ? "RS"
                                                                     : "AR") +
               lvl + "L" + std::to_string(layer);
      }
    }
    return "?";
  }
};

struct KernelDAG {
  int pp = 1;
  int num_chunks = 0;
  std::int64_t microbatches = 0;
  Schedule schedule = Schedule::DoraPP;
  std::vector<Kernel> kernels;
  std::vector<std::vector<int>> parents;
  /// Compute kernel ids per rank in issue order.
  std::vector<std::vector<int>> rank_compute;
  /// Concurrent comm streams per [rank][placement][tier]; the fair-share
  /// divisor applied to kernels on that tier.
  std::vector<std::array<std::array<int, 4>, 2>> streams;

  int add(Kernel k) {
    k.id = static_cast<int>(kernels.size());
    kernels.push_back(k);
    parents.emplace_back();
    return k.id;
  }
  void edge(int child, int parent) {
    if (child < 0 || parent < 0) return;
    auto& ps = parents[child];
    if (std::find(ps.begin(), ps.end(), parent) == ps.end()) ps.push_back(parent);
  }
  std::size_t size() const { return kernels.size(); }
  std::size_t count(KernelKind k) const {
    return static_cast<std::size_t>(std::count_if(
        kernels.begin(), kernels.end(), [&](const Kernel& x) { return x.kind == k; }));
  }
};

/// Link classes for both placements of one config.
struct PlacementMap {
  Topology topo;
  std::array<GroupPlacement, 2> groups;

  const GroupPlacement& operator[](Placement p) const { return groups[index_of(p)]; }
};

inline PlacementMap make_placement_map(const ParallelismConfig& p, const Topology& topo) {
  return {topo,
          {resolve_placement(p, topo, Placement::DPOut),
           resolve_placement(p, topo, Placement::PPOut)}};
}

// Issue order ------------------------------------------------------------------

struct Slot {
  int chunk;
  int microbatch;
  Phase phase;
  bool operator==(const Slot&) const = default;
};

inline int inflight_cap(Schedule s, int pp, int stage, int chunks_per_stage) {
  if (s == Schedule::OneFOneB) return pp - stage;
  return (pp - stage - 1) * 2 + (chunks_per_stage - 1) * pp + 1;
}

/// Per-rank compute issue order from a greedy list simulation using compute
/// durations only. Input-gradient kernels go first, forwards are admitted up
/// to the in-flight cap, weight-gradient kernels fill idle slots and jump the
/// queue once the pending backlog reaches the rank's chunk count.
inline std::vector<std::vector<Slot>> issue_order(const ParallelismConfig& p, std::int64_t mb,
                                                  const std::vector<double>& fwd,
                                                  const std::vector<double>& bwd,
                                                  const std::vector<double>& wgt) {
  const int pp = p.pp;
  const auto& st = p.chunk_partition.chunk_stage;
  const int nc = static_cast<int>(st.size());
  const bool fused = p.schedule == Schedule::OneFOneB;
  const Phase bphase = fused ? Phase::BwdFused : Phase::BwdDx;
  constexpr double kNone = std::numeric_limits<double>::infinity();

  std::vector<std::vector<int>> on_rank(pp);
  for (int c = 0; c < nc; ++c) on_rank[st[c]].push_back(c);

  std::vector<std::vector<double>> f_done(nc, std::vector<double>(mb, kNone));
  std::vector<std::vector<double>> b_done(nc, std::vector<double>(mb, kNone));
  std::vector<int> next_f(nc, 0), next_b(nc, 0);
  std::vector<std::vector<std::pair<int, int>>> w_queue(pp);
  std::vector<std::size_t> w_head(pp, 0);
  std::vector<int> inflight(pp, 0);
  std::vector<double> t(pp, 0.0);
  std::vector<bool> blocked(pp, false);
  std::vector<std::int64_t> remaining(pp);
  for (int r = 0; r < pp; ++r)
    remaining[r] = static_cast<std::int64_t>(on_rank[r].size()) * mb * (fused ? 2 : 3);

  std::vector<std::vector<Slot>> order(pp);

  const auto f_ready = [&](int c, int j) {
    return c == 0 ? 0.0 : f_done[c - 1][j];
  };
  const auto b_ready = [&](int c, int j) {
    const double own = f_done[c][j];
    const double up = c == nc - 1 ? 0.0 : b_done[c + 1][j];
    return std::max(own, up);
  };
  using Key = std::tuple<std::int64_t, int, std::int64_t>;

  struct Pick {
    int chunk = -1;
    double ready = kNone;
    Key key{};
  };

  const auto best_b = [&](int r) {
    Pick out;
    for (int c : on_rank[r]) {
      const int j = next_b[c];
      if (j >= mb) continue;
      const double rt = b_ready(c, j);
      const Key key{j / pp, -c, j};
      if (rt < out.ready || (rt == out.ready && key < out.key)) out = {c, rt, key};
    }
    return out;
  };
  const auto best_f = [&](int r, bool ignore_cap) {
    Pick out;
    const int cap = inflight_cap(p.schedule, pp, r, static_cast<int>(on_rank[r].size()));
    if (!ignore_cap && inflight[r] >= cap) return out;
    for (int c : on_rank[r]) {
      const int j = next_f[c];
      if (j >= mb) continue;
      const double rt = f_ready(c, j);
      const Key key{j / pp, c, j};
      if (rt < out.ready || (rt == out.ready && key < out.key)) out = {c, rt, key};
    }
    return out;
  };
  // Among candidates available by time `now`, choose by key instead of ready time.
  const auto pick_avail = [&](int r, bool is_b, bool ignore_cap, double now) {
    Pick out;
    const int cap = inflight_cap(p.schedule, pp, r, static_cast<int>(on_rank[r].size()));
    if (!is_b && !ignore_cap && inflight[r] >= cap) return out;
    for (int c : on_rank[r]) {
      const int j = is_b ? next_b[c] : next_f[c];
      if (j >= mb) continue;
      const double rt = is_b ? b_ready(c, j) : f_ready(c, j);
      if (rt > now) continue;
      const Key key = is_b ? Key{j / pp, -c, j} : Key{j / pp, c, j};
      if (out.chunk < 0 || key < out.key) out = {c, rt, key};
    }
    return out;
  };

  const auto run = [&](int r, Slot s, double dur) {
    order[r].push_back(s);
    const double fin = t[r] + dur;
    if (s.phase == Phase::Fwd) {
      f_done[s.chunk][s.microbatch] = fin;
      ++next_f[s.chunk];
      ++inflight[r];
    } else if (s.phase == Phase::BwdDw) {
      ++w_head[r];
    } else {
      b_done[s.chunk][s.microbatch] = fin;
      ++next_b[s.chunk];
      --inflight[r];
      if (!fused) w_queue[r].emplace_back(s.chunk, s.microbatch);
    }
    t[r] = fin;
    --remaining[r];
    std::fill(blocked.begin(), blocked.end(), false);
  };

  const auto step = [&](int r, bool ignore_cap) -> bool {
    const std::size_t backlog = w_queue[r].size() - w_head[r];
    if (!fused && backlog > 0 && backlog >= on_rank[r].size()) {
      const auto [c, j] = w_queue[r][w_head[r]];
      run(r, {c, j, Phase::BwdDw}, wgt[c]);
      return true;
    }
    if (Pick b = pick_avail(r, true, false, t[r]); b.chunk >= 0) {
      run(r, {b.chunk, next_b[b.chunk], bphase}, bwd[b.chunk]);
      return true;
    }
    if (Pick f = pick_avail(r, false, ignore_cap, t[r]); f.chunk >= 0) {
      run(r, {f.chunk, next_f[f.chunk], Phase::Fwd}, fwd[f.chunk]);
      return true;
    }
    if (backlog > 0) {
      const auto [c, j] = w_queue[r][w_head[r]];
      run(r, {c, j, Phase::BwdDw}, wgt[c]);
      return true;
    }
    const double next = std::min(best_b(r).ready, best_f(r, ignore_cap).ready);
    if (next < kNone) {
      t[r] = next;
      return true;
    }
    return false;
  };

  for (;;) {
    int r = -1;
    for (int i = 0; i < pp; ++i)
      if (remaining[i] > 0 && !blocked[i] && (r < 0 || t[i] < t[r])) r = i;
    if (r < 0) {
      bool any_left = false;
      for (int i = 0; i < pp; ++i) any_left = any_left || remaining[i] > 0;
      if (!any_left) break;
      // Every rank waits: admit one forward past its cap on the earliest rank.
      int relax = -1;
      for (int i = 0; i < pp; ++i)
        if (remaining[i] > 0 && best_f(i, true).ready < kNone && (relax < 0 || t[i] < t[relax]))
          relax = i;
      if (relax < 0) throw StructuralError("schedule simulation deadlocked");
      if (!step(relax, true)) throw StructuralError("schedule simulation deadlocked");
      continue;
    }
    if (!step(r, false)) blocked[r] = true;
  }
  return order;
}

/// Renders one rank's issue order as space-separated labels, e.g. "F0.0 X4.0 W4.0".
inline std::string order_string(const std::vector<Slot>& slots) {
  std::string out;
  for (const auto& s : slots) {
    if (!out.empty()) out += ' ';
    out += std::string(to_string(s.phase)) + std::to_string(s.chunk) + "." +
           std::to_string(s.microbatch);
  }
  return out;
}

// DAG construction ---------------------------------------------------------------

namespace detail {

inline void require_layout(const ParallelismConfig& p, Schedule expect) {
  if (p.schedule != expect)
    throw ValidationError(std::string("builder expects schedule ") +
                          std::string(to_string(expect)));
  const auto& cp = p.chunk_partition;
  if (cp.chunk_sizes.size() != cp.chunk_stage.size() || cp.chunk_sizes.empty())
    throw ValidationError("chunk partition is malformed");
  if (chunk_stages(expect, cp.num_chunks(), p.pp) != cp.chunk_stage) {
    switch (expect) {
      case Schedule::OneFOneB:
        throw ValidationError("1F1B requires exactly one chunk per stage");
      case Schedule::DoraPP:
        throw ValidationError("DoraPP requires round-robin chunk assignment");
      case Schedule::InterleavedZBV:
        throw ValidationError("ZBV requires a V-shaped chunk assignment (2*pp*k chunks)");
    }
  }
}

inline int tier_index(const LinkClass& lc) { return static_cast<int>(lc.tier); }

inline std::vector<std::array<std::array<int, 4>, 2>> count_streams(const ParallelismConfig& p,
                                                                    const PlacementMap& pm) {
  const int pp = p.pp;
  std::vector<std::array<std::array<int, 4>, 2>> out(pp);
  for (auto& a : out)
    for (auto& b : a) b.fill(0);
  const auto& st = p.chunk_partition.chunk_stage;
  for (Placement pl : kPlacements) {
    const GroupPlacement& gp = pm[pl];
    const int pi = index_of(pl);
    for (int r = 0; r < pp; ++r) {
      std::vector<int> peers;
      for (std::size_t c = 0; c + 1 < st.size(); ++c) {
        if (st[c] == r && st[c + 1] != r) peers.push_back(st[c + 1]);
        if (st[c + 1] == r && st[c] != r) peers.push_back(st[c]);
      }
      std::sort(peers.begin(), peers.end());
      peers.erase(std::unique(peers.begin(), peers.end()), peers.end());
      for (int peer : peers) {
        // Forward and backward hops to the same peer may use different boundaries;
        // take the one a forward hop would use.
        int b = -1;
        for (std::size_t c = 0; c + 1 < st.size() && b < 0; ++c) {
          if (st[c] == r && st[c + 1] == peer) b = hop_boundary(p.schedule, pp, r, peer);
          if (st[c] == peer && st[c + 1] == r) b = hop_boundary(p.schedule, pp, peer, r);
        }
        ++out[r][pi][tier_index(gp.boundary(b))];
      }
      if (p.dp > 1) {
        if (p.dp_scheme.hsdp()) {
          ++out[r][pi][tier_index(gp.hsdp_shard)];
          ++out[r][pi][tier_index(gp.hsdp_replica)];
        } else {
          ++out[r][pi][tier_index(gp.dp)];
        }
      }
    }
  }
  return out;
}

}  // namespace detail

/// Compute kernels, stream chains and PP transfers for a validated layout.
inline KernelDAG build_pipeline(const ModelSpec& model, const BatchSpec& batch,
                                const ParallelismConfig& p, const PlacementMap& pm,
                                const Assumptions& a) {
  const std::int64_t mb = num_microbatches(batch, p);
  const auto& cpart = p.chunk_partition;
  const int nc = cpart.num_chunks();
  const bool fused = p.schedule == Schedule::OneFOneB;

  std::vector<double> fwd(nc), bwd(nc), wgt(nc);
  for (int c = 0; c < nc; ++c) {
    const int layers = cpart.chunk_sizes[c];
    fwd[c] = chunk_compute_time(model, layers, batch.microbatch_size, p, Phase::Fwd, pm.topo.gpu, a);
    bwd[c] = chunk_compute_time(model, layers, batch.microbatch_size, p,
                                fused ? Phase::BwdFused : Phase::BwdDx, pm.topo.gpu, a);
    wgt[c] = fused ? 0.0
                   : chunk_compute_time(model, layers, batch.microbatch_size, p, Phase::BwdDw,
                                        pm.topo.gpu, a);
  }

  KernelDAG dag;
  dag.pp = p.pp;
  dag.num_chunks = nc;
  dag.microbatches = mb;
  dag.schedule = p.schedule;
  dag.rank_compute.assign(p.pp, {});
  dag.streams = detail::count_streams(p, pm);

  const auto order = issue_order(p, mb, fwd, bwd, wgt);

  // ids[c][j][0..2] = F, B/dx, dw
  std::vector<std::vector<std::array<int, 3>>> ids(
      nc, std::vector<std::array<int, 3>>(mb, {-1, -1, -1}));
  for (int r = 0; r < p.pp; ++r) {
    int prev = -1;
    for (const Slot& s : order[r]) {
      Kernel k;
      k.kind = KernelKind::Compute;
      k.rank = r;
      k.chunk = s.chunk;
      k.microbatch = s.microbatch;
      k.phase = s.phase;
      const double d = s.phase == Phase::Fwd     ? fwd[s.chunk]
                       : s.phase == Phase::BwdDw ? wgt[s.chunk]
                                                 : bwd[s.chunk];
      k.duration = {d, d};
      const int id = dag.add(k);
      const int slot = s.phase == Phase::Fwd ? 0 : s.phase == Phase::BwdDw ? 2 : 1;
      ids[s.chunk][s.microbatch][slot] = id;
      dag.rank_compute[r].push_back(id);
      dag.edge(id, prev);
      prev = id;
    }
  }

  const auto& st = cpart.chunk_stage;
  const double p2p_bytes =
      static_cast<double>(pp_p2p_elements(model, batch, p) * model.bytes_per_element);
  // Transfer kernel emitted by each producing compute kernel, if any.
  std::vector<int> transfer_of(dag.size(), -1);
  std::map<std::pair<int, int>, int> last_on_stream;
  for (int r = 0; r < p.pp; ++r) {
    for (int id : std::vector<int>(dag.rank_compute[r])) {
      const Kernel src = dag.kernels[id];
      int dst_chunk = -1;
      bool backward = false;
      if (src.phase == Phase::Fwd && src.chunk + 1 < nc) {
        dst_chunk = src.chunk + 1;
      } else if ((src.phase == Phase::BwdDx || src.phase == Phase::BwdFused) && src.chunk > 0) {
        dst_chunk = src.chunk - 1;
        backward = true;
      }
      if (dst_chunk < 0 || st[dst_chunk] == r) continue;
      const int peer = st[dst_chunk];
      Kernel t;
      t.kind = KernelKind::PPTransfer;
      t.rank = r;
      t.chunk = src.chunk;
      t.microbatch = src.microbatch;
      t.peer = peer;
      t.backward = backward;
      t.boundary = backward ? hop_boundary(p.schedule, p.pp, peer, r)
                            : hop_boundary(p.schedule, p.pp, r, peer);
      t.bytes = p2p_bytes;
      for (Placement pl : kPlacements) {
        const LinkClass& lc = pm[pl].boundary(t.boundary);
        const int pi = index_of(pl);
        const double share = dag.streams[r][pi][detail::tier_index(lc)];
        t.duration[pi] = p2p_time(p2p_bytes, make_link(pm.topo, lc), share);
        t.cross[pi] = lc.cross_building();
      }
      const int tid = dag.add(t);
      transfer_of.push_back(-1);
      transfer_of[id] = tid;
      dag.edge(tid, id);
      auto [it, fresh] = last_on_stream.try_emplace({r, peer}, tid);
      if (!fresh) {
        dag.edge(tid, it->second);
        it->second = tid;
      }
    }
  }

  const auto via = [&](int producer) {
    return transfer_of[producer] >= 0 ? transfer_of[producer] : producer;
  };
  for (int c = 0; c < nc; ++c) {
    for (std::int64_t j = 0; j < mb; ++j) {
      const auto& k = ids[c][j];
      if (c > 0) dag.edge(k[0], via(ids[c - 1][j][0]));
      dag.edge(k[1], k[0]);
      if (c + 1 < nc) dag.edge(k[1], via(ids[c + 1][j][1]));
      if (!fused) dag.edge(k[2], k[1]);
    }
  }
  return dag;
}

/// Adds per-layer DP collectives. FSDP: AllGather and ReduceScatter over the
/// whole DP group. HSDP: both inside the shard group, plus an AllReduce of
/// the shard across replica groups on a second stream.
inline void attach_dp(KernelDAG& dag, const ModelSpec& model, const ParallelismConfig& p,
                      const PlacementMap& pm) {
  if (p.dp <= 1) return;
  const auto& cpart = p.chunk_partition;
  const int nc = cpart.num_chunks();
  std::vector<int> first_layer(nc, 0);
  for (int c = 1; c < nc; ++c) first_layer[c] = first_layer[c - 1] + cpart.chunk_sizes[c - 1];

  const bool hsdp = p.dp_scheme.hsdp();
  const int group = hsdp ? p.dp_scheme.shard_degree : p.dp;
  const int replicas = hsdp ? p.dp_scheme.replica_groups : 1;
  const double v = static_cast<double>(dp_layer_elements(model, p) * model.bytes_per_element);

  const auto make = [&](int rank, int layer, Collective coll, DpLevel level) {
    Kernel k;
    k.kind = KernelKind::DPCollective;
    k.rank = rank;
    k.layer = layer;
    k.collective = coll;
    k.level = level;
    const bool cross_level = level == DpLevel::Cross;
    k.bytes = cross_level ? 2.0 * v / group : v;
    for (Placement pl : kPlacements) {
      const GroupPlacement& gp = pm[pl];
      const LinkClass& lc = !hsdp ? gp.dp : cross_level ? gp.hsdp_replica : gp.hsdp_shard;
      const int pi = index_of(pl);
      const double share = dag.streams[rank][pi][detail::tier_index(lc)];
      const LinkProfile link = make_link(pm.topo, lc);
      k.duration[pi] = cross_level ? collective_time(coll, v / group, replicas, link, share)
                                   : collective_time(coll, v, group, link, share);
      k.cross[pi] = lc.cross_building() && (cross_level ? replicas > 1 : group > 1);
    }
    return dag.add(k);
  };

  for (int r = 0; r < p.pp; ++r) {
    const auto& seq = dag.rank_compute[r];
    std::vector<int> first_f(nc, -1), last_b(nc, -1);
    std::vector<int> chunk_fwd_order, chunk_bwd_order;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const Kernel& k = dag.kernels[seq[i]];
      if (k.phase == Phase::Fwd && first_f[k.chunk] < 0) {
        first_f[k.chunk] = static_cast<int>(i);
        chunk_fwd_order.push_back(k.chunk);
      }
      const bool grad_done =
          k.phase == Phase::BwdDw || k.phase == Phase::BwdFused;
      if (grad_done) last_b[k.chunk] = static_cast<int>(i);
    }
    for (int c = 0; c < nc; ++c)
      if (last_b[c] >= 0) chunk_bwd_order.push_back(c);
    std::sort(chunk_bwd_order.begin(), chunk_bwd_order.end(),
              [&](int a, int b) { return last_b[a] < last_b[b]; });

    const DpLevel lvl = hsdp ? DpLevel::Intra : DpLevel::Flat;
    int prev = -1;
    for (std::size_t n = 0; n < chunk_fwd_order.size(); ++n) {
      const int c = chunk_fwd_order[n];
      int last = -1;
      for (int l = 0; l < cpart.chunk_sizes[c]; ++l) {
        const int id = make(r, first_layer[c] + l, Collective::AllGather, lvl);
        dag.edge(id, prev);
        if (l == 0 && n > 0) {
          // Prefetch at most one chunk ahead of the compute stream.
          const int gate = first_f[chunk_fwd_order[n - 1]] - 1;
          if (gate >= 0) dag.edge(id, seq[gate]);
        }
        prev = last = id;
      }
      dag.edge(seq[first_f[c]], last);
    }
    int prev_x = -1;
    for (int c : chunk_bwd_order) {
      for (int l = cpart.chunk_sizes[c] - 1; l >= 0; --l) {
        const int id = make(r, first_layer[c] + l, Collective::ReduceScatter, lvl);
        dag.edge(id, prev);
        dag.edge(id, seq[last_b[c]]);
        prev = id;
        if (hsdp) {
          const int x = make(r, first_layer[c] + l, Collective::AllReduce, DpLevel::Cross);
          dag.edge(x, id);
          dag.edge(x, prev_x);
          prev_x = x;
        }
      }
    }
  }
}

inline KernelDAG build_dorapp(const ModelSpec& model, const BatchSpec& batch,
                              const ParallelismConfig& p, const PlacementMap& pm,
                              const Assumptions& a = {}) {
  detail::require_layout(p, Schedule::DoraPP);
  return build_pipeline(model, batch, p, pm, a);
}

inline KernelDAG build_zbv(const ModelSpec& model, const BatchSpec& batch,
                           const ParallelismConfig& p, const PlacementMap& pm,
                           const Assumptions& a = {}) {
  detail::require_layout(p, Schedule::InterleavedZBV);
  return build_pipeline(model, batch, p, pm, a);
}

inline KernelDAG build_1f1b(const ModelSpec& model, const BatchSpec& batch,
                            const ParallelismConfig& p, const PlacementMap& pm,
                            const Assumptions& a = {}) {
  detail::require_layout(p, Schedule::OneFOneB);
  return build_pipeline(model, batch, p, pm, a);
}

/// Full DAG (pipeline plus DP collectives) for the config's schedule.
inline KernelDAG build_dag(const ModelSpec& model, const BatchSpec& batch,
                           const ParallelismConfig& p, const PlacementMap& pm,
                           const Assumptions& a = {}) {
  KernelDAG dag;
  switch (p.schedule) {
    case Schedule::DoraPP: dag = build_dorapp(model, batch, p, pm, a); break;
    case Schedule::InterleavedZBV: dag = build_zbv(model, batch, p, pm, a); break;
    case Schedule::OneFOneB: dag = build_1f1b(model, batch, p, pm, a); break;
  }
  attach_dp(dag, model, p, pm);
  return dag;
}

inline KernelDAG build_dag(const ModelSpec& model, const BatchSpec& batch,
                           const ParallelismConfig& p, const Topology& topo,
                           const Assumptions& a = {}) {
  return build_dag(model, batch, p, make_placement_map(p, topo), a);
}

}  // namespace scax
