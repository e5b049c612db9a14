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

#include <vector>

#include "scax/core.hpp"

namespace scax {

/// The worst link a group's ring traverses and its one-way latency.
struct LinkClass {
  Tier tier = Tier::IntraServer;
  double latency_us = 0.0;

  bool cross_building() const { return tier == Tier::CrossBuilding; }
  bool operator==(const LinkClass&) const = default;
};

inline LinkClass worse(const LinkClass& a, const LinkClass& b) {
  LinkClass out;
  out.tier = std::max(a.tier, b.tier);
  out.latency_us = std::max(a.latency_us, b.latency_us);
  return out;
}

/// Link classes traversed by each parallel dimension under one placement.
/// pp_boundary[s] links stage s and s+1; pp_wrap links the last stage back to
/// the first.
struct GroupPlacement {
  Placement placement = Placement::DPOut;
  LinkClass tp;
  LinkClass cp;
  LinkClass dp;
  LinkClass hsdp_shard;
  LinkClass hsdp_replica;
  std::vector<LinkClass> pp_boundary;
  LinkClass pp_wrap;

  /// Boundary index pp-1 denotes the wrap-around link.
  const LinkClass& boundary(int b) const {
    return b < static_cast<int>(pp_boundary.size()) ? pp_boundary[b] : pp_wrap;
  }
};

namespace detail {

struct Coord {
  int building = 0;
  int zone = 0;
  int server = 0;
};

inline Coord locate(const Topology& topo, int rank) {
  int base = 0;
  for (int b = 0; b < topo.num_buildings(); ++b) {
    const auto& bld = topo.buildings[b];
    if (rank < base + bld.gpu_count) {
      const int local = rank - base;
      const int per_zone = std::max(1, bld.gpu_count / std::max(1, bld.zones));
      return {b, local / per_zone, local / std::max(1, topo.gpus_per_server)};
    }
    base += bld.gpu_count;
  }
  throw ValidationError("rank " + std::to_string(rank) + " exceeds topology size " +
                        std::to_string(base));
}

inline LinkClass classify(const Topology& topo, int a, int b) {
  const Coord ca = locate(topo, a);
  const Coord cb = locate(topo, b);
  const auto tier_latency = [&](Tier t) { return topo.tier(t).latency_us; };
  if (ca.building != cb.building)
    return {Tier::CrossBuilding, topo.building_latency_us(ca.building, cb.building)};
  if (ca.zone != cb.zone) return {Tier::CrossZone, tier_latency(Tier::CrossZone)};
  if (ca.server != cb.server) return {Tier::IntraZone, tier_latency(Tier::IntraZone)};
  return {Tier::IntraServer, a == b ? 0.0 : tier_latency(Tier::IntraServer)};
}

/// Ring over members in order, including the closing hop.
inline LinkClass ring_class(const Topology& topo, const std::vector<int>& members) {
  LinkClass out;
  if (members.size() < 2) return out;
  for (std::size_t i = 0; i < members.size(); ++i)
    out = worse(out, classify(topo, members[i], members[(i + 1) % members.size()]));
  return out;
}

}  // namespace detail

/// Global rank of the GPU at (dp, pp, cp, tp) coordinates. TP is innermost,
/// CP next; the placement decides whether DP or PP is outermost.
inline int global_rank(const ParallelismConfig& p, Placement placement, int d, int s, int c,
                       int t) {
  if (placement == Placement::DPOut) return ((d * p.pp + s) * p.cp + c) * p.tp + t;
  return ((s * p.dp + d) * p.cp + c) * p.tp + t;
}

/// Maps every parallel dimension to the link class its collectives traverse.
/// Multi-member groups are evaluated over all replicas and the worst class
/// wins. Requires world size == topology size.
inline GroupPlacement resolve_placement(const ParallelismConfig& p, const Topology& topo,
                                        Placement placement) {
  GroupPlacement gp;
  gp.placement = placement;
  const auto rank = [&](int d, int s, int c, int t) {
    return global_rank(p, placement, d, s, c, t);
  };

  std::vector<int> members;
  for (int d = 0; d < p.dp; ++d) {
    for (int s = 0; s < p.pp; ++s) {
      for (int c = 0; c < p.cp; ++c) {
        members.clear();
        for (int t = 0; t < p.tp; ++t) members.push_back(rank(d, s, c, t));
        gp.tp = worse(gp.tp, detail::ring_class(topo, members));
      }
      members.clear();
      for (int c = 0; c < p.cp; ++c) members.push_back(rank(d, s, c, 0));
      gp.cp = worse(gp.cp, detail::ring_class(topo, members));
    }
  }

  for (int s = 0; s < p.pp; ++s) {
    members.clear();
    for (int d = 0; d < p.dp; ++d) members.push_back(rank(d, s, 0, 0));
    gp.dp = worse(gp.dp, detail::ring_class(topo, members));

    if (p.dp_scheme.hsdp()) {
      const int r = p.dp_scheme.replica_groups;
      const int sh = p.dp_scheme.shard_degree;
      for (int g = 0; g < r; ++g) {
        members.clear();
        for (int k = 0; k < sh; ++k) members.push_back(rank(g * sh + k, s, 0, 0));
        gp.hsdp_shard = worse(gp.hsdp_shard, detail::ring_class(topo, members));
      }
      for (int k = 0; k < sh; ++k) {
        members.clear();
        for (int g = 0; g < r; ++g) members.push_back(rank(g * sh + k, s, 0, 0));
        gp.hsdp_replica = worse(gp.hsdp_replica, detail::ring_class(topo, members));
      }
    }
  }

  const auto stage_pair = [&](int a, int b) {
    LinkClass out;
    for (int d = 0; d < p.dp; ++d)
      out = worse(out, detail::classify(topo, rank(d, a, 0, 0), rank(d, b, 0, 0)));
    return out;
  };
  for (int s = 0; s + 1 < p.pp; ++s) gp.pp_boundary.push_back(stage_pair(s, s + 1));
  if (p.pp > 1) gp.pp_wrap = stage_pair(p.pp - 1, 0);
  return gp;
}

}  // namespace scax
