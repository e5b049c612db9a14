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

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "scax/core.hpp"
#include "scax/model.hpp"

namespace scax {

using json = nlohmann::ordered_json;

// Strict reader: every field access is recorded so leftovers can be rejected.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  std::string at(const std::string& key) const { return path_ + "." + key; }

  const json& raw(const std::string& key) {
    if (!j_.contains(key)) fail(at(key), "missing required field");
    used_.insert(key);
    return j_.at(key);
  }

  std::int64_t integer(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_integer()) fail(at(key), "expected an integer");
    return v.get<std::int64_t>();
  }
  std::int64_t integer(const std::string& key, std::int64_t def) {
    return has(key) ? integer(key) : def;
  }
  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) fail(at(key), "expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double def) { return has(key) ? number(key) : def; }
  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    const json& v = raw(key);
    if (!v.is_boolean()) fail(at(key), "expected true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) fail(at(key), "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& def) {
    return has(key) ? string(key) : def;
  }
  std::vector<int> ints(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) fail(at(key), "expected an array");
    std::vector<int> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer()) fail(at(key) + "[" + std::to_string(i) + "]", "expected an integer");
      out.push_back(v[i].get<int>());
    }
    return out;
  }
  Reader child(const std::string& key) { return Reader(raw(key), at(key)); }

  /// Rejects fields that were never read.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) fail(at(it.key()), "unknown field");
  }

  [[noreturn]] static void fail(const std::string& path, const std::string& what) {
    throw InputError(path + ": " + what);
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

// Enums ---------------------------------------------------------------------------

inline Placement parse_placement(const std::string& s, const std::string& path) {
  if (s == "DPOut") return Placement::DPOut;
  if (s == "PPOut") return Placement::PPOut;
  Reader::fail(path, "expected DPOut or PPOut, got '" + s + "'");
}

inline Schedule parse_schedule(const std::string& s, const std::string& path) {
  if (s == "OneFOneB") return Schedule::OneFOneB;
  if (s == "DoraPP") return Schedule::DoraPP;
  if (s == "InterleavedZBV") return Schedule::InterleavedZBV;
  Reader::fail(path, "expected OneFOneB, DoraPP or InterleavedZBV, got '" + s + "'");
}

inline LoadBalancing parse_lb(const std::string& s, const std::string& path) {
  if (s == "ECMP") return LoadBalancing::ECMP;
  if (s == "PacketSpraying") return LoadBalancing::PacketSpraying;
  Reader::fail(path, "expected ECMP or PacketSpraying, got '" + s + "'");
}

// Readers ---------------------------------------------------------------------------

inline ModelSpec read_model(Reader r) {
  ModelSpec m;
  m.num_layers = r.integer("num_layers");
  m.hidden_dim = r.integer("hidden_dim");
  m.seq_len = r.integer("seq_len");
  m.num_experts = r.integer("num_experts", 0);
  m.ffn_dim = r.integer("ffn_dim", 0);
  m.expert_ffn_dim = r.integer("expert_ffn_dim", 0);
  m.top_k = r.integer("top_k", 0);
  m.bytes_per_element = r.integer("bytes_per_element", 2);
  r.finish();
  const auto need = [&](bool ok, const char* key, const char* what) {
    if (!ok) Reader::fail(r.at(key), what);
  };
  need(m.num_layers > 0, "num_layers", "must be > 0");
  need(m.hidden_dim > 0, "hidden_dim", "must be > 0");
  need(m.seq_len > 0, "seq_len", "must be > 0");
  need(m.num_experts >= 0, "num_experts", "must be >= 0");
  need(m.bytes_per_element > 0, "bytes_per_element", "must be > 0");
  if (m.is_moe()) {
    need(m.expert_ffn_dim > 0, "expert_ffn_dim", "must be > 0 for MoE models");
    need(m.top_k >= 1 && m.top_k <= m.num_experts, "top_k", "must be in [1, num_experts]");
  } else {
    need(m.ffn_dim > 0, "ffn_dim", "must be > 0 for dense models");
  }
  return m;
}

inline BatchSpec read_batch(Reader r) {
  BatchSpec b;
  b.global_batch_size = r.integer("global_batch_size");
  b.microbatch_size = r.integer("microbatch_size");
  r.finish();
  if (b.microbatch_size < 1) Reader::fail(r.at("microbatch_size"), "must be >= 1");
  if (b.global_batch_size < b.microbatch_size)
    Reader::fail(r.at("global_batch_size"), "must be >= microbatch_size");
  return b;
}

inline LinkTier read_tier(Reader r, LinkTier t) {
  t.bandwidth_gbps = r.number("bandwidth_gbps", t.bandwidth_gbps);
  t.latency_us = r.number("latency_us", t.latency_us);
  t.loss_rate = r.number("loss_rate", t.loss_rate);
  t.oversubscription = r.number("oversubscription", t.oversubscription);
  r.finish();
  if (!(t.bandwidth_gbps > 0)) Reader::fail(r.at("bandwidth_gbps"), "must be > 0");
  if (!(t.latency_us >= 0)) Reader::fail(r.at("latency_us"), "must be >= 0");
  if (!(t.loss_rate >= 0 && t.loss_rate < 1)) Reader::fail(r.at("loss_rate"), "must be in [0, 1)");
  if (!(t.oversubscription >= 1)) Reader::fail(r.at("oversubscription"), "must be >= 1 (1:x)");
  return t;
}

inline Topology read_topology(Reader r) {
  Topology t;
  {
    const json& arr = r.raw("buildings");
    if (!arr.is_array() || arr.empty()) Reader::fail(r.at("buildings"), "expected a non-empty array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Reader b(arr[i], r.at("buildings") + "[" + std::to_string(i) + "]");
      Building bld;
      bld.gpu_count = static_cast<int>(b.integer("gpu_count"));
      bld.zones = static_cast<int>(b.integer("zones", 1));
      b.finish();
      if (bld.gpu_count < 1) Reader::fail(b.at("gpu_count"), "must be >= 1");
      if (bld.zones < 1 || bld.gpu_count % bld.zones != 0)
        Reader::fail(b.at("zones"), "must be >= 1 and divide gpu_count");
      t.buildings.push_back(bld);
    }
  }
  t.gpus_per_server = static_cast<int>(r.integer("gpus_per_server", t.gpus_per_server));
  if (t.gpus_per_server < 1) Reader::fail(r.at("gpus_per_server"), "must be >= 1");
  if (r.has("intra_server")) t.intra_server = read_tier(r.child("intra_server"), t.intra_server);
  if (r.has("intra_zone")) t.intra_zone = read_tier(r.child("intra_zone"), t.intra_zone);
  if (r.has("cross_zone")) t.cross_zone = read_tier(r.child("cross_zone"), t.cross_zone);
  if (r.has("cross_building"))
    t.cross_building = read_tier(r.child("cross_building"), t.cross_building);
  if (r.has("cross_building_latency_us")) {
    const std::string path = r.at("cross_building_latency_us");
    const json& mat = r.raw("cross_building_latency_us");
    const std::size_t nb = t.buildings.size();
    if (!mat.is_array() || mat.size() != nb) Reader::fail(path, "expected an NxN matrix");
    t.cross_building_latency_us.assign(nb, std::vector<double>(nb, 0.0));
    for (std::size_t a = 0; a < nb; ++a) {
      if (!mat[a].is_array() || mat[a].size() != nb) Reader::fail(path, "expected an NxN matrix");
      for (std::size_t b = 0; b < nb; ++b) {
        if (!mat[a][b].is_number())
          Reader::fail(path + "[" + std::to_string(a) + "][" + std::to_string(b) + "]",
                       "expected a number");
        t.cross_building_latency_us[a][b] = mat[a][b].get<double>();
      }
    }
    for (std::size_t a = 0; a < nb; ++a)
      for (std::size_t b = 0; b < nb; ++b) {
        const double v = t.cross_building_latency_us[a][b];
        if (v < 0) Reader::fail(path, "latencies must be >= 0");
        if (a == b && v != 0) Reader::fail(path, "diagonal must be zero");
        if (v != t.cross_building_latency_us[b][a]) Reader::fail(path, "matrix must be symmetric");
      }
  }
  if (r.has("nic")) {
    Reader n = r.child("nic");
    t.nic.packet_payload = n.integer("packet_payload", t.nic.packet_payload);
    t.nic.max_inflight_packets = n.integer("max_inflight_packets", t.nic.max_inflight_packets);
    t.nic.qp_count = static_cast<int>(n.integer("qp_count", t.nic.qp_count));
    if (n.has("load_balancing"))
      t.nic.load_balancing = parse_lb(n.string("load_balancing"), n.at("load_balancing"));
    t.nic.ecmp_flows = static_cast<int>(n.integer("ecmp_flows", t.nic.ecmp_flows));
    t.nic.ecmp_paths = static_cast<int>(n.integer("ecmp_paths", t.nic.ecmp_paths));
    n.finish();
    if (t.nic.packet_payload < 1) Reader::fail(n.at("packet_payload"), "must be >= 1");
    if (t.nic.max_inflight_packets < 1) Reader::fail(n.at("max_inflight_packets"), "must be >= 1");
    if (t.nic.qp_count < 1) Reader::fail(n.at("qp_count"), "must be >= 1");
    if (t.nic.ecmp_flows < 1) Reader::fail(n.at("ecmp_flows"), "must be >= 1");
    if (t.nic.ecmp_paths < 1) Reader::fail(n.at("ecmp_paths"), "must be >= 1");
  }
  if (r.has("gpu")) {
    Reader g = r.child("gpu");
    t.gpu.hbm_bytes = g.number("hbm_bytes", t.gpu.hbm_bytes);
    t.gpu.effective_flops = g.number("effective_flops", t.gpu.effective_flops);
    g.finish();
    if (!(t.gpu.hbm_bytes > 0)) Reader::fail(g.at("hbm_bytes"), "must be > 0");
    if (!(t.gpu.effective_flops > 0)) Reader::fail(g.at("effective_flops"), "must be > 0");
  }
  r.finish();
  return t;
}

inline ParallelismConfig read_parallelism(Reader r) {
  ParallelismConfig p;
  p.tp = static_cast<int>(r.integer("tp"));
  p.cp = static_cast<int>(r.integer("cp", 1));
  p.ep = static_cast<int>(r.integer("ep", 1));
  p.pp = static_cast<int>(r.integer("pp"));
  p.dp = static_cast<int>(r.integer("dp"));
  p.placement = parse_placement(r.string("placement", "DPOut"), r.at("placement"));
  p.schedule = parse_schedule(r.string("schedule", "DoraPP"), r.at("schedule"));
  if (r.has("dp_scheme")) {
    Reader d = r.child("dp_scheme");
    const std::string kind = d.string("kind");
    if (kind == "FSDP") {
      p.dp_scheme.kind = DpScheme::Kind::FSDP;
    } else if (kind == "HSDP") {
      p.dp_scheme.kind = DpScheme::Kind::HSDP;
      p.dp_scheme.replica_groups = static_cast<int>(d.integer("replica_groups"));
      p.dp_scheme.shard_degree = static_cast<int>(d.integer("shard_degree"));
    } else {
      Reader::fail(d.at("kind"), "expected FSDP or HSDP, got '" + kind + "'");
    }
    d.finish();
  }
  for (auto [key, v] : {std::pair<const char*, int>{"tp", p.tp}, {"cp", p.cp}, {"ep", p.ep},
                        {"pp", p.pp}, {"dp", p.dp}})
    if (v < 1) Reader::fail(r.at(key), "must be >= 1");
  Reader c = r.child("chunk_partition");
  p.chunk_partition.chunk_sizes = c.ints("chunk_sizes");
  if (c.has("chunk_stage")) {
    p.chunk_partition.chunk_stage = c.ints("chunk_stage");
  } else {
    p.chunk_partition.chunk_stage =
        chunk_stages(p.schedule, p.chunk_partition.num_chunks(), p.pp);
    if (p.chunk_partition.chunk_stage.empty())
      Reader::fail(c.at("chunk_sizes"), "chunk count does not fit the schedule's layout");
  }
  c.finish();
  r.finish();
  return p;
}

inline Assumptions read_assumptions(Reader r) {
  Assumptions a;
  a.param_bytes = r.number("param_bytes", a.param_bytes);
  a.grad_bytes = r.number("grad_bytes", a.grad_bytes);
  a.optimizer_bytes = r.number("optimizer_bytes", a.optimizer_bytes);
  a.activation_factor = r.number("activation_factor", a.activation_factor);
  a.activation_tp_sharded = r.boolean("activation_tp_sharded", a.activation_tp_sharded);
  a.compute_efficiency = r.number("compute_efficiency", a.compute_efficiency);
  a.saturation_tokens = r.number("saturation_tokens", a.saturation_tokens);
  a.eps_zbv = r.number("eps_zbv", a.eps_zbv);
  a.eps_dora = r.number("eps_dora", a.eps_dora);
  a.chunk_spread_cap = r.number("chunk_spread_cap", a.chunk_spread_cap);
  a.cc_latency_threshold_us = r.number("cc_latency_threshold_us", a.cc_latency_threshold_us);
  a.redundancy_latency_threshold_us =
      r.number("redundancy_latency_threshold_us", a.redundancy_latency_threshold_us);
  a.imbalance_latency_threshold_us =
      r.number("imbalance_latency_threshold_us", a.imbalance_latency_threshold_us);
  a.us_per_km = r.number("us_per_km", a.us_per_km);
  a.exploration_fraction = r.number("exploration_fraction", a.exploration_fraction);
  r.finish();
  if (!(a.compute_efficiency > 0 && a.compute_efficiency <= 1))
    Reader::fail(r.at("compute_efficiency"), "must be in (0, 1]");
  if (!(a.chunk_spread_cap >= 1)) Reader::fail(r.at("chunk_spread_cap"), "must be >= 1");
  if (!(a.exploration_fraction >= 0 && a.exploration_fraction <= 1))
    Reader::fail(r.at("exploration_fraction"), "must be in [0, 1]");
  return a;
}

/// Model plus optional batch and reference parallelism, as stored in the
/// bundled workload fixtures.
struct Workload {
  ModelSpec model;
  std::optional<BatchSpec> batch;
  std::optional<ParallelismConfig> parallelism;
};

inline Workload read_workload(const json& j) {
  Reader r(j, "workload");
  Workload w;
  w.model = read_model(Reader(r.raw("model"), "model"));
  if (r.has("batch")) w.batch = read_batch(Reader(r.raw("batch"), "batch"));
  if (r.has("parallelism"))
    w.parallelism = read_parallelism(Reader(r.raw("parallelism"), "parallelism"));
  r.finish();
  return w;
}

inline Topology read_topology_doc(const json& j) { return read_topology(Reader(j, "topology")); }

inline json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

// Writers ---------------------------------------------------------------------------

inline json to_json(const ModelSpec& m) {
  json j{{"num_layers", m.num_layers}, {"hidden_dim", m.hidden_dim}};
  if (m.is_moe()) {
    j["num_experts"] = m.num_experts;
    j["expert_ffn_dim"] = m.expert_ffn_dim;
    j["top_k"] = m.top_k;
  }
  if (m.ffn_dim > 0) j["ffn_dim"] = m.ffn_dim;
  j["seq_len"] = m.seq_len;
  j["bytes_per_element"] = m.bytes_per_element;
  return j;
}

inline json to_json(const BatchSpec& b) {
  return {{"global_batch_size", b.global_batch_size}, {"microbatch_size", b.microbatch_size}};
}

inline json to_json(const ParallelismConfig& p) {
  json ds{{"kind", p.dp_scheme.hsdp() ? "HSDP" : "FSDP"}};
  if (p.dp_scheme.hsdp()) {
    ds["replica_groups"] = p.dp_scheme.replica_groups;
    ds["shard_degree"] = p.dp_scheme.shard_degree;
  }
  return {{"tp", p.tp},
          {"cp", p.cp},
          {"ep", p.ep},
          {"pp", p.pp},
          {"dp", p.dp},
          {"placement", std::string(to_string(p.placement))},
          {"schedule", std::string(to_string(p.schedule))},
          {"dp_scheme", ds},
          {"chunk_partition",
           {{"chunk_sizes", p.chunk_partition.chunk_sizes},
            {"chunk_stage", p.chunk_partition.chunk_stage}}}};
}

inline json to_json(const LinkTier& t) {
  return {{"bandwidth_gbps", t.bandwidth_gbps},
          {"latency_us", t.latency_us},
          {"loss_rate", t.loss_rate},
          {"oversubscription", t.oversubscription}};
}

inline json to_json(const Topology& t) {
  json b = json::array();
  for (const auto& x : t.buildings) b.push_back({{"gpu_count", x.gpu_count}, {"zones", x.zones}});
  json j{{"buildings", b},
         {"gpus_per_server", t.gpus_per_server},
         {"intra_server", to_json(t.intra_server)},
         {"intra_zone", to_json(t.intra_zone)},
         {"cross_zone", to_json(t.cross_zone)},
         {"cross_building", to_json(t.cross_building)}};
  if (!t.cross_building_latency_us.empty())
    j["cross_building_latency_us"] = t.cross_building_latency_us;
  j["nic"] = {{"packet_payload", t.nic.packet_payload},
              {"max_inflight_packets", t.nic.max_inflight_packets},
              {"qp_count", t.nic.qp_count},
              {"load_balancing", std::string(to_string(t.nic.load_balancing))},
              {"ecmp_flows", t.nic.ecmp_flows},
              {"ecmp_paths", t.nic.ecmp_paths}};
  j["gpu"] = {{"hbm_bytes", t.gpu.hbm_bytes}, {"effective_flops", t.gpu.effective_flops}};
  return j;
}

inline json to_json(const Assumptions& a) {
  return {{"param_bytes", a.param_bytes},
          {"grad_bytes", a.grad_bytes},
          {"optimizer_bytes", a.optimizer_bytes},
          {"activation_factor", a.activation_factor},
          {"activation_tp_sharded", a.activation_tp_sharded},
          {"compute_efficiency", a.compute_efficiency},
          {"saturation_tokens", a.saturation_tokens},
          {"eps_zbv", a.eps_zbv},
          {"eps_dora", a.eps_dora},
          {"chunk_spread_cap", a.chunk_spread_cap},
          {"cc_latency_threshold_us", a.cc_latency_threshold_us},
          {"redundancy_latency_threshold_us", a.redundancy_latency_threshold_us},
          {"imbalance_latency_threshold_us", a.imbalance_latency_threshold_us},
          {"us_per_km", a.us_per_km},
          {"exploration_fraction", a.exploration_fraction}};
}

}  // namespace scax
