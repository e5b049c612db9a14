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

// scax: command-line front end for the multi-building training explorer.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "scax/scax.hpp"

namespace fs = std::filesystem;
using namespace scax;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitInfeasible = 2;

struct Globals {
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::string assumptions_file;
  std::optional<double> distance_km;
};

struct Inputs {
  std::string model_file;
  std::string topo_file;
  std::string config_file;
  std::optional<std::int64_t> gbs;
  std::optional<std::int64_t> mbs;
  std::optional<double> oversub;
  std::optional<double> latency_us;
  std::optional<double> loss;
};

struct Loaded {
  ModelSpec model;
  std::optional<BatchSpec> batch;
  std::optional<ParallelismConfig> config;
  Topology topo;
  Assumptions assumptions;
};

void add_inputs(CLI::App* cmd, Inputs& in, bool need_model, bool need_config) {
  auto* m = cmd->add_option("--model", in.model_file,
                            "workload JSON: model, optional batch and parallelism")
                ->check(CLI::ExistingFile);
  if (need_model) m->required();
  cmd->add_option("--topo", in.topo_file, "topology JSON")->required()->check(CLI::ExistingFile);
  if (need_config)
    cmd->add_option("--config", in.config_file,
                    "parallelism JSON (overrides the workload's parallelism)")
        ->check(CLI::ExistingFile);
  cmd->add_option("--gbs", in.gbs, "global batch size");
  cmd->add_option("--mbs", in.mbs, "microbatch size");
  cmd->add_option("--oversub", in.oversub, "cross-building oversubscription x in 1:x");
  cmd->add_option("--latency-us", in.latency_us, "uniform one-way cross-building latency");
  cmd->add_option("--loss", in.loss, "cross-building loss rate");
}

void write_file(const Globals& g, const std::string& name, const std::string& body) {
  fs::create_directories(g.out_dir);
  const fs::path path = fs::path(g.out_dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path.string() + ": cannot write");
  out << body;
}

ParallelismConfig read_config_file(const std::string& path) {
  const json j = load_json(path);
  if (j.is_object() && j.contains("parallelism")) {
    Reader r(j, "config");
    ParallelismConfig p = read_parallelism(Reader(r.raw("parallelism"), "parallelism"));
    return p;
  }
  return read_parallelism(Reader(j, "parallelism"));
}

Loaded load(const Globals& g, const Inputs& in) {
  Loaded l;
  if (!in.model_file.empty()) {
    Workload w = read_workload(load_json(in.model_file));
    l.model = w.model;
    l.batch = w.batch;
    l.config = w.parallelism;
  }
  if (!in.config_file.empty()) l.config = read_config_file(in.config_file);
  l.topo = read_topology_doc(load_json(in.topo_file));
  if (!g.assumptions_file.empty())
    l.assumptions = read_assumptions(Reader(load_json(g.assumptions_file), "assumptions"));

  if (in.gbs || in.mbs) {
    BatchSpec b = l.batch.value_or(BatchSpec{});
    if (in.gbs) b.global_batch_size = *in.gbs;
    if (in.mbs) b.microbatch_size = *in.mbs;
    if (b.microbatch_size < 1) throw InputError("--mbs: must be >= 1");
    if (b.global_batch_size < b.microbatch_size) throw InputError("--gbs: must be >= microbatch size");
    l.batch = b;
  }
  if (in.oversub) {
    if (*in.oversub < 1.0) throw InputError("--oversub: must be >= 1");
    l.topo.cross_building.oversubscription = *in.oversub;
  }
  if (in.loss) {
    if (*in.loss < 0.0 || *in.loss >= 1.0) throw InputError("--loss: must be in [0, 1)");
    l.topo.cross_building.loss_rate = *in.loss;
  }
  if (in.latency_us) l.topo.set_uniform_cross_latency(*in.latency_us);
  if (g.distance_km) l.topo.set_uniform_cross_latency(*g.distance_km * l.assumptions.us_per_km);
  return l;
}

const BatchSpec& need_batch(const Loaded& l) {
  if (!l.batch) throw InputError("batch: missing (add it to the workload or pass --gbs/--mbs)");
  return *l.batch;
}

const ParallelismConfig& need_config(const Loaded& l) {
  if (!l.config) throw InputError("parallelism: missing (add it to the workload or pass --config)");
  return *l.config;
}

/// Exit 2 with the violation list if the config is invalid.
bool report_violations(const Loaded& l, const ParallelismConfig& p) {
  const auto v = validate_config(l.model, *l.batch, p, l.topo, l.assumptions);
  if (v.empty()) return false;
  std::cerr << "invalid configuration:\n";
  for (const auto& x : v) std::cerr << "  " << x.code << ": " << x.message << "\n";
  return true;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string part; std::getline(ss, part, sep);)
    if (!part.empty()) out.push_back(part);
  return out;
}

// explore ----------------------------------------------------------------------------

struct ExploreArgs {
  Inputs in;
  SearchBudget budget;
  ExploreOptions opt;
  std::vector<int> tp;
  std::vector<int> mbs_list;
  std::vector<std::string> schedules;
  std::vector<std::string> placements;
  std::string degrees;
  std::string baseline;
  bool no_fsdp = false;
  bool no_hsdp = false;
};

int cmd_explore(const Globals& g, ExploreArgs& a) {
  Loaded l = load(g, a.in);
  const BatchSpec batch = need_batch(l);
  a.budget.seed = g.seed;
  a.budget.validate();
  ExploreOptions& opt = a.opt;
  opt.tp = a.tp;
  opt.microbatch_sizes = a.mbs_list;
  if (!a.schedules.empty()) {
    opt.schedules.clear();
    for (const auto& s : a.schedules) opt.schedules.push_back(parse_schedule(s, "--schedules"));
  }
  if (!a.placements.empty()) {
    opt.placements.clear();
    for (const auto& s : a.placements) opt.placements.push_back(parse_placement(s, "--placements"));
  }
  opt.fsdp = !a.no_fsdp;
  opt.hsdp = !a.no_hsdp;
  if (!a.degrees.empty()) {
    const auto parts = split(a.degrees, '-');
    if (parts.size() != 5) throw InputError("--degrees: expected tp-cp-ep-pp-dp");
    int d[5];
    for (int i = 0; i < 5; ++i) d[i] = std::stoi(parts[i]);
    opt.degrees = Degrees{d[0], d[1], d[2], d[3], d[4]};
  }
  if (a.baseline == "sailor-like") {
    opt.schedules = {Schedule::OneFOneB};
    opt.placements = {Placement::PPOut};
    opt.hsdp = false;
  } else if (!a.baseline.empty()) {
    throw InputError("--baseline: expected sailor-like");
  }

  const ExplorationReport rep = explore(l.model, batch, l.topo, a.budget, opt, l.assumptions);
  json j = to_json(rep);
  if (rep.feasible()) {
    const RankedConfig& best = rep.best();
    const KernelDAG dag = build_dag(l.model, best.batch, best.p, l.topo, l.assumptions);
    const Timeline tl = reconstruct(dag);
    std::ostringstream csv;
    write_timeline_csv(csv, dag, tl);
    write_file(g, "timeline.csv", csv.str());
  }
  if (l.config && l.batch) {
    // Reference config from the workload, for the gain over it.
    const ParallelismConfig& ref = *l.config;
    if (validate_config(l.model, *l.batch, ref, l.topo, l.assumptions).empty()) {
      const Evaluation e = evaluate(l.model, *l.batch, ref, l.topo, l.assumptions);
      const double t = e.t(ref.placement);
      j["reference"] = {{"parallelism", to_json(ref)}, {"iteration_s", t}};
      if (rep.feasible()) j["reference"]["gain"] = 1.0 - rep.best().iteration_s / t;
    }
  }
  write_file(g, "report.json", j.dump(2) + "\n");
  std::ostringstream csv;
  write_ranked_csv(csv, rep);
  write_file(g, "report.csv", csv.str());

  if (!rep.feasible()) {
    std::cerr << "no feasible configuration; binding constraints:\n";
    for (const auto& [code, n] : rep.binding) std::cerr << "  " << code << " (" << n << ")\n";
    return kExitInfeasible;
  }
  const auto& b = rep.best();
  std::cout << "best: " << to_string(b.p.placement) << " " << to_string(b.p.schedule) << " "
            << dp_scheme_label(b.p.dp_scheme) << " tp" << b.p.tp << " cp" << b.p.cp << " ep"
            << b.p.ep << " pp" << b.p.pp << " dp" << b.p.dp << " mbs" << b.batch.microbatch_size
            << " chunks " << sizes_text(b.p.chunk_partition.chunk_sizes) << " -> "
            << num(b.iteration_s) << " s\n";
  return kExitOk;
}

// eval -------------------------------------------------------------------------------

int cmd_eval(const Globals& g, const Inputs& in) {
  Loaded l = load(g, in);
  need_batch(l);
  const ParallelismConfig p = need_config(l);
  if (report_violations(l, p)) return kExitInfeasible;
  const KernelDAG dag = build_dag(l.model, *l.batch, p, l.topo, l.assumptions);
  const Timeline tl = reconstruct(dag);
  json j = metrics_json(l.model, *l.batch, p, tl, l.topo, l.assumptions);

  Topology flat = l.topo;
  for (LinkTier* t : {&flat.intra_server, &flat.intra_zone, &flat.cross_zone, &flat.cross_building})
    t->oversubscription = 1.0;
  const Timeline base = reconstruct(build_dag(l.model, *l.batch, p, flat, l.assumptions));
  for (Placement pl : kPlacements)
    j["placements"][std::string(to_string(pl))]["normalized_to_no_oversubscription"] =
        tl.t(pl) / base.t(pl);

  write_file(g, "metrics.json", j.dump(2) + "\n");
  std::ostringstream csv;
  write_timeline_csv(csv, dag, tl);
  write_file(g, "timeline.csv", csv.str());
  for (Placement pl : kPlacements)
    std::cout << to_string(pl) << ": " << num(tl.t(pl)) << " s\n";
  return kExitOk;
}

// sweep ------------------------------------------------------------------------------

struct SweepArgs {
  Inputs in;
  std::string axis;
  std::vector<double> values;
  std::string range;
  std::vector<std::string> schedules;
  std::vector<std::string> dp_schemes;
};

DpScheme parse_dp_scheme(const std::string& s, int dp) {
  if (s == "FSDP") return {};
  if (s.rfind("HSDP", 0) == 0) {
    const auto rs = split(s.substr(4), 'x');
    if (rs.size() == 2) {
      DpScheme d{DpScheme::Kind::HSDP, std::stoi(rs[0]), std::stoi(rs[1])};
      if (d.replica_groups * d.shard_degree == dp) return d;
    }
  }
  throw InputError("--dp-schemes: '" + s + "' is not FSDP or HSDP<r>x<s> with r*s = dp");
}

std::vector<double> sweep_values(const SweepArgs& a) {
  std::vector<double> v = a.values;
  if (!a.range.empty()) {
    const auto parts = split(a.range, ':');
    if (parts.size() != 3) throw InputError("--range: expected start:stop:step");
    const double lo = std::stod(parts[0]), hi = std::stod(parts[1]), step = std::stod(parts[2]);
    if (!(step > 0.0)) throw InputError("--range: step must be > 0");
    for (int i = 0; lo + i * step <= hi + 1e-9 * std::abs(step); ++i) v.push_back(lo + i * step);
  }
  if (v.empty()) throw InputError("sweep: empty range");
  return v;
}

int cmd_sweep(const Globals& g, SweepArgs& a) {
  Loaded l = load(g, a.in);
  const std::vector<double> values = sweep_values(a);
  const ParallelismConfig base = need_config(l);
  need_batch(l);
  static const std::vector<std::string> kAxes{"oversub", "latency_us", "distance_km", "experts",
                                              "batch"};
  if (std::find(kAxes.begin(), kAxes.end(), a.axis) == kAxes.end())
    throw InputError("--axis: expected oversub, latency_us, distance_km, experts or batch");

  std::vector<Schedule> schedules{base.schedule};
  if (!a.schedules.empty()) {
    schedules.clear();
    for (const auto& s : a.schedules) schedules.push_back(parse_schedule(s, "--schedules"));
  }
  std::vector<DpScheme> schemes{base.dp_scheme};
  if (!a.dp_schemes.empty()) {
    schemes.clear();
    for (const auto& s : a.dp_schemes) schemes.push_back(parse_dp_scheme(s, base.dp));
  }

  std::ostringstream csv;
  csv << "axis,value,placement,schedule,dp_scheme,iteration_s,cross_building_bytes,max_bubble\n";
  int rows = 0;
  for (double v : values) {
    ModelSpec m = l.model;
    BatchSpec b = *l.batch;
    Topology t = l.topo;
    if (a.axis == "oversub") {
      if (v < 1.0) throw InputError("--values: oversubscription must be >= 1");
      t.cross_building.oversubscription = v;
    } else if (a.axis == "latency_us") {
      t.set_uniform_cross_latency(v);
    } else if (a.axis == "distance_km") {
      t.set_uniform_cross_latency(v * l.assumptions.us_per_km);
    } else if (a.axis == "experts") {
      if (!m.is_moe()) throw InputError("--axis experts: model has no experts");
      m.num_experts = static_cast<std::int64_t>(v);
    } else {
      b.global_batch_size = static_cast<std::int64_t>(v);
    }
    for (Schedule s : schedules) {
      for (const DpScheme& ds : schemes) {
        ParallelismConfig p = base;
        p.schedule = s;
        p.dp_scheme = ds;
        p.chunk_partition.chunk_stage = chunk_stages(s, p.chunk_partition.num_chunks(), p.pp);
        const auto viol = p.chunk_partition.chunk_stage.empty()
                              ? std::vector<Violation>{{"partition.layout", "layout"}}
                              : validate_config(m, b, p, t, l.assumptions);
        if (!viol.empty()) {
          std::cerr << "skip " << a.axis << "=" << num(v) << " " << to_string(s) << " "
                    << dp_scheme_label(ds) << ": " << viol.front().code << "\n";
          continue;
        }
        const Evaluation e = evaluate(m, b, p, t, l.assumptions);
        ++rows;
        for (Placement pl : kPlacements) {
          const auto& bub = e.bubble[index_of(pl)];
          csv << a.axis << ',' << num(v) << ',' << to_string(pl) << ',' << to_string(s) << ','
              << dp_scheme_label(ds) << ',' << num(e.t(pl)) << ','
              << e.cross_bytes[index_of(pl)] << ','
              << num(bub.empty() ? 0.0 : *std::max_element(bub.begin(), bub.end())) << '\n';
        }
      }
    }
  }
  write_file(g, "sweep.csv", csv.str());
  std::cout << csv.str();
  return rows > 0 ? kExitOk : kExitInfeasible;
}

// volumes ----------------------------------------------------------------------------

int cmd_volumes(const Globals& g, const Inputs& in) {
  Loaded l = load(g, in);
  need_batch(l);
  const ParallelismConfig p = need_config(l);
  if (report_violations(l, p)) return kExitInfeasible;
  json boundaries = json::array();
  for (int bd = 0; bd < p.pp; ++bd) boundaries.push_back(pp_p2p_count(*l.batch, p, bd));
  json j{{"version", std::string(kVersion)},
         {"microbatches", num_microbatches(*l.batch, p)},
         {"pp_p2p_elements", pp_p2p_elements(l.model, *l.batch, p)},
         {"pp_p2p_count_per_boundary", boundaries},
         {"dp_layer_elements", dp_layer_elements(l.model, p)},
         {"cross_building_bytes",
          {{"DPOut", cross_building_bytes(l.model, *l.batch, p, l.topo, Placement::DPOut)},
           {"PPOut", cross_building_bytes(l.model, *l.batch, p, l.topo, Placement::PPOut)}}}};
  write_file(g, "volumes.json", j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

// dump-schedule ----------------------------------------------------------------------

int cmd_dump_schedule(const Globals& g, const Inputs& in) {
  Loaded l = load(g, in);
  need_batch(l);
  const ParallelismConfig p = need_config(l);
  if (report_violations(l, p)) return kExitInfeasible;
  const KernelDAG dag = build_dag(l.model, *l.batch, p, l.topo, l.assumptions);
  const Timeline tl = reconstruct(dag);

  std::ostringstream order;
  for (std::size_t r = 0; r < dag.rank_compute.size(); ++r) {
    order << "rank " << r << ":";
    for (int id : dag.rank_compute[r]) order << ' ' << dag.kernels[id].label();
    order << '\n';
  }
  json kernels = json::array();
  for (const Kernel& k : dag.kernels)
    kernels.push_back({{"id", k.id},
                       {"rank", k.rank},
                       {"label", k.label()},
                       {"parents", dag.parents[k.id]},
                       {"bytes", k.bytes},
                       {"duration_dpout_s", k.duration[0]},
                       {"duration_ppout_s", k.duration[1]}});
  const json j{{"version", std::string(kVersion)},
               {"parallelism", to_json(p)},
               {"batch", to_json(*l.batch)},
               {"kernels", kernels}};
  std::ostringstream csv;
  write_timeline_csv(csv, dag, tl);
  write_file(g, "schedule.txt", order.str());
  write_file(g, "schedule.json", j.dump(1) + "\n");
  write_file(g, "timeline.csv", csv.str());
  std::cout << order.str();
  return kExitOk;
}

// recommend-net ----------------------------------------------------------------------

int cmd_recommend(const Globals& g, const Inputs& in) {
  Loaded l = load(g, in);
  const NetworkRecommendation r =
      recommend_network(l.topo, l.config.value_or(ParallelismConfig{}), l.assumptions);
  json j{{"version", std::string(kVersion)},
         {"recommendation", to_json(r)},
         {"assumptions", to_json(l.assumptions)}};
  write_file(g, "recommendation.json", j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scax: multi-building training configuration explorer"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  double distance = -1.0;
  app.add_option("--seed", g.seed, "search seed");
  app.add_option("--out-dir", g.out_dir, "directory for output files");
  app.add_option("--assumptions-file", g.assumptions_file, "assumptions JSON")
      ->check(CLI::ExistingFile);
  app.add_option("--distance-km", distance, "cross-building distance (5 us/km by default)")
      ->check(CLI::NonNegativeNumber);

  ExploreArgs ex;
  auto* explore_cmd = app.add_subcommand("explore", "search for the fastest configuration");
  add_inputs(explore_cmd, ex.in, true, false);
  explore_cmd->add_option("--top-k", ex.budget.top_k, "configs kept for exploitation");
  explore_cmd->add_option("--perturbations", ex.budget.perturbations_m, "neighbors per survivor");
  explore_cmd->add_option("--chunk-configs", ex.budget.chunk_configs_per_partition,
                          "chunkings per sampled stage partition");
  explore_cmd->add_option("--max-evals", ex.budget.max_evaluations,
                          "partition evaluations per refined candidate");
  explore_cmd->add_option("--max-wall-time", ex.budget.max_wall_time_s,
                          "seconds per partition search (0: unlimited)");
  explore_cmd->add_option("--refine-top", ex.opt.refine_top, "candidates whose partitions are searched");
  explore_cmd->add_option("--report-top", ex.opt.report_top, "configs written to the report");
  explore_cmd->add_option("--threads", ex.opt.threads, "worker threads (0: all cores)");
  explore_cmd->add_option("--tp", ex.tp, "TP degrees (default: GPUs per server)")->delimiter(',');
  explore_cmd->add_option("--mbs-list", ex.mbs_list, "microbatch sizes")->delimiter(',');
  explore_cmd->add_option("--schedules", ex.schedules, "OneFOneB, DoraPP, InterleavedZBV")->delimiter(',');
  explore_cmd->add_option("--placements", ex.placements, "DPOut, PPOut")->delimiter(',');
  explore_cmd->add_option("--degrees", ex.degrees, "pin degrees as tp-cp-ep-pp-dp");
  explore_cmd->add_option("--max-chunks-per-stage", ex.opt.max_chunks_per_stage);
  explore_cmd->add_flag("--no-fsdp", ex.no_fsdp);
  explore_cmd->add_flag("--no-hsdp", ex.no_hsdp);
  explore_cmd->add_option("--baseline", ex.baseline, "sailor-like: 1F1B, PP outermost, FSDP");

  Inputs ev;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate one configuration under both placements");
  add_inputs(eval_cmd, ev, true, true);

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "evaluate a configuration along one axis");
  add_inputs(sweep_cmd, sw.in, true, true);
  sweep_cmd->add_option("--axis", sw.axis, "oversub, latency_us, distance_km, experts, batch")
      ->required();
  sweep_cmd->add_option("--values", sw.values, "comma-separated axis values")->delimiter(',');
  sweep_cmd->add_option("--range", sw.range, "start:stop:step");
  sweep_cmd->add_option("--schedules", sw.schedules, "schedules to compare")->delimiter(',');
  sweep_cmd->add_option("--dp-schemes", sw.dp_schemes, "FSDP, HSDP<r>x<s>")->delimiter(',');

  Inputs vol;
  auto* vol_cmd = app.add_subcommand("volumes", "closed-form traffic volumes for a configuration");
  add_inputs(vol_cmd, vol, true, true);

  Inputs ds;
  auto* ds_cmd = app.add_subcommand("dump-schedule", "per-rank compute issue order");
  add_inputs(ds_cmd, ds, true, true);

  Inputs rn;
  auto* rn_cmd = app.add_subcommand("recommend-net", "network-layer recommendations");
  add_inputs(rn_cmd, rn, false, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }
  if (distance >= 0.0) g.distance_km = distance;

  try {
    if (*explore_cmd) return cmd_explore(g, ex);
    if (*eval_cmd) return cmd_eval(g, ev);
    if (*sweep_cmd) return cmd_sweep(g, sw);
    if (*vol_cmd) return cmd_volumes(g, vol);
    if (*ds_cmd) return cmd_dump_schedule(g, ds);
    if (*rn_cmd) return cmd_recommend(g, rn);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ValidationError& e) {
    std::cerr << "invalid: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const StructuralError& e) {
    std::cerr << "invalid: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: bad number: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}
