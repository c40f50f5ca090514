#pragma once

#include "plan_file.hpp"

#include <pdbcu/async_engine.hpp>
#include <pdbcu/delay_simulator.hpp>
#include <pdbcu/instance_io.hpp>
#include <pdbcu/reference.hpp>
#include <pdbcu/serial_solver.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <thread>

namespace bench {

namespace fs = std::filesystem;
using nlohmann::json;

/// One (configuration, seed) run.
struct Cell {
  std::string label;
  std::string mode;  // serial | lalm | async | sync | delay_sim
  pdbcu::GeneratorSpec instance;
  double beta = 1.0;
  std::optional<double> rho;
  double alpha = 1.0;
  int tau = 0;
  int threads = 1;
  bool dependent = true;        // delay modes: delay-aware weights vs serial weights
  bool serial_weights = false;  // sync mode
  std::uint64_t seed = 0;
};

struct CellResult {
  pdbcu::RunTrace trace;
  json summary;
};

inline double default_beta(const std::string& family) {
  if (family == "ncqp") return std::sqrt(2.0);
  if (family == "dual_svm") return 0.1;
  return 1.0;
}

inline std::string num_label(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

/// Cells of a plan, in execution order.
inline std::vector<Cell> expand(const ExperimentPlan& p) {
  std::vector<Cell> cells;
  const double beta0 = p.betas.empty() ? default_beta(p.instance.family) : p.betas.front();
  auto base = [&](const std::string& label, const std::string& mode, std::uint64_t seed) {
    Cell c;
    c.label = label;
    c.mode = mode;
    c.instance = p.instance;
    c.beta = beta0;
    c.rho = p.rho;
    c.alpha = p.alpha;
    c.seed = seed;
    return c;
  };
  for (std::uint64_t seed : p.seeds) {
    switch (p.kind) {
      case ExperimentKind::BpBetaSweep:
        for (double b : p.betas) {
          Cell c = base("beta" + num_label(b) + "_block", "serial", seed);
          c.beta = b;
          cells.push_back(c);
          if (p.lalm) {
            c.label = "beta" + num_label(b) + "_lalm";
            c.mode = "lalm";
            cells.push_back(c);
          }
        }
        break;
      case ExperimentKind::BpQSweep:
        for (Index q : p.qs) {
          Cell c = base("q" + std::to_string(q) + "_block", "serial", seed);
          c.instance.params["q"] = static_cast<double>(q);
          c.beta = p.beta_rule == "sqrt_q" ? std::sqrt(static_cast<double>(q)) : beta0;
          cells.push_back(c);
          if (p.lalm) {
            c.label = "q" + std::to_string(q) + "_lalm";
            c.mode = "lalm";
            cells.push_back(c);
          }
        }
        break;
      case ExperimentKind::NcqpDelay:
        for (int tau : p.taus) {
          Cell c = base("tau" + std::to_string(tau), p.engine, seed);
          c.tau = tau;
          c.dependent = p.variant == "dep";
          c.threads = p.workers_list.empty() ? 4 : p.workers_list.front();
          cells.push_back(c);
        }
        break;
      case ExperimentKind::SvmParallel:
        for (int w : p.workers_list) {
          Cell a = base("async_p" + std::to_string(w), "async", seed);
          a.threads = w;
          a.dependent = false;
          cells.push_back(a);
          Cell s = base("sync_p" + std::to_string(w), "sync", seed);
          s.threads = w;
          s.serial_weights = p.serial_weights;
          cells.push_back(s);
        }
        break;
      case ExperimentKind::Custom: {
        Cell c = base(p.mode, p.mode, seed);
        c.tau = p.taus.empty() ? 0 : p.taus.front();
        c.threads = p.workers_list.empty() ? 1 : p.workers_list.front();
        c.dependent = p.variant != "indep";
        c.serial_weights = p.serial_weights;
        cells.push_back(c);
        break;
      }
    }
  }
  return cells;
}

inline std::string instance_key(const pdbcu::GeneratorSpec& s) {
  std::ostringstream os;
  os << s.family << '|' << s.seed << '|' << s.dataset;
  for (const auto& [k, v] : s.params) os << '|' << k << '=' << v;
  return os.str();
}

/// Generated instances (with their references) shared across cells.
class InstanceCache {
 public:
  explicit InstanceCache(bool with_reference) : with_reference_(with_reference) {}

  const pdbcu::ProblemInstance& get(const pdbcu::GeneratorSpec& spec) {
    const std::string key = instance_key(spec);
    auto it = cache_.find(key);
    if (it != cache_.end()) return *it->second;
    auto inst = std::make_shared<pdbcu::ProblemInstance>(pdbcu::make_instance(spec));
    if (with_reference_) {
      const auto sol = pdbcu::reference_solve(*inst);
      *inst = pdbcu::with_reference(std::move(*inst), sol);
      inst->metadata["reference_method"] = sol.method;
    }
    inst->metadata["fingerprint"] = pdbcu::fingerprint_hex(*inst);
    return *cache_.emplace(key, std::move(inst)).first->second;
  }

 private:
  bool with_reference_;
  std::map<std::string, std::shared_ptr<pdbcu::ProblemInstance>> cache_;
};

inline json opt_json(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

inline CellResult run_cell(const Cell& c, const pdbcu::ProblemInstance& inst, const ExperimentPlan& p) {
  using namespace pdbcu;
  RunConfig cfg;
  cfg.max_epochs = p.epochs;
  cfg.trace_every = p.trace_every;
  cfg.seed = c.seed;
  cfg.stop_feas = p.stop_feas;
  cfg.stop_obj = p.stop_obj;
  cfg.track_ergodic = p.ergodic;
  auto finish_plan = [&](StepsizePlan sp) { return c.rho ? with_rho(std::move(sp), *c.rho) : sp; };

  CellResult out;
  json extra = json::object();
  if (c.mode == "serial") {
    cfg.plan = finish_plan(serial_plan(inst, c.beta));
    out.trace = run(inst, cfg).trace;
  } else if (c.mode == "lalm") {
    ProblemInstance one = reblock(inst, BlockPartition::single(inst.dim()));
    attach_lipschitz(one);
    cfg.plan = finish_plan(serial_plan(one, c.beta));
    out.trace = run(one, cfg).trace;
  } else if (c.mode == "delay_sim") {
    cfg.plan = finish_plan(c.dependent ? async_plan(inst, c.beta, c.tau, c.alpha)
                                       : async_plan_serial_weights(inst, c.beta, c.tau));
    auto r = run_simulated_delay(inst, cfg, c.tau);
    out.trace = std::move(r.trace);
    extra["delay_histogram"] = r.delay_histogram;
  } else if (c.mode == "async") {
    EngineConfig ec;
    cfg.plan = finish_plan(c.dependent ? async_plan(inst, c.beta, c.tau, c.alpha)
                                       : async_plan_serial_weights(inst, c.beta, c.tau));
    ec.run = cfg;
    ec.workers = c.threads - 1;
    auto r = run_async(inst, ec);
    out.trace = std::move(r.trace);
    extra["max_delay"] = r.delays.max_delay;
    extra["mean_delay"] = r.delays.mean_delay;
    extra["dropped_messages"] = r.delays.dropped();
    extra["consumed_messages"] = r.delays.consumed_messages;
    extra["iterations_per_sec"] = r.iterations_per_sec;
  } else if (c.mode == "sync") {
    EngineConfig ec;
    cfg.plan = finish_plan(sync_plan(inst, c.beta, c.threads, c.serial_weights));
    ec.run = cfg;
    ec.workers = c.threads - 1;
    auto r = run_sync_parallel(inst, ec);
    out.trace = std::move(r.trace);
    extra["iterations_per_sec"] = r.iterations_per_sec;
  } else {
    throw ParameterError("unknown mode " + c.mode);
  }
  out.trace.set("label", c.label);

  json s;
  s["label"] = c.label;
  s["mode"] = c.mode;
  s["seed"] = c.seed;
  s["beta"] = c.beta;
  s["rho"] = cfg.plan.rho;
  s["plan"] = cfg.plan.describe();
  s["alpha"] = c.alpha;
  s["tau"] = c.tau;
  s["threads"] = c.threads;
  s["fingerprint"] = inst.metadata.count("fingerprint") ? inst.metadata.at("fingerprint") : "";
  s["initial_feas"] = out.trace.initial_feas;
  if (!out.trace.rows.empty()) {
    const TraceRow& last = out.trace.rows.back();
    s["epochs_run"] = last.epoch;
    s["final"] = {{"obj_err", opt_json(last.obj_err)},
                  {"feas", opt_json(last.feas)},
                  {"erg_obj_err", opt_json(last.erg_obj_err)},
                  {"erg_feas", opt_json(last.erg_feas)},
                  {"wall_ms", last.wall_ms}};
  } else {
    s["epochs_run"] = 0;
  }
  json hit = nullptr;
  for (const auto& row : out.trace.rows)
    if (row.feas <= p.report_feas) {
      hit = row.epoch;
      break;
    }
  s["epochs_to_report_feas"] = hit;
  s["extra"] = extra;
  out.summary = std::move(s);
  return out;
}

/// CLI flag > plan file > PDBCU_OUTPUT_DIR > ./pdbcu_out
inline fs::path resolve_output_dir(const std::string& cli, const ExperimentPlan& p) {
  if (!cli.empty()) return cli;
  if (!p.output_dir.empty()) return p.output_dir;
  if (const char* env = std::getenv("PDBCU_OUTPUT_DIR"); env && *env) return env;
  return "pdbcu_out";
}

inline json plan_echo(const ExperimentPlan& p) {
  json j;
  j["kind"] = kind_name(p.kind);
  j["variant"] = p.variant;
  j["name"] = p.name;
  j["instance"] = {{"family", p.instance.family},
                   {"params", p.instance.params},
                   {"seed", p.instance.seed},
                   {"dataset", p.instance.dataset}};
  j["solver"] = {{"mode", p.mode},
                 {"engine", p.engine},
                 {"betas", p.betas},
                 {"default_beta", default_beta(p.instance.family)},
                 {"qs", p.qs},
                 {"beta_rule", p.beta_rule},
                 {"rho", p.rho ? json(*p.rho) : json(nullptr)},
                 {"alpha", p.alpha},
                 {"taus", p.taus},
                 {"workers_list", p.workers_list},
                 {"epochs", p.epochs},
                 {"trace_every", p.trace_every},
                 {"seeds", p.seeds},
                 {"stop_feas", p.stop_feas ? json(*p.stop_feas) : json(nullptr)},
                 {"stop_obj", p.stop_obj ? json(*p.stop_obj) : json(nullptr)},
                 {"report_feas", p.report_feas},
                 {"serial_weights", p.serial_weights},
                 {"reference", p.reference},
                 {"lalm", p.lalm},
                 {"ergodic", p.ergodic}};
  j["output"] = {{"timing", p.timing}};
  return j;
}

inline void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw pdbcu::IoError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

/// Runs every cell, writing <out>/<name>/<label>_seed<s>.csv and summary.json.
inline json run_plan(const ExperimentPlan& p, const fs::path& out_root, std::ostream& log) {
  const fs::path dir = out_root / p.name;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw pdbcu::IoError("cannot create " + dir.string() + ": " + ec.message());
  InstanceCache cache(p.reference);
  json summary;
  summary["plan"] = plan_echo(p);
  summary["csv_columns"] = pdbcu::kTraceColumns;
  summary["runs"] = json::array();
  for (const Cell& c : expand(p)) {
    const auto& inst = cache.get(c.instance);
    CellResult r = run_cell(c, inst, p);
    const std::string file = c.label + "_seed" + std::to_string(c.seed) + ".csv";
    pdbcu::write_trace_csv((dir / file).string(), r.trace, !p.timing);
    r.summary["trace_file"] = file;
    if (!p.timing) r.summary["final"]["wall_ms"] = 0.0, r.summary["extra"].erase("iterations_per_sec");
    log << c.label << " seed " << c.seed << ": epochs " << r.summary["epochs_run"] << ", feas "
        << r.summary.value("/final/feas"_json_pointer, json(nullptr)) << '\n';
    summary["runs"].push_back(std::move(r.summary));
  }
  write_json(dir / "summary.json", summary);
  return summary;
}

struct SpeedupRow {
  int threads = 1;
  double async_ms = 0.0, async_ips = 0.0, async_speedup = 1.0;
  double sync_ms = 0.0, sync_ips = 0.0, sync_speedup = 1.0;
};

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Time to a fixed epoch budget for async and sync at each thread count,
/// normalized to the same engine at p = 1 (median over seeds).
inline std::vector<SpeedupRow> run_speedup(const ExperimentPlan& p, std::ostream& log) {
  if (p.kind != ExperimentKind::SvmParallel && p.kind != ExperimentKind::NcqpDelay)
    throw PlanError("experiment.kind", "speedup needs svm_parallel or ncqp_delay");
  if (p.workers_list.empty()) throw PlanError("solver.workers_list", "required for speedup");
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  InstanceCache cache(false);
  const auto& inst = cache.get(p.instance);
  ExperimentPlan q = p;
  q.stop_feas.reset();
  q.stop_obj.reset();
  q.trace_every = std::max<std::int64_t>(1, p.epochs);
  std::vector<int> threads = p.workers_list;
  if (std::find(threads.begin(), threads.end(), 1) == threads.end()) threads.insert(threads.begin(), 1);
  std::sort(threads.begin(), threads.end());
  std::vector<SpeedupRow> rows;
  for (int t : threads) {
    if (static_cast<unsigned>(t) > hw)
      log << "warning: " << t << " threads exceed the " << hw << " available hardware threads\n";
    if (t > inst.num_blocks()) throw PlanError("solver.workers_list", "more threads than blocks");
    SpeedupRow row;
    row.threads = t;
    std::vector<double> ams, aips, sms, sips;
    for (std::uint64_t seed : p.seeds) {
      Cell a;
      a.label = "async_p" + std::to_string(t);
      a.mode = "async";
      a.instance = p.instance;
      a.beta = p.betas.empty() ? default_beta(p.instance.family) : p.betas.front();
      a.threads = t;
      a.dependent = false;
      a.seed = seed;
      const auto ra = run_cell(a, inst, q);
      ams.push_back(ra.trace.last().wall_ms);
      aips.push_back(ra.summary["extra"]["iterations_per_sec"].get<double>());
      Cell s = a;
      s.label = "sync_p" + std::to_string(t);
      s.mode = "sync";
      s.serial_weights = p.serial_weights;
      const auto rs = run_cell(s, inst, q);
      sms.push_back(rs.trace.last().wall_ms);
      sips.push_back(rs.summary["extra"]["iterations_per_sec"].get<double>());
    }
    row.async_ms = median(ams);
    row.async_ips = median(aips);
    row.sync_ms = median(sms);
    row.sync_ips = median(sips);
    rows.push_back(row);
  }
  for (auto& r : rows) {
    r.async_speedup = rows.front().async_ms / r.async_ms;
    r.sync_speedup = rows.front().sync_ms / r.sync_ms;
  }
  return rows;
}

inline void write_speedup(const fs::path& dir, const std::vector<SpeedupRow>& rows, std::ostream& table) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw pdbcu::IoError("cannot create " + dir.string() + ": " + ec.message());
  std::ofstream csv(dir / "speedup.csv");
  if (!csv) throw pdbcu::IoError("cannot write speedup.csv");
  csv << "threads,async_ms,async_ips,async_speedup,sync_ms,sync_ips,sync_speedup\n";
  char buf[256];
  table << "threads  async_ms  async_it/s  async_x  sync_ms  sync_it/s  sync_x\n";
  json j = json::array();
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g\n", r.threads, r.async_ms, r.async_ips,
                  r.async_speedup, r.sync_ms, r.sync_ips, r.sync_speedup);
    csv << buf;
    std::snprintf(buf, sizeof buf, "%7d  %8.1f  %10.0f  %7.2f  %7.1f  %9.0f  %6.2f\n", r.threads, r.async_ms,
                  r.async_ips, r.async_speedup, r.sync_ms, r.sync_ips, r.sync_speedup);
    table << buf;
    j.push_back({{"threads", r.threads},
                 {"async_ms", r.async_ms},
                 {"async_iterations_per_sec", r.async_ips},
                 {"async_speedup", r.async_speedup},
                 {"sync_ms", r.sync_ms},
                 {"sync_iterations_per_sec", r.sync_ips},
                 {"sync_speedup", r.sync_speedup}});
  }
  write_json(dir / "speedup.json", j);
}

}  // namespace bench
