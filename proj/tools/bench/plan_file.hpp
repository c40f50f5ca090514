#pragma once

// Experiment plan files: INI-style sections of key = value pairs.
//
//   [experiment]  kind, variant, name, output_dir
//   [instance]    family, seed, dataset and the generator parameters
//   [solver]      mode, engine, beta, betas, qs, beta_rule, rho, alpha, tau, taus,
//                 workers, workers_list, epochs, trace_every, seeds, stop_feas,
//                 stop_obj, report_feas, serial_weights, reference, lalm, ergodic
//   [output]      timing
//
// Lists are comma separated. Unknown keys are rejected.

#include <pdbcu/instance_io.hpp>
#include <pdbcu/types.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace bench {

using pdbcu::Index;

/// Invalid plan; `field` is the section.key path at fault.
class PlanError : public pdbcu::ParameterError {
 public:
  PlanError(const std::string& field, const std::string& what)
      : pdbcu::ParameterError(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class ExperimentKind { BpBetaSweep, BpQSweep, NcqpDelay, SvmParallel, Custom };

inline const char* kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::BpBetaSweep: return "bp_beta_sweep";
    case ExperimentKind::BpQSweep: return "bp_q_sweep";
    case ExperimentKind::NcqpDelay: return "ncqp_delay";
    case ExperimentKind::SvmParallel: return "svm_parallel";
    case ExperimentKind::Custom: return "custom";
  }
  return "?";
}

struct ExperimentPlan {
  ExperimentKind kind = ExperimentKind::Custom;
  std::string variant;  // ncqp_delay: dep | indep
  std::string name = "experiment";
  std::string output_dir;

  pdbcu::GeneratorSpec instance;

  std::string mode = "serial";     // custom: serial | lalm | async | sync | delay_sim
  std::string engine = "delay_sim";  // ncqp_delay: delay_sim | async
  std::vector<double> betas;
  std::vector<Index> qs;
  std::string beta_rule = "fixed";  // bp_q_sweep: fixed | sqrt_q
  std::optional<double> rho;
  double alpha = 1.0;
  std::vector<int> taus;
  std::vector<int> workers_list;
  std::int64_t epochs = 100;
  std::int64_t trace_every = 1;
  std::vector<std::uint64_t> seeds;
  std::optional<double> stop_feas;
  std::optional<double> stop_obj;
  double report_feas = 1e-4;
  bool serial_weights = false;
  bool reference = true;
  bool lalm = true;
  bool ergodic = false;
  bool timing = true;
};

namespace detail {

template <class T>
T parse_scalar(const std::string& field, const std::string& text) {
  std::istringstream is(text);
  T v{};
  is >> v;
  if (!is || !(is >> std::ws).eof()) throw PlanError(field, "cannot parse '" + text + "'");
  return v;
}

inline bool parse_bool(const std::string& field, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw PlanError(field, "expected true or false, got '" + text + "'");
}

template <class T>
std::vector<T> parse_list(const std::string& field, const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw PlanError(field, "empty list item");
    out.push_back(parse_scalar<T>(field, item.substr(b, e - b + 1)));
  }
  return out;
}

}  // namespace detail

inline ExperimentPlan parse_plan(const boost::property_tree::ptree& pt, const std::filesystem::path& base = {}) {
  static const std::set<std::string> kSections{"experiment", "instance", "solver", "output"};
  static const std::set<std::string> kSolverKeys{
      "mode", "engine", "beta", "betas", "qs", "beta_rule", "rho", "alpha", "tau", "taus",
      "workers", "workers_list", "epochs", "trace_every", "seeds", "stop_feas", "stop_obj",
      "report_feas", "serial_weights", "reference", "lalm", "ergodic"};
  static const std::set<std::string> kExperimentKeys{"kind", "variant", "name", "output_dir"};

  ExperimentPlan p;
  for (const auto& [section, body] : pt) {
    if (!kSections.count(section)) throw PlanError(section, "unknown section");
    for (const auto& [key, node] : body) {
      const std::string field = section + "." + key;
      const std::string v = node.get_value<std::string>();
      if (section == "experiment") {
        if (!kExperimentKeys.count(key)) throw PlanError(field, "unknown key");
        if (key == "kind") {
          if (v == "bp_beta_sweep") p.kind = ExperimentKind::BpBetaSweep;
          else if (v == "bp_q_sweep") p.kind = ExperimentKind::BpQSweep;
          else if (v == "ncqp_delay") p.kind = ExperimentKind::NcqpDelay;
          else if (v == "svm_parallel") p.kind = ExperimentKind::SvmParallel;
          else if (v == "custom") p.kind = ExperimentKind::Custom;
          else throw PlanError(field, "unknown experiment '" + v + "'");
        } else if (key == "variant") {
          p.variant = v;
        } else if (key == "name") {
          p.name = v;
        } else {
          p.output_dir = v;
        }
      } else if (section == "instance") {
        if (key == "family") p.instance.family = v;
        else if (key == "seed") p.instance.seed = detail::parse_scalar<std::uint64_t>(field, v);
        else if (key == "dataset") p.instance.dataset = (base.empty() || std::filesystem::path(v).is_absolute()) ? v : (base / v).string();
        else p.instance.params[key] = detail::parse_scalar<double>(field, v);
      } else if (section == "output") {
        if (key != "timing") throw PlanError(field, "unknown key");
        p.timing = detail::parse_bool(field, v);
      } else {
        if (!kSolverKeys.count(key)) throw PlanError(field, "unknown key");
        if (key == "mode") p.mode = v;
        else if (key == "engine") p.engine = v;
        else if (key == "beta") p.betas = {detail::parse_scalar<double>(field, v)};
        else if (key == "betas") p.betas = detail::parse_list<double>(field, v);
        else if (key == "qs") p.qs = detail::parse_list<Index>(field, v);
        else if (key == "beta_rule") p.beta_rule = v;
        else if (key == "rho") p.rho = detail::parse_scalar<double>(field, v);
        else if (key == "alpha") p.alpha = detail::parse_scalar<double>(field, v);
        else if (key == "tau") p.taus = {detail::parse_scalar<int>(field, v)};
        else if (key == "taus") p.taus = detail::parse_list<int>(field, v);
        else if (key == "workers") p.workers_list = {detail::parse_scalar<int>(field, v)};
        else if (key == "workers_list") p.workers_list = detail::parse_list<int>(field, v);
        else if (key == "epochs") p.epochs = detail::parse_scalar<std::int64_t>(field, v);
        else if (key == "trace_every") p.trace_every = detail::parse_scalar<std::int64_t>(field, v);
        else if (key == "seeds") p.seeds = v.empty() ? std::vector<std::uint64_t>{} : detail::parse_list<std::uint64_t>(field, v);
        else if (key == "stop_feas") p.stop_feas = detail::parse_scalar<double>(field, v);
        else if (key == "stop_obj") p.stop_obj = detail::parse_scalar<double>(field, v);
        else if (key == "report_feas") p.report_feas = detail::parse_scalar<double>(field, v);
        else if (key == "serial_weights") p.serial_weights = detail::parse_bool(field, v);
        else if (key == "reference") p.reference = detail::parse_bool(field, v);
        else if (key == "lalm") p.lalm = detail::parse_bool(field, v);
        else p.ergodic = detail::parse_bool(field, v);
      }
    }
  }
  return p;
}

/// Semantic checks that do not need the instance.
inline void validate_plan(const ExperimentPlan& p) {
  if (p.seeds.empty()) throw PlanError("solver.seeds", "at least one seed is required");
  if (p.epochs < 0) throw PlanError("solver.epochs", "must be nonnegative");
  if (p.trace_every < 1) throw PlanError("solver.trace_every", "must be >= 1");
  if (p.instance.family.empty()) throw PlanError("instance.family", "missing");
  for (double b : p.betas)
    if (!(b > 0.0)) throw PlanError("solver.betas", "beta must be positive");
  if (p.rho && !(*p.rho > 0.0)) throw PlanError("solver.rho", "must be positive");
  if (!(p.alpha > 0.0)) throw PlanError("solver.alpha", "must be positive");
  for (int t : p.taus)
    if (t < 0) throw PlanError("solver.taus", "tau must be nonnegative");
  for (int w : p.workers_list)
    if (w < 1) throw PlanError("solver.workers_list", "worker counts are thread totals and must be >= 1");
  if (!p.instance.dataset.empty() && !std::filesystem::exists(p.instance.dataset))
    throw PlanError("instance.dataset", "file not found: " + p.instance.dataset);
  switch (p.kind) {
    case ExperimentKind::BpBetaSweep:
      if (p.instance.family != "basis_pursuit") throw PlanError("instance.family", "bp_beta_sweep needs basis_pursuit");
      if (p.betas.empty()) throw PlanError("solver.betas", "required for bp_beta_sweep");
      break;
    case ExperimentKind::BpQSweep:
      if (p.instance.family != "basis_pursuit") throw PlanError("instance.family", "bp_q_sweep needs basis_pursuit");
      if (p.qs.empty()) throw PlanError("solver.qs", "required for bp_q_sweep");
      if (p.beta_rule != "fixed" && p.beta_rule != "sqrt_q") throw PlanError("solver.beta_rule", "fixed or sqrt_q");
      if (p.beta_rule == "fixed" && p.betas.size() != 1) throw PlanError("solver.beta", "one beta required with beta_rule = fixed");
      break;
    case ExperimentKind::NcqpDelay:
      if (p.instance.family != "ncqp") throw PlanError("instance.family", "ncqp_delay needs ncqp");
      if (p.variant != "dep" && p.variant != "indep") throw PlanError("experiment.variant", "dep or indep");
      if (p.taus.empty()) throw PlanError("solver.taus", "required for ncqp_delay");
      if (p.engine != "delay_sim" && p.engine != "async") throw PlanError("solver.engine", "delay_sim or async");
      break;
    case ExperimentKind::SvmParallel:
      if (p.workers_list.empty()) throw PlanError("solver.workers_list", "required for svm_parallel");
      break;
    case ExperimentKind::Custom: {
      static const std::set<std::string> modes{"serial", "lalm", "async", "sync", "delay_sim"};
      if (!modes.count(p.mode)) throw PlanError("solver.mode", "unknown mode '" + p.mode + "'");
      break;
    }
  }
}

inline ExperimentPlan load_plan(const std::string& path) {
  if (!std::filesystem::exists(path)) throw pdbcu::IoError("plan file not found: " + path);
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::read_ini(path, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw PlanError("line " + std::to_string(e.line()), e.message());
  }
  ExperimentPlan p = parse_plan(pt, std::filesystem::path(path).parent_path());
  validate_plan(p);
  return p;
}

inline ExperimentPlan parse_plan_text(const std::string& text) {
  std::istringstream is(text);
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::read_ini(is, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw PlanError("line " + std::to_string(e.line()), e.message());
  }
  ExperimentPlan p = parse_plan(pt);
  validate_plan(p);
  return p;
}

}  // namespace bench
