// pdbcu-bench: run experiment plans, speedup studies, instance checks and
// instance generation.
//
// Exit codes: 0 success, 1 usage, 2 numerical or oracle failure, 3 I/O.

#include "bench/experiments.hpp"

#include <pdbcu/verify.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace {

enum Exit { kOk = 0, kUsage = 1, kNumerical = 2, kIo = 3 };

pdbcu::GeneratorSpec spec_from_flags(const std::string& family, const std::vector<std::string>& params,
                                     std::uint64_t seed, const std::string& dataset) {
  pdbcu::GeneratorSpec spec;
  spec.family = family;
  spec.seed = seed;
  spec.dataset = dataset;
  for (const auto& kv : params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw bench::PlanError("--param", "expected key=value, got '" + kv + "'");
    try {
      std::size_t used = 0;
      const std::string v = kv.substr(eq + 1);
      spec.params[kv.substr(0, eq)] = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
    } catch (const std::logic_error&) {
      throw bench::PlanError("--param", "bad number in '" + kv + "'");
    }
  }
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomized primal-dual block coordinate update: experiment harness"};
  app.require_subcommand(1);

  std::string plan_path, out_dir;
  bool no_timing = false;
  auto* run = app.add_subcommand("run", "execute every (configuration x seed) cell of a plan file");
  run->add_option("plan", plan_path, "plan file")->required();
  run->add_option("-o,--out", out_dir, "output directory (default: plan output_dir, then $PDBCU_OUTPUT_DIR)");
  run->add_flag("--no-timing", no_timing, "write zeros in the timing columns for byte-stable output");

  std::string speed_plan, speed_out;
  auto* speed = app.add_subcommand("speedup", "async vs sync time-to-fixed-epoch per thread count");
  speed->add_option("plan", speed_plan, "plan file (svm_parallel or ncqp_delay)")->required();
  speed->add_option("-o,--out", speed_out, "output directory");

  std::string v_instance, v_family, v_dataset, v_trace;
  std::vector<std::string> v_params;
  std::uint64_t v_seed = 0;
  double v_scale_norms = 1.0;
  bool v_no_reference = false;
  auto* verify = app.add_subcommand("verify", "run the invariant suite on an instance");
  verify->add_option("-i,--instance", v_instance, "instance file written by gen");
  verify->add_option("-f,--family", v_family, "generator family (basis_pursuit, ncqp, dual_svm)");
  verify->add_option("-p,--param", v_params, "generator parameter key=value");
  verify->add_option("-s,--seed", v_seed, "generator seed");
  verify->add_option("-d,--dataset", v_dataset, "LIBSVM file for dual_svm");
  verify->add_option("-t,--trace", v_trace, "also validate this trace CSV");
  verify->add_option("--scale-sq-norms", v_scale_norms, "fault injection: multiply cached block norms");
  verify->add_flag("--no-reference", v_no_reference, "skip the reference KKT check");

  std::string g_family, g_dataset, g_out;
  std::vector<std::string> g_params;
  std::uint64_t g_seed = 0;
  auto* gen = app.add_subcommand("gen", "write an instance file");
  gen->add_option("-f,--family", g_family, "generator family")->required();
  gen->add_option("-p,--param", g_params, "generator parameter key=value");
  gen->add_option("-s,--seed", g_seed, "generator seed");
  gen->add_option("-d,--dataset", g_dataset, "LIBSVM file for dual_svm");
  gen->add_option("-o,--out", g_out, "output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*run) {
      const bench::ExperimentPlan plan = [&] {
        auto p = bench::load_plan(plan_path);
        if (no_timing) p.timing = false;
        return p;
      }();
      const auto dir = bench::resolve_output_dir(out_dir, plan);
      bench::run_plan(plan, dir, std::cout);
      std::cout << "wrote " << (dir / plan.name).string() << '\n';
    } else if (*speed) {
      const auto plan = bench::load_plan(speed_plan);
      const auto rows = bench::run_speedup(plan, std::cerr);
      const auto dir = bench::resolve_output_dir(speed_out, plan) / plan.name;
      bench::write_speedup(dir, rows, std::cout);
    } else if (*verify) {
      pdbcu::ProblemInstance inst;
      if (!v_instance.empty()) {
        inst = pdbcu::load_instance(v_instance).instance;
      } else if (!v_family.empty()) {
        inst = pdbcu::make_instance(spec_from_flags(v_family, v_params, v_seed, v_dataset));
      } else {
        std::cerr << "verify: need --instance or --family\n";
        return kUsage;
      }
      if (v_scale_norms != 1.0) {
        auto norms = inst.constraint.sq_norms();
        for (double& v : norms) v *= v_scale_norms;
        inst.constraint.override_sq_norms(norms);
      }
      pdbcu::VerifyOptions opts;
      opts.reference = !v_no_reference;
      auto report = pdbcu::verify_instance(inst, opts);
      if (!v_trace.empty()) report.checks.push_back(pdbcu::check_trace(pdbcu::read_trace_csv(v_trace)));
      for (const auto& c : report.checks)
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
      return report.all_passed() ? kOk : kNumerical;
    } else if (*gen) {
      const auto spec = spec_from_flags(g_family, g_params, g_seed, g_dataset);
      const auto inst = pdbcu::make_instance(spec);
      pdbcu::save_instance(g_out, spec, inst);
      std::cout << "wrote " << g_out << " (fingerprint " << pdbcu::fingerprint_hex(inst) << ")\n";
    }
  } catch (const pdbcu::ParameterError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const pdbcu::StructuralError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const pdbcu::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const pdbcu::IngestionError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}
