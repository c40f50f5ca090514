#pragma once

#include <pdbcu/generators.hpp>

#include <nlohmann/json.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>

namespace pdbcu {

/// Recipe for a generated instance. Numeric parameters by family:
///   basis_pursuit:  q, n, nnz, blocks
///   ncqp:           q, n, blocks (0 = coordinates)
///   dual_svm:       samples, features, density, C, block_width
///                   or, with `dataset` set, C and block_width only
struct GeneratorSpec {
  std::string family;
  std::map<std::string, double> params;
  std::uint64_t seed = 0;
  std::string dataset;  // LIBSVM file for dual_svm

  double get(const std::string& key, double fallback) const {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
  Index get_index(const std::string& key, Index fallback) const {
    const double v = get(key, static_cast<double>(fallback));
    if (v < 0 || v != std::floor(v)) throw ParameterError("generator: " + key + " must be a nonnegative integer");
    return static_cast<Index>(v);
  }
};

inline ProblemInstance make_instance(const GeneratorSpec& spec) {
  ProblemInstance inst;
  if (spec.family == "basis_pursuit") {
    BasisPursuitSpec s;
    s.rows = spec.get_index("q", s.rows);
    s.cols = spec.get_index("n", s.cols);
    s.nnz = spec.get_index("nnz", s.nnz);
    s.blocks = spec.get_index("blocks", s.blocks);
    s.seed = spec.seed;
    inst = gen_basis_pursuit(s);
  } else if (spec.family == "ncqp") {
    NcqpSpec s;
    s.rows = spec.get_index("q", s.rows);
    s.cols = spec.get_index("n", s.cols);
    s.blocks = spec.get_index("blocks", s.blocks);
    s.seed = spec.seed;
    inst = gen_ncqp(s);
  } else if (spec.family == "dual_svm") {
    DualSvmSpec s;
    s.c = spec.get("C", s.c);
    s.block_width = spec.get_index("block_width", s.block_width);
    if (s.block_width < 1) throw ParameterError("generator: block_width must be positive");
    LabeledDataset data;
    if (!spec.dataset.empty()) {
      data = read_libsvm(spec.dataset);
    } else {
      SyntheticSvmSpec d;
      d.samples = spec.get_index("samples", d.samples);
      d.features = spec.get_index("features", d.features);
      d.density = spec.get("density", d.density);
      d.seed = spec.seed;
      data = gen_synthetic_svm_data(d);
    }
    inst = gen_dual_svm(data, s);
    if (!spec.dataset.empty()) inst.metadata["dataset"] = spec.dataset;
    else inst.metadata["seed"] = std::to_string(spec.seed);
  } else {
    throw ParameterError("generator: unknown family '" + spec.family + "'");
  }
  return inst;
}

namespace detail {
struct Fnv1a {
  std::uint64_t h = 1469598103934665603ULL;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t k = 0; k < n; ++k) {
      h ^= c[k];
      h *= 1099511628211ULL;
    }
  }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void vec(const Vector& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Index j = 0; j < v.size(); ++j) f64(v[j]);
  }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
};
}  // namespace detail

/// FNV-1a over the partition, A, b, the prox terms and the smooth part
/// probed at a fixed point. Identical data gives an identical hash on a
/// given build.
inline std::uint64_t fingerprint(const ProblemInstance& inst) {
  detail::Fnv1a h;
  for (const auto& r : inst.partition.ranges()) h.u64(static_cast<std::uint64_t>(r.width));
  const SparseMatrix a = inst.constraint.to_sparse();
  h.u64(static_cast<std::uint64_t>(a.rows()));
  for (Index c = 0; c < a.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(a, c); it; ++it) {
      h.u64(static_cast<std::uint64_t>(it.row()));
      h.u64(static_cast<std::uint64_t>(c));
      h.f64(it.value());
    }
  h.vec(inst.constraint.rhs());
  for (const auto& t : inst.prox_terms) {
    h.u64(static_cast<std::uint64_t>(t.kind));
    h.f64(t.weight);
    h.f64(t.lo);
    h.f64(t.hi);
  }
  h.str(inst.smooth.function->kind());
  Vector probe(inst.dim());
  for (Index j = 0; j < probe.size(); ++j) probe[j] = 0.5 + 0.25 * static_cast<double>(j % 5);
  h.f64(inst.smooth.value(probe));
  Vector g(inst.partition[0].width);
  inst.smooth.block_grad(probe, inst.partition[0], g);
  h.vec(g);
  return h.h;
}

inline std::string fingerprint_hex(const ProblemInstance& inst) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fingerprint(inst)));
  return buf;
}

inline constexpr int kInstanceFileVersion = 1;

/// Instance files hold the recipe plus a fingerprint of the generated data,
/// not the data itself.
inline nlohmann::json instance_to_json(const GeneratorSpec& spec, const ProblemInstance& inst) {
  nlohmann::json j;
  j["format"] = "pdbcu-instance";
  j["version"] = kInstanceFileVersion;
  j["family"] = spec.family;
  j["params"] = spec.params;
  j["seed"] = spec.seed;
  if (!spec.dataset.empty()) j["dataset"] = spec.dataset;
  j["fingerprint"] = fingerprint_hex(inst);
  return j;
}

inline GeneratorSpec spec_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "pdbcu-instance")
      throw IngestionError("instance file: wrong format tag");
    if (j.at("version").get<int>() != kInstanceFileVersion)
      throw IngestionError("instance file: unsupported version");
    GeneratorSpec spec;
    spec.family = j.at("family").get<std::string>();
    spec.params = j.at("params").get<std::map<std::string, double>>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("dataset")) spec.dataset = j.at("dataset").get<std::string>();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(std::string("instance file: ") + e.what());
  }
}

inline void save_instance(const std::string& path, const GeneratorSpec& spec, const ProblemInstance& inst) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write instance file " + path);
  os << instance_to_json(spec, inst).dump(2) << '\n';
  if (!os) throw IoError("write failed for " + path);
}

struct LoadedInstance {
  GeneratorSpec spec;
  ProblemInstance instance;
};

/// Regenerates the instance and checks it against the stored fingerprint.
inline LoadedInstance load_instance(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open instance file " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(path + ": " + e.what());
  }
  LoadedInstance out{spec_from_json(j), {}};
  out.instance = make_instance(out.spec);
  const std::string want = j.value("fingerprint", "");
  const std::string got = fingerprint_hex(out.instance);
  if (want != got)
    throw IngestionError(path + ": fingerprint mismatch (file " + want + ", regenerated " + got + ")");
  return out;
}

}  // namespace pdbcu
