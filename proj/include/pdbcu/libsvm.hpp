#pragma once

#include <pdbcu/types.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace pdbcu {

/// Labeled sparse samples, one row per sample.
struct LabeledDataset {
  SparseRowMatrix features;  // N x d
  Vector labels;             // N

  Index num_samples() const { return labels.size(); }
  Index num_features() const { return features.cols(); }
};

/// Parses LIBSVM text: "label idx:val idx:val ...", indices 1-based and
/// strictly increasing. Blank lines and anything after '#' are ignored.
/// Indices become 0-based; the feature count is the largest index seen.
inline LabeledDataset read_libsvm(std::istream& is, const std::string& source = "<stream>") {
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> labels;
  Index max_feature = 0;
  std::string line;
  long lineno = 0;
  auto fail = [&](const std::string& what) {
    throw IngestionError(source + ":" + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    std::string tok;
    if (!(tokens >> tok)) continue;
    double label = 0.0;
    try {
      std::size_t used = 0;
      label = std::stod(tok, &used);
      if (used != tok.size()) fail("bad label '" + tok + "'");
    } catch (const std::logic_error&) {
      fail("bad label '" + tok + "'");
    }
    const Index row = static_cast<Index>(labels.size());
    labels.push_back(label);
    long long prev = 0;
    while (tokens >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == tok.size())
        fail("expected idx:val, got '" + tok + "'");
      long long idx = 0;
      double val = 0.0;
      try {
        std::size_t used = 0;
        idx = std::stoll(tok.substr(0, colon), &used);
        if (used != colon) fail("bad index in '" + tok + "'");
        const std::string v = tok.substr(colon + 1);
        val = std::stod(v, &used);
        if (used != v.size()) fail("bad value in '" + tok + "'");
      } catch (const std::logic_error&) {
        fail("unparsable token '" + tok + "'");
      }
      if (idx < 1) fail("indices are 1-based");
      if (idx <= prev) fail("indices must be strictly increasing");
      prev = idx;
      trips.emplace_back(row, static_cast<Index>(idx - 1), val);
      max_feature = std::max<Index>(max_feature, static_cast<Index>(idx));
    }
  }
  LabeledDataset ds;
  ds.labels = Eigen::Map<const Vector>(labels.data(), static_cast<Index>(labels.size()));
  ds.features.resize(static_cast<Index>(labels.size()), max_feature);
  ds.features.setFromTriplets(trips.begin(), trips.end());
  ds.features.makeCompressed();
  return ds;
}

inline LabeledDataset read_libsvm(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open dataset " + path);
  return read_libsvm(is, path);
}

inline void write_libsvm(std::ostream& os, const LabeledDataset& ds) {
  char buf[40];
  for (Index r = 0; r < ds.num_samples(); ++r) {
    std::snprintf(buf, sizeof buf, "%.17g", ds.labels[r]);
    os << buf;
    for (SparseRowMatrix::InnerIterator it(ds.features, r); it; ++it) {
      std::snprintf(buf, sizeof buf, "%.17g", it.value());
      os << ' ' << (it.col() + 1) << ':' << buf;
    }
    os << '\n';
  }
}

inline void write_libsvm(const std::string& path, const LabeledDataset& ds) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write dataset " + path);
  write_libsvm(os, ds);
}

}  // namespace pdbcu
