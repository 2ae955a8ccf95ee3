#pragma once

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppgtok/common.hpp"
#include "ppgtok/types.hpp"

// File formats (all multi-byte integers little-endian):
//   features  "PPGF" | u32 version=1 | u64 T | u32 D | T*D float32 row-major
//   labels    "PPGL" | u32 version=1 | u64 T | u32 num_classes | T u32 ids
//             optional "<path>.syms" text sidecar, one phone name per line
//   manifest  UTF-8 text, per line: feature-path \t label-path [\t group]
//   codebook  JSON, schema in save_codebook below

namespace ppgtok {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts unsupported");

namespace detail {

inline void write_raw(std::ostream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!out) throw IoError("write failed");
}

inline void read_raw(std::istream& in, void* p, std::size_t n,
                     const std::string& what) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) {
    throw IoError("truncated file while reading " + what);
  }
}

template <typename T>
void write_pod(std::ostream& out, T v) {
  write_raw(out, &v, sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& what) {
  T v;
  read_raw(in, &v, sizeof(T), what);
  return v;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  return in;
}

inline void check_magic(std::istream& in, const char* magic,
                        const std::filesystem::path& path) {
  char buf[4];
  read_raw(in, buf, 4, "magic of " + path.string());
  if (std::memcmp(buf, magic, 4) != 0) {
    throw IoError("bad magic in " + path.string() + " (expected " + magic + ")");
  }
}

}  // namespace detail

inline void write_features(const std::filesystem::path& path,
                           const FeatureMatrix& m) {
  m.validate();
  auto out = detail::open_out(path);
  detail::write_raw(out, "PPGF", 4);
  detail::write_pod<std::uint32_t>(out, kFeatureFormatVersion);
  detail::write_pod<std::uint64_t>(out, m.frames);
  detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.dim));
  std::vector<float> row(m.dim);
  for (std::size_t t = 0; t < m.frames; ++t) {
    const double* src = m.row(t);
    for (std::size_t d = 0; d < m.dim; ++d) row[d] = static_cast<float>(src[d]);
    detail::write_raw(out, row.data(), m.dim * sizeof(float));
  }
}

inline FeatureMatrix read_features(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  detail::check_magic(in, "PPGF", path);
  const auto version = detail::read_pod<std::uint32_t>(in, "version");
  if (version != kFeatureFormatVersion) {
    throw IoError("unsupported feature file version " + std::to_string(version) +
                  " in " + path.string());
  }
  const auto frames = detail::read_pod<std::uint64_t>(in, "frame count");
  const auto dim = detail::read_pod<std::uint32_t>(in, "dimension");
  if (frames < 1 || dim < 1) {
    throw IoError("empty feature matrix in " + path.string());
  }
  FeatureMatrix m;
  m.frames = static_cast<std::size_t>(frames);
  m.dim = dim;
  m.data.resize(m.frames * m.dim);
  std::vector<float> row(m.dim);
  for (std::size_t t = 0; t < m.frames; ++t) {
    detail::read_raw(in, row.data(), m.dim * sizeof(float),
                     "features of " + path.string());
    double* dst = m.row(t);
    for (std::size_t d = 0; d < m.dim; ++d) dst[d] = static_cast<double>(row[d]);
  }
  try {
    m.validate();
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return m;
}

inline void write_labels(const std::filesystem::path& path,
                         const LabelSequence& labels) {
  labels.validate();
  auto out = detail::open_out(path);
  detail::write_raw(out, "PPGL", 4);
  detail::write_pod<std::uint32_t>(out, kLabelFormatVersion);
  detail::write_pod<std::uint64_t>(out, labels.size());
  detail::write_pod<std::uint32_t>(out, labels.num_classes);
  detail::write_raw(out, labels.labels.data(),
                    labels.size() * sizeof(std::uint32_t));
  if (!labels.symbols.empty()) {
    std::ofstream syms(path.string() + ".syms");
    if (!syms) throw IoError("cannot write symbol sidecar for " + path.string());
    for (const auto& s : labels.symbols) syms << s << '\n';
  }
}

inline LabelSequence read_labels(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  detail::check_magic(in, "PPGL", path);
  const auto version = detail::read_pod<std::uint32_t>(in, "version");
  if (version != kLabelFormatVersion) {
    throw IoError("unsupported label file version " + std::to_string(version) +
                  " in " + path.string());
  }
  const auto frames = detail::read_pod<std::uint64_t>(in, "frame count");
  const auto num_classes = detail::read_pod<std::uint32_t>(in, "class count");
  LabelSequence labels;
  labels.num_classes = num_classes;
  labels.labels.resize(static_cast<std::size_t>(frames));
  detail::read_raw(in, labels.labels.data(), labels.labels.size() * sizeof(std::uint32_t),
                   "labels of " + path.string());
  const std::filesystem::path syms_path = path.string() + ".syms";
  if (std::filesystem::exists(syms_path)) {
    std::ifstream syms(syms_path);
    std::string line;
    while (std::getline(syms, line)) labels.symbols.push_back(line);
  }
  try {
    labels.validate();
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return labels;
}

inline CorpusManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  CorpusManifest manifest;
  manifest.base_dir = path.parent_path().string();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ManifestEntry entry;
    std::istringstream fields(line);
    if (!std::getline(fields, entry.feature_path, '\t') ||
        !std::getline(fields, entry.label_path, '\t')) {
      throw IoError("malformed manifest line " + std::to_string(lineno) + " in " +
                    path.string());
    }
    std::getline(fields, entry.group, '\t');
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

inline void write_manifest(const std::filesystem::path& path,
                           const CorpusManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  for (const auto& e : manifest.entries) {
    out << e.feature_path << '\t' << e.label_path;
    if (!e.group.empty()) out << '\t' << e.group;
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::filesystem::path resolve_path(const std::string& base_dir,
                                          const std::string& p) {
  std::filesystem::path fp(p);
  if (fp.is_absolute() || base_dir.empty()) return fp;
  return std::filesystem::path(base_dir) / fp;
}

// Concatenates every manifest entry, in order, into one pooled corpus.
// All entries must agree on feature dimension, class count and symbols.
inline PooledCorpus pool_corpus(const CorpusManifest& manifest) {
  if (manifest.entries.empty()) throw IoError("manifest has no entries");
  PooledCorpus pooled;
  pooled.boundaries.push_back(0);
  bool first = true;
  for (const auto& entry : manifest.entries) {
    FeatureMatrix features =
        read_features(resolve_path(manifest.base_dir, entry.feature_path));
    LabelSequence labels =
        read_labels(resolve_path(manifest.base_dir, entry.label_path));
    if (features.frames != labels.size()) {
      throw IoError("feature/label length mismatch for " + entry.feature_path);
    }
    if (first) {
      pooled.features.dim = features.dim;
      pooled.labels.num_classes = labels.num_classes;
      pooled.labels.symbols = labels.symbols;
      first = false;
    } else {
      if (features.dim != pooled.features.dim) {
        throw IoError("feature dimension mismatch at " + entry.feature_path +
                      ": " + std::to_string(features.dim) + " vs " +
                      std::to_string(pooled.features.dim));
      }
      if (labels.num_classes != pooled.labels.num_classes) {
        throw IoError("class count mismatch at " + entry.label_path);
      }
      if (!labels.symbols.empty() && !pooled.labels.symbols.empty() &&
          labels.symbols != pooled.labels.symbols) {
        throw IoError("symbol table mismatch at " + entry.label_path);
      }
      if (pooled.labels.symbols.empty()) pooled.labels.symbols = labels.symbols;
    }
    pooled.features.frames += features.frames;
    pooled.features.data.insert(pooled.features.data.end(), features.data.begin(),
                                features.data.end());
    pooled.labels.labels.insert(pooled.labels.labels.end(), labels.labels.begin(),
                                labels.labels.end());
    pooled.boundaries.push_back(pooled.features.frames);
    pooled.groups.push_back(entry.group);
  }
  pooled.features.validate();
  pooled.labels.validate();
  return pooled;
}

namespace detail {

inline nlohmann::ordered_json matrix_to_json(const std::vector<double>& data,
                                             std::size_t rows, std::size_t cols) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < rows; ++r) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < cols; ++c) row.push_back(data[r * cols + c]);
    out.push_back(std::move(row));
  }
  return out;
}

inline std::vector<double> matrix_from_json(const nlohmann::ordered_json& j,
                                            std::size_t rows, std::size_t cols,
                                            const std::string& what) {
  if (!j.is_array() || j.size() != rows) throw IoError("bad " + what + " shape");
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != cols) throw IoError("bad " + what + " row");
    for (const auto& v : row) data.push_back(v.get<double>());
  }
  return data;
}

}  // namespace detail

inline void save_codebook(const std::filesystem::path& path, const Codebook& cb) {
  cb.validate();
  nlohmann::ordered_json j;
  j["version"] = kCodebookFormatVersion;
  j["method"] = cb.meta.method;
  j["k"] = cb.k;
  j["dim"] = cb.dim;
  if (cb.meta.method == "vq") {
    j["alpha"] = cb.meta.alpha;
  } else {
    j["lambda"] = cb.meta.lambda;
  }
  j["seed"] = cb.meta.seed;
  j["iterations"] = cb.meta.iterations;
  j["converged"] = cb.meta.converged;
  j["final_residual"] = cb.meta.final_residual;
  if (cb.meta.method == "vq") {
    j["learning_rate"] = cb.meta.learning_rate;
    j["batch_size"] = cb.meta.batch_size;
    j["epochs"] = cb.meta.epochs;
  }
  j["centroids"] = detail::matrix_to_json(cb.centroids, cb.k, cb.dim);
  if (cb.has_gaussians) {
    nlohmann::ordered_json g;
    g["num_classes"] = cb.gaussians.num_classes;
    g["means"] = detail::matrix_to_json(cb.gaussians.means, cb.gaussians.num_classes,
                                        cb.gaussians.dim);
    g["variances"] = detail::matrix_to_json(cb.gaussians.variances,
                                            cb.gaussians.num_classes, cb.gaussians.dim);
    g["floor"] = cb.gaussians.variance_floor;
    j["gaussians"] = std::move(g);
  }
  auto out = detail::open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

inline Codebook load_codebook(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  nlohmann::ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("cannot parse codebook " + path.string() + ": " + e.what());
  }
  try {
    if (j.at("version").get<int>() != kCodebookFormatVersion) {
      throw IoError("unsupported codebook version");
    }
    Codebook cb;
    cb.meta.method = j.at("method").get<std::string>();
    if (cb.meta.method != "kmeans" && cb.meta.method != "vq") {
      throw IoError("unknown codebook method: " + cb.meta.method);
    }
    cb.k = j.at("k").get<std::size_t>();
    cb.dim = j.at("dim").get<std::size_t>();
    if (cb.meta.method == "vq") {
      cb.meta.alpha = j.at("alpha").get<double>();
      cb.meta.learning_rate = j.at("learning_rate").get<double>();
      cb.meta.batch_size = j.at("batch_size").get<std::uint64_t>();
      cb.meta.epochs = j.at("epochs").get<std::uint64_t>();
    } else {
      cb.meta.lambda = j.at("lambda").get<double>();
    }
    cb.meta.seed = j.at("seed").get<std::uint64_t>();
    cb.meta.iterations = j.at("iterations").get<std::uint64_t>();
    cb.meta.converged = j.at("converged").get<bool>();
    cb.meta.final_residual = j.at("final_residual").get<double>();
    cb.centroids = detail::matrix_from_json(j.at("centroids"), cb.k, cb.dim, "centroids");
    if (j.contains("gaussians")) {
      const auto& g = j.at("gaussians");
      cb.has_gaussians = true;
      cb.gaussians.num_classes = g.at("num_classes").get<std::uint32_t>();
      cb.gaussians.dim = cb.dim;
      cb.gaussians.means = detail::matrix_from_json(g.at("means"),
                                                    cb.gaussians.num_classes, cb.dim,
                                                    "gaussian means");
      cb.gaussians.variances = detail::matrix_from_json(g.at("variances"),
                                                        cb.gaussians.num_classes,
                                                        cb.dim, "gaussian variances");
      cb.gaussians.variance_floor = g.at("floor").get<double>();
    }
    cb.validate();
    return cb;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad codebook schema in " + path.string() + ": " + e.what());
  }
}

}  // namespace ppgtok
