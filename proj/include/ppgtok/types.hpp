#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ppgtok/common.hpp"

namespace ppgtok {

// Squared Euclidean distance between two length-`dim` vectors.
inline double squared_distance(const double* a, const double* b,
                               std::size_t dim) {
  double acc = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    const double diff = a[d] - b[d];
    acc += diff * diff;
  }
  return acc;
}

// T x D frame-level continuous features, row-major, 64-bit internally.
struct FeatureMatrix {
  std::size_t frames = 0;
  std::size_t dim = 0;
  std::vector<double> data;

  static FeatureMatrix zeros(std::size_t frames, std::size_t dim) {
    FeatureMatrix m;
    m.frames = frames;
    m.dim = dim;
    m.data.assign(frames * dim, 0.0);
    return m;
  }

  const double* row(std::size_t t) const { return data.data() + t * dim; }
  double* row(std::size_t t) { return data.data() + t * dim; }
  double at(std::size_t t, std::size_t d) const { return data[t * dim + d]; }
  double& at(std::size_t t, std::size_t d) { return data[t * dim + d]; }

  void validate() const {
    if (frames < 1 || dim < 1) {
      throw IoError("feature matrix must have at least one frame and one dimension");
    }
    if (data.size() != frames * dim) {
      throw IoError("feature matrix data length does not match frames x dim");
    }
    for (const double v : data) {
      if (!std::isfinite(v)) throw IoError("feature matrix contains a non-finite value");
    }
  }
};

// T frame-level phonetic class ids over a table of num_classes phones.
struct LabelSequence {
  std::vector<std::uint32_t> labels;
  std::uint32_t num_classes = 0;
  std::vector<std::string> symbols;  // empty, or one name per class id

  std::size_t size() const { return labels.size(); }

  void validate() const {
    if (num_classes < 1) throw IoError("label sequence needs num_classes >= 1");
    if (labels.empty()) throw IoError("label sequence is empty");
    for (const std::uint32_t y : labels) {
      if (y >= num_classes) {
        throw IoError("label id " + std::to_string(y) + " out of range [0, " +
                      std::to_string(num_classes) + ")");
      }
    }
    if (!symbols.empty() && symbols.size() != num_classes) {
      throw IoError("symbol table size does not match num_classes");
    }
  }
};

inline void check_paired(const FeatureMatrix& features,
                         const LabelSequence& labels) {
  if (features.frames != labels.size()) {
    throw IoError("feature/label length mismatch: " +
                  std::to_string(features.frames) + " frames vs " +
                  std::to_string(labels.size()) + " labels");
  }
}

// T cluster indices; doubles as the emitted discrete token sequence.
struct Assignment {
  std::vector<std::uint32_t> indices;

  std::size_t size() const { return indices.size(); }
  std::uint32_t operator[](std::size_t t) const { return indices[t]; }
};

// Per-class diagonal Gaussians: mean and variance rows per phone class.
struct GaussianClassModels {
  std::uint32_t num_classes = 0;
  std::size_t dim = 0;
  std::vector<double> means;      // num_classes x dim
  std::vector<double> variances;  // num_classes x dim, elementwise >= floor
  double variance_floor = 1e-4;

  const double* mean(std::uint32_t j) const { return means.data() + j * dim; }
  const double* variance(std::uint32_t j) const { return variances.data() + j * dim; }

  void validate() const {
    if (num_classes < 1 || dim < 1) throw IoError("empty Gaussian class models");
    if (means.size() != num_classes * dim || variances.size() != num_classes * dim) {
      throw IoError("Gaussian model shape mismatch");
    }
    if (!(variance_floor > 0.0)) throw IoError("variance floor must be positive");
    for (const double v : variances) {
      if (!(v >= variance_floor)) throw IoError("variance below floor");
    }
    for (const double m : means) {
      if (!std::isfinite(m)) throw IoError("non-finite Gaussian mean");
    }
  }
};

struct CodebookMeta {
  std::string method;  // "kmeans" or "vq"
  double lambda = 0.0;  // purity weight, kmeans runs
  double alpha = 0.0;   // purity weight, vq runs
  std::uint64_t seed = 0;
  std::uint64_t iterations = 0;  // iterations (kmeans) or epochs (vq) run
  bool converged = false;
  double final_residual = 0.0;
  // vq training settings, persisted so a codebook file is self-describing
  double learning_rate = 0.0;
  std::uint64_t batch_size = 0;
  std::uint64_t epochs = 0;
};

// K x D codeword matrix plus training metadata. VQ codebooks also carry
// the class Gaussians they were trained with.
struct Codebook {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<double> centroids;  // row-major k x dim
  CodebookMeta meta;
  bool has_gaussians = false;
  GaussianClassModels gaussians;

  static Codebook zeros(std::size_t k, std::size_t dim) {
    Codebook cb;
    cb.k = k;
    cb.dim = dim;
    cb.centroids.assign(k * dim, 0.0);
    return cb;
  }

  const double* centroid(std::size_t i) const { return centroids.data() + i * dim; }
  double* centroid(std::size_t i) { return centroids.data() + i * dim; }

  void validate() const {
    if (k < 1 || dim < 1) throw IoError("codebook must have k >= 1 and dim >= 1");
    if (centroids.size() != k * dim) throw IoError("codebook centroid shape mismatch");
    for (const double v : centroids) {
      if (!std::isfinite(v)) throw IoError("codebook contains a non-finite centroid value");
    }
    if (has_gaussians) gaussians.validate();
  }
};

struct ManifestEntry {
  std::string feature_path;
  std::string label_path;
  std::string group;  // optional tag, e.g. an intelligibility band
};

// One corpus = one manifest of per-utterance feature/label file pairs.
// Relative entry paths are resolved against the manifest's directory.
struct CorpusManifest {
  std::vector<ManifestEntry> entries;
  std::string base_dir;
};

// pool_corpus output: everything concatenated in manifest order, with
// utterance boundaries kept so per-utterance results can be rebuilt.
struct PooledCorpus {
  FeatureMatrix features;
  LabelSequence labels;
  std::vector<std::size_t> boundaries;  // size entries+1, boundaries[i]..boundaries[i+1]
  std::vector<std::string> groups;      // per utterance, may contain ""
};

}  // namespace ppgtok
