#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "ppgtok/common.hpp"
#include "ppgtok/gaussian.hpp"
#include "ppgtok/kmeans.hpp"
#include "ppgtok/metrics.hpp"
#include "ppgtok/rng.hpp"
#include "ppgtok/types.hpp"

namespace ppgtok {

struct VqConfig {
  std::size_t k = 100;
  double alpha = 1.2;  // purity loss weight; 0 = plain reconstruction training
  double learning_rate = 0.05;
  std::size_t batch_size = 256;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
  double variance_floor = 1e-4;
  std::size_t init_subsample = 100000;  // frame cap for the k-means++ start
  std::optional<Codebook> init_codebook;  // skips k-means++ seeding when set

  void validate() const {
    if (k < 1) throw ConfigError("k must be >= 1");
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
    if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(variance_floor > 0.0)) throw ConfigError("variance_floor must be > 0");
    if (init_subsample < 1) throw ConfigError("init_subsample must be >= 1");
  }
};

struct VqEpoch {
  double mse = 0.0;          // full-corpus reconstruction loss
  double purity_loss = 0.0;  // full-corpus mean codeword posterior entropy
  double purity = 0.0;       // percent
};

using VqHistory = std::vector<VqEpoch>;

struct VqResult {
  Codebook codebook;
  VqHistory history;  // entry 0 is the initial codebook, then one per epoch
};

// Mean squared frame-to-codeword distance over a batch.
inline double mse_loss(const FeatureMatrix& batch, const Codebook& codebook,
                       const Assignment& assignment) {
  if (assignment.size() != batch.frames) {
    throw ConfigError("assignment/batch length mismatch");
  }
  return mean_squared_distance(batch, codebook, assignment);
}

// Mean posterior entropy of the assigned codewords: every frame
// contributes the entropy of its own codeword, so heavily used codewords
// weigh more. Computed once per used codeword and usage-weighted.
inline double purity_loss(const Assignment& assignment, const Codebook& codebook,
                          const GaussianClassModels& models) {
  if (codebook.dim != models.dim) {
    throw ConfigError("codebook/model dimension mismatch");
  }
  std::vector<std::uint64_t> usage(codebook.k, 0);
  for (std::size_t t = 0; t < assignment.size(); ++t) {
    if (assignment[t] >= codebook.k) throw ConfigError("assignment index out of range");
    usage[assignment[t]]++;
  }
  double acc = 0.0;
  for (std::size_t c = 0; c < codebook.k; ++c) {
    if (usage[c] == 0) continue;
    acc += static_cast<double>(usage[c]) *
           posterior_entropy(codebook.centroid(c), models);
  }
  return acc / static_cast<double>(assignment.size());
}

// Composite training loss: reconstruction + alpha * purity entropy, with
// the assignment recomputed for the current codebook and then frozen.
inline double total_loss(const FeatureMatrix& batch, const Codebook& codebook,
                         const GaussianClassModels& models, double alpha,
                         int threads = 1) {
  const Assignment assignment = assign(batch, codebook, threads);
  double loss = mse_loss(batch, codebook, assignment);
  if (alpha != 0.0) loss += alpha * purity_loss(assignment, codebook, models);
  return loss;
}

namespace detail {

// Gradient with a precomputed (frozen) assignment. Per codeword k with
// n_k assigned frames and frame sum S_k:
//
//   dL/dc_k = ( -2 (S_k - n_k c_k) + alpha * n_k * grad H(c_k) ) / T
//
// Unused codewords get a zero row.
inline std::vector<double> loss_gradient_frozen(const FeatureMatrix& batch,
                                                const Assignment& assignment,
                                                const Codebook& codebook,
                                                const GaussianClassModels& models,
                                                double alpha) {
  const std::size_t dim = codebook.dim;
  const double frames = static_cast<double>(batch.frames);
  std::vector<double> sums(codebook.k * dim, 0.0);
  std::vector<std::uint64_t> counts(codebook.k, 0);
  for (std::size_t t = 0; t < batch.frames; ++t) {
    const std::uint32_t c = assignment[t];
    const double* x = batch.row(t);
    double* s = sums.data() + c * dim;
    for (std::size_t d = 0; d < dim; ++d) s[d] += x[d];
    counts[c]++;
  }
  std::vector<double> grad(codebook.k * dim, 0.0);
  for (std::size_t c = 0; c < codebook.k; ++c) {
    if (counts[c] == 0) continue;
    const double n = static_cast<double>(counts[c]);
    const double* s = sums.data() + c * dim;
    const double* cw = codebook.centroid(c);
    double* g = grad.data() + c * dim;
    for (std::size_t d = 0; d < dim; ++d) {
      g[d] = -2.0 * (s[d] - n * cw[d]) / frames;
    }
    if (alpha != 0.0) {
      const auto gh = entropy_gradient(cw, models);
      for (std::size_t d = 0; d < dim; ++d) {
        g[d] += alpha * n * gh[d] / frames;
      }
    }
  }
  return grad;
}

}  // namespace detail

// K x D gradient of total_loss with respect to every codeword, with the
// batch assignment frozen (no gradient through the argmin).
inline std::vector<double> loss_gradient(const FeatureMatrix& batch,
                                         const Codebook& codebook,
                                         const GaussianClassModels& models,
                                         double alpha, int threads = 1) {
  const Assignment assignment = assign(batch, codebook, threads);
  return detail::loss_gradient_frozen(batch, assignment, codebook, models, alpha);
}

// SGD codebook training on the composite loss. Class Gaussians are
// fitted once up front and frozen; frames are reshuffled every epoch
// (seeded); each batch takes one plain SGD step. Aborts when the
// full-corpus loss exceeds 10x its initial value.
inline VqResult train_vq(const FeatureMatrix& features, const LabelSequence& labels,
                         const VqConfig& config, int threads = 1) {
  config.validate();
  features.validate();
  labels.validate();
  check_paired(features, labels);
  if (config.alpha > 0.0 && labels.num_classes < 2) {
    throw ConfigError("purity-guided training needs at least 2 label classes");
  }

  VqResult result;
  GaussianClassModels models =
      fit_class_gaussians(features, labels, config.variance_floor);

  Rng rng(config.seed);
  if (config.init_codebook) {
    if (config.init_codebook->k != config.k ||
        config.init_codebook->dim != features.dim) {
      throw ConfigError("provided init codebook does not match k/dim");
    }
    result.codebook = *config.init_codebook;
  } else {
    if (features.frames > config.init_subsample) {
      const auto picked = sample_indices(features.frames, config.init_subsample, rng);
      FeatureMatrix sub = FeatureMatrix::zeros(picked.size(), features.dim);
      for (std::size_t i = 0; i < picked.size(); ++i) {
        std::copy_n(features.row(picked[i]), features.dim, sub.row(i));
      }
      result.codebook = kmeanspp_init(sub, config.k, rng.next());
    } else {
      result.codebook = kmeanspp_init(features, config.k, rng.next());
    }
  }
  Codebook& cb = result.codebook;
  cb.meta = CodebookMeta{};
  cb.meta.method = "vq";
  cb.meta.alpha = config.alpha;
  cb.meta.seed = config.seed;
  cb.meta.learning_rate = config.learning_rate;
  cb.meta.batch_size = config.batch_size;
  cb.meta.epochs = config.epochs;
  cb.has_gaussians = true;
  cb.gaussians = models;

  const auto evaluate = [&](VqEpoch& epoch) {
    const Assignment assignment = assign(features, cb, threads);
    epoch.mse = mse_loss(features, cb, assignment);
    epoch.purity_loss = purity_loss(assignment, cb, models);
    epoch.purity = phone_purity_percent(assignment, labels, config.k);
    return epoch.mse + config.alpha * epoch.purity_loss;
  };

  VqEpoch initial;
  const double initial_loss = evaluate(initial);
  result.history.push_back(initial);

  std::vector<std::size_t> order(features.frames);
  std::iota(order.begin(), order.end(), std::size_t{0});
  FeatureMatrix batch;
  batch.dim = features.dim;
  double final_loss = initial_loss;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      batch.frames = stop - start;
      batch.data.resize(batch.frames * batch.dim);
      for (std::size_t i = start; i < stop; ++i) {
        std::copy_n(features.row(order[i]), batch.dim, batch.row(i - start));
      }
      const Assignment assignment = assign(batch, cb, threads);
      const auto grad =
          detail::loss_gradient_frozen(batch, assignment, cb, models, config.alpha);
      for (std::size_t i = 0; i < cb.centroids.size(); ++i) {
        cb.centroids[i] -= config.learning_rate * grad[i];
      }
    }
    VqEpoch record;
    final_loss = evaluate(record);
    result.history.push_back(record);
    if (!(final_loss <= 10.0 * initial_loss)) {
      throw NumericError("training diverged: loss " + std::to_string(final_loss) +
                         " exceeds 10x the initial " + std::to_string(initial_loss));
    }
  }
  cb.meta.iterations = config.epochs;
  cb.meta.converged = true;
  cb.meta.final_residual = final_loss;
  return result;
}

}  // namespace ppgtok
