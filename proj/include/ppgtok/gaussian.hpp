#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "ppgtok/common.hpp"
#include "ppgtok/types.hpp"

namespace ppgtok {

// Per-class diagonal Gaussians fitted on labeled frames: class sample
// means and population variances, elementwise floored. A class with a
// single frame ends up with all variances at the floor.
inline GaussianClassModels fit_class_gaussians(const FeatureMatrix& features,
                                               const LabelSequence& labels,
                                               double variance_floor = 1e-4) {
  if (!(variance_floor > 0.0)) throw ConfigError("variance floor must be > 0");
  check_paired(features, labels);

  const std::uint32_t nc = labels.num_classes;
  const std::size_t dim = features.dim;
  std::vector<std::uint64_t> counts(nc, 0);
  for (const std::uint32_t y : labels.labels) counts[y]++;
  for (std::uint32_t j = 0; j < nc; ++j) {
    if (counts[j] == 0) {
      throw ConfigError("class " + std::to_string(j) +
                        " has no frames; cannot fit its Gaussian");
    }
  }

  GaussianClassModels models;
  models.num_classes = nc;
  models.dim = dim;
  models.variance_floor = variance_floor;
  models.means.assign(nc * dim, 0.0);
  models.variances.assign(nc * dim, 0.0);

  for (std::size_t t = 0; t < features.frames; ++t) {
    double* mean = models.means.data() + labels.labels[t] * dim;
    const double* x = features.row(t);
    for (std::size_t d = 0; d < dim; ++d) mean[d] += x[d];
  }
  for (std::uint32_t j = 0; j < nc; ++j) {
    double* mean = models.means.data() + j * dim;
    for (std::size_t d = 0; d < dim; ++d) mean[d] /= static_cast<double>(counts[j]);
  }
  for (std::size_t t = 0; t < features.frames; ++t) {
    const std::uint32_t j = labels.labels[t];
    const double* mean = models.means.data() + j * dim;
    double* var = models.variances.data() + j * dim;
    const double* x = features.row(t);
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = x[d] - mean[d];
      var[d] += diff * diff;
    }
  }
  for (std::uint32_t j = 0; j < nc; ++j) {
    double* var = models.variances.data() + j * dim;
    for (std::size_t d = 0; d < dim; ++d) {
      var[d] /= static_cast<double>(counts[j]);
      if (var[d] < variance_floor) var[d] = variance_floor;
    }
  }
  return models;
}

// Log of the diagonal-covariance Gaussian density of class j at v.
inline double class_log_density(const double* v, const GaussianClassModels& models,
                                std::uint32_t j) {
  static constexpr double kLog2Pi = 1.8378770664093454836;
  const double* mean = models.mean(j);
  const double* var = models.variance(j);
  double acc = 0.0;
  for (std::size_t d = 0; d < models.dim; ++d) {
    const double diff = v[d] - mean[d];
    acc += kLog2Pi + std::log(var[d]) + diff * diff / var[d];
  }
  return -0.5 * acc;
}

// Class posteriors P(y_j | v) from the class Gaussians, normalized in the
// log domain so ill-scaled densities stay stable. Sums to 1.
inline std::vector<double> class_posteriors(const double* v,
                                            const GaussianClassModels& models) {
  const std::uint32_t nc = models.num_classes;
  std::vector<double> scores(nc);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::uint32_t j = 0; j < nc; ++j) {
    scores[j] = class_log_density(v, models, j);
    if (scores[j] > peak) peak = scores[j];
  }
  double total = 0.0;
  for (std::uint32_t j = 0; j < nc; ++j) {
    scores[j] = std::exp(scores[j] - peak);
    total += scores[j];
  }
  for (std::uint32_t j = 0; j < nc; ++j) scores[j] /= total;
  return scores;
}

inline std::vector<double> class_posteriors(const std::vector<double>& v,
                                            const GaussianClassModels& models) {
  return class_posteriors(v.data(), models);
}

// Shannon entropy of the class posterior at v, in nats; 0 log 0 := 0.
inline double posterior_entropy(const double* v, const GaussianClassModels& models) {
  const auto p = class_posteriors(v, models);
  double h = 0.0;
  for (const double pj : p) {
    if (pj > 0.0) h -= pj * std::log(pj);
  }
  return h;
}

inline double posterior_entropy(const std::vector<double>& v,
                                const GaussianClassModels& models) {
  return posterior_entropy(v.data(), models);
}

// Gradient of posterior_entropy with respect to v. With s_j the class
// log-densities, P = softmax(s) and grad s_j = -(v - mu_j) / var_j:
//
//   grad H = - sum_j P_j (log P_j + 1) (grad s_j - sum_i P_i grad s_i)
//
// Vanished posteriors are skipped; their limit contribution is zero.
inline std::vector<double> entropy_gradient(const double* v,
                                            const GaussianClassModels& models) {
  const std::uint32_t nc = models.num_classes;
  const std::size_t dim = models.dim;
  const auto p = class_posteriors(v, models);

  std::vector<double> score_grads(nc * dim);
  for (std::uint32_t j = 0; j < nc; ++j) {
    const double* mean = models.mean(j);
    const double* var = models.variance(j);
    double* g = score_grads.data() + j * dim;
    for (std::size_t d = 0; d < dim; ++d) g[d] = -(v[d] - mean[d]) / var[d];
  }
  std::vector<double> mean_grad(dim, 0.0);
  for (std::uint32_t j = 0; j < nc; ++j) {
    const double* g = score_grads.data() + j * dim;
    for (std::size_t d = 0; d < dim; ++d) mean_grad[d] += p[j] * g[d];
  }
  std::vector<double> grad(dim, 0.0);
  for (std::uint32_t j = 0; j < nc; ++j) {
    if (p[j] <= 0.0) continue;
    const double w = p[j] * (std::log(p[j]) + 1.0);
    const double* g = score_grads.data() + j * dim;
    for (std::size_t d = 0; d < dim; ++d) grad[d] -= w * (g[d] - mean_grad[d]);
  }
  return grad;
}

inline std::vector<double> entropy_gradient(const std::vector<double>& v,
                                            const GaussianClassModels& models) {
  return entropy_gradient(v.data(), models);
}

}  // namespace ppgtok
