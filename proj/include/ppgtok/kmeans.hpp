#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "ppgtok/common.hpp"
#include "ppgtok/metrics.hpp"
#include "ppgtok/parallel.hpp"
#include "ppgtok/rng.hpp"
#include "ppgtok/types.hpp"

namespace ppgtok {

struct KMeansConfig {
  std::size_t k = 100;
  double lambda = 1.0;    // purity regularization weight; 0 = plain k-means
  double epsilon = 1e-5;  // convergence threshold on total squared centroid drift
  std::size_t max_iter = 100;
  std::uint64_t seed = 0;

  void validate() const {
    if (k < 1) throw ConfigError("k must be >= 1");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
    if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
  }
};

struct KMeansIter {
  double distortion = 0.0;  // mean squared assignment distance before the update
  double drift = 0.0;       // sum over clusters of squared centroid movement
  double purity = 0.0;      // percent, NaN when training without labels
};

using KMeansHistory = std::vector<KMeansIter>;

struct KMeansResult {
  Codebook codebook;
  KMeansHistory history;
};

// Observes the centroids after each means update; used for diagnostics
// and cross-checks against reference implementations.
using IterObserver = std::function<void(std::size_t iter, const Codebook&)>;

namespace detail {

inline std::size_t count_distinct_frames(const FeatureMatrix& features) {
  std::unordered_set<std::string_view> seen;
  seen.reserve(features.frames * 2);
  const std::size_t row_bytes = features.dim * sizeof(double);
  for (std::size_t t = 0; t < features.frames; ++t) {
    seen.emplace(reinterpret_cast<const char*>(features.row(t)), row_bytes);
  }
  return seen.size();
}

}  // namespace detail

// k-means++ seeding: first centroid uniform over frames, each further one
// drawn with probability proportional to the squared distance to its
// nearest already-chosen centroid. Deterministic per seed; every centroid
// is an input frame.
inline Codebook kmeanspp_init(const FeatureMatrix& features, std::size_t k,
                              std::uint64_t seed) {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (k > features.frames || k > detail::count_distinct_frames(features)) {
    throw ConfigError("k = " + std::to_string(k) +
                      " exceeds the number of distinct frames");
  }
  const std::size_t dim = features.dim;
  Codebook cb = Codebook::zeros(k, dim);
  Rng rng(seed);

  const std::size_t first = rng.below(features.frames);
  std::copy_n(features.row(first), dim, cb.centroid(0));

  std::vector<double> nearest(features.frames);
  for (std::size_t t = 0; t < features.frames; ++t) {
    nearest[t] = squared_distance(features.row(t), cb.centroid(0), dim);
  }
  for (std::size_t i = 1; i < k; ++i) {
    double total = 0.0;
    for (const double d2 : nearest) total += d2;
    const double u = rng.uniform() * total;
    double acc = 0.0;
    std::size_t picked = features.frames;
    for (std::size_t t = 0; t < features.frames; ++t) {
      acc += nearest[t];
      if (acc > u) {
        picked = t;
        break;
      }
    }
    if (picked == features.frames) {  // u landed on the rounding edge of the last mass
      for (std::size_t t = features.frames; t-- > 0;) {
        if (nearest[t] > 0.0) {
          picked = t;
          break;
        }
      }
    }
    std::copy_n(features.row(picked), dim, cb.centroid(i));
    for (std::size_t t = 0; t < features.frames; ++t) {
      const double d2 = squared_distance(features.row(t), cb.centroid(i), dim);
      if (d2 < nearest[t]) nearest[t] = d2;
    }
  }
  return cb;
}

// Nearest-codeword assignment; ties go to the lowest cluster index.
inline Assignment assign(const FeatureMatrix& features, const Codebook& codebook,
                         int threads = 1) {
  if (features.dim != codebook.dim) {
    throw ConfigError("feature dimension " + std::to_string(features.dim) +
                      " does not match codebook dimension " +
                      std::to_string(codebook.dim));
  }
  Assignment assignment;
  assignment.indices.resize(features.frames);
  parallel_ranges(features.frames, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const double* x = features.row(t);
      double best = std::numeric_limits<double>::infinity();
      std::uint32_t best_k = 0;
      for (std::size_t c = 0; c < codebook.k; ++c) {
        const double d2 = squared_distance(x, codebook.centroid(c), codebook.dim);
        if (d2 < best) {
          best = d2;
          best_k = static_cast<std::uint32_t>(c);
        }
      }
      assignment.indices[t] = best_k;
    }
  });
  return assignment;
}

inline double mean_squared_distance(const FeatureMatrix& features,
                                    const Codebook& codebook,
                                    const Assignment& assignment) {
  double acc = 0.0;
  for (std::size_t t = 0; t < features.frames; ++t) {
    acc += squared_distance(features.row(t), codebook.centroid(assignment[t]),
                            features.dim);
  }
  return acc / static_cast<double>(features.frames);
}

namespace detail {

// Purest-centroid targets for every cluster in one pass: majority label
// per cluster (ties to the lowest class id), then the mean of the cluster
// frames carrying that label. Empty clusters get nullopt.
inline std::vector<std::optional<std::vector<double>>> purest_centroids(
    const FeatureMatrix& features, const LabelSequence& labels,
    const Assignment& assignment, std::size_t k) {
  const std::uint32_t nc = labels.num_classes;
  std::vector<std::uint64_t> counts(k * nc, 0);
  for (std::size_t t = 0; t < assignment.size(); ++t) {
    counts[assignment[t] * nc + labels.labels[t]]++;
  }
  std::vector<std::int64_t> majority(k, -1);
  for (std::size_t c = 0; c < k; ++c) {
    std::uint64_t best = 0;
    for (std::uint32_t j = 0; j < nc; ++j) {
      if (counts[c * nc + j] > best) {
        best = counts[c * nc + j];
        majority[c] = j;
      }
    }
  }
  std::vector<std::optional<std::vector<double>>> result(k);
  std::vector<std::uint64_t> picked(k, 0);
  for (std::size_t c = 0; c < k; ++c) {
    if (majority[c] >= 0) result[c].emplace(features.dim, 0.0);
  }
  for (std::size_t t = 0; t < features.frames; ++t) {
    const std::uint32_t c = assignment[t];
    if (static_cast<std::int64_t>(labels.labels[t]) != majority[c]) continue;
    auto& acc = *result[c];
    const double* x = features.row(t);
    for (std::size_t d = 0; d < features.dim; ++d) acc[d] += x[d];
    picked[c]++;
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (!result[c]) continue;
    for (auto& v : *result[c]) v /= static_cast<double>(picked[c]);
  }
  return result;
}

}  // namespace detail

// Mean of the cluster-k frames that carry the cluster's most frequent
// phonetic label; nullopt when the cluster is empty.
inline std::optional<std::vector<double>> purest_centroid(
    const FeatureMatrix& features, const LabelSequence& labels,
    const Assignment& assignment, std::size_t k) {
  check_paired(features, labels);
  std::size_t num_clusters = k + 1;
  for (std::size_t t = 0; t < assignment.size(); ++t) {
    num_clusters = std::max<std::size_t>(num_clusters, assignment[t] + 1);
  }
  return detail::purest_centroids(features, labels, assignment, num_clusters)[k];
}

// Purity-regularized means update:
//
//   c_k <- (sum of assigned frames + lambda * p_k) / (count + lambda)
//
// where p_k is the purest centroid of cluster k under the current
// assignment. With lambda = 0 this is exactly the classical means
// update. Empty clusters keep their previous centroid.
inline Codebook update_centroids(const FeatureMatrix& features,
                                 const LabelSequence* labels,
                                 const Assignment& assignment,
                                 const Codebook& codebook, double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (lambda > 0.0 && labels == nullptr) {
    throw ConfigError("purity-regularized update requires labels");
  }
  if (assignment.size() != features.frames) {
    throw ConfigError("assignment/feature length mismatch");
  }
  if (labels) check_paired(features, *labels);
  for (std::size_t t = 0; t < assignment.size(); ++t) {
    if (assignment[t] >= codebook.k) throw ConfigError("assignment index out of range");
  }
  const std::size_t dim = features.dim;
  Codebook next = codebook;

  std::vector<double> sums(codebook.k * dim, 0.0);
  std::vector<std::uint64_t> counts(codebook.k, 0);
  for (std::size_t t = 0; t < features.frames; ++t) {
    const std::uint32_t c = assignment[t];
    const double* x = features.row(t);
    double* s = sums.data() + c * dim;
    for (std::size_t d = 0; d < dim; ++d) s[d] += x[d];
    counts[c]++;
  }

  std::vector<std::optional<std::vector<double>>> targets;
  if (lambda > 0.0) {
    targets = detail::purest_centroids(features, *labels, assignment, codebook.k);
  }
  for (std::size_t c = 0; c < codebook.k; ++c) {
    if (counts[c] == 0) continue;  // keep previous centroid
    const double* s = sums.data() + c * dim;
    double* out = next.centroid(c);
    if (lambda == 0.0) {
      for (std::size_t d = 0; d < dim; ++d) {
        out[d] = s[d] / static_cast<double>(counts[c]);
      }
    } else {
      const auto& p = *targets[c];
      const double denom = static_cast<double>(counts[c]) + lambda;
      for (std::size_t d = 0; d < dim; ++d) {
        out[d] = (s[d] + lambda * p[d]) / denom;
      }
    }
  }
  return next;
}

// Purity-guided k-means: alternates nearest-codeword assignment with the
// purity-regularized means update, from a k-means++ start, until the
// total squared centroid drift falls to epsilon or max_iter is hit.
// Clusters empty for 3 consecutive iterations are re-seeded to the
// farthest-assigned frames. labels may be null only when lambda = 0.
inline KMeansResult train_kmeans(const FeatureMatrix& features,
                                 const LabelSequence* labels,
                                 const KMeansConfig& config, int threads = 1,
                                 const IterObserver& observer = {}) {
  config.validate();
  features.validate();
  if (config.lambda > 0.0 && labels == nullptr) {
    throw ConfigError("lambda > 0 requires frame labels");
  }
  if (labels) {
    labels->validate();
    check_paired(features, *labels);
  }

  KMeansResult result;
  result.codebook = kmeanspp_init(features, config.k, config.seed);
  Codebook& cb = result.codebook;
  cb.meta.method = "kmeans";
  cb.meta.lambda = config.lambda;
  cb.meta.seed = config.seed;

  std::vector<int> empty_streak(config.k, 0);
  double drift = 0.0;
  for (std::size_t iter = 1; iter <= config.max_iter; ++iter) {
    const Assignment assignment = assign(features, cb, threads);

    KMeansIter record;
    record.distortion = mean_squared_distance(features, cb, assignment);
    record.purity = labels ? phone_purity_percent(assignment, *labels, config.k)
                           : std::numeric_limits<double>::quiet_NaN();

    Codebook next = update_centroids(features, labels, assignment, cb, config.lambda);

    std::vector<std::uint64_t> counts(config.k, 0);
    for (std::size_t t = 0; t < assignment.size(); ++t) counts[assignment[t]]++;
    std::vector<std::size_t> reseed;
    for (std::size_t c = 0; c < config.k; ++c) {
      if (counts[c] == 0) {
        if (++empty_streak[c] >= 3) {
          reseed.push_back(c);
          empty_streak[c] = 0;
        }
      } else {
        empty_streak[c] = 0;
      }
    }
    if (!reseed.empty()) {
      // hand the farthest-assigned frames to the stuck clusters, one each
      std::vector<std::pair<double, std::size_t>> far(features.frames);
      for (std::size_t t = 0; t < features.frames; ++t) {
        far[t] = {squared_distance(features.row(t), cb.centroid(assignment[t]),
                                   features.dim),
                  t};
      }
      std::stable_sort(far.begin(), far.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
      });
      for (std::size_t i = 0; i < reseed.size() && i < far.size(); ++i) {
        std::copy_n(features.row(far[i].second), features.dim,
                    next.centroid(reseed[i]));
      }
    }

    drift = 0.0;
    for (std::size_t c = 0; c < config.k; ++c) {
      drift += squared_distance(cb.centroid(c), next.centroid(c), features.dim);
    }
    record.drift = drift;
    result.history.push_back(record);

    cb.centroids = std::move(next.centroids);
    if (observer) observer(iter, cb);
    if (drift <= config.epsilon) {
      cb.meta.converged = true;
      break;
    }
  }
  cb.meta.iterations = result.history.size();
  cb.meta.final_residual = drift;
  return result;
}

}  // namespace ppgtok
