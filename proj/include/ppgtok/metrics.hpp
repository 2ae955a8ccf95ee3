#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ppgtok/common.hpp"
#include "ppgtok/rng.hpp"
#include "ppgtok/types.hpp"

namespace ppgtok {

struct ClusterPurity {
  std::uint64_t usage = 0;
  std::int64_t majority_label = -1;  // -1 for an empty cluster
  std::uint64_t majority_count = 0;
  double majority_fraction = 0.0;
};

struct PurityReport {
  double overall = 0.0;                 // percent
  std::uint64_t frames = 0;
  std::map<std::string, double> per_group;  // group tag -> percent
  std::vector<ClusterPurity> per_cluster;
};

namespace detail {

// counts[k * num_classes + j] = |{t : assignment=k and label=j}|
inline std::vector<std::uint64_t> label_counts(const Assignment& assignment,
                                               const LabelSequence& labels,
                                               std::size_t num_clusters) {
  std::vector<std::uint64_t> counts(num_clusters * labels.num_classes, 0);
  for (std::size_t t = 0; t < assignment.size(); ++t) {
    counts[assignment[t] * labels.num_classes + labels.labels[t]]++;
  }
  return counts;
}

inline double purity_percent_from_counts(const std::vector<std::uint64_t>& counts,
                                         std::size_t num_clusters,
                                         std::uint32_t num_classes,
                                         std::uint64_t total) {
  std::uint64_t majority_sum = 0;
  for (std::size_t k = 0; k < num_clusters; ++k) {
    std::uint64_t best = 0;
    for (std::uint32_t j = 0; j < num_classes; ++j) {
      best = std::max(best, counts[k * num_classes + j]);
    }
    majority_sum += best;
  }
  return 100.0 * static_cast<double>(majority_sum) / static_cast<double>(total);
}

}  // namespace detail

// Overall purity only, as a percentage. Frame-weighted majority-label
// purity: 100/T * sum over clusters of the most frequent label's count.
inline double phone_purity_percent(const Assignment& assignment,
                                   const LabelSequence& labels,
                                   std::size_t num_clusters = 0) {
  if (assignment.size() != labels.size()) {
    throw ConfigError("assignment/label length mismatch");
  }
  if (num_clusters == 0) {
    for (std::size_t t = 0; t < assignment.size(); ++t) {
      num_clusters = std::max<std::size_t>(num_clusters, assignment[t] + 1);
    }
  }
  const auto counts = detail::label_counts(assignment, labels, num_clusters);
  return detail::purity_percent_from_counts(counts, num_clusters, labels.num_classes,
                                            assignment.size());
}

// Full purity report: overall, optional per-group breakdown (frame_groups
// gives one tag per frame; empty tags are left out of the breakdown), and
// per-cluster usage/majority records.
inline PurityReport phone_purity(const Assignment& assignment,
                                 const LabelSequence& labels,
                                 const std::vector<std::string>* frame_groups = nullptr,
                                 std::size_t num_clusters = 0) {
  if (assignment.size() != labels.size()) {
    throw ConfigError("assignment/label length mismatch");
  }
  if (frame_groups && frame_groups->size() != assignment.size()) {
    throw ConfigError("group tag/frame length mismatch");
  }
  std::size_t k = num_clusters;
  for (std::size_t t = 0; t < assignment.size(); ++t) {
    k = std::max<std::size_t>(k, assignment[t] + 1);
  }
  const std::uint32_t nc = labels.num_classes;
  const auto counts = detail::label_counts(assignment, labels, k);

  PurityReport report;
  report.frames = assignment.size();
  report.per_cluster.resize(k);
  std::uint64_t majority_sum = 0;
  for (std::size_t c = 0; c < k; ++c) {
    ClusterPurity& row = report.per_cluster[c];
    for (std::uint32_t j = 0; j < nc; ++j) {
      const std::uint64_t n = counts[c * nc + j];
      row.usage += n;
      if (n > row.majority_count) {  // ties keep the lowest class id
        row.majority_count = n;
        row.majority_label = j;
      }
    }
    if (row.usage > 0) {
      row.majority_fraction = static_cast<double>(row.majority_count) /
                              static_cast<double>(row.usage);
    }
    majority_sum += row.majority_count;
  }
  report.overall = 100.0 * static_cast<double>(majority_sum) /
                   static_cast<double>(report.frames);

  if (frame_groups) {
    std::map<std::string, std::vector<std::uint64_t>> group_counts;
    std::map<std::string, std::uint64_t> group_totals;
    for (std::size_t t = 0; t < assignment.size(); ++t) {
      const std::string& g = (*frame_groups)[t];
      if (g.empty()) continue;
      auto [it, inserted] = group_counts.try_emplace(g);
      if (inserted) it->second.assign(k * nc, 0);
      it->second[assignment[t] * nc + labels.labels[t]]++;
      group_totals[g]++;
    }
    for (const auto& [g, gc] : group_counts) {
      report.per_group[g] =
          detail::purity_percent_from_counts(gc, k, nc, group_totals.at(g));
    }
  }
  return report;
}

struct ClusterStats {
  std::vector<std::vector<std::uint64_t>> histograms;  // k x num_classes
  std::vector<std::uint32_t> top;  // cluster ids by usage desc, ties by id
};

inline ClusterStats cluster_stats(const Assignment& assignment,
                                  const LabelSequence& labels,
                                  const Codebook& codebook, std::size_t top_n) {
  if (assignment.size() != labels.size()) {
    throw ConfigError("assignment/label length mismatch");
  }
  ClusterStats stats;
  stats.histograms.assign(codebook.k,
                          std::vector<std::uint64_t>(labels.num_classes, 0));
  for (std::size_t t = 0; t < assignment.size(); ++t) {
    stats.histograms[assignment[t]][labels.labels[t]]++;
  }
  std::vector<std::uint32_t> order(codebook.k);
  for (std::size_t c = 0; c < codebook.k; ++c) order[c] = static_cast<std::uint32_t>(c);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) {
                     std::uint64_t ua = 0, ub = 0;
                     for (const auto n : stats.histograms[a]) ua += n;
                     for (const auto n : stats.histograms[b]) ub += n;
                     if (ua != ub) return ua > ub;
                     return a < b;
                   });
  order.resize(std::min(top_n, order.size()));
  stats.top = std::move(order);
  return stats;
}

struct Pca2 {
  std::vector<double> mean;
  std::vector<double> axis1, axis2;  // leading orthonormal eigenvectors
  double eigenvalue1 = 0.0, eigenvalue2 = 0.0;
};

namespace detail {

inline std::vector<double> matvec(const std::vector<double>& m, std::size_t n,
                                  const std::vector<double>& v) {
  std::vector<double> out(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < n; ++c) acc += m[r * n + c] * v[c];
    out[r] = acc;
  }
  return out;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline void normalize(std::vector<double>& v) {
  const double n = std::sqrt(dot(v, v));
  for (auto& x : v) x /= n;
}

// Power iteration with optional orthogonalization against `against`.
// Returns false when the matrix annihilates every start vector tried
// (rank-deficient in the remaining subspace).
inline bool power_iteration(const std::vector<double>& m, std::size_t n,
                            const std::vector<double>* against, Rng& rng,
                            std::vector<double>& out) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  if (against) {
    const double p = dot(v, *against);
    for (std::size_t i = 0; i < n; ++i) v[i] -= p * (*against)[i];
  }
  if (std::sqrt(dot(v, v)) < 1e-12) return false;
  normalize(v);
  for (int iter = 0; iter < 1000; ++iter) {
    std::vector<double> w = matvec(m, n, v);
    if (against) {
      const double p = dot(w, *against);
      for (std::size_t i = 0; i < n; ++i) w[i] -= p * (*against)[i];
    }
    const double norm = std::sqrt(dot(w, w));
    if (norm < 1e-300) return false;
    for (auto& x : w) x /= norm;
    const double align = std::abs(dot(w, v));
    v = std::move(w);
    if (1.0 - align < 1e-14) break;
  }
  out = std::move(v);
  return true;
}

}  // namespace detail

// Top-2 principal axes of the sample covariance, via power iteration and
// one deflation step. Deterministic per seed. Throws on a zero-variance
// corpus.
inline Pca2 pca_top2(const FeatureMatrix& features, std::uint64_t seed) {
  if (features.frames < 2) throw ConfigError("need at least 2 frames for a projection");
  const std::size_t d = features.dim;
  Pca2 pca;
  pca.mean.assign(d, 0.0);
  for (std::size_t t = 0; t < features.frames; ++t) {
    const double* row = features.row(t);
    for (std::size_t i = 0; i < d; ++i) pca.mean[i] += row[i];
  }
  for (auto& m : pca.mean) m /= static_cast<double>(features.frames);

  std::vector<double> cov(d * d, 0.0);
  std::vector<double> centered(d);
  for (std::size_t t = 0; t < features.frames; ++t) {
    const double* row = features.row(t);
    for (std::size_t i = 0; i < d; ++i) centered[i] = row[i] - pca.mean[i];
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = r; c < d; ++c) cov[r * d + c] += centered[r] * centered[c];
    }
  }
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = r; c < d; ++c) {
      cov[r * d + c] /= static_cast<double>(features.frames);
      cov[c * d + r] = cov[r * d + c];
    }
  }
  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i) trace += cov[i * d + i];
  if (!(trace > 0.0)) throw NumericError("zero-variance corpus, nothing to project");

  Rng rng(seed);
  if (!detail::power_iteration(cov, d, nullptr, rng, pca.axis1)) {
    throw NumericError("power iteration failed on the covariance matrix");
  }
  pca.eigenvalue1 = detail::dot(pca.axis1, detail::matvec(cov, d, pca.axis1));

  if (d == 1) {
    pca.axis2.assign(1, 0.0);  // no second direction in 1-D data
    return pca;
  }
  std::vector<double> deflated = cov;
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      deflated[r * d + c] -= pca.eigenvalue1 * pca.axis1[r] * pca.axis1[c];
    }
  }
  if (detail::power_iteration(deflated, d, &pca.axis1, rng, pca.axis2)) {
    pca.eigenvalue2 = detail::dot(pca.axis2, detail::matvec(cov, d, pca.axis2));
  } else {
    // rank-1 data: any orthonormal complement direction carries zero variance
    std::vector<double> v(d);
    for (auto& x : v) x = rng.normal();
    const double p = detail::dot(v, pca.axis1);
    for (std::size_t i = 0; i < d; ++i) v[i] -= p * pca.axis1[i];
    detail::normalize(v);
    pca.axis2 = std::move(v);
    pca.eigenvalue2 = 0.0;
  }
  return pca;
}

struct ProjectedFrame {
  double x = 0.0, y = 0.0;
  std::uint32_t cluster = 0;
  std::int64_t label = -1;
};

// Per-cluster sampled 2-D projection, plot-ready. At most
// sample_per_cluster frames per cluster, chosen without replacement;
// rows come out grouped by cluster id with frame order preserved.
inline std::vector<ProjectedFrame> project_2d(const FeatureMatrix& features,
                                              const Assignment& assignment,
                                              const LabelSequence* labels,
                                              std::size_t sample_per_cluster,
                                              std::uint64_t seed) {
  if (assignment.size() != features.frames) {
    throw ConfigError("assignment/feature length mismatch");
  }
  if (labels && labels->size() != features.frames) {
    throw ConfigError("label/feature length mismatch");
  }
  if (sample_per_cluster < 1) throw ConfigError("sample_per_cluster must be >= 1");
  const Pca2 pca = pca_top2(features, seed);

  std::size_t num_clusters = 0;
  for (std::size_t t = 0; t < assignment.size(); ++t) {
    num_clusters = std::max<std::size_t>(num_clusters, assignment[t] + 1);
  }
  std::vector<std::vector<std::size_t>> members(num_clusters);
  for (std::size_t t = 0; t < assignment.size(); ++t) {
    members[assignment[t]].push_back(t);
  }

  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);  // separate stream from the PCA start vectors
  std::vector<ProjectedFrame> rows;
  std::vector<double> centered(features.dim);
  for (std::size_t c = 0; c < num_clusters; ++c) {
    std::vector<std::size_t> picked;
    if (members[c].size() <= sample_per_cluster) {
      picked = members[c];
    } else {
      const auto chosen = sample_indices(members[c].size(), sample_per_cluster, rng);
      picked.reserve(chosen.size());
      for (const auto i : chosen) picked.push_back(members[c][i]);
    }
    for (const auto t : picked) {
      const double* row = features.row(t);
      for (std::size_t i = 0; i < features.dim; ++i) centered[i] = row[i] - pca.mean[i];
      ProjectedFrame out;
      out.x = detail::dot(centered, pca.axis1);
      out.y = detail::dot(centered, pca.axis2);
      out.cluster = static_cast<std::uint32_t>(c);
      out.label = labels ? static_cast<std::int64_t>(labels->labels[t]) : -1;
      rows.push_back(out);
    }
  }
  return rows;
}

}  // namespace ppgtok
