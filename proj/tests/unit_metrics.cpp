#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include <Eigen/Dense>
#include <catch2/catch_amalgamated.hpp>

#include "ppgtok/kmeans.hpp"
#include "ppgtok/metrics.hpp"
#include "ppgtok/rng.hpp"
#include "test_util.hpp"

using namespace ppgtok;

namespace {

// Slow recount straight from the definition: per cluster, the count of
// its most frequent label; purity = 100 * sum of those / frames.
double brute_purity(const std::vector<std::uint32_t>& clusters,
                    const std::vector<std::uint32_t>& labels,
                    std::uint32_t num_classes) {
  std::map<std::uint32_t, std::vector<std::uint64_t>> hist;
  for (std::size_t t = 0; t < clusters.size(); ++t) {
    auto& row = hist[clusters[t]];
    row.resize(num_classes, 0);
    row[labels[t]]++;
  }
  std::uint64_t total = 0;
  for (const auto& [c, row] : hist) {
    total += *std::max_element(row.begin(), row.end());
  }
  return 100.0 * static_cast<double>(total) /
         static_cast<double>(clusters.size());
}

}  // namespace

TEST_CASE("phone purity matches the worked example") {
  // clusters {0,0} hold labels {0,1}: majority 1 frame; cluster {1,1}
  // holds {0,0}: majority 2; purity = 100 * 3/4 = 75 exactly
  const auto assignment = testutil::assignment_of({0, 0, 1, 1});
  const auto labels = testutil::labels_of({0, 1, 0, 0}, 2);
  REQUIRE(phone_purity_percent(assignment, labels) == 75.0);

  const PurityReport report = phone_purity(assignment, labels);
  REQUIRE(report.overall == 75.0);
  REQUIRE(report.frames == 4);
  REQUIRE(report.per_cluster.size() == 2);
  REQUIRE(report.per_cluster[0].usage == 2);
  REQUIRE(report.per_cluster[0].majority_count == 1);
  REQUIRE(report.per_cluster[1].usage == 2);
  REQUIRE(report.per_cluster[1].majority_label == 0);
  REQUIRE(report.per_cluster[1].majority_count == 2);
  REQUIRE(report.per_cluster[1].majority_fraction == 1.0);
}

TEST_CASE("majority ties resolve to the lowest class id") {
  const auto assignment = testutil::assignment_of({0, 0, 0, 0});
  const auto labels = testutil::labels_of({2, 1, 1, 2}, 3);
  const PurityReport report = phone_purity(assignment, labels);
  REQUIRE(report.per_cluster[0].majority_label == 1);
  REQUIRE(report.per_cluster[0].majority_count == 2);
}

TEST_CASE("purity equals a brute-force recount on random instances") {
  Rng rng(321);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t frames = 1 + rng.below(300);
    const std::uint32_t k = 1 + static_cast<std::uint32_t>(rng.below(12));
    const std::uint32_t nc = 1 + static_cast<std::uint32_t>(rng.below(9));
    std::vector<std::uint32_t> clusters(frames), ids(frames);
    for (auto& c : clusters) c = static_cast<std::uint32_t>(rng.below(k));
    for (auto& y : ids) y = static_cast<std::uint32_t>(rng.below(nc));

    const double expected = brute_purity(clusters, ids, nc);
    const double actual = phone_purity_percent(
        testutil::assignment_of(clusters), testutil::labels_of(ids, nc));
    // both sides divide an exact integer count by the frame count
    REQUIRE(actual == expected);
  }
}

TEST_CASE("purity is invariant under frame permutation") {
  Rng rng(55);
  std::vector<std::uint32_t> clusters(200), ids(200);
  for (auto& c : clusters) c = static_cast<std::uint32_t>(rng.below(7));
  for (auto& y : ids) y = static_cast<std::uint32_t>(rng.below(4));
  const double before = phone_purity_percent(testutil::assignment_of(clusters),
                                             testutil::labels_of(ids, 4));

  std::vector<std::size_t> order(200);
  std::iota(order.begin(), order.end(), std::size_t{0});
  ppgtok::shuffle(order, rng);
  std::vector<std::uint32_t> pc(200), pi(200);
  for (std::size_t i = 0; i < order.size(); ++i) {
    pc[i] = clusters[order[i]];
    pi[i] = ids[order[i]];
  }
  const double after = phone_purity_percent(testutil::assignment_of(pc),
                                            testutil::labels_of(pi, 4));
  REQUIRE(after == before);
}

TEST_CASE("splitting a cluster never lowers purity") {
  Rng rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t frames = 20 + rng.below(200);
    const std::uint32_t k = 1 + static_cast<std::uint32_t>(rng.below(6));
    const std::uint32_t nc = 2 + static_cast<std::uint32_t>(rng.below(5));
    std::vector<std::uint32_t> clusters(frames), ids(frames);
    for (auto& c : clusters) c = static_cast<std::uint32_t>(rng.below(k));
    for (auto& y : ids) y = static_cast<std::uint32_t>(rng.below(nc));
    const double before = phone_purity_percent(testutil::assignment_of(clusters),
                                               testutil::labels_of(ids, nc));

    // peel a random subset of one cluster off into a brand-new cluster
    const auto victim = static_cast<std::uint32_t>(rng.below(k));
    std::vector<std::uint32_t> split = clusters;
    for (auto& c : split) {
      if (c == victim && rng.below(2) == 0) c = k;
    }
    const double after = phone_purity_percent(testutil::assignment_of(split),
                                              testutil::labels_of(ids, nc));
    REQUIRE(after >= before);
  }
}

TEST_CASE("per-group purity restricts the recount to tagged frames") {
  const auto assignment = testutil::assignment_of({0, 0, 1, 1, 1, 0});
  const auto labels = testutil::labels_of({0, 1, 1, 1, 0, 0}, 2);
  const std::vector<std::string> groups{"lo", "hi", "lo", "hi", "hi", "hi"};

  const PurityReport report = phone_purity(assignment, labels, &groups);
  REQUIRE(report.per_group.size() == 2);

  // "lo" = frames 0 and 2, each alone in the majority of its cluster
  REQUIRE(report.per_group.at("lo") == 100.0);
  // "hi" = frames 1,3,4,5: within the group both clusters hold one of
  // each label, so each majority is 1 and purity is 2/4
  REQUIRE(report.per_group.at("hi") == 50.0);

  // an empty tag is left out of the breakdown entirely
  const std::vector<std::string> partial{"lo", "", "lo", "", "", ""};
  const PurityReport p2 = phone_purity(assignment, labels, &partial);
  REQUIRE(p2.per_group.size() == 1);
  REQUIRE(p2.per_group.count("lo") == 1);
}

TEST_CASE("trailing clusters requested via num_clusters show up empty") {
  const auto assignment = testutil::assignment_of({0, 1});
  const auto labels = testutil::labels_of({0, 1}, 2);
  const PurityReport report = phone_purity(assignment, labels, nullptr, 5);
  REQUIRE(report.per_cluster.size() == 5);
  REQUIRE(report.per_cluster[3].usage == 0);
  REQUIRE(report.per_cluster[3].majority_label == -1);
}

TEST_CASE("cluster_stats orders by usage with id tie-break") {
  // usages: cluster 0 -> 2, cluster 1 -> 3, cluster 2 -> 2, cluster 3 -> 3
  const auto assignment = testutil::assignment_of({0, 0, 1, 1, 1, 2, 2, 3, 3, 3});
  const auto labels = testutil::labels_of({0, 0, 1, 1, 0, 1, 1, 0, 0, 1}, 2);
  Codebook cb = Codebook::zeros(4, 1);
  const ClusterStats stats = cluster_stats(assignment, labels, cb, 4);
  REQUIRE(stats.top == std::vector<std::uint32_t>{1, 3, 0, 2});
  REQUIRE(stats.histograms[1] == std::vector<std::uint64_t>{1, 2});
  REQUIRE(stats.histograms[2] == std::vector<std::uint64_t>{0, 2});

  const ClusterStats top2 = cluster_stats(assignment, labels, cb, 2);
  REQUIRE(top2.top == std::vector<std::uint32_t>{1, 3});
}

TEST_CASE("pca axes agree with a dense eigensolver") {
  Rng rng(2718);
  const std::size_t frames = 300, dim = 6;
  // anisotropic data so the top two eigenvalues are well separated
  FeatureMatrix features = FeatureMatrix::zeros(frames, dim);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double scale = 1.0 + 2.0 * static_cast<double>(dim - d);
      features.at(t, d) = scale * rng.normal() + 0.3 * static_cast<double>(d);
    }
  }

  const Pca2 pca = pca_top2(features, 17);

  // reference: population covariance cross-checked through Eigen
  Eigen::MatrixXd x(frames, dim);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t d = 0; d < dim; ++d) x(t, d) = features.at(t, d);
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(frames);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  const Eigen::VectorXd evals = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd evecs = solver.eigenvectors();

  REQUIRE_THAT(pca.eigenvalue1,
               Catch::Matchers::WithinRel(evals(dim - 1), 1e-8));
  REQUIRE_THAT(pca.eigenvalue2,
               Catch::Matchers::WithinRel(evals(dim - 2), 1e-8));
  for (std::size_t d = 0; d < dim; ++d) {
    REQUIRE_THAT(pca.mean[d], Catch::Matchers::WithinAbs(mean(d), 1e-10));
  }

  double dot1 = 0.0, dot2 = 0.0, cross = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    dot1 += pca.axis1[d] * evecs(d, dim - 1);
    dot2 += pca.axis2[d] * evecs(d, dim - 2);
    cross += pca.axis1[d] * pca.axis2[d];
  }
  REQUIRE_THAT(std::abs(dot1), Catch::Matchers::WithinAbs(1.0, 1e-6));
  REQUIRE_THAT(std::abs(dot2), Catch::Matchers::WithinAbs(1.0, 1e-6));
  REQUIRE_THAT(cross, Catch::Matchers::WithinAbs(0.0, 1e-8));
}

TEST_CASE("pca handles degenerate shapes") {
  SECTION("1-d input gets a zero second axis") {
    Rng rng(3);
    const FeatureMatrix features = testutil::random_features(50, 1, rng);
    const Pca2 pca = pca_top2(features, 0);
    REQUIRE(pca.axis2 == std::vector<double>{0.0});
    REQUIRE(std::abs(pca.axis1[0]) == 1.0);
  }
  SECTION("rank-1 data yields a zero second eigenvalue") {
    Rng rng(4);
    FeatureMatrix features = FeatureMatrix::zeros(60, 3);
    for (std::size_t t = 0; t < 60; ++t) {
      const double s = rng.normal();
      features.at(t, 0) = s;
      features.at(t, 1) = 2.0 * s;
      features.at(t, 2) = -s;
    }
    const Pca2 pca = pca_top2(features, 0);
    REQUIRE(pca.eigenvalue2 == 0.0);
    double cross = 0.0, norm2 = 0.0;
    for (std::size_t d = 0; d < 3; ++d) {
      cross += pca.axis1[d] * pca.axis2[d];
      norm2 += pca.axis2[d] * pca.axis2[d];
    }
    REQUIRE_THAT(cross, Catch::Matchers::WithinAbs(0.0, 1e-10));
    REQUIRE_THAT(norm2, Catch::Matchers::WithinAbs(1.0, 1e-10));
  }
  SECTION("zero variance throws") {
    FeatureMatrix features = FeatureMatrix::zeros(10, 2);
    for (auto& v : features.data) v = 1.5;
    REQUIRE_THROWS_AS(pca_top2(features, 0), NumericError);
  }
}

TEST_CASE("project_2d samples per cluster and projects onto the pca axes") {
  Rng rng(9);
  const std::size_t frames = 400;
  const FeatureMatrix features = testutil::random_features(frames, 3, rng, 2.0);
  std::vector<std::uint32_t> clusters(frames), ids(frames);
  for (auto& c : clusters) c = static_cast<std::uint32_t>(rng.below(5));
  for (auto& y : ids) y = static_cast<std::uint32_t>(rng.below(3));
  const auto assignment = testutil::assignment_of(clusters);
  const auto labels = testutil::labels_of(ids, 3);

  const std::size_t cap = 30;
  const auto rows = project_2d(features, assignment, &labels, cap, 123);

  const Pca2 pca = pca_top2(features, 123);
  std::map<std::uint32_t, std::size_t> per_cluster;
  std::int64_t last_cluster = -1;
  for (const auto& r : rows) {
    REQUIRE(static_cast<std::int64_t>(r.cluster) >= last_cluster);
    last_cluster = r.cluster;
    per_cluster[r.cluster]++;
    REQUIRE(r.label >= 0);
    REQUIRE(r.label < 3);
  }
  for (const auto& [c, n] : per_cluster) {
    std::size_t members = 0;
    for (const auto a : clusters) {
      if (a == c) members++;
    }
    REQUIRE(n == std::min(cap, members));
  }

  // spot-check the projection values of the first sampled row
  bool matched = false;
  for (std::size_t t = 0; t < frames && !matched; ++t) {
    if (clusters[t] != rows[0].cluster) continue;
    double px = 0.0, py = 0.0;
    for (std::size_t d = 0; d < 3; ++d) {
      const double c = features.at(t, d) - pca.mean[d];
      px += c * pca.axis1[d];
      py += c * pca.axis2[d];
    }
    if (px == rows[0].x && py == rows[0].y) matched = true;
  }
  REQUIRE(matched);

  const auto unlabeled = project_2d(features, assignment, nullptr, cap, 123);
  REQUIRE(unlabeled.size() == rows.size());
  REQUIRE(unlabeled[0].label == -1);
}
