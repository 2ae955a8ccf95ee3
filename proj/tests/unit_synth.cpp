#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "ppgtok/synth.hpp"
#include "test_util.hpp"

using namespace ppgtok;

TEST_CASE("generation is deterministic per seed") {
  SynthConfig config;
  config.num_classes = 3;
  config.dim = 4;
  config.frames_per_class = 20;
  config.separation = 4.0;
  config.overlap_noise = 0.1;
  config.seed = 9;

  SynthCorpus a = generate(config);
  SynthCorpus b = generate(config);
  REQUIRE(a.features.data == b.features.data);
  REQUIRE(a.labels.labels == b.labels.labels);
  REQUIRE(a.class_means == b.class_means);

  config.seed = 10;
  SynthCorpus c = generate(config);
  REQUIRE(a.features.data != c.features.data);
}

TEST_CASE("closest class means sit exactly at the requested separation") {
  SynthConfig config;
  config.num_classes = 6;
  config.dim = 8;
  config.frames_per_class = 2;
  config.separation = 3.0;
  config.seed = 17;

  SynthCorpus corpus = generate(config);
  REQUIRE(corpus.class_means.size() == 6);
  double min_dist = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < 6; ++a) {
    for (std::size_t b = a + 1; b < 6; ++b) {
      double d2 = 0.0;
      for (std::size_t d = 0; d < 8; ++d) {
        const double diff = corpus.class_means[a][d] - corpus.class_means[b][d];
        d2 += diff * diff;
      }
      min_dist = std::min(min_dist, std::sqrt(d2));
    }
  }
  REQUIRE_THAT(min_dist, Catch::Matchers::WithinAbs(3.0, 1e-9));
}

TEST_CASE("per class sample means track the generating means") {
  SynthConfig config;
  config.num_classes = 3;
  config.dim = 4;
  config.frames_per_class = 2000;
  config.separation = 5.0;
  config.seed = 23;

  SynthCorpus corpus = generate(config);
  for (std::uint32_t j = 0; j < 3; ++j) {
    std::vector<double> mean(4, 0.0);
    for (std::size_t i = 0; i < 2000; ++i) {
      const double* row = corpus.features.row(j * 2000 + i);
      for (std::size_t d = 0; d < 4; ++d) mean[d] += row[d];
    }
    for (std::size_t d = 0; d < 4; ++d) {
      mean[d] /= 2000.0;
      REQUIRE_THAT(mean[d],
                   Catch::Matchers::WithinAbs(corpus.class_means[j][d], 0.15));
    }
  }
  // frames are laid out one class block at a time
  for (std::size_t t = 0; t < corpus.labels.labels.size(); ++t) {
    if (config.overlap_noise == 0.0)
      REQUIRE(corpus.labels.labels[t] == t / 2000);
  }
}

TEST_CASE("label noise flips exactly the requested fraction") {
  SynthConfig config;
  config.num_classes = 4;
  config.dim = 3;
  config.frames_per_class = 500;
  config.separation = 4.0;
  config.overlap_noise = 0.1;
  config.seed = 31;

  SynthCorpus corpus = generate(config);
  const std::size_t frames = 4 * 500;
  std::size_t flipped = 0;
  for (std::size_t t = 0; t < frames; ++t) {
    const std::uint32_t truth = static_cast<std::uint32_t>(t / 500);
    REQUIRE(corpus.labels.labels[t] < 4);
    if (corpus.labels.labels[t] != truth) flipped++;
  }
  REQUIRE(flipped == 200);  // llround(0.1 * 2000)
}

TEST_CASE("feature values carry float32 precision") {
  SynthConfig config;
  config.num_classes = 2;
  config.dim = 5;
  config.frames_per_class = 50;
  config.separation = 4.0;
  config.seed = 37;

  SynthCorpus corpus = generate(config);
  for (const double v : corpus.features.data) {
    REQUIRE(v == static_cast<double>(static_cast<float>(v)));
  }
  REQUIRE_NOTHROW(corpus.features.validate());
  REQUIRE_NOTHROW(corpus.labels.validate());
  REQUIRE(corpus.labels.symbols ==
          std::vector<std::string>{"ph000", "ph001"});
}

TEST_CASE("zero separation and single class corpora collapse to the origin") {
  SynthConfig config;
  config.num_classes = 4;
  config.dim = 3;
  config.frames_per_class = 5;
  config.separation = 0.0;
  config.seed = 41;
  SynthCorpus corpus = generate(config);
  for (const auto& mean : corpus.class_means)
    for (const double v : mean) REQUIRE(v == 0.0);

  config.num_classes = 1;
  config.separation = 6.0;
  SynthCorpus mono = generate(config);
  REQUIRE(mono.class_means.size() == 1);
  for (const double v : mono.class_means[0]) REQUIRE(v == 0.0);
  for (const auto l : mono.labels.labels) REQUIRE(l == 0);
}

TEST_CASE("impossible or malformed configurations are rejected") {
  SynthConfig config;
  config.num_classes = 3;
  config.dim = 3;
  config.frames_per_class = 10;

  SECTION("noise bounds") {
    config.overlap_noise = 0.5;
    REQUIRE_THROWS_AS(generate(config), ConfigError);
    config.overlap_noise = -0.1;
    REQUIRE_THROWS_AS(generate(config), ConfigError);
    config.overlap_noise = 0.2;
    config.num_classes = 1;
    REQUIRE_THROWS_AS(generate(config), ConfigError);
  }
  SECTION("shape bounds") {
    config.num_classes = 0;
    REQUIRE_THROWS_AS(generate(config), ConfigError);
    config.num_classes = 3;
    config.dim = 0;
    REQUIRE_THROWS_AS(generate(config), ConfigError);
    config.dim = 3;
    config.frames_per_class = 1;
    REQUIRE_THROWS_AS(generate(config), ConfigError);
    config.frames_per_class = 10;
    config.separation = -1.0;
    REQUIRE_THROWS_AS(generate(config), ConfigError);
  }
  SECTION("three separated classes cannot fit on a line") {
    config.dim = 1;
    config.separation = 4.0;
    REQUIRE_THROWS_AS(generate(config), ConfigError);
  }
}

TEST_CASE("written corpus round trips bitwise") {
  SynthConfig config;
  config.num_classes = 2;
  config.dim = 3;
  config.frames_per_class = 30;
  config.separation = 4.0;
  config.seed = 43;
  SynthCorpus corpus = generate(config);

  testutil::TempDir dir("synth");
  CorpusManifest manifest =
      write_corpus(corpus.features, corpus.labels, 25, dir.path());

  // 60 frames in utterances of 25 leave a short last utterance of 10
  REQUIRE(manifest.entries.size() == 3);
  REQUIRE(manifest.entries[0].feature_path == "utt_00000.ppgf");
  REQUIRE(manifest.entries[0].label_path == "utt_00000.ppgl");
  REQUIRE(manifest.entries[2].feature_path == "utt_00002.ppgf");
  REQUIRE(manifest.entries[0].group.empty());

  CorpusManifest reread = read_manifest(dir.path() / "manifest.tsv");
  REQUIRE(reread.entries.size() == 3);
  PooledCorpus pooled = pool_corpus(reread);
  REQUIRE(pooled.features.frames == 60);
  REQUIRE(pooled.features.dim == 3);
  REQUIRE(std::memcmp(pooled.features.data.data(), corpus.features.data.data(),
                      corpus.features.data.size() * sizeof(double)) == 0);
  REQUIRE(pooled.labels.labels == corpus.labels.labels);
  REQUIRE(pooled.labels.symbols == corpus.labels.symbols);
  REQUIRE(pooled.boundaries == std::vector<std::size_t>{0, 25, 50, 60});
  REQUIRE(pooled.groups == std::vector<std::string>(3, ""));

  REQUIRE_THROWS_AS(write_corpus(corpus.features, corpus.labels, 0, dir.path()),
                    ConfigError);
}
