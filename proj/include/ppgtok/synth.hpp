#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "ppgtok/common.hpp"
#include "ppgtok/io.hpp"
#include "ppgtok/rng.hpp"
#include "ppgtok/types.hpp"

namespace ppgtok {

struct SynthConfig {
  std::uint32_t num_classes = 5;
  std::size_t dim = 16;
  std::size_t frames_per_class = 1000;
  double separation = 4.0;     // min inter-mean distance, in within-class sigma
  double overlap_noise = 0.0;  // fraction of frames relabeled to a wrong class
  std::uint64_t seed = 0;

  void validate() const {
    if (num_classes < 1) throw ConfigError("num_classes must be >= 1");
    if (dim < 1) throw ConfigError("dim must be >= 1");
    if (frames_per_class < 2) throw ConfigError("frames_per_class must be >= 2");
    if (!(separation >= 0.0)) throw ConfigError("separation must be >= 0");
    if (!(overlap_noise >= 0.0) || overlap_noise >= 0.5) {
      throw ConfigError("overlap_noise must be in [0, 0.5)");
    }
    if (overlap_noise > 0.0 && num_classes < 2) {
      throw ConfigError("label noise needs at least 2 classes");
    }
  }
};

struct SynthCorpus {
  FeatureMatrix features;
  LabelSequence labels;
  std::vector<std::vector<double>> class_means;  // generating means, one per class
};

// Seeded synthetic labeled corpus: unit-variance isotropic classes whose
// means sit on random directions rescaled so the closest pair is exactly
// `separation` apart, plus an exact overlap_noise fraction of wrong
// labels. Feature values are snapped to float32 so files round-trip
// bit-exactly. Deterministic per seed.
inline SynthCorpus generate(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const std::uint32_t nc = config.num_classes;
  const std::size_t dim = config.dim;

  std::vector<std::vector<double>> directions(nc, std::vector<double>(dim, 0.0));
  for (auto& dir : directions) {
    double norm = 0.0;
    while (norm < 1e-12) {
      norm = 0.0;
      for (auto& v : dir) {
        v = rng.normal();
        norm += v * v;
      }
      norm = std::sqrt(norm);
    }
    for (auto& v : dir) v /= norm;
  }
  double scale = 0.0;
  if (nc > 1 && config.separation > 0.0) {
    double min_dist = std::numeric_limits<double>::infinity();
    for (std::uint32_t a = 0; a < nc; ++a) {
      for (std::uint32_t b = a + 1; b < nc; ++b) {
        min_dist = std::min(min_dist, std::sqrt(squared_distance(
                                          directions[a].data(), directions[b].data(), dim)));
      }
    }
    if (min_dist < 1e-6) {
      throw ConfigError("cannot place " + std::to_string(nc) +
                        " separated class means in " + std::to_string(dim) +
                        " dimensions; directions collide");
    }
    scale = config.separation / min_dist;
  }

  SynthCorpus corpus;
  corpus.class_means.assign(nc, std::vector<double>(dim, 0.0));
  for (std::uint32_t j = 0; j < nc; ++j) {
    for (std::size_t d = 0; d < dim; ++d) {
      corpus.class_means[j][d] = directions[j][d] * scale;
    }
  }

  const std::size_t frames = static_cast<std::size_t>(nc) * config.frames_per_class;
  corpus.features = FeatureMatrix::zeros(frames, dim);
  corpus.labels.num_classes = nc;
  corpus.labels.labels.resize(frames);
  corpus.labels.symbols.resize(nc);
  for (std::uint32_t j = 0; j < nc; ++j) {
    char name[16];
    std::snprintf(name, sizeof(name), "ph%03u", j);
    corpus.labels.symbols[j] = name;
  }
  std::size_t t = 0;
  for (std::uint32_t j = 0; j < nc; ++j) {
    for (std::size_t i = 0; i < config.frames_per_class; ++i, ++t) {
      double* row = corpus.features.row(t);
      for (std::size_t d = 0; d < dim; ++d) {
        const double v = corpus.class_means[j][d] + rng.normal();
        row[d] = static_cast<double>(static_cast<float>(v));
      }
      corpus.labels.labels[t] = j;
    }
  }

  const auto wrong = static_cast<std::size_t>(
      std::llround(config.overlap_noise * static_cast<double>(frames)));
  if (wrong > 0) {
    const auto victims = sample_indices(frames, wrong, rng);
    for (const auto v : victims) {
      const std::uint32_t current = corpus.labels.labels[v];
      std::uint32_t relabeled = static_cast<std::uint32_t>(rng.below(nc - 1));
      if (relabeled >= current) ++relabeled;
      corpus.labels.labels[v] = relabeled;
    }
  }
  return corpus;
}

// Splits the corpus into utterances of utterance_len frames (last one may
// be shorter), writes PPGF/PPGL pairs plus a manifest into out_dir, and
// returns the manifest. Entry paths are relative to out_dir.
inline CorpusManifest write_corpus(const FeatureMatrix& features,
                                   const LabelSequence& labels,
                                   std::size_t utterance_len,
                                   const std::filesystem::path& out_dir) {
  if (utterance_len < 1) throw ConfigError("utterance_len must be >= 1");
  features.validate();
  labels.validate();
  check_paired(features, labels);
  std::filesystem::create_directories(out_dir);

  CorpusManifest manifest;
  manifest.base_dir = out_dir.string();
  std::size_t utt = 0;
  for (std::size_t start = 0; start < features.frames; start += utterance_len, ++utt) {
    const std::size_t stop = std::min(features.frames, start + utterance_len);
    FeatureMatrix uf = FeatureMatrix::zeros(stop - start, features.dim);
    std::copy_n(features.row(start), (stop - start) * features.dim, uf.data.data());
    LabelSequence ul;
    ul.num_classes = labels.num_classes;
    ul.symbols = labels.symbols;
    ul.labels.assign(labels.labels.begin() + static_cast<std::ptrdiff_t>(start),
                     labels.labels.begin() + static_cast<std::ptrdiff_t>(stop));
    char stem[32];
    std::snprintf(stem, sizeof(stem), "utt_%05zu", utt);
    ManifestEntry entry;
    entry.feature_path = std::string(stem) + ".ppgf";
    entry.label_path = std::string(stem) + ".ppgl";
    write_features(out_dir / entry.feature_path, uf);
    write_labels(out_dir / entry.label_path, ul);
    manifest.entries.push_back(std::move(entry));
  }
  write_manifest(out_dir / "manifest.tsv", manifest);
  return manifest;
}

}  // namespace ppgtok
