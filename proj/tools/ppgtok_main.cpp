#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ppgtok/ppgtok.hpp"

namespace fs = std::filesystem;
using namespace ppgtok;

namespace {

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream make_text_file(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

// Replayable record of the run: every option of the invoked subcommand,
// defaults included, under its config section.
void echo_config(const CLI::App* sub, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  auto out = make_text_file(out_dir / "run_config.toml");
  out << "[" << sub->get_name() << "]\n" << sub->config_to_str(true, false);
  if (!out) throw IoError("failed writing run_config.toml");
}

PooledCorpus load_pooled(const std::string& manifest_path) {
  return pool_corpus(read_manifest(manifest_path));
}

void check_codebook_dim(const Codebook& cb, const FeatureMatrix& features) {
  if (cb.dim != features.dim) {
    throw ConfigError("codebook dimension " + std::to_string(cb.dim) +
                      " does not match feature dimension " +
                      std::to_string(features.dim));
  }
}

std::string class_name(const LabelSequence& labels, std::int64_t id) {
  if (id < 0) return "-";
  const auto idx = static_cast<std::size_t>(id);
  if (idx < labels.symbols.size()) return labels.symbols[idx];
  return std::to_string(id);
}

std::vector<std::string> expand_groups(const PooledCorpus& pooled) {
  std::vector<std::string> frame_groups(pooled.features.frames);
  for (std::size_t u = 0; u + 1 < pooled.boundaries.size(); ++u) {
    for (std::size_t t = pooled.boundaries[u]; t < pooled.boundaries[u + 1]; ++t) {
      frame_groups[t] = pooled.groups[u];
    }
  }
  return frame_groups;
}

// --- gen-synth ---------------------------------------------------------

struct GenSynthOpts {
  SynthConfig synth;
  std::size_t utterance_len = 200;
  std::string out_dir;
};

void run_gen_synth(const GenSynthOpts& opts, const CLI::App* sub) {
  const SynthCorpus corpus = generate(opts.synth);
  fs::create_directories(opts.out_dir);
  write_corpus(corpus.features, corpus.labels, opts.utterance_len, opts.out_dir);

  nlohmann::ordered_json truth;
  truth["config"] = {{"classes", opts.synth.num_classes},
                     {"dim", opts.synth.dim},
                     {"frames_per_class", opts.synth.frames_per_class},
                     {"separation", opts.synth.separation},
                     {"overlap_noise", opts.synth.overlap_noise},
                     {"seed", opts.synth.seed},
                     {"utterance_len", opts.utterance_len}};
  truth["class_means"] = corpus.class_means;
  auto out = make_text_file(fs::path(opts.out_dir) / "ground_truth.json");
  out << truth.dump(2) << "\n";

  echo_config(sub, opts.out_dir);
  const std::size_t utts =
      (corpus.features.frames + opts.utterance_len - 1) / opts.utterance_len;
  std::printf("wrote %zu utterances (%zu frames, dim %zu, %u classes) to %s\n",
              utts, corpus.features.frames, corpus.features.dim,
              corpus.labels.num_classes, opts.out_dir.c_str());
}

void setup_gen_synth(CLI::App& app) {
  auto opts = std::make_shared<GenSynthOpts>();
  CLI::App* sub =
      app.add_subcommand("gen-synth", "generate a labeled synthetic corpus");
  sub->add_option("--classes", opts->synth.num_classes, "number of classes")
      ->capture_default_str();
  sub->add_option("--dim", opts->synth.dim, "feature dimension")
      ->capture_default_str();
  sub->add_option("--frames-per-class", opts->synth.frames_per_class,
                  "frames drawn per class")
      ->capture_default_str();
  sub->add_option("--separation", opts->synth.separation,
                  "closest inter-mean distance, in within-class sigma")
      ->capture_default_str();
  sub->add_option("--noise", opts->synth.overlap_noise,
                  "fraction of frames relabeled to a wrong class")
      ->capture_default_str();
  sub->add_option("--seed", opts->synth.seed, "rng seed")->capture_default_str();
  sub->add_option("--utterance-len", opts->utterance_len,
                  "frames per output utterance")
      ->capture_default_str();
  sub->add_option("--out-dir", opts->out_dir, "output corpus directory")
      ->required();
  sub->callback([opts, sub]() { run_gen_synth(*opts, sub); });
}

// --- train-kmeans ------------------------------------------------------

struct TrainKMeansOpts {
  std::string manifest;
  KMeansConfig config;
  int threads = 0;
  std::string out_dir;
};

void run_train_kmeans(const TrainKMeansOpts& opts, const CLI::App* sub) {
  const PooledCorpus pooled = load_pooled(opts.manifest);
  const KMeansResult result = train_kmeans(pooled.features, &pooled.labels,
                                           opts.config,
                                           resolve_threads(opts.threads));
  fs::create_directories(opts.out_dir);
  save_codebook(fs::path(opts.out_dir) / "codebook.json", result.codebook);

  auto hist = make_text_file(fs::path(opts.out_dir) / "history.csv");
  hist << "iteration,distortion,drift,purity\n";
  for (std::size_t i = 0; i < result.history.size(); ++i) {
    const KMeansIter& it = result.history[i];
    hist << (i + 1) << "," << g17(it.distortion) << "," << g17(it.drift) << ","
         << g17(it.purity) << "\n";
  }
  echo_config(sub, opts.out_dir);

  const CodebookMeta& meta = result.codebook.meta;
  std::printf("k-means: k=%zu lambda=%g iterations=%zu converged=%s "
              "final_drift=%s\n",
              result.codebook.k, opts.config.lambda, meta.iterations,
              meta.converged ? "yes" : "no", g17(meta.final_residual).c_str());
  if (!result.history.empty()) {
    std::printf("phone purity: %.4f %%\n", result.history.back().purity);
  }
}

void setup_train_kmeans(CLI::App& app) {
  auto opts = std::make_shared<TrainKMeansOpts>();
  CLI::App* sub = app.add_subcommand(
      "train-kmeans", "train a purity-regularized k-means codebook");
  sub->add_option("--manifest", opts->manifest, "corpus manifest")->required();
  sub->add_option("--k", opts->config.k, "codebook size")->capture_default_str();
  sub->add_option("--lambda", opts->config.lambda,
                  "purity regularization weight (0 = plain k-means)")
      ->capture_default_str();
  sub->add_option("--epsilon", opts->config.epsilon,
                  "convergence threshold on summed squared centroid drift")
      ->capture_default_str();
  sub->add_option("--max-iter", opts->config.max_iter, "iteration cap")
      ->capture_default_str();
  sub->add_option("--seed", opts->config.seed, "rng seed")->capture_default_str();
  sub->add_option("--threads", opts->threads, "worker threads (0 = all cores)")
      ->capture_default_str();
  sub->add_option("--out", opts->out_dir, "output directory")->required();
  sub->callback([opts, sub]() { run_train_kmeans(*opts, sub); });
}

// --- train-vq ----------------------------------------------------------

struct TrainVqOpts {
  std::string manifest;
  VqConfig config;
  int threads = 0;
  std::string out_dir;
  bool preset_k100 = false;
  bool preset_k500 = false;
};

void run_train_vq(TrainVqOpts opts, const CLI::App* sub) {
  if (opts.preset_k100 && opts.preset_k500) {
    throw ConfigError("choose at most one preset");
  }
  if (opts.preset_k100 || opts.preset_k500) {
    if (sub->count("--k") > 0 || sub->count("--alpha") > 0) {
      throw ConfigError("presets fix --k and --alpha; drop the explicit flags");
    }
    opts.config.k = opts.preset_k100 ? 100 : 500;
    opts.config.alpha = opts.preset_k100 ? 1.2 : 1.05;
  }
  const PooledCorpus pooled = load_pooled(opts.manifest);
  const VqResult result = train_vq(pooled.features, pooled.labels, opts.config,
                                   resolve_threads(opts.threads));
  fs::create_directories(opts.out_dir);
  save_codebook(fs::path(opts.out_dir) / "codebook.json", result.codebook);

  auto hist = make_text_file(fs::path(opts.out_dir) / "history.csv");
  hist << "epoch,mse,purity_loss,purity\n";
  for (std::size_t e = 0; e < result.history.size(); ++e) {
    const VqEpoch& row = result.history[e];
    hist << e << "," << g17(row.mse) << "," << g17(row.purity_loss) << ","
         << g17(row.purity) << "\n";
  }
  echo_config(sub, opts.out_dir);

  std::printf("vq-sgd: k=%zu alpha=%g epochs=%zu final_loss=%s\n",
              result.codebook.k, opts.config.alpha, opts.config.epochs,
              g17(result.codebook.meta.final_residual).c_str());
  std::printf("phone purity: %.4f %%\n", result.history.back().purity);
}

void setup_train_vq(CLI::App& app) {
  auto opts = std::make_shared<TrainVqOpts>();
  CLI::App* sub = app.add_subcommand(
      "train-vq", "train a vq codebook by sgd on mse + entropy purity loss");
  sub->add_option("--manifest", opts->manifest, "corpus manifest")->required();
  sub->add_option("--k", opts->config.k, "codebook size")->capture_default_str();
  sub->add_option("--alpha", opts->config.alpha,
                  "purity loss weight (0 = reconstruction only)")
      ->capture_default_str();
  sub->add_option("--lr", opts->config.learning_rate, "sgd step size")
      ->capture_default_str();
  sub->add_option("--batch-size", opts->config.batch_size, "minibatch frames")
      ->capture_default_str();
  sub->add_option("--epochs", opts->config.epochs, "training epochs")
      ->capture_default_str();
  sub->add_option("--variance-floor", opts->config.variance_floor,
                  "elementwise floor for class gaussian variances")
      ->capture_default_str();
  sub->add_option("--seed", opts->config.seed, "rng seed")->capture_default_str();
  sub->add_option("--threads", opts->threads, "worker threads (0 = all cores)")
      ->capture_default_str();
  sub->add_option("--out", opts->out_dir, "output directory")->required();
  sub->add_flag("--preset-k100", opts->preset_k100,
                "preset: k=100, alpha=1.2");
  sub->add_flag("--preset-k500", opts->preset_k500,
                "preset: k=500, alpha=1.05");
  sub->callback([opts, sub]() { run_train_vq(*opts, sub); });
}

// --- quantize ----------------------------------------------------------

struct QuantizeOpts {
  std::string codebook;
  std::string features;
  std::string manifest;
  int threads = 0;
  std::string out_dir;
};

void write_tokens(const fs::path& path, const Assignment& assignment) {
  auto out = make_text_file(path);
  for (std::size_t t = 0; t < assignment.size(); ++t) {
    if (t > 0) out << ' ';
    out << assignment[t];
  }
  out << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

void run_quantize(const QuantizeOpts& opts, const CLI::App* sub) {
  if (opts.features.empty() == opts.manifest.empty()) {
    throw ConfigError("pass exactly one of --features or --manifest");
  }
  const Codebook cb = load_codebook(opts.codebook);
  const int threads = resolve_threads(opts.threads);
  fs::create_directories(opts.out_dir);

  std::vector<fs::path> inputs;
  if (!opts.features.empty()) {
    inputs.emplace_back(opts.features);
  } else {
    const CorpusManifest manifest = read_manifest(opts.manifest);
    for (const ManifestEntry& entry : manifest.entries) {
      inputs.push_back(resolve_path(manifest.base_dir, entry.feature_path));
    }
  }
  std::set<std::string> stems;
  for (const fs::path& p : inputs) {
    if (!stems.insert(p.stem().string()).second) {
      throw ConfigError("duplicate utterance stem " + p.stem().string() +
                        "; token files would collide");
    }
  }
  std::size_t total = 0;
  for (const fs::path& p : inputs) {
    const FeatureMatrix features = read_features(p);
    check_codebook_dim(cb, features);
    const Assignment assignment = assign(features, cb, threads);
    write_tokens(fs::path(opts.out_dir) / (p.stem().string() + ".tokens"),
                 assignment);
    total += features.frames;
  }
  echo_config(sub, opts.out_dir);
  std::printf("quantized %zu utterances (%zu frames) with k=%zu codebook\n",
              inputs.size(), total, cb.k);
}

void setup_quantize(CLI::App& app) {
  auto opts = std::make_shared<QuantizeOpts>();
  CLI::App* sub = app.add_subcommand(
      "quantize", "map features to cluster index tokens, one file per utterance");
  sub->add_option("--codebook", opts->codebook, "trained codebook json")
      ->required();
  sub->add_option("--features", opts->features, "single feature file");
  sub->add_option("--manifest", opts->manifest, "corpus manifest");
  sub->add_option("--threads", opts->threads, "worker threads (0 = all cores)")
      ->capture_default_str();
  sub->add_option("--out", opts->out_dir, "output directory")->required();
  sub->callback([opts, sub]() { run_quantize(*opts, sub); });
}

// --- purity ------------------------------------------------------------

struct PurityOpts {
  std::string codebook;
  std::string manifest;
  bool json = false;
  int threads = 0;
};

void run_purity(const PurityOpts& opts) {
  const Codebook cb = load_codebook(opts.codebook);
  const PooledCorpus pooled = load_pooled(opts.manifest);
  check_codebook_dim(cb, pooled.features);
  const Assignment assignment =
      assign(pooled.features, cb, resolve_threads(opts.threads));
  const std::vector<std::string> frame_groups = expand_groups(pooled);
  const PurityReport report =
      phone_purity(assignment, pooled.labels, &frame_groups, cb.k);

  std::map<std::string, std::uint64_t> group_frames;
  for (const std::string& g : frame_groups) {
    if (!g.empty()) group_frames[g]++;
  }

  if (opts.json) {
    nlohmann::ordered_json j;
    j["overall"] = report.overall;
    j["frames"] = report.frames;
    j["per_group"] = nlohmann::ordered_json::object();
    for (const auto& [g, p] : report.per_group) {
      j["per_group"][g] = {{"frames", group_frames.at(g)}, {"purity", p}};
    }
    j["per_cluster"] = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < report.per_cluster.size(); ++c) {
      const ClusterPurity& row = report.per_cluster[c];
      j["per_cluster"].push_back(
          {{"cluster", c},
           {"usage", row.usage},
           {"majority_label", row.majority_label},
           {"majority_symbol", class_name(pooled.labels, row.majority_label)},
           {"majority_count", row.majority_count},
           {"majority_fraction", row.majority_fraction}});
    }
    std::cout << j.dump(2) << "\n";
    return;
  }

  std::printf("phone purity: %.4f %%  (%zu frames, %zu clusters)\n",
              report.overall, report.frames, report.per_cluster.size());
  if (!report.per_group.empty()) {
    std::printf("\n%-16s %10s %10s\n", "group", "frames", "purity%");
    for (const auto& [g, p] : report.per_group) {
      std::printf("%-16s %10llu %10.4f\n", g.c_str(),
                  static_cast<unsigned long long>(group_frames.at(g)), p);
    }
  }
  std::printf("\n%8s %10s %-12s %8s\n", "cluster", "usage", "majority",
              "share%");
  for (std::size_t c = 0; c < report.per_cluster.size(); ++c) {
    const ClusterPurity& row = report.per_cluster[c];
    std::printf("%8zu %10llu %-12s %8.4f\n", c,
                static_cast<unsigned long long>(row.usage),
                class_name(pooled.labels, row.majority_label).c_str(),
                100.0 * row.majority_fraction);
  }
}

void setup_purity(CLI::App& app) {
  auto opts = std::make_shared<PurityOpts>();
  CLI::App* sub = app.add_subcommand(
      "purity", "phone purity of a codebook over a labeled corpus");
  sub->add_option("--codebook", opts->codebook, "trained codebook json")
      ->required();
  sub->add_option("--manifest", opts->manifest, "corpus manifest")->required();
  sub->add_flag("--json", opts->json, "emit a json report instead of a table");
  sub->add_option("--threads", opts->threads, "worker threads (0 = all cores)")
      ->capture_default_str();
  sub->callback([opts]() { run_purity(*opts); });
}

// --- stats -------------------------------------------------------------

struct StatsOpts {
  std::string codebook;
  std::string manifest;
  std::size_t top = 5;
  std::string project_csv;
  std::size_t sample_per_cluster = 200;
  std::uint64_t seed = 0;
  int threads = 0;
};

void run_stats(const StatsOpts& opts) {
  const Codebook cb = load_codebook(opts.codebook);
  const PooledCorpus pooled = load_pooled(opts.manifest);
  check_codebook_dim(cb, pooled.features);
  const Assignment assignment =
      assign(pooled.features, cb, resolve_threads(opts.threads));
  const ClusterStats stats =
      cluster_stats(assignment, pooled.labels, cb, opts.top);

  std::printf("top %zu of %zu clusters by usage (%zu frames)\n", stats.top.size(),
              cb.k, pooled.features.frames);
  for (const std::uint32_t c : stats.top) {
    const auto& hist = stats.histograms[c];
    std::uint64_t usage = 0;
    for (const auto n : hist) usage += n;
    std::printf("cluster %u: usage %llu |", c,
                static_cast<unsigned long long>(usage));
    std::vector<std::uint32_t> order(hist.size());
    for (std::uint32_t j = 0; j < hist.size(); ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) {
                       if (hist[a] != hist[b]) return hist[a] > hist[b];
                       return a < b;
                     });
    for (const std::uint32_t j : order) {
      if (hist[j] == 0) break;
      std::printf(" %s:%llu", class_name(pooled.labels, j).c_str(),
                  static_cast<unsigned long long>(hist[j]));
    }
    std::printf("\n");
  }

  if (!opts.project_csv.empty()) {
    const std::vector<ProjectedFrame> points =
        project_2d(pooled.features, assignment, &pooled.labels,
                   opts.sample_per_cluster, opts.seed);
    auto out = make_text_file(opts.project_csv);
    out << "x,y,cluster,label\n";
    for (const ProjectedFrame& p : points) {
      out << g17(p.x) << "," << g17(p.y) << "," << p.cluster << "," << p.label
          << "\n";
    }
    std::printf("wrote %zu projected frames to %s\n", points.size(),
                opts.project_csv.c_str());
  }
}

void setup_stats(CLI::App& app) {
  auto opts = std::make_shared<StatsOpts>();
  CLI::App* sub = app.add_subcommand(
      "stats", "per-cluster label histograms and optional 2-d projection");
  sub->add_option("--codebook", opts->codebook, "trained codebook json")
      ->required();
  sub->add_option("--manifest", opts->manifest, "corpus manifest")->required();
  sub->add_option("--top", opts->top, "clusters to print, by usage")
      ->capture_default_str();
  sub->add_option("--project-2d", opts->project_csv,
                  "write a sampled 2-d projection csv to this path");
  sub->add_option("--sample-per-cluster", opts->sample_per_cluster,
                  "frame cap per cluster in the projection")
      ->capture_default_str();
  sub->add_option("--seed", opts->seed, "projection sampling seed")
      ->capture_default_str();
  sub->add_option("--threads", opts->threads, "worker threads (0 = all cores)")
      ->capture_default_str();
  sub->callback([opts]() { run_stats(*opts); });
}

// --- gradcheck ---------------------------------------------------------

struct GradcheckOpts {
  std::size_t trials = 50;
  std::uint64_t seed = 0;
  double tolerance = 1e-6;
};

// Central finite differences of the frozen-assignment loss against the
// analytic gradient, over small random instances. The assignment is held
// fixed at the base point because that is the function the gradient
// differentiates; re-assigning under perturbation would add step
// discontinuities unrelated to the derivative math.
void run_gradcheck(const GradcheckOpts& opts) {
  if (opts.trials < 1) throw ConfigError("trials must be >= 1");
  const bool negate = [] {
    const char* env = std::getenv("PPGTOK_GRADCHECK_NEGATE");
    return env != nullptr && env[0] == '1';
  }();
  if (negate) std::printf("negative control: analytic gradient negated\n");

  Rng rng(opts.seed);
  const double h = 1e-5;
  bool all_ok = true;
  double worst_err = -1.0;
  std::string worst_desc;

  for (std::size_t trial = 0; trial < opts.trials; ++trial) {
    const std::uint32_t nc = 2 + static_cast<std::uint32_t>(rng.below(4));
    const std::uint32_t dim = 1 + static_cast<std::uint32_t>(rng.below(6));
    const std::size_t k = 1 + rng.below(8);
    const std::size_t frames = 4 + rng.below(13);
    const double alpha = 0.5 + 1.5 * rng.uniform();

    GaussianClassModels models;
    models.num_classes = nc;
    models.dim = dim;
    models.variance_floor = 1e-4;
    models.means.resize(static_cast<std::size_t>(nc) * dim);
    models.variances.resize(models.means.size());
    for (double& m : models.means) m = 2.0 * rng.normal();
    for (double& v : models.variances) v = 0.5 + rng.uniform();

    FeatureMatrix batch = FeatureMatrix::zeros(frames, dim);
    for (double& x : batch.data) x = 2.0 * rng.normal();
    Codebook cb = Codebook::zeros(k, dim);
    for (double& c : cb.centroids) c = 2.0 * rng.normal();

    std::vector<double> analytic = loss_gradient(batch, cb, models, alpha);
    if (negate) {
      for (double& g : analytic) g = -g;
    }
    const Assignment frozen = assign(batch, cb);

    double trial_err = 0.0;
    std::size_t checked = 0, passed = 0;
    for (std::size_t c = 0; c < k; ++c) {
      for (std::uint32_t d = 0; d < dim; ++d) {
        const std::size_t idx = c * dim + d;
        Codebook probe = cb;
        probe.centroids[idx] = cb.centroids[idx] + h;
        const double up = mse_loss(batch, probe, frozen) +
                          alpha * purity_loss(frozen, probe, models);
        probe.centroids[idx] = cb.centroids[idx] - h;
        const double down = mse_loss(batch, probe, frozen) +
                            alpha * purity_loss(frozen, probe, models);
        const double numeric = (up - down) / (2.0 * h);
        const double err = std::abs(analytic[idx] - numeric);
        const double bound =
            1e-9 + opts.tolerance *
                       std::max(std::abs(analytic[idx]), std::abs(numeric));
        checked++;
        if (err <= bound) {
          passed++;
        } else {
          all_ok = false;
        }
        if (err > worst_err) {
          worst_err = err;
          char buf[160];
          std::snprintf(buf, sizeof(buf),
                        "trial %zu centroid %zu dim %u: analytic %.17g "
                        "numeric %.17g",
                        trial, c, d, analytic[idx], numeric);
          worst_desc = buf;
        }
        trial_err = std::max(trial_err, err);
      }
    }
    std::printf("trial %3zu: k=%zu dim=%u classes=%u frames=%zu alpha=%.3f  "
                "%zu/%zu coords ok, max abs err %.3g\n",
                trial, k, dim, nc, frames, alpha, passed, checked, trial_err);
  }

  std::printf("worst coordinate: %s\n", worst_desc.c_str());
  if (!all_ok) {
    throw NumericError("analytic gradient disagrees with finite differences");
  }
  std::printf("gradient check passed: %zu trials, tolerance %g\n", opts.trials,
              opts.tolerance);
}

void setup_gradcheck(CLI::App& app) {
  auto opts = std::make_shared<GradcheckOpts>();
  CLI::App* sub = app.add_subcommand(
      "gradcheck",
      "finite-difference check of the training loss gradient");
  sub->add_option("--trials", opts->trials, "random instances to test")
      ->capture_default_str();
  sub->add_option("--seed", opts->seed, "rng seed")->capture_default_str();
  sub->add_option("--tolerance", opts->tolerance, "relative tolerance")
      ->capture_default_str();
  sub->callback([opts]() { run_gradcheck(*opts); });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phone-purity guided vector quantization toolkit"};
  app.require_subcommand(1);
  std::string version = std::string("ppgtok ") + kToolkitVersion +
                        " (feature format v" +
                        std::to_string(kFeatureFormatVersion) +
                        ", label format v" +
                        std::to_string(kLabelFormatVersion) +
                        ", codebook format v" +
                        std::to_string(kCodebookFormatVersion) + ")";
  app.set_version_flag("--version", version);
  // Options may come from a TOML file holding one [subcommand] section per
  // command; --config itself lives on the root so it must be registered
  // before the subcommands, with fallthrough letting it appear after the
  // subcommand name on the command line.
  app.fallthrough();
  app.set_config("--config", "",
                 "read options from a TOML file ([subcommand] sections)");
  app.allow_config_extras(false);

  setup_gen_synth(app);
  setup_train_kmeans(app);
  setup_train_vq(app);
  setup_quantize(app);
  setup_purity(app);
  setup_stats(app);
  setup_gradcheck(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
