// noisevec: command-line front end for noise-vector extraction, prior
// training, streaming traces, synthetic corpora and evaluation reports.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.
// Every flag can also be set through an NV_-prefixed environment variable,
// e.g. --min-class-frames <-> NV_MIN_CLASS_FRAMES.

#include "noisevec/noisevec.hpp"

#include <CLI11.hpp>

#include <cctype>
#include <iostream>

namespace nv = noisevec;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

std::string env_name(const std::string& flag) {
  std::string out = "NV_";
  for (char c : flag) out.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  return out;
}

/// Adds --name bound to `target`, overridable through NV_NAME.
template <typename T>
CLI::Option* flag(CLI::App* app, const std::string& name, T& target, const std::string& help) {
  return app->add_option("--" + name, target, help)->envname(env_name(name));
}

void emit(const std::string& out_path, const std::string& data) {
  if (out_path.empty()) {
    std::cout << data << std::flush;
  } else {
    nv::detail::write_file(out_path, data);
  }
}

struct SadFlags {
  std::size_t coeff = 0;
  double quantile = 0.3;
  std::size_t window = 5;

  void add(CLI::App* app) {
    flag(app, "sad-coeff", coeff, "Energy coefficient index for the fallback SAD");
    flag(app, "sad-quantile", quantile, "Speech quantile for the fallback SAD");
    flag(app, "sad-window", window, "Odd smoothing window for the fallback SAD");
  }
  nv::SadConfig config() const { return {coeff, quantile, window}; }
};

struct MapFlags {
  std::string r_policy = "fixed-one";
  std::size_t em_every = 10;
  std::size_t em_iters = 50;
  double em_tol = 1e-6;

  void add(CLI::App* app) {
    flag(app, "r-policy", r_policy, "Scaling factors for MAP: fixed-one, global or em")
        ->check(CLI::IsMember({"fixed-one", "global", "em"}));
    flag(app, "em-every", em_every, "Frames between r refits under --r-policy em (streaming)");
    flag(app, "em-iters", em_iters, "Maximum EM iterations");
    flag(app, "em-tol", em_tol, "Relative tolerance on r for EM convergence");
  }
  nv::StreamingMapOptions options() const {
    nv::StreamingMapOptions o;
    o.policy = r_policy == "global" ? nv::RPolicy::kGlobal
               : r_policy == "em"   ? nv::RPolicy::kPerUtteranceEm
                                    : nv::RPolicy::kFixedOne;
    o.em_every = em_every;
    o.em.max_iters = em_iters;
    o.em.rel_tol = em_tol;
    return o;
  }
};

nv::FeatureFormat parse_format(const std::string& s) {
  return s == "text" ? nv::FeatureFormat::kText : nv::FeatureFormat::kBinary;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  for (auto tok : nv::detail::split(s, ',')) {
    double v;
    if (!nv::detail::parse_double(tok, v)) throw nv::DataError("bad number '" + std::string(tok) + "' in list");
    out.push_back(v);
  }
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& s) {
  std::vector<std::size_t> out;
  for (auto tok : nv::detail::split(s, ',')) {
    std::size_t v;
    if (!nv::detail::parse_size(tok, v)) throw nv::DataError("bad index '" + std::string(tok) + "' in list");
    out.push_back(v);
  }
  return out;
}

std::string stem_of(const std::string& path) { return std::filesystem::path(path).stem().string(); }

// ---------------------------------------------------------------------------

struct ExtractCmd {
  std::string feats, labels, manifest, utt_id, mode = "offline", prior, out;
  std::size_t jobs = 1;
  SadFlags sad;
  MapFlags map;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("extract", "Compute utterance noise vectors");
    auto* f = flag(app, "feats", feats, "Feature file (NVF1 or text)");
    auto* m = flag(app, "manifest", manifest, "Manifest TSV for batch extraction");
    f->excludes(m);
    flag(app, "labels", labels, "Label file; energy SAD is used when absent")->needs(f);
    flag(app, "utt-id", utt_id, "Utterance id for --feats (default: file stem)");
    flag(app, "mode", mode, "offline, mle or map")->check(CLI::IsMember({"offline", "mle", "map"}));
    flag(app, "prior", prior, "NVPRIOR1 file (required for map)");
    flag(app, "jobs", jobs, "Parallel workers over manifest entries")->check(CLI::PositiveNumber);
    flag(app, "out", out, "Output file (stdout when absent)");
    sad.add(app);
    map.add(app);
    app->final_callback([this] {
      if (feats.empty() && manifest.empty()) throw CLI::RequiredError("--feats or --manifest");
      if (mode == "map" && prior.empty()) throw CLI::RequiredError("--prior (for --mode map)");
    });
  }

  int run() const {
    std::optional<nv::NoisePrior> p;
    if (mode == "map") p = nv::read_prior(prior);
    const auto opts = map.options();
    auto one = [&](const std::string& id, const nv::FeatureMatrix& x, const nv::SadLabels& s) {
      nv::NoiseVector v;
      if (mode == "offline") {
        v = nv::offline_noise_vector(x, s);
      } else if (mode == "mle") {
        nv::StreamingMle stream(x.dim());
        for (std::size_t t = 0; t < x.num_frames(); ++t) stream.push(x.frame(t), s[t]);
        v = stream.estimate();
      } else {
        v = nv::estimate_from_stats(nv::accumulate_stats(x, s), nv::Method::kMap, &*p, opts);
      }
      return nv::format_noise_vector(id, v);
    };
    if (!feats.empty()) {
      auto x = nv::read_features(feats);
      std::optional<std::filesystem::path> lab;
      if (!labels.empty()) lab = labels;
      auto s = nv::labels_for(x, lab, sad.config());
      emit(out, one(utt_id.empty() ? stem_of(feats) : utt_id, x, s));
      return 0;
    }
    const auto m = nv::read_manifest(manifest);
    std::vector<std::string> lines(m.entries.size());
    nv::parallel_for(lines.size(), jobs, [&](std::size_t i) {
      const auto& e = m.entries[i];
      auto x = nv::read_features(m.resolve(e.feature_path));
      std::optional<std::filesystem::path> lab;
      if (e.label_path) lab = m.resolve(*e.label_path);
      lines[i] = one(e.utterance_id, x, nv::labels_for(x, lab, sad.config()));
    });
    std::string all;
    for (const auto& l : lines) all += l;
    emit(out, all);
    return 0;
  }
};

struct TrainPriorCmd {
  std::string manifest, out;
  nv::PriorTrainingOptions options;
  std::size_t jobs = 1;
  SadFlags sad;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("train-prior", "Fit the joint speech/silence mean prior (NVPRIOR1)");
    flag(app, "manifest", manifest, "Training manifest")->required();
    flag(app, "min-class-frames", options.min_class_frames, "Minimum frames of each class per utterance");
    flag(app, "ridge", options.ridge, "Relative diagonal ridge on the covariance");
    flag(app, "em-iters", options.em_max_iters, "Maximum EM iterations for the global r");
    flag(app, "em-tol", options.em_rel_tol, "Relative tolerance for the global r");
    flag(app, "jobs", jobs, "Parallel workers")->check(CLI::PositiveNumber);
    flag(app, "out", out, "Output prior file (stdout when absent)");
    sad.add(app);
  }

  int run() const {
    const auto m = nv::read_manifest(manifest);
    std::vector<nv::SufficientStats> stats(m.entries.size());
    nv::parallel_for(stats.size(), jobs, [&](std::size_t i) {
      const auto& e = m.entries[i];
      auto x = nv::read_features(m.resolve(e.feature_path));
      std::optional<std::filesystem::path> lab;
      if (e.label_path) lab = m.resolve(*e.label_path);
      stats[i] = nv::accumulate_stats(x, nv::labels_for(x, lab, sad.config()));
    });
    const auto trained = nv::train_prior_from_stats(stats, options);
    std::cerr << "train-prior: used " << trained.used.size() << " of " << stats.size() << " utterances\n";
    emit(out, nv::encode_prior(trained.prior));
    return 0;
  }
};

struct StreamCmd {
  std::string feats, labels, mode = "mle", prior, out, plot_out, coeffs = "15,35,55,75";
  std::size_t every = 1;
  SadFlags sad;
  MapFlags map;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("stream", "Frame-by-frame estimate trajectory against the offline vector");
    flag(app, "feats", feats, "Feature file")->required();
    flag(app, "labels", labels, "Label file; energy SAD is used when absent");
    flag(app, "mode", mode, "mle or map")->check(CLI::IsMember({"mle", "map"}));
    flag(app, "prior", prior, "NVPRIOR1 file (required for map)");
    flag(app, "every", every, "Recompute the MAP solve every N frames")->check(CLI::PositiveNumber);
    flag(app, "out", out, "Trajectory TSV (stdout when absent)");
    flag(app, "plot-out", plot_out, "Also write per-coefficient plot TSV here");
    flag(app, "coeffs", coeffs, "Comma-separated noise-vector coefficients for --plot-out");
    sad.add(app);
    map.add(app);
    app->final_callback([this] {
      if (mode == "map" && prior.empty()) throw CLI::RequiredError("--prior (for --mode map)");
    });
  }

  int run() const {
    auto x = nv::read_features(feats);
    std::optional<std::filesystem::path> lab;
    if (!labels.empty()) lab = labels;
    auto s = nv::labels_for(x, lab, sad.config());
    std::optional<nv::NoisePrior> p;
    if (mode == "map") p = nv::read_prior(prior);
    const auto traj = nv::trace_convergence(x, s, mode == "map" ? nv::Method::kMap : nv::Method::kMle,
                                            p ? &*p : nullptr, map.options(), every);
    if (!plot_out.empty()) nv::detail::write_file(plot_out, nv::format_plot_data(traj, parse_size_list(coeffs)));
    emit(out, nv::format_trajectory(traj));
    return 0;
  }
};

struct SadCmd {
  std::string feats, out;
  SadFlags sad;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("sad", "Energy-quantile speech activity labels");
    flag(app, "feats", feats, "Feature file")->required();
    flag(app, "out", out, "Label file (stdout when absent)");
    sad.add(app);
  }

  int run() const {
    auto x = nv::read_features(feats);
    emit(out, nv::label_by_energy(x, sad.config()).to_string() + "\n");
    return 0;
  }
};

struct SynthCmd {
  std::string out_dir, prior, format = "binary";
  std::size_t dim = 40, utterances = 100, frames = 500, jobs = 1;
  double r_s = 1.0, r_n = 1.0, speech_fraction = 0.6, segment_length = 20.0;
  std::uint64_t seed = 42;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("synth", "Sample a synthetic corpus with ground truth");
    flag(app, "out-dir", out_dir, "Output directory")->required();
    flag(app, "prior", prior, "Generating NVPRIOR1 prior (default: built-in prior of --dim)");
    flag(app, "dim", dim, "Feature dim for the built-in prior")->check(CLI::PositiveNumber);
    flag(app, "r-s", r_s, "True speech scaling factor");
    flag(app, "r-n", r_n, "True silence scaling factor");
    flag(app, "utterances", utterances, "Number of utterances");
    flag(app, "frames", frames, "Frames per utterance");
    flag(app, "speech-fraction", speech_fraction, "Expected fraction of speech frames");
    flag(app, "segment-length", segment_length, "Mean segment length in frames");
    flag(app, "seed", seed, "Random seed");
    flag(app, "format", format, "Feature file format")->check(CLI::IsMember({"binary", "text"}));
    flag(app, "jobs", jobs, "Parallel workers")->check(CLI::PositiveNumber);
  }

  int run() const {
    nv::SynthConfig cfg;
    cfg.prior = prior.empty() ? nv::default_synth_prior(dim) : nv::read_prior(prior);
    cfg.r = {r_s, r_n};
    cfg.num_utterances = utterances;
    cfg.frames_per_utterance = frames;
    cfg.speech_fraction = speech_fraction;
    cfg.segment_mean_length = segment_length;
    cfg.seed = seed;
    nv::sample_corpus(cfg, out_dir, parse_format(format), jobs);
    return 0;
  }
};

struct EvalCmd {
  std::string manifest, truth, prior, report = "compare", mode = "mle", flips = "0,0.05,0.1,0.2", out;
  std::size_t nat_edge = 10, jobs = 1;
  std::uint64_t seed = 42;
  SadFlags sad;
  MapFlags map;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("eval", "Estimator comparison or label-noise sweep report");
    flag(app, "manifest", manifest, "Corpus manifest")->required();
    flag(app, "report", report, "compare or sweep")->check(CLI::IsMember({"compare", "sweep"}));
    flag(app, "truth", truth, "Ground-truth TSV (compare; default: truth.tsv beside the manifest)");
    flag(app, "prior", prior, "NVPRIOR1 prior (compare, and sweep with --mode map)");
    flag(app, "mode", mode, "Estimator for the sweep: mle or map")->check(CLI::IsMember({"mle", "map"}));
    flag(app, "flip", flips, "Comma-separated label flip probabilities for the sweep");
    flag(app, "nat-edge", nat_edge, "Edge frames for the NAT-vector baseline");
    flag(app, "seed", seed, "Random seed for label flips");
    flag(app, "jobs", jobs, "Parallel workers")->check(CLI::PositiveNumber);
    flag(app, "out", out, "Report TSV (stdout when absent)");
    sad.add(app);
    map.add(app);
    app->final_callback([this] {
      if ((report == "compare" || mode == "map") && prior.empty()) throw CLI::RequiredError("--prior");
    });
  }

  int run() const {
    const auto m = nv::read_manifest(manifest);
    const auto corpus = nv::load_corpus(m, sad.config(), jobs);
    std::optional<nv::NoisePrior> p;
    if (!prior.empty()) p = nv::read_prior(prior);
    if (report == "compare") {
      const auto t = nv::read_truth(truth.empty() ? m.base_dir / "truth.tsv" : std::filesystem::path(truth));
      emit(out, nv::format_comparison(nv::compare_estimators(corpus, t, *p, map.options(), nat_edge, jobs)));
    } else {
      const auto method = mode == "map" ? nv::Method::kMap : nv::Method::kMle;
      emit(out, nv::format_sweep(nv::label_noise_sweep(corpus, parse_double_list(flips), method, p ? &*p : nullptr,
                                                       map.options(), seed, jobs)));
    }
    return 0;
  }
};

struct ApplyCmd {
  std::string feats, vectors, utt_id, affine, out, out_format = "text";

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("apply", "Apply the control-layer affine map to features and a noise vector");
    flag(app, "feats", feats, "Feature file")->required();
    flag(app, "vectors", vectors, "Noise-vector file (extract output)")->required();
    flag(app, "utt-id", utt_id, "Which vector to use (default: the first line)");
    flag(app, "affine", affine, "NVAFFINE1 map (default: identity append)");
    flag(app, "out", out, "Output features (stdout when absent)");
    flag(app, "out-format", out_format, "binary or text")->check(CLI::IsMember({"binary", "text"}));
  }

  int run() const {
    auto x = nv::read_features(feats);
    std::optional<nv::NoiseVector> chosen;
    for (auto line : nv::detail::split_lines(nv::detail::read_file(vectors))) {
      if (line.empty()) continue;
      auto [id, v] = nv::parse_noise_vector(line);
      if (utt_id.empty() || id == utt_id) {
        chosen = std::move(v);
        break;
      }
    }
    if (!chosen) throw nv::DataError("no noise vector" + (utt_id.empty() ? std::string() : " for '" + utt_id + "'"));
    const auto map = affine.empty() ? nv::AffineMap::identity_append(x.dim()) : nv::read_affine(affine);
    const auto y = nv::apply_control_layer(x, *chosen, map);
    emit(out, parse_format(out_format) == nv::FeatureFormat::kBinary ? nv::encode_nvf(y) : nv::encode_feature_text(y));
    return 0;
  }
};

struct BaselineCmd {
  std::string feats, method = "cmn", utt_id, out, out_format = "text";
  std::size_t edge_frames = 10;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("baseline", "Baselines: CMN features, utt-mean or NAT vectors");
    flag(app, "feats", feats, "Feature file")->required();
    flag(app, "method", method, "cmn, utt-mean or nat")->check(CLI::IsMember({"cmn", "utt-mean", "nat"}));
    flag(app, "edge-frames", edge_frames, "Edge frames for nat");
    flag(app, "utt-id", utt_id, "Utterance id for vector output (default: file stem)");
    flag(app, "out", out, "Output file (stdout when absent)");
    flag(app, "out-format", out_format, "Feature format for cmn: binary or text")
        ->check(CLI::IsMember({"binary", "text"}));
  }

  int run() const {
    auto x = nv::read_features(feats);
    const std::string id = utt_id.empty() ? stem_of(feats) : utt_id;
    if (method == "cmn") {
      const auto y = nv::cmn_apply(x);
      emit(out, parse_format(out_format) == nv::FeatureFormat::kBinary ? nv::encode_nvf(y) : nv::encode_feature_text(y));
    } else if (method == "utt-mean") {
      emit(out, nv::format_vector_line(id, nv::utt_mean(x)));
    } else {
      emit(out, nv::format_vector_line(id, nv::nat_vector(x, edge_frames)));
    }
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Utterance noise-vector toolkit"};
  app.require_subcommand(1);

  ExtractCmd extract;
  TrainPriorCmd train;
  StreamCmd stream;
  SadCmd sad;
  SynthCmd synth;
  EvalCmd eval;
  ApplyCmd apply;
  BaselineCmd baseline;
  extract.add(app);
  train.add(app);
  stream.add(app);
  sad.add(app);
  synth.add(app);
  eval.add(app);
  apply.add(app);
  baseline.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (app.got_subcommand("extract")) return extract.run();
    if (app.got_subcommand("train-prior")) return train.run();
    if (app.got_subcommand("stream")) return stream.run();
    if (app.got_subcommand("sad")) return sad.run();
    if (app.got_subcommand("synth")) return synth.run();
    if (app.got_subcommand("eval")) return eval.run();
    if (app.got_subcommand("apply")) return apply.run();
    if (app.got_subcommand("baseline")) return baseline.run();
  } catch (const nv::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const nv::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
