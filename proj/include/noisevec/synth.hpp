#ifndef NOISEVEC_SYNTH_HPP
#define NOISEVEC_SYNTH_HPP

// Synthetic corpora drawn from the tied speech/silence generative model.
// Every utterance owns its own random stream, so corpora are reproducible
// and can be generated in any order.

#include "noisevec/map_model.hpp"
#include "noisevec/parallel.hpp"

#include <cstdio>
#include <random>
#include <unordered_map>

namespace noisevec {

/// Portable seeded stream: mt19937_64 keyed by (seed, stream id) through
/// std::seed_seq, with uniforms built from the top 53 bits and Box-Muller
/// normals. No std:: distribution objects are involved, so output does not
/// depend on the standard library implementation.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  Vector normal_vector(std::size_t n) {
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal();
    return v;
  }

  /// Geometric length >= 1 with the given mean.
  std::size_t geometric(double mean) {
    if (mean <= 1.0) return 1;
    const double p = 1.0 / mean;
    return 1 + static_cast<std::size_t>(std::floor(std::log(uniform()) / std::log1p(-p)));
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct SynthConfig {
  NoisePrior prior;
  ScalingFactors r{};
  std::size_t num_utterances = 100;
  std::size_t frames_per_utterance = 500;
  double speech_fraction = 0.6;
  double segment_mean_length = 20.0;
  std::uint64_t seed = 42;

  void validate() const {
    prior.validate();
    if (frames_per_utterance == 0) throw DataError("synth: frames per utterance must be positive");
    if (!(speech_fraction > 0.0 && speech_fraction < 1.0)) throw DataError("synth: speech fraction must lie in (0, 1)");
    if (!(segment_mean_length >= 1.0)) throw DataError("synth: segment mean length must be at least 1");
    if (!(r.r_s > 0 && r.r_n > 0)) throw DataError("synth: scaling factors must be positive");
  }
};

struct SyntheticUtterance {
  FeatureMatrix features;
  SadLabels labels;
  /// Drawn [mu_s; mu_n] for this utterance.
  Vector true_means;
};

/// A prior with the given dim: mu_n = 0, a = 3, B = I/2, unit precisions.
inline NoisePrior default_synth_prior(std::size_t dim) {
  const auto d = detail::idx(dim);
  NoisePrior p;
  p.mu_n = Vector::Zero(d);
  p.a = Vector::Constant(d, 3.0);
  p.b = 0.5 * Matrix::Identity(d, d);
  p.lambda_s = Matrix::Identity(d, d);
  p.lambda_n = Matrix::Identity(d, d);
  return p;
}

class SynthSampler {
 public:
  explicit SynthSampler(SynthConfig config) : config_(std::move(config)) {
    config_.validate();
    const Matrix cov_s = detail::spd_inverse(config_.prior.lambda_s, "lambda_s");
    const Matrix cov_n = detail::spd_inverse(config_.prior.lambda_n, "lambda_n");
    chol_s_ = cov_s.llt().matrixL();
    chol_n_ = cov_n.llt().matrixL();
    frame_chol_s_ = chol_s_ / std::sqrt(config_.r.r_s);
    frame_chol_n_ = chol_n_ / std::sqrt(config_.r.r_n);
  }

  const SynthConfig& config() const { return config_; }

  SyntheticUtterance sample(std::size_t utterance_index) const {
    Rng rng(config_.seed, utterance_index);
    const std::size_t frames = config_.frames_per_utterance;
    const std::size_t d = config_.prior.dim();
    const auto& p = config_.prior;

    // Alternating segments; mean lengths split so the expected speech share
    // is speech_fraction.
    const double mean_speech = 2.0 * config_.segment_mean_length * config_.speech_fraction;
    const double mean_silence = 2.0 * config_.segment_mean_length * (1.0 - config_.speech_fraction);
    std::vector<Label> labels;
    labels.reserve(frames);
    Label cls = rng.bernoulli(config_.speech_fraction) ? Label::kSpeech : Label::kSilence;
    while (labels.size() < frames) {
      const std::size_t len = rng.geometric(cls == Label::kSpeech ? mean_speech : mean_silence);
      for (std::size_t k = 0; k < len && labels.size() < frames; ++k) labels.push_back(cls);
      cls = flip(cls);
    }

    const Vector mu_n = p.mu_n + chol_n_ * rng.normal_vector(d);
    const Vector mu_s = p.a + p.b * mu_n + chol_s_ * rng.normal_vector(d);

    RowMatrix x(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(d));
    for (std::size_t t = 0; t < frames; ++t) {
      const bool speech = labels[t] == Label::kSpeech;
      const Vector z = rng.normal_vector(d);
      x.row(static_cast<Eigen::Index>(t)) =
          (speech ? Vector(mu_s + frame_chol_s_ * z) : Vector(mu_n + frame_chol_n_ * z)).transpose();
    }
    Vector truth(2 * d);
    truth << mu_s, mu_n;
    return {FeatureMatrix(std::move(x)), SadLabels(std::move(labels)), std::move(truth)};
  }

 private:
  SynthConfig config_;
  Matrix chol_s_, chol_n_, frame_chol_s_, frame_chol_n_;
};

inline SyntheticUtterance sample_utterance(const SynthConfig& config, std::size_t utterance_index) {
  return SynthSampler(config).sample(utterance_index);
}

inline std::string synth_utterance_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "utt%06zu", index);
  return buf;
}

// Ground truth TSV: header, then utt_id<TAB>mu_s (d)<TAB>mu_n (d)<TAB>r_s<TAB>r_n

struct TruthRecord {
  Vector means;  // [mu_s; mu_n]
  ScalingFactors r;
};

inline std::string truth_header(std::size_t dim) {
  std::string h = "utt_id";
  for (std::size_t j = 0; j < dim; ++j) h += "\tmu_s_" + std::to_string(j);
  for (std::size_t j = 0; j < dim; ++j) h += "\tmu_n_" + std::to_string(j);
  return h + "\tr_s\tr_n\n";
}

inline std::string format_truth(const std::string& id, const TruthRecord& rec) {
  return id + "\t" + detail::join(rec.means) + "\t" + detail::format_double(rec.r.r_s) + "\t" +
         detail::format_double(rec.r.r_n) + "\n";
}

inline std::unordered_map<std::string, TruthRecord> read_truth(const std::filesystem::path& path) {
  auto lines = detail::split_lines(detail::read_file(path));
  std::unordered_map<std::string, TruthRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = detail::split(lines[i], '\t');
    if (f.size() < 5 || (f.size() - 3) % 2 != 0) {
      throw DataError(path.string() + ": line " + std::to_string(i + 1) + ": bad field count");
    }
    TruthRecord rec;
    rec.means.resize(static_cast<Eigen::Index>(f.size() - 3));
    for (std::size_t j = 0; j + 3 < f.size(); ++j) {
      if (!detail::parse_double(f[j + 1], rec.means(static_cast<Eigen::Index>(j)))) {
        throw DataError(path.string() + ": line " + std::to_string(i + 1) + ": bad value");
      }
    }
    if (!detail::parse_double(f[f.size() - 2], rec.r.r_s) || !detail::parse_double(f[f.size() - 1], rec.r.r_n)) {
      throw DataError(path.string() + ": line " + std::to_string(i + 1) + ": bad scaling factor");
    }
    out.emplace(std::string(f[0]), std::move(rec));
  }
  return out;
}

struct CorpusPaths {
  std::filesystem::path manifest;
  std::filesystem::path truth;
};

/// Writes `<dir>/feats/<id>.nvf`, `<dir>/labels/<id>.lab`, `<dir>/manifest.tsv`
/// (paths relative to dir) and `<dir>/truth.tsv`.
inline CorpusPaths sample_corpus(const SynthConfig& config, const std::filesystem::path& dir,
                                 FeatureFormat format = FeatureFormat::kBinary, std::size_t jobs = 1) {
  SynthSampler sampler(config);
  std::filesystem::create_directories(dir / "feats");
  std::filesystem::create_directories(dir / "labels");
  const char* ext = format == FeatureFormat::kBinary ? ".nvf" : ".txt";
  Manifest manifest;
  manifest.entries.resize(config.num_utterances);
  std::vector<std::string> truth_lines(config.num_utterances);
  parallel_for(config.num_utterances, jobs, [&](std::size_t i) {
    const auto id = synth_utterance_id(i);
    auto utt = sampler.sample(i);
    const std::string feat_rel = "feats/" + id + ext;
    const std::string lab_rel = "labels/" + id + ".lab";
    write_features(utt.features, dir / feat_rel, format);
    write_labels(utt.labels, dir / lab_rel);
    manifest.entries[i] = {id, feat_rel, lab_rel};
    truth_lines[i] = format_truth(id, {utt.true_means, config.r});
  });
  std::string truth = truth_header(config.prior.dim());
  for (const auto& line : truth_lines) truth += line;
  CorpusPaths paths{dir / "manifest.tsv", dir / "truth.tsv"};
  write_manifest(manifest, paths.manifest);
  detail::write_file(paths.truth, truth);
  return paths;
}

}  // namespace noisevec

#endif  // NOISEVEC_SYNTH_HPP
