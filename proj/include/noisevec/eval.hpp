#ifndef NOISEVEC_EVAL_HPP
#define NOISEVEC_EVAL_HPP

// Estimator comparison, online-to-offline convergence traces and label-noise
// robustness, all emitted as plot-ready TSV.

#include "noisevec/corpus.hpp"
#include "noisevec/synth.hpp"

#include <optional>

namespace noisevec {

enum class Method { kMle, kMap };

struct TrajectoryRecord {
  std::size_t frame_index = 0;
  Vector estimate;  // [mu_s; mu_n] after this frame
  double distance = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  NoiseVector offline;
};

/// Runs a streaming estimator frame by frame and records each estimate with
/// its Euclidean distance to the whole-utterance ML vector. With every > 1
/// the MAP solve only runs every `every` frames (and on the last frame);
/// frames in between repeat the previous estimate.
inline Trajectory trace_convergence(const FeatureMatrix& features, const SadLabels& labels, Method method,
                                    const NoisePrior* prior = nullptr, const StreamingMapOptions& options = {},
                                    std::size_t every = 1) {
  check_paired(features, labels);
  if (method == Method::kMap && prior == nullptr) throw DataError("MAP trace requires a prior");
  if (every == 0) throw DataError("every must be at least 1");
  Trajectory traj;
  traj.offline = offline_noise_vector(features, labels);
  const Vector offline = traj.offline.concatenated();
  const std::size_t n = features.num_frames();
  traj.records.reserve(n);

  std::optional<StreamingMle> mle;
  std::optional<StreamingMap> map;
  if (method == Method::kMle) {
    mle.emplace(features.dim());
  } else {
    map.emplace(*prior, options);
  }
  Vector current;
  for (std::size_t t = 0; t < n; ++t) {
    const auto frame = features.matrix().row(static_cast<Eigen::Index>(t)).transpose();
    if (mle) {
      mle->push(frame, labels[t]);
      current = mle->estimate().concatenated();
    } else {
      map->push(frame, labels[t]);
      if ((t + 1) % every == 0 || t + 1 == n || t == 0) current = map->estimate().concatenated();
    }
    traj.records.push_back({t, current, (current - offline).norm()});
  }
  return traj;
}

inline std::string format_trajectory(const Trajectory& traj) {
  const std::size_t n2 = static_cast<std::size_t>(traj.offline.concatenated().size());
  std::string out = "frame_index\tdistance";
  for (std::size_t j = 0; j < n2; ++j) out += "\test_" + std::to_string(j);
  out += "\n";
  for (const auto& r : traj.records) {
    out += std::to_string(r.frame_index) + "\t" + detail::format_double(r.distance) + "\t" + detail::join(r.estimate) + "\n";
  }
  return out;
}

/// Coefficient indices plotted by default, into the 2d noise vector.
inline std::vector<std::size_t> default_plot_coefficients() { return {15, 35, 55, 75}; }

/// frame_index, coeff_<k>..., offline_<k>... for the chosen coefficients.
inline std::string format_plot_data(const Trajectory& traj, const std::vector<std::size_t>& coeffs) {
  const Vector offline = traj.offline.concatenated();
  for (auto c : coeffs) {
    if (c >= static_cast<std::size_t>(offline.size())) {
      throw DataError("plot coefficient " + std::to_string(c) + " out of range for a " +
                      std::to_string(offline.size()) + "-dim noise vector");
    }
  }
  std::string out = "frame_index";
  for (auto c : coeffs) out += "\tcoeff_" + std::to_string(c);
  for (auto c : coeffs) out += "\toffline_" + std::to_string(c);
  out += "\n";
  for (const auto& r : traj.records) {
    out += std::to_string(r.frame_index);
    for (auto c : coeffs) out += "\t" + detail::format_double(r.estimate(static_cast<Eigen::Index>(c)));
    for (auto c : coeffs) out += "\t" + detail::format_double(offline(static_cast<Eigen::Index>(c)));
    out += "\n";
  }
  return out;
}

/// Whole-utterance estimate from sufficient statistics by the given method.
inline NoiseVector estimate_from_stats(const SufficientStats& stats, Method method, const NoisePrior* prior,
                                       const StreamingMapOptions& options = {}) {
  if (method == Method::kMle) return stats.ml_means();
  if (prior == nullptr) throw DataError("MAP estimate requires a prior");
  switch (options.policy) {
    case RPolicy::kFixedOne:
      return to_noise_vector(map_estimate(stats, *prior, {}), stats);
    case RPolicy::kGlobal:
      return to_noise_vector(map_estimate(stats, *prior, {prior->r_s_global, prior->r_n_global}), stats);
    case RPolicy::kPerUtteranceEm:
      break;
  }
  return to_noise_vector(fit_scaling(stats, *prior, {}, options.em).posterior, stats);
}

// ---------------------------------------------------------------------------
// Label-noise sweep

struct SweepRow {
  double flip_probability = 0.0;
  double mean_distance = 0.0;
};

/// Flips each label independently with probability p and reports the mean
/// distance between noisy-label and clean-label vectors. The same per-frame
/// uniforms are reused for every p, so a label flipped at p is also flipped
/// at any larger p.
inline std::vector<SweepRow> label_noise_sweep(std::span<const Utterance> corpus, const std::vector<double>& flip_probs,
                                               Method method, const NoisePrior* prior = nullptr,
                                               const StreamingMapOptions& options = {}, std::uint64_t seed = 42,
                                               std::size_t jobs = 1) {
  for (double p : flip_probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("flip probability must lie in [0, 1]");
  }
  // distances[u][k]
  std::vector<std::vector<double>> distances(corpus.size(), std::vector<double>(flip_probs.size()));
  parallel_for(corpus.size(), jobs, [&](std::size_t u) {
    const auto& utt = corpus[u];
    check_paired(utt.features, utt.labels);
    Rng rng(seed, u);
    std::vector<double> draws(utt.labels.size());
    for (auto& x : draws) x = rng.uniform();
    const Vector clean =
        estimate_from_stats(accumulate_stats(utt.features, utt.labels), method, prior, options).concatenated();
    for (std::size_t k = 0; k < flip_probs.size(); ++k) {
      std::vector<Label> noisy = utt.labels.values();
      for (std::size_t t = 0; t < noisy.size(); ++t) {
        if (draws[t] < flip_probs[k]) noisy[t] = flip(noisy[t]);
      }
      const Vector v = estimate_from_stats(accumulate_stats(utt.features, SadLabels(std::move(noisy))), method, prior,
                                           options)
                           .concatenated();
      distances[u][k] = (v - clean).norm();
    }
  });
  std::vector<SweepRow> rows;
  for (std::size_t k = 0; k < flip_probs.size(); ++k) {
    double sum = 0.0;
    for (const auto& d : distances) sum += d[k];
    rows.push_back({flip_probs[k], corpus.empty() ? 0.0 : sum / static_cast<double>(corpus.size())});
  }
  return rows;
}

inline std::string format_sweep(const std::vector<SweepRow>& rows) {
  std::string out = "flip_probability\tmean_distance\n";
  for (const auto& r : rows) out += detail::format_double(r.flip_probability) + "\t" + detail::format_double(r.mean_distance) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Estimator comparison against synthetic ground truth

struct ComparisonRow {
  std::string method;
  double mse_speech = 0.0;
  double mse_silence = 0.0;
};

inline const std::vector<std::string>& comparison_methods() {
  static const std::vector<std::string> names = {"utt-mean", "nat",    "offline", "mle@25", "mle@50",
                                                 "mle@100",  "map@25", "map@50",  "map@100"};
  return names;
}

/// Mean squared error of each estimator against the true [mu_s; mu_n]. The
/// single-vector baselines are scored against both halves. "@p" rows use
/// only the first p percent of frames.
inline std::vector<ComparisonRow> compare_estimators(std::span<const Utterance> corpus,
                                                     const std::unordered_map<std::string, TruthRecord>& truth,
                                                     const NoisePrior& prior, const StreamingMapOptions& options = {},
                                                     std::size_t nat_edge_frames = 10, std::size_t jobs = 1) {
  const auto& names = comparison_methods();
  const std::size_t m = names.size();
  // squared errors [utterance][method] = (speech, silence), summed over coefficients
  std::vector<std::vector<std::pair<double, double>>> sq(corpus.size(), std::vector<std::pair<double, double>>(m));
  parallel_for(corpus.size(), jobs, [&](std::size_t u) {
    const auto& utt = corpus[u];
    check_paired(utt.features, utt.labels);
    auto it = truth.find(utt.id);
    if (it == truth.end()) throw DataError("no ground truth for utterance '" + utt.id + "'");
    const std::size_t d = utt.features.dim();
    const auto di = static_cast<Eigen::Index>(d);
    if (static_cast<std::size_t>(it->second.means.size()) != 2 * d) {
      throw DataError("ground truth dim mismatch for '" + utt.id + "'");
    }
    const Vector true_s = it->second.means.head(di), true_n = it->second.means.tail(di);
    auto score = [&](std::size_t k, const Vector& s, const Vector& n) {
      sq[u][k] = {(s - true_s).squaredNorm(), (n - true_n).squaredNorm()};
    };
    const Vector um = utt_mean(utt.features);
    score(0, um, um);
    const Vector nat = nat_vector(utt.features, nat_edge_frames);
    score(1, nat, nat);
    const auto off = offline_noise_vector(utt.features, utt.labels);
    score(2, off.speech_mean, off.silence_mean);

    const std::size_t total = utt.features.num_frames();
    const std::size_t percents[] = {25, 50, 100};
    StreamingMle mle(d);
    SufficientStats stats = SufficientStats::zeros(d);
    std::size_t t = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      const std::size_t upto = total * percents[k] / 100;
      for (; t < upto; ++t) {
        const auto frame = utt.features.matrix().row(static_cast<Eigen::Index>(t)).transpose();
        mle.push(frame, utt.labels[t]);
        stats.add_frame(frame, utt.labels[t]);
      }
      const auto ml = mle.estimate();
      score(3 + k, ml.speech_mean, ml.silence_mean);
      const auto mp = estimate_from_stats(stats, Method::kMap, &prior, options);
      score(6 + k, mp.speech_mean, mp.silence_mean);
    }
  });
  std::vector<ComparisonRow> rows;
  const double denom = corpus.empty() ? 1.0 : static_cast<double>(corpus.size() * corpus[0].features.dim());
  for (std::size_t k = 0; k < m; ++k) {
    double s = 0.0, n = 0.0;
    for (const auto& row : sq) {
      s += row[k].first;
      n += row[k].second;
    }
    rows.push_back({names[k], s / denom, n / denom});
  }
  return rows;
}

inline std::string format_comparison(const std::vector<ComparisonRow>& rows) {
  std::string out = "method\tmse_speech\tmse_silence\n";
  for (const auto& r : rows) {
    out += r.method + "\t" + detail::format_double(r.mse_speech) + "\t" + detail::format_double(r.mse_silence) + "\n";
  }
  return out;
}

}  // namespace noisevec

#endif  // NOISEVEC_EVAL_HPP
