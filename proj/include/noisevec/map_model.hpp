#ifndef NOISEVEC_MAP_MODEL_HPP
#define NOISEVEC_MAP_MODEL_HPP

// MAP estimation of utterance speech/silence means under a joint Gaussian
// prior that ties the speech mean to the silence mean.
//
// Generative model for utterance i with labels s:
//
//   mu_n_i       ~ N(mu_n, Lambda_n^-1)
//   mu_s_i       ~ N(a + B mu_n_i, Lambda_s^-1)
//   x_t | speech ~ N(mu_s_i, (r_s Lambda_s)^-1)
//   x_t | sil    ~ N(mu_n_i, (r_n Lambda_n)^-1)
//
// The posterior over [mu_s_i; mu_n_i] is Gaussian with precision K and
// mean K^-1 Q, both functions of the per-class sufficient statistics.

#include "noisevec/estimators.hpp"
#include "noisevec/sections.hpp"

#include <algorithm>
#include <numbers>
#include <span>

namespace noisevec {

namespace detail {

inline Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

inline Matrix identity(std::size_t n) { return Matrix::Identity(idx(n), idx(n)); }

/// Inverse of a symmetric positive-definite matrix via Cholesky; the result
/// is made exactly symmetric.
inline Matrix spd_inverse(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw NumericalError(std::string(what) + " is not positive definite");
  Matrix inv = llt.solve(identity(static_cast<std::size_t>(m.rows())));
  return Matrix(inv.selfadjointView<Eigen::Upper>());
}

inline double spd_log_det(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw NumericalError(std::string(what) + " is not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

inline bool is_spd(const Matrix& m) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) return false;
  Eigen::LLT<Matrix> llt(m);
  return llt.info() == Eigen::Success;
}

inline double trace_product(const Matrix& sym, const Matrix& other) { return sym.cwiseProduct(other).sum(); }

}  // namespace detail

/// Sample mean, ML covariance and precision of stacked utterance means
/// [mu_s; mu_n] over a training corpus.
struct JointPriorStats {
  Vector mean;
  Matrix covariance;
  Matrix precision;
  std::size_t num_utterances = 0;

  std::size_t dim() const { return static_cast<std::size_t>(mean.size() / 2); }

  auto precision_ss() const { return precision.topLeftCorner(mean.size() / 2, mean.size() / 2); }
  auto precision_sn() const { return precision.topRightCorner(mean.size() / 2, mean.size() / 2); }
  auto precision_nn() const { return precision.bottomRightCorner(mean.size() / 2, mean.size() / 2); }
  auto covariance_nn() const { return covariance.bottomRightCorner(mean.size() / 2, mean.size() / 2); }
};

/// Prior parameters pi = (mu_n, a, B, Lambda_n, Lambda_s) plus corpus-level
/// scaling factors.
struct NoisePrior {
  Vector mu_n;
  Vector a;
  Matrix b;
  Matrix lambda_s;
  Matrix lambda_n;
  double r_s_global = 1.0;
  double r_n_global = 1.0;

  std::size_t dim() const { return static_cast<std::size_t>(mu_n.size()); }

  /// Prior mean of the stacked means, [a + B mu_n; mu_n].
  Vector joint_mean() const {
    Vector m(2 * mu_n.size());
    m << a + b * mu_n, mu_n;
    return m;
  }

  void validate() const {
    const auto d = mu_n.size();
    if (d < 1) throw DataError("prior: dim must be at least 1");
    if (a.size() != d || b.rows() != d || b.cols() != d || lambda_s.rows() != d || lambda_s.cols() != d ||
        lambda_n.rows() != d || lambda_n.cols() != d) {
      throw DataError("prior: inconsistent parameter shapes");
    }
    if (!detail::is_spd(lambda_s)) throw NumericalError("prior: lambda_s is not symmetric positive definite");
    if (!detail::is_spd(lambda_n)) throw NumericalError("prior: lambda_n is not symmetric positive definite");
    if (!(r_s_global > 0 && r_n_global > 0 && std::isfinite(r_s_global) && std::isfinite(r_n_global))) {
      throw NumericalError("prior: global scaling factors must be positive and finite");
    }
  }
};

/// Per-class frame counts, sums and outer-product sums of one utterance.
struct SufficientStats {
  std::size_t speech_count = 0;
  std::size_t silence_count = 0;
  Vector speech_sum;
  Vector silence_sum;
  Matrix speech_scatter;
  Matrix silence_scatter;

  static SufficientStats zeros(std::size_t dim) {
    const auto d = detail::idx(dim);
    return {0, 0, Vector::Zero(d), Vector::Zero(d), Matrix::Zero(d, d), Matrix::Zero(d, d)};
  }

  std::size_t dim() const { return static_cast<std::size_t>(speech_sum.size()); }

  template <typename Derived>
  void add_frame(const Eigen::MatrixBase<Derived>& frame, Label label) {
    if (frame.size() != speech_sum.size()) {
      throw DataError("frame dim " + std::to_string(frame.size()) + " does not match stats dim " +
                      std::to_string(speech_sum.size()));
    }
    if (label == Label::kSpeech) {
      ++speech_count;
      speech_sum += frame;
      speech_scatter.noalias() += frame * frame.transpose();
    } else {
      ++silence_count;
      silence_sum += frame;
      silence_scatter.noalias() += frame * frame.transpose();
    }
  }

  SufficientStats& operator+=(const SufficientStats& o) {
    if (o.dim() != dim()) throw DataError("cannot merge statistics of different dims");
    speech_count += o.speech_count;
    silence_count += o.silence_count;
    speech_sum += o.speech_sum;
    silence_sum += o.silence_sum;
    speech_scatter += o.speech_scatter;
    silence_scatter += o.silence_scatter;
    return *this;
  }

  friend SufficientStats operator+(SufficientStats a, const SufficientStats& b) { return a += b; }

  /// Class means by maximum likelihood (zero for an absent class).
  NoiseVector ml_means() const {
    NoiseVector v = NoiseVector::zeros(dim());
    v.speech_count = speech_count;
    v.silence_count = silence_count;
    if (speech_count) v.speech_mean = speech_sum / static_cast<double>(speech_count);
    if (silence_count) v.silence_mean = silence_sum / static_cast<double>(silence_count);
    return v;
  }
};

inline SufficientStats accumulate_stats(const FeatureMatrix& features, const SadLabels& labels) {
  check_paired(features, labels);
  SufficientStats stats = SufficientStats::zeros(features.dim());
  for (std::size_t t = 0; t < features.num_frames(); ++t) {
    stats.add_frame(features.matrix().row(detail::idx(t)).transpose(), labels[t]);
  }
  return stats;
}

struct ScalingFactors {
  double r_s = 1.0;
  double r_n = 1.0;

  friend bool operator==(const ScalingFactors&, const ScalingFactors&) = default;
};

struct ScalingLimits {
  double r_min = 1e-6;
  double r_max = 1e6;
};

/// Gaussian posterior over the stacked means [mu_s; mu_n].
struct MapPosterior {
  Vector mean;
  Matrix precision;   // K
  Matrix covariance;  // K^-1

  std::size_t dim() const { return static_cast<std::size_t>(mean.size() / 2); }
  Vector speech_mean() const { return mean.head(mean.size() / 2); }
  Vector silence_mean() const { return mean.tail(mean.size() / 2); }
  Matrix speech_covariance() const { return covariance.topLeftCorner(mean.size() / 2, mean.size() / 2); }
  Matrix silence_covariance() const { return covariance.bottomRightCorner(mean.size() / 2, mean.size() / 2); }
};

// ---------------------------------------------------------------------------
// Prior estimation

struct PriorTrainingOptions {
  std::size_t min_class_frames = 10;
  /// Diagonal ridge relative to the mean covariance diagonal, trace(Sigma)/2d.
  double ridge = 1e-6;
  std::size_t em_max_iters = 50;
  double em_rel_tol = 1e-6;
  ScalingLimits limits{};
};

struct TrainedPrior {
  JointPriorStats joint;
  NoisePrior prior;
  /// Indices (into the input) of utterances that passed the frame filter.
  std::vector<std::size_t> used;
};

/// Splits a joint Gaussian over [mu_s; mu_n] into the marginal of mu_n and
/// the conditional of mu_s given mu_n.
inline NoisePrior prior_from_joint(const JointPriorStats& joint) {
  const auto d = detail::idx(joint.dim());
  const Vector mu_s = joint.mean.head(d);
  const Vector mu_n = joint.mean.tail(d);
  const Matrix lambda_ss = joint.precision_ss();
  const Matrix lambda_sn = joint.precision_sn();

  Eigen::LLT<Matrix> ss(lambda_ss);
  if (ss.info() != Eigen::Success) throw NumericalError("precision block Lambda_ss is not positive definite");

  NoisePrior p;
  p.mu_n = mu_n;
  p.lambda_s = lambda_ss;
  p.lambda_n = detail::spd_inverse(joint.covariance_nn(), "silence covariance block");
  p.b = -ss.solve(lambda_sn);
  p.a = mu_s - p.b * mu_n;
  return p;
}

/// Maximum-likelihood joint Gaussian over a set of stacked mean vectors.
inline JointPriorStats fit_joint_gaussian(std::span<const Vector> means, double ridge) {
  if (means.empty()) throw DataError("no utterance means to fit");
  const auto n = means[0].size();
  const double m = static_cast<double>(means.size());
  JointPriorStats joint;
  joint.num_utterances = means.size();
  joint.mean = Vector::Zero(n);
  for (const auto& v : means) joint.mean += v;
  joint.mean /= m;
  joint.covariance = Matrix::Zero(n, n);
  for (const auto& v : means) {
    const Vector dev = v - joint.mean;
    joint.covariance.noalias() += dev * dev.transpose();
  }
  joint.covariance /= m;
  if (ridge > 0) {
    const double scale = joint.covariance.trace() / static_cast<double>(n);
    joint.covariance.diagonal().array() += ridge * (scale > 0 ? scale : 1.0);
  }
  joint.precision = detail::spd_inverse(joint.covariance, "prior covariance (even after ridge)");
  return joint;
}

/// Rebuilds the joint precision and mean from the split prior parameters.
inline JointPriorStats reconstruct_joint(const NoisePrior& prior) {
  prior.validate();
  const auto d = detail::idx(prior.dim());
  JointPriorStats joint;
  joint.mean = prior.joint_mean();
  joint.precision = Matrix(2 * d, 2 * d);
  const Matrix lambda_sn = -prior.lambda_s * prior.b;
  joint.precision.topLeftCorner(d, d) = prior.lambda_s;
  joint.precision.topRightCorner(d, d) = lambda_sn;
  joint.precision.bottomLeftCorner(d, d) = lambda_sn.transpose();
  joint.precision.bottomRightCorner(d, d) = prior.lambda_n + prior.b.transpose() * prior.lambda_s * prior.b;
  joint.precision = Matrix(joint.precision.selfadjointView<Eigen::Upper>());
  joint.covariance = detail::spd_inverse(joint.precision, "reconstructed joint precision");
  return joint;
}

// ---------------------------------------------------------------------------
// MAP point estimate

inline MapPosterior map_estimate(const SufficientStats& stats, const NoisePrior& prior, const ScalingFactors& r) {
  if (stats.dim() != prior.dim()) throw DataError("statistics and prior dims differ");
  if (!(r.r_s > 0 && r.r_n > 0 && std::isfinite(r.r_s) && std::isfinite(r.r_n))) {
    throw NumericalError("scaling factors must be positive and finite");
  }
  const auto d = detail::idx(prior.dim());
  const double ns = static_cast<double>(stats.speech_count);
  const double nn = static_cast<double>(stats.silence_count);
  const Matrix lambda_s_b = prior.lambda_s * prior.b;

  Matrix k(2 * d, 2 * d);
  k.topLeftCorner(d, d) = (1.0 + r.r_s * ns) * prior.lambda_s;
  k.topRightCorner(d, d) = -lambda_s_b;
  k.bottomRightCorner(d, d) = (1.0 + r.r_n * nn) * prior.lambda_n + prior.b.transpose() * lambda_s_b;
  k = Matrix(k.selfadjointView<Eigen::Upper>());

  Vector q(2 * d);
  q.head(d) = prior.lambda_s * (prior.a + r.r_s * stats.speech_sum);
  // The B^T Lambda_s a term enters with a minus sign: it comes from the cross
  // term of -(1/2)(mu_s - a - B mu_n)^T Lambda_s (mu_s - a - B mu_n).
  q.tail(d) = prior.lambda_n * (prior.mu_n + r.r_n * stats.silence_sum) - lambda_s_b.transpose() * prior.a;

  Eigen::LLT<Matrix> llt(k);
  if (llt.info() != Eigen::Success) throw NumericalError("posterior precision K is not positive definite");
  MapPosterior post;
  post.mean = llt.solve(q);
  post.covariance = Matrix(Matrix(llt.solve(detail::identity(2 * prior.dim()))).selfadjointView<Eigen::Upper>());
  post.precision = std::move(k);
  return post;
}

inline NoiseVector to_noise_vector(const MapPosterior& post, const SufficientStats& stats) {
  return {post.speech_mean(), post.silence_mean(), stats.speech_count, stats.silence_count};
}

// ---------------------------------------------------------------------------
// Scaling factors

/// E[sum_t (x_t - mu)(x_t - mu)^T] under a Gaussian belief about mu.
inline Matrix expected_scatter(double count, const Vector& sum, const Matrix& outer, const Vector& mean,
                               const Matrix& mean_cov) {
  Matrix s = outer - sum * mean.transpose() - mean * sum.transpose();
  s.noalias() += count * (mean_cov + mean * mean.transpose());
  return s;
}

/// trace(Lambda_s E[scatter_s]) and the silence counterpart.
struct ScatterTraces {
  double speech = 0.0;
  double silence = 0.0;
};

inline ScatterTraces scatter_traces(const SufficientStats& stats, const NoisePrior& prior, const MapPosterior& post) {
  ScatterTraces t;
  if (stats.speech_count) {
    t.speech = detail::trace_product(
        prior.lambda_s, expected_scatter(static_cast<double>(stats.speech_count), stats.speech_sum,
                                         stats.speech_scatter, post.speech_mean(), post.speech_covariance()));
  }
  if (stats.silence_count) {
    t.silence = detail::trace_product(
        prior.lambda_n, expected_scatter(static_cast<double>(stats.silence_count), stats.silence_sum,
                                         stats.silence_scatter, post.silence_mean(), post.silence_covariance()));
  }
  return t;
}

struct ScalingUpdate {
  ScalingFactors r;
  /// Set when a class had non-positive expected scatter and r was pinned to r_max.
  bool degenerate = false;
};

namespace detail {

inline double solve_scaling(double trace, double dim_times_count, const ScalingLimits& limits, bool& degenerate) {
  if (!(trace > 0.0)) {
    degenerate = true;
    return limits.r_max;
  }
  return std::clamp(dim_times_count / trace, limits.r_min, limits.r_max);
}

}  // namespace detail

/// One M-step for the per-utterance scaling factors. A class without frames
/// keeps its current value.
inline ScalingUpdate em_update_scaling(const SufficientStats& stats, const NoisePrior& prior,
                                       const MapPosterior& posterior, const ScalingFactors& current = {},
                                       const ScalingLimits& limits = {}) {
  const double d = static_cast<double>(prior.dim());
  const auto traces = scatter_traces(stats, prior, posterior);
  ScalingUpdate up{current, false};
  if (stats.speech_count) {
    up.r.r_s = detail::solve_scaling(traces.speech, d * static_cast<double>(stats.speech_count), limits, up.degenerate);
  }
  if (stats.silence_count) {
    up.r.r_n = detail::solve_scaling(traces.silence, d * static_cast<double>(stats.silence_count), limits, up.degenerate);
  }
  return up;
}

/// Corpus-level scaling factors: the per-utterance update with numerator and
/// denominator summed over utterances.
inline ScalingUpdate estimate_global_scaling(std::span<const SufficientStats> stats,
                                             std::span<const MapPosterior> posteriors, const NoisePrior& prior,
                                             const ScalingLimits& limits = {}) {
  if (stats.size() != posteriors.size()) throw DataError("need one posterior per utterance");
  double trace_s = 0, trace_n = 0, count_s = 0, count_n = 0;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const auto t = scatter_traces(stats[i], prior, posteriors[i]);
    trace_s += t.speech;
    trace_n += t.silence;
    count_s += static_cast<double>(stats[i].speech_count);
    count_n += static_cast<double>(stats[i].silence_count);
  }
  if (count_s == 0) throw DataError("global scaling: corpus has no speech frames");
  if (count_n == 0) throw DataError("global scaling: corpus has no silence frames");
  const double d = static_cast<double>(prior.dim());
  ScalingUpdate up;
  up.r.r_s = detail::solve_scaling(trace_s, d * count_s, limits, up.degenerate);
  up.r.r_n = detail::solve_scaling(trace_n, d * count_n, limits, up.degenerate);
  return up;
}

struct EmOptions {
  std::size_t max_iters = 50;
  double rel_tol = 1e-6;
  ScalingLimits limits{};
};

struct ScalingFit {
  ScalingFactors r;
  MapPosterior posterior;  // at the returned r
  std::size_t iterations = 0;
  bool converged = false;
  bool degenerate = false;
};

namespace detail {

inline double max_rel_change(const ScalingFactors& from, const ScalingFactors& to) {
  return std::max(std::abs(to.r_s - from.r_s) / from.r_s, std::abs(to.r_n - from.r_n) / from.r_n);
}

}  // namespace detail

/// Alternates map_estimate and em_update_scaling until the largest relative
/// change of (r_s, r_n) drops below rel_tol.
inline ScalingFit fit_scaling(const SufficientStats& stats, const NoisePrior& prior, const ScalingFactors& init,
                              const EmOptions& options = {}) {
  ScalingFit fit;
  fit.r = init;
  while (fit.iterations < options.max_iters) {
    const auto post = map_estimate(stats, prior, fit.r);
    const auto up = em_update_scaling(stats, prior, post, fit.r, options.limits);
    ++fit.iterations;
    fit.degenerate = up.degenerate;
    const double change = detail::max_rel_change(fit.r, up.r);
    fit.r = up.r;
    if (change < options.rel_tol) {
      fit.converged = true;
      break;
    }
  }
  fit.posterior = map_estimate(stats, prior, fit.r);
  return fit;
}

/// Shared (r_s, r_n) over a corpus by EM: posteriors at the current global
/// r, then the pooled update, repeated.
inline ScalingFit fit_global_scaling(std::span<const SufficientStats> stats, const NoisePrior& prior,
                                     const ScalingFactors& init = {}, const EmOptions& options = {}) {
  ScalingFit fit;
  fit.r = init;
  std::vector<MapPosterior> posts(stats.size());
  while (fit.iterations < options.max_iters) {
    for (std::size_t i = 0; i < stats.size(); ++i) posts[i] = map_estimate(stats[i], prior, fit.r);
    const auto up = estimate_global_scaling(stats, posts, prior, options.limits);
    ++fit.iterations;
    fit.degenerate = up.degenerate;
    const double change = detail::max_rel_change(fit.r, up.r);
    fit.r = up.r;
    if (change < options.rel_tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Objectives

/// Expected complete-data log-likelihood E_q[ln p(x, mu | s, r, pi)] under the
/// Gaussian belief q = posterior.
inline double em_objective(const SufficientStats& stats, const NoisePrior& prior, const MapPosterior& posterior,
                           const ScalingFactors& r) {
  const auto d = detail::idx(prior.dim());
  const double dd = static_cast<double>(d);
  const double log2pi = std::log(2.0 * std::numbers::pi);
  const double logdet_s = detail::spd_log_det(prior.lambda_s, "lambda_s");
  const double logdet_n = detail::spd_log_det(prior.lambda_n, "lambda_n");
  const auto traces = scatter_traces(stats, prior, posterior);
  const double ns = static_cast<double>(stats.speech_count);
  const double nn = static_cast<double>(stats.silence_count);

  double q = 0.0;
  q += ns * 0.5 * (dd * std::log(r.r_s) + logdet_s - dd * log2pi) - 0.5 * r.r_s * traces.speech;
  q += nn * 0.5 * (dd * std::log(r.r_n) + logdet_n - dd * log2pi) - 0.5 * r.r_n * traces.silence;

  const Matrix& c = posterior.covariance;
  const Matrix c_ss = c.topLeftCorner(d, d), c_sn = c.topRightCorner(d, d), c_nn = c.bottomRightCorner(d, d);
  const Vector m_s = posterior.speech_mean(), m_n = posterior.silence_mean();

  // E[(mu_s - a - B mu_n)^T Lambda_s (...)]
  const Vector resid_s = m_s - prior.a - prior.b * m_n;
  const Matrix cov_resid = c_ss - c_sn * prior.b.transpose() - prior.b * c_sn.transpose() +
                           prior.b * c_nn * prior.b.transpose();
  q += 0.5 * (logdet_s - dd * log2pi) -
       0.5 * (detail::trace_product(prior.lambda_s, cov_resid) + resid_s.dot(prior.lambda_s * resid_s));

  const Vector resid_n = m_n - prior.mu_n;
  q += 0.5 * (logdet_n - dd * log2pi) -
       0.5 * (detail::trace_product(prior.lambda_n, c_nn) + resid_n.dot(prior.lambda_n * resid_n));
  return q;
}

/// Marginal log-likelihood ln p(x | s, r, pi) with the means integrated out;
/// the quantity EM on r never decreases.
inline double log_evidence(const SufficientStats& stats, const NoisePrior& prior, const ScalingFactors& r) {
  const auto post = map_estimate(stats, prior, r);
  MapPosterior point = post;
  point.covariance.setZero();
  // ln p(x, mu_hat) - ln q(mu_hat), with q the exact Gaussian posterior.
  const double joint_at_mode = em_objective(stats, prior, point, r);
  const double log_q_at_mode = 0.5 * detail::spd_log_det(post.precision, "posterior precision") -
                               static_cast<double>(prior.dim()) * std::log(2.0 * std::numbers::pi);
  return joint_at_mode - log_q_at_mode;
}

// ---------------------------------------------------------------------------
// Streaming MAP

enum class RPolicy { kFixedOne, kGlobal, kPerUtteranceEm };

struct StreamingMapOptions {
  RPolicy policy = RPolicy::kFixedOne;
  /// Refit r every this many pushed frames under kPerUtteranceEm.
  std::size_t em_every = 10;
  EmOptions em{};
};

class StreamingMap {
 public:
  StreamingMap(NoisePrior prior, StreamingMapOptions options = {})
      : prior_(std::move(prior)), options_(options), stats_(SufficientStats::zeros(prior_.dim())) {
    prior_.validate();
    if (options_.policy == RPolicy::kGlobal) r_ = {prior_.r_s_global, prior_.r_n_global};
    if (options_.em_every == 0) throw DataError("em_every must be at least 1");
  }

  template <typename Derived>
  void push(const Eigen::MatrixBase<Derived>& frame, Label label) {
    stats_.add_frame(frame, label);
    ++pushed_;
    if (options_.policy == RPolicy::kPerUtteranceEm && pushed_ % options_.em_every == 0) refit();
  }

  /// MAP means given all frames pushed so far; the prior mean before any frame.
  NoiseVector estimate() const { return to_noise_vector(posterior(), stats_); }

  MapPosterior posterior() const { return map_estimate(stats_, prior_, r_); }

  const SufficientStats& stats() const { return stats_; }
  const ScalingFactors& scaling() const { return r_; }
  const NoisePrior& prior() const { return prior_; }

 private:
  void refit() {
    // Classes with no frames yet stay at r = 1.
    auto fit = fit_scaling(stats_, prior_, r_, options_.em);
    r_ = fit.r;
  }

  NoisePrior prior_;
  StreamingMapOptions options_;
  SufficientStats stats_;
  ScalingFactors r_{};
  std::size_t pushed_ = 0;
};

// ---------------------------------------------------------------------------
// Training entry points

/// Fits the prior from per-utterance statistics. Utterances with fewer than
/// min_class_frames frames of either class are skipped.
inline TrainedPrior train_prior_from_stats(std::span<const SufficientStats> stats,
                                           const PriorTrainingOptions& options = {}) {
  if (stats.empty()) throw DataError("prior training: empty corpus");
  const std::size_t d = stats[0].dim();
  TrainedPrior out;
  std::vector<Vector> means;
  std::vector<SufficientStats> kept;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    if (stats[i].dim() != d) throw DataError("prior training: utterances have different dims");
    if (stats[i].speech_count < options.min_class_frames || stats[i].silence_count < options.min_class_frames) {
      continue;
    }
    out.used.push_back(i);
    means.push_back(stats[i].ml_means().concatenated());
    kept.push_back(stats[i]);
  }
  if (means.size() < 2 * d + 1) {
    throw DataError("prior training: " + std::to_string(means.size()) + " of " + std::to_string(stats.size()) +
                    " utterances have at least " + std::to_string(options.min_class_frames) +
                    " frames of each class; need at least " + std::to_string(2 * d + 1));
  }
  out.joint = fit_joint_gaussian(means, options.ridge);
  out.prior = prior_from_joint(out.joint);
  const auto global = fit_global_scaling(kept, out.prior, {}, {options.em_max_iters, options.em_rel_tol, options.limits});
  out.prior.r_s_global = global.r.r_s;
  out.prior.r_n_global = global.r.r_n;
  return out;
}

struct LabelledUtterance {
  FeatureMatrix features;
  SadLabels labels;
};

inline TrainedPrior train_prior(std::span<const LabelledUtterance> corpus, const PriorTrainingOptions& options = {}) {
  std::vector<SufficientStats> stats;
  stats.reserve(corpus.size());
  for (const auto& u : corpus) stats.push_back(accumulate_stats(u.features, u.labels));
  return train_prior_from_stats(stats, options);
}

// ---------------------------------------------------------------------------
// NVPRIOR1 codec

inline std::string encode_prior(const NoisePrior& p) {
  detail::SectionWriter w("NVPRIOR1");
  w.meta({{"dim", std::to_string(p.dim())},
          {"r_s", detail::format_double(p.r_s_global)},
          {"r_n", detail::format_double(p.r_n_global)}});
  w.vector("mu_n", p.mu_n).vector("a", p.a).matrix("B", p.b).matrix("lambda_s", p.lambda_s).matrix("lambda_n", p.lambda_n);
  return w.str();
}

/// Parses an NVPRIOR1 document. Shape errors are DataError; a prior that
/// fails positive-definiteness is NumericalError.
inline NoisePrior decode_prior(std::string_view text) {
  detail::SectionReader r(text, "NVPRIOR1");
  const std::size_t d = r.size_attr("meta", "dim");
  if (d == 0) throw DataError("prior: dim must be at least 1");
  NoisePrior p;
  p.r_s_global = r.double_attr("meta", "r_s");
  p.r_n_global = r.double_attr("meta", "r_n");
  p.mu_n = r.vector("mu_n", d);
  p.a = r.vector("a", d);
  p.b = r.matrix("B", d, d);
  p.lambda_s = r.matrix("lambda_s", d, d);
  p.lambda_n = r.matrix("lambda_n", d, d);
  p.validate();
  return p;
}

inline NoisePrior read_prior(const std::filesystem::path& path) {
  try {
    return decode_prior(detail::read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline void write_prior(const NoisePrior& prior, const std::filesystem::path& path) {
  detail::write_file(path, encode_prior(prior));
}

}  // namespace noisevec

#endif  // NOISEVEC_MAP_MODEL_HPP
