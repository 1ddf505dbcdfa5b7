#ifndef NOISEVEC_ESTIMATORS_HPP
#define NOISEVEC_ESTIMATORS_HPP

#include "noisevec/features.hpp"

#include <algorithm>

namespace noisevec {

/// Utterance noise vector: speech and silence means plus the frame counts
/// they were computed from. A class with no frames has a zero mean.
struct NoiseVector {
  Vector speech_mean;
  Vector silence_mean;
  std::size_t speech_count = 0;
  std::size_t silence_count = 0;

  static NoiseVector zeros(std::size_t dim) {
    return {Vector::Zero(static_cast<Eigen::Index>(dim)), Vector::Zero(static_cast<Eigen::Index>(dim)), 0, 0};
  }

  std::size_t dim() const { return static_cast<std::size_t>(speech_mean.size()); }

  /// [speech_mean; silence_mean]
  Vector concatenated() const {
    Vector v(speech_mean.size() + silence_mean.size());
    v << speech_mean, silence_mean;
    return v;
  }

  /// Same vector with the two classes exchanged.
  NoiseVector swapped() const { return {silence_mean, speech_mean, silence_count, speech_count}; }
};

/// Running per-class sums for frame-synchronous maximum-likelihood estimation.
class StreamingMle {
 public:
  explicit StreamingMle(std::size_t dim)
      : speech_sum_(Vector::Zero(static_cast<Eigen::Index>(dim))),
        silence_sum_(Vector::Zero(static_cast<Eigen::Index>(dim))) {
    if (dim == 0) throw DataError("dimension must be at least 1");
  }

  template <typename Derived>
  void push(const Eigen::MatrixBase<Derived>& frame, Label label) {
    if (frame.size() != speech_sum_.size()) {
      throw DataError("frame dim " + std::to_string(frame.size()) + " does not match stream dim " +
                      std::to_string(speech_sum_.size()));
    }
    if (label == Label::kSpeech) {
      speech_sum_ += frame;
      ++speech_count_;
    } else {
      silence_sum_ += frame;
      ++silence_count_;
    }
  }

  NoiseVector estimate() const {
    NoiseVector v = NoiseVector::zeros(dim());
    v.speech_count = speech_count_;
    v.silence_count = silence_count_;
    if (speech_count_ > 0) v.speech_mean = speech_sum_ / static_cast<double>(speech_count_);
    if (silence_count_ > 0) v.silence_mean = silence_sum_ / static_cast<double>(silence_count_);
    return v;
  }

  std::size_t dim() const { return static_cast<std::size_t>(speech_sum_.size()); }
  std::size_t speech_count() const { return speech_count_; }
  std::size_t silence_count() const { return silence_count_; }
  const Vector& speech_sum() const { return speech_sum_; }
  const Vector& silence_sum() const { return silence_sum_; }

 private:
  Vector speech_sum_;
  Vector silence_sum_;
  std::size_t speech_count_ = 0;
  std::size_t silence_count_ = 0;
};

/// Per-class means of a whole labelled utterance.
inline NoiseVector offline_noise_vector(const FeatureMatrix& features, const SadLabels& labels) {
  check_paired(features, labels);
  StreamingMle acc(features.dim());
  for (std::size_t t = 0; t < features.num_frames(); ++t) {
    acc.push(features.matrix().row(static_cast<Eigen::Index>(t)).transpose(), labels[t]);
  }
  return acc.estimate();
}

inline Vector utt_mean(const FeatureMatrix& features) {
  if (features.empty()) throw DataError("utt-mean: empty utterance");
  return features.matrix().colwise().sum().transpose() / static_cast<double>(features.num_frames());
}

/// Mean of the first and last `edge_frames` frames; overlapping frames are
/// counted once.
inline Vector nat_vector(const FeatureMatrix& features, std::size_t edge_frames = 10) {
  if (features.empty()) throw DataError("NAT-vector: empty utterance");
  const std::size_t n = features.num_frames();
  const std::size_t head_end = std::min(edge_frames, n);
  const std::size_t tail_begin = std::max(head_end, n > edge_frames ? n - edge_frames : 0);
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(features.dim()));
  std::size_t count = 0;
  for (std::size_t t = 0; t < head_end; ++t, ++count) sum += features.frame(t);
  for (std::size_t t = tail_begin; t < n; ++t, ++count) sum += features.frame(t);
  return sum / static_cast<double>(count);
}

/// Cepstral mean normalisation: subtracts the utterance mean from every frame.
inline FeatureMatrix cmn_apply(const FeatureMatrix& features) {
  const Vector mean = utt_mean(features);
  RowMatrix out = features.matrix().rowwise() - mean.transpose();
  return FeatureMatrix(std::move(out));
}

// Noise vector line: utt_id<TAB>2d values<TAB>N_s<TAB>N_n

inline std::string format_noise_vector(const std::string& utt_id, const NoiseVector& v) {
  return utt_id + "\t" + detail::join(v.concatenated()) + "\t" + std::to_string(v.speech_count) + "\t" +
         std::to_string(v.silence_count) + "\n";
}

inline std::pair<std::string, NoiseVector> parse_noise_vector(std::string_view line) {
  line = detail::strip_cr(line);
  if (line.ends_with('\n')) line.remove_suffix(1);
  auto fields = detail::split(line, '\t');
  if (fields.size() < 5 || (fields.size() - 3) % 2 != 0) {
    throw DataError("noise vector line: unexpected field count " + std::to_string(fields.size()));
  }
  const std::size_t dim = (fields.size() - 3) / 2;
  NoiseVector v = NoiseVector::zeros(dim);
  for (std::size_t j = 0; j < 2 * dim; ++j) {
    double x;
    if (!detail::parse_double(fields[1 + j], x)) {
      throw DataError("noise vector line: bad value in field " + std::to_string(j + 2));
    }
    (j < dim ? v.speech_mean(static_cast<Eigen::Index>(j)) : v.silence_mean(static_cast<Eigen::Index>(j - dim))) = x;
  }
  if (!detail::parse_size(fields[1 + 2 * dim], v.speech_count) ||
      !detail::parse_size(fields[2 + 2 * dim], v.silence_count)) {
    throw DataError("noise vector line: bad frame counts");
  }
  return {std::string(fields[0]), std::move(v)};
}

inline std::string format_vector_line(const std::string& utt_id, const Vector& v) {
  return utt_id + "\t" + detail::join(v) + "\n";
}

}  // namespace noisevec

#endif  // NOISEVEC_ESTIMATORS_HPP
