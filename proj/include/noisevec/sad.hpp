#ifndef NOISEVEC_SAD_HPP
#define NOISEVEC_SAD_HPP

#include "noisevec/features.hpp"

#include <algorithm>

namespace noisevec {

/// Energy-quantile speech activity detector settings.
struct SadConfig {
  std::size_t energy_coefficient_index = 0;
  double speech_quantile = 0.3;
  std::size_t smoothing_window = 5;  // odd

  void validate(std::size_t dim) const {
    if (!(speech_quantile > 0.0 && speech_quantile < 1.0)) {
      throw DataError("speech quantile must lie in (0, 1)");
    }
    if (smoothing_window == 0 || smoothing_window % 2 == 0) {
      throw DataError("smoothing window must be odd and at least 1");
    }
    if (energy_coefficient_index >= dim) {
      throw DataError("energy coefficient index " + std::to_string(energy_coefficient_index) +
                      " out of range for dim " + std::to_string(dim));
    }
  }
};

/// q-quantile with linear interpolation between order statistics.
inline double interpolated_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("quantile of empty sequence");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

/// Majority vote over a centred window, truncated at the utterance edges.
/// Ties (only possible at truncated edges) go to speech.
inline SadLabels smooth_labels(const SadLabels& raw, std::size_t window) {
  if (window <= 1) return raw;
  const std::size_t half = window / 2;
  const std::size_t n = raw.size();
  std::vector<std::size_t> prefix(n + 1, 0);
  for (std::size_t t = 0; t < n; ++t) prefix[t + 1] = prefix[t] + raw.is_speech(t);
  std::vector<Label> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t lo = t >= half ? t - half : 0;
    const std::size_t hi = std::min(n, t + half + 1);
    const std::size_t speech = prefix[hi] - prefix[lo];
    out[t] = 2 * speech >= (hi - lo) ? Label::kSpeech : Label::kSilence;
  }
  return SadLabels(std::move(out));
}

/// A frame is speech iff its energy coefficient strictly exceeds the
/// utterance's speech_quantile value; the raw decisions are then smoothed.
inline SadLabels label_by_energy(const FeatureMatrix& features, const SadConfig& config = {}) {
  if (features.empty()) throw DataError("energy SAD: empty utterance");
  config.validate(features.dim());
  const auto energy = features.matrix().col(static_cast<Eigen::Index>(config.energy_coefficient_index));
  std::vector<double> values;
  values.reserve(features.num_frames());
  for (Eigen::Index t = 0; t < energy.size(); ++t) values.push_back(energy(t));
  const double threshold = interpolated_quantile(values, config.speech_quantile);
  std::vector<Label> raw(values.size());
  for (std::size_t t = 0; t < values.size(); ++t) {
    raw[t] = values[t] > threshold ? Label::kSpeech : Label::kSilence;
  }
  return smooth_labels(SadLabels(std::move(raw)), config.smoothing_window);
}

}  // namespace noisevec

#endif  // NOISEVEC_SAD_HPP
