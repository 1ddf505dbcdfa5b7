#ifndef NOISEVEC_CORPUS_HPP
#define NOISEVEC_CORPUS_HPP

#include "noisevec/parallel.hpp"
#include "noisevec/sad.hpp"

namespace noisevec {

struct Utterance {
  std::string id;
  FeatureMatrix features;
  SadLabels labels;
};

/// Labels from the file when one is given, energy SAD otherwise.
inline SadLabels labels_for(const FeatureMatrix& features, const std::optional<std::filesystem::path>& label_path,
                            const SadConfig& sad) {
  if (label_path) return read_labels(*label_path, features.num_frames());
  return label_by_energy(features, sad);
}

/// Loads every manifest entry, in manifest order.
inline std::vector<Utterance> load_corpus(const Manifest& manifest, const SadConfig& sad = {}, std::size_t jobs = 1) {
  std::vector<Utterance> out(manifest.entries.size());
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    const auto& e = manifest.entries[i];
    auto features = read_features(manifest.resolve(e.feature_path));
    std::optional<std::filesystem::path> lab;
    if (e.label_path) lab = manifest.resolve(*e.label_path);
    auto labels = labels_for(features, lab, sad);
    out[i] = Utterance{e.utterance_id, std::move(features), std::move(labels)};
  });
  return out;
}

}  // namespace noisevec

#endif  // NOISEVEC_CORPUS_HPP
