#ifndef NOISEVEC_FEATURES_HPP
#define NOISEVEC_FEATURES_HPP

// Per-utterance feature matrices, speech/silence labels and manifests, with
// their on-disk codecs:
//
//   NVF1 binary:  "NVF1" | u32 LE frames | u32 LE dim | frames*dim f64 LE, row-major
//   text:         "#frames=<T> dim=<d>" then T lines of d tab-separated values
//   labels:       one line, one char per frame, 'S' speech / 'N' silence
//   manifest:     TSV, "utt_id<TAB>features[<TAB>labels]" per line

#include "noisevec/common.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_set>
#include <utility>

namespace noisevec {

class FeatureMatrix {
 public:
  FeatureMatrix() : FeatureMatrix(RowMatrix(0, 1)) {}

  explicit FeatureMatrix(RowMatrix frames) : frames_(std::move(frames)) {
    if (frames_.cols() < 1) throw DataError("feature dimension must be at least 1");
    for (Eigen::Index i = 0; i < frames_.size(); ++i) {
      if (!std::isfinite(frames_.data()[i])) {
        throw DataError("non-finite feature value at frame " +
                        std::to_string(i / frames_.cols()) + ", coefficient " +
                        std::to_string(i % frames_.cols()));
      }
    }
  }

  static FeatureMatrix from_rows(const std::vector<std::vector<double>>& rows, std::size_t dim) {
    RowMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t t = 0; t < rows.size(); ++t) {
      if (rows[t].size() != dim) throw DataError("row " + std::to_string(t) + " has wrong width");
      for (std::size_t j = 0; j < dim; ++j) m(t, j) = rows[t][j];
    }
    return FeatureMatrix(std::move(m));
  }

  std::size_t num_frames() const { return static_cast<std::size_t>(frames_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(frames_.cols()); }
  bool empty() const { return frames_.rows() == 0; }

  Vector frame(std::size_t t) const { return frames_.row(static_cast<Eigen::Index>(t)).transpose(); }
  double operator()(std::size_t t, std::size_t j) const {
    return frames_(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
  }

  const RowMatrix& matrix() const { return frames_; }

  /// Rows [begin, end) as a new matrix.
  FeatureMatrix slice(std::size_t begin, std::size_t end) const {
    return FeatureMatrix(RowMatrix(frames_.middleRows(static_cast<Eigen::Index>(begin),
                                                      static_cast<Eigen::Index>(end - begin))));
  }

  friend bool operator==(const FeatureMatrix& a, const FeatureMatrix& b) {
    if (a.frames_.rows() != b.frames_.rows() || a.frames_.cols() != b.frames_.cols()) return false;
    return std::memcmp(a.frames_.data(), b.frames_.data(),
                       sizeof(double) * static_cast<std::size_t>(a.frames_.size())) == 0;
  }

 private:
  RowMatrix frames_;
};

enum class Label : std::uint8_t { kSilence = 0, kSpeech = 1 };

inline char label_char(Label l) { return l == Label::kSpeech ? 'S' : 'N'; }
inline Label flip(Label l) { return l == Label::kSpeech ? Label::kSilence : Label::kSpeech; }

class SadLabels {
 public:
  SadLabels() = default;
  explicit SadLabels(std::vector<Label> labels) : labels_(std::move(labels)) {}

  /// Builds from an "SSN..." string; throws on any other character.
  static SadLabels from_string(std::string_view text) {
    std::vector<Label> out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (text[i] == 'S') {
        out.push_back(Label::kSpeech);
      } else if (text[i] == 'N') {
        out.push_back(Label::kSilence);
      } else {
        throw DataError("illegal label character '" + std::string(1, text[i]) + "' at position " +
                        std::to_string(i));
      }
    }
    return SadLabels(std::move(out));
  }

  std::string to_string() const {
    std::string s;
    s.reserve(labels_.size());
    for (auto l : labels_) s.push_back(label_char(l));
    return s;
  }

  std::size_t size() const { return labels_.size(); }
  Label operator[](std::size_t t) const { return labels_[t]; }
  bool is_speech(std::size_t t) const { return labels_[t] == Label::kSpeech; }
  const std::vector<Label>& values() const { return labels_; }

  std::size_t count(Label l) const {
    std::size_t n = 0;
    for (auto x : labels_) n += (x == l);
    return n;
  }

  friend bool operator==(const SadLabels&, const SadLabels&) = default;

 private:
  std::vector<Label> labels_;
};

inline void check_paired(const FeatureMatrix& features, const SadLabels& labels) {
  if (features.num_frames() != labels.size()) {
    throw DataError("label count " + std::to_string(labels.size()) +
                    " does not match frame count " + std::to_string(features.num_frames()));
  }
}

struct ManifestEntry {
  std::string utterance_id;
  std::string feature_path;
  std::optional<std::string> label_path;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  /// Directory relative paths are resolved against (the manifest's own).
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& path) const {
    std::filesystem::path p(path);
    return p.is_absolute() ? p : base_dir / p;
  }
};

enum class FeatureFormat { kBinary, kText };

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

inline void put_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_f64_le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

inline double get_f64_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
  return std::bit_cast<double>(bits);
}

constexpr std::string_view kNvfMagic = "NVF1";
constexpr std::size_t kNvfHeaderBytes = 12;

}  // namespace detail

inline std::string encode_nvf(const FeatureMatrix& m) {
  std::string out;
  out.reserve(detail::kNvfHeaderBytes + 8 * m.num_frames() * m.dim());
  out += detail::kNvfMagic;
  detail::put_u32_le(out, static_cast<std::uint32_t>(m.num_frames()));
  detail::put_u32_le(out, static_cast<std::uint32_t>(m.dim()));
  const double* p = m.matrix().data();
  for (std::size_t i = 0; i < m.num_frames() * m.dim(); ++i) detail::put_f64_le(out, p[i]);
  return out;
}

inline FeatureMatrix decode_nvf(std::string_view bytes) {
  using detail::kNvfHeaderBytes;
  if (bytes.size() < kNvfHeaderBytes) {
    throw DataError("NVF1: truncated header (" + std::to_string(bytes.size()) + " bytes)");
  }
  if (bytes.substr(0, 4) != detail::kNvfMagic) throw DataError("NVF1: bad magic at byte 0");
  auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t frames = detail::get_u32_le(raw + 4);
  const std::uint32_t dim = detail::get_u32_le(raw + 8);
  if (dim == 0) throw DataError("NVF1: dim must be at least 1 (byte 8)");
  const std::uint64_t payload = 8ull * frames * dim;
  if (bytes.size() - kNvfHeaderBytes != payload) {
    throw DataError("NVF1: header declares " + std::to_string(frames) + "x" + std::to_string(dim) +
                    " (" + std::to_string(payload) + " payload bytes) but file has " +
                    std::to_string(bytes.size() - kNvfHeaderBytes));
  }
  RowMatrix m(frames, dim);
  for (std::uint64_t i = 0; i < std::uint64_t{frames} * dim; ++i) {
    const std::size_t offset = kNvfHeaderBytes + 8 * i;
    double v = detail::get_f64_le(raw + offset);
    if (!std::isfinite(v)) throw DataError("NVF1: non-finite value at byte " + std::to_string(offset));
    m.data()[i] = v;
  }
  return FeatureMatrix(std::move(m));
}

inline std::string encode_feature_text(const FeatureMatrix& m) {
  std::string out = "#frames=" + std::to_string(m.num_frames()) + " dim=" + std::to_string(m.dim()) + "\n";
  for (std::size_t t = 0; t < m.num_frames(); ++t) {
    detail::append_joined(out, m.matrix().data() + t * m.dim(), m.dim());
    out.push_back('\n');
  }
  return out;
}

inline FeatureMatrix decode_feature_text(std::string_view text) {
  auto lines = detail::split_lines(text);
  if (lines.empty()) throw DataError("text features: missing header at line 1");
  std::size_t frames = 0, dim = 0;
  {
    auto header = lines[0];
    constexpr std::string_view kFrames = "#frames=";
    constexpr std::string_view kDim = " dim=";
    auto dpos = header.find(kDim);
    if (!header.starts_with(kFrames) || dpos == std::string_view::npos ||
        !detail::parse_size(header.substr(kFrames.size(), dpos - kFrames.size()), frames) ||
        !detail::parse_size(header.substr(dpos + kDim.size()), dim)) {
      throw DataError("text features: malformed header at line 1");
    }
    if (dim == 0) throw DataError("text features: dim must be at least 1 (line 1)");
  }
  if (lines.size() != frames + 1) {
    throw DataError("text features: header declares " + std::to_string(frames) + " frames but found " +
                    std::to_string(lines.size() - 1) + " data lines");
  }
  RowMatrix m(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(dim));
  for (std::size_t t = 0; t < frames; ++t) {
    auto fields = detail::split(lines[t + 1], '\t');
    if (fields.size() != dim) {
      throw DataError("text features: line " + std::to_string(t + 2) + " has " +
                      std::to_string(fields.size()) + " values, expected " + std::to_string(dim));
    }
    for (std::size_t j = 0; j < dim; ++j) {
      double v;
      if (!detail::parse_double(fields[j], v)) {
        throw DataError("text features: bad or non-finite value at line " + std::to_string(t + 2) +
                        ", column " + std::to_string(j + 1));
      }
      m(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return FeatureMatrix(std::move(m));
}

/// Guesses the format from the leading magic bytes.
inline FeatureFormat sniff_format(std::string_view bytes) {
  return bytes.starts_with(detail::kNvfMagic) ? FeatureFormat::kBinary : FeatureFormat::kText;
}

inline FeatureMatrix read_features(const std::filesystem::path& path, FeatureFormat format) {
  auto bytes = detail::read_file(path);
  try {
    return format == FeatureFormat::kBinary ? decode_nvf(bytes) : decode_feature_text(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline FeatureMatrix read_features(const std::filesystem::path& path) {
  auto bytes = detail::read_file(path);
  try {
    return sniff_format(bytes) == FeatureFormat::kBinary ? decode_nvf(bytes) : decode_feature_text(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline void write_features(const FeatureMatrix& m, const std::filesystem::path& path, FeatureFormat format) {
  detail::write_file(path, format == FeatureFormat::kBinary ? encode_nvf(m) : encode_feature_text(m));
}

inline SadLabels decode_labels(std::string_view text, std::size_t expected_frames) {
  if (text.ends_with('\n')) text.remove_suffix(1);
  if (text.ends_with('\r')) text.remove_suffix(1);
  auto nl = text.find('\n');
  if (nl != std::string_view::npos) throw DataError("labels: more than one line (byte " + std::to_string(nl) + ")");
  auto labels = SadLabels::from_string(text);
  if (labels.size() != expected_frames) {
    throw DataError("labels: length " + std::to_string(labels.size()) + " does not match expected " +
                    std::to_string(expected_frames) + " frames");
  }
  return labels;
}

inline SadLabels read_labels(const std::filesystem::path& path, std::size_t expected_frames) {
  try {
    return decode_labels(detail::read_file(path), expected_frames);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline void write_labels(const SadLabels& labels, const std::filesystem::path& path) {
  detail::write_file(path, labels.to_string() + "\n");
}

inline Manifest decode_manifest(std::string_view text) {
  Manifest manifest;
  std::unordered_set<std::string> seen;
  auto lines = detail::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string where = "manifest line " + std::to_string(i + 1);
    auto cols = detail::split(lines[i], '\t');
    if (cols.size() < 2 || cols.size() > 3) {
      throw DataError(where + ": expected 2 or 3 tab-separated columns, found " + std::to_string(cols.size()));
    }
    for (auto c : cols) {
      if (c.empty()) throw DataError(where + ": empty column");
    }
    ManifestEntry e{std::string(cols[0]), std::string(cols[1]), std::nullopt};
    if (cols.size() == 3) e.label_path = std::string(cols[2]);
    if (!seen.insert(e.utterance_id).second) {
      throw DataError(where + ": duplicate utterance id '" + e.utterance_id + "'");
    }
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

inline std::string encode_manifest(const Manifest& manifest) {
  std::string out;
  for (const auto& e : manifest.entries) {
    out += e.utterance_id + "\t" + e.feature_path;
    if (e.label_path) out += "\t" + *e.label_path;
    out.push_back('\n');
  }
  return out;
}

inline Manifest read_manifest(const std::filesystem::path& path) {
  Manifest m;
  try {
    m = decode_manifest(detail::read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  m.base_dir = path.parent_path();
  return m;
}

inline void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  detail::write_file(path, encode_manifest(manifest));
}

}  // namespace noisevec

#endif  // NOISEVEC_FEATURES_HPP
