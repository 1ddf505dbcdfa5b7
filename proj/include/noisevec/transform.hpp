#ifndef NOISEVEC_TRANSFORM_HPP
#define NOISEVEC_TRANSFORM_HPP

#include "noisevec/estimators.hpp"
#include "noisevec/sections.hpp"

namespace noisevec {

/// Control layer: y_t = W [x_t; mu_s; mu_n] + b, with W of shape d_out x 3d.
struct AffineMap {
  Matrix weights;
  Vector bias;

  /// Identity-append map: output frame is the literal [x_t; mu_s; mu_n].
  static AffineMap identity_append(std::size_t dim) {
    const auto n = static_cast<Eigen::Index>(3 * dim);
    return {Matrix::Identity(n, n), Vector::Zero(n)};
  }

  std::size_t input_dim() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(weights.rows()); }

  void validate() const {
    if (weights.rows() < 1 || weights.cols() < 3 || weights.cols() % 3 != 0) {
      throw DataError("affine map: weights must have 3d columns and at least one row");
    }
    if (bias.size() != weights.rows()) throw DataError("affine map: bias length must equal weight rows");
    if (!weights.allFinite() || !bias.allFinite()) throw DataError("affine map: non-finite entries");
  }
};

inline FeatureMatrix apply_control_layer(const FeatureMatrix& features, const NoiseVector& vector,
                                         const AffineMap& map) {
  map.validate();
  const std::size_t d = features.dim();
  if (vector.dim() != d || map.input_dim() != 3 * d) {
    throw DataError("control layer: features dim " + std::to_string(d) + ", noise vector dim " +
                    std::to_string(vector.dim()) + ", map input dim " + std::to_string(map.input_dim()));
  }
  const auto di = static_cast<Eigen::Index>(d);
  // The utterance-level part of W [x; mu] + b is the same for every frame.
  const Vector offset = map.weights.middleCols(di, 2 * di) * vector.concatenated() + map.bias;
  RowMatrix out = features.matrix() * map.weights.leftCols(di).transpose();
  out.rowwise() += offset.transpose();
  return FeatureMatrix(std::move(out));
}

inline std::string encode_affine(const AffineMap& map) {
  detail::SectionWriter w("NVAFFINE1");
  w.meta({{"rows", std::to_string(map.output_dim())}, {"cols", std::to_string(map.input_dim())}});
  w.matrix("weights", map.weights).vector("bias", map.bias);
  return w.str();
}

inline AffineMap decode_affine(std::string_view text) {
  detail::SectionReader r(text, "NVAFFINE1");
  const std::size_t rows = r.size_attr("meta", "rows");
  const std::size_t cols = r.size_attr("meta", "cols");
  AffineMap map{r.matrix("weights", rows, cols), r.vector("bias", rows)};
  map.validate();
  return map;
}

inline AffineMap read_affine(const std::filesystem::path& path) {
  try {
    return decode_affine(detail::read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline void write_affine(const AffineMap& map, const std::filesystem::path& path) {
  detail::write_file(path, encode_affine(map));
}

}  // namespace noisevec

#endif  // NOISEVEC_TRANSFORM_HPP
