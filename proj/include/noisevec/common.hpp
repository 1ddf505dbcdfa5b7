#ifndef NOISEVEC_COMMON_HPP
#define NOISEVEC_COMMON_HPP

#include <Eigen/Dense>

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace noisevec {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Malformed input data: bad file contents, mismatched lengths, bad arguments.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical failure: non positive-definite matrix, singular covariance.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Shortest text that parses back to the same double, printed with 17
/// significant digits (the %.17g form).
inline std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                           std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

inline void append_joined(std::string& out, const double* values, std::size_t n,
                          char sep = '\t') {
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out.push_back(sep);
    out += format_double(values[i]);
  }
}

inline std::string join(const Vector& v, char sep = '\t') {
  std::string out;
  append_joined(out, v.data(), static_cast<std::size_t>(v.size()), sep);
  return out;
}

/// Parses a full token as a finite double. Returns false on any leftover
/// characters, overflow or non-finite result.
inline bool parse_double(std::string_view token, double& out) {
  if (token.empty()) return false;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (*first == '+') ++first;
  auto res = std::from_chars(first, last, out);
  if (res.ec != std::errc{} || res.ptr != last) return false;
  return std::isfinite(out);
}

inline bool parse_size(std::string_view token, std::size_t& out) {
  if (token.empty()) return false;
  auto res = std::from_chars(token.data(), token.data() + token.size(), out);
  return res.ec == std::errc{} && res.ptr == token.data() + token.size();
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(line.substr(start));
      break;
    }
    parts.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) {
      lines.push_back(strip_cr(text.substr(start)));
      break;
    }
    lines.push_back(strip_cr(text.substr(start, pos - start)));
    start = pos + 1;
  }
  return lines;
}

}  // namespace detail
}  // namespace noisevec

#endif  // NOISEVEC_COMMON_HPP
