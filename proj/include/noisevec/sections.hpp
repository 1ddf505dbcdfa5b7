#ifndef NOISEVEC_SECTIONS_HPP
#define NOISEVEC_SECTIONS_HPP

// Sectioned text codec used by parameter files:
//
//   MAGIC
//   [meta] key=value key=value
//   [name]
//   v<TAB>v<TAB>...
//   ...
//
// Values are printed with 17 significant digits so files round-trip bit-exactly.

#include "noisevec/common.hpp"

#include <map>

namespace noisevec::detail {

struct Section {
  std::string name;
  std::map<std::string, std::string> attrs;
  std::vector<std::vector<double>> rows;
};

class SectionWriter {
 public:
  explicit SectionWriter(std::string_view magic) : out_(std::string(magic) + "\n") {}

  SectionWriter& meta(const std::vector<std::pair<std::string, std::string>>& attrs) {
    out_ += "[meta]";
    for (const auto& [k, v] : attrs) out_ += " " + k + "=" + v;
    out_ += "\n";
    return *this;
  }

  SectionWriter& vector(std::string_view name, const Vector& v) {
    out_ += "[" + std::string(name) + "]\n";
    append_joined(out_, v.data(), static_cast<std::size_t>(v.size()));
    out_ += "\n";
    return *this;
  }

  SectionWriter& matrix(std::string_view name, const Matrix& m) {
    out_ += "[" + std::string(name) + "]\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (j) out_.push_back('\t');
        out_ += format_double(m(i, j));
      }
      out_ += "\n";
    }
    return *this;
  }

  const std::string& str() const { return out_; }

 private:
  std::string out_;
};

class SectionReader {
 public:
  SectionReader(std::string_view text, std::string_view magic) {
    auto lines = split_lines(text);
    if (lines.empty() || lines[0] != magic) {
      throw DataError("expected magic '" + std::string(magic) + "' at line 1");
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
      auto line = lines[i];
      const std::string where = "line " + std::to_string(i + 1);
      if (line.empty()) throw DataError(where + ": unexpected blank line");
      if (line.front() == '[') {
        auto close = line.find(']');
        if (close == std::string_view::npos) throw DataError(where + ": unterminated section header");
        Section s;
        s.name = std::string(line.substr(1, close - 1));
        auto rest = line.substr(close + 1);
        for (auto tok : split(rest, ' ')) {
          if (tok.empty()) continue;
          auto eq = tok.find('=');
          if (eq == std::string_view::npos) throw DataError(where + ": malformed attribute");
          s.attrs[std::string(tok.substr(0, eq))] = std::string(tok.substr(eq + 1));
        }
        sections_.push_back(std::move(s));
        continue;
      }
      if (sections_.empty()) throw DataError(where + ": data before first section");
      std::vector<double> row;
      for (auto tok : split(line, '\t')) {
        double v;
        if (!parse_double(tok, v)) throw DataError(where + ": bad or non-finite value");
        row.push_back(v);
      }
      sections_.back().rows.push_back(std::move(row));
    }
  }

  const Section& section(std::string_view name) const {
    for (const auto& s : sections_) {
      if (s.name == name) return s;
    }
    throw DataError("missing section [" + std::string(name) + "]");
  }

  std::size_t size_attr(std::string_view section_name, const std::string& key) const {
    const auto& s = section(section_name);
    auto it = s.attrs.find(key);
    std::size_t v;
    if (it == s.attrs.end() || !parse_size(it->second, v)) {
      throw DataError("section [" + std::string(section_name) + "]: missing or bad '" + key + "'");
    }
    return v;
  }

  double double_attr(std::string_view section_name, const std::string& key) const {
    const auto& s = section(section_name);
    auto it = s.attrs.find(key);
    double v;
    if (it == s.attrs.end() || !parse_double(it->second, v)) {
      throw DataError("section [" + std::string(section_name) + "]: missing or bad '" + key + "'");
    }
    return v;
  }

  Vector vector(std::string_view name, std::size_t size) const {
    const auto& s = section(name);
    if (s.rows.size() != 1 || s.rows[0].size() != size) {
      throw DataError("section [" + std::string(name) + "]: expected one row of " + std::to_string(size) + " values");
    }
    return Eigen::Map<const Vector>(s.rows[0].data(), static_cast<Eigen::Index>(size));
  }

  Matrix matrix(std::string_view name, std::size_t rows, std::size_t cols) const {
    const auto& s = section(name);
    if (s.rows.size() != rows) {
      throw DataError("section [" + std::string(name) + "]: expected " + std::to_string(rows) + " rows");
    }
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
      if (s.rows[i].size() != cols) {
        throw DataError("section [" + std::string(name) + "]: row " + std::to_string(i + 1) + " should have " +
                        std::to_string(cols) + " values");
      }
      for (std::size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s.rows[i][j];
    }
    return m;
  }

 private:
  std::vector<Section> sections_;
};

}  // namespace noisevec::detail

#endif  // NOISEVEC_SECTIONS_HPP
