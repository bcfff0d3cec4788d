#include "hypergrad/dataset.hpp"

#include "hypergrad/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace hypergrad {

namespace {

struct Entry {
  Index index;
  double value;
};

struct Row {
  double label;
  std::vector<Entry> entries;
};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

double parse_number(std::string_view token, std::size_t line, const char* what) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = first + token.size();
  if (!token.empty() && *first == '+') ++first;  // from_chars rejects a leading '+'
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) {
    throw ParseError(line, std::string("invalid ") + what + " '" + std::string(token) + "'");
  }
  if (!std::isfinite(v)) throw ParseError(line, std::string("non-finite ") + what);
  return v;
}

Index parse_index(std::string_view token, std::size_t line) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec == std::errc::result_out_of_range) throw ParseError(line, "index too large");
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
    throw ParseError(line, "invalid index '" + std::string(token) + "'");
  }
  if (v < 1) throw ParseError(line, "index must be >= 1");
  if (v > kMaxLibsvmIndex) throw ParseError(line, "index too large");
  return static_cast<Index>(v);
}

}  // namespace

Dataset parse_libsvm(std::string_view text, std::optional<Index> dims) {
  std::vector<Row> rows;
  Index max_index = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && is_space(line[i])) ++i;
      std::size_t j = i;
      while (j < line.size() && !is_space(line[j])) ++j;
      if (j > i) tokens.push_back(line.substr(i, j - i));
      i = j;
    }
    if (tokens.empty()) continue;

    Row row;
    row.label = parse_number(tokens[0], line_no, "label");
    Index prev = 0;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const auto colon = tokens[t].find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(line_no, "expected idx:val, got '" + std::string(tokens[t]) + "'");
      }
      const Index idx = parse_index(tokens[t].substr(0, colon), line_no);
      if (idx <= prev) throw ParseError(line_no, "indices must be strictly increasing");
      prev = idx;
      row.entries.push_back({idx, parse_number(tokens[t].substr(colon + 1), line_no, "value")});
    }
    max_index = std::max(max_index, prev);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(line_no, "empty file");

  Index d = max_index;
  if (dims) {
    if (*dims < 1) throw ContractViolation("dims must be positive");
    if (*dims < max_index) {
      throw DataError("feature index " + std::to_string(max_index) + " exceeds dims " + std::to_string(*dims));
    }
    d = *dims;
  }
  if (d < 1) throw DataError("no features present");
  const Index n = static_cast<Index>(rows.size());
  if (static_cast<double>(n) * static_cast<double>(d) > 1e8) throw DataError("dense matrix too large");

  Dataset out;
  out.features = Matrix::Zero(n, d);
  out.labels.resize(n);
  for (Index r = 0; r < n; ++r) {
    const Row& row = rows[static_cast<std::size_t>(r)];
    out.labels(r) = row.label;
    for (const Entry& e : row.entries) out.features(r, e.index - 1) = e.value;
  }
  return out;
}

Dataset load_libsvm(const std::string& path, std::optional<Index> dims) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw DataError("cannot read " + path);
  return parse_libsvm(buf.str(), dims);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw ContractViolation("format_double failed");
  return std::string(buf, ptr);
}

std::string serialize_libsvm(const Dataset& data) {
  std::string out;
  for (Index r = 0; r < data.n(); ++r) {
    out += format_double(data.labels(r));
    for (Index c = 0; c < data.dims(); ++c) {
      const double v = data.features(r, c);
      if (v == 0.0) continue;
      out += ' ';
      out += std::to_string(c + 1);
      out += ':';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

Dataset pad_columns(const Dataset& data, Index d) {
  if (d < data.dims()) throw ContractViolation("pad_columns cannot drop columns");
  Dataset out;
  out.features = Matrix::Zero(data.n(), d);
  out.features.leftCols(data.dims()) = data.features;
  out.labels = data.labels;
  return out;
}

void require_binary_labels(const Dataset& data) {
  for (Index i = 0; i < data.n(); ++i) {
    const double b = data.labels(i);
    if (b != 1.0 && b != -1.0) {
      throw DataError("label " + format_double(b) + " on row " + std::to_string(i + 1) + " is not -1 or +1");
    }
  }
}

}  // namespace hypergrad
