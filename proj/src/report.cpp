#include "hypergrad/report.hpp"

#include "hypergrad/dataset.hpp"
#include "hypergrad/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

namespace hypergrad {

namespace {

void emit_metadata(std::string& out, const Metadata& meta) {
  for (const auto& [k, v] : meta) {
    std::string value = v;
    std::replace(value.begin(), value.end(), '\n', ' ');
    out += "# " + k + "=" + value + "\n";
  }
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename T>
T parse_field(std::string_view token, std::size_t line, const char* what) {
  T v{};
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
    throw ParseError(line, std::string("invalid ") + what + " '" + std::string(token) + "'");
  }
  return v;
}

// Walks the lines of a CSV file: metadata, one header, then rows.
template <typename RowFn>
Metadata read_csv(std::string_view text, std::string_view header, RowFn&& on_row) {
  Metadata meta;
  bool seen_header = false;
  std::size_t line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!seen_header && line.front() == '#') {
      std::string_view body = line.substr(1);
      if (!body.empty() && body.front() == ' ') body.remove_prefix(1);
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) throw ParseError(line_no, "metadata line without '='");
      meta.emplace_back(std::string(body.substr(0, eq)), std::string(body.substr(eq + 1)));
      continue;
    }
    if (!seen_header) {
      if (line != header) throw ParseError(line_no, "expected header '" + std::string(header) + "'");
      seen_header = true;
      continue;
    }
    on_row(split(line, ','), line_no);
  }
  if (!seen_header) throw ParseError(line_no, "missing header");
  return meta;
}

constexpr std::string_view kDecayHeader = "strategy,step,inner_error,hypergrad_error";
constexpr std::string_view kEfficiencyHeader = "strategy,trial,seed,cy";

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Fixed-precision coordinates keep the SVG byte-stable and readable.
std::string coord(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 2);
  (void)ec;
  return std::string(buf, ptr);
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

struct Axis {
  bool log;
  double lo;
  double hi;

  double map(double v) const { return log ? std::log10(v) : v; }
};

Axis make_axis(bool log, const std::vector<double>& values) {
  Axis a{log, 0.0, 1.0};
  std::vector<double> used;
  for (double v : values) {
    if (!std::isfinite(v) || (log && !(v > 0.0))) continue;
    used.push_back(log ? std::log10(v) : v);
  }
  if (used.empty()) {
    if (log) {
      a.lo = -16.0;
      a.hi = 0.0;
    }
    return a;
  }
  auto [mn, mx] = std::minmax_element(used.begin(), used.end());
  a.lo = *mn;
  a.hi = *mx;
  if (log) {
    a.lo = std::floor(a.lo);
    a.hi = std::ceil(a.hi);
  }
  if (a.hi - a.lo <= 0.0) {
    a.lo -= 1.0;
    a.hi += 1.0;
  }
  return a;
}

std::vector<double> ticks(const Axis& a) {
  std::vector<double> out;
  if (a.log) {
    const int lo = static_cast<int>(a.lo), hi = static_cast<int>(a.hi);
    const int stride = std::max(1, (hi - lo + 9) / 10);
    for (int p = lo; p <= hi; p += stride) out.push_back(p);
  } else {
    const double span = a.hi - a.lo;
    for (int i = 0; i <= 5; ++i) out.push_back(a.lo + span * i / 5.0);
  }
  return out;
}

std::string tick_label(const Axis& a, double t) {
  if (a.log) return "1e" + std::to_string(static_cast<int>(t));
  return format_double(std::round(t * 1000.0) / 1000.0);
}

}  // namespace

std::string emit_decay_csv(const DecayResult& result) {
  std::string out;
  emit_metadata(out, result.metadata);
  out += kDecayHeader;
  out += '\n';
  for (const DecayTrace& t : result.traces) {
    for (const DecayRow& r : t.rows) {
      out += t.strategy + ',' + std::to_string(r.step) + ',' + format_double(r.inner_error) + ',' +
             format_double(r.hyper_error) + '\n';
    }
  }
  return out;
}

std::string emit_efficiency_csv(const EfficiencyResult& result) {
  std::string out;
  emit_metadata(out, result.metadata);
  out += kEfficiencyHeader;
  out += '\n';
  for (const EfficiencyRow& r : result.rows) {
    out += r.strategy + ',' + std::to_string(r.trial) + ',' + std::to_string(r.seed) + ',' + format_double(r.c_y) +
           '\n';
  }
  return out;
}

DecayResult parse_decay_csv(std::string_view text) {
  DecayResult out;
  std::map<std::string, std::size_t> index;
  out.metadata = read_csv(text, kDecayHeader, [&](const std::vector<std::string_view>& f, std::size_t line) {
    if (f.size() != 4) throw ParseError(line, "expected 4 fields");
    const std::string name(f[0]);
    auto it = index.find(name);
    if (it == index.end()) {
      it = index.emplace(name, out.traces.size()).first;
      out.traces.push_back({name, {}, {}, {}});
    }
    out.traces[it->second].rows.push_back({parse_field<int>(f[1], line, "step"),
                                           parse_field<double>(f[2], line, "inner_error"),
                                           parse_field<double>(f[3], line, "hypergrad_error")});
  });
  return out;
}

EfficiencyResult parse_efficiency_csv(std::string_view text) {
  EfficiencyResult out;
  out.metadata = read_csv(text, kEfficiencyHeader, [&](const std::vector<std::string_view>& f, std::size_t line) {
    if (f.size() != 4) throw ParseError(line, "expected 4 fields");
    out.rows.push_back({std::string(f[0]), parse_field<int>(f[1], line, "trial"),
                        parse_field<std::uint64_t>(f[2], line, "seed"), parse_field<double>(f[3], line, "cy")});
  });
  return out;
}

std::string render_svg(const std::vector<Series>& series, const AxesConfig& axes) {
  constexpr double width = 640, height = 420, left = 70, right = 150, top = 40, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;

  std::vector<double> xs, ys;
  for (const Series& s : series) {
    for (const auto& [x, y] : s.points) {
      xs.push_back(x);
      ys.push_back(y);
    }
  }
  const Axis ax = make_axis(axes.x_log, xs);
  const Axis ay = make_axis(axes.y_log, ys);
  auto px = [&](double v) { return left + (ax.map(v) - ax.lo) / (ax.hi - ax.lo) * pw; };
  auto py = [&](double v) { return top + ph - (ay.map(v) - ay.lo) / (ay.hi - ay.lo) * ph; };

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + coord(width) + "\" height=\"" + coord(height) +
         "\" viewBox=\"0 0 " + coord(width) + " " + coord(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!axes.title.empty()) {
    out += "<text x=\"" + coord(left + pw / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" +
           escape(axes.title) + "</text>\n";
  }
  out += "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n";
  out += "<rect x=\"" + coord(left) + "\" y=\"" + coord(top) + "\" width=\"" + coord(pw) + "\" height=\"" +
         coord(ph) + "\"/>\n";
  out += "</g>\n<g class=\"ticks\">\n";
  for (double t : ticks(ax)) {
    const double x = left + (t - ax.lo) / (ax.hi - ax.lo) * pw;
    out += "<line x1=\"" + coord(x) + "\" y1=\"" + coord(top + ph) + "\" x2=\"" + coord(x) + "\" y2=\"" +
           coord(top + ph + 5) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + coord(x) + "\" y=\"" + coord(top + ph + 18) + "\" text-anchor=\"middle\">" +
           tick_label(ax, t) + "</text>\n";
  }
  for (double t : ticks(ay)) {
    const double y = top + ph - (t - ay.lo) / (ay.hi - ay.lo) * ph;
    out += "<line x1=\"" + coord(left - 5) + "\" y1=\"" + coord(y) + "\" x2=\"" + coord(left) + "\" y2=\"" +
           coord(y) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + coord(left - 8) + "\" y=\"" + coord(y + 4) + "\" text-anchor=\"end\">" +
           tick_label(ay, t) + "</text>\n";
  }
  out += "</g>\n";
  out += "<text x=\"" + coord(left + pw / 2) + "\" y=\"" + coord(height - 10) + "\" text-anchor=\"middle\">" +
         escape(axes.x_label) + "</text>\n";
  out += "<text x=\"15\" y=\"" + coord(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " +
         coord(top + ph / 2) + ")\">" + escape(axes.y_label) + "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const Series& s = series[i];
    const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
    std::string pts;
    for (const auto& [x, y] : s.points) {
      if ((ax.log && !(x > 0.0)) || (ay.log && !(y > 0.0)) || !std::isfinite(x) || !std::isfinite(y)) continue;
      if (!pts.empty()) pts += ' ';
      pts += coord(px(x)) + ',' + coord(py(y));
    }
    out += "<polyline class=\"series\" data-name=\"" + escape(s.name) + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    const double ly = top + 12 + 16 * static_cast<double>(i);
    out += "<line x1=\"" + coord(left + pw + 12) + "\" y1=\"" + coord(ly) + "\" x2=\"" + coord(left + pw + 32) +
           "\" y2=\"" + coord(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + coord(left + pw + 38) + "\" y=\"" + coord(ly + 4) + "\">" + escape(s.name) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

std::string render_decay_svg(const DecayResult& result) {
  std::vector<Series> series;
  for (const DecayTrace& t : result.traces) {
    Series s{t.strategy, {}};
    for (const DecayRow& r : t.rows) s.points.emplace_back(r.inner_error, r.hyper_error);
    series.push_back(std::move(s));
  }
  return render_svg(series, {"hypergradient error vs inner error", "inner error", "hypergradient error", true, true});
}

std::string render_efficiency_svg(const EfficiencyResult& result) {
  std::vector<Series> series;
  std::map<std::string, std::size_t> index;
  for (const EfficiencyRow& r : result.rows) {
    auto it = index.find(r.strategy);
    if (it == index.end()) {
      it = index.emplace(r.strategy, series.size()).first;
      series.push_back({r.strategy, {}});
    }
    series[it->second].points.emplace_back(static_cast<double>(r.trial), r.c_y);
  }
  return render_svg(series, {"efficiency constant per trial", "trial", "C_y", false, true});
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("cannot write " + path);
}

}  // namespace hypergrad
