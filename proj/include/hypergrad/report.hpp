#pragma once

#include "hypergrad/bench.hpp"

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hypergrad {

/// `# key=value` lines, then `strategy,step,inner_error,hypergrad_error`.
std::string emit_decay_csv(const DecayResult& result);
/// `# key=value` lines, then `strategy,trial,seed,cy`.
std::string emit_efficiency_csv(const EfficiencyResult& result);

/// Inverse of emit_decay_csv; ParseError on malformed rows.
DecayResult parse_decay_csv(std::string_view text);
EfficiencyResult parse_efficiency_csv(std::string_view text);

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct AxesConfig {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool x_log = true;
  bool y_log = true;
};

/// Standalone SVG line plot, one polyline per series. Log axes carry ticks at
/// integer powers of ten; non-positive values are dropped from log axes.
std::string render_svg(const std::vector<Series>& series, const AxesConfig& axes);

std::string render_decay_svg(const DecayResult& result);
std::string render_efficiency_svg(const EfficiencyResult& result);

/// Writes bytes to a file; DataError on failure.
void write_file(const std::string& path, const std::string& bytes);

}  // namespace hypergrad
