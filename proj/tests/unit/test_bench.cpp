#include "hypergrad/bench.hpp"
#include "hypergrad/errors.hpp"
#include "hypergrad/report.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

using namespace hypergrad;

namespace {
const std::string kData = HYPERGRAD_DATA_DIR;

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

std::string meta(const Metadata& m, const std::string& key) {
  for (const auto& [k, v] : m)
    if (k == key) return v;
  return {};
}

RunConfig scalar_config() {
  RunConfig c;
  c.problem = ProblemKind::scalar;
  c.strategies = {Strategy::vanilla, Strategy::newton};
  c.steps = 30;
  c.seed = 1;
  c.step_size = 0.1;
  return c;
}

DecayTrace synthetic(double power) {
  DecayTrace t;
  t.strategy = "synthetic";
  int k = 0;
  for (double e = 1e-1; e >= 1e-6 * 0.99; e /= 10) t.rows.push_back({k++, e, std::pow(e, power)});
  return t;
}
}  // namespace

TEST(RunConfig, Validation) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  c.strategies.clear();
  EXPECT_THROW(c.validate(), UsageError);
  c = RunConfig{};
  c.trials = 0;
  EXPECT_THROW(c.validate(), UsageError);
  c = RunConfig{};
  c.y_low = 2;
  c.y_high = 1;
  EXPECT_THROW(c.validate(), UsageError);
  c = RunConfig{};
  c.problem = ProblemKind::ridge;
  EXPECT_THROW(c.validate(), UsageError);
  c.train_path = "x";
  EXPECT_NO_THROW(c.validate());
  c.problem = ProblemKind::logistic;
  EXPECT_THROW(c.validate(), UsageError);
  c.outer = OuterKind::affine;
  EXPECT_NO_THROW(c.validate());
}

TEST(ProblemKind, Names) {
  for (const char* n : {"ridge", "logistic", "scalar", "linear1d"}) EXPECT_EQ(to_string(parse_problem_kind(n)), n);
  EXPECT_THROW(parse_problem_kind("lasso"), UsageError);
}

TEST(RunDecay, ScalarNewtonExactEveryStep) {
  const DecayResult r = run_decay(scalar_config());
  ASSERT_EQ(r.traces.size(), 2u);
  const DecayTrace& newton = r.traces[1];
  ASSERT_EQ(newton.rows.size(), 31u);
  for (const DecayRow& row : newton.rows) {
    if (row.inner_error >= 1e-8) EXPECT_LE(row.hyper_error, 1e-12) << "step " << row.step;
  }
}

TEST(RunDecay, SharedTrajectory) {
  RunConfig c = scalar_config();
  c.strategies = all_strategies();
  const DecayResult r = run_decay(c);
  const std::vector<DecayRow>& ref = r.traces[0].rows;
  for (const DecayTrace& t : r.traces) {
    // exp may drop rows where an iterate hits zero, so match rows by step
    for (const DecayRow& row : t.rows) {
      ASSERT_LT(static_cast<std::size_t>(row.step), ref.size());
      EXPECT_EQ(row.inner_error, ref[row.step].inner_error);
    }
  }
}

TEST(RunDecay, InnerErrorNonincreasing) {
  RunConfig c;
  c.problem = ProblemKind::ridge;
  c.train_path = kData + "/mpg_scale";
  c.steps = 50;
  const DecayResult r = run_decay(c);
  for (std::size_t i = 1; i < r.traces[0].rows.size(); ++i)
    EXPECT_LE(r.traces[0].rows[i].inner_error, r.traces[0].rows[i - 1].inner_error * (1 + 1e-12));
}

TEST(RunDecay, ZeroStepsGivesSingleRow) {
  RunConfig c = scalar_config();
  c.steps = 0;
  const DecayResult r = run_decay(c);
  for (const DecayTrace& t : r.traces) {
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_EQ(t.rows[0].step, 0);
  }
}

TEST(RunDecay, ExpFiltersZeroIterate) {
  // x0 = 0 is a zero coordinate for the exp map
  RunConfig c = scalar_config();
  c.strategies = {Strategy::exp};
  const DecayResult r = run_decay(c);
  ASSERT_FALSE(r.traces[0].filtered_steps.empty());
  EXPECT_EQ(r.traces[0].filtered_steps[0], 0);
  EXPECT_EQ(meta(r.metadata, "filtered_exp"), "0");
  EXPECT_EQ(r.traces[0].rows.size(), 30u);
}

TEST(RunDecay, MetadataRecordsSeedAndRng) {
  const DecayResult r = run_decay(scalar_config());
  EXPECT_EQ(meta(r.metadata, "rng"), "mt19937_64");
  EXPECT_EQ(meta(r.metadata, "seed"), "1");
  EXPECT_FALSE(meta(r.metadata, "y").empty());
}

TEST(RunDecay, LogisticSlopes) {
  RunConfig c;
  c.problem = ProblemKind::logistic;
  c.train_path = kData + "/liver-disorders_scale.train";
  c.val_path = kData + "/liver-disorders_scale.val";
  c.strategies = {Strategy::vanilla, Strategy::newton};
  c.y_low = 3;
  c.y_high = 6;
  c.steps = 200;
  c.seed = 1;
  const DecayResult r = run_decay(c);
  const double v = fit_loglog_slope(r.traces[0]);
  EXPECT_GE(v, 0.8);
  EXPECT_LE(v, 1.2);
  EXPECT_GE(fit_loglog_slope(r.traces[1]), 1.8);
}

TEST(RunDecay, MissingDataIsDataError) {
  RunConfig c;
  c.problem = ProblemKind::ridge;
  c.train_path = kData + "/nope";
  EXPECT_THROW(run_decay(c), DataError);
}

TEST(EfficiencySweep, RowCountAndDeterminism) {
  RunConfig c;
  c.problem = ProblemKind::ridge;
  c.train_path = kData + "/mpg";
  c.outer = OuterKind::affine;
  c.strategies = {Strategy::newton, Strategy::opt};
  c.trials = 10;
  c.seed = 7;
  const EfficiencyResult a = run_efficiency_sweep(c);
  EXPECT_EQ(a.rows.size(), 20u);
  const EfficiencyResult b = run_efficiency_sweep(c);
  EXPECT_EQ(emit_efficiency_csv(a), emit_efficiency_csv(b));
  EXPECT_EQ(a.rows[0].trial, 0);
  EXPECT_EQ(a.rows[0].seed, 7u);
  EXPECT_EQ(a.rows[19].seed, 16u);
}

TEST(EfficiencySweep, LogisticDiagBeatsVanillaInMedian) {
  RunConfig c;
  c.problem = ProblemKind::logistic;
  c.train_path = kData + "/liver-disorders_scale.train";
  c.val_path = kData + "/liver-disorders_scale.val";
  c.strategies = {Strategy::vanilla, Strategy::diag};
  c.y_low = 3;
  c.y_high = 6;
  c.trials = 10;
  c.seed = 1;
  const EfficiencyResult r = run_efficiency_sweep(c);
  std::vector<double> v, d;
  for (const EfficiencyRow& row : r.rows) (row.strategy == "vanilla" ? v : d).push_back(row.c_y);
  std::sort(v.begin(), v.end());
  std::sort(d.begin(), d.end());
  EXPECT_LT(d[4] + d[5], v[4] + v[5]);
}

TEST(Slope, SyntheticLinearAndQuadratic) {
  EXPECT_NEAR(fit_loglog_slope(synthetic(1.0)), 1.0, 1e-12);
  EXPECT_NEAR(fit_loglog_slope(synthetic(2.0)), 2.0, 1e-12);
}

TEST(Slope, FloorAndInsufficientData) {
  DecayTrace t = synthetic(2.0);  // hyper errors 1e-2 .. 1e-12
  EXPECT_NEAR(fit_loglog_slope(t, 1e-9), 2.0, 1e-12);
  EXPECT_THROW(fit_loglog_slope(t, 1e-5), InsufficientDataError);
  DecayTrace flat;
  for (int k = 0; k < 4; ++k) flat.rows.push_back({k, 0.1, 0.1});
  EXPECT_THROW(fit_loglog_slope(flat), InsufficientDataError);
}

TEST(Csv, EmptyAndSingleRow) {
  DecayResult empty;
  EXPECT_EQ(emit_decay_csv(empty), "strategy,step,inner_error,hypergrad_error\n");
  DecayResult one;
  one.traces.push_back({"vanilla", {{0, 0.5, 0.25}}, {}, {}});
  EXPECT_EQ(emit_decay_csv(one), "strategy,step,inner_error,hypergrad_error\nvanilla,0,0.5,0.25\n");
  EfficiencyResult none;
  EXPECT_EQ(emit_efficiency_csv(none), "strategy,trial,seed,cy\n");
}

TEST(Csv, RoundTripIsBitExact) {
  RunConfig c = scalar_config();
  c.strategies = all_strategies();
  const DecayResult r = run_decay(c);
  const std::string text = emit_decay_csv(r);
  EXPECT_EQ(text.find('\r'), std::string::npos);
  const DecayResult back = parse_decay_csv(text);
  EXPECT_EQ(back.metadata, r.metadata);
  ASSERT_EQ(back.traces.size(), r.traces.size());
  for (std::size_t i = 0; i < r.traces.size(); ++i) {
    ASSERT_EQ(back.traces[i].rows.size(), r.traces[i].rows.size());
    for (std::size_t k = 0; k < r.traces[i].rows.size(); ++k) {
      EXPECT_EQ(back.traces[i].rows[k].inner_error, r.traces[i].rows[k].inner_error);
      EXPECT_EQ(back.traces[i].rows[k].hyper_error, r.traces[i].rows[k].hyper_error);
    }
  }
  EfficiencyResult e;
  e.metadata = {{"seed", "3"}};
  e.rows = {{"opt", 0, 3, 1.0 / 3.0}, {"newton", 1, 4, 2.5e-300}};
  const EfficiencyResult eb = parse_efficiency_csv(emit_efficiency_csv(e));
  ASSERT_EQ(eb.rows.size(), 2u);
  EXPECT_EQ(eb.rows[0].c_y, 1.0 / 3.0);
  EXPECT_EQ(eb.rows[1].c_y, 2.5e-300);
  EXPECT_EQ(eb.rows[1].seed, 4u);
}

TEST(Csv, MalformedInput) {
  EXPECT_THROW(parse_decay_csv(""), ParseError);
  EXPECT_THROW(parse_decay_csv("wrong,header\n"), ParseError);
  EXPECT_THROW(parse_decay_csv("strategy,step,inner_error,hypergrad_error\nv,0,1\n"), ParseError);
  EXPECT_THROW(parse_decay_csv("strategy,step,inner_error,hypergrad_error\nv,x,1,1\n"), ParseError);
  EXPECT_THROW(parse_decay_csv("# novalue\nstrategy,step,inner_error,hypergrad_error\n"), ParseError);
  EXPECT_THROW(parse_efficiency_csv("strategy,trial,seed,cy\nopt,0,1\n"), ParseError);
}

TEST(Svg, StructureAndDeterminism) {
  const std::vector<Series> two = {{"a", {{1e-1, 1e-2}, {1e-3, 1e-6}}}, {"b", {{1e-1, 1e-3}, {1e-3, 1e-9}}}};
  const std::string svg = render_svg(two, {});
  EXPECT_EQ(count(svg, "<polyline"), 2u);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find(">a<"), std::string::npos);
  EXPECT_NE(svg.find(">b<"), std::string::npos);
  EXPECT_EQ(svg, render_svg(two, {}));
}

TEST(Svg, LogTicksAtPowersOfTen) {
  const std::vector<Series> s = {{"wide", {{1e-15, 1e-15}, {1.0, 1.0}}}};
  const std::string svg = render_svg(s, {});
  // sixteen decades are labelled every second power
  for (int k = -15; k <= 0; k += 2) {
    EXPECT_NE(svg.find(">1e" + std::to_string(k) + "<"), std::string::npos) << k;
  }
  const std::vector<Series> narrow = {{"n", {{1e-3, 1e-3}, {1.0, 1.0}}}};
  const std::string small = render_svg(narrow, {});
  for (int k = -3; k <= 0; ++k) EXPECT_NE(small.find(">1e" + std::to_string(k) + "<"), std::string::npos) << k;
}

TEST(Svg, EmptyInputHasAxesOnly) {
  const std::string svg = render_svg({}, {});
  EXPECT_EQ(count(svg, "<polyline"), 0u);
  EXPECT_NE(svg.find("<line"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Svg, DecayAndEfficiencyRenderers) {
  RunConfig c = scalar_config();
  const DecayResult r = run_decay(c);
  EXPECT_EQ(count(render_decay_svg(r), "<polyline"), 2u);
  EXPECT_EQ(render_decay_svg(r), render_decay_svg(run_decay(c)));
}

TEST(WriteFile, BadPathIsDataError) {
  EXPECT_THROW(write_file("/nonexistent-dir/x.csv", "a"), DataError);
  const std::string path = testing::TempDir() + "/hypergrad_write.txt";
  write_file(path, "abc\n");
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  EXPECT_EQ(buf.str(), "abc\n");
  std::remove(path.c_str());
}
