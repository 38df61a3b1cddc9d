// SPDX-License-Identifier: Apache-2.0

#include "iacell/experiment.hpp"

#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <variant>

namespace iacell {
namespace {

ExperimentSpec parse(const std::string& text) {
  std::istringstream is(text);
  return parse_experiment(is, "test.ini");
}

void expect_parse_error(const std::string& text, const std::string& needle) {
  try {
    parse(text);
    ADD_FAILURE() << "expected a parse error mentioning '" << needle << "'";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos)
        << "actual message: " << e.what();
  }
}

constexpr const char* kFullConfig = R"(
# demo sweep
[scenario]
id = demo
cells = 2
ms_per_cell = 2
bs_antennas = 4, 5
ms_antennas = 2            # broadcast to every MS
max_streams = 1, 1, 2, 1
topology = full

[experiment]
schemes = proposed, bl5
snr_db = 10, 20
seeds = 0:4
out = demo.csv
max_iters = 123
rel_tol = 1e-8
)";

TEST(ConfigParser, ReadsEveryField) {
  const ExperimentSpec spec = parse(kFullConfig);
  EXPECT_EQ(spec.scenario_id, "demo");
  EXPECT_EQ(spec.scenario.num_bs, 2);
  EXPECT_EQ(spec.scenario.ms_per_bs, 2);
  EXPECT_EQ(spec.scenario.bs_antennas, (std::vector<int>{4, 5}));
  EXPECT_EQ(spec.scenario.ms_antennas, (std::vector<int>{2, 2, 2, 2}));
  EXPECT_EQ(spec.scenario.max_streams, (std::vector<int>{1, 1, 2, 1}));
  EXPECT_TRUE(std::holds_alternative<FullyConnected>(spec.scenario.topology));
  ASSERT_EQ(spec.schemes.size(), 2u);
  EXPECT_EQ(spec.schemes[0], Scheme::kProposed);
  EXPECT_EQ(spec.schemes[1], Scheme::kBl5);
  EXPECT_EQ(spec.snr_grid_db, (std::vector<double>{10.0, 20.0}));
  EXPECT_EQ(spec.seeds,
            (std::vector<std::uint64_t>{0, 1, 2, 3, 4}));
  EXPECT_EQ(spec.output_path, "demo.csv");
  EXPECT_EQ(spec.suppress.max_iters, 123);
  EXPECT_DOUBLE_EQ(spec.suppress.rel_tol, 1e-8);
}

TEST(ConfigParser, ReadsSymmetricTopology) {
  const ExperimentSpec spec = parse(R"(
[scenario]
cells = 6
ms_per_cell = 2
bs_antennas = 4
ms_antennas = 2
max_streams = 1
topology = symmetric
reach = 2
direct_rank = 2
cross_rank = 1
basis_seed = 9

[experiment]
schemes = proposed
snr_db = 30
seeds = 1, 5:6
)");
  const auto* sym = std::get_if<SymmetricTopology>(&spec.scenario.topology);
  ASSERT_NE(sym, nullptr);
  EXPECT_EQ(sym->J, 2);
  EXPECT_EQ(sym->R1, 2);
  EXPECT_EQ(sym->R2, 1);
  EXPECT_EQ(sym->basis_seed, 9u);
  EXPECT_EQ(spec.seeds, (std::vector<std::uint64_t>{1, 5, 6}));
}

TEST(ConfigParser, ReadsGeometricTopologyAndDefaultSeeds) {
  const ExperimentSpec spec = parse(R"(
[scenario]
cells = 3
ms_per_cell = 2
bs_antennas = 8
ms_antennas = 4
max_streams = 2
topology = geometric
connect_radius_km = 12.5
scatter_radius_km = 2.5
area_km = 25
pathloss_exp = 2

[experiment]
schemes = proposed, bl1
snr_db = 30
)");
  const auto* geo = std::get_if<GeometricTopology>(&spec.scenario.topology);
  ASSERT_NE(geo, nullptr);
  EXPECT_DOUBLE_EQ(geo->L_km, 12.5);
  EXPECT_DOUBLE_EQ(geo->S_km, 2.5);
  EXPECT_DOUBLE_EQ(geo->area_km, 25.0);
  EXPECT_DOUBLE_EQ(geo->pathloss_exp, 2.0);
  ASSERT_EQ(spec.seeds.size(), 50u);  // default seed range
  EXPECT_EQ(spec.seeds.front(), 0u);
  EXPECT_EQ(spec.seeds.back(), 49u);
}

TEST(ConfigParser, ReportsPreciseErrors) {
  const std::string base = R"(
[scenario]
cells = 2
ms_per_cell = 1
bs_antennas = 2
ms_antennas = 2
max_streams = 1
topology = full

[experiment]
schemes = proposed
snr_db = 10
)";
  expect_parse_error("cells = 2\n", "key outside of any [section]");
  expect_parse_error("[scenario]\ncells = 2\ncells = 3\n",
                     "duplicate key 'cells' (first on line 2)");
  {
    std::string text = base;
    text.replace(text.find("cells = 2"), 9, "cells = two");
    expect_parse_error(text, "expected an integer");
  }
  expect_parse_error("[scenario]\n[experiment]\n",
                     "missing required key 'cells'");
  expect_parse_error(base + "[bogus]\n", "unknown section [bogus]");
  expect_parse_error(base + "unmatched\n", "expected 'key = value'");
  {
    std::string text = base;
    text.insert(text.find("[experiment]"), "oops = 1\n");
    expect_parse_error(text, "unknown key 'oops' in [scenario]");
  }
  {
    std::string text = base;
    text.replace(text.find("schemes = proposed"), 18, "schemes = warpdrive");
    expect_parse_error(text, "unknown scheme 'warpdrive'");
  }
  {
    std::string text = base;
    text.replace(text.find("snr_db = 10"), 11, "snr_db = 10, 10");
    expect_parse_error(text, "ascending");
  }
  expect_parse_error(base + "seeds = 1,,2\n", "empty entry in 'seeds'");
  expect_parse_error(base + "seeds = 5:3\n", "bad seed range");
}

ExperimentSpec tiny_sweep_spec() {
  return parse(R"(
[scenario]
id = tiny
cells = 2
ms_per_cell = 1
bs_antennas = 2
ms_antennas = 2
max_streams = 1
topology = full

[experiment]
schemes = proposed, bl5
snr_db = 10, 20
seeds = 0:1
max_iters = 300
)");
}

TEST(Sweep, ProducesOneRowPerSchemeSeedSnr) {
  const ExperimentSpec spec = tiny_sweep_spec();
  const SweepResult result = run_sweep(spec, 1);
  EXPECT_TRUE(result.failures.empty())
      << (result.failures.empty() ? "" : result.failures.front());
  ASSERT_EQ(result.rows.size(), 8u);  // 2 schemes x 2 seeds x 2 SNR points
  // Task order: scheme-major, then seed, then SNR.
  EXPECT_EQ(result.rows[0].scheme, Scheme::kProposed);
  EXPECT_EQ(result.rows[0].seed, 0u);
  EXPECT_DOUBLE_EQ(result.rows[0].snr_db, 10.0);
  EXPECT_DOUBLE_EQ(result.rows[1].snr_db, 20.0);
  EXPECT_EQ(result.rows[2].seed, 1u);
  EXPECT_EQ(result.rows[4].scheme, Scheme::kBl5);
  for (const SweepRow& row : result.rows) {
    EXPECT_EQ(row.scenario_id, "tiny");
    EXPECT_EQ(row.streams, 2);
    EXPECT_GT(row.sum_rate_bits, 0.0);
  }
}

TEST(Sweep, OutputIsIdenticalAcrossRunsAndWorkerCounts) {
  const ExperimentSpec spec = tiny_sweep_spec();
  const auto render = [&](int workers) {
    std::ostringstream os;
    write_samples_csv(os, run_sweep(spec, workers));
    return os.str();
  };
  const std::string serial = render(1);
  EXPECT_EQ(serial, render(1));
  EXPECT_EQ(serial, render(4));
  EXPECT_NE(serial.find("scenario,scheme,seed,snr_db,"), std::string::npos);
}

TEST(Sweep, SamplesCsvUsesStableFormatting) {
  SweepResult result;
  SweepRow row;
  row.scenario_id = "x";
  row.scheme = Scheme::kBl4;
  row.seed = 7;
  row.snr_db = 40.0;
  row.sum_rate_bits = 1.5;
  row.streams = 6;
  row.residual_leakage = 1.23456e-4;
  result.rows.push_back(row);
  std::ostringstream os;
  write_samples_csv(os, result);
  EXPECT_EQ(os.str(),
            "scenario,scheme,seed,snr_db,sum_rate_bits,streams,"
            "residual_leakage\n"
            "x,bl4,7,40.00,1.5,6,1.234560e-04\n");
}

TEST(Sweep, SummaryAveragesSeedsAndReportsSlope) {
  ExperimentSpec spec;
  spec.scenario = make_uniform_config(1, 1, 1, 1, 1);
  spec.schemes = {Scheme::kProposed};
  spec.snr_grid_db = {0.0, 10.0};
  spec.seeds = {0, 1};
  SweepResult result;
  const double rates[2][2] = {{1.0, 3.0}, {2.0, 6.0}};  // [snr][seed]
  for (std::uint64_t seed = 0; seed < 2; ++seed) {
    for (int si = 0; si < 2; ++si) {
      SweepRow row;
      row.scheme = Scheme::kProposed;
      row.seed = seed;
      row.snr_db = spec.snr_grid_db[static_cast<size_t>(si)];
      row.sum_rate_bits = rates[si][seed];
      row.streams = 1;
      result.rows.push_back(row);
    }
  }
  std::ostringstream os;
  write_summary_csv(os, spec, result);
  // Means: 2 at 0 dB, 4 at 10 dB; slope = 2 / log2(10) bits per doubling.
  EXPECT_EQ(os.str(),
            "scenario,scheme,snr_db,mean_rate_bits,mean_streams,slope_vs_prev\n"
            "scenario,proposed,0.00,2,1.0000,\n"
            "scenario,proposed,10.00,4,1.0000,0.602060\n");
}

TEST(Sweep, RejectsInvalidSpecsUpFront) {
  ExperimentSpec spec;
  spec.scenario = make_uniform_config(2, 1, 2, 2, 1);
  spec.snr_grid_db = {10.0};
  spec.seeds = {0};
  EXPECT_THROW(run_sweep(spec, 1), std::invalid_argument);  // no schemes
  spec.schemes = {Scheme::kBl5, Scheme::kBl5};
  EXPECT_THROW(run_sweep(spec, 1), std::invalid_argument);  // duplicate
  spec.schemes = {Scheme::kBl5};
  spec.seeds.clear();
  EXPECT_THROW(run_sweep(spec, 1), std::invalid_argument);  // no seeds
}

}  // namespace
}  // namespace iacell
