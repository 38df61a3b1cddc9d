// SPDX-License-Identifier: Apache-2.0
//
// Experiment harness: a sectioned key=value config format describing one
// scenario plus the sweep to run on it, a deterministic multi-threaded
// sweep executor, and CSV writers for the per-sample and per-mean tables.
// Results are merged in task order, so the output is byte-identical across
// runs and across worker counts.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "iacell/network.hpp"
#include "iacell/pipeline.hpp"
#include "iacell/rng.hpp"
#include "iacell/transceiver.hpp"

namespace iacell {

struct ExperimentSpec {
  std::string scenario_id = "scenario";
  NetworkConfig scenario;
  std::vector<Scheme> schemes;
  std::vector<double> snr_grid_db;
  std::vector<std::uint64_t> seeds;
  std::string output_path;  // optional default for the CLI --out flag
  SuppressOptions suppress;
};

inline void validate(const ExperimentSpec& spec) {
  validate(spec.scenario);
  if (spec.schemes.empty()) {
    throw std::invalid_argument("experiment: scheme list is empty");
  }
  for (size_t i = 0; i < spec.schemes.size(); ++i) {
    for (size_t j = i + 1; j < spec.schemes.size(); ++j) {
      if (spec.schemes[i] == spec.schemes[j]) {
        throw std::invalid_argument("experiment: duplicate scheme '" +
                                    std::string(scheme_name(spec.schemes[i])) +
                                    "'");
      }
    }
  }
  if (spec.snr_grid_db.empty()) {
    throw std::invalid_argument("experiment: SNR grid is empty");
  }
  for (size_t i = 1; i < spec.snr_grid_db.size(); ++i) {
    if (!(spec.snr_grid_db[i] > spec.snr_grid_db[i - 1])) {
      throw std::invalid_argument("experiment: SNR grid must be ascending");
    }
  }
  if (spec.seeds.empty()) {
    throw std::invalid_argument("experiment: seed list is empty");
  }
}

namespace detail {

// One raw config entry, kept with its line number for diagnostics.
struct ConfigValue {
  std::string text;
  int line = 0;
};

using ConfigSection = std::map<std::string, ConfigValue>;

inline std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= s.size()) {
    const size_t comma = s.find(',', start);
    const size_t end = comma == std::string::npos ? s.size() : comma;
    out.push_back(trim(s.substr(start, end - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] inline void config_error(const std::string& name, int line,
                                      const std::string& message) {
  throw std::runtime_error(name + ":" + std::to_string(line) + ": " + message);
}

inline long long parse_int(const std::string& name, int line,
                           const std::string& text) {
  size_t used = 0;
  long long value = 0;
  try {
    value = std::stoll(text, &used);
  } catch (const std::exception&) {
    config_error(name, line, "expected an integer, got '" + text + "'");
  }
  if (used != text.size()) {
    config_error(name, line, "trailing characters in integer '" + text + "'");
  }
  return value;
}

inline double parse_real(const std::string& name, int line,
                         const std::string& text) {
  size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    config_error(name, line, "expected a number, got '" + text + "'");
  }
  if (used != text.size()) {
    config_error(name, line, "trailing characters in number '" + text + "'");
  }
  return value;
}

// Reads `[section]` / `key = value` lines with '#' comments into per-section
// maps, rejecting duplicate keys and anything outside a section.
inline std::map<std::string, ConfigSection> parse_sections(
    std::istream& is, const std::string& name) {
  std::map<std::string, ConfigSection> sections;
  std::string current;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string text = trim(line);
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') config_error(name, lineno, "unterminated section header");
      current = trim(text.substr(1, text.size() - 2));
      if (current.empty()) config_error(name, lineno, "empty section name");
      sections[current];  // a section may legitimately stay empty
      continue;
    }
    const size_t eq = text.find('=');
    if (eq == std::string::npos) {
      config_error(name, lineno, "expected 'key = value', got '" + text + "'");
    }
    if (current.empty()) {
      config_error(name, lineno, "key outside of any [section]");
    }
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty()) config_error(name, lineno, "empty key");
    auto inserted = sections[current].emplace(key, ConfigValue{value, lineno});
    if (!inserted.second) {
      config_error(name, lineno,
                   "duplicate key '" + key + "' (first on line " +
                       std::to_string(inserted.first->second.line) + ")");
    }
  }
  return sections;
}

// Removes and returns a key from a section, if present.
inline bool take(ConfigSection& sec, const std::string& key, ConfigValue* out) {
  auto it = sec.find(key);
  if (it == sec.end()) return false;
  *out = it->second;
  sec.erase(it);
  return true;
}

inline ConfigValue require(const std::string& name, ConfigSection& sec,
                           const std::string& section,
                           const std::string& key) {
  ConfigValue v;
  if (!take(sec, key, &v)) {
    config_error(name, 0, "missing required key '" + key + "' in [" +
                              section + "]");
  }
  return v;
}

// Scalar-or-list integer field broadcast to `count` entries.
inline std::vector<int> parse_int_field(const std::string& name,
                                        const ConfigValue& v, size_t count,
                                        const std::string& key) {
  const std::vector<std::string> parts = split_list(v.text);
  std::vector<int> out;
  for (const std::string& p : parts) {
    if (p.empty()) config_error(name, v.line, "empty entry in '" + key + "'");
    out.push_back(static_cast<int>(parse_int(name, v.line, p)));
  }
  if (out.size() == 1) out.assign(count, out.front());
  if (out.size() != count) {
    config_error(name, v.line,
                 "'" + key + "' needs 1 or " + std::to_string(count) +
                     " entries, got " + std::to_string(out.size()));
  }
  return out;
}

// Seed list entries are either single values or inclusive 'first:last'
// ranges, e.g. "0:49, 100".
inline std::vector<std::uint64_t> parse_seed_field(const std::string& name,
                                                   const ConfigValue& v) {
  std::vector<std::uint64_t> out;
  for (const std::string& p : split_list(v.text)) {
    if (p.empty()) config_error(name, v.line, "empty entry in 'seeds'");
    const size_t colon = p.find(':');
    if (colon == std::string::npos) {
      const long long s = parse_int(name, v.line, p);
      if (s < 0) config_error(name, v.line, "seeds must be non-negative");
      out.push_back(static_cast<std::uint64_t>(s));
      continue;
    }
    const long long first = parse_int(name, v.line, trim(p.substr(0, colon)));
    const long long last = parse_int(name, v.line, trim(p.substr(colon + 1)));
    if (first < 0 || last < first) {
      config_error(name, v.line, "bad seed range '" + p + "'");
    }
    for (long long s = first; s <= last; ++s) {
      out.push_back(static_cast<std::uint64_t>(s));
    }
  }
  return out;
}

inline void reject_leftovers(const std::string& name,
                             const ConfigSection& sec,
                             const std::string& section) {
  if (sec.empty()) return;
  const auto& first = *sec.begin();
  config_error(name, first.second.line,
               "unknown key '" + first.first + "' in [" + section + "]");
}

}  // namespace detail

// Parses the experiment config format:
//
//   [scenario]
//   id = fig_full            # optional label for the CSV
//   cells = 3
//   ms_per_cell = 2
//   bs_antennas = 5          # scalar or one entry per BS
//   ms_antennas = 2          # scalar or one entry per MS
//   max_streams = 1          # scalar or one entry per MS
//   topology = full          # full | symmetric | geometric
//   reach = 1                # symmetric only: J
//   direct_rank = 2          # symmetric only: R1
//   cross_rank = 1           # symmetric only: R2
//   basis_seed = 0           # symmetric only: 0 = canonical basis
//   connect_radius_km = 15   # geometric only: L
//   scatter_radius_km = 3    # geometric only: S
//   area_km = 30             # geometric only
//   pathloss_exp = 0         # geometric only
//
//   [experiment]
//   schemes = proposed, bl1, bl2, bl4, bl5
//   snr_db = 40, 60          # ascending
//   seeds = 0:49             # optional, default 0:49
//   out = results.csv        # optional
//   max_iters = 2000         # optional alignment iteration cap
//   rel_tol = 1e-10          # optional alignment stop threshold
//
// `name` only labels error messages (usually the file path).
inline ExperimentSpec parse_experiment(std::istream& is,
                                       const std::string& name) {
  using detail::ConfigValue;
  auto sections = detail::parse_sections(is, name);
  auto scen_it = sections.find("scenario");
  if (scen_it == sections.end()) {
    detail::config_error(name, 0, "missing [scenario] section");
  }
  auto exp_it = sections.find("experiment");
  if (exp_it == sections.end()) {
    detail::config_error(name, 0, "missing [experiment] section");
  }
  for (const auto& sec : sections) {
    if (sec.first != "scenario" && sec.first != "experiment") {
      detail::config_error(name, 0, "unknown section [" + sec.first + "]");
    }
  }
  detail::ConfigSection& scen = scen_it->second;
  detail::ConfigSection& exp = exp_it->second;

  ExperimentSpec spec;
  ConfigValue v;
  if (detail::take(scen, "id", &v)) spec.scenario_id = v.text;

  NetworkConfig& cfg = spec.scenario;
  v = detail::require(name, scen, "scenario", "cells");
  cfg.num_bs = static_cast<int>(detail::parse_int(name, v.line, v.text));
  v = detail::require(name, scen, "scenario", "ms_per_cell");
  cfg.ms_per_bs = static_cast<int>(detail::parse_int(name, v.line, v.text));
  if (cfg.num_bs < 1 || cfg.ms_per_bs < 1) {
    detail::config_error(name, v.line, "cells and ms_per_cell must be >= 1");
  }
  const size_t bs_count = static_cast<size_t>(cfg.num_bs);
  const size_t ms_count = static_cast<size_t>(cfg.num_bs * cfg.ms_per_bs);
  v = detail::require(name, scen, "scenario", "bs_antennas");
  cfg.bs_antennas = detail::parse_int_field(name, v, bs_count, "bs_antennas");
  v = detail::require(name, scen, "scenario", "ms_antennas");
  cfg.ms_antennas = detail::parse_int_field(name, v, ms_count, "ms_antennas");
  v = detail::require(name, scen, "scenario", "max_streams");
  cfg.max_streams = detail::parse_int_field(name, v, ms_count, "max_streams");

  v = detail::require(name, scen, "scenario", "topology");
  if (v.text == "full") {
    cfg.topology = FullyConnected{};
  } else if (v.text == "symmetric") {
    SymmetricTopology topo;
    ConfigValue f;
    if (detail::take(scen, "reach", &f)) {
      topo.J = static_cast<int>(detail::parse_int(name, f.line, f.text));
    }
    if (detail::take(scen, "direct_rank", &f)) {
      topo.R1 = static_cast<int>(detail::parse_int(name, f.line, f.text));
    }
    if (detail::take(scen, "cross_rank", &f)) {
      topo.R2 = static_cast<int>(detail::parse_int(name, f.line, f.text));
    }
    if (detail::take(scen, "basis_seed", &f)) {
      topo.basis_seed = static_cast<std::uint64_t>(
          detail::parse_int(name, f.line, f.text));
    }
    cfg.topology = topo;
  } else if (v.text == "geometric") {
    GeometricTopology topo;
    ConfigValue f;
    if (detail::take(scen, "connect_radius_km", &f)) {
      topo.L_km = detail::parse_real(name, f.line, f.text);
    }
    if (detail::take(scen, "scatter_radius_km", &f)) {
      topo.S_km = detail::parse_real(name, f.line, f.text);
    }
    if (detail::take(scen, "area_km", &f)) {
      topo.area_km = detail::parse_real(name, f.line, f.text);
    }
    if (detail::take(scen, "pathloss_exp", &f)) {
      topo.pathloss_exp = detail::parse_real(name, f.line, f.text);
    }
    cfg.topology = topo;
  } else {
    detail::config_error(name, v.line, "unknown topology '" + v.text + "'");
  }
  detail::reject_leftovers(name, scen, "scenario");

  v = detail::require(name, exp, "experiment", "schemes");
  for (const std::string& s : detail::split_list(v.text)) {
    if (s.empty()) detail::config_error(name, v.line, "empty scheme entry");
    try {
      spec.schemes.push_back(parse_scheme(s));
    } catch (const std::invalid_argument& e) {
      detail::config_error(name, v.line, e.what());
    }
  }
  v = detail::require(name, exp, "experiment", "snr_db");
  for (const std::string& s : detail::split_list(v.text)) {
    if (s.empty()) detail::config_error(name, v.line, "empty SNR entry");
    spec.snr_grid_db.push_back(detail::parse_real(name, v.line, s));
  }
  if (detail::take(exp, "seeds", &v)) {
    spec.seeds = detail::parse_seed_field(name, v);
  } else {
    for (std::uint64_t s = 0; s < 50; ++s) spec.seeds.push_back(s);
  }
  if (detail::take(exp, "out", &v)) spec.output_path = v.text;
  if (detail::take(exp, "max_iters", &v)) {
    spec.suppress.max_iters =
        static_cast<int>(detail::parse_int(name, v.line, v.text));
  }
  if (detail::take(exp, "rel_tol", &v)) {
    spec.suppress.rel_tol = detail::parse_real(name, v.line, v.text);
  }
  detail::reject_leftovers(name, exp, "experiment");

  validate(spec);
  return spec;
}

struct SweepRow {
  std::string scenario_id;
  Scheme scheme = Scheme::kProposed;
  std::uint64_t seed = 0;
  double snr_db = 0.0;
  double sum_rate_bits = 0.0;
  int streams = 0;
  double residual_leakage = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;          // (scheme, seed, snr) in spec order
  std::vector<std::string> failures;   // human-readable, one per failed task
  int failed_realizations = 0;
};

// Runs every (scheme, seed) design task, evaluating each design over the
// whole SNR grid. Tasks execute on a work queue but results land in
// preallocated slots, so output order never depends on scheduling. A task
// that throws (e.g. an unsatisfiable scenario realisation) is reported in
// `failures` and skipped; everything else proceeds.
inline SweepResult run_sweep(const ExperimentSpec& spec, int workers = 0) {
  validate(spec);
  struct Task {
    Scheme scheme;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const Scheme scheme : spec.schemes) {
    for (const std::uint64_t seed : spec.seeds) tasks.push_back({scheme, seed});
  }
  std::vector<std::vector<SweepRow>> slot_rows(tasks.size());
  std::vector<std::string> slot_fail(tasks.size());

  std::atomic<size_t> next{0};
  auto run_task = [&](size_t index) {
    const Task& task = tasks[index];
    try {
      const ConnectivitySpec topo =
          build_connectivity(spec.scenario, task.seed);
      const ChannelSet ch = sample_channels(topo, mix_seed(task.seed, 1));
      const SchemeResult result =
          run_scheme(task.scheme, ch, mix_seed(task.seed, 2), spec.suppress);
      for (const double snr : spec.snr_grid_db) {
        const double power = std::pow(10.0, snr / 10.0);
        const ThroughputSample sample = evaluate_scheme(ch, result, power);
        SweepRow row;
        row.scenario_id = spec.scenario_id;
        row.scheme = task.scheme;
        row.seed = task.seed;
        row.snr_db = snr;
        row.sum_rate_bits = sample.sum_rate_bits;
        row.streams = result.transceivers.d.total();
        row.residual_leakage = sample.residual_leakage;
        slot_rows[index].push_back(std::move(row));
      }
    } catch (const std::exception& e) {
      slot_fail[index] = std::string(scheme_name(task.scheme)) + " seed " +
                         std::to_string(task.seed) + ": " + e.what();
    }
  };

  int thread_count = workers > 0
                         ? workers
                         : static_cast<int>(std::thread::hardware_concurrency());
  if (thread_count < 1) thread_count = 1;
  thread_count = std::min<int>(thread_count, static_cast<int>(tasks.size()));
  if (thread_count <= 1) {
    for (size_t i = 0; i < tasks.size(); ++i) run_task(i);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(thread_count));
    for (int t = 0; t < thread_count; ++t) {
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < tasks.size();
             i = next.fetch_add(1)) {
          run_task(i);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }

  SweepResult out;
  for (size_t i = 0; i < tasks.size(); ++i) {
    for (SweepRow& row : slot_rows[i]) out.rows.push_back(std::move(row));
    if (!slot_fail[i].empty()) {
      out.failures.push_back(std::move(slot_fail[i]));
      ++out.failed_realizations;
    }
  }
  return out;
}

namespace detail {

inline std::string format_real(double value, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, value);
  return buf;
}

}  // namespace detail

// One CSV row per (scheme, seed, SNR) sample.
inline void write_samples_csv(std::ostream& os, const SweepResult& result) {
  os << "scenario,scheme,seed,snr_db,sum_rate_bits,streams,residual_leakage\n";
  for (const SweepRow& row : result.rows) {
    os << row.scenario_id << ',' << scheme_name(row.scheme) << ',' << row.seed
       << ',' << detail::format_real(row.snr_db, "%.2f") << ','
       << detail::format_real(row.sum_rate_bits, "%.10g") << ',' << row.streams
       << ',' << detail::format_real(row.residual_leakage, "%.6e") << '\n';
  }
}

// Per-(scheme, SNR) means over seeds, plus the rate slope in bits per
// doubling of power between consecutive SNR points (blank on the first).
inline void write_summary_csv(std::ostream& os, const ExperimentSpec& spec,
                              const SweepResult& result) {
  os << "scenario,scheme,snr_db,mean_rate_bits,mean_streams,slope_vs_prev\n";
  for (const Scheme scheme : spec.schemes) {
    double prev_mean = 0.0;
    double prev_snr = 0.0;
    bool have_prev = false;
    for (const double snr : spec.snr_grid_db) {
      double rate_sum = 0.0;
      double stream_sum = 0.0;
      long long count = 0;
      for (const SweepRow& row : result.rows) {
        if (row.scheme == scheme && row.snr_db == snr) {
          rate_sum += row.sum_rate_bits;
          stream_sum += row.streams;
          ++count;
        }
      }
      if (count == 0) continue;  // every realisation of this scheme failed
      const double mean = rate_sum / static_cast<double>(count);
      os << spec.scenario_id << ',' << scheme_name(scheme) << ','
         << detail::format_real(snr, "%.2f") << ','
         << detail::format_real(mean, "%.10g") << ','
         << detail::format_real(stream_sum / static_cast<double>(count),
                                "%.4f")
         << ',';
      if (have_prev) {
        const double octaves = (snr - prev_snr) / 10.0 * std::log2(10.0);
        os << detail::format_real((mean - prev_mean) / octaves, "%.6f");
      }
      os << '\n';
      prev_mean = mean;
      prev_snr = snr;
      have_prev = true;
    }
  }
}

}  // namespace iacell
