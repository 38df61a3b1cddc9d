// SPDX-License-Identifier: Apache-2.0
//
// iacell — command line front end for the alignment toolkit. Subcommands:
//
//   feasibility    decide a counting instance (file format in the README)
//   assign         compute a stream assignment for a scenario config
//   dof-bound      per-user stream bound for symmetric networks
//   sweep          run schemes over seeds and SNRs, write CSV tables
//   trace          per-half-sweep leakage of one design run
//   dump-channels  write one fading realisation as text
//
// Every subcommand exits 0 on success and 1 on invalid input; `feasibility`
// treats both verdicts as success.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "iacell/allocator.hpp"
#include "iacell/evaluation.hpp"
#include "iacell/experiment.hpp"
#include "iacell/feasibility.hpp"
#include "iacell/network.hpp"
#include "iacell/pipeline.hpp"

namespace {

// Reads the whitespace-separated instance format:
//   cells 2
//   per_cell 1
//   v_t 0 0
//   v_r 0 0
//   c 0 1
//   c 1 0
// Each `c` row lists the constraints the row's receiver owes to every
// transmitter. '#' starts a comment until end of line.
iacell::FeasibilityInstance read_instance(std::istream& is) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(is, line)) {
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream parts(line);
    std::string tok;
    while (parts >> tok) tokens.push_back(tok);
  }
  size_t pos = 0;
  const auto expect = [&](const std::string& word) {
    if (pos >= tokens.size() || tokens[pos] != word) {
      throw std::runtime_error("instance: expected '" + word + "' at token " +
                               std::to_string(pos + 1));
    }
    ++pos;
  };
  const auto number = [&]() {
    if (pos >= tokens.size()) {
      throw std::runtime_error("instance: unexpected end of file");
    }
    size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(tokens[pos], &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tokens[pos].size()) {
      throw std::runtime_error("instance: expected a number, got '" +
                               tokens[pos] + "'");
    }
    ++pos;
    return v;
  };

  iacell::FeasibilityInstance inst;
  expect("cells");
  inst.cells = static_cast<int>(number());
  expect("per_cell");
  inst.per_cell = static_cast<int>(number());
  if (inst.cells < 1 || inst.per_cell < 1) {
    throw std::runtime_error("instance: cells and per_cell must be >= 1");
  }
  const int n = inst.size();
  inst.v_t.set_size(static_cast<arma::uword>(n));
  inst.v_r.set_size(static_cast<arma::uword>(n));
  inst.c.set_size(static_cast<arma::uword>(n), static_cast<arma::uword>(n));
  expect("v_t");
  for (int i = 0; i < n; ++i) inst.v_t(static_cast<arma::uword>(i)) = number();
  expect("v_r");
  for (int i = 0; i < n; ++i) inst.v_r(static_cast<arma::uword>(i)) = number();
  for (int u = 0; u < n; ++u) {
    expect("c");
    for (int w = 0; w < n; ++w) {
      inst.c(static_cast<arma::uword>(u), static_cast<arma::uword>(w)) =
          number();
    }
  }
  if (pos != tokens.size()) {
    throw std::runtime_error("instance: trailing tokens after the c matrix");
  }
  iacell::validate(inst);
  return inst;
}

iacell::ExperimentSpec load_experiment(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config '" + path + "'");
  return iacell::parse_experiment(is, path);
}

// Output file or stdout when the path is empty or "-".
class OutputTarget {
 public:
  explicit OutputTarget(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_.open(path);
    if (!file_) throw std::runtime_error("cannot write '" + path + "'");
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

void print_pressures(std::ostream& os, const iacell::FeasibilityResult& res) {
  os << "steps " << res.steps << '\n' << "p_t";
  for (arma::uword i = 0; i < res.p_t.n_elem; ++i) os << ' ' << res.p_t(i);
  os << '\n' << "p_r";
  for (arma::uword i = 0; i < res.p_r.n_elem; ++i) os << ' ' << res.p_r(i);
  os << '\n';
}

int cmd_feasibility(const std::string& path, bool check_brute) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open instance '" + path + "'");
  const iacell::FeasibilityInstance inst = read_instance(is);
  const iacell::FeasibilityResult res = iacell::feasible_tree(inst);
  std::cout << (res.feasible ? "FEASIBLE" : "INFEASIBLE") << '\n';
  print_pressures(std::cout, res);
  if (check_brute) {
    const bool brute = iacell::feasible_bruteforce(inst);
    std::cout << "bruteforce " << (brute ? "FEASIBLE" : "INFEASIBLE") << '\n';
    if (brute != res.feasible) {
      std::cerr << "error: tree and brute force disagree\n";
      return 2;
    }
  }
  return 0;
}

int cmd_assign(const std::string& path, std::uint64_t seed, bool full) {
  const iacell::ExperimentSpec spec = load_experiment(path);
  const iacell::NetworkConfig& cfg = spec.scenario;
  iacell::StreamAssignment d;
  if (full) {
    d = iacell::assign_greedy_full(cfg);
  } else {
    const iacell::ConnectivitySpec topo = iacell::build_connectivity(cfg, seed);
    d = iacell::assign_greedy_partial(topo).d;
  }
  std::cout << "cell ms streams\n";
  for (int g = 0; g < cfg.num_bs; ++g) {
    for (int k = 0; k < cfg.ms_per_bs; ++k) {
      std::cout << g << ' ' << k << ' ' << d.streams(g, k) << '\n';
    }
  }
  std::cout << "total " << d.total() << '\n';
  return 0;
}

int cmd_dof_bound(const iacell::DoFBoundQuery& query, bool check) {
  const int bound = iacell::dof_bound(query);
  std::cout << bound << '\n';
  if (check) {
    const int reference = iacell::dof_bound_enumerate(query);
    if (reference != bound) {
      std::cerr << "error: enumeration gives " << reference << '\n';
      return 2;
    }
    std::cerr << "enumeration agrees\n";
  }
  return 0;
}

int cmd_sweep(const std::string& path, const std::string& out,
              const std::string& summary_out, int workers,
              const std::string& seeds_override,
              const std::string& snr_override) {
  iacell::ExperimentSpec spec = load_experiment(path);
  if (!seeds_override.empty()) {
    spec.seeds = iacell::detail::parse_seed_field(
        "--seeds", iacell::detail::ConfigValue{seeds_override, 0});
  }
  if (!snr_override.empty()) {
    spec.snr_grid_db.clear();
    for (const std::string& s : iacell::detail::split_list(snr_override)) {
      spec.snr_grid_db.push_back(iacell::detail::parse_real("--snr", 0, s));
    }
  }
  iacell::validate(spec);
  const iacell::SweepResult result = iacell::run_sweep(spec, workers);
  const std::string sample_path = out.empty() ? spec.output_path : out;
  {
    OutputTarget target(sample_path);
    iacell::write_samples_csv(target.stream(), result);
  }
  if (!summary_out.empty()) {
    OutputTarget target(summary_out);
    iacell::write_summary_csv(target.stream(), spec, result);
  }
  for (const std::string& f : result.failures) {
    std::cerr << "failed: " << f << '\n';
  }
  if (result.failed_realizations > 0) {
    std::cerr << result.failed_realizations << " of "
              << spec.schemes.size() * spec.seeds.size()
              << " realisations failed\n";
  }
  return 0;
}

int cmd_trace(const std::string& path, const std::string& scheme_name,
              std::uint64_t seed, const std::string& out) {
  const iacell::ExperimentSpec spec = load_experiment(path);
  const iacell::Scheme scheme = iacell::parse_scheme(scheme_name);
  const iacell::ConnectivitySpec topo =
      iacell::build_connectivity(spec.scenario, seed);
  const iacell::ChannelSet ch =
      iacell::sample_channels(topo, iacell::mix_seed(seed, 1));
  const iacell::SchemeResult result = iacell::run_scheme(
      scheme, ch, iacell::mix_seed(seed, 2), spec.suppress);
  OutputTarget target(out);
  target.stream() << "half_sweep,leakage\n";
  for (size_t i = 0; i < result.report.trace.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12e", result.report.trace[i]);
    target.stream() << i << ',' << buf << '\n';
  }
  std::cerr << "streams " << result.transceivers.d.total() << ", sweeps "
            << result.report.iterations << ", "
            << (result.report.converged ? "converged" : "iteration cap hit")
            << '\n';
  return 0;
}

int cmd_dump_channels(const std::string& path, std::uint64_t seed,
                      const std::string& out) {
  const iacell::ExperimentSpec spec = load_experiment(path);
  const iacell::ConnectivitySpec topo =
      iacell::build_connectivity(spec.scenario, seed);
  const iacell::ChannelSet ch =
      iacell::sample_channels(topo, iacell::mix_seed(seed, 1));
  OutputTarget target(out);
  iacell::write_channels(target.stream(), ch);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interference alignment toolkit for partially connected "
               "cellular networks"};
  app.require_subcommand(1);

  std::string instance_path;
  bool check_brute = false;
  CLI::App* feas = app.add_subcommand(
      "feasibility", "Decide a stream-counting instance");
  feas->add_option("--instance", instance_path, "instance file")->required();
  feas->add_flag("--check-brute", check_brute,
                 "cross-check with the exponential subset oracle");

  std::string assign_config;
  std::uint64_t assign_seed = 0;
  bool assign_full = false;
  CLI::App* assign = app.add_subcommand(
      "assign", "Stream assignment for a scenario config");
  assign->add_option("--config", assign_config, "experiment config")
      ->required();
  assign->add_option("--seed", assign_seed,
                     "placement seed for geometric scenarios");
  assign->add_flag("--full", assign_full,
                   "use the full-connectivity counting rules");

  iacell::DoFBoundQuery query;
  bool check_bound = false;
  CLI::App* bound = app.add_subcommand(
      "dof-bound", "Per-user stream bound for symmetric networks");
  bound->add_option("--G", query.G, "number of cells")->required();
  bound->add_option("--K", query.K, "users per cell")->required();
  bound->add_option("--J", query.J, "connection reach in cells")->required();
  bound->add_option("--Nt", query.Nt, "BS antennas")->required();
  bound->add_option("--Nr", query.Nr, "MS antennas")->required();
  bound->add_option("--R1", query.R1, "direct-link rank")->required();
  bound->add_option("--R2", query.R2, "cross-link rank")->required();
  bound->add_option("--df", query.d_f, "requested streams per user (0 = max)");
  bound->add_flag("--check", check_bound, "cross-check by full enumeration");

  std::string sweep_config, sweep_out, sweep_summary, sweep_seeds, sweep_snr;
  int sweep_workers = 0;
  CLI::App* sweep = app.add_subcommand(
      "sweep", "Run schemes over seeds and SNR points");
  sweep->add_option("--config", sweep_config, "experiment config")->required();
  sweep->add_option("--out", sweep_out, "samples CSV ('-' = stdout)");
  sweep->add_option("--summary-out", sweep_summary, "summary CSV");
  sweep->add_option("--workers", sweep_workers, "thread count (0 = auto)");
  sweep->add_option("--seeds", sweep_seeds, "seed list override, e.g. 0:49");
  sweep->add_option("--snr", sweep_snr, "SNR grid override, e.g. 40,60");

  std::string trace_config, trace_scheme = "proposed", trace_out;
  std::uint64_t trace_seed = 0;
  CLI::App* trace = app.add_subcommand(
      "trace", "Leakage after every half-sweep of one design run");
  trace->add_option("--config", trace_config, "experiment config")->required();
  trace->add_option("--scheme", trace_scheme, "proposed, bl1 or bl2");
  trace->add_option("--seed", trace_seed, "realisation seed");
  trace->add_option("--out", trace_out, "output CSV ('-' = stdout)");

  std::string dump_config, dump_out;
  std::uint64_t dump_seed = 0;
  CLI::App* dump = app.add_subcommand(
      "dump-channels", "Write one fading realisation as text");
  dump->add_option("--config", dump_config, "experiment config")->required();
  dump->add_option("--seed", dump_seed, "realisation seed");
  dump->add_option("--out", dump_out, "output path ('-' = stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (feas->parsed()) return cmd_feasibility(instance_path, check_brute);
    if (assign->parsed()) {
      return cmd_assign(assign_config, assign_seed, assign_full);
    }
    if (bound->parsed()) return cmd_dof_bound(query, check_bound);
    if (sweep->parsed()) {
      return cmd_sweep(sweep_config, sweep_out, sweep_summary, sweep_workers,
                       sweep_seeds, sweep_snr);
    }
    if (trace->parsed()) {
      return cmd_trace(trace_config, trace_scheme, trace_seed, trace_out);
    }
    if (dump->parsed()) {
      return cmd_dump_channels(dump_config, dump_seed, dump_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
