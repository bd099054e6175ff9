#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qdband/io.hpp"
#include "qdband/mc.hpp"

namespace qdband::cli {

namespace detail {

//! Grid flag: "paper" (the canonical 199-point tabulation grid),
//! "uniform:<count>", or a path to a one-column file of grid points.
inline Grid parse_grid_spec(const std::string& spec) {
  if (spec == "paper") return Grid::standard();
  if (spec.rfind("uniform:", 0) == 0) {
    const std::string count_str = spec.substr(8);
    char* end = nullptr;
    const unsigned long count = std::strtoul(count_str.c_str(), &end, 10);
    if (end != count_str.c_str() + count_str.size() || count == 0) {
      throw std::invalid_argument("invalid grid spec: " + spec);
    }
    return Grid::equispaced(count);
  }
  return Grid(io::read_column_csv(spec, 1));
}

inline Bandwidth parse_bandwidth(const std::string& h_flag, std::size_t n) {
  if (h_flag == "auto") return default_bandwidth(n);
  char* end = nullptr;
  const double h = std::strtod(h_flag.c_str(), &end);
  if (end != h_flag.c_str() + h_flag.size() || end == h_flag.c_str()) {
    throw std::invalid_argument("invalid bandwidth: " + h_flag);
  }
  return Bandwidth(h, n);
}

inline std::vector<double> parse_real_list(const std::string& csv,
                                           const char* what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    std::size_t next = csv.find(',', pos);
    if (next == std::string::npos) next = csv.size();
    const std::string field = csv.substr(pos, next - pos);
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (field.empty() || end != field.c_str() + field.size()) {
      throw std::invalid_argument(std::string("invalid ") + what + " list: " +
                                  csv);
    }
    out.push_back(v);
    pos = next + 1;
  }
  if (out.empty()) {
    throw std::invalid_argument(std::string("empty ") + what + " list");
  }
  return out;
}

inline void write_manifest(const std::string& out_path,
                           const std::string& command,
                           nlohmann::ordered_json config, std::uint64_t seed,
                           const std::vector<std::string>& outputs) {
  const auto manifest = io::run_manifest(command, std::move(config), seed,
                                         outputs);
  io::write_text_file(out_path + ".manifest.json", manifest.dump(2) + "\n");
}

inline SortedSample load_sample(const std::string& input) {
  return SortedSample::from_unsorted(io::read_column_csv(input));
}

struct CommonFlags {
  std::string kernel = "truncnormal";
  std::string h = "auto";
  std::string grid = "paper";
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string out;
};

inline void add_common(CLI::App* cmd, CommonFlags& flags,
                       bool with_seed = true) {
  cmd->add_option("--kernel", flags.kernel,
                  "kernel: truncnormal|rect|epanechnikov");
  cmd->add_option("--h", flags.h, "bandwidth value, or 'auto' for n^(-3/8)");
  cmd->add_option("--grid", flags.grid,
                  "grid spec: paper | uniform:<count> | <file>");
  if (with_seed) cmd->add_option("--seed", flags.seed, "RNG seed");
  cmd->add_option("--threads", flags.threads,
                  "worker thread cap (0 = all cores)");
  cmd->add_option("--out", flags.out, "output path")->required();
}

// ---- subcommand bodies ----

inline int cmd_estimate(const std::string& input, const CommonFlags& flags) {
  const SortedSample sample = load_sample(input);
  const Kernel kernel = make_kernel(flags.kernel);
  const Bandwidth bw = parse_bandwidth(flags.h, sample.size());
  const Grid grid = parse_grid_spec(flags.grid);

  const QdEstimate est = bc_kqd(sample, kernel, bw, grid);
  io::write_text_file(flags.out, io::estimate_csv(est));

  const BandwidthDiagnostic diag = check_bandwidth(bw);
  if (!diag.ok()) std::cerr << "warning: " << diag.message << "\n";

  nlohmann::ordered_json config;
  config["input"] = input;
  config["kernel"] = to_string(kernel.name());
  config["h"] = bw.value();
  config["h_mode"] = flags.h == "auto" ? "auto" : "fixed";
  config["grid"] = flags.grid;
  config["n"] = sample.size();
  write_manifest(flags.out, "estimate", std::move(config), 0, {flags.out});
  return 0;
}

inline int cmd_band(const std::string& input, const CommonFlags& flags,
                    double level, const std::string& side_str,
                    const std::string& method_str, std::size_t n_sims,
                    const std::string& svg_path,
                    const std::string& critvals_path) {
  const SortedSample sample = load_sample(input);
  const Kernel kernel = make_kernel(flags.kernel);
  const Bandwidth bw = parse_bandwidth(flags.h, sample.size());
  const Grid grid = parse_grid_spec(flags.grid);
  const BandSide side = parse_band_side(side_str);
  const CritvalMethod method = parse_critval_method(method_str);

  const QdEstimate est = bc_kqd(sample, kernel, bw, grid);

  CriticalValues cv = [&] {
    if (!critvals_path.empty()) {
      std::ifstream in(critvals_path);
      if (!in) throw io::DataError("cannot open file: " + critvals_path);
      nlohmann::json j;
      in >> j;
      return critical_values_from_json(j);
    }
    const std::vector<double> taus = {level, 1.0 - (1.0 - level) / 2.0};
    return method == CritvalMethod::KnownProcess
               ? simulate_critvals_known(kernel, bw, grid, n_sims, taus,
                                         flags.seed, flags.threads)
               : simulate_critvals_pseudo(kernel, bw, grid, n_sims, taus,
                                          flags.seed, flags.threads);
  }();

  const ConfidenceBand band = build_band(est, cv, level, side);
  io::write_text_file(flags.out, io::band_csv(band));
  std::vector<std::string> outputs = {flags.out};
  if (!svg_path.empty()) {
    io::write_text_file(svg_path, io::band_svg(band));
    outputs.push_back(svg_path);
  }

  nlohmann::ordered_json config;
  config["input"] = input;
  config["kernel"] = to_string(kernel.name());
  config["h"] = bw.value();
  config["h_mode"] = flags.h == "auto" ? "auto" : "fixed";
  config["grid"] = flags.grid;
  config["n"] = sample.size();
  config["level"] = level;
  config["side"] = to_string(side);
  config["method"] = to_string(method);
  config["n_sims"] = n_sims;
  config["critvals"] = critvals_path;
  config["svg"] = svg_path;
  write_manifest(flags.out, "band", std::move(config), flags.seed, outputs);
  return 0;
}

inline int cmd_critvals(const CommonFlags& flags, std::size_t n,
                        const std::string& method_str, std::size_t n_sims,
                        const std::string& taus_str) {
  const Kernel kernel = make_kernel(flags.kernel);
  const Bandwidth bw = parse_bandwidth(flags.h, n);
  const Grid grid = parse_grid_spec(flags.grid);
  const CritvalMethod method = parse_critval_method(method_str);
  const std::vector<double> taus = parse_real_list(taus_str, "tau");

  const CriticalValues cv =
      method == CritvalMethod::KnownProcess
          ? simulate_critvals_known(kernel, bw, grid, n_sims, taus,
                                    flags.seed, flags.threads)
          : simulate_critvals_pseudo(kernel, bw, grid, n_sims, taus,
                                     flags.seed, flags.threads);
  io::write_text_file(flags.out, to_json(cv).dump(2) + "\n");

  nlohmann::ordered_json config;
  config["kernel"] = to_string(kernel.name());
  config["n"] = n;
  config["h"] = bw.value();
  config["grid"] = flags.grid;
  config["method"] = to_string(method);
  config["n_sims"] = n_sims;
  config["taus"] = taus;
  write_manifest(flags.out, "critvals", std::move(config), flags.seed,
                 {flags.out});
  return 0;
}

inline int cmd_coverage(const CommonFlags& flags, const std::string& dist_str,
                        std::size_t n, const std::string& levels_str,
                        std::size_t reps, std::size_t n_sims, double c,
                        const std::string& out_json,
                        const std::string& out_csv) {
  CoverageConfig cfg;
  cfg.dist = parse_distribution_name(dist_str);
  cfg.n = n;
  cfg.levels = parse_real_list(levels_str, "level");
  cfg.reps = reps;
  cfg.n_sims = n_sims;
  cfg.grid = parse_grid_spec(flags.grid);
  cfg.kernel_name = parse_kernel_name(flags.kernel);
  cfg.seed = flags.seed;
  cfg.threads = flags.threads;
  // the harness is parameterized by the multiplier in h = c n^(-3/8); an
  // explicit --h is translated into the equivalent multiplier
  if (flags.h == "auto") {
    cfg.bandwidth_c = c;
  } else {
    const Bandwidth requested = parse_bandwidth(flags.h, n);
    cfg.bandwidth_c =
        requested.value() * std::pow(static_cast<double>(n), 0.375);
  }

  const CoverageReport report = run_coverage(cfg);
  io::write_text_file(out_json, to_json(report).dump(2) + "\n");
  io::write_text_file(out_csv, to_csv(report));
  std::cerr << "coverage finished in " << report.elapsed.count() << " s\n";

  nlohmann::ordered_json config;
  config["dist"] = to_string(cfg.dist);
  config["n"] = cfg.n;
  config["levels"] = cfg.levels;
  config["reps"] = cfg.reps;
  config["n_sims"] = cfg.n_sims;
  config["kernel"] = to_string(cfg.kernel_name);
  config["bandwidth_c"] = cfg.bandwidth_c;
  config["h"] = scaled_bandwidth(cfg.n, cfg.bandwidth_c).value();
  config["grid"] = flags.grid;
  config["out_csv"] = out_csv;
  write_manifest(out_json, "coverage", std::move(config), cfg.seed,
                 {out_json, out_csv});
  return 0;
}

}  // namespace detail

//! Runs the command line given as argv-style tokens (program name excluded).
//! Exit codes: 0 success, 1 usage error, 2 data error.
inline int run(std::vector<std::string> args) {
  CLI::App app{"Boundary-corrected kernel quantile-density estimation and "
               "uniform confidence bands"};
  // --h is the bandwidth flag, so help must not claim the short -h
  app.set_help_flag("--help", "Print help and exit");
  app.require_subcommand(1);
  auto add_subcommand = [&app](const std::string& name,
                               const std::string& desc) {
    CLI::App* cmd = app.add_subcommand(name, desc);
    cmd->set_help_flag("--help", "Print help and exit");
    return cmd;
  };

  detail::CommonFlags flags;
  std::string input;
  double level = 0.9;
  std::string side = "two";
  std::string method = "known";
  std::size_t n_sims = 20000;
  std::string svg_path;
  std::string critvals_path;
  std::string taus = "0.8,0.9,0.95,0.99";
  std::size_t n = 0;
  std::string dist = "uniform";
  std::string levels = "0.8,0.9,0.95,0.99";
  std::size_t reps = 2000;
  double bandwidth_c = 1.0;
  std::string out_json, out_csv;

  auto* estimate = add_subcommand(
      "estimate", "Estimate the quantile density on a grid from one-column "
                  "CSV data");
  estimate->add_option("input", input, "input CSV (one numeric column)")
      ->required();
  detail::add_common(estimate, flags, /*with_seed=*/false);

  auto* band = add_subcommand(
      "band", "Estimate and wrap a uniform confidence band around it");
  band->add_option("input", input, "input CSV (one numeric column)")
      ->required();
  band->add_option("--level", level, "confidence level in (0, 1)")
      ->required();
  band->add_option("--side", side, "band side: lower|upper|two");
  band->add_option("--method", method, "critical values: known|pseudo");
  band->add_option("--n-sims", n_sims, "critical-value simulations");
  band->add_option("--svg", svg_path, "also render the band to this SVG");
  band->add_option("--critvals", critvals_path,
                   "load a tabulated critical-value JSON instead of "
                   "simulating");
  detail::add_common(band, flags);

  auto* critvals = add_subcommand(
      "critvals", "Simulate and tabulate critical values as JSON");
  critvals->add_option("--n", n, "sample size the table is for")->required();
  critvals->add_option("--method", method, "critical values: known|pseudo");
  critvals->add_option("--n-sims", n_sims, "number of simulations");
  critvals->add_option("--taus", taus, "comma-separated quantile orders");
  detail::add_common(critvals, flags);

  auto* coverage = add_subcommand(
      "coverage", "Monte Carlo coverage of the two-sided bands for a "
                  "reference distribution");
  coverage->add_option("--dist", dist,
                       "distribution: uniform|linear|truncnormal");
  coverage->add_option("--n", n, "sample size")->required();
  coverage->add_option("--levels", levels, "comma-separated nominal levels");
  coverage->add_option("--reps", reps, "coverage replications (>= 100)");
  coverage->add_option("--n-sims", n_sims, "critical-value simulations");
  auto* c_opt = coverage->add_option("--c", bandwidth_c,
                                     "bandwidth multiplier in c n^(-3/8)");
  coverage->add_option("--h", flags.h,
                       "bandwidth value, or 'auto' for c n^(-3/8)")
      ->excludes(c_opt);
  coverage->add_option("--kernel", flags.kernel,
                       "kernel: truncnormal|rect|epanechnikov");
  coverage->add_option("--grid", flags.grid,
                       "grid spec: paper | uniform:<count> | <file>");
  coverage->add_option("--seed", flags.seed, "RNG seed");
  coverage->add_option("--threads", flags.threads,
                       "worker thread cap (0 = all cores)");
  coverage->add_option("--out-json", out_json, "JSON report path")->required();
  coverage->add_option("--out-csv", out_csv, "CSV report path")->required();

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (estimate->parsed()) return detail::cmd_estimate(input, flags);
    if (band->parsed()) {
      return detail::cmd_band(input, flags, level, side, method, n_sims,
                              svg_path, critvals_path);
    }
    if (critvals->parsed()) {
      return detail::cmd_critvals(flags, n, method, n_sims, taus);
    }
    if (coverage->parsed()) {
      return detail::cmd_coverage(flags, dist, n, levels, reps, n_sims,
                                  bandwidth_c, out_json, out_csv);
    }
  } catch (const io::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace qdband::cli
