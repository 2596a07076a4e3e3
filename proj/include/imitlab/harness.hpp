#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "imitlab/envs.hpp"
#include "imitlab/io.hpp"

namespace imitlab {

/// Algorithm ids: vail-exact (Standard Imitation only), bc, tail-mimic
/// (TAIL on the true model with the MIMIC-MD estimate), vail-tail (TAIL with
/// the MLE estimate), mbtail.
struct AlgorithmSpec {
  std::string id = "bc";
  int T = 500;
  std::size_t n = 10000;
  std::size_t n_prime = 10000;
  std::string explore = "count-greedy";
  double bonus_scale = 1.0;
};

struct SweepConfig {
  EnvSpec env;
  /// "missing-mass-extremal" rebuilds rho for each m; empty keeps env's.
  std::string rho_schedule;
  AlgorithmSpec algorithm;
  std::vector<std::size_t> m_grid;
  /// Empty means the env's own horizon.
  std::vector<int> h_grid;
  int seeds_per_cell = 1;
  std::uint64_t base_seed = 0;
  std::string output;
  /// Wall times are written as 0 unless set, so CSVs stay byte-identical.
  bool record_timing = false;
  /// Worker threads; 0 means hardware concurrency.
  int threads = 0;

  void validate() const;
};

SweepConfig sweep_config_from_json(const json& j);
json sweep_config_to_json(const SweepConfig& c);

struct SweepRow {
  std::string env_family;
  int H = 0;
  int S = 0;
  int A = 0;
  std::size_t m = 0;
  std::uint64_t seed = 0;
  std::string algorithm;
  double value_gap = 0.0;
  double estimation_error = 0.0;
  double objective = 0.0;
  double wall_time_ms = 0.0;
};

inline constexpr const char* kCsvHeader =
    "env_family,H,S,A,m,seed,algorithm,value_gap,estimation_error,objective,wall_time_ms";

/// Data seed of replicate `rep` in cell (H, m).
std::uint64_t cell_seed(const SweepConfig& c, int H, std::size_t m, int rep);
/// The environment a cell runs on.
EnvInstance cell_env(const SweepConfig& c, int H, std::size_t m);
/// Runs one (H, m, seed) cell in isolation.
SweepRow run_cell(const SweepConfig& c, int H, std::size_t m, std::uint64_t seed);

/// One row per (cell, replicate), sorted, computed in parallel.
std::vector<SweepRow> sweep(const SweepConfig& c);

std::string rows_to_csv(std::span<const SweepRow> rows);
void write_csv(const std::string& path, std::span<const SweepRow> rows);
/// Plain-text gnuplot script that plots mean value gap against m from a CSV.
std::string gnuplot_stub(const std::string& csv_path);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least squares on (log x, log y). Needs two or more points, all positive.
SlopeFit fit_loglog_slope(std::span<const std::pair<double, double>> points);

struct CellSummary {
  int H = 0;
  std::size_t m = 0;
  double mean_gap = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

/// Mean value gap per (H, m), ordered by H then m.
std::vector<CellSummary> summarize(std::span<const SweepRow> rows);

struct HorizonContrast {
  std::string family;
  std::vector<CellSummary> cells;
  /// Gap-versus-H slope at each fixed m. Empty when the H grid has one entry.
  std::vector<std::pair<std::size_t, SlopeFit>> slope_vs_h;
};

HorizonContrast horizon_contrast(const SweepConfig& c);

struct ClaimCheck {
  std::string id;
  int criterion = 0;
  std::string description;
  bool passed = false;
  std::string expected;
  std::string observed;
  double seconds = 0.0;
};

struct VerifyReport {
  std::vector<ClaimCheck> checks;
  bool all_passed() const;
};

struct VerifyOptions {
  /// "bandit-boundary" moves the expected 0.8 boundary to 0.7.
  std::string inject_fault;
};

VerifyReport verify_paper_claims(const VerifyOptions& options = {});
json report_to_json(const VerifyReport& r);
std::string report_table(const VerifyReport& r);

}  // namespace imitlab
