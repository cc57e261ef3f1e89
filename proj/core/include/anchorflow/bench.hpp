#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "anchorflow/config.hpp"

namespace af {

/// On-disk layout of one benchmark run:
///   <out>/<timestamp>-<name>/config.snapshot
///                            results.csv
///                            summary.csv
///                            plots/*.svg
struct RunRegistry {
  std::filesystem::path dir;

  std::filesystem::path config_snapshot() const { return dir / "config.snapshot"; }
  std::filesystem::path results_csv() const { return dir / "results.csv"; }
  std::filesystem::path summary_csv() const { return dir / "summary.csv"; }
  std::filesystem::path plots_dir() const { return dir / "plots"; }
};

/// Execute the full method x grid x sample matrix. Rows are written in
/// (method, grid point, n_avg, sample) order regardless of which thread
/// finished first, so output bytes are independent of `threads`.
/// A sampler numeric-failure aborts its cell, records failure rows, and
/// the remaining cells continue.
/// `fixed_dir`, when set, bypasses the timestamped directory naming.
RunRegistry run_bench(const BenchSpec& spec, int threads = 1, std::ostream* log = nullptr,
                      const std::optional<std::filesystem::path>& fixed_dir = {});

/// Re-render the per-cell scatter SVGs from an existing results.csv.
void render_plots_from_results(const BenchSpec& spec, const std::filesystem::path& results_csv,
                               const std::filesystem::path& plots_dir);

}  // namespace af
