#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "anchorflow/edit.hpp"
#include "anchorflow/gmm.hpp"

namespace af {

/// One sweep cell of the (n_max, s_tar) grid.
struct GridPoint {
  int n_max = 41;
  double s_tar = 7.5;
};

/// Resolved benchmark specification. Defaults reproduce the paper-default
/// editing configuration on the paired-two-mode preset.
struct BenchSpec {
  std::string name = "bench";
  std::string task_preset = "paired-two-mode";  // empty when mixtures are inline
  std::optional<GaussianMixture> source;        // inline mixtures override the preset
  std::optional<GaussianMixture> target;
  std::vector<int> pairing;                     // empty -> identity
  std::vector<Method> methods = {Method::Direct, Method::Inversion, Method::FlowEdit,
                                 Method::AnchorFlow};
  EditConfig base;                      // T, s_src, s_tar, n_min, n_max, n_avg, seed, flags
  std::vector<GridPoint> sweep;         // empty -> single point (base.n_max, base.s_tar)
  std::vector<int> n_avg_list;          // empty -> { base.n_avg }
  int samples = 200;
  std::string out_dir = "runs";
  bool record_timing = false;           // wall times forfeit byte-identical output

  EditTask resolve_task() const;
  std::vector<GridPoint> resolved_sweep() const;
  std::vector<int> resolved_n_avg() const;

  /// Every grid point must satisfy the EditConfig invariants.
  void validate() const;
};

/// Parse the flat key-value benchmark config. Unknown keys are errors
/// that carry the line number; invariant violations name the key.
/// An empty document yields the full default spec.
BenchSpec load_config(const std::string& path);
BenchSpec parse_config_text(const std::string& text, const std::string& origin = "<string>");

/// Parse a standalone mixture specification document with `weights`,
/// `mean.k`, `cov.k` entries.
GaussianMixture load_mixture(const std::string& path);
GaussianMixture parse_mixture_text(const std::string& text, const std::string& origin = "<string>");

/// Serialize the fully resolved spec (mixtures inlined) so the snapshot
/// alone reproduces the run bit-exactly with the same binary.
std::string snapshot_config(const BenchSpec& spec);

}  // namespace af
