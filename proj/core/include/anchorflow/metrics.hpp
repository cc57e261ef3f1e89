#pragma once

#include <span>
#include <vector>

#include "anchorflow/edit.hpp"
#include "anchorflow/gmm.hpp"
#include "anchorflow/types.hpp"

namespace af {

/// Ground-truth edit of x_src in the toy world: assign x_src to the source
/// component with maximal responsibility at t=0, translate by the paired
/// mean difference. `ambiguous` is set (not fatal) when the top two
/// responsibilities are within 1e-9.
struct OraclePoint {
  Vec point;
  int source_component = 0;
  bool ambiguous = false;
};
OraclePoint paired_oracle_point(const EditTask& task, const Vec& x_src);

/// Distance from x_edit to the paired oracle point, plus whether x_edit's
/// target-component assignment matches the pairing.
struct IdentityScore {
  double error = 0.0;
  bool assignment_consistent = false;
};
IdentityScore identity_error(const EditTask& task, const Vec& x_src, const Vec& x_edit);

/// Toy semantic-modification score: log-density of the edit under the
/// target mixture.
double semantic_score(const EditTask& task, const Vec& x_edit);

/// Energy distance 2 E||a-b|| - E||a-a'|| - E||b-b'|| over all pairs
/// (V-statistic). Symmetric, nonnegative, zero iff the batches coincide.
double energy_distance(std::span<const Vec> batch_a, std::span<const Vec> batch_b);

/// ||sum_t u_t|| / sum_t ||u_t|| over the per-step applied updates.
/// In (0, 1]; values near zero evidence mutually cancelling directions.
/// All-zero updates define the ratio as 1. Requires >= 2 active steps.
double cancellation_ratio(const std::vector<StepRecord>& trajectory);

/// Per-sample metric row plus batch aggregates. Aggregates always equal
/// recomputation from the rows.
struct MetricsRow {
  double identity_error = 0.0;
  bool assignment_consistent = false;
  double target_loglik = 0.0;
  double source_loglik = 0.0;
  double cancel_ratio = 1.0;
};

struct MetricsReport {
  std::vector<MetricsRow> rows;
  double mean_identity_error = 0.0;
  double assignment_rate = 0.0;
  double mean_target_loglik = 0.0;
  double mean_source_loglik = 0.0;
  double mean_cancel_ratio = 0.0;
  double energy_to_target_ref = 0.0;

  static MetricsReport build(std::vector<MetricsRow> rows, std::span<const Vec> edited,
                             std::span<const Vec> target_ref);
};

MetricsRow score_sample(const EditTask& task, const Vec& x_src, const EditResult& result);

}  // namespace af
