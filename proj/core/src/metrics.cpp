#include "anchorflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace af {

namespace {

/// Index of the largest responsibility at t=0, plus ambiguity flag.
std::pair<int, bool> assign_component(const GaussianMixture& gmm, const Vec& x) {
  const Vec gamma = responsibilities(gmm, x, 0.0);
  int best = 0;
  for (int k = 1; k < gamma.size(); ++k)
    if (gamma[k] > gamma[best]) best = k;
  double second = -1.0;
  for (int k = 0; k < gamma.size(); ++k)
    if (k != best) second = std::max(second, gamma[k]);
  const bool ambiguous = gamma.size() > 1 && (gamma[best] - second) < 1e-9;
  return {best, ambiguous};
}

}  // namespace

OraclePoint paired_oracle_point(const EditTask& task, const Vec& x_src) {
  if (x_src.size() != task.dim())
    throw std::invalid_argument("paired_oracle_point: dimension mismatch");
  const auto [k, ambiguous] = assign_component(task.source, x_src);
  const int j = task.pairing[static_cast<std::size_t>(k)];
  OraclePoint out;
  out.point = x_src + (task.target.means[static_cast<std::size_t>(j)] -
                       task.source.means[static_cast<std::size_t>(k)]);
  out.source_component = k;
  out.ambiguous = ambiguous;
  return out;
}

IdentityScore identity_error(const EditTask& task, const Vec& x_src, const Vec& x_edit) {
  if (x_edit.size() != task.dim())
    throw std::invalid_argument("identity_error: dimension mismatch");
  const OraclePoint oracle = paired_oracle_point(task, x_src);
  IdentityScore score;
  score.error = (x_edit - oracle.point).norm();
  const auto [tar_k, tar_ambiguous] = assign_component(task.target, x_edit);
  score.assignment_consistent =
      tar_k == task.pairing[static_cast<std::size_t>(oracle.source_component)];
  (void)tar_ambiguous;
  return score;
}

double semantic_score(const EditTask& task, const Vec& x_edit) {
  return mixture_logpdf(task.target, x_edit);
}

double energy_distance(std::span<const Vec> batch_a, std::span<const Vec> batch_b) {
  if (batch_a.empty() || batch_b.empty())
    throw std::invalid_argument("energy_distance: empty batch");
  const auto na = static_cast<double>(batch_a.size());
  const auto nb = static_cast<double>(batch_b.size());

  double cross = 0.0;
  for (const Vec& a : batch_a)
    for (const Vec& b : batch_b) cross += (a - b).norm();
  double within_a = 0.0;
  for (std::size_t i = 0; i < batch_a.size(); ++i)
    for (std::size_t j = i + 1; j < batch_a.size(); ++j)
      within_a += 2.0 * (batch_a[i] - batch_a[j]).norm();
  double within_b = 0.0;
  for (std::size_t i = 0; i < batch_b.size(); ++i)
    for (std::size_t j = i + 1; j < batch_b.size(); ++j)
      within_b += 2.0 * (batch_b[i] - batch_b[j]).norm();

  return 2.0 * cross / (na * nb) - within_a / (na * na) - within_b / (nb * nb);
}

double cancellation_ratio(const std::vector<StepRecord>& trajectory) {
  if (trajectory.size() < 2)
    throw std::invalid_argument("cancellation_ratio: need >= 2 active steps");
  Vec total = Vec::Zero(trajectory[0].update.size());
  double magnitude = 0.0;
  for (const StepRecord& rec : trajectory) {
    total += rec.update;
    magnitude += rec.update.norm();
  }
  if (magnitude == 0.0) return 1.0;
  return total.norm() / magnitude;
}

MetricsRow score_sample(const EditTask& task, const Vec& x_src, const EditResult& result) {
  MetricsRow row;
  const IdentityScore id = identity_error(task, x_src, result.edited);
  row.identity_error = id.error;
  row.assignment_consistent = id.assignment_consistent;
  row.target_loglik = semantic_score(task, result.edited);
  row.source_loglik = mixture_logpdf(task.source, result.edited);
  row.cancel_ratio =
      result.trajectory.size() >= 2 ? cancellation_ratio(result.trajectory) : 1.0;
  return row;
}

MetricsReport MetricsReport::build(std::vector<MetricsRow> rows, std::span<const Vec> edited,
                                   std::span<const Vec> target_ref) {
  MetricsReport report;
  report.rows = std::move(rows);
  if (report.rows.empty()) return report;
  const auto n = static_cast<double>(report.rows.size());
  for (const MetricsRow& r : report.rows) {
    report.mean_identity_error += r.identity_error;
    report.assignment_rate += r.assignment_consistent ? 1.0 : 0.0;
    report.mean_target_loglik += r.target_loglik;
    report.mean_source_loglik += r.source_loglik;
    report.mean_cancel_ratio += r.cancel_ratio;
  }
  report.mean_identity_error /= n;
  report.assignment_rate /= n;
  report.mean_target_loglik /= n;
  report.mean_source_loglik /= n;
  report.mean_cancel_ratio /= n;
  if (!edited.empty() && !target_ref.empty())
    report.energy_to_target_ref = energy_distance(edited, target_ref);
  return report;
}

}  // namespace af
