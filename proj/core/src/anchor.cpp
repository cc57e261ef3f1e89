#include "anchorflow/anchor.hpp"

#include <stdexcept>

#include "anchorflow/verify.hpp"

namespace af {

void AnchorSeries::validate() const {
  if (s.empty() || s.size() != g.size())
    throw std::invalid_argument("AnchorSeries: need equal nonempty s/g lists");
  const auto d = s[0].size();
  for (const auto& v : s)
    if (v.size() != d) throw std::invalid_argument("AnchorSeries: dimension mismatch");
  for (const auto& v : g)
    if (v.size() != d) throw std::invalid_argument("AnchorSeries: dimension mismatch");
}

Vec single_step_inversion(const VelocityField& field, const Vec& x, double t, Cond cond,
                          double guidance) {
  if (!(t >= 0.0 && t <= 1.0))
    throw std::invalid_argument("single_step_inversion: t outside [0,1]");
  return x + (1.0 - t) * field.velocity(x, t, cond, guidance);
}

double strong_objective(const AnchorSeries& series, const Vec& anchor) {
  series.validate();
  double acc = 0.0;
  for (std::size_t i = 0; i < series.s.size(); ++i)
    acc += (series.s[i] - anchor).squaredNorm() + (series.g[i] - anchor).squaredNorm();
  return acc;
}

Vec optimal_anchor(const AnchorSeries& series) {
  series.validate();
  Vec acc = Vec::Zero(series.s[0].size());
  for (std::size_t i = 0; i < series.s.size(); ++i) acc += series.s[i] + series.g[i];
  return acc / (2.0 * static_cast<double>(series.s.size()));
}

double reduced_objective(const AnchorSeries& series) {
  series.validate();
  const Vec mbar = optimal_anchor(series);
  double pair_term = 0.0;
  double midpoint_term = 0.0;
  for (std::size_t i = 0; i < series.s.size(); ++i) {
    pair_term += (series.g[i] - series.s[i]).squaredNorm();
    const Vec m = 0.5 * (series.s[i] + series.g[i]);
    midpoint_term += (m - mbar).squaredNorm();
  }
  return 0.5 * pair_term + 2.0 * midpoint_term;
}

double alignment_loss(const AnchorSeries& series) {
  series.validate();
  double acc = 0.0;
  for (std::size_t i = 0; i < series.s.size(); ++i)
    acc += (series.g[i] - series.s[i]).squaredNorm();
  return 0.5 * acc;
}

Vec anchor_gradient(const Vec& g_inv, const Vec& s_inv, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("anchor_gradient: t outside [0,1]");
  const double scale = (current_fault() == Fault::AnchorGradSign) ? -(2.0 - t) : (2.0 - t);
  return scale * (g_inv - s_inv);
}

Vec anchor_gradient_exact(const VelocityField& field, const Vec& x_fe, const Vec& x_src_t,
                          const Vec& x_src_0, double t, double s_src, double s_tar, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3))
    throw std::invalid_argument("anchor_gradient_exact: eps outside [1e-7, 1e-3]");
  const Vec x_tar_t = x_src_t + (x_fe - x_src_0);
  const Vec g_inv = single_step_inversion(field, x_tar_t, t, Cond::Tar, s_tar);
  const Vec s_inv = single_step_inversion(field, x_src_t, t, Cond::Src, s_src);
  const Vec residual = g_inv - s_inv;

  // Central-difference Jacobian of v(., t, TAR, s_tar) at x_tar_t. Since
  // x_tar_t = x_fe + const, d/dx_fe equals d/dx_tar.
  const auto d = x_fe.size();
  Mat jac(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    Vec xp = x_tar_t;
    Vec xm = x_tar_t;
    xp[j] += eps;
    xm[j] -= eps;
    jac.col(j) = (field.velocity(xp, t, Cond::Tar, s_tar) -
                  field.velocity(xm, t, Cond::Tar, s_tar)) /
                 (2.0 * eps);
  }
  const Mat transfer = Mat::Identity(d, d) + (1.0 - t) * jac;
  return transfer.transpose() * residual;
}

}  // namespace af
