#pragma once

#include <vector>

#include "anchorflow/flow.hpp"
#include "anchorflow/types.hpp"

namespace af {

/// Per-timestep single-step inversions of the source trajectory (s_list)
/// and the target trajectory (g_list). Equal lengths, uniform dimension.
struct AnchorSeries {
  std::vector<Vec> s;
  std::vector<Vec> g;

  int size() const { return static_cast<int>(s.size()); }
  void validate() const;
};

/// First-order backward step toward the noise end of the trajectory:
/// F_t(x) = x + (1-t) v(x, t, cond, s). Exact on straight flows; at t=1
/// it returns x unchanged.
Vec single_step_inversion(const VelocityField& field, const Vec& x, double t, Cond cond,
                          double guidance);

/// sum_t ( ||s_t - A||^2 + ||g_t - A||^2 ): one anchor explaining both
/// reconstructions at every timestep.
double strong_objective(const AnchorSeries& series, const Vec& anchor);

/// Closed-form minimizer of the strong objective: the mean of the
/// per-timestep midpoints (s_t + g_t)/2.
Vec optimal_anchor(const AnchorSeries& series);

/// Strong objective evaluated at the optimal anchor, in reduced form:
/// 1/2 sum ||g_t - s_t||^2 + 2 sum ||m_t - mean(m)||^2.
double reduced_objective(const AnchorSeries& series);

/// The relaxed anchor-alignment loss 1/2 sum ||g_t - s_t||^2. Lower bound
/// of the reduced objective; equality iff all midpoints coincide.
double alignment_loss(const AnchorSeries& series);

/// Jacobian-free gradient of the alignment loss at one timestep:
/// (2 - t) (g_inv - s_inv), treating [I + (1-t) J]^T as (2-t) I.
Vec anchor_gradient(const Vec& g_inv, const Vec& s_inv, double t);

/// Reference gradient with the Jacobian estimated by d central-difference
/// field evaluations: builds X^tar_t = x_fe + x_src_t - x_src_0, forms the
/// residual F(X^tar_t) - F(X^src_t), and applies [I + (1-t) J]^T exactly.
/// Used to validate (and measure the gap of) the scalar approximation.
Vec anchor_gradient_exact(const VelocityField& field, const Vec& x_fe, const Vec& x_src_t,
                          const Vec& x_src_0, double t, double s_src, double s_tar,
                          double eps = 1e-5);

}  // namespace af
