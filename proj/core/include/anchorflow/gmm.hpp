#pragma once

#include <vector>

#include "anchorflow/flow.hpp"
#include "anchorflow/rng.hpp"
#include "anchorflow/types.hpp"

namespace af {

/// Gaussian mixture: weights (sum 1), one mean and one SPD covariance per
/// component. Used both as a data distribution and, through the linear
/// noising path, as a source of exact closed-form velocity fields.
struct GaussianMixture {
  Vec weights;
  std::vector<Vec> means;
  std::vector<Mat> covs;

  int components() const { return static_cast<int>(means.size()); }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }

  /// Validating factory: weights nonnegative summing to 1 within 1e-12,
  /// covariances symmetric with strictly positive eigenvalues.
  static GaussianMixture create(Vec weights, std::vector<Vec> means, std::vector<Mat> covs);

  static GaussianMixture isotropic(const std::vector<Vec>& means, double variance);
  static GaussianMixture standard_normal(int d);
};

/// Source/target mixture pair with a component pairing and the equal-weight
/// union mixture acting as the unconditional model.
struct EditTask {
  GaussianMixture source;
  GaussianMixture target;
  std::vector<int> pairing;   // source component k edits into target component pairing[k]
  GaussianMixture uncond;     // union of source and target at half weight

  int dim() const { return source.dim(); }

  const GaussianMixture& mixture(Cond c) const {
    switch (c) {
      case Cond::Src: return source;
      case Cond::Tar: return target;
      default: return uncond;
    }
  }

  /// Validates equal component counts/dimensions and that `pairing` is a
  /// permutation; empty pairing means identity.
  static EditTask create(GaussianMixture source, GaussianMixture target,
                         std::vector<int> pairing = {});
};

/// The bench preset: two modes at (-3,-1) and (-3,+1) with 0.3 I
/// covariance; target is the same pair shifted by (+6, 0).
EditTask paired_two_mode();

/// log sum_k w_k N(x; mu_k, Sigma_k), evaluated in log space.
double mixture_logpdf(const GaussianMixture& gmm, const Vec& x);

/// Component by weight, then mu_k + L_k z with L_k the Cholesky factor.
Vec sample_mixture(const GaussianMixture& gmm, rng::CounterStream& stream);

/// Posterior over components given the noised observation x at level t:
/// gamma_k proportional to w_k N(x; (1-t) mu_k, (1-t)^2 Sigma_k + t^2 I).
/// Weights need not be normalized; at t=1 all per-component marginals
/// coincide so gamma equals the normalized weights exactly.
Vec responsibilities(const GaussianMixture& gmm, const Vec& x, double t);

/// Exact marginal velocity of the linear path X_t = (1-t) X_0 + t X_1 with
/// X_0 ~ gmm and X_1 ~ N(0, I) independent:
///
///   v(x,t) = sum_k gamma_k(x,t) [ E(x_1 | x_t, k) - E(x_0 | x_t, k) ]
///   C_k    = (1-t)^2 Sigma_k + t^2 I
///   E(x_0 | x_t, k) = mu_k + (1-t) Sigma_k C_k^{-1} (x - (1-t) mu_k)
///   E(x_1 | x_t, k) = t C_k^{-1} (x - (1-t) mu_k)
///
/// C_k^{-1} is applied through Cholesky solves, never formed explicitly.
Vec marginal_velocity(const GaussianMixture& gmm, const Vec& x, double t);

/// Classifier-free guidance over the task's mixtures:
/// v_u + s (v_c - v_u), with v_u the union-mixture field.
Vec cfg_velocity(const EditTask& task, const Vec& x, double t, Cond cond, double guidance);

/// Brute-force estimate of E[x_1 - x_0 | x_t = x] by self-normalized
/// importance sampling: draw x_0 from the prior, weight by
/// N(x; (1-t) x_0, t^2 I), recover x_1 = (x - (1-t) x_0) / t.
struct McVelocity {
  Vec estimate;
  Vec standard_error;  // per coordinate
  double ess = 0.0;    // effective sample size
};
McVelocity mc_velocity_oracle(const GaussianMixture& gmm, const Vec& x, double t, int n,
                              rng::CounterStream& stream);

/// VelocityField backed by the exact mixture fields of an EditTask, with
/// classifier-free guidance applied per call.
class GmmOracleField final : public VelocityField {
 public:
  explicit GmmOracleField(EditTask task) : task_(std::move(task)) {}

  int dim() const override { return task_.dim(); }
  Vec velocity(const Vec& x, double t, Cond cond, double guidance) const override {
    return cfg_velocity(task_, x, t, cond, guidance);
  }
  const EditTask& task() const { return task_; }

 private:
  EditTask task_;
};

}  // namespace af
