#include "anchorflow/gmm.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace af {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

Eigen::LLT<Mat> cholesky_or_throw(const Mat& m, const char* where) {
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success)
    throw NumericError(std::string(where) + ": covariance not positive definite");
  return llt;
}

double log_normal_pdf(const Vec& x, const Vec& mean, const Eigen::LLT<Mat>& llt) {
  const Mat& l = llt.matrixLLT();
  double logdet = 0.0;
  for (int i = 0; i < l.rows(); ++i) logdet += std::log(l(i, i));
  const Vec a = llt.matrixL().solve(x - mean);
  return -0.5 * static_cast<double>(x.size()) * kLog2Pi - logdet - 0.5 * a.squaredNorm();
}

/// log w_k + log N(x; (1-t) mu_k, (1-t)^2 Sigma_k + t^2 I) for every k.
std::vector<double> component_log_marginals(const GaussianMixture& gmm, const Vec& x, double t) {
  const double a = 1.0 - t;
  std::vector<double> lp(static_cast<std::size_t>(gmm.components()));
  for (int k = 0; k < gmm.components(); ++k) {
    Mat c = a * a * gmm.covs[static_cast<std::size_t>(k)];
    c.diagonal().array() += t * t;
    const auto llt = cholesky_or_throw(c, "component_log_marginals");
    lp[static_cast<std::size_t>(k)] =
        std::log(gmm.weights[k]) + log_normal_pdf(x, a * gmm.means[static_cast<std::size_t>(k)], llt);
  }
  return lp;
}

Vec softmax_from_logs(const std::vector<double>& lp) {
  const double m = *std::max_element(lp.begin(), lp.end());
  Vec g(static_cast<Eigen::Index>(lp.size()));
  double total = 0.0;
  for (std::size_t k = 0; k < lp.size(); ++k) {
    g[static_cast<Eigen::Index>(k)] = std::exp(lp[k] - m);
    total += g[static_cast<Eigen::Index>(k)];
  }
  return g / total;
}

}  // namespace

GaussianMixture GaussianMixture::create(Vec weights, std::vector<Vec> means,
                                        std::vector<Mat> covs) {
  const auto k = static_cast<std::size_t>(weights.size());
  if (k == 0 || means.size() != k || covs.size() != k)
    throw std::invalid_argument("GaussianMixture: component count mismatch");
  const auto d = means[0].size();
  double total = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) throw std::invalid_argument("GaussianMixture: negative weight");
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("GaussianMixture: weights must sum to 1");
  for (std::size_t i = 0; i < k; ++i) {
    if (means[i].size() != d) throw std::invalid_argument("GaussianMixture: mean dimension mismatch");
    if (covs[i].rows() != d || covs[i].cols() != d)
      throw std::invalid_argument("GaussianMixture: covariance shape mismatch");
    if ((covs[i] - covs[i].transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw std::invalid_argument("GaussianMixture: covariance not symmetric");
    Eigen::LLT<Mat> llt(covs[i]);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("GaussianMixture: covariance not positive definite");
  }
  GaussianMixture gmm;
  gmm.weights = std::move(weights);
  gmm.means = std::move(means);
  gmm.covs = std::move(covs);
  return gmm;
}

GaussianMixture GaussianMixture::isotropic(const std::vector<Vec>& means, double variance) {
  const auto k = static_cast<Eigen::Index>(means.size());
  Vec w = Vec::Constant(k, 1.0 / static_cast<double>(k));
  std::vector<Mat> covs;
  covs.reserve(means.size());
  for (const auto& m : means) covs.push_back(variance * Mat::Identity(m.size(), m.size()));
  return create(std::move(w), means, std::move(covs));
}

GaussianMixture GaussianMixture::standard_normal(int d) {
  return isotropic({Vec::Zero(d)}, 1.0);
}

EditTask EditTask::create(GaussianMixture source, GaussianMixture target,
                          std::vector<int> pairing) {
  if (source.components() != target.components())
    throw std::invalid_argument("EditTask: source/target component counts differ");
  if (source.dim() != target.dim())
    throw std::invalid_argument("EditTask: source/target dimensions differ");
  const int k = source.components();
  if (pairing.empty()) {
    pairing.resize(static_cast<std::size_t>(k));
    std::iota(pairing.begin(), pairing.end(), 0);
  }
  if (static_cast<int>(pairing.size()) != k)
    throw std::invalid_argument("EditTask: pairing size mismatch");
  std::vector<bool> seen(static_cast<std::size_t>(k), false);
  for (int p : pairing) {
    if (p < 0 || p >= k || seen[static_cast<std::size_t>(p)])
      throw std::invalid_argument("EditTask: pairing is not a permutation");
    seen[static_cast<std::size_t>(p)] = true;
  }

  // Unconditional model: the equal-weight union of both mixtures.
  Vec uw(2 * k);
  std::vector<Vec> umeans;
  std::vector<Mat> ucovs;
  umeans.reserve(static_cast<std::size_t>(2 * k));
  ucovs.reserve(static_cast<std::size_t>(2 * k));
  for (int i = 0; i < k; ++i) {
    uw[i] = 0.5 * source.weights[i];
    umeans.push_back(source.means[static_cast<std::size_t>(i)]);
    ucovs.push_back(source.covs[static_cast<std::size_t>(i)]);
  }
  for (int i = 0; i < k; ++i) {
    uw[k + i] = 0.5 * target.weights[i];
    umeans.push_back(target.means[static_cast<std::size_t>(i)]);
    ucovs.push_back(target.covs[static_cast<std::size_t>(i)]);
  }

  EditTask task;
  task.uncond = GaussianMixture::create(std::move(uw), std::move(umeans), std::move(ucovs));
  task.source = std::move(source);
  task.target = std::move(target);
  task.pairing = std::move(pairing);
  return task;
}

EditTask paired_two_mode() {
  std::vector<Vec> src_means = {(Vec(2) << -3.0, -1.0).finished(),
                                (Vec(2) << -3.0, 1.0).finished()};
  std::vector<Vec> tar_means = {(Vec(2) << 3.0, -1.0).finished(),
                                (Vec(2) << 3.0, 1.0).finished()};
  return EditTask::create(GaussianMixture::isotropic(src_means, 0.3),
                          GaussianMixture::isotropic(tar_means, 0.3));
}

double mixture_logpdf(const GaussianMixture& gmm, const Vec& x) {
  if (x.size() != gmm.dim()) throw std::invalid_argument("mixture_logpdf: dimension mismatch");
  std::vector<double> lp(static_cast<std::size_t>(gmm.components()));
  for (int k = 0; k < gmm.components(); ++k) {
    const auto llt = cholesky_or_throw(gmm.covs[static_cast<std::size_t>(k)], "mixture_logpdf");
    lp[static_cast<std::size_t>(k)] =
        std::log(gmm.weights[k]) + log_normal_pdf(x, gmm.means[static_cast<std::size_t>(k)], llt);
  }
  const double m = *std::max_element(lp.begin(), lp.end());
  double acc = 0.0;
  for (double v : lp) acc += std::exp(v - m);
  return m + std::log(acc);
}

Vec sample_mixture(const GaussianMixture& gmm, rng::CounterStream& stream) {
  const double u = stream.next_unit();
  double cum = 0.0;
  int pick = gmm.components() - 1;
  for (int k = 0; k < gmm.components(); ++k) {
    cum += gmm.weights[k];
    if (u <= cum) {
      pick = k;
      break;
    }
  }
  const auto llt = cholesky_or_throw(gmm.covs[static_cast<std::size_t>(pick)], "sample_mixture");
  const Vec z = stream.normal_vec(gmm.dim());
  return gmm.means[static_cast<std::size_t>(pick)] + Mat(llt.matrixL()) * z;
}

Vec responsibilities(const GaussianMixture& gmm, const Vec& x, double t) {
  if (x.size() != gmm.dim()) throw std::invalid_argument("responsibilities: dimension mismatch");
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("responsibilities: t outside [0,1]");
  if (t == 1.0) {
    // All per-component marginals are N(0, I): the posterior is the prior.
    return gmm.weights / gmm.weights.sum();
  }
  return softmax_from_logs(component_log_marginals(gmm, x, t));
}

Vec marginal_velocity(const GaussianMixture& gmm, const Vec& x, double t) {
  if (x.size() != gmm.dim()) throw std::invalid_argument("marginal_velocity: dimension mismatch");
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("marginal_velocity: t outside [0,1]");
  const double a = 1.0 - t;
  const Vec gamma = (t == 1.0) ? Vec(gmm.weights / gmm.weights.sum())
                               : softmax_from_logs(component_log_marginals(gmm, x, t));
  Vec v = Vec::Zero(gmm.dim());
  for (int k = 0; k < gmm.components(); ++k) {
    const Mat& sigma = gmm.covs[static_cast<std::size_t>(k)];
    const Vec& mu = gmm.means[static_cast<std::size_t>(k)];
    Mat c = a * a * sigma;
    c.diagonal().array() += t * t;
    const auto llt = cholesky_or_throw(c, "marginal_velocity");
    const Vec y = llt.solve(x - a * mu);  // C_k^{-1} (x - (1-t) mu_k)
    const Vec e_x0 = mu + a * (sigma * y);
    const Vec e_x1 = t * y;
    v += gamma[k] * (e_x1 - e_x0);
  }
  return v;
}

Vec cfg_velocity(const EditTask& task, const Vec& x, double t, Cond cond, double guidance) {
  if (cond == Cond::Uncond) return marginal_velocity(task.uncond, x, t);
  const Vec v_c = marginal_velocity(task.mixture(cond), x, t);
  if (guidance == 1.0) return v_c;
  const Vec v_u = marginal_velocity(task.uncond, x, t);
  if (guidance == 0.0) return v_u;
  return v_u + guidance * (v_c - v_u);
}

McVelocity mc_velocity_oracle(const GaussianMixture& gmm, const Vec& x, double t, int n,
                              rng::CounterStream& stream) {
  if (!(t > 0.0 && t < 1.0))
    throw std::invalid_argument("mc_velocity_oracle: t must lie strictly inside (0,1)");
  if (n < 1000) throw std::invalid_argument("mc_velocity_oracle: n must be >= 1000");

  const int d = gmm.dim();
  const double a = 1.0 - t;

  // Log-weight of a prior draw x0: density of X_t at x given x0, i.e.
  // N(x; (1-t) x0, t^2 I). The constant factor cancels after
  // self-normalization but keeps the weights in a sane range.
  std::vector<double> logw(static_cast<std::size_t>(n));
  std::vector<Vec> f(static_cast<std::size_t>(n));  // x1 - x0 per draw
  for (int i = 0; i < n; ++i) {
    const Vec x0 = sample_mixture(gmm, stream);
    const Vec resid = x - a * x0;
    logw[static_cast<std::size_t>(i)] =
        -0.5 * d * (kLog2Pi + 2.0 * std::log(t)) - resid.squaredNorm() / (2.0 * t * t);
    f[static_cast<std::size_t>(i)] = resid / t - x0;  // (x - (1-t)x0)/t - x0
  }

  const double m = *std::max_element(logw.begin(), logw.end());
  double sum_w = 0.0;
  double sum_w2 = 0.0;
  Vec mean = Vec::Zero(d);
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] = std::exp(logw[static_cast<std::size_t>(i)] - m);
    sum_w += w[static_cast<std::size_t>(i)];
    sum_w2 += w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(i)];
    mean += w[static_cast<std::size_t>(i)] * f[static_cast<std::size_t>(i)];
  }
  const double ess = sum_w * sum_w / sum_w2;
  if (ess < 50.0)
    throw OracleDegenerateError("mc_velocity_oracle: effective sample size " +
                                std::to_string(ess) + " < 50; raise n or move the probe");
  mean /= sum_w;

  // Standard error of the self-normalized estimator, per coordinate.
  Vec var = Vec::Zero(d);
  for (int i = 0; i < n; ++i) {
    const Vec dev = f[static_cast<std::size_t>(i)] - mean;
    var += (w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(i)]) *
           dev.cwiseProduct(dev);
  }
  McVelocity out;
  out.estimate = mean;
  out.standard_error = (var / (sum_w * sum_w)).cwiseSqrt();
  out.ess = ess;
  return out;
}

}  // namespace af
