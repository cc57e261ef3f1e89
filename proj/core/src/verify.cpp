#include "anchorflow/verify.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <ostream>
#include <sstream>

#include "anchorflow/anchor.hpp"
#include "anchorflow/csv.hpp"
#include "anchorflow/edit.hpp"
#include "anchorflow/gmm.hpp"
#include "anchorflow/metrics.hpp"
#include "anchorflow/mlp.hpp"
#include "anchorflow/svg.hpp"

namespace af {

namespace {
std::atomic<Fault> g_fault{Fault::None};
}

void set_fault(Fault fault) { g_fault.store(fault); }
Fault current_fault() { return g_fault.load(std::memory_order_relaxed); }

std::optional<Fault> parse_fault(const std::string& name) {
  if (name == "none") return Fault::None;
  if (name == "anchor-grad-sign") return Fault::AnchorGradSign;
  if (name == "sigma-schedule") return Fault::SigmaSchedule;
  if (name == "shared-rng") return Fault::SharedRng;
  return std::nullopt;
}

const VerifyCheck* VerifyReport::first_failure() const {
  for (const auto& c : checks)
    if (!c.pass) return &c;
  return nullptr;
}

namespace {

struct ConstantField final : VelocityField {
  Vec c;
  explicit ConstantField(Vec value) : c(std::move(value)) {}
  int dim() const override { return static_cast<int>(c.size()); }
  Vec velocity(const Vec&, double, Cond, double) const override { return c; }
};

struct LinearField final : VelocityField {
  Mat m;
  explicit LinearField(Mat value) : m(std::move(value)) {}
  int dim() const override { return static_cast<int>(m.rows()); }
  Vec velocity(const Vec& x, double, Cond, double) const override { return m * x; }
};

Vec random_vec(rng::CounterStream& stream, int d, double scale = 1.0) {
  return scale * stream.normal_vec(d);
}

GaussianMixture random_mixture(rng::CounterStream& stream, int k, int d) {
  Vec w(k);
  for (int i = 0; i < k; ++i) w[i] = 0.2 + stream.next_unit();
  w /= w.sum();
  std::vector<Vec> means;
  std::vector<Mat> covs;
  for (int i = 0; i < k; ++i) {
    means.push_back(random_vec(stream, d, 3.0));
    Mat a(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) a(r, c) = stream.next_normal() * 0.4;
    Mat cov = a * a.transpose();
    cov.diagonal().array() += 0.2;
    covs.push_back(cov);
  }
  return GaussianMixture::create(w, means, covs);
}

AnchorSeries random_series(rng::CounterStream& stream, int len, int d) {
  AnchorSeries series;
  for (int i = 0; i < len; ++i) {
    series.s.push_back(random_vec(stream, d, 2.0));
    series.g.push_back(random_vec(stream, d, 2.0));
  }
  return series;
}

class Runner {
 public:
  explicit Runner(std::ostream* progress) : progress_(progress) {}

  void check(const std::string& name, const std::function<std::pair<bool, std::string>()>& fn) {
    VerifyCheck c;
    c.name = name;
    try {
      auto [pass, detail] = fn();
      c.pass = pass;
      c.detail = detail;
    } catch (const std::exception& e) {
      c.pass = false;
      c.detail = std::string("exception: ") + e.what();
    }
    if (progress_)
      *progress_ << (c.pass ? "[PASS] " : "[FAIL] ") << c.name
                 << (c.detail.empty() ? "" : " (" + c.detail + ")") << '\n';
    report_.checks.push_back(std::move(c));
    report_.all_pass = report_.all_pass && report_.checks.back().pass;
  }

  VerifyReport take() { return std::move(report_); }

 private:
  VerifyReport report_;
  std::ostream* progress_;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

std::pair<bool, std::string> pass_max(double observed, double bound, const char* label) {
  return {observed <= bound, std::string(label) + "=" + num(observed) + " bound=" + num(bound)};
}

}  // namespace

VerifyReport run_verify(std::ostream* progress) {
  Runner run(progress);

  run.check("schedule-linear-sigma", [] {
    const auto [grid, sched] = make_grid_and_schedule(50);
    double max_err = 0.0;
    for (int i = 0; i <= 50; ++i)
      max_err = std::max(max_err, std::abs(sched.sigma[static_cast<std::size_t>(i)] - grid.at(i)));
    double sum = 0.0;
    double max_step_err = 0.0;
    for (int i = 1; i <= 50; ++i) {
      sum += sched.delta(i);
      max_step_err = std::max(max_step_err, std::abs(sched.delta(i) - 0.02));
    }
    const bool ok = max_err == 0.0 && std::abs(sum - 1.0) <= 1e-12 && max_step_err <= 1e-15;
    return std::make_pair(ok, "max|sigma-t|=" + num(max_err));
  });

  run.check("interpolate-boundary-exactness", [] {
    rng::CounterStream stream(11, 0, 0, 0);
    for (int trial = 0; trial < 20; ++trial) {
      const Vec x0 = random_vec(stream, 3, 5.0);
      const Vec n = random_vec(stream, 3, 5.0);
      const Vec a = noisy_interpolate(x0, n, 0.0);
      const Vec b = noisy_interpolate(x0, n, 1.0);
      for (int i = 0; i < 3; ++i)
        if (std::memcmp(&a[i], &x0[i], 8) != 0 || std::memcmp(&b[i], &n[i], 8) != 0)
          return std::make_pair(false, std::string("boundary not bitwise"));
    }
    return std::make_pair(true, std::string());
  });

  run.check("constant-field-transport", [] {
    const Vec c = (Vec(2) << 1.25, -0.5).finished();
    const ConstantField field(c);
    double worst = 0.0;
    for (int T : {1, 7, 50, 128}) {
      const auto [grid, sched] = make_grid_and_schedule(T);
      const Vec start = (Vec(2) << 0.3, 0.9).finished();
      const Vec gen = euler_generate(field, Cond::Tar, 1.0, start, grid, sched);
      const Vec inv = euler_invert(field, Cond::Src, 1.0, start, grid, sched);
      worst = std::max(worst, (gen - (start - c)).cwiseAbs().maxCoeff());
      worst = std::max(worst, (inv - (start + c)).cwiseAbs().maxCoeff());
    }
    return pass_max(worst, 1e-12, "max_err");
  });

  run.check("euler-first-order-convergence", [] {
    const Vec mean = (Vec(2) << 3.0, 0.0).finished();
    const GaussianMixture gmm = GaussianMixture::isotropic({mean}, 1.0);
    struct Field final : VelocityField {
      const GaussianMixture& g;
      explicit Field(const GaussianMixture& gg) : g(gg) {}
      int dim() const override { return g.dim(); }
      Vec velocity(const Vec& x, double t, Cond, double) const override {
        return marginal_velocity(g, x, t);
      }
    } field(gmm);
    const Vec noise = (Vec(2) << 0.7, -1.3).finished();
    auto integrate = [&](int T) {
      const auto [grid, sched] = make_grid_and_schedule(T);
      return euler_generate(field, Cond::Tar, 1.0, noise, grid, sched);
    };
    const double gap1 = (integrate(25) - integrate(100)).norm();
    const double gap2 = (integrate(100) - integrate(400)).norm();
    return std::make_pair(gap2 <= gap1 / 2.0,
                          "gap(T)=" + num(gap1) + " gap(4T)=" + num(gap2));
  });

  run.check("responsibilities-normalization", [] {
    rng::CounterStream stream(12, 0, 0, 0);
    const GaussianMixture gmm = random_mixture(stream, 3, 2);
    double worst = 0.0;
    for (int trial = 0; trial < 25; ++trial) {
      const Vec x = random_vec(stream, 2, 4.0);
      const double t = stream.next_unit() * 0.999;
      const Vec gamma = responsibilities(gmm, x, t);
      worst = std::max(worst, std::abs(gamma.sum() - 1.0));
      GaussianMixture scaled = gmm;
      scaled.weights *= 7.5;  // responsibilities must not depend on the overall scale
      worst = std::max(worst, (responsibilities(scaled, x, t) - gamma).cwiseAbs().maxCoeff());
    }
    const Vec at_one = responsibilities(gmm, random_vec(stream, 2), 1.0);
    worst = std::max(worst, (at_one - gmm.weights).cwiseAbs().maxCoeff());
    return pass_max(worst, 1e-12, "max_err");
  });

  run.check("single-gaussian-closed-form", [] {
    rng::CounterStream stream(13, 0, 0, 0);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      const GaussianMixture gmm = random_mixture(stream, 1, 2);
      const Vec x = random_vec(stream, 2, 3.0);
      const double t = stream.next_unit();
      const Vec v = marginal_velocity(gmm, x, t);
      // hand-expanded single-component form
      const double a = 1.0 - t;
      const Mat c = a * a * gmm.covs[0] + t * t * Mat::Identity(2, 2);
      const Vec y = c.ldlt().solve(x - a * gmm.means[0]);
      const Vec expect = t * y - (gmm.means[0] + a * (gmm.covs[0] * y));
      worst = std::max(worst, (v - expect).cwiseAbs().maxCoeff());
    }
    return pass_max(worst, 1e-10, "max_err");
  });

  run.check("standard-normal-midpoint-zero", [] {
    const GaussianMixture gmm = GaussianMixture::standard_normal(2);
    rng::CounterStream stream(14, 0, 0, 0);
    double worst = 0.0;
    for (int trial = 0; trial < 25; ++trial)
      worst = std::max(worst,
                       marginal_velocity(gmm, random_vec(stream, 2, 5.0), 0.5).cwiseAbs().maxCoeff());
    return pass_max(worst, 1e-12, "max|v|");
  });

  run.check("cfg-affine-in-scale", [] {
    const EditTask task = paired_two_mode();
    rng::CounterStream stream(15, 0, 0, 0);
    double worst = 0.0;
    for (int trial = 0; trial < 25; ++trial) {
      const Vec x = random_vec(stream, 2, 4.0);
      const double t = 0.05 + 0.9 * stream.next_unit();
      const double s = 10.0 * stream.next_unit();
      const Vec v0 = cfg_velocity(task, x, t, Cond::Tar, 0.0);
      const Vec v1 = cfg_velocity(task, x, t, Cond::Tar, 1.0);
      const Vec vs = cfg_velocity(task, x, t, Cond::Tar, s);
      worst = std::max(worst, (vs - v0 - s * (v1 - v0)).cwiseAbs().maxCoeff());
    }
    return pass_max(worst, 1e-12, "max_err");
  });

  run.check("mc-oracle-agreement", [] {
    const EditTask task = paired_two_mode();
    rng::CounterStream probes(16, 0, 0, 0);
    double worst_sigmas = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      // probe where the path marginal has mass, else the importance
      // weights degenerate by design
      const double t = 0.15 + 0.7 * probes.next_unit();
      const Vec x0 = sample_mixture(task.source, probes);
      const Vec x = (1.0 - t) * x0 + t * probes.normal_vec(2);
      rng::CounterStream mc(17, static_cast<std::uint64_t>(trial), 0, 0);
      const McVelocity est = mc_velocity_oracle(task.source, x, t, 20000, mc);
      const Vec exact = marginal_velocity(task.source, x, t);
      for (int i = 0; i < 2; ++i)
        worst_sigmas = std::max(worst_sigmas,
                                std::abs(exact[i] - est.estimate[i]) / est.standard_error[i]);
    }
    return pass_max(worst_sigmas, 4.0, "max_sigmas");
  });

  run.check("derive-noise-determinism", [] {
    const Vec a = rng::derive_noise(42, 7, 13, 2, 8);
    const Vec b = rng::derive_noise(42, 7, 13, 2, 8);
    if ((a - b).cwiseAbs().maxCoeff() != 0.0)
      return std::make_pair(false, std::string("repeated call differs"));
    const Vec c = rng::derive_noise(42, 7, 13, 3, 8);
    if ((a - c).cwiseAbs().maxCoeff() == 0.0)
      return std::make_pair(false, std::string("rep index ignored"));
    return std::make_pair(true, std::string());
  });

  run.check("derive-noise-statistics", [] {
    double sum = 0.0, sum2 = 0.0;
    const int draws = 12500;
    for (int i = 0; i < draws; ++i) {
      const Vec v = rng::derive_noise(7, static_cast<std::uint64_t>(i), 1, 0, 8);
      sum += v.sum();
      sum2 += v.squaredNorm();
    }
    const double n = draws * 8.0;
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    const bool ok = std::abs(mean) <= 0.02 && std::abs(var - 1.0) <= 0.02;
    return std::make_pair(ok, "mean=" + num(mean) + " var=" + num(var));
  });

  run.check("anchor-parallelogram-identity", [] {
    rng::CounterStream stream(18, 0, 0, 0);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      const int len = 1 + static_cast<int>(stream.next_u64() % 16);
      const AnchorSeries series = random_series(stream, len, 2);
      const Vec a = random_vec(stream, 2, 2.0);
      double pair_term = 0.0;
      double anchor_term = 0.0;
      for (int i = 0; i < len; ++i) {
        pair_term += (series.g[static_cast<std::size_t>(i)] - series.s[static_cast<std::size_t>(i)]).squaredNorm();
        const Vec m =
            0.5 * (series.s[static_cast<std::size_t>(i)] + series.g[static_cast<std::size_t>(i)]);
        anchor_term += (a - m).squaredNorm();
      }
      const double lhs = strong_objective(series, a);
      const double rhs = 0.5 * pair_term + 2.0 * anchor_term;
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
    }
    return pass_max(worst, 1e-9, "max_rel");
  });

  run.check("anchor-optimal-closed-form", [] {
    rng::CounterStream stream(19, 0, 0, 0);
    double worst_obj = 0.0;
    double worst_grad = 0.0;
    double worst_min = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const int len = 1 + static_cast<int>(stream.next_u64() % 24);
      const AnchorSeries series = random_series(stream, len, 2);
      const Vec astar = optimal_anchor(series);
      const double reduced = reduced_objective(series);
      const double strong = strong_objective(series, astar);
      worst_obj = std::max(worst_obj, std::abs(strong - reduced) / std::max(1.0, strong));
      // numeric gradient of the strong objective at the optimum
      for (int i = 0; i < 2; ++i) {
        Vec ap = astar, am = astar;
        ap[i] += 1e-6;
        am[i] -= 1e-6;
        const double g = (strong_objective(series, ap) - strong_objective(series, am)) / 2e-6;
        worst_grad = std::max(worst_grad, std::abs(g) / std::max(1.0, strong));
      }
      // independent minimization by gradient descent
      Vec a = random_vec(stream, 2, 3.0);
      const double lr = 0.2 / static_cast<double>(len);
      for (int it = 0; it < 2000; ++it) {
        Vec grad = Vec::Zero(2);
        for (int i = 0; i < len; ++i)
          grad += (a - series.s[static_cast<std::size_t>(i)]) +
                  (a - series.g[static_cast<std::size_t>(i)]);
        grad *= 2.0;
        a -= lr * grad;
        if (grad.norm() < 1e-12) break;
      }
      worst_min = std::max(worst_min, (a - astar).cwiseAbs().maxCoeff());
    }
    const bool ok = worst_obj <= 1e-9 && worst_grad <= 1e-8 && worst_min <= 1e-8;
    return std::make_pair(ok, "rel_obj=" + num(worst_obj) + " grad=" + num(worst_grad) +
                                  " min_gap=" + num(worst_min));
  });

  run.check("anchor-lower-bound", [] {
    rng::CounterStream stream(20, 0, 0, 0);
    for (int trial = 0; trial < 50; ++trial) {
      const int len = 2 + static_cast<int>(stream.next_u64() % 8);
      AnchorSeries series = random_series(stream, len, 2);
      const double align = alignment_loss(series);
      const double reduced = reduced_objective(series);
      if (align > reduced * (1.0 + 1e-12) + 1e-12)
        return std::make_pair(false, std::string("bound violated"));
      // force identical midpoints: equality must hold
      const Vec m = (Vec(2) << 0.4, -0.7).finished();
      for (int i = 0; i < len; ++i)
        series.g[static_cast<std::size_t>(i)] = 2.0 * m - series.s[static_cast<std::size_t>(i)];
      const double align_eq = alignment_loss(series);
      const double reduced_eq = reduced_objective(series);
      if (std::abs(align_eq - reduced_eq) > 1e-9 * std::max(1.0, align_eq))
        return std::make_pair(false, std::string("equality branch violated"));
    }
    return std::make_pair(true, std::string());
  });

  run.check("anchor-equivariance", [] {
    rng::CounterStream stream(21, 0, 0, 0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const AnchorSeries series = random_series(stream, 6, 2);
      const Vec shift = random_vec(stream, 2, 3.0);
      AnchorSeries shifted = series;
      for (auto& v : shifted.s) v += shift;
      for (auto& v : shifted.g) v += shift;
      worst = std::max(worst, (optimal_anchor(shifted) - optimal_anchor(series) - shift)
                                  .cwiseAbs()
                                  .maxCoeff());
      worst = std::max(worst, std::abs(alignment_loss(shifted) - alignment_loss(series)));
      const double lambda = 1.7;
      AnchorSeries scaled = series;
      for (auto& v : scaled.s) v *= lambda;
      for (auto& v : scaled.g) v *= lambda;
      worst = std::max(worst,
                       std::abs(alignment_loss(scaled) - lambda * lambda * alignment_loss(series)) /
                           std::max(1.0, alignment_loss(scaled)));
    }
    return pass_max(worst, 1e-12, "max_err");
  });

  run.check("anchor-gradient-exact-linear-field", [] {
    Mat m(2, 2);
    m << 0.3, -0.2, 0.5, 0.1;
    const LinearField field(m);
    rng::CounterStream stream(22, 0, 0, 0);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const Vec x_fe = random_vec(stream, 2, 2.0);
      const Vec x_src_t = random_vec(stream, 2, 2.0);
      const Vec x_src_0 = random_vec(stream, 2, 2.0);
      const double t = 0.1 + 0.8 * stream.next_unit();
      const Vec got = anchor_gradient_exact(field, x_fe, x_src_t, x_src_0, t, 1.0, 1.0);
      const Vec x_tar_t = x_fe + x_src_t - x_src_0;
      const Vec residual = (x_tar_t + (1.0 - t) * (m * x_tar_t)) -
                           (x_src_t + (1.0 - t) * (m * x_src_t));
      const Vec expect = (Mat::Identity(2, 2) + (1.0 - t) * m).transpose() * residual;
      worst = std::max(worst, (got - expect).cwiseAbs().maxCoeff());
    }
    return pass_max(worst, 1e-6, "max_err");
  });

  run.check("gradient-expansion-identity", [] {
    rng::CounterStream stream(23, 0, 0, 0);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const EditTask task = EditTask::create(random_mixture(stream, 2, 2),
                                             random_mixture(stream, 2, 2));
      const GmmOracleField field(task);
      EditConfig cfg;
      cfg.T = 20;
      cfg.n_min = 3;
      cfg.n_max = 17;
      cfg.n_avg = trial % 2 == 0 ? 1 : 3;
      cfg.seed = 100 + static_cast<std::uint64_t>(trial);
      cfg.method = Method::AnchorFlow;
      const Vec x_src = random_vec(stream, 2, 2.0);
      const EditResult result = anchorflow_sample(field, task, cfg, x_src);
      for (const StepRecord& rec : result.trajectory) {
        const Vec expect = (2.0 - rec.t) * ((rec.x_fe - x_src) +
                                            (1.0 - rec.t) * (rec.v_tar - rec.v_src));
        worst = std::max(worst, (rec.grad - expect).cwiseAbs().maxCoeff());
      }
    }
    return pass_max(worst, 1e-12, "max_err");
  });

  run.check("identity-edit-invariance", [] {
    rng::CounterStream stream(24, 0, 0, 0);
    const GaussianMixture gmm = random_mixture(stream, 2, 2);
    const EditTask task = EditTask::create(gmm, gmm);
    const GmmOracleField field(task);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      rng::CounterStream draw(25, static_cast<std::uint64_t>(trial), 0, 0);
      const Vec x_src = sample_mixture(task.source, draw);
      for (int n_avg : {1, 4}) {
        EditConfig cfg;
        cfg.n_avg = n_avg;
        cfg.seed = static_cast<std::uint64_t>(trial);
        for (Method m : {Method::FlowEdit, Method::AnchorFlow}) {
          cfg.method = m;
          const EditResult r = run_edit(field, task, cfg, x_src);
          worst = std::max(worst, (r.edited - x_src).cwiseAbs().maxCoeff());
        }
      }
    }
    return pass_max(worst, 1e-12, "max_err");
  });

  run.check("first-active-step-zero", [] {
    const EditTask task = paired_two_mode();
    const GmmOracleField field(task);
    EditConfig cfg;
    cfg.n_max = cfg.T;  // first active step sits at t = 1
    cfg.method = Method::AnchorFlow;
    rng::CounterStream draw(26, 0, 0, 0);
    const Vec x_src = sample_mixture(task.source, draw);
    const EditResult r = anchorflow_sample(field, task, cfg, x_src);
    const double first_update = r.trajectory.front().update.norm();
    return pass_max(first_update, 0.0, "first_update");
  });

  run.check("n-avg-consistency", [] {
    const EditTask task = paired_two_mode();
    const GmmOracleField field(task);
    rng::CounterStream draw(27, 0, 0, 0);
    const Vec x_src = sample_mixture(task.source, draw);
    const int m = 4;
    EditConfig cfg;
    cfg.method = Method::AnchorFlow;
    cfg.n_avg = m;
    cfg.n_min = cfg.n_max = 30;  // single active step isolates one update
    const EditResult multi = anchorflow_sample(field, task, cfg, x_src);
    Vec mean = Vec::Zero(2);
    for (int rep = 0; rep < m; ++rep) {
      // one-rep update with rep_idx forced to `rep` via a single-rep config
      // is not reachable through the public API (rep indices always start
      // at 0), so recompute the per-rep directions directly.
      const auto [grid, sched] = make_grid_and_schedule(cfg.T, cfg.schedule);
      const double t = grid.at(30);
      const Vec noise = rng::derive_noise(cfg.seed, 0, 30, static_cast<std::uint64_t>(rep), 2);
      const Vec x_src_t = noisy_interpolate(x_src, noise, t);
      const Vec x_tar_t = x_src_t + (x_src - x_src);
      const Vec v_src = field.velocity(x_src_t, t, Cond::Src, cfg.s_src);
      const Vec v_tar = field.velocity(x_tar_t, t, Cond::Tar, cfg.s_tar);
      const Vec f_tar = x_tar_t + (1.0 - t) * v_tar;
      const Vec f_src = x_src_t + (1.0 - t) * v_src;
      mean += anchor_gradient(f_tar, f_src, t);
    }
    mean /= static_cast<double>(m);
    const double err = (multi.trajectory.front().grad - mean).cwiseAbs().maxCoeff();
    return pass_max(err, 1e-15, "max_err");
  });

  run.check("mlp-gradient-check", [] {
    const EditTask task = paired_two_mode();
    const MlpField field = MlpField::init(2, 5);
    rng::CounterStream stream(28, 0, 0, 0);
    const Batch batch = sample_batch(task, 32, stream);
    const double err = numeric_grad_check(field, batch, 1e-5);
    return pass_max(err, 1e-4, "max_rel");
  });

  run.check("energy-distance-properties", [] {
    rng::CounterStream stream(29, 0, 0, 0);
    std::vector<Vec> a;
    for (int i = 0; i < 40; ++i) a.push_back(random_vec(stream, 2, 2.0));
    const double self = energy_distance(a, a);
    std::vector<Vec> p = {(Vec(2) << 0.0, 0.0).finished()};
    std::vector<Vec> q = {(Vec(2) << 3.0, 4.0).finished()};
    const double point = energy_distance(p, q);
    std::vector<Vec> b;
    for (int i = 0; i < 25; ++i) b.push_back(random_vec(stream, 2, 2.0));
    const double sym = std::abs(energy_distance(a, b) - energy_distance(b, a));
    const bool ok = std::abs(self) <= 1e-12 && std::abs(point - 10.0) <= 1e-12 && sym <= 1e-12;
    return std::make_pair(ok, "self=" + num(self) + " sym=" + num(sym));
  });

  run.check("cancellation-ratio-edges", [] {
    auto make_record = [](double x, double y) {
      StepRecord rec;
      rec.update = (Vec(2) << x, y).finished();
      return rec;
    };
    std::vector<StepRecord> aligned = {make_record(1, 0), make_record(1, 0), make_record(1, 0)};
    std::vector<StepRecord> alternating = {make_record(1, 0), make_record(-1, 0),
                                           make_record(1, 0), make_record(-1, 0)};
    std::vector<StepRecord> zero = {make_record(0, 0), make_record(0, 0)};
    const bool ok = std::abs(cancellation_ratio(aligned) - 1.0) <= 1e-15 &&
                    cancellation_ratio(alternating) <= 1e-15 &&
                    cancellation_ratio(zero) == 1.0;
    return std::make_pair(ok, std::string());
  });

  run.check("svg-byte-stability", [] {
    rng::CounterStream stream(30, 0, 0, 0);
    std::vector<ScatterBatch> batches(2);
    batches[0].label = "a";
    batches[1].label = "b";
    batches[1].outlined = true;
    for (int i = 0; i < 30; ++i) {
      batches[0].points.push_back(random_vec(stream, 2, 3.0));
      batches[1].points.push_back(random_vec(stream, 2, 3.0));
    }
    const std::string one = render_scatter_svg(batches);
    const std::string two = render_scatter_svg(batches);
    std::size_t markers = 0;
    for (std::size_t pos = one.find("<circle"); pos != std::string::npos;
         pos = one.find("<circle", pos + 1))
      ++markers;
    // 60 data markers plus 2 legend markers
    const bool ok = one == two && markers == 62;
    return std::make_pair(ok, "markers=" + std::to_string(markers));
  });

  run.check("csv-format-round-trip", [] {
    rng::CounterStream stream(31, 0, 0, 0);
    for (int i = 0; i < 200; ++i) {
      const double v = (stream.next_unit() - 0.5) * std::pow(10.0, (i % 17) - 8);
      const std::string s = csv::format_real(v);
      if (std::stod(s) != v) return std::make_pair(false, "round-trip failed at " + s);
    }
    return std::make_pair(true, std::string());
  });

  return run.take();
}

int write_verify_report(const VerifyReport& report, std::ostream& out) {
  for (const auto& c : report.checks)
    out << (c.pass ? "[PASS] " : "[FAIL] ") << c.name
        << (c.detail.empty() ? "" : " (" + c.detail + ")") << '\n';
  if (report.all_pass) {
    out << "verify: all " << report.checks.size() << " checks passed\n";
    return 0;
  }
  out << "verify: FAILED at check '" << report.first_failure()->name << "'\n";
  return 1;
}

}  // namespace af
