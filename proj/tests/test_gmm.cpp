#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "anchorflow/gmm.hpp"

using namespace af;

namespace {

GaussianMixture random_gmm(int k, int d, std::uint64_t seed) {
  rng::CounterStream stream(seed, 0, 0, 0);
  Vec w(k);
  for (int i = 0; i < k; ++i) w[i] = 0.25 + stream.next_unit();
  w /= w.sum();
  std::vector<Vec> means;
  std::vector<Mat> covs;
  for (int i = 0; i < k; ++i) {
    means.push_back(3.0 * stream.normal_vec(d));
    Mat a(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) a(r, c) = 0.5 * stream.next_normal();
    Mat cov = a * a.transpose();
    cov.diagonal().array() += 0.3;
    covs.push_back(cov);
  }
  return GaussianMixture::create(w, means, covs);
}

/// Direct density evaluation with the explicit 2x2 inverse; test-only
/// oracle independent of the Cholesky path in mixture_logpdf.
double brute_force_logpdf(const GaussianMixture& gmm, const Vec& x) {
  double density = 0.0;
  for (int k = 0; k < gmm.components(); ++k) {
    const Mat& c = gmm.covs[static_cast<std::size_t>(k)];
    const Vec r = x - gmm.means[static_cast<std::size_t>(k)];
    const double det = c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0);
    const double quad =
        (c(1, 1) * r[0] * r[0] - 2.0 * c(0, 1) * r[0] * r[1] + c(0, 0) * r[1] * r[1]) / det;
    density += gmm.weights[k] * std::exp(-0.5 * quad) /
               (2.0 * std::numbers::pi * std::sqrt(det));
  }
  return std::log(density);
}

}  // namespace

TEST_CASE("mixture validation rejects bad inputs") {
  const Vec mu = Vec::Zero(2);
  const Mat eye = Mat::Identity(2, 2);
  CHECK_THROWS_AS(GaussianMixture::create((Vec(1) << 0.9).finished(), {mu}, {eye}),
                  std::invalid_argument);  // weights must sum to 1
  CHECK_THROWS_AS(GaussianMixture::create((Vec(2) << 1.5, -0.5).finished(), {mu, mu}, {eye, eye}),
                  std::invalid_argument);  // negative weight
  Mat asym = eye;
  asym(0, 1) = 0.2;
  CHECK_THROWS_AS(GaussianMixture::create((Vec(1) << 1.0).finished(), {mu}, {asym}),
                  std::invalid_argument);
  Mat indef = eye;
  indef(0, 0) = -1.0;
  CHECK_THROWS_AS(GaussianMixture::create((Vec(1) << 1.0).finished(), {mu}, {indef}),
                  std::invalid_argument);
}

TEST_CASE("logpdf: standard normal at the origin") {
  const GaussianMixture gmm = GaussianMixture::standard_normal(2);
  CHECK(mixture_logpdf(gmm, Vec::Zero(2)) ==
        doctest::Approx(std::log(1.0 / (2.0 * std::numbers::pi))).epsilon(1e-12));
}

TEST_CASE("logpdf: duplicated component collapses to the single one") {
  const Vec mu = (Vec(2) << 0.7, -0.4).finished();
  Mat cov(2, 2);
  cov << 1.3, 0.2, 0.2, 0.9;
  const auto single = GaussianMixture::create((Vec(1) << 1.0).finished(), {mu}, {cov});
  const auto doubled =
      GaussianMixture::create((Vec(2) << 0.5, 0.5).finished(), {mu, mu}, {cov, cov});
  rng::CounterStream stream(3, 0, 0, 0);
  for (int i = 0; i < 10; ++i) {
    const Vec x = 2.0 * stream.normal_vec(2);
    CHECK(mixture_logpdf(doubled, x) == doctest::Approx(mixture_logpdf(single, x)).epsilon(1e-14));
  }
}

TEST_CASE("logpdf matches the brute-force summation oracle") {
  const GaussianMixture gmm = random_gmm(3, 2, 101);
  rng::CounterStream stream(4, 0, 0, 0);
  for (int i = 0; i < 10; ++i) {
    const Vec x = 3.0 * stream.normal_vec(2);
    CHECK(mixture_logpdf(gmm, x) == doctest::Approx(brute_force_logpdf(gmm, x)).epsilon(1e-9));
  }
}

TEST_CASE("sampling: vanishing covariance pins samples to the mean") {
  const Vec mu = (Vec(2) << 2.0, -1.0).finished();
  const auto gmm =
      GaussianMixture::create((Vec(1) << 1.0).finished(), {mu}, {1e-12 * Mat::Identity(2, 2)});
  rng::CounterStream stream(5, 0, 0, 0);
  for (int i = 0; i < 100; ++i)
    CHECK((sample_mixture(gmm, stream) - mu).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("sampling: 50k standard-normal draws match I to 0.05 Frobenius") {
  const GaussianMixture gmm = GaussianMixture::standard_normal(2);
  rng::CounterStream stream(6, 0, 0, 0);
  const int n = 50000;
  Vec mean = Vec::Zero(2);
  Mat second = Mat::Zero(2, 2);
  for (int i = 0; i < n; ++i) {
    const Vec x = sample_mixture(gmm, stream);
    mean += x;
    second += x * x.transpose();
  }
  mean /= n;
  const Mat cov = second / n - mean * mean.transpose();
  CHECK((cov - Mat::Identity(2, 2)).norm() < 0.05);
}

TEST_CASE("sampling: fixed stream key replays the identical sample") {
  const GaussianMixture gmm = random_gmm(3, 2, 9);
  rng::CounterStream a(77, 1, 2, 3);
  rng::CounterStream b(77, 1, 2, 3);
  for (int i = 0; i < 10; ++i)
    CHECK((sample_mixture(gmm, a) - sample_mixture(gmm, b)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("responsibilities: trivial cases") {
  const GaussianMixture single = random_gmm(1, 2, 11);
  CHECK(responsibilities(single, Vec::Zero(2), 0.3) == (Vec(1) << 1.0).finished());

  const GaussianMixture gmm = random_gmm(3, 2, 12);
  // t=1: pure noise, posterior equals the prior weights exactly
  CHECK((responsibilities(gmm, (Vec(2) << 5.0, -2.0).finished(), 1.0) - gmm.weights)
            .cwiseAbs()
            .maxCoeff() == 0.0);

  // symmetric two-mode mixture, probe on the symmetry axis
  const auto sym = GaussianMixture::isotropic(
      {(Vec(2) << 3.0, 0.0).finished(), (Vec(2) << -3.0, 0.0).finished()}, 0.5);
  for (double t : {0.0, 0.25, 0.7, 0.95}) {
    const Vec gamma = responsibilities(sym, (Vec(2) << 0.0, 1.3).finished(), t);
    CHECK(gamma[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(gamma[1] == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("responsibilities sum to one and ignore weight rescaling") {
  GaussianMixture gmm = random_gmm(4, 3, 13);
  rng::CounterStream stream(14, 0, 0, 0);
  for (int i = 0; i < 30; ++i) {
    const Vec x = 4.0 * stream.normal_vec(3);
    const double t = stream.next_unit() * 0.999;
    const Vec gamma = responsibilities(gmm, x, t);
    CHECK(std::abs(gamma.sum() - 1.0) <= 1e-12);
    GaussianMixture scaled = gmm;
    scaled.weights *= 1234.5;
    CHECK((responsibilities(scaled, x, t) - gamma).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("marginal velocity: standard normal closed form") {
  const GaussianMixture gmm = GaussianMixture::standard_normal(2);
  rng::CounterStream stream(15, 0, 0, 0);
  for (int i = 0; i < 20; ++i) {
    const Vec x = 3.0 * stream.normal_vec(2);
    const double t = stream.next_unit();
    const double a = 1.0 - t;
    const Vec expect = (2.0 * t - 1.0) / (a * a + t * t) * x;
    CHECK((marginal_velocity(gmm, x, t) - expect).cwiseAbs().maxCoeff() <= 1e-12);
  }
  // at the path midpoint the field vanishes identically
  CHECK(marginal_velocity(gmm, (Vec(2) << 9.0, -4.0).finished(), 0.5).cwiseAbs().maxCoeff() ==
        0.0);
  // t=1 reduces to v = x for the standard normal
  const Vec x = (Vec(2) << 1.0, 2.0).finished();
  CHECK((marginal_velocity(gmm, x, 1.0) - x).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("marginal velocity agrees with the Monte-Carlo oracle") {
  const GaussianMixture gmm = random_gmm(2, 2, 16);
  rng::CounterStream probes(17, 0, 0, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const double t = 0.1 + 0.8 * probes.next_unit();
    const Vec x0 = sample_mixture(gmm, probes);
    const Vec x = (1.0 - t) * x0 + t * probes.normal_vec(2);
    rng::CounterStream mc(18, static_cast<std::uint64_t>(trial), 0, 0);
    const McVelocity est = mc_velocity_oracle(gmm, x, t, 50000, mc);
    const Vec exact = marginal_velocity(gmm, x, t);
    for (int i = 0; i < 2; ++i)
      CHECK(std::abs(exact[i] - est.estimate[i]) <= 3.0 * est.standard_error[i]);
  }
}

TEST_CASE("mc oracle: symmetry and single-Gaussian spot values") {
  const GaussianMixture gmm = GaussianMixture::standard_normal(2);
  rng::CounterStream a(19, 0, 0, 0);
  const McVelocity at_zero = mc_velocity_oracle(gmm, Vec::Zero(2), 0.5, 100000, a);
  for (int i = 0; i < 2; ++i) CHECK(std::abs(at_zero.estimate[i]) <= 3.0 * at_zero.standard_error[i]);

  rng::CounterStream b(20, 0, 0, 0);
  const Vec probe = (Vec(2) << 1.0, 0.0).finished();
  const McVelocity off = mc_velocity_oracle(gmm, probe, 0.75, 100000, b);
  const Vec expect = (2.0 * 0.75 - 1.0) / (0.25 * 0.25 + 0.75 * 0.75) * probe;
  CHECK(expect[0] == doctest::Approx(0.8));
  for (int i = 0; i < 2; ++i)
    CHECK(std::abs(off.estimate[i] - expect[i]) <= 3.0 * off.standard_error[i]);
}

TEST_CASE("mc oracle degenerates loudly far from the marginal mass") {
  const GaussianMixture gmm = GaussianMixture::standard_normal(2);
  rng::CounterStream stream(21, 0, 0, 0);
  CHECK_THROWS_AS(mc_velocity_oracle(gmm, (Vec(2) << 500.0, 0.0).finished(), 0.1, 1000, stream),
                  OracleDegenerateError);
  CHECK_THROWS_AS(mc_velocity_oracle(gmm, Vec::Zero(2), 0.5, 10, stream), std::invalid_argument);
  CHECK_THROWS_AS(mc_velocity_oracle(gmm, Vec::Zero(2), 1.0, 5000, stream), std::invalid_argument);
}

TEST_CASE("cfg velocity collapses at s=1 and s=0 and is affine in s") {
  const EditTask task = paired_two_mode();
  rng::CounterStream stream(22, 0, 0, 0);
  for (int i = 0; i < 10; ++i) {
    const Vec x = 2.0 * stream.normal_vec(2);
    const double t = 0.1 + 0.8 * stream.next_unit();
    const Vec v_c = marginal_velocity(task.target, x, t);
    const Vec v_u = marginal_velocity(task.uncond, x, t);
    CHECK((cfg_velocity(task, x, t, Cond::Tar, 1.0) - v_c).cwiseAbs().maxCoeff() == 0.0);
    CHECK((cfg_velocity(task, x, t, Cond::Tar, 0.0) - v_u).cwiseAbs().maxCoeff() == 0.0);
    const double s = 7.5;  // default target scale
    const Vec vs = cfg_velocity(task, x, t, Cond::Tar, s);
    CHECK((vs - (v_u + s * (v_c - v_u))).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("velocity errors: dimension and t-range") {
  const GaussianMixture gmm = GaussianMixture::standard_normal(2);
  CHECK_THROWS_AS(marginal_velocity(gmm, Vec::Zero(3), 0.5), std::invalid_argument);
  CHECK_THROWS_AS(marginal_velocity(gmm, Vec::Zero(2), -0.1), std::invalid_argument);
  CHECK_THROWS_AS(marginal_velocity(gmm, Vec::Zero(2), 1.5), std::invalid_argument);
}
