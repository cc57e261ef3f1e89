#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "anchorflow/metrics.hpp"

using namespace af;

namespace {

const EditTask& task() {
  static const EditTask t = paired_two_mode();
  return t;
}

std::vector<StepRecord> records(std::initializer_list<std::pair<double, double>> updates) {
  std::vector<StepRecord> out;
  for (auto [x, y] : updates) {
    StepRecord rec;
    rec.update = (Vec(2) << x, y).finished();
    out.push_back(rec);
  }
  return out;
}

}  // namespace

TEST_CASE("paired oracle point: means map to paired means") {
  for (int k = 0; k < 2; ++k) {
    const OraclePoint p = paired_oracle_point(task(), task().source.means[static_cast<std::size_t>(k)]);
    CHECK(p.source_component == k);
    CHECK_FALSE(p.ambiguous);
    CHECK((p.point - task().target.means[static_cast<std::size_t>(k)]).cwiseAbs().maxCoeff() ==
          0.0);
  }
}

TEST_CASE("paired oracle point: identical mixtures give the identity") {
  const EditTask same = EditTask::create(task().source, task().source);
  rng::CounterStream stream(1, 0, 0, 0);
  for (int i = 0; i < 20; ++i) {
    const Vec x = sample_mixture(same.source, stream);
    CHECK((paired_oracle_point(same, x).point - x).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("responsibility assignment agrees with nearest-mean for unambiguous points") {
  rng::CounterStream stream(2, 0, 0, 0);
  for (int i = 0; i < 100; ++i) {
    const Vec x = sample_mixture(task().source, stream);
    const OraclePoint p = paired_oracle_point(task(), x);
    if (p.ambiguous) continue;
    // brute force: nearest mean (equal weights, equal isotropic covariances)
    int nearest = 0;
    double best = (x - task().source.means[0]).norm();
    for (int k = 1; k < task().source.components(); ++k) {
      const double d = (x - task().source.means[static_cast<std::size_t>(k)]).norm();
      if (d < best) {
        best = d;
        nearest = k;
      }
    }
    CHECK(p.source_component == nearest);
  }
}

TEST_CASE("ambiguity is flagged on the symmetry axis") {
  const Vec midpoint = (Vec(2) << -3.0, 0.0).finished();  // equidistant from both modes
  CHECK(paired_oracle_point(task(), midpoint).ambiguous);
}

TEST_CASE("identity error basics") {
  const Vec x_src = (Vec(2) << -2.7, 0.8).finished();
  const OraclePoint p = paired_oracle_point(task(), x_src);
  const IdentityScore hit = identity_error(task(), x_src, p.point);
  CHECK(hit.error == 0.0);
  CHECK(hit.assignment_consistent);

  const EditTask same = EditTask::create(task().source, task().source);
  const IdentityScore self = identity_error(same, x_src, x_src);
  CHECK(self.error == 0.0);
  CHECK(self.assignment_consistent);

  // an edit near the wrong target mode is flagged inconsistent
  const Vec wrong = task().target.means[1];
  const Vec near_first = task().source.means[0];
  CHECK_FALSE(identity_error(task(), near_first, wrong).assignment_consistent);
}

TEST_CASE("identity error is translation equivariant") {
  rng::CounterStream stream(3, 0, 0, 0);
  const Vec shift = (Vec(2) << 1.3, -2.1).finished();
  GaussianMixture src = task().source;
  GaussianMixture tar = task().target;
  for (auto& m : src.means) m += shift;
  for (auto& m : tar.means) m += shift;
  const EditTask moved = EditTask::create(src, tar);
  for (int i = 0; i < 20; ++i) {
    const Vec x_src = sample_mixture(task().source, stream);
    const Vec x_edit = x_src + 4.0 * stream.normal_vec(2);
    const IdentityScore a = identity_error(task(), x_src, x_edit);
    const IdentityScore b = identity_error(moved, x_src + shift, x_edit + shift);
    CHECK(a.error == doctest::Approx(b.error).epsilon(1e-12));
    CHECK(a.assignment_consistent == b.assignment_consistent);
  }
}

TEST_CASE("semantic score is the target log-density") {
  const Vec peak = task().target.means[0];
  const double at_peak = semantic_score(task(), peak);
  // monotone decay into the tails
  double prev = at_peak;
  for (double r : {2.0, 5.0, 10.0, 30.0}) {
    const double s = semantic_score(task(), peak + (Vec(2) << r, 0.0).finished());
    CHECK(s < prev);
    prev = s;
  }
}

TEST_CASE("energy distance: identity, point masses, symmetry") {
  rng::CounterStream stream(4, 0, 0, 0);
  std::vector<Vec> a;
  for (int i = 0; i < 50; ++i) a.push_back(stream.normal_vec(2));
  CHECK(std::abs(energy_distance(a, a)) <= 1e-12);

  const std::vector<Vec> p = {(Vec(2) << 0.0, 0.0).finished()};
  const std::vector<Vec> q = {(Vec(2) << 0.0, 2.5).finished()};
  CHECK(energy_distance(p, q) == doctest::Approx(5.0).epsilon(1e-12));

  std::vector<Vec> b;
  for (int i = 0; i < 30; ++i) b.push_back((Vec(2) << 2.0, 0.0).finished() + stream.normal_vec(2));
  CHECK(energy_distance(a, b) == doctest::Approx(energy_distance(b, a)).epsilon(1e-12));
  CHECK(energy_distance(a, b) > 0.0);
  CHECK_THROWS_AS(energy_distance({}, b), std::invalid_argument);
}

TEST_CASE("cancellation ratio: edges and scale invariance") {
  CHECK(cancellation_ratio(records({{1, 0}, {1, 0}, {1, 0}})) == doctest::Approx(1.0));
  CHECK(cancellation_ratio(records({{1, 0}, {-1, 0}, {1, 0}, {-1, 0}})) <= 1e-15);
  CHECK(cancellation_ratio(records({{0, 0}, {0, 0}})) == 1.0);
  CHECK_THROWS_AS(cancellation_ratio(records({{1, 0}})), std::invalid_argument);

  rng::CounterStream stream(5, 0, 0, 0);
  std::vector<StepRecord> traj;
  for (int i = 0; i < 12; ++i) {
    StepRecord rec;
    rec.update = stream.normal_vec(2);
    traj.push_back(rec);
  }
  const double base = cancellation_ratio(traj);
  for (auto& rec : traj) rec.update *= 37.5;
  CHECK(cancellation_ratio(traj) == doctest::Approx(base).epsilon(1e-12));
  CHECK(base > 0.0);
  CHECK(base <= 1.0);
}

TEST_CASE("report aggregates equal recomputation and ignore row order") {
  rng::CounterStream stream(6, 0, 0, 0);
  std::vector<MetricsRow> rows;
  std::vector<Vec> edited, ref;
  for (int i = 0; i < 40; ++i) {
    MetricsRow r;
    r.identity_error = stream.next_unit();
    r.assignment_consistent = stream.next_u64() % 2 == 0;
    r.target_loglik = -stream.next_unit() * 10.0;
    r.source_loglik = -stream.next_unit() * 10.0;
    r.cancel_ratio = stream.next_unit();
    rows.push_back(r);
    edited.push_back(stream.normal_vec(2));
    ref.push_back(stream.normal_vec(2));
  }
  const MetricsReport a = MetricsReport::build(rows, edited, ref);

  double mean_id = 0.0;
  for (const auto& r : rows) mean_id += r.identity_error;
  mean_id /= static_cast<double>(rows.size());
  CHECK(a.mean_identity_error == doctest::Approx(mean_id).epsilon(1e-12));

  std::reverse(rows.begin(), rows.end());
  const MetricsReport b = MetricsReport::build(rows, edited, ref);
  CHECK(a.mean_identity_error == doctest::Approx(b.mean_identity_error).epsilon(1e-12));
  CHECK(a.assignment_rate == doctest::Approx(b.assignment_rate).epsilon(1e-12));
  CHECK(a.mean_cancel_ratio == doctest::Approx(b.mean_cancel_ratio).epsilon(1e-12));
  CHECK(a.energy_to_target_ref == b.energy_to_target_ref);
}
