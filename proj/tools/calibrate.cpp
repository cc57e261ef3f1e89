// Regenerates the reference measurements behind the frozen constants in
// the test suites. Run after any change that intentionally shifts
// numerical behavior, then re-freeze the affected constants.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "anchorflow/edit.hpp"
#include "anchorflow/metrics.hpp"
#include "anchorflow/mlp.hpp"

using namespace af;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Vec draw_source(const EditTask& task, std::uint64_t seed, std::uint64_t idx) {
  rng::CounterStream stream(seed, rng::kTagSourceDraw, idx, 0);
  return sample_mixture(task.source, stream);
}

void section(const char* name) { std::printf("\n== %s ==\n", name); }

void training_references(const EditTask& task) {
  section("training reference run (seed 0, defaults)");
  const auto t0 = Clock::now();
  TrainConfig cfg;
  const TrainResult result = train_field(task, cfg);
  std::printf("wall: %.1fs\n", elapsed(t0));

  const auto& trace = result.loss_trace;
  double tail500 = 0.0, tail2000 = 0.0;
  for (std::size_t i = trace.size() - 500; i < trace.size(); ++i) tail500 += trace[i];
  for (std::size_t i = trace.size() - 2000; i < trace.size(); ++i) tail2000 += trace[i];
  std::printf("final smoothed loss (500): %.6f\n", tail500 / 500.0);
  std::printf("final smoothed loss (2000): %.6f\n", tail2000 / 2000.0);

  // irreducible conditional variance
  rng::CounterStream stream(41, 0, 0, 0);
  const int n = 200000;
  double total = 0.0, explained = 0.0;
  for (int i = 0; i < n; ++i) {
    const Batch b = sample_batch(task, 1, stream);
    const Vec x0 = b.x0.col(0);
    const Vec x1 = b.x1.col(0);
    const double t = b.t[0];
    const Vec xt = (1.0 - t) * x0 + t * x1;
    total += (x1 - x0).squaredNorm();
    explained += marginal_velocity(task.mixture(b.cond[0]), xt, t).squaredNorm();
  }
  std::printf("irreducible variance: %.6f (loss/irreducible = %.4f)\n", (total - explained) / n,
              (tail2000 / 2000.0) / ((total - explained) / n));

  // probe-point MSE
  rng::CounterStream probes(42, 0, 0, 0);
  const MlpFieldHandle handle(result.field);
  double mse = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Cond c = static_cast<Cond>(probes.next_u64() % 3);
    const double t = probes.next_unit();
    const Vec x0 = sample_mixture(task.mixture(c), probes);
    const Vec xt = (1.0 - t) * x0 + t * probes.normal_vec(2);
    mse += (handle.velocity(xt, t, c, 1.0) - marginal_velocity(task.mixture(c), xt, t))
               .squaredNorm();
  }
  std::printf("probe mse (100 pts): %.6f\n", mse / 100.0);

  // sampler compatibility
  const auto [grid, sched] = make_grid_and_schedule(50);
  std::vector<Vec> generated, reference;
  for (int i = 0; i < 2000; ++i) {
    generated.push_back(euler_generate(handle, Cond::Tar, 1.0,
                                       rng::derive_noise(43, static_cast<std::uint64_t>(i), 0, 0, 2),
                                       grid, sched));
    rng::CounterStream s(44, static_cast<std::uint64_t>(i), 0, 0);
    reference.push_back(sample_mixture(task.target, s));
  }
  std::printf("trained-sampler energy distance (2k v 2k): %.6f\n",
              energy_distance(generated, reference));
}

void generation_fidelity(const EditTask& task) {
  section("generation fidelity (C6 reference)");
  const auto t0 = Clock::now();
  const GmmOracleField field(task);
  const auto [grid, sched] = make_grid_and_schedule(50);
  const int n = 20000;
  std::vector<Vec> generated, reference;
  generated.reserve(n);
  reference.reserve(n);
  for (int i = 0; i < n; ++i) {
    generated.push_back(euler_generate(field, Cond::Tar, 1.0,
                                       rng::derive_noise(600, static_cast<std::uint64_t>(i), 0, 0, 2),
                                       grid, sched));
    rng::CounterStream s(601, static_cast<std::uint64_t>(i), 0, 0);
    reference.push_back(sample_mixture(task.target, s));
  }
  const double integrate_s = elapsed(t0);
  const double dist = energy_distance(generated, reference);
  std::printf("energy distance (20k v 20k): %.6f  [integrate %.1fs, total %.1fs]\n", dist,
              integrate_s, elapsed(t0));
}

void method_comparison(const EditTask& task) {
  section("method comparison, paper defaults, 200 paired samples (C7/C8)");
  const auto t0 = Clock::now();
  const GmmOracleField field(task);
  const int n = 200;
  double sem_fe = 0.0, sem_af = 0.0, can_fe = 0.0, can_af = 0.0;
  double id_af = 0.0, id_fixed = 0.0, id_fe = 0.0;
  double sem_fixed = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const Vec x_src = draw_source(task, 0, i);
    EditConfig cfg;
    cfg.method = Method::FlowEdit;
    const EditResult fe = run_edit(field, task, cfg, x_src, i);
    cfg.method = Method::AnchorFlow;
    const EditResult af = run_edit(field, task, cfg, x_src, i);
    cfg.fixed_anchor = true;
    const EditResult fx = run_edit(field, task, cfg, x_src, i);
    sem_fe += semantic_score(task, fe.edited);
    sem_af += semantic_score(task, af.edited);
    sem_fixed += semantic_score(task, fx.edited);
    can_fe += cancellation_ratio(fe.trajectory);
    can_af += cancellation_ratio(af.trajectory);
    id_fe += identity_error(task, x_src, fe.edited).error;
    id_af += identity_error(task, x_src, af.edited).error;
    id_fixed += identity_error(task, x_src, fx.edited).error;
  }
  std::printf("mean semantic:  flowedit %.4f | anchorflow %.4f | fixed-anchor %.4f\n", sem_fe / n,
              sem_af / n, sem_fixed / n);
  std::printf("mean cancel:    flowedit %.4f | anchorflow %.4f\n", can_fe / n, can_af / n);
  std::printf("mean identity:  flowedit %.4f | anchorflow %.4f | fixed-anchor %.4f\n", id_fe / n,
              id_af / n, id_fixed / n);
  std::printf("[%.1fs]\n", elapsed(t0));
}

void navg_stabilization(const EditTask& task) {
  section("n_avg stabilization (C9 reference)");
  const GmmOracleField field(task);
  const Vec x_src = draw_source(task, 0, 7);
  for (Method m : {Method::FlowEdit, Method::AnchorFlow}) {
    std::printf("%s:", method_name(m));
    for (int n_avg : {1, 2, 4, 8}) {
      EditConfig cfg;
      cfg.method = m;
      cfg.n_avg = n_avg;
      Vec mean = Vec::Zero(2);
      std::vector<Vec> outs;
      for (std::uint64_t seed = 0; seed < 32; ++seed) {
        cfg.seed = seed;
        outs.push_back(run_edit(field, task, cfg, x_src, 7).edited);
        mean += outs.back();
      }
      mean /= 32.0;
      double var = 0.0;
      for (const Vec& o : outs) var += (o - mean).squaredNorm();
      std::printf("  sd(%d)=%.5f", n_avg, std::sqrt(var / 32.0));
    }
    std::printf("\n");
  }
}

void parameter_sweep(const EditTask& task) {
  section("(n_max, s_tar) sweep for anchorflow (C10 reference)");
  const GmmOracleField field(task);
  const int n = 200;
  const std::vector<std::pair<int, double>> points = {{35, 5.0}, {37, 6.0}, {41, 7.5}};
  for (const auto& [n_max, s_tar] : points) {
    double sem = 0.0, id = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) {
      const Vec x_src = draw_source(task, 0, i);
      EditConfig cfg;
      cfg.method = Method::AnchorFlow;
      cfg.n_max = n_max;
      cfg.s_tar = s_tar;
      const EditResult r = run_edit(field, task, cfg, x_src, i);
      sem += semantic_score(task, r.edited);
      id += identity_error(task, x_src, r.edited).error;
    }
    std::printf("(%d, %.1f): semantic %.4f  identity_err %.4f\n", n_max, s_tar, sem / n, id / n);
  }
}

void baselines(const EditTask& task) {
  section("direct / inversion baselines");
  const GmmOracleField field(task);
  int direct_better = 0;
  double id_direct = 0.0, id_inv = 0.0;
  const int n = 200;
  for (std::uint64_t i = 0; i < n; ++i) {
    const Vec x_src = draw_source(task, 0, i);
    EditConfig cfg;
    cfg.method = Method::Direct;
    cfg.seed = 3;
    const EditResult d = run_edit(field, task, cfg, x_src, i);
    if (mixture_logpdf(task.target, d.edited) > mixture_logpdf(task.source, d.edited))
      ++direct_better;
    cfg.method = Method::Inversion;
    const EditResult v = run_edit(field, task, cfg, x_src, i);
    id_direct += identity_error(task, x_src, d.edited).error;
    id_inv += identity_error(task, x_src, v.edited).error;
  }
  std::printf("direct target>source rate: %d/%d\n", direct_better, n);
  std::printf("identity: direct %.4f | inversion %.4f\n", id_direct / n, id_inv / n);
}

}  // namespace

int main(int argc, char** argv) {
  const EditTask task = paired_two_mode();
  const std::string pick = argc > 1 ? argv[1] : "all";
  if (pick == "all" || pick == "train") training_references(task);
  if (pick == "all" || pick == "gen") generation_fidelity(task);
  if (pick == "all" || pick == "methods") method_comparison(task);
  if (pick == "all" || pick == "navg") navg_stabilization(task);
  if (pick == "all" || pick == "sweep") parameter_sweep(task);
  if (pick == "all" || pick == "baselines") baselines(task);
  return 0;
}
