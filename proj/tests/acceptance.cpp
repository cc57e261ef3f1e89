// Acceptance suite: twelve numbered criteria, one pass/fail line each.
// Every tolerance is pinned here; [frozen] marks values fixed from the
// committed reference runs (tools/calibrate reproduces them).
//
// Usage: acceptance [N]   -- run criterion N (1..12), or all when omitted.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "anchorflow/anchor.hpp"
#include "anchorflow/bench.hpp"
#include "anchorflow/edit.hpp"
#include "anchorflow/metrics.hpp"
#include "anchorflow/mlp.hpp"
#include "anchorflow/verify.hpp"

using namespace af;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Criterion {
  int number;
  const char* name;
  std::function<std::pair<bool, std::string>()> fn;
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
      for (int c = 0; c < d; ++c) a(r, c) = 0.4 * stream.next_normal();
    Mat cov = a * a.transpose();
    cov.diagonal().array() += 0.2;
    covs.push_back(cov);
  }
  return GaussianMixture::create(w, means, covs);
}

Vec draw_source(const EditTask& task, std::uint64_t idx) {
  rng::CounterStream stream(0, rng::kTagSourceDraw, idx, 0);
  return sample_mixture(task.source, stream);
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

const char* cli_bin() {
  const char* bin = std::getenv("ANCHORFLOW_BIN");
  return bin ? bin : "";
}

// ---- C1: Appendix-A identity suite --------------------------------------
std::pair<bool, std::string> c1_anchor_identities() {
  rng::CounterStream stream(1001, 0, 0, 0);
  double worst_rel = 0.0, worst_min = 0.0;
  bool bound_ok = true, equality_ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    const int len = 1 + static_cast<int>(stream.next_u64() % 64);
    const int dims[3] = {1, 2, 8};
    const int d = dims[trial % 3];
    AnchorSeries series;
    for (int i = 0; i < len; ++i) {
      series.s.push_back(random_vec(stream, d, 2.0));
      series.g.push_back(random_vec(stream, d, 2.0));
    }
    const Vec astar = optimal_anchor(series);
    const double strong = strong_objective(series, astar);
    const double reduced = reduced_objective(series);
    worst_rel = std::max(worst_rel,
                         std::abs(strong - reduced) / std::max(1.0, std::abs(strong)));

    // independent re-minimization by gradient descent
    Vec a = random_vec(stream, d, 3.0);
    const double lr = 0.2 / len;
    for (int it = 0; it < 4000; ++it) {
      Vec grad = Vec::Zero(d);
      for (int i = 0; i < len; ++i)
        grad += (a - series.s[static_cast<std::size_t>(i)]) +
                (a - series.g[static_cast<std::size_t>(i)]);
      grad *= 2.0;
      if (grad.norm() < 1e-10) break;
      a -= lr * grad;
    }
    worst_min = std::max(worst_min, (a - astar).cwiseAbs().maxCoeff());

    const double align = alignment_loss(series);
    if (align > reduced * (1.0 + 1e-12) + 1e-12) bound_ok = false;
    // force coincident midpoints: equality branch
    AnchorSeries tight = series;
    const Vec m = random_vec(stream, d);
    for (int i = 0; i < len; ++i)
      tight.g[static_cast<std::size_t>(i)] = 2.0 * m - tight.s[static_cast<std::size_t>(i)];
    if (std::abs(alignment_loss(tight) - reduced_objective(tight)) >
        1e-9 * std::max(1.0, alignment_loss(tight)))
      equality_ok = false;
  }
  const bool pass = worst_rel <= 1e-9 && worst_min <= 1e-8 && bound_ok && equality_ok;
  return {pass, "max_rel=" + num(worst_rel) + " (<=1e-9), remin_gap=" + num(worst_min) +
                    " (<=1e-8), lower_bound=" + (bound_ok ? "ok" : "VIOLATED") +
                    ", equality_branch=" + (equality_ok ? "ok" : "VIOLATED")};
}

// ---- C2: gradient-expansion identity ------------------------------------
std::pair<bool, std::string> c2_gradient_expansion() {
  rng::CounterStream stream(1002, 0, 0, 0);
  double worst = 0.0;
  long steps = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const EditTask task =
        EditTask::create(random_mixture(stream, 2, 2), random_mixture(stream, 2, 2));
    const GmmOracleField field(task);
    EditConfig cfg;
    cfg.T = 20 + static_cast<int>(stream.next_u64() % 40);
    cfg.n_max = cfg.T - static_cast<int>(stream.next_u64() % 5);
    cfg.n_min = 1 + static_cast<int>(stream.next_u64() % 5);
    cfg.n_avg = 1 + static_cast<int>(stream.next_u64() % 4);
    cfg.seed = 9000 + static_cast<std::uint64_t>(trial);
    cfg.method = Method::AnchorFlow;
    const Vec x_src = sample_mixture(task.source, stream);
    const EditResult r = anchorflow_sample(field, task, cfg, x_src, 0);
    for (const StepRecord& rec : r.trajectory) {
      const Vec expect =
          (2.0 - rec.t) * ((rec.x_fe - x_src) + (1.0 - rec.t) * (rec.v_tar - rec.v_src));
      worst = std::max(worst, (rec.grad - expect).cwiseAbs().maxCoeff());
      ++steps;
    }
  }
  return {worst <= 1e-12,
          "max_err=" + num(worst) + " (<=1e-12) over " + std::to_string(steps) + " steps"};
}

// ---- C3: identity-edit invariance ---------------------------------------
std::pair<bool, std::string> c3_identity_edit() {
  rng::CounterStream stream(1003, 0, 0, 0);
  const GaussianMixture gmm = random_mixture(stream, 2, 2);
  const EditTask task = EditTask::create(gmm, gmm);
  const GmmOracleField field(task);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    rng::CounterStream draw(1004, static_cast<std::uint64_t>(trial), 0, 0);
    const Vec x_src = sample_mixture(task.source, draw);
    for (int n_avg : {1, 4}) {
      EditConfig cfg;
      cfg.n_avg = n_avg;
      cfg.seed = draw.next_u64();
      for (Method m : {Method::FlowEdit, Method::AnchorFlow}) {
        cfg.method = m;
        const EditResult r = run_edit(field, task, cfg, x_src, static_cast<std::uint64_t>(trial));
        worst = std::max(worst, (r.edited - x_src).cwiseAbs().maxCoeff());
      }
    }
  }
  return {worst <= 1e-12, "max_coord_err=" + num(worst) + " (<=1e-12), 100 sources x {1,4} reps"};
}

// ---- C4: oracle equivalence ----------------------------------------------
std::pair<bool, std::string> c4_oracle_equivalence() {
  const EditTask task = paired_two_mode();
  const GaussianMixture* mixtures[3] = {&task.source, &task.target, &task.uncond};
  rng::CounterStream probes(1005, 0, 0, 0);
  double worst_sigmas = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const GaussianMixture& gmm = *mixtures[trial % 3];
    const double t = 0.1 + 0.8 * probes.next_unit();
    // probe from the path marginal so the importance weights stay healthy
    const Vec x0 = sample_mixture(gmm, probes);
    const Vec x = (1.0 - t) * x0 + t * probes.normal_vec(2);
    rng::CounterStream mc(1006, static_cast<std::uint64_t>(trial), 0, 0);
    const McVelocity est = mc_velocity_oracle(gmm, x, t, 100000, mc);
    const Vec exact = marginal_velocity(gmm, x, t);
    for (int i = 0; i < 2; ++i)
      worst_sigmas =
          std::max(worst_sigmas, std::abs(exact[i] - est.estimate[i]) / est.standard_error[i]);
  }
  return {worst_sigmas <= 3.0,
          "max_deviation=" + num(worst_sigmas) + " standard errors (<=3), 20 probes, n=100000"};
}

// ---- C5: backprop correctness ---------------------------------------------
std::pair<bool, std::string> c5_backprop() {
  const EditTask task = paired_two_mode();
  rng::CounterStream stream(1007, 0, 0, 0);
  const Batch batch = sample_batch(task, 64, stream);
  double worst = 0.0;
  for (std::uint64_t seed : {201ULL, 202ULL, 203ULL})
    worst = std::max(worst, numeric_grad_check(MlpField::init(2, seed), batch, 1e-5));
  return {worst < 1e-4, "max_rel_err=" + num(worst) + " (<1e-4), 3 random inits"};
}

// ---- C6: generation fidelity ----------------------------------------------
std::pair<bool, std::string> c6_generation_fidelity() {
  constexpr double kFrozenBound = 0.00031;  // [frozen] reference 0.000257 + 20%
  const EditTask task = paired_two_mode();
  const GmmOracleField field(task);
  const auto [grid, sched] = make_grid_and_schedule(50);
  const int n = 20000;
  std::vector<Vec> generated, reference;
  generated.reserve(n);
  reference.reserve(n);
  for (int i = 0; i < n; ++i) {
    generated.push_back(
        euler_generate(field, Cond::Tar, 1.0,
                       rng::derive_noise(600, static_cast<std::uint64_t>(i), 0, 0, 2), grid, sched));
    rng::CounterStream s(601, static_cast<std::uint64_t>(i), 0, 0);
    reference.push_back(sample_mixture(task.target, s));
  }
  const double dist = energy_distance(generated, reference);
  return {dist < kFrozenBound, "energy_distance=" + num(dist) + " (<" + num(kFrozenBound) +
                                  " [frozen]), 20k generated vs 20k target draws"};
}

// ---- shared comparison run for C7/C8 ---------------------------------------
struct MethodStats {
  double sem_fe = 0, sem_af = 0, can_fe = 0, can_af = 0;
  double id_af = 0, id_fixed = 0;
};

MethodStats paired_comparison(const EditTask& task, int n) {
  const GmmOracleField field(task);
  MethodStats st;
  for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(n); ++i) {
    const Vec x_src = draw_source(task, i);
    EditConfig cfg;
    cfg.method = Method::FlowEdit;
    const EditResult fe = run_edit(field, task, cfg, x_src, i);
    cfg.method = Method::AnchorFlow;
    const EditResult af = run_edit(field, task, cfg, x_src, i);
    cfg.fixed_anchor = true;
    const EditResult fx = run_edit(field, task, cfg, x_src, i);
    st.sem_fe += semantic_score(task, fe.edited);
    st.sem_af += semantic_score(task, af.edited);
    st.can_fe += cancellation_ratio(fe.trajectory);
    st.can_af += cancellation_ratio(af.trajectory);
    st.id_af += identity_error(task, x_src, af.edited).error;
    st.id_fixed += identity_error(task, x_src, fx.edited).error;
  }
  st.sem_fe /= n;
  st.sem_af /= n;
  st.can_fe /= n;
  st.can_af /= n;
  st.id_af /= n;
  st.id_fixed /= n;
  return st;
}

// ---- C7: under-editing reproduction ----------------------------------------
std::pair<bool, std::string> c7_under_editing() {
  // Reference run [frozen]: sem_fe=-4.3285 sem_af=-10.9976,
  // can_fe=1.0000 can_af=0.9986. The criterion asserts the opposite
  // ordering; on exact mixture fields the velocity difference is
  // noise-insensitive (no cancellation), so this check documents a
  // measured reversal rather than pass. See the acceptance notes.
  const MethodStats st = paired_comparison(paired_two_mode(), 200);
  const bool semantic_ok = st.sem_af > st.sem_fe;
  const bool cancel_ok = st.can_af >= st.can_fe;
  return {semantic_ok && cancel_ok,
          "semantic anchorflow=" + num(st.sem_af) + " vs flowedit=" + num(st.sem_fe) +
              " (need af>fe), cancel anchorflow=" + num(st.can_af) + " vs flowedit=" +
              num(st.can_fe) + " (need af>=fe)"};
}

// ---- C8: fixed-anchor over-editing ------------------------------------------
std::pair<bool, std::string> c8_fixed_anchor() {
  constexpr double kFrozenMargin = 0.12;  // [frozen] reference diff 0.2485, half kept as margin
  const MethodStats st = paired_comparison(paired_two_mode(), 200);
  const double diff = st.id_fixed - st.id_af;
  return {diff > kFrozenMargin, "identity_err fixed=" + num(st.id_fixed) + " vs anchorflow=" +
                                    num(st.id_af) + ", diff=" + num(diff) + " (>" +
                                    num(kFrozenMargin) + " [frozen])"};
}

// ---- C9: n_avg stabilization -------------------------------------------------
std::pair<bool, std::string> c9_navg_stabilization() {
  const EditTask task = paired_two_mode();
  const GmmOracleField field(task);
  const Vec x_src = draw_source(task, 7);
  std::string detail;
  bool pass = true;
  for (Method m : {Method::FlowEdit, Method::AnchorFlow}) {
    double prev = 1e999;
    detail += std::string(method_name(m)) + ": ";
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
      const double sd = std::sqrt(var / 32.0);
      detail += "sd(" + std::to_string(n_avg) + ")=" + num(sd) + " ";
      if (sd >= prev) pass = false;
      prev = sd;
    }
  }
  return {pass, detail + "(strictly decreasing required)"};
}

// ---- C10: parameter-sweep trend -----------------------------------------------
std::pair<bool, std::string> c10_sweep_trend() {
  // Reference run [frozen]: semantic -11.6884 -> -11.3825 -> -10.9976
  // (nondecreasing, passes); identity_err 2.4273 -> 2.3875 -> 2.3371
  // (decreasing, so the nondecreasing clause fails). In the toy the
  // anchorflow sampler under-edits at every grid point, so more editing
  // strength moves outputs closer to the paired oracle point and the
  // spec'd strength/fidelity trade-off direction cannot appear.
  const EditTask task = paired_two_mode();
  const GmmOracleField field(task);
  const std::vector<GridPoint> points = {{35, 5.0}, {37, 6.0}, {41, 7.5}};
  std::vector<double> semantic, identity;
  for (const GridPoint& p : points) {
    double sem = 0, id = 0;
    const int n = 200;
    for (std::uint64_t i = 0; i < n; ++i) {
      const Vec x_src = draw_source(task, i);
      EditConfig cfg;
      cfg.method = Method::AnchorFlow;
      cfg.n_max = p.n_max;
      cfg.s_tar = p.s_tar;
      const EditResult r = run_edit(field, task, cfg, x_src, i);
      sem += semantic_score(task, r.edited);
      id += identity_error(task, x_src, r.edited).error;
    }
    semantic.push_back(sem / n);
    identity.push_back(id / n);
  }
  const bool sem_ok = semantic[0] <= semantic[1] && semantic[1] <= semantic[2];
  const bool id_ok = identity[0] <= identity[1] && identity[1] <= identity[2];
  std::string detail = "semantic " + num(semantic[0]) + " -> " + num(semantic[1]) + " -> " +
                       num(semantic[2]) + (sem_ok ? " (nondecreasing ok)" : " (VIOLATED)") +
                       "; identity_err " + num(identity[0]) + " -> " + num(identity[1]) + " -> " +
                       num(identity[2]) + (id_ok ? " (nondecreasing ok)" : " (decreasing)");
  return {sem_ok && id_ok, detail};
}

// ---- C11: bench determinism ------------------------------------------------
std::pair<bool, std::string> c11_bench_determinism() {
  const fs::path root = fs::temp_directory_path() / "af_acceptance_c11";
  fs::remove_all(root);
  fs::create_directories(root);

  const BenchSpec spec = parse_config_text("samples = 200\nname = c11\n");
  const RunRegistry first = run_bench(spec, 1, nullptr, root / "run1");
  const BenchSpec reloaded = load_config(first.config_snapshot().string());
  const RunRegistry second = run_bench(reloaded, 4, nullptr, root / "run2");
  const RunRegistry third = run_bench(reloaded, 8, nullptr, root / "run3");

  auto slurp = [](const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
  };
  const std::string a = slurp(first.results_csv());
  const bool same12 = a == slurp(second.results_csv());
  const bool same13 = a == slurp(third.results_csv());
  const bool rows_ok = !a.empty();
  fs::remove_all(root);
  return {same12 && same13 && rows_ok,
          std::string("snapshot rerun: threads 1 vs 4 ") + (same12 ? "identical" : "DIFFER") +
              ", 1 vs 8 " + (same13 ? "identical" : "DIFFER")};
}

// ---- C12: verify + seeded faults ---------------------------------------------
std::pair<bool, std::string> c12_verify_faults() {
  const std::string bin = cli_bin();
  if (bin.empty()) return {false, "ANCHORFLOW_BIN not set"};
  auto run = [&](const std::string& args) {
    const int raw = std::system(("\"" + bin + "\" " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(raw);
  };
  const int pristine = run("verify");
  const int f1 = run("verify --inject-fault anchor-grad-sign");
  const int f2 = run("verify --inject-fault sigma-schedule");
  const int f3 = run("verify --inject-fault shared-rng");
  const bool pass = pristine == 0 && f1 != 0 && f2 != 0 && f3 != 0;
  return {pass, "pristine exit=" + std::to_string(pristine) +
                    " (need 0); faults exit=" + std::to_string(f1) + "," + std::to_string(f2) +
                    "," + std::to_string(f3) + " (need nonzero)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "appendix-a-identity-suite", c1_anchor_identities},
      {2, "gradient-expansion-identity", c2_gradient_expansion},
      {3, "identity-edit-invariance", c3_identity_edit},
      {4, "oracle-equivalence", c4_oracle_equivalence},
      {5, "backprop-correctness", c5_backprop},
      {6, "generation-fidelity", c6_generation_fidelity},
      {7, "under-editing-reproduction", c7_under_editing},
      {8, "fixed-anchor-over-editing", c8_fixed_anchor},
      {9, "n-avg-stabilization", c9_navg_stabilization},
      {10, "parameter-sweep-trend", c10_sweep_trend},
      {11, "bench-determinism", c11_bench_determinism},
      {12, "verify-and-seeded-faults", c12_verify_faults},
  };

  int selected = 0;
  if (argc > 1) selected = std::atoi(argv[1]);

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (selected != 0 && c.number != selected) continue;
    const auto start = Clock::now();
    bool pass = false;
    std::string detail;
    try {
      std::tie(pass, detail) = c.fn();
    } catch (const std::exception& e) {
      pass = false;
      detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    std::printf("[%s] C%-2d %-28s %s [%.1fs]\n", pass ? "PASS" : "FAIL", c.number, c.name,
                detail.c_str(), secs);
    std::fflush(stdout);
    if (!pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
