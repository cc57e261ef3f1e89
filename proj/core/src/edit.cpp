#include "anchorflow/edit.hpp"

#include <chrono>
#include <stdexcept>

#include "anchorflow/rng.hpp"

namespace af {

const char* method_name(Method m) {
  switch (m) {
    case Method::Direct: return "direct";
    case Method::Inversion: return "inversion";
    case Method::FlowEdit: return "flowedit";
    case Method::AnchorFlow: return "anchorflow";
  }
  return "?";
}

std::optional<Method> parse_method(const std::string& name) {
  if (name == "direct") return Method::Direct;
  if (name == "inversion") return Method::Inversion;
  if (name == "flowedit") return Method::FlowEdit;
  if (name == "anchorflow") return Method::AnchorFlow;
  return std::nullopt;
}

void EditConfig::validate() const {
  if (T < 1) throw std::invalid_argument("EditConfig: T must be >= 1");
  if (!(1 <= n_min && n_min <= n_max && n_max <= T))
    throw std::invalid_argument("EditConfig: need 1 <= n_min <= n_max <= T");
  if (n_avg < 1) throw std::invalid_argument("EditConfig: n_avg must be >= 1");
  if (s_src < 0.0 || s_tar < 0.0)
    throw std::invalid_argument("EditConfig: guidance scales must be >= 0");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_finite(const Vec& v, int step, const char* where) {
  if (!all_finite(v))
    throw NumericError(std::string(where) + ": non-finite value at step index " +
                       std::to_string(step));
}

/// Shared trajectory loop for the two inversion-free samplers; they differ
/// only in how the per-rep direction is formed from the two field calls.
template <typename DirectionFn>
EditResult window_sampler(const VelocityField& field, const EditConfig& cfg, const Vec& x_src,
                          std::uint64_t sample_idx, const char* name, DirectionFn&& direction) {
  cfg.validate();
  if (x_src.size() != field.dim())
    throw std::invalid_argument(std::string(name) + ": source dimension does not match field");
  const auto start = Clock::now();
  const auto [grid, sched] = make_grid_and_schedule(cfg.T, cfg.schedule);
  const int d = field.dim();

  EditResult result;
  result.x_src_0 = x_src;
  result.trajectory.reserve(static_cast<std::size_t>(cfg.n_max - cfg.n_min + 1));

  Vec x_fe = x_src;
  for (int i = cfg.n_max; i >= cfg.n_min; --i) {
    const double t = grid.at(i);
    const double delta = sched.delta(i);

    Vec mean_dir = Vec::Zero(d);
    Vec mean_src_t = Vec::Zero(d);
    Vec mean_tar_t = Vec::Zero(d);
    Vec mean_v_src = Vec::Zero(d);
    Vec mean_v_tar = Vec::Zero(d);
    for (int rep = 0; rep < cfg.n_avg; ++rep) {
      const auto noise_step = static_cast<std::uint64_t>(cfg.fixed_anchor ? cfg.n_max : i);
      const Vec noise = rng::derive_noise(cfg.seed, sample_idx, noise_step,
                                          static_cast<std::uint64_t>(rep), d);
      const Vec x_src_t = noisy_interpolate(x_src, noise, t);
      // Grouped so that x_fe == x_src gives X^tar_t == X^src_t bitwise.
      const Vec x_tar_t = x_src_t + (x_fe - x_src);
      const Vec v_src = field.velocity(x_src_t, t, Cond::Src, cfg.s_src);
      const Vec v_tar = field.velocity(x_tar_t, t, Cond::Tar, cfg.s_tar);
      result.field_evals += 2;
      mean_dir += direction(x_src_t, x_tar_t, v_src, v_tar, t);
      mean_src_t += x_src_t;
      mean_tar_t += x_tar_t;
      mean_v_src += v_src;
      mean_v_tar += v_tar;
    }
    const double inv = 1.0 / cfg.n_avg;
    mean_dir *= inv;
    check_finite(mean_dir, i, name);

    StepRecord rec;
    rec.index = i;
    rec.t = t;
    rec.x_fe = x_fe;
    rec.x_src_t = mean_src_t * inv;
    rec.x_tar_t = mean_tar_t * inv;
    rec.v_src = mean_v_src * inv;
    rec.v_tar = mean_v_tar * inv;
    rec.grad = mean_dir;
    rec.update = delta * mean_dir;
    result.trajectory.push_back(std::move(rec));

    x_fe -= delta * mean_dir;
  }

  result.edited = std::move(x_fe);
  result.wall_seconds = seconds_since(start);
  return result;
}

/// Full-grid Euler generation with per-step logging (used by the direct
/// and inversion baselines, whose updates span the whole grid).
Vec logged_generate(const VelocityField& field, const EditConfig& cfg, Cond cond, double guidance,
                    const Vec& start_state, EditResult& result) {
  const auto [grid, sched] = make_grid_and_schedule(cfg.T, cfg.schedule);
  Vec x = start_state;
  for (int i = cfg.T; i >= 1; --i) {
    const double t = grid.at(i);
    const Vec v = field.velocity(x, t, cond, guidance);
    result.field_evals += 1;
    check_finite(v, i, "euler_generate");
    StepRecord rec;
    rec.index = i;
    rec.t = t;
    rec.x_fe = x;
    rec.v_tar = v;
    rec.grad = v;
    rec.update = sched.delta(i) * v;
    result.trajectory.push_back(std::move(rec));
    x -= sched.delta(i) * v;
  }
  return x;
}

}  // namespace

EditResult direct_edit(const VelocityField& field, const EditTask& task, const EditConfig& cfg,
                       std::uint64_t sample_idx, const Vec* noise_override,
                       const Vec* x_src_for_log) {
  (void)task;
  cfg.validate();
  const auto start = Clock::now();
  const int d = field.dim();
  // Step key 0 is never used by the editing loops (active windows start
  // at n_min >= 1), so the generation seed cannot collide with step noise.
  const Vec noise = noise_override ? *noise_override : rng::derive_noise(cfg.seed, sample_idx, 0, 0, d);
  EditResult result;
  result.x_src_0 = x_src_for_log ? *x_src_for_log : Vec::Zero(d);
  result.edited = logged_generate(field, cfg, Cond::Tar, cfg.s_tar, noise, result);
  result.wall_seconds = seconds_since(start);
  return result;
}

EditResult inversion_edit(const VelocityField& field, const EditTask& task, const EditConfig& cfg,
                          const Vec& x_src, std::uint64_t sample_idx) {
  (void)task;
  (void)sample_idx;
  cfg.validate();
  if (x_src.size() != field.dim())
    throw std::invalid_argument("inversion_edit: source dimension does not match field");
  const auto start = Clock::now();
  const auto [grid, sched] = make_grid_and_schedule(cfg.T, cfg.schedule);

  EditResult result;
  result.x_src_0 = x_src;
  // Inversion runs at unit guidance under the source condition; only the
  // subsequent generation applies s_tar.
  const Vec inverted = euler_invert(field, Cond::Src, 1.0, x_src, grid, sched);
  result.field_evals += cfg.T;
  result.edited = logged_generate(field, cfg, Cond::Tar, cfg.s_tar, inverted, result);
  result.wall_seconds = seconds_since(start);
  return result;
}

EditResult flowedit_sample(const VelocityField& field, const EditTask& task, const EditConfig& cfg,
                           const Vec& x_src, std::uint64_t sample_idx) {
  (void)task;
  return window_sampler(field, cfg, x_src, sample_idx, "flowedit_sample",
                        [](const Vec&, const Vec&, const Vec& v_src, const Vec& v_tar, double) {
                          return Vec(v_tar - v_src);
                        });
}

EditResult anchorflow_sample(const VelocityField& field, const EditTask& task,
                             const EditConfig& cfg, const Vec& x_src, std::uint64_t sample_idx) {
  (void)task;
  const bool squared = cfg.squared_factor;
  return window_sampler(
      field, cfg, x_src, sample_idx, "anchorflow_sample",
      [squared](const Vec& x_src_t, const Vec& x_tar_t, const Vec& v_src, const Vec& v_tar,
                double t) {
        const Vec f_tar = x_tar_t + (1.0 - t) * v_tar;
        const Vec f_src = x_src_t + (1.0 - t) * v_src;
        Vec grad = anchor_gradient(f_tar, f_src, t);
        if (squared) grad *= (2.0 - t);
        return grad;
      });
}

EditResult run_edit(const VelocityField& field, const EditTask& task, const EditConfig& cfg,
                    const Vec& x_src, std::uint64_t sample_idx) {
  switch (cfg.method) {
    case Method::Direct:
      return direct_edit(field, task, cfg, sample_idx, nullptr, &x_src);
    case Method::Inversion:
      return inversion_edit(field, task, cfg, x_src, sample_idx);
    case Method::FlowEdit:
      return flowedit_sample(field, task, cfg, x_src, sample_idx);
    case Method::AnchorFlow:
      return anchorflow_sample(field, task, cfg, x_src, sample_idx);
  }
  throw std::invalid_argument("run_edit: unknown method");
}

}  // namespace af
