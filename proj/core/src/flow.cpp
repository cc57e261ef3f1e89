#include "anchorflow/flow.hpp"

#include <stdexcept>
#include <string>

#include "anchorflow/verify.hpp"

namespace af {

std::pair<TimeGrid, Schedule> make_grid_and_schedule(int T, ScheduleKind kind) {
  if (T < 1) throw std::invalid_argument("make_grid_and_schedule: T must be >= 1");

  TimeGrid grid;
  grid.steps = T;
  grid.t.resize(static_cast<std::size_t>(T) + 1);
  for (int i = 0; i <= T; ++i) grid.t[static_cast<std::size_t>(i)] = static_cast<double>(i) / T;

  Schedule sched;
  sched.sigma.resize(static_cast<std::size_t>(T) + 1);
  switch (kind) {
    case ScheduleKind::Linear:
      for (int i = 0; i <= T; ++i) {
        double s = grid.t[static_cast<std::size_t>(i)];
        if (current_fault() == Fault::SigmaSchedule) s = s * s;
        sched.sigma[static_cast<std::size_t>(i)] = s;
      }
      break;
  }
  return {grid, sched};
}

Vec noisy_interpolate(const Vec& x0, const Vec& noise, double t) {
  if (x0.size() != noise.size())
    throw std::invalid_argument("noisy_interpolate: dimension mismatch");
  if (!(t >= 0.0 && t <= 1.0))
    throw std::invalid_argument("noisy_interpolate: t must lie in [0,1]");
  if (t == 0.0) return x0;
  if (t == 1.0) return noise;
  return (1.0 - t) * x0 + t * noise;
}

namespace {

void check_step_finite(const Vec& v, int step, const char* where) {
  if (!all_finite(v))
    throw NumericError(std::string(where) + ": non-finite field output at step index " +
                       std::to_string(step));
}

}  // namespace

Vec euler_generate(const VelocityField& field, Cond cond, double guidance, const Vec& noise,
                   const TimeGrid& grid, const Schedule& sched) {
  if (noise.size() != field.dim())
    throw std::invalid_argument("euler_generate: noise dimension does not match field");
  Vec x = noise;
  for (int i = grid.steps; i >= 1; --i) {
    const Vec v = field.velocity(x, grid.at(i), cond, guidance);
    check_step_finite(v, i, "euler_generate");
    x -= sched.delta(i) * v;
  }
  return x;
}

Vec euler_invert(const VelocityField& field, Cond cond, double guidance, const Vec& x0,
                 const TimeGrid& grid, const Schedule& sched) {
  if (x0.size() != field.dim())
    throw std::invalid_argument("euler_invert: state dimension does not match field");
  Vec x = x0;
  for (int i = 1; i <= grid.steps; ++i) {
    const Vec v = field.velocity(x, grid.at(i - 1), cond, guidance);
    check_step_finite(v, i, "euler_invert");
    x += sched.delta(i) * v;
  }
  return x;
}

}  // namespace af
