#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "anchorflow/types.hpp"

namespace af {

// Time convention, fixed project-wide: t = 1 is noise, t = 0 is data.
// Generation integrates the ODE backward from t = 1 to t = 0; inversion
// runs it forward. Many diffusion codebases use the opposite convention.

/// Uniform time grid t_i = i/T for i = 0..T.
struct TimeGrid {
  int steps = 0;              // T
  std::vector<double> t;      // T+1 nodes, t[0]=0, t[T]=1

  double at(int i) const { return t[static_cast<std::size_t>(i)]; }
};

/// Noise-level schedule sigma_{t_i}, one value per grid node.
/// Nondecreasing with sigma_0 = 0 and sigma_T = 1, so the Euler step
/// sizes delta_i = sigma_i - sigma_{i-1} are nonnegative and sum to 1.
struct Schedule {
  std::vector<double> sigma;

  double delta(int i) const {
    return sigma[static_cast<std::size_t>(i)] - sigma[static_cast<std::size_t>(i) - 1];
  }
};

enum class ScheduleKind { Linear };

/// Linear kind sets sigma_{t_i} = t_i, i.e. delta_i = 1/T everywhere.
std::pair<TimeGrid, Schedule> make_grid_and_schedule(int T, ScheduleKind kind = ScheduleKind::Linear);

/// Evaluable velocity field v(x, t, cond, guidance_scale).
/// Implementations: the exact Gaussian-mixture oracle and the learned MLP.
/// Evaluation must be pure: same inputs, same output.
class VelocityField {
 public:
  virtual ~VelocityField() = default;
  virtual int dim() const = 0;
  virtual Vec velocity(const Vec& x, double t, Cond cond, double guidance) const = 0;
};

/// (1-t) x0 + t noise. Boundaries are exact: t=0 returns x0 bitwise,
/// t=1 returns noise bitwise.
Vec noisy_interpolate(const Vec& x0, const Vec& noise, double t);

/// Euler integration of dX = v dt backward from t=1 (noise) to t=0 (data):
///   X_{t_{i-1}} = X_{t_i} - delta_i * v(X_{t_i}, t_i, cond, s),  i = T..1.
Vec euler_generate(const VelocityField& field, Cond cond, double guidance, const Vec& noise,
                   const TimeGrid& grid, const Schedule& sched);

/// Forward Euler from data to noise (naive inversion):
///   X_{t_i} = X_{t_{i-1}} + delta_i * v(X_{t_{i-1}}, t_{i-1}, cond, s),  i = 1..T.
Vec euler_invert(const VelocityField& field, Cond cond, double guidance, const Vec& x0,
                 const TimeGrid& grid, const Schedule& sched);

}  // namespace af
