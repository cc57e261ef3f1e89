#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "anchorflow/anchor.hpp"
#include "anchorflow/flow.hpp"
#include "anchorflow/gmm.hpp"
#include "anchorflow/types.hpp"

namespace af {

enum class Method { Direct, Inversion, FlowEdit, AnchorFlow };

const char* method_name(Method m);
std::optional<Method> parse_method(const std::string& name);

struct EditConfig {
  int T = 50;
  double s_src = 3.5;
  double s_tar = 7.5;
  int n_min = 1;
  int n_max = 41;
  int n_avg = 1;
  std::uint64_t seed = 0;
  Method method = Method::AnchorFlow;
  ScheduleKind schedule = ScheduleKind::Linear;
  bool squared_factor = false;  // apply the extra (2 - t) of the pre-Alg.1 update rule
  bool fixed_anchor = false;    // ablation: draw noise once at n_max, reuse at every step

  /// 1 <= n_min <= n_max <= T, n_avg >= 1, guidance scales >= 0.
  void validate() const;
};

/// One active editing step. For n_avg > 1 the latents and velocities are
/// rep-means, so grad == (2-t)[(x_fe - x_src_0) + (1-t)(v_tar - v_src)]
/// holds for the logged values exactly as for single-rep runs.
struct StepRecord {
  int index = 0;    // grid index i
  double t = 0.0;   // t_i
  Vec x_fe;         // editing state before the update
  Vec x_src_t;
  Vec x_tar_t;
  Vec v_src;
  Vec v_tar;
  Vec grad;         // direction the sampler applied (mean over reps)
  Vec update;       // delta_i * grad, subtracted from x_fe
};

struct EditResult {
  Vec edited;
  Vec x_src_0;                       // source latent the run started from
  std::vector<StepRecord> trajectory;  // descending grid index
  double wall_seconds = 0.0;
  std::int64_t field_evals = 0;
};

/// Baseline: ignore the source (except for logging) and generate from
/// derived noise with the target condition at s_tar.
EditResult direct_edit(const VelocityField& field, const EditTask& task, const EditConfig& cfg,
                       std::uint64_t sample_idx = 0, const Vec* noise_override = nullptr,
                       const Vec* x_src_for_log = nullptr);

/// Baseline: naive Euler inversion under the source condition at unit
/// guidance, then generation under the target condition at s_tar.
EditResult inversion_edit(const VelocityField& field, const EditTask& task, const EditConfig& cfg,
                          const Vec& x_src, std::uint64_t sample_idx = 0);

/// Inversion-free editing: integrate the velocity difference
///   v(X^tar_t, t, TAR, s_tar) - v(X^src_t, t, SRC, s_src)
/// over the active window [n_min, n_max], averaging n_avg fresh noisy
/// directions per step. Steps outside the window leave the state fixed.
EditResult flowedit_sample(const VelocityField& field, const EditTask& task, const EditConfig& cfg,
                           const Vec& x_src, std::uint64_t sample_idx = 0);

/// Anchor-aligned editing: same trajectory construction as flowedit, but
/// the update is the gradient of the anchor-alignment loss through the
/// single-step inversions,
///   grad = (2 - t) ( F_t(X^tar_t) - F_t(X^src_t) ),
/// optionally scaled by another (2 - t) when cfg.squared_factor is set.
EditResult anchorflow_sample(const VelocityField& field, const EditTask& task,
                             const EditConfig& cfg, const Vec& x_src,
                             std::uint64_t sample_idx = 0);

/// Dispatch on cfg.method.
EditResult run_edit(const VelocityField& field, const EditTask& task, const EditConfig& cfg,
                    const Vec& x_src, std::uint64_t sample_idx = 0);

}  // namespace af
