#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "anchorflow/flow.hpp"
#include "anchorflow/gmm.hpp"
#include "anchorflow/types.hpp"

namespace af {

inline constexpr int kTimeFeatures = 8;  // sin/cos of 2^j pi t, j = 0..3
inline constexpr int kCondCount = 3;     // one-hot over {Src, Tar, Uncond}
inline constexpr int kHiddenWidth = 64;

/// Fourier embedding of t; the field varies sharply near t=1 and raw t
/// underfits.
Vec time_features(double t);

/// Small velocity network: [x; fourier(t); one-hot(cond)] -> 64 -> 64 -> d,
/// tanh on hidden layers, identity output. Trained by conditional flow
/// matching with manually implemented reverse-mode gradients.
struct MlpField {
  int d = 2;
  Mat w1, w2, w3;
  Vec b1, b2, b3;

  int input_dim() const { return d + kTimeFeatures + kCondCount; }
  bool finite() const;

  /// Glorot-uniform init, deterministic in the seed.
  static MlpField init(int d, std::uint64_t seed);
  static MlpField zeros(int d);
};

/// Forward pass at a single point. Throws NumericError on non-finite
/// parameters.
Vec eval_mlp(const MlpField& field, const Vec& x, double t, Cond cond);

/// Training batch, one column per item.
struct Batch {
  Mat x0;                  // d x B, data samples
  Mat x1;                  // d x B, noise samples
  Vec t;                   // B
  std::vector<Cond> cond;  // B

  int size() const { return static_cast<int>(t.size()); }
};

/// Conditional flow-matching loss:
/// mean_b || f((1-t) x0 + t x1, t, cond) - (x1 - x0) ||^2.
double cfm_loss(const MlpField& field, const Batch& batch);

struct Gradients {
  Mat w1, w2, w3;
  Vec b1, b2, b3;
  static Gradients zeros_like(const MlpField& f);
};

/// Loss plus analytic parameter gradients (reverse mode, batched).
double cfm_loss_grad(const MlpField& field, const Batch& batch, Gradients& out);

struct TrainConfig {
  int batch_size = 256;
  int steps = 20000;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainResult {
  MlpField field;
  std::vector<double> loss_trace;  // one entry per step
};

/// SGD with momentum on cfm_loss. Data per step: cond uniform over
/// {Src, Tar, Uncond}, x0 from the matching task mixture, x1 ~ N(0, I),
/// t ~ U[0,1], all from counter-based streams keyed by (seed, step).
/// Deterministic: fixed seed gives bit-identical parameters.
/// Throws TrainingDivergedError if the loss exceeds 1e6.
TrainResult train_field(const EditTask& task, const TrainConfig& cfg);

/// Central-difference check of the analytic gradients on >= 50 randomly
/// chosen parameters; returns the max relative error.
double numeric_grad_check(const MlpField& field, const Batch& batch, double eps);

/// Checkpoint I/O. Binary little-endian layout (documented in README):
/// magic "AFMLPCK1", u32 version, u32 d, u32 layer count, u32 widths,
/// then per layer row-major weights and bias as f64.
void save_checkpoint(const MlpField& field, const std::string& path);
MlpField load_checkpoint(const std::string& path);

/// VelocityField adapter: evaluates the conditional and unconditional
/// heads and applies classifier-free guidance v_u + s (v_c - v_u).
class MlpFieldHandle final : public VelocityField {
 public:
  explicit MlpFieldHandle(MlpField field) : field_(std::move(field)) {}

  int dim() const override { return field_.d; }
  Vec velocity(const Vec& x, double t, Cond cond, double guidance) const override;
  const MlpField& field() const { return field_; }

 private:
  MlpField field_;
};

/// Uniform sampling of a training batch for the task (shared by training
/// and the gradient-check tests).
Batch sample_batch(const EditTask& task, int batch_size, rng::CounterStream& stream);

}  // namespace af
