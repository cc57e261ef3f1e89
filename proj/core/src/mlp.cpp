#include "anchorflow/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>

namespace af {

Vec time_features(double t) {
  Vec f(kTimeFeatures);
  for (int j = 0; j < kTimeFeatures / 2; ++j) {
    const double arg = std::pow(2.0, j) * std::numbers::pi * t;
    f[2 * j] = std::sin(arg);
    f[2 * j + 1] = std::cos(arg);
  }
  return f;
}

bool MlpField::finite() const {
  return w1.allFinite() && w2.allFinite() && w3.allFinite() && b1.allFinite() &&
         b2.allFinite() && b3.allFinite();
}

namespace {

Mat glorot(int rows, int cols, rng::CounterStream& stream) {
  const double a = std::sqrt(6.0 / (rows + cols));
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = a * (2.0 * stream.next_unit() - 1.0);
  return m;
}

Vec assemble_input(const Vec& x, double t, Cond cond) {
  Vec in(x.size() + kTimeFeatures + kCondCount);
  in.head(x.size()) = x;
  in.segment(x.size(), kTimeFeatures) = time_features(t);
  in.tail(kCondCount).setZero();
  in[x.size() + kTimeFeatures + static_cast<int>(cond)] = 1.0;
  return in;
}

struct Forward {
  Mat in, h1, h2, y;
};

Forward forward_batch(const MlpField& f, const Batch& batch) {
  const int b = batch.size();
  Forward fw;
  fw.in.resize(f.input_dim(), b);
  for (int i = 0; i < b; ++i) {
    const Vec xt = (1.0 - batch.t[i]) * batch.x0.col(i) + batch.t[i] * batch.x1.col(i);
    fw.in.col(i) = assemble_input(xt, batch.t[i], batch.cond[static_cast<std::size_t>(i)]);
  }
  fw.h1 = ((f.w1 * fw.in).colwise() + f.b1).array().tanh();
  fw.h2 = ((f.w2 * fw.h1).colwise() + f.b2).array().tanh();
  fw.y = (f.w3 * fw.h2).colwise() + f.b3;
  return fw;
}

}  // namespace

MlpField MlpField::init(int d, std::uint64_t seed) {
  rng::CounterStream stream(seed, rng::kTagInit, 0, 0);
  MlpField f;
  f.d = d;
  f.w1 = glorot(kHiddenWidth, f.input_dim(), stream);
  f.w2 = glorot(kHiddenWidth, kHiddenWidth, stream);
  f.w3 = glorot(d, kHiddenWidth, stream);
  f.b1 = Vec::Zero(kHiddenWidth);
  f.b2 = Vec::Zero(kHiddenWidth);
  f.b3 = Vec::Zero(d);
  return f;
}

MlpField MlpField::zeros(int d) {
  MlpField f;
  f.d = d;
  f.w1 = Mat::Zero(kHiddenWidth, f.input_dim());
  f.w2 = Mat::Zero(kHiddenWidth, kHiddenWidth);
  f.w3 = Mat::Zero(d, kHiddenWidth);
  f.b1 = Vec::Zero(kHiddenWidth);
  f.b2 = Vec::Zero(kHiddenWidth);
  f.b3 = Vec::Zero(d);
  return f;
}

Vec eval_mlp(const MlpField& field, const Vec& x, double t, Cond cond) {
  if (x.size() != field.d) throw std::invalid_argument("eval_mlp: dimension mismatch");
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("eval_mlp: t outside [0,1]");
  if (!field.finite()) throw NumericError("eval_mlp: non-finite parameters");
  const Vec in = assemble_input(x, t, cond);
  const Vec h1 = ((field.w1 * in) + field.b1).array().tanh();
  const Vec h2 = ((field.w2 * h1) + field.b2).array().tanh();
  return field.w3 * h2 + field.b3;
}

double cfm_loss(const MlpField& field, const Batch& batch) {
  if (batch.size() == 0) throw std::invalid_argument("cfm_loss: empty batch");
  const Forward fw = forward_batch(field, batch);
  const Mat target = batch.x1 - batch.x0;
  return (fw.y - target).squaredNorm() / batch.size();
}

Gradients Gradients::zeros_like(const MlpField& f) {
  Gradients g;
  g.w1 = Mat::Zero(f.w1.rows(), f.w1.cols());
  g.w2 = Mat::Zero(f.w2.rows(), f.w2.cols());
  g.w3 = Mat::Zero(f.w3.rows(), f.w3.cols());
  g.b1 = Vec::Zero(f.b1.size());
  g.b2 = Vec::Zero(f.b2.size());
  g.b3 = Vec::Zero(f.b3.size());
  return g;
}

double cfm_loss_grad(const MlpField& field, const Batch& batch, Gradients& out) {
  if (batch.size() == 0) throw std::invalid_argument("cfm_loss_grad: empty batch");
  const Forward fw = forward_batch(field, batch);
  const Mat target = batch.x1 - batch.x0;
  const Mat diff = fw.y - target;
  const double loss = diff.squaredNorm() / batch.size();

  const Mat dy = (2.0 / batch.size()) * diff;
  out.w3 = dy * fw.h2.transpose();
  out.b3 = dy.rowwise().sum();
  const Mat dz2 = (field.w3.transpose() * dy).array() * (1.0 - fw.h2.array().square());
  out.w2 = dz2 * fw.h1.transpose();
  out.b2 = dz2.rowwise().sum();
  const Mat dz1 = (field.w2.transpose() * dz2).array() * (1.0 - fw.h1.array().square());
  out.w1 = dz1 * fw.in.transpose();
  out.b1 = dz1.rowwise().sum();
  return loss;
}

void TrainConfig::validate() const {
  if (batch_size < 1 || steps < 0 || learning_rate <= 0.0 || momentum < 0.0 || momentum >= 1.0)
    throw std::invalid_argument("TrainConfig: invalid hyperparameters");
}

Batch sample_batch(const EditTask& task, int batch_size, rng::CounterStream& stream) {
  const int d = task.dim();
  Batch batch;
  batch.x0.resize(d, batch_size);
  batch.x1.resize(d, batch_size);
  batch.t.resize(batch_size);
  batch.cond.resize(static_cast<std::size_t>(batch_size));
  for (int i = 0; i < batch_size; ++i) {
    const double u = stream.next_unit();
    const Cond c = u <= 1.0 / 3.0 ? Cond::Src : (u <= 2.0 / 3.0 ? Cond::Tar : Cond::Uncond);
    batch.cond[static_cast<std::size_t>(i)] = c;
    batch.x0.col(i) = sample_mixture(task.mixture(c), stream);
    batch.x1.col(i) = stream.normal_vec(d);
    batch.t[i] = stream.next_unit();
  }
  return batch;
}

TrainResult train_field(const EditTask& task, const TrainConfig& cfg) {
  cfg.validate();
  TrainResult result;
  result.field = MlpField::init(task.dim(), cfg.seed);
  result.loss_trace.reserve(static_cast<std::size_t>(cfg.steps));

  Gradients grad = Gradients::zeros_like(result.field);
  Gradients vel = Gradients::zeros_like(result.field);
  MlpField& f = result.field;

  for (int step = 0; step < cfg.steps; ++step) {
    rng::CounterStream stream(cfg.seed, rng::kTagTrainBatch, static_cast<std::uint64_t>(step), 0);
    const Batch batch = sample_batch(task, cfg.batch_size, stream);
    const double loss = cfm_loss_grad(f, batch, grad);
    if (!(loss <= 1e6))
      throw TrainingDivergedError("train_field: loss " + std::to_string(loss) + " at step " +
                                  std::to_string(step));
    result.loss_trace.push_back(loss);

    vel.w1 = cfg.momentum * vel.w1 + grad.w1;
    vel.w2 = cfg.momentum * vel.w2 + grad.w2;
    vel.w3 = cfg.momentum * vel.w3 + grad.w3;
    vel.b1 = cfg.momentum * vel.b1 + grad.b1;
    vel.b2 = cfg.momentum * vel.b2 + grad.b2;
    vel.b3 = cfg.momentum * vel.b3 + grad.b3;
    f.w1 -= cfg.learning_rate * vel.w1;
    f.w2 -= cfg.learning_rate * vel.w2;
    f.w3 -= cfg.learning_rate * vel.w3;
    f.b1 -= cfg.learning_rate * vel.b1;
    f.b2 -= cfg.learning_rate * vel.b2;
    f.b3 -= cfg.learning_rate * vel.b3;
  }
  return result;
}

namespace {

// Flat parameter views used by the finite-difference check.
struct ParamRef {
  double* ptr;
  double analytic;
};

std::vector<double*> flatten(MlpField& f) {
  std::vector<double*> ptrs;
  auto add_mat = [&](Mat& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) ptrs.push_back(m.data() + i);
  };
  auto add_vec = [&](Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) ptrs.push_back(v.data() + i);
  };
  add_mat(f.w1);
  add_mat(f.w2);
  add_mat(f.w3);
  add_vec(f.b1);
  add_vec(f.b2);
  add_vec(f.b3);
  return ptrs;
}

std::vector<const double*> flatten_grad(const Gradients& g) {
  std::vector<const double*> ptrs;
  auto add_mat = [&](const Mat& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) ptrs.push_back(m.data() + i);
  };
  auto add_vec = [&](const Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) ptrs.push_back(v.data() + i);
  };
  add_mat(g.w1);
  add_mat(g.w2);
  add_mat(g.w3);
  add_vec(g.b1);
  add_vec(g.b2);
  add_vec(g.b3);
  return ptrs;
}

}  // namespace

double numeric_grad_check(const MlpField& field, const Batch& batch, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3))
    throw std::invalid_argument("numeric_grad_check: eps outside [1e-7, 1e-3]");
  MlpField f = field;
  Gradients grad = Gradients::zeros_like(f);
  cfm_loss_grad(f, batch, grad);

  auto params = flatten(f);
  auto grads = flatten_grad(grad);
  const std::size_t total = params.size();
  const std::size_t count = std::max<std::size_t>(50, total / 40);
  rng::CounterStream pick(0x6772616463686b31ULL, total, count, 0);

  double max_rel = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const auto idx = static_cast<std::size_t>(pick.next_u64() % total);
    double* p = params[idx];
    const double saved = *p;
    *p = saved + eps;
    const double lp = cfm_loss(f, batch);
    *p = saved - eps;
    const double lm = cfm_loss(f, batch);
    *p = saved;
    const double numeric = (lp - lm) / (2.0 * eps);
    const double analytic = *grads[idx];
    const double rel = std::abs(analytic - numeric) /
                       std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

// ---- checkpoint I/O ----

namespace {

constexpr char kMagic[8] = {'A', 'F', 'M', 'L', 'P', 'C', 'K', '1'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

void write_f64_row_major(std::ostream& os, const Mat& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      unsigned char b[8];
      for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
      os.write(reinterpret_cast<const char*>(b), 8);
    }
}

Mat read_f64_row_major(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      unsigned char b[8];
      is.read(reinterpret_cast<char*>(b), 8);
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
      double v;
      std::memcpy(&v, &bits, 8);
      m(r, c) = v;
    }
  return m;
}

}  // namespace

void save_checkpoint(const MlpField& field, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
  os.write(kMagic, 8);
  write_u32(os, kVersion);
  write_u32(os, static_cast<std::uint32_t>(field.d));
  const std::uint32_t widths[4] = {static_cast<std::uint32_t>(field.input_dim()), kHiddenWidth,
                                   kHiddenWidth, static_cast<std::uint32_t>(field.d)};
  write_u32(os, 4);
  for (std::uint32_t w : widths) write_u32(os, w);
  write_f64_row_major(os, field.w1);
  write_f64_row_major(os, field.b1);
  write_f64_row_major(os, field.w2);
  write_f64_row_major(os, field.b2);
  write_f64_row_major(os, field.w3);
  write_f64_row_major(os, field.b3);
  if (!os) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

MlpField load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  if (read_u32(is) != kVersion) throw std::runtime_error("load_checkpoint: unsupported version");
  const auto d = static_cast<int>(read_u32(is));
  const auto nw = read_u32(is);
  if (nw != 4) throw std::runtime_error("load_checkpoint: unexpected layer layout");
  std::uint32_t widths[4];
  for (auto& w : widths) w = read_u32(is);
  MlpField f;
  f.d = d;
  if (static_cast<int>(widths[0]) != f.input_dim() || widths[1] != kHiddenWidth ||
      widths[2] != kHiddenWidth || static_cast<int>(widths[3]) != d)
    throw std::runtime_error("load_checkpoint: width header mismatch");
  f.w1 = read_f64_row_major(is, kHiddenWidth, f.input_dim());
  f.b1 = read_f64_row_major(is, kHiddenWidth, 1);
  f.w2 = read_f64_row_major(is, kHiddenWidth, kHiddenWidth);
  f.b2 = read_f64_row_major(is, kHiddenWidth, 1);
  f.w3 = read_f64_row_major(is, d, kHiddenWidth);
  f.b3 = read_f64_row_major(is, d, 1);
  if (!is) throw std::runtime_error("load_checkpoint: truncated file " + path);
  return f;
}

Vec MlpFieldHandle::velocity(const Vec& x, double t, Cond cond, double guidance) const {
  if (cond == Cond::Uncond) return eval_mlp(field_, x, t, Cond::Uncond);
  const Vec v_c = eval_mlp(field_, x, t, cond);
  if (guidance == 1.0) return v_c;
  const Vec v_u = eval_mlp(field_, x, t, Cond::Uncond);
  if (guidance == 0.0) return v_u;
  return v_u + guidance * (v_c - v_u);
}

}  // namespace af
