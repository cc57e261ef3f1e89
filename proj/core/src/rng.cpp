#include "anchorflow/rng.hpp"

#include <cmath>
#include <mutex>
#include <numbers>

#include "anchorflow/verify.hpp"

namespace af::rng {

double CounterStream::next_normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = next_unit();
  const double u2 = next_unit();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

Vec CounterStream::normal_vec(int d) {
  Vec out(d);
  for (int i = 0; i < d; ++i) out[i] = next_normal();
  return out;
}

namespace {

// Fault::SharedRng deliberately reintroduces the shared-mutable-generator
// bug the keyed construction exists to rule out.
std::uint64_t shared_state = 0x853C49E6748FEA9BULL;
std::mutex shared_mutex;

Vec shared_rng_noise(int d) {
  std::lock_guard<std::mutex> lock(shared_mutex);
  CounterStream stream(shared_state, 0, 0, 0);
  shared_state += kGamma;
  return stream.normal_vec(d);
}

}  // namespace

Vec derive_noise(std::uint64_t seed, std::uint64_t sample_idx, std::uint64_t step_idx,
                 std::uint64_t rep_idx, int d) {
  if (current_fault() == Fault::SharedRng) return shared_rng_noise(d);
  CounterStream stream(seed, sample_idx, step_idx, rep_idx);
  return stream.normal_vec(d);
}

}  // namespace af::rng
