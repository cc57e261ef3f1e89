#pragma once

#include <cstdint>

#include "anchorflow/types.hpp"

namespace af::rng {

inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 avalanche permutation (Vigna's finalizer).
constexpr std::uint64_t avalanche(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Absorb one key word into the running state.
constexpr std::uint64_t absorb(std::uint64_t h, std::uint64_t v) {
  return avalanche(h + kGamma + v);
}

/// Counter-based uniform/normal stream keyed by (seed, a, b, c).
///
/// Every output word is a pure function of the key and a running counter,
/// so streams never share mutable state: concurrent callers with distinct
/// keys are independent by construction, and identical keys replay the
/// exact same sequence on any platform with IEEE doubles.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c)
      : key_(absorb(absorb(absorb(avalanche(seed + kGamma), a), b), c)) {}

  std::uint64_t next_u64() { return absorb(key_, counter_++); }

  /// Uniform real in (0, 1]; never 0, safe under log().
  double next_unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; consumes words in pairs.
  double next_normal();

  /// d independent standard normals.
  Vec normal_vec(int d);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// The per-(sample, step, rep) noise draw used by all editing samplers.
///
/// Mixes (seed, sample_idx, step_idx, rep_idx, coordinate counter) through
/// the SplitMix64 avalanche and converts to normals by Box-Muller. Output
/// is bit-exactly reproducible regardless of call order or thread layout.
Vec derive_noise(std::uint64_t seed, std::uint64_t sample_idx, std::uint64_t step_idx,
                 std::uint64_t rep_idx, int d);

// Key tags for auxiliary streams (source draws, reference batches,
// training data). Kept far above any grid index so they can never collide
// with derive_noise step keys.
inline constexpr std::uint64_t kTagSourceDraw = 0x5352435f44524157ULL;  // "SRC_DRAW"
inline constexpr std::uint64_t kTagTargetRef = 0x5441525f52454631ULL;   // "TAR_REF1"
inline constexpr std::uint64_t kTagTrainBatch = 0x5452414e5f424154ULL;  // "TRAN_BAT"
inline constexpr std::uint64_t kTagInit = 0x494e49545f303031ULL;        // "INIT_001"

}  // namespace af::rng
