#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace af {

// Latent coordinates and d x d covariance blocks. Dimension is fixed per
// task (default 2, anything up to ~16 is fine) and checked at API
// boundaries, not encoded in the type.
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Condition id attached to every velocity-field evaluation.
enum class Cond { Src, Tar, Uncond };

inline const char* cond_name(Cond c) {
  switch (c) {
    case Cond::Src: return "src";
    case Cond::Tar: return "tar";
    case Cond::Uncond: return "uncond";
  }
  return "?";
}

/// Non-finite values, singular covariances, failed factorizations.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Importance-sampling oracle collapsed (effective sample size too small).
class OracleDegenerateError : public NumericError {
 public:
  explicit OracleDegenerateError(const std::string& what) : NumericError(what) {}
};

/// Training loss blew past the divergence guard.
class TrainingDivergedError : public NumericError {
 public:
  explicit TrainingDivergedError(const std::string& what) : NumericError(what) {}
};

/// Bad config file: parse errors carry a line number, invariant
/// violations name the offending key.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace af
