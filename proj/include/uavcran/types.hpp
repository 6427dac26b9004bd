#pragma once

#include <complex>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace uavcran {

using Complex = std::complex<double>;
using CMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

// Error hierarchy. Every error raised by the library derives from Error so
// front ends can report a single category; the subclasses carry the cause.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : Error {
  using Error::Error;
};

struct DegenerateGeometryError : Error {
  using Error::Error;
};

struct NumericalError : Error {
  using Error::Error;
};

struct CapacityError : Error {
  using Error::Error;
};

struct InvariantError : Error {
  using Error::Error;
};

struct ValidationError : Error {
  using Error::Error;
};

struct DesignError : Error {
  using Error::Error;
};

struct UnstableGainsError : Error {
  using Error::Error;
};

struct Position3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }

  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }

  friend bool operator==(const Position3&, const Position3&) = default;
};

// Rates are reported either in bits (log base 2) or nats per channel use.
enum class LogBase { Bits, Nats };

inline double log_scale(LogBase base) { return base == LogBase::Bits ? 1.0 / std::log(2.0) : 1.0; }

// A user subset as sorted zero-based indices.
using Subset = std::vector<int>;

}  // namespace uavcran
