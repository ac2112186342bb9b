#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

#include <Eigen/Core>

namespace sgdva {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vector = VectorX<double>;
using Matrix = MatrixX<double>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Failure categories raised by the library. Callers branch on `code()`.
enum class ErrorCode {
  kDegreeOverflow,
  kUnavailableDerivative,
  kEmptyRegion,
  kPreconditionViolation,
  kUnknownActivation,
  kEpsTooLarge,
  kNonMonotone,
  kNonUnitVector,
  kStall,
  kThresholdDegenerate,
  kEmptyCandidates,
  kInvalidArgument,
  kIo,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Monte-Carlo estimate: sample mean and its standard error.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Running mean/variance (Welford). Deterministic for a fixed insertion order.
class MeanAccumulator {
 public:
  void add(double x) {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
  }
  std::int64_t count() const { return count_; }
  double mean() const { return mean_; }
  double variance() const { return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0; }
  Estimate estimate() const {
    return {mean_, count_ > 0 ? std::sqrt(variance() / static_cast<double>(count_)) : 0.0};
  }

 private:
  std::int64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// splitmix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix_seed(mix_seed(seed) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

/// Seeded random stream. Each stream owns its engine; copies diverge independently.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix_seed(seed)) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_(engine_); }
  bool bernoulli(double p) { return uniform_(engine_) < p; }
  std::uint64_t next() { return engine_(); }

  Vector normal_vector(Index d) {
    Vector v(d);
    for (Index i = 0; i < d; ++i) v(i) = normal();
    return v;
  }

  Vector unit_vector(Index d) {
    Vector v = normal_vector(d);
    while (v.norm() == 0.0) v = normal_vector(d);
    return v / v.norm();
  }

 private:
  boost::random::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_{0.0, 1.0};  // ziggurat
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Standard normal density, CDF and quantile.
inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
double normal_quantile(double p);

/// Angle between two nonzero vectors, in [0, pi].
template <typename DerivedA, typename DerivedB>
double angle_between(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  const double c = a.dot(b) / (a.norm() * b.norm());
  return std::acos(std::clamp(c, -1.0, 1.0));
}

/// Component of `x` orthogonal to the unit vector `w`.
template <typename DerivedX, typename DerivedW>
Vector orthogonal_part(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedW>& w) {
  return x - x.dot(w) * w;
}

/// A unit vector orthogonal to the unit vector `w`, drawn from `rng`.
Vector random_orthogonal_unit(const Vector& w, Rng& rng);

/// Unit vector at exactly `theta` radians from unit vector `w`.
Vector rotate_towards_random(const Vector& w, double theta, Rng& rng);

}  // namespace sgdva
