#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mstl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t pos)
      : Error(msg + " (at position " + std::to_string(pos) + ")"), pos_(pos) {}
  std::size_t position() const { return pos_; }

 private:
  std::size_t pos_;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

/// Componentwise partial order on R^n_+.
inline bool leq(const Vec& a, const Vec& b, double tol = 0.0) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a[i] > b[i] + tol) return false;
  return true;
}

inline bool geq_zero(const Vec& a, double tol = 0.0) {
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a[i] < -tol) return false;
  return true;
}

/// Deterministic RNG (splitmix64). Distributions are implemented by hand so
/// that seeded streams are identical across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t pick(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

  bool coin() { return (next() & 1u) != 0; }

 private:
  std::uint64_t state_;
};

/// Shortest round-trippable decimal representation; keeps re-run outputs
/// byte-identical.
std::string format_double(double v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace mstl
