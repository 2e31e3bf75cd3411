#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace sepbn {

/// Small deterministic generator (splitmix64). Used for trajectory sampling
/// and seeded test generators; draws are identical across platforms, which
/// std::uniform_real_distribution does not guarantee.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  /// Inverse-CDF draw from a PMF given as a vector; returns a 0-based index.
  Eigen::Index categorical(const Eigen::VectorXd& probs) {
    const double u = uniform();
    double cum = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
      cum += probs(i);
      if (u < cum) return i;
    }
    return probs.size() - 1;
  }

 private:
  std::uint64_t state_;
};

}  // namespace sepbn
