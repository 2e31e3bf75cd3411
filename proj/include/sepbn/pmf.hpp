#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "sepbn/errors.hpp"

namespace sepbn {

inline constexpr double kPmfTol = 1e-12;

/// A probability mass function over a finite sample space: nonnegative
/// entries summing to one. The tolerance absorbs floating-point roundoff
/// only; construction rejects anything worse.
class Pmf {
 public:
  explicit Pmf(Eigen::VectorXd probs, double tol = kPmfTol)
      : probs_(std::move(probs)) {
    if (probs_.size() == 0) {
      throw ValidationError("PMF must have at least one entry");
    }
    const double min_entry = probs_.minCoeff();
    if (min_entry < -tol) {
      throw ValidationError("PMF entry " + std::to_string(min_entry) +
                            " is negative beyond tolerance");
    }
    const double sum = probs_.sum();
    if (std::abs(sum - 1.0) > tol) {
      throw ValidationError("PMF entries sum to " + std::to_string(sum) +
                            ", not 1 within tolerance");
    }
  }

  static Pmf uniform(Eigen::Index size) {
    return Pmf(Eigen::VectorXd::Constant(size, 1.0 / static_cast<double>(size)));
  }

  static Pmf point_mass(Eigen::Index size, Eigen::Index index) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(size);
    p(index) = 1.0;
    return Pmf(std::move(p));
  }

  const Eigen::VectorXd& probs() const { return probs_; }
  Eigen::Index size() const { return probs_.size(); }
  double operator[](Eigen::Index i) const { return probs_(i); }

 private:
  Eigen::VectorXd probs_;
};

}  // namespace sepbn
