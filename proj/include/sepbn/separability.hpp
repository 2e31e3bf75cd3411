#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sepbn/cpt.hpp"
#include "sepbn/errors.hpp"
#include "sepbn/linalg.hpp"
#include "sepbn/pmf.hpp"
#include "sepbn/rng.hpp"
#include "sepbn/variable_set.hpp"

namespace sepbn {

/// Default relative Frobenius-residual threshold for the separability test.
inline constexpr double kSeparabilityTol = 1e-9;

/// Mixing weights at or below this value are treated as zero and their
/// per-variable table replaced by the uniform one.
inline constexpr double kZeroWeightTol = 1e-10;

/// Lenient tolerance for validating externally supplied data (files printed
/// at 12 significant digits carry more rounding than internal arithmetic).
inline constexpr double kFileTol = 1e-9;

/// A conditional table decomposed into a convex combination of per-variable
/// tables: row (x1..xn) of the composed table equals
/// sum_i gamma_i * tables[i].row(x_i).
struct SeparableFactorization {
  VariableSet vars;
  Eigen::VectorXd gammas;
  std::vector<Eigen::MatrixXd> tables;
};

struct SeparabilityVerdict {
  bool separable = false;
  double residual = 0.0;
  double tol = kSeparabilityTol;
};

inline void ensure_factorization(const SeparableFactorization& f, double tol = kFileTol,
                                 const Limits& limits = {}) {
  ensure_valid(f.vars, limits);
  const int n = f.vars.var_count();
  if (f.gammas.size() != n) {
    throw ValidationError("factorization has " + std::to_string(f.gammas.size()) +
                          " mixing weights; expected " + std::to_string(n));
  }
  if (f.gammas.minCoeff() < -tol) {
    throw ValidationError("mixing weights must be nonnegative");
  }
  if (std::abs(f.gammas.sum() - 1.0) > tol) {
    throw ValidationError("mixing weights sum to " + std::to_string(f.gammas.sum()) +
                          ", not 1 within tolerance");
  }
  if (static_cast<int>(f.tables.size()) != n) {
    throw ValidationError("factorization has " + std::to_string(f.tables.size()) +
                          " tables; expected " + std::to_string(n));
  }
  for (int i = 0; i < n; ++i) {
    const auto& t = f.tables[i];
    if (t.rows() != f.vars.cards[i] || t.cols() != f.vars.target_card) {
      throw ValidationError("table " + std::to_string(i + 1) + " is " +
                            std::to_string(t.rows()) + "x" + std::to_string(t.cols()) +
                            "; expected " + std::to_string(f.vars.cards[i]) + "x" +
                            std::to_string(f.vars.target_card));
    }
    if (t.size() > 0 && t.minCoeff() < -tol) {
      throw ValidationError("table " + std::to_string(i + 1) + " has a negative entry");
    }
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      if (std::abs(t.row(r).sum() - 1.0) > tol) {
        throw ValidationError("table " + std::to_string(i + 1) + " row " +
                              std::to_string(r + 1) + " sums to " +
                              std::to_string(t.row(r).sum()) + ", not 1");
      }
    }
  }
}

/// Orthogonal projection of every CPT column onto the column space of the
/// event matrix, computed through a QR factorization of the reduced basis
/// rather than the normal equations.
inline Eigen::MatrixXd project(const Cpt& c) {
  ensure_cpt_shape(c);
  const Eigen::MatrixXd basis = build_basis_matrix(c.vars).entries.cast<double>();
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);
  const Eigen::MatrixXd projected = basis * qr.solve(c.rows);
  if (!projected.allFinite()) {
    throw NumericalError("projection produced non-finite values");
  }
  return projected;
}

/// The table is separable exactly when it equals its own projection; the
/// verdict compares the Frobenius residual against tol * max(1, |C|_F).
inline SeparabilityVerdict test_separable(const Cpt& c, double tol = kSeparabilityTol) {
  const Eigen::MatrixXd projected = project(c);
  const double residual = (c.rows - projected).norm();
  SeparabilityVerdict verdict;
  verdict.residual = residual;
  verdict.tol = tol;
  verdict.separable = residual <= tol * std::max(1.0, c.rows.norm());
  return verdict;
}

/// Assemble the CPT sum_i gamma_i * selector_i * tables[i].
inline Cpt compose(const SeparableFactorization& f, double validation_tol = kFileTol) {
  ensure_factorization(f, validation_tol);
  const auto mu = static_cast<Eigen::Index>(f.vars.joint_size());
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(mu, f.vars.target_card);
  Eigen::Index stride = mu;
  for (int i = 0; i < f.vars.var_count(); ++i) {
    const int m = f.vars.cards[i];
    stride /= m;
    if (f.gammas(i) == 0.0) continue;
    for (Eigen::Index r = 0; r < mu; ++r) {
      rows.row(r) += f.gammas(i) * f.tables[i].row((r / stride) % m);
    }
  }
  return Cpt{f.vars, std::move(rows)};
}

namespace detail {

// Least-squares coordinates of the CPT against the reduced basis, scattered
// back into event-matrix column positions with zero rows at the dropped
// columns. For a separable table, event_matrix * result == table.
inline Eigen::MatrixXd event_coefficients(const Cpt& c) {
  const BasisMatrix basis = build_basis_matrix(c.vars);
  const Eigen::MatrixXd bd = basis.entries.cast<double>();
  const Eigen::MatrixXd coords = Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(bd).solve(c.rows);
  if (!coords.allFinite()) {
    throw NumericalError("least-squares solve produced non-finite values");
  }
  const int total = c.vars.sum_cards();
  std::vector<bool> dropped(total, false);
  for (int d : basis.dropped_columns) dropped[d] = true;
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(total, c.rows.cols());
  Eigen::Index src = 0;
  for (int col = 0; col < total; ++col) {
    if (!dropped[col]) full.row(col) = coords.row(src++);
  }
  return full;
}

}  // namespace detail

/// Coefficient matrix F with event_matrix * F equal to the CPT. Requires the
/// input to pass the separability test at `tol`.
inline Eigen::MatrixXd solve_coefficients(const Cpt& c, double tol = kSeparabilityTol) {
  const SeparabilityVerdict verdict = test_separable(c, tol);
  if (!verdict.separable) {
    throw NotSeparableError("CPT is not separable: residual " +
                                std::to_string(verdict.residual) + " exceeds tolerance",
                            verdict.residual);
  }
  return detail::event_coefficients(c);
}

/// Shift each column with negative entries by a blockwise-constant null-space
/// vector so that it becomes nonnegative while the product with the event
/// matrix is unchanged. Blocks whose column minimum is negative are raised by
/// that amount; donor blocks are lowered greedily, largest minimum first,
/// never below zero. Feasibility of the budget is implied by
/// event_matrix * column >= 0, up to `feasibility_tol`.
inline Eigen::MatrixXd repair_negative_columns(const Eigen::MatrixXd& coeffs,
                                               const VariableSet& vars,
                                               double feasibility_tol = 1e-10) {
  ensure_valid(vars, Limits{std::numeric_limits<std::uint64_t>::max()});
  if (coeffs.rows() != vars.sum_cards()) {
    throw ValidationError("coefficient matrix has " + std::to_string(coeffs.rows()) +
                          " rows; expected " + std::to_string(vars.sum_cards()));
  }
  const int n = vars.var_count();
  const std::vector<int> offsets = vars.block_offsets();
  Eigen::MatrixXd out = coeffs;

  for (Eigen::Index col = 0; col < out.cols(); ++col) {
    if (out.col(col).minCoeff() >= 0.0) continue;

    std::vector<double> block_min(n);
    double need = 0.0;
    double capacity = 0.0;
    std::vector<int> lifted;
    std::vector<int> donors;
    for (int i = 0; i < n; ++i) {
      block_min[i] = out.col(col).segment(offsets[i], vars.cards[i]).minCoeff();
      if (block_min[i] < 0.0) {
        need += -block_min[i];
        lifted.push_back(i);
      } else {
        capacity += block_min[i];
        donors.push_back(i);
      }
    }
    if (need > capacity + feasibility_tol) {
      throw ValidationError(
          "column " + std::to_string(col + 1) + " cannot be made nonnegative (deficit " +
          std::to_string(need - capacity) +
          "); the coefficients do not come from a nonnegative table");
    }

    std::vector<double> shift(n, 0.0);
    double funded = need;
    if (funded > capacity) {
      // Within tolerance of feasible: shave the least-negative lifts and
      // leave residual negativity below feasibility_tol.
      std::stable_sort(lifted.begin(), lifted.end(), [&](int a, int b) {
        return -block_min[a] < -block_min[b];
      });
      double shortfall = need - capacity;
      funded = capacity;
      for (int i : lifted) {
        const double reduce = std::min(-block_min[i], shortfall);
        shift[i] = -block_min[i] - reduce;
        shortfall -= reduce;
      }
    } else {
      for (int i : lifted) shift[i] = -block_min[i];
    }

    std::stable_sort(donors.begin(), donors.end(), [&](int a, int b) {
      return block_min[a] > block_min[b];
    });
    double remaining = funded;
    for (int i : donors) {
      const double take = std::min(remaining, block_min[i]);
      shift[i] = -take;
      remaining -= take;
      if (remaining <= 0.0) break;
    }

    for (int i = 0; i < n; ++i) {
      if (shift[i] != 0.0) {
        out.col(col).segment(offsets[i], vars.cards[i]).array() += shift[i];
      }
    }
  }
  return out;
}

struct ApproximationReport {
  double projection_residual = 0.0;
  double repair_deviation = 0.0;
};

namespace detail {

// Shared tail of factorize and approximate_separable: decompose a CPT that
// lies in (or within `slack` of) the event column space into mixing weights
// and per-variable tables. `slack` bounds the entrywise negativity the
// coefficient repair must absorb.
inline SeparableFactorization factorize_in_subspace(const Cpt& c, double slack) {
  const int n = c.vars.var_count();
  const int mz = c.vars.target_card;
  const std::vector<int> offsets = c.vars.block_offsets();

  Eigen::MatrixXd coeffs =
      repair_negative_columns(detail::event_coefficients(c), c.vars, slack + 1e-10);

  const double clamp_floor = -(slack + 1e-9);
  for (Eigen::Index r = 0; r < coeffs.rows(); ++r) {
    for (Eigen::Index k = 0; k < coeffs.cols(); ++k) {
      if (coeffs(r, k) < clamp_floor) {
        throw NumericalError("repaired coefficients retain a negative entry of " +
                             std::to_string(coeffs(r, k)));
      }
      if (coeffs(r, k) < 0.0) coeffs(r, k) = 0.0;
    }
  }

  // Row sums of the coefficients are constant within each block; the common
  // value is that variable's mixing weight.
  const Eigen::VectorXd row_sums = coeffs.rowwise().sum();
  const double constancy_tol = std::max(1e-8, 10.0 * slack);
  Eigen::VectorXd gammas(n);
  for (int i = 0; i < n; ++i) {
    const auto seg = row_sums.segment(offsets[i], c.vars.cards[i]);
    if (seg.maxCoeff() - seg.minCoeff() > constancy_tol) {
      throw NumericalError("coefficient row sums are not blockwise constant (spread " +
                           std::to_string(seg.maxCoeff() - seg.minCoeff()) + ")");
    }
    gammas(i) = seg.mean();
  }

  SeparableFactorization fact;
  fact.vars = c.vars;
  fact.tables.reserve(n);
  for (int i = 0; i < n; ++i) {
    if (gammas(i) <= kZeroWeightTol) {
      gammas(i) = 0.0;
      fact.tables.push_back(Eigen::MatrixXd::Constant(c.vars.cards[i], mz, 1.0 / mz));
      continue;
    }
    Eigen::MatrixXd table = coeffs.middleRows(offsets[i], c.vars.cards[i]);
    for (Eigen::Index r = 0; r < table.rows(); ++r) {
      const double s = table.row(r).sum();
      if (s <= 0.0) {
        throw NumericalError("degenerate zero row in per-variable table " +
                             std::to_string(i + 1));
      }
      table.row(r) /= s;
    }
    fact.tables.push_back(std::move(table));
  }

  const double gamma_sum = gammas.sum();
  if (gamma_sum <= 0.0) {
    throw NumericalError("mixing weights sum to " + std::to_string(gamma_sum));
  }
  fact.gammas = gammas / gamma_sum;
  return fact;
}

}  // namespace detail

/// Constructive factorization of a separable CPT. The result is not unique;
/// the output is the deterministic one produced by the canonical basis and
/// greedy repair order. compose(factorize(c)) reproduces c.
inline SeparableFactorization factorize(const Cpt& c, double tol = kSeparabilityTol) {
  const SeparabilityVerdict verdict = test_separable(c, tol);
  if (!verdict.separable) {
    throw NotSeparableError("CPT is not separable: residual " +
                                std::to_string(verdict.residual) + " exceeds tolerance",
                            verdict.residual);
  }
  return detail::factorize_in_subspace(c, 0.0);
}

/// Least-squares separable approximation: project onto the event column
/// space, clamp any negative entries to zero, renormalize rows, and factorize
/// the result. Both the projection residual and the clamp deviation are
/// reported rather than folded together.
inline std::pair<SeparableFactorization, ApproximationReport> approximate_separable(
    const Cpt& c) {
  ensure_cpt_shape(c);
  const Eigen::MatrixXd projected = project(c);
  ApproximationReport report;
  report.projection_residual = (c.rows - projected).norm();

  Eigen::MatrixXd repaired = projected;
  bool clamped = false;
  for (Eigen::Index r = 0; r < repaired.rows(); ++r) {
    for (Eigen::Index k = 0; k < repaired.cols(); ++k) {
      if (repaired(r, k) < 0.0) {
        repaired(r, k) = 0.0;
        clamped = true;
      }
    }
    repaired.row(r) /= repaired.row(r).sum();
  }
  report.repair_deviation = (projected - repaired).norm();

  const Cpt target{c.vars, std::move(repaired)};
  double slack = 0.0;
  if (clamped) {
    // Clamping can push the table slightly off the subspace; its own
    // projection bounds the negativity the pipeline must absorb.
    slack = std::max(0.0, -project(target).minCoeff());
  }
  return {detail::factorize_in_subspace(target, slack), report};
}

/// A degree-2 exchange between two joint rows that leaves every per-variable
/// marginal unchanged: mass moves from rows {minus_a, minus_b} onto rows
/// {plus_a, plus_b}. The set of all such moves spans the left null space of
/// the event matrix.
struct MarginMove {
  Eigen::Index plus_a = 0;
  Eigen::Index plus_b = 0;
  Eigen::Index minus_a = 0;
  Eigen::Index minus_b = 0;
};

inline std::vector<MarginMove> margin_preserving_moves(const VariableSet& vars,
                                                       const Limits& limits = {}) {
  ensure_valid(vars, limits);
  const int n = vars.var_count();
  const auto mu = static_cast<Eigen::Index>(vars.joint_size());
  std::vector<Eigen::Index> strides(n);
  Eigen::Index stride = mu;
  for (int i = 0; i < n; ++i) {
    stride /= vars.cards[i];
    strides[i] = stride;
  }

  std::vector<MarginMove> moves;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      for (Eigen::Index base = 0; base < mu; ++base) {
        // one representative per assignment of the remaining variables
        if ((base / strides[i]) % vars.cards[i] != 0) continue;
        if ((base / strides[j]) % vars.cards[j] != 0) continue;
        for (int a = 0; a < vars.cards[i]; ++a) {
          for (int a2 = a + 1; a2 < vars.cards[i]; ++a2) {
            for (int b = 0; b < vars.cards[j]; ++b) {
              for (int b2 = b + 1; b2 < vars.cards[j]; ++b2) {
                MarginMove mv;
                mv.plus_a = base + a * strides[i] + b * strides[j];
                mv.plus_b = base + a2 * strides[i] + b2 * strides[j];
                mv.minus_a = base + a * strides[i] + b2 * strides[j];
                mv.minus_b = base + a2 * strides[i] + b * strides[j];
                moves.push_back(mv);
              }
            }
          }
        }
      }
    }
  }
  return moves;
}

/// Conclusive sufficiency check: the target marginal depends only on the
/// parent marginals iff every margin-preserving exchange leaves the
/// push-forward unchanged. Compares the two PMFs (each uniform on a move's
/// row pair) through the table.
inline bool sufficient_exact(const Cpt& c, double tol = 1e-9) {
  ensure_cpt_shape(c);
  for (const MarginMove& mv : margin_preserving_moves(c.vars)) {
    const Eigen::RowVectorXd diff = 0.5 * (c.rows.row(mv.plus_a) + c.rows.row(mv.plus_b)) -
                                    0.5 * (c.rows.row(mv.minus_a) + c.rows.row(mv.minus_b));
    if (diff.cwiseAbs().maxCoeff() > tol) return false;
  }
  return true;
}

/// Randomized sufficiency evidence plus the conclusive exchange check.
/// Samples random PMF pairs with equal marginals and compares push-forwards;
/// a `true` from the randomized part alone would be evidence, but the
/// exchange check makes the combined answer decisive.
inline bool sufficiency_oracle(const Cpt& c, int trials, std::uint64_t seed,
                               double tol = 1e-9) {
  if (!sufficient_exact(c, tol)) return false;
  const std::vector<MarginMove> moves = margin_preserving_moves(c.vars);
  if (moves.empty()) return true;

  const auto mu = c.rows.rows();
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd q1(mu);
    for (Eigen::Index r = 0; r < mu; ++r) {
      q1(r) = -std::log(1.0 - rng.uniform());
    }
    q1 /= q1.sum();

    Eigen::VectorXd delta = Eigen::VectorXd::Zero(mu);
    const int combo = 1 + static_cast<int>(rng.below(3));
    for (int s = 0; s < combo; ++s) {
      const MarginMove& mv = moves[rng.below(moves.size())];
      const double w = rng.uniform() - 0.5;
      delta(mv.plus_a) += w;
      delta(mv.plus_b) += w;
      delta(mv.minus_a) -= w;
      delta(mv.minus_b) -= w;
    }

    double scale = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < mu; ++r) {
      if (delta(r) < 0.0) scale = std::min(scale, q1(r) / -delta(r));
    }
    if (!std::isfinite(scale)) continue;  // moves cancelled out
    delta *= 0.5 * scale;

    const Eigen::RowVectorXd diff = delta.transpose() * c.rows;
    if (diff.cwiseAbs().maxCoeff() > tol) return false;
  }
  return true;
}

}  // namespace sepbn
