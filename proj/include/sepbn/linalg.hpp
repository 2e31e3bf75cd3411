#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sepbn/errors.hpp"
#include "sepbn/variable_set.hpp"

namespace sepbn {

/// The 0/1 joint-outcome indicator matrix. Row r holds one indicator per
/// variable block marking that variable's outcome in joint outcome r; rows
/// enumerate outcomes with the first variable slowest-varying.
struct EventMatrix {
  Eigen::MatrixXi entries;
  std::vector<int> block_offsets;
};

/// The event matrix with the last column of every block after the first
/// removed, leaving a full-column-rank basis of the event column space.
struct BasisMatrix {
  Eigen::MatrixXi entries;
  std::vector<int> dropped_columns;
};

inline Eigen::MatrixXi kron(const Eigen::MatrixXi& lhs, const Eigen::MatrixXi& rhs) {
  Eigen::MatrixXi out(lhs.rows() * rhs.rows(), lhs.cols() * rhs.cols());
  for (Eigen::Index i = 0; i < lhs.rows(); ++i) {
    for (Eigen::Index j = 0; j < lhs.cols(); ++j) {
      out.block(i * rhs.rows(), j * rhs.cols(), rhs.rows(), rhs.cols()) =
          lhs(i, j) * rhs;
    }
  }
  return out;
}

namespace detail {

// Shared stacking recursion: start from an identity block for the first
// variable, then extend one variable at a time with
//   M_i = [ M_{i-1} (x) ones(m_i) | ones(mu_{i-1}) (x) I_i ]
// where I_i is the full identity for the event matrix and the identity minus
// its last column for the basis matrix.
inline Eigen::MatrixXi stack_variables(const VariableSet& vars, bool drop_last_column) {
  const auto identity_block = [&](int m) {
    Eigen::MatrixXi id = Eigen::MatrixXi::Identity(m, m);
    return drop_last_column ? Eigen::MatrixXi(id.leftCols(m - 1)) : id;
  };

  Eigen::MatrixXi acc = Eigen::MatrixXi::Identity(vars.cards[0], vars.cards[0]);
  for (std::size_t i = 1; i < vars.cards.size(); ++i) {
    const int m = vars.cards[i];
    const Eigen::MatrixXi ones_col = Eigen::MatrixXi::Ones(m, 1);
    const Eigen::MatrixXi ones_rows = Eigen::MatrixXi::Ones(acc.rows(), 1);
    const Eigen::MatrixXi left = kron(acc, ones_col);
    const Eigen::MatrixXi right = kron(ones_rows, identity_block(m));
    Eigen::MatrixXi next(left.rows(), left.cols() + right.cols());
    next.leftCols(left.cols()) = left;
    next.rightCols(right.cols()) = right;
    acc = std::move(next);
  }
  return acc;
}

}  // namespace detail

inline EventMatrix build_event_matrix(const VariableSet& vars, const Limits& limits = {}) {
  ensure_valid(vars, limits);
  EventMatrix out;
  out.entries = detail::stack_variables(vars, /*drop_last_column=*/false);
  out.block_offsets = vars.block_offsets();
  out.block_offsets.pop_back();
  return out;
}

inline BasisMatrix build_basis_matrix(const VariableSet& vars, const Limits& limits = {}) {
  ensure_valid(vars, limits);
  BasisMatrix out;
  out.entries = detail::stack_variables(vars, /*drop_last_column=*/true);
  const std::vector<int> offsets = vars.block_offsets();
  for (std::size_t i = 1; i < vars.cards.size(); ++i) {
    out.dropped_columns.push_back(offsets[i] + vars.cards[i] - 1);
  }
  return out;
}

/// Rank of the event matrix by the closed-form count of independent columns:
/// (sum of cardinalities) - (variable count) + 1.
inline int event_rank(const VariableSet& vars) {
  ensure_valid(vars, Limits{std::numeric_limits<std::uint64_t>::max()});
  return vars.sum_cards() - vars.var_count() + 1;
}

/// Numerical rank with a relative singular-value cutoff.
inline Eigen::Index numerical_rank(const Eigen::MatrixXd& m, double rel_tol = 1e-10) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > rel_tol * sv(0)) ++rank;
  }
  return rank;
}

/// Integer vectors spanning the right null space of the event matrix: for
/// each block k >= 2 the vector that is +1 on block 1, -1 on block k and 0
/// elsewhere. The event matrix annihilates them exactly.
inline std::vector<Eigen::VectorXi> null_space_basis(const VariableSet& vars) {
  ensure_valid(vars, Limits{std::numeric_limits<std::uint64_t>::max()});
  const std::vector<int> offsets = vars.block_offsets();
  const int total = vars.sum_cards();
  std::vector<Eigen::VectorXi> basis;
  for (int k = 1; k < vars.var_count(); ++k) {
    Eigen::VectorXi v = Eigen::VectorXi::Zero(total);
    v.segment(offsets[0], vars.cards[0]).setOnes();
    v.segment(offsets[k], vars.cards[k]).setConstant(-1);
    basis.push_back(std::move(v));
  }
  return basis;
}

/// Columns of the event matrix belonging to variable `block` (zero-based).
/// Right-multiplying a joint PMF (as a row vector) by this matrix yields the
/// marginal over that variable.
inline Eigen::MatrixXi variable_selector(const VariableSet& vars, int block,
                                         const Limits& limits = {}) {
  ensure_valid(vars, limits);
  if (block < 0 || block >= vars.var_count()) {
    throw ValidationError("variable index " + std::to_string(block) +
                          " out of range [0, " + std::to_string(vars.var_count()) + ")");
  }
  const auto mu = static_cast<Eigen::Index>(vars.joint_size());
  const int m = vars.cards[block];
  Eigen::Index stride = 1;
  for (int j = block + 1; j < vars.var_count(); ++j) stride *= vars.cards[j];
  Eigen::MatrixXi sel = Eigen::MatrixXi::Zero(mu, m);
  for (Eigen::Index r = 0; r < mu; ++r) {
    sel(r, static_cast<int>((r / stride) % m)) = 1;
  }
  return sel;
}

}  // namespace sepbn
