#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sepbn/errors.hpp"
#include "sepbn/pmf.hpp"
#include "sepbn/variable_set.hpp"

namespace sepbn {

/// A conditional probability table: one row per joint parent outcome (in
/// event-matrix row order), one column per target outcome. Rows are PMFs.
struct Cpt {
  VariableSet vars;
  Eigen::MatrixXd rows;
};

/// Report-style validation result: worst row-sum deviation and the most
/// negative entry, with their locations.
struct CptValidation {
  bool ok = true;
  double max_row_sum_deviation = 0.0;
  Eigen::Index worst_row = -1;
  double most_negative_entry = 0.0;
  Eigen::Index negative_row = -1;
  Eigen::Index negative_col = -1;
};

inline CptValidation validate_cpt(const Cpt& c, double tol = kPmfTol) {
  CptValidation report;
  for (Eigen::Index r = 0; r < c.rows.rows(); ++r) {
    const double dev = std::abs(c.rows.row(r).sum() - 1.0);
    if (dev > report.max_row_sum_deviation) {
      report.max_row_sum_deviation = dev;
      report.worst_row = r;
    }
    Eigen::Index col = 0;
    const double min_entry = c.rows.cols() > 0 ? c.rows.row(r).minCoeff(&col) : 0.0;
    if (min_entry < report.most_negative_entry) {
      report.most_negative_entry = min_entry;
      report.negative_row = r;
      report.negative_col = col;
    }
  }
  report.ok = report.max_row_sum_deviation <= tol && report.most_negative_entry >= -tol;
  return report;
}

inline void ensure_cpt_shape(const Cpt& c, const Limits& limits = {}) {
  ensure_valid(c.vars, limits);
  const auto mu = static_cast<Eigen::Index>(c.vars.joint_size());
  if (c.rows.rows() != mu || c.rows.cols() != c.vars.target_card) {
    throw ValidationError("CPT shape " + std::to_string(c.rows.rows()) + "x" +
                          std::to_string(c.rows.cols()) + " does not match " +
                          std::to_string(mu) + "x" + std::to_string(c.vars.target_card));
  }
}

/// Joint-outcome row index of a 1-based per-variable outcome tuple. The last
/// variable varies fastest.
inline Eigen::Index row_index(const std::vector<int>& outcome, const VariableSet& vars) {
  if (static_cast<int>(outcome.size()) != vars.var_count()) {
    throw ValidationError("outcome has " + std::to_string(outcome.size()) +
                          " components; expected " + std::to_string(vars.var_count()));
  }
  Eigen::Index index = 0;
  for (int i = 0; i < vars.var_count(); ++i) {
    if (outcome[i] < 1 || outcome[i] > vars.cards[i]) {
      throw ValidationError("outcome component " + std::to_string(i + 1) + " is " +
                            std::to_string(outcome[i]) + "; expected in [1, " +
                            std::to_string(vars.cards[i]) + "]");
    }
    index = index * vars.cards[i] + (outcome[i] - 1);
  }
  return index;
}

/// Inverse of row_index: the 1-based outcome tuple at a joint row.
inline std::vector<int> row_outcome(Eigen::Index index, const VariableSet& vars) {
  const auto mu = static_cast<Eigen::Index>(vars.joint_size());
  if (index < 0 || index >= mu) {
    throw ValidationError("row " + std::to_string(index) + " out of range [0, " +
                          std::to_string(mu) + ")");
  }
  std::vector<int> outcome(vars.cards.size());
  for (int i = vars.var_count() - 1; i >= 0; --i) {
    outcome[i] = static_cast<int>(index % vars.cards[i]) + 1;
    index /= vars.cards[i];
  }
  return outcome;
}

/// Per-variable marginals of a joint PMF; entry i equals the joint row
/// vector times the i-th variable-selector block of the event matrix.
inline std::vector<Pmf> joint_marginals(const Pmf& q, const VariableSet& vars) {
  const auto mu = static_cast<Eigen::Index>(vars.joint_size());
  if (q.size() != mu) {
    throw ValidationError("joint PMF has " + std::to_string(q.size()) +
                          " entries; expected " + std::to_string(mu));
  }
  std::vector<Pmf> marginals;
  marginals.reserve(vars.cards.size());
  Eigen::Index stride = mu;
  for (int i = 0; i < vars.var_count(); ++i) {
    const int m = vars.cards[i];
    stride /= m;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(m);
    for (Eigen::Index r = 0; r < mu; ++r) {
      acc((r / stride) % m) += q[r];
    }
    marginals.emplace_back(std::move(acc));
  }
  return marginals;
}

/// Push a joint PMF through a CPT: the target marginal q' C.
inline Pmf push_forward(const Pmf& q, const Cpt& c) {
  if (q.size() != c.rows.rows()) {
    throw ValidationError("joint PMF has " + std::to_string(q.size()) +
                          " entries; CPT has " + std::to_string(c.rows.rows()) +
                          " rows");
  }
  return Pmf(c.rows.transpose() * q.probs());
}

}  // namespace sepbn
