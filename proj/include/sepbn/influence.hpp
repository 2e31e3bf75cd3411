#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sepbn/cpt.hpp"
#include "sepbn/errors.hpp"
#include "sepbn/pmf.hpp"
#include "sepbn/rng.hpp"
#include "sepbn/separability.hpp"
#include "sepbn/variable_set.hpp"

namespace sepbn {

/// A network of coupled Markov chains. Row i of the influence matrix mixes
/// the sites' contributions to site i's next-status PMF; the local table for
/// the ordered pair (i, j) maps site j's current status to a PMF over site
/// i's statuses. Tables for pairs with zero influence weight may be absent.
struct InfluenceModel {
  std::vector<int> site_cards;
  Eigen::MatrixXd influence;
  std::vector<std::optional<Eigen::MatrixXd>> local_cpts;  // index i * n + j

  int site_count() const { return static_cast<int>(site_cards.size()); }

  const std::optional<Eigen::MatrixXd>& local(int to, int from) const {
    return local_cpts[static_cast<std::size_t>(to) * site_cards.size() + from];
  }

  std::optional<Eigen::MatrixXd>& local(int to, int from) {
    return local_cpts[static_cast<std::size_t>(to) * site_cards.size() + from];
  }
};

/// Statuses of every site, 0-based internally (files and CSV are 1-based).
struct NetworkState {
  std::vector<int> statuses;
};

inline void ensure_model(const InfluenceModel& model, double tol = kFileTol) {
  const int n = model.site_count();
  if (n == 0) throw ValidationError("influence model must have at least one site");
  for (int i = 0; i < n; ++i) {
    if (model.site_cards[i] < 1) {
      throw ValidationError("site " + std::to_string(i + 1) + " has cardinality " +
                            std::to_string(model.site_cards[i]));
    }
  }
  if (model.influence.rows() != n || model.influence.cols() != n) {
    throw ValidationError("influence matrix is " + std::to_string(model.influence.rows()) +
                          "x" + std::to_string(model.influence.cols()) + "; expected " +
                          std::to_string(n) + "x" + std::to_string(n));
  }
  if (model.influence.minCoeff() < -tol) {
    throw ValidationError("influence matrix has a negative entry");
  }
  for (int i = 0; i < n; ++i) {
    if (std::abs(model.influence.row(i).sum() - 1.0) > tol) {
      throw ValidationError("influence matrix row " + std::to_string(i + 1) + " sums to " +
                            std::to_string(model.influence.row(i).sum()) + ", not 1");
    }
  }
  if (model.local_cpts.size() != static_cast<std::size_t>(n) * n) {
    throw ValidationError("local table storage has wrong size");
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto& table = model.local(i, j);
      if (!table.has_value()) {
        if (model.influence(i, j) > 0.0) {
          throw ValidationError("missing local table for influence of site " +
                                std::to_string(j + 1) + " on site " + std::to_string(i + 1));
        }
        continue;
      }
      if (table->rows() != model.site_cards[j] || table->cols() != model.site_cards[i]) {
        throw ValidationError("local table (" + std::to_string(j + 1) + " -> " +
                              std::to_string(i + 1) + ") is " + std::to_string(table->rows()) +
                              "x" + std::to_string(table->cols()) + "; expected " +
                              std::to_string(model.site_cards[j]) + "x" +
                              std::to_string(model.site_cards[i]));
      }
      if (table->minCoeff() < -tol) {
        throw ValidationError("local table (" + std::to_string(j + 1) + " -> " +
                              std::to_string(i + 1) + ") has a negative entry");
      }
      for (Eigen::Index r = 0; r < table->rows(); ++r) {
        if (std::abs(table->row(r).sum() - 1.0) > tol) {
          throw ValidationError("local table (" + std::to_string(j + 1) + " -> " +
                                std::to_string(i + 1) + ") row " + std::to_string(r + 1) +
                                " sums to " + std::to_string(table->row(r).sum()));
        }
      }
    }
  }
}

inline void ensure_state(const InfluenceModel& model, const NetworkState& state) {
  if (static_cast<int>(state.statuses.size()) != model.site_count()) {
    throw ValidationError("state has " + std::to_string(state.statuses.size()) +
                          " sites; model has " + std::to_string(model.site_count()));
  }
  for (int i = 0; i < model.site_count(); ++i) {
    if (state.statuses[i] < 0 || state.statuses[i] >= model.site_cards[i]) {
      throw ValidationError("status of site " + std::to_string(i + 1) + " out of range");
    }
  }
}

/// One linear update of the per-site marginals. Exact for the underlying
/// joint chain because each site's next-status PMF is linear in the current
/// status indicators.
inline std::vector<Pmf> step_marginals(const InfluenceModel& model,
                                       const std::vector<Pmf>& marginals) {
  const int n = model.site_count();
  if (static_cast<int>(marginals.size()) != n) {
    throw ValidationError("expected " + std::to_string(n) + " per-site marginals, got " +
                          std::to_string(marginals.size()));
  }
  for (int i = 0; i < n; ++i) {
    if (marginals[i].size() != model.site_cards[i]) {
      throw ValidationError("marginal of site " + std::to_string(i + 1) + " has " +
                            std::to_string(marginals[i].size()) + " entries; expected " +
                            std::to_string(model.site_cards[i]));
    }
  }
  std::vector<Pmf> next;
  next.reserve(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(model.site_cards[i]);
    for (int j = 0; j < n; ++j) {
      const double d = model.influence(i, j);
      if (d == 0.0) continue;
      p += d * (model.local(i, j)->transpose() * marginals[j].probs());
    }
    // file-loaded inputs carry 12-digit rounding noise
    next.emplace_back(std::move(p), kFileTol);
  }
  return next;
}

/// Next-status PMFs given a concrete network state.
inline std::vector<Eigen::VectorXd> next_status_pmfs(const InfluenceModel& model,
                                                     const NetworkState& state) {
  ensure_state(model, state);
  const int n = model.site_count();
  std::vector<Eigen::VectorXd> pmfs;
  pmfs.reserve(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(model.site_cards[i]);
    for (int j = 0; j < n; ++j) {
      const double d = model.influence(i, j);
      if (d == 0.0) continue;
      p += d * model.local(i, j)->row(state.statuses[j]).transpose();
    }
    pmfs.push_back(std::move(p));
  }
  return pmfs;
}

/// Draw each site's next status independently from its next-status PMF.
/// Consumes one draw per site, in site order, so trajectories are
/// reproducible for a fixed seed.
inline NetworkState sample_step(const InfluenceModel& model, const NetworkState& state,
                                Rng& rng) {
  const std::vector<Eigen::VectorXd> pmfs = next_status_pmfs(model, state);
  NetworkState next;
  next.statuses.reserve(pmfs.size());
  for (const auto& p : pmfs) {
    next.statuses.push_back(static_cast<int>(rng.categorical(p)));
  }
  return next;
}

/// Node of a dynamic network: the sites feeding this node (0-based, in the
/// order of the factorization's variables) and the separable decomposition
/// of its conditional table.
struct DbnNode {
  std::vector<int> parents;
  SeparableFactorization factorization;
};

/// Assemble an influence model from per-node separable factorizations: row i
/// of the influence matrix holds node i's mixing weights at its parents'
/// columns, and the local tables are the per-parent tables.
inline InfluenceModel from_separable_dbn(const std::vector<DbnNode>& nodes) {
  const int n = static_cast<int>(nodes.size());
  if (n == 0) throw ValidationError("network must have at least one node");

  InfluenceModel model;
  model.site_cards.resize(n);
  for (int i = 0; i < n; ++i) {
    model.site_cards[i] = nodes[i].factorization.vars.target_card;
  }
  model.influence = Eigen::MatrixXd::Zero(n, n);
  model.local_cpts.assign(static_cast<std::size_t>(n) * n, std::nullopt);

  for (int i = 0; i < n; ++i) {
    const DbnNode& node = nodes[i];
    ensure_factorization(node.factorization);
    const int parent_count = static_cast<int>(node.parents.size());
    if (parent_count != node.factorization.vars.var_count()) {
      throw ValidationError("node " + std::to_string(i + 1) + " lists " +
                            std::to_string(parent_count) + " parents but its factorization has " +
                            std::to_string(node.factorization.vars.var_count()) +
                            " variables");
    }
    for (int k = 0; k < parent_count; ++k) {
      const int j = node.parents[k];
      if (j < 0 || j >= n) {
        throw ValidationError("node " + std::to_string(i + 1) + " references parent " +
                              std::to_string(j + 1) + " outside the network");
      }
      if (model.site_cards[j] != node.factorization.vars.cards[k]) {
        throw ValidationError("node " + std::to_string(i + 1) + " expects parent " +
                              std::to_string(j + 1) + " to have cardinality " +
                              std::to_string(node.factorization.vars.cards[k]) + ", but it has " +
                              std::to_string(model.site_cards[j]));
      }
      if (model.local(i, j).has_value()) {
        throw ValidationError("node " + std::to_string(i + 1) + " lists parent " +
                              std::to_string(j + 1) + " more than once");
      }
      model.influence(i, j) = node.factorization.gammas(k);
      model.local(i, j) = node.factorization.tables[k];
    }
  }
  ensure_model(model);
  return model;
}

/// Per-step, per-site marginals of the exact joint chain. Builds the full
/// product-space transition matrix (each joint row is the tensor product of
/// the sites' next-status PMFs), iterates it, and marginalizes. Ground truth
/// for step_marginals at small sizes.
inline std::vector<std::vector<Pmf>> exact_joint_oracle(const InfluenceModel& model,
                                                        const Pmf& initial_joint, int steps,
                                                        std::uint64_t joint_limit = 4096) {
  ensure_model(model);
  const int n = model.site_count();
  const VariableSet joint_vars{model.site_cards, 1};
  const std::uint64_t mu64 = joint_vars.joint_size();
  if (mu64 > joint_limit) {
    throw ResourceError("joint state count " + std::to_string(mu64) +
                        " exceeds the oracle limit of " + std::to_string(joint_limit));
  }
  const auto mu = static_cast<Eigen::Index>(mu64);
  if (initial_joint.size() != mu) {
    throw ValidationError("initial joint PMF has " + std::to_string(initial_joint.size()) +
                          " entries; expected " + std::to_string(mu));
  }

  Eigen::MatrixXd transition(mu, mu);
  for (Eigen::Index r = 0; r < mu; ++r) {
    NetworkState state;
    const std::vector<int> outcome = row_outcome(r, joint_vars);
    state.statuses.reserve(n);
    for (int v : outcome) state.statuses.push_back(v - 1);
    const std::vector<Eigen::VectorXd> pmfs = next_status_pmfs(model, state);
    // tensor product over sites, first site slowest-varying
    Eigen::VectorXd acc = pmfs[0];
    for (int i = 1; i < n; ++i) {
      Eigen::VectorXd widened(acc.size() * pmfs[i].size());
      for (Eigen::Index a = 0; a < acc.size(); ++a) {
        widened.segment(a * pmfs[i].size(), pmfs[i].size()) = acc(a) * pmfs[i];
      }
      acc = std::move(widened);
    }
    transition.row(r) = acc.transpose();
  }

  std::vector<std::vector<Pmf>> trajectory;
  Eigen::VectorXd joint = initial_joint.probs().cwiseMax(0.0);
  joint /= joint.sum();
  for (int k = 0; k <= steps; ++k) {
    trajectory.push_back(joint_marginals(Pmf(joint), joint_vars));
    if (k < steps) {
      joint = transition.transpose() * joint;
      joint /= joint.sum();  // roundoff accumulates over repeated powers
    }
  }
  return trajectory;
}

}  // namespace sepbn
