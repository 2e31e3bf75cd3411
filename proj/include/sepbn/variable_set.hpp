#pragma once

#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "sepbn/errors.hpp"

namespace sepbn {

/// Size guards for dense constructions. Joint-outcome counts beyond
/// max_joint_outcomes are rejected up front; the dense projection behind the
/// separability test costs O(mu * (sum of cardinalities)^2).
struct Limits {
  std::uint64_t max_joint_outcomes = 10000;
};

/// Ordered cardinalities of the parent variables plus the cardinality of the
/// conditioned (target) variable. Joint outcomes are indexed with the first
/// variable slowest-varying and the last variable fastest-varying.
struct VariableSet {
  std::vector<int> cards;
  int target_card = 1;

  int var_count() const { return static_cast<int>(cards.size()); }

  int sum_cards() const { return std::accumulate(cards.begin(), cards.end(), 0); }

  /// Product of cardinalities, saturating at uint64 max on overflow.
  std::uint64_t joint_size() const {
    std::uint64_t prod = 1;
    for (int m : cards) {
      const auto card = static_cast<std::uint64_t>(m);
      if (card != 0 && prod > std::numeric_limits<std::uint64_t>::max() / card) {
        return std::numeric_limits<std::uint64_t>::max();
      }
      prod *= card;
    }
    return prod;
  }

  /// Start column of each variable's indicator block, plus a trailing
  /// entry equal to the total column count.
  std::vector<int> block_offsets() const {
    std::vector<int> offsets(cards.size() + 1, 0);
    for (std::size_t i = 0; i < cards.size(); ++i) {
      offsets[i + 1] = offsets[i] + cards[i];
    }
    return offsets;
  }
};

inline void ensure_valid(const VariableSet& vars, const Limits& limits = {}) {
  if (vars.cards.empty()) {
    throw ValidationError("variable set must contain at least one variable");
  }
  for (std::size_t i = 0; i < vars.cards.size(); ++i) {
    if (vars.cards[i] < 1) {
      throw ValidationError("variable " + std::to_string(i + 1) +
                            " has cardinality " + std::to_string(vars.cards[i]) +
                            "; expected >= 1");
    }
  }
  if (vars.target_card < 1) {
    throw ValidationError("target cardinality " + std::to_string(vars.target_card) +
                          " is invalid; expected >= 1");
  }
  const std::uint64_t mu = vars.joint_size();
  if (mu > limits.max_joint_outcomes) {
    throw ResourceError("joint outcome count " + std::to_string(mu) +
                        " exceeds the limit of " +
                        std::to_string(limits.max_joint_outcomes));
  }
}

}  // namespace sepbn
