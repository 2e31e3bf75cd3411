#include <catch2/catch.hpp>

#include <Eigen/Dense>

#include "sepbn/linalg.hpp"
#include "support/generators.hpp"

using namespace sepbn;
using testsupport::vset;

namespace {

Eigen::MatrixXi two_by_three_event_matrix() {
  Eigen::MatrixXi expected(6, 5);
  expected << 1, 0, 1, 0, 0,
              1, 0, 0, 1, 0,
              1, 0, 0, 0, 1,
              0, 1, 1, 0, 0,
              0, 1, 0, 1, 0,
              0, 1, 0, 0, 1;
  return expected;
}

}  // namespace

TEST_CASE("event matrix for cards [2,3] matches the worked 6x5 layout") {
  const EventMatrix b = build_event_matrix(vset({2, 3}, 2));
  REQUIRE(b.entries.rows() == 6);
  REQUIRE(b.entries.cols() == 5);
  CHECK((b.entries.array() == two_by_three_event_matrix().array()).all());
  CHECK(b.block_offsets == std::vector<int>{0, 2});
}

TEST_CASE("event matrix for a single variable is the identity") {
  const EventMatrix b = build_event_matrix(vset({4}, 2));
  CHECK((b.entries.array() == Eigen::MatrixXi::Identity(4, 4).array()).all());
}

TEST_CASE("event matrix for cards [2,2]") {
  const EventMatrix b = build_event_matrix(vset({2, 2}, 2));
  Eigen::MatrixXi expected(4, 4);
  expected << 1, 0, 1, 0,
              1, 0, 0, 1,
              0, 1, 1, 0,
              0, 1, 0, 1;
  CHECK((b.entries.array() == expected.array()).all());
}

TEST_CASE("event matrix rejects joint sizes beyond the limit") {
  Limits limits;
  limits.max_joint_outcomes = 100;
  REQUIRE_THROWS_MATCHES(build_event_matrix(vset({5, 5, 5}, 2), limits), ResourceError,
                         Catch::Matchers::Message("joint outcome count 125 exceeds the limit of 100"));
}

TEST_CASE("the joint size limit is overridable") {
  const VariableSet vars = vset({30, 30, 30}, 2);  // 27000 joint outcomes
  REQUIRE_THROWS_AS(build_event_matrix(vars), ResourceError);
  Limits limits;
  limits.max_joint_outcomes = 50000;
  const EventMatrix b = build_event_matrix(vars, limits);
  CHECK(b.entries.rows() == 27000);
  CHECK(b.entries.cols() == 90);
  CHECK(b.entries.row(12345).sum() == 3);
}

TEST_CASE("basis matrix drops the last column of every block after the first") {
  const BasisMatrix a = build_basis_matrix(vset({2, 3}, 2));
  REQUIRE(a.entries.cols() == 4);
  CHECK((a.entries.array() == two_by_three_event_matrix().leftCols(4).array()).all());
  CHECK(a.dropped_columns == std::vector<int>{4});
}

TEST_CASE("basis matrix of a single variable is the identity") {
  const BasisMatrix a = build_basis_matrix(vset({3}, 2));
  CHECK((a.entries.array() == Eigen::MatrixXi::Identity(3, 3).array()).all());
  CHECK(a.dropped_columns.empty());
}

TEST_CASE("basis matrix shape for cards [2,2,2]") {
  const BasisMatrix a = build_basis_matrix(vset({2, 2, 2}, 2));
  CHECK(a.entries.rows() == 8);
  CHECK(a.entries.cols() == 4);
  CHECK(a.dropped_columns == std::vector<int>{3, 5});
}

TEST_CASE("event rank formula") {
  CHECK(event_rank(vset({2, 3}, 2)) == 4);
  CHECK(event_rank(vset({7}, 2)) == 7);
  CHECK(event_rank(vset({2, 2, 2}, 2)) == 4);
}

TEST_CASE("null space basis vectors") {
  SECTION("cards [2,3]") {
    const auto basis = null_space_basis(vset({2, 3}, 2));
    REQUIRE(basis.size() == 1);
    Eigen::VectorXi expected(5);
    expected << 1, 1, -1, -1, -1;
    CHECK((basis[0].array() == expected.array()).all());
  }
  SECTION("single variable has no null directions") {
    CHECK(null_space_basis(vset({5}, 2)).empty());
  }
  SECTION("cards [2,2,2]") {
    const auto basis = null_space_basis(vset({2, 2, 2}, 2));
    REQUIRE(basis.size() == 2);
    Eigen::VectorXi first(6), second(6);
    first << 1, 1, -1, -1, 0, 0;
    second << 1, 1, 0, 0, -1, -1;
    CHECK((basis[0].array() == first.array()).all());
    CHECK((basis[1].array() == second.array()).all());
    const Eigen::MatrixXi b = build_event_matrix(vset({2, 2, 2}, 2)).entries;
    CHECK(((b * basis[0]).array() == 0).all());
    CHECK(((b * basis[1]).array() == 0).all());
  }
}

TEST_CASE("variable selector extracts event-matrix blocks") {
  const VariableSet vars = vset({2, 3}, 2);
  const Eigen::MatrixXi b = build_event_matrix(vars).entries;
  CHECK((variable_selector(vars, 0).array() == b.leftCols(2).array()).all());
  CHECK((variable_selector(vars, 1).array() == b.rightCols(3).array()).all());
  CHECK((variable_selector(vset({4}, 2), 0).array() == Eigen::MatrixXi::Identity(4, 4).array()).all());
  REQUIRE_THROWS_AS(variable_selector(vars, 2), ValidationError);
  REQUIRE_THROWS_AS(variable_selector(vars, -1), ValidationError);
}

TEST_CASE("random event matrices satisfy the structural invariants") {
  Rng rng(20240521);
  for (int trial = 0; trial < 60; ++trial) {
    const VariableSet vars = testsupport::random_vars(rng);
    const EventMatrix b = build_event_matrix(vars);
    const auto mu = static_cast<Eigen::Index>(vars.joint_size());
    const int n = vars.var_count();

    INFO("trial " << trial << ", " << n << " variables");
    REQUIRE(b.entries.rows() == mu);
    REQUIRE(b.entries.cols() == vars.sum_cards());

    // every row selects exactly one outcome per block
    for (Eigen::Index r = 0; r < mu; ++r) {
      REQUIRE(b.entries.row(r).sum() == n);
    }
    const std::vector<int> offsets = vars.block_offsets();
    for (int i = 0; i < n; ++i) {
      const auto block = b.entries.middleCols(offsets[i], vars.cards[i]);
      // block indicator times B gives the all-ones vector
      CHECK((block.rowwise().sum().array() == 1).all());
      for (int col = 0; col < vars.cards[i]; ++col) {
        CHECK(block.col(col).sum() == mu / vars.cards[i]);
      }
    }

    // rank formula against the numerical rank
    CHECK(numerical_rank(b.entries.cast<double>()) == event_rank(vars));

    // exact annihilation of the null basis
    for (const auto& v : null_space_basis(vars)) {
      CHECK(((b.entries * v).array() == 0).all());
    }

    // the reduced basis spans the same column space at full column rank
    const BasisMatrix a = build_basis_matrix(vars);
    REQUIRE(a.entries.cols() == event_rank(vars));
    CHECK(numerical_rank(a.entries.cast<double>()) == a.entries.cols());
    Eigen::MatrixXd stacked(mu, a.entries.cols() + b.entries.cols());
    stacked << a.entries.cast<double>(), b.entries.cast<double>();
    CHECK(numerical_rank(stacked) == a.entries.cols());

    // selector blocks agree with the event matrix
    for (int i = 0; i < n; ++i) {
      CHECK((variable_selector(vars, i).array() ==
             b.entries.middleCols(offsets[i], vars.cards[i]).array())
                .all());
    }
  }
}
