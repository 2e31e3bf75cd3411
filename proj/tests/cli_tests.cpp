#include <catch2/catch.hpp>

#include <filesystem>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sepbn/sepbn.hpp"
#include "support/cli_runner.hpp"

using namespace sepbn;
using testsupport::fixture;
using testsupport::read_file;
using testsupport::run_cli;

namespace {

const std::string kWork = [] {
  std::filesystem::create_directories(SEPBN_WORK_DIR);
  return std::string(SEPBN_WORK_DIR);
}();

std::string golden(const std::string& name) {
  return read_file(std::string(SEPBN_GOLDEN_DIR) + "/" + name);
}

}  // namespace

TEST_CASE("cli: test verdicts and exit codes") {
  SECTION("separable input exits 0") {
    const auto r = run_cli("test " + fixture("example1_cpt.json"), kWork);
    CHECK(r.exit_code == 0);
    CHECK(r.out == golden("test_example1.stdout"));
    const auto report = nlohmann::json::parse(r.out);
    CHECK(report.at("separable").get<bool>());
    CHECK(report.at("residual").get<double>() <= 1e-10);
    CHECK(report.at("event_matrix").at("rank").get<int>() == 4);
  }
  SECTION("non-separable input exits 1") {
    const auto r = run_cli("test " + fixture("xor_cpt.json"), kWork);
    CHECK(r.exit_code == 1);
    CHECK(r.out == golden("test_xor.stdout"));
    const auto report = nlohmann::json::parse(r.out);
    CHECK_FALSE(report.at("separable").get<bool>());
    CHECK(report.at("residual").get<double>() == Approx(1.41421356237).epsilon(1e-9));
  }
  SECTION("a row that is not a PMF exits 2 with diagnostics") {
    const std::string err = kWork + "/badrow.stderr";
    const auto r = run_cli("test " + fixture("badrow_cpt.json"), kWork, err);
    CHECK(r.exit_code == 2);
    CHECK(read_file(err).find("not a PMF") != std::string::npos);
  }
  SECTION("missing file exits 2") {
    const auto r = run_cli("test no_such_file.json", kWork);
    CHECK(r.exit_code == 2);
  }
  SECTION("missing subcommand exits 2") {
    const auto r = run_cli("", kWork);
    CHECK(r.exit_code == 2);
  }
}

TEST_CASE("cli: factor") {
  SECTION("factorizes the worked example and round-trips") {
    const auto r = run_cli("factor " + fixture("example1_cpt.json") + " -o factor_example1_fact.json",
                           kWork);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out == golden("factor_example1.stdout"));
    CHECK(read_file(kWork + "/factor_example1_fact.json") ==
          golden("factor_example1_fact.json"));

    // emitted file re-parses under its own schema
    const NamedFactorization emitted =
        read_factorization_json(load_json_file(kWork + "/factor_example1_fact.json"));
    CHECK(emitted.variable_names == std::vector<std::string>{"X", "Y"});

    // gamma entries lie in [0,1] and sum to 1
    CHECK(emitted.factorization.gammas.minCoeff() >= 0.0);
    CHECK(emitted.factorization.gammas.maxCoeff() <= 1.0);
    CHECK(emitted.factorization.gammas.sum() == Approx(1.0).margin(1e-9));

    // compose of the output reproduces the input within printed precision
    const NamedCpt original = read_cpt_json(load_json_file(fixture("example1_cpt.json")));
    const Cpt reproduced = compose(emitted.factorization);
    CHECK((reproduced.rows - original.cpt.rows).cwiseAbs().maxCoeff() < 1e-10);
  }
  SECTION("refuses non-separable input with exit 1") {
    const std::string err = kWork + "/factor_xor.stderr";
    const auto r = run_cli("factor " + fixture("xor_cpt.json") + " -o factor_xor_fact.json",
                           kWork, err);
    CHECK(r.exit_code == 1);
    CHECK(read_file(err).find("approx") != std::string::npos);
    CHECK_FALSE(std::filesystem::exists(kWork + "/factor_xor_fact.json"));
  }
  SECTION("single-variable table factors with gamma = [1]") {
    const std::string path = kWork + "/single_var_cpt.json";
    save_json_file(path, nlohmann::ordered_json::parse(R"({
      "variables": [{"name": "X", "cardinality": 3}],
      "target": {"name": "Z", "cardinality": 2},
      "rows": [[0.2, 0.8], [0.5, 0.5], [0.9, 0.1]]})"));
    const auto r = run_cli("factor single_var_cpt.json -o single_var_fact.json", kWork);
    REQUIRE(r.exit_code == 0);
    const auto report = nlohmann::json::parse(r.out);
    CHECK(report.at("gammas") == nlohmann::json::array({1.0}));
  }
}

TEST_CASE("cli: compose reproduces the published tables") {
  for (const std::string which : {"a", "b"}) {
    const std::string out_name = "compose_fact_" + which + "_cpt.json";
    const auto r = run_cli("compose " + fixture("example1_fact_" + which + ".json") +
                               " -o " + out_name,
                           kWork);
    REQUIRE(r.exit_code == 0);
    if (which == "a") {
      CHECK(read_file(kWork + "/" + out_name) == golden("compose_fact_a_cpt.json"));
    }
    // both factorizations print to the exact same table as the fixture
    const NamedCpt emitted = read_cpt_json(load_json_file(kWork + "/" + out_name));
    const NamedCpt expected = read_cpt_json(load_json_file(fixture("example1_cpt.json")));
    CHECK((emitted.cpt.rows - expected.cpt.rows).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("cli: compose with a degenerate weight yields a table that ignores Y") {
  const auto r = run_cli("compose " + fixture("degenerate_fact.json") + " -o degenerate_cpt.json",
                         kWork);
  REQUIRE(r.exit_code == 0);
  const NamedCpt emitted = read_cpt_json(load_json_file(kWork + "/degenerate_cpt.json"));
  for (int x = 1; x <= 2; ++x) {
    const Eigen::RowVector2d expected =
        x == 1 ? Eigen::RowVector2d(0.3, 0.7) : Eigen::RowVector2d(0.9, 0.1);
    for (int y = 1; y <= 3; ++y) {
      const Eigen::Index row = row_index({x, y}, emitted.cpt.vars);
      CHECK((emitted.cpt.rows.row(row) - expected).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("cli: factor then compose returns to the input at printed precision") {
  REQUIRE(run_cli("factor " + fixture("example1_cpt.json") + " -o rt_fact.json", kWork)
              .exit_code == 0);
  REQUIRE(run_cli("compose rt_fact.json -o rt_cpt.json", kWork).exit_code == 0);
  const NamedCpt back = read_cpt_json(load_json_file(kWork + "/rt_cpt.json"));
  const NamedCpt original = read_cpt_json(load_json_file(fixture("example1_cpt.json")));
  CHECK((back.cpt.rows - original.cpt.rows).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("cli: approx") {
  SECTION("separable input has negligible residual") {
    const auto r = run_cli("approx " + fixture("example1_cpt.json") + " -o approx_ex1.json",
                           kWork);
    REQUIRE(r.exit_code == 0);
    const auto report = nlohmann::json::parse(r.out);
    CHECK(report.at("projection_residual").get<double>() <= 1e-10);
    CHECK(report.at("repair_deviation").get<double>() <= 1e-10);
  }
  SECTION("parity table yields uniform tables and residual sqrt(2)") {
    const auto r = run_cli("approx " + fixture("xor_cpt.json") + " -o approx_xor_fact.json",
                           kWork);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out == golden("approx_xor.stdout"));
    CHECK(read_file(kWork + "/approx_xor_fact.json") == golden("approx_xor_fact.json"));
    const NamedFactorization emitted =
        read_factorization_json(load_json_file(kWork + "/approx_xor_fact.json"));
    for (const auto& t : emitted.factorization.tables) {
      CHECK((t.array() - 0.5).abs().maxCoeff() == 0.0);
    }
  }
  SECTION("mixture with a 0.1 parity component has residual 0.1*sqrt(2)") {
    const auto r = run_cli("approx " + fixture("mixed_cpt.json") + " -o approx_mixed_fact.json",
                           kWork);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out == golden("approx_mixed.stdout"));
    const auto report = nlohmann::json::parse(r.out);
    CHECK(report.at("projection_residual").get<double>() ==
          Approx(0.141421356237).epsilon(1e-9));
  }
}

TEST_CASE("cli: simulate marginal evolution") {
  SECTION("csv output matches the golden run") {
    const auto r = run_cli("simulate " + fixture("model2.json") + " --steps 3 --init " +
                               fixture("init_marginals.json"),
                           kWork);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out == golden("simulate_model2_marginals.csv"));
  }
  SECTION("identity influence evolves sites independently") {
    const auto r = run_cli("simulate " + fixture("model_identity.json") +
                               " --steps 3 --init " + fixture("init_marginals.json"),
                           kWork);
    REQUIRE(r.exit_code == 0);
    // check site 1 against powers of its local chain
    Eigen::MatrixXd a11(2, 2);
    a11 << .9, .1,
           .2, .8;
    Eigen::RowVector2d p(1.0, 0.0);
    std::istringstream lines(r.out);
    std::string line;
    std::getline(lines, line);  // header
    for (int k = 0; k <= 3; ++k) {
      for (int i = 0; i < 2; ++i) {
        for (int s = 0; s < 2; ++s) {
          REQUIRE(std::getline(lines, line));
          const auto last = line.rfind(',');
          const double prob = std::stod(line.substr(last + 1));
          if (i == 0) CHECK(prob == Approx(p(s)).margin(1e-9));
        }
      }
      p = p * a11;
    }
  }
  SECTION("state initial condition becomes point-mass marginals") {
    const auto r = run_cli("simulate " + fixture("model2.json") + " --steps 0 --init " +
                               fixture("init_state.json"),
                           kWork);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out == "step,site,status,probability\n0,1,1,1\n0,1,2,0\n0,2,1,0\n0,2,2,1\n");
  }
}

TEST_CASE("cli: simulate trajectories") {
  const std::string args = "simulate " + fixture("model2.json") + " --steps 5 --init " +
                           fixture("init_state.json") + " --sample --seed 7";
  SECTION("fixed seed reproduces the golden trajectory") {
    const auto first = run_cli(args, kWork);
    const auto second = run_cli(args, kWork);
    REQUIRE(first.exit_code == 0);
    CHECK(first.out == second.out);
    CHECK(first.out == golden("simulate_model2_sample.csv"));
  }
  SECTION("sampling without a seed exits 2") {
    const auto r = run_cli("simulate " + fixture("model2.json") + " --steps 5 --init " +
                               fixture("init_state.json") + " --sample",
                           kWork);
    CHECK(r.exit_code == 2);
  }
  SECTION("sampling combined with the oracle exits 2") {
    const auto r = run_cli(args + " --oracle", kWork);
    CHECK(r.exit_code == 2);
  }
}

TEST_CASE("cli: simulate with the exact-chain oracle") {
  const std::string err = kWork + "/oracle.stderr";
  const auto r = run_cli("simulate " + fixture("model2.json") + " --steps 5 --init " +
                             fixture("init_marginals.json") + " --oracle",
                         kWork, err);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out == golden("simulate_model2_oracle.csv"));
  const std::string diag = read_file(err);
  const auto pos = diag.find("oracle max deviation: ");
  REQUIRE(pos != std::string::npos);
  CHECK(std::stod(diag.substr(pos + 22)) <= 1e-10);
}

TEST_CASE("cli: inspect") {
  const auto r = run_cli("inspect --cards 2,3", kWork);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out == golden("inspect_2_3.stdout"));
  const auto report = nlohmann::json::parse(r.out);
  CHECK(report.at("event_matrix").at("rank").get<int>() == 4);
  CHECK(report.at("event_matrix").at("numerical_rank").get<int>() == 4);
  CHECK(report.at("null_space_basis") ==
        nlohmann::json::array({nlohmann::json::array({1, 1, -1, -1, -1})}));
}
