// Command-line front end: separability testing, factorization, least-squares
// approximation, composition, and influence-model simulation over JSON files.
//
// Exit codes: 0 success/affirmative verdict, 1 negative verdict,
// 2 input/validation error, 3 internal numerical error.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sepbn/sepbn.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNegative = 1;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

constexpr double kOracleAlarm = 1e-9;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

nlohmann::ordered_json gammas_json(const Eigen::VectorXd& gammas) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < gammas.size(); ++i) {
    arr.push_back(sepbn::round_to_printed(gammas(i)));
  }
  return arr;
}

nlohmann::ordered_json rank_diagnostics(const sepbn::VariableSet& vars) {
  const sepbn::EventMatrix b = sepbn::build_event_matrix(vars);
  nlohmann::ordered_json out;
  out["rows"] = b.entries.rows();
  out["columns"] = b.entries.cols();
  out["rank"] = sepbn::event_rank(vars);
  out["numerical_rank"] = sepbn::numerical_rank(b.entries.cast<double>());
  return out;
}

int cmd_test(const std::string& input, double tol) {
  const sepbn::NamedCpt named = sepbn::read_cpt_json(sepbn::load_json_file(input));
  const sepbn::SeparabilityVerdict verdict = sepbn::test_separable(named.cpt, tol);

  nlohmann::ordered_json out;
  out["separable"] = verdict.separable;
  out["residual"] = sepbn::round_to_printed(verdict.residual);
  out["tolerance"] = verdict.tol;
  out["frobenius_norm"] = sepbn::round_to_printed(named.cpt.rows.norm());
  out["event_matrix"] = rank_diagnostics(named.cpt.vars);
  std::cout << out.dump(2) << "\n";

  std::cerr << (verdict.separable ? "separable" : "not separable") << " (residual "
            << fmt(verdict.residual) << ", tolerance " << fmt(verdict.tol) << ")\n";
  return verdict.separable ? kExitOk : kExitNegative;
}

int cmd_factor(const std::string& input, const std::string& output, double tol) {
  const sepbn::NamedCpt named = sepbn::read_cpt_json(sepbn::load_json_file(input));
  sepbn::NamedFactorization result;
  result.variable_names = named.variable_names;
  result.target_name = named.target_name;
  try {
    result.factorization = sepbn::factorize(named.cpt, tol);
  } catch (const sepbn::NotSeparableError& e) {
    std::cerr << "not separable (residual " << fmt(e.residual())
              << "); use `sepbn approx` for a least-squares approximation\n";
    return kExitNegative;
  }
  sepbn::save_json_file(output, sepbn::write_factorization_json(result));

  nlohmann::ordered_json out;
  out["separable"] = true;
  out["gammas"] = gammas_json(result.factorization.gammas);
  out["output"] = output;
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

int cmd_compose(const std::string& input, const std::string& output) {
  const sepbn::NamedFactorization named =
      sepbn::read_factorization_json(sepbn::load_json_file(input));
  sepbn::NamedCpt result;
  result.variable_names = named.variable_names;
  result.target_name = named.target_name;
  result.cpt = sepbn::compose(named.factorization);
  sepbn::save_json_file(output, sepbn::write_cpt_json(result));

  nlohmann::ordered_json out;
  out["rows"] = result.cpt.rows.rows();
  out["columns"] = result.cpt.rows.cols();
  out["output"] = output;
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

int cmd_approx(const std::string& input, const std::string& output) {
  const sepbn::NamedCpt named = sepbn::read_cpt_json(sepbn::load_json_file(input));
  const auto [factorization, report] = sepbn::approximate_separable(named.cpt);
  sepbn::NamedFactorization result;
  result.variable_names = named.variable_names;
  result.target_name = named.target_name;
  result.factorization = factorization;
  sepbn::save_json_file(output, sepbn::write_factorization_json(result));

  nlohmann::ordered_json out;
  out["projection_residual"] = sepbn::round_to_printed(report.projection_residual);
  out["repair_deviation"] = sepbn::round_to_printed(report.repair_deviation);
  out["gammas"] = gammas_json(factorization.gammas);
  out["output"] = output;
  std::cout << out.dump(2) << "\n";

  std::cerr << "projection residual " << fmt(report.projection_residual)
            << ", post-clamp deviation " << fmt(report.repair_deviation) << "\n";
  return kExitOk;
}

int cmd_simulate(const std::string& model_path, const std::string& init_path, int steps,
                 bool sample, bool seed_set, std::uint64_t seed, bool oracle) {
  if (sample && !seed_set) {
    throw sepbn::ValidationError("--sample requires an explicit --seed");
  }
  if (sample && oracle) {
    throw sepbn::ValidationError("--oracle applies to marginal evolution, not --sample runs");
  }
  const sepbn::NamedInfluenceModel named =
      sepbn::read_influence_json(sepbn::load_json_file(model_path));
  const sepbn::InfluenceModel& model = named.model;
  const sepbn::InitialCondition init =
      sepbn::read_initial_json(sepbn::load_json_file(init_path), model);
  const int n = model.site_count();

  if (sample) {
    sepbn::Rng rng(seed);
    sepbn::NetworkState state;
    if (init.state.has_value()) {
      state = *init.state;
    } else {
      // one draw per site, in site order, before the trajectory starts
      for (int i = 0; i < n; ++i) {
        state.statuses.push_back(
            static_cast<int>(rng.categorical((*init.marginals)[i].probs())));
      }
    }
    std::cout << "step,site,status\n";
    for (int k = 0; k <= steps; ++k) {
      for (int i = 0; i < n; ++i) {
        std::cout << k << "," << i + 1 << "," << state.statuses[i] + 1 << "\n";
      }
      if (k < steps) state = sepbn::sample_step(model, state, rng);
    }
    return kExitOk;
  }

  std::vector<sepbn::Pmf> marginals;
  if (init.marginals.has_value()) {
    marginals = *init.marginals;
  } else {
    for (int i = 0; i < n; ++i) {
      marginals.push_back(
          sepbn::Pmf::point_mass(model.site_cards[i], init.state->statuses[i]));
    }
  }

  std::vector<std::vector<sepbn::Pmf>> oracle_marginals;
  if (oracle) {
    Eigen::VectorXd joint = marginals[0].probs();
    for (int i = 1; i < n; ++i) {
      Eigen::VectorXd widened(joint.size() * model.site_cards[i]);
      for (Eigen::Index a = 0; a < joint.size(); ++a) {
        widened.segment(a * model.site_cards[i], model.site_cards[i]) =
            joint(a) * marginals[i].probs();
      }
      joint = std::move(widened);
    }
    oracle_marginals =
        sepbn::exact_joint_oracle(model, sepbn::Pmf(joint, sepbn::kFileTol), steps);
  }

  std::cout << (oracle ? "step,site,status,probability,oracle_probability\n"
                       : "step,site,status,probability\n");
  double max_deviation = 0.0;
  for (int k = 0; k <= steps; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int s = 0; s < model.site_cards[i]; ++s) {
        std::cout << k << "," << i + 1 << "," << s + 1 << "," << fmt(marginals[i][s]);
        if (oracle) {
          const double reference = oracle_marginals[k][i][s];
          max_deviation = std::max(max_deviation, std::abs(marginals[i][s] - reference));
          std::cout << "," << fmt(reference);
        }
        std::cout << "\n";
      }
    }
    if (k < steps) marginals = sepbn::step_marginals(model, marginals);
  }

  if (oracle) {
    std::cerr << "oracle max deviation: " << fmt(max_deviation) << "\n";
    if (max_deviation > kOracleAlarm) {
      std::cerr << "marginal evolution disagrees with the exact joint chain\n";
      return kExitNumerical;
    }
  }
  return kExitOk;
}

int cmd_inspect(const std::vector<int>& cards, int target_card) {
  sepbn::VariableSet vars;
  vars.cards = cards;
  vars.target_card = target_card;
  const sepbn::EventMatrix b = sepbn::build_event_matrix(vars);
  const sepbn::BasisMatrix a = sepbn::build_basis_matrix(vars);

  nlohmann::ordered_json out;
  out["cards"] = vars.cards;
  out["joint_outcomes"] = vars.joint_size();
  out["event_matrix"] = {{"rows", b.entries.rows()},
                         {"columns", b.entries.cols()},
                         {"rank", sepbn::event_rank(vars)},
                         {"numerical_rank", sepbn::numerical_rank(b.entries.cast<double>())}};
  out["basis_matrix"] = {{"rows", a.entries.rows()},
                         {"columns", a.entries.cols()},
                         {"dropped_columns", a.dropped_columns}};
  nlohmann::ordered_json null_basis = nlohmann::ordered_json::array();
  for (const auto& v : sepbn::null_space_basis(vars)) {
    null_basis.push_back(std::vector<int>(v.data(), v.data() + v.size()));
  }
  out["null_space_basis"] = std::move(null_basis);
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"separable conditional probability tables and influence models"};
  app.require_subcommand(1);

  std::string input, output, init_path;
  double tol = sepbn::kSeparabilityTol;
  int steps = 0;
  bool sample = false, oracle = false;
  std::uint64_t seed = 0;
  std::vector<int> cards;
  int target_card = 2;

  CLI::App* test = app.add_subcommand("test", "decide whether a CPT is separable");
  test->add_option("input", input, "CPT JSON file")->required();
  test->add_option("--tol", tol, "relative residual tolerance")->capture_default_str();

  CLI::App* factor = app.add_subcommand("factor", "factorize a separable CPT");
  factor->add_option("input", input, "CPT JSON file")->required();
  factor->add_option("-o,--output", output, "factorization JSON file")->required();
  factor->add_option("--tol", tol, "relative residual tolerance")->capture_default_str();

  CLI::App* compose = app.add_subcommand("compose", "assemble a CPT from a factorization");
  compose->add_option("input", input, "factorization JSON file")->required();
  compose->add_option("-o,--output", output, "CPT JSON file")->required();

  CLI::App* approx =
      app.add_subcommand("approx", "least-squares separable approximation of a CPT");
  approx->add_option("input", input, "CPT JSON file")->required();
  approx->add_option("-o,--output", output, "factorization JSON file")->required();

  CLI::App* simulate = app.add_subcommand("simulate", "evolve an influence model");
  simulate->add_option("model", input, "influence model JSON file")->required();
  simulate->add_option("--steps", steps, "number of steps")
      ->required()
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--init", init_path, "initial condition JSON file")->required();
  simulate->add_flag("--sample", sample, "sample a trajectory instead of evolving marginals");
  CLI::Option* seed_opt = simulate->add_option("--seed", seed, "trajectory seed");
  simulate->add_flag("--oracle", oracle,
                     "also run the exact joint chain and report the deviation");

  CLI::App* inspect = app.add_subcommand("inspect", "event-matrix diagnostics for a card list");
  inspect->add_option("--cards", cards, "parent cardinalities, e.g. 2,3")
      ->required()
      ->delimiter(',');
  inspect->add_option("--target", target_card, "target cardinality")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*test) return cmd_test(input, tol);
    if (*factor) return cmd_factor(input, output, tol);
    if (*compose) return cmd_compose(input, output);
    if (*approx) return cmd_approx(input, output);
    if (*simulate) {
      return cmd_simulate(input, init_path, steps, sample, seed_opt->count() > 0, seed,
                          oracle);
    }
    if (*inspect) return cmd_inspect(cards, target_card);
  } catch (const sepbn::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const sepbn::NotSeparableError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNegative;
  } catch (const sepbn::NumericalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitInput;
}
