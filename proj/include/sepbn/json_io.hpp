#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sepbn/cpt.hpp"
#include "sepbn/errors.hpp"
#include "sepbn/influence.hpp"
#include "sepbn/pmf.hpp"
#include "sepbn/separability.hpp"

namespace sepbn {

/// Round through the 12-significant-digit decimal representation used for
/// all emitted numbers, so files are short and diff-stable.
inline double round_to_printed(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return std::strtod(buf, nullptr);
}

struct NamedCpt {
  std::vector<std::string> variable_names;
  std::string target_name;
  Cpt cpt;
};

struct NamedFactorization {
  std::vector<std::string> variable_names;
  std::string target_name;
  SeparableFactorization factorization;
};

struct NamedInfluenceModel {
  std::vector<std::string> site_names;
  InfluenceModel model;
};

/// Initial condition for simulation: either per-site marginals or a concrete
/// network state (exactly one is present).
struct InitialCondition {
  std::optional<std::vector<Pmf>> marginals;
  std::optional<NetworkState> state;
};

namespace detail {

inline const nlohmann::json& expect_field(const nlohmann::json& j, const std::string& key,
                                          const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(where + ": missing field \"" + key + "\"");
  }
  return j.at(key);
}

inline int expect_int(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number_integer()) {
    throw ValidationError(where + ": expected an integer");
  }
  return j.get<int>();
}

inline double expect_number(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number()) {
    throw ValidationError(where + ": expected a number");
  }
  return j.get<double>();
}

inline std::string expect_string(const nlohmann::json& j, const std::string& where) {
  if (!j.is_string()) {
    throw ValidationError(where + ": expected a string");
  }
  return j.get<std::string>();
}

inline const nlohmann::json& expect_array(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array()) {
    throw ValidationError(where + ": expected an array");
  }
  return j;
}

inline Eigen::MatrixXd read_matrix(const nlohmann::json& j, Eigen::Index rows,
                                   Eigen::Index cols, const std::string& where) {
  expect_array(j, where);
  if (static_cast<Eigen::Index>(j.size()) != rows) {
    throw ValidationError(where + ": expected " + std::to_string(rows) + " rows, found " +
                          std::to_string(j.size()));
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j.at(r);
    const std::string row_where = where + "[" + std::to_string(r) + "]";
    expect_array(row, row_where);
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw ValidationError(row_where + ": expected " + std::to_string(cols) +
                            " entries, found " + std::to_string(row.size()));
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = expect_number(row.at(c), row_where + "[" + std::to_string(c) + "]");
    }
  }
  return m;
}

inline nlohmann::ordered_json write_matrix(const Eigen::MatrixXd& m) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row.push_back(round_to_printed(m(r, c)));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void read_variable_header(const nlohmann::json& j, std::vector<std::string>& names,
                                 VariableSet& vars) {
  const auto& variables = expect_array(expect_field(j, "variables", "input"), "variables");
  if (variables.empty()) {
    throw ValidationError("variables: must list at least one variable");
  }
  for (std::size_t i = 0; i < variables.size(); ++i) {
    const std::string where = "variables[" + std::to_string(i) + "]";
    names.push_back(expect_string(expect_field(variables.at(i), "name", where), where + ".name"));
    vars.cards.push_back(
        expect_int(expect_field(variables.at(i), "cardinality", where), where + ".cardinality"));
  }
  const auto& target = expect_field(j, "target", "input");
  vars.target_card = expect_int(expect_field(target, "cardinality", "target"), "target.cardinality");
}

inline nlohmann::ordered_json write_variable_header(const std::vector<std::string>& names,
                                                    const std::string& target_name,
                                                    const VariableSet& vars) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json variables = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < names.size(); ++i) {
    variables.push_back({{"name", names[i]}, {"cardinality", vars.cards[i]}});
  }
  j["variables"] = std::move(variables);
  j["target"] = {{"name", target_name}, {"cardinality", vars.target_card}};
  return j;
}

}  // namespace detail

inline NamedCpt read_cpt_json(const nlohmann::json& j, const Limits& limits = {}) {
  NamedCpt named;
  detail::read_variable_header(j, named.variable_names, named.cpt.vars);
  named.target_name = detail::expect_string(
      detail::expect_field(j.at("target"), "name", "target"), "target.name");
  ensure_valid(named.cpt.vars, limits);
  named.cpt.rows = detail::read_matrix(
      detail::expect_field(j, "rows", "input"),
      static_cast<Eigen::Index>(named.cpt.vars.joint_size()), named.cpt.vars.target_card, "rows");
  const CptValidation report = validate_cpt(named.cpt, kFileTol);
  if (!report.ok) {
    throw ValidationError("rows[" + std::to_string(report.max_row_sum_deviation >
                                                           -report.most_negative_entry
                                                       ? report.worst_row
                                                       : report.negative_row) +
                          "]: not a PMF (row-sum deviation " +
                          std::to_string(report.max_row_sum_deviation) +
                          ", most negative entry " +
                          std::to_string(report.most_negative_entry) + ")");
  }
  return named;
}

inline nlohmann::ordered_json write_cpt_json(const NamedCpt& named) {
  nlohmann::ordered_json j =
      detail::write_variable_header(named.variable_names, named.target_name, named.cpt.vars);
  j["rows"] = detail::write_matrix(named.cpt.rows);
  return j;
}

inline NamedFactorization read_factorization_json(const nlohmann::json& j,
                                                  const Limits& limits = {}) {
  NamedFactorization named;
  detail::read_variable_header(j, named.variable_names, named.factorization.vars);
  named.target_name = detail::expect_string(
      detail::expect_field(j.at("target"), "name", "target"), "target.name");
  ensure_valid(named.factorization.vars, limits);
  const VariableSet& vars = named.factorization.vars;

  const auto& gammas = detail::expect_array(detail::expect_field(j, "gammas", "input"), "gammas");
  if (static_cast<int>(gammas.size()) != vars.var_count()) {
    throw ValidationError("gammas: expected " + std::to_string(vars.var_count()) +
                          " entries, found " + std::to_string(gammas.size()));
  }
  named.factorization.gammas.resize(vars.var_count());
  for (int i = 0; i < vars.var_count(); ++i) {
    named.factorization.gammas(i) =
        detail::expect_number(gammas.at(i), "gammas[" + std::to_string(i) + "]");
  }

  const auto& tables = detail::expect_array(detail::expect_field(j, "tables", "input"), "tables");
  if (static_cast<int>(tables.size()) != vars.var_count()) {
    throw ValidationError("tables: expected " + std::to_string(vars.var_count()) +
                          " tables, found " + std::to_string(tables.size()));
  }
  for (int i = 0; i < vars.var_count(); ++i) {
    named.factorization.tables.push_back(detail::read_matrix(
        tables.at(i), vars.cards[i], vars.target_card, "tables[" + std::to_string(i) + "]"));
  }
  ensure_factorization(named.factorization, kFileTol, limits);
  return named;
}

inline nlohmann::ordered_json write_factorization_json(const NamedFactorization& named) {
  nlohmann::ordered_json j = detail::write_variable_header(named.variable_names,
                                                           named.target_name,
                                                           named.factorization.vars);
  nlohmann::ordered_json gammas = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < named.factorization.gammas.size(); ++i) {
    gammas.push_back(round_to_printed(named.factorization.gammas(i)));
  }
  j["gammas"] = std::move(gammas);
  nlohmann::ordered_json tables = nlohmann::ordered_json::array();
  for (const auto& t : named.factorization.tables) {
    tables.push_back(detail::write_matrix(t));
  }
  j["tables"] = std::move(tables);
  return j;
}

inline NamedInfluenceModel read_influence_json(const nlohmann::json& j) {
  NamedInfluenceModel named;
  const auto& sites = detail::expect_array(detail::expect_field(j, "sites", "input"), "sites");
  if (sites.empty()) {
    throw ValidationError("sites: must list at least one site");
  }
  const int n = static_cast<int>(sites.size());
  for (int i = 0; i < n; ++i) {
    const std::string where = "sites[" + std::to_string(i) + "]";
    named.site_names.push_back(
        detail::expect_string(detail::expect_field(sites.at(i), "name", where), where + ".name"));
    named.model.site_cards.push_back(detail::expect_int(
        detail::expect_field(sites.at(i), "cardinality", where), where + ".cardinality"));
  }
  named.model.influence = detail::read_matrix(detail::expect_field(j, "D", "input"), n, n, "D");
  named.model.local_cpts.assign(static_cast<std::size_t>(n) * n, std::nullopt);

  const auto& tables = detail::expect_array(detail::expect_field(j, "A", "input"), "A");
  for (std::size_t k = 0; k < tables.size(); ++k) {
    const std::string where = "A[" + std::to_string(k) + "]";
    const int from = detail::expect_int(detail::expect_field(tables.at(k), "from", where),
                                        where + ".from");
    const int to = detail::expect_int(detail::expect_field(tables.at(k), "to", where),
                                      where + ".to");
    if (from < 1 || from > n || to < 1 || to > n) {
      throw ValidationError(where + ": site indices must lie in [1, " + std::to_string(n) + "]");
    }
    if (named.model.local(to - 1, from - 1).has_value()) {
      throw ValidationError(where + ": duplicate table for pair (from " + std::to_string(from) +
                            ", to " + std::to_string(to) + ")");
    }
    named.model.local(to - 1, from - 1) = detail::read_matrix(
        detail::expect_field(tables.at(k), "rows", where), named.model.site_cards[from - 1],
        named.model.site_cards[to - 1], where + ".rows");
  }
  ensure_model(named.model, kFileTol);
  return named;
}

inline nlohmann::ordered_json write_influence_json(const NamedInfluenceModel& named) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json sites = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < named.site_names.size(); ++i) {
    sites.push_back({{"name", named.site_names[i]}, {"cardinality", named.model.site_cards[i]}});
  }
  j["sites"] = std::move(sites);
  j["D"] = detail::write_matrix(named.model.influence);
  nlohmann::ordered_json tables = nlohmann::ordered_json::array();
  const int n = named.model.site_count();
  for (int i = 0; i < n; ++i) {
    for (int jj = 0; jj < n; ++jj) {
      if (!named.model.local(i, jj).has_value()) continue;
      nlohmann::ordered_json entry;
      entry["from"] = jj + 1;
      entry["to"] = i + 1;
      entry["rows"] = detail::write_matrix(*named.model.local(i, jj));
      tables.push_back(std::move(entry));
    }
  }
  j["A"] = std::move(tables);
  return j;
}

inline InitialCondition read_initial_json(const nlohmann::json& j, const InfluenceModel& model) {
  InitialCondition init;
  const bool has_marginals = j.is_object() && j.contains("marginals");
  const bool has_state = j.is_object() && j.contains("state");
  if (has_marginals == has_state) {
    throw ValidationError("initial condition must contain exactly one of \"marginals\" or \"state\"");
  }
  const int n = model.site_count();
  if (has_marginals) {
    const auto& arr = detail::expect_array(j.at("marginals"), "marginals");
    if (static_cast<int>(arr.size()) != n) {
      throw ValidationError("marginals: expected " + std::to_string(n) + " sites, found " +
                            std::to_string(arr.size()));
    }
    std::vector<Pmf> marginals;
    for (int i = 0; i < n; ++i) {
      const std::string where = "marginals[" + std::to_string(i) + "]";
      const auto& row = detail::expect_array(arr.at(i), where);
      if (static_cast<int>(row.size()) != model.site_cards[i]) {
        throw ValidationError(where + ": expected " + std::to_string(model.site_cards[i]) +
                              " entries, found " + std::to_string(row.size()));
      }
      Eigen::VectorXd p(model.site_cards[i]);
      for (int k = 0; k < model.site_cards[i]; ++k) {
        p(k) = detail::expect_number(row.at(k), where + "[" + std::to_string(k) + "]");
      }
      try {
        marginals.emplace_back(std::move(p), kFileTol);
      } catch (const ValidationError& e) {
        throw ValidationError(where + ": " + e.what());
      }
    }
    init.marginals = std::move(marginals);
  } else {
    const auto& arr = detail::expect_array(j.at("state"), "state");
    if (static_cast<int>(arr.size()) != n) {
      throw ValidationError("state: expected " + std::to_string(n) + " sites, found " +
                            std::to_string(arr.size()));
    }
    NetworkState state;
    for (int i = 0; i < n; ++i) {
      const std::string where = "state[" + std::to_string(i) + "]";
      const int status = detail::expect_int(arr.at(i), where);
      if (status < 1 || status > model.site_cards[i]) {
        throw ValidationError(where + ": status " + std::to_string(status) +
                              " out of range [1, " + std::to_string(model.site_cards[i]) + "]");
      }
      state.statuses.push_back(status - 1);
    }
    init.state = std::move(state);
  }
  return init;
}

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open file: " + path);
  }
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

inline void save_json_file(const std::string& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path);
  if (!out) {
    throw ValidationError("cannot write file: " + path);
  }
  out << j.dump(2) << "\n";
}

}  // namespace sepbn
