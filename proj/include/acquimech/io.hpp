#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "acquimech/analysis.hpp"
#include "acquimech/core.hpp"
#include "acquimech/experiments.hpp"

namespace acquimech::io {

using json = nlohmann::json;

/// Malformed or inconsistent input document.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LoadedInstance {
  Instance instance;
  std::size_t item_count = 1;
};

namespace detail {

inline const json& field(const json& doc, const char* key) {
  if (!doc.is_object()) throw ParseError("expected a JSON object");
  auto it = doc.find(key);
  if (it == doc.end()) throw ParseError(std::string("missing key \"") + key + "\"");
  return *it;
}

inline double number(const json& j, const std::string& what) {
  if (!j.is_number()) throw ParseError(what + " must be a number");
  return j.get<double>();
}

inline std::vector<double> numbers(const json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const json& x : j) out.push_back(number(x, what + " entry"));
  return out;
}

inline std::vector<std::vector<double>> rows(const json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + " must be an array of arrays");
  std::vector<std::vector<double>> out;
  for (const json& r : j) out.push_back(numbers(r, what + " row"));
  return out;
}

inline std::size_t count(const json& j, const std::string& what) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) {
    throw ParseError(what + " must be a nonnegative integer");
  }
  return j.get<std::size_t>();
}

template <class F>
auto rethrow_as_parse_error(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  } catch (const std::out_of_range& e) {
    throw ParseError(e.what());
  }
}

}  // namespace detail

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Instances: {"V": [...], "S": [...], "d": [...], "R": [[...]], "t": x, "k": 1}
// ---------------------------------------------------------------------------

inline LoadedInstance instance_from_json(const json& doc) {
  std::vector<double> values = detail::numbers(detail::field(doc, "V"), "V");
  std::vector<double> scores = detail::numbers(detail::field(doc, "S"), "S");
  std::vector<double> prior = detail::numbers(detail::field(doc, "d"), "d");
  std::vector<std::vector<double>> r = detail::rows(detail::field(doc, "R"), "R");
  const double bar = detail::number(detail::field(doc, "t"), "t");
  std::size_t k = 1;
  if (doc.contains("k")) {
    k = detail::count(doc["k"], "k");
    if (k < 1) throw ParseError("k must be at least 1");
  }
  Instance instance = detail::rethrow_as_parse_error([&] {
    return validate_instance(std::move(values), std::move(scores), std::move(prior), r, bar);
  });
  return LoadedInstance{std::move(instance), k};
}

inline json to_json(const Instance& instance, std::size_t item_count = 1) {
  json doc{{"V", instance.grid().values},
           {"S", instance.grid().scores},
           {"d", instance.prior()},
           {"R", instance.score_model().to_rows()},
           {"t", instance.bar()}};
  if (item_count != 1) doc["k"] = item_count;
  return doc;
}

// ---------------------------------------------------------------------------
// Mechanisms: {"label": ..., "X": [[...]]} or a bare array of rows.
// Multi-item policies: {"label": ..., "k": k, "tensors": [[...], ...]}.
// ---------------------------------------------------------------------------

inline json to_json(const Mechanism& mechanism) {
  return json{{"label", mechanism.label()}, {"X", mechanism.matrix().to_rows()}};
}

inline json to_json(const MultiPolicy& policy) {
  return json{{"label", policy.label()},
              {"k", policy.k()},
              {"n", policy.n()},
              {"m", policy.m()},
              {"tensors", policy.tensors()}};
}

inline bool is_multi_policy(const json& doc) { return doc.is_object() && doc.contains("tensors"); }

inline Mechanism mechanism_from_json(const json& doc) {
  const json& matrix = doc.is_array() ? doc : detail::field(doc, "X");
  std::string label;
  if (doc.is_object() && doc.contains("label") && doc["label"].is_string()) {
    label = doc["label"].get<std::string>();
  }
  return detail::rethrow_as_parse_error([&] {
    return Mechanism(Matrix::from_rows(detail::rows(matrix, "X")), label);
  });
}

/// Reads a policy for an instance with `n` qualities and `m` scores.
inline MultiPolicy policy_from_json(const json& doc, std::size_t n, std::size_t m) {
  const std::size_t k = detail::count(detail::field(doc, "k"), "k");
  if (k < 1) throw ParseError("k must be at least 1");
  if ((doc.contains("n") && detail::count(doc["n"], "n") != n) ||
      (doc.contains("m") && detail::count(doc["m"], "m") != m)) {
    throw ParseError("policy grid sizes do not match the instance");
  }
  const json& tensors = detail::field(doc, "tensors");
  if (!tensors.is_array()) throw ParseError("tensors must be an array");
  std::vector<std::vector<double>> data;
  for (const json& t : tensors) data.push_back(detail::numbers(t, "tensor"));
  std::string label;
  if (doc.contains("label") && doc["label"].is_string()) label = doc["label"].get<std::string>();
  return detail::rethrow_as_parse_error(
      [&] { return MultiPolicy(k, n, m, std::move(data), std::move(label)); });
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json to_json(const VerificationReport& report) {
  json violations = json::array();
  for (const Violation& v : report.violations) {
    violations.push_back(
        {{"description", v.description}, {"indices", v.indices}, {"magnitude", v.magnitude}});
  }
  return json{{"passed", report.passed},
              {"tolerance", report.tolerance},
              {"violations", std::move(violations)}};
}

inline json to_json(const AcquiringRate& rate) {
  return json{{"per_quality", rate.per_quality}, {"overall", rate.overall}};
}

// ---------------------------------------------------------------------------
// Sweep configuration
//
// Keys (all optional except "mechanisms" and a variance grid):
//   family, discretization, prior_mean, prior_sd, t, k, seed, size_budget,
//   V / S or levels, and either "variances": [...] or
//   "variance_step" with "variance_max".
// ---------------------------------------------------------------------------

inline std::vector<double> variance_steps(double step, double max) {
  if (!(step > 0.0) || !(max >= 0.0)) throw ParseError("variance_step must be > 0 and variance_max >= 0");
  const auto count = static_cast<std::size_t>(std::floor(max / step + 1e-9));
  std::vector<double> grid;
  for (std::size_t i = 0; i <= count; ++i) grid.push_back(static_cast<double>(i) * step);
  return grid;
}

inline SweepConfig sweep_config_from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("sweep config must be a JSON object");
  Family family = Family::normal;
  if (doc.contains("family")) {
    if (!doc["family"].is_string()) throw ParseError("family must be a string");
    family = detail::rethrow_as_parse_error(
        [&] { return parse_family(doc["family"].get<std::string>()); });
  }

  std::vector<double> variances;
  if (doc.contains("variances")) {
    variances = detail::numbers(doc["variances"], "variances");
  } else if (doc.contains("variance_step")) {
    variances = variance_steps(detail::number(doc["variance_step"], "variance_step"),
                               detail::number(detail::field(doc, "variance_max"), "variance_max"));
  } else {
    throw ParseError("sweep config needs \"variances\" or \"variance_step\"");
  }

  SweepConfig config = figure_config(family, std::move(variances));
  if (doc.contains("discretization")) {
    if (!doc["discretization"].is_string()) throw ParseError("discretization must be a string");
    config.discretization = detail::rethrow_as_parse_error(
        [&] { return parse_discretization(doc["discretization"].get<std::string>()); });
  }
  if (doc.contains("prior_mean")) config.prior_mean = detail::number(doc["prior_mean"], "prior_mean");
  if (doc.contains("prior_sd")) config.prior_sd = detail::number(doc["prior_sd"], "prior_sd");
  if (doc.contains("t")) config.bar = detail::number(doc["t"], "t");
  if (doc.contains("k")) config.item_count = detail::count(doc["k"], "k");
  if (doc.contains("seed")) config.seed = detail::count(doc["seed"], "seed");
  if (doc.contains("size_budget")) config.size_budget = detail::count(doc["size_budget"], "size_budget");
  if (doc.contains("levels")) {
    const std::size_t levels = detail::count(doc["levels"], "levels");
    config.grid = detail::rethrow_as_parse_error([&] {
      return QualityGrid{unit_grid(levels), unit_grid(levels)};
    });
  }
  if (doc.contains("V")) config.grid.values = detail::numbers(doc["V"], "V");
  if (doc.contains("S")) config.grid.scores = detail::numbers(doc["S"], "S");

  const json& mechanisms = detail::field(doc, "mechanisms");
  if (!mechanisms.is_array()) throw ParseError("mechanisms must be an array of names");
  config.mechanisms.clear();
  for (const json& name : mechanisms) {
    if (!name.is_string()) throw ParseError("mechanism names must be strings");
    config.mechanisms.push_back(detail::rethrow_as_parse_error(
        [&] { return parse_sweep_mechanism(name.get<std::string>()); }));
  }
  detail::rethrow_as_parse_error([&] {
    validate_sweep_config(config);
    return 0;
  });
  return config;
}

}  // namespace acquimech::io
