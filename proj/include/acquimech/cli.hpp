#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "acquimech/analysis.hpp"
#include "acquimech/experiments.hpp"
#include "acquimech/io.hpp"
#include "acquimech/multi_item.hpp"
#include "acquimech/reproduction.hpp"
#include "acquimech/single_item.hpp"

namespace acquimech::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitViolation = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitBudget = 3;

inline constexpr const char* kBudgetVariable = "ACQUIMECH_SIZE_BUDGET";

inline const std::vector<std::string>& solver_names() {
  static const std::vector<std::string> names{"som",    "tmm",    "om1",   "omk",
                                              "um-tmm", "um-om1", "umopt", "rm"};
  return names;
}

/// Budget from the environment, or the library default.
inline std::size_t size_budget() {
  const char* raw = std::getenv(kBudgetVariable);
  if (raw == nullptr || *raw == '\0') return kDefaultSizeBudget;
  std::size_t used = 0;
  unsigned long long value = 0;
  try {
    value = std::stoull(raw, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || raw[used] != '\0') {
    throw io::ParseError(std::string(kBudgetVariable) + " must be a nonnegative integer");
  }
  return static_cast<std::size_t>(value);
}

namespace detail {

using io::json;

inline json threshold_json(ScoreThreshold b) {
  return b.is_never() ? json("never") : json(b.index());
}

inline json single_summary(const Instance& instance, const Mechanism& mechanism) {
  return json{{"reward", expected_reward(instance, mechanism)},
              {"omniscient_reward", omniscient_reward(instance)},
              {"menu_size", menu_size(mechanism)},
              {"ic", check_ic(instance, mechanism).passed},
              {"monotone", check_monotone(mechanism).passed},
              {"acquiring_rate", io::to_json(acquiring_rate(instance, mechanism))}};
}

inline json single_output(const Instance& instance, const Mechanism& mechanism) {
  json doc = io::to_json(mechanism);
  doc["summary"] = single_summary(instance, mechanism);
  return doc;
}

inline json multi_output(const MultiInstance& instance, const MultiPolicy& policy) {
  json doc = io::to_json(policy);
  const double reward = multi_expected_reward(instance, policy);
  doc["summary"] = json{{"reward", reward},
                        {"per_item_reward", reward / static_cast<double>(instance.k())},
                        {"omniscient_reward", multi_omniscient_reward(instance)},
                        {"ic", multi_check_ic(instance, policy).passed},
                        {"monotone", multi_check_monotone(instance, policy).passed},
                        {"acquiring_rate", io::to_json(multi_acquiring_rate(instance, policy))}};
  return doc;
}

inline json rank_output(const RankPolicy& policy) {
  json accept = json::object();
  json aggregate = json::object();
  for (RankClass rank : kRankClasses) {
    accept[to_string(rank)] = {policy.accepts(rank, 0).to_rows(), policy.accepts(rank, 1).to_rows()};
    aggregate[to_string(rank)] = policy.aggregated(rank).to_rows();
  }
  json violations = json::array();
  for (const RankViolation& v : rm_ic_audit(policy)) {
    violations.push_back({{"v1", v.v1},
                          {"v2", v.v2},
                          {"truthful", to_string(v.truthful)},
                          {"better", to_string(v.better)},
                          {"gain", v.gain}});
  }
  const bool ic = violations.empty();
  return json{{"label", "RM"},
              {"accept", std::move(accept)},
              {"aggregate", std::move(aggregate)},
              {"violations", std::move(violations)},
              {"summary", {{"ic", ic}}}};
}

inline json solve(const io::LoadedInstance& loaded, const std::string& name, std::size_t budget) {
  const Instance& instance = loaded.instance;
  const MultiInstance multi(instance, loaded.item_count);
  if (name == "som") return single_output(instance, solve_som(instance));
  if (name == "om1") return single_output(instance, solve_om1(instance));
  if (name == "tmm") {
    const TmmOptimum best = tmm_optimal(instance);
    json doc = single_output(instance, best.mechanism);
    doc["tmm"] = {{"b1", threshold_json(best.params.b1)},
                  {"b2", threshold_json(best.params.b2)},
                  {"alpha", best.params.alpha},
                  {"v1_set", best.params.v1_set}};
    return doc;
  }
  if (name == "omk") return multi_output(multi, solve_omk(multi, budget));
  if (name == "um-tmm" || name == "um-om1") {
    const Mechanism component =
        name == "um-tmm" ? tmm_optimal(instance).mechanism : solve_om1(instance);
    MultiPolicy policy = union_policy(multi, replicate(component, multi.k()), budget);
    policy.set_label(name == "um-tmm" ? "UM_TMM" : "UM_OM1");
    return multi_output(multi, policy);
  }
  if (name == "umopt") {
    const UmoptResult result = solve_umopt(multi, budget);
    json doc = multi_output(multi, result.policy);
    json components = json::array();
    for (const Mechanism& y : result.inputs.components) components.push_back(y.matrix().to_rows());
    doc["components"] = std::move(components);
    doc["lp_objective"] = result.lp_objective;
    return doc;
  }
  if (name == "rm") {
    if (multi.k() != 2) throw io::ParseError("rm requires an instance with k = 2");
    return rank_output(ranking_mechanism(multi));
  }
  throw io::ParseError("unknown mechanism '" + name + "'");
}

// Loads a mechanism file against an instance. Multi-item documents must
// agree with the instance's k when the instance sets one.
struct LoadedMechanism {
  std::optional<Mechanism> single;
  std::optional<MultiPolicy> multi;
};

inline LoadedMechanism load_mechanism(const io::LoadedInstance& loaded, const json& doc) {
  LoadedMechanism out;
  const Instance& instance = loaded.instance;
  if (io::is_multi_policy(doc)) {
    out.multi = io::policy_from_json(doc, instance.n(), instance.m());
    if (loaded.item_count != 1 && loaded.item_count != out.multi->k()) {
      throw io::ParseError("policy item count does not match the instance");
    }
  } else {
    out.single = io::mechanism_from_json(doc);
    if (out.single->rows() != instance.n() || out.single->cols() != instance.m()) {
      throw io::ParseError("matrix must be " + std::to_string(instance.n()) + "x" +
                           std::to_string(instance.m()));
    }
  }
  return out;
}

inline void write_json(std::ostream& out, const json& doc) { out << doc.dump(2) << '\n'; }

inline std::string describe(const ReproductionCheck& c) {
  std::ostringstream line;
  line << std::left << std::setw(18) << c.instance << ' ' << std::setw(44) << c.quantity
       << " expected " << std::setw(11) << c.expected << " actual " << std::setw(13) << c.actual
       << (c.kind == ReproductionCheck::Kind::near ? " +/- " : " <= +") << c.tolerance << "  "
       << (c.passed() ? "pass" : "FAIL");
  return line.str();
}

}  // namespace detail

/// Runs one CLI invocation. stdout carries only JSON or CSV; diagnostics go
/// to `err`. Returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthesize and verify truthful item-acquiring mechanisms"};
  app.require_subcommand(1);

  std::string instance_path, mechanism_name, out_path, matrix_path, config_path;
  std::string reproduction_name;
  std::uint64_t seed = 0;
  bool consistent = false;
  std::size_t min_levels = 2, max_levels = 5, items = 1;

  auto* solve = app.add_subcommand("solve", "Build a mechanism for an instance");
  solve->add_option("--instance", instance_path, "Instance JSON")->required();
  solve->add_option("--mechanism", mechanism_name, "Mechanism name")
      ->required()
      ->check(CLI::IsMember(solver_names()));
  solve->add_option("--out", out_path, "Output file (default stdout)");

  auto* verify = app.add_subcommand("verify", "Check IC and monotonicity of a mechanism");
  verify->add_option("--instance", instance_path, "Instance JSON")->required();
  verify->add_option("--matrix", matrix_path, "Mechanism or policy JSON")->required();

  auto* rate = app.add_subcommand("rate", "Acquiring rates of a mechanism");
  rate->add_option("--instance", instance_path, "Instance JSON")->required();
  rate->add_option("--matrix", matrix_path, "Mechanism or policy JSON")->required();

  auto* paper = app.add_subcommand("paper", "Recompute reference values on registered instances");
  paper->add_option("name", reproduction_name, "Registered name or 'all'")->required();

  auto* sweep = app.add_subcommand("sweep", "Run a noise-variance sweep and write CSV");
  sweep->add_option("--config", config_path, "Sweep config JSON")->required();
  sweep->add_option("--out", out_path, "CSV file (default stdout)");

  auto* gen = app.add_subcommand("gen", "Print a random instance");
  gen->add_option("--seed", seed, "Generator seed")->required();
  gen->add_flag("--consistent", consistent, "Draw until the instance is consistent");
  gen->add_option("--min-levels", min_levels, "Smallest grid size")->check(CLI::Range(2, 64));
  gen->add_option("--max-levels", max_levels, "Largest grid size")->check(CLI::Range(2, 64));
  gen->add_option("--k", items, "Item count recorded in the instance")->check(CLI::Range(1, 16));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  using io::json;
  try {
    const std::size_t budget = size_budget();

    if (*solve) {
      const io::LoadedInstance loaded = io::instance_from_json(io::read_json_file(instance_path));
      const json doc = detail::solve(loaded, mechanism_name, budget);
      if (out_path.empty() || out_path == "-") {
        detail::write_json(out, doc);
      } else {
        std::ofstream file(out_path);
        if (!file) throw io::ParseError("cannot write " + out_path);
        detail::write_json(file, doc);
      }
      return kExitOk;
    }

    if (*verify || *rate) {
      const io::LoadedInstance loaded = io::instance_from_json(io::read_json_file(instance_path));
      const detail::LoadedMechanism mech =
          detail::load_mechanism(loaded, io::read_json_file(matrix_path));
      if (*rate) {
        json doc;
        if (mech.single) {
          doc = io::to_json(acquiring_rate(loaded.instance, *mech.single));
          doc["reward"] = expected_reward(loaded.instance, *mech.single);
        } else {
          const MultiInstance multi(loaded.instance, mech.multi->k());
          doc = io::to_json(multi_acquiring_rate(multi, *mech.multi));
          doc["reward"] = multi_expected_reward(multi, *mech.multi);
        }
        detail::write_json(out, doc);
        return kExitOk;
      }
      VerificationReport ic, monotone;
      if (mech.single) {
        ic = check_ic(loaded.instance, *mech.single);
        monotone = check_monotone(*mech.single);
      } else {
        const MultiInstance multi(loaded.instance, mech.multi->k());
        ic = multi_check_ic(multi, *mech.multi);
        monotone = multi_check_monotone(multi, *mech.multi);
      }
      const bool passed = ic.passed && monotone.passed;
      detail::write_json(out, json{{"ic", io::to_json(ic)},
                                   {"monotone", io::to_json(monotone)},
                                   {"passed", passed}});
      return passed ? kExitOk : kExitViolation;
    }

    if (*paper) {
      std::vector<std::string> names;
      if (reproduction_name == "all") {
        names = reproduction_names();
      } else {
        names.push_back(canonical_reproduction_name(reproduction_name));
      }
      json checks = json::array();
      bool all_passed = true;
      for (const std::string& name : names) {
        for (const ReproductionCheck& c : run_reproduction(name, budget)) {
          err << detail::describe(c) << '\n';
          all_passed = all_passed && c.passed();
          checks.push_back({{"instance", c.instance},
                            {"quantity", c.quantity},
                            {"expected", c.expected},
                            {"actual", c.actual},
                            {"tolerance", c.tolerance},
                            {"comparison",
                             c.kind == ReproductionCheck::Kind::near ? "near" : "at_most"},
                            {"passed", c.passed()}});
        }
      }
      detail::write_json(out, json{{"checks", std::move(checks)}, {"passed", all_passed}});
      return all_passed ? kExitOk : kExitViolation;
    }

    if (*sweep) {
      SweepConfig config = io::sweep_config_from_json(io::read_json_file(config_path));
      if (std::getenv(kBudgetVariable) != nullptr) config.size_budget = budget;
      const std::vector<SweepRecord> records = run_sweep(config);
      if (out_path.empty() || out_path == "-") {
        write_sweep_csv(out, records, config.grid.n());
      } else {
        std::ofstream file(out_path);
        if (!file) throw io::ParseError("cannot write " + out_path);
        write_sweep_csv(file, records, config.grid.n());
      }
      err << records.size() << " records\n";
      return kExitOk;
    }

    if (*gen) {
      if (min_levels > max_levels) throw io::ParseError("--min-levels exceeds --max-levels");
      std::mt19937_64 rng(seed);
      RandomInstanceOptions options;
      options.min_levels = min_levels;
      options.max_levels = max_levels;
      const Instance instance =
          consistent ? random_consistent_instance(rng, options) : random_instance(rng, options);
      detail::write_json(out, io::to_json(instance, items));
      return kExitOk;
    }
  } catch (const SizeBudgetExceeded& e) {
    err << "error: " << e.what() << '\n';
    return kExitBudget;
  } catch (const io::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const io::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitViolation;
  }
  return kExitInput;
}

}  // namespace acquimech::cli
