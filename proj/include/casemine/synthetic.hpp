#ifndef CASEMINE_SYNTHETIC_HPP
#define CASEMINE_SYNTHETIC_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "casemine/kb.hpp"

namespace casemine {

/// Categorical feature: values "<name>-<j>" below a parent "<name>".
/// With a role the feature is stated as "some <role>.<value>".
struct FeatureSpec {
  std::string name;
  int values = 2;
  double presence = 1.0;
  std::optional<std::string> role;
};

/// Numeric feature binned by thresholds into "(g >= lo)" / "(g < hi)" constraints.
struct ConcreteSpec {
  std::string name;
  std::vector<double> thresholds;  // strictly increasing
  double min = 0.0;
  double max = 1.0;
  double presence = 1.0;
  std::optional<std::string> role;
};

/// Decision family: "<name>-<j>" isa "<name>" isa "Decision".
struct DecisionSpec {
  std::string name;
  int values = 2;
  double presence = 0.5;
};

/// A rule planted as m source carriers and m target carriers, where
/// m = round(sqrt(prevalence * n * (n - 1))). Every (source, target) pair
/// instantiates the rule, so its expected pair count is m * m.
struct PlantedRuleSpec {
  std::string name;
  double prevalence = 0.1;
};

struct SyntheticSpec {
  std::size_t n_cases = 0;
  std::uint64_t seed = 1;
  std::vector<FeatureSpec> features;
  std::vector<ConcreteSpec> concretes;
  std::vector<DecisionSpec> decisions;
  std::vector<PlantedRuleSpec> planted;
};

/// Throws ValidationError on malformed specs.
SyntheticSpec parse_synthetic_spec(const nlohmann::json& j);
nlohmann::json synthetic_spec_to_json(const SyntheticSpec& spec);

struct PlantedRuleLedger {
  std::string name;
  double prevalence = 0.0;
  std::size_t carriers = 0;  // m
  std::vector<std::string> source_cases;
  std::vector<std::string> target_cases;
  std::size_t pair_count = 0;  // m * m
  double expected_support = 0.0;
  /// Item tokens of the pattern after redundancy pruning, canonical order.
  std::vector<std::string> pattern;
  /// Item tokens identifying an instantiating transaction.
  std::vector<std::string> signature;
  std::string condition_source, condition_target, action_old, action_new, action_group;
};

struct SyntheticResult {
  std::string kb_text;
  KnowledgeBase kb;
  std::vector<PlantedRuleLedger> ledger;
};

/// Deterministic in (spec, spec.seed). Throws ValidationError when the planted
/// rules need more carriers than there are cases.
SyntheticResult generate_synthetic(const SyntheticSpec& spec);

/// Ledger document; with `with_pairs`, each rule lists its instantiating pairs.
nlohmann::json ledger_to_json(const std::vector<PlantedRuleLedger>& ledger, const std::string& kb_digest,
                              bool with_pairs = true);

}  // namespace casemine

#endif  // CASEMINE_SYNTHETIC_HPP
