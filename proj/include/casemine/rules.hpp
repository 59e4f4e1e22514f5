#ifndef CASEMINE_RULES_HPP
#define CASEMINE_RULES_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "casemine/fci.hpp"
#include "casemine/kb.hpp"
#include "casemine/phi.hpp"

namespace casemine {

/// True when some item of `part` carries a '-' or '+' marker.
bool has_change(const std::vector<Item>& items, Part part);

/// Keeps FCIs with a change on both the problem side and the solution side.
std::vector<Fci> filter_both_sides_changed(const std::vector<Fci>& fcis);

/// Within each (part, marker) class, drops items whose property strictly
/// subsumes another property of the same class.
std::vector<Item> prune_items(const std::vector<Item>& items, const SubsumptionTable& table);

/// Presentation of one FCI: the raw items and the simplified ones.
struct FciView {
  std::string fci_id;
  std::vector<Item> raw;
  std::vector<Item> simplified;
  std::string group_key;  // tokens of the simplified problem items
  std::size_t support_count = 0;
  double support = 0.0;
  std::size_t item_count = 0;  // simplified size
};

FciView prune_redundant(const Fci& fci, const SubsumptionTable& table, const PropertyUniverse& universe);

enum class RuleStatus { kCandidate, kValidated, kRejected };
std::string_view status_name(RuleStatus s);
RuleStatus parse_status(std::string_view s);

struct AdaptationRule {
  std::string id;  // content hash of the raw item tokens
  std::string source_fci_id;
  std::size_t support_count = 0;
  double support = 0.0;

  // Conditions and actions over the raw FCI items.
  PropertySet pb_minus, pb_equal, pb_plus;
  PropertySet sol_remove, sol_keep, sol_add;
  // Simplified items, for display.
  std::vector<Item> simplified;

  std::vector<std::string> decision_removals;
  std::vector<std::string> decision_additions;
  /// True when every minimal removed/added property is a decision name.
  bool decision_level = false;
  std::vector<std::string> warnings;

  RuleStatus status = RuleStatus::kCandidate;
  std::string explanation;
  std::string author;
  std::string timestamp;
  std::string text;

  const UniversePtr& universe() const { return pb_minus.universe(); }
};

/// Builds a candidate rule from a view. `kb` supplies the decision vocabulary.
AdaptationRule render_rule(const FciView& view, const UniversePtr& universe, const SubsumptionTable& table,
                           const KnowledgeBase& kb);

/// Human-readable IF/THEN text from the simplified items and decision actions.
std::string rule_text(const AdaptationRule& rule);

struct Application {
  bool applicable = false;
  std::vector<std::string> unmet;  // failed conditions, when not applicable
  std::optional<PropertySet> solution;
};

/// Property-level application. On success the result is
///   (srce_sol \ down(remove)) | up(add)
/// where down/up close the sets under the table, so closed inputs give a closed result.
/// Throws UniverseMismatch.
Application apply_rule(const AdaptationRule& rule, const PropertySet& srce_pb, const PropertySet& srce_sol,
                       const PropertySet& tgt_pb, const SubsumptionTable& table);

/// Decision-level variant: (srce_decisions \ removals) | additions, sorted.
std::vector<std::string> apply_decisions(const AdaptationRule& rule, const std::vector<std::string>& srce_decisions);

struct AuditEntry {
  std::size_t seq = 0;
  std::string rule_id;
  std::string action;  // "validate" | "reject" | "edit" | "reattach" | "branch"
  std::string from;
  std::string to;
  std::string explanation;
  std::string author;
  std::string timestamp;
  std::vector<std::string> flags;
};

/// Rule store with append-only audit log. Validations survive re-rendering:
/// upserting a rule whose id is known keeps the recorded verdict.
class RuleBook {
 public:
  const AdaptationRule& upsert(AdaptationRule rule);
  const AdaptationRule& validate(const std::string& id, const std::string& explanation, const std::string& author,
                                 const std::string& timestamp);
  const AdaptationRule& reject(const std::string& id, const std::string& explanation, const std::string& author,
                               const std::string& timestamp);
  /// Replaces the decision actions of a candidate rule.
  const AdaptationRule& edit_actions(const std::string& id, std::vector<std::string> removals,
                                     std::vector<std::string> additions, const std::string& author,
                                     const std::string& timestamp);
  void note(AuditEntry entry);

  const AdaptationRule* find(const std::string& id) const;
  const std::vector<std::string>& order() const { return order_; }
  std::vector<const AdaptationRule*> rules() const;
  const std::vector<AuditEntry>& audit() const { return audit_; }

  /// Drops rules while keeping verdicts (and the audit log) for re-attachment.
  void clear_rules();

  struct Verdict {
    RuleStatus status = RuleStatus::kCandidate;
    std::string explanation, author, timestamp;
    std::optional<std::pair<std::vector<std::string>, std::vector<std::string>>> actions;
  };
  const std::map<std::string, Verdict>& verdicts() const { return verdicts_; }
  void restore(std::map<std::string, Verdict> verdicts, std::vector<AuditEntry> audit);

 private:
  AdaptationRule& get(const std::string& id);
  const AdaptationRule& transition(const std::string& id, RuleStatus to, const std::string& explanation,
                                   const std::string& author, const std::string& timestamp);

  std::map<std::string, AdaptationRule> rules_;
  std::vector<std::string> order_;
  std::map<std::string, Verdict> verdicts_;
  std::vector<AuditEntry> audit_;
};

std::vector<std::string> item_tokens(const PropertySet& set, Part part, Marker marker);

nlohmann::json rule_to_json(const AdaptationRule& rule);
nlohmann::json audit_to_json(const AuditEntry& e);
AuditEntry audit_from_json(const nlohmann::json& j);

/// Export document with the validated rules only.
nlohmann::json rules_export(const std::vector<const AdaptationRule*>& rules, const std::string& kb_digest,
                            double sigma);

}  // namespace casemine

#endif  // CASEMINE_RULES_HPP
