#ifndef CASEMINE_SESSION_HPP
#define CASEMINE_SESSION_HPP

#include <array>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "casemine/fci.hpp"
#include "casemine/kb.hpp"
#include "casemine/phi.hpp"
#include "casemine/rules.hpp"
#include "casemine/transactions.hpp"

namespace casemine {

// Pipeline steps:
//   1 load KB, 2 case filter, 3 format, 4 property filter, 5 encode pairs,
//   6 transaction filter, 7 mine, 8 FCI filter + views, 9 rules.
constexpr int kFirstStep = 1;
constexpr int kLastStep = 9;
std::string_view step_name(int step);

struct CaseFilter {
  std::vector<std::string> include_ids;  // empty = all
  std::vector<std::string> exclude_ids;
  friend bool operator==(const CaseFilter&, const CaseFilter&) = default;
};

struct PropertyFilter {
  std::vector<std::string> include_keys;  // empty = all
  std::vector<std::string> exclude_keys;
  friend bool operator==(const PropertyFilter&, const PropertyFilter&) = default;
};

struct TransactionFilter {
  std::vector<std::string> require_tokens;
  std::vector<std::string> exclude_tokens;
  std::optional<std::size_t> min_items;
  std::optional<std::size_t> max_items;
  friend bool operator==(const TransactionFilter&, const TransactionFilter&) = default;
};

struct FciFilter {
  bool both_sides = true;
  std::optional<double> min_support;
  std::optional<double> max_support;
  std::optional<std::size_t> min_items;
  std::optional<std::size_t> max_items;
  std::vector<std::string> require_tokens;
  std::vector<std::string> exclude_tokens;
  friend bool operator==(const FciFilter&, const FciFilter&) = default;
};

struct SessionParams {
  CaseFilter cases;                     // s2
  PropertyFilter properties;            // s4
  std::optional<std::size_t> k_overlap; // s5
  TransactionFilter transactions;       // s6
  double sigma = 0.1;                   // s7
  std::optional<double> budget_seconds; // s7
  std::optional<std::size_t> max_itemsets;  // s7
  FciFilter fcis;                       // s8
  unsigned threads = 1;                 // s7, does not affect results
  friend bool operator==(const SessionParams&, const SessionParams&) = default;
};

nlohmann::json params_to_json(const SessionParams& p);
/// Missing keys keep the values of `base`. Throws ValidationError.
SessionParams params_from_json(const nlohmann::json& j, const SessionParams& base = {});
/// First step whose output depends on a changed parameter, or nullopt.
std::optional<int> first_affected_step(const SessionParams& a, const SessionParams& b);

struct Selection {
  std::vector<std::size_t> indices;  // into kb.cases()
};

struct FormattedArtifact {
  FormattedCaseBase base;
  std::shared_ptr<const SubsumptionTable> table;
};

struct MinedArtifact {
  std::vector<Fci> fcis;
  std::size_t transactions = 0;
  std::size_t min_count = 0;
  double seconds = 0.0;
};

struct ViewArtifact {
  std::vector<Fci> kept;
  std::vector<FciView> views;  // parallel to `kept`
};

struct RulesArtifact {
  std::vector<AdaptationRule> rendered;  // candidate forms, before verdicts are re-attached
  std::vector<std::string> warnings;
};

/// Immutable step outputs; a state holds a prefix of them.
struct Artifacts {
  std::shared_ptr<const KnowledgeBase> kb;                // s1
  std::shared_ptr<const Selection> selection;             // s2
  std::shared_ptr<const FormattedArtifact> formatted;     // s3
  std::shared_ptr<const FormattedArtifact> projected;     // s4
  std::shared_ptr<const EncodedDatabase> encoded;         // s5
  std::shared_ptr<const EncodedDatabase> transactions;    // s6
  std::shared_ptr<const MinedArtifact> mined;             // s7
  std::shared_ptr<const ViewArtifact> views;              // s8
  std::shared_ptr<const RulesArtifact> rules;             // s9

  bool has(int step) const;
  void clear_from(int step);
  int completed() const;  // highest step present in the prefix, 0 if none
};

enum class SessionStatus { kIdle, kRunning, kInterrupted };
std::string_view status_name(SessionStatus s);

struct FciQuery {
  std::string sort = "support";  // support | items | id
  bool descending = true;
  bool group = false;
  std::size_t offset = 0;
  std::size_t limit = 50;
  std::optional<double> min_support;
};

struct FciPage {
  std::size_t total = 0;
  std::vector<FciView> items;
  std::vector<std::pair<std::string, std::size_t>> groups;  // (pb signature, size), when grouped
};

struct ApplyResult {
  AdaptationRule rule;
  Application application;
  std::vector<std::string> decisions;  // decision-level result, when the rule has decision actions
  std::optional<PropertySet> decision_solution;
  std::vector<std::string> warnings;
};

/// One analyst session over one KB. Thread-safe: one step runs at a time and
/// concurrent mutators get Conflict; readers see the latest completed mutation.
class Session {
 public:
  using Clock = std::function<std::string()>;

  explicit Session(std::string kb_text, std::string id = {}, Clock clock = {});

  const std::string& id() const { return id_; }
  const std::string& kb_text() const { return kb_text_; }

  SessionParams params() const;
  /// Replaces parameters and drops artifacts of every affected step.
  void set_params(const SessionParams& p);

  /// Runs one step. Throws StateError (missing input), Conflict (busy),
  /// Interrupted (state restored to the pre-step snapshot), or step errors.
  void run_step(int step);
  /// Runs every step from the first missing one through `last`.
  void run_through(int last);
  /// Asks the running step to stop. Returns false when nothing runs.
  bool interrupt();
  /// Restores the snapshot taken before `step` last ran.
  void go_back(int step);

  SessionStatus status() const;
  std::optional<int> running_step() const;
  int completed_step() const;
  std::optional<std::string> last_error() const;
  std::pair<std::size_t, std::size_t> progress() const;  // (done, total) of the running step

  Artifacts artifacts() const;
  std::map<int, std::string> digests() const;
  nlohmann::json history() const;
  nlohmann::json summary() const;
  nlohmann::json descriptor() const;

  FciPage query_fcis(const FciQuery& q) const;
  /// Raw and simplified items of one FCI from the s8 views (or s7 output).
  std::optional<FciView> fci_detail(const std::string& fci_id) const;

  std::vector<AdaptationRule> rules() const;
  std::optional<AdaptationRule> rule(const std::string& id) const;
  AdaptationRule validate_rule(const std::string& id, const std::string& explanation, const std::string& author);
  AdaptationRule reject_rule(const std::string& id, const std::string& explanation, const std::string& author);
  AdaptationRule edit_rule(const std::string& id, std::vector<std::string> removals, std::vector<std::string> additions,
                           const std::string& author);
  std::vector<AuditEntry> audit() const;

  /// Applies a rule to a source case (by id) and a target problem expression.
  ApplyResult apply(const std::string& rule_id, const std::string& source_case_id,
                    const std::string& target_problem) const;

  /// kind: transactions | fcis | rules | candidates | session. Throws StateError when missing.
  void export_artifact(const std::string& kind, std::ostream& out) const;
  std::string export_text(const std::string& kind) const;

  nlohmann::json snapshot() const;
  void save(const std::filesystem::path& path) const;
  /// Rebuilds a session by re-running its completed steps; verifies digests.
  static std::unique_ptr<Session> restore(const nlohmann::json& snapshot, Clock clock = {});
  static std::unique_ptr<Session> load(const std::filesystem::path& path, Clock clock = {});
  /// Re-executes a recorded history on a fresh session over the same KB.
  static std::unique_ptr<Session> replay(const std::string& kb_text, const nlohmann::json& history, Clock clock = {});

 private:
  struct Snapshot {
    SessionParams params;
    Artifacts artifacts;
    std::map<int, std::string> digests;
  };

  void check_idle_locked() const;
  void record(nlohmann::json event);
  std::string now() const;
  std::string digest_of(int step, const Artifacts& a) const;
  void compute(int step, Artifacts& a, const SessionParams& p);
  void rebuild_rules_locked();

  const std::string id_;
  const std::string kb_text_;
  Clock clock_;

  mutable std::mutex mu_;
  SessionParams params_;
  Artifacts artifacts_;
  std::map<int, std::string> digests_;
  std::map<int, Snapshot> snapshots_;
  RuleBook book_;
  nlohmann::json history_ = nlohmann::json::array();
  SessionStatus status_ = SessionStatus::kIdle;
  std::optional<int> running_;
  std::optional<std::string> last_error_;
  std::atomic<bool> cancel_{false};
  std::atomic<std::size_t> progress_done_{0};
  std::atomic<std::size_t> progress_total_{0};
  std::map<int, double> step_seconds_;
};

}  // namespace casemine

#endif  // CASEMINE_SESSION_HPP
