#ifndef CASEMINE_KB_HPP
#define CASEMINE_KB_HPP

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "casemine/concept.hpp"
#include "casemine/ontology.hpp"

namespace casemine {

/// A source case: a problem concept and a non-empty set of atomic decisions.
struct Case {
  std::string id;
  Concept problem;
  std::vector<std::string> solution;  // sorted, unique
};

/// Domain ontology plus case base. Validated on construction.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;
  /// Throws ValidationError.
  KnowledgeBase(Ontology ontology, std::vector<Case> cases);

  const Ontology& ontology() const { return ontology_; }
  const std::vector<Case>& cases() const { return cases_; }
  const std::string& digest() const { return digest_; }

  /// Non-defined atomic names occurring anywhere in axioms, problems or solutions.
  const std::set<std::string>& atomic_names() const { return atomics_; }
  bool occurs(std::string_view atomic) const { return atomics_.find(std::string(atomic)) != atomics_.end(); }
  /// Names used as decisions in some solution.
  const std::set<std::string>& decision_names() const { return decisions_; }
  /// Constraints under `concrete_role` anywhere in the KB.
  const ConstraintSet& constraints_of(std::string_view concrete_role) const;
  const std::set<std::string>& concrete_role_names() const { return concrete_roles_; }

  /// Index of the case with this id, or npos.
  std::size_t find_case(std::string_view id) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  Ontology ontology_;
  std::vector<Case> cases_;
  std::string digest_;
  std::set<std::string> atomics_;
  std::set<std::string> decisions_;
  std::set<std::string> concrete_roles_;
  std::map<std::string, ConstraintSet, std::less<>> constraints_;
};

/// Parses the text format:
///   [ontology]
///   Sub isa Super
///   Name := <concept>
///   [cases]
///   id | <concept> | dec1, dec2
/// Lines starting with '#' are comments. Throws ParseError (line/column) or ValidationError.
KnowledgeBase parse_kb(std::string_view text);
KnowledgeBase load_kb(const std::filesystem::path& path);

/// Canonical text of the KB (axioms in input order, cases in input order).
std::string render_kb(const KnowledgeBase& kb);

/// SHA-256 over the sorted canonical lines of all axioms and cases.
std::string kb_digest(const Ontology& ontology, const std::vector<Case>& cases);

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary file and rename. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace casemine

#endif  // CASEMINE_KB_HPP
