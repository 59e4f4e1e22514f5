#ifndef CASEMINE_ONTOLOGY_HPP
#define CASEMINE_ONTOLOGY_HPP

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "casemine/concept.hpp"

namespace casemine {

/// `sub isa super` between two atomic names.
struct AtomicInclusion {
  std::string sub;
  std::string super;
  friend bool operator==(const AtomicInclusion&, const AtomicInclusion&) = default;
};

/// `name := body`.
struct Definition {
  std::string name;
  Concept body;
  friend bool operator==(const Definition&, const Definition&) = default;
};

using Axiom = std::variant<AtomicInclusion, Definition>;

std::string render_axiom(const Axiom& axiom);

/// Ontology restricted to atomic inclusions plus acyclic name definitions.
/// Validated and closed on construction; immutable afterwards.
class Ontology {
 public:
  Ontology() = default;
  /// Throws ValidationError / CyclicDefinition.
  explicit Ontology(std::vector<Axiom> axioms);

  const std::vector<Axiom>& axioms() const { return axioms_; }
  std::size_t inclusion_count() const;

  bool is_defined(std::string_view name) const;
  /// nullptr when `name` has no definition.
  const Concept* definition(std::string_view name) const;

  /// Reflexive-transitive closure of the inclusion graph from `name`.
  std::set<std::string> ancestors(std::string_view name) const;

  const std::set<std::string>& role_names() const { return roles_; }
  const std::set<std::string>& concrete_role_names() const { return concrete_roles_; }
  /// Every non-defined name that appears in an axiom.
  const std::set<std::string>& atomic_names() const { return atomics_; }

 private:
  std::vector<Axiom> axioms_;
  std::map<std::string, Concept, std::less<>> definitions_;
  std::map<std::string, std::set<std::string>, std::less<>> closure_;
  std::set<std::string> roles_;
  std::set<std::string> concrete_roles_;
  std::set<std::string> atomics_;
};

/// Names used by a concept, by namespace. Defined names count as atomics here.
struct Vocabulary {
  std::set<std::string> atomics;
  std::set<std::string> roles;
  std::set<std::string> concrete_roles;
  std::map<std::string, ConstraintSet> constraints;  // concrete role -> constraints occurring under it
};
void collect_vocabulary(const Concept& c, Vocabulary& out);

/// Fully unfolded, role-merged form of a concept.
struct NormalForm {
  std::set<std::string> atoms;
  std::map<std::string, NormalForm> roles;
  std::map<std::string, ConstraintSet> concretes;

  bool empty() const { return atoms.empty() && roles.empty() && concretes.empty(); }
  friend bool operator==(const NormalForm&, const NormalForm&) = default;
};

/// Unfolds definitions, flattens conjunctions and merges restrictions on the same
/// role (roles are functional). Throws CyclicDefinition.
NormalForm normalize(const Concept& c, const Ontology& o);

std::set<std::string> atomic_ancestors(const Ontology& o, std::string_view name);

bool is_subsumed_by(const Ontology& o, const NormalForm& c, const NormalForm& d);
bool is_subsumed_by(const Ontology& o, const Concept& c, const Concept& d);

/// True if some concrete-role constraint set anywhere in the form has an empty intersection.
bool has_empty_constraints(const NormalForm& nf);

}  // namespace casemine

#endif  // CASEMINE_ONTOLOGY_HPP
