#ifndef CASEMINE_CONCEPT_HPP
#define CASEMINE_CONCEPT_HPP

#include <compare>
#include <cstdint>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace casemine {

enum class ConstraintOp : std::uint8_t { kGe, kLt };

/// Half-line constraint on a concrete role: `>= b` is [b, +inf), `< b` is (-inf, b).
struct Constraint {
  ConstraintOp op = ConstraintOp::kGe;
  double bound = 0.0;

  friend auto operator<=>(const Constraint&, const Constraint&) = default;
  friend bool operator==(const Constraint&, const Constraint&) = default;

  static Constraint ge(double b) { return {ConstraintOp::kGe, b}; }
  static Constraint lt(double b) { return {ConstraintOp::kLt, b}; }
};

using ConstraintSet = std::set<Constraint>;

/// True iff the half-line of `inner` is a subset of the half-line of `outer`.
bool constraint_contains(const Constraint& outer, const Constraint& inner);

/// True iff the intersection of the half-lines in `set` is a subset of `d`.
/// An empty intersection is contained in everything. `set` must be non-empty.
bool constraint_set_contains(const ConstraintSet& set, const Constraint& d);

/// True iff the intersection of the half-lines in `set` is empty.
bool constraint_set_empty(const ConstraintSet& set);

/// Shortest decimal text that reads back to the same double.
std::string format_bound(double value);
std::string render_constraint(const Constraint& c);  // ">= 45", "< 70"

/// Immutable concept of the fragment: atomic names, conjunction, existential
/// restriction on a (functional) role, existential restriction on a concrete role.
///
/// Values are always canonical: conjunctions are flattened, deduplicated and
/// sorted by rendered text, and a conjunction of one operand collapses to it.
/// Equality and ordering compare the canonical rendering.
class Concept {
 public:
  enum class Kind : std::uint8_t { kAtomic, kAnd, kExistsRole, kExistsConcrete };

  static Concept atomic(std::string name);
  static Concept conjunction(std::vector<Concept> operands);
  static Concept some(std::string role, const Concept& filler);
  static Concept some(std::string concrete_role, Constraint c);

  Kind kind() const;
  /// Atomic name, role name, or concrete-role name depending on kind.
  const std::string& name() const;
  std::span<const Concept> operands() const;
  const Concept& filler() const;
  const Constraint& constraint() const;

  /// Canonical text in the concept grammar.
  const std::string& text() const;

  bool is_property_form() const;

  friend bool operator==(const Concept& a, const Concept& b) { return a.text() == b.text(); }
  friend std::strong_ordering operator<=>(const Concept& a, const Concept& b) {
    return a.text() <=> b.text();
  }

 private:
  struct Node;
  explicit Concept(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Parses the concept grammar:
///   concept := term { "and" term }
///   term    := NAME | "some" ROLE "." term | "(" concept ")" | "(" GROLE (">="|"<") NUMBER ")"
/// Throws ParseError (with column) or UnsupportedConstruct.
Concept parse_concept(std::string_view text);

inline std::string render_concept(const Concept& c) { return c.text(); }

bool is_identifier(std::string_view s);

}  // namespace casemine

#endif  // CASEMINE_CONCEPT_HPP
