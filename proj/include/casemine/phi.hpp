#ifndef CASEMINE_PHI_HPP
#define CASEMINE_PHI_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "casemine/concept.hpp"
#include "casemine/kb.hpp"

namespace casemine {

using Ordinal = std::uint32_t;

/// The boolean-property vocabulary: property-form concepts with dense ordinals.
/// Ordinals follow first-insertion order; the universe is frozen once shared.
class PropertyUniverse {
 public:
  /// Returns the ordinal of `property`, inserting it if new.
  Ordinal add(const Concept& property);

  std::size_t size() const { return properties_.size(); }
  bool empty() const { return properties_.empty(); }
  const Concept& operator[](Ordinal i) const { return properties_[i]; }
  const std::string& key(Ordinal i) const { return properties_[i].text(); }
  std::optional<Ordinal> find(std::string_view key) const;
  const std::vector<Concept>& properties() const { return properties_; }

 private:
  std::vector<Concept> properties_;
  std::unordered_map<std::string, Ordinal> index_;
};

using UniversePtr = std::shared_ptr<const PropertyUniverse>;

/// Subset of a universe, stored as a bitset over ordinals.
class PropertySet {
 public:
  PropertySet() = default;
  explicit PropertySet(UniversePtr universe);
  PropertySet(UniversePtr universe, std::span<const Ordinal> members);

  const UniversePtr& universe() const { return universe_; }
  bool contains(Ordinal i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
  void insert(Ordinal i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  void erase(Ordinal i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
  std::size_t count() const;
  bool empty() const { return count() == 0; }
  std::vector<Ordinal> members() const;
  std::span<const std::uint64_t> words() const { return words_; }

  /// Set algebra; throws UniverseMismatch when universes differ.
  PropertySet operator-(const PropertySet& other) const;
  PropertySet operator&(const PropertySet& other) const;
  PropertySet operator|(const PropertySet& other) const;
  bool is_subset_of(const PropertySet& other) const;
  bool intersects(const PropertySet& other) const;

  friend bool operator==(const PropertySet& a, const PropertySet& b) {
    return a.universe_ == b.universe_ && a.words_ == b.words_;
  }

 private:
  void check_same(const PropertySet& other) const;

  UniversePtr universe_;
  std::vector<std::uint64_t> words_;
};

void require_same_universe(const PropertySet& a, const PropertySet& b);

/// Computes property images by the recursive equations:
///   atomic A      -> atomic ancestors of A occurring in the KB
///   C and D       -> union
///   some r.C      -> { some r.P | P in image(C) }
///   some g.c      -> { some g.d | d constrains g somewhere in the KB and c is inside d }
/// Defined names are unfolded. Results are memoized per concept; one formatter
/// must not be shared across threads.
class PhiFormatter {
 public:
  explicit PhiFormatter(const KnowledgeBase& kb) : kb_(&kb) {}

  /// Properties of `c`, in deterministic depth-first order, without duplicates.
  const std::vector<Concept>& phi(const Concept& c);
  /// Union of the decision images, decisions taken in the given order.
  std::vector<Concept> phi_solution(std::span<const std::string> decisions);

  std::size_t cache_size() const { return cache_.size(); }

 private:
  std::vector<Concept> compute(const Concept& c);

  const KnowledgeBase* kb_;
  std::unordered_map<std::string, std::vector<Concept>> cache_;
};

const ConstraintSet& concrete_constraints(const KnowledgeBase& kb, std::string_view concrete_role);
std::vector<Concept> phi(const Concept& c, const KnowledgeBase& kb);

/// Universe over the cases (all, or the given indices): problem images and
/// solution images, case by case, in first-appearance order.
PropertyUniverse build_universe(const KnowledgeBase& kb);
PropertyUniverse build_universe(const KnowledgeBase& kb, std::span<const std::size_t> subset);

/// Image of `c` projected into `universe`. Properties outside the universe are
/// dropped and reported in `warnings` when given.
PropertySet phi_set(const Concept& c, const KnowledgeBase& kb, const UniversePtr& universe,
                    std::vector<std::string>* warnings = nullptr);
PropertySet phi_solution_set(std::span<const std::string> decisions, const KnowledgeBase& kb,
                             const UniversePtr& universe, std::vector<std::string>* warnings = nullptr);

struct FormattedCase {
  std::size_t case_index = 0;  // index into KnowledgeBase::cases()
  std::string id;
  PropertySet problem;
  PropertySet solution;
};

/// Output of the first formatting substep.
struct FormattedCaseBase {
  UniversePtr universe;
  std::vector<FormattedCase> cases;
};

FormattedCaseBase format_case_base(const KnowledgeBase& kb);
FormattedCaseBase format_case_base(const KnowledgeBase& kb, std::span<const std::size_t> subset);

/// For each ordinal p, the ordinals q != p with property p subsumed by property q.
class SubsumptionTable {
 public:
  SubsumptionTable() = default;
  SubsumptionTable(const PropertyUniverse& universe, const Ontology& ontology);

  bool subsumed(Ordinal p, Ordinal q) const { return p == q || matrix_[p * n_ + q]; }
  bool strictly_below(Ordinal p, Ordinal q) const { return subsumed(p, q) && !subsumed(q, p); }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_ = 0;
  std::vector<bool> matrix_;
};

/// Smallest superset of `s` closed upward under the table.
PropertySet close_upward(const PropertySet& s, const SubsumptionTable& table);

}  // namespace casemine

#endif  // CASEMINE_PHI_HPP
