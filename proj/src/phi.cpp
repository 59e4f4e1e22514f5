#include "casemine/phi.hpp"

#include <algorithm>
#include <bit>
#include <unordered_set>

#include "casemine/error.hpp"

namespace casemine {

Ordinal PropertyUniverse::add(const Concept& property) {
  auto [it, inserted] = index_.emplace(property.text(), static_cast<Ordinal>(properties_.size()));
  if (inserted) properties_.push_back(property);
  return it->second;
}

std::optional<Ordinal> PropertyUniverse::find(std::string_view key) const {
  auto it = index_.find(std::string(key));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

PropertySet::PropertySet(UniversePtr universe)
    : universe_(std::move(universe)), words_((universe_ ? universe_->size() : 0) / 64 + 1, 0) {}

PropertySet::PropertySet(UniversePtr universe, std::span<const Ordinal> members) : PropertySet(std::move(universe)) {
  for (Ordinal m : members) {
    if (m >= universe_->size()) throw UniverseMismatch("ordinal out of universe range");
    insert(m);
  }
}

std::size_t PropertySet::count() const {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

std::vector<Ordinal> PropertySet::members() const {
  std::vector<Ordinal> out;
  for (std::size_t w = 0; w < words_.size(); ++w) {
    std::uint64_t bits = words_[w];
    while (bits) {
      out.push_back(static_cast<Ordinal>(w * 64 + static_cast<std::size_t>(std::countr_zero(bits))));
      bits &= bits - 1;
    }
  }
  return out;
}

void require_same_universe(const PropertySet& a, const PropertySet& b) {
  if (a.universe() != b.universe()) throw UniverseMismatch("property sets belong to different universes");
}

void PropertySet::check_same(const PropertySet& other) const { require_same_universe(*this, other); }

PropertySet PropertySet::operator-(const PropertySet& other) const {
  check_same(other);
  PropertySet out(*this);
  for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] &= ~other.words_[i];
  return out;
}

PropertySet PropertySet::operator&(const PropertySet& other) const {
  check_same(other);
  PropertySet out(*this);
  for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] &= other.words_[i];
  return out;
}

PropertySet PropertySet::operator|(const PropertySet& other) const {
  check_same(other);
  PropertySet out(*this);
  for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] |= other.words_[i];
  return out;
}

bool PropertySet::is_subset_of(const PropertySet& other) const {
  check_same(other);
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (words_[i] & ~other.words_[i]) return false;
  }
  return true;
}

bool PropertySet::intersects(const PropertySet& other) const {
  check_same(other);
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (words_[i] & other.words_[i]) return true;
  }
  return false;
}

namespace {

void append_unique(std::vector<Concept>& out, std::unordered_set<std::string>& seen, const Concept& c) {
  if (seen.insert(c.text()).second) out.push_back(c);
}

}  // namespace

const std::vector<Concept>& PhiFormatter::phi(const Concept& c) {
  if (auto it = cache_.find(c.text()); it != cache_.end()) return it->second;
  auto result = compute(c);
  return cache_.emplace(c.text(), std::move(result)).first->second;
}

std::vector<Concept> PhiFormatter::compute(const Concept& c) {
  std::vector<Concept> out;
  std::unordered_set<std::string> seen;
  switch (c.kind()) {
    case Concept::Kind::kAtomic: {
      if (const Concept* body = kb_->ontology().definition(c.name())) return phi(*body);
      if (kb_->occurs(c.name())) append_unique(out, seen, c);
      for (const auto& anc : kb_->ontology().ancestors(c.name())) {
        if (anc != c.name() && kb_->occurs(anc)) append_unique(out, seen, Concept::atomic(anc));
      }
      break;
    }
    case Concept::Kind::kAnd:
      for (const auto& op : c.operands()) {
        for (const auto& p : phi(op)) append_unique(out, seen, p);
      }
      break;
    case Concept::Kind::kExistsRole:
      for (const auto& p : phi(c.filler())) append_unique(out, seen, Concept::some(c.name(), p));
      break;
    case Concept::Kind::kExistsConcrete:
      for (const auto& d : kb_->constraints_of(c.name())) {
        if (constraint_contains(d, c.constraint())) append_unique(out, seen, Concept::some(c.name(), d));
      }
      break;
  }
  return out;
}

std::vector<Concept> PhiFormatter::phi_solution(std::span<const std::string> decisions) {
  std::vector<Concept> out;
  std::unordered_set<std::string> seen;
  for (const auto& dec : decisions) {
    for (const auto& p : phi(Concept::atomic(dec))) append_unique(out, seen, p);
  }
  return out;
}

const ConstraintSet& concrete_constraints(const KnowledgeBase& kb, std::string_view concrete_role) {
  return kb.constraints_of(concrete_role);
}

std::vector<Concept> phi(const Concept& c, const KnowledgeBase& kb) {
  PhiFormatter f(kb);
  return f.phi(c);
}

namespace {

std::vector<std::size_t> all_cases(const KnowledgeBase& kb) {
  std::vector<std::size_t> all(kb.cases().size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return all;
}

PropertySet project(const std::vector<Concept>& props, const UniversePtr& universe,
                    std::vector<std::string>* warnings) {
  PropertySet s(universe);
  for (const auto& p : props) {
    if (auto ord = universe->find(p.text())) {
      s.insert(*ord);
    } else if (warnings) {
      warnings->push_back("property '" + p.text() + "' is outside the universe");
    }
  }
  return s;
}

}  // namespace

PropertyUniverse build_universe(const KnowledgeBase& kb) { return *format_case_base(kb).universe; }

PropertyUniverse build_universe(const KnowledgeBase& kb, std::span<const std::size_t> subset) {
  return *format_case_base(kb, subset).universe;
}

PropertySet phi_set(const Concept& c, const KnowledgeBase& kb, const UniversePtr& universe,
                    std::vector<std::string>* warnings) {
  PhiFormatter f(kb);
  const auto& props = f.phi(c);
  if (props.empty() && warnings) warnings->push_back("concept '" + c.text() + "' has no properties in the KB");
  return project(props, universe, warnings);
}

PropertySet phi_solution_set(std::span<const std::string> decisions, const KnowledgeBase& kb,
                             const UniversePtr& universe, std::vector<std::string>* warnings) {
  PhiFormatter f(kb);
  return project(f.phi_solution(decisions), universe, warnings);
}

FormattedCaseBase format_case_base(const KnowledgeBase& kb) { return format_case_base(kb, all_cases(kb)); }

FormattedCaseBase format_case_base(const KnowledgeBase& kb, std::span<const std::size_t> indices) {
  for (auto i : indices) {
    if (i >= kb.cases().size()) throw StateError("case index out of range");
  }
  PhiFormatter f(kb);
  auto universe = std::make_shared<PropertyUniverse>();
  for (auto i : indices) {
    const Case& c = kb.cases()[i];
    for (const auto& p : f.phi(c.problem)) universe->add(p);
    for (const auto& p : f.phi_solution(c.solution)) universe->add(p);
  }
  FormattedCaseBase out;
  out.universe = universe;
  for (auto i : indices) {
    const Case& c = kb.cases()[i];
    out.cases.push_back(FormattedCase{i, c.id, project(f.phi(c.problem), out.universe, nullptr),
                                      project(f.phi_solution(c.solution), out.universe, nullptr)});
  }
  return out;
}

SubsumptionTable::SubsumptionTable(const PropertyUniverse& universe, const Ontology& ontology)
    : n_(universe.size()), matrix_(n_ * n_, false) {
  std::vector<NormalForm> nfs;
  nfs.reserve(n_);
  for (const auto& p : universe.properties()) nfs.push_back(normalize(p, ontology));
  for (std::size_t p = 0; p < n_; ++p) {
    for (std::size_t q = 0; q < n_; ++q) {
      matrix_[p * n_ + q] = p == q || is_subsumed_by(ontology, nfs[p], nfs[q]);
    }
  }
}

PropertySet close_upward(const PropertySet& s, const SubsumptionTable& table) {
  PropertySet out = s;
  for (Ordinal p : s.members()) {
    for (Ordinal q = 0; q < table.size(); ++q) {
      if (table.subsumed(p, q)) out.insert(q);
    }
  }
  return out;
}

}  // namespace casemine
