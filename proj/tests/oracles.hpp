#ifndef CASEMINE_TESTS_ORACLES_HPP
#define CASEMINE_TESTS_ORACLES_HPP

// Brute-force reference implementations used only by the tests.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "casemine/concept.hpp"
#include "casemine/miner.hpp"
#include "casemine/ontology.hpp"

namespace casemine::oracle {

using Itemset = std::vector<ItemId>;

inline bool contains_all(std::span<const ItemId> t, const Itemset& s) {
  return std::includes(t.begin(), t.end(), s.begin(), s.end());
}

inline std::size_t count_support(const TransactionDb& db, const Itemset& s) {
  std::size_t n = 0;
  for (std::size_t t = 0; t < db.size(); ++t) n += contains_all(db[t], s) ? 1 : 0;
  return n;
}

/// Every itemset over items [0, bound) with count >= min_count and no proper
/// superset of equal count. Exponential in `bound`; keep it small.
inline std::map<Itemset, std::size_t> closed_frequent(const TransactionDb& db, std::size_t min_count) {
  const ItemId bound = db.item_bound();
  std::map<Itemset, std::size_t> support;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << bound); ++mask) {
    Itemset s;
    for (ItemId i = 0; i < bound; ++i) {
      if (mask >> i & 1u) s.push_back(i);
    }
    support.emplace(s, count_support(db, s));
  }
  std::map<Itemset, std::size_t> out;
  for (const auto& [s, c] : support) {
    if (c < min_count) continue;
    bool closed = true;
    for (ItemId i = 0; i < bound && closed; ++i) {
      if (std::binary_search(s.begin(), s.end(), i)) continue;
      Itemset bigger = s;
      bigger.insert(std::upper_bound(bigger.begin(), bigger.end(), i), i);
      if (support.at(bigger) == c) closed = false;
    }
    if (closed) out.emplace(s, c);
  }
  return out;
}

/// Names reachable from `name` through atomic inclusions, `name` included.
inline std::set<std::string> reach(const Ontology& o, const std::string& name) {
  std::set<std::string> seen{name};
  std::deque<std::string> todo{name};
  while (!todo.empty()) {
    auto cur = todo.front();
    todo.pop_front();
    for (const auto& ax : o.axioms()) {
      if (const auto* inc = std::get_if<AtomicInclusion>(&ax); inc && inc->sub == cur && seen.insert(inc->super).second) {
        todo.push_back(inc->super);
      }
    }
  }
  return seen;
}

/// Top-level conjuncts of `c` with defined names unfolded.
inline void flatten(const Concept& c, const Ontology& o, std::vector<Concept>& out) {
  switch (c.kind()) {
    case Concept::Kind::kAnd:
      for (const auto& op : c.operands()) flatten(op, o, out);
      break;
    case Concept::Kind::kAtomic:
      if (const auto* body = o.definition(c.name())) {
        flatten(*body, o, out);
      } else {
        out.push_back(c);
      }
      break;
    default:
      out.push_back(c);
  }
}

/// Structural test of "c is subsumed by p" for a property-form `p`,
/// written without the library's normal forms.
inline bool has_property(const Concept& c, const Concept& p, const Ontology& o) {
  std::vector<Concept> parts;
  flatten(c, o, parts);
  switch (p.kind()) {
    case Concept::Kind::kAtomic:
      for (const auto& q : parts) {
        if (q.kind() == Concept::Kind::kAtomic && reach(o, q.name()).count(p.name())) return true;
      }
      return false;
    case Concept::Kind::kExistsRole: {
      std::vector<Concept> fillers;
      for (const auto& q : parts) {
        if (q.kind() == Concept::Kind::kExistsRole && q.name() == p.name()) fillers.push_back(q.filler());
      }
      if (fillers.empty()) return false;
      return has_property(Concept::conjunction(fillers), p.filler(), o);
    }
    case Concept::Kind::kExistsConcrete: {
      double lo = -std::numeric_limits<double>::infinity();
      double hi = std::numeric_limits<double>::infinity();
      bool any = false;
      for (const auto& q : parts) {
        if (q.kind() != Concept::Kind::kExistsConcrete || q.name() != p.name()) continue;
        any = true;
        const auto& k = q.constraint();
        if (k.op == ConstraintOp::kGe) {
          lo = std::max(lo, k.bound);
        } else {
          hi = std::min(hi, k.bound);
        }
      }
      if (!any) return false;
      if (lo >= hi) return true;
      const auto& d = p.constraint();
      return d.op == ConstraintOp::kGe ? lo >= d.bound : hi <= d.bound;
    }
    case Concept::Kind::kAnd:
      for (const auto& op : p.operands()) {
        if (!has_property(c, op, o)) return false;
      }
      return true;
  }
  return false;
}

}  // namespace casemine::oracle

#endif
