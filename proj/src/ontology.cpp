#include "casemine/ontology.hpp"

#include <algorithm>
#include <functional>

#include "casemine/error.hpp"

namespace casemine {

std::string render_axiom(const Axiom& axiom) {
  if (const auto* inc = std::get_if<AtomicInclusion>(&axiom)) return inc->sub + " isa " + inc->super;
  const auto& def = std::get<Definition>(axiom);
  return def.name + " := " + def.body.text();
}

void collect_vocabulary(const Concept& c, Vocabulary& out) {
  switch (c.kind()) {
    case Concept::Kind::kAtomic:
      out.atomics.insert(c.name());
      break;
    case Concept::Kind::kAnd:
      for (const auto& op : c.operands()) collect_vocabulary(op, out);
      break;
    case Concept::Kind::kExistsRole:
      out.roles.insert(c.name());
      collect_vocabulary(c.filler(), out);
      break;
    case Concept::Kind::kExistsConcrete:
      out.concrete_roles.insert(c.name());
      out.constraints[c.name()].insert(c.constraint());
      break;
  }
}

Ontology::Ontology(std::vector<Axiom> axioms) : axioms_(std::move(axioms)) {
  std::map<std::string, std::set<std::string>, std::less<>> supers;
  Vocabulary vocab;
  for (const auto& ax : axioms_) {
    if (const auto* def = std::get_if<Definition>(&ax)) {
      if (!definitions_.emplace(def->name, def->body).second) {
        throw ValidationError("duplicate definition of '" + def->name + "'");
      }
      collect_vocabulary(def->body, vocab);
    }
  }
  for (const auto& ax : axioms_) {
    if (const auto* inc = std::get_if<AtomicInclusion>(&ax)) {
      if (definitions_.count(inc->sub)) {
        throw ValidationError("defined name '" + inc->sub + "' may not appear on the left of 'isa'");
      }
      if (definitions_.count(inc->super)) {
        throw ValidationError("inclusion '" + inc->sub + " isa " + inc->super +
                              "' would make a defined concept subsume an atomic one");
      }
      supers[inc->sub].insert(inc->super);
      supers[inc->super];
      atomics_.insert(inc->sub);
      atomics_.insert(inc->super);
    }
  }

  // Definition graph must be acyclic.
  enum class Mark { kNone, kActive, kDone };
  std::map<std::string, Mark, std::less<>> marks;
  std::function<void(const std::string&)> visit = [&](const std::string& name) {
    auto& m = marks[name];
    if (m == Mark::kDone) return;
    if (m == Mark::kActive) throw CyclicDefinition("cyclic definition through '" + name + "'");
    m = Mark::kActive;
    Vocabulary v;
    collect_vocabulary(definitions_.at(name), v);
    for (const auto& a : v.atomics) {
      if (definitions_.count(a)) visit(a);
    }
    marks[name] = Mark::kDone;
  };
  for (const auto& [name, body] : definitions_) visit(name);

  for (const auto& a : vocab.atomics) {
    if (!definitions_.count(a)) atomics_.insert(a);
  }
  roles_ = vocab.roles;
  concrete_roles_ = vocab.concrete_roles;
  for (const auto& r : roles_) {
    if (concrete_roles_.count(r)) {
      throw ValidationError("'" + r + "' is used both as a role and as a concrete role");
    }
  }

  for (const auto& [name, direct] : supers) {
    std::set<std::string> seen{name};
    std::vector<std::string> stack(direct.begin(), direct.end());
    while (!stack.empty()) {
      std::string cur = std::move(stack.back());
      stack.pop_back();
      if (!seen.insert(cur).second) continue;
      const auto& next = supers[cur];
      stack.insert(stack.end(), next.begin(), next.end());
    }
    closure_.emplace(name, std::move(seen));
  }

  // No defined concept may strictly subsume an atomic one.
  for (const auto& [name, body] : definitions_) {
    const NormalForm nf = normalize(body, *this);
    if (!nf.roles.empty() || !nf.concretes.empty()) continue;
    for (const auto& a : atomics_) {
      const auto anc = ancestors(a);
      const bool below = std::all_of(nf.atoms.begin(), nf.atoms.end(),
                                     [&](const std::string& b) { return anc.count(b) > 0; });
      if (!below) continue;
      const bool above = std::any_of(nf.atoms.begin(), nf.atoms.end(),
                                     [&](const std::string& b) { return ancestors(b).count(a) > 0; });
      if (!above) {
        throw ValidationError("defined concept '" + name + "' strictly subsumes atomic concept '" + a + "'");
      }
    }
  }
}

std::size_t Ontology::inclusion_count() const {
  return static_cast<std::size_t>(std::count_if(axioms_.begin(), axioms_.end(), [](const Axiom& a) {
    return std::holds_alternative<AtomicInclusion>(a);
  }));
}

bool Ontology::is_defined(std::string_view name) const { return definitions_.find(name) != definitions_.end(); }

const Concept* Ontology::definition(std::string_view name) const {
  auto it = definitions_.find(name);
  return it == definitions_.end() ? nullptr : &it->second;
}

std::set<std::string> Ontology::ancestors(std::string_view name) const {
  auto it = closure_.find(name);
  if (it == closure_.end()) return {std::string(name)};
  return it->second;
}

std::set<std::string> atomic_ancestors(const Ontology& o, std::string_view name) { return o.ancestors(name); }

namespace {

void merge_into(NormalForm& dst, NormalForm&& src) {
  dst.atoms.merge(src.atoms);
  for (auto& [role, filler] : src.roles) {
    auto it = dst.roles.find(role);
    if (it == dst.roles.end()) {
      dst.roles.emplace(role, std::move(filler));
    } else {
      merge_into(it->second, std::move(filler));
    }
  }
  for (auto& [g, cs] : src.concretes) dst.concretes[g].merge(cs);
}

NormalForm normalize_rec(const Concept& c, const Ontology& o, std::vector<std::string>& unfolding) {
  NormalForm nf;
  switch (c.kind()) {
    case Concept::Kind::kAtomic:
      if (const Concept* body = o.definition(c.name())) {
        if (std::find(unfolding.begin(), unfolding.end(), c.name()) != unfolding.end()) {
          throw CyclicDefinition("cyclic definition through '" + c.name() + "'");
        }
        unfolding.push_back(c.name());
        nf = normalize_rec(*body, o, unfolding);
        unfolding.pop_back();
      } else {
        nf.atoms.insert(c.name());
      }
      break;
    case Concept::Kind::kAnd:
      for (const auto& op : c.operands()) merge_into(nf, normalize_rec(op, o, unfolding));
      break;
    case Concept::Kind::kExistsRole:
      nf.roles.emplace(c.name(), normalize_rec(c.filler(), o, unfolding));
      break;
    case Concept::Kind::kExistsConcrete:
      nf.concretes[c.name()].insert(c.constraint());
      break;
  }
  return nf;
}

}  // namespace

NormalForm normalize(const Concept& c, const Ontology& o) {
  std::vector<std::string> unfolding;
  return normalize_rec(c, o, unfolding);
}

bool is_subsumed_by(const Ontology& o, const NormalForm& c, const NormalForm& d) {
  for (const auto& b : d.atoms) {
    const bool found = std::any_of(c.atoms.begin(), c.atoms.end(),
                                   [&](const std::string& a) { return a == b || o.ancestors(a).count(b) > 0; });
    if (!found) return false;
  }
  for (const auto& [role, dfiller] : d.roles) {
    auto it = c.roles.find(role);
    if (it == c.roles.end() || !is_subsumed_by(o, it->second, dfiller)) return false;
  }
  for (const auto& [g, dset] : d.concretes) {
    auto it = c.concretes.find(g);
    if (it == c.concretes.end()) return false;
    for (const auto& dc : dset) {
      if (!constraint_set_contains(it->second, dc)) return false;
    }
  }
  return true;
}

bool is_subsumed_by(const Ontology& o, const Concept& c, const Concept& d) {
  return is_subsumed_by(o, normalize(c, o), normalize(d, o));
}

bool has_empty_constraints(const NormalForm& nf) {
  for (const auto& [g, cs] : nf.concretes) {
    if (constraint_set_empty(cs)) return true;
  }
  for (const auto& [r, filler] : nf.roles) {
    if (has_empty_constraints(filler)) return true;
  }
  return false;
}

}  // namespace casemine
