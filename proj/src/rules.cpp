#include "casemine/rules.hpp"

#include <algorithm>
#include <set>

#include "casemine/digest.hpp"
#include "casemine/error.hpp"

namespace casemine {

bool has_change(const std::vector<Item>& items, Part part) {
  return std::any_of(items.begin(), items.end(),
                     [part](const Item& it) { return it.part == part && it.marker != Marker::kEqual; });
}

std::vector<Fci> filter_both_sides_changed(const std::vector<Fci>& fcis) {
  std::vector<Fci> out;
  for (const auto& f : fcis) {
    if (has_change(f.items, Part::kPb) && has_change(f.items, Part::kSol)) out.push_back(f);
  }
  return out;
}

std::vector<Item> prune_items(const std::vector<Item>& items, const SubsumptionTable& table) {
  std::vector<Item> out;
  for (const auto& it : items) {
    bool redundant = std::any_of(items.begin(), items.end(), [&](const Item& other) {
      return other.part == it.part && other.marker == it.marker && table.strictly_below(other.ordinal, it.ordinal);
    });
    if (!redundant) out.push_back(it);
  }
  return out;
}

FciView prune_redundant(const Fci& fci, const SubsumptionTable& table, const PropertyUniverse& universe) {
  FciView v;
  v.fci_id = fci.id;
  v.raw = fci.items;
  v.simplified = prune_items(fci.items, table);
  for (const auto& it : v.simplified) {
    if (it.part != Part::kPb) continue;
    if (!v.group_key.empty()) v.group_key += ' ';
    v.group_key += item_token(it, universe);
  }
  v.support_count = fci.support_count;
  v.support = fci.support;
  v.item_count = v.simplified.size();
  return v;
}

std::string_view status_name(RuleStatus s) {
  switch (s) {
    case RuleStatus::kCandidate: return "candidate";
    case RuleStatus::kValidated: return "validated";
    case RuleStatus::kRejected: return "rejected";
  }
  return "candidate";
}

RuleStatus parse_status(std::string_view s) {
  if (s == "candidate") return RuleStatus::kCandidate;
  if (s == "validated") return RuleStatus::kValidated;
  if (s == "rejected") return RuleStatus::kRejected;
  throw ValidationError("unknown rule status '" + std::string(s) + "'");
}

namespace {

std::vector<Ordinal> minimal_members(const PropertySet& s, const SubsumptionTable& table) {
  auto members = s.members();
  std::vector<Ordinal> out;
  for (Ordinal p : members) {
    bool minimal = std::none_of(members.begin(), members.end(), [&](Ordinal q) { return table.strictly_below(q, p); });
    if (minimal) out.push_back(p);
  }
  return out;
}

/// Collects minimal decision names; returns false if a minimal property is not one.
bool decision_names_of(const PropertySet& s, const SubsumptionTable& table, const KnowledgeBase& kb,
                       std::vector<std::string>& names, std::vector<std::string>& warnings, const char* what) {
  bool all = true;
  const auto& u = *s.universe();
  for (Ordinal p : minimal_members(s, table)) {
    const Concept& c = u[p];
    if (c.kind() == Concept::Kind::kAtomic && kb.decision_names().count(c.name())) {
      names.push_back(c.name());
    } else {
      all = false;
      warnings.push_back(std::string("minimal ") + what + " property '" + c.text() + "' is not a decision");
    }
  }
  std::sort(names.begin(), names.end());
  return all;
}

PropertySet& slot(AdaptationRule& r, const Item& it) {
  if (it.part == Part::kPb) {
    switch (it.marker) {
      case Marker::kMinus: return r.pb_minus;
      case Marker::kEqual: return r.pb_equal;
      case Marker::kPlus: return r.pb_plus;
    }
  }
  switch (it.marker) {
    case Marker::kMinus: return r.sol_remove;
    case Marker::kEqual: return r.sol_keep;
    case Marker::kPlus: return r.sol_add;
  }
  return r.sol_add;
}

std::string brace_list(const std::vector<std::string>& keys) {
  std::string out = "{";
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (i) out += ", ";
    out += keys[i];
  }
  return out + "}";
}

std::vector<std::string> keys_of(const std::vector<Item>& items, Part part, Marker marker, const PropertyUniverse& u) {
  std::vector<std::string> out;
  for (const auto& it : items) {
    if (it.part == part && it.marker == marker) out.push_back(u.key(it.ordinal));
  }
  return out;
}

std::string join(const std::vector<std::string>& v, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

}  // namespace

std::string rule_text(const AdaptationRule& rule) {
  const auto& u = *rule.universe();
  const auto& s = rule.simplified;
  auto minus = keys_of(s, Part::kPb, Marker::kMinus, u);
  auto equal = keys_of(s, Part::kPb, Marker::kEqual, u);
  auto plus = keys_of(s, Part::kPb, Marker::kPlus, u);
  auto remove = keys_of(s, Part::kSol, Marker::kMinus, u);
  auto keep = keys_of(s, Part::kSol, Marker::kEqual, u);
  auto add = keys_of(s, Part::kSol, Marker::kPlus, u);

  std::vector<std::string> conds;
  if (!minus.empty()) conds.push_back("Phi(srce) \\ Phi(tgt) contains " + brace_list(minus));
  if (!equal.empty()) conds.push_back("Phi(srce) & Phi(tgt) contains " + brace_list(equal));
  if (!plus.empty()) conds.push_back("Phi(tgt) \\ Phi(srce) contains " + brace_list(plus));
  auto held = remove;
  held.insert(held.end(), keep.begin(), keep.end());
  if (!held.empty()) conds.push_back("Phi(Sol(srce)) contains " + brace_list(held));
  if (!add.empty()) conds.push_back("Phi(Sol(srce)) excludes " + brace_list(add));

  std::string out;
  for (std::size_t i = 0; i < conds.size(); ++i) out += (i == 0 ? "IF   " : "AND  ") + conds[i] + "\n";
  std::string rhs = remove.empty() ? "Phi(Sol(srce))" : "(Phi(Sol(srce)) \\ " + brace_list(remove) + ")";
  if (!add.empty()) rhs += " U " + brace_list(add);
  out += "THEN Phi(Sol(tgt)) = " + rhs + "\n";
  if (rule.decision_level) {
    std::vector<std::string> acts;
    if (!rule.decision_removals.empty()) acts.push_back("remove " + join(rule.decision_removals, ", "));
    if (!rule.decision_additions.empty()) acts.push_back("add " + join(rule.decision_additions, ", "));
    out += "     decisions: " + join(acts, "; ") + "\n";
  }
  return out;
}

AdaptationRule render_rule(const FciView& view, const UniversePtr& universe, const SubsumptionTable& table,
                           const KnowledgeBase& kb) {
  AdaptationRule r;
  r.source_fci_id = view.fci_id;
  r.support_count = view.support_count;
  r.support = view.support;
  for (auto* s : {&r.pb_minus, &r.pb_equal, &r.pb_plus, &r.sol_remove, &r.sol_keep, &r.sol_add}) {
    *s = PropertySet(universe);
  }
  std::set<std::pair<Ordinal, Part>> seen;
  std::string canon = "rule\n";
  for (const auto& it : view.raw) {
    if (!seen.emplace(it.ordinal, it.part).second) {
      throw ValidationError("itemset marks property '" + universe->key(it.ordinal) + "' twice on one side");
    }
    slot(r, it).insert(it.ordinal);
    canon += item_token(it, *universe);
    canon += '\n';
  }
  r.id = short_hash(canon);
  r.simplified = view.simplified;

  bool rem_ok = decision_names_of(r.sol_remove, table, kb, r.decision_removals, r.warnings, "removed");
  bool add_ok = decision_names_of(r.sol_add, table, kb, r.decision_additions, r.warnings, "added");
  r.decision_level = rem_ok && add_ok && (!r.decision_removals.empty() || !r.decision_additions.empty());
  if (!r.decision_level) {
    r.decision_removals.clear();
    r.decision_additions.clear();
    r.warnings.push_back("no decision-level action; the rule acts on properties only");
  }
  r.text = rule_text(r);
  return r;
}

Application apply_rule(const AdaptationRule& rule, const PropertySet& srce_pb, const PropertySet& srce_sol,
                       const PropertySet& tgt_pb, const SubsumptionTable& table) {
  require_same_universe(rule.pb_minus, srce_pb);
  require_same_universe(srce_pb, srce_sol);
  require_same_universe(srce_pb, tgt_pb);
  Application app;
  auto check = [&](bool ok, const char* what) {
    if (!ok) app.unmet.emplace_back(what);
  };
  check(rule.pb_minus.is_subset_of(srce_pb - tgt_pb), "problem '-' condition");
  check(rule.pb_equal.is_subset_of(srce_pb & tgt_pb), "problem '=' condition");
  check(rule.pb_plus.is_subset_of(tgt_pb - srce_pb), "problem '+' condition");
  check(rule.sol_remove.is_subset_of(srce_sol), "solution '-' condition");
  check(rule.sol_keep.is_subset_of(srce_sol), "solution '=' condition");
  check(!rule.sol_add.intersects(srce_sol), "solution '+' condition");
  app.applicable = app.unmet.empty();
  if (!app.applicable) return app;

  PropertySet out = srce_sol;
  auto removed = rule.sol_remove.members();
  for (Ordinal p : srce_sol.members()) {
    if (std::any_of(removed.begin(), removed.end(), [&](Ordinal r) { return table.subsumed(p, r); })) out.erase(p);
  }
  app.solution = out | close_upward(rule.sol_add, table);
  return app;
}

std::vector<std::string> apply_decisions(const AdaptationRule& rule, const std::vector<std::string>& srce_decisions) {
  std::set<std::string> out(srce_decisions.begin(), srce_decisions.end());
  for (const auto& d : rule.decision_removals) out.erase(d);
  out.insert(rule.decision_additions.begin(), rule.decision_additions.end());
  return {out.begin(), out.end()};
}

const AdaptationRule& RuleBook::upsert(AdaptationRule rule) {
  if (auto v = verdicts_.find(rule.id); v != verdicts_.end()) {
    rule.status = v->second.status;
    rule.explanation = v->second.explanation;
    rule.author = v->second.author;
    rule.timestamp = v->second.timestamp;
    if (v->second.actions) {
      rule.decision_removals = v->second.actions->first;
      rule.decision_additions = v->second.actions->second;
      rule.decision_level = true;
      rule.text = rule_text(rule);
    }
  }
  auto id = rule.id;
  auto [it, inserted] = rules_.insert_or_assign(id, std::move(rule));
  if (inserted) order_.push_back(id);
  return it->second;
}

AdaptationRule& RuleBook::get(const std::string& id) {
  auto it = rules_.find(id);
  if (it == rules_.end()) throw StateError("unknown rule '" + id + "'");
  return it->second;
}

const AdaptationRule* RuleBook::find(const std::string& id) const {
  auto it = rules_.find(id);
  return it == rules_.end() ? nullptr : &it->second;
}

std::vector<const AdaptationRule*> RuleBook::rules() const {
  std::vector<const AdaptationRule*> out;
  for (const auto& id : order_) out.push_back(&rules_.at(id));
  return out;
}

const AdaptationRule& RuleBook::transition(const std::string& id, RuleStatus to, const std::string& explanation,
                                           const std::string& author, const std::string& timestamp) {
  AdaptationRule& r = get(id);
  if (r.status != RuleStatus::kCandidate) {
    throw StateError("invalid transition " + std::string(status_name(r.status)) + " -> " +
                     std::string(status_name(to)));
  }
  AuditEntry e;
  e.rule_id = id;
  e.action = to == RuleStatus::kValidated ? "validate" : "reject";
  e.from = status_name(r.status);
  e.to = status_name(to);
  e.explanation = explanation;
  e.author = author;
  e.timestamp = timestamp;
  if (explanation.empty()) {
    if (to == RuleStatus::kValidated) throw ValidationError("validation requires an explanation");
    e.flags.push_back("empty-explanation");
  }
  r.status = to;
  r.explanation = explanation;
  r.author = author;
  r.timestamp = timestamp;
  auto& v = verdicts_[id];
  v.status = to;
  v.explanation = explanation;
  v.author = author;
  v.timestamp = timestamp;
  note(std::move(e));
  return r;
}

const AdaptationRule& RuleBook::validate(const std::string& id, const std::string& explanation,
                                         const std::string& author, const std::string& timestamp) {
  return transition(id, RuleStatus::kValidated, explanation, author, timestamp);
}

const AdaptationRule& RuleBook::reject(const std::string& id, const std::string& explanation,
                                       const std::string& author, const std::string& timestamp) {
  return transition(id, RuleStatus::kRejected, explanation, author, timestamp);
}

const AdaptationRule& RuleBook::edit_actions(const std::string& id, std::vector<std::string> removals,
                                             std::vector<std::string> additions, const std::string& author,
                                             const std::string& timestamp) {
  AdaptationRule& r = get(id);
  if (r.status != RuleStatus::kCandidate) throw StateError("only candidate rules can be edited");
  std::sort(removals.begin(), removals.end());
  removals.erase(std::unique(removals.begin(), removals.end()), removals.end());
  std::sort(additions.begin(), additions.end());
  additions.erase(std::unique(additions.begin(), additions.end()), additions.end());
  for (const auto& a : additions) {
    if (std::binary_search(removals.begin(), removals.end(), a)) {
      throw ValidationError("decision '" + a + "' is both removed and added");
    }
  }
  AuditEntry e;
  e.rule_id = id;
  e.action = "edit";
  e.from = "remove " + join(r.decision_removals, ",") + "; add " + join(r.decision_additions, ",");
  e.to = "remove " + join(removals, ",") + "; add " + join(additions, ",");
  e.author = author;
  e.timestamp = timestamp;
  r.decision_removals = removals;
  r.decision_additions = additions;
  r.decision_level = !removals.empty() || !additions.empty();
  r.text = rule_text(r);
  verdicts_[id].actions = std::make_pair(std::move(removals), std::move(additions));
  note(std::move(e));
  return r;
}

void RuleBook::note(AuditEntry entry) {
  entry.seq = audit_.size() + 1;
  audit_.push_back(std::move(entry));
}

void RuleBook::clear_rules() {
  rules_.clear();
  order_.clear();
}

void RuleBook::restore(std::map<std::string, Verdict> verdicts, std::vector<AuditEntry> audit) {
  verdicts_ = std::move(verdicts);
  audit_ = std::move(audit);
}

std::vector<std::string> item_tokens(const PropertySet& set, Part part, Marker marker) {
  std::vector<std::string> out;
  for (Ordinal p : set.members()) out.push_back(item_token(Item{p, part, marker}, *set.universe()));
  return out;
}

nlohmann::json rule_to_json(const AdaptationRule& r) {
  using nlohmann::json;
  std::vector<std::string> simplified;
  for (const auto& it : r.simplified) simplified.push_back(item_token(it, *r.universe()));
  return json{
      {"id", r.id},
      {"source_fci_id", r.source_fci_id},
      {"support_count", r.support_count},
      {"support", r.support},
      {"conditions",
       {{"pb_minus", item_tokens(r.pb_minus, Part::kPb, Marker::kMinus)},
        {"pb_equal", item_tokens(r.pb_equal, Part::kPb, Marker::kEqual)},
        {"pb_plus", item_tokens(r.pb_plus, Part::kPb, Marker::kPlus)},
        {"sol_remove", item_tokens(r.sol_remove, Part::kSol, Marker::kMinus)},
        {"sol_keep", item_tokens(r.sol_keep, Part::kSol, Marker::kEqual)},
        {"sol_add", item_tokens(r.sol_add, Part::kSol, Marker::kPlus)}}},
      {"simplified", simplified},
      {"actions",
       {{"decision_level", r.decision_level},
        {"decision_removals", r.decision_removals},
        {"decision_additions", r.decision_additions}}},
      {"warnings", r.warnings},
      {"status", status_name(r.status)},
      {"explanation", r.explanation},
      {"author", r.author},
      {"timestamp", r.timestamp},
      {"text", r.text},
  };
}

nlohmann::json audit_to_json(const AuditEntry& e) {
  return {{"seq", e.seq},       {"rule_id", e.rule_id},         {"action", e.action},
          {"from", e.from},     {"to", e.to},                   {"explanation", e.explanation},
          {"author", e.author}, {"timestamp", e.timestamp},     {"flags", e.flags}};
}

AuditEntry audit_from_json(const nlohmann::json& j) {
  AuditEntry e;
  e.seq = j.at("seq").get<std::size_t>();
  e.rule_id = j.at("rule_id").get<std::string>();
  e.action = j.at("action").get<std::string>();
  e.from = j.at("from").get<std::string>();
  e.to = j.at("to").get<std::string>();
  e.explanation = j.at("explanation").get<std::string>();
  e.author = j.at("author").get<std::string>();
  e.timestamp = j.at("timestamp").get<std::string>();
  e.flags = j.at("flags").get<std::vector<std::string>>();
  return e;
}

nlohmann::json rules_export(const std::vector<const AdaptationRule*>& rules, const std::string& kb_digest,
                            double sigma) {
  nlohmann::json out{{"format", "casemine-rules/1"}, {"kb_digest", kb_digest}, {"sigma", sigma}};
  auto arr = nlohmann::json::array();
  for (const auto* r : rules) {
    if (r->status != RuleStatus::kValidated) continue;
    auto j = rule_to_json(*r);
    j.erase("timestamp");
    j["provenance"] = {{"fci_id", r->source_fci_id},
                       {"support_count", r->support_count},
                       {"support", r->support},
                       {"sigma", sigma},
                       {"kb_digest", kb_digest}};
    arr.push_back(std::move(j));
  }
  out["rules"] = std::move(arr);
  return out;
}

}  // namespace casemine
