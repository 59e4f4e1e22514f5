#include <gtest/gtest.h>

#include <random>

#include "casemine/error.hpp"
#include "casemine/kb.hpp"
#include "casemine/miner.hpp"
#include "casemine/rules.hpp"
#include "casemine/transactions.hpp"
#include "generators.hpp"

using namespace casemine;

namespace {

// Two cases realising the marked-pair example: {a,b,c}/{A,B} and {b,c,d}/{B,C}.
const char* kPairKb = R"([cases]
s1 | a and b and c | A, B
s2 | b and c and d | B, C
)";

struct Fixture {
  KnowledgeBase kb;
  FormattedCaseBase cb;
  std::shared_ptr<SubsumptionTable> table;
  explicit Fixture(std::string_view text) : kb(parse_kb(text)), cb(format_case_base(kb)) {
    table = std::make_shared<SubsumptionTable>(*cb.universe, kb.ontology());
  }
  Item item(const char* key, Part part, Marker m) const { return {*cb.universe->find(key), part, m}; }
  Fci fci(std::vector<Item> items, std::size_t count = 1, std::size_t n = 1) const {
    std::sort(items.begin(), items.end());
    Fci f;
    f.items = items;
    f.id = fci_id(items, *cb.universe);
    f.support_count = count;
    f.support = static_cast<double>(count) / n;
    return f;
  }
  AdaptationRule rule(const Fci& f) const {
    return render_rule(prune_redundant(f, *table, *cb.universe), cb.universe, *table, kb);
  }
  std::set<std::string> keys(const PropertySet& s) const {
    std::set<std::string> out;
    for (auto o : s.members()) out.insert(cb.universe->key(o));
    return out;
  }
};

constexpr auto M = Marker::kMinus;
constexpr auto E = Marker::kEqual;
constexpr auto P = Marker::kPlus;
constexpr auto PB = Part::kPb;
constexpr auto SOL = Part::kSol;

}  // namespace

TEST(RuleText, InterpretsTheExampleItemset) {
  Fixture fx(kPairKb);
  auto r = fx.rule(fx.fci({fx.item("a", PB, M), fx.item("c", PB, E), fx.item("d", PB, P), fx.item("A", SOL, M),
                           fx.item("B", SOL, E), fx.item("C", SOL, P)}));
  EXPECT_NE(r.text.find("Phi(srce) \\ Phi(tgt) contains {a}"), std::string::npos) << r.text;
  EXPECT_NE(r.text.find("Phi(srce) & Phi(tgt) contains {c}"), std::string::npos);
  EXPECT_NE(r.text.find("Phi(tgt) \\ Phi(srce) contains {d}"), std::string::npos);
  EXPECT_NE(r.text.find("Phi(Sol(srce)) contains {A, B}"), std::string::npos);
  EXPECT_NE(r.text.find("Phi(Sol(srce)) excludes {C}"), std::string::npos);
  EXPECT_NE(r.text.find("THEN Phi(Sol(tgt)) = (Phi(Sol(srce)) \\ {A}) U {C}"), std::string::npos);
  EXPECT_TRUE(r.decision_level);
  EXPECT_EQ(r.decision_removals, std::vector<std::string>{"A"});
  EXPECT_EQ(r.decision_additions, std::vector<std::string>{"C"});
}

TEST(RuleRoundTrip, MinedPairRuleReproducesTargetSolution) {
  Fixture fx(kPairKb);
  std::vector<ItemId> codes;
  encode_pair_codes(fx.cb.cases[0], fx.cb.cases[1], codes);
  TransactionDb db;
  db.add(codes);
  MiningParams p;
  p.sigma = 1.0;
  auto fcis = make_fcis(mine_fcis(db, p), *fx.cb.universe);
  ASSERT_EQ(fcis.size(), 1u);
  auto r = fx.rule(fcis[0]);
  const auto& s1 = fx.cb.cases[0];
  const auto& s2 = fx.cb.cases[1];
  auto app = apply_rule(r, s1.problem, s1.solution, s2.problem, *fx.table);
  ASSERT_TRUE(app.applicable);
  EXPECT_EQ(*app.solution, s2.solution);
  EXPECT_EQ(apply_decisions(r, fx.kb.cases()[0].solution), fx.kb.cases()[1].solution);
}

TEST(RuleApplication, ReportsUnmetConditions) {
  Fixture fx(kPairKb);
  auto r = fx.rule(fx.fci({fx.item("a", PB, M), fx.item("d", PB, P), fx.item("A", SOL, M), fx.item("C", SOL, P)}));
  const auto& s1 = fx.cb.cases[0];
  auto app = apply_rule(r, s1.problem, s1.solution, s1.problem, *fx.table);
  EXPECT_FALSE(app.applicable);
  EXPECT_EQ(app.unmet.size(), 2u);
  EXPECT_FALSE(app.solution.has_value());
}

TEST(RuleRender, RejectsItemsetsMarkingAPropertyTwice) {
  Fixture fx(kPairKb);
  EXPECT_THROW(fx.rule(fx.fci({fx.item("a", PB, M), fx.item("a", PB, P), fx.item("A", SOL, M)})), ValidationError);
}

TEST(RuleRender, PropertyActionsAreNotDecisionLevel) {
  Fixture fx("[cases]\nx | a | A\ny | some r.b | B\n");
  auto r = fx.rule(fx.fci({fx.item("a", PB, M), fx.item("some r.b", PB, P), fx.item("A", SOL, M)}));
  EXPECT_TRUE(r.decision_level);
  Fixture gx("[ontology]\nA isa G\n[cases]\nx | a | A\ny | b | B\n");
  // Removing the non-decision G alone cannot be expressed as a decision change.
  auto s = gx.rule(gx.fci({gx.item("a", PB, M), gx.item("G", SOL, M)}));
  EXPECT_FALSE(s.decision_level);
  EXPECT_FALSE(s.warnings.empty());
}

// ---------------------------------------------------------------- pruning

TEST(Pruning, DropsImpliedItemsWithinAClass) {
  Fixture fx("[cases]\nx | (age >= 45) and (age < 70) | D\ny | (age >= 30) and (age < 45) | D\nz | (age >= 70) | D\n");
  auto ge45 = fx.item("(age >= 45)", PB, M);
  auto ge30 = fx.item("(age >= 30)", PB, M);
  auto ge30_eq = fx.item("(age >= 30)", PB, E);
  auto pruned = prune_items({ge45, ge30}, *fx.table);
  EXPECT_EQ(pruned, std::vector<Item>{ge45});
  // Different markers are different classes.
  std::vector<Item> mixed{ge45, ge30_eq};
  std::sort(mixed.begin(), mixed.end());
  EXPECT_EQ(prune_items(mixed, *fx.table), mixed);
}

TEST(Pruning, OncologyRuleKeepsMostSpecificDecisions) {
  auto kb = load_kb(std::filesystem::path(CASEMINE_DATA_DIR) / "oncology.kb");
  auto cb = format_case_base(kb);
  SubsumptionTable table(*cb.universe, kb.ontology());
  auto db = encode_database(cb);
  MiningParams p;
  p.sigma = 0.05;
  auto fcis = make_fcis(mine_fcis(db.rows, p), *cb.universe);
  bool found = false;
  for (const auto& f : filter_both_sides_changed(fcis)) {
    auto r = render_rule(prune_redundant(f, table, *cb.universe), cb.universe, table, kb);
    if (r.decision_removals == std::vector<std::string>{"Partial-Mastectomy"} &&
        r.decision_additions == std::vector<std::string>{"Radical-Mastectomy"}) {
      found = true;
      // Mastectomy is shared by both decisions, so it stays a '=' item, never a '-' one.
      for (const auto& it : r.simplified) {
        if (cb.universe->key(it.ordinal) == "Mastectomy") EXPECT_EQ(it.marker, Marker::kEqual);
      }
      EXPECT_NE(r.text.find("some tumor.(size >= 4)"), std::string::npos);
    }
  }
  EXPECT_TRUE(found);
}

TEST(Pruning, Idempotent) {
  std::mt19937_64 rng(41);
  std::size_t checked = 0;
  for (int round = 0; round < 60; ++round) {
    auto kb = gen::random_kb(rng);
    auto cb = format_case_base(kb);
    SubsumptionTable table(*cb.universe, kb.ontology());
    auto db = encode_database(cb);
    MiningParams p;
    p.sigma = 0.1;
    for (const auto& f : make_fcis(mine_fcis(db.rows, p), *cb.universe)) {
      auto once = prune_items(f.items, table);
      EXPECT_EQ(prune_items(once, table), once);
      EXPECT_TRUE(std::includes(f.items.begin(), f.items.end(), once.begin(), once.end()));
      auto v = prune_redundant(f, table, *cb.universe);
      EXPECT_EQ(v.simplified, once);
      EXPECT_EQ(v.raw, f.items);
      ++checked;
    }
  }
  EXPECT_GT(checked, 500u);
}

// ---------------------------------------------------------------- applicability

namespace {

struct Mined {
  KnowledgeBase kb;
  FormattedCaseBase cb;
  std::shared_ptr<SubsumptionTable> table;
  std::vector<Transaction> ts;
  std::vector<Fci> fcis;
};

Mined mine(std::mt19937_64& rng, double sigma) {
  Mined m;
  gen::KbShape shape;
  shape.cases = 6;
  m.kb = gen::random_kb(rng, shape);
  m.cb = format_case_base(m.kb);
  m.table = std::make_shared<SubsumptionTable>(*m.cb.universe, m.kb.ontology());
  m.ts = build_transactions(m.cb);
  auto db = encode_database(m.cb);
  MiningParams p;
  p.sigma = sigma;
  m.fcis = filter_both_sides_changed(make_fcis(mine_fcis(db.rows, p), *m.cb.universe));
  return m;
}

/// Condition check of one (part, marker) class over explicit items.
bool class_holds(const std::vector<Item>& items, Part part, Marker marker, const PropertySet& spb,
                 const PropertySet& ssol, const PropertySet& tpb) {
  for (const auto& it : items) {
    if (it.part != part || it.marker != marker) continue;
    bool ok = false;
    if (part == Part::kPb) {
      bool s = spb.contains(it.ordinal), t = tpb.contains(it.ordinal);
      ok = marker == Marker::kMinus ? (s && !t) : marker == Marker::kEqual ? (s && t) : (!s && t);
    } else {
      bool s = ssol.contains(it.ordinal);
      ok = marker == Marker::kPlus ? !s : s;
    }
    if (!ok) return false;
  }
  return true;
}

}  // namespace

TEST(Applicability, RulesApplyToEverySupportingPair) {
  std::mt19937_64 rng(42);
  std::size_t checked = 0;
  for (int round = 0; round < 40; ++round) {
    auto m = mine(rng, 0.1);
    for (const auto& f : m.fcis) {
      AdaptationRule r;
      try {
        r = render_rule(prune_redundant(f, *m.table, *m.cb.universe), m.cb.universe, *m.table, m.kb);
      } catch (const ValidationError&) {
        continue;
      }
      std::size_t support = 0;
      for (const auto& t : m.ts) {
        if (!std::includes(t.items.begin(), t.items.end(), f.items.begin(), f.items.end())) continue;
        ++support;
        const auto& a = m.cb.cases[t.first];
        const auto& b = m.cb.cases[t.second];
        auto app = apply_rule(r, a.problem, a.solution, b.problem, *m.table);
        ASSERT_TRUE(app.applicable);
        // Closed inputs give a closed result.
        EXPECT_EQ(close_upward(*app.solution, *m.table), *app.solution);
        ++checked;
      }
      EXPECT_EQ(support, f.support_count);
    }
  }
  EXPECT_GT(checked, 1000u);
}

TEST(Applicability, PruningPreservesEqualAndRemovalClasses) {
  std::mt19937_64 rng(43);
  std::size_t checked = 0;
  for (int round = 0; round < 40; ++round) {
    auto m = mine(rng, 0.1);
    for (const auto& f : m.fcis) {
      auto pruned = prune_items(f.items, *m.table);
      for (const auto& a : m.cb.cases) {
        for (const auto& b : m.cb.cases) {
          for (auto [part, marker] : {std::pair{PB, E}, std::pair{SOL, E}, std::pair{SOL, M}}) {
            EXPECT_EQ(class_holds(pruned, part, marker, a.problem, a.solution, b.problem),
                      class_holds(f.items, part, marker, a.problem, a.solution, b.problem));
            ++checked;
          }
        }
      }
    }
  }
  EXPECT_GT(checked, 10000u);
}

TEST(Applicability, PruningProblemDifferencesCanOvergeneralise) {
  // P isa Q; raw {P-, Q-} demands Q outside tgt, the pruned {P-} does not.
  Fixture fx("[ontology]\nP isa Q\n[cases]\nx | P | A\ny | Q | B\nz | R | B\n");
  std::vector<Item> raw{fx.item("P", PB, M), fx.item("Q", PB, M)};
  std::sort(raw.begin(), raw.end());
  auto pruned = prune_items(raw, *fx.table);
  ASSERT_EQ(pruned, std::vector<Item>{fx.item("P", PB, M)});
  const auto& x = fx.cb.cases[0];  // {P, Q}
  const auto& y = fx.cb.cases[1];  // {Q}
  EXPECT_TRUE(class_holds(pruned, PB, M, x.problem, x.solution, y.problem));
  EXPECT_FALSE(class_holds(raw, PB, M, x.problem, x.solution, y.problem));
  // Rendered rules keep the raw conditions, so they stay sound.
  auto r = fx.rule(fx.fci({fx.item("P", PB, M), fx.item("Q", PB, M), fx.item("A", SOL, M), fx.item("B", SOL, P)}));
  EXPECT_FALSE(apply_rule(r, x.problem, x.solution, y.problem, *fx.table).applicable);
  EXPECT_TRUE(apply_rule(r, x.problem, x.solution, fx.cb.cases[2].problem, *fx.table).applicable);
}

// ---------------------------------------------------------------- rule book

TEST(RuleBook, TransitionsAndAudit) {
  Fixture fx(kPairKb);
  RuleBook book;
  auto r = fx.rule(fx.fci({fx.item("a", PB, M), fx.item("A", SOL, M), fx.item("C", SOL, P)}));
  book.upsert(r);
  EXPECT_THROW(book.validate(r.id, "", "ana", "t0"), ValidationError);
  auto& v = book.validate(r.id, "substitution observed in practice", "ana", "t1");
  EXPECT_EQ(v.status, RuleStatus::kValidated);
  EXPECT_EQ(v.explanation, "substitution observed in practice");
  EXPECT_THROW(book.reject(r.id, "no", "ana", "t2"), StateError);
  EXPECT_THROW(book.validate("nope", "x", "ana", "t2"), StateError);
  ASSERT_EQ(book.audit().size(), 1u);
  EXPECT_EQ(book.audit()[0].from, "candidate");
  EXPECT_EQ(book.audit()[0].to, "validated");

  // Verdicts survive re-rendering.
  book.clear_rules();
  EXPECT_EQ(book.find(r.id), nullptr);
  book.upsert(r);
  EXPECT_EQ(book.find(r.id)->status, RuleStatus::kValidated);
}

TEST(RuleBook, EmptyRejectionIsFlaggedAndEditsNeedCandidates) {
  Fixture fx(kPairKb);
  RuleBook book;
  auto r1 = fx.rule(fx.fci({fx.item("a", PB, M), fx.item("A", SOL, M), fx.item("C", SOL, P)}));
  auto r2 = fx.rule(fx.fci({fx.item("d", PB, P), fx.item("A", SOL, M), fx.item("C", SOL, P)}));
  book.upsert(r1);
  book.upsert(r2);
  book.reject(r1.id, "", "ana", "t");
  EXPECT_EQ(book.audit().back().flags, std::vector<std::string>{"empty-explanation"});
  EXPECT_THROW(book.edit_actions(r1.id, {"A"}, {}, "ana", "t"), StateError);
  EXPECT_THROW(book.edit_actions(r2.id, {"A"}, {"A"}, "ana", "t"), ValidationError);
  auto& e = book.edit_actions(r2.id, {"A"}, {"B", "C"}, "ana", "t");
  EXPECT_EQ(e.decision_additions, (std::vector<std::string>{"B", "C"}));
  EXPECT_EQ(apply_decisions(e, {"A", "D"}), (std::vector<std::string>{"B", "C", "D"}));
}

TEST(RuleExport, OnlyValidatedRulesWithProvenance) {
  Fixture fx(kPairKb);
  RuleBook book;
  auto r = fx.rule(fx.fci({fx.item("a", PB, M), fx.item("A", SOL, M), fx.item("C", SOL, P)}, 3, 4));
  book.upsert(r);
  auto empty = rules_export(book.rules(), fx.kb.digest(), 0.1);
  EXPECT_TRUE(empty.at("rules").empty());
  EXPECT_EQ(empty.at("format"), "casemine-rules/1");
  book.validate(r.id, "ok", "ana", "2026-01-01T00:00:00Z");
  auto doc = rules_export(book.rules(), fx.kb.digest(), 0.1);
  ASSERT_EQ(doc.at("rules").size(), 1u);
  const auto& j = doc.at("rules")[0];
  EXPECT_EQ(j.at("provenance").at("fci_id"), r.source_fci_id);
  EXPECT_EQ(j.at("provenance").at("support_count"), 3);
  EXPECT_FALSE(j.contains("timestamp"));
  EXPECT_EQ(j.at("explanation"), "ok");
}
