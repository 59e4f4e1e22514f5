#include <gtest/gtest.h>

#include <random>

#include "casemine/error.hpp"
#include "casemine/kb.hpp"
#include "casemine/phi.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace casemine;

namespace {

std::set<std::string> texts(const std::vector<Concept>& cs) {
  std::set<std::string> out;
  for (const auto& c : cs) out.insert(c.text());
  return out;
}

std::set<std::string> texts(const PropertySet& s) {
  std::set<std::string> out;
  for (auto o : s.members()) out.insert(s.universe()->key(o));
  return out;
}

std::set<std::string> canon(std::initializer_list<const char*> items) {
  std::set<std::string> out;
  for (const char* s : items) out.insert(parse_concept(s).text());
  return out;
}

// Age constraints {<30, >=30, <45, >=45, <70, >=70}, size {<4, >=4};
// Patient has no strict ancestor, Left-Breast only Breast.
const char* kOncology = R"([ontology]
Left-Breast isa Breast
Partial-Mastectomy isa Mastectomy
Mastectomy isa Surgery
Surgery isa Therapeutic-Decision
[cases]
srce | Patient and (age >= 45) and (age < 70) and some tumor.((size >= 4) and some localization.Left-Breast) | Partial-Mastectomy
young | Patient and (age < 30) and some tumor.(size < 4) | Partial-Mastectomy
mid | Patient and (age >= 30) and (age < 45) | Partial-Mastectomy
old | Patient and (age >= 70) | Partial-Mastectomy
)";

}  // namespace

TEST(PhiFixture, SourceProblemHasSevenProperties) {
  auto kb = parse_kb(kOncology);
  auto got = texts(phi(kb.cases()[0].problem, kb));
  auto want = canon({"Patient", "(age >= 30)", "(age >= 45)", "(age < 70)", "some tumor.(size >= 4)",
                     "some tumor.some localization.Left-Breast", "some tumor.some localization.Breast"});
  EXPECT_EQ(got, want);
  EXPECT_EQ(got.size(), 7u);
}

TEST(PhiFixture, PartialMastectomyHasFourProperties) {
  auto kb = parse_kb(kOncology);
  auto got = texts(phi(Concept::atomic("Partial-Mastectomy"), kb));
  EXPECT_EQ(got, canon({"Partial-Mastectomy", "Mastectomy", "Surgery", "Therapeutic-Decision"}));
}

TEST(PhiFixture, SevenPropertiesEnterTheUniverse) {
  auto kb = parse_kb(kOncology);
  auto cb = format_case_base(kb);
  auto src = texts(cb.cases[0].problem);
  EXPECT_EQ(src.size(), 7u);
  for (const auto& k : src) EXPECT_TRUE(cb.universe->find(k).has_value());
}

TEST(PhiFixture, BundledOncologyKb) {
  auto kb = load_kb(std::filesystem::path(CASEMINE_DATA_DIR) / "oncology.kb");
  auto got = texts(phi(kb.cases()[0].problem, kb));
  EXPECT_EQ(got, canon({"Patient", "(age >= 30)", "(age >= 45)", "(age < 70)", "some tumor.(size >= 4)",
                        "some tumor.some localization.Left-Breast", "some tumor.some localization.Breast"}));
}

TEST(Phi, UnknownPropertiesAreDroppedWithWarning) {
  auto kb = parse_kb(kOncology);
  auto cb = format_case_base(kb);
  std::vector<std::string> warnings;
  auto s = phi_set(parse_concept("Patient and some tumor.Patient"), kb, cb.universe, &warnings);
  EXPECT_EQ(texts(s), canon({"Patient"}));
  EXPECT_FALSE(warnings.empty());
}

TEST(PhiDualPath, RecursiveEqualsSubsumptionFilter) {
  std::mt19937_64 rng(2024);
  std::size_t kbs = 0, concepts = 0;
  for (int round = 0; round < 150; ++round) {
    gen::KbShape shape;
    shape.atomics = 3 + static_cast<int>(rng() % 6);  // <= 8
    shape.cases = 2 + static_cast<int>(rng() % 5);
    auto kb = gen::random_kb(rng, shape);
    auto cb = format_case_base(kb);
    const auto& u = *cb.universe;
    const auto& o = kb.ontology();
    for (const auto& fc : cb.cases) {
      const auto& c = kb.cases()[fc.case_index];
      std::set<std::string> by_filter, by_oracle;
      for (Ordinal p = 0; p < u.size(); ++p) {
        if (is_subsumed_by(o, c.problem, u[p])) by_filter.insert(u.key(p));
        if (oracle::has_property(c.problem, u[p], o)) by_oracle.insert(u.key(p));
      }
      auto recursive = texts(fc.problem);
      EXPECT_EQ(recursive, by_filter) << c.problem.text();
      EXPECT_EQ(recursive, by_oracle) << c.problem.text();

      std::vector<Concept> decs;
      for (const auto& d : c.solution) decs.push_back(Concept::atomic(d));
      std::set<std::string> sol_filter;
      for (Ordinal p = 0; p < u.size(); ++p) {
        if (std::any_of(decs.begin(), decs.end(), [&](const Concept& d) { return is_subsumed_by(o, d, u[p]); })) {
          sol_filter.insert(u.key(p));
        }
      }
      EXPECT_EQ(texts(fc.solution), sol_filter);
      ++concepts;
    }
    ++kbs;
  }
  EXPECT_GE(kbs, 100u);
  EXPECT_GT(concepts, 300u);
}

TEST(PhiDualPath, ImagesAreDeductivelyClosed) {
  std::mt19937_64 rng(77);
  for (int round = 0; round < 100; ++round) {
    auto kb = gen::random_kb(rng);
    auto cb = format_case_base(kb);
    SubsumptionTable table(*cb.universe, kb.ontology());
    for (const auto& fc : cb.cases) {
      EXPECT_EQ(close_upward(fc.problem, table), fc.problem);
      EXPECT_EQ(close_upward(fc.solution, table), fc.solution);
    }
  }
}

TEST(SubsumptionTable, MatchesPairwiseSubsumption) {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 40; ++round) {
    auto kb = gen::random_kb(rng);
    auto cb = format_case_base(kb);
    const auto& u = *cb.universe;
    SubsumptionTable t(u, kb.ontology());
    for (Ordinal p = 0; p < u.size(); ++p) {
      for (Ordinal q = 0; q < u.size(); ++q) {
        EXPECT_EQ(t.subsumed(p, q), is_subsumed_by(kb.ontology(), u[p], u[q]));
      }
    }
  }
}

TEST(PropertySet, AlgebraAndUniverseChecks) {
  auto u = std::make_shared<PropertyUniverse>();
  for (const char* n : {"a", "b", "c", "d"}) u->add(Concept::atomic(n));
  UniversePtr up = u;
  PropertySet x(up, std::vector<Ordinal>{0, 1, 2});
  PropertySet y(up, std::vector<Ordinal>{1, 2, 3});
  EXPECT_EQ((x - y).members(), std::vector<Ordinal>{0});
  EXPECT_EQ((x & y).members(), (std::vector<Ordinal>{1, 2}));
  EXPECT_EQ((x | y).count(), 4u);
  EXPECT_TRUE((x & y).is_subset_of(x));
  EXPECT_TRUE(x.intersects(y));
  auto other = std::make_shared<PropertyUniverse>(*u);
  PropertySet z(UniversePtr(other), std::vector<Ordinal>{0});
  EXPECT_THROW((void)(x | z), UniverseMismatch);
}
