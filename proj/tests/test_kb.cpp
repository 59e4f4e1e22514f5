#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "casemine/error.hpp"
#include "casemine/kb.hpp"
#include "generators.hpp"

using namespace casemine;

namespace {

const char* kSmall = R"(# comment
[ontology]
Left-Breast isa Breast
Partial-Mastectomy isa Mastectomy
[cases]
a1 | Patient and (age >= 45) and some tumor.some localization.Left-Breast | Partial-Mastectomy
a2 | Patient and (age < 45) | Partial-Mastectomy, Chemotherapy
)";

}  // namespace

TEST(Kb, ParsesSectionsAndCases) {
  auto kb = parse_kb(kSmall);
  EXPECT_EQ(kb.ontology().axioms().size(), 2u);
  ASSERT_EQ(kb.cases().size(), 2u);
  EXPECT_EQ(kb.cases()[1].solution, (std::vector<std::string>{"Chemotherapy", "Partial-Mastectomy"}));
  EXPECT_EQ(kb.find_case("a2"), 1u);
  EXPECT_EQ(kb.find_case("zz"), KnowledgeBase::npos);
  EXPECT_TRUE(kb.decision_names().count("Chemotherapy"));
  EXPECT_TRUE(kb.occurs("Breast"));
  EXPECT_EQ(kb.constraints_of("age"), (ConstraintSet{Constraint::ge(45), Constraint::lt(45)}));
}

TEST(Kb, EmptyCaseListIsValid) {
  auto kb = parse_kb("[ontology]\nA isa B\n[cases]\n");
  EXPECT_TRUE(kb.cases().empty());
}

TEST(Kb, ParseErrorsCarryLine) {
  try {
    parse_kb("[ontology]\nA isa B\n[cases]\nx1 | A and or B | D\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
  try {
    parse_kb("[cases]\nx1 | A and | D\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_GT(e.column(), 0u);
  }
  EXPECT_THROW(parse_kb("[weird]\n"), ParseError);
  EXPECT_THROW(parse_kb("A isa B\n"), ParseError);
}

TEST(Kb, ValidationErrors) {
  EXPECT_THROW(parse_kb("[cases]\nx1 | A | D\nx1 | B | D\n"), ValidationError);
  EXPECT_THROW(parse_kb("[cases]\nx1 | (age >= 70) and (age < 45) | D\n"), ValidationError);
  EXPECT_THROW(parse_kb("[ontology]\nD := some r.D\n[cases]\n"), CyclicDefinition);
  EXPECT_THROW(parse_kb("[ontology]\nD := A and some r.B\n[cases]\nx1 | A | D\n"), ValidationError);
}

TEST(Kb, RenderRoundTripKeepsDigest) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    auto kb = gen::random_kb(rng);
    auto again = parse_kb(render_kb(kb));
    EXPECT_EQ(again.digest(), kb.digest());
    EXPECT_EQ(render_kb(again), render_kb(kb));
  }
}

TEST(Kb, DigestIgnoresLineOrder) {
  auto a = parse_kb("[ontology]\nA isa B\nC isa D\n[cases]\nx | A | D\ny | C | D\n");
  auto b = parse_kb("[ontology]\nC isa D\nA isa B\n[cases]\ny | C | D\nx | A | D\n");
  EXPECT_EQ(a.digest(), b.digest());
  auto c = parse_kb("[ontology]\nC isa D\nA isa B\n[cases]\ny | C | D\nx | A and B | D\n");
  EXPECT_NE(a.digest(), c.digest());
}

TEST(Kb, FilesAreWrittenAtomically) {
  auto dir = std::filesystem::temp_directory_path() / "casemine-kb-test";
  std::filesystem::create_directories(dir);
  auto path = dir / "kb.txt";
  write_file_atomic(path, kSmall);
  EXPECT_EQ(read_file(path), kSmall);
  EXPECT_EQ(load_kb(path).digest(), parse_kb(kSmall).digest());
  EXPECT_THROW(read_file(dir / "missing.txt"), IoError);
  EXPECT_THROW(write_file_atomic(dir / "no" / "such" / "dir.txt", "x"), IoError);
  std::filesystem::remove_all(dir);
}
