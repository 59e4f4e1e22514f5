// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "casemine/kb.hpp"
#include "casemine/miner.hpp"
#include "casemine/phi.hpp"
#include "casemine/rules.hpp"
#include "casemine/session.hpp"
#include "casemine/synthetic.hpp"
#include "casemine/transactions.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace casemine;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::set<std::string> keys(const PropertySet& s) {
  std::set<std::string> out;
  for (auto o : s.members()) out.insert(s.universe()->key(o));
  return out;
}

std::set<std::string> canon(std::initializer_list<const char*> items) {
  std::set<std::string> out;
  for (const char* s : items) out.insert(parse_concept(s).text());
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SyntheticSpec load_spec(const char* name) {
  return parse_synthetic_spec(nlohmann::json::parse(read_file(fs::path(CASEMINE_DATA_DIR) / name)));
}

const char* kPairKb = "[cases]\ns1 | a and b and c | A, B\ns2 | b and c and d | B, C\n";

Outcome pair_fixture() {
  auto t0 = Clock::now();
  auto kb = parse_kb(kPairKb);
  auto cb = format_case_base(kb);
  auto tr = encode_pair(cb.cases[0].problem, cb.cases[1].problem, cb.cases[0].solution, cb.cases[1].solution);
  std::set<std::string> got;
  for (const auto& it : tr.items) got.insert(item_token(it, *cb.universe));
  std::set<std::string> want{"a|pb|-", "b|pb|=", "c|pb|=", "d|pb|+", "A|sol|-", "B|sol|=", "C|sol|+"};
  double s = seconds_since(t0);
  return {got == want && s < 1.0, std::to_string(got.size()) + " items, " + std::to_string(s) + " s"};
}

Outcome phi_fixtures() {
  auto t0 = Clock::now();
  auto kb = load_kb(fs::path(CASEMINE_DATA_DIR) / "oncology.kb");
  auto cb = format_case_base(kb);
  std::set<std::string> src;
  for (const auto& c : phi(kb.cases()[0].problem, kb)) src.insert(c.text());
  std::set<std::string> pm;
  for (const auto& c : phi(Concept::atomic("Partial-Mastectomy"), kb)) pm.insert(c.text());
  bool ok = src == canon({"Patient", "(age >= 30)", "(age >= 45)", "(age < 70)", "some tumor.(size >= 4)",
                          "some tumor.some localization.Left-Breast", "some tumor.some localization.Breast"}) &&
            pm == canon({"Partial-Mastectomy", "Mastectomy", "Surgery", "Therapeutic-Decision"}) &&
            keys(cb.cases[0].problem) == src;
  double s = seconds_since(t0);
  return {ok && s < 1.0, "|Phi(srce)| = " + std::to_string(src.size()) + ", |Phi(Partial-Mastectomy)| = " +
                             std::to_string(pm.size())};
}

Outcome dual_path() {
  std::mt19937_64 rng(6006);
  std::size_t kbs = 0, concepts = 0, mismatches = 0;
  for (int round = 0; round < 120; ++round) {
    gen::KbShape shape;
    shape.atomics = 3 + static_cast<int>(rng() % 6);
    shape.max_depth = 3;
    shape.cases = 2 + static_cast<int>(rng() % 5);
    auto kb = gen::random_kb(rng, shape);
    auto cb = format_case_base(kb);
    const auto& u = *cb.universe;
    for (const auto& fc : cb.cases) {
      const auto& c = kb.cases()[fc.case_index].problem;
      std::set<std::string> by_filter;
      for (Ordinal p = 0; p < u.size(); ++p) {
        if (is_subsumed_by(kb.ontology(), c, u[p])) by_filter.insert(u.key(p));
      }
      if (keys(fc.problem) != by_filter) ++mismatches;
      ++concepts;
    }
    ++kbs;
  }
  return {mismatches == 0 && kbs >= 100,
          std::to_string(kbs) + " KBs, " + std::to_string(concepts) + " case concepts, " +
              std::to_string(mismatches) + " mismatches"};
}

Outcome miner_oracle() {
  auto t0 = Clock::now();
  std::mt19937_64 rng(7007);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t dbs = 0, mismatches = 0;
  for (int seed = 0; seed < 250; ++seed) {
    TransactionDb db;
    ItemId bound = 1 + static_cast<ItemId>(rng() % 12);
    std::size_t rows = 1 + rng() % 64;
    double density = 0.15 + 0.7 * unit(rng);
    for (std::size_t t = 0; t < rows; ++t) {
      std::vector<ItemId> row;
      for (ItemId i = 0; i < bound; ++i) {
        if (unit(rng) < density) row.push_back(i);
      }
      db.add(row);
    }
    double sigma = unit(rng) * 0.6;
    auto want = oracle::closed_frequent(db, min_support_count(sigma, db.size()));
    std::map<std::vector<ItemId>, std::size_t> got;
    for (const auto& f : mine_fcis(db, {.sigma = sigma})) got.emplace(f.items, f.support_count);
    if (got != want) ++mismatches;
    ++dbs;
  }
  double s = seconds_since(t0);
  return {mismatches == 0 && dbs >= 200 && s < 60.0,
          std::to_string(dbs) + " databases, " + std::to_string(mismatches) + " mismatches, " + std::to_string(s) +
              " s"};
}

Outcome planted_recovery() {
  auto spec = load_spec("planted-200.json");
  auto r = generate_synthetic(spec);
  const auto& L = r.ledger.at(0);
  auto cb = format_case_base(r.kb);
  SubsumptionTable table(*cb.universe, r.kb.ontology());
  auto db = encode_database(cb);
  MiningParams p;
  p.sigma = 0.15;
  auto fcis = make_fcis(mine_fcis(db.rows, p), *cb.universe);
  std::set<std::string> want(L.pattern.begin(), L.pattern.end());
  std::optional<double> found;
  for (const auto& f : fcis) {
    auto v = prune_redundant(f, table, *cb.universe);
    std::set<std::string> got;
    for (const auto& it : v.simplified) got.insert(item_token(it, *cb.universe));
    if (got == want) found = v.support;
  }
  std::ostringstream os;
  os << "n = " << spec.n_cases << ", sigma = " << p.sigma << ", expected " << L.expected_support;
  if (!found) return {false, os.str() + ", pattern not found"};
  os << ", mined " << *found;
  return {std::abs(*found - L.expected_support) <= 0.005 && p.sigma < L.expected_support, os.str()};
}

Outcome round_trip() {
  auto kb = parse_kb(kPairKb);
  auto cb = format_case_base(kb);
  SubsumptionTable table(*cb.universe, kb.ontology());
  std::vector<ItemId> codes;
  encode_pair_codes(cb.cases[0], cb.cases[1], codes);
  TransactionDb db;
  db.add(codes);
  auto fcis = make_fcis(mine_fcis(db, {.sigma = 1.0}), *cb.universe);
  if (fcis.size() != 1) return {false, std::to_string(fcis.size()) + " FCIs at sigma = 1"};
  auto rule = render_rule(prune_redundant(fcis[0], table, *cb.universe), cb.universe, table, kb);
  auto app = apply_rule(rule, cb.cases[0].problem, cb.cases[0].solution, cb.cases[1].problem, table);
  bool ok = app.applicable && app.solution && *app.solution == cb.cases[1].solution;
  return {ok, ok ? "result equals Phi(Sol2)" : "result differs"};
}

Outcome scale_proxy() {
  auto spec = load_spec("synthetic-650.json");
  auto kb_text = generate_synthetic(spec).kb_text;
  std::vector<std::string> digests;
  double worst = 0;
  nlohmann::json summary;
  for (unsigned threads : {1u, 1u, 1u, 4u}) {
    Session s(kb_text);
    auto params = s.params();
    params.sigma = 0.10;
    params.threads = threads;
    s.set_params(params);
    auto t0 = Clock::now();
    s.run_through(8);
    worst = std::max(worst, seconds_since(t0));
    digests.push_back(s.digests().at(7));
    summary = s.summary();
  }
  bool same = std::all_of(digests.begin(), digests.end(), [&](const std::string& d) { return d == digests[0]; });
  std::ostringstream os;
  os << "n = " << spec.n_cases << ", transactions " << summary.value("transactions", 0) << ", |P| "
     << summary.value("properties", 0) << ", FCIs " << summary.value("fcis", 0) << ", slowest run " << worst
     << " s, digests " << (same ? "identical" : "DIFFER") << " over 3 runs + threads=4";
  return {same && worst <= 300.0, os.str()};
}

// Runs a property suite from a unit-test binary; the binaries carry the generators and oracles.
Outcome invariants() {
  struct Suite {
    const char* binary;
    const char* filter;
  };
  const Suite suites[] = {
      {CASEMINE_TEST_ONTOLOGY, "SubsumptionLaws.*"},
      {CASEMINE_TEST_TRANSACTIONS, "TransactionProperties.*"},
      {CASEMINE_TEST_MINER, "MinerProperties.*:MinerOracle.*"},
      {CASEMINE_TEST_PHI, "PhiDualPath.ImagesAreDeductivelyClosed"},
      {CASEMINE_TEST_RULES, "Pruning.Idempotent:Applicability.*"},
      {CASEMINE_TEST_SESSION, "Session.ReplayReproducesDigests:Session.GoBackRestoresPrefix"},
  };
  std::string failed;
  for (const auto& s : suites) {
    std::string cmd = std::string(s.binary) + " --gtest_brief=1 --gtest_filter='" + s.filter + "' > /dev/null 2>&1";
    int status = std::system(cmd.c_str());
    if (!(WIFEXITED(status) && WEXITSTATUS(status) == 0)) failed += std::string(failed.empty() ? "" : ", ") + s.filter;
  }
  return {failed.empty(), failed.empty() ? "6 property suites" : "failed: " + failed};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"pair-encoding fixture", pair_fixture},
      {"phi fixtures", phi_fixtures},
      {"phi dual-path oracle", dual_path},
      {"miner brute-force oracle", miner_oracle},
      {"planted-rule recovery", planted_recovery},
      {"sigma=1 round trip", round_trip},
      {"scale proxy (n=650, sigma=0.10)", scale_proxy},
      {"invariant suites", invariants},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << " | " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
