#include <gtest/gtest.h>

#include <fstream>
#include <sstream>
#include <thread>

#include "casemine/error.hpp"
#include "casemine/session.hpp"
#include "casemine/synthetic.hpp"

using namespace casemine;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string oncology() { return read_file(std::filesystem::path(CASEMINE_DATA_DIR) / "oncology.kb"); }

Session::Clock fixed_clock() {
  return [] { return std::string("2026-01-01T00:00:00Z"); };
}

std::string synthetic_kb(std::size_t n) {
  std::ifstream in(std::filesystem::path(CASEMINE_DATA_DIR) / "synthetic-650.json");
  auto spec = parse_synthetic_spec(nlohmann::json::parse(in));
  spec.n_cases = n;
  return generate_synthetic(spec).kb_text;
}

}  // namespace

TEST(Session, StepsFormAPrefix) {
  Session s(oncology(), {}, fixed_clock());
  EXPECT_EQ(s.completed_step(), 0);
  EXPECT_THROW(s.run_step(2), StateError);
  s.run_through(7);
  EXPECT_EQ(s.completed_step(), 7);
  EXPECT_EQ(s.digests().size(), 7u);
  EXPECT_THROW(s.run_step(9), StateError);
  s.run_step(8);
  s.run_step(9);
  EXPECT_FALSE(s.rules().empty());
  EXPECT_EQ(s.descriptor().at("status"), "idle");
}

TEST(Session, ParamChangesInvalidateDownstream) {
  Session s(oncology(), {}, fixed_clock());
  s.run_through(9);
  auto before = s.digests();
  auto p = s.params();
  p.threads = 4;
  s.set_params(p);
  EXPECT_EQ(s.completed_step(), 9);  // threads never change results
  p.sigma = 0.25;
  s.set_params(p);
  EXPECT_EQ(s.completed_step(), 6);
  s.run_through(9);
  auto after = s.digests();
  for (int k = 1; k <= 6; ++k) EXPECT_EQ(after.at(k), before.at(k));
  EXPECT_NE(after.at(7), before.at(7));
  p.k_overlap = 2;
  s.set_params(p);
  EXPECT_EQ(s.completed_step(), 4);
}

TEST(Session, ParamsJsonValidation) {
  SessionParams p;
  p.sigma = 0.3;
  p.k_overlap = 2;
  p.fcis.min_items = 3;
  EXPECT_EQ(params_from_json(params_to_json(p)), p);
  EXPECT_THROW(params_from_json({{"sigma", 1.5}}), ValidationError);
  EXPECT_THROW(params_from_json({{"bogus", 1}}), ValidationError);
  EXPECT_THROW(params_from_json({{"threads", 0}}), ValidationError);
  EXPECT_EQ(params_from_json({{"sigma", 0.5}}, p).k_overlap, 2u);
}

TEST(Session, GoBackRestoresPrefix) {
  Session s(oncology(), {}, fixed_clock());
  EXPECT_THROW(s.go_back(4), StateError);
  s.run_through(9);
  auto full = s.digests();
  s.go_back(4);
  EXPECT_EQ(s.completed_step(), 3);
  auto kept = s.digests();
  ASSERT_EQ(kept.size(), 3u);
  for (int k = 1; k <= 3; ++k) EXPECT_EQ(kept.at(k), full.at(k));
  EXPECT_FALSE(s.artifacts().has(4));
  s.run_through(9);
  EXPECT_EQ(s.digests(), full);
  EXPECT_EQ(s.history().back().at("op"), "run");
}

TEST(Session, InterruptRestoresPreStepState) {
  for (int step : {5, 7}) {
    Session s(synthetic_kb(650), {}, fixed_clock());
    s.run_through(step - 1);
    auto before = s.digests();
    std::thread stopper([&] {
      while (s.running_step() != step) std::this_thread::yield();
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
      s.interrupt();
    });
    EXPECT_THROW(s.run_step(step), Interrupted);
    stopper.join();
    EXPECT_EQ(s.status(), SessionStatus::kInterrupted);
    EXPECT_EQ(s.completed_step(), step - 1);
    EXPECT_EQ(s.digests(), before);
    EXPECT_EQ(s.history().back().at("op"), "interrupted");
    EXPECT_FALSE(s.interrupt());
  }
}

TEST(Session, ConcurrentMutationConflicts) {
  Session s(synthetic_kb(650), {}, fixed_clock());
  s.run_through(4);
  std::thread runner([&] { EXPECT_THROW(s.run_step(5), Interrupted); });
  while (s.running_step() != 5) std::this_thread::yield();
  EXPECT_THROW(s.run_step(5), Conflict);
  EXPECT_THROW(s.set_params(SessionParams{}), Conflict);
  EXPECT_THROW(s.go_back(2), Conflict);
  EXPECT_NO_THROW(s.summary());
  s.interrupt();
  runner.join();
}

TEST(Session, ReplayReproducesDigests) {
  Session s(oncology(), {}, fixed_clock());
  auto p = s.params();
  p.sigma = 0.2;
  s.set_params(p);
  s.run_through(9);
  s.go_back(7);
  p.sigma = 0.15;
  s.set_params(p);
  s.run_through(9);
  auto id = s.rules().at(0).id;
  s.validate_rule(id, "checked", "analyst");
  auto again = Session::replay(oncology(), s.history(), fixed_clock());
  EXPECT_EQ(again->digests(), s.digests());
  EXPECT_EQ(again->rule(id)->status, RuleStatus::kValidated);
  EXPECT_EQ(again->export_text("rules"), s.export_text("rules"));
}

TEST(Session, SaveAndRestore) {
  Session s(oncology(), "onc", fixed_clock());
  s.run_through(9);
  auto id = s.rules().at(1).id;
  s.reject_rule(id, "too broad", "analyst");
  auto path = std::filesystem::temp_directory_path() / "casemine-session-test.json";
  s.save(path);
  auto back = Session::load(path, fixed_clock());
  std::filesystem::remove(path);
  EXPECT_EQ(back->id(), "onc");
  EXPECT_EQ(back->digests(), s.digests());
  EXPECT_EQ(back->rule(id)->status, RuleStatus::kRejected);
  EXPECT_EQ(back->audit().size(), s.audit().size());

  auto snap = s.snapshot();
  snap["digests"]["7"] = "0000";
  EXPECT_THROW(Session::restore(snap), IoError);
}

TEST(Session, FciQueries) {
  Session s(oncology(), {}, fixed_clock());
  s.run_through(8);
  FciQuery q;
  q.limit = 1000;
  auto all = s.query_fcis(q);
  ASSERT_GT(all.total, 0u);
  EXPECT_EQ(all.items.size(), all.total);
  for (std::size_t i = 1; i < all.items.size(); ++i) EXPECT_GE(all.items[i - 1].support, all.items[i].support);

  q.sort = "items";
  q.descending = false;
  auto by_items = s.query_fcis(q);
  for (std::size_t i = 1; i < by_items.items.size(); ++i) {
    EXPECT_LE(by_items.items[i - 1].item_count, by_items.items[i].item_count);
  }

  q.offset = all.total + 5;
  EXPECT_TRUE(s.query_fcis(q).items.empty());
  EXPECT_EQ(s.query_fcis(q).total, all.total);

  FciQuery g;
  g.group = true;
  g.limit = 1000;
  std::size_t grouped = 0;
  for (const auto& [sig, n] : s.query_fcis(g).groups) grouped += n;
  EXPECT_EQ(grouped, all.total);

  FciQuery bad;
  bad.sort = "colour";
  EXPECT_THROW(s.query_fcis(bad), ValidationError);

  auto detail = s.fci_detail(all.items[0].fci_id);
  ASSERT_TRUE(detail.has_value());
  EXPECT_EQ(detail->raw, all.items[0].raw);
  EXPECT_FALSE(s.fci_detail("nope").has_value());
}

TEST(Session, ApplyOnSupportingPair) {
  Session s(oncology(), {}, fixed_clock());
  s.run_through(9);
  auto a = s.artifacts();
  const auto& db = *a.transactions;
  const auto& kb = *a.kb;
  std::size_t checked = 0;
  for (const auto& r : s.rules()) {
    auto view = s.fci_detail(r.source_fci_id);
    ASSERT_TRUE(view.has_value());
    std::vector<ItemId> need;
    for (const auto& it : view->raw) need.push_back(it.code());
    std::sort(need.begin(), need.end());
    for (std::size_t t = 0; t < db.rows.size(); ++t) {
      auto row = db.rows[t];
      if (!std::includes(row.begin(), row.end(), need.begin(), need.end())) continue;
      const auto& src = db.case_ids[db.pairs[t].first];
      const auto& tgt = db.case_ids[db.pairs[t].second];
      const Case* target = nullptr;
      for (const auto& c : kb.cases()) {
        if (c.id == tgt) target = &c;
      }
      auto res = s.apply(r.id, src, render_concept(target->problem));
      EXPECT_TRUE(res.application.applicable) << r.id << " " << src << "->" << tgt;
      ++checked;
      break;
    }
  }
  EXPECT_GT(checked, 0u);
  EXPECT_THROW(s.apply(s.rules()[0].id, "no-such-case", "Patient"), ValidationError);
}

TEST(Session, Exports) {
  Session s(oncology(), {}, fixed_clock());
  EXPECT_THROW(s.export_text("fcis"), StateError);
  s.run_through(9);
  auto tx = s.export_text("transactions");
  EXPECT_EQ(tx.rfind("# kb-digest ", 0), 0u);
  auto fcis = s.export_text("fcis");
  EXPECT_NE(fcis.find("# sigma "), std::string::npos);
  auto cand = nlohmann::json::parse(s.export_text("candidates"));
  EXPECT_EQ(cand.at("format"), "casemine-candidates/1");
  auto snap = nlohmann::json::parse(s.export_text("session"));
  EXPECT_EQ(snap.at("format"), "casemine-session/1");
  EXPECT_THROW(s.export_text("pdf"), ValidationError);
}
