#include "casemine/session.hpp"

#include <algorithm>
#include <ctime>
#include <ostream>
#include <set>
#include <sstream>

#include "casemine/digest.hpp"
#include "casemine/error.hpp"
#include "casemine/miner.hpp"

namespace casemine {

using nlohmann::json;

std::string_view step_name(int step) {
  static constexpr std::array<std::string_view, 10> kNames{
      "",         "load", "select-cases", "format", "filter-properties", "encode", "filter-transactions",
      "mine",     "filter-fcis", "rules"};
  if (step < kFirstStep || step > kLastStep) return "unknown";
  return kNames[static_cast<std::size_t>(step)];
}

std::string_view status_name(SessionStatus s) {
  switch (s) {
    case SessionStatus::kIdle: return "idle";
    case SessionStatus::kRunning: return "running";
    case SessionStatus::kInterrupted: return "interrupted";
  }
  return "idle";
}

// ---------------------------------------------------------------- params

namespace {

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
void read_opt(const json& j, const char* key, std::optional<T>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    out.reset();
  } else {
    out = j.at(key).get<T>();
  }
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const char* where) {
  if (!j.is_object()) throw ValidationError(std::string(where) + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw ValidationError(std::string(where) + ": unknown key '" + k + "'");
    }
  }
}

void check_fraction(const std::optional<double>& v, const char* what) {
  if (v && !(*v >= 0.0 && *v <= 1.0)) throw ValidationError(std::string(what) + " must be in [0, 1]");
}

}  // namespace

json params_to_json(const SessionParams& p) {
  return {
      {"cases", {{"include", p.cases.include_ids}, {"exclude", p.cases.exclude_ids}}},
      {"properties", {{"include", p.properties.include_keys}, {"exclude", p.properties.exclude_keys}}},
      {"k_overlap", opt(p.k_overlap)},
      {"transactions",
       {{"require", p.transactions.require_tokens},
        {"exclude", p.transactions.exclude_tokens},
        {"min_items", opt(p.transactions.min_items)},
        {"max_items", opt(p.transactions.max_items)}}},
      {"sigma", p.sigma},
      {"budget_seconds", opt(p.budget_seconds)},
      {"max_itemsets", opt(p.max_itemsets)},
      {"threads", p.threads},
      {"fcis",
       {{"both_sides", p.fcis.both_sides},
        {"min_support", opt(p.fcis.min_support)},
        {"max_support", opt(p.fcis.max_support)},
        {"min_items", opt(p.fcis.min_items)},
        {"max_items", opt(p.fcis.max_items)},
        {"require", p.fcis.require_tokens},
        {"exclude", p.fcis.exclude_tokens}}},
  };
}

SessionParams params_from_json(const json& j, const SessionParams& base) {
  SessionParams p = base;
  try {
    check_keys(j,
               {"cases", "properties", "k_overlap", "transactions", "sigma", "budget_seconds", "max_itemsets",
                "threads", "fcis"},
               "params");
    if (j.contains("cases")) {
      const auto& c = j.at("cases");
      check_keys(c, {"include", "exclude"}, "cases");
      p.cases.include_ids = c.value("include", p.cases.include_ids);
      p.cases.exclude_ids = c.value("exclude", p.cases.exclude_ids);
    }
    if (j.contains("properties")) {
      const auto& c = j.at("properties");
      check_keys(c, {"include", "exclude"}, "properties");
      p.properties.include_keys = c.value("include", p.properties.include_keys);
      p.properties.exclude_keys = c.value("exclude", p.properties.exclude_keys);
    }
    if (j.contains("k_overlap")) {
      const auto& k = j.at("k_overlap");
      if (k.is_null()) {
        p.k_overlap.reset();
      } else {
        if (!k.is_number_integer() || k.get<long long>() < 0) throw ValidationError("k_overlap must be a non-negative integer");
        p.k_overlap = k.get<std::size_t>();
      }
    }
    if (j.contains("transactions")) {
      const auto& t = j.at("transactions");
      check_keys(t, {"require", "exclude", "min_items", "max_items"}, "transactions");
      p.transactions.require_tokens = t.value("require", p.transactions.require_tokens);
      p.transactions.exclude_tokens = t.value("exclude", p.transactions.exclude_tokens);
      read_opt(t, "min_items", p.transactions.min_items);
      read_opt(t, "max_items", p.transactions.max_items);
    }
    if (j.contains("sigma")) p.sigma = j.at("sigma").get<double>();
    read_opt(j, "budget_seconds", p.budget_seconds);
    read_opt(j, "max_itemsets", p.max_itemsets);
    if (j.contains("threads")) p.threads = j.at("threads").get<unsigned>();
    if (j.contains("fcis")) {
      const auto& f = j.at("fcis");
      check_keys(f, {"both_sides", "min_support", "max_support", "min_items", "max_items", "require", "exclude"},
                 "fcis");
      p.fcis.both_sides = f.value("both_sides", p.fcis.both_sides);
      read_opt(f, "min_support", p.fcis.min_support);
      read_opt(f, "max_support", p.fcis.max_support);
      read_opt(f, "min_items", p.fcis.min_items);
      read_opt(f, "max_items", p.fcis.max_items);
      p.fcis.require_tokens = f.value("require", p.fcis.require_tokens);
      p.fcis.exclude_tokens = f.value("exclude", p.fcis.exclude_tokens);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("params: ") + e.what());
  }
  if (!(p.sigma >= 0.0 && p.sigma <= 1.0)) throw ValidationError("sigma must be in [0, 1]");
  if (p.budget_seconds && !(*p.budget_seconds > 0.0)) throw ValidationError("budget_seconds must be positive");
  if (p.threads == 0) throw ValidationError("threads must be at least 1");
  check_fraction(p.fcis.min_support, "fcis.min_support");
  check_fraction(p.fcis.max_support, "fcis.max_support");
  return p;
}

std::optional<int> first_affected_step(const SessionParams& a, const SessionParams& b) {
  if (a.cases != b.cases) return 2;
  if (a.properties != b.properties) return 4;
  if (a.k_overlap != b.k_overlap) return 5;
  if (a.transactions != b.transactions) return 6;
  if (a.sigma != b.sigma || a.budget_seconds != b.budget_seconds || a.max_itemsets != b.max_itemsets) return 7;
  if (a.fcis != b.fcis) return 8;
  return std::nullopt;
}

// ---------------------------------------------------------------- artifacts

bool Artifacts::has(int step) const {
  switch (step) {
    case 1: return kb != nullptr;
    case 2: return selection != nullptr;
    case 3: return formatted != nullptr;
    case 4: return projected != nullptr;
    case 5: return encoded != nullptr;
    case 6: return transactions != nullptr;
    case 7: return mined != nullptr;
    case 8: return views != nullptr;
    case 9: return rules != nullptr;
    default: return false;
  }
}

void Artifacts::clear_from(int step) {
  if (step <= 1) kb.reset();
  if (step <= 2) selection.reset();
  if (step <= 3) formatted.reset();
  if (step <= 4) projected.reset();
  if (step <= 5) encoded.reset();
  if (step <= 6) transactions.reset();
  if (step <= 7) mined.reset();
  if (step <= 8) views.reset();
  if (step <= 9) rules.reset();
}

int Artifacts::completed() const {
  int k = 0;
  while (k < kLastStep && has(k + 1)) ++k;
  return k;
}

// ---------------------------------------------------------------- step bodies

namespace {

std::shared_ptr<const Selection> select_cases(const KnowledgeBase& kb, const CaseFilter& f) {
  auto lookup = [&](const std::string& id) {
    auto i = kb.find_case(id);
    if (i == KnowledgeBase::npos) throw ValidationError("case filter names unknown case '" + id + "'");
    return i;
  };
  std::vector<bool> keep(kb.cases().size(), f.include_ids.empty());
  for (const auto& id : f.include_ids) keep[lookup(id)] = true;
  for (const auto& id : f.exclude_ids) keep[lookup(id)] = false;
  auto sel = std::make_shared<Selection>();
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i]) sel->indices.push_back(i);
  }
  return sel;
}

std::shared_ptr<const FormattedArtifact> project_properties(const std::shared_ptr<const FormattedArtifact>& in,
                                                            const PropertyFilter& f, const Ontology& ontology) {
  if (f.include_keys.empty() && f.exclude_keys.empty()) return in;
  const auto& u = *in->base.universe;
  auto lookup = [&](const std::string& key) {
    auto ord = u.find(key);
    if (!ord) throw ValidationError("property filter names unknown property '" + key + "'");
    return *ord;
  };
  std::vector<bool> keep(u.size(), f.include_keys.empty());
  for (const auto& k : f.include_keys) keep[lookup(k)] = true;
  for (const auto& k : f.exclude_keys) keep[lookup(k)] = false;

  auto nu = std::make_shared<PropertyUniverse>();
  std::vector<std::optional<Ordinal>> remap(u.size());
  for (Ordinal i = 0; i < u.size(); ++i) {
    if (keep[i]) remap[i] = nu->add(u[i]);
  }
  auto out = std::make_shared<FormattedArtifact>();
  out->base.universe = nu;
  auto move_set = [&](const PropertySet& s) {
    PropertySet t(out->base.universe);
    for (Ordinal m : s.members()) {
      if (remap[m]) t.insert(*remap[m]);
    }
    return t;
  };
  for (const auto& c : in->base.cases) {
    out->base.cases.push_back(FormattedCase{c.case_index, c.id, move_set(c.problem), move_set(c.solution)});
  }
  out->table = std::make_shared<SubsumptionTable>(*nu, ontology);
  return out;
}

std::vector<ItemId> token_codes(const std::vector<std::string>& tokens, const PropertyUniverse& u) {
  std::vector<ItemId> out;
  for (const auto& t : tokens) out.push_back(parse_item_token(t, u).code());
  std::sort(out.begin(), out.end());
  return out;
}

std::shared_ptr<const EncodedDatabase> filter_transactions(const std::shared_ptr<const EncodedDatabase>& in,
                                                           const TransactionFilter& f) {
  if (f == TransactionFilter{}) return in;
  auto req = token_codes(f.require_tokens, *in->universe);
  auto exc = token_codes(f.exclude_tokens, *in->universe);
  auto out = std::make_shared<EncodedDatabase>();
  out->universe = in->universe;
  out->case_ids = in->case_ids;
  for (std::size_t t = 0; t < in->rows.size(); ++t) {
    auto row = in->rows[t];
    if (f.min_items && row.size() < *f.min_items) continue;
    if (f.max_items && row.size() > *f.max_items) continue;
    if (!std::includes(row.begin(), row.end(), req.begin(), req.end())) continue;
    if (std::any_of(exc.begin(), exc.end(), [&](ItemId c) { return std::binary_search(row.begin(), row.end(), c); })) {
      continue;
    }
    out->pairs.push_back(in->pairs[t]);
    out->rows.add(row);
  }
  return out;
}

std::vector<Item> token_items(const std::vector<std::string>& tokens, const PropertyUniverse& u) {
  std::vector<Item> out;
  for (const auto& t : tokens) out.push_back(parse_item_token(t, u));
  return out;
}

std::shared_ptr<const ViewArtifact> filter_fcis(const MinedArtifact& mined, const FciFilter& f,
                                                const FormattedArtifact& fa) {
  const auto& u = *fa.base.universe;
  auto req = token_items(f.require_tokens, u);
  auto exc = token_items(f.exclude_tokens, u);
  auto out = std::make_shared<ViewArtifact>();
  for (const auto& fci : mined.fcis) {
    if (f.both_sides && !(has_change(fci.items, Part::kPb) && has_change(fci.items, Part::kSol))) continue;
    if (f.min_support && fci.support < *f.min_support) continue;
    if (f.max_support && fci.support > *f.max_support) continue;
    if (f.min_items && fci.items.size() < *f.min_items) continue;
    if (f.max_items && fci.items.size() > *f.max_items) continue;
    auto has = [&](const Item& it) { return std::binary_search(fci.items.begin(), fci.items.end(), it); };
    if (!std::all_of(req.begin(), req.end(), has)) continue;
    if (std::any_of(exc.begin(), exc.end(), has)) continue;
    out->kept.push_back(fci);
    out->views.push_back(prune_redundant(fci, *fa.table, u));
  }
  return out;
}

std::string hash_formatted(const FormattedArtifact& fa) {
  Sha256 h;
  for (const auto& p : fa.base.universe->properties()) h.update(p.text()).update("\n");
  h.update("--\n");
  for (const auto& c : fa.base.cases) {
    h.update(c.id).update("|");
    for (auto o : c.problem.members()) h.update(std::to_string(o)).update(" ");
    h.update("|");
    for (auto o : c.solution.members()) h.update(std::to_string(o)).update(" ");
    h.update("\n");
  }
  return h.hex();
}

std::string hash_transactions(const EncodedDatabase& db) {
  Sha256 h;
  for_each_transaction_line(db, [&](std::string_view line) { h.update(line); });
  return h.hex();
}

std::string hash_views(const ViewArtifact& va, const PropertyUniverse& u) {
  Sha256 h;
  for (const auto& v : va.views) {
    h.update(v.fci_id).update("\t").update(std::to_string(v.support_count)).update("\t");
    for (const auto& it : v.simplified) h.update(item_token(it, u)).update(" ");
    h.update("|");
    for (const auto& it : v.raw) h.update(item_token(it, u)).update(" ");
    h.update("\n");
  }
  return h.hex();
}

json candidates_json(const std::vector<AdaptationRule>& rules) {
  json arr = json::array();
  for (const auto& r : rules) {
    auto j = rule_to_json(r);
    j.erase("timestamp");
    arr.push_back(std::move(j));
  }
  return arr;
}

std::string default_clock() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json verdicts_to_json(const std::map<std::string, RuleBook::Verdict>& vs) {
  json out = json::object();
  for (const auto& [id, v] : vs) {
    json a = nullptr;
    if (v.actions) a = {{"removals", v.actions->first}, {"additions", v.actions->second}};
    out[id] = {{"status", status_name(v.status)},
               {"explanation", v.explanation},
               {"author", v.author},
               {"timestamp", v.timestamp},
               {"actions", a}};
  }
  return out;
}

std::map<std::string, RuleBook::Verdict> verdicts_from_json(const json& j) {
  std::map<std::string, RuleBook::Verdict> out;
  for (const auto& [id, v] : j.items()) {
    RuleBook::Verdict d;
    d.status = parse_status(v.at("status").get<std::string>());
    d.explanation = v.at("explanation").get<std::string>();
    d.author = v.at("author").get<std::string>();
    d.timestamp = v.at("timestamp").get<std::string>();
    if (!v.at("actions").is_null()) {
      d.actions = std::make_pair(v.at("actions").at("removals").get<std::vector<std::string>>(),
                                 v.at("actions").at("additions").get<std::vector<std::string>>());
    }
    out.emplace(id, std::move(d));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- session

Session::Session(std::string kb_text, std::string id, Clock clock)
    : id_(id.empty() ? "session-" + short_hash(kb_text, 8) : std::move(id)),
      kb_text_(std::move(kb_text)),
      clock_(clock ? std::move(clock) : Clock(default_clock)) {}

std::string Session::now() const { return clock_(); }

SessionParams Session::params() const {
  std::lock_guard lk(mu_);
  return params_;
}

void Session::check_idle_locked() const {
  if (status_ == SessionStatus::kRunning) {
    throw Conflict("step " + std::to_string(running_.value_or(0)) + " is running");
  }
}

void Session::record(json event) {
  event["seq"] = history_.size() + 1;
  history_.push_back(std::move(event));
}

void Session::rebuild_rules_locked() {
  book_.clear_rules();
  if (!artifacts_.rules) return;
  for (const auto& r : artifacts_.rules->rendered) book_.upsert(r);
}

void Session::set_params(const SessionParams& p) {
  auto checked = params_from_json(params_to_json(p));
  std::lock_guard lk(mu_);
  check_idle_locked();
  auto affected = first_affected_step(params_, checked);
  params_ = checked;
  if (affected) {
    artifacts_.clear_from(*affected);
    digests_.erase(digests_.lower_bound(*affected), digests_.end());
    rebuild_rules_locked();
  }
  record({{"op", "set_params"}, {"params", params_to_json(params_)}});
}

void Session::compute(int step, Artifacts& a, const SessionParams& p) {
  auto progress = [this](std::size_t done, std::size_t total) {
    progress_done_ = done;
    progress_total_ = total;
  };
  switch (step) {
    case 1:
      a.kb = std::make_shared<const KnowledgeBase>(parse_kb(kb_text_));
      break;
    case 2:
      a.selection = select_cases(*a.kb, p.cases);
      break;
    case 3: {
      auto fa = std::make_shared<FormattedArtifact>();
      fa->base = format_case_base(*a.kb, a.selection->indices);
      fa->table = std::make_shared<SubsumptionTable>(*fa->base.universe, a.kb->ontology());
      a.formatted = fa;
      break;
    }
    case 4:
      a.projected = project_properties(a.formatted, p.properties, a.kb->ontology());
      break;
    case 5:
      a.encoded = std::make_shared<const EncodedDatabase>(
          encode_database(a.projected->base, p.k_overlap, progress, &cancel_));
      break;
    case 6:
      a.transactions = filter_transactions(a.encoded, p.transactions);
      break;
    case 7: {
      MiningParams mp;
      mp.sigma = p.sigma;
      mp.max_itemsets = p.max_itemsets;
      mp.time_budget_seconds = p.budget_seconds;
      mp.threads = p.threads;
      mp.cancel = &cancel_;
      mp.on_progress = [this](std::size_t n) { progress_done_ = n; };
      auto t0 = std::chrono::steady_clock::now();
      auto mined = mine_fcis(a.transactions->rows, mp);
      auto m = std::make_shared<MinedArtifact>();
      m->fcis = make_fcis(mined, *a.transactions->universe);
      m->transactions = a.transactions->rows.size();
      m->min_count = min_support_count(p.sigma, m->transactions);
      m->seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      a.mined = m;
      break;
    }
    case 8:
      a.views = filter_fcis(*a.mined, p.fcis, *a.projected);
      break;
    case 9: {
      auto ra = std::make_shared<RulesArtifact>();
      for (const auto& v : a.views->views) {
        try {
          ra->rendered.push_back(render_rule(v, a.projected->base.universe, *a.projected->table, *a.kb));
        } catch (const ValidationError& e) {
          ra->warnings.push_back("FCI " + v.fci_id + ": " + e.what());
        }
      }
      a.rules = ra;
      break;
    }
    default:
      throw StateError("unknown step " + std::to_string(step));
  }
}

std::string Session::digest_of(int step, const Artifacts& a) const {
  switch (step) {
    case 1: return a.kb->digest();
    case 2: {
      Sha256 h;
      for (auto i : a.selection->indices) h.update(a.kb->cases()[i].id).update("\n");
      return h.hex();
    }
    case 3: return hash_formatted(*a.formatted);
    case 4: return hash_formatted(*a.projected);
    case 5: return hash_transactions(*a.encoded);
    case 6: return hash_transactions(*a.transactions);
    case 7: return sha256_hex(fcis_text(a.mined->fcis, *a.projected->base.universe));
    case 8: return hash_views(*a.views, *a.projected->base.universe);
    case 9: return sha256_hex(candidates_json(a.rules->rendered).dump());
    default: return {};
  }
}

void Session::run_step(int step) {
  if (step < kFirstStep || step > kLastStep) throw StateError("unknown step " + std::to_string(step));
  Artifacts work;
  SessionParams p;
  std::string reuse_digest;
  {
    std::lock_guard lk(mu_);
    check_idle_locked();
    int have = artifacts_.completed();
    if (have < step - 1) {
      throw StateError("missing input: step " + std::to_string(have + 1) + " (" +
                       std::string(step_name(have + 1)) + ") has not run");
    }
    snapshots_[step] = Snapshot{params_, artifacts_, digests_};
    work = artifacts_;
    work.clear_from(step);
    p = params_;
    status_ = SessionStatus::kRunning;
    running_ = step;
    last_error_.reset();
    cancel_ = false;
    progress_done_ = 0;
    progress_total_ = 0;
    if (step == 6 && digests_.count(5)) reuse_digest = digests_.at(5);
  }
  std::string digest;
  auto t0 = std::chrono::steady_clock::now();
  try {
    compute(step, work, p);
    digest = (step == 6 && work.transactions == work.encoded) ? reuse_digest : digest_of(step, work);
  } catch (const Interrupted&) {
    std::lock_guard lk(mu_);
    status_ = SessionStatus::kInterrupted;
    running_.reset();
    last_error_ = "interrupted";
    record({{"op", "interrupted"}, {"step", step}});
    throw;
  } catch (const std::exception& e) {
    std::lock_guard lk(mu_);
    status_ = SessionStatus::kIdle;
    running_.reset();
    last_error_ = e.what();
    throw;
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::lock_guard lk(mu_);
  artifacts_ = std::move(work);
  digests_.erase(digests_.lower_bound(step), digests_.end());
  digests_[step] = digest;
  step_seconds_[step] = secs;
  rebuild_rules_locked();
  status_ = SessionStatus::kIdle;
  running_.reset();
  record({{"op", "run"}, {"step", step}});
}

void Session::run_through(int last) {
  for (int s = completed_step() + 1; s <= last; ++s) run_step(s);
}

bool Session::interrupt() {
  std::lock_guard lk(mu_);
  if (status_ != SessionStatus::kRunning) return false;
  cancel_ = true;
  return true;
}

void Session::go_back(int step) {
  std::lock_guard lk(mu_);
  check_idle_locked();
  auto it = snapshots_.find(step);
  if (it == snapshots_.end()) throw StateError("no snapshot before step " + std::to_string(step));
  json abandoned = json::object();
  for (const auto& [s, d] : digests_) {
    if (s >= step) abandoned[std::to_string(s)] = d;
  }
  params_ = it->second.params;
  artifacts_ = it->second.artifacts;
  digests_ = it->second.digests;
  snapshots_.erase(snapshots_.upper_bound(step), snapshots_.end());
  rebuild_rules_locked();
  status_ = SessionStatus::kIdle;
  last_error_.reset();
  record({{"op", "go_back"}, {"step", step}, {"abandoned", abandoned}, {"params", params_to_json(params_)}});
}

SessionStatus Session::status() const {
  std::lock_guard lk(mu_);
  return status_;
}

std::optional<int> Session::running_step() const {
  std::lock_guard lk(mu_);
  return running_;
}

int Session::completed_step() const {
  std::lock_guard lk(mu_);
  return artifacts_.completed();
}

std::optional<std::string> Session::last_error() const {
  std::lock_guard lk(mu_);
  return last_error_;
}

std::pair<std::size_t, std::size_t> Session::progress() const { return {progress_done_.load(), progress_total_.load()}; }

Artifacts Session::artifacts() const {
  std::lock_guard lk(mu_);
  return artifacts_;
}

std::map<int, std::string> Session::digests() const {
  std::lock_guard lk(mu_);
  return digests_;
}

json Session::history() const {
  std::lock_guard lk(mu_);
  return history_;
}

json Session::summary() const {
  std::lock_guard lk(mu_);
  const auto& a = artifacts_;
  json s{{"kb_digest", a.kb ? json(a.kb->digest()) : json(nullptr)},
         {"sigma", params_.sigma},
         {"k_overlap", opt(params_.k_overlap)},
         {"completed_step", a.completed()}};
  if (a.kb) s["kb_cases"] = a.kb->cases().size();
  if (a.selection) s["cases"] = a.selection->indices.size();
  if (a.projected) s["properties"] = a.projected->base.universe->size();
  if (a.encoded) s["pairs_encoded"] = a.encoded->rows.size();
  if (a.transactions) s["transactions"] = a.transactions->rows.size();
  if (a.mined) {
    s["fcis"] = a.mined->fcis.size();
    s["min_support_count"] = a.mined->min_count;
    s["mining_seconds"] = a.mined->seconds;
  }
  if (a.views) s["fcis_kept"] = a.views->views.size();
  if (a.rules) {
    s["rules"] = a.rules->rendered.size();
    s["rule_warnings"] = a.rules->warnings.size();
  }
  double total = 0;
  json secs = json::object();
  for (const auto& [k, v] : step_seconds_) {
    if (k > a.completed()) continue;
    secs[std::string(step_name(k))] = v;
    total += v;
  }
  s["step_seconds"] = secs;
  s["wall_seconds"] = total;
  return s;
}

json Session::descriptor() const {
  std::lock_guard lk(mu_);
  json d{{"id", id_},
         {"status", status_name(status_)},
         {"running_step", opt(running_)},
         {"completed_step", artifacts_.completed()},
         {"last_error", opt(last_error_)},
         {"progress", {{"done", progress_done_.load()}, {"total", progress_total_.load()}}},
         {"kb_digest", artifacts_.kb ? json(artifacts_.kb->digest()) : json(nullptr)},
         {"params", params_to_json(params_)},
         {"mutations", history_.size() + book_.audit().size()}};
  json dg = json::object();
  for (const auto& [k, v] : digests_) dg[std::to_string(k)] = v;
  d["digests"] = dg;
  json snaps = json::array();
  for (const auto& [k, v] : snapshots_) snaps.push_back(k);
  d["snapshots"] = snaps;
  return d;
}

FciPage Session::query_fcis(const FciQuery& q) const {
  std::shared_ptr<const ViewArtifact> views;
  {
    std::lock_guard lk(mu_);
    views = artifacts_.views;
  }
  if (q.sort != "support" && q.sort != "items" && q.sort != "id") {
    throw ValidationError("invalid sort key '" + q.sort + "' (expected support, items or id)");
  }
  if (!views) throw StateError("missing input: step 8 (filter-fcis) has not run");
  std::vector<const FciView*> rows;
  for (const auto& v : views->views) {
    if (q.min_support && v.support < *q.min_support) continue;
    rows.push_back(&v);
  }
  auto key_less = [&](const FciView* a, const FciView* b) {
    int c = 0;
    if (q.sort == "support") {
      c = a->support_count < b->support_count ? -1 : (a->support_count > b->support_count ? 1 : 0);
    } else if (q.sort == "items") {
      c = a->item_count < b->item_count ? -1 : (a->item_count > b->item_count ? 1 : 0);
    } else {
      c = a->fci_id.compare(b->fci_id);
      c = c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    if (q.descending) c = -c;
    if (c != 0) return c < 0;
    if (a->support_count != b->support_count) return a->support_count > b->support_count;
    if (a->item_count != b->item_count) return a->item_count > b->item_count;
    return a->fci_id < b->fci_id;
  };
  std::sort(rows.begin(), rows.end(), [&](const FciView* a, const FciView* b) {
    if (q.group && a->group_key != b->group_key) return a->group_key < b->group_key;
    return key_less(a, b);
  });
  FciPage page;
  page.total = rows.size();
  if (q.group) {
    for (const auto* r : rows) {
      if (page.groups.empty() || page.groups.back().first != r->group_key) page.groups.emplace_back(r->group_key, 0);
      ++page.groups.back().second;
    }
  }
  for (std::size_t i = q.offset; i < rows.size() && i < q.offset + q.limit; ++i) page.items.push_back(*rows[i]);
  return page;
}

std::optional<FciView> Session::fci_detail(const std::string& fci_id) const {
  Artifacts a = artifacts();
  if (a.views) {
    for (const auto& v : a.views->views) {
      if (v.fci_id == fci_id) return v;
    }
  }
  if (a.mined) {
    for (const auto& f : a.mined->fcis) {
      if (f.id == fci_id) return prune_redundant(f, *a.projected->table, *a.projected->base.universe);
    }
  }
  return std::nullopt;
}

std::vector<AdaptationRule> Session::rules() const {
  std::lock_guard lk(mu_);
  std::vector<AdaptationRule> out;
  for (const auto* r : book_.rules()) out.push_back(*r);
  return out;
}

std::optional<AdaptationRule> Session::rule(const std::string& id) const {
  std::lock_guard lk(mu_);
  if (const auto* r = book_.find(id)) return *r;
  return std::nullopt;
}

AdaptationRule Session::validate_rule(const std::string& id, const std::string& explanation, const std::string& author) {
  std::lock_guard lk(mu_);
  check_idle_locked();
  AdaptationRule r = book_.validate(id, explanation, author, now());
  record({{"op", "validate"}, {"rule", id}, {"explanation", explanation}, {"author", author}});
  return r;
}

AdaptationRule Session::reject_rule(const std::string& id, const std::string& explanation, const std::string& author) {
  std::lock_guard lk(mu_);
  check_idle_locked();
  AdaptationRule r = book_.reject(id, explanation, author, now());
  record({{"op", "reject"}, {"rule", id}, {"explanation", explanation}, {"author", author}});
  return r;
}

AdaptationRule Session::edit_rule(const std::string& id, std::vector<std::string> removals,
                                  std::vector<std::string> additions, const std::string& author) {
  std::lock_guard lk(mu_);
  check_idle_locked();
  if (!artifacts_.kb) throw StateError("missing input: no KB loaded");
  for (const auto* list : {&removals, &additions}) {
    for (const auto& d : *list) {
      if (!artifacts_.kb->decision_names().count(d)) throw ValidationError("'" + d + "' is not a decision of the KB");
    }
  }
  json ev{{"op", "edit"}, {"rule", id}, {"removals", removals}, {"additions", additions}, {"author", author}};
  AdaptationRule r = book_.edit_actions(id, std::move(removals), std::move(additions), author, now());
  record(std::move(ev));
  return r;
}

std::vector<AuditEntry> Session::audit() const {
  std::lock_guard lk(mu_);
  return book_.audit();
}

ApplyResult Session::apply(const std::string& rule_id, const std::string& source_case_id,
                           const std::string& target_problem) const {
  ApplyResult out;
  Artifacts a;
  {
    std::lock_guard lk(mu_);
    const auto* r = book_.find(rule_id);
    if (!r) throw StateError("unknown rule '" + rule_id + "'");
    out.rule = *r;
    a = artifacts_;
  }
  if (!a.projected) throw StateError("missing input: step 4 has not run");
  const auto& fa = *a.projected;
  const FormattedCase* src = nullptr;
  for (const auto& c : fa.base.cases) {
    if (c.id == source_case_id) src = &c;
  }
  if (!src) throw ValidationError("unknown or unselected source case '" + source_case_id + "'");
  Concept tgt = parse_concept(target_problem);
  PropertySet tgt_pb = phi_set(tgt, *a.kb, fa.base.universe, &out.warnings);
  out.application = apply_rule(out.rule, src->problem, src->solution, tgt_pb, *fa.table);
  if (out.application.applicable && out.rule.decision_level) {
    out.decisions = apply_decisions(out.rule, a.kb->cases()[src->case_index].solution);
    out.decision_solution = phi_solution_set(out.decisions, *a.kb, fa.base.universe, &out.warnings);
  }
  return out;
}

void Session::export_artifact(const std::string& kind, std::ostream& out) const {
  Artifacts a;
  SessionParams p;
  {
    std::lock_guard lk(mu_);
    a = artifacts_;
    p = params_;
  }
  auto need = [&](int step) {
    if (!a.has(step)) throw StateError("missing artifact: step " + std::to_string(step) + " has not run");
  };
  if (kind == "transactions") {
    need(6);
    out << "# kb-digest " << a.kb->digest() << "\n";
    write_transactions(out, *a.transactions);
  } else if (kind == "fcis") {
    need(7);
    out << "# kb-digest " << a.kb->digest() << "\n# sigma " << p.sigma << "\n";
    write_fcis(out, a.mined->fcis, *a.projected->base.universe);
  } else if (kind == "candidates") {
    need(9);
    json doc{{"format", "casemine-candidates/1"},
             {"kb_digest", a.kb->digest()},
             {"sigma", p.sigma},
             {"rules", candidates_json(rules())}};
    out << doc.dump(2) << "\n";
  } else if (kind == "rules") {
    need(9);
    std::vector<AdaptationRule> rs = rules();
    std::vector<const AdaptationRule*> ptrs;
    for (const auto& r : rs) ptrs.push_back(&r);
    out << rules_export(ptrs, a.kb->digest(), p.sigma).dump(2) << "\n";
  } else if (kind == "session") {
    out << snapshot().dump(2) << "\n";
  } else {
    throw ValidationError("unknown export kind '" + kind + "'");
  }
}

std::string Session::export_text(const std::string& kind) const {
  std::ostringstream os;
  export_artifact(kind, os);
  return os.str();
}

json Session::snapshot() const {
  std::lock_guard lk(mu_);
  json dg = json::object();
  for (const auto& [k, v] : digests_) dg[std::to_string(k)] = v;
  json audit = json::array();
  for (const auto& e : book_.audit()) audit.push_back(audit_to_json(e));
  json artifacts = json::object();
  if (artifacts_.mined) artifacts["fcis"] = fcis_text(artifacts_.mined->fcis, *artifacts_.projected->base.universe);
  if (artifacts_.rules) {
    json rs = json::array();
    for (const auto* r : book_.rules()) rs.push_back(rule_to_json(*r));
    artifacts["rules"] = rs;
  }
  return {{"format", "casemine-session/1"},
          {"id", id_},
          {"kb_text", kb_text_},
          {"kb_digest", artifacts_.kb ? json(artifacts_.kb->digest()) : json(nullptr)},
          {"params", params_to_json(params_)},
          {"completed_step", artifacts_.completed()},
          {"digests", dg},
          {"history", history_},
          {"verdicts", verdicts_to_json(book_.verdicts())},
          {"audit", audit},
          {"artifacts", artifacts}};
}

void Session::save(const std::filesystem::path& path) const { write_file_atomic(path, snapshot().dump(2) + "\n"); }

std::unique_ptr<Session> Session::restore(const json& snap, Clock clock) {
  try {
    if (snap.value("format", "") != "casemine-session/1") throw ValidationError("not a session snapshot");
    auto s = std::make_unique<Session>(snap.at("kb_text").get<std::string>(), snap.at("id").get<std::string>(),
                                       std::move(clock));
    auto params = params_from_json(snap.at("params"));
    {
      std::lock_guard lk(s->mu_);
      s->params_ = params;
    }
    int completed = snap.at("completed_step").get<int>();
    for (int step = 1; step <= completed; ++step) s->run_step(step);
    const auto& saved = snap.at("digests");
    for (const auto& [k, d] : s->digests()) {
      auto key = std::to_string(k);
      if (!saved.contains(key) || saved.at(key).get<std::string>() != d) {
        throw IoError("session snapshot does not reproduce step " + key + " (digest mismatch)");
      }
    }
    std::vector<AuditEntry> audit;
    for (const auto& e : snap.at("audit")) audit.push_back(audit_from_json(e));
    std::lock_guard lk(s->mu_);
    s->book_.restore(verdicts_from_json(snap.at("verdicts")), std::move(audit));
    s->rebuild_rules_locked();
    s->history_ = snap.at("history");
    s->snapshots_.clear();
    return s;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("session snapshot: ") + e.what());
  }
}

std::unique_ptr<Session> Session::load(const std::filesystem::path& path, Clock clock) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("session snapshot: ") + e.what());
  }
  return restore(j, std::move(clock));
}

std::unique_ptr<Session> Session::replay(const std::string& kb_text, const json& history, Clock clock) {
  auto s = std::make_unique<Session>(kb_text, std::string{}, std::move(clock));
  for (const auto& ev : history) {
    auto op = ev.at("op").get<std::string>();
    if (op == "set_params") {
      s->set_params(params_from_json(ev.at("params")));
    } else if (op == "run") {
      s->run_step(ev.at("step").get<int>());
    } else if (op == "go_back") {
      s->go_back(ev.at("step").get<int>());
    } else if (op == "validate") {
      s->validate_rule(ev.at("rule"), ev.at("explanation"), ev.at("author"));
    } else if (op == "reject") {
      s->reject_rule(ev.at("rule"), ev.at("explanation"), ev.at("author"));
    } else if (op == "edit") {
      s->edit_rule(ev.at("rule"), ev.at("removals"), ev.at("additions"), ev.at("author"));
    }
  }
  return s;
}

}  // namespace casemine
