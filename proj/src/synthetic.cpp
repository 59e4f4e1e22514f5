#include "casemine/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "casemine/concept.hpp"
#include "casemine/error.hpp"

namespace casemine {

namespace {

using nlohmann::json;

// Distribution mappings written out so output does not depend on the standard
// library's (implementation-defined) distribution algorithms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::size_t index(std::size_t k) { return static_cast<std::size_t>(engine_() % k); }

 private:
  std::mt19937_64 engine_;
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError("synthetic spec: " + msg);
}

void check_name(const std::string& name, const char* what) {
  require(is_identifier(name), std::string(what) + " name '" + name + "' is not an identifier");
}

double prob(const json& j, const char* key, double fallback) {
  double p = j.value(key, fallback);
  require(p >= 0.0 && p <= 1.0, std::string(key) + " must be in [0, 1]");
  return p;
}

std::optional<std::string> role_of(const json& j) {
  if (!j.contains("role") || j.at("role").is_null()) return std::nullopt;
  auto r = j.at("role").get<std::string>();
  check_name(r, "role");
  return r;
}

std::string case_id(std::size_t i, std::size_t n) {
  auto digits = std::to_string(i + 1);
  std::size_t width = std::max<std::size_t>(3, std::to_string(n).size());
  return "c" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

}  // namespace

SyntheticSpec parse_synthetic_spec(const json& j) {
  SyntheticSpec s;
  try {
    require(j.is_object(), "expected a JSON object");
    auto n = j.at("n_cases").get<long long>();
    require(n >= 0, "n_cases must be non-negative");
    s.n_cases = static_cast<std::size_t>(n);
    s.seed = j.value("seed", std::uint64_t{1});
    for (const auto& f : j.value("features", json::array())) {
      FeatureSpec fs{f.at("name").get<std::string>(), f.value("values", 2), prob(f, "presence", 1.0), role_of(f)};
      check_name(fs.name, "feature");
      require(fs.values >= 1, "feature '" + fs.name + "' needs at least one value");
      s.features.push_back(std::move(fs));
    }
    for (const auto& c : j.value("concretes", json::array())) {
      ConcreteSpec cs;
      cs.name = c.at("name").get<std::string>();
      check_name(cs.name, "concrete role");
      cs.thresholds = c.at("thresholds").get<std::vector<double>>();
      require(!cs.thresholds.empty(), "concrete role '" + cs.name + "' needs thresholds");
      for (std::size_t i = 0; i < cs.thresholds.size(); ++i) {
        require(std::isfinite(cs.thresholds[i]), "thresholds must be finite");
        require(i == 0 || cs.thresholds[i - 1] < cs.thresholds[i], "thresholds must increase");
      }
      cs.min = c.at("min").get<double>();
      cs.max = c.at("max").get<double>();
      require(std::isfinite(cs.min) && std::isfinite(cs.max) && cs.min < cs.max, "bad range for '" + cs.name + "'");
      cs.presence = prob(c, "presence", 1.0);
      cs.role = role_of(c);
      s.concretes.push_back(std::move(cs));
    }
    for (const auto& d : j.value("decisions", json::array())) {
      DecisionSpec ds{d.at("name").get<std::string>(), d.value("values", 2), prob(d, "presence", 0.5)};
      check_name(ds.name, "decision");
      require(ds.values >= 1, "decision '" + ds.name + "' needs at least one value");
      s.decisions.push_back(std::move(ds));
    }
    for (const auto& p : j.value("planted", json::array())) {
      PlantedRuleSpec ps{p.at("name").get<std::string>(), prob(p, "prevalence", 0.1)};
      check_name("Act-" + ps.name, "planted rule");
      s.planted.push_back(std::move(ps));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("synthetic spec: ") + e.what());
  }
  if (s.n_cases > 0) {
    require(!s.features.empty() || !s.concretes.empty(), "at least one feature or concrete role is needed");
    require(!s.decisions.empty(), "at least one decision family is needed");
  }
  return s;
}

json synthetic_spec_to_json(const SyntheticSpec& s) {
  json j{{"n_cases", s.n_cases}, {"seed", s.seed}};
  auto role = [](const std::optional<std::string>& r) { return r ? json(*r) : json(nullptr); };
  j["features"] = json::array();
  for (const auto& f : s.features) {
    j["features"].push_back({{"name", f.name}, {"values", f.values}, {"presence", f.presence}, {"role", role(f.role)}});
  }
  j["concretes"] = json::array();
  for (const auto& c : s.concretes) {
    j["concretes"].push_back({{"name", c.name},
                              {"thresholds", c.thresholds},
                              {"min", c.min},
                              {"max", c.max},
                              {"presence", c.presence},
                              {"role", role(c.role)}});
  }
  j["decisions"] = json::array();
  for (const auto& d : s.decisions) {
    j["decisions"].push_back({{"name", d.name}, {"values", d.values}, {"presence", d.presence}});
  }
  j["planted"] = json::array();
  for (const auto& p : s.planted) j["planted"].push_back({{"name", p.name}, {"prevalence", p.prevalence}});
  return j;
}

SyntheticResult generate_synthetic(const SyntheticSpec& spec) {
  const std::size_t n = spec.n_cases;
  const double pairs = n < 2 ? 0.0 : static_cast<double>(n) * static_cast<double>(n - 1);
  std::size_t needed = 0;
  std::vector<std::size_t> carriers;
  for (const auto& p : spec.planted) {
    auto m = static_cast<std::size_t>(std::llround(std::sqrt(p.prevalence * pairs)));
    if (m == 0) throw ValidationError("infeasible spec: prevalence of '" + p.name + "' rounds to zero carriers");
    carriers.push_back(m);
    needed += 2 * m;
  }
  if (needed > n) {
    throw ValidationError("infeasible spec: planted rules need " + std::to_string(needed) + " carrier cases, only " +
                          std::to_string(n) + " available");
  }

  Rng rng(spec.seed);
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);

  // role[c] = (rule, is_target) for carrier cases.
  std::vector<std::optional<std::pair<std::size_t, bool>>> role(n);
  std::vector<PlantedRuleLedger> ledger;
  std::size_t cursor = 0;
  for (std::size_t r = 0; r < spec.planted.size(); ++r) {
    const auto& p = spec.planted[r];
    PlantedRuleLedger L;
    L.name = p.name;
    L.prevalence = p.prevalence;
    L.carriers = carriers[r];
    L.condition_source = "Cond-" + p.name + "-src";
    L.condition_target = "Cond-" + p.name + "-tgt";
    L.action_group = "Act-" + p.name;
    L.action_old = L.action_group + "-old";
    L.action_new = L.action_group + "-new";
    std::vector<std::size_t> src(perm.begin() + cursor, perm.begin() + cursor + L.carriers);
    std::vector<std::size_t> tgt(perm.begin() + cursor + L.carriers, perm.begin() + cursor + 2 * L.carriers);
    cursor += 2 * L.carriers;
    std::sort(src.begin(), src.end());
    std::sort(tgt.begin(), tgt.end());
    for (auto c : src) {
      role[c] = std::make_pair(r, false);
      L.source_cases.push_back(case_id(c, n));
    }
    for (auto c : tgt) {
      role[c] = std::make_pair(r, true);
      L.target_cases.push_back(case_id(c, n));
    }
    L.pair_count = L.carriers * L.carriers;
    L.expected_support = static_cast<double>(L.pair_count) / pairs;
    L.signature = {L.condition_source + "|pb|-", L.condition_target + "|pb|+", L.action_old + "|sol|-",
                   L.action_new + "|sol|+"};
    L.pattern = {L.condition_source + "|pb|-", L.condition_target + "|pb|+", L.action_old + "|sol|-",
                 L.action_group + "|sol|=", L.action_new + "|sol|+"};
    ledger.push_back(std::move(L));
  }

  std::string text = "[ontology]\n";
  for (const auto& f : spec.features) {
    for (int v = 0; v < f.values; ++v) text += f.name + "-" + std::to_string(v) + " isa " + f.name + "\n";
  }
  for (const auto& d : spec.decisions) {
    for (int v = 0; v < d.values; ++v) text += d.name + "-" + std::to_string(v) + " isa " + d.name + "\n";
    text += d.name + " isa Decision\n";
  }
  for (const auto& L : ledger) {
    text += L.action_old + " isa " + L.action_group + "\n";
    text += L.action_new + " isa " + L.action_group + "\n";
    text += L.action_group + " isa Decision\n";
  }
  text += "[cases]\n";

  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Concept> top;
    std::map<std::string, std::vector<Concept>> under;
    auto place = [&](const std::optional<std::string>& r, Concept c) {
      if (r) {
        under[*r].push_back(std::move(c));
      } else {
        top.push_back(std::move(c));
      }
    };
    auto add_feature = [&](const FeatureSpec& f) {
      place(f.role, Concept::atomic(f.name + "-" + std::to_string(rng.index(static_cast<std::size_t>(f.values)))));
    };
    auto add_concrete = [&](const ConcreteSpec& c) {
      double x = c.min + rng.unit() * (c.max - c.min);
      auto hi = std::upper_bound(c.thresholds.begin(), c.thresholds.end(), x);
      if (hi != c.thresholds.begin()) place(c.role, Concept::some(c.name, Constraint::ge(*std::prev(hi))));
      if (hi != c.thresholds.end()) place(c.role, Concept::some(c.name, Constraint::lt(*hi)));
    };
    for (const auto& f : spec.features) {
      if (rng.unit() < f.presence) add_feature(f);
    }
    for (const auto& c : spec.concretes) {
      if (rng.unit() < c.presence) add_concrete(c);
    }
    if (role[i]) {
      const auto& L = ledger[role[i]->first];
      top.push_back(Concept::atomic(role[i]->second ? L.condition_target : L.condition_source));
    }
    if (top.empty() && under.empty()) {
      if (!spec.features.empty()) {
        add_feature(spec.features.front());
      } else {
        add_concrete(spec.concretes.front());
      }
    }
    for (auto& [r, parts] : under) top.push_back(Concept::some(r, Concept::conjunction(parts)));
    Concept problem = Concept::conjunction(top);

    std::set<std::string> decisions;
    for (const auto& d : spec.decisions) {
      if (rng.unit() < d.presence) decisions.insert(d.name + "-" + std::to_string(rng.index(static_cast<std::size_t>(d.values))));
    }
    if (role[i]) {
      const auto& L = ledger[role[i]->first];
      decisions.insert(role[i]->second ? L.action_new : L.action_old);
    }
    if (decisions.empty()) {
      const auto& d = spec.decisions.front();
      decisions.insert(d.name + "-" + std::to_string(rng.index(static_cast<std::size_t>(d.values))));
    }

    text += case_id(i, n) + " | " + problem.text() + " | ";
    bool first = true;
    for (const auto& d : decisions) {
      if (!first) text += ", ";
      text += d;
      first = false;
    }
    text += "\n";
  }

  SyntheticResult out;
  out.kb = parse_kb(text);
  out.kb_text = std::move(text);
  out.ledger = std::move(ledger);
  return out;
}

json ledger_to_json(const std::vector<PlantedRuleLedger>& ledger, const std::string& kb_digest, bool with_pairs) {
  json rules = json::array();
  for (const auto& L : ledger) {
    json r{{"name", L.name},
           {"prevalence", L.prevalence},
           {"carriers", L.carriers},
           {"source_cases", L.source_cases},
           {"target_cases", L.target_cases},
           {"pair_count", L.pair_count},
           {"expected_support", L.expected_support},
           {"pattern", L.pattern},
           {"signature", L.signature}};
    if (with_pairs) {
      json pairs = json::array();
      for (const auto& a : L.source_cases) {
        for (const auto& b : L.target_cases) pairs.push_back({a, b});
      }
      r["pairs"] = std::move(pairs);
    }
    rules.push_back(std::move(r));
  }
  return {{"format", "casemine-ledger/1"}, {"kb_digest", kb_digest}, {"planted", std::move(rules)}};
}

}  // namespace casemine
