// casemine command-line driver: mine, gen, serve.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "casemine/error.hpp"
#include "casemine/kb.hpp"
#include "casemine/service.hpp"
#include "casemine/session.hpp"
#include "casemine/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace casemine;

namespace {

enum Exit : int {
  kOk = 0,
  kUsage = 2,
  kLoad = 3,
  kValidation = 4,
  kMining = 5,
  kIo = 6,
  kBind = 7,
  kInterrupted = 8,
};

fs::path default_out() {
  if (const char* env = std::getenv("CASEMINE_OUT"); env && *env) return env;
  return "casemine-out";
}

int report(const std::exception& e, int code) {
  std::cerr << "casemine: " << e.what() << "\n";
  return code;
}

/// Maps library errors to exit codes; anything else is an I/O-level failure.
template <class F>
int run_guarded(F&& f) {
  try {
    return f();
  } catch (const BindError& e) {
    return report(e, kBind);
  } catch (const ParseError& e) {
    return report(e, kLoad);
  } catch (const ValidationError& e) {
    return report(e, kValidation);
  } catch (const MiningError& e) {
    return report(e, kMining);
  } catch (const Interrupted& e) {
    return report(e, kInterrupted);
  } catch (const IoError& e) {
    return report(e, kIo);
  } catch (const StateError& e) {
    return report(e, kValidation);
  } catch (const json::exception& e) {
    return report(e, kValidation);
  } catch (const std::exception& e) {
    return report(e, kIo);
  }
}

std::string kb_text_of(const fs::path& p) {
  auto text = read_file(p);
  parse_kb(text);  // fail fast with a located parse error
  return text;
}

struct MineOptions {
  fs::path kb;
  fs::path out;
  std::optional<double> sigma;
  std::optional<std::size_t> k_overlap;
  std::optional<fs::path> filters;
  std::optional<double> budget_seconds;
  std::optional<std::size_t> max_itemsets;
  unsigned threads = 1;
  bool snapshot = false;
};

int cmd_mine(const MineOptions& o) {
  auto t0 = std::chrono::steady_clock::now();
  SessionParams params;
  if (o.filters) {
    json j;
    try {
      j = json::parse(read_file(*o.filters));
    } catch (const json::parse_error& e) {
      throw ValidationError("filter spec " + o.filters->string() + ": " + e.what());
    }
    params = params_from_json(j);
  }
  if (o.sigma) params.sigma = *o.sigma;
  if (o.k_overlap) params.k_overlap = *o.k_overlap;
  if (o.budget_seconds) params.budget_seconds = *o.budget_seconds;
  if (o.max_itemsets) params.max_itemsets = *o.max_itemsets;
  params.threads = o.threads;

  Session session(kb_text_of(o.kb));
  session.set_params(params);
  session.run_through(kLastStep);

  fs::create_directories(o.out);
  write_file_atomic(o.out / "transactions.txt", session.export_text("transactions"));
  write_file_atomic(o.out / "fcis.txt", session.export_text("fcis"));
  write_file_atomic(o.out / "candidates.json", session.export_text("candidates"));
  write_file_atomic(o.out / "rules.json", session.export_text("rules"));
  if (o.snapshot) session.save(o.out / "session.json");

  json s = session.summary();
  s["wall_seconds_total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json dg = json::object();
  for (const auto& [k, v] : session.digests()) dg[std::string(step_name(k))] = v;
  s["digests"] = dg;
  write_file_atomic(o.out / "summary.json", s.dump(2) + "\n");

  std::cout << "cases:               " << s.value("cases", 0) << "\n"
            << "properties |P|:      " << s.value("properties", 0) << "\n"
            << "transactions:        " << s.value("transactions", 0) << "\n"
            << "sigma:               " << params.sigma << " (min count " << s.value("min_support_count", 0) << ")\n"
            << "FCIs:                " << s.value("fcis", 0) << "\n"
            << "FCIs after filters:  " << s.value("fcis_kept", 0) << "\n"
            << "candidate rules:     " << s.value("rules", 0) << "\n"
            << "wall time (s):       " << std::fixed << std::setprecision(2) << s["wall_seconds_total"].get<double>()
            << "\n"
            << "fcis digest:         " << dg.value("mine", "") << "\n"
            << "outputs written to   " << o.out.string() << "\n";
  return kOk;
}

int cmd_gen(const fs::path& spec_path, std::optional<std::uint64_t> seed, const fs::path& out) {
  json j;
  try {
    j = json::parse(read_file(spec_path));
  } catch (const json::parse_error& e) {
    throw ValidationError("synthetic spec " + spec_path.string() + ": " + e.what());
  }
  auto spec = parse_synthetic_spec(j);
  if (seed) spec.seed = *seed;
  auto result = generate_synthetic(spec);
  fs::create_directories(out);
  write_file_atomic(out / "kb.txt", result.kb_text);
  write_file_atomic(out / "ledger.json", ledger_to_json(result.ledger, result.kb.digest()).dump(2) + "\n");
  std::cout << "cases:     " << result.kb.cases().size() << "\n"
            << "kb digest: " << result.kb.digest() << "\n";
  for (const auto& r : result.ledger) {
    std::cout << "planted " << r.name << ": carriers " << r.carriers << ", pairs " << r.pair_count
              << ", expected support " << std::setprecision(6) << r.expected_support << "\n";
  }
  std::cout << "written to " << out.string() << "\n";
  return kOk;
}

int cmd_serve(const fs::path& kb, int port, const std::string& token, const std::optional<fs::path>& assets) {
  ServiceConfig cfg;
  cfg.kb_text = kb_text_of(kb);
  cfg.token = token;
  cfg.static_dir = assets;

  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  Service svc(std::move(cfg));
  int bound = svc.bind(port);
  std::cout << "listening on http://" << svc.host() << ":" << bound << "\n"
            << "token " << svc.token() << "\n"
            << std::flush;

  std::thread waiter([&svc, set] {
    int sig = 0;
    sigwait(&set, &sig);
    svc.stop();
  });
  svc.listen();
  // listen() also returns on a failure; wake the waiter so it can exit.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  if (auto s = svc.session()) s->interrupt();
  svc.join_worker();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"casemine: mine adaptation rules from pairs of cases"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "casemine 0.1.0");

  MineOptions mine;
  auto* m = app.add_subcommand("mine", "run steps 1-9 headlessly and write the exports");
  m->add_option("--kb", mine.kb, "knowledge base file")->required()->check(CLI::ExistingFile);
  m->add_option("--sigma", mine.sigma, "minimum support in [0, 1] (default 0.1)")->check(CLI::Range(0.0, 1.0));
  m->add_option("--k-overlap", mine.k_overlap, "keep pairs sharing at least k problem properties");
  m->add_option("--filters", mine.filters, "JSON parameter/filter spec")->check(CLI::ExistingFile);
  m->add_option("--budget-seconds", mine.budget_seconds, "mining time budget")->check(CLI::PositiveNumber);
  m->add_option("--max-itemsets", mine.max_itemsets, "mining result cap");
  m->add_option("--threads", mine.threads, "mining threads")->check(CLI::Range(1u, 256u));
  m->add_flag("--snapshot", mine.snapshot, "also write session.json");
  std::string mine_out;
  m->add_option("--out", mine_out, "output directory (default $CASEMINE_OUT or ./casemine-out)");

  std::string spec_path, gen_out;
  std::optional<std::uint64_t> seed;
  auto* g = app.add_subcommand("gen", "generate a synthetic case base with planted rules");
  g->add_option("--spec", spec_path, "generator spec (JSON)")->required()->check(CLI::ExistingFile);
  g->add_option("--seed", seed, "override the spec seed");
  g->add_option("--out", gen_out, "output directory (default $CASEMINE_OUT or ./casemine-out)");

  std::string serve_kb, token;
  int port = 8765;
  std::optional<std::string> assets;
  auto* s = app.add_subcommand("serve", "run the local session service");
  s->add_option("--kb", serve_kb, "knowledge base file")->required()->check(CLI::ExistingFile);
  s->add_option("--port", port, "port on 127.0.0.1 (0 picks a free one)")->check(CLI::Range(0, 65535));
  s->add_option("--token", token, "session token (random when omitted)");
  s->add_option("--static", assets, "workbench asset directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (*m) {
    mine.out = mine_out.empty() ? default_out() : fs::path(mine_out);
    return run_guarded([&] { return cmd_mine(mine); });
  }
  if (*g) {
    return run_guarded([&] { return cmd_gen(spec_path, seed, gen_out.empty() ? default_out() : fs::path(gen_out)); });
  }
  std::optional<fs::path> asset_dir;
  if (assets) asset_dir = fs::path(*assets);
  return run_guarded([&] { return cmd_serve(serve_kb, port, token, asset_dir); });
}
