#include "casemine/service.hpp"

#include <random>
#include <sstream>

#include "httplib.h"

#include "casemine/error.hpp"

namespace casemine {

using nlohmann::json;

std::string generate_token() {
  std::random_device rd;
  std::ostringstream os;
  for (int i = 0; i < 4; ++i) {
    os << std::hex;
    std::uint32_t w = rd();
    for (int b = 0; b < 8; ++b) os << ((w >> (28 - 4 * b)) & 0xF);
  }
  return os.str();
}

namespace {

class HttpError : public std::runtime_error {
 public:
  HttpError(int status, const std::string& message) : std::runtime_error(message), status(status) {}
  int status;
};

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& kind, const std::string& message) {
  send_json(res, {{"error", kind}, {"message", message}}, status);
}

template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const HttpError& e) {
      send_error(res, e.status, e.status == 401 ? "unauthorized" : "request", e.what());
    } catch (const Conflict& e) {
      send_error(res, 409, "conflict", e.what());
    } catch (const StateError& e) {
      send_error(res, 409, "state", e.what());
    } catch (const ParseError& e) {
      send_error(res, 400, "parse", e.what());
    } catch (const ValidationError& e) {
      send_error(res, 422, "validation", e.what());
    } catch (const Interrupted& e) {
      send_error(res, 409, "interrupted", e.what());
    } catch (const MiningError& e) {
      send_error(res, 422, "mining", e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, "json", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

json body_json(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw HttpError(400, std::string("malformed JSON body: ") + e.what());
  }
}

std::vector<std::string> tokens_of(const std::vector<Item>& items, const PropertyUniverse& u) {
  std::vector<std::string> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(item_token(it, u));
  return out;
}

json view_to_json(const FciView& v, const PropertyUniverse& u) {
  return {{"id", v.fci_id},
          {"support_count", v.support_count},
          {"support", v.support},
          {"item_count", v.item_count},
          {"group", v.group_key},
          {"simplified", tokens_of(v.simplified, u)},
          {"raw", tokens_of(v.raw, u)}};
}

std::vector<std::string> keys_of(const PropertySet& s) {
  std::vector<std::string> out;
  for (auto o : s.members()) out.push_back(s.universe()->key(o));
  return out;
}

std::size_t query_size(const httplib::Request& req, const char* key, std::size_t fallback) {
  if (!req.has_param(key)) return fallback;
  const auto v = req.get_param_value(key);
  try {
    std::size_t pos = 0;
    auto n = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
    throw ValidationError(std::string("query parameter '") + key + "' must be a non-negative integer");
  }
}

bool query_flag(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return false;
  auto v = req.get_param_value(key);
  return v == "1" || v == "true" || v == "yes";
}

constexpr const char* kPlaceholder =
    "<!doctype html><html><head><meta charset=\"utf-8\"><title>casemine</title></head>"
    "<body><h1>casemine service</h1><p>The workbench assets are not installed. "
    "The API is available under <code>/api</code>.</p></body></html>";

}  // namespace

Service::Service(ServiceConfig config) : config_(std::move(config)), server_(std::make_unique<httplib::Server>()) {
  if (config_.token.empty()) config_.token = generate_token();
  session_ = std::make_shared<Session>(config_.kb_text);
  // SO_REUSEADDR only: the library default also sets SO_REUSEPORT, which hides port conflicts.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  routes();
}

Service::~Service() {
  stop();
  if (auto s = session()) s->interrupt();
  join_worker();
}

std::shared_ptr<Session> Service::session() const {
  std::lock_guard lk(mu_);
  return session_;
}

int Service::bind(int port) {
  int bound = -1;
  if (port == 0) {
    bound = server_->bind_to_any_port(config_.host);
  } else if (server_->bind_to_port(config_.host, port)) {
    bound = port;
  }
  if (bound <= 0) {
    throw BindError("cannot listen on " + config_.host + ":" + std::to_string(port) +
                    " (address in use or not permitted)");
  }
  port_ = bound;
  return bound;
}

void Service::listen() { server_->listen_after_bind(); }

void Service::stop() {
  if (server_) server_->stop();
}

void Service::join_worker() {
  std::thread t;
  {
    std::lock_guard lk(mu_);
    t = std::move(worker_);
  }
  if (t.joinable()) t.join();
}

void Service::routes() {
  auto& srv = *server_;

  auto require_token = [this](const httplib::Request& req) {
    std::string presented;
    auto auth = req.get_header_value("Authorization");
    if (auth.rfind("Bearer ", 0) == 0) presented = auth.substr(7);
    if (presented.empty()) presented = req.get_header_value("X-Casemine-Token");
    bool ok = presented.size() == config_.token.size();
    unsigned diff = 0;
    for (std::size_t i = 0; ok && i < presented.size(); ++i) diff |= presented[i] ^ config_.token[i];
    if (!ok || diff != 0) throw HttpError(401, "missing or invalid session token");
  };

  // Returns the session after checking that no step worker is active.
  auto writable = [this]() {
    std::lock_guard lk(mu_);
    if (busy_ || session_->status() == SessionStatus::kRunning) {
      throw Conflict("a step is running");
    }
    return session_;
  };

  srv.Get("/api/health", guarded([](const httplib::Request&, httplib::Response& res) {
            send_json(res, {{"status", "ok"}});
          }));

  srv.Get("/api/session", guarded([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, session()->descriptor());
          }));

  srv.Post("/api/session", guarded([this, require_token](const httplib::Request& req, httplib::Response& res) {
             require_token(req);
             json body = body_json(req);
             std::shared_ptr<Session> fresh;
             if (body.contains("snapshot")) {
               fresh = Session::restore(body.at("snapshot"));
             } else {
               fresh = std::make_shared<Session>(body.value("kb_text", config_.kb_text));
             }
             std::thread old;
             {
               std::lock_guard lk(mu_);
               if (busy_ || session_->status() == SessionStatus::kRunning) throw Conflict("a step is running");
               session_ = fresh;
               old = std::move(worker_);
             }
             if (old.joinable()) old.join();
             send_json(res, fresh->descriptor(), 201);
           }));

  srv.Get("/api/params", guarded([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, params_to_json(session()->params()));
          }));

  srv.Put("/api/params", guarded([require_token, writable](const httplib::Request& req, httplib::Response& res) {
            require_token(req);
            auto s = writable();
            s->set_params(params_from_json(body_json(req), s->params()));
            send_json(res, s->descriptor());
          }));

  srv.Post(R"(/api/steps/(\d+)/run)",
           guarded([this, require_token](const httplib::Request& req, httplib::Response& res) {
             require_token(req);
             int step = std::stoi(req.matches[1]);
             if (step < kFirstStep || step > kLastStep) throw ValidationError("unknown step " + std::to_string(step));
             bool through = query_flag(req, "through");
             bool wait = query_flag(req, "wait");
             std::shared_ptr<Session> s;
             std::thread previous;
             {
               std::lock_guard lk(mu_);
               s = session_;
               if (busy_ || s->status() == SessionStatus::kRunning) throw Conflict("a step is running");
               busy_ = true;
               previous = std::move(worker_);
             }
             if (previous.joinable()) previous.join();
             auto release = [this] {
               std::lock_guard lk(mu_);
               busy_ = false;
             };
             int have = s->completed_step();
             if (!through && have < step - 1) {
               release();
               throw StateError("missing input: step " + std::to_string(have + 1) + " (" +
                                std::string(step_name(have + 1)) + ") has not run");
             }
             auto job = [s, step, through, release] {
               try {
                 if (through) {
                   s->run_through(step);
                 } else {
                   s->run_step(step);
                 }
               } catch (const std::exception&) {
                 // recorded in the session's last_error
               }
               release();
             };
             if (wait) {
               job();
               auto d = s->descriptor();
               send_json(res, d, d["last_error"].is_null() ? 200 : 422);
               return;
             }
             {
               std::lock_guard lk(mu_);
               worker_ = std::thread(job);
             }
             send_json(res, {{"accepted", true}, {"step", step}, {"through", through}}, 202);
           }));

  srv.Post("/api/steps/interrupt", guarded([this, require_token](const httplib::Request& req, httplib::Response& res) {
             require_token(req);
             bool signalled = session()->interrupt();
             send_json(res, {{"interrupted", signalled}});
           }));

  srv.Post("/api/go-back", guarded([require_token, writable](const httplib::Request& req, httplib::Response& res) {
             require_token(req);
             auto s = writable();
             json body = body_json(req);
             if (!body.contains("step")) throw ValidationError("go-back needs a 'step'");
             s->go_back(body.at("step").get<int>());
             send_json(res, s->descriptor());
           }));

  srv.Get("/api/fcis", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session();
            FciQuery q;
            if (req.has_param("sort")) q.sort = req.get_param_value("sort");
            if (req.has_param("order")) {
              auto o = req.get_param_value("order");
              if (o != "asc" && o != "desc") throw ValidationError("order must be asc or desc");
              q.descending = o == "desc";
            }
            q.group = query_flag(req, "group");
            q.offset = query_size(req, "offset", 0);
            q.limit = std::min<std::size_t>(query_size(req, "limit", q.limit), 1000);
            if (req.has_param("min_support")) {
              try {
                q.min_support = std::stod(req.get_param_value("min_support"));
              } catch (const std::exception&) {
                throw ValidationError("min_support must be a number");
              }
            }
            auto page = s->query_fcis(q);
            auto a = s->artifacts();
            const auto& u = *a.projected->base.universe;
            json items = json::array();
            for (const auto& v : page.items) items.push_back(view_to_json(v, u));
            json groups = json::array();
            for (const auto& [k, n] : page.groups) groups.push_back({{"group", k}, {"count", n}});
            send_json(res, {{"total", page.total},
                            {"offset", q.offset},
                            {"limit", q.limit},
                            {"items", items},
                            {"groups", groups}});
          }));

  srv.Get(R"(/api/fcis/([0-9a-f]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session();
            auto v = s->fci_detail(req.matches[1]);
            if (!v) throw HttpError(404, "unknown FCI");
            send_json(res, view_to_json(*v, *s->artifacts().projected->base.universe));
          }));

  srv.Get("/api/rules", guarded([this](const httplib::Request& req, httplib::Response& res) {
            std::optional<RuleStatus> want;
            if (req.has_param("status")) want = parse_status(req.get_param_value("status"));
            json arr = json::array();
            for (const auto& r : session()->rules()) {
              if (!want || r.status == *want) arr.push_back(rule_to_json(r));
            }
            send_json(res, arr);
          }));

  srv.Get(R"(/api/rules/([0-9a-f]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto r = session()->rule(req.matches[1]);
            if (!r) throw HttpError(404, "unknown rule");
            send_json(res, rule_to_json(*r));
          }));

  // Looks up the candidate rendered from an FCI.
  srv.Post("/api/rules", guarded([this, require_token](const httplib::Request& req, httplib::Response& res) {
             require_token(req);
             json body = body_json(req);
             auto fci = body.at("fci_id").get<std::string>();
             for (const auto& r : session()->rules()) {
               if (r.source_fci_id == fci) {
                 send_json(res, rule_to_json(r));
                 return;
               }
             }
             throw HttpError(404, "no rule was rendered from FCI " + fci);
           }));

  srv.Post(R"(/api/rules/([0-9a-f]+)/(validate|reject|edit))",
           guarded([require_token, writable](const httplib::Request& req, httplib::Response& res) {
             require_token(req);
             auto s = writable();
             json body = body_json(req);
             std::string id = req.matches[1];
             std::string action = req.matches[2];
             std::string author = body.value("author", "analyst");
             if (!s->rule(id)) throw HttpError(404, "unknown rule");
             AdaptationRule r;
             if (action == "validate") {
               r = s->validate_rule(id, body.value("explanation", ""), author);
             } else if (action == "reject") {
               r = s->reject_rule(id, body.value("explanation", ""), author);
             } else {
               r = s->edit_rule(id, body.value("removals", std::vector<std::string>{}),
                                body.value("additions", std::vector<std::string>{}), author);
             }
             send_json(res, rule_to_json(r));
           }));

  srv.Post("/api/apply", guarded([this, require_token](const httplib::Request& req, httplib::Response& res) {
             require_token(req);
             json body = body_json(req);
             auto out = session()->apply(body.at("rule_id").get<std::string>(), body.at("source_case").get<std::string>(),
                                         body.at("target_problem").get<std::string>());
             json j{{"rule_id", out.rule.id},
                    {"applicable", out.application.applicable},
                    {"unmet", out.application.unmet},
                    {"solution", out.application.solution ? json(keys_of(*out.application.solution)) : json(nullptr)},
                    {"decisions", out.decisions},
                    {"decision_solution",
                     out.decision_solution ? json(keys_of(*out.decision_solution)) : json(nullptr)},
                    {"warnings", out.warnings}};
             send_json(res, j);
           }));

  srv.Post(R"(/api/export/(\w+))", guarded([this, require_token](const httplib::Request& req, httplib::Response& res) {
             require_token(req);
             std::string kind = req.matches[1];
             std::string text = session()->export_text(kind);
             bool is_json = kind == "rules" || kind == "candidates" || kind == "session";
             res.set_content(text, is_json ? "application/json" : "text/plain; charset=utf-8");
           }));

  srv.Get("/api/summary", guarded([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, session()->summary());
          }));

  if (config_.static_dir && std::filesystem::is_directory(*config_.static_dir)) {
    srv.set_mount_point("/", config_.static_dir->string());
  } else {
    srv.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_content(kPlaceholder, "text/html"); });
  }
}

}  // namespace casemine
