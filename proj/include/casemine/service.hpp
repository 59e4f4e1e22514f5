#ifndef CASEMINE_SERVICE_HPP
#define CASEMINE_SERVICE_HPP

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "casemine/session.hpp"

namespace httplib {
class Server;
}

namespace casemine {

struct ServiceConfig {
  std::string kb_text;
  std::string token;  // generated when empty
  std::string host = "127.0.0.1";
  /// Directory with the workbench assets; a placeholder page is served when unset.
  std::optional<std::filesystem::path> static_dir;
};

/// Random hex token for mutating requests.
std::string generate_token();

/// Local HTTP front end over one Session.
///
/// Reads are open. Mutations need "Authorization: Bearer <token>" (or the
/// X-Casemine-Token header). Step runs are started on a worker thread and
/// polled via GET /api/session.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds the socket; port 0 picks a free port. Throws BindError.
  int bind(int port);
  /// Serves until stop(). Requires bind().
  void listen();
  void stop();
  /// Waits for a running step worker, if any.
  void join_worker();

  const std::string& token() const { return config_.token; }
  const std::string& host() const { return config_.host; }
  int port() const { return port_; }

  /// The current session; replaced by POST /api/session.
  std::shared_ptr<Session> session() const;

 private:
  void routes();

  ServiceConfig config_;
  std::unique_ptr<httplib::Server> server_;
  int port_ = 0;

  mutable std::mutex mu_;  // guards session_ and worker_
  std::shared_ptr<Session> session_;
  std::thread worker_;
  bool busy_ = false;  // a worker owns the session
};

}  // namespace casemine

#endif  // CASEMINE_SERVICE_HPP
