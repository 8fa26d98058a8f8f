#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "prelabel/providers.hpp"
#include "prelabel/store.hpp"

namespace httplib {
class Server;
}

namespace prelabel {

struct ServiceConfig {
  std::string bind = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "prelabel-data";
  ProviderConfig provider;
  std::chrono::seconds session_ttl{12 * 3600};
  bool allow_registration = false;
  std::string admin_user = "admin";
  std::string admin_password = "admin";
  /// Static UI files served at "/" when set.
  std::filesystem::path web_root;
  /// Pipeline worker threads per job; 0 picks hardware concurrency.
  unsigned worker_threads = 0;

  /// Defaults overridden by PRELABEL_BIND, PRELABEL_PORT, PRELABEL_DATA_DIR,
  /// PRELABEL_PROVIDER, PRELABEL_SIDECAR_URL, PRELABEL_SESSION_TTL,
  /// PRELABEL_SEED, PRELABEL_ALLOW_REGISTRATION, PRELABEL_ADMIN_USER,
  /// PRELABEL_ADMIN_PASSWORD and PRELABEL_WEB_ROOT.
  static ServiceConfig from_env();
};

nlohmann::json to_json(const Project& p);
nlohmann::json to_json(const LabelClass& c);
nlohmann::json to_json(const ImageRecord& r);
nlohmann::json to_json(const Annotation& a);

enum class JobKind { preannotate, import, export_ };
enum class JobState { queued, running, done, failed };

std::string_view to_string(JobKind k);
std::string_view to_string(JobState s);

struct JobStatus {
  std::int64_t id = 0;
  JobKind kind = JobKind::preannotate;
  std::int64_t project_id = 0;
  JobState state = JobState::queued;
  std::size_t processed = 0;
  std::size_t total = 0;
  std::size_t progress_events = 0;
  nlohmann::json report;
  std::string error;
};

nlohmann::json to_json(const JobStatus& j);

/// REST front end over a Store. Jobs run on background threads; the
/// destructor waits for them.
class Service {
 public:
  Service(Store& store, ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  const ServiceConfig& config() const { return config_; }

  /// Registers every route on `server`.
  void mount(httplib::Server& server);
  /// Binds and serves until `stop()` is called from another thread.
  void listen();
  void stop();

  std::optional<std::int64_t> session_user(const std::string& token) const;
  std::optional<JobStatus> job(std::int64_t id) const;
  /// Blocks until the job reaches a terminal state.
  JobStatus wait(std::int64_t id) const;

 private:
  struct Job;

  std::string create_session(std::int64_t user_id);
  std::int64_t start_job(JobKind kind, std::int64_t project_id,
                         std::function<nlohmann::json(Job&)> work);
  Providers providers_for(std::int64_t project_id) const;

  Store& store_;
  ServiceConfig config_;
  std::unique_ptr<httplib::Server> own_server_;

  struct Session {
    std::int64_t user_id = 0;
    std::chrono::steady_clock::time_point expires;
  };
  mutable std::mutex sessions_mutex_;
  std::map<std::string, Session> sessions_;

  mutable std::mutex jobs_mutex_;
  mutable std::condition_variable jobs_cv_;
  std::map<std::int64_t, std::unique_ptr<Job>> jobs_;
  std::set<std::int64_t> preannotating_;
  std::map<std::int64_t, std::string> downloads_;
  std::int64_t next_job_ = 1;
  std::vector<std::thread> threads_;
};

}  // namespace prelabel
