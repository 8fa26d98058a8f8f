#pragma once

#include <httplib.h>

#include <memory>
#include <thread>

#include <nlohmann/json.hpp>

#include "prelabel/service.hpp"
#include "prelabel/store.hpp"
#include "support.hpp"

namespace testing {

/// Store, service and HTTP server on an ephemeral port, plus a logged-in client.
struct LiveService {
  TempDir dir;
  std::unique_ptr<prelabel::Store> store;
  std::unique_ptr<prelabel::Service> service;
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::unique_ptr<httplib::Client> client;
  std::string token;

  explicit LiveService(prelabel::ServiceConfig config = {},
                       const std::filesystem::path& data_dir = {}) {
    config.data_dir = data_dir.empty() ? dir / "data" : data_dir;
    config.worker_threads = 2;
    store = std::make_unique<prelabel::Store>(config.data_dir);
    service = std::make_unique<prelabel::Service>(*store, config);
    service->mount(server);
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
    client->set_read_timeout(60, 0);
    const auto r = client->Post("/api/login", R"({"username":"admin","password":"admin"})",
                                "application/json");
    if (!r || r->status != 200) throw std::runtime_error("login failed");
    token = nlohmann::json::parse(r->body)["token"];
    client->set_bearer_token_auth(token);
  }

  ~LiveService() {
    server.stop();
    thread.join();
    service.reset();
  }

  static nlohmann::json body(const httplib::Result& r) {
    if (!r) throw std::runtime_error("request failed: " + httplib::to_string(r.error()));
    return r->body.empty() ? nlohmann::json() : nlohmann::json::parse(r->body);
  }

  httplib::Result post(const std::string& path, const nlohmann::json& j) {
    return client->Post(path, j.dump(), "application/json");
  }
  httplib::Result put(const std::string& path, const nlohmann::json& j) {
    return client->Put(path, j.dump(), "application/json");
  }

  /// Polls the job endpoint until the job is finished.
  nlohmann::json wait_job(std::int64_t id) {
    service->wait(id);
    return body(client->Get("/api/jobs/" + std::to_string(id)));
  }
};

}  // namespace testing
