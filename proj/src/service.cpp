#include "prelabel/service.hpp"

#include <sodium.h>

#include <algorithm>
#include <cstdlib>
#include <iostream>

#include <httplib.h>

#include "prelabel/errors.hpp"
#include "prelabel/formats.hpp"
#include "prelabel/image.hpp"
#include "prelabel/postprocess.hpp"
#include "prelabel/preannotator.hpp"
#include "prelabel/text.hpp"

namespace prelabel {

using nlohmann::json;

namespace {

constexpr std::size_t kDefaultPage = 50;
constexpr std::size_t kMaxPage = 500;
constexpr std::size_t kTokenBytes = 32;

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

long env_number(const char* name, const std::string& text) {
  try {
    std::size_t used = 0;
    const long v = std::stol(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw InputError(std::string(name) + " must be an integer, got '" + text + "'");
}

bool env_flag(const std::string& v) {
  const std::string l = to_lower(v);
  return l == "1" || l == "true" || l == "yes" || l == "on";
}

/// Thrown by handlers to answer with a specific status and JSON body.
struct HttpError {
  int status;
  json body;
};

[[noreturn]] void fail(int status, const std::string& message, json extra = json::object()) {
  extra["error"] = message;
  throw HttpError{status, std::move(extra)};
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    fail(422, std::string("request body is not valid JSON: ") + e.what());
  }
}

std::int64_t id_at(const httplib::Request& req, std::size_t i = 1) {
  return std::stoll(req.matches[i].str());
}

std::size_t query_size(const httplib::Request& req, const char* key, std::size_t def) {
  if (!req.has_param(key)) return def;
  const std::string v = req.get_param_value(key);
  try {
    std::size_t used = 0;
    const long long n = std::stoll(v, &used);
    if (used == v.size() && n >= 0) return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
  }
  fail(422, std::string("query parameter ") + key + " must be a non-negative integer",
       {{"fields", {{key, "not a non-negative integer"}}}});
}

bool query_flag(const httplib::Request& req, const char* key) {
  return req.has_param(key) && env_flag(req.get_param_value(key));
}

std::pair<std::size_t, std::size_t> page_of(const httplib::Request& req) {
  const std::size_t offset = query_size(req, "offset", 0);
  const std::size_t limit = std::min(query_size(req, "limit", kDefaultPage), kMaxPage);
  return {offset, limit};
}

std::string bearer_token(const httplib::Request& req) {
  const std::string h = req.get_header_value("Authorization");
  const std::string prefix = "Bearer ";
  if (h.size() <= prefix.size() || h.compare(0, prefix.size(), prefix) != 0) return {};
  return h.substr(prefix.size());
}

std::string random_token() {
  unsigned char raw[kTokenBytes];
  randombytes_buf(raw, sizeof raw);
  char hex[kTokenBytes * 2 + 1];
  sodium_bin2hex(hex, sizeof hex, raw, sizeof raw);
  return hex;
}

std::string revision_of(const json& items) {
  const std::string text = items.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string safe_file_name(const std::string& raw) {
  const std::string name = std::filesystem::path(raw).filename().string();
  if (name.empty() || name == "." || name == ".." ||
      name.find_first_of("/\\") != std::string::npos) {
    fail(422, "invalid file name '" + raw + "'");
  }
  return name;
}

std::vector<std::string> class_names(const Store& store, std::int64_t project_id) {
  std::vector<std::string> names;
  for (const auto& c : store.classes(project_id)) names.push_back(c.name);
  return names;
}

std::optional<double> optional_score(const json& item, const char* key, json& errors,
                                     std::size_t index) {
  if (!item.contains(key) || item[key].is_null()) return std::nullopt;
  if (!item[key].is_number()) {
    errors.push_back({{"index", index}, {"field", key}, {"message", "must be a number"}});
    return std::nullopt;
  }
  return item[key].get<double>();
}

json polygon_json(const Polygon& p) {
  json out = json::array();
  for (const auto& pt : p.points) {
    out.push_back(pt.x);
    out.push_back(pt.y);
  }
  return out;
}

}  // namespace

ServiceConfig ServiceConfig::from_env() {
  ServiceConfig c;
  if (auto v = env("PRELABEL_BIND")) c.bind = *v;
  if (auto v = env("PRELABEL_PORT")) {
    const long port = env_number("PRELABEL_PORT", *v);
    if (port < 0 || port > 65535) throw InputError("PRELABEL_PORT out of range");
    c.port = static_cast<int>(port);
  }
  if (auto v = env("PRELABEL_DATA_DIR")) c.data_dir = *v;
  if (auto v = env("PRELABEL_PROVIDER")) {
    const std::string kind = to_lower(*v);
    if (kind == "mock") {
      c.provider.kind = ProviderKind::mock;
    } else if (kind == "sidecar") {
      c.provider.kind = ProviderKind::sidecar;
    } else {
      throw InputError("PRELABEL_PROVIDER must be mock or sidecar, got '" + *v + "'");
    }
  }
  if (auto v = env("PRELABEL_SIDECAR_URL")) c.provider.endpoint = *v;
  if (auto v = env("PRELABEL_SESSION_TTL")) {
    const long ttl = env_number("PRELABEL_SESSION_TTL", *v);
    if (ttl <= 0) throw InputError("PRELABEL_SESSION_TTL must be positive");
    c.session_ttl = std::chrono::seconds(ttl);
  }
  if (auto v = env("PRELABEL_SEED")) {
    c.provider.seed = static_cast<std::uint64_t>(env_number("PRELABEL_SEED", *v));
  }
  if (auto v = env("PRELABEL_ALLOW_REGISTRATION")) c.allow_registration = env_flag(*v);
  if (auto v = env("PRELABEL_ADMIN_USER")) c.admin_user = *v;
  if (auto v = env("PRELABEL_ADMIN_PASSWORD")) c.admin_password = *v;
  if (auto v = env("PRELABEL_WEB_ROOT")) c.web_root = *v;
  return c;
}

json to_json(const Project& p) {
  return {{"id", p.id},
          {"name", p.name},
          {"mode", to_string(p.mode)},
          {"settings", to_json(p.settings)},
          {"created_at", p.created_at}};
}

json to_json(const LabelClass& c) {
  return {{"id", c.id}, {"name", c.name}, {"color", c.display_color}};
}

json to_json(const ImageRecord& r) {
  return {{"id", r.id},
          {"project_id", r.project_id},
          {"file_name", r.file_name},
          {"width", r.width},
          {"height", r.height},
          {"status", to_string(r.status)},
          {"preannotated", r.preannotated},
          {"marked_done", r.marked_done}};
}

json to_json(const Annotation& a) {
  json j = {{"id", a.id},
            {"image_id", a.image_id},
            {"class_id", a.class_id},
            {"kind", to_string(kind_of(a.geometry))},
            {"coords", geometry_coords(a.geometry)},
            {"source", to_string(a.source)},
            {"state", to_string(a.state)}};
  j["detector_score"] = a.detector_score ? json(*a.detector_score) : json();
  j["verified_score"] = a.verified_score ? json(*a.verified_score) : json();
  return j;
}

std::string_view to_string(JobKind k) {
  switch (k) {
    case JobKind::preannotate: return "preannotate";
    case JobKind::import: return "import";
    case JobKind::export_: return "export";
  }
  return "?";
}

std::string_view to_string(JobState s) {
  switch (s) {
    case JobState::queued: return "queued";
    case JobState::running: return "running";
    case JobState::done: return "done";
    case JobState::failed: return "failed";
  }
  return "?";
}

json to_json(const JobStatus& j) {
  json out = {{"id", j.id},
              {"kind", to_string(j.kind)},
              {"project_id", j.project_id},
              {"state", to_string(j.state)},
              {"progress", {{"processed", j.processed}, {"total", j.total}}},
              {"progress_events", j.progress_events}};
  out["report"] = j.report;
  if (!j.error.empty()) out["error"] = j.error;
  return out;
}

struct Service::Job {
  JobStatus status;
};

Service::Service(Store& store, ServiceConfig config) : store_(store), config_(std::move(config)) {
  if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
  config_.provider.validate();
  if (store_.user_count() == 0) {
    store_.create_user(config_.admin_user, config_.admin_password);
  }
}

Service::~Service() {
  stop();
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(jobs_mutex_);
    threads.swap(threads_);
  }
  for (auto& t : threads) t.join();
}

std::string Service::create_session(std::int64_t user_id) {
  std::string token = random_token();
  std::lock_guard lock(sessions_mutex_);
  const auto now = std::chrono::steady_clock::now();
  std::erase_if(sessions_, [&](const auto& kv) { return kv.second.expires <= now; });
  sessions_[token] = {user_id, now + config_.session_ttl};
  return token;
}

std::optional<std::int64_t> Service::session_user(const std::string& token) const {
  if (token.empty()) return std::nullopt;
  std::lock_guard lock(sessions_mutex_);
  const auto it = sessions_.find(token);
  if (it == sessions_.end() || it->second.expires <= std::chrono::steady_clock::now()) {
    return std::nullopt;
  }
  return it->second.user_id;
}

std::optional<JobStatus> Service::job(std::int64_t id) const {
  std::lock_guard lock(jobs_mutex_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second->status;
}

JobStatus Service::wait(std::int64_t id) const {
  std::unique_lock lock(jobs_mutex_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) throw NotFoundError("job " + std::to_string(id) + " not found");
  const Job& job = *it->second;
  jobs_cv_.wait(lock, [&] {
    return job.status.state == JobState::done || job.status.state == JobState::failed;
  });
  return job.status;
}

Providers Service::providers_for(std::int64_t project_id) const {
  return make_providers(config_.provider, class_names(store_, project_id));
}

std::int64_t Service::start_job(JobKind kind, std::int64_t project_id,
                                std::function<json(Job&)> work) {
  std::lock_guard lock(jobs_mutex_);
  const std::int64_t id = next_job_++;
  auto job = std::make_unique<Job>();
  job->status.id = id;
  job->status.kind = kind;
  job->status.project_id = project_id;
  Job* raw = job.get();
  jobs_[id] = std::move(job);
  threads_.emplace_back([this, raw, kind, project_id, work = std::move(work)] {
    {
      std::lock_guard l(jobs_mutex_);
      raw->status.state = JobState::running;
    }
    json report;
    std::string error;
    try {
      report = work(*raw);
    } catch (const std::exception& e) {
      error = e.what();
    }
    std::lock_guard l(jobs_mutex_);
    raw->status.report = std::move(report);
    raw->status.error = std::move(error);
    raw->status.state = raw->status.error.empty() ? JobState::done : JobState::failed;
    if (kind == JobKind::preannotate) preannotating_.erase(project_id);
    jobs_cv_.notify_all();
  });
  return id;
}

void Service::listen() {
  {
    std::lock_guard lock(jobs_mutex_);
    if (!own_server_) {
      own_server_ = std::make_unique<httplib::Server>();
      mount(*own_server_);
    }
  }
  if (!own_server_->listen(config_.bind, config_.port)) {
    throw std::runtime_error("cannot listen on " + config_.bind + ":" +
                             std::to_string(config_.port));
  }
}

void Service::stop() {
  if (own_server_) own_server_->stop();
}

void Service::mount(httplib::Server& server) {
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  // Every API handler runs through here: authentication, then error mapping.
  auto wrap = [this](bool needs_auth, Handler h) {
    return [this, needs_auth, h = std::move(h)](const httplib::Request& req,
                                                 httplib::Response& res) {
      try {
        if (needs_auth && !session_user(bearer_token(req))) {
          fail(401, "missing or expired session token");
        }
        h(req, res);
      } catch (const HttpError& e) {
        reply(res, e.status, e.body);
      } catch (const NotFoundError& e) {
        reply(res, 404, {{"error", e.what()}});
      } catch (const ConflictError& e) {
        reply(res, 409, {{"error", e.what()}});
      } catch (const ParseError& e) {
        reply(res, 422, {{"error", e.what()}, {"where", e.where()}});
      } catch (const InputError& e) {
        reply(res, 422, {{"error", e.what()}});
      } catch (const json::exception& e) {
        reply(res, 422, {{"error", std::string("malformed request: ") + e.what()}});
      } catch (const std::exception& e) {
        reply(res, 500, {{"error", e.what()}});
      }
    };
  };
  auto get = [&](const char* pattern, bool auth, Handler h) {
    server.Get(pattern, wrap(auth, std::move(h)));
  };
  auto post = [&](const char* pattern, bool auth, Handler h) {
    server.Post(pattern, wrap(auth, std::move(h)));
  };

  get("/health", false, [](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, {{"status", "ok"}});
  });

  post("/api/login", false, [this](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    const auto user = store_.authenticate(body.value("username", ""), body.value("password", ""));
    if (!user) fail(401, "invalid username or password");
    reply(res, 200,
          {{"token", create_session(*user)}, {"expires_in", config_.session_ttl.count()}});
  });

  post("/api/register", false, [this](const httplib::Request& req, httplib::Response& res) {
    if (!config_.allow_registration) fail(403, "registration is disabled");
    const json body = parse_body(req);
    const std::string user = body.value("username", "");
    const std::string pass = body.value("password", "");
    json fields = json::object();
    if (user.empty()) fields["username"] = "required";
    if (pass.size() < 8) fields["password"] = "at least 8 characters";
    if (!fields.empty()) fail(422, "invalid registration", {{"fields", fields}});
    reply(res, 201, {{"id", store_.create_user(user, pass)}, {"username", user}});
  });

  get("/api/projects", true, [this](const httplib::Request& req, httplib::Response& res) {
    const auto [offset, limit] = page_of(req);
    json items = json::array();
    for (const auto& p : store_.list_projects(offset, limit)) items.push_back(to_json(p));
    reply(res, 200,
          {{"items", items},
           {"offset", offset},
           {"limit", limit},
           {"total", store_.list_projects().size()}});
  });

  post("/api/projects", true, [this](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    json fields = json::object();
    const std::string name = body.value("name", "");
    if (name.empty()) fields["name"] = "required";
    ProjectMode mode = ProjectMode::detection;
    try {
      mode = parse_project_mode(body.value("mode", "detection"));
    } catch (const InputError& e) {
      fields["mode"] = e.what();
    }
    std::vector<std::string> classes;
    if (!body.contains("classes") || !body["classes"].is_array() || body["classes"].empty()) {
      fields["classes"] = "a non-empty list of class names is required";
    } else {
      for (const auto& c : body["classes"]) {
        if (!c.is_string() || normalize_label(c.get<std::string>()).empty()) {
          fields["classes"] = "class names must be non-empty strings";
          break;
        }
        classes.push_back(c.get<std::string>());
      }
    }
    PipelineSettings settings;
    if (body.contains("settings")) {
      try {
        settings = settings_from_json(body["settings"]);
      } catch (const std::exception& e) {
        fields["settings"] = e.what();
      }
    }
    if (!fields.empty()) fail(422, "invalid project", {{"fields", fields}});
    const Project p = store_.create_project(name, mode, classes, settings);
    json out = to_json(p);
    json cls = json::array();
    for (const auto& c : store_.classes(p.id)) cls.push_back(to_json(c));
    out["classes"] = cls;
    reply(res, 201, out);
  });

  get(R"(/api/projects/(\d+))", true, [this](const httplib::Request& req, httplib::Response& res) {
    const Project p = store_.project(id_at(req));
    json out = to_json(p);
    json cls = json::array();
    for (const auto& c : store_.classes(p.id)) cls.push_back(to_json(c));
    out["classes"] = cls;
    reply(res, 200, out);
  });

  server.Delete(R"(/api/projects/(\d+))",
                wrap(true, [this](const httplib::Request& req, httplib::Response& res) {
                  const std::int64_t id = id_at(req);
                  {
                    std::lock_guard lock(jobs_mutex_);
                    if (preannotating_.count(id)) fail(409, "a pre-annotation job is running");
                  }
                  store_.delete_project(id);
                  reply(res, 200, {{"deleted", id}});
                }));

  server.Put(R"(/api/projects/(\d+)/settings)",
             wrap(true, [this](const httplib::Request& req, httplib::Response& res) {
               const std::int64_t id = id_at(req);
               store_.project(id);
               PipelineSettings s;
               try {
                 s = settings_from_json(parse_body(req));
               } catch (const InputError& e) {
                 fail(422, e.what(), {{"fields", {{"settings", e.what()}}}});
               }
               store_.update_settings(id, s);
               reply(res, 200, to_json(store_.project(id)));
             }));

  get(R"(/api/projects/(\d+)/images)", true,
      [this](const httplib::Request& req, httplib::Response& res) {
        const std::int64_t id = id_at(req);
        store_.project(id);
        const auto [offset, limit] = page_of(req);
        json items = json::array();
        for (const auto& r : store_.images(id, offset, limit)) items.push_back(to_json(r));
        reply(res, 200,
              {{"items", items},
               {"offset", offset},
               {"limit", limit},
               {"total", store_.image_count(id)}});
      });

  post(R"(/api/projects/(\d+)/images)", true,
       [this](const httplib::Request& req, httplib::Response& res) {
         const std::int64_t id = id_at(req);
         store_.project(id);
         std::vector<std::filesystem::path> paths;
         if (req.is_multipart_form_data()) {
           const auto dir = config_.data_dir / "uploads" / std::to_string(id);
           std::vector<std::pair<std::filesystem::path, const std::string*>> files;
           for (const auto& [field, file] : req.files) {
             if (file.filename.empty()) continue;
             const std::string name = safe_file_name(file.filename);
             if (!is_image_file(name)) fail(422, "unsupported image type: " + name);
             const auto path = dir / name;
             if (std::filesystem::exists(path)) fail(409, "image already uploaded: " + name);
             files.emplace_back(path, &file.content);
           }
           if (files.empty()) fail(422, "no files in upload");
           std::filesystem::create_directories(dir);
           for (const auto& [path, content] : files) {
             write_file(path, *content);
             paths.push_back(path);
           }
         } else {
           const json body = parse_body(req);
           if (!body.contains("folder") || !body["folder"].is_string()) {
             fail(422, "expected multipart files or {\"folder\": path}",
                  {{"fields", {{"folder", "required"}}}});
           }
           const std::filesystem::path folder = body["folder"].get<std::string>();
           if (!std::filesystem::is_directory(folder)) {
             fail(422, "not a directory: " + folder.string(),
                  {{"fields", {{"folder", "not a directory"}}}});
           }
           for (const auto& e : std::filesystem::directory_iterator(folder)) {
             if (e.is_regular_file() && is_image_file(e.path())) paths.push_back(e.path());
           }
           std::sort(paths.begin(), paths.end());
         }
         json items = json::array();
         for (const auto& p : paths) items.push_back(to_json(store_.add_image(id, p)));
         reply(res, 201, {{"items", items}});
       });

  get(R"(/api/images/(\d+))", true, [this](const httplib::Request& req, httplib::Response& res) {
    reply(res, 200, to_json(store_.image(id_at(req))));
  });

  get(R"(/api/images/(\d+)/file)", true,
      [this](const httplib::Request& req, httplib::Response& res) {
        const ImageRecord r = store_.image(id_at(req));
        const std::string ext = to_lower(std::filesystem::path(r.file_name).extension().string());
        res.set_content(read_file(r.path),
                        ext == ".png" ? "image/png" : "image/x-portable-anymap");
      });

  post(R"(/api/images/(\d+)/done)", true,
       [this](const httplib::Request& req, httplib::Response& res) {
         const std::int64_t id = id_at(req);
         const json body = parse_body(req);
         store_.mark_done(id, body.value("done", true));
         reply(res, 200, to_json(store_.image(id)));
       });

  auto annotations_body = [this](std::int64_t image_id) {
    json items = json::array();
    for (const auto& a : store_.annotations(image_id)) items.push_back(to_json(a));
    return json{{"image_id", image_id}, {"revision", revision_of(items)}, {"items", items}};
  };

  get(R"(/api/images/(\d+)/annotations)", true,
      [this, annotations_body](const httplib::Request& req, httplib::Response& res) {
        const std::int64_t id = id_at(req);
        store_.image(id);
        reply(res, 200, annotations_body(id));
      });

  server.Put(
      R"(/api/images/(\d+)/annotations)",
      wrap(true, [this, annotations_body](const httplib::Request& req, httplib::Response& res) {
        const std::int64_t id = id_at(req);
        const ImageRecord image = store_.image(id);
        const json body = parse_body(req);
        if (!body.contains("items") || !body["items"].is_array()) {
          fail(422, "body needs an items array", {{"fields", {{"items", "required"}}}});
        }
        std::map<std::string, std::int64_t> by_name;
        std::set<std::int64_t> class_ids;
        for (const auto& c : store_.classes(image.project_id)) {
          by_name[c.name] = c.id;
          class_ids.insert(c.id);
        }
        json errors = json::array();
        std::vector<NewAnnotation> items;
        const json& list = body["items"];
        for (std::size_t i = 0; i < list.size(); ++i) {
          const json& item = list[i];
          auto error = [&](const char* field, const std::string& msg) {
            errors.push_back({{"index", i}, {"field", field}, {"message", msg}});
          };
          if (!item.is_object()) {
            error("item", "must be an object");
            continue;
          }
          NewAnnotation a;
          bool ok = true;
          if (item.contains("class_id") && item["class_id"].is_number_integer()) {
            a.class_id = item["class_id"].get<std::int64_t>();
            if (!class_ids.count(a.class_id)) {
              error("class_id", "unknown class id");
              ok = false;
            }
          } else if (item.contains("class") && item["class"].is_string()) {
            const auto it = by_name.find(normalize_label(item["class"].get<std::string>()));
            if (it == by_name.end()) {
              error("class", "unknown class name");
              ok = false;
            } else {
              a.class_id = it->second;
            }
          } else {
            error("class", "class or class_id required");
            ok = false;
          }
          try {
            const GeometryKind kind = parse_geometry_kind(item.value("kind", ""));
            if (!item.contains("coords") || !item["coords"].is_array()) {
              throw InputError("coords must be a number list");
            }
            std::vector<double> coords;
            for (const auto& v : item["coords"]) {
              if (!v.is_number()) throw InputError("coords must be a number list");
              coords.push_back(v.get<double>());
            }
            a.geometry = geometry_from_coords(kind, coords);
          } catch (const InputError& e) {
            error("geometry", e.what());
            ok = false;
          }
          try {
            if (item.contains("source")) a.source = parse_source(item["source"].get<std::string>());
            if (item.contains("state")) a.state = parse_state(item["state"].get<std::string>());
          } catch (const std::exception& e) {
            error("source", e.what());
            ok = false;
          }
          a.detector_score = optional_score(item, "detector_score", errors, i);
          a.verified_score = optional_score(item, "verified_score", errors, i);
          if (ok) {
            for (const auto& reason : store_.validate_annotation(image, a)) {
              error("annotation", reason);
            }
          }
          items.push_back(std::move(a));
        }
        std::set<AnnotationSource> replace = {AnnotationSource::auto_,
                                              AnnotationSource::auto_verified,
                                              AnnotationSource::assisted, AnnotationSource::manual};
        if (body.contains("replace_sources")) {
          replace.clear();
          try {
            for (const auto& s : body["replace_sources"]) {
              replace.insert(parse_source(s.get<std::string>()));
            }
          } catch (const std::exception& e) {
            errors.push_back({{"field", "replace_sources"}, {"message", e.what()}});
          }
        }
        if (!errors.empty()) fail(422, "annotation validation failed", {{"errors", errors}});
        if (body.contains("revision") &&
            body["revision"] != annotations_body(id)["revision"]) {
          fail(409, "annotations changed since revision " + body["revision"].dump());
        }
        const UpsertResult r = store_.upsert_annotations(id, items, replace);
        json out = annotations_body(id);
        out["inserted"] = r.inserted;
        out["replaced"] = r.replaced;
        out["image"] = to_json(store_.image(id));
        reply(res, 200, out);
      }));

  server.Delete(R"(/api/images/(\d+)/annotations)",
                wrap(true, [this](const httplib::Request& req, httplib::Response& res) {
                  reply(res, 200, {{"deleted", store_.delete_annotations(id_at(req))}});
                }));

  post(R"(/api/images/(\d+)/mask)", true,
       [this](const httplib::Request& req, httplib::Response& res) {
         const ImageRecord r = store_.image(id_at(req));
         const json body = parse_body(req);
         MaskSeed seed;
         if (body.contains("box") && body["box"].is_array() && body["box"].size() == 4) {
           const auto& b = body["box"];
           seed = BBox{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                       b[3].get<double>()};
           if (!std::get<BBox>(seed).valid()) fail(422, "degenerate seed box");
         } else if (body.contains("point") && body["point"].is_array() &&
                    body["point"].size() == 2) {
           seed = Point{body["point"][0].get<double>(), body["point"][1].get<double>()};
         } else {
           fail(422, "seed needs box [x1,y1,x2,y2] or point [x,y]",
                {{"fields", {{"seed", "required"}}}});
         }
         const Providers providers = providers_for(r.project_id);
         if (!providers.masks) fail(422, "no mask provider configured");
         const Image image = load_image(r.path);
         const BinaryMask mask = close_mask(providers.masks->generate_mask(image, seed));
         json polygons = json::array();
         json boxes = json::array();
         for (const auto& p : mask_to_polygons(mask)) {
           polygons.push_back(polygon_json(p));
           const OrientedBox o = std::get<OrientedBox>(encapsulate(p, EncapsulationMode::oriented));
           boxes.push_back({o.cx, o.cy, o.w, o.h, o.theta});
         }
         reply(res, 200, {{"image_id", r.id}, {"polygons", polygons}, {"obbs", boxes}});
       });

  post(R"(/api/projects/(\d+)/preannotate)", true,
       [this](const httplib::Request& req, httplib::Response& res) {
         const std::int64_t id = id_at(req);
         const Project p = store_.project(id);
         const json body = parse_body(req);
         PipelineSettings settings = p.settings;
         if (body.contains("settings")) {
           try {
             json merged = to_json(settings);
             merged.update(body["settings"]);
             settings = settings_from_json(merged);
           } catch (const std::exception& e) {
             fail(422, e.what(), {{"fields", {{"settings", e.what()}}}});
           }
         }
         const Providers providers = providers_for(id);
         {
           std::lock_guard lock(jobs_mutex_);
           if (!preannotating_.insert(id).second) {
             fail(409, "a pre-annotation job is already running for this project");
           }
         }
         const unsigned threads = config_.worker_threads;
         const std::int64_t job = start_job(
             JobKind::preannotate, id, [this, id, settings, providers, threads](Job& j) {
               {
                 std::lock_guard lock(jobs_mutex_);
                 j.status.total = store_.image_count(id);
               }
               BatchOptions options;
               options.threads = threads;
               options.on_progress = [this, &j](const ProgressEvent& e) {
                 std::lock_guard lock(jobs_mutex_);
                 j.status.processed = std::max(j.status.processed, e.completed);
                 j.status.total = e.total;
                 ++j.status.progress_events;
               };
               return to_json(preannotate_batch(store_, id, settings, providers, options));
             });
         reply(res, 202, to_json(*this->job(job)));
       });

  post(R"(/api/projects/(\d+)/import)", true,
       [this](const httplib::Request& req, httplib::Response& res) {
         const std::int64_t id = id_at(req);
         store_.project(id);
         ExportFormat format{};
         FileMap files;
         const bool zipped = req.body.size() >= 2 && req.body.compare(0, 2, "PK") == 0;
         if (req.is_multipart_form_data()) {
           for (const auto& [field, file] : req.files) {
             if (field == "format") continue;
             if (file.content.compare(0, 2, "PK") == 0) {
               for (auto& [n, c] : read_zip(file.content)) files[n] = std::move(c);
             } else {
               files[file.filename.empty() ? field : file.filename] = file.content;
             }
           }
         } else if (zipped) {
           files = read_zip(req.body);
         } else {
           const json body = parse_body(req);
           if (body.contains("format") && !req.has_param("format")) {
             format = parse_export_format(body["format"].get<std::string>());
           }
           if (!body.contains("files") || !body["files"].is_object()) {
             fail(422, "expected a zip body, multipart files or {\"files\": {...}}",
                  {{"fields", {{"files", "required"}}}});
           }
           for (const auto& [n, c] : body["files"].items()) files[n] = c.get<std::string>();
         }
         if (req.has_param("format")) {
           format = parse_export_format(req.get_param_value("format"));
         } else if (req.is_multipart_form_data() && req.has_file("format")) {
           format = parse_export_format(req.get_file_value("format").content);
         } else if (zipped || req.is_multipart_form_data()) {
           fail(422, "format query parameter required", {{"fields", {{"format", "required"}}}});
         }
         if (files.empty()) fail(422, "no files to import");
         const std::int64_t job =
             start_job(JobKind::import, id, [this, id, format, files = std::move(files)](Job& j) {
               {
                 std::lock_guard lock(jobs_mutex_);
                 j.status.total = 1;
               }
               json report = to_json(import_annotations(store_, id, format, files));
               std::lock_guard lock(jobs_mutex_);
               j.status.processed = 1;
               ++j.status.progress_events;
               return report;
             });
         reply(res, 202, to_json(*this->job(job)));
       });

  post(R"(/api/projects/(\d+)/export)", true,
       [this](const httplib::Request& req, httplib::Response& res) {
         const std::int64_t id = id_at(req);
         const Project p = store_.project(id);
         if (!req.has_param("format")) {
           fail(422, "format query parameter required", {{"fields", {{"format", "required"}}}});
         }
         const ExportFormat format = parse_export_format(req.get_param_value("format"));
         ExportOptions options;
         options.policy = query_flag(req, "boxes_only") ? GeometryPolicy::boxes_only
                                                         : GeometryPolicy::as_stored;
         options.include_pending = query_flag(req, "include_pending");
         check_export_supported(p.mode, format, options.policy);
         const std::int64_t job =
             start_job(JobKind::export_, id, [this, id, format, options](Job& j) {
               {
                 std::lock_guard lock(jobs_mutex_);
                 j.status.total = 1;
               }
               const ExportBundle bundle = export_project(store_, id, format, options);
               std::string zip = write_zip(bundle.files);
               json files = json::array();
               for (const auto& [name, body] : bundle.files) files.push_back(name);
               json report = {{"format", to_string(format)},
                              {"files", files},
                              {"bytes", zip.size()},
                              {"download", "/api/jobs/" + std::to_string(j.status.id) +
                                               "/download"}};
               std::lock_guard lock(jobs_mutex_);
               downloads_[j.status.id] = std::move(zip);
               j.status.processed = 1;
               ++j.status.progress_events;
               return report;
             });
         json out = to_json(*this->job(job));
         out["download"] = "/api/jobs/" + std::to_string(job) + "/download";
         reply(res, 202, out);
       });

  get(R"(/api/projects/(\d+)/stats)", true,
      [this](const httplib::Request& req, httplib::Response& res) {
        reply(res, 200, to_json(store_.compute_stats(id_at(req))));
      });

  get(R"(/api/jobs/(\d+))", true, [this](const httplib::Request& req, httplib::Response& res) {
    const auto j = job(id_at(req));
    if (!j) fail(404, "job not found");
    reply(res, 200, to_json(*j));
  });

  get(R"(/api/jobs/(\d+)/download)", true,
      [this](const httplib::Request& req, httplib::Response& res) {
        const std::int64_t id = id_at(req);
        std::lock_guard lock(jobs_mutex_);
        const auto it = downloads_.find(id);
        if (it == downloads_.end()) {
          if (!jobs_.count(id)) fail(404, "job not found");
          fail(409, "job has no finished bundle");
        }
        res.set_header("Content-Disposition",
                       "attachment; filename=\"export-" + std::to_string(id) + ".zip\"");
        res.set_content(it->second, "application/zip");
      });

  if (!config_.web_root.empty()) {
    if (!server.set_mount_point("/", config_.web_root.string())) {
      throw InputError("web root is not a directory: " + config_.web_root.string());
    }
  }
}

}  // namespace prelabel
