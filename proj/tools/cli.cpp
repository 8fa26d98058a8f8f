#include "cli.hpp"

#include <atomic>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "prelabel/errors.hpp"
#include "prelabel/formats.hpp"
#include "prelabel/preannotator.hpp"
#include "prelabel/service.hpp"
#include "prelabel/sidecar.hpp"
#include "prelabel/store.hpp"
#include "prelabel/synthetic.hpp"
#include "prelabel/text.hpp"

namespace prelabel {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::atomic<Service*> g_service{nullptr};
std::atomic<httplib::Server*> g_server{nullptr};

void on_signal(int) {
  if (Service* s = g_service.load()) s->stop();
  if (httplib::Server* s = g_server.load()) s->stop();
}

std::vector<std::string> class_list(const std::string& csv) {
  std::vector<std::string> out;
  for (const auto& part : split(csv, ',')) {
    if (!normalize_label(part).empty()) out.push_back(part);
  }
  return out;
}

std::vector<fs::path> image_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && is_image_file(e.path())) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Project require_project(const Store& store, const std::string& name) {
  const auto p = store.find_project(name);
  if (!p) throw NotFoundError("no project named '" + name + "'");
  return *p;
}

/// Reads files, directories (recursively) and zip archives into one bundle.
FileMap collect_files(const std::vector<std::string>& inputs) {
  FileMap files;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      for (const auto& e : fs::recursive_directory_iterator(p)) {
        if (e.is_regular_file()) {
          files[fs::relative(e.path(), p).generic_string()] = read_file(e.path());
        }
      }
    } else if (fs::is_regular_file(p)) {
      std::string body = read_file(p);
      if (to_lower(p.extension().string()) == ".zip") {
        for (auto& [name, content] : read_zip(body)) files[name] = std::move(content);
      } else {
        files[p.filename().string()] = std::move(body);
      }
    } else {
      throw InputError("no such file or directory: " + in);
    }
  }
  return files;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  ServiceConfig config;
  try {
    config = ServiceConfig::from_env();
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  CLI::App app{"Pre-annotation server and dataset tool"};
  app.require_subcommand(1);
  std::string data_dir = config.data_dir.string();
  std::string provider = config.provider.kind == ProviderKind::sidecar ? "sidecar" : "mock";
  std::uint64_t seed = config.provider.seed;
  bool verbose = false;
  app.add_option("--data-dir", data_dir, "Data directory")->capture_default_str();
  app.add_option("--provider", provider, "Inference provider")
      ->check(CLI::IsMember({"mock", "sidecar"}))
      ->capture_default_str();
  app.add_option("--sidecar-url", config.provider.endpoint, "Sidecar base URL");
  app.add_option("--seed", seed, "Seed for mock-provider randomness")->capture_default_str();
  app.add_flag("-v,--verbose", verbose, "Progress output on stderr");

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--bind", config.bind)->capture_default_str();
  serve->add_option("--port", config.port)->check(CLI::Range(0, 65535))->capture_default_str();
  std::string web_root = config.web_root.string();
  serve->add_option("--web-root", web_root, "Directory with the built UI");
  serve->add_flag("--allow-registration", config.allow_registration);

  auto* pre = app.add_subcommand("preannotate", "Run pre-annotation headless");
  std::string project_name;
  std::string images_dir;
  std::string classes_csv;
  std::string mode_text = "detection";
  std::optional<double> threshold;
  std::optional<double> cluster_threshold;
  std::optional<double> temperature;
  std::optional<std::string> acceptance;
  std::optional<double> min_confidence;
  unsigned threads = 0;
  bool as_json = false;
  pre->add_option("--project", project_name, "Project name")->required();
  pre->add_option("--images", images_dir, "Image folder to ingest");
  pre->add_option("--classes", classes_csv, "Comma-separated class names for a new project");
  pre->add_option("--mode", mode_text, "detection, obb or segmentation")
      ->check(CLI::IsMember({"detection", "obb", "segmentation"}))
      ->capture_default_str();
  pre->add_option("--threshold", threshold, "Detection threshold")->check(CLI::Range(0.0, 1.0));
  pre->add_option("--cluster-threshold", cluster_threshold, "IoU threshold for duplicates")
      ->check(CLI::Range(0.0, 1.0));
  pre->add_option("--temperature", temperature, "Softmax temperature");
  pre->add_option("--acceptance", acceptance, "live_filter or blind_trust")
      ->check(CLI::IsMember({"live_filter", "blind_trust"}));
  pre->add_option("--min-confidence", min_confidence)->check(CLI::Range(0.0, 1.0));
  pre->add_option("--threads", threads, "Worker threads (0 = all cores)");
  pre->add_flag("--json", as_json, "Print the full report as JSON");

  auto* exp = app.add_subcommand("export", "Export a project");
  std::string format_text;
  std::string out_path;
  bool boxes_only = false;
  bool include_pending = false;
  exp->add_option("--project", project_name)->required();
  exp->add_option("--format", format_text, "coco, yolo, voc or csv")->required();
  exp->add_option("--out", out_path, "Output directory, or a .zip file")->required();
  exp->add_flag("--boxes-only", boxes_only, "Reduce all geometry to axis-aligned boxes");
  exp->add_flag("--include-pending", include_pending, "Also export unreviewed annotations");

  auto* imp = app.add_subcommand("import", "Merge annotations into a project");
  std::vector<std::string> inputs;
  imp->add_option("--project", project_name)->required();
  imp->add_option("--format", format_text)->required();
  imp->add_option("--files", inputs, "Files, folders or zip archives")->required();
  imp->add_flag("--json", as_json);

  auto* val = app.add_subcommand("validate", "Check a bundle without importing it");
  val->add_option("--format", format_text)->required();
  val->add_option("--files", inputs)->required();
  val->add_flag("--json", as_json);

  auto* stats = app.add_subcommand("stats", "Print project statistics");
  stats->add_option("--project", project_name)->required();
  stats->add_flag("--json", as_json);

  auto* synth = app.add_subcommand("synth", "Write a synthetic color-coded dataset");
  std::string synth_out;
  std::size_t count = 10;
  synth->add_option("--out", synth_out)->required();
  synth->add_option("--count", count)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--classes", classes_csv)->required();

  auto* sidecar = app.add_subcommand("mock-sidecar", "Serve the sidecar protocol from mocks");
  sidecar->add_option("--bind", config.bind)->capture_default_str();
  sidecar->add_option("--port", config.port)->check(CLI::Range(0, 65535))->capture_default_str();
  sidecar->add_option("--classes", classes_csv)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return 1;
  }

  try {
    config.data_dir = data_dir;
    config.provider.kind = provider == "sidecar" ? ProviderKind::sidecar : ProviderKind::mock;
    config.provider.seed = seed;
    config.provider.validate();

    if (*synth) {
      const auto classes = class_list(classes_csv);
      if (classes.empty()) throw InputError("--classes needs at least one name");
      const auto scenes = write_synthetic_dataset(synth_out, count, seed, classes);
      std::size_t objects = 0;
      for (const auto& s : scenes) objects += s.objects.size();
      out << "images=" << scenes.size() << " objects=" << objects << "\n";
      return 0;
    }

    if (*val) {
      const auto diags = validate_bundle(parse_export_format(format_text), collect_files(inputs));
      if (as_json) {
        out << to_json(diags).dump(2) << "\n";
      } else {
        for (const auto& d : diags) {
          out << d.file << (d.location.empty() ? "" : " " + d.location) << ": " << d.message
              << "\n";
        }
        out << "diagnostics=" << diags.size() << "\n";
      }
      return diags.empty() ? 0 : 1;
    }

    if (*sidecar) {
      const auto classes = class_list(classes_csv);
      if (classes.empty()) throw InputError("--classes needs at least one name");
      ProviderConfig pc;
      pc.seed = seed;
      std::vector<std::string> names;
      for (const auto& c : classes) names.push_back(normalize_label(c));
      httplib::Server server;
      mount_sidecar_routes(server, make_providers(pc, names));
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      err << "mock sidecar on " << config.bind << ":" << config.port << "\n";
      const bool ok = server.listen(config.bind, config.port);
      g_server = nullptr;
      if (!ok) throw InputError("cannot listen on " + config.bind + ":" + std::to_string(config.port));
      return 0;
    }

    fs::create_directories(config.data_dir);
    Store store(config.data_dir);

    if (*serve) {
      config.web_root = web_root;
      Service service(store, config);
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      err << "listening on http://" << config.bind << ":" << config.port << "\n";
      service.listen();
      g_service = nullptr;
      return 0;
    }

    if (*pre) {
      auto existing = store.find_project(project_name);
      Project p;
      if (!existing) {
        if (images_dir.empty() || classes_csv.empty()) {
          throw InputError("project '" + project_name +
                           "' does not exist; pass --images and --classes to create it");
        }
        const auto classes = class_list(classes_csv);
        if (classes.empty()) throw InputError("--classes needs at least one name");
        p = store.create_project(project_name, parse_project_mode(mode_text), classes);
      } else {
        p = *existing;
      }
      if (!images_dir.empty()) {
        std::set<std::string> known;
        for (const auto& r : store.images(p.id)) known.insert(r.file_name);
        for (const auto& f : image_files(images_dir)) {
          if (!known.count(f.filename().string())) store.add_image(p.id, f);
        }
      }
      json merged = to_json(p.settings);
      if (threshold) merged["detection_threshold"] = *threshold;
      if (cluster_threshold) merged["cluster_iou_threshold"] = *cluster_threshold;
      if (temperature) merged["temperature"] = *temperature;
      if (acceptance) merged["acceptance_mode"] = *acceptance;
      if (min_confidence) merged["min_confidence_filter"] = *min_confidence;
      const PipelineSettings settings = settings_from_json(merged);
      std::vector<std::string> vocab;
      for (const auto& c : store.classes(p.id)) vocab.push_back(c.name);
      BatchOptions options;
      options.threads = threads;
      if (verbose) {
        options.on_progress = [&err](const ProgressEvent& e) {
          err << "[" << e.completed << "/" << e.total << "] " << e.file_name << " " << e.status
              << " annotations=" << e.annotations << "\n";
        };
      }
      const BatchReport report =
          preannotate_batch(store, p.id, settings, make_providers(config.provider, vocab), options);
      if (as_json) {
        out << to_json(report).dump(2) << "\n";
      } else {
        out << "processed=" << report.processed << " failures=" << report.failures << "\n";
      }
      return 0;
    }

    if (*exp) {
      const Project p = require_project(store, project_name);
      ExportOptions options;
      options.policy = boxes_only ? GeometryPolicy::boxes_only : GeometryPolicy::as_stored;
      options.include_pending = include_pending;
      const ExportBundle bundle =
          export_project(store, p.id, parse_export_format(format_text), options);
      const fs::path dest(out_path);
      if (to_lower(dest.extension().string()) == ".zip") {
        if (dest.has_parent_path()) fs::create_directories(dest.parent_path());
        write_file(dest, write_zip(bundle.files));
      } else {
        for (const auto& [name, body] : bundle.files) {
          const fs::path target = dest / name;
          fs::create_directories(target.parent_path());
          write_file(target, body);
        }
      }
      out << "files=" << bundle.files.size() << " out=" << dest.string() << "\n";
      return 0;
    }

    if (*imp) {
      const Project p = require_project(store, project_name);
      const ImportReport report =
          import_annotations(store, p.id, parse_export_format(format_text), collect_files(inputs));
      if (as_json) {
        out << to_json(report).dump(2) << "\n";
      } else {
        out << "matched_images=" << report.matched_images << " imported=" << report.imported
            << " skipped=" << report.skipped.size() << "\n";
        for (const auto& s : report.skipped) err << "skipped " << s.item << ": " << s.reason << "\n";
        for (const auto& w : report.warnings) err << "warning: " << w << "\n";
      }
      return 0;
    }

    if (*stats) {
      const Project p = require_project(store, project_name);
      const ProjectStats s = store.compute_stats(p.id);
      if (as_json) {
        out << to_json(s).dump() << "\n";
      } else {
        out << "images=" << s.total_images << " processed=" << s.processed
            << " annotations=" << s.total_annotations << "\n";
        for (const auto& [k, v] : s.completion) out << "  " << k << " " << v << "\n";
        for (const auto& [k, v] : s.class_counts) out << "  class " << k << " " << v << "\n";
      }
      return 0;
    }
  } catch (const ParseError& e) {
    err << "error: " << e.where() << ": " << e.what() << "\n";
    return 1;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const NotFoundError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConflictError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace prelabel
