#include <doctest.h>

#include <sstream>

#include "cli.hpp"
#include "fixtures.hpp"
#include "service_fixture.hpp"

using namespace prelabel;
using nlohmann::json;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "prelabel");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

}  // namespace

TEST_CASE("headless pre-annotation over a synthetic folder") {
  testing::TempDir dir;
  const std::string data = (dir / "data").string(), images = (dir / "images").string();
  const Run synth = cli({"synth", "--out", images, "--count", "6", "--classes", "cat,dog"});
  REQUIRE(synth.code == 0);
  CHECK(synth.out.find("images=6") != std::string::npos);

  const Run pre = cli({"--data-dir", data, "preannotate", "--project", "p", "--images", images,
                       "--classes", "cat,dog", "--threads", "2"});
  CHECK(pre.code == 0);
  CHECK(pre.out.find("processed=6 failures=0") != std::string::npos);

  const Run again = cli({"--data-dir", data, "preannotate", "--project", "p", "--images", images});
  CHECK(again.code == 0);
  CHECK(again.out.find("processed=6 failures=0") != std::string::npos);

  const Run stats = cli({"--data-dir", data, "stats", "--project", "p", "--json"});
  REQUIRE(stats.code == 0);
  const json from_cli = json::parse(stats.out);
  CHECK(from_cli["total_images"] == 6);

  testing::LiveService live({}, dir / "data");
  const auto pid = live.store->find_project("p")->id;
  const json from_service =
      testing::LiveService::body(live.client->Get("/api/projects/" + std::to_string(pid) + "/stats"));
  CHECK(from_cli == from_service);
}

TEST_CASE("export, validate and import through the command line") {
  testing::TempDir dir;
  const std::string data = (dir / "data").string(), images = (dir / "images").string();
  REQUIRE(cli({"synth", "--out", images, "--count", "3", "--classes", "cat"}).code == 0);
  REQUIRE(cli({"--data-dir", data, "preannotate", "--project", "seg", "--mode", "segmentation",
               "--images", images, "--classes", "cat"})
              .code == 0);

  const Run refused = cli({"--data-dir", data, "export", "--project", "seg", "--format", "voc",
                           "--out", (dir / "voc").string()});
  CHECK(refused.code == 1);
  CHECK(refused.err.find("voc") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir / "voc"));

  const std::string zip = (dir / "voc.zip").string();
  const Run boxes = cli({"--data-dir", data, "export", "--project", "seg", "--format", "voc",
                         "--out", zip, "--boxes-only"});
  CHECK(boxes.code == 0);
  CHECK(cli({"validate", "--format", "voc", "--files", zip}).code == 0);

  const std::string yolo_dir = (dir / "yolo").string();
  REQUIRE(cli({"--data-dir", data, "export", "--project", "seg", "--format", "yolo", "--out",
               yolo_dir, "--include-pending"})
              .code == 0);
  CHECK(std::filesystem::exists(dir / "yolo" / "data.yaml"));
  CHECK(cli({"validate", "--format", "yolo", "--files", yolo_dir}).code == 0);

  REQUIRE(cli({"--data-dir", data, "preannotate", "--project", "copy", "--mode", "segmentation",
               "--images", images, "--classes", "cat", "--threshold", "1"})
              .code == 0);
  const Run imported = cli({"--data-dir", data, "import", "--project", "copy", "--format", "yolo",
                            "--files", yolo_dir, "--json"});
  REQUIRE(imported.code == 0);
  const json report = json::parse(imported.out);
  CHECK(report["matched_images"] == 3);
  CHECK(report["skipped"].empty());

  testing::write_blank_image(dir / "bad" / "x.ppm", 10, 10);
  prelabel::write_file(dir / "bad" / "labels" / "x.txt", "0 2 2 0.1 0.1\n");
  prelabel::write_file(dir / "bad" / "data.yaml", "names: [cat]\n");
  const Run invalid = cli({"validate", "--format", "yolo", "--files", (dir / "bad").string(), "--json"});
  CHECK(invalid.code == 1);
  CHECK(json::parse(invalid.out).size() == 1);
}

TEST_CASE("command line errors exit with status 1") {
  testing::TempDir dir;
  CHECK(cli({}).code == 1);
  CHECK(cli({"preannotate", "--bogus"}).code == 1);
  const Run unknown = cli({"frobnicate"});
  CHECK(unknown.code == 1);
  CHECK_FALSE(unknown.err.empty());
  CHECK(cli({"--data-dir", (dir / "d").string(), "stats", "--project", "missing"}).code == 1);
  CHECK(cli({"validate", "--format", "tfrecord", "--files", dir.path().string()}).code == 1);
  CHECK(cli({"--data-dir", (dir / "d").string(), "preannotate", "--project", "p", "--threshold", "2"})
            .code == 1);
}
