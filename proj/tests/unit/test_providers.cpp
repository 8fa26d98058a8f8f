#include <doctest.h>

#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "prelabel/errors.hpp"
#include "prelabel/mock_providers.hpp"
#include "prelabel/rle.hpp"
#include "prelabel/sidecar.hpp"
#include "prelabel/synthetic.hpp"
#include "support.hpp"

using namespace prelabel;

namespace {

MockConfig mock_config(std::vector<std::string> classes, std::uint64_t seed = 1) {
  MockConfig c;
  c.classes = std::move(classes);
  c.seed = seed;
  return c;
}

// Lattice points (dx, dy) with dx^2 + dy^2 <= r^2.
int lattice_disk(int r) {
  int n = 0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) n += dx * dx + dy * dy <= r * r;
  }
  return n;
}

/// Runs a sidecar server on an ephemeral port for the lifetime of the object.
struct SidecarServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  explicit SidecarServer(Providers providers) {
    mount_sidecar_routes(server, std::move(providers));
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~SidecarServer() {
    server.stop();
    thread.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

}  // namespace

TEST_CASE("mock detector finds a planted cat") {
  const MockProviders mock(mock_config({"cat", "dog"}));
  const Image img = testing::planted_image(100, 100, {{0, {10, 10, 50, 50}}});
  const std::vector<std::string> names{"cat", "dog"};
  const auto dets = mock.detect(img, names, 0.0);
  REQUIRE_FALSE(dets.empty());
  bool found = false;
  for (const auto& d : dets) {
    if (d.label_text == "cat" && iou(d.box, {10, 10, 50, 50}) >= 0.5) found = true;
  }
  CHECK(found);
  CHECK(mock.detect(img, names, 1.0).empty());
  for (const auto& d : mock.detect(img, names, 0.2)) CHECK(d.score >= 0.2);
}

TEST_CASE("mock detections are valid, in bounds, sorted and deterministic") {
  const MockProviders mock(mock_config({"a", "b", "c"}, 5));
  const std::vector<std::string> names{"a", "b", "c"};
  for (std::uint64_t s = 0; s < 50; ++s) {
    const SyntheticScene scene = make_scene(s, 3);
    const auto d1 = mock.detect(scene.image, names, 0.2);
    const auto d2 = mock.detect(scene.image, names, 0.2);
    REQUIRE(d1.size() == d2.size());
    for (std::size_t i = 0; i < d1.size(); ++i) {
      CHECK(d1[i].box == d2[i].box);
      CHECK(d1[i].score == d2[i].score);
      CHECK(d1[i].box.valid());
      CHECK(scene.image.bounds().contains(d1[i].box));
      if (i > 0) CHECK(d1[i - 1].score >= d1[i].score);
    }
    // Raising the threshold never adds detections.
    CHECK(mock.detect(scene.image, names, 0.6).size() <= d1.size());
  }
}

TEST_CASE("mock duplicates of one object overlap strongly") {
  const MockProviders mock(mock_config({"cat"}, 9));
  const Image img = testing::planted_image(200, 200, {{0, {40, 40, 120, 100}}});
  const std::vector<std::string> names{"cat"};
  const auto dets = mock.detect(img, names, 0.0);
  REQUIRE(dets.size() >= 1);
  CHECK(dets.size() <= 5);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    for (std::size_t j = i + 1; j < dets.size(); ++j) CHECK(iou(dets[i].box, dets[j].box) > 0.9);
  }
}

TEST_CASE("mock embeddings") {
  const MockProviders mock(mock_config({"cat", "dog"}));
  const Image img = testing::planted_image(100, 100, {{0, {10, 10, 50, 50}}, {1, {60, 60, 90, 90}}});
  const Embedding crop = mock.embed_image_crop(img, {10, 10, 50, 50});
  CHECK(crop.norm() == doctest::Approx(1.0).epsilon(1e-6));
  const std::vector<std::string> cat{"cat"}, dog{"dog"}, both{"cat", "dog"}, twice{"cat", "cat"};
  const auto tc = mock.embed_texts(cat);
  const auto td = mock.embed_texts(dog);
  REQUIRE(tc.size() == 1);
  CHECK(tc[0].norm() == doctest::Approx(1.0));
  CHECK(crop.dot(tc[0]) > crop.dot(td[0]));
  const auto pair = mock.embed_texts(both);
  CHECK(pair[0].dot(pair[1]) == doctest::Approx(0.0));
  const auto same = mock.embed_texts(twice);
  CHECK(same[0].values == same[1].values);
  CHECK(mock.embed_image_crop(img, {10, 10, 50, 50}).values == crop.values);
  // unknown labels still get unit vectors
  const std::vector<std::string> odd{"zebra crossing"};
  CHECK(mock.embed_texts(odd)[0].norm() == doctest::Approx(1.0));
  CHECK_THROWS_AS(mock.embed_image_crop(img, {5, 5, 5.5, 5.5}), InputError);
}

TEST_CASE("mock embedding alignment holds for every class pair and breaks under noise") {
  const std::vector<std::string> names{"a", "b", "c", "d", "e"};
  const MockProviders clean(mock_config(names));
  const auto texts = clean.embed_texts(names);
  for (std::size_t c = 0; c < names.size(); ++c) {
    const Image img = testing::planted_image(64, 64, {{c, {8, 8, 40, 40}}});
    const Embedding e = clean.embed_image_crop(img, {8, 8, 40, 40});
    for (std::size_t o = 0; o < names.size(); ++o) {
      if (o != c) CHECK(e.dot(texts[c]) > e.dot(texts[o]));
    }
  }
  MockConfig noisy = mock_config(names);
  noisy.embedding_noise = 5.0;
  const MockProviders loud(noisy);
  int violations = 0;
  for (int s = 0; s < 50; ++s) {
    const Image img =
        testing::planted_image(64, 64, {{0, {8.0 + s % 5, 8, 40, 40}}}, "n" + std::to_string(s));
    const Embedding e = loud.embed_image_crop(img, {8.0 + s % 5, 8, 40, 40});
    for (std::size_t o = 1; o < names.size(); ++o) {
      if (e.dot(texts[0]) <= e.dot(texts[o])) {
        ++violations;
        break;
      }
    }
  }
  CHECK(violations > 0);
}

TEST_CASE("mock masks") {
  const MockProviders mock(mock_config({"cat"}));
  const Image img = testing::planted_image(64, 64, {});
  const BinaryMask box = mock.generate_mask(img, BBox{10, 10, 20, 20});
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      CHECK(box.at(x, y) == (x >= 10 && x < 20 && y >= 10 && y < 20));
    }
  }
  const BinaryMask disk = mock.generate_mask(img, Point{5, 5});
  CHECK(static_cast<int>(disk.count()) == lattice_disk(3));
  CHECK(lattice_disk(3) == 29);
  CHECK_THROWS_AS(mock.generate_mask(img, Point{70, 5}), InputError);
  CHECK_THROWS_AS(mock.generate_mask(img, BBox{70, 70, 80, 80}), InputError);
}

TEST_CASE("rle round trip") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 100; ++t) {
    BinaryMask m(testing::uniform_int(rng, 1, 30), testing::uniform_int(rng, 1, 30));
    for (int y = 0; y < m.height(); ++y) {
      for (int x = 0; x < m.width(); ++x) m.set(x, y, rng() % 3 == 0);
    }
    const CocoRle r = rle_encode(m);
    CHECK(rle_decode(r) == m);
    CHECK(rle_from_json(rle_to_json(r)).counts == r.counts);
  }
  BinaryMask m(2, 2);
  m.set(1, 0);  // column-major: (0,0) (0,1) (1,0) (1,1)
  const CocoRle r = rle_encode(m);
  CHECK(r.counts == std::vector<std::uint32_t>{2, 1, 1});
  CHECK_THROWS_AS(rle_decode({2, 2, {1, 1}}), InputError);
}

TEST_CASE("base64") {
  CHECK(base64_encode("hello") == "aGVsbG8=");
  CHECK(base64_decode("aGVsbG8=") == "hello");
  CHECK_THROWS_AS(base64_decode("!!!"), InputError);
}

TEST_CASE("sidecar client matches in-process providers") {
  const MockConfig cfg = mock_config({"cat", "dog"}, 3);
  const Providers local = make_mock_providers(cfg);
  SidecarServer srv(make_mock_providers(cfg));
  const SidecarClient client(srv.url(), 2);
  const Image img = testing::planted_image(80, 80, {{0, {10, 10, 40, 40}}, {1, {50, 50, 70, 75}}});
  const std::vector<std::string> names{"cat", "dog"};

  const auto remote = client.detect(img, names, 0.2);
  const auto direct = local.detector->detect(img, names, 0.2);
  REQUIRE(remote.size() == direct.size());
  for (std::size_t i = 0; i < remote.size(); ++i) {
    CHECK(remote[i].label_text == direct[i].label_text);
    CHECK(remote[i].score == doctest::Approx(direct[i].score));
    CHECK(iou(remote[i].box, direct[i].box) == doctest::Approx(1.0));
  }
  const auto e = client.embed_image_crop(img, {10, 10, 40, 40});
  const auto d = local.embedder->embed_image_crop(img, {10, 10, 40, 40});
  CHECK(e.dot(d) == doctest::Approx(1.0));
  CHECK(client.embed_texts(names).size() == 2);
  CHECK(client.generate_mask(img, BBox{10, 10, 20, 20}) ==
        local.masks->generate_mask(img, BBox{10, 10, 20, 20}));

  // concurrent callers share the in-flight bound
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] {
      if (client.detect(img, names, 0.2).size() == direct.size()) ++ok;
    });
  }
  for (auto& t : threads) t.join();
  CHECK(ok == 8);
}

TEST_CASE("sidecar errors map to exceptions") {
  const SidecarClient dead("http://127.0.0.1:1", 1);
  const Image img = testing::planted_image(10, 10, {});
  const std::vector<std::string> names{"cat"};
  CHECK_THROWS_AS(dead.detect(img, names, 0.2), TransportError);

  SidecarServer srv(make_mock_providers(mock_config({"cat"})));
  const SidecarClient client(srv.url(), 1);
  Image broken = img;
  broken.encoded = "not an image";
  CHECK_THROWS_AS(client.detect(broken, names, 0.2), InputError);
}

TEST_CASE("provider config validation") {
  ProviderConfig c;
  c.kind = ProviderKind::sidecar;
  CHECK_THROWS_AS(c.validate(), InputError);
  c.endpoint = "http://localhost:9";
  CHECK_NOTHROW(c.validate());
  c.max_in_flight = 0;
  CHECK_THROWS_AS(c.validate(), InputError);
  CHECK_THROWS_AS(normalized({0.0, 0.0}), InputError);
}
