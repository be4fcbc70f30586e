#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dml/data_io.hpp"
#include "dml/errors.hpp"
#include "dml/rng.hpp"

using namespace dml;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("dml_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

}  // namespace

TEST_CASE("synthesize: determinism, disjoint splits, sigma=0 collapse") {
  SynthConfig cfg{6, 4, 8, 0.25, 99};
  auto [train, test] = synthesize(cfg);
  CHECK(train.size() == 12);
  CHECK(test.size() == 12);
  CHECK(train.num_classes() == 3);
  CHECK(test.num_classes() == 3);
  CHECK_NOTHROW(check_disjoint_labels(train, test));

  auto [train2, test2] = synthesize(cfg);
  CHECK(train.features == train2.features);
  CHECK(test.features == test2.features);
  CHECK(train.labels == train2.labels);

  SynthConfig collapsed{4, 3, 5, 0.0, 7};
  auto [ctrain, ctest] = synthesize(collapsed);
  for (const auto& [cls, d0] : compute_d0(ctrain.features_by_class()))
    CHECK(d0 == doctest::Approx(0.0).epsilon(1e-18));
}

TEST_CASE("check_disjoint_labels rejects overlap") {
  Dataset a, b;
  a.label_names = {"c0", "c1"};
  b.label_names = {"c1", "c2"};
  CHECK_THROWS_AS(check_disjoint_labels(a, b), Error);
}

TEST_CASE("feature text round trip is bit exact") {
  TempDir dir;
  Rng rng(31);
  Dataset ds;
  ds.features = Matrix(7, 5);
  for (double& x : ds.features.values) x = standard_normal(rng) * 1e3;
  ds.label_names = {"alpha", "beta"};
  for (std::size_t i = 0; i < 7; ++i) ds.labels.push_back(static_cast<int>(i % 2));

  save_features(ds, dir.file("t.features"));
  Dataset loaded = load_features(dir.file("t.features"));
  CHECK(loaded.features == ds.features);
  CHECK(loaded.labels == ds.labels);
  CHECK(loaded.label_names == ds.label_names);
}

TEST_CASE("feature binary round trip is bit exact") {
  TempDir dir;
  Rng rng(32);
  Dataset ds;
  ds.features = Matrix(9, 3);
  for (double& x : ds.features.values) x = standard_normal(rng);
  ds.label_names = {"a", "b", "c"};
  for (std::size_t i = 0; i < 9; ++i) ds.labels.push_back(static_cast<int>(i % 3));

  save_features(ds, dir.file("t.featbin"), true);
  Dataset loaded = load_features(dir.file("t.featbin"));
  CHECK(loaded.features == ds.features);
  CHECK(loaded.labels == ds.labels);
  CHECK(loaded.label_names == ds.label_names);
}

TEST_CASE("feature parsing errors") {
  TempDir dir;
  {
    std::ofstream os(dir.file("empty.features"));
  }
  CHECK_THROWS_AS(load_features(dir.file("empty.features")), ParseError);

  {
    std::ofstream os(dir.file("one.features"));
    os << "c1, 0.5, -0.5\n";
  }
  Dataset one = load_features(dir.file("one.features"));
  CHECK(one.size() == 1);
  CHECK(one.features.cols == 2);
  CHECK(one.label_names == std::vector<std::string>{"c1"});
  CHECK(one.features(0, 0) == 0.5);
  CHECK(one.features(0, 1) == -0.5);

  {
    std::ofstream os(dir.file("ragged.features"));
    os << "a,1,2\nb,1,2,3\n";
  }
  CHECK_THROWS_AS(load_features(dir.file("ragged.features")), DimInconsistent);

  {
    std::ofstream os(dir.file("junk.features"));
    os << "a,1,zebra\n";
  }
  CHECK_THROWS_AS(load_features(dir.file("junk.features")), ParseError);

  CHECK_THROWS_AS(load_features(dir.file("missing.features")), IoError);
}

namespace {

Checkpoint sample_checkpoint() {
  Checkpoint ckpt;
  ckpt.net = make_default_net(4, 6, 3, 17);
  ckpt.adam.t = 12;
  const std::size_t n = ckpt.net.param_count() + 2;
  Rng rng(33);
  ckpt.adam.m.resize(n);
  ckpt.adam.v.resize(n);
  for (double& x : ckpt.adam.m) x = standard_normal(rng);
  for (double& x : ckpt.adam.v) x = uniform_unit(rng);
  ckpt.density.alphas = {{0, 0.4}, {1, 0.7}};
  ckpt.density.d0 = {{0, 1.2}, {1, 0.8}};
  ckpt.density.eta = 0.5;
  ckpt.density.lambda = 10.0;
  ckpt.config_echo = "loss=contrastive\nlambda=10\n";
  ckpt.iteration = 250;
  ckpt.rng_state = "12345 6789";
  return ckpt;
}

}  // namespace

TEST_CASE("checkpoint round trip restores identical state") {
  TempDir dir;
  Checkpoint ckpt = sample_checkpoint();
  save_checkpoint(ckpt, dir.file("c.dml"));
  Checkpoint loaded = load_checkpoint(dir.file("c.dml"));
  CHECK(loaded == ckpt);
}

TEST_CASE("truncated checkpoint is rejected") {
  TempDir dir;
  Checkpoint ckpt = sample_checkpoint();
  save_checkpoint(ckpt, dir.file("c.dml"));
  const auto full = std::filesystem::file_size(dir.file("c.dml"));
  for (std::uintmax_t cut : {full / 3, full / 2, full - 5}) {
    std::ifstream is(dir.file("c.dml"), std::ios::binary);
    std::string bytes(cut, '\0');
    is.read(bytes.data(), static_cast<std::streamsize>(cut));
    std::ofstream os(dir.file("cut.dml"), std::ios::binary);
    os.write(bytes.data(), static_cast<std::streamsize>(cut));
    os.close();
    CHECK_THROWS_AS(load_checkpoint(dir.file("cut.dml")), CorruptCheckpoint);
  }
}

TEST_CASE("checkpoint with a foreign version is rejected") {
  TempDir dir;
  Checkpoint ckpt = sample_checkpoint();
  save_checkpoint(ckpt, dir.file("c.dml"));
  std::fstream f(dir.file("c.dml"),
                 std::ios::binary | std::ios::in | std::ios::out);
  f.seekp(8);  // version field follows the magic
  const std::uint32_t bad = 999;
  f.write(reinterpret_cast<const char*>(&bad), sizeof(bad));
  f.close();
  CHECK_THROWS_AS(load_checkpoint(dir.file("c.dml")), VersionMismatch);
}
