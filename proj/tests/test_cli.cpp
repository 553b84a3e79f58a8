#include <gtest/gtest.h>

#include "fdsnn/dataset.hpp"
#include "fdsnn/oracle.hpp"
#include "fdsnn/serialize.hpp"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>

using namespace fdsnn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(FDSNN_CLI_PATH) + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

CsnnModel tiny_model() {
  CsnnModel m;
  m.input_shape = {1, 4, 4};
  LayerSpec c;
  c.kind = LayerKind::Conv2d;
  c.in_channels = 1;
  c.out_channels = 2;
  c.kernel = 2;
  c.stride = 2;
  LayerSpec p;
  p.kind = LayerKind::AvgPool;
  p.window = 2;
  LayerSpec l;
  l.kind = LayerKind::Linear;
  l.in_features = 2;
  l.out_features = 3;
  m.arch = {c, LayerSpec{}, p, l, LayerSpec{}};
  m.weights = {{0.5, -0.25, 0.4, 0.3, -0.5, 0.5, 0.2, 0.45}, {0.5, -0.5, 0.25, 0.5, -0.25, 0.0}};
  m.T = 2;
  return m;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(fs::temp_directory_path() / ("fdsnn_cli_" + std::to_string(::getpid())));
    fs::create_directories(*dir_);
    save_model(tiny_model(), at("model.json"));
    Rng rng(31);
    for (int i = 0; i < 6; ++i) {
      std::vector<double> px(16);
      for (double& x : px) x = rng.uniform01();
      fs::create_directories(*dir_ / "imgs" / std::to_string(i % 3));
      save_pgm(at("imgs/" + std::to_string(i % 3) + "/" + std::to_string(i) + ".pgm"), px, {1, 4, 4});
    }
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete dir_;
  }
  static std::string at(const std::string& name) { return (*dir_ / name).string(); }
  static fs::path* dir_;
};

fs::path* Cli::dir_ = nullptr;

}  // namespace

TEST_F(Cli, EndToEndMatchesPlainOracle) {
  ASSERT_EQ(run("keygen --preset DESK --p 128 --seed 5 --out " + at("keys")).code, 0);
  ASSERT_TRUE(fs::exists(at("keys/secret.key")));
  ASSERT_TRUE(fs::exists(at("keys/bootstrap.key")));
  const json manifest = json::parse(std::ifstream(at("keys/manifest.json")));
  EXPECT_EQ(manifest["params_digest"], preset("DESK").with_p(128).digest());

  ASSERT_EQ(run("scan-stats --model " + at("model.json") + " --dataset " + at("imgs") + " --theta 8 --out " +
                at("stats.json"))
                .code,
            0);

  const Dataset data = load_dataset(at("imgs"));
  const DiscretizedNetwork net = discretize(tiny_model(), 8);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::string ct = at("img" + std::to_string(i) + ".ct");
    const std::string sc = at("img" + std::to_string(i) + ".scores");
    ASSERT_EQ(run("encrypt --dataset " + at("imgs") + " --index " + std::to_string(i) + " --key " +
                  at("keys/secret.key") + " --seed 9 --out " + ct)
                  .code,
              0);
    const CliRun inf = run("infer --model " + at("model.json") + " --theta 8 --ct " + ct + " --bskey " +
                        at("keys/bootstrap.key") + " --stats " + at("stats.json") + " --manifest " +
                        at("keys/manifest.json") + " --out " + sc);
    ASSERT_EQ(inf.code, 0) << inf.out;
    const json side = json::parse(std::ifstream(sc + ".stats.json"));
    EXPECT_EQ(side["bootstraps"], side["expected_bootstraps"]);
    EXPECT_EQ(side["bootstraps"].get<int>(), 2 * (8 + 3) * 2);

    const CliRun dec = run("decrypt --scores " + sc + " --key " + at("keys/secret.key"));
    ASSERT_EQ(dec.code, 0);
    const json res = json::parse(dec.out);
    const PlainResult want = plain_infer(net, data.images[i], 128);
    EXPECT_EQ(res["class"].get<int>(), want.label);
    EXPECT_EQ(res["scores"].get<std::vector<std::int64_t>>(), want.scores);
  }
}

TEST_F(Cli, SeededRunsAreReproducible) {
  ASSERT_EQ(run("keygen --preset TOY --seed 77 --out " + at("a")).code, 0);
  ASSERT_EQ(run("keygen --preset TOY --seed 77 --out " + at("b")).code, 0);
  EXPECT_EQ(file_digest(at("a/bootstrap.key")), file_digest(at("b/bootstrap.key")));
  EXPECT_EQ(file_digest(at("a/secret.key")), file_digest(at("b/secret.key")));
  const std::string img = at("imgs/0/0.pgm");
  ASSERT_EQ(run("encrypt --image " + img + " --key " + at("a/secret.key") + " --seed 3 --out " + at("x1")).code, 0);
  ASSERT_EQ(run("encrypt --image " + img + " --key " + at("a/secret.key") + " --seed 3 --out " + at("x2")).code, 0);
  EXPECT_EQ(file_digest(at("x1")), file_digest(at("x2")));
}

TEST_F(Cli, RefusalsAndErrors) {
  ASSERT_EQ(run("keygen --preset TOY --p 64 --seed 1 --out " + at("toy")).code, 0);
  ASSERT_EQ(run("encrypt --image " + at("imgs/1/1.pgm") + " --key " + at("toy/secret.key") + " --seed 2 --out " +
                at("toy.ct"))
                .code,
            0);
  const std::string base =
      "infer --model " + at("model.json") + " --theta 8 --ct " + at("toy.ct") + " --bskey " + at("toy/bootstrap.key");
  EXPECT_EQ(run(base + " --out " + at("toy.scores")).code, 3);
  ASSERT_EQ(run("scan-stats --model " + at("model.json") + " --dataset " + at("imgs") + " --out " + at("s.json")).code,
            0);
  EXPECT_EQ(run(base + " --stats " + at("s.json") + " --out " + at("toy.scores")).code, 3);
  EXPECT_FALSE(fs::exists(at("toy.scores")));

  ASSERT_EQ(run(base + " --force --out " + at("toy.scores")).code, 0);
  const json side = json::parse(std::ifstream(at("toy.scores.stats.json")));
  EXPECT_TRUE(side["forced"].get<bool>());
  ASSERT_EQ(run("decrypt --scores " + at("toy.scores") + " --key " + at("toy/secret.key")).code, 0);
  fs::copy_file(at("toy.scores"), at("bad.scores"));
  {
    std::fstream f(at("bad.scores"), std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-12, std::ios::end);
    f.put('\x7f');
  }
  EXPECT_EQ(run("decrypt --scores " + at("bad.scores") + " --key " + at("toy/secret.key")).code, 2);

  ASSERT_EQ(run("keygen --preset DESK --p 64 --seed 1 --out " + at("other")).code, 0);
  EXPECT_EQ(run("decrypt --scores " + at("toy.scores") + " --key " + at("other/secret.key")).code, 2);
  ASSERT_EQ(run("keygen --preset TOY --seed 1 --out " + at("toy8")).code, 0);
  ASSERT_EQ(run("encrypt --image " + at("imgs/1/1.pgm") + " --key " + at("toy8/secret.key") + " --out " +
                at("toy8.ct"))
                .code,
            0);
  // Threshold 8 does not fit below p/2 = 4 even when forced.
  EXPECT_EQ(run("infer --model " + at("model.json") + " --theta 8 --ct " + at("toy8.ct") + " --bskey " +
                at("toy8/bootstrap.key") + " --force --out " + at("toy8.scores"))
                .code,
            4);
  EXPECT_EQ(run("keygen --preset NOPE --out " + at("n")).code, 4);
  EXPECT_EQ(run("frobnicate").code, 64);
}
