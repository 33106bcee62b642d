#include <gtest/gtest.h>

#include <fstream>

#include "cli_app.hpp"
#include "fixtures/test_util.hpp"
#include "risekit/image_io.hpp"
#include "risekit/serve.hpp"
#include "risekit/synthetic.hpp"

namespace risekit {
namespace {

namespace fs = std::filesystem;
using testing::ReadFileBytes;
using testing::TempDir;

int RunCli(std::vector<std::string> args) {
  args.insert(args.begin(), "risekit");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::Run(static_cast<int>(argv.size()), argv.data());
}

nlohmann::json ReadJson(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const Region r{8, 4, 20, 16};
    SaveImage(testing::RegionImage(32, 32, r, 1), dir_ / "one.png");
    SaveImage(testing::RegionImage(32, 32, r, 2), dir_ / "two.png");
    fs::create_directories(dir_ / "imgs");
    SaveImage(testing::RegionImage(32, 32, r, 3), dir_ / "imgs" / "three.png");
  }

  std::vector<std::string> Common(const std::string& out) const {
    return {"--scorer", "synthetic:region:8,4,20,16", "--masks", "200", "--grid", "4", "4",
            "--image-size", "32", "32", "--seed", "5", "--out", (dir_ / out).string()};
  }
  std::string In(const std::string& name) const { return (dir_ / name).string(); }

  TempDir dir_;
};

std::vector<std::string> Cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

TEST_F(CliTest, ExplainWritesArtifactsAndIsByteDeterministic) {
  ASSERT_EQ(RunCli(Cat(Cat({"explain"}, Common("a")), {In("one.png"), In("imgs")})), 0);
  ASSERT_EQ(RunCli(Cat(Cat({"explain"}, Common("b")),
                       {"--batch", "7", "--workers", "2", In("one.png"), In("imgs")})),
            0);
  for (const char* stem : {"one", "three"}) {
    for (const char* ext : {".rsal", ".heatmap.png", ".json"}) {
      EXPECT_TRUE(fs::exists(dir_ / "a" / (std::string(stem) + ext))) << stem << ext;
    }
    EXPECT_EQ(ReadFileBytes(dir_ / "a" / (std::string(stem) + ".rsal")),
              ReadFileBytes(dir_ / "b" / (std::string(stem) + ".rsal")));
  }
  const auto side = ReadJson(dir_ / "a" / "one.json");
  EXPECT_EQ(side.at("seed"), 5);
  EXPECT_EQ(side.at("num_probes"), 200);
  const SaliencyMap sal = ReadRsal(dir_ / "a" / "one.rsal");
  EXPECT_EQ(sal.height(), 32);
}

TEST_F(CliTest, ConfigErrorsExitTwoBeforeWritingAnything) {
  EXPECT_EQ(RunCli(Cat(Cat({"explain"}, Common("x")), {In("one.png"), In("nope.png")})), 2);
  EXPECT_FALSE(fs::exists(dir_ / "x"));
  EXPECT_EQ(RunCli(Cat(Cat({"explain"}, Common("x")), {"--prob", "1.5", In("one.png")})), 2);
  EXPECT_EQ(RunCli(Cat(Cat({"explain"}, Common("x")), {"--scorer", "bogus:1", In("one.png")})), 2);
  EXPECT_EQ(RunCli(Cat(Cat({"explain"}, Common("x")), {"--frobnicate", In("one.png")})), 2);
  EXPECT_EQ(RunCli({"explain"}), 2);
  EXPECT_FALSE(fs::exists(dir_ / "x"));
}

TEST_F(CliTest, ScorerCrashExitsThree) {
  const std::string stub = std::string(RISEKIT_STUB_PATH) + " --stdio --model constant:0.5 --exit-after 1";
  EXPECT_EQ(RunCli(Cat(Cat({"explain"}, Common("c")), {"--scorer", "subprocess:" + stub, In("one.png")})),
            3);
}

TEST_F(CliTest, CorruptImageExitsFourButOthersComplete) {
  { std::ofstream(dir_ / "bad.png") << "garbage"; }
  EXPECT_EQ(RunCli(Cat(Cat({"explain"}, Common("d")), {In("bad.png"), In("one.png")})), 4);
  EXPECT_TRUE(fs::exists(dir_ / "d" / "one.rsal"));
  EXPECT_FALSE(fs::exists(dir_ / "d" / "bad.rsal"));
  EXPECT_EQ(RunCli(Cat(Cat({"explain"}, Common("e")),
                       {"--strict", "--workers", "1", In("bad.png"), In("one.png")})),
            4);
  EXPECT_FALSE(fs::exists(dir_ / "e" / "one.rsal"));
}

TEST_F(CliTest, ResumeSkipsFinishedImages) {
  ASSERT_EQ(RunCli(Cat(Cat({"explain"}, Common("r")), {In("one.png")})), 0);
  { std::ofstream(dir_ / "r" / "one.json") << "{\"marker\": 1}"; }
  ASSERT_EQ(RunCli(Cat(Cat({"explain"}, Common("r")), {"--resume", In("one.png"), In("two.png")})), 0);
  EXPECT_EQ(ReadJson(dir_ / "r" / "one.json").at("marker"), 1);
  EXPECT_TRUE(fs::exists(dir_ / "r" / "two.rsal"));
}

TEST_F(CliTest, ConfigFileSitsBelowCommandLineFlags) {
  {
    std::ofstream cfg(dir_ / "run.cfg");
    cfg << "# defaults for this run\n"
        << "masks = 50\n"
        << "grid = 3 3\n"
        << "image-size = 32 32\n"
        << "seed = 9\n";
  }
  ASSERT_EQ(RunCli({"masks", "--config", In("run.cfg"), "--seed", "10", "--out", In("m")}), 0);
  const auto report = ReadJson(dir_ / "m" / "masks.json");
  EXPECT_EQ(report.at("num_masks"), 50);
  EXPECT_EQ(report.at("seed"), 10);
  EXPECT_EQ(report.at("grid"), nlohmann::json({3, 3}));
  { std::ofstream(dir_ / "broken.cfg") << "masks\n"; }
  EXPECT_EQ(RunCli({"masks", "--config", In("broken.cfg"), "--out", In("m2")}), 2);
}

TEST_F(CliTest, MasksCacheVerifies) {
  ASSERT_EQ(RunCli({"masks", "--masks", "30", "--image-size", "32", "32", "--grid", "4", "4",
                    "--out", In("mk"), "--verify"}),
            0);
  const auto report = ReadJson(dir_ / "mk" / "masks.json");
  EXPECT_TRUE(report.at("verified").get<bool>());
  EXPECT_EQ(report.at("cell"), nlohmann::json({8, 8}));
  EXPECT_EQ(fs::file_size(dir_ / "mk" / "masks.rmsk"), 24u + 30u * 32u * 32u * 4u);
}

TEST_F(CliTest, EvaluateWritesCurvesAndAggregate) {
  ASSERT_EQ(RunCli(Cat(Cat({"evaluate"}, Common("ev")), {"--steps", "16", In("one.png"), In("two.png")})), 0);
  const auto agg = ReadJson(dir_ / "ev" / "evaluate.json");
  EXPECT_EQ(agg.at("num_images"), 2);
  EXPECT_EQ(agg.at("method"), "rise");
  const auto one = ReadJson(dir_ / "ev" / "one.json");
  const auto two = ReadJson(dir_ / "ev" / "two.json");
  EXPECT_NEAR(agg.at("mean_deletion_auc").get<double>(),
              (one.at("deletion_auc").get<double>() + two.at("deletion_auc").get<double>()) / 2, 1e-12);
  std::ifstream csv(dir_ / "ev" / "one.deletion.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "fraction,score");
  int rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  EXPECT_EQ(rows, 17);
  EXPECT_TRUE(ReadJson(dir_ / "ev" / "one.deletion.json").at("blur_kernel").is_null());
  EXPECT_EQ(ReadJson(dir_ / "ev" / "one.insertion.json").at("blur_kernel"), 11);
}

TEST_F(CliTest, EvaluateBaselinesAndStoredMaps) {
  ASSERT_EQ(RunCli(Cat(Cat({"explain"}, Common("maps")), {In("one.png")})), 0);
  ASSERT_EQ(RunCli(Cat(Cat({"evaluate"}, Common("ev_rise")), {In("one.png")})), 0);
  ASSERT_EQ(RunCli(Cat(Cat({"evaluate"}, Common("ev_rsal")),
                       {"--method", "rsal", "--saliency-dir", In("maps"), In("one.png")})),
            0);
  EXPECT_EQ(ReadFileBytes(dir_ / "ev_rise" / "one.deletion.csv"),
            ReadFileBytes(dir_ / "ev_rsal" / "one.deletion.csv"));
  for (const char* method : {"random", "flat", "sliding"}) {
    EXPECT_EQ(RunCli(Cat(Cat({"evaluate"}, Common(std::string("ev_") + method)),
                         {"--method", method, "--window", "8", "--stride", "4", In("one.png")})),
              0)
        << method;
  }
  EXPECT_EQ(RunCli(Cat(Cat({"evaluate"}, Common("ev_bad")), {"--method", "rsal", In("one.png")})), 2);
}

TEST_F(CliTest, PointingReportsHitsAndSkips) {
  {
    std::ofstream boxes(dir_ / "boxes.jsonl");
    boxes << R"({"image_id":"one","category":"thing","x_min":8,"y_min":4,"x_max":20,"y_max":16})" << "\n"
          << R"({"image_id":"two","category":"thing","x_min":8,"y_min":4,"x_max":20,"y_max":16})" << "\n"
          << R"({"image_id":"two","category":"unmapped","x_min":0,"y_min":0,"x_max":2,"y_max":2})" << "\n"
          << R"({"image_id":"ghost","category":"thing","x_min":0,"y_min":0,"x_max":2,"y_max":2})" << "\n";
    std::ofstream(dir_ / "cats.json") << R"({"thing": 0})";
  }
  ASSERT_EQ(RunCli(Cat(Cat({"point"}, Common("pt")),
                       {"--boxes", In("boxes.jsonl"), "--category-map", In("cats.json"),
                        In("one.png"), In("two.png")})),
            0);
  const auto report = ReadJson(dir_ / "pt" / "pointing.json");
  EXPECT_EQ(report.at("categories").at("thing").at("hits"), 2);
  EXPECT_DOUBLE_EQ(report.at("mean_accuracy").get<double>(), 1.0);
  EXPECT_EQ(report.at("skipped_count"), 2);

  { std::ofstream(dir_ / "only_ghost.jsonl") << R"({"image_id":"ghost","category":"0","x_min":0,"y_min":0,"x_max":2,"y_max":2})" << "\n"; }
  EXPECT_EQ(RunCli(Cat(Cat({"point"}, Common("pt2")), {"--boxes", In("only_ghost.jsonl"), In("one.png")})), 4);
  EXPECT_FALSE(fs::exists(dir_ / "pt2" / "pointing.json"));
}

TEST_F(CliTest, ScorerUrlFromEnvironment) {
  HttpScoreServer server(std::make_shared<SyntheticScorer>(RegionMeanModel{{8, 4, 20, 16}}), "env");
  server.Start();
  setenv("RISEKIT_SCORER_URL", server.url().c_str(), 1);
  auto args = Common("env");
  args[1] = "http:";
  ASSERT_EQ(RunCli(Cat(Cat({"explain"}, args), {In("one.png")})), 0);
  unsetenv("RISEKIT_SCORER_URL");
  ASSERT_EQ(RunCli(Cat(Cat({"explain"}, Common("native")), {In("one.png")})), 0);
  EXPECT_EQ(ReadFileBytes(dir_ / "env" / "one.rsal"), ReadFileBytes(dir_ / "native" / "one.rsal"));
}

}  // namespace
}  // namespace risekit
