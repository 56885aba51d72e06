#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "gaze3d/cli.hpp"
#include "gaze3d/config.hpp"

namespace gaze3d {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("gaze3d_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return run_cli(args, out_, err_);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), {});
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST_F(CliTest, SimulateTwiceSameSeedIdentical) {
  ASSERT_EQ(run({"simulate", "--seed", "5", "--noise-px", "0.5", "--out", path("a.jsonl")}), 0)
      << err_.str();
  ASSERT_EQ(run({"simulate", "--seed", "5", "--noise-px", "0.5", "--out", path("b.jsonl")}), 0);
  ASSERT_EQ(run({"simulate", "--seed", "6", "--noise-px", "0.5", "--out", path("c.jsonl")}), 0);
  EXPECT_EQ(slurp(path("a.jsonl")), slurp(path("b.jsonl")));
  EXPECT_NE(slurp(path("a.jsonl")), slurp(path("c.jsonl")));
}

TEST_F(CliTest, FitEvaluateOnSimulatedDataWithoutWarnings) {
  ASSERT_EQ(run({"simulate", "--out", path("d.jsonl")}), 0);
  const std::string before = slurp(path("d.jsonl"));
  for (const char* mapper : {"2d2d", "2d3d", "3d3d"}) {
    ASSERT_EQ(run({"fit", "--data", path("d.jsonl"), "--mappers", mapper, "--depths", "1,2",
                   "--out", path("m.txt")}),
              0)
        << err_.str();
    EXPECT_EQ(err_.str(), "");
    ASSERT_EQ(run({"evaluate", "--data", path("d.jsonl"), "--model", path("m.txt")}), 0)
        << err_.str();
    EXPECT_EQ(err_.str(), "");
    EXPECT_NE(out_.str().find(std::string(mapper) + ",2,1;2,1.5,16,"), std::string::npos)
        << out_.str();
  }
  EXPECT_EQ(slurp(path("d.jsonl")), before);
}

TEST_F(CliTest, SweepWritesCsvFiles) {
  ASSERT_EQ(run({"sweep", "--out", path("r.csv"), "--offsets", path("o.csv"), "--summary",
                 path("s.csv")}),
            0)
      << err_.str();
  const std::string results = slurp(path("r.csv"));
  EXPECT_EQ(std::count(results.begin(), results.end(), '\n'), 1 + 3 * 155);
  EXPECT_FALSE(slurp(path("o.csv")).empty());
  EXPECT_FALSE(slurp(path("s.csv")).empty());
  ASSERT_EQ(run({"sweep", "--out", path("r2.csv")}), 0);
  EXPECT_EQ(slurp(path("r2.csv")), results);
}

TEST_F(CliTest, SweepOnLoadedDatasetMatchesSimulated) {
  ASSERT_EQ(run({"simulate", "--seed", "3", "--noise-px", "0.3", "--out", path("d.jsonl")}), 0);
  ASSERT_EQ(run({"sweep", "--data", path("d.jsonl"), "--mappers", "2d3d", "--out", path("a.csv")}), 0);
  ASSERT_EQ(run({"sweep", "--seed", "3", "--noise-px", "0.3", "--mappers", "2d3d", "--out",
                 path("b.csv")}),
            0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
}

TEST_F(CliTest, UnknownConfigKeyNamed) {
  std::ofstream(path("c.json")) << R"({"seed": 3, "fit": {"lm": {"max_iter": 5}}})";
  EXPECT_NE(run({"sweep", "--config", path("c.json")}), 0);
  EXPECT_EQ(err_.str(), "error: ConfigError: fit.lm.max_iter: unknown key\n");
}

TEST_F(CliTest, ConfigFileDrivesOutputs) {
  std::ofstream(path("c.json")) << R"({
    "seed": 11,
    "mappers": ["3d3d"],
    "layout": {"depths_m": [1.0, 1.5]},
    "output": {"results_csv": ")" + path("res.csv") + R"("}
  })";
  ASSERT_EQ(run({"sweep", "--config", path("c.json")}), 0) << err_.str();
  const std::string csv = slurp(path("res.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 3 * 2);
}

TEST_F(CliTest, ErrorsAreSingleMachineReadableLines) {
  EXPECT_EQ(run({"fit", "--data", path("missing.jsonl"), "--mappers", "2d2d"}), 1);
  EXPECT_EQ(err_.str().rfind("error: IoError: ", 0), 0u);
  const std::string first = err_.str();
  EXPECT_EQ(std::count(first.begin(), first.end(), '\n'), 1);

  EXPECT_EQ(run({"fit", "--mappers", "2d2d,3d3d"}), 1);
  EXPECT_EQ(err_.str().rfind("error: ConfigError: ", 0), 0u);

  EXPECT_EQ(run({"sweep", "--mappers", "4d4d"}), 1);
  EXPECT_EQ(err_.str().rfind("error: ConfigError: ", 0), 0u);

  EXPECT_EQ(run({"simulate", "--bogus"}), 2);
  EXPECT_EQ(err_.str().rfind("error: usage: ", 0), 0u);
  EXPECT_EQ(run({}), 2);
}

TEST_F(CliTest, MissingPoseWarningForThreeDToThreeD) {
  std::ofstream(path("d.jsonl"))
      << "{\"schema\":\"gaze3d-dataset\",\"version\":1,\"source\":\"recorded\","
         "\"units\":{\"world\":\"m\",\"image\":\"px\",\"angles\":\"rad\"},"
         "\"scene_camera\":{\"focal_px\":[720,720],\"principal_px\":[640,360],\"resolution_px\":[1280,720]},"
         "\"eye_camera\":{\"focal_px\":[620,620],\"principal_px\":[320,180],\"resolution_px\":[640,360]}}\n"
         "{\"role\":\"calibration\",\"depth_m\":1,\"pupil_px\":[300,170],\"target_scene_m\":[0,0,1]}\n";
  EXPECT_EQ(run({"fit", "--data", path("d.jsonl"), "--mappers", "3d3d"}), 1);
  EXPECT_NE(err_.str().find("warning: 1 records lack pupil_pose"), std::string::npos);
}

TEST_F(CliTest, Selftest) {
  EXPECT_EQ(run({"selftest"}), 0) << out_.str();
  EXPECT_EQ(out_.str().find("FAIL"), std::string::npos);
}

TEST(Config, DefaultsMatchRig) {
  const ExperimentConfig cfg = parse_config_string("{}");
  const SimRig rig = cfg.build_rig();
  const SimRig ref = SimRig::defaults();
  EXPECT_EQ(rig.eye_camera.pose.translation, ref.eye_camera.pose.translation);
  EXPECT_EQ(rig.eye_camera.pose.rotation, ref.eye_camera.pose.rotation);
  EXPECT_EQ(rig.scene_camera.focal, ref.scene_camera.focal);
  EXPECT_EQ(cfg.layout.depths.size(), 5u);
}

TEST(Config, ShippedDefaultFileParses) {
  const ExperimentConfig cfg = load_config(fs::path(GAZE3D_SOURCE_DIR) / "configs/default.json");
  const ExperimentConfig def = parse_config_string("{}");
  EXPECT_EQ(cfg.seed, def.seed);
  EXPECT_EQ(cfg.layout.depths, def.layout.depths);
  EXPECT_EQ(cfg.build_rig().eye_camera.pose.translation, def.build_rig().eye_camera.pose.translation);
  EXPECT_EQ(cfg.fit.normalize_residuals, def.fit.normalize_residuals);
}

TEST(Config, ValidationErrors) {
  auto code = [](const std::string& text) {
    try {
      parse_config_string(text);
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string("ok");
  };
  EXPECT_EQ(code(R"({"layout": {"depths_m": [1, 1]}})").rfind("layout.depths_m", 0), 0u);
  EXPECT_EQ(code(R"({"layout": {"depths_m": [-1]}})").rfind("layout.depths_m", 0), 0u);
  EXPECT_EQ(code(R"({"k_range": [3, 2]})").rfind("k_range", 0), 0u);
  EXPECT_EQ(code(R"({"seed": -4})").rfind("seed", 0), 0u);
  EXPECT_EQ(code(R"({"noise": {"pupil_px": "big"}})").rfind("noise.pupil_px", 0), 0u);
  EXPECT_EQ(code(R"({"fit": {"lm": {"damping_increase": 0.5}}})").rfind("fit.lm", 0), 0u);
  EXPECT_EQ(code(R"({"rig": {"eye_camera": {"offset_m": [0, 0, -0.035]}}})").rfind("rig", 0), 0u);
  EXPECT_EQ(code("[1, 2]").rfind("config", 0), 0u);
  EXPECT_EQ(code(R"({"mappers": ["2d3d"], "k_range": [1, 2]})"), "ok");
}

TEST(Config, ListParsers) {
  EXPECT_EQ(parse_depth_list("1, 1.5,2"), (std::vector<double>{1.0, 1.5, 2.0}));
  EXPECT_THROW(parse_depth_list("1,x"), Error);
  EXPECT_THROW(parse_depth_list(""), Error);
  EXPECT_EQ(parse_mapper_list("3d3d,2d2d").size(), 2u);
  EXPECT_THROW(parse_mapper_list("2d2d,nope"), Error);
}

}  // namespace
}  // namespace gaze3d
