#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cli.hpp"
#include "horizon/image.hpp"
#include "horizon/label_io.hpp"
#include "temp_dir.hpp"

namespace fs = std::filesystem;
using testing_support::TempDir;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  testing::internal::CaptureStdout();
  testing::internal::CaptureStderr();
  const int code = horizon::cli::run(args);
  std::fflush(stdout);
  return {code, testing::internal::GetCapturedStdout(), testing::internal::GetCapturedStderr()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// The whole pipeline at toy scale, rooted at `dir`.
void run_pipeline(const fs::path& dir) {
  auto p = [&](const std::string& rel) { return (dir / rel).string(); };
  const std::vector<std::vector<std::string>> steps{
      {"synth-sfm", "--out", p("model.txt"), "--cameras", "40"},
      {"label-sfm", "--model", p("model.txt"), "--out", p("sfm_labels.csv")},
      {"fit-distributions", "--labels", p("sfm_labels.csv"), "--out", p("dists.json")},
      {"paint-panorama", "--out", p("panos/painted.png"), "--height", "128"},
      {"sample-cutouts", "--panos", p("panos"), "--dists", p("dists.json"), "--out", p("cutouts"),
       "--count", "60", "--size", "128", "--workers", "3"},
      {"build-bins", "--labels", p("cutouts/labels.csv"), "--out", p("space.json"), "--bins", "8"},
      {"train", "--kind", "linear", "--labels", p("cutouts/labels.csv"), "--out", p("linear.json"),
       "--epochs", "5", "--workers", "2"},
      {"train", "--kind", "prior", "--labels", p("cutouts/labels.csv"), "--space", p("space.json"),
       "--out", p("prior.json")},
      {"predict-aggregate", "--labels", p("cutouts/labels.csv"), "--predictor", p("linear.json"),
       "--space", p("space.json"), "--strategy", "average", "--out", p("pred_avg.csv"), "--workers", "2"},
      {"predict-aggregate", "--labels", p("cutouts/labels.csv"), "--predictor", p("prior.json"),
       "--space", p("space.json"), "--strategy", "optimize", "--out", p("pred_opt.csv")},
      {"evaluate", "--labels", p("cutouts/labels.csv"), "--predictions", p("pred_avg.csv"), "--out-dir",
       p("eval")},
  };
  for (const auto& step : steps) {
    const Outcome o = run_cli(step);
    ASSERT_EQ(o.code, 0) << step[0] << "\n" << o.err;
  }
}

std::vector<fs::path> files_under(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

}  // namespace

TEST(Cli, PipelineIsByteReproducible) {
  TempDir a("cli_a"), b("cli_b");
  run_pipeline(a.path());
  run_pipeline(b.path());
  const auto fa = files_under(a.path()), fb = files_under(b.path());
  ASSERT_EQ(fa, fb);
  ASSERT_GT(fa.size(), 70u);
  for (const auto& rel : fa) {
    // Echoed configs record the paths they were given; everything else is path-free.
    const std::string ta = replace_all(slurp(a.path() / rel), a.path().string(), "<root>");
    const std::string tb = replace_all(slurp(b.path() / rel), b.path().string(), "<root>");
    EXPECT_EQ(ta, tb) << rel;
  }
}

TEST(Cli, ConfigEchoRecordsResolvedDefaults) {
  TempDir dir;
  const std::string out = dir.file("pano.png");
  ASSERT_EQ(run_cli({"paint-panorama", "--out", out}).code, 0);
  const auto j = nlohmann::json::parse(slurp(out + ".config.json"));
  EXPECT_EQ(j.at("command"), "paint-panorama");
  EXPECT_EQ(j.at("options").at("height"), 512);
  EXPECT_EQ(j.at("options").at("seed"), horizon::cli::kDefaultSeed);
  EXPECT_EQ(j.at("options").at("textured"), false);
  EXPECT_EQ(horizon::read_image(out).width(), 1024);
}

TEST(Cli, ReplayReproducesOutputs) {
  TempDir dir;
  const std::string pano = dir.file("p.png");
  ASSERT_EQ(run_cli({"paint-panorama", "--out", pano, "--height", "64", "--textured", "--seed", "5"}).code, 0);
  const std::string before = slurp(pano);
  fs::remove(pano);
  const Outcome o = run_cli({"replay", pano + ".config.json"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(slurp(pano), before);
}

TEST(Cli, EvaluatePerfectPredictions) {
  TempDir dir;
  std::vector<horizon::LabelRecord> recs{{"a", {100, 50}, 20.0, 30.0, {}}, {"b", {100, 50}, 25.0, 25.0, {}}};
  horizon::write_labels_csv(dir.file("labels.csv"), recs);
  const Outcome o = run_cli({"evaluate", "--labels", dir.file("labels.csv"), "--predictions",
                             dir.file("labels.csv"), "--out-dir", dir.file("eval")});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NE(o.out.find("AUC: 1.0000"), std::string::npos) << o.out;
  EXPECT_TRUE(fs::exists(dir.path() / "eval" / "per_image.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "eval" / "curve.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "eval" / "run_config.json"));
}

TEST(Cli, EvaluateHonorsMaxThreshold) {
  TempDir dir;
  // Error 0.1 image heights on the only image.
  horizon::write_labels_csv(dir.file("l.csv"), {{"a", {100, 100}, 50.0, 50.0, {}}});
  horizon::write_labels_csv(dir.file("p.csv"), {{"a", {100, 100}, 40.0, 40.0, {}}});
  const Outcome wide = run_cli({"evaluate", "--labels", dir.file("l.csv"), "--predictions",
                                dir.file("p.csv"), "--out-dir", dir.file("e1"), "--max-threshold", "0.5"});
  const Outcome narrow = run_cli({"evaluate", "--labels", dir.file("l.csv"), "--predictions",
                                  dir.file("p.csv"), "--out-dir", dir.file("e2")});
  EXPECT_NE(wide.out.find("AUC: 0.8000"), std::string::npos) << wide.out;
  EXPECT_NE(narrow.out.find("AUC: 0.6000"), std::string::npos) << narrow.out;
  const auto summary = nlohmann::json::parse(slurp(dir.path() / "e1" / "summary.json"));
  EXPECT_EQ(summary.at("max_threshold"), 0.5);
}

TEST(Cli, MissingPredictionIsDataError) {
  TempDir dir;
  horizon::write_labels_csv(dir.file("l.csv"), {{"a", {100, 100}, 50, 50, {}}, {"b", {100, 100}, 50, 50, {}}});
  horizon::write_labels_csv(dir.file("p.csv"), {{"a", {100, 100}, 50, 50, {}}});
  const Outcome strict = run_cli({"evaluate", "--labels", dir.file("l.csv"), "--predictions",
                                  dir.file("p.csv"), "--out-dir", dir.file("e")});
  EXPECT_EQ(strict.code, 2);
  EXPECT_NE(strict.err.find("MissingPrediction"), std::string::npos) << strict.err;
  const Outcome lenient = run_cli({"evaluate", "--labels", dir.file("l.csv"), "--predictions",
                                   dir.file("p.csv"), "--out-dir", dir.file("e"), "--allow-missing"});
  EXPECT_EQ(lenient.code, 0);
  EXPECT_NE(lenient.err.find("no prediction for b"), std::string::npos);
}

TEST(Cli, TwoCameraModelIsRejected) {
  TempDir dir;
  std::ofstream(dir.file("m.txt")) << "a 640 480 500 1 0 0 0 1 0 0 0 1 0 0 0\n"
                                      "b 640 480 500 1 0 0 0 1 0 0 0 1 1 0 0\n";
  const Outcome o = run_cli({"label-sfm", "--model", dir.file("m.txt"), "--out", dir.file("l.csv")});
  EXPECT_NE(o.code, 0);
  EXPECT_NE(o.err.find("insufficient cameras"), std::string::npos) << o.err;
  EXPECT_FALSE(fs::exists(dir.file("l.csv")));
}

TEST(Cli, NonEquirectangularPanoramaIsRejected) {
  TempDir dir;
  fs::create_directories(dir.path() / "panos");
  horizon::write_image(dir.file("panos/square.png"), horizon::Image(100, 100, 1, 0.5f));
  std::ofstream(dir.file("d.json"))
      << R"({"fov_deg": {"mean": 60, "stddev": 5}, "roll": {"location": 0, "scale": 0.02},)"
      << R"( "tilt": {"samples": [0.0, 0.01]}})";
  const Outcome o = run_cli({"sample-cutouts", "--panos", dir.file("panos"), "--dists", dir.file("d.json"),
                             "--out", dir.file("out"), "--count", "2", "--size", "64"});
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("width == 2 * height"), std::string::npos) << o.err;
  EXPECT_NE(o.err.find("square.png"), std::string::npos) << o.err;
}

TEST(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(run_cli({}).code, 1);
  EXPECT_EQ(run_cli({"no-such-command"}).code, 1);
  EXPECT_EQ(run_cli({"evaluate", "--labels", "x.csv"}).code, 1);
  EXPECT_EQ(run_cli({"train", "--labels", "x", "--out", "y", "--loss", "l1"}).code, 1);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST(Cli, MissingInputIsDataError) {
  TempDir dir;
  const Outcome o = run_cli({"evaluate", "--labels", dir.file("nope.csv"), "--predictions",
                             dir.file("nope.csv"), "--out-dir", dir.file("e")});
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("cannot open"), std::string::npos);
}
