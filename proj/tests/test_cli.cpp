#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include "json.hpp"
#include "vqm/io.hpp"
#include "vqm/synthetic.hpp"
#include "vqm/vqm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vqm {
namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("vqm_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  CliRun cli(const std::string& args) const {
    const std::string cmd = std::string(VQM_CLI) + " " + args + " 2>" + path("stderr.txt");
    CliRun r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 256> buf{};
    while (std::fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
    const int status = ::pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
  }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
  }

  json read_json(const std::string& name) const {
    std::ifstream in(path(name));
    return json::parse(in);
  }

  fs::path dir_;
};

ModelParams truth_params() {
  ModelParams p;
  p.alpha_t = 4.0;
  p.alpha_tv = {{30.0, 3.0}, {15.0, 2.5}};
  p.alpha_q = 3.0;
  for (auto c : {FzClass::Fast, FzClass::Slow})
    for (double q : {16.0, 25.0, 40.0, 64.0, 102.0})
      p.alpha_qv[{c, q}] = c == FzClass::Fast ? 5.0 : 7.0;
  return p;
}

synthetic::PanelSpec panel_spec() {
  synthetic::PanelSpec spec;
  spec.truth = {{"akiyo", truth_params()}};
  spec.n_viewers = 16;
  spec.seed = 3;
  return spec;
}

std::string ratings_csv(const std::vector<RatingRecord>& r) {
  std::ostringstream out;
  io::write_ratings_csv(out, r);
  return out.str();
}

TEST_F(CliTest, PredictEvaluatesModels) {
  write("params.json", io::params_json(truth_params()).dump());
  auto r = cli("predict qtv 30 30 --params " + path("params.json"));
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "1\n");
  r = cli("predict mnqt_c 15 --params " + path("params.json"));
  EXPECT_EQ(r.out, csv::fmt(mnqt_c(15, truth_params())) + "\n");
  r = cli("predict qqv 102 16 3 --params " + path("params.json"));
  EXPECT_EQ(r.out, csv::fmt(qqv(102, 16, 3, truth_params())) + "\n");
  r = cli("predict qp2qs 44");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "102\n");
}

TEST_F(CliTest, PredictSelectsSequenceFromMultiSequenceFile) {
  ModelParams other = truth_params();
  other.alpha_t = 8.0;
  write("params.json",
        json{{"akiyo", io::params_json(truth_params())}, {"ice", io::params_json(other)}}.dump());
  EXPECT_EQ(cli("predict mnqt_c 15 --params " + path("params.json")).code, 1);
  const auto r = cli("predict mnqt_c 15 --sequence ice --params " + path("params.json"));
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, csv::fmt(mnqt_c(15, other)) + "\n");
}

TEST_F(CliTest, ExitCodes) {
  // Usage and domain errors exit 1, unreadable or malformed input exits 2.
  EXPECT_EQ(cli("").code, 1);
  EXPECT_EQ(cli("predict qp2qs").code, 1);
  EXPECT_EQ(cli("predict nosuchmodel 1").code, 1);
  EXPECT_EQ(cli("predict qtv 30 15").code, 1);
  EXPECT_EQ(cli("screen " + path("missing.csv")).code, 2);
  write("bad.csv", "viewer_id,sequence_id\nv1\n");
  EXPECT_EQ(cli("screen " + path("bad.csv")).code, 2);
  write("params.json", "{broken");
  EXPECT_EQ(cli("predict mnqt_c 15 --params " + path("params.json")).code, 2);
}

TEST_F(CliTest, ScreenFlagsPlantedViewers) {
  auto spec = panel_spec();
  spec.truth["foreman"] = truth_params();
  spec.truth["ice"] = truth_params();
  spec.n_viewers = 18;
  spec.seed = 1;
  spec.plant_outlier = true;
  spec.plant_violator = true;
  write("ratings.csv", ratings_csv(synthetic::generate_panel(spec)));
  const auto r = cli("--output-dir " + path("out") + " screen " + path("ratings.csv") +
                     " --margin 10 --threshold 6");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("screened"), std::string::npos);
  const auto report = read_json("out/rejection_report.json");
  EXPECT_NE(report.dump().find("outlier"), std::string::npos);
  EXPECT_NE(report.dump().find("violator"), std::string::npos);
  std::ifstream survivors(path("out/survivors.csv"));
  const auto kept = io::read_ratings_csv(survivors);
  for (const auto& k : kept) EXPECT_NE(k.viewer_id, "outlier");
  const auto manifest = read_json("out/manifest.json");
  EXPECT_EQ(manifest["command"], "screen");
  EXPECT_EQ(manifest["parameters"]["margin"], 10.0);
  EXPECT_EQ(manifest["outputs"].size(), 2u);
}

TEST_F(CliTest, PipelineMatchesLibrary) {
  write("ratings.csv", ratings_csv(synthetic::generate_panel(panel_spec())));
  const std::string out = " --output-dir " + path("out");
  ASSERT_EQ(cli(out + " screen " + path("ratings.csv")).code, 0);
  ASSERT_EQ(cli(out + " mos " + path("out/survivors.csv")).code, 0);
  ASSERT_EQ(cli(out + " fit " + path("out/quality_table.csv")).code, 0);
  const auto params = read_json("out/params.json");
  ASSERT_TRUE(params.contains("akiyo"));
  EXPECT_TRUE(fs::exists(path("out/plot.csv")));
  EXPECT_TRUE(fs::exists(path("out/fit_report.json")));

  // The same steps through the library, including the CSV round trips.
  std::ifstream in(path("ratings.csv"));
  const auto rep = screen_ratings(io::read_ratings_csv(in), {});
  std::stringstream s1;
  io::write_ratings_csv(s1, rep.survivors);
  const auto table = compute_quality_table(io::read_ratings_csv(s1), kDefaultTMax, kDefaultQMin);
  std::stringstream s2;
  io::write_quality_csv(s2, table);
  const auto back = io::read_quality_csv(s2);
  const auto fr = fit_qtv(back);
  const auto qs = fit_qqv(back);
  ModelParams expected = merge(fr.params, qs.params);
  EXPECT_EQ(params["akiyo"], io::params_json(expected));

  const auto cli = io::params_from_json(params["akiyo"]);
  EXPECT_NEAR(*cli.alpha_t, 4.0, 0.4);
  EXPECT_NEAR(*cli.alpha_q, 3.0, 0.3);
}

TEST_F(CliTest, AnovaTwoByTwo) {
  write("obs.csv", "a,b,value\nx,p,1\nx,p,2\nx,q,3\nx,q,4\ny,p,5\ny,p,6\ny,q,11\ny,q,12\n");
  const auto r = cli("--output-dir " + path("out") + " anova " + path("obs.csv") +
                     " --interaction a,b");
  ASSERT_EQ(r.code, 0);
  const auto j = read_json("out/anova.json");
  ASSERT_EQ(j["rows"].size(), 3u);
  EXPECT_EQ(j["rows"][0]["ss"], 72.0);
  EXPECT_EQ(j["rows"][1]["ss"], 32.0);
  EXPECT_EQ(j["rows"][2]["ss"], 8.0);
  EXPECT_EQ(j["rows"][2]["f_value"], 16.0);
  EXPECT_EQ(j["rows"][2]["p_value"], "0.0161");
  EXPECT_EQ(j["total"]["ss"], 114.0);
  EXPECT_TRUE(fs::exists(path("out/anova.csv")));
}

TEST_F(CliTest, PlanEqualBudgetsStaysConstant) {
  std::ostringstream rates;
  rates << "sequence_id,fr,qs,bitrate_kbps\n";
  for (double fr : {7.5, 15.0, 30.0})
    for (double qs : {16.0, 25.0, 40.0, 64.0, 102.0})
      rates << "akiyo," << fr << ',' << qs << ','
            << 1000.0 * std::pow(fr / 30.0, 0.7) * std::pow(qs / 16.0, -1.1) << '\n';
  write("rates.csv", rates.str());
  write("params.json", io::params_json(truth_params()).dump());
  const std::string common = "--output-dir " + path("out") + " plan " + path("rates.csv") +
                             " --sequence akiyo --params " + path("params.json");
  auto r = cli(common + " --r-high 1000 --r-low 1000");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("StayConstant", 0), 0u) << r.out;
  EXPECT_EQ(read_json("out/plan.json")["chosen"]["axis"], "StayConstant");
  r = cli(common + " --r-high 1000 --r-low 620");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("VaryQS", 0), 0u) << r.out;
  EXPECT_EQ(cli(common + " --r-high 100 --r-low 200").code, 1);
}

}  // namespace
}  // namespace vqm
