// Copyright 2026 The gmlight Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace gmlight::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("gmlight_cli_" + std::string(::testing::UnitTest::GetInstance()
                                             ->current_test_info()
                                             ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, VersionAndUsageErrors) {
  const auto v = call({"--version"});
  EXPECT_EQ(v.code, kOk);
  EXPECT_NE(v.out.find(kVersion), std::string::npos);
  EXPECT_EQ(call({}).code, kUsage);
  EXPECT_EQ(call({"anchors", "--n", "4", "--bogus"}).code, kUsage);
  EXPECT_EQ(call({"fixture", "spiral", "--out", path("x.pfm")}).code, kUsage);
  EXPECT_EQ(call({"anchors"}).code, kUsage);
}

TEST_F(CliTest, AnchorsWritesValidJson) {
  const auto r = call({"anchors", "--n", "128", "--out", path("a.json")});
  ASSERT_EQ(r.code, kOk) << r.err;
  const AnchorSet a = anchors_from_json(detail::read_text(path("a.json")));
  const AnchorSet ref = generate_anchors(128);
  ASSERT_EQ(a.size(), 128u);
  for (std::size_t k = 0; k < 128; ++k) EXPECT_EQ(a[k], ref[k]);
  const auto stdout_run = call({"anchors", "--n", "3"});
  EXPECT_NO_THROW((void)nlohmann::json::parse(stdout_run.out));
}

TEST_F(CliTest, FixtureDeltaAtPole) {
  ASSERT_EQ(call({"fixture", "delta", "--width", "16", "--height", "8", "--dir",
                  "0,0,1", "--value", "10", "--out", path("d.pfm")})
                .code,
            kOk);
  const Panorama p = load_panorama(path("d.pfm"));
  std::size_t bright = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i][0] > 0) {
      ++bright;
      EXPECT_EQ(i / 16, 0u);
      EXPECT_EQ(p[i], (Rgb{10, 10, 10}));
    }
  }
  EXPECT_EQ(bright, 1u);
  ASSERT_EQ(call({"fixture", "uniform", "--width", "8", "--height", "4", "--value",
                  "1", "--out", path("u.pfm")})
                .code,
            kOk);
  EXPECT_EQ(load_panorama(path("u.pfm")), Panorama(8, 4, Rgb{1, 1, 1}));
}

TEST_F(CliTest, TruncatedPfmIsDataError) {
  detail::write_text(path("bad.pfm"), "PF\n4 2\n-1\n\x01\x02");
  const auto r = call({"decompose", "--pano", path("bad.pfm"), "--n", "8"});
  EXPECT_EQ(r.code, kDataError);
  EXPECT_FALSE(r.err.empty());
  EXPECT_EQ(call({"decompose", "--pano", path("missing.pfm")}).code, kDataError);
}

TEST_F(CliTest, PipelineIsDeterministic) {
  const auto pipeline = [&](const std::string& tag) {
    const auto f = [&](const std::string& n) { return path(tag + n); };
    EXPECT_EQ(call({"fixture", "two-lights", "--width", "64", "--height", "32",
                    "--ambient", "0.1", "--out", f("pano.pfm"), "--depth-out",
                    f("depth.pfm"), "--depth", "2", "--depth-far", "4"})
                  .code,
              kOk);
    EXPECT_EQ(call({"anchors", "--n", "32", "--out", f("a.json")}).code, kOk);
    EXPECT_EQ(call({"decompose", "--pano", f("pano.pfm"), "--depth", f("depth.pfm"),
                    "--anchors", f("a.json"), "--out", f("params.json")})
                  .code,
              kOk);
    EXPECT_EQ(call({"project", "--params", f("params.json"), "--anchors", f("a.json"),
                    "--width", "64", "--height", "32", "--out", f("map.pfm"),
                    "--schedule", "0.04,0.01,0.0025"})
                  .code,
              kOk);
    EXPECT_EQ(call({"metrics", "--pred", f("map.pfm"), "--gt", f("pano.pfm"),
                    "--anchors", f("a.json"), "--out", f("report.json")})
                  .code,
              kOk);
  };
  pipeline("x_");
  pipeline("y_");
  for (const char* name : {"pano.pfm", "depth.pfm", "a.json", "params.json",
                           "map.pfm", "map.level0.pfm", "map.level1.pfm",
                           "report.json"}) {
    const std::string a = detail::read_text(path(std::string("x_") + name));
    const std::string b = detail::read_text(path(std::string("y_") + name));
    EXPECT_FALSE(a.empty()) << name;
    EXPECT_EQ(a, b) << name;
  }
  const auto report = nlohmann::json::parse(detail::read_text(path("x_report.json")));
  EXPECT_TRUE(report.contains("gmd"));
  EXPECT_GE(report["rmse"].get<double>(), 0.0);
}

TEST_F(CliTest, GmlReportsValueAndNonConvergence) {
  ASSERT_EQ(call({"fixture", "delta", "--width", "32", "--height", "16", "--out",
                  path("a.pfm")})
                .code,
            kOk);
  ASSERT_EQ(call({"fixture", "gradient", "--width", "32", "--height", "16", "--out",
                  path("b.pfm")})
                .code,
            kOk);
  ASSERT_EQ(call({"decompose", "--pano", path("a.pfm"), "--n", "16", "--out",
                  path("pa.json")})
                .code,
            kOk);
  ASSERT_EQ(call({"decompose", "--pano", path("b.pfm"), "--n", "16", "--out",
                  path("pb.json")})
                .code,
            kOk);
  const auto ok = call({"gml", "--a", path("pa.json"), "--b", path("pb.json")});
  ASSERT_EQ(ok.code, kOk) << ok.err;
  const auto j = nlohmann::json::parse(ok.out);
  EXPECT_TRUE(j["converged"].get<bool>());
  EXPECT_GT(j["value"].get<double>(), 0.0);
  const auto same = call({"gml", "--a", path("pa.json"), "--b", path("pa.json")});
  EXPECT_LE(nlohmann::json::parse(same.out)["value"].get<double>(), 1e-3);
  const auto capped = call({"gml", "--a", path("pa.json"), "--b", path("pb.json"),
                            "--max-iterations", "2"});
  EXPECT_EQ(capped.code, kNotConverged);
  const auto ub = call({"gml", "--a", path("pa.json"), "--b", path("pb.json"),
                        "--unbalanced"});
  EXPECT_EQ(ub.code, kOk) << ub.err;
}

TEST_F(CliTest, ReprojectZeroOffsetMatchesProject) {
  ASSERT_EQ(call({"fixture", "two-lights", "--width", "32", "--height", "16", "--out",
                  path("p.pfm")})
                .code,
            kOk);
  ASSERT_EQ(call({"decompose", "--pano", path("p.pfm"), "--n", "16", "--out",
                  path("params.json")})
                .code,
            kOk);
  ASSERT_EQ(call({"project", "--params", path("params.json"), "--width", "32",
                  "--height", "16", "--out", path("m.pfm")})
                .code,
            kOk);
  ASSERT_EQ(call({"reproject", "--params", path("params.json"), "--width", "32",
                  "--height", "16", "--offset", "0,0,0", "--out", path("r.pfm")})
                .code,
            kOk);
  EXPECT_EQ(detail::read_text(path("m.pfm")), detail::read_text(path("r.pfm")));
  EXPECT_EQ(call({"reproject", "--params", path("params.json"), "--offset", "5,0,0",
                  "--out", path("far.pfm")})
                .code,
            kDataError);
}

TEST_F(CliTest, GmdOfIdenticalMapsIsZero) {
  ASSERT_EQ(call({"fixture", "gradient", "--width", "32", "--height", "16", "--out",
                  path("g.pfm")})
                .code,
            kOk);
  const auto r = call({"gmd", "--a", path("g.pfm"), "--b", path("g.pfm"), "--n", "16"});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["gmd"].get<double>(), 0.0);
}

TEST(LevelPath, InsertsLevelBeforeExtension) {
  EXPECT_EQ(detail::level_path("out/map.pfm", 2), "out/map.level2.pfm");
  EXPECT_EQ(detail::level_path("map", 0), "map.level0");
}

}  // namespace
}  // namespace gmlight::cli
