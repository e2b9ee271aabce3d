#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "folia/pipeline.hpp"

namespace fs = std::filesystem;
using folia::Json;

namespace {

const fs::path& workdir() {
  static fs::path d = [] {
    auto p = fs::temp_directory_path() / ("folia_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return d;
}

std::string path(const std::string& name) { return (workdir() / name).string(); }

int cli(const std::string& args) {
  std::string cmd = "cd '" + workdir().string() + "' && '" FOLIA_CLI_PATH "' " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void write(const std::string& name, const std::string& text) { std::ofstream(path(name)) << text; }

Json load(const std::string& name) {
  std::ifstream f(path(name));
  return Json::parse(f);
}

void store(const std::string& name, const Json& j) { std::ofstream(path(name)) << j.dump(2); }

const char* kFast = "model = suspension\n[entropy]\nenabled = false\n";

// one full demo report shared by the verify tests
const Json& demo_report() {
  static Json j = [] {
    EXPECT_EQ(cli("demo --preset example1 --out demo.json"), 0);
    return load("demo.json");
  }();
  return j;
}

}  // namespace

TEST(Config, ParsesSectionsAndRejectsUnknownKeys) {
  auto F = folia::parse_flat_config("model = suspension # c\n[perturb]\nspacing = midpoint\n\n[entropy]\nepsilon = 1/64, 0.03\n");
  EXPECT_EQ(F.at("perturb.spacing"), "midpoint");
  auto c = folia::config_from_flat(F);
  EXPECT_EQ(c.spacing, folia::Spacing::Midpoint);
  ASSERT_EQ(c.epsilons.size(), 2u);
  EXPECT_EQ(c.epsilons[0], 1.0 / 64);
  EXPECT_THROW(folia::config_from_flat({{"nope", "1"}}), folia::Error);
  EXPECT_THROW(folia::config_from_flat({{"delta", "-1"}}), folia::Error);
  EXPECT_THROW(folia::config_from_flat({{"N", "2.5"}}), folia::Error);
  EXPECT_THROW(folia::parse_flat_config("a = 1\na = 2\n"), folia::Error);
  EXPECT_THROW(folia::parse_flat_config("[open\n"), folia::Error);
}

TEST(Config, EchoRoundTrips) {
  folia::ExperimentConfig c;
  c.delta = 0.0123456789, c.epsilons = {1.0 / 64, 1.0 / 3};
  auto d = folia::config_from_flat(folia::config_echo(c));
  EXPECT_EQ(folia::config_echo(d), folia::config_echo(c));
}

TEST(Cli, ShippedConfigRunsAndVerifies) {
  std::string cfg = std::string(FOLIA_SOURCE_DIR) + "/configs/demo.cfg";
  ASSERT_EQ(cli("run --config '" + cfg + "' --out shipped.json"), 0);
  auto r = load("shipped.json");
  EXPECT_FALSE(r["certificate"].is_null());
  EXPECT_LT(r["budget"]["achieved"].get<double>(), 1e-2);
  EXPECT_FALSE(r["atlas"]["flagged"].get<bool>());
  EXPECT_TRUE(fs::exists(path("shipped.entropy.before.csv")));
  std::ifstream csv(path("shipped.entropy.after.csv"));
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "n,epsilon,count,slope");
  EXPECT_EQ(cli("verify shipped.json"), 0);
}

TEST(Cli, DemoPresets) {
  const auto& r = demo_report();
  EXPECT_EQ(r["status"]["exit_code"], 0);
  EXPECT_FALSE(r["certificate"].is_null());
  EXPECT_FALSE(r["detected"].is_null());
  EXPECT_EQ(cli("demo --preset example2 --out e2.json"), 0);
  EXPECT_EQ(cli("demo --preset reeb --out reeb.json"), 3);
  EXPECT_TRUE(load("reeb.json")["certificate"].is_null());
  EXPECT_EQ(cli("demo --preset nope"), 1);
}

TEST(Cli, TinyDeltaIsBudgetViolation) {
  write("tiny.cfg", "delta = 1e-12\n" + std::string(kFast));
  EXPECT_EQ(cli("run --config tiny.cfg --out tiny.json"), 2);
  auto r = load("tiny.json");
  EXPECT_GE(r["budget"]["achieved"].get<double>(), 1e-12);
  EXPECT_EQ(r["status"]["error"]["kind"], "budget violation");
}

TEST(Cli, MalformedConfigIsInputError) {
  write("bad1.cfg", "not a config line\n");
  write("bad2.cfg", "model = suspension\nunknown_key = 3\n");
  write("bad3.cfg", "model = torus\n");
  EXPECT_EQ(cli("run --config bad1.cfg"), 1);
  EXPECT_EQ(cli("run --config bad2.cfg"), 1);
  EXPECT_EQ(cli("run --config bad3.cfg"), 1);
  EXPECT_EQ(cli("run --config missing.cfg"), 1);
  EXPECT_EQ(cli("frobnicate"), 1);
  EXPECT_EQ(cli("run"), 1);
}

TEST(Cli, VerifyDetectsTampering) {
  auto r = demo_report();
  EXPECT_EQ(cli("verify demo.json"), 0);
  auto t = r;
  t["certificate"]["x"] = t["certificate"]["x"].get<double>() + 1e-3;
  store("tampered.json", t);
  EXPECT_EQ(cli("verify tampered.json"), 3);
  auto v = folia::verify_report(t);
  EXPECT_EQ(v.field, "certificate.x");
  auto s = r;
  s["budget"]["achieved"] = 1e-3;
  EXPECT_EQ(folia::verify_report(s).field, "budget.achieved");
  auto n = r;
  n.erase("certificate");
  store("nocert.json", n);
  EXPECT_EQ(cli("verify nocert.json"), 0);
  EXPECT_NE(folia::verify_report(n).notes.at(0).find("nothing to verify"), std::string::npos);
  write("garbage.json", "{not json");
  EXPECT_EQ(cli("verify garbage.json"), 1);
}

TEST(Cli, ReportsAreDeterministic) {
  write("det.cfg", kFast);
  ASSERT_EQ(cli("run --config det.cfg --out det1.json"), 0);
  ASSERT_EQ(cli("run --config det.cfg --out det2.json"), 0);
  auto a = load("det1.json"), b = load("det2.json");
  a.erase("timings_ms"), b.erase("timings_ms");
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(Cli, PaperConventionIsLabelledAndFailsTheChain) {
  write("asw.cfg", "convention = paper-as-written\n" + std::string(kFast));
  EXPECT_EQ(cli("run --config asw.cfg --out asw.json"), 3);
  auto r = load("asw.json");
  EXPECT_EQ(r["convention_label"], "convention: paper-as-written — chain not expected to hold");
}

TEST(Cli, StandaloneEntropyAndAtlas) {
  write("ent.cfg", "model = product_flow\n[entropy]\nn_max = 4\ngrid = 256\n");
  EXPECT_EQ(cli("entropy --config ent.cfg --out ent.json"), 0);
  auto e = load("ent.json");
  EXPECT_EQ(e["entropy"]["slopes"][0]["slope"].get<double>(), 0.0);
  EXPECT_TRUE(fs::exists(path("ent.entropy.csv")));
  EXPECT_EQ(cli("entropy --config ent.cfg --out entj.json --seed 7"), 0);
  write("atl.cfg", "[atlas]\nsamples = 500\n");
  EXPECT_EQ(cli("atlas --config atl.cfg --out atl.json"), 0);
  EXPECT_FALSE(load("atl.json")["atlas"]["flagged"].get<bool>());
  write("atlbad.cfg", "[atlas]\nsamples = 500\nblend_end = 0.9\n");
  EXPECT_EQ(cli("atlas --config atlbad.cfg --out atlbad.json"), 3);
  EXPECT_TRUE(load("atlbad.json")["atlas"]["flagged"].get<bool>());
}
