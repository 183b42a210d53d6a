#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "kac/commands.hpp"

using namespace kac;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("kac_cmd_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

const char* kSim = R"({
  "mixture": {"dimension": 1, "betas": [0, 1], "laws": [null, {"kind": "kac_toy"}]},
  "sim": {"N": 12, "t_end": 0.5, "replicas": 40, "sample_times": [0, 0.5]},
  "observables": [{"id": "pair, tanh", "kind": "tanh", "s": 2}],
  "seed": 5
})";

struct Run {
  int code;
  std::string out, err;
};

Run go(const std::string& cmd, const fs::path& cfg, const fs::path& out_dir, std::vector<std::string> sets = {}) {
  CommandOptions opt;
  opt.output_dir = out_dir.string();
  opt.workers = 1;
  std::ostringstream log, err;
  const int code = dispatch(cmd, cfg.string(), sets, opt, log, err);
  return {code, log.str(), err.str()};
}

}  // namespace

TEST(Commands, SimulateIsReproducible) {
  const auto dir = scratch("sim");
  const auto cfg = write_config(dir, kSim);
  ASSERT_EQ(go("simulate", cfg, dir / "a").code, kOk);
  ASSERT_EQ(go("simulate", cfg, dir / "b").code, kOk);
  const auto a = slurp(dir / "a" / "simulate.csv");
  EXPECT_EQ(a, slurp(dir / "b" / "simulate.csv"));
  EXPECT_EQ(slurp(dir / "a" / "replicas.csv"), slurp(dir / "b" / "replicas.csv"));
  EXPECT_EQ(a.substr(0, a.find('\n')), "time,observable,mean,stderr,N,replicas,seed,solver");
  EXPECT_NE(a.find("\"pair, tanh\""), std::string::npos);
  // 2 times x (1 observable + 4 moments) + header
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 11);

  const auto manifest = json::parse(slurp(dir / "a" / "manifest.json"));
  EXPECT_EQ(manifest["status"], "ok");
  EXPECT_EQ(manifest["rows"]["simulate.csv"], 10);
  EXPECT_EQ(manifest["seed"], 5);
  EXPECT_EQ(manifest["config"]["sim"]["N"], 12);

  ASSERT_EQ(go("simulate", cfg, dir / "c", {"seed=6"}).code, kOk);
  EXPECT_NE(a, slurp(dir / "c" / "simulate.csv"));
}

TEST(Commands, ConfigErrorsExitTwo) {
  const auto dir = scratch("err");
  const auto cfg = write_config(dir, kSim);
  auto r = go("simulate", cfg, dir / "o", {"sim.N=1"});
  EXPECT_EQ(r.code, kConfigError);
  EXPECT_NE(r.err.find("N >= M"), std::string::npos);
  EXPECT_EQ(go("hierarchy", cfg, dir / "o", {"hierarchy.epsilon=1.5"}).code, kConfigError);
  EXPECT_EQ(go("simulate", cfg, dir / "o", {"mixture.laws.1.kind=hard_spheres"}).code, kConfigError);
  EXPECT_EQ(go("chaos", cfg, dir / "o", {"chaos={\"s_list\": [1]}"}).code, kConfigError);
  EXPECT_EQ(go("boltzmann", cfg, dir / "o", {"meanfield={\"picard\": {\"L\": 0}}"}).code, kConfigError);
  EXPECT_EQ(go("boltzmann", cfg, dir / "o").code, kConfigError);  // no meanfield section
  EXPECT_EQ(go("simulate", dir / "missing.json", dir / "o").code, kConfigError);
  EXPECT_EQ(go("teleport", cfg, dir / "o").code, kConfigError);
}

TEST(Commands, HierarchyTables) {
  const auto dir = scratch("hier");
  const auto cfg = write_config(dir, R"({
    "mixture": {"dimension": 1, "betas": [0.5, 0.5], "laws": [{"kind": "symmetric", "order": 1}, {"kind": "kac_toy"}]},
    "hierarchy": {"epsilon": 0.0, "N_sweep": [4, 1000], "s_sweep": [1, 2], "k_sweep": [0, 1]}
  })");
  ASSERT_EQ(go("hierarchy", cfg, dir).code, kOk);
  EXPECT_EQ(slurp(dir / "constants.csv"), "k,R_k,rho_k,C_k\n0,2,1,0.5\n1,2,2,0\n");
  const auto coeff = slurp(dir / "coefficients.csv");
  EXPECT_NE(coeff.find("4,2,1,0.66666666666666663,"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "remainder.csv"));  // epsilon = 0
  EXPECT_TRUE(fs::exists(dir / "remainder_factor.csv"));
  ASSERT_EQ(go("hierarchy", cfg, dir / "eps", {"hierarchy.epsilon=0.5"}).code, kOk);
  EXPECT_TRUE(fs::exists(dir / "eps" / "remainder.csv"));
}

TEST(Commands, BoltzmannAtTimeZero) {
  const auto dir = scratch("boltz");
  const auto cfg = write_config(dir, R"({
    "mixture": {"dimension": 1, "betas": [0, 1], "laws": [null, {"kind": "kac_toy"}]},
    "meanfield": {"n": 500, "t_end": 0, "replicas": 3, "picard": {"n_v": 65}}
  })");
  ASSERT_EQ(go("boltzmann", cfg, dir).code, kOk);
  const auto body = slurp(dir / "boltzmann.csv");
  EXPECT_NE(body.find("0,mass,"), std::string::npos);
  EXPECT_NE(body.find(",0,65,1,0,picard"), std::string::npos);
  EXPECT_NE(body.find(",meanfield"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "picard_density.csv"));
}

TEST(Commands, BoltzmannPicardFailureExitsOne) {
  const auto dir = scratch("boltzfail");
  const auto cfg = write_config(dir, R"({
    "mixture": {"dimension": 1, "betas": [0, 1], "laws": [null, {"kind": "kac_toy"}]},
    "initial": {"kind": "uniform", "a": 1.0},
    "meanfield": {"n": 100, "t_end": 0.05, "replicas": 2,
                  "picard": {"L": 1.05, "n_v": 33, "n_theta": 8, "n_t": 2, "n_iter": 2}}
  })");
  // The grid barely covers the support; rotated mass leaves [-L, L].
  const auto r = go("boltzmann", cfg, dir);
  EXPECT_EQ(r.code, kThresholdFailure);
  EXPECT_EQ(json::parse(slurp(dir / "manifest.json"))["status"], "numerical_failure");
}

TEST(Commands, ChaosSummaryRoundTrips) {
  const auto dir = scratch("chaos");
  const auto cfg = write_config(dir, R"({
    "mixture": {"dimension": 1, "betas": [0, 1], "laws": [null, {"kind": "kac_toy"}]},
    "initial": {"kind": "two_point"},
    "chaos": {"N_grid": [8, 16], "s_list": [1], "t_list": [0], "target_stderr": 0.02,
              "pilot_replicas": 16, "mf_replicas": 3, "pass_threshold": 0.0}
  })");
  ASSERT_EQ(go("chaos", cfg, dir).code, kOk);
  const auto s = json::parse(slurp(dir / "chaos_summary.json"));
  EXPECT_EQ(s["rows"], 4);
  EXPECT_EQ(s["pass_threshold"], 0.0);
  EXPECT_TRUE(s["worst_row"].is_object());
  EXPECT_EQ(s["slope_fits"].size(), 2u);
  const auto csv = slurp(dir / "chaos.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "N,s,t,observable,kac_mean,kac_stderr,mf_mean,mf_stderr,abs_delta,pass_3sigma,replicas");
}

TEST(Commands, LawsCheck) {
  const auto dir = scratch("laws");
  const auto cfg = write_config(dir, R"({
    "laws_check": {"samples": 20000, "laws": [{"kind": "kac_toy"}, {"kind": "symmetric", "order": 2, "dimension": 2}]}
  })");
  const auto r = go("laws-check", cfg, dir);
  EXPECT_EQ(r.code, kOk) << r.out;
  const auto body = slurp(dir / "laws_check.csv");
  EXPECT_EQ(std::count(body.begin(), body.end(), '\n'), 1 + 2 * 3);
  EXPECT_NE(body.find(",involution,"), std::string::npos);
}
