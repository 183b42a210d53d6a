#include <gtest/gtest.h>

#include <string>

#include "kac/config.hpp"
#include "kac/csv.hpp"

using namespace kac;

namespace {

const char* kBase = R"({
  "mixture": {"dimension": 1, "betas": [0, 0.5, 0.5],
              "laws": [null, {"kind": "kac_toy"}, {"kind": "symmetric", "order": 3}]},
  "sim": {"N": 10, "t_end": 1.0, "replicas": 4},
  "observables": [{"id": "t", "kind": "tanh", "a": 2.0, "s": 2}],
  "seed": 42
})";

int error_line(const std::string& text, const std::vector<std::string>& overrides = {}) {
  try {
    parse_config(text, overrides);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

std::string error_where(const std::string& text, const std::vector<std::string>& overrides = {}) {
  try {
    parse_config(text, overrides);
  } catch (const ConfigError& e) {
    return e.where();
  }
  return "<none>";
}

}  // namespace

TEST(Config, ParsesBase) {
  const auto c = parse_config(kBase);
  ASSERT_TRUE(c.has_mixture);
  EXPECT_EQ(c.mixture.max_order(), 3);
  EXPECT_EQ(c.mixture.laws[0].kind, LawKind::Identity);
  EXPECT_EQ(c.mixture.laws[2].kind, LawKind::SymmetricK);
  EXPECT_EQ(c.sim.N, 10u);
  EXPECT_EQ(c.seed, 42u);
  ASSERT_EQ(c.observables.size(), 1u);
  EXPECT_EQ(c.observables[0].order(), 2u);
  EXPECT_EQ(c.observables[0].factors[0].a, 2.0);
  EXPECT_EQ(c.initial.kind, InitialLaw::Kind::Gaussian);
}

TEST(Config, EmptyDocumentIsDefaults) {
  const auto c = parse_config("");
  EXPECT_FALSE(c.has_mixture);
  EXPECT_EQ(c.output_dir, "out");
  EXPECT_EQ(c.hierarchy.epsilon, 0.5);
}

TEST(Config, TooFewParticlesPointsAtN) {
  std::string text = kBase;
  text.replace(text.find("\"N\": 10"), 7, "\"N\": 2");
  EXPECT_EQ(error_line(text), 4);
  EXPECT_EQ(error_where(text), "/sim/N");
}

TEST(Config, UnknownKey) {
  std::string text = kBase;
  text.replace(text.find("\"seed\""), 6, "\"sede\"");
  EXPECT_EQ(error_line(text), 6);
  EXPECT_EQ(error_where(text), "/sede");
}

TEST(Config, InvalidJsonReportsLine) {
  EXPECT_EQ(error_line("{\n  \"seed\": 1,\n  oops\n}"), 3);
}

TEST(Config, BadLawKind) {
  std::string text = kBase;
  text.replace(text.find("kac_toy"), 7, "kac_tyo");
  EXPECT_EQ(error_line(text), 3);
}

TEST(Config, WeightsMustSumToOne) {
  EXPECT_NE(error_line(kBase, {"mixture.betas=[0, 0.5, 0.6]"}), -1);
}

TEST(Config, EpsilonRange) {
  EXPECT_EQ(error_where(kBase, {"hierarchy.epsilon=1.5"}), "/hierarchy/epsilon");
  EXPECT_EQ(error_where(kBase, {"hierarchy.epsilon=-0.1"}), "/hierarchy/epsilon");
  EXPECT_EQ(parse_config(kBase, {"hierarchy.epsilon=0"}).hierarchy.epsilon, 0.0);
}

TEST(Config, Overrides) {
  const auto c = parse_config(kBase, {"sim.N=50", "seed=7", "output_dir=elsewhere", "mixture.laws.1.kernel=raised_cosine"});
  EXPECT_EQ(c.sim.N, 50u);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.output_dir, "elsewhere");
  EXPECT_EQ(c.mixture.laws[1].kernel, AngleKernel::RaisedCosine);
  EXPECT_EQ(c.resolved["sim"]["N"], 50);
  EXPECT_THROW(parse_config(kBase, {"novalue"}), ConfigError);
  EXPECT_THROW(parse_config(kBase, {"mixture.laws.9.kind=x"}), ConfigError);
}

TEST(Config, ChaosNeedsGrid) {
  EXPECT_EQ(error_where(kBase, {"chaos={\"s_list\": [1]}"}), "/chaos");
  const auto c = parse_config(kBase, {"chaos={\"N_grid\": [10, 20], \"target_stderr\": 0.01}"});
  EXPECT_EQ(c.chaos.N_grid.size(), 2u);
  EXPECT_EQ(c.chaos.budget.target_stderr, 0.01);
}

TEST(Config, PicardGrid) {
  EXPECT_EQ(error_where(kBase, {"meanfield={\"picard\": {\"L\": -1}}"}), "/meanfield/picard/L");
  EXPECT_EQ(error_where(kBase, {"meanfield={\"picard\": {\"n_v\": 2}}"}), "/meanfield/picard/n_v");
}

TEST(Config, ObservableForms) {
  const auto c = parse_config(R"({"observables": [
    {"id": "a", "kind": "cosine", "xi": 1.5},
    {"id": "b", "factors": [{"kind": "box", "lower": -1, "upper": 2}, {"kind": "tanh"}]}
  ]})");
  EXPECT_EQ(c.observables[0].order(), 1u);
  EXPECT_EQ(c.observables[1].order(), 2u);
  EXPECT_EQ(c.observables[1].factors[0].kind, Primitive::Kind::Box);
  EXPECT_NE(error_line(R"({"observables": [{"id": "a", "kind": "cosine"}, {"id": "a", "kind": "tanh"}]})"), -1);
}

TEST(Config, InitialLaws) {
  auto c = parse_config(R"({"initial": {"kind": "uniform", "a": 2}})");
  EXPECT_EQ(c.initial.kind, InitialLaw::Kind::Uniform);
  EXPECT_EQ(c.initial.a, 2.0);
  c = parse_config(R"({"initial": {"kind": "two_point"}})");
  EXPECT_EQ(c.initial.kind, InitialLaw::Kind::TwoPoint);
  EXPECT_THROW(parse_config(R"({"initial": {"kind": "cauchy"}})"), ConfigError);
}

TEST(Csv, Quoting) {
  EXPECT_EQ(csv::quote("plain"), "plain");
  EXPECT_EQ(csv::quote("a,b"), "\"a,b\"");
  EXPECT_EQ(csv::quote("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv::quote("two\nlines"), "\"two\nlines\"");
}

TEST(Csv, TableRoundTrip) {
  csv::Table t({"x", "name", "n", "ok"});
  t.add(0.1, std::string("a,b"), std::size_t{3}, true);
  t.add(std::string(""), std::string("q"), 1, false);
  EXPECT_EQ(t.str(), "x,name,n,ok\n0.10000000000000001,\"a,b\",3,true\n,q,1,false\n");
  EXPECT_THROW(t.add(1.0), ContractViolation);
}
