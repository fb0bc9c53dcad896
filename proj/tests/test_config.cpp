#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "transonic/config.hpp"

using namespace transonic;

TEST(Config, ParsesKeysCommentsAndAuto) {
  const RunConfig rc = parse_config_string(
      "# header\n"
      "gas.gamma = 1.0\n"
      "gas.b0=3   # trailing\n"
      "\n"
      "flow.u_minus = 2.5\n"
      "flow.c1 = auto\n"
      "grid.n_xi = 17\n"
      "grid.n_eta = 9\n"
      "front.shape = cosine\n"
      "front.pin = false\n"
      "solver.fb_tol = 1e-9\n"
      "long.lengths = 4, 8\n"
      "expect = nosolution\n"
      "seed = 42\n");
  EXPECT_EQ(rc.gamma, 1.0);
  EXPECT_EQ(rc.b0, 3.0);
  EXPECT_EQ(rc.base.u_minus, 2.5);
  EXPECT_FALSE(rc.base.exit_speed.has_value());
  EXPECT_EQ(rc.base.n_xi, 17);
  EXPECT_EQ(rc.base.n_eta, 9);
  EXPECT_EQ(rc.base.shape, FrontShape::Cosine);
  EXPECT_FALSE(rc.base.front.pin);
  EXPECT_EQ(rc.base.front.fb_tol, 1e-9);
  EXPECT_EQ(rc.long_lengths, (std::vector<double>{4.0, 8.0}));
  EXPECT_EQ(rc.expect, Expectation::NoSolution);
  EXPECT_EQ(rc.seed, 42u);
  EXPECT_TRUE(rc.experiment().gas.isothermal());
}

TEST(Config, AutoExitSpeedResolvesToShockState) {
  const RunConfig rc = parse_config_string("flow.c1 = auto\n");
  const auto cfg = rc.experiment();
  EXPECT_EQ(cfg.resolved_exit_speed(), solve_normal_shock(2.0, cfg.gas).u_plus);
}

TEST(Config, RejectsBadInput) {
  for (const char* text : {"bogus = 1\n", "gas.gamma = abc\n", "gas.gamma = inf\n",
                           "grid.n_xi = 3.5\n", "no equals sign\n", " = 4\n", "front.pin = maybe\n",
                           "expect = sometimes\n", "seed = -1\n", "flow.c1 = 0.5x\n"}) {
    try {
      parse_config_string(text);
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::ConfigParse) << text;
    }
  }
}

TEST(Config, EchoRoundTrips) {
  RunConfig rc = parse_config_string("gas.gamma = 1.4\nflow.c1 = 0.51\nfront.t0 = 0.1\nseed = 9\n");
  RunConfig back;
  for (const auto& [k, v] : config_entries(rc)) apply_setting(back, k, v);
  EXPECT_EQ(config_entries(back), config_entries(rc));
  EXPECT_EQ(*back.base.exit_speed, 0.51);
  EXPECT_EQ(back.base.t0, 0.1);
}

TEST(Config, OverridesIncludingSummaryFile) {
  RunConfig rc;
  apply_override(rc, "grid.n_xi=21");
  EXPECT_EQ(rc.base.n_xi, 21);
  EXPECT_THROW(apply_override(rc, "grid.n_xi"), Error);

  const auto path = std::filesystem::temp_directory_path() / "transonic_summary_test.json";
  {
    std::ofstream out(path);
    out << R"({"verdict": "NoSolution", "config": {"flow.c1": "0.5", "grid.n_eta": "17"}})";
  }
  apply_override(rc, "@" + path.string());
  EXPECT_EQ(*rc.base.exit_speed, 0.5);
  EXPECT_EQ(rc.base.n_eta, 17);
  {
    std::ofstream out(path);
    out << R"({"verdict": "Converged"})";
  }
  EXPECT_THROW(apply_override(rc, "@" + path.string()), Error);
  std::filesystem::remove(path);
  EXPECT_THROW(apply_override(rc, "@/nonexistent/summary.json"), Error);
}

TEST(Config, ExpectationMatching) {
  RunConfig rc;
  EXPECT_TRUE(rc.accepts(Verdict::MaxIter));
  rc.expect = Expectation::Converged;
  EXPECT_TRUE(rc.accepts(Verdict::Converged));
  EXPECT_FALSE(rc.accepts(Verdict::NoSolution));
  rc.expect = Expectation::NoSolution;
  EXPECT_FALSE(rc.accepts(Verdict::MaxIter));
}
