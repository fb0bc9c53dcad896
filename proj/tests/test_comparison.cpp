#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "transonic/comparison.hpp"

using namespace transonic;

namespace {

const GasModel kAir{1.4, 2.0};

ExperimentConfig coarse() {
  ExperimentConfig c;
  c.n_xi = c.n_eta = 33;
  return c;
}

MappedGrid flat_grid(double t, int n = 17) { return MappedGrid(ShockFront::flat(n, t, 1.0), n); }

}  // namespace

TEST(Psi, VanishesAgainstItself) {
  const MappedGrid g = flat_grid(0.2);
  const auto flat = flat_solution(0.2, 2.0, kAir);
  const auto field = sample_flat_field(g, kAir, flat);
  const auto psi = psi_field(field, g.front(), 2.0, kAir);
  EXPECT_DOUBLE_EQ(psi.tau, 0.2);
  for (double v : psi.psi) EXPECT_EQ(v, 0.0);
  const auto rep = extrema_report(psi);
  EXPECT_TRUE(rep.constant);
}

TEST(Psi, TwoFlatSolutionsDifferByConstant) {
  const double t = 0.3, tau = -0.2;
  const MappedGrid g = flat_grid(t);
  const auto ft = flat_solution(t, 2.0, kAir), ftau = flat_solution(tau, 2.0, kAir);
  const double expected = (ft.u_plus - 2.0) * (t - tau);
  EXPECT_LT(expected, 0.0);
  const auto field_t = sample_flat_field(g, kAir, ft);
  const auto field_tau = sample_flat_field(g, kAir, ftau);
  for (int i = 0; i < g.n_xi(); ++i)
    for (int j = 0; j < g.n_eta(); ++j)
      EXPECT_NEAR(field_tau.value(i, j) - field_t.value(i, j), expected, 1e-14);
  const auto lin = assemble_linearized(field_tau, field_t);
  EXPECT_LT(lin.max_abs_l_psi, 1e-13);
  for (const auto& a : lin.a) EXPECT_NEAR((a - lin.a.front()).norm(), 0.0, 1e-14);
  EXPECT_GT(lin.min_eigenvalue, 0.0);
}

TEST(Linearized, IdenticalFieldsGiveZeroAndFiniteB) {
  auto cfg = coarse();
  const auto front = ShockFront::from_function(
      33, [](double e) { return 0.05 * std::cos(std::numbers::pi * e); }, 1.0);
  const auto sol = FixedFrontSolver(kAir, 2.0, cfg.u_plus()).solve(front, 33);
  const auto lin = assemble_linearized(sol.field, sol.field);
  EXPECT_EQ(lin.max_abs_l_psi, 0.0);
  for (const auto& b : lin.b) EXPECT_TRUE(b.allFinite());
  EXPECT_GE(lin.min_eigenvalue, lin.ellipticity_bound);
}

TEST(Linearized, RejectsMismatchedGrids) {
  const auto a = sample_flat_field(flat_grid(0.1), kAir, flat_solution(0.1, 2.0, kAir));
  const auto b = sample_flat_field(flat_grid(0.2), kAir, flat_solution(0.2, 2.0, kAir));
  EXPECT_THROW(assemble_linearized(a, b), Error);
}

TEST(NodeTags, Precedence) {
  const MappedGrid g = flat_grid(0.0, 5);
  EXPECT_EQ(node_tag(g, 0, 0), NodeTag::Corner);
  EXPECT_EQ(node_tag(g, 4, 4), NodeTag::Corner);
  EXPECT_EQ(node_tag(g, 0, 2), NodeTag::Front);
  EXPECT_EQ(node_tag(g, 4, 2), NodeTag::Exit);
  EXPECT_EQ(node_tag(g, 2, 0), NodeTag::Wall);
  EXPECT_EQ(node_tag(g, 2, 2), NodeTag::Interior);
}

class RandomFronts : public ::testing::TestWithParam<double> {};

TEST_P(RandomFronts, RequiredExtremumOnFront) {
  auto cfg = coarse();
  const double up = cfg.u_plus();
  cfg.exit_speed = up + GetParam();
  const double h = 1.0 / 32.0;
  std::mt19937_64 rng(2024);
  for (int s = 0; s < 5; ++s) {
    const ShockFront front = random_cosine_front(33, 0.0, 1.0, rng);
    const auto c = compare_fixed_front(cfg, front);
    const auto& rep = c.extrema;
    ASSERT_FALSE(rep.constant);
    EXPECT_EQ(rep.requires_min, GetParam() <= 0.0);
    EXPECT_TRUE(rep.required_on_front) << "seed draw " << s;
    EXPECT_LT(rep.interior_excess, 1e-10);
    EXPECT_LT(std::abs(c.anchor_psi), 1e-10);
    EXPECT_LE(c.max_front_psi, 10 * h * h);
    for (int j = 0; j < 33; ++j) EXPECT_NEAR(c.psi.value(0, j), c.psi.g[j], 1e-12);
    EXPECT_LT(c.linearized.max_abs_l_psi, 10 * cfg.solver.newton_tol);
    EXPECT_GT(c.linearized.min_eigenvalue, 0.0);
    EXPECT_GT(c.linearized.min_face_eigenvalue, 0.0);
    EXPECT_GE(c.linearized.min_eigenvalue, c.linearized.ellipticity_bound);
    EXPECT_GT(c.linearized.ellipticity_bound, 0.0);
  }
}

INSTANTIATE_TEST_SUITE_P(ExitSpeeds, RandomFronts, ::testing::Values(0.0, -0.05, 0.05));

TEST(Orthogonality, FlatRunHasZeroSlopes) {
  const auto r = solve_transonic(coarse());
  const auto rec = check_orthogonality(r);
  EXPECT_EQ(rec.slope_wall0, 0.0);
  EXPECT_EQ(rec.slope_wall1, 0.0);
  EXPECT_TRUE(rec.below_upstream());
  EXPECT_NEAR(rec.axial_speed_wall0, r.u_plus, 1e-10);
}

TEST(Orthogonality, PerturbedRunMeetsWallsSquarely) {
  auto cfg = coarse();
  cfg.perturb_amp = 0.1;
  const auto r = solve_transonic(cfg);
  const auto rec = check_orthogonality(r);
  EXPECT_LT(rec.max_slope(), 1e-6);
  EXPECT_TRUE(rec.below_upstream());
  EXPECT_NEAR(rec.axial_speed_wall1, r.u_plus, 1e-6);
}

TEST(Orthogonality, RequiresConvergedRun) {
  auto cfg = coarse();
  cfg.exit_speed = cfg.u_plus() + 0.02;
  const auto r = solve_transonic(cfg);
  ASSERT_EQ(r.verdict, Verdict::NoSolution);
  EXPECT_THROW(check_orthogonality(r), Error);
}

TEST(Oscillation, FlatIsZeroAndStationsChecked) {
  const MappedGrid g = flat_grid(0.0);
  const auto field = sample_flat_field(g, kAir, flat_solution(0.0, 2.0, kAir));
  for (double v : cross_section_oscillation(field, {0.25, 0.5, 1.0})) EXPECT_EQ(v, 0.0);
  try {
    cross_section_oscillation(field, {1.5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::StationOutsideRegion);
  }
}

TEST(Oscillation, DecaysDownstreamOfCosineFront) {
  auto cfg = coarse();
  const auto front = ShockFront::from_function(
      33, [](double e) { return 0.1 * std::cos(std::numbers::pi * e); }, 1.0);
  const auto sol = FixedFrontSolver(kAir, 2.0, cfg.u_plus()).solve(front, 33);
  const auto osc = cross_section_oscillation(sol.field, {0.2, 0.4, 0.6, 0.8, 1.0});
  for (std::size_t k = 1; k < osc.size(); ++k) EXPECT_LT(osc[k], osc[k - 1]);
}

TEST(ExtremaCsv, Rows) {
  ExtremaReport r;
  r.min = Extremum{-0.5, 0, 3, NodeTag::Front};
  r.max = Extremum{0.0, 2, 0, NodeTag::Wall};
  std::ostringstream os;
  io::CsvWriter csv(os, {"run_id", "kind", "tag", "i", "j", "value"});
  write_extrema_rows(csv, "r1", r);
  EXPECT_EQ(os.str(), "run_id,kind,tag,i,j,value\nr1,min,front,0,3,-0.5\nr1,max,wall,2,0,0\n");
}
