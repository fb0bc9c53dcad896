#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "transonic/free_boundary.hpp"

using namespace transonic;

namespace {

const GasModel kAir{1.4, 2.0};

ExperimentConfig coarse(double amp = 0.0, int modes = 1) {
  ExperimentConfig c;
  c.n_xi = c.n_eta = 33;
  c.perturb_amp = amp;
  c.perturb_modes = modes;
  return c;
}

}  // namespace

TEST(SupersonicState, UniformAndChecked) {
  const auto s = supersonic_solution(2.0, kAir);
  EXPECT_DOUBLE_EQ(s.value(0.3), 0.6);
  EXPECT_DOUBLE_EQ(s.gradient()[0], 2.0);
  EXPECT_DOUBLE_EQ(s.gradient()[1], 0.0);
  try {
    supersonic_solution(1.0, kAir);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotSupersonic);
  }
  try {
    supersonic_solution(3.5, kAir);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SpeedExceedsLimit);
  }
}

TEST(FlatFamily, ClosedForm) {
  const double up = oracle::u_plus_gamma14();
  const auto f = flat_solution(0.25, 2.0, kAir);
  EXPECT_NEAR(f.u_plus, up, 1e-12);
  EXPECT_NEAR(f.value(0.25), 0.5, 1e-15);  // continuous across the front
  EXPECT_NEAR(f.value(1.0), up * 0.75 + 0.5, 1e-14);
  EXPECT_NEAR(f.gradient(0.9)[0], up, 1e-12);
  EXPECT_DOUBLE_EQ(f.gradient(0.0)[0], 2.0);
  EXPECT_THROW(flat_solution(1.2, 2.0, kAir, 1.0), Error);
  EXPECT_THROW(flat_solution(-1.0, 2.0, kAir), Error);
}

TEST(FlatFamily, TranslationShiftsByConstant) {
  const auto a = flat_solution(-0.3, 2.0, kAir), b = flat_solution(0.4, 2.0, kAir);
  const double expected = (2.0 - a.u_plus) * 0.7;
  for (double x : {0.45, 0.6, 0.8, 1.0}) EXPECT_NEAR(b.value(x) - a.value(x), expected, 1e-14);
}

TEST(FreeBoundary, FlatFrontIsFixedPoint) {
  for (double t : {-0.5, 0.0, 0.5}) {
    auto cfg = coarse();
    cfg.t0 = t;
    FreeBoundarySolver solver(cfg);
    const auto sol = solver.solve_front(ShockFront::flat(cfg.n_eta, t, cfg.x_exit));
    EXPECT_LT(solver.residual(sol).max_abs, 1e-10);
    const auto r = solve_transonic(cfg);
    EXPECT_EQ(r.verdict, Verdict::Converged);
    EXPECT_EQ(r.iterations, 0);
    EXPECT_EQ(r.front.flatness(), 0.0);
  }
}

TEST(FreeBoundary, PerturbedFrontFlattensAtPinnedMean) {
  auto cfg = coarse(0.1);
  cfg.t0 = 0.1;
  const auto r = solve_transonic(cfg);
  ASSERT_EQ(r.verdict, Verdict::Converged) << r.evidence.stop_reason;
  EXPECT_TRUE(r.evidence.pinned);
  EXPECT_LT(r.front.flatness(), 1e-6);
  EXPECT_NEAR(r.front.mean(), 0.1, 1e-12);
  EXPECT_LE(r.iterations, 200);
  const FlatSolution flat = flat_solution(0.1, cfg.u_minus, cfg.gas);
  double err = 0.0;
  const auto& g = r.field.grid();
  for (int i = 0; i < g.n_xi(); ++i)
    for (int j = 0; j < g.n_eta(); ++j)
      err = std::max(err, std::abs(r.field.value(i, j) - flat.value(g.x1(i, j))));
  EXPECT_LT(err, 1e-6);
  for (std::size_t k = 1; k < r.evidence.osc_residual.size(); ++k)
    EXPECT_LT(r.evidence.osc_residual[k], r.evidence.osc_residual[k - 1]);
}

TEST(FreeBoundary, EntropyHoldsAlongIterations) {
  const auto r = solve_transonic(coarse(0.1, 2));
  ASSERT_EQ(r.verdict, Verdict::Converged);
  EXPECT_GT(r.evidence.max_normal_mach, 0.0);
  EXPECT_LT(r.evidence.max_normal_mach, 1.0);
  EXPECT_GT(r.evidence.min_ellipticity_margin, 0.0);
  for (double m : downstream_normal_mach(r.field)) EXPECT_LT(m, 1.0);
}

TEST(FreeBoundary, MismatchedExitSpeedStallsWithIrreducibleMean) {
  auto cfg = coarse(0.05);
  const double up = cfg.u_plus();
  for (double off : {0.02, -0.02}) {
    cfg.exit_speed = up + off;
    const auto r = solve_transonic(cfg);
    ASSERT_EQ(r.verdict, Verdict::NoSolution) << off;
    EXPECT_FALSE(r.evidence.pinned);
    const auto& ev = r.evidence;
    const int w = cfg.front.stall_window;
    ASSERT_GE(static_cast<int>(ev.mean_residual.size()), w);
    for (std::size_t k = ev.mean_residual.size() - w; k < ev.mean_residual.size(); ++k) {
      EXPECT_GT(std::abs(ev.mean_residual[k]), 0.5 * std::abs(ev.initial_mean_residual));
      EXPECT_LT(ev.osc_residual[k], cfg.front.fb_tol);
    }
    const double m_gap = mass_flux(up + off, cfg.gas) - mass_flux(cfg.u_minus, cfg.gas);
    EXPECT_NEAR(r.residual.mean, m_gap, 1e-6 * std::abs(m_gap));
  }
}

TEST(FreeBoundary, DriftDirectionFollowsExitSpeed) {
  auto cfg = coarse();
  const double up = cfg.u_plus();
  cfg.exit_speed = up + 0.05;
  const double fast = solve_transonic(cfg).front.mean();
  cfg.exit_speed = up - 0.05;
  const double slow = solve_transonic(cfg).front.mean();
  // Only a record of the update law; the steady problem has no solution either way.
  EXPECT_LT(fast, 0.0);
  EXPECT_GT(slow, 0.0);
}

TEST(FreeBoundary, VerdictDependsOnlyOnExitSpeed) {
  const auto rows = verify_finite_duct(coarse(), default_sweep());
  ASSERT_EQ(rows.size(), 15u);
  for (const auto& r : rows) {
    EXPECT_TRUE(r.error.empty()) << r.error;
    EXPECT_EQ(r.verdict, r.cell.c1_auto ? Verdict::Converged : Verdict::NoSolution)
        << "offset " << r.cell.c1_offset << " amp " << r.cell.perturb_amp;
  }
}

TEST(FreeBoundary, UnpinnedRunsAreTranslates) {
  // Equal x1 spacing in both ducts: 6/96 = 5.75/92.
  ExperimentConfig a;
  a.x_exit = 6.0;
  a.n_eta = 33;
  a.n_xi = 97;
  a.perturb_amp = 0.05;
  a.shape = FrontShape::Cosine;
  a.front.pin = false;
  ExperimentConfig b = a;
  b.t0 = 0.25;
  b.n_xi = 93;
  const auto ra = solve_transonic(a), rb = solve_transonic(b);
  ASSERT_EQ(ra.verdict, Verdict::Converged);
  ASSERT_EQ(rb.verdict, Verdict::Converged);
  EXPECT_FALSE(ra.evidence.pinned);
  for (int j = 0; j < a.n_eta; ++j) EXPECT_NEAR(rb.front[j] - ra.front[j], 0.25, 1e-6);
}

TEST(FreeBoundary, InfeasibleInitialFrontIsContracted) {
  auto cfg = coarse(0.2);
  const auto r = solve_transonic(cfg);
  EXPECT_GT(r.evidence.contractions, 0);
  EXPECT_EQ(r.verdict, Verdict::Converged);
}

TEST(FreeBoundary, ConfigValidation) {
  auto cfg = coarse();
  cfg.perturb_amp = 0.6;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = coarse();
  cfg.t0 = 1.5;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = coarse();
  cfg.exit_speed = 1.3;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(OneDimensional, MeanResidualIsFluxGap) {
  const double up = oracle::u_plus_gamma14();
  for (double c1 : {up + 0.02, up - 0.02, up + 0.05, up - 0.05, up}) {
    const auto r = solve_one_dimensional(kAir, 2.0, c1, 0.0, 1.0, 65);
    // Independent flux evaluation from the closed-form density.
    const double gap = oracle::rho_gamma14(c1) * c1 - 2.0;
    EXPECT_NEAR(r.mean_residual, gap, 1e-10) << c1;
    EXPECT_NEAR(r.front_speed, c1, 1e-10);
  }
}

TEST(OneDimensional, IsothermalGap) {
  const GasModel iso{1.0, 2.0};
  const double c1 = 0.3;
  const auto r = solve_one_dimensional(iso, 2.0, c1, 0.2, 1.0, 33);
  const double gap = std::exp(2.0 - 0.5 * c1 * c1) * c1 - 2.0;
  EXPECT_NEAR(r.mean_residual, gap, 1e-10);
}
