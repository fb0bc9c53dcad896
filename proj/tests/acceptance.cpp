// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only if all pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "transonic/transonic.hpp"

using namespace transonic;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;
std::string lines[11];  // printed in criterion order once all have run

void report(int id, bool ok, const std::string& what, const std::string& detail) {
  lines[id] = std::string(ok ? "[PASS]" : "[FAIL]") + " criterion " + std::to_string(id) + ": " + what +
              " -- " + detail;
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

// Fields collected for the conservation and ellipticity sweeps.
struct Collected {
  std::string label;
  PotentialField field;
  double margin;
};
std::vector<Collected> converged_fields;
std::vector<std::pair<std::string, LinearizedCoefficients>> assemblies;

void collect(const std::string& label, const PotentialField& f, double margin) {
  converged_fields.push_back({label, f, margin});
}

double max_flat_error(const PotentialField& field, const FlatSolution& flat) {
  const auto& g = field.grid();
  double err = 0.0;
  for (int i = 0; i < g.n_xi(); ++i)
    for (int j = 0; j < g.n_eta(); ++j)
      err = std::max(err, std::abs(field.value(i, j) - flat.value(g.x1(i, j))));
  return err;
}

void guarded(int id, const std::string& what, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, false, what, std::string("exception: ") + e.what());
  }
}

void criterion1() {
  const GasModel air{1.4, 2.0}, iso{1.0, 2.0};
  const double o14 = oracle::u_plus_gamma14(), o1 = oracle::u_plus_isothermal();
  auto timed = [](const GasModel& g) {
    double best = 1e9, u = 0.0;
    for (int k = 0; k < 5; ++k) {
      const auto t0 = Clock::now();
      u = solve_normal_shock(2.0, g).u_plus;
      best = std::min(best, seconds_since(t0));
    }
    return std::pair{u, best};
  };
  const auto [u14, t14] = timed(air);
  const auto [u1, t1] = timed(iso);
  const double d14 = std::abs(u14 - o14), d1 = std::abs(u1 - o1);
  report(1, d14 < 1e-10 && d1 < 1e-10 && t14 < 1e-3 && t1 < 1e-3, "normal shock vs bisection oracle",
         fmt("u+(1.4) = %.15f (|d| = %.2e, %.1f us), u+(1) = %.15f (|d| = %.2e, %.1f us)", u14, d14,
             t14 * 1e6, u1, d1, t1 * 1e6));
}

void criterion2() {
  const auto t0 = Clock::now();
  const GasModel air{1.4, 2.0};
  const double up = solve_normal_shock(2.0, air).u_plus;
  double worst_err = 0.0, worst_res = 0.0;
  for (double t : {-0.5, 0.0, 0.5}) {
    const ShockFront front = ShockFront::flat(33, t, 1.0);
    const auto sol = FixedFrontSolver(air, 2.0, up).solve(front, 33);
    worst_err = std::max(worst_err, max_flat_error(sol.field, flat_solution(t, 2.0, air)));
    const auto r = rh_residual_on_front(sol.field, front, 2.0);
    for (double v : r) worst_res = std::max(worst_res, std::abs(v));
    collect(fmt("flat t=%g", t), sol.field, sol.report.min_ellipticity_margin);
  }
  const double secs = seconds_since(t0);
  report(2, worst_err < 1e-10 && worst_res < 1e-10 && secs < 5.0, "flat family is exact on 33x33",
         fmt("max node error %.2e, max |R| %.2e, %.2f s", worst_err, worst_res, secs));
}

void criterion3() {
  ExperimentConfig cfg;  // 65 x 65, t0 = 0, c1 = u+
  cfg.perturb_amp = 0.1;
  cfg.perturb_modes = 1;
  const auto t0 = Clock::now();
  const auto r = solve_transonic(cfg);
  const double secs = seconds_since(t0);
  const double err = max_flat_error(r.field, flat_solution(cfg.t0, cfg.u_minus, cfg.gas));
  const bool ok = r.verdict == Verdict::Converged && r.front.flatness() < 1e-6 && err < 1e-6 &&
                  r.iterations <= 200 && secs < 60.0;
  if (r.verdict == Verdict::Converged) collect("0.1 sin front", r.field, r.report.min_ellipticity_margin);
  report(3, ok, "perturbed front converges to the flat shock (65x65)",
         fmt("%s in %d updates, flatness %.2e, field error %.2e, %.1f s", to_string(r.verdict),
             r.iterations, r.front.flatness(), err, secs));
}

void criterion4() {
  ExperimentConfig cfg;
  cfg.perturb_amp = 0.05;
  cfg.perturb_modes = 1;
  const double up = cfg.u_plus();
  bool ok = true;
  std::string detail;
  for (double off : {0.02, -0.02, 0.05, -0.05}) {
    cfg.exit_speed = up + off;
    const auto t0 = Clock::now();
    const auto r = solve_transonic(cfg);
    const double secs = seconds_since(t0);
    const auto& ev = r.evidence;
    const int w = cfg.front.stall_window;
    bool window = r.verdict == Verdict::NoSolution && static_cast<int>(ev.mean_residual.size()) >= w;
    for (std::size_t k = window ? ev.mean_residual.size() - w : 0; window && k < ev.mean_residual.size(); ++k)
      window = std::abs(ev.mean_residual[k]) >= 0.5 * std::abs(ev.initial_mean_residual) &&
               ev.osc_residual[k] < 1e-8;
    const auto one = solve_one_dimensional(cfg.gas, cfg.u_minus, up + off, 0.0, 1.0, 65);
    const double gap = oracle::rho_gamma14(up + off) * (up + off) - 2.0;
    const double d1 = std::abs(one.mean_residual - gap);
    const bool cell = window && secs < 60.0 && d1 < 1e-10;
    ok = ok && cell;
    detail += fmt("%s%+.2f: %s (%s, %d updates, %.1f s, 1D |dR| %.1e)", detail.empty() ? "" : "; ", off,
                  to_string(r.verdict), ev.stop_reason.c_str(), r.iterations, secs, d1);
  }
  report(4, ok, "mismatched exit speed has no solution", detail);
}

void criterion5() {
  ExperimentConfig a;
  a.perturb_amp = 0.1;
  a.t0 = -0.3;
  ExperimentConfig b = a;
  b.t0 = 0.4;
  const auto ra = solve_transonic(a), rb = solve_transonic(b);
  const bool conv = ra.verdict == Verdict::Converged && rb.verdict == Verdict::Converged;
  double err = std::numeric_limits<double>::infinity();
  if (conv) {
    collect("pinned t0=-0.3", ra.field, ra.report.min_ellipticity_margin);
    collect("pinned t0=0.4", rb.field, rb.report.min_ellipticity_margin);
    const double expected = (a.u_minus - ra.u_plus) * 0.7;
    err = 0.0;
    const auto& g = rb.field.grid();
    for (int i = 0; i < g.n_xi(); ++i)
      for (int j = 0; j < g.n_eta(); ++j) {
        const double x1 = g.x1(i, j);
        err = std::max(err, std::abs(rb.field.value(i, j) - ra.field.value_at(x1, j) - expected));
      }
  }
  report(5, conv && err < 1e-6, "pinned runs differ by a translation",
         fmt("%s / %s, max |phi_b - phi_a - (u- - u+) 0.7| = %.2e on the common region",
             to_string(ra.verdict), to_string(rb.verdict), err));
}

void criterion6() {
  double worst = 0.0;
  std::string where;
  for (const auto& c : converged_fields) {
    const auto flux = cross_section_mass_flux(c.field);
    const auto [lo, hi] = std::minmax_element(flux.begin(), flux.end());
    double mean = 0.0;
    for (double v : flux) mean += v / flux.size();
    const double rel = (*hi - *lo) / std::abs(mean);
    if (rel >= worst) {
      worst = rel;
      where = c.label;
    }
  }
  report(6, !converged_fields.empty() && worst < 1e-8, "cross-section mass flux is constant",
         fmt("%zu converged fields, worst relative spread %.2e (%s)", converged_fields.size(), worst,
             where.c_str()));
}

void criterion8() {
  ExperimentConfig cfg;
  cfg.n_xi = cfg.n_eta = 65;
  const double up = cfg.u_plus(), h = 1.0 / 64.0;
  std::mt19937_64 rng(20240601);
  int cases = 0, on_front = 0;
  double worst_front = -1e300, worst_anchor = 0.0;
  for (int s = 0; s < 6; ++s) {
    const ShockFront front = random_cosine_front(cfg.n_eta, 0.0, 1.0, rng);
    for (double off : {0.0, 0.05, -0.05}) {
      cfg.exit_speed = up + off;
      const auto c = compare_fixed_front(cfg, front);
      ++cases;
      if (c.extrema.required_on_front) ++on_front;
      worst_front = std::max(worst_front, c.max_front_psi);
      worst_anchor = std::max(worst_anchor, std::abs(c.anchor_psi));
      assemblies.emplace_back(fmt("seed draw %d, c1-u+ = %+.2f", s, off), c.linearized);
      if (off == 0.0) collect(fmt("random front %d", s), c.solution.field, c.solution.report.min_ellipticity_margin);
    }
  }
  report(8, on_front == cases && worst_front <= 10 * h * h && worst_anchor < 1e-10,
         "required psi extremum sits on the front",
         fmt("%d/%d cases on the front, max front psi %.2e (bound %.2e), max |anchor| %.2e", on_front,
             cases, worst_front, 10 * h * h, worst_anchor));
}

void criterion7() {
  double field_margin = std::numeric_limits<double>::infinity();
  double nodal = field_margin, face = field_margin;
  for (const auto& c : converged_fields) field_margin = std::min(field_margin, c.margin);
  for (const auto& [label, lin] : assemblies) {
    nodal = std::min(nodal, lin.min_eigenvalue);
    face = std::min(face, lin.min_face_eigenvalue);
  }
  const bool ok = !converged_fields.empty() && !assemblies.empty() && field_margin > 0.0 &&
                  nodal > 0.0 && face > 0.0;
  report(7, ok, "second-order coefficients are positive definite",
         fmt("min solver margin %.3f over %zu fields; min eigenvalue %.3f (nodal) / %.3f (faces) over "
             "%zu comparison assemblies",
             field_margin, converged_fields.size(), nodal, face, assemblies.size()));
}

void criterion9() {
  ExperimentConfig cfg;
  cfg.perturb_amp = 0.1;
  cfg.perturb_modes = 1;
  const auto st = orthogonality_study(cfg, {16, 32, 64});
  bool ok = st.rows.size() == 3 && st.observed_order.size() == 2;
  for (double p : st.observed_order) ok = ok && p >= 1.5;
  std::string detail;
  for (std::size_t k = 0; k < st.verdicts.size(); ++k)
    detail += fmt("%sh=1/%d %s", k ? ", " : "", 16 << k, to_string(st.verdicts[k]));
  for (const auto& r : st.rows) {
    detail += fmt("; max|slope| %.2e", r.max_slope());
  }
  for (double p : st.observed_order) detail += fmt("; order %.2f", p);
  report(9, ok, "wall slopes decay at order >= 1.5", detail);
}

void criterion10(Clock::time_point suite_start) {
  ExperimentConfig cfg;
  cfg.n_eta = 33;
  cfg.perturb_amp = 0.1;
  cfg.perturb_modes = 1;
  cfg.shape = FrontShape::Cosine;
  const auto runs = long_duct_experiment(cfg, {4.0, 8.0, 16.0}, 16);
  const double cs = critical_speed(cfg.gas);
  bool ok = runs.size() == 3;
  std::string detail;
  const double d2_ref = runs.empty() || runs[0].stations.empty() ? 0.0 : runs[0].stations[0].max_second_diff;
  for (const auto& r : runs) {
    double d2 = 0.0, vmax = 0.0;
    for (const auto& s : r.stations) {
      d2 = std::max(d2, s.max_second_diff);
      vmax = std::max(vmax, s.max_speed);
    }
    // bounded: no station exceeds the nearest-station value of the shortest duct by 50 %
    const bool bounded = std::isfinite(d2) && d2 <= 1.5 * d2_ref;
    const bool dec = r.osc_strictly_decreasing(), sub = r.subsonic(cs);
    ok = ok && dec && sub && bounded;
    std::size_t first_flat = r.stations.size();
    for (std::size_t k = 1; k < r.stations.size(); ++k)
      if (!(r.stations[k].osc < r.stations[k - 1].osc)) {
        first_flat = k;
        break;
      }
    detail += fmt("%sL=%g: %s", detail.empty() ? "" : "; ", r.length,
                  dec ? "decreasing" : fmt("decrease stops at station %zu (osc %.1e -> %.1e)",
                                            first_flat + 1, r.stations[first_flat - 1].osc,
                                            r.stations[first_flat].osc).c_str());
    detail += fmt(", max speed %.4f < c* %.4f, max |D2| %.3f", vmax, cs, d2);
  }
  const double secs = seconds_since(suite_start);
  ok = ok && secs < 600.0;
  detail += fmt("; suite %.1f s", secs);
  report(10, ok, "long-duct oscillation decays, flow stays subsonic", detail);
}

}  // namespace

int main() {
  const auto start = Clock::now();
  guarded(1, "normal shock vs bisection oracle", criterion1);
  guarded(2, "flat family is exact on 33x33", criterion2);
  guarded(3, "perturbed front converges to the flat shock (65x65)", criterion3);
  guarded(4, "mismatched exit speed has no solution", criterion4);
  guarded(5, "pinned runs differ by a translation", criterion5);
  guarded(8, "required psi extremum sits on the front", criterion8);
  guarded(6, "cross-section mass flux is constant", criterion6);
  guarded(7, "second-order coefficients are positive definite", criterion7);
  guarded(9, "wall slopes decay at order >= 1.5", criterion9);
  guarded(10, "long-duct oscillation decays, flow stays subsonic", [&] { criterion10(start); });
  for (int id = 1; id <= 10; ++id) std::printf("%s\n", lines[id].c_str());
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
