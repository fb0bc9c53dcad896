#pragma once

// Free-boundary iteration for the transonic shock front, the exact supersonic and
// flat-shock solutions, and the experiment drivers built on them.
//
// The front update is a bordered Newton step on the oscillatory part of the RH
// mismatch R(eta), with the front mean prescribed separately: pinned to t0 when the
// exit speed matches u+, otherwise moved by -lambda * mean(R).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "transonic/error.hpp"
#include "transonic/gas.hpp"
#include "transonic/grid.hpp"
#include "transonic/jump.hpp"
#include "transonic/linalg.hpp"
#include "transonic/subsonic_solver.hpp"

namespace transonic {

/// phi- = u- x1: the uniform supersonic state upstream of the front.
struct SupersonicSolution {
  double u_minus;

  double value(double x1, double /*x2*/ = 0.0) const { return u_minus * x1; }
  Vec2 gradient() const { return Vec2(u_minus, 0.0); }
};

inline SupersonicSolution supersonic_solution(double u_minus, const GasModel& gas) {
  if (!(u_minus > critical_speed(gas))) {
    throw Error(ErrorKind::NotSupersonic, "supersonic solution needs u_minus > c*");
  }
  if (!gas.isothermal() && !(u_minus < max_speed(gas))) {
    throw Error(ErrorKind::SpeedExceedsLimit, "u_minus must lie below the speed limit");
  }
  return SupersonicSolution{u_minus};
}

/// phi_t: u- x1 upstream of x1 = t, u+ (x1 - t) + u- t downstream.
struct FlatSolution {
  double t;
  double u_minus;
  double u_plus;

  double value(double x1, double /*x2*/ = 0.0) const {
    return x1 < t ? u_minus * x1 : u_plus * (x1 - t) + u_minus * t;
  }
  Vec2 gradient(double x1) const { return Vec2(x1 < t ? u_minus : u_plus, 0.0); }
  FlatReference reference() const { return FlatReference{u_plus, t, u_minus}; }
};

inline FlatSolution flat_solution(double t, double u_minus, const GasModel& gas,
                                  double x_exit = std::numeric_limits<double>::infinity()) {
  if (!(t > ShockFront::entry() && t < x_exit)) {
    throw Error(ErrorKind::InvalidArgument, "flat front position must lie inside the duct");
  }
  const auto jump = solve_normal_shock(u_minus, gas);
  return FlatSolution{t, u_minus, jump.u_plus};
}

/// The flat solution sampled on a grid, stored with the flat solution as reference.
inline PotentialField sample_flat_field(const MappedGrid& grid, const GasModel& gas,
                                        const FlatSolution& flat) {
  std::vector<double> dev(static_cast<std::size_t>(grid.size()));
  const FlatReference ref = flat.reference();
  for (int i = 0; i < grid.n_xi(); ++i)
    for (int j = 0; j < grid.n_eta(); ++j) {
      const double x1 = grid.x1(i, j);
      dev[grid.index(i, j)] = flat.value(x1) - ref.value(x1);
    }
  PotentialField field(grid, gas, ref, std::move(dev));
  field.verify_subsonic();
  return field;
}

enum class Verdict { Converged, NoSolution, MaxIter };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Converged: return "Converged";
    case Verdict::NoSolution: return "NoSolution";
    case Verdict::MaxIter: return "MaxIter";
  }
  return "?";
}

enum class FrontShape { Sine, Cosine };

struct FrontOptions {
  double fb_tol = 1e-8;
  int max_outer = 500;
  double step_scale = 0.5;
  int stall_window = 20;
  double jump_tol = 1e-8;
  bool pin = true;
  int max_contractions = 8;
  int max_line_search = 8;
  double fd_epsilon = 1e-7;
};

struct ExperimentConfig {
  GasModel gas{1.4, 2.0};
  double u_minus = 2.0;
  std::optional<double> exit_speed;  // empty: u+ of the normal shock
  double x_exit = 1.0;
  int n_xi = 65;
  int n_eta = 65;
  double t0 = 0.0;
  double perturb_amp = 0.0;
  int perturb_modes = 1;
  FrontShape shape = FrontShape::Sine;
  SolverOptions solver;
  FrontOptions front;

  double u_plus() const { return solve_normal_shock(u_minus, gas).u_plus; }
  double resolved_exit_speed() const { return exit_speed ? *exit_speed : u_plus(); }

  void validate() const {
    const double cs = critical_speed(gas);
    if (!(u_minus > cs) || (!gas.isothermal() && !(u_minus < max_speed(gas)))) {
      throw Error(ErrorKind::InvalidArgument, "u_minus must lie in (c*, max speed)");
    }
    const double c1 = resolved_exit_speed();
    if (!(c1 > 0.0 && c1 < cs)) throw Error(ErrorKind::InvalidArgument, "c1 must lie in (0, c*)");
    if (!(t0 > ShockFront::entry() && t0 < x_exit)) {
      throw Error(ErrorKind::InvalidArgument, "t0 must lie inside the duct");
    }
    if (!(std::abs(perturb_amp) < 0.5 * std::min(t0 + 1.0, x_exit - t0))) {
      throw Error(ErrorKind::InvalidArgument, "perturbation amplitude too large for the duct");
    }
    if (n_xi < 3 || n_eta < 4) throw Error(ErrorKind::InvalidArgument, "grid too coarse");
    if (perturb_modes < 0) throw Error(ErrorKind::InvalidArgument, "mode must be >= 0");
  }
};

/// t0 + amp * sin(m pi eta) (or cos), sampled at the grid's eta nodes.
inline ShockFront initial_front(const ExperimentConfig& cfg) {
  const double amp = cfg.perturb_modes == 0 ? 0.0 : cfg.perturb_amp;
  const double m = cfg.perturb_modes;
  const bool sine = cfg.shape == FrontShape::Sine;
  return ShockFront::from_function(
      cfg.n_eta,
      [&](double eta) {
        const double a = m * std::numbers::pi * eta;
        return cfg.t0 + amp * (sine ? std::sin(a) : std::cos(a));
      },
      cfg.x_exit);
}

struct FrontResidual {
  std::vector<double> values;
  double mean = 0.0;
  double osc = 0.0;   // max |R - mean|
  double max_abs = 0.0;
};

inline FrontResidual decompose_residual(std::vector<double> r) {
  FrontResidual out;
  double s = 0.0;
  for (double v : r) s += v;
  out.mean = s / static_cast<double>(r.size());
  for (double v : r) {
    out.osc = std::max(out.osc, std::abs(v - out.mean));
    out.max_abs = std::max(out.max_abs, std::abs(v));
  }
  out.values = std::move(r);
  return out;
}

struct TransonicEvidence {
  std::vector<double> mean_residual;
  std::vector<double> osc_residual;
  std::vector<double> front_mean;
  std::vector<double> flatness;
  std::vector<double> step_length;  // Newton damping, or minus the contraction factor
  double initial_mean_residual = 0.0;
  int contractions = 0;           // of the initial front
  int fallback_contractions = 0;  // updates that contracted instead of taking a Newton step
  bool pinned = false;
  int stall_count = 0;
  double max_normal_mach = 0.0;  // downstream normal Mach over all accepted fronts
  double min_ellipticity_margin = std::numeric_limits<double>::infinity();
  int newton_iters_total = 0;
  std::string stop_reason;
};

struct TransonicResult {
  Verdict verdict = Verdict::MaxIter;
  int iterations = 0;  // accepted front updates
  ShockFront front;
  PotentialField field;
  SolveReport report;
  FrontResidual residual;
  TransonicEvidence evidence;
  double exit_speed = 0.0;
  double u_plus = 0.0;

  /// min over nodes of 1 - M.
  double min_mach_margin() const {
    double m = std::numeric_limits<double>::infinity();
    const auto& g = field.grid();
    for (int i = 0; i < g.n_xi(); ++i)
      for (int j = 0; j < g.n_eta(); ++j) m = std::min(m, 1.0 - field.mach(i, j));
    return m;
  }
};

/// Downstream normal Mach number (grad phi+ . nu) / c at each front node.
inline std::vector<double> downstream_normal_mach(const PotentialField& field) {
  const auto& g = field.grid();
  std::vector<double> out(g.n_eta());
  for (int j = 0; j < g.n_eta(); ++j) {
    const double fp = g.front_slope(j);
    const Vec2 nu = Vec2(1.0, -fp) / std::sqrt(1.0 + fp * fp);
    const Vec2 grad = field.gradient(0, j);
    const double rho = density_from_speed_sq(grad.squaredNorm(), field.gas());
    out[j] = grad.dot(nu) / sound_speed(rho, field.gas());
  }
  return out;
}

class FreeBoundarySolver {
 public:
  explicit FreeBoundarySolver(ExperimentConfig cfg)
      : cfg_(std::move(cfg)),
        u_plus_(cfg_.u_plus()),
        c1_(cfg_.resolved_exit_speed()),
        fixed_(cfg_.gas, cfg_.u_minus, c1_, cfg_.solver) {
    cfg_.validate();
    pinned_ = cfg_.front.pin && std::abs(c1_ - u_plus_) < cfg_.front.jump_tol;
    lambda_ = cfg_.front.step_scale / std::abs(mass_flux_derivative(u_plus_, cfg_.gas));
  }

  const ExperimentConfig& config() const noexcept { return cfg_; }
  bool pinned() const noexcept { return pinned_; }
  double u_plus() const noexcept { return u_plus_; }
  double exit_speed() const noexcept { return c1_; }
  double lambda() const noexcept { return lambda_; }

  FixedFrontSolution solve_front(const ShockFront& front) const {
    return fixed_.solve(front, cfg_.n_xi, true);
  }

  FrontResidual residual(const FixedFrontSolution& sol) const {
    return decompose_residual(rh_residual_on_front(sol.field, sol.field.grid().front(), cfg_.u_minus));
  }

  /// dR_k/df_j along the solution manifold, by central differences of the residual
  /// map and one linear solve per front node. The reference potential stays fixed.
  Eigen::MatrixXd residual_jacobian(const FixedFrontSolution& sol) const {
    const auto& grid = sol.field.grid();
    const int n = grid.n_eta();
    const int size = grid.size();
    const double eps = cfg_.front.fd_epsilon;
    const FlatReference ref = sol.field.reference();
    const auto& dev = sol.field.deviation();
    const Vector w = Eigen::Map<const Vector>(dev.data(), size);

    auto shifted_grid = [&](int j, double delta) {
      std::vector<double> f = grid.front().positions();
      f[j] += delta;
      return MappedGrid(ShockFront(std::move(f), grid.x_exit()), grid.n_xi());
    };

    Eigen::MatrixXd dres(size, n);
    for (int j = 0; j < n; ++j) {
      const MappedGrid gp = shifted_grid(j, eps), gm = shifted_grid(j, -eps);
      const auto ep = FixedFrontDiscretization(gp, cfg_.gas, ref, c1_).evaluate(w, nullptr);
      const auto em = FixedFrontDiscretization(gm, cfg_.gas, ref, c1_).evaluate(w, nullptr);
      if (ep.status != FixedFrontDiscretization::Status::Ok ||
          em.status != FixedFrontDiscretization::Status::Ok) {
        throw Error(ErrorKind::SonicDegeneracy, "front sensitivity left the elliptic set");
      }
      dres.col(j) = (ep.residual - em.residual) / (2.0 * eps);
    }
    const Eigen::MatrixXd s = -sol.jacobian->solve(dres);

    Eigen::MatrixXd jr(n, n);
    for (int j = 0; j < n; ++j) {
      auto r_at = [&](double sign) {
        const MappedGrid g = shifted_grid(j, sign * eps);
        const Vector wv = w + (sign * eps) * s.col(j);
        const PotentialField f(g, cfg_.gas, ref, std::vector<double>(wv.data(), wv.data() + size));
        return rh_residual_on_front(f, g.front(), cfg_.u_minus);
      };
      const auto rp = r_at(1.0), rm = r_at(-1.0);
      for (int k = 0; k < n; ++k) jr(k, j) = (rp[k] - rm[k]) / (2.0 * eps);
    }
    return jr;
  }

  /// Zero-mean front correction cancelling the oscillatory mismatch to first order.
  std::vector<double> oscillation_step(const FixedFrontSolution& sol,
                                       const FrontResidual& res) const {
    const int n = sol.field.grid().n_eta();
    std::vector<double> step(n, 0.0);
    if (res.osc < 0.1 * cfg_.front.fb_tol) return step;
    const Eigen::MatrixXd jr = residual_jacobian(sol);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n + 1, n + 1);
    b.topLeftCorner(n, n) = jr;
    b.block(0, n, n, 1).setOnes();
    b.block(n, 0, 1, n).setOnes();
    Vector rhs = Vector::Zero(n + 1);
    for (int k = 0; k < n; ++k) rhs[k] = -res.values[k];
    const Vector x = b.fullPivLu().solve(rhs);
    for (int k = 0; k < n; ++k) step[k] = x[k];
    return step;
  }

  /// Front mean after the update: the pin, or a flux-scaled drift.
  double target_mean(const ShockFront& front, const FrontResidual& res) const {
    return pinned_ ? cfg_.t0 : front.mean() - lambda_ * res.mean;
  }

  TransonicResult run(const ShockFront& initial) const {
    TransonicEvidence ev;
    ev.pinned = pinned_;

    // Globalization: an initial front whose fixed-front problem is not elliptic is
    // contracted toward its mean until the solve succeeds.
    ShockFront front = initial;
    std::optional<FixedFrontSolution> sol;
    FrontResidual res;
    for (int k = 0;; ++k) {
      try {
        sol = solve_front(front);
        res = residual(*sol);
        break;
      } catch (const Error& e) {
        if (!is_solver_failure(e.kind()) || k >= cfg_.front.max_contractions) throw;
        front = contracted(front, 0.5);
        ++ev.contractions;
      }
    }

    const double h = 1.0 / (cfg_.n_xi - 1);
    ev.initial_mean_residual = res.mean;
    Verdict verdict = Verdict::MaxIter;
    int updates = 0;

    for (;;) {
      record(ev, front, *sol, res);
      if (res.max_abs < cfg_.front.fb_tol) {
        verdict = Verdict::Converged;
        ev.stop_reason = "residual below tolerance";
        break;
      }
      const bool stalling = std::abs(res.mean) > 0.5 * std::abs(ev.initial_mean_residual) &&
                            res.osc < cfg_.front.fb_tol;
      ev.stall_count = stalling ? ev.stall_count + 1 : 0;
      if (ev.stall_count >= cfg_.front.stall_window) {
        verdict = Verdict::NoSolution;
        ev.stop_reason = "mean residual stalled";
        break;
      }
      if (updates >= cfg_.front.max_outer) {
        ev.stop_reason = "outer iteration cap";
        break;
      }

      const double mean_next = target_mean(front, res);
      if (!(mean_next > ShockFront::entry() + h && mean_next < cfg_.x_exit - h)) {
        verdict = Verdict::NoSolution;
        ev.stop_reason = "front mean left the duct";
        break;
      }
      // The sensitivity probes can leave the elliptic set near a degenerate corner;
      // then only the contraction fallback is available.
      std::optional<std::vector<double>> osc_step;
      try {
        osc_step = oscillation_step(*sol, res);
      } catch (const Error& e) {
        if (!is_solver_failure(e.kind())) throw;
      }
      const double shift = mean_next - front.mean();

      // Newton direction first; if no damped Newton front is admissible, fall back to
      // contracting the oscillation toward the mean (the flat fronts are always elliptic).
      bool accepted = false;
      auto try_front = [&](std::vector<double> f, double length) {
        try {
          ShockFront trial(std::move(f), cfg_.x_exit);
          auto tsol = solve_front(trial);
          auto tres = residual(tsol);
          if (res.osc >= 0.1 * cfg_.front.fb_tol && !(tres.osc < res.osc)) return false;
          front = std::move(trial);
          sol = std::move(tsol);
          res = std::move(tres);
          ev.step_length.push_back(length);
          return true;
        } catch (const Error& e) {
          if (e.kind() == ErrorKind::DegenerateFront || is_solver_failure(e.kind())) return false;
          throw;
        }
      };
      double alpha = 1.0;
      for (int ls = 0; osc_step && ls <= cfg_.front.max_line_search && !accepted;
           ++ls, alpha *= 0.5) {
        std::vector<double> f = front.positions();
        for (std::size_t j = 0; j < f.size(); ++j) f[j] += alpha * (*osc_step)[j] + shift;
        accepted = try_front(std::move(f), alpha);
      }
      double beta = 0.5;
      for (int ls = 0; ls <= cfg_.front.max_line_search && !accepted; ++ls, beta *= 0.5) {
        const double m = front.mean();
        std::vector<double> f = front.positions();
        for (double& x : f) x = m + beta * (x - m) + shift;
        accepted = try_front(std::move(f), -beta);
        if (accepted) ++ev.fallback_contractions;
      }
      if (!accepted) {
        ev.stop_reason = "front line search failed";
        break;
      }
      ++updates;
    }

    TransonicResult out{verdict, updates, front, sol->field, sol->report, res, std::move(ev),
                        c1_, u_plus_};
    return out;
  }

 private:
  static bool is_solver_failure(ErrorKind k) {
    return k == ErrorKind::SonicDegeneracy || k == ErrorKind::ExitConditionInfeasible ||
           k == ErrorKind::NewtonDiverged;
  }

  ShockFront contracted(const ShockFront& f, double factor) const {
    const double m = f.mean();
    std::vector<double> v = f.positions();
    for (double& x : v) x = m + factor * (x - m);
    return ShockFront(std::move(v), f.exit());
  }

  void record(TransonicEvidence& ev, const ShockFront& front, const FixedFrontSolution& sol,
              const FrontResidual& res) const {
    ev.mean_residual.push_back(res.mean);
    ev.osc_residual.push_back(res.osc);
    ev.front_mean.push_back(front.mean());
    ev.flatness.push_back(front.flatness());
    ev.newton_iters_total += sol.report.newton_iters;
    ev.min_ellipticity_margin = std::min(ev.min_ellipticity_margin, sol.report.min_ellipticity_margin);
    for (double m : downstream_normal_mach(sol.field)) {
      ev.max_normal_mach = std::max(ev.max_normal_mach, m);
      if (!(m < 1.0)) {
        throw Error(ErrorKind::SonicDegeneracy, "downstream normal speed at the front is not subsonic");
      }
    }
  }

  ExperimentConfig cfg_;
  double u_plus_;
  double c1_;
  FixedFrontSolver fixed_;
  bool pinned_ = false;
  double lambda_ = 0.0;
};

inline TransonicResult solve_transonic(const ExperimentConfig& cfg, const ShockFront& initial) {
  return FreeBoundarySolver(cfg).run(initial);
}

inline TransonicResult solve_transonic(const ExperimentConfig& cfg) {
  return solve_transonic(cfg, initial_front(cfg));
}

/// Exact 1D reduction: conservative finite differences for (rho(phi'^2) phi')' = 0 on
/// [t, X], phi(t) = u- t, phi'(X) = c1.
struct OneDimensionalResult {
  std::vector<double> x;
  std::vector<double> phi;
  double front_speed = 0.0;
  double mean_residual = 0.0;  // rho(q) q - rho- u- at the front
  int newton_iters = 0;
};

inline OneDimensionalResult solve_one_dimensional(const GasModel& gas, double u_minus, double c1,
                                                  double t, double x_exit, int n,
                                                  double tol = 1e-13) {
  if (n < 4) throw Error(ErrorKind::InvalidArgument, "1D grid needs >= 4 nodes");
  if (!(c1 > 0.0 && c1 < critical_speed(gas))) {
    throw Error(ErrorKind::InvalidArgument, "c1 must lie in (0, c*)");
  }
  const double h = (x_exit - t) / (n - 1);
  const double u_plus = solve_normal_shock(u_minus, gas).u_plus;
  OneDimensionalResult out;
  out.x.resize(n);
  Vector phi(n);
  for (int k = 0; k < n; ++k) {
    out.x[k] = t + k * h;
    phi[k] = u_minus * t + u_plus * (out.x[k] - t);
  }
  auto face_q = [&](const Vector& p, int k) { return (p[k + 1] - p[k]) / h; };
  for (int it = 0; it < 50; ++it) {
    Vector r(n);
    std::vector<Eigen::Triplet<double>> trip;
    r[0] = phi[0] - u_minus * t;
    trip.emplace_back(0, 0, 1.0);
    for (int k = 1; k + 1 < n; ++k) {
      const double ql = face_q(phi, k - 1), qr = face_q(phi, k);
      r[k] = mass_flux(qr, gas) - mass_flux(ql, gas);
      const double dl = mass_flux_derivative(ql, gas) / h, dr = mass_flux_derivative(qr, gas) / h;
      trip.emplace_back(k, k + 1, dr);
      trip.emplace_back(k, k, -dr - dl);
      trip.emplace_back(k, k - 1, dl);
    }
    r[n - 1] = (3.0 * phi[n - 1] - 4.0 * phi[n - 2] + phi[n - 3]) / (2.0 * h) - c1;
    trip.emplace_back(n - 1, n - 1, 1.5 / h);
    trip.emplace_back(n - 1, n - 2, -2.0 / h);
    trip.emplace_back(n - 1, n - 3, 0.5 / h);
    if (r.lpNorm<Eigen::Infinity>() < tol) break;
    SparseMatrix j(n, n);
    j.setFromTriplets(trip.begin(), trip.end());
    const JacobianSolver js(j, LinearSolveOptions{});
    phi += js.solve(Vector(-r));
    ++out.newton_iters;
  }
  out.phi.assign(phi.data(), phi.data() + n);
  out.front_speed = face_q(phi, 0);
  out.mean_residual = mass_flux(out.front_speed, gas) - mass_flux(u_minus, gas);
  return out;
}

struct SweepCell {
  bool c1_auto = true;
  double c1_offset = 0.0;  // c1 = u+ + offset
  double perturb_amp = 0.0;
  int perturb_modes = 0;
};

inline std::vector<SweepCell> default_sweep() {
  std::vector<SweepCell> cells;
  const std::vector<std::pair<double, int>> perts{{0.0, 0}, {0.05, 1}, {0.1, 2}};
  for (double off : {0.0, 0.02, -0.02, 0.05, -0.05})
    for (const auto& [amp, m] : perts) cells.push_back(SweepCell{off == 0.0, off, amp, m});
  return cells;
}

struct TheoremRow {
  SweepCell cell;
  double c1 = 0.0;
  Verdict verdict = Verdict::MaxIter;
  Verdict expected = Verdict::Converged;
  int iterations = 0;
  double final_flatness = 0.0;
  double front_mean = 0.0;
  double mean_residual = 0.0;
  double osc_residual = 0.0;
  int contractions = 0;
  double seconds = 0.0;
  std::string error;  // non-empty when the cell threw

  bool matches() const { return error.empty() && verdict == expected; }
};

inline TheoremRow run_sweep_cell(const ExperimentConfig& base, const SweepCell& cell) {
  ExperimentConfig cfg = base;
  const double up = cfg.u_plus();
  cfg.exit_speed = cell.c1_auto ? std::optional<double>{} : std::optional<double>{up + cell.c1_offset};
  cfg.perturb_amp = cell.perturb_amp;
  cfg.perturb_modes = cell.perturb_modes;
  TheoremRow row;
  row.cell = cell;
  row.c1 = cfg.resolved_exit_speed();
  row.expected =
      std::abs(row.c1 - up) < cfg.front.jump_tol ? Verdict::Converged : Verdict::NoSolution;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const auto r = solve_transonic(cfg);
    row.verdict = r.verdict;
    row.iterations = r.iterations;
    row.final_flatness = r.front.flatness();
    row.front_mean = r.front.mean();
    row.mean_residual = r.residual.mean;
    row.osc_residual = r.residual.osc;
    row.contractions = r.evidence.contractions;
  } catch (const Error& e) {
    row.error = e.what();
  }
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

/// Sweep over exit speeds and initial perturbations; rows in cell order.
inline std::vector<TheoremRow> verify_finite_duct(const ExperimentConfig& base,
                                                  const std::vector<SweepCell>& cells) {
  std::vector<TheoremRow> rows;
  rows.reserve(cells.size());
  for (const auto& c : cells) rows.push_back(run_sweep_cell(base, c));
  return rows;
}

struct LongDuctStation {
  int station = 0;  // k in x1 = front + k
  double x1 = 0.0;
  double osc = 0.0;
  double max_speed = 0.0;
  double max_second_diff = 0.0;
};

struct LongDuctRun {
  double length = 0.0;
  int n_xi = 0;
  int n_eta = 0;
  std::vector<LongDuctStation> stations;
  double exit_speed_deviation = 0.0;  // max |q_exit - u+|
  double min_ellipticity_margin = 0.0;
  SolveReport report;

  bool osc_strictly_decreasing() const {
    for (std::size_t k = 1; k < stations.size(); ++k)
      if (!(stations[k].osc < stations[k - 1].osc)) return false;
    return true;
  }
  bool subsonic(double c_star) const {
    for (const auto& s : stations)
      if (!(s.max_speed < c_star)) return false;
    return true;
  }
};

/// max_j - min_j of the deviation from the flat reference at station x1; equals the
/// cross-section oscillation of psi against any flat solution.
inline double cross_section_deviation_osc(const PotentialField& field, double x1) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int j = 0; j < field.grid().n_eta(); ++j) {
    const double v = field.deviation_at(x1, j);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi - lo;
}

inline LongDuctStation long_duct_station(const PotentialField& field, int k, double x1) {
  const auto& g = field.grid();
  LongDuctStation st{k, x1, cross_section_deviation_osc(field, x1), 0.0, 0.0};
  const int ne = g.n_eta();
  for (int j = 0; j < ne; ++j) {
    const double xi = (x1 - g.front()[j]) / g.x1_xi(j);
    const int i = std::clamp(static_cast<int>(std::lround(xi / g.dxi())), 1, g.n_xi() - 2);
    st.max_speed = std::max(st.max_speed, field.speed(i, j));
    const double hx = g.dxi() * g.x1_xi(j);
    const double d11 =
        (field.deviation(i + 1, j) - 2.0 * field.deviation(i, j) + field.deviation(i - 1, j)) / (hx * hx);
    const int jl = j == 0 ? 1 : j - 1, jr = j == ne - 1 ? ne - 2 : j + 1;  // slip-wall mirror
    const double d22 =
        (field.deviation(i, jr) - 2.0 * field.deviation(i, j) + field.deviation(i, jl)) / (g.deta() * g.deta());
    st.max_second_diff = std::max({st.max_second_diff, std::abs(d11), std::abs(d22)});
  }
  return st;
}

/// Fixed-front solves in ducts truncated at x1 = L with the Bernoulli exit at u+.
inline std::vector<LongDuctRun> long_duct_experiment(const ExperimentConfig& base,
                                                     const std::vector<double>& lengths,
                                                     int cells_per_unit) {
  std::vector<LongDuctRun> runs;
  const double up = base.u_plus();
  for (double L : lengths) {
    ExperimentConfig cfg = base;
    cfg.x_exit = L;
    cfg.exit_speed = up;
    cfg.n_xi = static_cast<int>(std::lround(cells_per_unit * (L - cfg.t0))) + 1;
    cfg.validate();
    const ShockFront front = initial_front(cfg);
    const auto sol = FixedFrontSolver(cfg.gas, cfg.u_minus, up, cfg.solver).solve(front, cfg.n_xi);
    LongDuctRun run;
    run.length = L;
    run.n_xi = cfg.n_xi;
    run.n_eta = cfg.n_eta;
    run.report = sol.report;
    run.min_ellipticity_margin = sol.report.min_ellipticity_margin;
    for (double q : exit_speed_profile(sol.field))
      run.exit_speed_deviation = std::max(run.exit_speed_deviation, std::abs(q - up));
    const double fm = front.mean();
    for (int k = 1; fm + k < L - 1e-12; ++k) run.stations.push_back(long_duct_station(sol.field, k, fm + k));
    runs.push_back(std::move(run));
  }
  return runs;
}

}  // namespace transonic
