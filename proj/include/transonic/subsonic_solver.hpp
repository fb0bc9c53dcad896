#pragma once

// Newton solver for div(rho(|grad phi|^2) grad phi) = 0 on the shock-fitted region
// behind a fixed front:
//   phi = u_minus f(eta)                      on the front (xi = 0)
//   d(phi)/dn = 0                             on the walls (eta = 0, 1)
//   d(phi)/dx1 = sqrt(c1^2 - (d(phi)/dx2)^2)  on the exit (xi = 1)
//
// The interior is a node-centred finite-volume balance in (xi, eta): fluxes live on
// cell faces, wall nodes own half cells with zero wall flux. Unknowns are the
// deviation w from a flat reference potential with axial speed c1, so every flux is
// evaluated as a deviation from the (exactly divergence-free) reference flux.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "transonic/error.hpp"
#include "transonic/gas.hpp"
#include "transonic/grid.hpp"
#include "transonic/jump.hpp"
#include "transonic/linalg.hpp"

namespace transonic {

using Mat2 = Eigen::Matrix2d;

struct SolverOptions {
  double newton_tol = 1e-10;
  double margin_floor = 1e-6;
  int max_newton = 40;
  int max_halvings = 8;
  int divergence_window = 3;
  LinearSolveOptions linear;
};

struct SolveReport {
  int newton_iters = 0;
  std::vector<double> residual_history;
  bool converged = false;
  double min_ellipticity_margin = 0.0;
  double max_linear_residual = 0.0;
  bool banded_solver = true;
};

/// rho (1 - q^2/c^2): the smaller eigenvalue of the coefficient matrix.
inline double ellipticity_margin(double q2, const GasModel& gas) {
  const double rho = density_from_speed_sq(q2, gas);
  return rho * (1.0 - q2 / sound_speed_sq_from_speed_sq(q2, gas));
}

/// A = rho I + 2 rho' grad phi grad phi^T with rho' = d rho / d(q^2).
inline Mat2 coefficient_matrix(const Vec2& grad, const GasModel& gas) {
  const double q2 = grad.squaredNorm();
  const double rho = density_from_speed_sq(q2, gas);
  const double drho = density_derivative_sq(q2, gas);
  return rho * Mat2::Identity() + 2.0 * drho * grad * grad.transpose();
}

inline std::vector<Mat2> assemble_coefficients(const PotentialField& field) {
  const auto& g = field.grid();
  std::vector<Mat2> out(static_cast<std::size_t>(g.size()));
  for (int i = 0; i < g.n_xi(); ++i)
    for (int j = 0; j < g.n_eta(); ++j)
      out[g.index(i, j)] = coefficient_matrix(field.gradient(i, j), field.gas());
  return out;
}

namespace detail {

/// rho(|g + d|^2)(g + d) - rho(|g|^2) g for g = (u_ref, 0), without cancellation.
struct FluxDeviation {
  Vec2 dq;       // flux deviation
  Vec2 grad;     // full gradient g + d
  double rho;
  double c2;
  double margin;  // rho (1 - q^2/c^2)
  bool subsonic;
};

inline FluxDeviation flux_deviation(double u_ref, const Vec2& d, const GasModel& gas) {
  FluxDeviation out;
  out.grad = Vec2(u_ref + d[0], d[1]);
  const double q2 = out.grad.squaredNorm();
  const double cs = critical_speed(gas);
  out.subsonic = q2 < cs * cs;
  if (!out.subsonic) {
    out.dq = Vec2::Zero();
    out.rho = 0.0;
    out.c2 = 0.0;
    out.margin = -1.0;
    return out;
  }
  const double q2_ref = u_ref * u_ref;
  const double dq2 = 2.0 * u_ref * d[0] + d.squaredNorm();
  const double rho_ref = density_from_speed_sq(q2_ref, gas);
  const double ratio = density_ratio_minus_one(q2_ref, dq2, gas);
  out.rho = rho_ref * (1.0 + ratio);
  out.c2 = sound_speed_sq_from_speed_sq(q2, gas);
  out.margin = out.rho * (1.0 - q2 / out.c2);
  out.dq = rho_ref * d + (rho_ref * ratio) * out.grad;
  return out;
}

/// Linear combination of node values producing (d/dxi, d/deta) of the deviation.
struct Stencil {
  static constexpr int kCapacity = 12;
  int size = 0;
  std::array<int, kCapacity> node{};
  std::array<double, kCapacity> c_xi{};
  std::array<double, kCapacity> c_eta{};

  void add(int n, double cx, double ce) {
    node[size] = n;
    c_xi[size] = cx;
    c_eta[size] = ce;
    ++size;
  }

  std::pair<double, double> apply(const Vector& w) const {
    double a = 0.0, b = 0.0;
    for (int k = 0; k < size; ++k) {
      a += c_xi[k] * w[node[k]];
      b += c_eta[k] * w[node[k]];
    }
    return {a, b};
  }
};

}  // namespace detail

/// Residual and Jacobian of the discrete fixed-front problem.
class FixedFrontDiscretization {
 public:
  enum class Status { Ok, Supersonic, ExitInfeasible };

  struct Evaluation {
    Status status = Status::Ok;
    Vector residual;
    double min_margin = std::numeric_limits<double>::infinity();
  };

  FixedFrontDiscretization(const MappedGrid& grid, GasModel gas, FlatReference ref,
                           double exit_speed)
      : grid_(grid), gas_(gas), ref_(ref), c1_(exit_speed) {}

  const MappedGrid& grid() const noexcept { return grid_; }
  const FlatReference& reference() const noexcept { return ref_; }

  /// Dirichlet deviation on the front: u_minus f - reference(f).
  double dirichlet_value(int j) const {
    return (ref_.u_minus - ref_.speed) * (grid_.front()[j] - ref_.t);
  }

  void impose_dirichlet(Vector& w) const {
    for (int j = 0; j < grid_.n_eta(); ++j) w[grid_.index(0, j)] = dirichlet_value(j);
  }

  Evaluation evaluate(const Vector& w, SparseMatrix* jacobian) const {
    const int nx = grid_.n_xi();
    const int ne = grid_.n_eta();
    const double dxi = grid_.dxi();
    const double deta = grid_.deta();
    Evaluation ev;
    ev.residual = Vector::Zero(grid_.size());
    std::vector<Eigen::Triplet<double>> trip;
    if (jacobian) trip.reserve(static_cast<std::size_t>(grid_.size()) * 30);

    auto interior_row = [&](int i) { return i >= 1 && i <= nx - 2; };
    auto wall_weight = [&](int j) { return (j == 0 || j == ne - 1) ? 0.5 : 1.0; };

    // Dirichlet rows on the front.
    for (int j = 0; j < ne; ++j) {
      const int r = grid_.index(0, j);
      ev.residual[r] = w[r] - dirichlet_value(j);
      if (jacobian) trip.emplace_back(r, r, 1.0);
    }

    // xi-faces (i+1/2, j).
    for (int i = 0; i + 1 < nx; ++i) {
      const double xi_face = (i + 0.5) * dxi;
      for (int j = 0; j < ne; ++j) {
        const detail::Stencil st = xi_face_stencil(i, j);
        const double wgt = grid_.x1_xi(j);
        const double x1e = (1.0 - xi_face) * grid_.front_slope(j);
        const auto fx = face_flux(st, w, wgt, x1e, ev);
        if (ev.status != Status::Ok) return ev;
        const double flux = fx.dq[0] - x1e * fx.dq[1];
        const double scale = wall_weight(j) / dxi;
        const int r_lo = grid_.index(i, j), r_hi = grid_.index(i + 1, j);
        if (interior_row(i)) ev.residual[r_lo] += scale * flux;
        if (interior_row(i + 1)) ev.residual[r_hi] -= scale * flux;
        if (jacobian) {
          const Mat2 a = jac_matrix(fx);
          for (int k = 0; k < st.size; ++k) {
            const double dp1 = st.c_xi[k] / wgt;
            const Vec2 dq = a * Vec2(dp1, st.c_eta[k] - x1e * dp1);
            const double dflux = dq[0] - x1e * dq[1];
            if (interior_row(i)) trip.emplace_back(r_lo, st.node[k], scale * dflux);
            if (interior_row(i + 1)) trip.emplace_back(r_hi, st.node[k], -scale * dflux);
          }
        }
      }
    }

    // eta-faces (i, j+1/2) on interior columns.
    for (int i = 1; i + 1 < nx; ++i) {
      const double one_minus_xi = 1.0 - grid_.xi(i);
      for (int j = 0; j + 1 < ne; ++j) {
        const detail::Stencil st = eta_face_stencil(i, j);
        const double wgt = grid_.x_exit() - 0.5 * (grid_.front()[j] + grid_.front()[j + 1]);
        const double x1e = one_minus_xi * (grid_.front()[j + 1] - grid_.front()[j]) / deta;
        const auto fx = face_flux(st, w, wgt, x1e, ev);
        if (ev.status != Status::Ok) return ev;
        const double flux = wgt * fx.dq[1];
        const double scale = 1.0 / deta;
        const int r_lo = grid_.index(i, j), r_hi = grid_.index(i, j + 1);
        ev.residual[r_lo] += scale * flux;
        ev.residual[r_hi] -= scale * flux;
        if (jacobian) {
          const Mat2 a = jac_matrix(fx);
          for (int k = 0; k < st.size; ++k) {
            const double dp1 = st.c_xi[k] / wgt;
            const Vec2 dq = a * Vec2(dp1, st.c_eta[k] - x1e * dp1);
            const double dflux = wgt * dq[1];
            trip.emplace_back(r_lo, st.node[k], scale * dflux);
            trip.emplace_back(r_hi, st.node[k], -scale * dflux);
          }
        }
      }
    }

    // Exit rows: d(phi)/dx1 - sqrt(c1^2 - (d(phi)/dx2)^2) = 0.
    const int ie = nx - 1;
    for (int j = 0; j < ne; ++j) {
      const detail::Stencil st = node_stencil(ie, j);
      const auto [d_xi, d_eta] = st.apply(w);
      const double wgt = grid_.x1_xi(j);
      const double d1 = d_xi / wgt;
      const double d2 = d_eta;
      if (!(std::abs(d2) < c1_)) {
        ev.status = Status::ExitInfeasible;
        return ev;
      }
      const auto fx = detail::flux_deviation(ref_.speed, Vec2(d1, d2), gas_);
      if (!fx.subsonic) {
        ev.status = Status::Supersonic;
        return ev;
      }
      ev.min_margin = std::min(ev.min_margin, fx.margin);
      const double s = std::sqrt(c1_ * c1_ - d2 * d2);
      const int r = grid_.index(ie, j);
      ev.residual[r] = (ref_.speed - c1_) + d1 + d2 * d2 / (c1_ + s);
      if (jacobian) {
        for (int k = 0; k < st.size; ++k)
          trip.emplace_back(r, st.node[k], st.c_xi[k] / wgt + (d2 / s) * st.c_eta[k]);
      }
    }

    if (jacobian) {
      jacobian->resize(grid_.size(), grid_.size());
      jacobian->setFromTriplets(trip.begin(), trip.end());
      jacobian->makeCompressed();
    }
    return ev;
  }

  /// Mass flux through every xi-face line (i+1/2), trapezoidal in eta.
  std::vector<double> cross_section_flux(const Vector& w) const {
    const int nx = grid_.n_xi(), ne = grid_.n_eta();
    const double base = density_from_speed(ref_.speed, gas_) * ref_.speed;
    std::vector<double> out(nx - 1, 0.0);
    Evaluation scratch;
    for (int i = 0; i + 1 < nx; ++i) {
      const double xi_face = (i + 0.5) * grid_.dxi();
      double acc = 0.0;
      for (int j = 0; j < ne; ++j) {
        const detail::Stencil st = xi_face_stencil(i, j);
        const double x1e = (1.0 - xi_face) * grid_.front_slope(j);
        const auto fx = face_flux(st, w, grid_.x1_xi(j), x1e, scratch);
        const double wt = (j == 0 || j == ne - 1) ? 0.5 : 1.0;
        acc += wt * (fx.dq[0] - x1e * fx.dq[1]);
      }
      out[i] = base + acc * grid_.deta();
    }
    return out;
  }

  /// Derivative stencil of the deviation at node (i, j).
  detail::Stencil node_stencil(int i, int j) const {
    detail::Stencil st;
    const auto dx = detail::first_derivative(i, grid_.n_xi(), grid_.dxi());
    const auto de = detail::first_derivative(j, grid_.n_eta(), grid_.deta());
    for (int m = 0; m < 3; ++m) {
      if (dx.weight[m] != 0.0) st.add(grid_.index(i + dx.offset[m], j), dx.weight[m], 0.0);
      if (de.weight[m] != 0.0) st.add(grid_.index(i, j + de.offset[m]), 0.0, de.weight[m]);
    }
    return st;
  }

  /// Stencil of the deviation derivatives on the xi-face (i+1/2, j).
  detail::Stencil xi_face_stencil(int i, int j) const {
    detail::Stencil st;
    const double inv = 1.0 / grid_.dxi();
    st.add(grid_.index(i + 1, j), inv, 0.0);
    st.add(grid_.index(i, j), -inv, 0.0);
    const auto de = detail::first_derivative(j, grid_.n_eta(), grid_.deta());
    for (int m = 0; m < 3; ++m) {
      if (de.weight[m] == 0.0) continue;
      st.add(grid_.index(i, j + de.offset[m]), 0.0, 0.5 * de.weight[m]);
      st.add(grid_.index(i + 1, j + de.offset[m]), 0.0, 0.5 * de.weight[m]);
    }
    return st;
  }

  // Requires an interior column i (centred xi differences).
  detail::Stencil eta_face_stencil(int i, int j) const {
    detail::Stencil st;
    const double inv = 1.0 / grid_.deta();
    st.add(grid_.index(i, j + 1), 0.0, inv);
    st.add(grid_.index(i, j), 0.0, -inv);
    const double q = 0.25 / grid_.dxi();
    for (int jj : {j, j + 1}) {
      st.add(grid_.index(i + 1, jj), q, 0.0);
      st.add(grid_.index(i - 1, jj), -q, 0.0);
    }
    return st;
  }

 private:
  detail::FluxDeviation face_flux(const detail::Stencil& st, const Vector& w, double wgt,
                                  double x1e, Evaluation& ev) const {
    const auto [d_xi, d_eta] = st.apply(w);
    const double d1 = d_xi / wgt;
    const Vec2 d(d1, d_eta - x1e * d1);
    auto fx = detail::flux_deviation(ref_.speed, d, gas_);
    if (!fx.subsonic) {
      ev.status = Status::Supersonic;
    } else {
      ev.min_margin = std::min(ev.min_margin, fx.margin);
    }
    return fx;
  }

  Mat2 jac_matrix(const detail::FluxDeviation& fx) const {
    const double drho = -0.5 * fx.rho / fx.c2;
    return fx.rho * Mat2::Identity() + 2.0 * drho * fx.grad * fx.grad.transpose();
  }

  MappedGrid grid_;
  GasModel gas_;
  FlatReference ref_;
  double c1_;
};

/// Converged fixed-front state plus the Jacobian factorization for sensitivity solves.
struct FixedFrontSolution {
  PotentialField field;
  SolveReport report;
  std::shared_ptr<const JacobianSolver> jacobian;
};

class FixedFrontSolver {
 public:
  FixedFrontSolver(GasModel gas, double u_minus, double exit_speed, SolverOptions opts = {})
      : gas_(gas), u_minus_(u_minus), c1_(exit_speed), opts_(opts) {
    const double cs = critical_speed(gas_);
    if (!(c1_ > 0.0 && c1_ < cs)) {
      throw Error(ErrorKind::InvalidArgument, "exit speed must lie in (0, c*)");
    }
    if (!(u_minus_ > cs)) throw Error(ErrorKind::NotSupersonic, "u_minus must exceed c*");
    if (!gas_.isothermal() && !(u_minus_ < max_speed(gas_))) {
      throw Error(ErrorKind::SpeedExceedsLimit, "u_minus must lie below the speed limit");
    }
  }

  const GasModel& gas() const noexcept { return gas_; }
  double u_minus() const noexcept { return u_minus_; }
  double exit_speed() const noexcept { return c1_; }
  const SolverOptions& options() const noexcept { return opts_; }

  FlatReference reference_for(const ShockFront& front) const {
    return FlatReference{c1_, front.mean(), u_minus_};
  }

  FixedFrontDiscretization discretization(const MappedGrid& grid) const {
    return FixedFrontDiscretization(grid, gas_, reference_for(grid.front()), c1_);
  }

  /// With factor_final, the returned factorization is of the Jacobian at the solution
  /// rather than at the last Newton iterate.
  FixedFrontSolution solve(const ShockFront& front, int n_xi, bool factor_final = false) const {
    const MappedGrid grid = build_mapped_grid(front, front.exit(), n_xi, front.n_eta());
    const FixedFrontDiscretization disc = discretization(grid);
    Vector w = initial_guess(disc);

    SolveReport report;
    std::shared_ptr<const JacobianSolver> solver;
    SparseMatrix jac;
    auto ev = disc.evaluate(w, &jac);
    throw_on_status(ev.status, "initial guess");
    double res = ev.residual.lpNorm<Eigen::Infinity>();
    report.residual_history.push_back(res);
    int growth = 0;

    while (res >= opts_.newton_tol) {
      if (report.newton_iters >= opts_.max_newton) break;
      auto js = std::make_shared<JacobianSolver>(jac, opts_.linear);
      report.banded_solver = js->banded();
      const Vector rhs = -ev.residual;
      const Vector step = js->solve(rhs);
      report.max_linear_residual =
          std::max(report.max_linear_residual, js->relative_residual(step, rhs));
      solver = js;

      double alpha = 1.0;
      Vector best_w;
      FixedFrontDiscretization::Evaluation best_ev;
      bool have_feasible = false;
      FixedFrontDiscretization::Status last_bad = FixedFrontDiscretization::Status::Ok;
      for (int h = 0; h <= opts_.max_halvings; ++h, alpha *= 0.5) {
        Vector trial = w + alpha * step;
        disc.impose_dirichlet(trial);
        auto tev = disc.evaluate(trial, nullptr);
        if (tev.status != FixedFrontDiscretization::Status::Ok ||
            tev.min_margin < opts_.margin_floor) {
          last_bad = tev.status == FixedFrontDiscretization::Status::Ok
                         ? FixedFrontDiscretization::Status::Supersonic
                         : tev.status;
          continue;
        }
        const double tres = tev.residual.lpNorm<Eigen::Infinity>();
        best_w = std::move(trial);
        best_ev = std::move(tev);
        have_feasible = true;
        if (tres < res) break;
      }
      if (!have_feasible) throw_on_status(last_bad, "every damped Newton step");
      const double new_res = best_ev.residual.lpNorm<Eigen::Infinity>();
      growth = new_res < res ? 0 : growth + 1;
      w = std::move(best_w);
      ++report.newton_iters;
      report.residual_history.push_back(new_res);
      if (growth >= opts_.divergence_window) {
        throw Error(ErrorKind::NewtonDiverged, "residual grew over consecutive Newton steps");
      }
      res = new_res;
      ev = disc.evaluate(w, &jac);
    }
    report.converged = res < opts_.newton_tol;
    if (!solver || (factor_final && report.newton_iters > 0)) {
      solver = std::make_shared<JacobianSolver>(jac, opts_.linear);
    }

    PotentialField field(grid, gas_, disc.reference(), std::vector<double>(w.data(), w.data() + w.size()));
    // Faces can all be elliptic while a one-sided corner gradient is not.
    if (!field.verify_subsonic()) {
      throw Error(ErrorKind::SonicDegeneracy, "converged field has a supersonic node");
    }
    report.min_ellipticity_margin = node_margin(field);
    return FixedFrontSolution{std::move(field), std::move(report), std::move(solver)};
  }

 private:
  static void throw_on_status(FixedFrontDiscretization::Status s, const char* where) {
    using S = FixedFrontDiscretization::Status;
    if (s == S::Supersonic) {
      throw Error(ErrorKind::SonicDegeneracy, std::string("ellipticity lost at ") + where);
    }
    if (s == S::ExitInfeasible) {
      throw Error(ErrorKind::ExitConditionInfeasible,
                  std::string("|d(phi)/dx2| >= c1 at an exit node for ") + where);
    }
  }

  // Flat reference plus the front data faded out linearly in xi. Sampling the flat
  // solution at t = mean f itself would put supersonic nodes between f and t.
  static Vector initial_guess(const FixedFrontDiscretization& disc) {
    const auto& g = disc.grid();
    Vector w(g.size());
    for (int i = 0; i < g.n_xi(); ++i)
      for (int j = 0; j < g.n_eta(); ++j)
        w[g.index(i, j)] = (1.0 - g.xi(i)) * disc.dirichlet_value(j);
    disc.impose_dirichlet(w);
    return w;
  }

  double node_margin(const PotentialField& field) const {
    double m = std::numeric_limits<double>::infinity();
    const auto& g = field.grid();
    for (int i = 0; i < g.n_xi(); ++i)
      for (int j = 0; j < g.n_eta(); ++j) {
        const auto fx = detail::flux_deviation(field.reference().speed,
                                               field.deviation_gradient(i, j), gas_);
        m = std::min(m, fx.subsonic ? fx.margin : -1.0);
      }
    return m;
  }

  GasModel gas_;
  double u_minus_;
  double c1_;
  SolverOptions opts_;
};

inline std::pair<PotentialField, SolveReport> solve_fixed_front(const ShockFront& front,
                                                                double exit_speed, double u_minus,
                                                                const GasModel& gas, int n_xi,
                                                                int n_eta,
                                                                const SolverOptions& opts = {}) {
  if (n_eta != front.n_eta()) {
    throw Error(ErrorKind::InvalidArgument, "n_eta must match the front sampling");
  }
  auto sol = FixedFrontSolver(gas, u_minus, exit_speed, opts).solve(front, n_xi);
  return {std::move(sol.field), std::move(sol.report)};
}

/// RH mismatch rho(|grad phi+|^2) grad phi+ . nu - rho- u- nu_1 at every front node,
/// with nu = (1, -f') / sqrt(1 + f'^2) and the uniform upstream state (u-, 0).
inline std::vector<double> rh_residual_on_front(const PotentialField& field,
                                                const ShockFront& front, double u_minus) {
  const auto& g = field.grid();
  if (front.positions() != g.front().positions()) {
    throw Error(ErrorKind::InvalidArgument, "front does not match the field's grid");
  }
  const double u_ref = field.reference().speed;
  const double offset = mass_flux(u_ref, field.gas()) - mass_flux(u_minus, field.gas());
  std::vector<double> r(g.n_eta());
  for (int j = 0; j < g.n_eta(); ++j) {
    const double fp = g.front_slope(j);
    const auto fx = detail::flux_deviation(u_ref, field.deviation_gradient(0, j), field.gas());
    if (!fx.subsonic) throw Error(ErrorKind::SonicDegeneracy, "supersonic downstream front node");
    r[j] = (offset + fx.dq[0] - fp * fx.dq[1]) / std::sqrt(1.0 + fp * fp);
  }
  return r;
}

inline std::vector<double> exit_speed_profile(const PotentialField& field) {
  const auto& g = field.grid();
  std::vector<double> q(g.n_eta());
  for (int j = 0; j < g.n_eta(); ++j) q[j] = field.speed(g.n_xi() - 1, j);
  return q;
}

/// Discrete mass flux through each xi-face line.
inline std::vector<double> cross_section_mass_flux(const PotentialField& field) {
  const FixedFrontDiscretization disc(field.grid(), field.gas(), field.reference(),
                                      std::max(field.reference().speed, 1e-300));
  const auto& w = field.deviation();
  return disc.cross_section_flux(Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size())));
}

}  // namespace transonic
