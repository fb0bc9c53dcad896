#pragma once

// Comparison diagnostics: psi = phi_tau - phi against the flat solution anchored at
// tau = min f, extrema classification, front/wall orthogonality, and the linear
// operator satisfied by psi.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "transonic/error.hpp"
#include "transonic/free_boundary.hpp"
#include "transonic/grid.hpp"
#include "transonic/io.hpp"
#include "transonic/subsonic_solver.hpp"

namespace transonic {

struct PsiField {
  MappedGrid grid;
  std::vector<double> psi;
  double tau = 0.0;
  int anchor_j = 0;          // front node realizing tau
  std::vector<double> g;     // (u+ - u-)(f - tau) on the front
  FlatSolution comparison;
  double exit_speed = 0.0;   // axial speed of the compared field's reference

  double value(int i, int j) const { return psi[grid.index(i, j)]; }
};

inline PsiField psi_field(const PotentialField& field, const ShockFront& front, double u_minus,
                          const GasModel& gas) {
  const auto& grid = field.grid();
  if (front.positions() != grid.front().positions()) {
    throw Error(ErrorKind::InvalidArgument, "front does not match the field's grid");
  }
  const double tau = front.min();
  const FlatSolution flat = flat_solution(tau, u_minus, gas);
  const FlatReference& ref = field.reference();
  PsiField out{grid, std::vector<double>(static_cast<std::size_t>(grid.size())), tau,
               front.argmin(), std::vector<double>(grid.n_eta()), flat, ref.speed};
  const bool same_upstream = ref.u_minus == u_minus;
  for (int i = 0; i < grid.n_xi(); ++i)
    for (int j = 0; j < grid.n_eta(); ++j) {
      const double x1 = grid.x1(i, j);
      const double w = field.deviation(i, j);
      // Both potentials share u- t on their fronts; grouping keeps psi free of O(1) cancellation.
      out.psi[grid.index(i, j)] =
          same_upstream ? (flat.u_plus - ref.speed) * (x1 - ref.t) +
                              (u_minus - flat.u_plus) * (tau - ref.t) - w
                        : flat.value(x1) - field.value(i, j);
    }
  for (int j = 0; j < grid.n_eta(); ++j) out.g[j] = (flat.u_plus - u_minus) * (front[j] - tau);
  return out;
}

enum class NodeTag { Interior, Front, Exit, Wall, Corner };

inline const char* to_string(NodeTag t) {
  switch (t) {
    case NodeTag::Interior: return "interior";
    case NodeTag::Front: return "front";
    case NodeTag::Exit: return "exit";
    case NodeTag::Wall: return "wall";
    case NodeTag::Corner: return "corner";
  }
  return "?";
}

/// Tag precedence: corner over the single boundary pieces over interior.
inline NodeTag node_tag(const MappedGrid& g, int i, int j) {
  const bool xi_edge = i == 0 || i == g.n_xi() - 1;
  const bool eta_edge = j == 0 || j == g.n_eta() - 1;
  if (xi_edge && eta_edge) return NodeTag::Corner;
  if (i == 0) return NodeTag::Front;
  if (i == g.n_xi() - 1) return NodeTag::Exit;
  if (eta_edge) return NodeTag::Wall;
  return NodeTag::Interior;
}

struct Extremum {
  double value = 0.0;
  int i = 0;
  int j = 0;
  NodeTag tag = NodeTag::Interior;

  bool on_front() const { return i == 0; }
};

struct ExtremaReport {
  Extremum min;
  Extremum max;
  bool constant = false;          // max - min < 1e-13: the degenerate converged case
  bool requires_min = true;       // c1 <= u+: the minimum must sit on the front
  bool required_on_front = false;
  bool some_extremum_on_front = false;
  double interior_excess = 0.0;   // how far interior values overshoot the boundary range
  double front_normal_quotient = 0.0;  // (psi(1,j) - psi(0,j)) / dx1 at the required extremum
};

inline ExtremaReport extrema_report(const PsiField& p) {
  const auto& g = p.grid;
  ExtremaReport r;
  r.min.value = std::numeric_limits<double>::infinity();
  r.max.value = -r.min.value;
  double bmin = r.min.value, bmax = r.max.value;
  double imin = r.min.value, imax = r.max.value;
  for (int i = 0; i < g.n_xi(); ++i)
    for (int j = 0; j < g.n_eta(); ++j) {
      const double v = p.value(i, j);
      const NodeTag tag = node_tag(g, i, j);
      // Ties go to the higher-precedence tag, then to the front row.
      auto better = [&](const Extremum& e, bool less) {
        if (less ? v < e.value : v > e.value) return true;
        if (v != e.value) return false;
        return static_cast<int>(tag) > static_cast<int>(e.tag) || (tag == e.tag && i < e.i);
      };
      if (better(r.min, true)) r.min = Extremum{v, i, j, tag};
      if (better(r.max, false)) r.max = Extremum{v, i, j, tag};
      if (tag == NodeTag::Interior) {
        imin = std::min(imin, v);
        imax = std::max(imax, v);
      } else {
        bmin = std::min(bmin, v);
        bmax = std::max(bmax, v);
      }
    }
  r.constant = r.max.value - r.min.value < 1e-13;
  r.requires_min = p.exit_speed <= p.comparison.u_plus;
  const Extremum& req = r.requires_min ? r.min : r.max;
  r.required_on_front = req.on_front();
  r.some_extremum_on_front = r.min.on_front() || r.max.on_front();
  if (imin <= imax) r.interior_excess = std::max({0.0, imax - bmax, bmin - imin});
  const double dx1 = g.dxi() * g.x1_xi(req.j);
  r.front_normal_quotient = (p.value(1, req.j) - p.value(0, req.j)) / dx1;
  return r;
}

struct OrthogonalityRecord {
  double h = 0.0;
  double slope_wall0 = 0.0;
  double slope_wall1 = 0.0;
  double axial_speed_wall0 = 0.0;  // downstream d(phi)/dx1 at the wall front nodes
  double axial_speed_wall1 = 0.0;
  double u_minus = 0.0;

  double max_slope() const { return std::max(std::abs(slope_wall0), std::abs(slope_wall1)); }
  bool below_upstream() const { return axial_speed_wall0 < u_minus && axial_speed_wall1 < u_minus; }
};

inline OrthogonalityRecord check_orthogonality(const TransonicResult& result) {
  if (result.verdict != Verdict::Converged) {
    throw Error(ErrorKind::InvalidArgument, "orthogonality needs a converged result");
  }
  const auto [s0, s1] = front_wall_slope(result.front);
  const auto& g = result.field.grid();
  return OrthogonalityRecord{result.front.spacing(),
                             s0,
                             s1,
                             result.field.gradient(0, 0)[0],
                             result.field.gradient(0, g.n_eta() - 1)[0],
                             result.field.reference().u_minus};
}

struct OrthogonalityStudy {
  std::vector<OrthogonalityRecord> rows;
  std::vector<double> observed_order;  // log2 of successive max-slope ratios
  std::vector<Verdict> verdicts;
};

/// Converged fronts on n_eta = 1/h + 1 nodes (n_xi equal) for each h in cells.
inline OrthogonalityStudy orthogonality_study(const ExperimentConfig& base,
                                              const std::vector<int>& cells) {
  OrthogonalityStudy out;
  for (int n : cells) {
    ExperimentConfig cfg = base;
    cfg.n_xi = cfg.n_eta = n + 1;
    const auto res = solve_transonic(cfg);
    out.verdicts.push_back(res.verdict);
    if (res.verdict != Verdict::Converged) continue;
    out.rows.push_back(check_orthogonality(res));
  }
  for (std::size_t k = 1; k < out.rows.size(); ++k)
    out.observed_order.push_back(std::log2(out.rows[k - 1].max_slope() / out.rows[k].max_slope()));
  return out;
}

struct LinearizedCoefficients {
  std::vector<Mat2> a;         // nodal second-order coefficients A(grad phi_a)
  std::vector<Vec2> b;         // nodal first-order coefficients (secant form)
  std::vector<double> l_psi;   // conservative discrete L psi on interior rows
  double max_abs_l_psi = 0.0;
  double min_eigenvalue = std::numeric_limits<double>::infinity();       // nodal a
  double min_face_eigenvalue = std::numeric_limits<double>::infinity();  // sym. part of face matrices
  double ellipticity_bound = 0.0;  // rho_min (1 - M_max^2) over both fields
};

namespace detail {

// Node-wise physical Hessian of a field on its mapped grid (second-order, one-sided at edges).
inline std::vector<Mat2> nodal_hessian(const PotentialField& f) {
  const auto& g = f.grid();
  std::vector<Vec2> grad(static_cast<std::size_t>(g.size()));
  for (int i = 0; i < g.n_xi(); ++i)
    for (int j = 0; j < g.n_eta(); ++j) grad[g.index(i, j)] = f.deviation_gradient(i, j);
  std::vector<Mat2> h(grad.size());
  for (int i = 0; i < g.n_xi(); ++i)
    for (int j = 0; j < g.n_eta(); ++j) {
      const auto dx = first_derivative(i, g.n_xi(), g.dxi());
      const auto de = first_derivative(j, g.n_eta(), g.deta());
      Vec2 d_xi = Vec2::Zero(), d_eta = Vec2::Zero();
      for (int m = 0; m < 3; ++m) {
        d_xi += dx.weight[m] * grad[g.index(i + dx.offset[m], j)];
        d_eta += de.weight[m] * grad[g.index(i, j + de.offset[m])];
      }
      const Vec2 d1 = d_xi / g.x1_xi(j);
      const Vec2 d2 = d_eta - g.x1_eta(i, j) * d1;
      Mat2 m;
      m.col(0) = d1;
      m.col(1) = d2;
      h[g.index(i, j)] = 0.5 * (m + m.transpose());
    }
  return h;
}

inline double min_sym_eigenvalue(const Mat2& m) {
  const Mat2 s = 0.5 * (m + m.transpose());
  return Eigen::SelfAdjointEigenSolver<Mat2>(s, Eigen::EigenvaluesOnly).eigenvalues()[0];
}

// (rho(|p|^2) - rho(|q|^2)) / (|p|^2 - |q|^2), or d rho / d(q^2) when the speeds coincide.
inline double density_secant(const Vec2& p, const Vec2& q, const GasModel& gas) {
  const double p2 = p.squaredNorm(), q2 = q.squaredNorm();
  if ((p - q).norm() < 1e-10 || p2 == q2) return density_derivative_sq(0.5 * (p2 + q2), gas);
  return (density_from_speed_sq(p2, gas) - density_from_speed_sq(q2, gas)) / (p2 - q2);
}

}  // namespace detail

/// Coefficients of L psi = N(phi_a) - N(phi) for psi = phi_a - phi on the common grid.
inline LinearizedCoefficients assemble_linearized(const PotentialField& field_a,
                                                  const PotentialField& field) {
  const auto& g = field.grid();
  const auto& ga = field_a.grid();
  if (ga.n_xi() != g.n_xi() || ga.front().positions() != g.front().positions() ||
      ga.x_exit() != g.x_exit()) {
    throw Error(ErrorKind::InvalidArgument, "fields must share one grid");
  }
  const GasModel& gas = field.gas();
  LinearizedCoefficients out;
  const int size = g.size();
  out.a.resize(size);
  out.b.resize(size);
  out.l_psi.assign(size, 0.0);

  double rho_min = std::numeric_limits<double>::infinity(), mach_max = 0.0;
  const auto hess = detail::nodal_hessian(field);
  const double cs = critical_speed(gas);
  for (int i = 0; i < g.n_xi(); ++i)
    for (int j = 0; j < g.n_eta(); ++j) {
      const int k = g.index(i, j);
      const Vec2 pa = field_a.gradient(i, j), p = field.gradient(i, j);
      if (!(pa.norm() < cs && p.norm() < cs)) {
        throw Error(ErrorKind::SonicDegeneracy, "linearization needs subsonic nodes in both fields");
      }
      for (const Vec2& v : {pa, p}) {
        rho_min = std::min(rho_min, density_from_speed_sq(v.squaredNorm(), gas));
        mach_max = std::max(mach_max, transonic::mach(v.norm(), gas));
      }
      out.a[k] = coefficient_matrix(pa, gas);
      out.min_eigenvalue = std::min(out.min_eigenvalue, detail::min_sym_eigenvalue(out.a[k]));
      // (A(pa) - A(p)) : D^2 phi = b . (pa - p); rank-one secant, analytic gradient at zero increment.
      const Vec2 d = pa - p;
      if (d.norm() < 1e-10) {
        const double q2 = p.squaredNorm();
        const double r1 = density_derivative_sq(q2, gas), r2 = density_second_derivative_sq(q2, gas);
        const Mat2& hs = hess[k];
        const double trace = hs.trace();
        const double php = p.dot(hs * p);
        out.b[k] = 2.0 * r1 * trace * p + 4.0 * r2 * php * p + 4.0 * r1 * (hs * p);
      } else {
        const Mat2 da = coefficient_matrix(pa, gas) - coefficient_matrix(p, gas);
        const double contraction = (da.array() * hess[k].array()).sum();
        out.b[k] = contraction * d / d.squaredNorm();
      }
    }
  out.ellipticity_bound = rho_min * (1.0 - mach_max * mach_max);

  // Conservative form on the solver's faces: F(pa) - F(p) = [rho_a I + s p (pa + p)^T] grad psi.
  const FixedFrontDiscretization disc(g, gas, field.reference(), field.reference().speed);
  const FixedFrontDiscretization disc_a(ga, gas, field_a.reference(),
                                        std::max(field_a.reference().speed, 1e-300));
  const auto& w = field.deviation();
  const auto& wa = field_a.deviation();
  const Vector wv = Eigen::Map<const Vector>(w.data(), size);
  const Vector wav = Eigen::Map<const Vector>(wa.data(), size);
  const int nx = g.n_xi(), ne = g.n_eta();

  auto face_grad = [&](const detail::Stencil& st, const Vector& dev, double ref_speed, double wgt,
                       double x1e) {
    const auto [d_xi, d_eta] = st.apply(dev);
    const double d1 = d_xi / wgt;
    return Vec2(ref_speed + d1, d_eta - x1e * d1);
  };
  auto face_term = [&](const Vec2& pa, const Vec2& p) {
    const double rho_a = density_from_speed_sq(pa.squaredNorm(), gas);
    const double s = detail::density_secant(pa, p, gas);
    const Mat2 abar = rho_a * Mat2::Identity() + s * p * (pa + p).transpose();
    out.min_face_eigenvalue = std::min(out.min_face_eigenvalue, detail::min_sym_eigenvalue(abar));
    return Vec2(abar * (pa - p));
  };
  auto interior_row = [&](int i) { return i >= 1 && i <= nx - 2; };

  for (int i = 0; i + 1 < nx; ++i) {
    const double xi_face = (i + 0.5) * g.dxi();
    for (int j = 0; j < ne; ++j) {
      const auto st = disc.xi_face_stencil(i, j);
      const double wgt = g.x1_xi(j);
      const double x1e = (1.0 - xi_face) * g.front_slope(j);
      const Vec2 p = face_grad(st, wv, field.reference().speed, wgt, x1e);
      const Vec2 pa = face_grad(disc_a.xi_face_stencil(i, j), wav, field_a.reference().speed, wgt, x1e);
      const Vec2 q = face_term(pa, p);
      const double flux = q[0] - x1e * q[1];
      const double scale = ((j == 0 || j == ne - 1) ? 0.5 : 1.0) / g.dxi();
      if (interior_row(i)) out.l_psi[g.index(i, j)] += scale * flux;
      if (interior_row(i + 1)) out.l_psi[g.index(i + 1, j)] -= scale * flux;
    }
  }
  for (int i = 1; i + 1 < nx; ++i) {
    for (int j = 0; j + 1 < ne; ++j) {
      const auto st = disc.eta_face_stencil(i, j);
      const double wgt = g.x_exit() - 0.5 * (g.front()[j] + g.front()[j + 1]);
      const double x1e = (1.0 - g.xi(i)) * (g.front()[j + 1] - g.front()[j]) / g.deta();
      const Vec2 p = face_grad(st, wv, field.reference().speed, wgt, x1e);
      const Vec2 pa = face_grad(disc_a.eta_face_stencil(i, j), wav, field_a.reference().speed, wgt, x1e);
      const double flux = wgt * face_term(pa, p)[1];
      out.l_psi[g.index(i, j)] += flux / g.deta();
      out.l_psi[g.index(i, j + 1)] -= flux / g.deta();
    }
  }
  for (int i = 1; i + 1 < nx; ++i)
    for (int j = 0; j < ne; ++j)
      out.max_abs_l_psi = std::max(out.max_abs_l_psi, std::abs(out.l_psi[g.index(i, j)]));
  return out;
}

/// Cross-section oscillation max - min of psi at each station, against the flat
/// solution matched to the field's reference.
inline std::vector<double> cross_section_oscillation(const PotentialField& field,
                                                     const std::vector<double>& stations) {
  std::vector<double> out;
  out.reserve(stations.size());
  for (double x1 : stations) out.push_back(cross_section_deviation_osc(field, x1));
  return out;
}

/// t0 + sum of a_m cos(m pi eta) for m = 1, 2, 3 with a_m uniform in +-(0.03, 0.015, 0.01).
/// Cosine modes meet the walls at right angles.
inline ShockFront random_cosine_front(int n_eta, double t0, double x_exit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double a1 = 0.03 * u(rng), a2 = 0.015 * u(rng), a3 = 0.01 * u(rng);
  constexpr double pi = std::numbers::pi;
  return ShockFront::from_function(
      n_eta,
      [&](double e) {
        return t0 + a1 * std::cos(pi * e) + a2 * std::cos(2 * pi * e) + a3 * std::cos(3 * pi * e);
      },
      x_exit);
}

/// All comparison diagnostics for one fixed-front solve.
struct ComparisonRun {
  FixedFrontSolution solution;
  PsiField psi;
  ExtremaReport extrema;
  LinearizedCoefficients linearized;
  double max_front_psi = 0.0;  // max over front nodes of psi
  double anchor_psi = 0.0;
};

inline ComparisonRun compare_fixed_front(const ExperimentConfig& cfg, const ShockFront& front) {
  auto sol = FixedFrontSolver(cfg.gas, cfg.u_minus, cfg.resolved_exit_speed(), cfg.solver)
                 .solve(front, cfg.n_xi);
  PsiField psi = psi_field(sol.field, front, cfg.u_minus, cfg.gas);
  ExtremaReport rep = extrema_report(psi);
  const PotentialField fa = sample_flat_field(sol.field.grid(), cfg.gas, psi.comparison);
  LinearizedCoefficients lin = assemble_linearized(fa, sol.field);
  double fmax = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < psi.grid.n_eta(); ++j) fmax = std::max(fmax, psi.value(0, j));
  const double anchor = psi.value(0, psi.anchor_j);
  return ComparisonRun{std::move(sol), std::move(psi), rep, std::move(lin), fmax, anchor};
}

/// Rows of extrema.csv (run_id,kind,tag,i,j,value).
inline void write_extrema_rows(io::CsvWriter& csv, const std::string& run_id,
                               const ExtremaReport& r) {
  for (const auto& [kind, e] : {std::pair<const char*, const Extremum*>{"min", &r.min},
                                std::pair<const char*, const Extremum*>{"max", &r.max}}) {
    csv.row({run_id, kind, to_string(e->tag), std::to_string(e->i), std::to_string(e->j),
             io::format_double(e->value)});
  }
}

}  // namespace transonic
