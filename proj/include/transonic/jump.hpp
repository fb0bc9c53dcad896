#pragma once

#include <cmath>
#include <sstream>

#include <Eigen/Core>

#include "transonic/error.hpp"
#include "transonic/gas.hpp"

namespace transonic {

using Vec2 = Eigen::Vector2d;

struct JumpSolution {
  double u_minus;
  double rho_minus;
  double u_plus;
  double rho_plus;
  GasModel gas;
};

/// Normal mass flux rho(q^2) q; unimodal with its maximum at the critical speed.
inline double mass_flux(double q, const GasModel& gas) { return density_from_speed(q, gas) * q; }

/// d(rho q)/dq = rho (1 - M^2).
inline double mass_flux_derivative(double q, const GasModel& gas) {
  const double q2 = q * q;
  return density_from_speed_sq(q2, gas) + 2.0 * q2 * density_derivative_sq(q2, gas);
}

namespace detail {

constexpr double kBracketFloor = 1e-12;
constexpr double kBisectionWidth = 1e-12;
constexpr double kNearSonic = 1e-8;

// Root of mass_flux(q) = level on [lo, hi], where the flux is monotone with the
// given orientation; bisection followed by a bracketed Newton polish.
inline double equal_flux_root(double level, double lo, double hi, bool increasing,
                              const GasModel& gas) {
  auto g = [&](double q) { return mass_flux(q, gas) - level; };
  double a = lo, b = hi;
  while (b - a > kBisectionWidth) {
    const double mid = 0.5 * (a + b);
    const double gm = g(mid);
    if ((gm < 0.0) == increasing) {
      a = mid;
    } else {
      b = mid;
    }
  }
  double q = 0.5 * (a + b);
  for (int k = 0; k < 3; ++k) {
    const double d = mass_flux_derivative(q, gas);
    if (d == 0.0) break;
    const double next = q - g(q) / d;
    if (!(next > lo && next < hi)) break;
    q = next;
  }
  return q;
}

}  // namespace detail

/// Downstream state of the flat normal shock for a given supersonic upstream speed.
inline JumpSolution solve_normal_shock(double u_minus, const GasModel& gas) {
  const double cs = critical_speed(gas);
  if (!(u_minus > cs)) {
    std::ostringstream os;
    os << "u_minus = " << u_minus << " is not above the critical speed " << cs;
    throw Error(ErrorKind::NotSupersonic, os.str());
  }
  if (!gas.isothermal() && u_minus >= max_speed(gas)) {
    throw Error(ErrorKind::SpeedExceedsLimit, "u_minus must lie below the speed limit");
  }
  const double rho_minus = density_from_speed(u_minus, gas);
  if (u_minus - cs < detail::kNearSonic) {
    const double rho_sonic = density_from_speed(cs, gas);
    return JumpSolution{u_minus, rho_minus, cs, rho_sonic, gas};
  }
  const double level = rho_minus * u_minus;
  const double u_plus = detail::equal_flux_root(level, detail::kBracketFloor, cs, true, gas);
  return JumpSolution{u_minus, rho_minus, u_plus, density_from_speed(u_plus, gas), gas};
}

/// Supersonic speed sharing the mass flux of a subsonic one (inverse of solve_normal_shock).
inline double supersonic_partner(double u_plus, const GasModel& gas) {
  const double cs = critical_speed(gas);
  if (!(u_plus > 0.0 && u_plus < cs)) {
    throw Error(ErrorKind::InvalidArgument, "u_plus must lie in (0, c*)");
  }
  const double level = mass_flux(u_plus, gas);
  double hi = 0.0;
  if (gas.isothermal()) {
    hi = 2.0 * cs;
    while (mass_flux(hi, gas) > level) hi *= 2.0;
  } else {
    hi = max_speed(gas);
  }
  return detail::equal_flux_root(level, cs, hi, false, gas);
}

inline double rh_flux_residual(const Vec2& grad_plus, const Vec2& grad_minus, const Vec2& normal,
                               const GasModel& gas) {
  if (std::abs(normal.norm() - 1.0) > 1e-12) {
    throw Error(ErrorKind::NonUnitNormal, "shock normal must have unit length");
  }
  const double rho_p = density_from_speed_sq(grad_plus.squaredNorm(), gas);
  const double rho_m = density_from_speed_sq(grad_minus.squaredNorm(), gas);
  return rho_p * grad_plus.dot(normal) - rho_m * grad_minus.dot(normal);
}

inline bool entropy_satisfied(const JumpSolution& sol) { return sol.rho_plus > sol.rho_minus; }

}  // namespace transonic
