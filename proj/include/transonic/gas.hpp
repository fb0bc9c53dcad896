#pragma once

// Isentropic polytropic/isothermal closures in the scaled variables
//   p = rho^gamma / gamma,  c^2 = rho^(gamma-1),  i = (rho^(gamma-1) - 1)/(gamma - 1)
// with the isothermal limit i = ln(rho) selected exactly at gamma == 1.

#include <cmath>
#include <limits>
#include <sstream>

#include "transonic/error.hpp"

namespace transonic {

class GasModel {
 public:
  GasModel(double gamma, double b0) : gamma_(gamma), b0_(b0) {
    if (!std::isfinite(gamma) || !std::isfinite(b0) || gamma < 1.0) {
      std::ostringstream os;
      os << "gamma must be >= 1 (got " << gamma << ")";
      throw Error(ErrorKind::InvalidGasModel, os.str());
    }
    if (gamma > 1.0 && 1.0 + (gamma - 1.0) * b0 <= 0.0) {
      throw Error(ErrorKind::InvalidGasModel, "1 + (gamma-1) b0 must be positive");
    }
  }

  double gamma() const noexcept { return gamma_; }
  double b0() const noexcept { return b0_; }
  bool isothermal() const noexcept { return gamma_ == 1.0; }

  friend bool operator==(const GasModel&, const GasModel&) = default;

 private:
  double gamma_;
  double b0_;
};

struct FlowState {
  double speed;
  double density;
};

namespace detail {

// log(rho) as a function of q^2; -inf at the speed limit.
inline double log_density_sq(double q2, const GasModel& gas) {
  const double head = gas.b0() - 0.5 * q2;
  if (gas.isothermal()) return head;
  const double g1 = gas.gamma() - 1.0;
  const double base = g1 * head;
  if (base <= -1.0) return -std::numeric_limits<double>::infinity();
  return std::log1p(base) / g1;
}

}  // namespace detail

inline double max_speed(const GasModel& gas) {
  if (gas.isothermal()) {
    throw Error(ErrorKind::UnboundedForIsothermal, "no finite speed limit for gamma = 1");
  }
  return std::sqrt(2.0 * (gas.b0() + 1.0 / (gas.gamma() - 1.0)));
}

/// Speed limit, +inf in the isothermal case.
inline double speed_limit(const GasModel& gas) {
  return gas.isothermal() ? std::numeric_limits<double>::infinity() : max_speed(gas);
}

/// rho(q^2) from the Bernoulli law. Exactly 0 at the speed limit.
inline double density_from_speed_sq(double q2, const GasModel& gas) {
  if (!gas.isothermal()) {
    const double limit2 = 2.0 * (gas.b0() + 1.0 / (gas.gamma() - 1.0));
    if (q2 > limit2) {
      std::ostringstream os;
      os << "q^2 = " << q2 << " exceeds the limit " << limit2;
      throw Error(ErrorKind::SpeedExceedsLimit, os.str());
    }
    if (q2 == limit2) return 0.0;
  }
  return std::exp(detail::log_density_sq(q2, gas));
}

inline double density_from_speed(double q, const GasModel& gas) {
  if (!(q >= 0.0)) throw Error(ErrorKind::InvalidArgument, "speed must be non-negative");
  if (!gas.isothermal() && q > max_speed(gas)) {
    std::ostringstream os;
    os << "q = " << q << " exceeds max speed " << max_speed(gas);
    throw Error(ErrorKind::SpeedExceedsLimit, os.str());
  }
  if (!gas.isothermal() && q == max_speed(gas)) return 0.0;
  return density_from_speed_sq(q * q, gas);
}

/// d rho / d(q^2) = -rho / (2 c^2).
inline double density_derivative_sq(double q2, const GasModel& gas) {
  const double rho = density_from_speed_sq(q2, gas);
  if (gas.isothermal()) return -0.5 * rho;
  const double base = 1.0 + (gas.gamma() - 1.0) * (gas.b0() - 0.5 * q2);
  return -0.5 * rho / base;
}

/// d^2 rho / d(q^2)^2 = (2 - gamma) rho / (4 c^4).
inline double density_second_derivative_sq(double q2, const GasModel& gas) {
  const double rho = density_from_speed_sq(q2, gas);
  if (gas.isothermal()) return 0.25 * rho;
  const double base = 1.0 + (gas.gamma() - 1.0) * (gas.b0() - 0.5 * q2);
  return 0.25 * (2.0 - gas.gamma()) * rho / (base * base);
}

/// rho(q2_ref + dq2) / rho(q2_ref) - 1, accurate when dq2 is tiny.
inline double density_ratio_minus_one(double q2_ref, double dq2, const GasModel& gas) {
  if (gas.isothermal()) return std::expm1(-0.5 * dq2);
  const double g1 = gas.gamma() - 1.0;
  const double base_ref = 1.0 + g1 * (gas.b0() - 0.5 * q2_ref);
  const double rel = -0.5 * g1 * dq2 / base_ref;
  if (rel <= -1.0) {
    if (rel < -1.0) throw Error(ErrorKind::SpeedExceedsLimit, "perturbed speed exceeds the limit");
    return -1.0;
  }
  return std::expm1(std::log1p(rel) / g1);
}

inline double sound_speed(double rho, const GasModel& gas) {
  if (!(rho > 0.0)) throw Error(ErrorKind::NonpositiveDensity, "density must be positive");
  if (gas.isothermal()) return 1.0;
  return std::pow(rho, 0.5 * (gas.gamma() - 1.0));
}

/// Sound speed squared as a function of q^2 (equals the Bernoulli base for gamma > 1).
inline double sound_speed_sq_from_speed_sq(double q2, const GasModel& gas) {
  if (gas.isothermal()) return 1.0;
  return 1.0 + (gas.gamma() - 1.0) * (gas.b0() - 0.5 * q2);
}

inline double critical_speed(const GasModel& gas) {
  if (gas.isothermal()) return 1.0;
  const double g = gas.gamma();
  return std::sqrt(2.0 / (g + 1.0) * (1.0 + (g - 1.0) * gas.b0()));
}

/// Specific enthalpy i(rho).
inline double enthalpy(double rho, const GasModel& gas) {
  if (!(rho > 0.0)) throw Error(ErrorKind::NonpositiveDensity, "density must be positive");
  if (gas.isothermal()) return std::log(rho);
  const double g1 = gas.gamma() - 1.0;
  return std::expm1(g1 * std::log(rho)) / g1;
}

inline double bernoulli_residual(const FlowState& s, const GasModel& gas) {
  return 0.5 * s.speed * s.speed + enthalpy(s.density, gas) - gas.b0();
}

inline double mach(double q, const GasModel& gas) {
  const double rho = density_from_speed(q, gas);
  return q / sound_speed(rho, gas);
}

inline FlowState flow_state(double q, const GasModel& gas) {
  return FlowState{q, density_from_speed(q, gas)};
}

}  // namespace transonic
