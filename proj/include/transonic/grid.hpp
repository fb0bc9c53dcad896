#pragma once

// Shock front and the shock-fitted map of the subsonic region
//   x1 = f(eta) + xi (X_exit - f(eta)),  x2 = eta,  (xi, eta) in [0,1]^2
// The front sits on xi = 0 and the exit on xi = 1. Nodes are uniform in (xi, eta).

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "transonic/error.hpp"
#include "transonic/gas.hpp"
#include "transonic/io.hpp"

namespace transonic {

using Vec2 = Eigen::Vector2d;

namespace detail {

/// Second-order first-derivative weights at index k of n uniformly spaced nodes.
struct FirstDerivative {
  std::array<int, 3> offset;
  std::array<double, 3> weight;
};

inline FirstDerivative first_derivative(int k, int n, double h) {
  const double s = 0.5 / h;
  if (k == 0) return {{0, 1, 2}, {-3.0 * s, 4.0 * s, -1.0 * s}};
  if (k == n - 1) return {{0, -1, -2}, {3.0 * s, -4.0 * s, 1.0 * s}};
  return {{-1, 1, 0}, {-s, s, 0.0}};
}

inline double apply(const FirstDerivative& d, const std::function<double(int)>& v, int k) {
  double acc = 0.0;
  for (int m = 0; m < 3; ++m) {
    if (d.weight[m] != 0.0) acc += d.weight[m] * v(k + d.offset[m]);
  }
  return acc;
}

}  // namespace detail

class ShockFront {
 public:
  ShockFront(std::vector<double> positions, double x_exit)
      : f_(std::move(positions)), exit_(x_exit) {
    if (f_.size() < 3) throw Error(ErrorKind::DegenerateFront, "front needs at least 3 nodes");
    for (double v : f_) {
      if (!std::isfinite(v) || !(v > entry() && v < exit_)) {
        std::ostringstream os;
        os << "front position " << v << " outside (" << entry() << ", " << exit_ << ")";
        throw Error(ErrorKind::DegenerateFront, os.str());
      }
    }
    if (!(max() - min() < exit_ - max())) {
      throw Error(ErrorKind::DegenerateFront, "front spread swallows the subsonic region");
    }
  }

  static ShockFront flat(int n_eta, double t, double x_exit) {
    return ShockFront(std::vector<double>(n_eta, t), x_exit);
  }

  /// t0 + amplitude * sin(mode * pi * eta).
  static ShockFront sinusoidal(int n_eta, double t0, double amplitude, int mode, double x_exit) {
    return from_function(
        n_eta, [&](double eta) { return t0 + amplitude * std::sin(mode * std::numbers::pi * eta); },
        x_exit);
  }

  static ShockFront from_function(int n_eta, const std::function<double(double)>& f,
                                  double x_exit) {
    if (n_eta < 3) throw Error(ErrorKind::DegenerateFront, "front needs at least 3 nodes");
    std::vector<double> v(n_eta);
    for (int j = 0; j < n_eta; ++j) v[j] = f(static_cast<double>(j) / (n_eta - 1));
    return ShockFront(std::move(v), x_exit);
  }

  int n_eta() const noexcept { return static_cast<int>(f_.size()); }
  double spacing() const noexcept { return 1.0 / (n_eta() - 1); }
  double eta(int j) const noexcept { return j * spacing(); }
  double operator[](int j) const { return f_[static_cast<std::size_t>(j)]; }
  const std::vector<double>& positions() const noexcept { return f_; }
  static constexpr double entry() noexcept { return -1.0; }
  double exit() const noexcept { return exit_; }

  double min() const { return *std::min_element(f_.begin(), f_.end()); }
  double max() const { return *std::max_element(f_.begin(), f_.end()); }
  double mean() const { return std::accumulate(f_.begin(), f_.end(), 0.0) / f_.size(); }
  int argmin() const {
    return static_cast<int>(std::min_element(f_.begin(), f_.end()) - f_.begin());
  }
  /// max |f - mean f|.
  double flatness() const {
    const double m = mean();
    double r = 0.0;
    for (double v : f_) r = std::max(r, std::abs(v - m));
    return r;
  }

  /// Second-order f' at node j (centered inside, one-sided at the walls).
  double derivative(int j) const {
    const auto d = detail::first_derivative(j, n_eta(), spacing());
    return detail::apply(d, [&](int k) { return f_[k]; }, j);
  }

 private:
  std::vector<double> f_;
  double exit_;
};

/// One-sided second-order f' at eta = 0 and eta = 1.
inline std::pair<double, double> front_wall_slope(const ShockFront& front) {
  if (front.n_eta() < 4) throw Error(ErrorKind::InvalidArgument, "wall slope needs >= 4 nodes");
  return {front.derivative(0), front.derivative(front.n_eta() - 1)};
}

class MappedGrid {
 public:
  MappedGrid(ShockFront front, int n_xi) : front_(std::move(front)), n_xi_(n_xi) {
    if (n_xi_ < 3) throw Error(ErrorKind::InvalidArgument, "n_xi must be >= 3");
    const int m = n_eta();
    fprime_.resize(m);
    for (int j = 0; j < m; ++j) fprime_[j] = front_.derivative(j);
    x1_.resize(static_cast<std::size_t>(n_xi_) * m);
    for (int i = 0; i < n_xi_; ++i) {
      for (int j = 0; j < m; ++j) {
        if (!(x1_xi(j) > 0.0)) throw Error(ErrorKind::DegenerateFront, "non-positive Jacobian");
        x1_[index(i, j)] = map_node(i, j);
      }
    }
  }

  int n_xi() const noexcept { return n_xi_; }
  int n_eta() const noexcept { return front_.n_eta(); }
  int size() const noexcept { return n_xi_ * n_eta(); }
  int index(int i, int j) const noexcept { return i * n_eta() + j; }
  double dxi() const noexcept { return 1.0 / (n_xi_ - 1); }
  double deta() const noexcept { return front_.spacing(); }
  double xi(int i) const noexcept { return i * dxi(); }
  double eta(int j) const noexcept { return front_.eta(j); }

  const ShockFront& front() const noexcept { return front_; }
  double x_exit() const noexcept { return front_.exit(); }
  double front_slope(int j) const { return fprime_[j]; }

  double x1(int i, int j) const { return x1_[index(i, j)]; }
  double x2(int j) const noexcept { return eta(j); }

  /// Recomputes a node's physical x1 from its mapped coordinates.
  double map_node(int i, int j) const { return front_[j] + xi(i) * x1_xi(j); }

  double x1_xi(int j) const { return x_exit() - front_[j]; }
  double x1_eta(int i, int j) const { return (1.0 - xi(i)) * fprime_[j]; }
  double jacobian(int i, int j) const {
    (void)i;
    return x1_xi(j);
  }

 private:
  ShockFront front_;
  int n_xi_;
  std::vector<double> fprime_;
  std::vector<double> x1_;
};

inline MappedGrid build_mapped_grid(const ShockFront& front, double x_exit, int n_xi, int n_eta) {
  if (n_eta != front.n_eta()) {
    throw Error(ErrorKind::InvalidArgument, "n_eta must match the front sampling");
  }
  if (n_eta < 3) throw Error(ErrorKind::InvalidArgument, "n_eta must be >= 3");
  if (x_exit != front.exit()) {
    throw Error(ErrorKind::InvalidArgument, "x_exit must match the front's exit");
  }
  return MappedGrid(front, n_xi);
}

/// Flat reference potential speed (x1 - t) + u_minus t. The flat shock solution
/// downstream of x1 = t when speed = u_plus.
struct FlatReference {
  double speed = 0.0;
  double t = 0.0;
  double u_minus = 0.0;

  double value(double x1) const { return speed * (x1 - t) + u_minus * t; }
};

/// Potential on the mapped grid stored as reference + deviation; every gradient is
/// (speed, 0) + grad(deviation), so tiny deviations keep full relative precision.
class PotentialField {
 public:
  PotentialField(MappedGrid grid, GasModel gas, FlatReference ref, std::vector<double> deviation)
      : grid_(std::move(grid)), gas_(gas), ref_(ref), dev_(std::move(deviation)) {
    if (static_cast<int>(dev_.size()) != grid_.size()) {
      throw Error(ErrorKind::InvalidArgument, "deviation size does not match the grid");
    }
  }

  /// Samples an arbitrary potential phi(x1, x2) with a zero reference.
  static PotentialField sample(MappedGrid grid, GasModel gas,
                               const std::function<double(double, double)>& phi) {
    std::vector<double> v(grid.size());
    for (int i = 0; i < grid.n_xi(); ++i)
      for (int j = 0; j < grid.n_eta(); ++j) v[grid.index(i, j)] = phi(grid.x1(i, j), grid.x2(j));
    return PotentialField(std::move(grid), gas, FlatReference{}, std::move(v));
  }

  const MappedGrid& grid() const noexcept { return grid_; }
  const GasModel& gas() const noexcept { return gas_; }
  const FlatReference& reference() const noexcept { return ref_; }
  const std::vector<double>& deviation() const noexcept { return dev_; }
  double deviation(int i, int j) const { return dev_[grid_.index(i, j)]; }

  double value(int i, int j) const { return ref_.value(grid_.x1(i, j)) + deviation(i, j); }

  /// Physical gradient of the deviation only.
  Vec2 deviation_gradient(int i, int j) const {
    const auto dx = detail::first_derivative(i, grid_.n_xi(), grid_.dxi());
    const auto de = detail::first_derivative(j, grid_.n_eta(), grid_.deta());
    const double d_xi = detail::apply(dx, [&](int k) { return deviation(k, j); }, i);
    const double d_eta = detail::apply(de, [&](int k) { return deviation(i, k); }, j);
    const double d1 = d_xi / grid_.x1_xi(j);
    return Vec2(d1, d_eta - grid_.x1_eta(i, j) * d1);
  }

  Vec2 gradient(int i, int j) const { return Vec2(ref_.speed, 0.0) + deviation_gradient(i, j); }
  double speed(int i, int j) const { return gradient(i, j).norm(); }
  double density(int i, int j) const { return density_from_speed_sq(gradient(i, j).squaredNorm(), gas_); }
  double mach(int i, int j) const { return transonic::mach(speed(i, j), gas_); }

  bool subsonic_verified() const noexcept { return subsonic_verified_; }

  /// Flags the field when every node is strictly below the critical speed.
  bool verify_subsonic() {
    const double cs = critical_speed(gas_);
    subsonic_verified_ = true;
    for (int i = 0; i < grid_.n_xi() && subsonic_verified_; ++i)
      for (int j = 0; j < grid_.n_eta(); ++j)
        if (!(speed(i, j) < cs)) {
          subsonic_verified_ = false;
          break;
        }
    return subsonic_verified_;
  }

  /// Deviation interpolated (cubic in xi) at physical x1 along node column j.
  double deviation_at(double x1, int j) const {
    const double w = grid_.x1_xi(j);
    const double xi = (x1 - grid_.front()[j]) / w;
    if (!(xi >= -1e-12 && xi <= 1.0 + 1e-12)) {
      throw Error(ErrorKind::StationOutsideRegion, "station outside the subsonic region");
    }
    const int n = grid_.n_xi();
    const double s = std::clamp(xi, 0.0, 1.0) / grid_.dxi();
    int base = std::clamp(static_cast<int>(std::floor(s)) - 1, 0, n - 4);
    double acc = 0.0;
    for (int a = 0; a < 4; ++a) {
      double l = 1.0;
      for (int b = 0; b < 4; ++b)
        if (b != a) l *= (s - (base + b)) / static_cast<double>(a - b);
      acc += l * deviation(base + a, j);
    }
    return acc;
  }

  double value_at(double x1, int j) const { return ref_.value(x1) + deviation_at(x1, j); }

 private:
  MappedGrid grid_;
  GasModel gas_;
  FlatReference ref_;
  std::vector<double> dev_;
  bool subsonic_verified_ = false;
};

inline Vec2 physical_gradient(const PotentialField& field, int i, int j) {
  return field.gradient(i, j);
}

/// x1,x2,phi,dphi_dx1,dphi_dx2,density,mach; node order i-major.
inline void write_field_csv(const PotentialField& field, std::ostream& os) {
  io::CsvWriter csv(os, {"x1", "x2", "phi", "dphi_dx1", "dphi_dx2", "density", "mach"});
  const auto& g = field.grid();
  for (int i = 0; i < g.n_xi(); ++i) {
    for (int j = 0; j < g.n_eta(); ++j) {
      const Vec2 grad = field.gradient(i, j);
      const double rho = density_from_speed_sq(grad.squaredNorm(), field.gas());
      const double c = sound_speed(rho, field.gas());
      csv.row({io::format_double(g.x1(i, j)), io::format_double(g.x2(j)),
               io::format_double(field.value(i, j)), io::format_double(grad[0]),
               io::format_double(grad[1]), io::format_double(rho),
               io::format_double(grad.norm() / c)});
    }
  }
}

}  // namespace transonic
