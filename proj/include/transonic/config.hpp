#pragma once

// Flat `key = value` run configuration with `#` comments.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "transonic/error.hpp"
#include "transonic/free_boundary.hpp"
#include "transonic/io.hpp"

namespace transonic {

enum class Expectation { Converged, NoSolution, Any };

inline const char* to_string(Expectation e) {
  switch (e) {
    case Expectation::Converged: return "converged";
    case Expectation::NoSolution: return "nosolution";
    case Expectation::Any: return "any";
  }
  return "?";
}

struct RunConfig {
  double gamma = 1.4;
  double b0 = 2.0;
  ExperimentConfig base;  // gas is rebuilt from gamma and b0 by experiment()
  Expectation expect = Expectation::Any;
  std::uint64_t seed = 0;
  std::vector<double> long_lengths{4.0, 8.0, 16.0};
  int long_cells_per_unit = 16;
  int compare_random_fronts = 0;

  ExperimentConfig experiment() const {
    ExperimentConfig cfg = base;
    cfg.gas = GasModel(gamma, b0);
    return cfg;
  }

  bool accepts(Verdict v) const {
    switch (expect) {
      case Expectation::Converged: return v == Verdict::Converged;
      case Expectation::NoSolution: return v == Verdict::NoSolution;
      case Expectation::Any: return true;
    }
    return false;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] inline void config_error(const std::string& key, const std::string& msg) {
  throw Error(ErrorKind::ConfigParse, key + ": " + msg);
}

inline double parse_number(const std::string& key, std::string_view v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
    config_error(key, "expected a finite number, got '" + std::string(v) + "'");
  }
  return out;
}

inline long long parse_integer(const std::string& key, std::string_view v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    config_error(key, "expected an integer, got '" + std::string(v) + "'");
  }
  return out;
}

inline int parse_int(const std::string& key, std::string_view v) {
  const long long x = parse_integer(key, v);
  if (x < -1000000000LL || x > 1000000000LL) config_error(key, "integer out of range");
  return static_cast<int>(x);
}

inline bool parse_bool(const std::string& key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  config_error(key, "expected true or false");
}

inline std::vector<double> parse_list(const std::string& key, std::string_view v) {
  std::vector<double> out;
  while (!v.empty()) {
    const auto c = v.find(',');
    out.push_back(parse_number(key, trim(v.substr(0, c))));
    if (c == std::string_view::npos) break;
    v.remove_prefix(c + 1);
  }
  if (out.empty()) config_error(key, "empty list");
  return out;
}

inline std::string join(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t k = 0; k < xs.size(); ++k) s += (k ? "," : "") + io::format_double(xs[k]);
  return s;
}

}  // namespace detail

/// Apply one setting; unknown keys and malformed values raise ConfigParse.
inline void apply_setting(RunConfig& rc, const std::string& key, std::string_view raw) {
  using namespace detail;
  const std::string_view v = trim(raw);
  ExperimentConfig& c = rc.base;
  if (key == "gas.gamma") rc.gamma = parse_number(key, v);
  else if (key == "gas.b0") rc.b0 = parse_number(key, v);
  else if (key == "flow.u_minus") c.u_minus = parse_number(key, v);
  else if (key == "flow.c1") {
    if (v == "auto") c.exit_speed.reset();
    else c.exit_speed = parse_number(key, v);
  } else if (key == "duct.x_exit") c.x_exit = parse_number(key, v);
  else if (key == "grid.n_xi") c.n_xi = parse_int(key, v);
  else if (key == "grid.n_eta") c.n_eta = parse_int(key, v);
  else if (key == "front.t0") c.t0 = parse_number(key, v);
  else if (key == "front.perturb_amp") c.perturb_amp = parse_number(key, v);
  else if (key == "front.perturb_modes") c.perturb_modes = parse_int(key, v);
  else if (key == "front.shape") {
    if (v == "sine") c.shape = FrontShape::Sine;
    else if (v == "cosine") c.shape = FrontShape::Cosine;
    else config_error(key, "expected sine or cosine");
  } else if (key == "front.pin") c.front.pin = parse_bool(key, v);
  else if (key == "solver.newton_tol") c.solver.newton_tol = parse_number(key, v);
  else if (key == "solver.margin_floor") c.solver.margin_floor = parse_number(key, v);
  else if (key == "solver.max_newton") c.solver.max_newton = parse_int(key, v);
  else if (key == "solver.fb_tol") c.front.fb_tol = parse_number(key, v);
  else if (key == "solver.max_outer") c.front.max_outer = parse_int(key, v);
  else if (key == "solver.step_scale") c.front.step_scale = parse_number(key, v);
  else if (key == "solver.stall_window") c.front.stall_window = parse_int(key, v);
  else if (key == "solver.jump_tol") c.front.jump_tol = parse_number(key, v);
  else if (key == "seed") {
    const long long s = parse_integer(key, v);
    if (s < 0) config_error(key, "seed must be non-negative");
    rc.seed = static_cast<std::uint64_t>(s);
  } else if (key == "expect") {
    if (v == "converged") rc.expect = Expectation::Converged;
    else if (v == "nosolution") rc.expect = Expectation::NoSolution;
    else if (v == "any") rc.expect = Expectation::Any;
    else config_error(key, "expected converged, nosolution or any");
  } else if (key == "long.lengths") rc.long_lengths = parse_list(key, v);
  else if (key == "long.cells_per_unit") rc.long_cells_per_unit = parse_int(key, v);
  else if (key == "compare.random_fronts") rc.compare_random_fronts = parse_int(key, v);
  else config_error(key, "unknown key");
}

/// Canonical key/value echo; feeding it back through apply_setting reproduces rc.
inline std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& rc) {
  using io::format_double;
  const ExperimentConfig& c = rc.base;
  return {
      {"gas.gamma", format_double(rc.gamma)},
      {"gas.b0", format_double(rc.b0)},
      {"flow.u_minus", format_double(c.u_minus)},
      {"flow.c1", c.exit_speed ? format_double(*c.exit_speed) : "auto"},
      {"duct.x_exit", format_double(c.x_exit)},
      {"grid.n_xi", std::to_string(c.n_xi)},
      {"grid.n_eta", std::to_string(c.n_eta)},
      {"front.t0", format_double(c.t0)},
      {"front.perturb_amp", format_double(c.perturb_amp)},
      {"front.perturb_modes", std::to_string(c.perturb_modes)},
      {"front.shape", c.shape == FrontShape::Sine ? "sine" : "cosine"},
      {"front.pin", c.front.pin ? "true" : "false"},
      {"solver.newton_tol", format_double(c.solver.newton_tol)},
      {"solver.margin_floor", format_double(c.solver.margin_floor)},
      {"solver.max_newton", std::to_string(c.solver.max_newton)},
      {"solver.fb_tol", format_double(c.front.fb_tol)},
      {"solver.max_outer", std::to_string(c.front.max_outer)},
      {"solver.step_scale", format_double(c.front.step_scale)},
      {"solver.stall_window", std::to_string(c.front.stall_window)},
      {"solver.jump_tol", format_double(c.front.jump_tol)},
      {"seed", std::to_string(rc.seed)},
      {"expect", to_string(rc.expect)},
      {"long.lengths", detail::join(rc.long_lengths)},
      {"long.cells_per_unit", std::to_string(rc.long_cells_per_unit)},
      {"compare.random_fronts", std::to_string(rc.compare_random_fronts)},
  };
}

/// Reads `key = value` lines into rc; `origin` labels error messages.
inline void parse_config(std::istream& in, RunConfig& rc, const std::string& origin = "config") {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = line;
    if (const auto h = s.find('#'); h != std::string_view::npos) s = s.substr(0, h);
    s = detail::trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::ConfigParse,
                  origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key(detail::trim(s.substr(0, eq)));
    if (key.empty()) {
      throw Error(ErrorKind::ConfigParse, origin + ":" + std::to_string(lineno) + ": empty key");
    }
    apply_setting(rc, key, s.substr(eq + 1));
  }
}

inline RunConfig parse_config_string(const std::string& text) {
  RunConfig rc;
  std::istringstream in(text);
  parse_config(in, rc);
  return rc;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigParse, "cannot read " + path);
  RunConfig rc;
  parse_config(in, rc, path);
  return rc;
}

/// `key=value`, or `@file.json` naming a run summary whose "config" block is applied.
inline void apply_override(RunConfig& rc, const std::string& arg) {
  if (!arg.empty() && arg.front() == '@') {
    const std::string path = arg.substr(1);
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ConfigParse, "cannot read " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::ConfigParse, path + ": " + e.what());
    }
    if (!j.contains("config") || !j["config"].is_object()) {
      throw Error(ErrorKind::ConfigParse, path + ": no config block");
    }
    for (const auto& [k, v] : j["config"].items()) {
      if (!v.is_string()) throw Error(ErrorKind::ConfigParse, path + ": " + k + " must be a string");
      apply_setting(rc, k, v.get<std::string>());
    }
    return;
  }
  const auto eq = arg.find('=');
  if (eq == std::string::npos) throw Error(ErrorKind::ConfigParse, "override must be key=value");
  apply_setting(rc, std::string(detail::trim(std::string_view(arg).substr(0, eq))),
                std::string_view(arg).substr(eq + 1));
}

}  // namespace transonic
