// transonic: command-line driver for the shock-in-duct experiments.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "transonic/transonic.hpp"

namespace fs = std::filesystem;
using namespace transonic;
using io::format_double;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kMismatch = 2;

struct Options {
  std::string config;
  std::string out;
  std::vector<std::string> overrides;
  bool quiet = false;
};

RunConfig load(const Options& o) {
  RunConfig rc = o.config.empty() ? RunConfig{} : load_config(o.config);
  for (const auto& s : o.overrides) apply_override(rc, s);
  return rc;
}

fs::path output_dir(const Options& o) {
  std::string dir = o.out;
  if (dir.empty()) {
    const char* env = std::getenv("TRANSONIC_OUT");
    dir = env && *env ? env : ".";
  }
  fs::create_directories(dir);
  return dir;
}

std::string json_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (static_cast<unsigned char>(c) < 0x20) {
      char buf[8];
      std::snprintf(buf, sizeof(buf), "\\u%04x", c);
      out += buf;
    } else {
      out += c;
    }
  }
  return out + "\"";
}

// Hand-written so every double carries 17 significant digits.
class JsonObject {
 public:
  JsonObject& number(const std::string& k, double v) { return raw(k, format_double(v)); }
  JsonObject& integer(const std::string& k, long long v) { return raw(k, std::to_string(v)); }
  JsonObject& boolean(const std::string& k, bool v) { return raw(k, v ? "true" : "false"); }
  JsonObject& string(const std::string& k, const std::string& v) { return raw(k, json_string(v)); }
  JsonObject& raw(const std::string& k, const std::string& v) {
    items_.emplace_back(k, v);
    return *this;
  }
  std::string str(int indent = 0) const {
    const std::string pad(indent + 2, ' ');
    std::string s = "{\n";
    for (std::size_t k = 0; k < items_.size(); ++k) {
      s += pad + json_string(items_[k].first) + ": " + items_[k].second;
      s += k + 1 < items_.size() ? ",\n" : "\n";
    }
    return s + std::string(indent, ' ') + "}";
  }

 private:
  std::vector<std::pair<std::string, std::string>> items_;
};

std::string config_json(const RunConfig& rc, int indent) {
  JsonObject o;
  for (const auto& [k, v] : config_entries(rc)) o.string(k, v);
  return o.str(indent);
}

void write_front_csv(const ShockFront& f, const fs::path& path) {
  auto out = io::open_output(path.string());
  io::CsvWriter csv(out, {"j", "eta", "f"});
  for (int j = 0; j < f.n_eta(); ++j)
    csv.row({std::to_string(j), format_double(f.eta(j)), format_double(f[j])});
}

int cmd_jump(const Options& o) {
  const RunConfig rc = load(o);
  const ExperimentConfig cfg = rc.experiment();
  const JumpSolution s = solve_normal_shock(cfg.u_minus, cfg.gas);
  JsonObject j;
  j.number("gamma", cfg.gas.gamma())
      .number("b0", cfg.gas.b0())
      .number("u_minus", s.u_minus)
      .number("rho_minus", s.rho_minus)
      .number("u_plus", s.u_plus)
      .number("rho_plus", s.rho_plus)
      .number("critical_speed", critical_speed(cfg.gas))
      .number("mass_flux", mass_flux(s.u_minus, cfg.gas))
      .boolean("entropy_satisfied", entropy_satisfied(s));
  std::cout << j.str() << '\n';
  return kOk;
}

int cmd_solve(const Options& o) {
  const RunConfig rc = load(o);
  const ExperimentConfig cfg = rc.experiment();
  cfg.validate();
  const fs::path dir = output_dir(o);
  const ShockFront initial = initial_front(cfg);
  const TransonicResult r = solve_transonic(cfg, initial);

  {
    auto out = io::open_output((dir / "field.csv").string());
    write_field_csv(r.field, out);
  }
  write_front_csv(r.front, dir / "front.csv");
  write_front_csv(initial, dir / "initial_front.csv");

  JsonObject j;
  j.string("verdict", to_string(r.verdict))
      .integer("iterations", r.iterations)
      .number("final_flatness", r.front.flatness())
      .number("front_mean", r.front.mean())
      .number("mean_residual", r.residual.mean)
      .number("osc_residual", r.residual.osc)
      .number("min_mach_margin", r.min_mach_margin())
      .number("u_plus", r.u_plus)
      .number("exit_speed", r.exit_speed)
      .number("initial_mean_residual", r.evidence.initial_mean_residual)
      .number("max_normal_mach", r.evidence.max_normal_mach)
      .number("min_ellipticity_margin", r.evidence.min_ellipticity_margin)
      .integer("contractions", r.evidence.contractions)
      .integer("fallback_contractions", r.evidence.fallback_contractions)
      .integer("stall_count", r.evidence.stall_count)
      .boolean("pinned", r.evidence.pinned)
      .string("stop_reason", r.evidence.stop_reason)
      .string("expect", to_string(rc.expect))
      .raw("config", config_json(rc, 2));
  {
    auto out = io::open_output((dir / "summary.json").string());
    out << j.str() << '\n';
  }
  const bool ok = rc.accepts(r.verdict);
  if (!o.quiet) {
    std::cout << "verdict " << to_string(r.verdict) << " after " << r.iterations
              << " front updates (flatness " << format_double(r.front.flatness()) << ")"
              << (ok ? "" : "; expectation " + std::string(to_string(rc.expect)) + " not met")
              << '\n';
  }
  return ok ? kOk : kMismatch;
}

int cmd_verify(const Options& o) {
  const RunConfig rc = load(o);
  const ExperimentConfig cfg = rc.experiment();
  cfg.validate();
  const fs::path dir = output_dir(o);
  const auto rows = verify_finite_duct(cfg, default_sweep());
  auto out = io::open_output((dir / "theorem15.csv").string());
  io::CsvWriter csv(out, {"c1", "perturb_amp", "perturb_modes", "verdict", "iters", "final_flatness",
                          "front_mean", "mean_residual", "osc_residual"});
  int mismatches = 0;
  for (const auto& r : rows) {
    const std::string verdict = r.error.empty() ? to_string(r.verdict) : "Error";
    csv.row({r.cell.c1_auto ? "auto" : format_double(r.c1), format_double(r.cell.perturb_amp),
             std::to_string(r.cell.perturb_modes), verdict, std::to_string(r.iterations),
             format_double(r.final_flatness), format_double(r.front_mean),
             format_double(r.mean_residual), format_double(r.osc_residual)});
    if (!r.matches()) ++mismatches;
    if (!o.quiet) {
      std::cout << (r.cell.c1_auto ? std::string("auto") : format_double(r.c1)) << " amp "
                << r.cell.perturb_amp << " mode " << r.cell.perturb_modes << ": " << verdict
                << (r.error.empty() ? "" : " (" + r.error + ")") << '\n';
    }
  }
  if (!o.quiet) std::cout << mismatches << " of " << rows.size() << " cells off the dichotomy\n";
  return mismatches == 0 || rc.expect == Expectation::Any ? kOk : kMismatch;
}

int cmd_long_duct(const Options& o) {
  const RunConfig rc = load(o);
  ExperimentConfig cfg = rc.experiment();
  const fs::path dir = output_dir(o);
  const auto runs = long_duct_experiment(cfg, rc.long_lengths, rc.long_cells_per_unit);
  const double cs = critical_speed(cfg.gas);

  auto out = io::open_output((dir / "long_duct.csv").string());
  io::CsvWriter csv(out, {"L", "station", "x1", "osc", "max_speed", "max_second_diff"});
  auto out_osc = io::open_output((dir / "oscillation.csv").string());
  io::CsvWriter osc(out_osc, {"run_id", "x1", "osc"});
  auto out_sum = io::open_output((dir / "long_duct_summary.csv").string());
  io::CsvWriter sum(out_sum, {"L", "n_xi", "n_eta", "exit_speed_deviation", "min_ellipticity_margin",
                              "osc_strictly_decreasing", "subsonic", "newton_iters"});
  bool ok = true;
  for (const auto& r : runs) {
    const std::string id = "L" + format_double(r.length);
    for (const auto& s : r.stations) {
      csv.row({format_double(r.length), std::to_string(s.station), format_double(s.x1),
               format_double(s.osc), format_double(s.max_speed), format_double(s.max_second_diff)});
      osc.row({id, format_double(s.x1), format_double(s.osc)});
    }
    const bool dec = r.osc_strictly_decreasing(), sub = r.subsonic(cs);
    ok = ok && dec && sub;
    sum.row({format_double(r.length), std::to_string(r.n_xi), std::to_string(r.n_eta),
             format_double(r.exit_speed_deviation), format_double(r.min_ellipticity_margin),
             dec ? "true" : "false", sub ? "true" : "false", std::to_string(r.report.newton_iters)});
    if (!o.quiet) {
      std::cout << "L = " << r.length << ": " << r.stations.size() << " stations, osc "
                << (dec ? "strictly decreasing" : "not strictly decreasing") << ", "
                << (sub ? "subsonic" : "NOT subsonic") << '\n';
    }
  }
  return ok || rc.expect == Expectation::Any ? kOk : kMismatch;
}

int cmd_compare(const Options& o) {
  const RunConfig rc = load(o);
  const ExperimentConfig cfg = rc.experiment();
  cfg.validate();
  const fs::path dir = output_dir(o);

  std::vector<std::pair<std::string, ShockFront>> fronts{{"config", initial_front(cfg)}};
  std::mt19937_64 rng(rc.seed);
  for (int k = 0; k < rc.compare_random_fronts; ++k) {
    fronts.emplace_back("seed" + std::to_string(rc.seed) + "_" + std::to_string(k),
                        random_cosine_front(cfg.n_eta, cfg.t0, cfg.x_exit, rng));
  }

  auto out_ext = io::open_output((dir / "extrema.csv").string());
  io::CsvWriter ext(out_ext, {"run_id", "kind", "tag", "i", "j", "value"});
  auto out_osc = io::open_output((dir / "oscillation.csv").string());
  io::CsvWriter osc(out_osc, {"run_id", "x1", "osc"});
  auto out_sum = io::open_output((dir / "comparison.csv").string());
  io::CsvWriter sum(out_sum, {"run_id", "tau", "constant", "required", "required_on_front",
                              "max_front_psi", "anchor_psi", "interior_excess",
                              "front_normal_quotient", "max_abs_l_psi", "min_eigenvalue",
                              "min_face_eigenvalue", "ellipticity_bound"});
  bool ok = true;
  for (const auto& [id, front] : fronts) {
    const ComparisonRun c = compare_fixed_front(cfg, front);
    write_extrema_rows(ext, id, c.extrema);
    std::vector<double> stations;
    for (int k = 1; k < 8; ++k) stations.push_back(front.max() + k * (cfg.x_exit - front.max()) / 8.0);
    const auto osc_values = cross_section_oscillation(c.solution.field, stations);
    for (std::size_t k = 0; k < stations.size(); ++k)
      osc.row({id, format_double(stations[k]), format_double(osc_values[k])});
    const auto& e = c.extrema;
    const auto& l = c.linearized;
    sum.row({id, format_double(c.psi.tau), e.constant ? "true" : "false",
             e.requires_min ? "min" : "max", e.required_on_front ? "true" : "false",
             format_double(c.max_front_psi), format_double(c.anchor_psi),
             format_double(e.interior_excess), format_double(e.front_normal_quotient),
             format_double(l.max_abs_l_psi), format_double(l.min_eigenvalue),
             format_double(l.min_face_eigenvalue), format_double(l.ellipticity_bound)});
    const bool good = (e.constant || e.required_on_front) && l.min_eigenvalue > 0.0 &&
                      l.min_face_eigenvalue > 0.0;
    ok = ok && good;
    if (!o.quiet) {
      std::cout << id << ": required " << (e.requires_min ? "min" : "max") << " at "
                << to_string((e.requires_min ? e.min : e.max).tag) << ", max |L psi| "
                << format_double(l.max_abs_l_psi) << (good ? "" : "  [check failed]") << '\n';
    }
  }

  auto out_orth = io::open_output((dir / "orthogonality.csv").string());
  io::CsvWriter orth(out_orth, {"run_id", "h", "slope_wall0", "slope_wall1"});
  const TransonicResult r = solve_transonic(cfg);
  if (r.verdict == Verdict::Converged) {
    const auto rec = check_orthogonality(r);
    orth.row({"config", format_double(rec.h), format_double(rec.slope_wall0),
              format_double(rec.slope_wall1)});
  }
  ok = ok && rc.accepts(r.verdict);
  if (!o.quiet) std::cout << "free-boundary verdict " << to_string(r.verdict) << '\n';
  return ok ? kOk : kMismatch;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transonic shock in a flat duct: jump, solve, verify-theorem, long-duct, compare"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opts;
  app.add_option("--config", opts.config, "configuration file (key = value lines)");
  app.add_option("--out", opts.out, "output directory (default $TRANSONIC_OUT or .)");
  app.add_option("--override", opts.overrides, "key=value or @summary.json; repeatable")
      ->allow_extra_args(false);
  app.add_flag("--quiet", opts.quiet, "suppress progress output");

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const Command commands[] = {
      {"jump", "normal shock state as JSON", cmd_jump},
      {"solve", "free-boundary solve; writes field.csv, front.csv, summary.json", cmd_solve},
      {"verify-theorem", "exit-speed/perturbation sweep; writes theorem15.csv", cmd_verify},
      {"long-duct", "decay tables in long ducts", cmd_long_duct},
      {"compare", "comparison diagnostics on fixed-front solves", cmd_compare},
  };
  int (*selected)(const Options&) = nullptr;
  for (const auto& c : commands) {
    app.add_subcommand(c.name, c.help)->callback([&selected, &c] { selected = c.run; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  try {
    return selected(opts);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
}
