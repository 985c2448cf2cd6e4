#include "sndropt/cli.hpp"

#include <fmt/core.h>

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sndropt/capacity.hpp"
#include "sndropt/oracle.hpp"
#include "sndropt/solver.hpp"

namespace sndropt {

namespace {

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string dist = "uniform";
  bool standardize = false;
  double dsnr_db = 10.0;
  std::string branch = "positive";
  std::string method = "general";
  std::string out;
  std::uint64_t seed = 2024;
  std::string log_base = "nats";
  double start = 0.0, stop = 40.0, step = 1.0;
  std::string mapping = "optimal";
  std::string device;
  std::optional<double> turn_on, saturation;
  int points = 256;
  std::string suite = "all";
};

std::string num(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

std::string num(const Sndr& s) { return s.is_infinite() ? "inf" : num(s.linear()); }

InputDistribution load_dist(const Options& o, std::ostream& err) {
  if (o.dist == "uniform") return InputDistribution::uniform_symmetric();
  if (o.dist == "gaussian") return InputDistribution::standard_gaussian();
  if (o.dist.rfind("file:", 0) == 0) {
    const std::string path = o.dist.substr(5);
    std::ifstream in(path);
    if (!in) throw InputError("cannot open pdf file '" + path + "'");
    try {
      return load_tabulated_pdf(in, o.standardize, &err).dist;
    } catch (const std::invalid_argument& e) {
      throw InputError(e.what());
    }
  }
  throw InputError("unknown --dist '" + o.dist + "' (expected uniform, gaussian or file:<path>)");
}

Branch parse_branch(const std::string& s) { return s == "negative" ? Branch::negative : Branch::positive; }

LogBase parse_log_base(const std::string& s) { return s == "bits" ? LogBase::bits : LogBase::nats; }

double noise_ratio(double dsnr_db) {
  if (std::isnan(dsnr_db)) throw InputError("--dsnr-db must be a number");
  return noise_ratio_from_dsnr_db(dsnr_db);
}

SolveOutcome solve(const InputDistribution& dist, double t, Branch branch, const std::string& method) {
  if (!(t > 0.0)) throw InputError("the optimal limiter needs a finite DSNR");
  if (method == "symmetric") {
    try {
      return solve_symmetric(dist, t, branch);
    } catch (const std::invalid_argument& e) {
      throw InputError(e.what());
    }
  }
  return solve_general(dist, t, branch);
}

// Writes to --out when given, otherwise to the main stream.
void emit(const Options& o, const std::string& text, std::ostream& out) {
  if (o.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw InputError("cannot write '" + o.out + "'");
  f << text;
  if (!f) throw InputError("write to '" + o.out + "' failed");
}

std::vector<double> dsnr_grid(const Options& o) {
  if (!(o.step > 0.0)) throw InputError("--step must be > 0");
  if (!(o.start <= o.stop)) throw InputError("--start must not exceed --stop");
  const int n = static_cast<int>(std::floor((o.stop - o.start) / o.step + 1e-9)) + 1;
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(o.start + o.step * i);
  return out;
}

bool within_cap(double sndr, double t) {
  const double cap = sndr_cap(t);
  return sndr <= cap + 1e-9 * std::max(1.0, cap);
}

// ---------------------------------------------------------------------------

int cmd_solve(const Options& o, std::ostream& out, std::ostream& err) {
  const auto dist = load_dist(o, err);
  const double t = noise_ratio(o.dsnr_db);
  const Branch branch = parse_branch(o.branch);
  try {
    const auto r = solve(dist, t, branch, o.method);
    out << fmt::format("dist: {}\n", o.dist);
    out << fmt::format("dsnr_db: {}\n", num(o.dsnr_db));
    out << fmt::format("t: {}\n", num(t));
    out << fmt::format("branch: {}\n", to_string(branch));
    out << fmt::format("eta_star: {}\n", num(r.params.eta));
    out << fmt::format("beta_star: {}\n", num(r.params.beta));
    out << fmt::format("lower_knee: {}\n", num(r.params.lower_knee()));
    out << fmt::format("upper_knee: {}\n", num(r.params.upper_knee()));
    out << fmt::format("sndr_star: {}\n", num(r.sndr_star));
    out << fmt::format("sndr_star_db: {}\n", num(sndr_db(Sndr::finite(r.sndr_star))));
    out << fmt::format("residual: {}\n", num(r.residual));
    out << fmt::format("iterations: {}\n", r.iterations);
    out << fmt::format("fixed_points: {}\n", r.fixed_points.size());
    for (const auto& fp : r.fixed_points)
      out << fmt::format("  eta={} beta={} sndr={}\n", num(fp.params.eta), num(fp.params.beta), num(fp.sndr));
    return exit_ok;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << '\n';
    for (const auto& fp : e.fixed_points())
      err << fmt::format("  eta={} beta={} sndr={} residual={}\n", num(fp.params.eta), num(fp.params.beta),
                         num(fp.sndr), num(fp.residual));
    return exit_solver;
  }
}

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  const auto dist = load_dist(o, err);
  const auto grid = dsnr_grid(o);
  const Branch branch = parse_branch(o.branch);
  const LogBase base = parse_log_base(o.log_base);
  const auto g2 = NonlinearMapping::reference_g2();

  struct Row {
    bool solved = false;
    double eta = NAN, beta = NAN, sndr_opt = NAN, sndr_g2 = NAN, cap_lower = NAN, cap_upper = NAN;
    std::string failure;
    bool cap_violation = false;
  };
  std::vector<Row> rows(grid.size());
  parallel_for(static_cast<int>(grid.size()), [&](int i) {
    auto& row = rows[static_cast<std::size_t>(i)];
    const double t = noise_ratio(grid[static_cast<std::size_t>(i)]);
    row.sndr_g2 = bussgang(g2, dist, t).sndr.linear();
    row.cap_upper = in_base(upper_bound(1.0 / t), base);
    try {
      const auto r = solve(dist, t, branch, o.method);
      row.solved = true;
      row.eta = r.params.eta;
      row.beta = r.params.beta;
      row.sndr_opt = r.sndr_star;
      row.cap_lower = in_base(lower_bound_optimal(t), base);
    } catch (const SolverError& e) {
      row.failure = e.what();
    }
    row.cap_violation = !within_cap(row.sndr_g2, t) || (row.solved && !within_cap(row.sndr_opt, t));
  });

  std::string csv = "dsnr_db,eta_star,beta_star,sndr_opt_db,sndr_g2_db,cap_lower,cap_upper\n";
  int failed = 0;
  bool violation = false;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& r = rows[i];
    const double opt_db = r.solved ? sndr_db(Sndr::finite(r.sndr_opt)) : NAN;
    csv += fmt::format("{},{},{},{},{},{},{}\n", num(grid[i]), num(r.eta), num(r.beta), num(opt_db),
                       num(sndr_db(Sndr::finite(r.sndr_g2))), num(r.cap_lower), num(r.cap_upper));
    if (!r.solved) {
      ++failed;
      err << fmt::format("warning: dsnr_db={} not solved: {}\n", num(grid[i]), r.failure);
    }
    if (r.cap_violation) {
      violation = true;
      err << fmt::format("error: dsnr_db={} SNDR exceeds DSNR/4\n", num(grid[i]));
    }
  }
  emit(o, csv, out);
  if (violation) return exit_oracle;
  if (10 * failed > static_cast<int>(grid.size())) {
    err << fmt::format("error: {} of {} points failed\n", failed, grid.size());
    return exit_solver;
  }
  return exit_ok;
}

NonlinearMapping parse_mapping(const Options& o, const InputDistribution& dist, double t) {
  const std::string& m = o.mapping;
  auto two_numbers = [&](std::size_t prefix) {
    const auto comma = m.find(',', prefix);
    if (comma == std::string::npos) throw InputError("mapping '" + m + "' needs two comma-separated numbers");
    try {
      return std::pair{std::stod(m.substr(prefix, comma - prefix)), std::stod(m.substr(comma + 1))};
    } catch (const std::logic_error&) {
      throw InputError("mapping '" + m + "' has non-numeric parameters");
    }
  };
  try {
    if (m == "optimal") return NonlinearMapping::optimal_limiter(solve(dist, t, parse_branch(o.branch), o.method).params);
    if (m == "g2") return NonlinearMapping::reference_g2();
    if (m.rfind("limiter:", 0) == 0) {
      const auto [eta, beta] = two_numbers(8);
      return NonlinearMapping::optimal_limiter({eta, beta});
    }
    if (m.rfind("affine:", 0) == 0) {
      const auto [slope, intercept] = two_numbers(7);
      return NonlinearMapping::affine_clipped(slope, intercept);
    }
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  throw InputError("unknown --mapping '" + m + "' (expected optimal, g2, limiter:ETA,BETA or affine:SLOPE,INTERCEPT)");
}

int cmd_sndr(const Options& o, std::ostream& out, std::ostream& err) {
  const auto dist = load_dist(o, err);
  const double t = noise_ratio(o.dsnr_db);
  const auto m = parse_mapping(o, dist, t);
  const auto r = bussgang(m, dist, t);
  out << fmt::format("mapping: {}\n", m.describe());
  out << fmt::format("t: {}\n", num(t));
  out << fmt::format("alpha: {}\n", num(r.alpha));
  out << fmt::format("mean_out: {}\n", num(r.mean_out));
  out << fmt::format("distortion_power: {}\n", num(r.distortion_power));
  out << fmt::format("sndr: {}\n", num(r.sndr));
  out << fmt::format("sndr_db: {}\n", num(sndr_db(r)));
  if (t > 0.0) {
    out << fmt::format("sndr_cap: {}\n", num(sndr_cap(t)));
    if (!r.sndr.is_infinite() && !within_cap(r.sndr.linear(), t)) {
      err << "error: SNDR exceeds DSNR/4\n";
      return exit_oracle;
    }
  }
  return exit_ok;
}

int cmd_capacity(const Options& o, std::ostream& out, std::ostream&) {
  const auto grid = dsnr_grid(o);
  const LogBase base = parse_log_base(o.log_base);
  const auto gauss = InputDistribution::standard_gaussian();
  const auto g2 = NonlinearMapping::reference_g2();
  const std::string unit = to_string(base);
  std::vector<std::string> lines(grid.size());
  parallel_for(static_cast<int>(grid.size()), [&](int i) {
    const double db = grid[static_cast<std::size_t>(i)];
    const double t = noise_ratio(db);
    double lower = NAN;
    try {
      lower = in_base(lower_bound_optimal(t), base);
    } catch (const SolverError&) {
    }
    lines[static_cast<std::size_t>(i)] =
        fmt::format("{},{},{},{}\n", num(db), num(lower), num(in_base(lower_bound(gauss, t, g2), base)),
                    num(in_base(upper_bound(1.0 / t), base)));
  });
  std::string csv = fmt::format("dsnr_db,lower_optimal_{0},lower_g2_{0},upper_{0}\n", unit);
  for (const auto& l : lines) csv += l;
  emit(o, csv, out);
  return exit_ok;
}

int cmd_predistort(const Options& o, std::ostream& out, std::ostream& err) {
  const auto dist = load_dist(o, err);
  const double t = noise_ratio(o.dsnr_db);
  std::ifstream in(o.device);
  if (!in) throw InputError("cannot open device curve '" + o.device + "'");
  std::optional<DeviceCurve> device;
  try {
    device = load_device_curve(in, o.turn_on, o.saturation);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  if (o.points < 2) throw InputError("--points must be >= 2");
  const auto r = solve(dist, t, parse_branch(o.branch), o.method);
  const auto m = NonlinearMapping::optimal_limiter(r.params);
  const auto lut = predistort_curve(*device, m, o.points);
  const Interval s = r.params.affine_region();
  const double err_sup =
      composition_error(*device, lut, m, {s.lo - 0.1 * s.width(), s.hi + 0.1 * s.width()}, 10000);

  std::ostringstream csv;
  write_lut_csv(csv, lut);
  emit(o, csv.str(), out);
  std::ostream& info = o.out.empty() ? err : out;
  info << fmt::format("mapping: {}\n", m.describe());
  info << fmt::format("composition_error: {}\n", num(err_sup));
  return exit_ok;
}

struct OracleRow {
  std::string kind;
  double magnitude, baseline, perturbed;
  bool ok;
};

int cmd_oracle(const Options& o, std::ostream& out, std::ostream& err) {
  const auto dist = load_dist(o, err);
  const double t = noise_ratio(o.dsnr_db);
  const std::string& suite = o.suite;
  if (suite != "grid" && suite != "perturb" && suite != "montecarlo" && suite != "all")
    throw InputError("unknown --suite '" + suite + "'");
  const auto r = solve(dist, t, parse_branch(o.branch), o.method);
  const auto& p = r.params;
  const double sign = p.eta > 0.0 ? 1.0 : -1.0;
  std::vector<OracleRow> rows;
  std::vector<std::string> notes;
  const bool all = suite == "all";

  if (all || suite == "grid") {
    const double hi = std::max(6.0, 1.5 * std::abs(p.eta));
    const GridAxis eta_axis{sign * 0.1, sign * hi, 128};
    const GridAxis beta_axis{0.0, 1.0, 128};
    const auto g = grid_search(dist, t, eta_axis, beta_axis);
    const bool below = g.sndr <= r.sndr_star + 1e-9;
    const bool near = std::abs(g.eta - p.eta) <= std::abs(eta_axis.cell()) && std::abs(g.beta - p.beta) <= beta_axis.cell();
    rows.push_back({"grid", std::abs(eta_axis.cell()), r.sndr_star, g.sndr, below});
    if (!near) {
      rows.back().ok = false;
      notes.push_back(fmt::format("grid argmax ({}, {}) is more than one cell from ({}, {})", num(g.eta), num(g.beta),
                                  num(p.eta), num(p.beta)));
    }
  }
  if (all || suite == "perturb") {
    for (auto kind : {PerturbationKind::case1, PerturbationKind::case2, PerturbationKind::lemma3}) {
      for (const auto& rep : random_set_perturbations(dist, t, p, kind, 200, 0.5, o.seed))
        rows.push_back({to_string(kind), rep.magnitude, rep.baseline_sndr, rep.perturbed_sndr, rep.delta() <= 1e-9});
    }
    for (const auto& rep : perturb_function_space(dist, t, p, 50, 0.02, o.seed))
      rows.push_back({"bump", rep.magnitude, rep.baseline_sndr, rep.perturbed_sndr, rep.delta() <= 1e-9});
    const std::vector<double> scales{0.04, 0.02, 0.01, 0.005, 0.0025};
    const auto fit = stationarity_fit(dist, t, p, scales);
    const bool quadratic = fit.r_squared > 0.95 && std::abs(fit.slope - 2.0) < 0.2;
    for (std::size_t i = 0; i < scales.size(); ++i)
      rows.push_back({"stationarity", scales[i], fit.baseline, fit.baseline + fit.deltas[i], quadratic});
    if (!quadratic)
      notes.push_back(fmt::format("bump loss is not quadratic: slope {} r2 {}", num(fit.slope), num(fit.r_squared)));
  }
  if (all || suite == "montecarlo") {
    const std::vector<NonlinearMapping> maps{NonlinearMapping::optimal_limiter(p), NonlinearMapping::reference_g2()};
    for (const auto& m : maps) {
      const double quad = bussgang(m, dist, t).sndr.linear();
      const auto mc = monte_carlo_sndr(m, dist, t, 1000000, o.seed);
      rows.push_back({"montecarlo", mc.std_error, quad, mc.estimate, std::abs(mc.estimate - quad) <= 3.0 * mc.std_error});
    }
  }

  std::string csv = "kind,magnitude,baseline,perturbed,delta\n";
  int failures = 0;
  for (const auto& row : rows) {
    const std::string line = fmt::format("{},{},{},{},{}\n", row.kind, num(row.magnitude), num(row.baseline),
                                         num(row.perturbed), num(row.perturbed - row.baseline));
    csv += line;
    if (!row.ok) {
      ++failures;
      err << "FAIL " << line;
    }
  }
  for (const auto& n : notes) err << n << '\n';
  emit(o, csv, out);
  std::ostream& info = o.out.empty() ? err : out;
  info << fmt::format("oracle suite {}: {} rows, {} failed (seed {})\n", suite, rows.size(), failures, o.seed);
  return failures == 0 ? exit_ok : exit_oracle;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"SNDR-optimal double-sided limiter: solve, sweep, evaluate, bound and verify"};
  app.require_subcommand(1);

  auto add_dist = [&](CLI::App* c) {
    c->add_option("--dist", o.dist, "uniform | gaussian | file:<path>")->capture_default_str();
    c->add_flag("--standardize", o.standardize, "Standardize a tabulated pdf to zero mean and unit variance");
  };
  auto add_operating_point = [&](CLI::App* c) {
    c->add_option("--dsnr-db", o.dsnr_db, "DSNR = A^2 / sigma_v^2 in dB")->capture_default_str();
    c->add_option("--branch", o.branch, "Sign of eta")
        ->check(CLI::IsMember({"positive", "negative"}))
        ->capture_default_str();
    c->add_option("--method", o.method, "general: multi-start fixed point; symmetric: scalar root (even pdfs)")
        ->check(CLI::IsMember({"general", "symmetric"}))
        ->capture_default_str();
  };
  auto add_range = [&](CLI::App* c, double start, double stop) {
    o.start = start;
    o.stop = stop;
    c->add_option("--start", o.start, "First DSNR in dB")->capture_default_str();
    c->add_option("--stop", o.stop, "Last DSNR in dB")->capture_default_str();
    c->add_option("--step", o.step, "DSNR step in dB")->capture_default_str();
  };
  auto add_out = [&](CLI::App* c) { c->add_option("--out", o.out, "Output file (default stdout)"); };
  auto add_log_base = [&](CLI::App* c) {
    c->add_option("--log-base", o.log_base, "Units of the capacity bounds")
        ->check(CLI::IsMember({"nats", "bits"}))
        ->capture_default_str();
  };

  auto* solve_cmd = app.add_subcommand("solve", "Optimal limiter at one DSNR");
  add_dist(solve_cmd);
  add_operating_point(solve_cmd);

  auto* sweep_cmd = app.add_subcommand("sweep", "eta*, beta*, SNDR and bounds over a DSNR range (CSV)");
  add_dist(sweep_cmd);
  add_operating_point(sweep_cmd);
  add_out(sweep_cmd);
  add_log_base(sweep_cmd);

  auto* sndr_cmd = app.add_subcommand("sndr", "SNDR of a mapping");
  add_dist(sndr_cmd);
  add_operating_point(sndr_cmd);
  sndr_cmd->add_option("--mapping", o.mapping, "optimal | g2 | limiter:ETA,BETA | affine:SLOPE,INTERCEPT")
      ->capture_default_str();

  auto* cap_cmd = app.add_subcommand("capacity", "Capacity lower/upper bounds over a DSNR range (CSV)");
  add_out(cap_cmd);
  add_log_base(cap_cmd);

  auto* pre_cmd = app.add_subcommand("predistort", "Predistortion LUT for a measured device curve (CSV)");
  add_dist(pre_cmd);
  add_operating_point(pre_cmd);
  add_out(pre_cmd);
  pre_cmd->add_option("--device", o.device, "Device curve CSV with header drive,output")->required();
  pre_cmd->add_option("--points", o.points, "LUT size")->capture_default_str();
  pre_cmd->add_option("--turn-on", o.turn_on, "Output level mapped to g = 0");
  pre_cmd->add_option("--saturation", o.saturation, "Output level mapped to g = 1");

  auto* oracle_cmd = app.add_subcommand("oracle", "Brute-force and Monte Carlo checks of the optimum");
  add_dist(oracle_cmd);
  add_operating_point(oracle_cmd);
  add_out(oracle_cmd);
  oracle_cmd->add_option("--suite", o.suite, "grid | perturb | montecarlo | all")
      ->check(CLI::IsMember({"grid", "perturb", "montecarlo", "all"}))
      ->capture_default_str();
  oracle_cmd->add_option("--seed", o.seed, "Seed for all random streams")->capture_default_str();

  // Range defaults differ per command; set them before parsing.
  add_range(sweep_cmd, 0.0, 40.0);
  auto cap_start = std::make_shared<double>(-10.0), cap_stop = std::make_shared<double>(50.0);
  cap_cmd->add_option("--start", *cap_start, "First DSNR in dB")->capture_default_str();
  cap_cmd->add_option("--stop", *cap_stop, "Last DSNR in dB")->capture_default_str();
  cap_cmd->add_option("--step", o.step, "DSNR step in dB")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_input;
  }

  try {
    if (*solve_cmd) return cmd_solve(o, out, err);
    if (*sweep_cmd) return cmd_sweep(o, out, err);
    if (*sndr_cmd) return cmd_sndr(o, out, err);
    if (*cap_cmd) {
      o.start = *cap_start;
      o.stop = *cap_stop;
      return cmd_capacity(o, out, err);
    }
    if (*pre_cmd) return cmd_predistort(o, out, err);
    if (*oracle_cmd) return cmd_oracle(o, out, err);
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return exit_input;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << '\n';
    return exit_solver;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_input;
  }
  return exit_input;
}

}  // namespace sndropt
