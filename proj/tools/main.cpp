// melswim command line front end: validate / simulate / analyze / steer /
// sweep. Every output is deterministic given the config and the recorded
// seed; reports carry no timestamps so reruns diff clean.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "melswim/brackets.hpp"
#include "melswim/control.hpp"
#include "melswim/integrate.hpp"
#include "melswim/io.hpp"
#include "melswim/linearize.hpp"
#include "melswim/mobility.hpp"
#include "melswim/model.hpp"
#include "melswim/params.hpp"
#include "melswim/signal.hpp"
#include "melswim/state.hpp"

namespace fs = std::filesystem;
using namespace melswim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAssumption = 1;
constexpr int kExitSimulation = 2;
constexpr int kExitSteering = 3;
constexpr int kExitIo = 4;

struct CommonOpts {
  std::string params_path;
  std::string out_dir = ".";
  double dt_max = 1e-3;
  double horizon = 1.0;
  double beta = 0.05;
  std::uint64_t seed = 0;
};

SwimmerParams load_params(const CommonOpts& c) {
  if (c.params_path.empty()) return SwimmerParams::canonical();
  return params_from_json_file(c.params_path);
}

fs::path ensure_out_dir(const CommonOpts& c) {
  fs::path dir(c.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ParseError("cannot create output directory '" + c.out_dir + "': " + ec.message());
  return dir;
}

State parse_state(const std::string& spec) {
  std::array<double, 4> v{};
  std::size_t start = 0, idx = 0;
  while (idx < 4) {
    const std::size_t comma = spec.find(',', start);
    const std::string cell =
        spec.substr(start, comma == std::string::npos ? comma : comma - start);
    const char* b = cell.data();
    const auto res = std::from_chars(b, b + cell.size(), v[idx]);
    if (res.ec != std::errc{} || res.ptr != b + cell.size())
      throw ParseError("bad state component '" + cell + "' in '" + spec + "'");
    ++idx;
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (idx != 4) throw ParseError("state must be 'x,y,theta,alpha', got '" + spec + "'");
  return State{v[0], v[1], v[2], v[3]};
}

void attach_common(CLI::App* sub, CommonOpts& c) {
  sub->add_option("--params", c.params_path, "parameter JSON file (default: canonical set)");
  sub->add_option("--out", c.out_dir, "output directory")->capture_default_str();
  sub->add_option("--dt-max", c.dt_max, "integrator step ceiling")->capture_default_str();
  sub->add_option("--horizon", c.horizon, "time horizon")->capture_default_str();
  sub->add_option("--beta", c.beta, "reference perpendicular field")->capture_default_str();
  sub->add_option("--seed", c.seed, "seed recorded in reports")->capture_default_str();
}

const char* verdict(bool ok) { return ok ? "ok" : "FAIL"; }

// -- validate ---------------------------------------------------------------

int run_validate(const CommonOpts& c, bool write_report) {
  const SwimmerParams p = load_params(c);
  const ValidationReport r = validate_params(p);

  std::cout << "positivity           " << verdict(r.positivity_ok) << "\n"
            << "moments nonzero      " << verdict(r.moments_nonzero) << "\n"
            << "anisotropy present   " << verdict(r.anisotropy_present) << "\n"
            << "normal dominates     " << verdict(r.normal_dominates) << "\n"
            << "moment balance       " << format_double(r.moment_balance)
            << (r.moment_balance_nonzero ? " (nonzero, ok)" : " (zero: straight set invariant)")
            << "\n";
  if (r.isotropic_drag)
    std::cout << "note: isotropic drag; two state functions are conserved\n";
  std::cout << "assumption           " << (r.assumption1_holds ? "holds" : "violated") << "\n";

  if (write_report) {
    const fs::path dir = ensure_out_dir(c);
    json j = r;
    j["params"] = p;
    j["seed"] = c.seed;
    write_json_file((dir / "validation.json").string(), j);
  }
  return r.assumption1_holds ? kExitOk : kExitAssumption;
}

// -- simulate ---------------------------------------------------------------

struct SimulateOpts {
  std::string zi_spec = "0,0,0,0";
  std::string kind = "zero";  // zero | constant | sinusoidal | file
  double h_par = 0.0;
  double h_perp = 0.0;
  double amplitude = 0.05;
  double frequency = 1.0;
  double phase = 0.0;
  std::string channel = "perp";
  std::string signal_file;
};

ControlSignal build_signal(const SimulateOpts& s, double duration, double dt_max) {
  if (s.kind == "zero") return ControlSignal::zero(duration);
  if (s.kind == "constant")
    return ControlSignal::constant(Control{s.h_par, s.h_perp}, duration);
  if (s.kind == "sinusoidal") {
    if (s.channel != "perp" && s.channel != "par")
      throw ParseError("--channel must be 'perp' or 'par'");
    const std::size_t n = std::max<std::size_t>(2, static_cast<std::size_t>(
                                                       std::ceil(duration / dt_max)) + 1);
    std::vector<double> t(n);
    std::vector<Control> u(n);
    for (std::size_t k = 0; k < n; ++k) {
      t[k] = duration * static_cast<double>(k) / static_cast<double>(n - 1);
      const double v = s.amplitude * std::sin(2.0 * kPi * s.frequency * t[k] + s.phase);
      u[k] = s.channel == "perp" ? Control{0.0, v} : Control{v, 0.0};
    }
    return ControlSignal::sampled_linear(std::move(t), std::move(u));
  }
  if (s.kind == "file") {
    if (s.signal_file.empty()) throw ParseError("--signal file requires --signal-file");
    if (s.signal_file.size() > 5 &&
        s.signal_file.compare(s.signal_file.size() - 5, 5, ".json") == 0)
      return read_json_file(s.signal_file).get<ControlSignal>();
    const CsvTable table = read_csv_file(s.signal_file);
    const std::size_t it = table.column_index("t");
    const std::size_t ipar = table.column_index("h_par");
    const std::size_t iperp = table.column_index("h_perp");
    std::vector<double> t;
    std::vector<Control> u;
    t.reserve(table.rows.size());
    u.reserve(table.rows.size());
    for (const auto& row : table.rows) {
      t.push_back(row[it]);
      u.push_back(Control{row[ipar], row[iperp]});
    }
    return ControlSignal::sampled_linear(std::move(t), std::move(u));
  }
  throw ParseError("unknown signal kind '" + s.kind + "'");
}

json signal_spec_json(const SimulateOpts& s) {
  json j{{"kind", s.kind}};
  if (s.kind == "constant") {
    j["h_par"] = s.h_par;
    j["h_perp"] = s.h_perp;
  } else if (s.kind == "sinusoidal") {
    j["amplitude"] = s.amplitude;
    j["frequency"] = s.frequency;
    j["phase"] = s.phase;
    j["channel"] = s.channel;
  } else if (s.kind == "file") {
    j["path"] = s.signal_file;
  }
  return j;
}

int run_simulate(const CommonOpts& c, const SimulateOpts& s) {
  const SwimmerParams p = load_params(c);
  const State zi = parse_state(s.zi_spec);
  const ControlSignal sig = build_signal(s, c.horizon, c.dt_max);
  const fs::path dir = ensure_out_dir(c);

  IntegrateOptions io;
  io.dt_max = c.dt_max;
  io.estimate_error = true;

  Trajectory traj;
  try {
    traj = integrate(p, zi, sig, io);
  } catch (const DivergenceError& e) {
    std::cerr << "simulation diverged: " << e.what() << "\n";
    json j{{"diverged", true}, {"time", e.time}, {"seed", c.seed}, {"params", p}};
    write_json_file((dir / "summary.json").string(), j);
    return kExitSimulation;
  }

  write_trajectory_csv((dir / "trajectory.csv").string(), traj);

  const Control sup = sig.sup_norms();
  json summary{{"seed", c.seed},
               {"params", p},
               {"initial_state", zi},
               {"duration", c.horizon},
               {"dt_max", c.dt_max},
               {"signal", signal_spec_json(s)},
               {"final_state", traj.final_state()},
               {"steps", traj.stats.steps},
               {"max_error_estimate", traj.stats.max_error_estimate},
               {"sup_norm_par", sup.h_par},
               {"sup_norm_perp", sup.h_perp},
               {"diverged", false}};

  if (const auto c0 = first_integrals(p, traj.initial())) {
    double drift = 0.0;
    for (const State& z : traj.states) {
      const auto ck = first_integrals(p, z);
      drift = std::max({drift, std::abs(ck->first - c0->first),
                        std::abs(ck->second - c0->second)});
    }
    summary["first_integral_drift"] = drift;
  }

  write_json_file((dir / "summary.json").string(), summary);
  std::cout << "wrote " << (dir / "trajectory.csv").string() << " ("
            << traj.times.size() << " rows) and summary.json\n";
  return kExitOk;
}

// -- analyze ----------------------------------------------------------------

int run_analyze(const CommonOpts& c) {
  const SwimmerParams p = load_params(c);
  const ValidationReport v = validate_params(p);
  const bool structural = v.assumption1_holds;

  const KalmanResult kal = kalman_rank_at_origin(p);
  const bool kal_pass = kal.rank <= 2;

  const LarcResult larc = larc_certificate(p);
  const bool larc_pass = (larc.rank == 4) == structural;

  const BadBracketResult bad = bad_bracket_test(p);
  const bool bad_pass = bad.in_span_x3_x4 == (std::abs(p.m1 + p.m2) < 1e-12);

  std::vector<double> grid;
  for (int k = -40; k <= 40; ++k) grid.push_back(0.01 * k);
  const X5Scan x5 = x5_beta_rank(p, c.beta, grid);
  const bool x5_pass = structural ? !x5.degenerate : true;

  // Gramian of the linearization sampled along the constant-field reference
  // arc on [0, horizon/2]; at the equilibrium itself the rank drops to the
  // Kalman value, away from it the second-order geometry restores 4.
  IntegrateOptions io;
  io.dt_max = std::min(c.dt_max, 1e-4);
  io.estimate_error = false;
  const double t1 = 0.5 * c.horizon;
  const Trajectory arc =
      integrate(p, State::origin(), ControlSignal::constant(Control{0.0, c.beta}, t1), io);
  const GramianResult gram = gramian_rank(linearize_along(p, arc), 0.0, t1);
  const bool gram_pass = (gram.rank == 4) == structural;

  const bool all_pass = kal_pass && larc_pass && bad_pass && x5_pass && gram_pass;

  std::cout << "kalman rank          " << kal.rank << "  [" << verdict(kal_pass) << "]\n"
            << "larc rank            " << larc.rank << " (sigma_min "
            << format_double(larc.sigma_min) << ")  [" << verdict(larc_pass) << "]\n"
            << "bad bracket in span  " << (bad.in_span_x3_x4 ? "yes" : "no") << "  ["
            << verdict(bad_pass) << "]\n"
            << "order-3 det zeros    " << (x5.degenerate ? "present" : "none") << "  ["
            << verdict(x5_pass) << "]\n"
            << "gramian rank         " << gram.rank << " (sigma_min "
            << format_double(gram.sigma_min) << ")  [" << verdict(gram_pass) << "]\n";

  json dets = json::array();
  for (const double d : x5.dets) dets.push_back(d);
  json j{{"seed", c.seed},
         {"params", p},
         {"beta", c.beta},
         {"validation", v},
         {"kalman", json{{"rank", kal.rank}, {"pass", kal_pass}}},
         {"larc", json{{"rank", larc.rank},
                       {"sigma_min", larc.sigma_min},
                       {"det_with_x334", larc.det_with_x334},
                       {"det_with_x434", larc.det_with_x434},
                       {"pass", larc_pass}}},
         {"bad_bracket", json{{"in_span", bad.in_span_x3_x4},
                              {"x34_coefficient", bad.x34_coefficient},
                              {"x434_coefficient", bad.x434_coefficient},
                              {"decomposition_residual", bad.decomposition_residual},
                              {"f101_norm", bad.f101_norm},
                              {"f202_norm", bad.f202_norm},
                              {"pass", bad_pass}}},
         {"x5", json{{"alpha_bar", x5.alpha_bar},
                     {"degenerate", x5.degenerate},
                     {"dets", dets},
                     {"pass", x5_pass}}},
         {"gramian", json{{"rank", gram.rank},
                          {"sigma_min", gram.sigma_min},
                          {"t0", 0.0},
                          {"t1", t1},
                          {"pass", gram_pass}}},
         {"all_pass", all_pass}};
  write_json_file((ensure_out_dir(c) / "certificates.json").string(), j);
  return all_pass ? kExitOk : kExitAssumption;
}

// -- steer ------------------------------------------------------------------

struct SteerOpts {
  std::string zi_spec = "0,0,0,0";
  std::string zf_spec = "0,0,0,0";
  double epsilon = 0.2;
  int intervals = 4;
  double radius = 1e-3;
  double w_radius = 0.1;
  int max_iterations = 50;
};

json steering_report(const SteeringProblem& prob, const SteeringResult& r,
                     std::uint64_t seed, const SwimmerParams& p) {
  return json{{"seed", seed},
              {"params", p},
              {"z_i", prob.z_i},
              {"z_f", prob.z_f},
              {"horizon", prob.horizon},
              {"epsilon", prob.epsilon},
              {"beta", prob.beta},
              {"intervals_per_phase", prob.intervals_per_phase},
              {"residual", r.residual},
              {"iterations", r.iterations},
              {"achieved", r.achieved},
              {"sup_norms", json{{"perp", r.sup_norm_perp}, {"par", r.sup_norm_par}}},
              {"bound_rhs", json{{"perp", r.bound_perp_rhs}, {"par", r.bound_par_rhs}}},
              {"max_distance_from_origin", r.max_distance_from_origin},
              {"within_w_ball", r.within_w_ball},
              {"gramian_rank_along_loop", r.gramian_rank_along_loop},
              {"gramian_sigma_min", r.gramian_sigma_min},
              {"pass", r.converged && r.within_w_ball}};
}

int run_steer(const CommonOpts& c, const SteerOpts& s) {
  const SwimmerParams p = load_params(c);
  SteeringProblem prob;
  prob.z_i = parse_state(s.zi_spec);
  prob.z_f = parse_state(s.zf_spec);
  prob.horizon = c.horizon;
  prob.epsilon = s.epsilon;
  prob.beta = c.beta;
  prob.dt_max = c.dt_max;
  prob.intervals_per_phase = s.intervals;
  prob.neighborhood_radius = s.radius;
  prob.w_ball_radius = s.w_radius;
  prob.max_iterations = s.max_iterations;
  const fs::path dir = ensure_out_dir(c);

  SteeringResult r;
  try {
    r = steer(p, prob);
  } catch (const InvalidParameterError& e) {
    std::cerr << "steering refused: " << e.what() << "\n";
    return kExitSteering;
  } catch (const SynthesisFailureError& e) {
    std::cerr << "steering failed: " << e.what() << "\n";
    return kExitSteering;
  } catch (const BoundExceededError& e) {
    std::cerr << "steering failed: " << e.what() << "\n";
    return kExitSteering;
  } catch (const BudgetExceededError& e) {
    std::cerr << "steering failed: " << e.what() << "\n";
    return kExitSteering;
  }

  write_json_file((dir / "steering.json").string(), steering_report(prob, r, c.seed, p));
  json sig = r.signal;
  write_json_file((dir / "control.json").string(), sig);
  write_trajectory_csv((dir / "trajectory.csv").string(), r.trajectory);

  std::cout << "residual " << format_double(r.residual) << " after " << r.iterations
            << " iterations; sup|perp| " << format_double(r.sup_norm_perp) << " < "
            << format_double(r.bound_perp_rhs) << ", sup|par| "
            << format_double(r.sup_norm_par) << " < " << format_double(r.bound_par_rhs)
            << ", max distance " << format_double(r.max_distance_from_origin) << "\n";
  if (!(r.converged && r.within_w_ball)) {
    std::cerr << "steering did not converge within the confinement ball; "
                 "best iterate written\n";
    return kExitSteering;
  }
  std::cout << "converged\n";
  return kExitOk;
}

// -- sweep ------------------------------------------------------------------

struct GridAxis {
  std::string field;
  double lo = 0.0;
  double hi = 0.0;
  int count = 0;

  double value(int k) const {
    if (count == 1) return lo;
    return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
  }
};

GridAxis parse_axis(const std::string& spec) {
  const std::size_t eq = spec.find('=');
  if (eq == std::string::npos)
    throw ParseError("grid axis must be 'field=lo:hi:count', got '" + spec + "'");
  GridAxis ax;
  ax.field = spec.substr(0, eq);
  const std::string rest = spec.substr(eq + 1);
  const std::size_t c1 = rest.find(':'), c2 = rest.rfind(':');
  if (c1 == std::string::npos || c2 == c1)
    throw ParseError("grid axis must be 'field=lo:hi:count', got '" + spec + "'");
  const auto num = [&](const std::string& cell, auto& out) {
    const char* b = cell.data();
    const auto res = std::from_chars(b, b + cell.size(), out);
    if (res.ec != std::errc{} || res.ptr != b + cell.size())
      throw ParseError("bad grid number '" + cell + "'");
  };
  num(rest.substr(0, c1), ax.lo);
  num(rest.substr(c1 + 1, c2 - c1 - 1), ax.hi);
  num(rest.substr(c2 + 1), ax.count);
  if (ax.count < 1) throw ParseError("grid count must be >= 1");
  return ax;
}

double* field_ref(SwimmerParams& p, const std::string& name) {
  if (name == "l1") return &p.l1;
  if (name == "l2") return &p.l2;
  if (name == "xi1") return &p.xi1;
  if (name == "xi2") return &p.xi2;
  if (name == "eta1") return &p.eta1;
  if (name == "eta2") return &p.eta2;
  if (name == "m1") return &p.m1;
  if (name == "m2") return &p.m2;
  if (name == "kappa") return &p.kappa;
  throw ParseError("unknown parameter field '" + name + "'");
}

int run_sweep(const CommonOpts& c, const std::string& axis_a, const std::string& axis_b) {
  const SwimmerParams base = load_params(c);
  const GridAxis a = parse_axis(axis_a);
  const GridAxis b = parse_axis(axis_b);
  if (a.field == b.field) throw ParseError("sweep axes must name different fields");
  const fs::path dir = ensure_out_dir(c);

  std::ofstream csv(dir / "sweep.csv");
  if (!csv) throw ParseError("cannot open for writing: " + (dir / "sweep.csv").string());
  csv << a.field << ',' << b.field
      << ",assumption,moment_balance,det_e0,kalman_rank,larc_rank,larc_sigma_min,"
         "bad_bracket_in_span,point_ok\n";

  int failures = 0;
  for (int i = 0; i < a.count; ++i) {
    for (int k = 0; k < b.count; ++k) {
      SwimmerParams p = base;
      *field_ref(p, a.field) = a.value(i);
      *field_ref(p, b.field) = b.value(k);
      csv << format_double(a.value(i)) << ',' << format_double(b.value(k)) << ',';
      try {
        const ValidationReport v = validate_params(p);
        const KalmanResult kal = kalman_rank_at_origin(p);
        const LarcResult larc = larc_certificate(p);
        const BadBracketResult bad = bad_bracket_test(p);
        const bool ok = kal.rank <= 2 && (larc.rank == 4) == v.assumption1_holds &&
                        bad.in_span_x3_x4 == (std::abs(p.m1 + p.m2) < 1e-12);
        if (!ok) ++failures;
        csv << (v.assumption1_holds ? 1 : 0) << ',' << format_double(v.moment_balance)
            << ',' << format_double(det_e_closed_form(p, 0.0)) << ',' << kal.rank << ','
            << larc.rank << ',' << format_double(larc.sigma_min) << ','
            << (bad.in_span_x3_x4 ? 1 : 0) << ',' << (ok ? 1 : 0) << '\n';
      } catch (const std::exception&) {
        ++failures;
        csv << "0,nan,nan,0,0,nan,0,0\n";
      }
    }
  }

  json j{{"seed", c.seed},
         {"base_params", base},
         {"axis_a", json{{"field", a.field}, {"lo", a.lo}, {"hi", a.hi}, {"count", a.count}}},
         {"axis_b", json{{"field", b.field}, {"lo", b.lo}, {"hi", b.hi}, {"count", b.count}}},
         {"points", a.count * b.count},
         {"structural_failures", failures}};
  write_json_file((dir / "sweep.json").string(), j);
  std::cout << "wrote " << (dir / "sweep.csv").string() << " (" << a.count * b.count
            << " points, " << failures << " structural failures)\n";
  return failures == 0 ? kExitOk : kExitAssumption;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"planar two-link magneto-elastic swimmer toolbox"};
  app.require_subcommand(1);

  CommonOpts cv, cs, ca, ct, cw;

  auto* validate = app.add_subcommand("validate", "check the parameter assumptions");
  attach_common(validate, cv);
  bool validate_write = false;
  validate->add_flag("--write", validate_write, "also write validation.json to --out");

  auto* simulate = app.add_subcommand("simulate", "integrate the dynamics under a signal");
  attach_common(simulate, cs);
  SimulateOpts so;
  simulate->add_option("--zi", so.zi_spec, "initial state 'x,y,theta,alpha'")
      ->capture_default_str();
  simulate->add_option("--signal", so.kind, "zero | constant | sinusoidal | file")
      ->capture_default_str();
  simulate->add_option("--h-par", so.h_par, "constant parallel field");
  simulate->add_option("--h-perp", so.h_perp, "constant perpendicular field");
  simulate->add_option("--amplitude", so.amplitude, "sinusoidal amplitude")
      ->capture_default_str();
  simulate->add_option("--frequency", so.frequency, "sinusoidal frequency")
      ->capture_default_str();
  simulate->add_option("--phase", so.phase, "sinusoidal phase offset");
  simulate->add_option("--channel", so.channel, "sinusoidal channel: perp | par")
      ->capture_default_str();
  simulate->add_option("--signal-file", so.signal_file,
                       "control signal (.json) or samples csv 't,h_par,h_perp'");

  auto* analyze = app.add_subcommand("analyze", "controllability certificate bundle");
  attach_common(analyze, ca);

  auto* steer_cmd = app.add_subcommand("steer", "steer between near-straight states");
  attach_common(steer_cmd, ct);
  SteerOpts to;
  steer_cmd->add_option("--zi", to.zi_spec, "initial state 'x,y,theta,alpha'")
      ->capture_default_str();
  steer_cmd->add_option("--zf", to.zf_spec, "target state 'x,y,theta,alpha'")
      ->capture_default_str();
  steer_cmd->add_option("--epsilon", to.epsilon, "perpendicular-channel budget")
      ->capture_default_str();
  steer_cmd->add_option("--intervals", to.intervals, "perturbation intervals per phase")
      ->capture_default_str();
  steer_cmd->add_option("--radius", to.radius, "admissible endpoint distance from straight")
      ->capture_default_str();
  steer_cmd->add_option("--w-radius", to.w_radius, "trajectory confinement radius")
      ->capture_default_str();
  steer_cmd->add_option("--max-iterations", to.max_iterations, "iteration budget")
      ->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "two-field parameter grid of certificates");
  attach_common(sweep, cw);
  std::string axis_a, axis_b;
  sweep->add_option("--grid-a", axis_a, "first axis 'field=lo:hi:count'")->required();
  sweep->add_option("--grid-b", axis_b, "second axis 'field=lo:hi:count'")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitIo;
  }

  try {
    if (validate->parsed()) return run_validate(cv, validate_write);
    if (simulate->parsed()) return run_simulate(cs, so);
    if (analyze->parsed()) return run_analyze(ca);
    if (steer_cmd->parsed()) return run_steer(ct, to);
    if (sweep->parsed()) return run_sweep(cw, axis_a, axis_b);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSimulation;
  } catch (const InvalidParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAssumption;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSimulation;
  }
  return kExitOk;
}
