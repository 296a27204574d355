#include "selfsim/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "selfsim/backward.hpp"
#include "selfsim/error.hpp"
#include "selfsim/forward.hpp"
#include "selfsim/params.hpp"
#include "selfsim/reconstruct.hpp"

namespace selfsim::cli {

using nlohmann::json;

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json opt_num(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ModelParams params_of(const RunConfig& c) {
  if (!(c.rel_tol > 0.0) || !(c.abs_tol > 0.0) || !(c.event_tol > 0.0)) {
    fail(ErrorKind::Domain, "tolerances must be positive");
  }
  if (c.r_max && !(*c.r_max > 0.0)) fail(ErrorKind::Domain, "r-max must be positive");
  if (c.points < 10) fail(ErrorKind::Domain, "points must be at least 10");
  return derive_params(c.N, c.p, c.chi);
}

void apply_integrator(const RunConfig& c, IntegratorOptions& io) {
  io.rel_tol = c.rel_tol;
  io.abs_tol = c.abs_tol;
  io.event_tol = c.event_tol;
  if (c.r_max) io.r_max = *c.r_max;
}

BackwardOptions backward_options(const RunConfig& c) {
  BackwardOptions o;
  apply_integrator(c, o.integrator);
  o.slope_tol = c.slope_tol;
  o.threads = c.threads;
  return o;
}

double require_height(const RunConfig& c, const ModelParams& P) {
  if (!c.a_or_b) {
    fail(ErrorKind::Domain, P.regime() == Regime::LinearDiffusion
                                ? "--b is required"
                                : "--a is required");
  }
  double a = *c.a_or_b;
  if (P.regime() != Regime::LinearDiffusion && !(a > 0.0)) {
    fail(ErrorKind::Domain, "initial height a must be positive for p != 2");
  }
  return a;
}

RunReport start(const RunConfig& c, const ModelParams& P) {
  RunReport r;
  r.config = c;
  r.derived["m"] = P.m();
  r.derived["alpha"] = P.alpha();
  r.derived["beta"] = P.beta();
  r.derived["gamma"] = P.gamma();
  if (P.has_q()) {
    r.derived["q"] = P.q();
    r.derived["B"] = P.B();
    r.derived["u_star"] = P.u_star();
  }
  if (P.has_lambda()) r.derived["lambda"] = P.lambda();
  if (P.has_u_star_log()) r.derived["u_star_log"] = P.u_star_log();
  r.results["regime"] = std::string(to_string(P.regime()));
  return r;
}

double phi_of_u(const ModelParams& P, double u) {
  if (P.regime() == Regime::LinearDiffusion) return std::exp(u);
  if (u <= 0.0) {
    return P.regime() == Regime::SlowDiffusion
               ? 0.0
               : std::numeric_limits<double>::quiet_NaN();
  }
  return std::pow(u, P.phi_exponent());
}

Table profile_table(const ProfileSolution& s, const ModelParams& P, bool with_energy) {
  Table t;
  t.columns = with_energy ? std::vector<std::string>{"r", "u", "w", "E", "phi"}
                          : std::vector<std::string>{"r", "u", "w", "phi"};
  for (std::size_t i = 0; i < s.size(); ++i) {
    json row = json::array({num(s.r[i]), num(s.u[i]), num(s.w[i])});
    if (with_energy) row.push_back(num(s.energy[i]));
    row.push_back(num(phi_of_u(P, s.u[i])));
    t.rows.push_back(row);
  }
  return t;
}

json events_json(const ProfileSolution& s) {
  json ev = json::array();
  for (const Event& e : s.events) {
    if (e.kind == EventKind::AmplitudeSample) continue;
    ev.push_back({{"kind", std::string(to_string(e.kind))},
                  {"r", num(e.r)},
                  {"u", num(e.u)},
                  {"w", num(e.w)},
                  {"direction", e.direction}});
  }
  return ev;
}

json classification_json(const Classification& c) {
  return {{"a", num(c.a)},
          {"set", std::string(to_string(c.set))},
          {"R_of_a", opt_num(c.R_of_a)},
          {"terminal_slope", opt_num(c.terminal_slope)},
          {"certificate", c.certificate},
          {"first_min_u", opt_num(c.first_min_u)},
          {"termination", std::string(to_string(c.termination))}};
}

Direction direction_of(const RunConfig& c) {
  if (c.direction == "backward") return Direction::Backward;
  if (c.direction == "forward") return Direction::Forward;
  fail(ErrorKind::Domain, "direction must be backward or forward");
}

SelfSimilarSolution build_solution(const RunConfig& c, const ModelParams& P,
                                   RunReport& rep) {
  if (direction_of(c) == Direction::Forward) {
    return forward_solution(P, require_height(c, P), c.points);
  }
  if (P.regime() != Regime::SlowDiffusion) {
    fail(ErrorKind::Domain,
         "backward reconstruction needs a compactly supported profile (p > 2)");
  }
  if (!compact_support_admissible(P.N(), P.p())) {
    fail(ErrorKind::Domain, "(N, p) admits no compactly supported profile; p must exceed " +
                                fmt17(compact_support_threshold(P.N())));
  }
  BackwardOptions bo = backward_options(c);
  auto bracket = c.bracket ? *c.bracket : default_bracket(P, bo);
  CriticalResult cr = find_critical_a(P, bracket, bo);
  rep.results["a_c"] = num(cr.a_c);
  rep.results["R_c"] = num(cr.R_c);
  if (!(c.T > 0.0)) fail(ErrorKind::Domain, "T must be positive");
  return backward_critical_solution(P, cr, c.T);
}

std::vector<double> parse_times(const RunConfig& c, const SelfSimilarSolution& ss) {
  std::vector<double> offsets;
  if (c.times.empty()) {
    // Start where theta(t) R is 0.05 and approach the singular time by 1/4.
    double R = effective_radius(ss.phi);
    double s0 = std::pow(0.05 / R, ss.params.m() * ss.params.N());
    for (int j = 0; j < 7; ++j) offsets.push_back(s0 * std::pow(0.25, j));
  } else {
    std::vector<std::string> parts;
    std::stringstream ss_in(c.times);
    std::string item;
    while (std::getline(ss_in, item, ':')) parts.push_back(item);
    if (parts.size() != 4 || parts[0] != "geom") {
      fail(ErrorKind::Domain, "times must be geom:s0:ratio:n");
    }
    double s0 = std::stod(parts[1]), ratio = std::stod(parts[2]);
    int n = std::stoi(parts[3]);
    if (!(s0 > 0.0) || !(ratio > 0.0) || n < 1) {
      fail(ErrorKind::Domain, "times need s0 > 0, ratio > 0, n >= 1");
    }
    for (int j = 0; j < n; ++j) offsets.push_back(s0 * std::pow(ratio, j));
  }
  std::vector<double> t;
  for (double s : offsets) {
    t.push_back(ss.direction == Direction::Backward ? ss.T - s : s);
  }
  return t;
}

std::string gnuplot_script(const RunReport& rep, const std::string& data) {
  std::ostringstream os;
  os << "set datafile separator ','\n";
  os << "set key autotitle columnhead\n";
  const auto& cols = rep.table.columns;
  std::string cmd = rep.config.command;
  if (cmd == "delta-test") os << "set logscale y\n";
  if (cmd == "sweep") os << "set logscale x\n";
  os << "plot ";
  bool first = true;
  for (std::size_t k = 1; k < cols.size(); ++k) {
    if (cols[k] == "set" || cols[k] == "certificate") continue;
    if (!first) os << ", \\\n     ";
    os << "'" << data << "' using 1:" << (k + 1) << " with lines";
    first = false;
  }
  os << "\n";
  return os.str();
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain: return 2;
    case ErrorKind::BadBracket:
    case ErrorKind::Ambiguous: return 4;
    default: return 3;
  }
}

}  // namespace

json to_json(const RunConfig& c) {
  json b = c.bracket ? json::array({c.bracket->first, c.bracket->second}) : json(nullptr);
  return {{"command", c.command},     {"N", c.N},
          {"p", c.p},                 {"chi", c.chi},
          {"a_or_b", opt_num(c.a_or_b)}, {"bracket", b},
          {"grid", c.grid},           {"times", c.times},
          {"direction", c.direction}, {"T", c.T},
          {"rel_tol", c.rel_tol},     {"abs_tol", c.abs_tol},
          {"event_tol", c.event_tol}, {"r_max", opt_num(c.r_max)},
          {"slope_tol", c.slope_tol}, {"points", c.points},
          {"fit_decay", c.fit_decay}, {"output", c.output},
          {"format", c.format},       {"gnuplot", c.gnuplot},
          {"timing", c.timing},       {"threads", c.threads}};
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  c.command = j.at("command").get<std::string>();
  c.N = j.at("N").get<int>();
  c.p = j.at("p").get<double>();
  c.chi = j.at("chi").get<double>();
  if (!j.at("a_or_b").is_null()) c.a_or_b = j.at("a_or_b").get<double>();
  if (!j.at("bracket").is_null()) {
    c.bracket = std::make_pair(j.at("bracket")[0].get<double>(),
                               j.at("bracket")[1].get<double>());
  }
  c.grid = j.at("grid").get<std::string>();
  c.times = j.at("times").get<std::string>();
  c.direction = j.at("direction").get<std::string>();
  c.T = j.at("T").get<double>();
  c.rel_tol = j.at("rel_tol").get<double>();
  c.abs_tol = j.at("abs_tol").get<double>();
  c.event_tol = j.at("event_tol").get<double>();
  if (!j.at("r_max").is_null()) c.r_max = j.at("r_max").get<double>();
  c.slope_tol = j.at("slope_tol").get<double>();
  c.points = j.at("points").get<int>();
  c.fit_decay = j.at("fit_decay").get<bool>();
  c.output = j.at("output").get<std::string>();
  c.format = j.at("format").get<std::string>();
  c.gnuplot = j.at("gnuplot").get<std::string>();
  c.timing = j.at("timing").get<bool>();
  c.threads = j.at("threads").get<unsigned>();
  return c;
}

json to_json(const RunReport& r) {
  json j;
  j["schema"] = 1;
  j["config"] = to_json(r.config);
  j["derived"] = r.derived;
  j["results"] = r.results;
  j["columns"] = r.table.columns;
  j["rows"] = r.table.rows;
  j["tolerance_flags"] = r.tolerance_flags;
  if (r.wall_clock_seconds) j["wall_clock_seconds"] = *r.wall_clock_seconds;
  return j;
}

RunReport report_from_json(const json& j) {
  if (j.at("schema").get<int>() != 1) {
    fail(ErrorKind::Domain, "unsupported report schema");
  }
  RunReport r;
  r.config = config_from_json(j.at("config"));
  r.derived = j.at("derived").get<std::map<std::string, double>>();
  r.results = j.at("results");
  r.table.columns = j.at("columns").get<std::vector<std::string>>();
  r.table.rows = j.at("rows").get<std::vector<json>>();
  r.tolerance_flags = j.at("tolerance_flags").get<std::map<std::string, bool>>();
  if (j.contains("wall_clock_seconds")) {
    r.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
  }
  return r;
}

std::string serialize(const RunReport& r) { return to_json(r).dump(2) + "\n"; }

RunReport parse_report(const std::string& text) {
  return report_from_json(json::parse(text));
}

std::string to_csv(const Table& t) {
  std::ostringstream os;
  for (std::size_t k = 0; k < t.columns.size(); ++k) {
    os << (k ? "," : "") << t.columns[k];
  }
  os << "\n";
  for (const json& row : t.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) os << ",";
      const json& v = row[k];
      if (v.is_number()) {
        os << fmt17(v.get<double>());
      } else if (v.is_string()) {
        os << v.get<std::string>();
      } else if (v.is_null()) {
        os << "nan";
      } else {
        os << v.dump();
      }
    }
    os << "\n";
  }
  return os.str();
}

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 4 || (parts[0] != "log" && parts[0] != "lin")) {
    fail(ErrorKind::Domain, "grid must be log:lo:hi:n or lin:lo:hi:n");
  }
  double lo, hi;
  int n;
  try {
    lo = std::stod(parts[1]);
    hi = std::stod(parts[2]);
    n = std::stoi(parts[3]);
  } catch (const std::exception&) {
    fail(ErrorKind::Domain, "grid bounds must be numbers");
  }
  if (n < 1 || !(hi >= lo) || (parts[0] == "log" && !(lo > 0.0))) {
    fail(ErrorKind::Domain, "grid needs n >= 1, hi >= lo (lo > 0 for log)");
  }
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    g[static_cast<std::size_t>(i)] =
        parts[0] == "log" ? lo * std::pow(hi / lo, t) : lo + (hi - lo) * t;
  }
  return g;
}

RunReport cmd_solve_backward(const RunConfig& c) {
  ModelParams P = params_of(c);
  double a = require_height(c, P);
  RunReport rep = start(c, P);
  IntegratorOptions io = backward_integrator_defaults(P);
  apply_integrator(c, io);
  ProfileSolution sol = solve_backward(P, a, io);
  RadialODE ode = backward_ode(P);
  EnergyCheck ec = energy_derivative_check(ode, sol);
  rep.results["termination"] = std::string(to_string(sol.termination));
  rep.results["points"] = sol.size();
  rep.results["r_end"] = num(sol.r.back());
  rep.results["events"] = events_json(sol);
  rep.results["energy"] = {{"E0", num(ec.E0)},
                           {"max_increase", num(ec.max_increase)},
                           {"max_abs_drift", num(ec.max_abs_drift)},
                           {"max_violation", num(ec.max_violation)}};
  double scale = std::max(std::abs(ec.E0), 1e-300);
  rep.tolerance_flags["energy_law"] =
      P.N() == 1 ? ec.max_abs_drift < 1e-6 * scale : ec.max_increase < 1e-8 * scale;
  rep.table = profile_table(sol, P, true);
  return rep;
}

RunReport cmd_solve_forward(const RunConfig& c) {
  ModelParams P = params_of(c);
  double a = require_height(c, P);
  RunReport rep = start(c, P);
  ForwardOptions fo = forward_defaults(P);
  apply_integrator(c, fo.integrator);
  ForwardProfile fp = solve_forward(P, a, fo);
  rep.results["termination"] = std::string(to_string(fp.sol.termination));
  rep.results["points"] = fp.sol.size();
  rep.results["r_end"] = num(fp.sol.r.back());
  rep.results["tail"] = {{"kind", std::string(to_string(fp.tail.kind))},
                         {"exponent", num(fp.tail.exponent)},
                         {"coefficient", num(fp.tail.coefficient)}};
  rep.results["monotonicity_violation"] = num(fp.monotonicity_violation);
  rep.tolerance_flags["monotone"] = fp.monotonicity_violation == 0.0;
  if (P.regime() == Regime::SlowDiffusion) {
    SupportRadius s = support_radius(fp);
    rep.results["support"] = {{"R0", num(s.R0)},
                              {"terminal_u_slope", num(s.terminal_u_slope)},
                              {"terminal_phi_slope", num(s.terminal_phi_slope)},
                              {"lower_bound", num(s.lower_bound)},
                              {"upper_bound", num(s.upper_bound)}};
    rep.tolerance_flags["support_within_bounds"] =
        s.R0 >= s.lower_bound && s.R0 <= s.upper_bound;
  } else {
    double env = envelope_violation(fp);
    rep.results["envelope_violation"] = num(env);
    rep.tolerance_flags["envelope"] = env == 0.0;
    if (c.fit_decay) {
      DecayFit f = fit_decay_rate(fp);
      rep.results["decay"] = {{"r_eval", num(f.r_eval)},
                              {"estimate", num(f.estimate)},
                              {"extrapolated", num(f.extrapolated)},
                              {"target", num(f.target)}};
      if (P.regime() == Regime::FastDiffusion) {
        rep.results["decay"]["u_ratio"] = num(f.u_ratio);
        rep.results["decay"]["u_ratio_target"] = num(f.u_ratio_target);
      }
      rep.tolerance_flags["decay_within_2pct"] =
          std::abs(f.estimate / f.target - 1.0) < 0.02;
    }
  }
  rep.table = profile_table(fp.sol, P, false);
  return rep;
}

RunReport cmd_find_critical(const RunConfig& c) {
  ModelParams P = params_of(c);
  if (P.regime() != Regime::SlowDiffusion) {
    fail(ErrorKind::Domain, "find-critical needs the slow regime p > 2");
  }
  if (!compact_support_admissible(P.N(), P.p())) {
    fail(ErrorKind::Domain,
         "(N, p) is not admissible for compactly supported profiles: p must exceed " +
             fmt17(compact_support_threshold(P.N())) + " for N = " +
             std::to_string(P.N()));
  }
  RunReport rep = start(c, P);
  BackwardOptions bo = backward_options(c);
  auto bracket = c.bracket ? *c.bracket : default_bracket(P, bo);
  CriticalResult cr = find_critical_a(P, bracket, bo);
  rep.results["a_c"] = num(cr.a_c);
  rep.results["bracket"] = json::array({num(cr.a_lo), num(cr.a_hi)});
  rep.results["bracket_width"] = num(cr.bracket_width);
  rep.results["R_c"] = num(cr.R_c);
  rep.results["u_at_R_c"] = num(cr.u_at_R_c);
  rep.results["terminal_slope"] = num(cr.terminal_slope);
  rep.results["R_hi"] = num(cr.R_hi);
  rep.results["slope_hi"] = num(cr.slope_hi);
  rep.results["iterations"] = cr.iterations;
  rep.results["lo"] = classification_json(cr.lo_class);
  rep.results["hi"] = classification_json(cr.hi_class);
  rep.tolerance_flags["straddle"] =
      cr.lo_class.set == SetLabel::P &&
      (cr.hi_class.set == SetLabel::N || cr.hi_class.set == SetLabel::N0);
  if (P.N() == 1) {
    double closed = std::pow((P.q() + 1.0) / (P.m() * P.chi()), 1.0 / P.q());
    double err = std::abs(cr.a_c / closed - 1.0);
    rep.results["closed_form"] = num(closed);
    rep.results["closed_form_rel_err"] = num(err);
    rep.tolerance_flags["closed_form_1e-6"] = err < 1e-6;
  }
  rep.table = profile_table(cr.profile, P, true);
  return rep;
}

RunReport cmd_sweep(const RunConfig& c) {
  ModelParams P = params_of(c);
  if (P.regime() != Regime::SlowDiffusion) {
    fail(ErrorKind::Domain, "sweep needs the slow regime p > 2");
  }
  std::vector<double> grid = parse_grid(c.grid.empty() ? "log:0.01:100:50" : c.grid);
  RunReport rep = start(c, P);
  SweepResult sr = sweep_a(P, grid, backward_options(c));
  std::map<std::string, int> counts;
  rep.table.columns = {"a", "set", "R_of_a", "terminal_slope", "certificate"};
  for (const auto& cl : sr.items) {
    counts[std::string(to_string(cl.set))]++;
    rep.table.rows.push_back(json::array({num(cl.a), std::string(to_string(cl.set)),
                                          opt_num(cl.R_of_a),
                                          opt_num(cl.terminal_slope), cl.certificate}));
  }
  rep.results["a1"] = opt_num(sr.a1);
  rep.results["a2"] = opt_num(sr.a2);
  rep.results["counts"] = counts;
  rep.results["no_ground_state_regime"] = no_ground_state_regime(P.N(), P.p());
  return rep;
}

RunReport cmd_reconstruct(const RunConfig& c) {
  ModelParams P = params_of(c);
  RunReport rep = start(c, P);
  SelfSimilarSolution ss = build_solution(c, P, rep);
  SystemResidual res = system_residual(ss.phi, ss.psi, P, ss.direction);
  rep.results["direction"] = std::string(to_string(ss.direction));
  rep.results["mass"] = num(ss.mass);
  rep.results["support_radius"] = opt_num(ss.phi.support_radius);
  rep.results["effective_radius"] = num(effective_radius(ss.phi));
  rep.results["tail"] = {{"kind", std::string(to_string(ss.phi.tail.kind))},
                         {"exponent", num(ss.phi.tail.exponent)},
                         {"coefficient", num(ss.phi.tail.coefficient)}};
  rep.results["residual"] = {{"res1", num(res.res1)},
                             {"res2", num(res.res2)},
                             {"identity", num(res.identity)},
                             {"r_lo", num(res.r_lo)},
                             {"r_hi", num(res.r_hi)}};
  rep.tolerance_flags["residual_1e-6"] =
      res.res1 < 1e-6 && res.res2 < 1e-6 && res.identity < 1e-6;
  rep.table.columns = {"r", "phi", "psi", "dpsi"};
  for (std::size_t i = 0; i < ss.phi.r.size(); ++i) {
    rep.table.rows.push_back(json::array({num(ss.phi.r[i]), num(ss.phi.phi[i]),
                                          num(ss.psi.psi[i]), num(ss.psi.dpsi[i])}));
  }
  return rep;
}

RunReport cmd_delta_test(const RunConfig& c) {
  ModelParams P = params_of(c);
  RunReport rep = start(c, P);
  SelfSimilarSolution ss = build_solution(c, P, rep);
  std::vector<double> times = parse_times(c, ss);
  auto gauss = TestFunction::of_radius([](double r) { return std::exp(-r * r); });
  std::vector<DeltaSample> dev = delta_test(ss, gauss, times);
  rep.table.columns = {"t", "deviation", "mass"};
  bool monotone = true;
  double worst_mass = 0.0;
  for (std::size_t i = 0; i < dev.size(); ++i) {
    double M = mass_at_time(ss, dev[i].t);
    worst_mass = std::max(worst_mass, std::abs(M / ss.mass - 1.0));
    rep.table.rows.push_back(json::array({num(dev[i].t), num(dev[i].deviation), num(M)}));
    if (i > 0 && !(dev[i].deviation < dev[i - 1].deviation)) monotone = false;
  }
  rep.results["direction"] = std::string(to_string(ss.direction));
  rep.results["mass"] = num(ss.mass);
  rep.results["test_function"] = "exp(-|x|^2)";
  rep.results["mass_rel_spread"] = num(worst_mass);
  rep.results["reduction"] = num(dev.front().deviation / dev.back().deviation);
  rep.tolerance_flags["monotone_decrease"] = monotone;
  rep.tolerance_flags["mass_conserved_1e-8"] = worst_mass < 1e-8;
  return rep;
}

RunReport run(const RunConfig& c) {
  auto t0 = std::chrono::steady_clock::now();
  RunReport rep;
  if (c.command == "solve-backward") {
    rep = cmd_solve_backward(c);
  } else if (c.command == "solve-forward") {
    rep = cmd_solve_forward(c);
  } else if (c.command == "find-critical") {
    rep = cmd_find_critical(c);
  } else if (c.command == "sweep") {
    rep = cmd_sweep(c);
  } else if (c.command == "reconstruct") {
    rep = cmd_reconstruct(c);
  } else if (c.command == "delta-test") {
    rep = cmd_delta_test(c);
  } else {
    fail(ErrorKind::Domain, "unknown command '" + c.command + "'");
  }
  if (c.timing) {
    rep.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return rep;
}

int main_entry(int argc, const char* const* argv, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"Self-similar profiles of the critical p-Laplacian Keller-Segel system"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::optional<double> a, b;
  std::string bracket;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--N", cfg.N, "spatial dimension")->required();
    sub->add_option("--p", cfg.p, "diffusion exponent")->required();
    sub->add_option("--chi", cfg.chi, "chemotactic sensitivity")->capture_default_str();
    sub->add_option("--r-max", cfg.r_max, "integration radius");
    sub->add_option("--rel-tol", cfg.rel_tol)->capture_default_str();
    sub->add_option("--abs-tol", cfg.abs_tol)->capture_default_str();
    sub->add_option("--event-tol", cfg.event_tol)->capture_default_str();
    sub->add_option("--output", cfg.output, "output file (stdout if omitted)");
    sub->add_option("--format", cfg.format)
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    sub->add_option("--gnuplot", cfg.gnuplot, "also write a gnuplot script here");
    sub->add_flag("--timing", cfg.timing, "record wall-clock time in the report");
  };
  auto add_height = [&](CLI::App* sub) {
    sub->add_option("--a", a, "initial height u(0) (p != 2)");
    sub->add_option("--b", b, "initial value u(0) (p = 2)");
  };
  auto add_bracket = [&](CLI::App* sub) {
    sub->add_option("--bracket", bracket, "a_lo:a_hi");
    sub->add_option("--slope-tol", cfg.slope_tol)->capture_default_str();
  };
  auto add_direction = [&](CLI::App* sub) {
    sub->add_option("--direction", cfg.direction)
        ->check(CLI::IsMember({"backward", "forward"}))
        ->capture_default_str();
    sub->add_option("--T", cfg.T, "blow-up time")->capture_default_str();
    sub->add_option("--points", cfg.points, "grid resolution")->capture_default_str();
  };

  CLI::App* sb = app.add_subcommand("solve-backward", "integrate a backward profile");
  add_common(sb);
  add_height(sb);
  CLI::App* sf = app.add_subcommand("solve-forward", "integrate a forward profile");
  add_common(sf);
  add_height(sf);
  sf->add_flag("--fit-decay", cfg.fit_decay, "fit the tail decay law");
  CLI::App* fc = app.add_subcommand("find-critical", "bisect for the critical height");
  add_common(fc);
  add_bracket(fc);
  CLI::App* sw = app.add_subcommand("sweep", "classify a grid of heights");
  add_common(sw);
  sw->add_option("--a-grid", cfg.grid, "log:lo:hi:n or lin:lo:hi:n");
  sw->add_option("--threads", cfg.threads)->capture_default_str();
  sw->add_option("--slope-tol", cfg.slope_tol)->capture_default_str();
  CLI::App* rc = app.add_subcommand("reconstruct", "build phi, psi and the mass");
  add_common(rc);
  add_height(rc);
  add_direction(rc);
  rc->add_option("--bracket", bracket, "a_lo:a_hi");
  CLI::App* dt = app.add_subcommand("delta-test", "Gaussian concentration test");
  add_common(dt);
  add_height(dt);
  add_direction(dt);
  dt->add_option("--bracket", bracket, "a_lo:a_hi");
  dt->add_option("--times", cfg.times, "geom:s0:ratio:n (distance to singular time)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error[UsageError]: " << e.what() << "\n";
    return 2;
  }
  for (CLI::App* sub : app.get_subcommands()) cfg.command = sub->get_name();

  try {
    if (a && b) fail(ErrorKind::Domain, "give either --a or --b, not both");
    if (a) cfg.a_or_b = a;
    if (b) cfg.a_or_b = b;
    if (!bracket.empty()) {
      auto pos = bracket.find(':');
      if (pos == std::string::npos) fail(ErrorKind::Domain, "bracket must be lo:hi");
      try {
        cfg.bracket = std::make_pair(std::stod(bracket.substr(0, pos)),
                                     std::stod(bracket.substr(pos + 1)));
      } catch (const std::exception&) {
        fail(ErrorKind::Domain, "bracket bounds must be numbers");
      }
    }
    RunReport rep = run(cfg);
    std::string main_text = cfg.format == "json" ? serialize(rep) : to_csv(rep.table);
    if (cfg.output.empty()) {
      out << main_text;
    } else {
      std::ofstream f(cfg.output, std::ios::binary);
      if (!f) fail(ErrorKind::Domain, "cannot open output file " + cfg.output);
      f << main_text;
      if (cfg.format == "csv") {
        std::string stem = cfg.output;
        auto dot = stem.rfind('.');
        auto slash = stem.find_last_of('/');
        if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
          stem.resize(dot);
        }
        std::ofstream fj(stem + ".json", std::ios::binary);
        fj << serialize(rep);
      }
    }
    if (!cfg.gnuplot.empty()) {
      std::ofstream g(cfg.gnuplot, std::ios::binary);
      g << gnuplot_script(rep, cfg.output.empty() ? "data.csv" : cfg.output);
    }
  } catch (const Error& e) {
    err << "error[" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error[Internal]: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace selfsim::cli
