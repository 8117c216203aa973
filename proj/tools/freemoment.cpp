#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "freemoment/error.hpp"
#include "freemoment/free_gibbs_1d.hpp"
#include "freemoment/free_transport.hpp"
#include "freemoment/io.hpp"
#include "freemoment/measure1d.hpp"
#include "freemoment/moment_measure_1d.hpp"
#include "freemoment/self_check.hpp"

using namespace freemoment;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInvalid = 2;

struct Options {
  bool json_output = false;
  std::string out;
  std::uint64_t seed = 0;

  std::string even_coeffs;
  std::size_t nodes = GridMeasure::kDefaultNodes;

  std::string target;
  std::size_t particles = 512;
  double moment_tol = 1e-10;

  std::string series;
  int degree = 8;
  double norm_radius = 3.0;
  double ball_radius = 0.24;
  double cutoff = 3.0;
  int trace_cap = 0;
  int verify_degree = 6;
  double tol = 1e-3;

  int trials = 50;
};

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::invalid_input:
    case ErrorCode::out_of_domain:
    case ErrorCode::degenerate_target:
    case ErrorCode::no_admissible_radius:
    case ErrorCode::one_cut_violated:
    case ErrorCode::regime_violation:
      return kExitInvalid;
    case ErrorCode::not_converged:
    case ErrorCode::internal:
      return kExitInternal;
  }
  return kExitInternal;
}

void emit_error(const std::string& code, const std::string& message, const std::string& module) {
  std::cerr << json{{"code", code}, {"message", message}, {"module", module}}.dump() << std::endl;
}

void print_summary(const Options& o, const json& summary, const std::vector<std::pair<std::string, std::string>>& lines) {
  if (o.json_output) {
    std::cout << summary.dump(2) << std::endl;
    return;
  }
  for (const auto& [k, v] : lines) std::cout << k << " = " << v << '\n';
  std::cout.flush();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

EvenPotential read_potential(const std::string& arg) {
  if (std::filesystem::is_regular_file(arg)) {
    const json j = io::read_json_file(arg);
    if (!j.is_object() || !j.contains("even_coeffs") || !j["even_coeffs"].is_array())
      throw Error(ErrorCode::invalid_input, "cli", "potential file needs an \"even_coeffs\" array");
    return EvenPotential(j["even_coeffs"].get<std::vector<double>>());
  }
  return EvenPotential::parse(arg);
}

int cmd_gibbs1d(const Options& o) {
  const EvenPotential u = read_potential(o.even_coeffs);
  const GibbsSolution sol = free_gibbs_measure(u, o.nodes);
  const double hres = hilbert_residual(sol, u);
  const double sd = expectation(sol.measure, [&u](double x) { return x * u.derivative(x); }) - 1.0;

  const std::string prefix = o.out.empty() ? "gibbs1d" : o.out;
  json doc{{"potential", {{"even_coeffs", u.coeffs()}}},
           {"radius", sol.radius},
           {"fourier", sol.fourier},
           {"hilbert_residual", hres},
           {"schwinger_dyson_residual", sd},
           {"measure", io::measure_to_json(sol.measure)}};
  io::write_json_file(prefix + ".json", doc);
  io::write_text_file(prefix + ".csv", io::density_csv(sol.measure));

  json summary{{"command", "gibbs1d"},
               {"radius", sol.radius},
               {"hilbert_residual", hres},
               {"schwinger_dyson_residual", sd},
               {"files", {prefix + ".json", prefix + ".csv"}}};
  print_summary(o, summary, {{"r", fmt(sol.radius)}, {"hilbert_residual", fmt(hres)}});
  return kExitOk;
}

GridMeasure builtin_target(const std::string& name) {
  if (name == "semicircle") return GridMeasure::semicircle();
  if (name == "dirac0") return GridMeasure::from_atoms({{0.0, 1.0}});
  if (name == "quartic_pushforward") {
    const auto nu = free_gibbs_measure(EvenPotential({0.0, 0.25})).measure;
    return pushforward_monotone(nu, [](double x) { return x * x * x; }, [](double x) { return 3.0 * x * x; });
  }
  const std::string two_point = "two_point:";
  if (name.rfind(two_point, 0) == 0) {
    double a = 0.0;
    try {
      std::size_t used = 0;
      a = std::stod(name.substr(two_point.size()), &used);
      if (used != name.size() - two_point.size()) throw std::invalid_argument(name);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::invalid_input, "cli", "cannot parse two_point parameter in '" + name + "'");
    }
    if (!(a > 0.0) || !std::isfinite(a))
      throw Error(ErrorCode::invalid_input, "cli", "two_point parameter must be positive");
    return GridMeasure::from_atoms({{-a, 0.5}, {a, 0.5}});
  }
  throw Error(ErrorCode::invalid_input, "cli", "unknown builtin target '" + name + "'");
}

GridMeasure read_target(const std::string& arg) {
  const std::string builtin = "builtin:";
  if (arg.rfind(builtin, 0) == 0) return builtin_target(arg.substr(builtin.size()));
  return io::measure_from_json(io::read_json_file(arg));
}

int cmd_moment1d(const Options& o) {
  MomentProblem p;
  p.target = read_target(o.target);
  p.n_particles = o.particles;
  p.tol = o.moment_tol;
  const MomentSolution sol = minimize_F(p);
  const auto& r = sol.residuals;

  const std::string path = o.out.empty() ? "moment1d.json" : o.out;
  json doc{{"target", o.target},
           {"n_particles", p.n_particles},
           {"rho_hat", io::measure_to_json(sol.rho_hat)},
           {"particles", sol.particles},
           {"uprime", {{"x", sol.uprime.x}, {"y", sol.uprime.y}}},
           {"functional_value", sol.functional_value},
           {"iterations", sol.iterations},
           {"converged", sol.converged},
           {"grad_norm", sol.grad_norm},
           {"target_barycenter", sol.target_barycenter},
           {"residuals",
            {{"hilbert", r.hilbert}, {"pushforward_w2", r.pushforward_w2}, {"schwinger_dyson", r.schwinger_dyson}}}};
  io::write_json_file(path, doc);

  json summary{{"command", "moment1d"},
               {"converged", sol.converged},
               {"iterations", sol.iterations},
               {"functional_value", sol.functional_value},
               {"residuals", doc["residuals"]},
               {"files", {path}}};
  print_summary(o, summary,
                {{"converged", sol.converged ? "true" : "false"},
                 {"iterations", std::to_string(sol.iterations)},
                 {"functional_value", fmt(sol.functional_value)},
                 {"hilbert_residual", fmt(r.hilbert)},
                 {"pushforward_w2", fmt(r.pushforward_w2)},
                 {"schwinger_dyson_residual", fmt(r.schwinger_dyson)}});
  return kExitOk;
}

json diagnostics_json(const TransportDiagnostics& d) {
  return {{"outer_iterations", d.outer_iterations},
          {"inner_iterations", d.inner_iterations},
          {"final_update_norm", d.final_update_norm},
          {"final_inner_update", d.final_inner_update},
          {"tau_change", d.tau_change},
          {"norm_V", d.norm_V},
          {"norm_W_C", d.norm_W_C},
          {"guaranteed_regime", d.guaranteed_regime},
          {"within_ball", d.within_ball},
          {"contraction_observed", d.contraction_observed},
          {"regime", d.regime()},
          {"outer_updates", d.outer_updates}};
}

int cmd_transport(const Options& o) {
  const NCSeries raw = io::series_from_json(io::read_json_file(o.series));
  if (raw.degree() > o.degree)
    throw Error(ErrorCode::invalid_input, "cli", "W has degree above --degree");
  NCSeries W(raw.n_vars(), o.degree);
  for (const auto& [w, c] : raw.terms()) W.add_term(w, c);

  TransportProblem p{W};
  p.A = o.norm_radius;
  p.R = o.ball_radius;
  p.D = o.degree;
  p.trace_cap = o.trace_cap;
  p.cutoff = o.cutoff;
  const TransportSolution sol = solve_V(p);
  const int vdeg = std::min(o.verify_degree, o.degree);
  const TransportReport rep = verify_transport(sol, W, vdeg);
  const bool passed = rep.deviation < o.tol;

  json map = json::array();
  for (const auto& f : sol.transport_map) map.push_back(io::series_to_json(f));
  const std::string path = o.out.empty() ? "transport.json" : o.out;
  json doc{{"problem",
            {{"W", io::series_to_json(W)},
             {"degree", p.D},
             {"norm_radius", p.A},
             {"ball_radius", p.R},
             {"cutoff", p.cutoff},
             {"trace_cap", sol.tau_Y.degree_cap()}}},
           {"V", io::series_to_json(sol.V)},
           {"V_tilde", io::series_to_json(sol.V_tilde)},
           {"transport_map", map},
           {"tau_Y", io::trace_to_json(sol.tau_Y)},
           {"diagnostics", diagnostics_json(sol.diagnostics)},
           {"verification",
            {{"degree", vdeg},
             {"deviation", rep.deviation},
             {"sd_residual", rep.sd_residual},
             {"tol", o.tol},
             {"passed", passed},
             {"tau_X", io::trace_to_json(rep.tau_X)},
             {"tau_direct", io::trace_to_json(rep.tau_direct)}}}};
  io::write_json_file(path, doc);

  const auto& d = sol.diagnostics;
  json summary{{"command", "transport-nc"},
               {"regime", d.regime()},
               {"norm_V", d.norm_V},
               {"outer_iterations", d.outer_iterations},
               {"deviation", rep.deviation},
               {"sd_residual", rep.sd_residual},
               {"passed", passed},
               {"files", {path}}};
  print_summary(o, summary,
                {{"regime", d.regime()},
                 {"norm_V", fmt(d.norm_V)},
                 {"outer_iterations", std::to_string(d.outer_iterations)},
                 {"deviation", fmt(rep.deviation)},
                 {"sd_residual", fmt(rep.sd_residual)},
                 {"verified", passed ? "true" : "false"}});
  if (!passed) {
    emit_error("regime_violation",
               "verification deviation " + fmt(rep.deviation) + " is not below tol " + fmt(o.tol), "cli");
    return kExitInvalid;
  }
  return kExitOk;
}

int cmd_verify(const Options& o) {
  if (o.trials < 1) throw Error(ErrorCode::invalid_input, "cli", "--trials must be positive");
  std::mt19937_64 rng(o.seed);
  std::vector<checks::CheckResult> results;
  results.push_back(checks::quartic_radius());
  results.push_back(checks::catalan_moments());
  results.push_back(checks::euler_identity(rng, o.trials));
  results.push_back(checks::gradient_square_identity(rng, o.trials));
  results.push_back(checks::gradient_cyclic_part(rng, o.trials));
  results.push_back(checks::single_variable_derivative(rng, o.trials));
  results.push_back(checks::picard_evenness(rng, o.trials));
  results.push_back(checks::picard_contraction(rng, o.trials));

  bool all = true;
  json list = json::array();
  for (const auto& r : results) {
    all = all && r.passed();
    list.push_back({{"name", r.name}, {"trials", r.trials}, {"worst", r.worst}, {"threshold", r.threshold},
                    {"passed", r.passed()}});
  }
  json doc{{"seed", o.seed}, {"checks", list}, {"passed", all}};
  if (!o.out.empty()) io::write_json_file(o.out, doc);
  if (o.json_output) {
    std::cout << doc.dump(2) << std::endl;
  } else {
    for (const auto& r : results)
      std::printf("%s %-28s worst=%.3e threshold=%.1e trials=%d\n", r.passed() ? "PASS" : "FAIL", r.name.c_str(),
                  r.worst, r.threshold, r.trials);
  }
  return all ? kExitOk : kExitInternal;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Free Gibbs measures, free moment measures and free transport."};
  app.require_subcommand(1);
  app.add_flag("--json", o.json_output, "Print a JSON summary instead of text");

  auto* gibbs = app.add_subcommand("gibbs1d", "Free Gibbs measure of an even one-cut potential");
  gibbs->add_option("--even-coeffs", o.even_coeffs, "\"c2,c4,...\" or a JSON file {\"even_coeffs\":[...]}")
      ->required();
  gibbs->add_option("--nodes", o.nodes, "Density grid size")->capture_default_str()->check(CLI::Range(16, 1 << 20));
  gibbs->add_option("--out", o.out, "Output prefix for .json and .csv files (default gibbs1d)");

  auto* moment = app.add_subcommand("moment1d", "Free moment measure of a target law");
  moment->add_option("--target", o.target,
                     "builtin:semicircle, builtin:two_point:a, builtin:quartic_pushforward, builtin:dirac0 or a "
                     "JSON measure file")
      ->required();
  moment->add_option("--particles", o.particles, "Number of particles")->capture_default_str();
  moment->add_option("--tol", o.moment_tol, "Relative objective change for convergence")->capture_default_str();
  moment->add_option("--out", o.out, "Output JSON path (default moment1d.json)");

  auto* transport = app.add_subcommand("transport-nc", "Free transport for an even perturbation of the semicircle");
  transport->add_option("--series", o.series, "JSON file holding the potential W")->required();
  transport->add_option("--degree", o.degree, "Truncation degree D")->capture_default_str();
  transport->add_option("--norm-radius", o.norm_radius, "Norm radius A")->capture_default_str();
  transport->add_option("--ball-radius", o.ball_radius, "Ball radius R")->capture_default_str();
  transport->add_option("--cutoff", o.cutoff, "Trace cutoff T")->capture_default_str();
  transport->add_option("--trace-cap", o.trace_cap, "Trace degree cap (0 picks a default)")->capture_default_str();
  transport->add_option("--verify-degree", o.verify_degree, "Degree of the moment comparison")->capture_default_str();
  transport->add_option("--tol", o.tol, "Verification threshold on the moment deviation")->capture_default_str();
  transport->add_option("--out", o.out, "Output JSON path (default transport.json)");

  auto* verify = app.add_subcommand("verify", "Seeded consistency checks");
  verify->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  verify->add_option("--trials", o.trials, "Random cases per check")->capture_default_str();
  verify->add_option("--out", o.out, "Optional JSON report path");

  for (auto* sub : {gibbs, moment, transport, verify}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    emit_error("invalid_input", e.what(), "cli");
    return kExitInvalid;
  }

  try {
    if (gibbs->parsed()) return cmd_gibbs1d(o);
    if (moment->parsed()) return cmd_moment1d(o);
    if (transport->parsed()) return cmd_transport(o);
    return cmd_verify(o);
  } catch (const Error& e) {
    emit_error(std::string(to_string(e.code())), e.what(), e.module());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    emit_error("internal", e.what(), "cli");
    return kExitInternal;
  }
}
