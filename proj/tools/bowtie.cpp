// bowtie: command-line front end for the bow-tie field-enhancement lab.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "bowtie/acceptance.hpp"
#include "bowtie/io.hpp"

using namespace bowtie;

namespace {

enum Exit { kPass = 0, kVerdict = 1, kUsage = 2, kGate = 3 };

struct Flags {
  std::string config;
  std::string out;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
};

RunConfig load(const std::string& command, const Flags& fl) {
  RunConfig c = fl.config.empty() ? default_config(command) : parse_config(read_json_file(fl.config), command);
  if (!fl.out.empty()) c.output = fl.out;
  if (fl.seed) c.seed = *fl.seed;
  return c;
}

json angle_echo(const ApertureAngles& a) {
  return {{"beta1", beta(a.alpha1())}, {"beta2", beta(a.alpha2())}, {"gamma", gamma_exponent(a)},
          {"q", to_json(q_point(a))}};
}

int cmd_singular(const RunConfig& c) {
  const SingularBasis s(c.angles());
  OutputDir out(c.output);
  const CsvTable t = singular_table(s, c.grid, c.seed);
  out.write("singular.csv", t.str());
  out.write("plot_singular.py", plot_singular_script());
  json res = angle_echo(c.angles());
  res["b"] = c.grid.b;
  out.finish(config_echo(c), res);
  std::cout << "wrote " << out.path() << "/singular.csv\n";
  return kPass;
}

json corrector_results(const CorrectorSolution& s) {
  json r = angle_echo(s.angles());
  r["a"] = s.a();
  r["b"] = s.b();
  r["r_t"] = s.r_t();
  r["rho0"] = s.rho0();
  r["tail"] = s.tail();
  r["diagnostics"] = to_json(s.diagnostics());
  return r;
}

int cmd_corrector(const RunConfig& c) {
  OutputDir out(c.output);
  CorrectorSolution s(c.angles(), c.corrector);
  try {
    s.solve();
  } catch (const SolverError& e) {
    json r = angle_echo(c.angles());
    r["error"] = e.what();
    out.finish(config_echo(c), r);
    std::cerr << "gate failure: " << e.what() << "\n";
    return kGate;
  }
  out.write_json("corrector.json", s.to_json());
  const GapFrame& g = s.basis().gap();
  const Vec2 dir = unit(g.ref_angle - 0.5 * s.opening());
  CsvTable ray({"rho", "w", "grad_w", "Phi"});
  for (int i = 0; i <= 48; ++i) {
    const double rho = 0.1 * std::pow(10.0, i / 16.0);
    const Vec2 x = g.q + dir * rho;
    if (!g.in_pi(x)) continue;
    ray.row({rho, s.eval_w(x), norm(s.eval_grad_w(x)), s.eval_Phi(x)});
  }
  out.write("corrector_ray.csv", ray.str());
  out.write("plot_corrector.py", plot_corrector_script());
  json r = corrector_results(s);
  r["decay_exponent"] = accept::corrector_decay(s);
  out.finish(config_echo(c), r);
  std::cout << "a = " << s.a() << "  b = " << s.b() << "\n";
  std::cerr << "corrector solve " << s.diagnostics().seconds << " s\n";
  return kPass;
}

int cmd_solve(const RunConfig& c) {
  const BowTieGeometry g(c.angles(), c.eps, c.edge_len, c.delta);
  OutputDir out(c.output);
  const FieldSolver fs(g, c.mesh);
  const PotentialSolution u = fs.solve_u(c.h);
  const PotentialSolution q = fs.solve_q();
  json r = angle_echo(c.angles());
  r["eps"] = c.eps;
  r["solver"] = to_json(fs.diagnostics());
  r["residual_u"] = u.boundary_residual();
  r["residual_q"] = q.boundary_residual();
  if (!(u.boundary_residual() < c.residual_gate) || !(q.boundary_residual() < c.residual_gate)) {
    r["error"] = "boundary residual above gate " + num(c.residual_gate);
    out.finish(config_echo(c), r);
    std::cerr << "gate failure: boundary residual " << u.boundary_residual() << " / " << q.boundary_residual() << "\n";
    return kGate;
  }
  const DerivedConstants dc = derived_constants(u, q, g);
  r["c"] = {u.constant(1), u.constant(2)};
  r["d"] = {q.constant(1), q.constant(2)};
  r["derived"] = to_json(dc);
  r["a_eps"] = dc.a_eps;
  r["identity_residual"] = potential_difference_identity(u, q);
  r["flux"] = {q.flux(1), q.flux(2)};

  const CorrectorSolution corr = solve_corrector(c.angles(), c.corrector);
  r["corrector"] = corrector_results(corr);
  const auto samples = decomposition_residuals(
      u, corr, dc,
      log_polar_batch(g, c.sweep.e_batch_lo * c.eps, c.sweep.decomposition.delta1 * (1.0 - 1e-9),
                      c.sweep.batch_per_decade, c.sweep.batch_angular),
      c.sweep.decomposition);
  out.write("field.csv", field_table(u, samples).str());
  out.write("geometry.csv", geometry_table(g).str());
  out.write("plot_field.py", plot_field_script());
  out.finish(config_echo(c), r);
  std::cout << "a_eps = " << dc.a_eps << "  delta_q = " << dc.delta_q << "\n";
  return kPass;
}

int cmd_sweep(const RunConfig& c, int jobs) {
  OutputDir out(c.output);
  const ScalingReport rep = run_sweep(c.sweep, jobs);
  out.write_json("report.json", to_json(rep));
  out.write("sweep_eps.csv", sweep_eps_table(rep).str());
  out.write("sweep_probes.csv", sweep_probe_table(rep).str());
  out.write("verdicts.csv", verdict_table(rep).str());
  out.write("plot_sweep.py", plot_sweep_script());
  out.finish(config_echo(c), {{"all_pass", rep.all_pass()}, {"complete", rep.complete()}});
  for (const auto& p : rep.pairs) {
    for (const auto& r : p.records)
      if (!r.ok) std::cout << "eps " << r.eps << " failed: " << r.error << "\n";
    for (const auto& v : p.verdicts)
      std::printf("%s  %-28s measured %-12.6g %s\n", v.pass ? "PASS" : "FAIL", v.id.c_str(), v.measured,
                  v.tolerance.c_str());
  }
  if (rep.gate_failure()) return kGate;
  return rep.all_pass() ? kPass : kVerdict;
}

int cmd_verify(const RunConfig& c, int jobs) {
  OutputDir out(c.output);
  AcceptanceOptions o;
  o.seed = c.seed;
  o.jobs = jobs;
  o.plan = c.sweep;
  const AcceptanceRun run = run_acceptance(o, [](const CriterionResult& r) {
    std::cout << format_result(r) << std::endl;
  });
  json res = json::array();
  for (const auto& r : run.results)
    res.push_back({{"criterion", r.id}, {"title", r.title}, {"pass", r.pass}, {"summary", r.summary}});
  out.write_json("acceptance.json", {{"criteria", res}, {"all_pass", run.all_pass()}});
  out.write_json("report.json", to_json(run.sweep));
  out.finish(config_echo(c), {{"all_pass", run.all_pass()}});
  return run.all_pass() ? kPass : kVerdict;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bowtie: gradient blow-up in the bow-tie gap"};
  app.require_subcommand(1);
  Flags fl;
  const char* names[][2] = {{"singular", "evaluate the corner and gap-angle functions on a grid"},
                            {"corrector", "solve the cone corrector and extract a, b"},
                            {"solve", "solve one bow-tie field problem"},
                            {"sweep", "run the eps sweep and render verdicts"},
                            {"verify", "run the full acceptance suite"}};
  for (auto& n : names) {
    CLI::App* sub = app.add_subcommand(n[0], n[1]);
    sub->add_option("--config", fl.config, "configuration JSON file")->check(CLI::ExistingFile);
    sub->add_option("--out", fl.out, "output directory");
    sub->add_option("--jobs", fl.jobs, "parallel eps solves")->check(CLI::PositiveNumber);
    sub->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) { fl.seed = s; },
                                            "seed for probe sampling");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    const RunConfig c = load(cmd, fl);
    if (cmd == "singular") return cmd_singular(c);
    if (cmd == "corrector") return cmd_corrector(c);
    if (cmd == "solve") return cmd_solve(c);
    if (cmd == "sweep") return cmd_sweep(c, fl.jobs);
    return cmd_verify(c, fl.jobs);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kUsage;
  } catch (const SolverError& e) {
    std::cerr << "solver gate failure: " << e.what() << "\n";
    return kGate;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kUsage;
  }
}
