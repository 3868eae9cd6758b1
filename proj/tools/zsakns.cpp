// zsakns: scenario-driven front end.
//
//   zsakns check --scenario s.json [--out report.json] [--refine] [--timing]
//   zsakns sample --scenario s.json --format csv --out u.csv
//
// Exit status: 0 ok, 1 a check failed, 2 schema error, 3 other error.

#include <iostream>
#include <numbers>

#include "CLI11.hpp"
#include "zsakns/scenario.hpp"

using namespace zsakns;

namespace {

struct Options {
  std::string scenario;
  std::string out;
  std::string format = "csv";
  bool refine = false;
  bool timing = false;
  double s = 1.0;
  double c0 = 1.0;
  double compat_tol = 1e-4;
  double match_tol = 1e-4;
};

void emit(const Options& o, const std::string& text) {
  if (o.out.empty())
    std::cout << text;
  else
    write_file(o.out, text);
}

int finish(const Options& o, const Json& scenario, const std::vector<CheckResult>& checks, double ms) {
  emit(o, report_json(scenario, checks, ms));
  int code = 0;
  for (const CheckResult& r : checks)
    if (!r.pass) {
      std::cerr << "check failed: " << r.name;
      if (!r.error.empty()) std::cerr << " (" << r.error << ")";
      std::cerr << "\n";
      code = 1;
    }
  return code;
}

class Stopwatch {
 public:
  explicit Stopwatch(bool on) : on_(on), t0_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return on_ ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_).count() : 0.0;
  }

 private:
  bool on_;
  std::chrono::steady_clock::time_point t0_;
};

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (int r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(row);
  }
  return rows;
}

int cmd_build(const Options& o) {
  const Scenario sc = load_scenario(o.scenario);
  const DressedSolution s = build_scenario_solution(sc);
  Json out;
  out["n"] = sc.n;
  out["flowDegree"] = sc.flowDegree;
  out["factors"] = Json::array();
  for (const SimpleFactor& f : s.factors) {
    Json jf;
    jf["z"] = {f.z.real(), f.z.imag()};
    jf["rank"] = f.pi.rank();
    jf["projector"] = matrix_json(f.pi.matrix());
    out["factors"].push_back(jf);
  }
  out["fieldAtOrigin"] = matrix_json(field_eval(s, 0.0, 0.0));
  emit(o, out.dump(2) + "\n");
  return 0;
}

int cmd_sample(const Options& o) {
  const Scenario sc = load_scenario(o.scenario);
  const DressedSolution s = build_scenario_solution(sc);
  const ExportFormat f = o.format == "json" ? ExportFormat::Json : ExportFormat::Csv;
  emit(o, render_table(field_table(sample_field(s, sc.grid)), f));
  return 0;
}

int cmd_check(const Options& o) {
  const ScenarioRun run = run_scenario(o.scenario, RunOptions{o.refine}, o.timing);
  emit(o, run.report);
  for (const CheckResult& r : run.checks)
    if (!r.pass) std::cerr << "check failed: " << r.name << (r.error.empty() ? "" : " (" + r.error + ")") << "\n";
  return run.exit_code;
}

int cmd_conserve(const Options& o) {
  const Stopwatch sw(o.timing);
  Scenario sc = load_scenario(o.scenario);
  sc.checks = {{"conservation", std::nullopt}};
  const DressedSolution s = build_scenario_solution(sc);
  const auto checks = run_checks(sc, s, RunOptions{o.refine});
  return finish(o, sc.source, checks, sw.ms());
}

// Sine-Gordon angle of the vacuum dressed by the given factors.
ScalarField angle_of(const FlowSpec& spec, const std::vector<SimpleFactor>& fs, const GridSpec& g) {
  return sine_gordon_angle(dress_solution(vacuum_solution(spec, Involution::Conjugation), fs), g);
}

int cmd_permute(const Options& o) {
  const Stopwatch sw(o.timing);
  Scenario sc = load_scenario(o.scenario);
  sc.checks = {{"permutability", std::nullopt}};
  const DressedSolution s = build_scenario_solution(sc);
  std::vector<CheckResult> checks = run_checks(sc, s, RunOptions{o.refine});

  // Bianchi's algebraic formula, for sine-Gordon flows with two kink factors.
  double c = 0.0;
  try {
    c = sine_gordon_coefficient(s.spec);
  } catch (const Error&) {
    return finish(o, sc.source, checks, sw.ms());
  }
  const SimpleFactor& f1 = s.factors[0];
  const SimpleFactor& f2 = s.factors[1];
  if (!is_pure_imaginary(f1.z) || !is_pure_imaginary(f2.z)) return finish(o, sc.source, checks, sw.ms());
  const double s1 = f1.z.imag(), s2 = f2.z.imag();
  const auto xi2 = permute_factors(f1, f2).second;
  const auto bianchi = [&](const GridSpec& g) {
    return sg_permutability(ScalarField(g, 0.0), angle_of(s.spec, {f1}, g), angle_of(s.spec, {f2}, g), s1, s2, c);
  };
  const GridSpec& g = sc.grid;
  const PermutabilityResult p = bianchi(g);
  const DressedSolution two = dress_solution(vacuum_solution(s.spec), {f1, SimpleFactor::make(f2.z, xi2)});
  ScalarField diff(g, 0.0);
  for (int it = 0; it < g.nt(); ++it)
    for (int ix = 0; ix < g.nx(); ++ix)
      diff(ix, it) = std::remainder(sine_gordon_angle_raw(two, g.x.at(ix), g.t.at(it)) - p.q3(ix, it), 2.0 * std::numbers::pi);
  const ResidualReport d = report_of(diff, 0);
  checks.push_back({"bianchi_vs_dressing", d.maxAbs, d.l2, 1e-6, d.maxAbs <= 1e-6, std::nullopt, {}});
  checks.push_back(detail::residual_check(
      "bianchi_residual", [&](const GridSpec& gg) { return bianchi(gg).residual; }, g, default_tolerance("residual"),
      RunOptions{o.refine}));
  return finish(o, sc.source, checks, sw.ms());
}

int cmd_backlund(const Options& o) {
  const Stopwatch sw(o.timing);
  const Scenario sc = load_scenario(o.scenario);
  const DressedSolution s = build_scenario_solution(sc);
  const double c = sine_gordon_coefficient(s.spec);
  if (c != 1.0) throw Error(ErrorCode::NotApplicable, "backlund-sg needs the flow q_xt = sin q");
  const GridSpec& g = sc.grid;
  const auto run = [&](const GridSpec& gg) { return classical_backlund_sg(sine_gordon_angle(s, gg), o.s, o.c0, o.compat_tol); };
  const ScalarField q = sine_gordon_angle(s, g);
  const BacklundResult b = classical_backlund_sg(q, o.s, o.c0, o.compat_tol);
  std::vector<CheckResult> checks;
  const RunOptions ro{o.refine};
  checks.push_back(detail::residual_check(
      "backlund_system", [&](const GridSpec& gg) { return run(gg).residual; }, g, default_tolerance("residual"), ro));
  checks.push_back(detail::residual_check(
      "residual_sine_gordon_qstar",
      [&](const GridSpec& gg) { return report_of(sine_gordon_residual(run(gg).qstar)); }, g, default_tolerance("residual"), ro));

  // Same step by dressing: pole i s, projector onto (cos f0/2, sin f0/2).
  const auto [ix0, it0] = origin_node(g);
  const double f0 = 0.5 * (q(ix0, it0) + o.c0);
  Matrix v(2, 1);
  v(0, 0) = std::cos(0.5 * f0);
  v(1, 0) = std::sin(0.5 * f0);
  const DressedSolution d = dress_solution(s, SimpleFactor::from_basis(cplx(0.0, o.s), v));
  ScalarField diff(g, 0.0);
  for (int it = 0; it < g.nt(); ++it)
    for (int ix = 0; ix < g.nx(); ++ix)
      diff(ix, it) =
          std::remainder(sine_gordon_angle_raw(d, g.x.at(ix), g.t.at(it)) - b.qstar(ix, it), 2.0 * std::numbers::pi);
  const ResidualReport rep = report_of(diff, 0);
  checks.push_back({"dressing_match", rep.maxAbs, rep.l2, o.match_tol, rep.maxAbs <= o.match_tol, std::nullopt, {}});
  return finish(o, sc.source, checks, sw.ms());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ZS-AKNS dressing and hierarchy engine"};
  app.require_subcommand(1);
  Options o;
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--scenario", o.scenario, "scenario JSON file")->required();
    sub->add_option("--out", o.out, "output file (default stdout)");
    sub->add_flag("--timing", o.timing, "record wall time in the report");
    return sub;
  };
  auto* build = common(app.add_subcommand("build", "build the dressed solution and print its factors"));
  auto* samp = common(app.add_subcommand("sample", "export u on the scenario grid"));
  samp->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  auto* check = common(app.add_subcommand("check", "run the scenario's checks"));
  auto* cons = common(app.add_subcommand("conserve", "drift of F_{a,1..3} over the time axis"));
  auto* perm = common(app.add_subcommand("permute-check", "permutability of the first two factors"));
  auto* back = common(app.add_subcommand("backlund-sg", "classical sine-Gordon Backlund step against dressing"));
  back->add_option("--s", o.s, "Backlund parameter");
  back->add_option("--c0", o.c0, "value of q* at the origin");
  back->add_option("--compat-tol", o.compat_tol, "allowed x-then-t / t-then-x disagreement");
  back->add_option("--match-tol", o.match_tol, "allowed distance between the classical and dressed q*");
  for (CLI::App* sub : {check, cons, perm, back}) sub->add_flag("--refine", o.refine, "also run the h/2 grid and report orders");

  CLI11_PARSE(app, argc, argv);
  try {
    if (build->parsed()) return cmd_build(o);
    if (samp->parsed()) return cmd_sample(o);
    if (check->parsed()) return cmd_check(o);
    if (cons->parsed()) return cmd_conserve(o);
    if (perm->parsed()) return cmd_permute(o);
    if (back->parsed()) return cmd_backlund(o);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return e.code() == ErrorCode::SchemaError || e.code() == ErrorCode::NotApplicable ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 3;
  }
  return 3;
}
