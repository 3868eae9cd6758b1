#pragma once

// Scenario files: JSON input, solution construction, named checks, reports
// and grid export. Everything written here is deterministic: fixed key order,
// fixed float formatting, fixed row order.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "zsakns/equations.hpp"

namespace zsakns {

using Json = nlohmann::ordered_json;

struct CheckRequest {
  std::string name;
  std::optional<double> tolerance;
};

struct ScenarioFactor {
  cplx z;
  Matrix basis;  // n x k, columns span the image of pi
};

struct Scenario {
  int n = 2;
  std::vector<double> aDiag, bDiag;  // a = i diag(aDiag)
  int flowDegree = 2;
  std::vector<ScenarioFactor> factors;
  Involution involution = Involution::None;
  GridSpec grid;
  std::vector<CheckRequest> checks;
  std::vector<cplx> lambdaSamples;
  Json source;  // the parsed file, echoed into reports
};

inline const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names = {
      "closed_form",         "projector_invariants", "residual_nls",       "residual_matrix_nls",
      "residual_matrix_mkdv", "residual_sine_gordon", "residual_nwave",     "residual_gnls",
      "residual_harmonic_map", "zero_curvature",     "conservation",       "permutability",
      "scaling"};
  return names;
}

inline double default_tolerance(const std::string& check) {
  if (check == "closed_form" || check == "permutability" || check == "scaling") return 1e-10;
  if (check == "projector_invariants") return 1e-11;
  if (check == "conservation") return 1e-6;
  return 1e-1;  // residuals: O(h^2) truncation on typical grids
}

// ---------------------------------------------------------------------------
// parsing

namespace detail {

[[noreturn]] inline void schema_fail(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::SchemaError, path + ": " + msg);
}

inline const Json& member(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) schema_fail(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) schema_fail(path.empty() ? key : path + "." + key, "missing field");
  return *it;
}

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
inline std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline double real_of(const Json& v, const std::string& path) {
  if (!v.is_number()) schema_fail(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) schema_fail(path, "must be finite");
  return d;
}

inline int int_of(const Json& v, const std::string& path) {
  if (!v.is_number_integer()) schema_fail(path, "expected an integer");
  return v.get<int>();
}

inline cplx complex_of(const Json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2) schema_fail(path, "expected a complex number [re, im]");
  return {real_of(v[0], at(path, 0)), real_of(v[1], at(path, 1))};
}

inline std::vector<double> reals_of(const Json& v, const std::string& path, std::size_t n) {
  if (!v.is_array() || v.size() != n) schema_fail(path, "expected an array of " + std::to_string(n) + " numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(real_of(v[i], at(path, i)));
  return out;
}

inline Axis axis_of(const Json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 3) schema_fail(path, "expected [lo, hi, nodes]");
  return {real_of(v[0], at(path, 0)), real_of(v[1], at(path, 1)), int_of(v[2], at(path, 2))};
}

inline Matrix basis_of(const Json& v, const std::string& path, int n) {
  if (!v.is_array() || static_cast<int>(v.size()) != n) schema_fail(path, "expected " + std::to_string(n) + " rows");
  int k = -1;
  Matrix m;
  for (int r = 0; r < n; ++r) {
    const Json& row = v[static_cast<std::size_t>(r)];
    const std::string rp = at(path, static_cast<std::size_t>(r));
    if (!row.is_array() || row.empty()) schema_fail(rp, "expected a nonempty row of [re, im] pairs");
    if (k < 0) {
      k = static_cast<int>(row.size());
      if (k >= n) schema_fail(rp, "need fewer columns than rows");
      m = Matrix(n, k);
    }
    if (static_cast<int>(row.size()) != k) schema_fail(rp, "rows must have equal length");
    for (int c = 0; c < k; ++c) m(r, c) = complex_of(row[static_cast<std::size_t>(c)], at(rp, static_cast<std::size_t>(c)));
  }
  return m;
}

inline std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

inline Scenario parse_scenario(const std::string& text) {
  using namespace detail;
  Scenario sc;
  try {
    sc.source = Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::string what = e.what();
    const auto colon = what.rfind(": ");
    throw Error(ErrorCode::SchemaError, line_column(text, e.byte == 0 ? 0 : e.byte - 1) + ": " +
                                            (colon == std::string::npos ? what : what.substr(colon + 2)));
  }
  const Json& j = sc.source;
  if (!j.is_object()) schema_fail("(root)", "expected an object");

  sc.n = int_of(member(j, "n", ""), "n");
  if (sc.n < 2 || sc.n > kMaxDim) schema_fail("n", "must be between 2 and " + std::to_string(kMaxDim));
  sc.aDiag = reals_of(member(j, "aDiag", ""), "aDiag", static_cast<std::size_t>(sc.n));
  sc.bDiag = reals_of(member(j, "bDiag", ""), "bDiag", static_cast<std::size_t>(sc.n));
  if (DiagonalGenerator(sc.aDiag).is_zero()) schema_fail("aDiag", "a must be nonzero");
  sc.flowDegree = int_of(member(j, "flowDegree", ""), "flowDegree");
  if (sc.flowDegree == 0 || sc.flowDegree < -1) schema_fail("flowDegree", "must be -1 or positive");

  const Json& inv = member(j, "involution", "");
  if (inv == "none")
    sc.involution = Involution::None;
  else if (inv == "conjugation")
    sc.involution = Involution::Conjugation;
  else
    schema_fail("involution", "expected \"none\" or \"conjugation\"");

  const Json& fs = member(j, "factors", "");
  if (!fs.is_array()) schema_fail("factors", "expected an array");
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const std::string p = at("factors", i);
    ScenarioFactor f;
    f.z = complex_of(member(fs[i], "z", p), join(p, "z"));
    if (f.z.imag() == 0.0) schema_fail(join(p, "z"), "Im z must be nonzero");
    f.basis = basis_of(member(fs[i], "basisColumns", p), join(p, "basisColumns"), sc.n);
    sc.factors.push_back(f);
  }

  const Json& g = member(j, "grid", "");
  sc.grid = GridSpec{axis_of(member(g, "x", "grid"), "grid.x"), axis_of(member(g, "t", "grid"), "grid.t")};
  try {
    sc.grid.validate();
  } catch (const Error& e) {
    schema_fail("grid", e.what());
  }

  const Json& cs = member(j, "checks", "");
  if (!cs.is_array()) schema_fail("checks", "expected an array");
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const std::string p = at("checks", i);
    CheckRequest rq;
    if (cs[i].is_string()) {
      rq.name = cs[i].get<std::string>();
    } else {
      const Json& nm = member(cs[i], "name", p);
      if (!nm.is_string()) schema_fail(join(p, "name"), "expected a string");
      rq.name = nm.get<std::string>();
      if (cs[i].contains("tolerance")) rq.tolerance = real_of(cs[i]["tolerance"], join(p, "tolerance"));
    }
    const auto& known = check_names();
    if (std::find(known.begin(), known.end(), rq.name) == known.end()) schema_fail(p, "unknown check '" + rq.name + "'");
    sc.checks.push_back(rq);
  }

  if (j.contains("lambdaSamples")) {
    const Json& ls = j["lambdaSamples"];
    if (!ls.is_array() || ls.empty()) schema_fail("lambdaSamples", "expected a nonempty array of [re, im]");
    for (std::size_t i = 0; i < ls.size(); ++i) sc.lambdaSamples.push_back(complex_of(ls[i], at("lambdaSamples", i)));
  } else {
    sc.lambdaSamples = default_spectral_samples(sc.flowDegree);
  }
  return sc;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

inline Scenario load_scenario(const std::string& path) { return parse_scenario(read_file(path)); }

inline FlowSpec scenario_flow(const Scenario& sc) {
  return make_flow(DiagonalGenerator(sc.aDiag), DiagonalGenerator(sc.bDiag), sc.flowDegree);
}

/// Dresses the vacuum by the scenario's factors, in file order. Violations of
/// the factor constraints are schema errors naming the factor.
inline DressedSolution build_scenario_solution(const Scenario& sc) {
  DressedSolution s = vacuum_solution(scenario_flow(sc), sc.involution);
  for (std::size_t i = 0; i < sc.factors.size(); ++i) {
    try {
      s = dress_solution(s, SimpleFactor::from_basis(sc.factors[i].z, sc.factors[i].basis));
    } catch (const Error& e) {
      detail::schema_fail(detail::at("factors", i), e.what());
    }
  }
  if (s.involution == Involution::Conjugation) {
    try {
      validate_involution(s.factors, false);
    } catch (const Error& e) {
      detail::schema_fail("factors", e.what());
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// checks

struct CheckResult {
  std::string name;
  double maxAbs = 0.0;
  double l2 = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::optional<double> order;
  std::string error;  // numerical failure inside the check
};

struct RunOptions {
  bool refine = false;
  double min_order = 1.68;  // factor 4 - 20% per halving
};

namespace detail {

inline bool same_generator(const DiagonalGenerator& a, const DiagonalGenerator& b) { return a.imag_parts() == b.imag_parts(); }

/// k with a = diag(i I_k, -i I_{n-k}), or 0.
inline int grassmannian_split(const DiagonalGenerator& a) {
  int k = 0;
  while (k < a.dim() && a.imag_part(k) == 1.0) ++k;
  for (int i = k; i < a.dim(); ++i)
    if (a.imag_part(i) != -1.0) return 0;
  return k > 0 && k < a.dim() ? k : 0;
}

[[noreturn]] inline void not_applicable(const std::string& msg) { throw Error(ErrorCode::NotApplicable, msg); }

inline void require(bool ok, const std::string& msg) {
  if (!ok) not_applicable(msg);
}

template <class T>
ResidualReport difference_report(const GridField<T>& x, const GridField<T>& y) {
  GridField<T> d = x;
  for (std::size_t i = 0; i < d.values().size(); ++i) d.values()[i] = x.values()[i] - y.values()[i];
  return report_of(d, 0);
}

using ResidualOn = std::function<ResidualReport(const GridSpec&)>;

/// Residual-type check on the scenario grid, optionally with its refinement.
inline CheckResult residual_check(const std::string& name, const ResidualOn& on, const GridSpec& g, double tol,
                                  const RunOptions& opt) {
  CheckResult r{name, 0.0, 0.0, tol, false, std::nullopt, {}};
  const ResidualReport coarse = on(g);
  r.maxAbs = coarse.maxAbs;
  r.l2 = coarse.l2;
  r.pass = coarse.maxAbs <= tol;
  if (opt.refine) {
    const ResidualReport fine = on(g.refined());
    if (fine.maxAbs > 0.0 && coarse.maxAbs > 0.0) r.order = std::log2(coarse.maxAbs / fine.maxAbs);
    const bool exact = fine.maxAbs <= 1e-10;
    r.pass = r.pass && (exact || (r.order && *r.order >= opt.min_order));
  }
  return r;
}

inline CheckResult plain_check(const std::string& name, const ResidualReport& rep, double tol) {
  return {name, rep.maxAbs, rep.l2, tol, rep.maxAbs <= tol, std::nullopt, {}};
}

}  // namespace detail

/// Runs one named check. NotApplicable / ShapeMismatch mean the scenario asks
/// for a check its flow cannot support; other errors are numerical failures.
inline std::vector<CheckResult> run_check(const Scenario& sc, const DressedSolution& s, const std::string& name, double tol,
                                          const RunOptions& opt) {
  using namespace detail;
  const FlowSpec& spec = s.spec;
  const GridSpec& g = sc.grid;
  const int j = spec.j;

  if (name == "closed_form") {
    const int sign = soliton_orientation(spec.a);
    require(j > 0 && same_generator(spec.a, spec.b) && sign != 0,
            "closed_form needs b = a = +-diag(i, -i, ..., -i) and a positive flow");
    require(s.factors.size() == 1 && s.factors[0].pi.rank() == 1, "closed_form needs exactly one rank-one factor");
    const Matrix& col = s.factors[0].basis;
    require(std::abs(col(0, 0)) > 1e-12, "closed_form needs a basis vector with nonzero first entry");
    std::vector<cplx> v;
    for (int k = 1; k < s.dim(); ++k) v.push_back(col(k, 0) / col(0, 0));
    const SampledField closed = sample(g, one_soliton_closed_form(s.factors[0].z, v, j, sign));
    return {plain_check(name, difference_report(sample_field(s, g), closed), tol)};
  }

  if (name == "projector_invariants") {
    ScalarField defect(g, 0.0);
    for (int it = 0; it < g.nt(); ++it)
      for (int ix = 0; ix < g.nx(); ++ix)
        for (const Matrix& p : transport_all(s, g.x.at(ix), g.t.at(it)).transported)
          defect(ix, it) = std::max(defect(ix, it), projector_defect(p));
    return {plain_check(name, report_of(defect, 0), tol)};
  }

  if (name == "residual_nls") {
    const int sign = soliton_orientation(spec.a);
    require(s.dim() == 2 && j == 2 && same_generator(spec.a, spec.b) && sign != 0,
            "residual_nls needs n = 2, j = 2, b = a = +-diag(i, -i)");
    const int r = sign > 0 ? 0 : 1;
    return {residual_check(
        name, [&](const GridSpec& gg) { return residual(EquationId::NLS, entry(sample_field(s, gg), r, 1 - r)); }, g, tol, opt)};
  }

  if (name == "residual_matrix_nls" || name == "residual_matrix_mkdv" || name == "residual_gnls") {
    const int k = grassmannian_split(spec.a);
    const int want = name == "residual_matrix_mkdv" ? 3 : 2;
    require(k > 0 && same_generator(spec.a, spec.b) && j == want,
            name + " needs b = a = diag(i I_k, -i I_m) and j = " + std::to_string(want));
    if (name == "residual_gnls")
      return {residual_check(
          name, [&](const GridSpec& gg) { return gnls_gauge_transform(upper_block(sample_field(s, gg), k), 2, 1e-4).residual; },
          g, tol, opt)};
    const EquationId eq = want == 2 ? EquationId::MatrixNLS : EquationId::MatrixMKdV;
    return {residual_check(name, [&](const GridSpec& gg) { return residual(eq, upper_block(sample_field(s, gg), k)); }, g, tol,
                           opt)};
  }

  if (name == "residual_sine_gordon") {
    EquationParams p;
    p.sg_coefficient = sine_gordon_coefficient(spec);
    return {residual_check(name, [&](const GridSpec& gg) { return residual(EquationId::SineGordon, sine_gordon_angle(s, gg), p); },
                           g, tol, opt)};
  }

  if (name == "residual_nwave") {
    require(j == 1 && spec.a.regular(), "residual_nwave needs j = 1 and regular a");
    EquationParams p;
    p.a = spec.a;
    p.b = spec.b;
    return {residual_check(name, [&](const GridSpec& gg) { return residual(EquationId::NWave, sample_field(s, gg), p); }, g, tol,
                           opt)};
  }

  if (name == "residual_harmonic_map") {
    require(j == -1, "residual_harmonic_map needs j = -1");
    return {residual_check(name, [&](const GridSpec& gg) { return harmonic_map_from_frame(s, gg).residual; }, g, tol, opt)};
  }

  if (name == "zero_curvature") {
    return {residual_check(name, [&](const GridSpec& gg) { return zero_curvature_residual(s, sc.lambdaSamples, gg); }, g, tol,
                           opt)};
  }

  if (name == "conservation") {
    require(g.nt() >= 2, "conservation needs at least 2 time nodes");
    const SampledField u = sample_field(s, g);
    std::vector<CheckResult> out;
    for (int k = 1; k <= 3; ++k) {
      const std::vector<double> f = hamiltonian(spec.a, k, u, 6);
      double mean = 0.0, ss = 0.0;
      for (double v : f) mean += v / static_cast<double>(f.size());
      for (double v : f) ss += (v - mean) * (v - mean) / static_cast<double>(f.size());
      const double drift = conservation_report(f);
      out.push_back({name + "_F" + std::to_string(k), drift, std::sqrt(ss) / std::max(1.0, std::abs(mean)), tol, drift <= tol,
                     std::nullopt, {}});
    }
    return out;
  }

  if (name == "permutability") {
    require(s.factors.size() >= 2, "permutability needs at least two factors");
    const SimpleFactor& f1 = s.factors[0];
    const SimpleFactor& f2 = s.factors[1];
    const auto [xi1, xi2] = permute_factors(f1, f2);
    const DressedSolution s0 = vacuum_solution(spec);
    const DressedSolution p = dress_solution(s0, {f1, SimpleFactor::make(f2.z, xi2)});
    const DressedSolution q = dress_solution(s0, {f2, SimpleFactor::make(f1.z, xi1)});
    return {plain_check(name, difference_report(sample_field(p, g), sample_field(q, g)), tol)};
  }

  if (name == "scaling") {
    const double r = 2.0;
    const SampledField lhs = sample(g, scale_action(r, s));
    const SampledField rhs = sample_field(scale_poles(s, r), g);
    return {plain_check(name, difference_report(lhs, rhs), tol)};
  }

  throw Error(ErrorCode::SchemaError, "unknown check '" + name + "'");
}

/// All requested checks in file order. A check that does not apply to the
/// scenario is a schema error naming it.
inline std::vector<CheckResult> run_checks(const Scenario& sc, const DressedSolution& s, const RunOptions& opt = {}) {
  std::vector<CheckResult> out;
  for (std::size_t i = 0; i < sc.checks.size(); ++i) {
    const CheckRequest& rq = sc.checks[i];
    const double tol = rq.tolerance.value_or(default_tolerance(rq.name));
    try {
      for (CheckResult& r : run_check(sc, s, rq.name, tol, opt)) out.push_back(std::move(r));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NotApplicable || e.code() == ErrorCode::ShapeMismatch || e.code() == ErrorCode::SchemaError)
        detail::schema_fail(detail::at("checks", i), e.what());
      CheckResult r{rq.name, std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(), tol, false,
                    std::nullopt, e.what()};
      out.push_back(r);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// reports

inline Json check_json(const CheckResult& r) {
  Json c;
  c["name"] = r.name;
  c["maxAbs"] = r.maxAbs;
  c["l2"] = r.l2;
  c["tolerance"] = r.tolerance;
  c["pass"] = r.pass;
  if (r.order) c["order"] = *r.order;
  if (!r.error.empty()) c["error"] = r.error;
  return c;
}

inline std::string report_json(const Json& scenario, const std::vector<CheckResult>& checks, double wall_ms) {
  Json rep;
  rep["scenario"] = scenario;
  rep["checks"] = Json::array();
  for (const CheckResult& r : checks) rep["checks"].push_back(check_json(r));
  rep["wallTimeMs"] = wall_ms;
  return rep.dump(2) + "\n";
}

inline bool all_pass(const std::vector<CheckResult>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& r) { return r.pass; });
}

// ---------------------------------------------------------------------------
// grid export

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Columns x, t, then re/im of every entry of u in row-major order
/// (re_u_1_1, im_u_1_1, re_u_1_2, ...). Rows run over x fastest.
inline Table field_table(const SampledField& u) {
  const GridSpec& g = u.grid();
  const int n = static_cast<int>(u.values().front().rows());
  Table tb;
  tb.columns = {"x", "t"};
  for (int r = 1; r <= n; ++r)
    for (int c = 1; c <= n; ++c) {
      const std::string tag = "u_" + std::to_string(r) + "_" + std::to_string(c);
      tb.columns.push_back("re_" + tag);
      tb.columns.push_back("im_" + tag);
    }
  for (int it = 0; it < g.nt(); ++it)
    for (int ix = 0; ix < g.nx(); ++ix) {
      std::vector<double> row = {g.x.at(ix), g.t.at(it)};
      const Matrix& m = u(ix, it);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
          row.push_back(m(r, c).real());
          row.push_back(m(r, c).imag());
        }
      tb.rows.push_back(std::move(row));
    }
  return tb;
}

inline std::string table_csv(const Table& tb) {
  std::string out;
  for (std::size_t c = 0; c < tb.columns.size(); ++c) out += (c ? "," : "") + tb.columns[c];
  out += "\n";
  for (const auto& row : tb.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + format_double(row[c]);
    out += "\n";
  }
  return out;
}

inline std::string table_json(const Table& tb) {
  std::string out = "{\n  \"columns\": [";
  for (std::size_t c = 0; c < tb.columns.size(); ++c) out += (c ? ", \"" : "\"") + tb.columns[c] + "\"";
  out += "],\n  \"rows\": [";
  for (std::size_t r = 0; r < tb.rows.size(); ++r) {
    out += r ? ",\n    [" : "\n    [";
    for (std::size_t c = 0; c < tb.rows[r].size(); ++c) out += (c ? ", " : "") + format_double(tb.rows[r][c]);
    out += "]";
  }
  out += tb.rows.empty() ? "]\n}\n" : "\n  ]\n}\n";
  return out;
}

inline Table parse_table_csv(const std::string& text) {
  Table tb;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::SchemaError, "line 1: missing header");
  std::istringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) tb.columns.push_back(cell);
  for (std::size_t ln = 2; std::getline(in, line); ++ln) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) {
      char* end = nullptr;
      row.push_back(std::strtod(cell.c_str(), &end));
      if (end == cell.c_str() || *end != '\0') throw Error(ErrorCode::SchemaError, "line " + std::to_string(ln) + ": bad number '" + cell + "'");
    }
    if (row.size() != tb.columns.size())
      throw Error(ErrorCode::SchemaError, "line " + std::to_string(ln) + ": expected " + std::to_string(tb.columns.size()) + " cells");
    tb.rows.push_back(std::move(row));
  }
  return tb;
}

inline Table parse_table_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1) + ": malformed JSON");
  }
  Table tb;
  for (const Json& c : detail::member(j, "columns", "")) tb.columns.push_back(c.get<std::string>());
  const Json& rows = detail::member(j, "rows", "");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != tb.columns.size()) detail::schema_fail(detail::at("rows", r), "wrong number of cells");
    std::vector<double> row;
    for (std::size_t c = 0; c < rows[r].size(); ++c) row.push_back(detail::real_of(rows[r][c], detail::at(detail::at("rows", r), c)));
    tb.rows.push_back(std::move(row));
  }
  return tb;
}

enum class ExportFormat { Csv, Json };

inline std::string render_table(const Table& tb, ExportFormat f) { return f == ExportFormat::Csv ? table_csv(tb) : table_json(tb); }

inline void export_grid(const DressedSolution& s, const GridSpec& grid, ExportFormat f, const std::string& path) {
  write_file(path, render_table(field_table(sample_field(s, grid)), f));
}

inline Table import_grid(const std::string& path, ExportFormat f) {
  const std::string text = read_file(path);
  try {
    return f == ExportFormat::Csv ? parse_table_csv(text) : parse_table_json(text);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// one-call driver

struct ScenarioRun {
  std::string report;
  std::vector<CheckResult> checks;
  int exit_code = 0;  // 0 all pass, 1 a check failed
};

/// Parses, builds and checks a scenario. Schema problems throw SchemaError.
/// wallTimeMs is 0 unless `timing` is set, keeping reports byte-identical.
inline ScenarioRun run_scenario_text(const std::string& text, const RunOptions& opt = {}, bool timing = false) {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario sc = parse_scenario(text);
  const DressedSolution s = build_scenario_solution(sc);
  ScenarioRun run;
  run.checks = run_checks(sc, s, opt);
  const double ms = timing ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() : 0.0;
  run.report = report_json(sc.source, run.checks, ms);
  run.exit_code = all_pass(run.checks) ? 0 : 1;
  return run;
}

inline ScenarioRun run_scenario(const std::string& path, const RunOptions& opt = {}, bool timing = false) {
  return run_scenario_text(read_file(path), opt, timing);
}

}  // namespace zsakns
