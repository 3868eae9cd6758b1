#pragma once

// Named PDE residuals, zero-curvature checks, the classical sine-Gordon
// Backlund suite and the GNLS / harmonic-map gauge constructions.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <variant>

#include <Eigen/Eigenvalues>

#include "zsakns/dressing.hpp"
#include "zsakns/hierarchy.hpp"

namespace zsakns {

enum class EquationId { NLS, MatrixNLS, mKdV, MatrixMKdV, SineGordon, NWave, GNLS, HarmonicMapChar };

inline const char* to_string(EquationId e) {
  switch (e) {
    case EquationId::NLS: return "NLS";
    case EquationId::MatrixNLS: return "MatrixNLS";
    case EquationId::mKdV: return "mKdV";
    case EquationId::MatrixMKdV: return "MatrixMKdV";
    case EquationId::SineGordon: return "SineGordon";
    case EquationId::NWave: return "NWave";
    case EquationId::GNLS: return "GNLS";
    case EquationId::HarmonicMapChar: return "HarmonicMapChar";
  }
  return "?";
}

using ComplexField = GridField<cplx>;
using FieldInput = std::variant<ScalarField, ComplexField, SampledField>;

struct EquationParams {
  double sg_coefficient = 1.0;  // q_xt = c sin q; c = 1/2 gives 2 q_xt = sin q
  std::optional<DiagonalGenerator> a, b;  // NWave only
  int accuracy = 2;
  int margin = 1;
};

template <class T>
double max_abs_diff(const GridField<T>& x, const GridField<T>& y) {
  if (x.values().size() != y.values().size()) throw Error(ErrorCode::ShapeMismatch, "fields live on different grids");
  double d = 0.0;
  for (std::size_t i = 0; i < x.values().size(); ++i) d = std::max(d, abs_of(T(x.values()[i] - y.values()[i])));
  return d;
}

// ---------------------------------------------------------------------------
// residual fields

template <class T>
GridField<T> dx(const GridField<T>& f, int order = 1, int acc = 2) { return fd_derivative(f, AxisId::X, order, acc); }
template <class T>
GridField<T> dt(const GridField<T>& f, int order = 1, int acc = 2) { return fd_derivative(f, AxisId::T, order, acc); }

inline void require_time_axis(const GridSpec& g) {
  if (g.nt() < 5) throw Error(ErrorCode::GridTooSmall, "time derivatives need at least 5 time nodes");
}

/// q_t - i/2 (q_xx + 2|q|^2 q)
inline ComplexField nls_residual(const ComplexField& q, int acc = 2) {
  require_time_axis(q.grid());
  const ComplexField qt = dt(q, 1, acc), qxx = dx(q, 2, acc);
  ComplexField r = q;
  for (std::size_t i = 0; i < r.values().size(); ++i) {
    const cplx v = q.values()[i];
    r.values()[i] = qt.values()[i] - 0.5 * cplx(0.0, 1.0) * (qxx.values()[i] + 2.0 * std::norm(v) * v);
  }
  return r;
}

/// B_t - i/2 (B_xx + 2 B B^* B)
inline SampledField matrix_nls_residual(const SampledField& b, int acc = 2) {
  require_time_axis(b.grid());
  const SampledField bt = dt(b, 1, acc), bxx = dx(b, 2, acc);
  return pointwise(b, [&](const Matrix& v, std::size_t i) {
    return Matrix(bt.values()[i] - 0.5 * cplx(0.0, 1.0) * (bxx.values()[i] + 2.0 * v * v.adjoint() * v));
  });
}

/// v_t - 1/4 (v_xxx - 6 v^2 v_x)
inline ComplexField mkdv_residual(const ComplexField& v, int acc = 2) {
  require_time_axis(v.grid());
  const ComplexField vt = dt(v, 1, acc), vx = dx(v, 1, acc), vxxx = dx(v, 3, acc);
  ComplexField r = v;
  for (std::size_t i = 0; i < r.values().size(); ++i) {
    const cplx w = v.values()[i];
    r.values()[i] = vt.values()[i] - 0.25 * (vxxx.values()[i] - 6.0 * w * w * vx.values()[i]);
  }
  return r;
}

/// v_t + 1/4 (v_xxx + 3 (v_x v^t v + v v^t v_x))
inline SampledField matrix_mkdv_residual(const SampledField& v, int acc = 2) {
  require_time_axis(v.grid());
  const SampledField vt = dt(v, 1, acc), vx = dx(v, 1, acc), vxxx = dx(v, 3, acc);
  return pointwise(v, [&](const Matrix& w, std::size_t i) {
    const Matrix& wx = vx.values()[i];
    return Matrix(vt.values()[i] + 0.25 * (vxxx.values()[i] + 3.0 * (wx * w.transpose() * w + w * w.transpose() * wx)));
  });
}

/// q_xt - c sin q
inline ScalarField sine_gordon_residual(const ScalarField& q, double c = 1.0, int acc = 2) {
  require_time_axis(q.grid());
  const ScalarField qxt = dt(dx(q, 1, acc), 1, acc);
  ScalarField r = q;
  for (std::size_t i = 0; i < r.values().size(); ++i) r.values()[i] = qxt.values()[i] - c * std::sin(q.values()[i]);
  return r;
}

/// (u_ij)_t - (b_i-b_j)/(a_i-a_j) (u_ij)_x - sum_k (c_kj - c_ik) u_ik u_kj
inline SampledField nwave_residual(const SampledField& u, const DiagonalGenerator& a, const DiagonalGenerator& b, int acc = 2) {
  require_time_axis(u.grid());
  if (!a.regular()) throw Error(ErrorCode::InvalidArgument, "the n-wave form needs a regular");
  const int n = a.dim();
  if (u.values().front().rows() != n || b.dim() != n) throw Error(ErrorCode::ShapeMismatch, "u, a and b must share the dimension");
  const auto c = [&](int i, int j) { return (b.eigenvalue(i) - b.eigenvalue(j)) / (a.eigenvalue(i) - a.eigenvalue(j)); };
  const SampledField ut = dt(u, 1, acc), ux = dx(u, 1, acc);
  return pointwise(u, [&](const Matrix& w, std::size_t idx) {
    Matrix r = zeros(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        cplx rhs = c(i, j) * ux.values()[idx](i, j);
        for (int k = 0; k < n; ++k)
          if (k != i && k != j) rhs += (c(k, j) - c(i, k)) * w(i, k) * w(k, j);
        r(i, j) = ut.values()[idx](i, j) - rhs;
      }
    return r;
  });
}

/// phi_t + 1/2 (phi^{-1} phi_x)_x
inline SampledField gnls_residual(const SampledField& phi, int acc = 2) {
  require_time_axis(phi.grid());
  const SampledField phx = dx(phi, 1, acc);
  const SampledField m = pointwise(phi, [&](const Matrix& p, std::size_t i) { return Matrix(p.inverse() * phx.values()[i]); });
  return dt(phi, 1, acc) + 0.5 * dx(m, 1, acc);
}

/// (s^{-1} s_x)_t + (s^{-1} s_t)_x
inline SampledField harmonic_map_residual(const SampledField& s, int acc = 2) {
  require_time_axis(s.grid());
  const SampledField sx = dx(s, 1, acc), st = dt(s, 1, acc);
  const SampledField sinv = pointwise(s, [](const Matrix& v, std::size_t) { return Matrix(v.inverse()); });
  const SampledField mx = pointwise(sinv, [&](const Matrix& v, std::size_t i) { return Matrix(v * sx.values()[i]); });
  const SampledField mt = pointwise(sinv, [&](const Matrix& v, std::size_t i) { return Matrix(v * st.values()[i]); });
  return dt(mx, 1, acc) + dx(mt, 1, acc);
}

inline ResidualReport residual(EquationId eq, const FieldInput& field, const EquationParams& p = {}) {
  const auto need = [&](auto* tag) -> decltype(auto) {
    using T = std::remove_pointer_t<decltype(tag)>;
    if (!std::holds_alternative<T>(field))
      throw Error(ErrorCode::ShapeMismatch, std::string(to_string(eq)) + ": field has the wrong shape");
    return std::get<T>(field);
  };
  const auto square = [&](const SampledField& f) {
    if (f.values().front().rows() != f.values().front().cols())
      throw Error(ErrorCode::ShapeMismatch, std::string(to_string(eq)) + " needs square matrices");
    return f;
  };
  switch (eq) {
    case EquationId::NLS: return report_of(nls_residual(need(static_cast<ComplexField*>(nullptr)), p.accuracy), p.margin);
    case EquationId::mKdV: return report_of(mkdv_residual(need(static_cast<ComplexField*>(nullptr)), p.accuracy), p.margin);
    case EquationId::MatrixNLS:
      return report_of(matrix_nls_residual(need(static_cast<SampledField*>(nullptr)), p.accuracy), p.margin);
    case EquationId::MatrixMKdV:
      return report_of(matrix_mkdv_residual(need(static_cast<SampledField*>(nullptr)), p.accuracy), p.margin);
    case EquationId::SineGordon:
      return report_of(sine_gordon_residual(need(static_cast<ScalarField*>(nullptr)), p.sg_coefficient, p.accuracy), p.margin);
    case EquationId::NWave:
      if (!p.a || !p.b) throw Error(ErrorCode::InvalidArgument, "NWave needs a and b");
      return report_of(nwave_residual(need(static_cast<SampledField*>(nullptr)), *p.a, *p.b, p.accuracy), p.margin);
    case EquationId::GNLS: return report_of(gnls_residual(square(need(static_cast<SampledField*>(nullptr))), p.accuracy), p.margin);
    case EquationId::HarmonicMapChar:
      return report_of(harmonic_map_residual(square(need(static_cast<SampledField*>(nullptr))), p.accuracy), p.margin);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown equation");
}

// ---------------------------------------------------------------------------
// field views

/// Upper-right k x (n-k) block of every sample.
inline SampledField upper_block(const SampledField& u, int k) {
  const int n = static_cast<int>(u.values().front().rows());
  if (k < 1 || k >= n) throw Error(ErrorCode::ShapeMismatch, "block split out of range");
  return u.map([&](const Matrix& m) { return Matrix(m.block(0, k, k, n - k)); });
}

/// [[0, B], [-B^*, 0]]
inline SampledField embed_block(const SampledField& b) {
  const int k = static_cast<int>(b.values().front().rows()), m = static_cast<int>(b.values().front().cols());
  if (k + m > kMaxDim) throw Error(ErrorCode::ShapeMismatch, "block too large");
  return b.map([&](const Matrix& v) {
    Matrix u = zeros(k + m);
    u.block(0, k, k, m) = v;
    u.block(k, 0, m, k) = -v.adjoint();
    return u;
  });
}

inline ComplexField entry(const SampledField& u, int i, int j) {
  return u.map([&](const Matrix& m) { return m(i, j); });
}

/// a = diag(i I_k, -i I_m)
inline DiagonalGenerator grassmannian_generator(int k, int m) {
  std::vector<double> v(static_cast<std::size_t>(k), 1.0);
  v.insert(v.end(), static_cast<std::size_t>(m), -1.0);
  return DiagonalGenerator(std::move(v));
}

// ---------------------------------------------------------------------------
// zero curvature

inline std::vector<cplx> default_spectral_samples(int j) {
  if (j < 0) return {cplx(1.0, 0.0), cplx(0.0, 1.0), cplx(1.0, 1.0), cplx(-2.0, 0.0), cplx(0.5, -0.5)};
  return {cplx(0.0, 0.0), cplx(1.0, 0.0), cplx(0.0, 1.0), cplx(1.0, 1.0), cplx(-2.0, 0.0)};
}

/// Per-lambda reports of A_t - B_x - [A, B] with A = a lambda + u and B the
/// t-connection rebuilt from u: b lambda^j + Q_1 lambda^{j-1} + ... + Q_j for
/// j > 0, lambda^{-1} g^{-1} b g (g_x = g u, g = I at the left edge) for j = -1.
inline std::vector<ResidualReport> zero_curvature_residuals(const FlowSpec& spec, const SampledField& u,
                                                            const std::vector<cplx>& lambdas, int acc = 2, int margin = 1,
                                                            double unitarity_tol = 1e-6) {
  spec.validate();
  require_time_axis(u.grid());
  const Matrix am = spec.a.matrix();
  std::vector<SampledField> q;
  std::optional<SampledField> v;
  if (spec.j > 0) {
    q = q_stack(spec.a, spec.b, u, spec.j, acc).q;
  } else {
    const SampledField g = trivialization_ode(u, Normalization::LeftEdge, unitarity_tol);
    const Matrix bm = spec.b.matrix();
    v = pointwise(g, [&](const Matrix& gv, std::size_t) { return Matrix(gv.inverse() * bm * gv); });
  }
  const SampledField ut = dt(u, 1, acc);
  std::vector<ResidualReport> out;
  for (const cplx& l : lambdas) {
    SampledField bfield(u.grid(), zeros(spec.dim()));
    if (spec.j > 0) {
      for (int m = 0; m <= spec.j; ++m) {
        const cplx w = std::pow(l, spec.j - m);
        for (std::size_t i = 0; i < bfield.values().size(); ++i) bfield.values()[i] += w * q[static_cast<std::size_t>(m)].values()[i];
      }
    } else {
      if (std::abs(l) < 1e-12) throw Error(ErrorCode::PoleAtZero, "the -1 flow connection has a pole at lambda = 0");
      bfield = v->map([&](const Matrix& m) { return Matrix(m / l); });
    }
    const SampledField bx = dx(bfield, 1, acc);
    const SampledField r = pointwise(u, [&](const Matrix& uv, std::size_t i) {
      const Matrix a = l * am + uv;
      return Matrix(ut.values()[i] - bx.values()[i] - commutator(a, bfield.values()[i]));
    });
    out.push_back(report_of(r, margin));
  }
  return out;
}

inline ResidualReport combine_reports(const std::vector<ResidualReport>& rs) {
  if (rs.empty()) throw Error(ErrorCode::InvalidArgument, "no reports to combine");
  ResidualReport out;
  out.grid = rs.front().grid;
  double ss = 0.0;
  for (const ResidualReport& r : rs) {
    out.maxAbs = std::max(out.maxAbs, r.maxAbs);
    ss += r.l2 * r.l2;
  }
  out.l2 = std::sqrt(ss);
  return out;
}

inline ResidualReport zero_curvature_residual(const DressedSolution& s, const std::vector<cplx>& lambdas, const GridSpec& grid,
                                              int acc = 2) {
  for (const cplx& l : lambdas)
    if (s.spec.j > 0 || std::abs(l) >= 1e-12) check_admissible(s, l);
  return combine_reports(zero_curvature_residuals(s.spec, sample_field(s, grid), lambdas, acc));
}

// ---------------------------------------------------------------------------
// classical sine-Gordon Backlund transformation

/// RK4 for y' = rhs(y, w) along one line of samples w, y(start) = y0.
template <class Rhs>
std::vector<double> scalar_line(const std::vector<double>& w, double h, std::size_t start, double y0, Rhs&& rhs) {
  std::vector<double> y(w.size(), y0);
  const auto step = [&](double yv, std::size_t i0, std::size_t i1, double dh) {
    const double wm = midpoint_cubic(w, std::min(i0, i1));
    const double k1 = rhs(yv, w[i0]);
    const double k2 = rhs(yv + 0.5 * dh * k1, wm);
    const double k3 = rhs(yv + 0.5 * dh * k2, wm);
    const double k4 = rhs(yv + dh * k3, w[i1]);
    return yv + (dh / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  };
  for (std::size_t i = start; i + 1 < w.size(); ++i) y[i + 1] = step(y[i], i, i + 1, h);
  for (std::size_t i = start; i > 0; --i) y[i - 1] = step(y[i], i, i - 1, -h);
  return y;
}

inline std::pair<int, int> origin_node(const GridSpec& g) {
  const auto ix = g.x.node_of(0.0), it = g.t.node_of(0.0);
  if (!ix || !it) throw Error(ErrorCode::InvalidArgument, "the grid must contain the origin as a node");
  return {*ix, *it};
}

inline std::vector<double> column_of(const ScalarField& f, int ix) {
  std::vector<double> c(static_cast<std::size_t>(f.nt()));
  for (int it = 0; it < f.nt(); ++it) c[static_cast<std::size_t>(it)] = f(ix, it);
  return c;
}

struct BacklundResult {
  ScalarField qstar;
  ResidualReport residual;          // both equations of the first-order system
  double compatibility_drift = 0.0;  // x-then-t vs t-then-x sweeps
};

/// (q*-q)_x - 4s sin((q*+q)/2) and (q*+q)_t - (1/s) sin((q*-q)/2), pointwise max.
inline ScalarField backlund_residual(const ScalarField& q, const ScalarField& qs, double s, int acc = 2) {
  require_time_axis(q.grid());
  ScalarField d = qs, p = qs;
  for (std::size_t i = 0; i < d.values().size(); ++i) {
    d.values()[i] = qs.values()[i] - q.values()[i];
    p.values()[i] = qs.values()[i] + q.values()[i];
  }
  const ScalarField dxv = dx(d, 1, acc), ptv = dt(p, 1, acc);
  ScalarField r = qs;
  for (std::size_t i = 0; i < r.values().size(); ++i)
    r.values()[i] = std::max(std::abs(dxv.values()[i] - 4.0 * s * std::sin(0.5 * p.values()[i])),
                             std::abs(ptv.values()[i] - std::sin(0.5 * d.values()[i]) / s));
  return r;
}

/// B_{s,c0}(q): q* with q*(0,0) = c0. With f = (q*+q)/2 and F = f - q the
/// system is F_x = 2s sin(F + q), f_t = sin(f - q)/(2s).
inline BacklundResult classical_backlund_sg(const ScalarField& q, double s, double c0, double compat_tol = 1e-6) {
  if (s == 0.0 || !std::isfinite(s)) throw Error(ErrorCode::InvalidArgument, "s must be a nonzero real");
  const GridSpec& g = q.grid();
  const auto [ix0, it0] = origin_node(g);
  const double h = g.h(), k = g.k();
  const auto fx = [s](double F, double qv) { return 2.0 * s * std::sin(F + qv); };
  const auto ft = [s](double f, double qv) { return std::sin(f - qv) / (2.0 * s); };
  const double f00 = 0.5 * (q(ix0, it0) + c0);

  ScalarField fa(g, 0.0), fb(g, 0.0);
  // x along the origin row, then t along every column
  const auto row0 = q.row(it0);
  const auto F0 = scalar_line(row0, h, static_cast<std::size_t>(ix0), f00 - q(ix0, it0), fx);
  for (int ix = 0; ix < g.nx(); ++ix) {
    const auto col = column_of(q, ix);
    const double fstart = F0[static_cast<std::size_t>(ix)] + row0[static_cast<std::size_t>(ix)];
    const auto f = g.nt() > 1 ? scalar_line(col, k, static_cast<std::size_t>(it0), fstart, ft) : std::vector<double>{fstart};
    for (int it = 0; it < g.nt(); ++it) fa(ix, it) = f[static_cast<std::size_t>(it)];
  }
  // t along the origin column, then x along every row
  const auto col0 = column_of(q, ix0);
  const auto f0 = g.nt() > 1 ? scalar_line(col0, k, static_cast<std::size_t>(it0), f00, ft) : std::vector<double>{f00};
  for (int it = 0; it < g.nt(); ++it) {
    const auto row = q.row(it);
    const auto F = scalar_line(row, h, static_cast<std::size_t>(ix0), f0[static_cast<std::size_t>(it)] - row[static_cast<std::size_t>(ix0)], fx);
    for (int ix = 0; ix < g.nx(); ++ix) fb(ix, it) = F[static_cast<std::size_t>(ix)] + row[static_cast<std::size_t>(ix)];
  }

  BacklundResult out{ScalarField(g, 0.0), {}, 0.0};
  for (std::size_t i = 0; i < fa.values().size(); ++i) {
    out.compatibility_drift = std::max(out.compatibility_drift, std::abs(fa.values()[i] - fb.values()[i]));
    out.qstar.values()[i] = 2.0 * fa.values()[i] - q.values()[i];
  }
  if (out.compatibility_drift > compat_tol) {
    char msg[128];
    std::snprintf(msg, sizeof msg, "x-then-t and t-then-x sweeps differ by %.3g (> %.3g); q is not a sine-Gordon solution on this grid",
                  out.compatibility_drift, compat_tol);
    throw Error(ErrorCode::CompatibilityDrift, msg);
  }
  if (g.nt() >= 5) out.residual = report_of(backlund_residual(q, out.qstar, s));
  return out;
}

/// Closed-form B_{s,c0}(0) = 4 arctan(tan(c0/4) e^{2sx + t/(2s)}).
inline double vacuum_kink(double s, double c0, double x, double t) {
  return 4.0 * std::atan(std::tan(0.25 * c0) * std::exp(2.0 * s * x + t / (2.0 * s)));
}

struct PermutabilityResult {
  ScalarField q3;
  ResidualReport residual;  // sine-Gordon residual of q3
};

/// tan((q3-q0)/4) = (s1+s2)/(s1-s2) tan((q1-q2)/4), unwrapped continuously
/// from the origin (first along the origin column, then along rows).
inline PermutabilityResult sg_permutability(const ScalarField& q0, const ScalarField& q1, const ScalarField& q2, double s1,
                                            double s2, double sg_coefficient = 1.0) {
  if (s1 == 0.0 || s2 == 0.0) throw Error(ErrorCode::InvalidArgument, "s1 and s2 must be nonzero");
  if (std::abs(s1 * s1 - s2 * s2) <= 1e-12 * std::max(s1 * s1, s2 * s2))
    throw Error(ErrorCode::InvalidArgument, "permutability needs s1^2 != s2^2");
  const GridSpec& g = q0.grid();
  const auto [ix0, it0] = origin_node(g);
  const double K = (s1 + s2) / (s1 - s2);
  const double period = 4.0 * std::numbers::pi;
  ScalarField raw(g, 0.0);
  for (std::size_t i = 0; i < raw.values().size(); ++i) {
    const double w = 0.25 * (q1.values()[i] - q2.values()[i]);
    raw.values()[i] = q0.values()[i] + 4.0 * std::atan2(K * std::sin(w), std::cos(w));
  }
  ScalarField q3(g, 0.0);
  const auto follow = [&](double prev, double v) {
    const double out = v + period * std::round((prev - v) / period);
    if (std::abs(out - prev) > std::numbers::pi)
      throw Error(ErrorCode::BranchJump, "q3 changes by more than pi between neighbouring nodes; refine the grid");
    return out;
  };
  q3(ix0, it0) = raw(ix0, it0);
  for (int it = it0 + 1; it < g.nt(); ++it) q3(ix0, it) = follow(q3(ix0, it - 1), raw(ix0, it));
  for (int it = it0 - 1; it >= 0; --it) q3(ix0, it) = follow(q3(ix0, it + 1), raw(ix0, it));
  for (int it = 0; it < g.nt(); ++it) {
    for (int ix = ix0 + 1; ix < g.nx(); ++ix) q3(ix, it) = follow(q3(ix - 1, it), raw(ix, it));
    for (int ix = ix0 - 1; ix >= 0; --ix) q3(ix, it) = follow(q3(ix + 1, it), raw(ix, it));
  }
  PermutabilityResult out{q3, {}};
  if (g.nt() >= 5) out.residual = report_of(sine_gordon_residual(q3, sg_coefficient));
  return out;
}

/// L_s(q)(x, t) = q(s x, t / s).
inline ScalarClosure lie_transform(ScalarClosure q, double s) {
  if (s == 0.0 || !std::isfinite(s)) throw Error(ErrorCode::InvalidArgument, "s must be a nonzero real");
  return [q = std::move(q), s](double x, double t) { return q(s * x, t / s); };
}

/// Grid whose nodes are the images of `g` under (x, t) -> (s x, t / s), so
/// that node (ix, it) of a field on it is L_s of the same node on `g`.
inline GridSpec lie_grid(const GridSpec& g, double s) {
  if (s <= 0.0) throw Error(ErrorCode::InvalidArgument, "lie_grid needs s > 0");
  return {Axis{s * g.x.lo, s * g.x.hi, g.x.n}, Axis{g.t.lo / s, g.t.hi / s, g.t.n}};
}

// ---------------------------------------------------------------------------
// GNLS gauge transform

struct GnlsResult {
  SampledField g;    // g^{-1} g_x = u, g^{-1} g_t = Q_{a,2}(u), g(0,0) = I
  SampledField phi;  // g a g^{-1}
  ResidualReport residual;           // GNLS residual of phi
  ResidualReport input_residual;     // matrix NLS residual of B
  double compatibility_drift = 0.0;  // x-then-t vs t-then-x
  double spectrum_drift = 0.0;       // eigenvalues of phi against those of a
};

inline double spectrum_distance(const Matrix& m, const DiagonalGenerator& a) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(Eigen::MatrixXcd(m), false);
  std::vector<cplx> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::vector<cplx> ref;
  for (int k = 0; k < a.dim(); ++k) ref.push_back(a.eigenvalue(k));
  const auto by_im = [](const cplx& x, const cplx& y) { return x.imag() < y.imag(); };
  std::sort(ev.begin(), ev.end(), by_im);
  std::sort(ref.begin(), ref.end(), by_im);
  double d = 0.0;
  for (std::size_t i = 0; i < ev.size(); ++i) d = std::max(d, std::abs(ev[i] - ref[i]));
  return d;
}

/// Trivializes u dx + Q_{a,2}(u) dt from the origin along both sweep orders.
inline std::pair<SampledField, double> trivialize_plane(const SampledField& u, const SampledField& q2) {
  const GridSpec& g = u.grid();
  const auto [ix0, it0] = origin_node(g);
  const int n = static_cast<int>(u.values().front().rows());
  const auto col = [&](const SampledField& f, int ix) {
    std::vector<Matrix> c;
    for (int it = 0; it < g.nt(); ++it) c.push_back(f(ix, it));
    return c;
  };
  SampledField ga(g, identity(n)), gb(g, identity(n));
  const auto r0 = right_product_line(u.row(it0), g.h(), static_cast<std::size_t>(ix0), identity(n));
  for (int ix = 0; ix < g.nx(); ++ix) {
    const auto c = right_product_line(col(q2, ix), g.k(), static_cast<std::size_t>(it0), r0[static_cast<std::size_t>(ix)]);
    for (int it = 0; it < g.nt(); ++it) ga(ix, it) = c[static_cast<std::size_t>(it)];
  }
  const auto c0 = right_product_line(col(q2, ix0), g.k(), static_cast<std::size_t>(it0), identity(n));
  for (int it = 0; it < g.nt(); ++it) {
    const auto r = right_product_line(u.row(it), g.h(), static_cast<std::size_t>(ix0), c0[static_cast<std::size_t>(it)]);
    for (int ix = 0; ix < g.nx(); ++ix) gb(ix, it) = r[static_cast<std::size_t>(ix)];
  }
  return {ga, max_abs(ga - gb)};
}

/// phi = g a g^{-1} for a matrix NLS solution B (k x m block), a = diag(i I_k, -i I_m).
/// Q_{a,2} uses `q_accuracy` stencils so that the two sweep orders agree to
/// the ODE tolerance; residuals use `acc`.
inline GnlsResult gnls_gauge_transform(const SampledField& b, int acc = 2, double compat_tol = 1e-6, int q_accuracy = 4) {
  const int k = static_cast<int>(b.values().front().rows()), m = static_cast<int>(b.values().front().cols());
  const DiagonalGenerator a = grassmannian_generator(k, m);
  const SampledField u = embed_block(b);
  const SampledField q2 = q_recursion_local(a, u, 2, q_accuracy)[2];
  auto [g, drift] = trivialize_plane(u, q2);
  if (drift > compat_tol) {
    char msg[128];
    std::snprintf(msg, sizeof msg, "x-then-t and t-then-x trivializations differ by %.3g (> %.3g)", drift, compat_tol);
    throw Error(ErrorCode::CompatibilityDrift, msg);
  }
  GnlsResult out{g, g, {}, {}, drift, 0.0};
  const Matrix am = a.matrix();
  out.phi = pointwise(g, [&](const Matrix& gv, std::size_t) { return Matrix(gv * am * gv.inverse()); });
  for (const Matrix& p : out.phi.values()) out.spectrum_drift = std::max(out.spectrum_drift, spectrum_distance(p, a));
  if (b.nt() >= 5) {
    out.residual = report_of(gnls_residual(out.phi, acc));
    out.input_residual = report_of(matrix_nls_residual(b, acc));
  }
  return out;
}

// ---------------------------------------------------------------------------
// harmonic map of a -1 flow solution

struct HarmonicMapResult {
  SampledField s;  // E(-1) E(1)^{-1}
  ResidualReport residual;
  double eigen_drift = 0.0;  // spectrum of s^{-1} s_x = E(1)(-2a)E(1)^{-1} against -2a
};

inline HarmonicMapResult harmonic_map_from_frame(const DressedSolution& sol, const GridSpec& grid, int acc = 2) {
  if (sol.spec.j != -1) throw Error(ErrorCode::NotApplicable, "the harmonic map needs a -1 flow solution");
  check_admissible(sol, cplx(1.0, 0.0));
  check_admissible(sol, cplx(-1.0, 0.0));
  const Matrix m2a = -2.0 * sol.spec.a.matrix();
  const DiagonalGenerator ref = sol.spec.a.scaled(-2.0);
  HarmonicMapResult out{SampledField(grid, identity(sol.dim())), {}, 0.0};
  for (int it = 0; it < grid.nt(); ++it)
    for (int ix = 0; ix < grid.nx(); ++ix) {
      const DressedNode node = transport_all(sol, grid.x.at(ix), grid.t.at(it));
      const Matrix ep = frame_from_node(sol, node, cplx(1.0, 0.0));
      const Matrix em = frame_from_node(sol, node, cplx(-1.0, 0.0));
      const Matrix epi = ep.inverse();
      out.s(ix, it) = em * epi;
      out.eigen_drift = std::max(out.eigen_drift, spectrum_distance(Matrix(ep * m2a * epi), ref));
    }
  if (grid.nt() >= 5) out.residual = report_of(harmonic_map_residual(out.s, acc));
  return out;
}

}  // namespace zsakns
