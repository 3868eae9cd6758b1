#pragma once

// Hierarchy coefficients Q_{b,m}, flow right-hand sides, Hamiltonians,
// symplectic pairings, the recursion operator P_u and negative flows.
//
// Every operation treats the field row by row: x derivatives and x integrals
// act along each time slice, and -infinity is the left grid edge.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "zsakns/algebra.hpp"
#include "zsakns/frames.hpp"
#include "zsakns/grid.hpp"

namespace zsakns {

inline constexpr double kEdgeDecayTol = 1e-6;

struct QStack {
  DiagonalGenerator b;
  std::vector<SampledField> q;        // q[m] = Q_{b,m}, q[0] = b
  std::vector<std::string> warnings;  // EdgeNotDecayed and similar notes

  int order() const { return static_cast<int>(q.size()) - 1; }
  const SampledField& operator[](int m) const { return q[static_cast<std::size_t>(m)]; }
};

// ---------------------------------------------------------------------------
// field helpers

template <class F>
SampledField pointwise(const SampledField& f, F&& fn) {
  SampledField out = f;
  for (std::size_t i = 0; i < f.values().size(); ++i) out.values()[i] = fn(f.values()[i], i);
  return out;
}

inline SampledField constant_field(const GridSpec& grid, const Matrix& m) { return SampledField(grid, m); }

inline SampledField operator+(const SampledField& x, const SampledField& y) {
  return pointwise(x, [&](const Matrix& v, std::size_t i) { return Matrix(v + y.values()[i]); });
}
inline SampledField operator-(const SampledField& x, const SampledField& y) {
  return pointwise(x, [&](const Matrix& v, std::size_t i) { return Matrix(v - y.values()[i]); });
}
inline SampledField operator*(double s, const SampledField& x) {
  return pointwise(x, [&](const Matrix& v, std::size_t) { return Matrix(s * v); });
}
inline SampledField commutator(const SampledField& x, const SampledField& y) {
  return pointwise(x, [&](const Matrix& v, std::size_t i) { return commutator(v, y.values()[i]); });
}
inline SampledField commutator(const SampledField& x, const Matrix& c) {
  return pointwise(x, [&](const Matrix& v, std::size_t) { return commutator(v, c); });
}
inline SampledField diagonal_part(const DiagonalGenerator& a, const SampledField& x) {
  return pointwise(x, [&](const Matrix& v, std::size_t) { return a_diagonal_part(a, v); });
}
inline SampledField offdiagonal_part(const DiagonalGenerator& a, const SampledField& x) {
  return pointwise(x, [&](const Matrix& v, std::size_t) { return a_offdiagonal_part(a, v); });
}
inline SampledField ad_inverse(const DiagonalGenerator& a, const SampledField& x) {
  return pointwise(x, [&](const Matrix& v, std::size_t) { return ad_inverse(a, v); });
}

inline double max_abs(const SampledField& f) {
  double r = 0.0;
  for (const Matrix& m : f.values()) r = std::max(r, max_abs(m));
  return r;
}

/// Running trapezoid integral along x from the left edge, per time slice.
inline SampledField cumulative_x(const SampledField& f) {
  SampledField out = f;
  for (int it = 0; it < f.nt(); ++it) {
    const auto c = integrate_cumulative(f.row(it), f.grid().h());
    for (int ix = 0; ix < f.nx(); ++ix) out(ix, it) = c[static_cast<std::size_t>(ix)];
  }
  return out;
}

/// Trapezoid integral along x of a scalar density, per time slice.
template <class Density>
std::vector<double> integrate_x(const GridSpec& grid, Density&& density) {
  std::vector<double> out;
  for (int it = 0; it < grid.nt(); ++it) {
    std::vector<double> row(static_cast<std::size_t>(grid.nx()));
    for (int ix = 0; ix < grid.nx(); ++ix) row[static_cast<std::size_t>(ix)] = density(ix, it);
    out.push_back(integrate_quadrature(row, grid.h()));
  }
  return out;
}

inline std::vector<std::string> edge_warnings(const SampledField& u) {
  double worst = 0.0;
  for (int it = 0; it < u.nt(); ++it) worst = std::max({worst, max_abs(u(0, it)), max_abs(u(u.nx() - 1, it))});
  if (worst > kEdgeDecayTol)
    return {"EdgeNotDecayed: field reaches " + std::to_string(worst) + " at the grid edge (tolerance 1e-6)"};
  return {};
}

inline void check_offdiagonal(const DiagonalGenerator& a, const SampledField& v, const char* what) {
  for (const Matrix& m : v.values())
    if (max_abs(a_diagonal_part(a, m)) > kAlgTol)
      throw Error(ErrorCode::NonOffDiagonalInput, std::string(what) + " has an a-diagonal component");
}

// ---------------------------------------------------------------------------
// Q recursion

/// P step: -ad(a)^{-1}((Q_m)_x + [u, Q_m])^perp.
inline SampledField recursion_p_step(const DiagonalGenerator& a, const SampledField& u, const SampledField& qm, int accuracy) {
  const SampledField r = fd_derivative(qm, AxisId::X, 1, accuracy) + commutator(u, qm);
  return -1.0 * ad_inverse(a, offdiagonal_part(a, r));
}

/// Coefficient of mu^order in prod_c (Y - c I), Y = sum_k y[k] mu^k.
inline Matrix minimal_polynomial_coefficient(const std::vector<cplx>& roots, const std::vector<Matrix>& y, int order) {
  const int n = static_cast<int>(y[0].rows());
  std::vector<Matrix> acc(static_cast<std::size_t>(order) + 1, zeros(n));
  acc[0] = identity(n);
  for (const cplx& c : roots) {
    std::vector<Matrix> next(acc.size(), zeros(n));
    for (int i = 0; i <= order; ++i)
      for (int k = 0; i + k <= order && k < static_cast<int>(y.size()); ++k) {
        const Matrix f = (k == 0) ? Matrix(y[0] - c * identity(n)) : y[static_cast<std::size_t>(k)];
        next[static_cast<std::size_t>(i + k)] += acc[static_cast<std::size_t>(i)] * f;
      }
    acc = std::move(next);
  }
  return acc[static_cast<std::size_t>(order)];
}

/// Q_{a,0..j} with b = a. Off-diagonal parts by the P step; a-diagonal parts
/// from the mu^{m+1} coefficient of f(a + Q_1 mu + Q_2 mu^2 + ...) = 0, where
/// f is the minimal polynomial of a. Purely local in u and its derivatives.
inline QStack q_recursion_local(const DiagonalGenerator& a, const SampledField& u, int j, int accuracy = 2) {
  if (j < 0) throw Error(ErrorCode::InvalidArgument, "order must be nonnegative");
  if (u.values().front().rows() != a.dim()) throw Error(ErrorCode::ShapeMismatch, "u does not match the generator");
  check_offdiagonal(a, u, "u");
  QStack st{a, {constant_field(u.grid(), a.matrix())}, {}};
  if (j >= 1) st.q.push_back(u);
  const auto roots = minimal_polynomial(a);
  std::vector<cplx> fprime(static_cast<std::size_t>(a.dim()));
  for (int k = 0; k < a.dim(); ++k) {
    cplx d = 1.0;
    for (const cplx& c : roots)
      if (!eigenvalues_coincide(c.imag(), a.imag_part(k))) d *= a.eigenvalue(k) - c;
    fprime[static_cast<std::size_t>(k)] = d;
  }
  for (int m = 1; m < j; ++m) {
    SampledField next = recursion_p_step(a, u, st.q.back(), accuracy);
    for (std::size_t idx = 0; idx < next.values().size(); ++idx) {
      std::vector<Matrix> y;
      for (int k = 0; k <= m; ++k) y.push_back(st.q[static_cast<std::size_t>(k)].values()[idx]);
      y.push_back(next.values()[idx]);
      const Matrix r = a_diagonal_part(a, minimal_polynomial_coefficient(roots, y, m + 1));
      Matrix t = zeros(a.dim());
      for (int p = 0; p < a.dim(); ++p)
        for (int q = 0; q < a.dim(); ++q)
          if (a.same_block(p, q)) t(p, q) = -r(p, q) / fprime[static_cast<std::size_t>(p)];
      next.values()[idx] += t;
    }
    st.q.push_back(std::move(next));
  }
  return st;
}

/// Q_{b,0..j} for any b commuting with a: P steps as above, a-diagonal parts
/// T_{b,m} = -int_{-inf}^x [u, P_{b,m}]^d dy by cumulative trapezoid.
inline QStack q_recursion_integral(const DiagonalGenerator& a, const DiagonalGenerator& b, const SampledField& u, int j,
                                   int accuracy = 2) {
  if (j < 0) throw Error(ErrorCode::InvalidArgument, "order must be nonnegative");
  if (a.dim() != b.dim() || u.values().front().rows() != a.dim())
    throw Error(ErrorCode::ShapeMismatch, "a, b and u must have the same dimension");
  check_offdiagonal(a, u, "u");
  QStack st{b, {constant_field(u.grid(), b.matrix())}, edge_warnings(u)};
  for (int m = 0; m < j; ++m) {
    const SampledField p = recursion_p_step(a, u, st.q.back(), accuracy);
    const SampledField t = -1.0 * cumulative_x(diagonal_part(a, commutator(u, p)));
    st.q.push_back(p + t);
  }
  return st;
}

/// Local path when b = a, quadrature path otherwise.
inline QStack q_stack(const DiagonalGenerator& a, const DiagonalGenerator& b, const SampledField& u, int j, int accuracy = 2) {
  return a.imag_parts() == b.imag_parts() ? q_recursion_local(a, u, j, accuracy) : q_recursion_integral(a, b, u, j, accuracy);
}

/// (Q_m)_x + [u, Q_m] + [a, Q_{m+1}] for m = 0..order-1.
inline std::vector<SampledField> recursion_residuals(const DiagonalGenerator& a, const SampledField& u, const QStack& st,
                                                     int accuracy = 2) {
  std::vector<SampledField> out;
  for (int m = 0; m < st.order(); ++m)
    out.push_back(fd_derivative(st[m], AxisId::X, 1, accuracy) + commutator(u, st[m]) -
                  commutator(st[m + 1], a.matrix()));
  return out;
}

// ---------------------------------------------------------------------------
// negative flows and trivializations

enum class Normalization { LeftEdge, Origin };

/// RK4 solution of g' = g m along one line of samples, g(start) = g0. Half-step
/// values of m come from cubic interpolation of the samples.
inline std::vector<Matrix> right_product_line(const std::vector<Matrix>& m, double h, std::size_t start, const Matrix& g0) {
  std::vector<Matrix> g(m.size(), g0);
  const auto step = [&](const Matrix& gv, std::size_t i0, std::size_t i1, double dh) {
    const Matrix mid = midpoint_cubic(m, std::min(i0, i1));
    const Matrix k1 = gv * m[i0];
    const Matrix k2 = (gv + 0.5 * dh * k1) * mid;
    const Matrix k3 = (gv + 0.5 * dh * k2) * mid;
    const Matrix k4 = (gv + dh * k3) * m[i1];
    return Matrix(gv + (dh / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  };
  for (std::size_t i = start; i + 1 < m.size(); ++i) g[i + 1] = step(g[i], i, i + 1, h);
  for (std::size_t i = start; i > 0; --i) g[i - 1] = step(g[i], i, i - 1, -h);
  return g;
}

inline double unitarity_defect(const SampledField& g) {
  double drift = 0.0;
  for (const Matrix& m : g.values()) drift = std::max(drift, max_abs(Matrix(m.adjoint() * m - identity(static_cast<int>(m.rows())))));
  return drift;
}

inline void check_unitarity(const SampledField& g, double tol) {
  const double drift = unitarity_defect(g);
  if (drift > tol) {
    char msg[96];
    std::snprintf(msg, sizeof msg, "||g^* g - I|| = %.3g exceeds %.3g; refine the grid", drift, tol);
    throw Error(ErrorCode::UnitarityDrift, msg);
  }
}

/// RK4 solution of g_x = g u along every time slice.
inline SampledField trivialization_ode(const SampledField& u, Normalization norm = Normalization::LeftEdge,
                                       double unitarity_tol = 1e-9) {
  const int n = static_cast<int>(u.values().front().rows());
  std::size_t start = 0;
  if (norm == Normalization::Origin) {
    const auto k = u.grid().x.node_of(0.0);
    if (!k) throw Error(ErrorCode::InvalidArgument, "origin normalization needs x = 0 on the grid");
    start = static_cast<std::size_t>(*k);
  }
  SampledField g(u.grid(), identity(n));
  for (int it = 0; it < u.nt(); ++it) {
    const auto line = right_product_line(u.row(it), u.grid().h(), start, identity(n));
    for (int ix = 0; ix < u.nx(); ++ix) g(ix, it) = line[static_cast<std::size_t>(ix)];
  }
  check_unitarity(g, unitarity_tol);
  return g;
}

/// -m-th flow: u_t = [alpha, beta_{m-1}] with beta_0 = g^{-1} b g and
/// beta_k = -g^{-1} (int_{-inf}^x g [alpha, beta_{k-1}] g^{-1}) g.
inline SampledField negflow_rhs(const SampledField& alpha, const DiagonalGenerator& b, int m, const SampledField& u) {
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "negative flow index m must be >= 1");
  const SampledField g = trivialization_ode(u, Normalization::LeftEdge);
  const Matrix bm = b.matrix();
  const SampledField ginv = pointwise(g, [](const Matrix& gv, std::size_t) { return Matrix(gv.inverse()); });
  SampledField beta = pointwise(g, [&](const Matrix& gv, std::size_t i) { return Matrix(ginv.values()[i] * bm * gv); });
  for (int k = 1; k < m; ++k) {
    const SampledField inner = pointwise(g, [&](const Matrix& gv, std::size_t i) {
      return Matrix(gv * commutator(alpha.values()[i], beta.values()[i]) * ginv.values()[i]);
    });
    const SampledField integral = cumulative_x(inner);
    beta = pointwise(g, [&](const Matrix& gv, std::size_t i) { return Matrix(-(ginv.values()[i] * integral.values()[i] * gv)); });
  }
  return commutator(alpha, beta);
}

// ---------------------------------------------------------------------------
// flows

struct FlowRhs {
  SampledField commutator_form;  // [Q_{b,j+1}, a]
  SampledField derivative_form;  // (Q_{b,j})_x + [u, Q_{b,j}]
  double max_difference = 0.0;
  std::vector<std::string> warnings;
};

inline FlowRhs flow_rhs(const FlowSpec& spec, const SampledField& u, int accuracy = 2) {
  spec.validate();
  if (spec.j < 0) {
    const SampledField rhs = negflow_rhs(constant_field(u.grid(), spec.a.matrix()), spec.b, 1, u);
    return {rhs, rhs, 0.0, edge_warnings(u)};
  }
  const QStack st = q_stack(spec.a, spec.b, u, spec.j + 1, accuracy);
  FlowRhs r;
  r.commutator_form = commutator(st[spec.j + 1], spec.a.matrix());
  r.derivative_form = fd_derivative(st[spec.j], AxisId::X, 1, accuracy) + commutator(u, st[spec.j]);
  r.max_difference = max_abs(r.commutator_form - r.derivative_form);
  r.warnings = st.warnings;
  return r;
}

// ---------------------------------------------------------------------------
// Hamiltonians and pairings

/// F_{a,j}(u) = -1/(j+1) int tr(Q_{a,j+2} a) dx, one value per time slice.
inline std::vector<double> hamiltonian_from_stack(const DiagonalGenerator& a, int j, const QStack& st) {
  if (j < 1) throw Error(ErrorCode::InvalidArgument, "Hamiltonian index must be >= 1");
  const SampledField& q = st[j + 2];
  const Matrix am = a.matrix();
  return integrate_x(q.grid(), [&](int ix, int it) { return -(q(ix, it) * am).trace().real() / (j + 1); });
}

inline std::vector<double> hamiltonian(const DiagonalGenerator& a, int j, const SampledField& u, int accuracy = 2) {
  return hamiltonian_from_stack(a, j, q_recursion_local(a, u, j + 2, accuracy));
}

/// w(v1, v2) = Re int tr(-ad(a)^{-1}(v1) v2) dx, one value per time slice.
inline std::vector<double> symplectic_pairing(const DiagonalGenerator& a, const SampledField& v1, const SampledField& v2) {
  check_offdiagonal(a, v1, "v1");
  check_offdiagonal(a, v2, "v2");
  const SampledField w = ad_inverse(a, v1);
  return integrate_x(v1.grid(), [&](int ix, int it) { return -(w(ix, it) * v2(ix, it)).trace().real(); });
}

/// eta_u(v) = int_{-inf}^x [u, v]^d dy.
inline SampledField operator_eta(const DiagonalGenerator& a, const SampledField& u, const SampledField& v) {
  return cumulative_x(diagonal_part(a, commutator(u, v)));
}

/// P_u(v) = v_x + [u, v]^perp - [u, eta_u(v)].
inline SampledField operator_Pu(const DiagonalGenerator& a, const SampledField& u, const SampledField& v, int accuracy = 2) {
  return fd_derivative(v, AxisId::X, 1, accuracy) + offdiagonal_part(a, commutator(u, v)) - commutator(u, operator_eta(a, u, v));
}

/// J_a^{-1} = -ad(a)^{-1} on fields.
inline SampledField j_inverse(const DiagonalGenerator& a, const SampledField& v) { return -1.0 * ad_inverse(a, v); }

/// xi_k(v) = (J_a^{-1} P_u)^{-k-1} J_a^{-1} v for k <= -1.
inline SampledField xi_k(const DiagonalGenerator& a, const SampledField& u, int k, const SampledField& v, int accuracy = 2) {
  if (k > -1) throw Error(ErrorCode::InvalidArgument, "w_k is only available for k <= -1");
  SampledField xi = j_inverse(a, v);
  for (int r = 0; r < -k - 1; ++r) xi = j_inverse(a, operator_Pu(a, u, xi, accuracy));
  return xi;
}

/// w_k(v1, v2) = Re int tr(v1 xi_k(v2)) dx, one value per time slice.
inline std::vector<double> wk_pairing(const DiagonalGenerator& a, const SampledField& u, int k, const SampledField& v1,
                                      const SampledField& v2, int accuracy = 2) {
  check_offdiagonal(a, v1, "v1");
  check_offdiagonal(a, v2, "v2");
  const SampledField xi = xi_k(a, u, k, v2, accuracy);
  return integrate_x(v1.grid(), [&](int ix, int it) { return (v1(ix, it) * xi(ix, it)).trace().real(); });
}

}  // namespace zsakns
