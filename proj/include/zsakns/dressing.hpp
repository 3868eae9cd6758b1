#pragma once

// Rational loop-group action on the hierarchy: simple factors, projector
// transport, soliton formulas, permutability, scaling and breathers.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

#include "zsakns/frames.hpp"
#include "zsakns/grid.hpp"

namespace zsakns {

using FrameEvaluator = std::function<Matrix(double, double)>;  // (x, t) -> E(x, t, z)
using ProjectorClosure = std::function<Matrix(double, double)>;

/// pt(x, t) = projector onto E(x, t, z)^* V, V = span of the columns of U.
inline ProjectorClosure transport_projector(FrameEvaluator frame_at_z, const Matrix& U) {
  const Matrix basis = U;
  if (basis.cols() > 0) (void)projector_from_basis(basis);  // rank check
  return [frame_at_z = std::move(frame_at_z), basis](double x, double t) {
    return span_projector(Matrix(frame_at_z(x, t).adjoint() * basis));
  };
}

inline ProjectorClosure transport_projector(const DressedSolution& s, const SimpleFactor& f) {
  return transport_projector([s, z = f.z](double x, double t) { return frame_eval(s, x, t, z); }, f.basis);
}

inline DressedSolution vacuum_solution(const FlowSpec& spec, Involution inv = Involution::None) {
  spec.validate();
  return DressedSolution{spec, {}, inv};
}

inline DressedSolution dress_solution(const DressedSolution& s, const SimpleFactor& f) {
  if (f.dim() != s.dim()) throw Error(ErrorCode::ShapeMismatch, "factor dimension does not match the flow");
  DressedSolution out = s;
  out.factors.push_back(f);
  if (out.involution == Involution::Conjugation) validate_involution(out.factors, true);
  return out;
}

inline DressedSolution dress_solution(DressedSolution s, const std::vector<SimpleFactor>& fs) {
  for (const SimpleFactor& f : fs) s = dress_solution(s, f);
  return s;
}

/// Field closure u(x, t). For the conjugation involution every pair must be
/// complete before the field is evaluated.
inline FieldClosure field_closure(const DressedSolution& s) {
  if (s.involution == Involution::Conjugation) validate_involution(s.factors, false);
  return [s](double x, double t) { return field_eval(s, x, t); };
}

inline SampledField sample_field(const DressedSolution& s, const GridSpec& grid) { return sample(grid, field_closure(s)); }

// ---------------------------------------------------------------------------
// one-soliton closed form

/// Closed-form one-soliton B(x, t) for the j-th flow with b = a and
/// a = sign * diag(i, -i, ..., -i), embedded as u = [[0, B], [-B^*, 0]].
/// For sign = +1 this is 4s e^{-2i Phi} conj(v) / (e^{-2 Sigma} + e^{2 Sigma} |v|^2)
/// with Phi = r x + Re(z^j) t and Sigma = s x + Im(z^j) t, which is the field
/// produced by dressing the vacuum with (z, span(1, v)). For sign = -1 the
/// same dressing gives -B(-x, -t).
inline FieldClosure one_soliton_closed_form(cplx z, const std::vector<cplx>& v, int j, int sign = 1) {
  if (z.imag() == 0.0) throw Error(ErrorCode::InvalidArgument, "Im z must be nonzero");
  if (v.empty()) throw Error(ErrorCode::InvalidArgument, "v must be nonempty");
  double vv = 0.0;
  for (const cplx& c : v) vv += std::norm(c);
  if (vv == 0.0) throw Error(ErrorCode::InvalidArgument, "v must be nonzero");
  if (sign != 1 && sign != -1) throw Error(ErrorCode::InvalidArgument, "sign must be +1 or -1");
  const int n = static_cast<int>(v.size()) + 1;
  return [=](double x, double t) {
    const double xs = sign * x, ts = sign * t;
    const cplx zj = std::pow(z, j);
    const double phi = z.real() * xs + zj.real() * ts;
    const double sig = z.imag() * xs + zj.imag() * ts;
    const cplx num = 4.0 * z.imag() * std::exp(cplx(0.0, -2.0 * phi));
    const double den = std::exp(-2.0 * sig) + std::exp(2.0 * sig) * vv;
    Matrix u = zeros(n);
    for (int k = 1; k < n; ++k) {
      const cplx bk = static_cast<double>(sign) * num / den * std::conj(v[static_cast<std::size_t>(k - 1)]);
      u(0, k) = bk;
      u(k, 0) = -std::conj(bk);
    }
    return u;
  };
}

/// Sign s with a = s diag(i, -i, ..., -i), or 0 when a has another shape.
inline int soliton_orientation(const DiagonalGenerator& a) {
  for (int sgn : {1, -1}) {
    bool ok = a.imag_part(0) == sgn;
    for (int k = 1; k < a.dim(); ++k) ok = ok && a.imag_part(k) == -sgn;
    if (ok) return sgn;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// permutability

/// xi_i = M pi_i M^{-1}, M = -(z1 - z2) I + 2i (s1 pi_1 - s2 pi_2); then
/// g_{z2,xi2} g_{z1,pi1} = g_{z1,xi1} g_{z2,pi2}.
inline std::pair<HermitianProjector, HermitianProjector> permute_factors(const SimpleFactor& f1, const SimpleFactor& f2) {
  const double r1 = f1.z.real(), s1 = f1.z.imag(), r2 = f2.z.real(), s2 = f2.z.imag();
  const double scale = std::max({1.0, std::abs(f1.z), std::abs(f2.z)});
  if (std::abs(r1 - r2) <= 1e-12 * scale && std::abs(s1 * s1 - s2 * s2) <= 1e-12 * scale * scale)
    throw Error(ErrorCode::DegeneratePair, "poles need r1 != r2 or s1^2 != s2^2");
  const int n = f1.dim();
  const Matrix m = -(f1.z - f2.z) * identity(n) + cplx(0.0, 2.0) * (s1 * f1.pi.matrix() - s2 * f2.pi.matrix());
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 1e-12 * sv(0)) throw Error(ErrorCode::MSingular, "permutation matrix M is numerically singular");
  const Matrix mi = m.inverse();
  const Matrix x1 = m * f1.pi.matrix() * mi, x2 = m * f2.pi.matrix() * mi;
  return {HermitianProjector::from_matrix(Matrix(0.5 * (x1 + x1.adjoint())), 1e-9),
          HermitianProjector::from_matrix(Matrix(0.5 * (x2 + x2.adjoint())), 1e-9)};
}

/// Dresses s0 by [(z1, pi1), (z2, xi2)] and by [(z2, pi2), (z1, xi1)] and
/// returns the largest difference of the resulting fields over the grid.
inline double dress_two_orders(const DressedSolution& s0, const SimpleFactor& f1, const SimpleFactor& f2, const GridSpec& grid) {
  const auto [xi1, xi2] = permute_factors(f1, f2);
  const DressedSolution a = dress_solution(s0, {f1, SimpleFactor::make(f2.z, xi2)});
  const DressedSolution b = dress_solution(s0, {f2, SimpleFactor::make(f1.z, xi1)});
  double worst = 0.0;
  for (int it = 0; it < grid.nt(); ++it)
    for (int ix = 0; ix < grid.nx(); ++ix) {
      const double x = grid.x.at(ix), t = grid.t.at(it);
      worst = std::max(worst, max_abs(Matrix(field_eval(a, x, t) - field_eval(b, x, t))));
    }
  return worst;
}

// ---------------------------------------------------------------------------
// scaling

/// (r . u)(x, t) = r^{-1} u(x/r, t/r^j) for j > 0 and r^{-1} u(x/r, r t) for j = -1.
/// Over the vacuum this equals dressing with every pole divided by r.
inline FieldClosure scale_action(double r, const FieldClosure& u, int j) {
  if (r == 0.0 || !std::isfinite(r)) throw Error(ErrorCode::InvalidArgument, "scale must be finite and nonzero");
  const double tscale = j < 0 ? r : std::pow(r, -j);
  return [=](double x, double t) { return Matrix(u(x / r, tscale * t) / r); };
}

inline FieldClosure scale_action(double r, const DressedSolution& s) { return scale_action(r, field_closure(s), s.spec.j); }

inline DressedSolution scale_poles(const DressedSolution& s, double r) {
  DressedSolution out = s;
  for (SimpleFactor& f : out.factors) f = SimpleFactor::make(f.z / r, f.pi);
  return out;
}

// ---------------------------------------------------------------------------
// breathers and the sine-Gordon angle

/// a = b = diag(i/2, -i/2), j = -1. With u = [[0, q_x/2], [-q_x/2, 0]] the
/// flow is q_xt = -sin q.
inline FlowSpec breather_flow() {
  return make_flow(DiagonalGenerator({0.5, -0.5}), DiagonalGenerator({0.5, -0.5}), -1);
}

/// a = diag(i, -i), b = -a/4, j = -1: the flow q_xt = sin q.
inline FlowSpec sine_gordon_flow() {
  return make_flow(DiagonalGenerator({1.0, -1.0}), DiagonalGenerator({-0.25, 0.25}), -1);
}

/// Coefficient c in q_xt = c sin q for the su(2) -1 flow with
/// a = diag(i k, -i k), b = beta a and u12 = q_x / 2.
inline double sine_gordon_coefficient(const FlowSpec& spec) {
  if (spec.dim() != 2 || spec.j != -1 || spec.a.imag_part(1) != -spec.a.imag_part(0) || spec.a.imag_part(0) == 0.0)
    throw Error(ErrorCode::NotApplicable, "sine-Gordon reduction needs n = 2, j = -1, a = diag(ik, -ik)");
  const double k = spec.a.imag_part(0);
  const double beta = spec.b.imag_part(0) / k;
  if (std::abs(spec.b.imag_part(1) + beta * k) > 1e-14 * std::max(1.0, std::abs(beta * k)))
    throw Error(ErrorCode::NotApplicable, "b must be a multiple of a");
  return -4.0 * k * k * beta;
}

/// Factors [(e^{i theta}, pi), (-e^{-i theta}, pi)] over the -1 flow vacuum.
inline DressedSolution build_breather(double theta, const HermitianProjector& pi, const FlowSpec& spec = breather_flow()) {
  if (std::abs(std::cos(theta)) <= 1e-12) throw Error(ErrorCode::InvalidArgument, "cos(theta) must be nonzero");
  if (spec.j != -1) throw Error(ErrorCode::InvalidArgument, "breathers live on the -1 flow");
  if (!pi.is_real()) throw Error(ErrorCode::RealnessViolation, "breather projector must be real");
  const cplx z = std::polar(1.0, theta);
  DressedSolution s = vacuum_solution(spec, Involution::Conjugation);
  s = dress_solution(s, SimpleFactor::make(z, pi));
  s = dress_solution(s, SimpleFactor::make(-std::conj(z), pi));
  return s;
}

/// 4 arctan( sin(theta) sin((x+t) cos(theta)) / (cos(theta) cosh((x-t) sin(theta))) ).
inline double breather_closed_form(double theta, double x, double t) {
  return 4.0 * std::atan(std::sin(theta) * std::sin((x + t) * std::cos(theta)) /
                         (std::cos(theta) * std::cosh((x - t) * std::sin(theta))));
}

/// Angle q mod 2 pi at one node of an su(2) -1 flow solution: the potential
/// R(0)^{-1} b R(0) equals i b_1 [[cos q, sin q], [sin q, -cos q]], and then
/// u_12 = q_x / 2.
inline double sine_gordon_angle_raw(const DressedSolution& s, double x, double t) {
  (void)sine_gordon_coefficient(s.spec);
  const Matrix v = negative_flow_potential(s, s.spec.b, transport_all(s, x, t)) / s.spec.b.eigenvalue(0);
  return std::atan2(v(0, 1).real(), v(0, 0).real());
}

/// Continuous angle along every row, taking the branch nearest 0 at the left
/// edge where the field has decayed.
inline ScalarField sine_gordon_angle(const DressedSolution& s, const GridSpec& grid) {
  ScalarField q(grid, 0.0);
  const double two_pi = 2.0 * std::numbers::pi;
  for (int it = 0; it < grid.nt(); ++it) {
    double prev = 0.0;
    for (int ix = 0; ix < grid.nx(); ++ix) {
      const double raw = sine_gordon_angle_raw(s, grid.x.at(ix), grid.t.at(it));
      const double v = raw + two_pi * std::round((prev - raw) / two_pi);
      if (ix > 0 && std::abs(v - prev) > 0.5 * std::numbers::pi)
        throw Error(ErrorCode::BranchJump, "angle changes by more than pi/2 between neighbouring nodes");
      q(ix, it) = v;
      prev = v;
    }
  }
  return q;
}

// ---------------------------------------------------------------------------
// projector ODE cross-check

struct ProjectorOdeResult {
  double x_deviation = 0.0;
  double t_deviation = 0.0;
};

/// Right-hand sides of the transported-projector ODEs for a pole z over the
/// background solution s at (x, t):
///   p_x = -[a z + u, p] + (conj z - z)[p, a] p
///   p_t = sum_{k=0}^{j} (-1)^k [p, Q_{b,j-k}] (-z + (z - conj z) p)^k          (j > 0)
///   p_t = ((z - conj z) p V p - z V p + conj z p V) / |z|^2, V = R(0)^{-1} b R(0)  (j = -1)
inline Matrix projector_x_rhs(const DressedSolution& s, cplx z, const Matrix& p, double x, double t) {
  const Matrix a = s.spec.a.matrix();
  const Matrix u = field_eval(s, x, t);
  return -commutator(Matrix(z * a + u), p) + (std::conj(z) - z) * commutator(p, a) * p;
}

inline Matrix projector_t_rhs(const DressedSolution& s, cplx z, const Matrix& p, double x, double t) {
  const int n = s.dim();
  const DressedNode node = transport_all(s, x, t);
  const cplx zb = std::conj(z);
  if (s.spec.j < 0) {
    const Matrix v = negative_flow_potential(s, s.spec.b, node);
    return ((z - zb) * p * v * p - z * v * p + zb * p * v) / std::norm(z);
  }
  const auto q = q_series_from_node(s, s.spec.b, node, s.spec.j);
  const Matrix base = -z * identity(n) + (z - zb) * p;
  Matrix power = identity(n), acc = zeros(n);
  for (int k = 0; k <= s.spec.j; ++k) {
    const double sgn = (k % 2 == 0) ? 1.0 : -1.0;
    acc += sgn * commutator(p, q[static_cast<std::size_t>(s.spec.j - k)]) * power;
    power = power * base;
  }
  return acc;
}

/// RK4-integrates both ODEs from the algebraic value at (x0, t0) over
/// `length` along x and along t and reports the largest deviation from the
/// algebraic transport at the step nodes.
inline ProjectorOdeResult projector_ode_check(const DressedSolution& s, const SimpleFactor& f, double x0, double t0,
                                              double length, double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "step must be positive");
  const auto exact = [&](double x, double t) { return transport_all(dress_solution(s, f), x, t).transported.back(); };
  ProjectorOdeResult res;
  const int steps = static_cast<int>(std::lround(length / step));
  for (int axis = 0; axis < 2; ++axis) {
    const auto rhs = [&](double tau, const Matrix& p) {
      return axis == 0 ? projector_x_rhs(s, f.z, p, x0 + tau, t0) : projector_t_rhs(s, f.z, p, x0, t0 + tau);
    };
    Matrix p = exact(x0, t0);
    double worst = 0.0;
    for (int i = 0; i < steps; ++i) {
      const double tau = i * step;
      const Matrix k1 = rhs(tau, p);
      const Matrix k2 = rhs(tau + 0.5 * step, Matrix(p + 0.5 * step * k1));
      const Matrix k3 = rhs(tau + 0.5 * step, Matrix(p + 0.5 * step * k2));
      const Matrix k4 = rhs(tau + step, Matrix(p + step * k3));
      p += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      const double tn = (i + 1) * step;
      const Matrix ref = axis == 0 ? exact(x0 + tn, t0) : exact(x0, t0 + tn);
      worst = std::max(worst, max_abs(Matrix(p - ref)));
    }
    if (worst > 1e-3)
      throw Error(ErrorCode::StepTooLarge, std::string(axis == 0 ? "x" : "t") + "-path deviation " + std::to_string(worst) +
                                               " exceeds 1e-3");
    (axis == 0 ? res.x_deviation : res.t_deviation) = worst;
  }
  return res;
}

}  // namespace zsakns
