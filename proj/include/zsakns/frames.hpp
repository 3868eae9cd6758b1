#pragma once

// Vacuum and dressed trivializations E(x, t, lambda) with
// E^{-1} E_x = a lambda + u, normalized so that E(0, 0, lambda) = I.

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "zsakns/algebra.hpp"

namespace zsakns {

struct FlowSpec {
  DiagonalGenerator a;
  DiagonalGenerator b;
  int j = 2;

  int dim() const { return a.dim(); }

  void validate() const {
    if (a.dim() != b.dim()) throw Error(ErrorCode::ShapeMismatch, "a and b must have the same dimension");
    if (j == 0 || j < -1) throw Error(ErrorCode::InvalidArgument, "flow degree must be -1 or positive, got " + std::to_string(j));
  }
};

inline FlowSpec make_flow(DiagonalGenerator a, DiagonalGenerator b, int j) {
  FlowSpec s{std::move(a), std::move(b), j};
  s.validate();
  return s;
}

inline double pole_tolerance(cplx z) { return 1e-8 * (1.0 + std::abs(z)); }

/// g_{z,pi}(lambda) = pi + (lambda - z)/(lambda - conj z) pi^perp.
struct SimpleFactor {
  cplx z;
  HermitianProjector pi;
  Matrix basis;  // orthonormal columns spanning the image of pi

  static SimpleFactor make(cplx z, const HermitianProjector& pi) {
    if (z.imag() == 0.0 || !std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw Error(ErrorCode::InvalidArgument, "Im z must be nonzero");
    SimpleFactor f{z, pi, Matrix()};
    const int n = pi.dim();
    Eigen::SelfAdjointEigenSolver<Matrix> es(pi.matrix());
    f.basis = Matrix(n, pi.rank());
    // Eigenvalues come sorted ascending; the image is the top rank() vectors.
    for (int c = 0; c < pi.rank(); ++c) f.basis.col(c) = es.eigenvectors().col(n - pi.rank() + c);
    return f;
  }

  static SimpleFactor from_basis(cplx z, const Matrix& columns) { return make(z, projector_from_basis(columns)); }

  int dim() const { return pi.dim(); }
};

inline Matrix simple_factor_eval(cplx z, const Matrix& pi, cplx lambda) {
  const int n = static_cast<int>(pi.rows());
  if (std::isinf(lambda.real()) || std::isinf(lambda.imag())) return identity(n);
  if (std::abs(lambda - std::conj(z)) <= pole_tolerance(z))
    throw Error(ErrorCode::PoleHit, "lambda coincides with the pole conj(z)");
  return pi + ((lambda - z) / (lambda - std::conj(z))) * (identity(n) - pi);
}

inline Matrix simple_factor_eval(const SimpleFactor& f, cplx lambda) { return simple_factor_eval(f.z, f.pi.matrix(), lambda); }

/// g_{z,pi}(lambda)^{-1} = g_{conj z, pi}(lambda).
inline Matrix simple_factor_inverse(cplx z, const Matrix& pi, cplx lambda) {
  return simple_factor_eval(std::conj(z), pi, lambda);
}

enum class Involution { None, Conjugation };

struct DressedSolution {
  FlowSpec spec;
  std::vector<SimpleFactor> factors;
  Involution involution = Involution::None;

  int dim() const { return spec.dim(); }
};

inline bool is_pure_imaginary(cplx z) { return std::abs(z.real()) <= 1e-12 * std::max(1.0, std::abs(z)); }

inline bool is_conjugate_partner(cplx z, cplx w) { return std::abs(w + std::conj(z)) <= 1e-12 * std::max(1.0, std::abs(z)); }

/// Checks the conjugation involution on a factor list: each factor is either
/// self-conjugate (z = -conj z, pi real) or part of a consecutive pair
/// (z, pi), (-conj z, pi) with pi real. With allow_pending, one trailing
/// unpaired factor is accepted so that pairs can be appended one at a time.
inline void validate_involution(const std::vector<SimpleFactor>& factors, bool allow_pending) {
  std::size_t i = 0;
  while (i < factors.size()) {
    const SimpleFactor& f = factors[i];
    if (!f.pi.is_real())
      throw Error(ErrorCode::InvolutionViolation, "factor " + std::to_string(i + 1) + ": projector is not real");
    if (is_pure_imaginary(f.z)) {
      ++i;
      continue;
    }
    if (i + 1 == factors.size()) {
      if (allow_pending) return;
      throw Error(ErrorCode::InvolutionViolation,
                  "factor " + std::to_string(i + 1) + ": pole is not imaginary and has no partner -conj(z)");
    }
    const SimpleFactor& g = factors[i + 1];
    if (!is_conjugate_partner(f.z, g.z))
      throw Error(ErrorCode::InvolutionViolation,
                  "factor " + std::to_string(i + 2) + ": pole must equal -conj of the preceding pole");
    if (max_abs(f.pi.matrix() - g.pi.matrix()) > kAlgTol)
      throw Error(ErrorCode::InvolutionViolation,
                  "factor " + std::to_string(i + 2) + ": paired factors must share the projector");
    i += 2;
  }
}

// ---------------------------------------------------------------------------
// vacuum

/// Diagonal exponent a lambda x + b lambda^j t.
inline std::vector<cplx> vacuum_exponent(const FlowSpec& spec, double x, double t, cplx lambda) {
  if (spec.j < 0 && lambda == cplx(0.0, 0.0)) throw Error(ErrorCode::PoleAtZero, "lambda = 0 is a pole of the negative flow");
  const cplx lj = std::pow(lambda, spec.j);
  std::vector<cplx> c(static_cast<std::size_t>(spec.dim()));
  for (int k = 0; k < spec.dim(); ++k) c[static_cast<std::size_t>(k)] = spec.a.eigenvalue(k) * lambda * x + spec.b.eigenvalue(k) * lj * t;
  return c;
}

inline Matrix vacuum_frame_eval(const FlowSpec& spec, double x, double t, cplx lambda) {
  const auto c = vacuum_exponent(spec, x, t, lambda);
  Matrix e = zeros(spec.dim());
  for (int k = 0; k < spec.dim(); ++k) e(k, k) = std::exp(c[static_cast<std::size_t>(k)]);
  return e;
}

/// The vacuum frame divided by a positive scalar so that its largest entry
/// has modulus one. Spans and projectors are unchanged; overflow is avoided.
inline Matrix vacuum_frame_scaled(const FlowSpec& spec, double x, double t, cplx lambda) {
  const auto c = vacuum_exponent(spec, x, t, lambda);
  double top = c.front().real();
  for (const cplx& v : c) top = std::max(top, v.real());
  Matrix e = zeros(spec.dim());
  for (int k = 0; k < spec.dim(); ++k) e(k, k) = std::exp(c[static_cast<std::size_t>(k)] - top);
  return e;
}

// ---------------------------------------------------------------------------
// projector transport

/// Orthogonal projector onto the column span of W. Raises GramSingular when
/// the Gram matrix of the normalized columns has condition number above 1e12.
inline Matrix span_projector(const Matrix& w) {
  Matrix v = w;
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    const double nrm = v.col(c).norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm)) throw Error(ErrorCode::GramSingular, "transported basis column vanished");
    v.col(c) /= nrm;
  }
  const Matrix gram = v.adjoint() * v;
  if (v.cols() > 1) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    if (ev(0) <= 1e-12 * ev(ev.size() - 1)) throw Error(ErrorCode::GramSingular, "Gram matrix condition number above 1e12");
  }
  const Matrix p = v * gram.inverse() * v.adjoint();
  return 0.5 * (p + p.adjoint());
}

/// Transported projectors of every factor at one node. Factor k is transported
/// by the frame dressed with factors 1..k-1:
///   E_{k-1}(z_k) = G_{k-1}(z_k) E_0(z_k) R_{k-1}(z_k),
/// G_{k-1} = g_{k-1} ... g_1 and R_{k-1} = gt_1^{-1} ... gt_{k-1}^{-1}.
struct DressedNode {
  double x = 0.0;
  double t = 0.0;
  std::vector<Matrix> transported;
};

inline DressedNode transport_all(const DressedSolution& s, double x, double t) {
  const int n = s.dim();
  DressedNode node{x, t, {}};
  node.transported.reserve(s.factors.size());
  for (std::size_t k = 0; k < s.factors.size(); ++k) {
    const SimpleFactor& f = s.factors[k];
    for (std::size_t i = 0; i < k; ++i)
      if (std::abs(s.factors[i].z - f.z) <= pole_tolerance(f.z))
        throw Error(ErrorCode::GramSingular, "factors " + std::to_string(i + 1) + " and " + std::to_string(k + 1) +
                                                 " share a pole");
    Matrix left = identity(n), right = identity(n);
    for (std::size_t i = 0; i < k; ++i) {
      left = simple_factor_eval(s.factors[i], f.z) * left;
      right = right * simple_factor_inverse(s.factors[i].z, node.transported[i], f.z);
    }
    const Matrix e = left * vacuum_frame_scaled(s.spec, x, t, f.z) * right;
    node.transported.push_back(span_projector(Matrix(e.adjoint() * f.basis)));
  }
  return node;
}

/// u = sum_k (z_k - conj z_k) [pt_k, a].
inline Matrix field_from_node(const DressedSolution& s, const DressedNode& node) {
  const Matrix a = s.spec.a.matrix();
  Matrix u = zeros(s.dim());
  for (std::size_t k = 0; k < s.factors.size(); ++k) {
    const cplx z = s.factors[k].z;
    u += (z - std::conj(z)) * commutator(node.transported[k], a);
  }
  return u;
}

inline Matrix field_eval(const DressedSolution& s, double x, double t) { return field_from_node(s, transport_all(s, x, t)); }

inline void check_admissible(const DressedSolution& s, cplx lambda) {
  for (const SimpleFactor& f : s.factors) {
    if (std::abs(lambda - f.z) <= pole_tolerance(f.z) || std::abs(lambda - std::conj(f.z)) <= pole_tolerance(f.z))
      throw Error(ErrorCode::NearPole, "lambda is within the pole tolerance of a factor pole");
  }
  if (s.spec.j < 0 && lambda == cplx(0.0, 0.0)) throw Error(ErrorCode::PoleAtZero, "lambda = 0 is a pole of the negative flow");
}

/// E(x, t, lambda) from precomputed transported projectors.
inline Matrix frame_from_node(const DressedSolution& s, const DressedNode& node, cplx lambda) {
  check_admissible(s, lambda);
  const int n = s.dim();
  Matrix left = identity(n), right = identity(n);
  for (std::size_t k = 0; k < s.factors.size(); ++k) {
    left = simple_factor_eval(s.factors[k], lambda) * left;
    right = right * simple_factor_inverse(s.factors[k].z, node.transported[k], lambda);
  }
  return left * vacuum_frame_eval(s.spec, node.x, node.t, lambda) * right;
}

inline Matrix frame_eval(const DressedSolution& s, double x, double t, cplx lambda) {
  check_admissible(s, lambda);
  return frame_from_node(s, transport_all(s, x, t), lambda);
}

/// || E(x,t,conj lambda)^* E(x,t,lambda) - I ||.
inline double frame_reality_check(const DressedSolution& s, double x, double t, cplx lambda) {
  const DressedNode node = transport_all(s, x, t);
  const Matrix e = frame_from_node(s, node, lambda);
  const Matrix ec = frame_from_node(s, node, std::conj(lambda));
  return max_abs(Matrix(ec.adjoint() * e - identity(s.dim())));
}

// ---------------------------------------------------------------------------
// exact hierarchy coefficients from the frame

/// Truncated power series in mu = 1/lambda with matrix coefficients.
class MatrixSeries {
 public:
  MatrixSeries(int n, int order) : c_(static_cast<std::size_t>(order) + 1, zeros(n)) { c_[0] = identity(n); }

  int order() const { return static_cast<int>(c_.size()) - 1; }
  Matrix& operator[](int m) { return c_[static_cast<std::size_t>(m)]; }
  const Matrix& operator[](int m) const { return c_[static_cast<std::size_t>(m)]; }

  MatrixSeries operator*(const MatrixSeries& o) const {
    MatrixSeries r(static_cast<int>(c_[0].rows()), order());
    r[0] = zeros(static_cast<int>(c_[0].rows()));
    for (int i = 0; i <= order(); ++i)
      for (int k = 0; i + k <= order(); ++k) r[i + k] += (*this)[i] * o[k];
    return r;
  }

 private:
  std::vector<Matrix> c_;
};

/// Q_{b,0..order} at one node: the large-lambda expansion of R^{-1} b R,
/// where R = gt_1^{-1} ... gt_K^{-1} is the right factor of the dressed frame.
inline std::vector<Matrix> q_series_from_node(const DressedSolution& s, const DiagonalGenerator& b, const DressedNode& node,
                                              int order) {
  const int n = s.dim();
  MatrixSeries right(n, order), right_inv(n, order);
  for (std::size_t k = 0; k < s.factors.size(); ++k) {
    const cplx z = s.factors[k].z, zb = std::conj(z);
    const Matrix perp = identity(n) - node.transported[k];
    MatrixSeries gi(n, order), g(n, order);
    cplx zp = 1.0, zbp = 1.0;
    for (int m = 1; m <= order; ++m) {
      gi[m] = (z - zb) * zp * perp;
      g[m] = -(z - zb) * zbp * perp;
      zp *= z;
      zbp *= zb;
    }
    right = right * gi;
    right_inv = g * right_inv;
  }
  MatrixSeries bs(n, order);
  bs[0] = b.matrix();
  const MatrixSeries q = right_inv * bs * right;
  std::vector<Matrix> out;
  for (int m = 0; m <= order; ++m) out.push_back(q[m]);
  return out;
}

/// R(0)^{-1} b R(0): the lambda^{-1} coefficient of the t-connection of the -1 flow.
inline Matrix negative_flow_potential(const DressedSolution& s, const DiagonalGenerator& b, const DressedNode& node) {
  const int n = s.dim();
  Matrix right = identity(n);
  for (std::size_t k = 0; k < s.factors.size(); ++k)
    right = right * simple_factor_inverse(s.factors[k].z, node.transported[k], cplx(0.0, 0.0));
  return right.inverse() * b.matrix() * right;
}

/// t-connection B(lambda) = E^{-1} E_t evaluated from the exact coefficients.
inline Matrix t_connection_exact(const DressedSolution& s, const DressedNode& node, cplx lambda) {
  if (s.spec.j < 0) return negative_flow_potential(s, s.spec.b, node) / lambda;
  const auto q = q_series_from_node(s, s.spec.b, node, s.spec.j);
  Matrix r = zeros(s.dim());
  for (int m = 0; m <= s.spec.j; ++m) r += std::pow(lambda, s.spec.j - m) * q[static_cast<std::size_t>(m)];
  return r;
}

}  // namespace zsakns
