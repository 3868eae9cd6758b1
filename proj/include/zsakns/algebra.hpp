#pragma once

// Dense complex matrices of size n <= 8 and the centralizer split relative to
// a diagonal skew-Hermitian generator a = diag(i a_1, ..., i a_n).

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "zsakns/error.hpp"

namespace zsakns {

using cplx = std::complex<double>;

inline constexpr int kMaxDim = 8;
inline constexpr double kAlgTol = 1e-10;   // Hermitian / idempotent checks
inline constexpr double kRankTol = 1e-10;  // relative smallest singular value
inline constexpr cplx kI{0.0, 1.0};

/// Column-major dense complex matrix with at most kMaxDim rows and columns.
/// Storage is inline, so temporaries never touch the heap.
using Matrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

inline Matrix identity(int n) { return Matrix::Identity(n, n); }
inline Matrix zeros(int n) { return Matrix::Zero(n, n); }

inline Matrix commutator(const Matrix& x, const Matrix& y) { return x * y - y * x; }

/// Max-entry norm, used for every tolerance comparison in the library.
inline double max_abs(const Matrix& m) {
  double r = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) r = std::max(r, std::abs(m(i, j)));
  return r;
}

inline bool all_finite(const Matrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
  return true;
}

/// Real trace pairing <x, y> = Re tr(x y*).
inline double real_pairing(const Matrix& x, const Matrix& y) { return (x * y.adjoint()).trace().real(); }

/// Two eigenvalues i a_j, i a_k are treated as equal when
/// |a_j - a_k| <= 1e-9 max(1, |a_j|, |a_k|).
inline bool eigenvalues_coincide(double aj, double ak) {
  return std::abs(aj - ak) <= 1e-9 * std::max({1.0, std::abs(aj), std::abs(ak)});
}

class DiagonalGenerator {
 public:
  DiagonalGenerator() = default;
  explicit DiagonalGenerator(std::vector<double> imag_parts) : imag_(std::move(imag_parts)) {
    if (imag_.size() < 2 || imag_.size() > static_cast<std::size_t>(kMaxDim))
      throw Error(ErrorCode::InvalidArgument, "dimension must be in [2, 8], got " + std::to_string(imag_.size()));
    for (double v : imag_)
      if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite diagonal entry");
  }

  int dim() const { return static_cast<int>(imag_.size()); }
  const std::vector<double>& imag_parts() const { return imag_; }
  double imag_part(int k) const { return imag_[static_cast<std::size_t>(k)]; }
  cplx eigenvalue(int k) const { return {0.0, imag_[static_cast<std::size_t>(k)]}; }

  bool same_block(int j, int k) const { return eigenvalues_coincide(imag_part(j), imag_part(k)); }

  bool regular() const {
    for (int j = 0; j < dim(); ++j)
      for (int k = j + 1; k < dim(); ++k)
        if (same_block(j, k)) return false;
    return true;
  }

  bool is_zero() const {
    return std::all_of(imag_.begin(), imag_.end(), [](double v) { return v == 0.0; });
  }

  Matrix matrix() const {
    Matrix m = zeros(dim());
    for (int k = 0; k < dim(); ++k) m(k, k) = eigenvalue(k);
    return m;
  }

  DiagonalGenerator scaled(double c) const {
    std::vector<double> v = imag_;
    for (double& x : v) x *= c;
    return DiagonalGenerator(std::move(v));
  }

 private:
  std::vector<double> imag_;
};

struct CentralizerSplit {
  Matrix diag;     // a-diagonal part (commutes with a)
  Matrix offdiag;  // a-off-diagonal part
};

inline CentralizerSplit split_a_diagonal(const DiagonalGenerator& a, const Matrix& m) {
  if (m.rows() != a.dim() || m.cols() != a.dim())
    throw Error(ErrorCode::ShapeMismatch, "matrix size does not match generator dimension");
  CentralizerSplit s{zeros(a.dim()), zeros(a.dim())};
  for (int j = 0; j < a.dim(); ++j)
    for (int k = 0; k < a.dim(); ++k) (a.same_block(j, k) ? s.diag : s.offdiag)(j, k) = m(j, k);
  return s;
}

inline Matrix a_diagonal_part(const DiagonalGenerator& a, const Matrix& m) { return split_a_diagonal(a, m).diag; }
inline Matrix a_offdiagonal_part(const DiagonalGenerator& a, const Matrix& m) { return split_a_diagonal(a, m).offdiag; }

/// Solves [a, w] = v for a-off-diagonal w. The input must have no a-diagonal
/// component (above kAlgTol); anything else is a misuse of the split.
inline Matrix ad_inverse(const DiagonalGenerator& a, const Matrix& v) {
  const int n = a.dim();
  if (v.rows() != n || v.cols() != n) throw Error(ErrorCode::ShapeMismatch, "ad_inverse: size mismatch");
  Matrix w = zeros(n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      if (a.same_block(j, k)) {
        if (std::abs(v(j, k)) > kAlgTol)
          throw Error(ErrorCode::NonOffDiagonalInput,
                      "entry (" + std::to_string(j + 1) + "," + std::to_string(k + 1) + ") lies in the centralizer of a");
        continue;
      }
      w(j, k) = v(j, k) / (a.eigenvalue(j) - a.eigenvalue(k));
    }
  }
  return w;
}

/// J_a(v) = [v, a] and its inverse on the off-diagonal part; J_a^{-1} = -ad(a)^{-1}.
inline Matrix j_operator(const DiagonalGenerator& a, const Matrix& v) { return commutator(v, a.matrix()); }
inline Matrix j_inverse(const DiagonalGenerator& a, const Matrix& v) { return -ad_inverse(a, v); }

/// Distinct eigenvalues of a (deduplicated with the coincidence tolerance).
/// The product of (t - c_m) over the result is the minimal polynomial of a.
inline std::vector<cplx> minimal_polynomial(const DiagonalGenerator& a) {
  std::vector<cplx> roots;
  for (int k = 0; k < a.dim(); ++k) {
    bool seen = false;
    for (const cplx& r : roots) seen = seen || eigenvalues_coincide(r.imag(), a.imag_part(k));
    if (!seen) roots.push_back(a.eigenvalue(k));
  }
  return roots;
}

inline Matrix apply_polynomial(const std::vector<cplx>& roots, const Matrix& m) {
  Matrix r = identity(static_cast<int>(m.rows()));
  for (const cplx& c : roots) r = r * (m - c * identity(static_cast<int>(m.rows())));
  return r;
}

/// Max of ||P^2 - P|| and ||P* - P||.
inline double projector_defect(const Matrix& p) { return std::max(max_abs(p * p - p), max_abs(p.adjoint() - p)); }

class HermitianProjector {
 public:
  HermitianProjector() = default;

  /// Wraps an existing matrix after checking the projector invariants.
  static HermitianProjector from_matrix(const Matrix& p, double tol = kAlgTol) {
    if (p.rows() != p.cols()) throw Error(ErrorCode::ShapeMismatch, "projector must be square");
    if (!all_finite(p)) throw Error(ErrorCode::InvalidArgument, "projector has non-finite entries");
    if (projector_defect(p) > tol) throw Error(ErrorCode::InvalidArgument, "matrix is not a Hermitian projector");
    HermitianProjector h;
    h.matrix_ = p;
    h.rank_ = static_cast<int>(std::lround(p.trace().real()));
    return h;
  }

  static HermitianProjector zero(int n) { return from_matrix(zeros(n)); }
  static HermitianProjector full(int n) { return from_matrix(identity(n)); }

  int dim() const { return static_cast<int>(matrix_.rows()); }
  int rank() const { return rank_; }
  const Matrix& matrix() const { return matrix_; }
  Matrix complement() const { return identity(dim()) - matrix_; }

  bool is_real(double tol = kAlgTol) const { return max_abs(Matrix(matrix_.imag().cast<cplx>())) <= tol; }

 private:
  Matrix matrix_;
  int rank_ = 0;
};

/// pi = U (U* U)^{-1} U*, the orthogonal projector onto the column span of U.
/// Columns are normalized first so that the rank test is scale-free.
inline HermitianProjector projector_from_basis(const Matrix& basis) {
  if (basis.cols() == 0) return HermitianProjector::zero(static_cast<int>(basis.rows()));
  if (basis.cols() > basis.rows()) throw Error(ErrorCode::RankDeficient, "more basis columns than dimensions");
  Matrix u = basis;
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    const double nrm = u.col(c).norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm)) throw Error(ErrorCode::RankDeficient, "zero or non-finite basis column");
    u.col(c) /= nrm;
  }
  Eigen::JacobiSVD<Matrix> svd(u);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= kRankTol * sv(0))
    throw Error(ErrorCode::RankDeficient, "basis columns are numerically dependent");
  const Matrix gram = u.adjoint() * u;
  const Matrix p = u * gram.inverse() * u.adjoint();
  // Symmetrize away rounding so the invariants hold far below kAlgTol.
  return HermitianProjector::from_matrix(Matrix(0.5 * (p + p.adjoint())));
}

}  // namespace zsakns
