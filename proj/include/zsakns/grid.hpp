#pragma once

// Rectangular (x, t) grids, sampled fields, finite differences, trapezoid
// quadrature and convergence bookkeeping.

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "zsakns/algebra.hpp"

namespace zsakns {

struct Axis {
  double lo = 0.0;
  double hi = 0.0;
  int n = 1;

  double step() const { return n > 1 ? (hi - lo) / (n - 1) : 0.0; }
  double at(int i) const { return n > 1 ? lo + (hi - lo) * i / (n - 1) : lo; }

  /// Index of the node at coordinate v, if v sits on a node.
  std::optional<int> node_of(double v, double tol = 1e-9) const {
    if (n == 1) return std::abs(v - lo) <= tol ? std::optional<int>(0) : std::nullopt;
    const double r = (v - lo) / step();
    const long k = std::lround(r);
    if (k < 0 || k >= n || std::abs(r - static_cast<double>(k)) > tol) return std::nullopt;
    return static_cast<int>(k);
  }

  /// Same interval with 2n-1 nodes (spacing halved).
  Axis refined() const { return n > 1 ? Axis{lo, hi, 2 * n - 1} : *this; }
};

struct GridSpec {
  Axis x;
  Axis t{0.0, 0.0, 1};

  int nx() const { return x.n; }
  int nt() const { return t.n; }
  double h() const { return x.step(); }
  double k() const { return t.step(); }

  GridSpec refined() const { return {x.refined(), t.refined()}; }
  GridSpec refined_x() const { return {x.refined(), t}; }

  void validate() const {
    if (x.n < 5) throw Error(ErrorCode::GridTooSmall, "x axis needs at least 5 nodes");
    if (t.n < 1) throw Error(ErrorCode::GridTooSmall, "t axis needs at least 1 node");
    if (!(x.hi > x.lo)) throw Error(ErrorCode::InvalidArgument, "x bounds must be increasing");
    if (t.n > 1 && !(t.hi > t.lo)) throw Error(ErrorCode::InvalidArgument, "t bounds must be increasing");
  }
};

inline GridSpec make_grid(double x0, double x1, int nx, double t0 = 0.0, double t1 = 0.0, int nt = 1) {
  GridSpec g{{x0, x1, nx}, {t0, t1, nt}};
  g.validate();
  return g;
}

/// Values of type T on every node of a GridSpec, x fastest.
template <class T>
class GridField {
 public:
  GridField() = default;
  GridField(GridSpec grid, const T& fill) : grid_(grid), data_(static_cast<std::size_t>(grid.nx()) * grid.nt(), fill) {}

  const GridSpec& grid() const { return grid_; }
  int nx() const { return grid_.nx(); }
  int nt() const { return grid_.nt(); }

  T& operator()(int ix, int it = 0) { return data_[index(ix, it)]; }
  const T& operator()(int ix, int it = 0) const { return data_[index(ix, it)]; }

  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  /// Samples of one time slice.
  std::vector<T> row(int it) const {
    return std::vector<T>(data_.begin() + static_cast<std::ptrdiff_t>(index(0, it)),
                          data_.begin() + static_cast<std::ptrdiff_t>(index(0, it) + nx()));
  }

  /// One time slice as a single-row field.
  GridField slice(int it) const {
    GridField f(GridSpec{grid_.x, {grid_.t.at(it), grid_.t.at(it), 1}}, data_.front());
    for (int ix = 0; ix < nx(); ++ix) f(ix) = (*this)(ix, it);
    return f;
  }

  template <class F>
  auto map(F&& fn) const {
    using R = std::decay_t<decltype(fn(data_.front()))>;
    GridField<R> out(grid_, fn(data_.front()));
    for (std::size_t i = 0; i < data_.size(); ++i) out.values()[i] = fn(data_[i]);
    return out;
  }

 private:
  std::size_t index(int ix, int it) const { return static_cast<std::size_t>(it) * nx() + ix; }
  GridSpec grid_;
  std::vector<T> data_;
};

using SampledField = GridField<Matrix>;
using ScalarField = GridField<double>;
using FieldClosure = std::function<Matrix(double, double)>;
using ScalarClosure = std::function<double(double, double)>;

template <class F>
auto sample(const GridSpec& grid, F&& fn) {
  using R = std::decay_t<decltype(fn(0.0, 0.0))>;
  GridField<R> out(grid, fn(grid.x.at(0), grid.t.at(0)));
  for (int it = 0; it < grid.nt(); ++it)
    for (int ix = 0; ix < grid.nx(); ++ix) out(ix, it) = fn(grid.x.at(ix), grid.t.at(it));
  return out;
}

// ---------------------------------------------------------------------------
// norms

inline double abs_of(double v) { return std::abs(v); }
inline double abs_of(const cplx& v) { return std::abs(v); }
inline double abs_of(const Matrix& m) { return max_abs(m); }

inline double sq_of(double v) { return v * v; }
inline double sq_of(const cplx& v) { return std::norm(v); }
inline double sq_of(const Matrix& m) { return m.squaredNorm(); }

template <class T>
T zero_like(const T& v) {
  if constexpr (std::is_same_v<T, Matrix>) return Matrix::Zero(v.rows(), v.cols());
  else return T{};
}

// ---------------------------------------------------------------------------
// finite differences

/// Fornberg's algorithm: weights of the derivative of order `order` at x0
/// for the nodes xs.
inline std::vector<double> fornberg_weights(double x0, const std::vector<double>& xs, int order) {
  const int n = static_cast<int>(xs.size());
  std::vector<std::vector<double>> c(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(order) + 1, 0.0));
  double c1 = 1.0;
  double c4 = xs[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, order);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = xs[static_cast<std::size_t>(i)] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = xs[static_cast<std::size_t>(i)] - xs[static_cast<std::size_t>(j)];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = c[i][order];
  return w;
}

/// Stencil table for derivative order d and accuracy p on a uniform unit grid.
/// Interior nodes use the centered stencil of width 2*floor((d+1)/2)+p-1;
/// nodes too close to an edge use the one-sided window of width d+p.
class Stencils {
 public:
  Stencils(int n, int order, int accuracy) : n_(n), sign_(order % 2 == 0 ? 1.0 : -1.0) {
    if (order < 1 || order > 4) throw Error(ErrorCode::InvalidArgument, "derivative order must be 1..4");
    if (accuracy < 2 || accuracy % 2 != 0) throw Error(ErrorCode::InvalidArgument, "accuracy must be even and >= 2");
    const int centered = 2 * ((order + 1) / 2) + accuracy - 1;
    half_ = centered / 2;
    side_ = order + accuracy;
    if (n < std::max(centered, side_))
      throw Error(ErrorCode::GridTooSmall, "need at least " + std::to_string(std::max(centered, side_)) +
                                               " nodes for this stencil, got " + std::to_string(n));
    std::vector<double> xs;
    for (int o = -half_; o <= half_; ++o) xs.push_back(o);
    center_ = fornberg_weights(0.0, xs, order);
    xs.clear();
    for (int o = 0; o < side_; ++o) xs.push_back(o);
    for (int i = 0; i < half_; ++i) left_.push_back(fornberg_weights(i, xs, order));
  }

  /// Calls emit(node_index, weight) for the stencil of node i.
  template <class Emit>
  void apply(int i, Emit&& emit) const {
    if (i >= half_ && i < n_ - half_) {
      for (int o = -half_; o <= half_; ++o) emit(i + o, center_[static_cast<std::size_t>(o + half_)]);
    } else if (i < half_) {
      const auto& w = left_[static_cast<std::size_t>(i)];
      for (int o = 0; o < side_; ++o) emit(o, w[static_cast<std::size_t>(o)]);
    } else {
      // Mirror of the left table: the derivative of order d picks up (-1)^d.
      const auto& w = left_[static_cast<std::size_t>(n_ - 1 - i)];
      for (int o = 0; o < side_; ++o) emit(n_ - 1 - o, sign_ * w[static_cast<std::size_t>(o)]);
    }
  }

 private:
  int n_;
  int half_ = 0;
  int side_ = 0;
  double sign_;
  std::vector<double> center_;
  std::vector<std::vector<double>> left_;
};

inline Stencils make_stencils(int n, int order, int accuracy) { return Stencils(n, order, accuracy); }

/// d^order/dx^order of uniformly spaced samples.
template <class T>
std::vector<T> fd_derivative(const std::vector<T>& f, double h, int order, int accuracy = 2) {
  const int n = static_cast<int>(f.size());
  const Stencils st = make_stencils(n, order, accuracy);
  const double scale = 1.0 / std::pow(h, order);
  std::vector<T> out(f.size(), zero_like(f.front()));
  for (int i = 0; i < n; ++i) {
    T acc = zero_like(f.front());
    st.apply(i, [&](int j, double w) { acc += w * f[static_cast<std::size_t>(j)]; });
    out[static_cast<std::size_t>(i)] = scale * acc;
  }
  return out;
}

enum class AxisId { X, T };

template <class T>
GridField<T> fd_derivative(const GridField<T>& field, AxisId axis, int order, int accuracy = 2) {
  GridField<T> out = field;
  const int n = axis == AxisId::X ? field.nx() : field.nt();
  const int lines = axis == AxisId::X ? field.nt() : field.nx();
  const double h = axis == AxisId::X ? field.grid().h() : field.grid().k();
  const Stencils st = make_stencils(n, order, accuracy);
  const double scale = 1.0 / std::pow(h, order);
  for (int line = 0; line < lines; ++line) {
    for (int i = 0; i < n; ++i) {
      T acc = zero_like(field.values().front());
      st.apply(i, [&](int j, double w) {
        acc += w * (axis == AxisId::X ? field(j, line) : field(line, j));
      });
      (axis == AxisId::X ? out(i, line) : out(line, i)) = scale * acc;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// quadrature

template <class T>
T integrate_quadrature(const std::vector<T>& f, double h) {
  if (f.size() < 2) throw Error(ErrorCode::GridTooSmall, "quadrature needs at least 2 nodes");
  T acc = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) acc += f[i];
  return h * acc;
}

/// Running trapezoid integral from the left edge; out[0] = 0.
template <class T>
std::vector<T> integrate_cumulative(const std::vector<T>& f, double h) {
  if (f.size() < 2) throw Error(ErrorCode::GridTooSmall, "quadrature needs at least 2 nodes");
  std::vector<T> out(f.size(), zero_like(f.front()));
  for (std::size_t i = 1; i < f.size(); ++i) out[i] = out[i - 1] + (0.5 * h) * (f[i - 1] + f[i]);
  return out;
}

/// (max - min) / max(1, |mean|) of a time series of conserved values.
inline double conservation_report(const std::vector<double>& values) {
  if (values.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 samples");
  double lo = values.front(), hi = values.front(), sum = 0.0;
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    sum += v;
  }
  const double mean = sum / static_cast<double>(values.size());
  return (hi - lo) / std::max(1.0, std::abs(mean));
}

// ---------------------------------------------------------------------------
// interpolation for half-step ODE stages

/// Value at the midpoint between samples i and i+1 by the cubic through four
/// neighbouring samples (one-sided at the ends).
template <class T>
T midpoint_cubic(const std::vector<T>& f, std::size_t i) {
  const std::size_t n = f.size();
  if (n < 4) return 0.5 * (f[i] + f[i + 1]);
  if (i == 0) return (5.0 * f[0] + 15.0 * f[1] - 5.0 * f[2] + f[3]) / 16.0;
  if (i + 2 >= n) return (5.0 * f[n - 1] + 15.0 * f[n - 2] - 5.0 * f[n - 3] + f[n - 4]) / 16.0;
  return (-f[i - 1] + 9.0 * f[i] + 9.0 * f[i + 1] - f[i + 2]) / 16.0;
}

// ---------------------------------------------------------------------------
// residual reports

struct ResidualReport {
  double maxAbs = 0.0;
  double l2 = 0.0;
  GridSpec grid;
  std::optional<double> convergenceOrder;
};

/// Norms of a residual over interior nodes: `margin` nodes are dropped on
/// every side of each axis that has more than one node.
template <class T>
ResidualReport report_of(const GridField<T>& r, int margin = 1) {
  ResidualReport rep;
  rep.grid = r.grid();
  const int mx = margin, mt = r.nt() > 1 ? margin : 0;
  const double cell = r.grid().h() * (r.nt() > 1 ? r.grid().k() : 1.0);
  double ss = 0.0;
  for (int it = mt; it < r.nt() - mt; ++it)
    for (int ix = mx; ix < r.nx() - mx; ++ix) {
      rep.maxAbs = std::max(rep.maxAbs, abs_of(r(ix, it)));
      ss += sq_of(r(ix, it));
    }
  rep.l2 = std::sqrt(ss * cell);
  return rep;
}

struct ConvergencePair {
  ResidualReport coarse;
  ResidualReport fine;
  double estimatedOrder = 0.0;
};

inline ConvergencePair make_convergence_pair(ResidualReport coarse, ResidualReport fine) {
  ConvergencePair p{std::move(coarse), std::move(fine), 0.0};
  p.estimatedOrder = std::log2(p.coarse.maxAbs / p.fine.maxAbs);
  p.fine.convergenceOrder = p.estimatedOrder;
  return p;
}

/// Evaluates `residual_on(grid)` on a grid and its 2:1 refinement.
template <class F>
ConvergencePair convergence(const GridSpec& grid, F&& residual_on, bool refine_t = true) {
  const GridSpec fine = refine_t ? grid.refined() : grid.refined_x();
  return make_convergence_pair(residual_on(grid), residual_on(fine));
}

}  // namespace zsakns
