#pragma once

// Index conventions (frozen throughout the library):
//   xi = (q^1..q^n, p_1..p_n)
//   omega_ij    = [[0, -I], [I, 0]]
//   omega_bar^ij satisfies omega_ik omega_bar^jk = delta_i^j, and in canonical
//               coordinates omega_bar == omega numerically
//   {xi^i, xi^j} = omega_bar^ji, so qdot = dh/dp, pdot = -dh/dq
//   omega_ij = d_i theta_j - d_j theta_i for the canonical one-form theta.

#include <cmath>
#include <string>
#include <vector>

#include "shadowflow/errors.hpp"
#include "shadowflow/linalg.hpp"
#include "shadowflow/scalar_field.hpp"

namespace shadowflow {

inline constexpr double kDefaultHMin = 1e-9;

/// A point of R^(2n) in canonical coordinates.
class PhaseSpacePoint {
 public:
  explicit PhaseSpacePoint(Vec coords) : coords_(std::move(coords)) {
    if (coords_.size() == 0 || coords_.size() % 2 != 0)
      throw InvalidArgument("phase-space point needs 2n coordinates, got " +
                            std::to_string(coords_.size()));
    if (!coords_.allFinite()) throw InvalidArgument("phase-space point has non-finite entries");
  }
  PhaseSpacePoint(std::initializer_list<double> c)
      : PhaseSpacePoint(Eigen::Map<const Vec>(c.begin(), static_cast<Eigen::Index>(c.size()))) {}

  int n() const noexcept { return static_cast<int>(coords_.size() / 2); }
  int dim() const noexcept { return static_cast<int>(coords_.size()); }
  const Vec& coords() const noexcept { return coords_; }
  double q(int mu) const { return coords_(mu); }
  double p(int mu) const { return coords_(n() + mu); }
  double operator[](int i) const { return coords_(i); }

 private:
  Vec coords_;
};

class SymplecticStructure {
 public:
  explicit SymplecticStructure(int n) : n_(n) {
    if (n < 1) throw InvalidArgument("symplectic structure needs n >= 1");
  }
  int n() const noexcept { return n_; }
  int dim() const noexcept { return 2 * n_; }

  Mat omega() const {
    Mat w = Mat::Zero(dim(), dim());
    for (int mu = 0; mu < n_; ++mu) {
      w(mu, n_ + mu) = -1.0;
      w(n_ + mu, mu) = 1.0;
    }
    return w;
  }
  /// Equal to omega() in canonical coordinates.
  Mat omega_bar() const { return omega(); }

  /// omega_ij v^j without forming the matrix.
  Vec apply_omega(const Vec& v) const {
    Vec out(dim());
    out.head(n_) = -v.tail(n_);
    out.tail(n_) = v.head(n_);
    return out;
  }

 private:
  int n_;
};

enum class Gauge { Standard, Symmetric };

/// theta with d_i theta_j - d_j theta_i = omega_ij.
/// Standard: theta = (p, 0). Symmetric: theta_i = -1/2 omega_ij xi^j.
inline Vec canonical_one_form_at(const SymplecticStructure& s, const PhaseSpacePoint& x,
                                 Gauge gauge) {
  if (x.n() != s.n()) throw InvalidArgument("dimension mismatch between point and structure");
  const int n = s.n();
  Vec theta = Vec::Zero(2 * n);
  if (gauge == Gauge::Standard) {
    theta.head(n) = x.coords().tail(n);
  } else {
    theta = -0.5 * s.apply_omega(x.coords());
  }
  return theta;
}

struct MetricEval {
  Mat g;
  Mat g_inv;
  double det = 0.0;
  double h = 0.0;
  Vec grad_h;
};

/// g_ij = gamma_ij / h with constant unit-determinant gamma, so det g = h^(-2n).
class MetricField {
 public:
  explicit MetricField(ScalarField h, double h_min = kDefaultHMin)
      : h_(std::move(h)), gamma_(), h_min_(h_min) {}

  MetricField(ScalarField h, Mat gamma, double h_min = kDefaultHMin)
      : h_(std::move(h)), gamma_(std::move(gamma)), h_min_(h_min) {
    if (gamma_.rows() != gamma_.cols() || gamma_.rows() % 2 != 0)
      throw InvalidArgument("gamma must be a square 2n x 2n matrix");
    if ((gamma_ - gamma_.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw InvalidArgument("gamma must be symmetric");
    if (std::abs(gamma_.determinant() - 1.0) > 1e-12)
      throw InvalidArgument("gamma must have unit determinant");
    Eigen::SelfAdjointEigenSolver<Mat> es(gamma_);
    if (es.eigenvalues().minCoeff() <= 0.0) throw InvalidArgument("gamma must be positive definite");
    gamma_inv_ = gamma_.inverse();
    if (h_min_ < 0.0) throw InvalidArgument("h_min must be nonnegative");
  }

  const ScalarField& h() const noexcept { return h_; }
  double h_min() const noexcept { return h_min_; }
  bool identity_gamma() const noexcept { return gamma_.size() == 0; }

  Mat gamma(int dim) const { return identity_gamma() ? Mat::Identity(dim, dim) : gamma_; }
  Mat gamma_inv(int dim) const { return identity_gamma() ? Mat::Identity(dim, dim) : gamma_inv_; }

  /// h(x), throwing MetricSingular at or below the floor.
  double conformal_factor(const Vec& x) const {
    check_dim(x);
    const double hv = h_.value(x);
    if (!(hv > h_min_))
      throw MetricSingular("h = " + detail::short_number(hv) + " <= h_min = " + detail::short_number(h_min_));
    return hv;
  }

 private:
  void check_dim(const Vec& x) const {
    if (!identity_gamma() && x.size() != gamma_.rows())
      throw InvalidArgument("point dimension does not match gamma");
  }

  ScalarField h_;
  Mat gamma_;
  Mat gamma_inv_;
  double h_min_;
};

inline MetricEval metric_at(const MetricField& m, const PhaseSpacePoint& x) {
  const int d = x.dim();
  MetricEval e;
  e.h = m.conformal_factor(x.coords());
  e.g = m.gamma(d) / e.h;
  e.g_inv = m.gamma_inv(d) * e.h;
  e.det = std::pow(e.h, -d);  // det gamma = 1
  e.grad_h = m.h().gradient(x.coords());
  return e;
}

/// Gamma^k_ij at one point, stored k-major.
class ChristoffelTensor {
 public:
  explicit ChristoffelTensor(int dim) : dim_(dim), values_(static_cast<size_t>(dim * dim * dim), 0.0) {}
  int dim() const noexcept { return dim_; }
  double& operator()(int k, int i, int j) { return values_[index(k, i, j)]; }
  double operator()(int k, int i, int j) const { return values_[index(k, i, j)]; }

  /// Gamma^k_ij v^i v^j
  Vec contract(const Vec& v) const {
    Vec out = Vec::Zero(dim_);
    for (int k = 0; k < dim_; ++k)
      for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) out(k) += (*this)(k, i, j) * v(i) * v(j);
    return out;
  }

 private:
  size_t index(int k, int i, int j) const {
    return static_cast<size_t>((k * dim_ + i) * dim_ + j);
  }
  int dim_;
  std::vector<double> values_;
};

/// Analytic chain rule through g = gamma / h with constant gamma:
///   d_k g_ij = -gamma_ij d_k h / h^2
///   Gamma^k_ij = -(delta^k_j d_i h + delta^k_i d_j h - gammainv^kl gamma_ij d_l h) / (2h)
inline ChristoffelTensor christoffel_at(const MetricField& m, const PhaseSpacePoint& x) {
  const int d = x.dim();
  const double h = m.conformal_factor(x.coords());
  const Vec dh = m.h().gradient(x.coords());
  const Mat gam = m.gamma(d);
  const Vec raised = m.gamma_inv(d) * dh;
  ChristoffelTensor t(d);
  const double c = -0.5 / h;
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        double v = -raised(k) * gam(i, j);
        if (k == j) v += dh(i);
        if (k == i) v += dh(j);
        t(k, i, j) = c * v;
        t(k, j, i) = c * v;
      }
  return t;
}

/// Gamma^k_ij v^i v^j without building the tensor.
inline Vec christoffel_contract(const MetricField& m, const Vec& x, const Vec& v) {
  const int d = static_cast<int>(x.size());
  const double h = m.conformal_factor(x);
  const Vec dh = m.h().gradient(x);
  if (m.identity_gamma()) return (-0.5 / h) * (2.0 * dh.dot(v) * v - v.squaredNorm() * dh);
  const Vec raised = m.gamma_inv(d) * dh;
  return (-0.5 / h) * (2.0 * dh.dot(v) * v - v.dot(m.gamma(d) * v) * raised);
}

struct ScalarInvariants {
  double grad_norm_sq_over_h_sq = 0.0;
  double laplacian_over_h = 0.0;
};

/// |grad h|^2 / h^2 and (Laplacian h) / h in the flat Cartesian background.
inline ScalarInvariants scalar_invariants_at(const ScalarField& h, const PhaseSpacePoint& x,
                                             double h_min = kDefaultHMin) {
  const double hv = h.value(x.coords());
  if (!(hv > h_min)) throw MetricSingular("h = " + detail::short_number(hv) + " <= h_min = " + detail::short_number(h_min));
  const Vec g = h.gradient(x.coords());
  return {g.squaredNorm() / (hv * hv), h.laplacian(x.coords()) / hv};
}

/// sqrt(omega_ij omega^ij / 2) with indices raised by g. One degree of
/// freedom only; equals h(x) for any unit-determinant gamma.
inline double symplectic_norm_at(const MetricField& m, const SymplecticStructure& s,
                                 const PhaseSpacePoint& x) {
  if (s.n() != 1 || x.n() != 1)
    throw UnsupportedDimension("symplectic norm is defined here for n = 1 only");
  const MetricEval e = metric_at(m, x);
  const Mat w = s.omega();
  const Mat raised = e.g_inv * w * e.g_inv;  // omega^ij = g^ik g^jl omega_kl
  return std::sqrt(0.5 * w.cwiseProduct(raised).sum());
}

}  // namespace shadowflow
