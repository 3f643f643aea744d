#pragma once

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "shadowflow/errors.hpp"
#include "shadowflow/linalg.hpp"

namespace shadowflow {

/// h = 1/2 sum(q^2 + p^2)
struct Harmonic {};

/// h = 1/2 sum(q^2 + p^2) + c. With c > 0 the origin becomes an ordinary
/// point of the conformal metric.
struct ShiftedHarmonic {
  double c = 1.0;
};

/// h = c exp(|xi|^2 / 2): the shifted harmonic oscillator written in
/// Cartesian coordinates of its flat background, where c exp(r^2/2) d(r^2/2)
/// is the pulled-back area form.
struct ExponentialRadial {
  double c = 1.0;
};

/// h = b, a homogeneous "field".
struct Constant {
  double value = 1.0;
};

/// h = sum_mu [p_mu^2 / 2 + (1 - cos q^mu)] + offset; offset > 0 keeps h
/// strictly positive at the stable equilibrium.
struct PendulumOffset {
  double offset = 1.0;
};

struct Monomial {
  std::vector<int> exponents;  // one per phase-space coordinate
  double coefficient = 0.0;
};

/// Sum of monomials over the 2n canonical coordinates.
struct Polynomial {
  std::vector<Monomial> terms;
};

struct AnalyticDerivatives {};

/// Fourth-order central differences, step = scale * max(1, |x_i|).
struct FiniteDifferenceDerivatives {
  double scale = 1e-4;
};

using DerivativeMode = std::variant<AnalyticDerivatives, FiniteDifferenceDerivatives>;

/// The Hamiltonian h(xi) with value, gradient, Hessian and Laplacian.
///
/// All kinds work for any even dimension except Polynomial, whose monomials
/// fix the number of coordinates.
class ScalarField {
 public:
  using Kind =
      std::variant<Harmonic, ShiftedHarmonic, ExponentialRadial, Constant, PendulumOffset, Polynomial>;

  ScalarField(Kind kind, DerivativeMode mode) : kind_(std::move(kind)), mode_(mode) {
    if (const auto* poly = std::get_if<Polynomial>(&kind_)) {
      if (poly->terms.empty()) throw InvalidArgument("polynomial field has no terms");
      const auto vars = poly->terms.front().exponents.size();
      if (vars == 0 || vars % 2 != 0)
        throw InvalidArgument("polynomial exponent tuples must have even length 2n");
      for (const auto& t : poly->terms) {
        if (t.exponents.size() != vars)
          throw InvalidArgument("polynomial exponent tuples differ in length");
        for (int e : t.exponents)
          if (e < 0) throw InvalidArgument("negative polynomial exponent");
      }
    }
    if (const auto* fd = std::get_if<FiniteDifferenceDerivatives>(&mode_)) {
      if (!(fd->scale > 0.0)) throw InvalidArgument("finite-difference step must be positive");
    }
  }

  /// Built-ins default to analytic derivatives, polynomial tables to
  /// finite differences.
  explicit ScalarField(Kind kind)
      : ScalarField(kind, std::holds_alternative<Polynomial>(kind)
                              ? DerivativeMode{FiniteDifferenceDerivatives{}}
                              : DerivativeMode{AnalyticDerivatives{}}) {}

  static ScalarField harmonic() { return ScalarField(Harmonic{}); }
  static ScalarField shifted_harmonic(double c) { return ScalarField(ShiftedHarmonic{c}); }
  static ScalarField exponential_radial(double c) { return ScalarField(ExponentialRadial{c}); }
  static ScalarField constant(double b) { return ScalarField(Constant{b}); }
  static ScalarField pendulum_offset(double offset) { return ScalarField(PendulumOffset{offset}); }
  static ScalarField polynomial(std::vector<Monomial> terms) {
    return ScalarField(Polynomial{std::move(terms)});
  }

  const Kind& kind() const noexcept { return kind_; }
  const DerivativeMode& mode() const noexcept { return mode_; }
  bool analytic() const noexcept { return std::holds_alternative<AnalyticDerivatives>(mode_); }

  /// Same kind with a different derivative mode.
  ScalarField with_mode(DerivativeMode mode) const { return ScalarField(kind_, mode); }

  /// Number of coordinates this field is tied to, or 0 if it accepts any even dimension.
  int fixed_dimension() const noexcept {
    if (const auto* poly = std::get_if<Polynomial>(&kind_))
      return static_cast<int>(poly->terms.front().exponents.size());
    return 0;
  }

  std::string name() const {
    struct {
      std::string operator()(const Harmonic&) const { return "harmonic"; }
      std::string operator()(const ShiftedHarmonic&) const { return "shifted-harmonic"; }
      std::string operator()(const ExponentialRadial&) const { return "exponential-radial"; }
      std::string operator()(const Constant&) const { return "constant"; }
      std::string operator()(const PendulumOffset&) const { return "pendulum-offset"; }
      std::string operator()(const Polynomial&) const { return "polynomial"; }
    } visitor;
    return std::visit(visitor, kind_);
  }

  double value(const Vec& x) const {
    check_dimension(x);
    return std::visit([&](const auto& k) { return eval(k, x); }, kind_);
  }

  Vec gradient(const Vec& x) const {
    check_dimension(x);
    if (analytic()) return std::visit([&](const auto& k) { return grad(k, x); }, kind_);
    return fd_gradient(x);
  }

  Mat hessian(const Vec& x) const {
    check_dimension(x);
    if (analytic()) return std::visit([&](const auto& k) { return hess(k, x); }, kind_);
    return fd_hessian(x);
  }

  double laplacian(const Vec& x) const { return hessian(x).trace(); }

 private:
  void check_dimension(const Vec& x) const {
    const int fixed = fixed_dimension();
    if (x.size() == 0 || x.size() % 2 != 0)
      throw InvalidArgument("phase-space point must have even dimension");
    if (fixed != 0 && x.size() != fixed)
      throw InvalidArgument("polynomial field expects " + std::to_string(fixed) +
                            " coordinates, got " + std::to_string(x.size()));
  }

  static double eval(const Harmonic&, const Vec& x) { return 0.5 * x.squaredNorm(); }
  static Vec grad(const Harmonic&, const Vec& x) { return x; }
  static Mat hess(const Harmonic&, const Vec& x) { return Mat::Identity(x.size(), x.size()); }

  static double eval(const ShiftedHarmonic& k, const Vec& x) { return 0.5 * x.squaredNorm() + k.c; }
  static Vec grad(const ShiftedHarmonic&, const Vec& x) { return x; }
  static Mat hess(const ShiftedHarmonic&, const Vec& x) {
    return Mat::Identity(x.size(), x.size());
  }

  static double eval(const ExponentialRadial& k, const Vec& x) {
    return k.c * std::exp(0.5 * x.squaredNorm());
  }
  static Vec grad(const ExponentialRadial& k, const Vec& x) { return eval(k, x) * x; }
  static Mat hess(const ExponentialRadial& k, const Vec& x) {
    return eval(k, x) * (Mat::Identity(x.size(), x.size()) + x * x.transpose());
  }

  static double eval(const Constant& k, const Vec&) { return k.value; }
  static Vec grad(const Constant&, const Vec& x) { return Vec::Zero(x.size()); }
  static Mat hess(const Constant&, const Vec& x) { return Mat::Zero(x.size(), x.size()); }

  static double eval(const PendulumOffset& k, const Vec& x) {
    const auto n = x.size() / 2;
    double h = k.offset;
    for (Eigen::Index i = 0; i < n; ++i) h += 0.5 * x(n + i) * x(n + i) + (1.0 - std::cos(x(i)));
    return h;
  }
  static Vec grad(const PendulumOffset&, const Vec& x) {
    const auto n = x.size() / 2;
    Vec g(x.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      g(i) = std::sin(x(i));
      g(n + i) = x(n + i);
    }
    return g;
  }
  static Mat hess(const PendulumOffset&, const Vec& x) {
    const auto n = x.size() / 2;
    Mat h = Mat::Zero(x.size(), x.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      h(i, i) = std::cos(x(i));
      h(n + i, n + i) = 1.0;
    }
    return h;
  }

  static double monomial(const Monomial& m, const Vec& x, int d1 = -1, int d2 = -1) {
    double v = m.coefficient;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      int e = m.exponents[i];
      for (int d : {d1, d2}) {
        if (d == i) {
          if (e == 0) return 0.0;
          v *= e;
          --e;
        }
      }
      v *= std::pow(x(i), e);
    }
    return v;
  }
  static double eval(const Polynomial& k, const Vec& x) {
    double h = 0.0;
    for (const auto& t : k.terms) h += monomial(t, x);
    return h;
  }
  static Vec grad(const Polynomial& k, const Vec& x) {
    Vec g = Vec::Zero(x.size());
    for (const auto& t : k.terms)
      for (int i = 0; i < x.size(); ++i) g(i) += monomial(t, x, i);
    return g;
  }
  static Mat hess(const Polynomial& k, const Vec& x) {
    Mat h = Mat::Zero(x.size(), x.size());
    for (const auto& t : k.terms)
      for (int i = 0; i < x.size(); ++i)
        for (int j = 0; j < x.size(); ++j) h(i, j) += monomial(t, x, i, j);
    return h;
  }

  double step_for(double xi) const {
    return std::get<FiniteDifferenceDerivatives>(mode_).scale * std::max(1.0, std::abs(xi));
  }

  double raw(const Vec& x) const {
    return std::visit([&](const auto& k) { return eval(k, x); }, kind_);
  }

  Vec fd_gradient(const Vec& x) const {
    Vec g(x.size());
    Vec y = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double s = step_for(x(i));
      auto at = [&](double off) {
        y(i) = x(i) + off;
        return raw(y);
      };
      g(i) = (-at(2 * s) + 8 * at(s) - 8 * at(-s) + at(-2 * s)) / (12 * s);
      y(i) = x(i);
    }
    return g;
  }

  Mat fd_hessian(const Vec& x) const {
    const auto d = x.size();
    Mat h(d, d);
    Vec y = x;
    const double f0 = raw(x);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double s = step_for(x(i));
      auto at = [&](double off) {
        y(i) = x(i) + off;
        return raw(y);
      };
      h(i, i) = (-at(2 * s) + 16 * at(s) - 30 * f0 + 16 * at(-s) - at(-2 * s)) / (12 * s * s);
      y(i) = x(i);
    }
    // mixed partials: fourth-order central difference of the gradient
    for (Eigen::Index i = 0; i < d; ++i) {
      const double s = step_for(x(i));
      auto grad_at = [&](double off) {
        y(i) = x(i) + off;
        Vec g = fd_gradient(y);
        y(i) = x(i);
        return g;
      };
      const Vec col = (-grad_at(2 * s) + 8 * grad_at(s) - 8 * grad_at(-s) + grad_at(-2 * s)) / (12 * s);
      for (Eigen::Index j = 0; j < d; ++j)
        if (j != i) h(j, i) = col(j);
    }
    return 0.5 * (h + h.transpose());
  }

  Kind kind_;
  DerivativeMode mode_;
};

}  // namespace shadowflow
