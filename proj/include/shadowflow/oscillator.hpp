#pragma once

// Closed-form ground truth for the extended harmonic oscillator
// h = (q^2 + p^2)/2 with metric g = 2 delta / (q^2 + p^2).
//
// Cylinder coordinates: q = mu^(1/2) e^(-rho) sin(phi), p = mu^(1/2) e^(-rho) cos(phi).
// Integrals of motion: mu phidot + r^2/4 = l, mu (rdot^2/r^2 + phidot^2) = E.
// Regime parameter: P = mu E / l^2.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "shadowflow/errors.hpp"
#include "shadowflow/geometry.hpp"
#include "shadowflow/state.hpp"

namespace shadowflow::oscillator {

enum class Regime { UnboundExponential, UnboundPowerLaw, Bound };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::UnboundExponential: return "Unbound_Exponential";
    case Regime::UnboundPowerLaw: return "Unbound_PowerLaw";
    case Regime::Bound: return "Bound";
  }
  return "unknown";
}

/// Which prefactor the P > 1 branch carries. `Printed` is 2l (P - 1), the
/// reference form; `Rederived` is 8l (P - 1), the value obtained by integrating
/// the quadrature, which also joins continuously onto the 8l / (1 + ...)
/// power law as P -> 1. The two other branches are identical in both forms.
enum class Form { Printed, Rederived };

inline constexpr double kClassifyTolerance = 1e-12;
inline constexpr double kPowerLawBranchTolerance = 1e-9;

struct Params {
  double mu = 1.0;
  double E = 1.0;
  double l = 0.25;
  double t0 = 0.0;
  int sign = 1;  // the +/- of the closed-form branches

  double p_param() const { return mu * E / (l * l); }

  void validate() const {
    if (!(mu > 0.0)) throw InvalidArgument("mu must be positive");
    if (!(E > 0.0)) throw InvalidArgument("E must be positive");
    if (l == 0.0 || !std::isfinite(l)) throw InvalidArgument("l must be finite and nonzero");
    if (sign != 1 && sign != -1) throw InvalidArgument("branch sign must be +1 or -1");
  }

  /// mu = P l^2 / E, the inverse of p_param().
  static Params from_p(double p, double E = 1.0, double l = 0.25) {
    Params out;
    out.E = E;
    out.l = l;
    out.mu = p * l * l / E;
    return out;
  }
};

inline Regime classify(const Params& params) {
  params.validate();
  const double p = params.p_param();
  if (std::abs(p - 1.0) <= kClassifyTolerance) return Regime::UnboundPowerLaw;
  return p > 1.0 ? Regime::UnboundExponential : Regime::Bound;
}

struct Integrals {
  double l = 0.0;
  double E = 0.0;
};

/// (l, E) from Cartesian position and velocity. phi = atan2(q, p), so
/// r^2 phidot = p qdot - q pdot.
inline Integrals integrals_of_motion(double mu, const ExtendedState& state) {
  if (state.x.n() != 1) throw UnsupportedDimension("oscillator integrals need n = 1");
  if (!(mu > 0.0)) throw InvalidArgument("mu must be positive");
  const double q = state.x.q(0), p = state.x.p(0);
  const double vq = state.v(0), vp = state.v(1);
  const double r2 = q * q + p * p;
  if (!(r2 > 0.0)) throw OriginSingular("integrals of motion undefined at the origin");
  const double phidot = (p * vq - q * vp) / r2;
  const double rdot_over_r = (q * vq + p * vp) / r2;
  return {mu * phidot + 0.25 * r2, mu * (rdot_over_r * rdot_over_r + phidot * phidot)};
}

struct Cylindrical {
  double rho = 0.0;
  double phi = 0.0;
};

inline Cylindrical cylindrical_map(double mu, const PhaseSpacePoint& x) {
  if (x.n() != 1) throw UnsupportedDimension("cylindrical map needs n = 1");
  if (!(mu > 0.0)) throw InvalidArgument("mu must be positive");
  const double r2 = x.q(0) * x.q(0) + x.p(0) * x.p(0);
  if (!(r2 > 0.0)) throw OriginSingular("cylindrical coordinates undefined at the origin");
  return {-0.5 * std::log(r2 / mu), std::atan2(x.q(0), x.p(0))};
}

inline PhaseSpacePoint cylindrical_inverse(double mu, const Cylindrical& c) {
  if (!(mu > 0.0)) throw InvalidArgument("mu must be positive");
  const double r = std::sqrt(mu) * std::exp(-c.rho);
  return PhaseSpacePoint{r * std::sin(c.phi), r * std::cos(c.phi)};
}

namespace detail {
inline void require_positive_l(const Params& params) {
  if (!(params.l > 0.0))
    throw DomainError("closed-form branches are written for l > 0, got l = " + std::to_string(params.l));
}
}  // namespace detail

/// r^2(t) on an explicitly chosen branch. The power-law branch is accepted
/// only within 1e-9 of P = 1; the other two must match the sign of P - 1.
inline double exact_r_squared(const Params& params, double t, Regime branch, Form form = Form::Printed) {
  params.validate();
  detail::require_positive_l(params);
  const double p = params.p_param();
  const double l = params.l, mu = params.mu, tau = t - params.t0, s = params.sign;
  switch (branch) {
    case Regime::UnboundPowerLaw: {
      if (std::abs(p - 1.0) > kPowerLawBranchTolerance)
        throw BranchMismatch("power-law branch requested at P = " + std::to_string(p));
      return 8.0 * l / (1.0 + 4.0 * l * l * tau * tau / (mu * mu));
    }
    case Regime::UnboundExponential: {
      if (!(p > 1.0)) throw BranchMismatch("exponential branch requested at P = " + std::to_string(p));
      const double a = 2.0 * l * std::sqrt(p - 1.0) * tau / mu;
      const double coef = form == Form::Printed ? 2.0 : 8.0;
      return coef * l * (p - 1.0) / (std::exp(s * a) + p * std::exp(-s * a) - 2.0);
    }
    case Regime::Bound: {
      if (!(p < 1.0)) throw BranchMismatch("bound branch requested at P = " + std::to_string(p));
      const double w = 2.0 * l * std::sqrt(1.0 - p) * tau / mu;
      return 4.0 * l * (1.0 - p) / (1.0 + s * std::sqrt(p) * std::sin(w));
    }
  }
  throw InvalidArgument("unknown branch");
}

/// Branch chosen from P, with the power law used within 1e-9 of P = 1.
inline Regime branch_for(const Params& params) {
  const double p = params.p_param();
  if (std::abs(p - 1.0) <= kPowerLawBranchTolerance) return Regime::UnboundPowerLaw;
  return p > 1.0 ? Regime::UnboundExponential : Regime::Bound;
}

inline double exact_r_squared(const Params& params, double t, Form form = Form::Printed) {
  params.validate();
  return exact_r_squared(params, t, branch_for(params), form);
}

/// Period of the bound-state oscillation of r^2: pi mu / (l sqrt(1 - P)).
inline double radial_period(const Params& params) {
  params.validate();
  detail::require_positive_l(params);
  const double p = params.p_param();
  if (!(p < 1.0)) throw BranchMismatch("radial period exists only for P < 1");
  return std::numbers::pi * params.mu / (params.l * std::sqrt(1.0 - p));
}

/// d log r / dt as t -> +infinity on the exponential branch (sign = +1).
inline double asymptotic_log_rate(const Params& params) {
  params.validate();
  const double p = params.p_param();
  if (!(p > 1.0)) throw BranchMismatch("asymptotic exponential rate exists only for P > 1");
  return -params.l * std::sqrt(p - 1.0) / params.mu;
}

/// Fixes t0 (with sign = +1) so that the closed form passes through the
/// given state at t = 0: r^2(0) matches and d r^2/dt has the same sign.
inline Params phase_from_state(double mu, const ExtendedState& state, Form form = Form::Printed) {
  const Integrals in = integrals_of_motion(mu, state);
  Params out;
  out.mu = mu;
  out.E = in.E;
  out.l = in.l;
  out.sign = 1;
  out.validate();
  detail::require_positive_l(out);
  const double q = state.x.q(0), pp = state.x.p(0);
  const double r2 = q * q + pp * pp;
  const double dr2 = 2.0 * (q * state.v(0) + pp * state.v(1));
  const double p = out.p_param();
  const double l = out.l;

  double tau0 = 0.0;  // value of t - t0 at t = 0
  switch (branch_for(out)) {
    case Regime::Bound: {
      const double w = 2.0 * l * std::sqrt(1.0 - p) / mu;
      const double s = std::clamp((4.0 * l * (1.0 - p) / r2 - 1.0) / std::sqrt(p), -1.0, 1.0);
      // d r^2/d tau has the sign of -cos(w tau)
      const double theta = dr2 <= 0.0 ? std::asin(s) : std::numbers::pi - std::asin(s);
      tau0 = theta / w;
      break;
    }
    case Regime::UnboundExponential: {
      const double a = 2.0 * l * std::sqrt(p - 1.0) / mu;
      const double coef = form == Form::Printed ? 2.0 : 8.0;
      const double k = coef * l * (p - 1.0) / r2 + 2.0;
      const double disc = std::sqrt(std::max(0.0, k * k - 4.0 * p));
      // r^2 decreases iff e^(a tau) > sqrt(P): the larger root
      const double u = dr2 <= 0.0 ? 0.5 * (k + disc) : 0.5 * (k - disc);
      tau0 = std::log(u) / a;
      break;
    }
    case Regime::UnboundPowerLaw: {
      const double mag = std::sqrt(std::max(0.0, 8.0 * l / r2 - 1.0)) * mu / (2.0 * l);
      tau0 = dr2 <= 0.0 ? mag : -mag;
      break;
    }
  }
  out.t0 = -tau0;
  return out;
}

/// Extended-system initial state at x0 realising the integrals (l, E);
/// `inward` picks rdot < 0.
inline ExtendedState initial_state(double mu, double E, double l, const PhaseSpacePoint& x0,
                                   bool inward = true) {
  if (x0.n() != 1) throw UnsupportedDimension("oscillator initial state needs n = 1");
  if (!(mu > 0.0) || !(E > 0.0)) throw InvalidArgument("mu and E must be positive");
  const double q = x0.q(0), p = x0.p(0);
  const double r2 = q * q + p * p;
  if (!(r2 > 0.0)) throw OriginSingular("cannot start at the origin");
  const double r = std::sqrt(r2);
  const double phidot = (l - 0.25 * r2) / mu;
  const double radial = E / mu - phidot * phidot;
  if (radial < 0.0) throw DomainError("(l, E) not reachable from this starting point");
  const double rdot = (inward ? -1.0 : 1.0) * r * std::sqrt(radial);
  const double sphi = q / r, cphi = p / r;
  Vec v(2);
  v << rdot * sphi + r * cphi * phidot, rdot * cphi - r * sphi * phidot;
  return ExtendedState(x0, std::move(v));
}

inline double zeta_of_r_squared(const Params& params, double r2) { return r2 / (4.0 * params.l) - 1.0; }

/// (mu / 2l) * integral_{zeta0}^{zeta} dz / ((z + 1) sqrt(P - z^2)), the
/// elapsed time along the '+' branch. Computed by Gauss-Kronrod in theta
/// with z = sqrt(P) sin(theta), which removes the turning-point square-root
/// singularities.
inline double quadrature_oracle(const Params& params, double zeta0, double zeta) {
  params.validate();
  detail::require_positive_l(params);
  const double p = params.p_param();
  const double root = std::sqrt(p);
  for (double z : {zeta0, zeta}) {
    if (!(std::abs(z) <= root * (1.0 + 1e-15)))
      throw DomainError("zeta = " + std::to_string(z) + " outside [-sqrt(P), sqrt(P)]");
    if (!(z > -1.0)) throw DomainError("zeta = " + std::to_string(z) + " at or below the origin value -1");
  }
  if (zeta0 == zeta) return 0.0;
  const double a = std::asin(std::clamp(zeta0 / root, -1.0, 1.0));
  const double b = std::asin(std::clamp(zeta / root, -1.0, 1.0));
  auto f = [root](double th) { return 1.0 / (1.0 + root * std::sin(th)); };
  // Composite Gauss-Kronrod on equal panels, doubled until the summed error
  // estimate meets 1e-10. Boost's recursive driver is avoided because its
  // estimate accumulates roundoff with depth. Near the pole at zeta = -1 the
  // per-panel estimate has a roundoff floor of its own, so two successive
  // doublings agreeing far below the target also count as converged.
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  constexpr double tol = 1e-10;
  double integral = 0.0, previous = 0.0, err = 0.0;
  bool converged = false;
  for (int panels = 1; panels <= 4096 && !converged; panels *= 2) {
    previous = integral;
    integral = 0.0;
    err = 0.0;
    for (int k = 0; k < panels; ++k) {
      const double lo = a + (b - a) * k / panels, hi = a + (b - a) * (k + 1) / panels;
      double e = 0.0;
      integral += GK::integrate(f, lo, hi, 0, 0.0, &e);
      err += e;
    }
    const double scale = std::max(1.0, std::abs(integral));
    converged = err <= tol * scale ||
                (panels > 1 && std::abs(integral - previous) <= 1e-3 * tol * scale && err <= 100 * tol * scale);
  }
  if (!converged)
    throw DomainError("quadrature did not reach tolerance (error estimate " + std::to_string(err) + ")");
  return params.mu / (2.0 * params.l) * integral;
}

}  // namespace shadowflow::oscillator
