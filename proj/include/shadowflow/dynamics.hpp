#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "shadowflow/errors.hpp"
#include "shadowflow/geometry.hpp"
#include "shadowflow/guiding_center.hpp"
#include "shadowflow/ode.hpp"
#include "shadowflow/state.hpp"

namespace shadowflow {

/// Solves xi'' + Gamma(xi', xi') = (1/mu) g^-1 omega xi' for xi''.
inline Vec extended_acceleration(const MetricField& m, const SymplecticStructure& s, double mu,
                                 const Vec& x, const Vec& v) {
  const double h = m.conformal_factor(x);
  Vec lorentz = s.apply_omega(v);
  if (!m.identity_gamma()) lorentz = m.gamma_inv(static_cast<int>(x.size())) * lorentz;
  return (h / mu) * lorentz - christoffel_contract(m, x, v);
}

inline Vec extended_rhs(const MetricField& m, const SymplecticStructure& s, double mu,
                        const ExtendedState& state) {
  if (!(mu > 0.0)) throw InvalidArgument("mu must be positive");
  if (state.x.n() != s.n()) throw InvalidArgument("state dimension does not match structure");
  return extended_acceleration(m, s, mu, state.x.coords(), state.v);
}

/// 1/2 mu g_ij v^i v^j, conserved along the extended flow.
inline double extended_energy(const MetricField& m, double mu, const ExtendedState& state) {
  const double h = m.conformal_factor(state.x.coords());
  const Vec& v = state.v;
  const double quad = m.identity_gamma() ? v.squaredNorm() : v.dot(m.gamma(state.x.dim()) * v);
  return 0.5 * mu * quad / h;
}

/// xi'^i = omega_bar^ji d_j h, i.e. (qdot, pdot) = (dh/dp, -dh/dq).
inline Vec hamiltonian_flow_rhs(const ScalarField& h, const SymplecticStructure& s,
                                const PhaseSpacePoint& x) {
  if (x.n() != s.n()) throw InvalidArgument("point dimension does not match structure");
  return s.omega_bar().transpose() * h.gradient(x.coords());
}

namespace detail {

/// Drives `stepper` through the sample times of `cfg`, calling `record(t, y)`
/// at each; numerical failures end the run and are recorded on `out`.
template <class Rhs, class Record>
void sample_run(const IntegratorConfig& cfg, Rhs&& rhs, Vec y, Record&& record, Trajectory& out) {
  ode::DormandPrince54 stepper(cfg.ode_options());
  double t = 0.0;
  record(t, y);
  const auto count = static_cast<long>(std::ceil(cfg.horizon / cfg.sample_interval - 1e-9));
  try {
    for (long k = 1; k <= count; ++k) {
      const double target = std::min(cfg.horizon, static_cast<double>(k) * cfg.sample_interval);
      if (!(target > t)) continue;
      stepper.advance(rhs, t, y, target);
      record(t, y);
    }
    out.termination = Termination::Completed;
  } catch (const MetricSingular& e) {
    out.termination = Termination::MetricSingular;
    out.message = e.what();
  } catch (const StepSizeUnderflow& e) {
    out.termination = Termination::StepSizeUnderflow;
    out.message = e.what();
  }
  out.stats = stepper.stats();
}

}  // namespace detail

/// Adaptive Dormand-Prince integration of the extended second-order system
/// reduced to first order in (xi, xi'). A trajectory that reaches the
/// metric floor is returned truncated with termination = MetricSingular.
inline Trajectory integrate_extended(const MetricField& m, const SymplecticStructure& s,
                                     const IntegratorConfig& cfg, const ExtendedState& init) {
  cfg.validate();
  if (init.x.n() != s.n()) throw InvalidArgument("initial state dimension does not match structure");
  const int d = init.x.dim();
  Trajectory tr;
  tr.config = cfg;

  auto rhs = [&](double, const Vec& y) -> Vec {
    Vec dy(2 * d);
    dy.head(d) = y.tail(d);
    dy.tail(d) = extended_acceleration(m, s, cfg.mu, y.head(d), y.tail(d));
    return dy;
  };
  Vec y(2 * d);
  y << init.x.coords(), init.v;
  // the initial point must itself be admissible
  (void)m.conformal_factor(init.x.coords());

  auto record = [&](double t, const Vec& yy) {
    ExtendedState st(PhaseSpacePoint(yy.head(d)), yy.tail(d));
    GuidingDecomposition gc = decompose(m, s, cfg.mu, st);
    tr.samples.push_back(Sample{t, std::move(st), std::move(gc)});
  };
  detail::sample_run(cfg, rhs, std::move(y), record, tr);
  return tr;
}

/// Reference Hamiltonian flow of rate * h. The samples carry X = xi, Pi = 0,
/// J = 0 and E_ext = h(xi). `rate` rescales time; the guiding center of the
/// extended system follows the flow of h(X) J, i.e. rate = J.
///
/// Runs at 1/100 of the configured tolerances (floored at 1e-14) since it
/// serves as the baseline the extended runs are measured against.
inline Trajectory integrate_reference(const ScalarField& h, const SymplecticStructure& s,
                                      const IntegratorConfig& cfg, const PhaseSpacePoint& x0,
                                      double rate = 1.0) {
  cfg.validate();
  if (x0.n() != s.n()) throw InvalidArgument("initial point dimension does not match structure");
  const int d = x0.dim();
  const Mat flow = s.omega_bar().transpose();
  Trajectory tr;
  tr.config = cfg;
  auto rhs = [&](double, const Vec& y) -> Vec { return rate * (flow * h.gradient(y)); };
  auto record = [&](double t, const Vec& y) {
    PhaseSpacePoint p(y);
    GuidingDecomposition gc;
    gc.Pi = Vec::Zero(d);
    gc.X = y;
    gc.J = 0.0;
    gc.E_ext = h.value(y);
    Vec v = rate * (flow * h.gradient(y));
    tr.samples.push_back(Sample{t, ExtendedState(std::move(p), std::move(v)), std::move(gc)});
  };
  IntegratorConfig tight = cfg;
  tight.rel_tol = std::max(cfg.rel_tol * 1e-2, 1e-14);
  tight.abs_tol = std::max(cfg.abs_tol * 1e-2, 1e-16);
  detail::sample_run(tight, rhs, x0.coords(), record, tr);
  return tr;
}

}  // namespace shadowflow
