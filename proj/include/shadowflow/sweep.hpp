#pragma once

// mu-sweep of the harmonic oscillator: how fast the extended system's
// guiding center approaches the Hamiltonian flow as mu -> 0.

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "shadowflow/dynamics.hpp"
#include "shadowflow/guiding_center.hpp"
#include "shadowflow/oscillator.hpp"
#include "shadowflow/parallel.hpp"

namespace shadowflow {

struct SweepSpec {
  std::vector<double> mu{0.1, 0.05, 0.02, 0.01, 0.005, 0.002};
  double E = 1.0;
  double l = 0.25;
  Vec start = (Vec(2) << 1.0, 0.0).finished();
  double horizon = std::numbers::pi;
  // 1e-10 lets the smallest mu (2e4 steps) drift the energy by 2.5e-8
  double rel_tol = 1e-11;
  double abs_tol = 1e-12;
  double samples_per_gyration = 16.0;

  void validate() const {
    if (mu.empty()) throw InvalidArgument("sweep needs at least one mu value");
    for (std::size_t i = 0; i < mu.size(); ++i) {
      if (!(mu[i] > 0.0)) throw InvalidArgument("sweep mu values must be positive");
      if (i > 0 && !(mu[i] < mu[i - 1])) throw InvalidArgument("sweep mu values must be strictly decreasing");
    }
    if (!(E > 0.0)) throw InvalidArgument("E must be positive");
    if (!(l > 0.0)) throw InvalidArgument("l must be positive");
    if (start.size() != 2) throw InvalidArgument("sweep start must be a point of the phase plane");
    if (!(horizon > 0.0)) throw InvalidArgument("horizon must be positive");
    if (!(samples_per_gyration >= 1.0)) throw InvalidArgument("samples_per_gyration must be >= 1");
  }
};

struct SweepPoint {
  double mu = 0.0;
  double p_param = 0.0;
  oscillator::Regime regime = oscillator::Regime::Bound;
  Termination termination = Termination::Completed;
  double t_end = 0.0;
  double sample_interval = 0.0;
  double sup_X_error = 0.0;
  double sup_xi_error = 0.0;
  double J_variation = 0.0;      // of the adiabatic action E_ext / h(X)
  double J_raw_variation = 0.0;  // of J = |Pi|^2 / 2
  double separation_residual = 0.0;  // max |E_ext / (h(X) J) - 1|
  double energy_drift = 0.0;
  double mean_step = 0.0;
  std::size_t accepted_steps = 0;
};

struct SlopeFit {
  bool ok = false;
  PowerLawFit fit;
  std::string error;
};

struct SweepReport {
  SweepSpec spec;
  std::vector<SweepPoint> points;
  std::map<std::string, SlopeFit> fits;             // over every mu
  std::map<std::string, SlopeFit> fits_bound_only;  // over the P < 1 points
};

inline const std::vector<std::string>& sweep_metric_names() {
  static const std::vector<std::string> names{"sup_X_error", "J_variation", "J_raw_variation",
                                              "separation_residual", "mean_step"};
  return names;
}

inline double sweep_metric(const SweepPoint& p, const std::string& name) {
  if (name == "sup_X_error") return p.sup_X_error;
  if (name == "J_variation") return p.J_variation;
  if (name == "J_raw_variation") return p.J_raw_variation;
  if (name == "separation_residual") return p.separation_residual;
  if (name == "mean_step") return p.mean_step;
  throw InvalidArgument("unknown sweep metric " + name);
}

/// One sweep point: the extended oscillator from `start` with integrals
/// (E, l), against the reference flow of h started at the initial guiding
/// center and run at rate E_ext / h(X(0)) (the flow of h(X) J).
inline SweepPoint sweep_point(const SweepSpec& spec, double mu) {
  const MetricField m(ScalarField::harmonic());
  const SymplecticStructure s(1);
  const PhaseSpacePoint x0(spec.start);
  const ExtendedState init = oscillator::initial_state(mu, spec.E, spec.l, x0);

  SweepPoint out;
  out.mu = mu;
  oscillator::Params prm;
  prm.mu = mu;
  prm.E = spec.E;
  prm.l = spec.l;
  out.p_param = prm.p_param();
  out.regime = oscillator::classify(prm);

  const double gyration = 2.0 * std::numbers::pi * mu / m.h().value(x0.coords());
  IntegratorConfig cfg;
  cfg.mu = mu;
  cfg.rel_tol = spec.rel_tol;
  cfg.abs_tol = spec.abs_tol;
  cfg.horizon = spec.horizon;
  cfg.sample_interval = std::min({0.05, gyration / spec.samples_per_gyration, spec.horizon});
  out.sample_interval = cfg.sample_interval;

  const Trajectory tr = integrate_extended(m, s, cfg, init);
  out.termination = tr.termination;
  out.t_end = tr.t_end();
  out.mean_step = tr.stats.mean_free_step();
  out.accepted_steps = tr.stats.accepted;

  const GuidingDecomposition& gc0 = tr.samples.front().gc;
  const double rate = gc0.E_ext / m.h().value(gc0.X);
  const Trajectory ref = integrate_reference(m.h(), s, cfg, PhaseSpacePoint(gc0.X), rate);
  const Deviation dev = deviation_from_reference(tr, ref);
  out.sup_X_error = dev.sup_X_error;
  out.sup_xi_error = dev.sup_xi_error;
  out.J_raw_variation = dev.J_relative_variation;

  const double inf = std::numeric_limits<double>::infinity();
  auto action = [&](const Sample& smp) {
    const double hx = m.h().value(smp.gc.X);
    return hx > 0.0 ? smp.gc.E_ext / hx : inf;
  };
  const double a0 = action(tr.samples.front());
  for (const auto& smp : tr.samples) {
    out.J_variation = std::max(out.J_variation, std::abs(action(smp) / a0 - 1.0));
    const double hx = m.h().value(smp.gc.X);
    const double sep = hx > 0.0 && smp.gc.J > 0.0 ? std::abs(smp.gc.E_ext / (hx * smp.gc.J) - 1.0) : inf;
    out.separation_residual = std::max(out.separation_residual, sep);
    out.energy_drift = std::max(out.energy_drift, std::abs(smp.gc.E_ext / gc0.E_ext - 1.0));
  }
  return out;
}

namespace detail {
inline SlopeFit fit_metric(const std::vector<SweepPoint>& pts, const std::string& name) {
  std::vector<double> mu, err;
  for (const auto& p : pts) {
    mu.push_back(p.mu);
    err.push_back(sweep_metric(p, name));
  }
  SlopeFit f;
  try {
    f.fit = convergence_order(mu, err);
    f.ok = true;
  } catch (const Error& e) {
    f.error = e.what();
  }
  return f;
}
}  // namespace detail

/// Runs every mu concurrently and fits log(metric) against log(mu).
inline SweepReport run_sweep(const SweepSpec& spec) {
  spec.validate();
  SweepReport rep;
  rep.spec = spec;
  rep.points.resize(spec.mu.size());
  parallel_for(spec.mu.size(), [&](std::size_t i) { rep.points[i] = sweep_point(spec, spec.mu[i]); });
  std::vector<SweepPoint> bound;
  for (const auto& p : rep.points)
    if (p.regime == oscillator::Regime::Bound) bound.push_back(p);
  for (const auto& name : sweep_metric_names()) {
    rep.fits[name] = detail::fit_metric(rep.points, name);
    rep.fits_bound_only[name] = detail::fit_metric(bound, name);
  }
  return rep;
}

}  // namespace shadowflow
