#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "shadowflow/errors.hpp"
#include "shadowflow/geometry.hpp"
#include "shadowflow/state.hpp"

namespace shadowflow {

/// Pi_i = mu^(1/2) g_ij v^j, X = xi + mu^(1/2) omega_bar Pi, J = |Pi|^2 / 2.
///
/// J uses the raw momenta; that is the adiabatic oscillator energy only
/// when gamma is the identity.
inline GuidingDecomposition decompose(const MetricField& m, const SymplecticStructure& s,
                                      double mu, const ExtendedState& state) {
  if (!(mu > 0.0)) throw InvalidArgument("mu must be positive");
  if (state.x.n() != s.n()) throw InvalidArgument("state dimension does not match structure");
  const MetricEval e = metric_at(m, state.x);
  const double root_mu = std::sqrt(mu);
  GuidingDecomposition gc;
  const Vec gv = e.g * state.v;
  gc.Pi = root_mu * gv;
  gc.X = state.x.coords() + root_mu * (s.omega_bar() * gc.Pi);
  gc.J = 0.5 * gc.Pi.squaredNorm();
  gc.E_ext = 0.5 * mu * state.v.dot(gv);
  return gc;
}

/// E_ext / h(X): the oscillator action read off the separated form
/// H = h(X) J. Unlike the raw J it does not oscillate with h(xi) along the
/// gyration, so it is the quantity to watch for adiabatic invariance.
inline double separated_action(const MetricField& m, const GuidingDecomposition& gc) {
  return gc.E_ext / m.conformal_factor(gc.X);
}

/// Local cyclotron period 2 pi mu J / E_ext (= 2 pi mu / h(xi) for n = 1).
inline double gyro_period_estimate(const MetricField& m, const SymplecticStructure& s, double mu,
                                   const ExtendedState& state) {
  const GuidingDecomposition gc = decompose(m, s, mu, state);
  if (gc.J < 1e-14) throw DegenerateFastMotion("J = " + std::to_string(gc.J) + " below 1e-14");
  return 2.0 * std::numbers::pi * mu * gc.J / gc.E_ext;
}

struct Deviation {
  double sup_X_error = 0.0;
  double sup_xi_error = 0.0;
  double J_relative_variation = 0.0;
};

namespace detail {

/// Piecewise-linear interpolation of a sampled vector quantity.
template <class Get>
Vec interpolate(const Trajectory& tr, double t, Get get) {
  const auto& s = tr.samples;
  auto it = std::lower_bound(s.begin(), s.end(), t,
                             [](const Sample& a, double v) { return a.t < v; });
  if (it == s.end()) return get(s.back());
  if (it->t == t || it == s.begin()) return get(*it);
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double w = (t - lo.t) / (hi.t - lo.t);
  return (1.0 - w) * get(lo) + w * get(hi);
}

}  // namespace detail

/// Compares the guiding center of `traj` (and its raw position) against the
/// phase-space position of `ref` on the union of both sample grids,
/// restricted to the common time range.
inline Deviation deviation_from_reference(const Trajectory& traj, const Trajectory& ref) {
  if (traj.empty() || ref.empty()) throw EmptyOverlap("empty trajectory");
  const double lo = std::max(traj.samples.front().t, ref.samples.front().t);
  const double hi = std::min(traj.t_end(), ref.t_end());
  if (!(hi >= lo)) throw EmptyOverlap("trajectories share no time range");

  std::vector<double> grid;
  for (const auto* tr : {&traj, &ref})
    for (const auto& s : tr->samples)
      if (s.t >= lo && s.t <= hi) grid.push_back(s.t);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.empty()) throw EmptyOverlap("no sample inside the common range");

  auto pos = [](const Sample& s) -> Vec { return s.state.x.coords(); };
  auto gc_x = [](const Sample& s) -> Vec { return s.gc.X; };
  Deviation d;
  for (double t : grid) {
    const Vec r = detail::interpolate(ref, t, pos);
    d.sup_X_error = std::max(d.sup_X_error, (detail::interpolate(traj, t, gc_x) - r).norm());
    d.sup_xi_error = std::max(d.sup_xi_error, (detail::interpolate(traj, t, pos) - r).norm());
  }
  const double j0 = traj.samples.front().gc.J;
  for (const auto& s : traj.samples) {
    if (s.t < lo || s.t > hi) continue;
    if (j0 != 0.0) d.J_relative_variation = std::max(d.J_relative_variation, std::abs(s.gc.J / j0 - 1.0));
  }
  return d;
}

struct PowerLawFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS of natural-log residuals
};

/// Least-squares line through (log mu, log error), no sufficiency checks
/// beyond two positive points.
inline PowerLawFit fit_power_law(const std::vector<double>& mu, const std::vector<double>& error) {
  if (mu.size() != error.size()) throw InvalidArgument("mu and error lists differ in length");
  if (mu.size() < 2) throw InsufficientData("need at least 2 points for a line");
  for (size_t i = 0; i < mu.size(); ++i)
    if (!(mu[i] > 0.0) || !(error[i] > 0.0) || !std::isfinite(error[i]))
      throw InsufficientData("mu and error values must be positive and finite");
  const double k = static_cast<double>(mu.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < mu.size(); ++i) {
    const double x = std::log(mu[i]), y = std::log(error[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  PowerLawFit f;
  f.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  f.intercept = (sy - f.slope * sx) / k;
  double ss = 0.0;
  for (size_t i = 0; i < mu.size(); ++i) {
    const double r = std::log(error[i]) - (f.intercept + f.slope * std::log(mu[i]));
    ss += r * r;
  }
  f.residual = std::sqrt(ss / k);
  return f;
}

/// Least-squares slope of log(error) against log(mu) over at least four
/// points spanning 1.5 decades.
inline PowerLawFit convergence_order(const std::vector<double>& mu, const std::vector<double>& error) {
  if (mu.size() != error.size()) throw InvalidArgument("mu and error lists differ in length");
  if (mu.size() < 4) throw InsufficientData("need at least 4 mu points");
  for (size_t i = 0; i < mu.size(); ++i)
    if (!(mu[i] > 0.0) || !(error[i] > 0.0) || !std::isfinite(error[i]))
      throw InsufficientData("mu and error values must be positive and finite");
  const auto [mn, mx] = std::minmax_element(mu.begin(), mu.end());
  if (std::log10(*mx / *mn) < 1.5 - 1e-12) throw InsufficientData("mu points span less than 1.5 decades");
  return fit_power_law(mu, error);
}

}  // namespace shadowflow
