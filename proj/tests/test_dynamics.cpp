#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "shadowflow/dynamics.hpp"
#include "shadowflow/oscillator.hpp"

using namespace shadowflow;
using std::numbers::pi;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// L(x, v) = 1/2 mu g_ij v^i v^j + theta_i v^i, evaluated from h values only.
double lagrangian(const MetricField& m, const SymplecticStructure& s, double mu, Gauge gauge,
                  const Vec& x, const Vec& v) {
  const Mat g = m.gamma(static_cast<int>(x.size())) / m.h().value(x);
  return 0.5 * mu * v.dot(g * v) + canonical_one_form_at(s, PhaseSpacePoint(x), gauge).dot(v);
}

// Euler-Lagrange residual d/dt(dL/dv) - dL/dx for a proposed acceleration,
// every derivative taken by central differences of L.
Vec euler_lagrange_residual(const MetricField& m, const SymplecticStructure& s, double mu, Gauge gauge,
                            const Vec& x, const Vec& v, const Vec& a) {
  const int d = static_cast<int>(x.size());
  const double e = 1e-4;
  auto L = [&](const Vec& xx, const Vec& vv) { return lagrangian(m, s, mu, gauge, xx, vv); };
  auto unit = [&](int i) {
    Vec u = Vec::Zero(d);
    u(i) = e;
    return u;
  };
  Vec r(d);
  for (int k = 0; k < d; ++k) {
    const Vec ek = unit(k);
    double acc = 0.0;
    for (int j = 0; j < d; ++j) {
      const Vec ej = unit(j);
      const double dvv = (L(x, v + ek + ej) - L(x, v + ek - ej) - L(x, v - ek + ej) + L(x, v - ek - ej)) /
                         (4 * e * e);
      const double dvx = (L(x + ej, v + ek) - L(x - ej, v + ek) - L(x + ej, v - ek) + L(x - ej, v - ek)) /
                         (4 * e * e);
      acc += dvv * a(j) + dvx * v(j);
    }
    const double dx = (L(x + ek, v) - L(x - ek, v)) / (2 * e);
    r(k) = acc - dx;
  }
  return r;
}

IntegratorConfig config(double mu, double horizon, double sample) {
  IntegratorConfig c;
  c.mu = mu;
  c.horizon = horizon;
  c.sample_interval = sample;
  return c;
}

}  // namespace

TEST(ExtendedRhs, HomogeneousFieldRotation) {
  MetricField m(ScalarField::constant(1.0));
  SymplecticStructure s(1);
  const Vec a1 = extended_rhs(m, s, 1.0, ExtendedState(PhaseSpacePoint{1.0, 0.0}, vec2(1, 0)));
  EXPECT_NEAR(a1(0), 0.0, 1e-15);
  EXPECT_NEAR(a1(1), 1.0, 1e-15);
  const Vec a2 = extended_rhs(m, s, 1.0, ExtendedState(PhaseSpacePoint{1.0, 0.0}, vec2(0, 1)));
  EXPECT_NEAR(a2(0), -1.0, 1e-15);
  EXPECT_NEAR(a2(1), 0.0, 1e-15);
}

TEST(ExtendedRhs, SatisfiesEulerLagrangeInBothGauges) {
  MetricField m(ScalarField::harmonic());
  SymplecticStructure s(1);
  const Vec x = vec2(1, 0), v = vec2(0, 1);
  const double mu = 0.25;
  const Vec a = extended_rhs(m, s, mu, ExtendedState(PhaseSpacePoint(x), v));
  for (Gauge g : {Gauge::Standard, Gauge::Symmetric}) {
    const Vec r = euler_lagrange_residual(m, s, mu, g, x, v, a);
    EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-6);
    // a wrong acceleration is detected
    EXPECT_GT(euler_lagrange_residual(m, s, mu, g, x, v, a + vec2(1e-3, 0)).cwiseAbs().maxCoeff(), 1e-4);
  }
}

TEST(ExtendedRhs, EulerLagrangeAtRandomStatesAndFields) {
  SymplecticStructure s1(1), s2(2);
  Mat gam(2, 2);
  gam << 2.0, 0.3, 0.3, 1.09 / 2.0;
  struct Case {
    MetricField m;
    const SymplecticStructure* s;
    Vec x, v;
    double mu;
  };
  Vec x4(4), v4(4);
  x4 << 0.3, -0.7, 1.1, 0.4;
  v4 << 0.5, 0.1, -0.9, 0.2;
  std::vector<Case> cases{
      {MetricField(ScalarField::harmonic(), gam), &s1, vec2(0.7, -0.4), vec2(0.3, 1.2), 0.1},
      {MetricField(ScalarField::pendulum_offset(1.0)), &s1, vec2(0.9, 0.5), vec2(-0.4, 0.8), 0.5},
      {MetricField(ScalarField::shifted_harmonic(0.2)), &s2, x4, v4, 0.05},
      {MetricField(ScalarField::polynomial({{{2, 0}, 1.0}, {{0, 4}, 0.5}, {{0, 0}, 1.0}})), &s1,
       vec2(0.6, -0.8), vec2(0.2, 0.7), 0.3}};
  for (const auto& c : cases) {
    const Vec a = extended_rhs(c.m, *c.s, c.mu, ExtendedState(PhaseSpacePoint(c.x), c.v));
    const Vec r = euler_lagrange_residual(c.m, *c.s, c.mu, Gauge::Symmetric, c.x, c.v, a);
    EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-6) << c.m.h().name();
  }
}

TEST(ExtendedRhs, SingularAndInvalidInputs) {
  MetricField m(ScalarField::harmonic());
  SymplecticStructure s(1);
  EXPECT_THROW(extended_rhs(m, s, 1.0, ExtendedState(PhaseSpacePoint{0.0, 0.0}, vec2(1, 0))), MetricSingular);
  EXPECT_THROW(extended_rhs(m, s, 0.0, ExtendedState(PhaseSpacePoint{1.0, 0.0}, vec2(1, 0))), InvalidArgument);
  EXPECT_THROW(ExtendedState(PhaseSpacePoint{1.0, 0.0}, Vec::Zero(3)), InvalidArgument);
}

TEST(ExtendedEnergy, Examples) {
  SymplecticStructure s(1);
  EXPECT_DOUBLE_EQ(extended_energy(MetricField(ScalarField::constant(1.0)), 1.0,
                                   ExtendedState(PhaseSpacePoint{1.0, 0.0}, vec2(1, 0))),
                   0.5);
  const double a = 0.3, b = -1.7;
  EXPECT_NEAR(extended_energy(MetricField(ScalarField::harmonic()), 1.0,
                              ExtendedState(PhaseSpacePoint{1.0, 0.0}, vec2(a, b))),
              a * a + b * b, 1e-14);
  // cylinder form mu (rdot^2/r^2 + phidot^2) of the oscillator energy
  const double mu = 0.4;
  const ExtendedState st = oscillator::initial_state(mu, 1.3, 0.2, PhaseSpacePoint{0.6, 0.5});
  EXPECT_NEAR(extended_energy(MetricField(ScalarField::harmonic()), mu, st), 1.3, 1e-13);
}

TEST(IntegrateExtended, HomogeneousCircleClosesAndCenterIsFixed) {
  MetricField m(ScalarField::constant(1.0));
  SymplecticStructure s(1);
  IntegratorConfig cfg = config(1.0, 2 * pi, 2 * pi / 64);
  const auto tr = integrate_extended(m, s, cfg, ExtendedState(PhaseSpacePoint{1.0, 0.0}, vec2(0, 1)));
  ASSERT_EQ(tr.termination, Termination::Completed);
  ASSERT_EQ(tr.samples.size(), 65u);
  EXPECT_EQ(tr.samples.back().t, 2 * pi);
  EXPECT_LT((tr.samples.back().state.x.coords() - vec2(1, 0)).norm(), 1e-8);
  for (const auto& smp : tr.samples) {
    EXPECT_LT(smp.gc.X.norm(), 1e-6);  // circle about the origin under the frozen convention
    EXPECT_NEAR(smp.state.x.coords().norm(), 1.0, 1e-8);
  }
}

TEST(IntegrateExtended, HomogeneousPeriodScalesWithMuOverB) {
  const double b = 2.5, mu = 0.1;
  MetricField m(ScalarField::constant(b));
  SymplecticStructure s(1);
  const double period = 2 * pi * mu / b;
  const auto tr = integrate_extended(m, s, config(mu, period, period),
                                     ExtendedState(PhaseSpacePoint{0.2, -0.3}, vec2(0.4, 0.9)));
  EXPECT_LT((tr.samples.back().state.x.coords() - vec2(0.2, -0.3)).norm(), 1e-9);
  EXPECT_LT((tr.samples.back().state.v - vec2(0.4, 0.9)).norm(), 1e-8);
}

TEST(IntegrateExtended, Fig1BoundCaseMatchesClosedForm) {
  const double E = 1.0, l = 0.25, p = 0.5;
  const double mu = l * l * p / E;
  ASSERT_DOUBLE_EQ(mu, 0.03125);
  MetricField m(ScalarField::harmonic());
  SymplecticStructure s(1);
  const ExtendedState init = oscillator::initial_state(mu, E, l, PhaseSpacePoint{1.0, 0.0});
  EXPECT_NEAR(init.v(0), -std::sqrt(E / mu), 1e-12);
  EXPECT_NEAR(init.v(1), 0.0, 1e-15);
  const oscillator::Params prm = oscillator::phase_from_state(mu, init);
  const double horizon = 3.0 * oscillator::radial_period(prm);
  const auto tr = integrate_extended(m, s, config(mu, horizon, horizon / 600), init);
  ASSERT_EQ(tr.termination, Termination::Completed);
  double worst = 0.0;
  for (const auto& smp : tr.samples) {
    const double r2 = smp.state.x.coords().squaredNorm();
    worst = std::max(worst, std::abs(r2 / oscillator::exact_r_squared(prm, smp.t) - 1.0));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(IntegrateExtended, FallOntoOriginTerminatesAtMetricSingular) {
  const double E = 1.0, l = 0.25, p = 10.0;
  const double mu = l * l * p / E;
  MetricField m(ScalarField::harmonic());
  SymplecticStructure s(1);
  const ExtendedState init = oscillator::initial_state(mu, E, l, PhaseSpacePoint{1.0, 0.0});
  const auto tr = integrate_extended(m, s, config(mu, 40.0, 0.01), init);
  EXPECT_EQ(tr.termination, Termination::MetricSingular);
  EXPECT_FALSE(tr.message.empty());
  ASSERT_GT(tr.samples.size(), 100u);
  // log r against t over the last decade of r is a line with the predicted slope
  const double r_end = tr.samples.back().state.x.coords().norm();
  double sx = 0, sy = 0, sxx = 0, sxy = 0, k = 0;
  for (const auto& smp : tr.samples) {
    const double r = smp.state.x.coords().norm();
    if (r > 10 * r_end) continue;
    const double y = std::log(r);
    sx += smp.t;
    sy += y;
    sxx += smp.t * smp.t;
    sxy += smp.t * y;
    k += 1;
  }
  const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  oscillator::Params prm;
  prm.mu = mu;
  prm.E = E;
  prm.l = l;
  EXPECT_NEAR(slope / oscillator::asymptotic_log_rate(prm), 1.0, 0.01);
}

TEST(IntegrateExtended, EnergyDriftAcrossSystemsAndMu) {
  SymplecticStructure s(1);
  struct Sys {
    ScalarField h;
    Vec x, v;
  };
  const std::vector<Sys> systems{
      {ScalarField::harmonic(), vec2(1.0, 0.2), vec2(0.3, -0.5)},
      {ScalarField::shifted_harmonic(0.3), vec2(0.4, -0.8), vec2(-0.6, 0.1)},
      {ScalarField::constant(2.0), vec2(0.1, 0.1), vec2(1.0, 0.4)},
      {ScalarField::pendulum_offset(0.5), vec2(0.9, 0.3), vec2(0.2, 0.2)},
      {ScalarField::polynomial({{{2, 0}, 1.0}, {{0, 4}, 0.5}, {{0, 0}, 1.0}}), vec2(0.5, 0.5), vec2(0.4, -0.2)}};
  for (const auto& sys : systems) {
    MetricField m(sys.h);
    for (double mu : {1e-3, 1e-2, 1e-1, 1.0}) {
      const double horizon = 20 * 2 * pi * mu / sys.h.value(sys.x);
      const auto tr = integrate_extended(m, s, config(mu, horizon, horizon / 100),
                                         ExtendedState(PhaseSpacePoint(sys.x), sys.v));
      const double e0 = tr.samples.front().gc.E_ext;
      double drift = 0.0;
      for (const auto& smp : tr.samples) drift = std::max(drift, std::abs(smp.gc.E_ext / e0 - 1.0));
      EXPECT_LT(drift, 1e-8) << sys.h.name() << " mu=" << mu;
      EXPECT_NEAR(extended_energy(m, mu, tr.samples.back().state), tr.samples.back().gc.E_ext, 1e-14);
    }
  }
}

// Time reversal: if xi(t) solves the equations then R xi(T - t) does too,
// with R = diag(1, -1). R reverses the orientation of omega, which undoes the
// sign flip of the velocity-linear force; harmonic h is R-invariant.
TEST(IntegrateExtended, TimeReversalReturnsToStart) {
  MetricField m(ScalarField::harmonic());
  SymplecticStructure s(1);
  const double mu = 0.05, T = 3.0;
  Mat R(2, 2);
  R << 1, 0, 0, -1;
  const ExtendedState init(PhaseSpacePoint{0.9, 0.4}, vec2(0.7, -1.1));
  const auto fwd = integrate_extended(m, s, config(mu, T, T), init);
  const auto& end = fwd.samples.back().state;
  const ExtendedState back_init(PhaseSpacePoint(Vec(R * end.x.coords())), -R * end.v);
  const auto bwd = integrate_extended(m, s, config(mu, T, T), back_init);
  const auto& fin = bwd.samples.back().state;
  EXPECT_LT((R * fin.x.coords() - init.x.coords()).norm(), 1e-6);
  EXPECT_LT((-R * fin.v - init.v).norm(), 1e-6 * init.v.norm() * 10);
}

TEST(IntegrateExtended, AcceptedStepScalesWithMu) {
  MetricField m(ScalarField::constant(1.0));
  SymplecticStructure s(1);
  std::vector<double> mus{1e-3, 3e-3, 1e-2, 3e-2, 1e-1}, steps;
  for (double mu : mus) {
    const double horizon = 20 * 2 * pi * mu;
    const double root = std::sqrt(mu);
    const auto tr = integrate_extended(m, s, config(mu, horizon, horizon),
                                       ExtendedState(PhaseSpacePoint{0.0, 0.0}, vec2(1.0 / root, 0.0)));
    steps.push_back(tr.stats.mean_free_step());
  }
  const auto fit = convergence_order(mus, steps);
  EXPECT_NEAR(fit.slope, 1.0, 0.2);
}

TEST(HamiltonianFlow, RhsExamples) {
  SymplecticStructure s(1);
  const auto h = ScalarField::harmonic();
  EXPECT_TRUE(hamiltonian_flow_rhs(h, s, PhaseSpacePoint{1.0, 0.0}).isApprox(vec2(0, -1)));
  EXPECT_TRUE(hamiltonian_flow_rhs(h, s, PhaseSpacePoint{0.0, 1.0}).isApprox(vec2(1, 0)));
  const auto poly = ScalarField::polynomial({{{2, 1}, 1.0}});  // q^2 p
  EXPECT_LT((hamiltonian_flow_rhs(poly, s, PhaseSpacePoint{1.0, 1.0}) - vec2(1, -2)).norm(), 1e-9);
}

TEST(IntegrateReference, HarmonicReturnsAndConservesH) {
  const auto h = ScalarField::harmonic();
  SymplecticStructure s(1);
  const auto tr = integrate_reference(h, s, config(1.0, 2 * pi, 2 * pi / 100), PhaseSpacePoint{1.0, 0.0});
  ASSERT_EQ(tr.termination, Termination::Completed);
  EXPECT_LT((tr.samples.back().state.x.coords() - vec2(1, 0)).norm(), 1e-8);
  for (const auto& smp : tr.samples) {
    EXPECT_NEAR(smp.gc.E_ext / 0.5 - 1.0, 0.0, 1e-10);
    EXPECT_EQ(smp.gc.X, smp.state.x.coords());
    EXPECT_EQ(smp.gc.J, 0.0);
  }
}

TEST(IntegrateReference, PendulumSmallAmplitudePeriod) {
  const auto h = ScalarField::pendulum_offset(1.0);
  SymplecticStructure s(1);
  IntegratorConfig cfg = config(1.0, 4 * pi, 1e-3);
  cfg.rel_tol = 1e-13;
  cfg.abs_tol = 1e-15;
  const auto tr = integrate_reference(h, s, cfg, PhaseSpacePoint{0.1, 0.0});
  // successive downward zero crossings of q, located by linear interpolation
  std::vector<double> crossings;
  for (size_t i = 1; i < tr.samples.size(); ++i) {
    const double a = tr.samples[i - 1].state.x.q(0), b = tr.samples[i].state.x.q(0);
    if (a > 0 && b <= 0) crossings.push_back(tr.samples[i - 1].t + a / (a - b) * (tr.samples[i].t - tr.samples[i - 1].t));
  }
  ASSERT_GE(crossings.size(), 2u);
  const double period = crossings[1] - crossings[0];
  EXPECT_NEAR(period / (2 * pi), 1.0, 0.01);
  // finite-amplitude correction 1 + a^2/16 is resolved as well
  EXPECT_NEAR(period / (2 * pi), 1.0 + 0.01 / 16, 1e-5);
}

TEST(IntegrateReference, RateRescalesTime) {
  const auto h = ScalarField::harmonic();
  SymplecticStructure s(1);
  const auto tr = integrate_reference(h, s, config(1.0, pi, pi), PhaseSpacePoint{1.0, 0.0}, 2.0);
  EXPECT_LT((tr.samples.back().state.x.coords() - vec2(1, 0)).norm(), 1e-8);
}

TEST(IntegratorConfig, Validation) {
  IntegratorConfig c;
  EXPECT_NO_THROW(c.validate());
  c.mu = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = IntegratorConfig{};
  c.sample_interval = 2 * c.horizon;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = IntegratorConfig{};
  c.rel_tol = 1.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}
