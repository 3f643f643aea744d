#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "shadowflow/geometry.hpp"

using namespace shadowflow;

namespace {

std::vector<ScalarField> builtin_fields() {
  return {ScalarField::harmonic(), ScalarField::shifted_harmonic(0.3), ScalarField::constant(2.5),
          ScalarField::pendulum_offset(1.2),
          // q^4 + p^4/2 + q^2 p^2 + 0.4
          ScalarField(Polynomial{{{{4, 0}, 1.0}, {{0, 4}, 0.5}, {{2, 2}, 1.0}, {{0, 0}, 0.4}}},
                      AnalyticDerivatives{})};
}

Vec random_point(std::mt19937_64& rng, int dim, double scale = 2.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vec x(dim);
  for (int i = 0; i < dim; ++i) x(i) = u(rng);
  return x;
}

// Pure finite-difference Christoffel oracle: differentiates g_ij = gamma_ij / h(x)
// using only h values, then applies the textbook formula.
double fd_christoffel(const MetricField& m, const Vec& x, int k, int i, int j) {
  const int d = static_cast<int>(x.size());
  const Mat gam = m.gamma(d);
  auto g = [&](const Vec& y) -> Mat { return gam / m.h().value(y); };
  auto dg = [&](int a) -> Mat {
    const double s = 1e-5;
    Vec p = x, q = x;
    p(a) += s;
    q(a) -= s;
    return (g(p) - g(q)) / (2 * s);
  };
  const Mat ginv = g(x).inverse();
  double out = 0.0;
  const Mat di = dg(i), dj = dg(j);
  for (int l = 0; l < d; ++l) out += 0.5 * ginv(k, l) * (di(l, j) + dj(i, l) - dg(l)(i, j));
  return out;
}

}  // namespace

TEST(PhaseSpacePoint, RejectsOddLengthAndNonFinite) {
  EXPECT_THROW(PhaseSpacePoint(Vec::Zero(3)), InvalidArgument);
  EXPECT_THROW((PhaseSpacePoint{1.0, std::nan("")}), InvalidArgument);
  PhaseSpacePoint x{1.0, 2.0, 3.0, 4.0};
  EXPECT_EQ(x.n(), 2);
  EXPECT_DOUBLE_EQ(x.q(1), 2.0);
  EXPECT_DOUBLE_EQ(x.p(0), 3.0);
}

TEST(Symplectic, BlockFormAndInverseConvention) {
  for (int n : {1, 2, 3}) {
    SymplecticStructure s(n);
    const Mat w = s.omega();
    const Mat wb = s.omega_bar();
    EXPECT_TRUE((w + w.transpose()).isZero());
    // omega_ik omega_bar^jk = delta_i^j
    EXPECT_TRUE((w * wb.transpose()).isIdentity(1e-15));
    EXPECT_EQ(w(0, n), -1.0);
    EXPECT_EQ(w(n, 0), 1.0);
    Vec v = Vec::LinSpaced(2 * n, 1.0, 2.0 * n);
    EXPECT_TRUE(s.apply_omega(v).isApprox(w * v));
  }
}

TEST(Metric, HarmonicAtUnitCircle) {
  MetricField m(ScalarField::harmonic());
  const MetricEval e = metric_at(m, PhaseSpacePoint{1.0, 0.0});
  EXPECT_TRUE(e.g.isApprox(2.0 * Mat::Identity(2, 2)));
  EXPECT_NEAR(e.det, 4.0, 1e-14);
  EXPECT_TRUE((e.g * e.g_inv).isIdentity(1e-12));
}

TEST(Metric, ConstantFieldGivesIdentity) {
  MetricField m(ScalarField::constant(1.0));
  const MetricEval e = metric_at(m, PhaseSpacePoint{-3.0, 7.0});
  EXPECT_TRUE(e.g.isIdentity(0.0));
}

TEST(Metric, SingularAtOrigin) {
  MetricField m(ScalarField::harmonic());
  EXPECT_THROW(metric_at(m, PhaseSpacePoint{0.0, 0.0}), MetricSingular);
  EXPECT_THROW(metric_at(m, PhaseSpacePoint{1e-5, 0.0}), MetricSingular);
  EXPECT_NO_THROW(metric_at(m, PhaseSpacePoint{1e-4, 0.0}));
  MetricField regular(ScalarField::shifted_harmonic(0.5));
  EXPECT_NO_THROW(metric_at(regular, PhaseSpacePoint{0.0, 0.0}));
}

TEST(Metric, RejectsBadGamma) {
  Mat g(2, 2);
  g << 2.0, 0.0, 0.0, 1.0;
  EXPECT_THROW(MetricField(ScalarField::harmonic(), g), InvalidArgument);
  g << 1.0, 0.5, 0.0, 1.0;
  EXPECT_THROW(MetricField(ScalarField::harmonic(), g), InvalidArgument);
  g << -1.0, 0.0, 0.0, -1.0;
  EXPECT_THROW(MetricField(ScalarField::harmonic(), g), InvalidArgument);
}

TEST(Metric, DeterminantIsHToMinus2n) {
  std::mt19937_64 rng(11);
  for (const auto& f : builtin_fields()) {
    for (int n : {1, 2}) {
      if (f.fixed_dimension() != 0 && f.fixed_dimension() != 2 * n) continue;
      MetricField m(f);
      for (int trial = 0; trial < 1000; ++trial) {
        const Vec x = random_point(rng, 2 * n);
        const double h = f.value(x);
        if (h <= 1e-3) continue;
        const MetricEval e = metric_at(m, PhaseSpacePoint(x));
        EXPECT_NEAR(e.g.determinant() * std::pow(h, 2 * n), 1.0, 1e-10) << f.name();
        EXPECT_NEAR(e.det * std::pow(h, 2 * n), 1.0, 1e-12);
      }
    }
  }
}

TEST(Christoffel, FlatForConstantField) {
  MetricField m(ScalarField::constant(3.0));
  const auto t = christoffel_at(m, PhaseSpacePoint{0.3, -0.2, 1.0, 2.0});
  for (int k = 0; k < 4; ++k)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) EXPECT_EQ(t(k, i, j), 0.0);
}

TEST(Christoffel, HarmonicAtUnitPoint) {
  MetricField m(ScalarField::harmonic());
  const auto t = christoffel_at(m, PhaseSpacePoint{1.0, 0.0});
  EXPECT_NEAR(t(0, 0, 0), -1.0, 1e-14);
  EXPECT_NEAR(t(0, 1, 1), 1.0, 1e-14);
  EXPECT_NEAR(t(1, 0, 1), -1.0, 1e-14);
  EXPECT_NEAR(t(1, 1, 1), 0.0, 1e-14);
}

TEST(Christoffel, MatchesFiniteDifferenceOracleAndIsSymmetric) {
  std::mt19937_64 rng(5);
  Mat gam(2, 2);
  gam << 2.0, 0.3, 0.3, (1.0 + 0.09) / 2.0;  // det = 1
  std::vector<MetricField> metrics;
  for (const auto& f : builtin_fields()) metrics.emplace_back(f);
  metrics.emplace_back(ScalarField::harmonic(), gam);
  for (const auto& m : metrics) {
    for (int trial = 0; trial < 40; ++trial) {
      const Vec x = random_point(rng, 2, 1.5);
      if (m.h().value(x) < 0.05) continue;
      const auto t = christoffel_at(m, PhaseSpacePoint(x));
      const Vec v = random_point(rng, 2);
      EXPECT_TRUE(t.contract(v).isApprox(christoffel_contract(m, x, v), 1e-12));
      for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            EXPECT_EQ(t(k, i, j), t(k, j, i));
            const double ref = fd_christoffel(m, x, k, i, j);
            EXPECT_NEAR(t(k, i, j), ref, 1e-5 * std::max(1.0, std::abs(ref))) << m.h().name();
          }
    }
  }
}

TEST(OneForm, StandardAndSymmetricGaugeValues) {
  SymplecticStructure s(1);
  const Vec std_theta = canonical_one_form_at(s, PhaseSpacePoint{3.0, 5.0}, Gauge::Standard);
  EXPECT_EQ(std_theta(0), 5.0);
  EXPECT_EQ(std_theta(1), 0.0);
  const Vec sym = canonical_one_form_at(s, PhaseSpacePoint{3.0, 5.0}, Gauge::Symmetric);
  EXPECT_DOUBLE_EQ(sym(0), 2.5);
  EXPECT_DOUBLE_EQ(sym(1), -1.5);
}

TEST(OneForm, CurlEqualsOmegaInBothGauges) {
  std::mt19937_64 rng(3);
  for (int n : {1, 2}) {
    SymplecticStructure s(n);
    const Mat w = s.omega();
    for (Gauge gauge : {Gauge::Standard, Gauge::Symmetric}) {
      for (int trial = 0; trial < 20; ++trial) {
        const Vec x = random_point(rng, 2 * n, 5.0);
        Mat jac(2 * n, 2 * n);  // jac(i, j) = d_i theta_j
        const double step = 1e-4;
        for (int i = 0; i < 2 * n; ++i) {
          Vec a = x, b = x;
          a(i) += step;
          b(i) -= step;
          jac.row(i) = (canonical_one_form_at(s, PhaseSpacePoint(a), gauge) -
                        canonical_one_form_at(s, PhaseSpacePoint(b), gauge))
                           .transpose() /
                       (2 * step);
        }
        EXPECT_LT((jac - jac.transpose() - w).cwiseAbs().maxCoeff(), 1e-8);
      }
    }
  }
}

TEST(ScalarInvariants, HarmonicAndConstant) {
  const auto inv = scalar_invariants_at(ScalarField::harmonic(), PhaseSpacePoint{1.0, 0.0});
  EXPECT_NEAR(inv.grad_norm_sq_over_h_sq, 4.0, 1e-14);
  EXPECT_NEAR(inv.laplacian_over_h, 4.0, 1e-14);
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec x = random_point(rng, 2);
    const double h = 0.5 * x.squaredNorm();
    const auto i2 = scalar_invariants_at(ScalarField::harmonic(), PhaseSpacePoint(x));
    EXPECT_NEAR(i2.laplacian_over_h, 2.0 / h, 1e-12 * (2.0 / h));
  }
  const auto c = scalar_invariants_at(ScalarField::constant(4.0), PhaseSpacePoint{0.1, 0.2});
  EXPECT_EQ(c.grad_norm_sq_over_h_sq, 0.0);
  EXPECT_EQ(c.laplacian_over_h, 0.0);
  EXPECT_THROW(scalar_invariants_at(ScalarField::harmonic(), PhaseSpacePoint{0.0, 0.0}), MetricSingular);
}

TEST(SymplecticNorm, EqualsHForUnitDeterminantGamma) {
  SymplecticStructure s(1);
  MetricField m(ScalarField::harmonic());
  EXPECT_NEAR(symplectic_norm_at(m, s, PhaseSpacePoint{1.0, 0.0}), 0.5, 1e-15);

  Mat gam(2, 2);
  gam << 2.0, 0.0, 0.0, 0.5;
  MetricField mg(ScalarField::harmonic(), gam);
  EXPECT_NEAR(symplectic_norm_at(mg, s, PhaseSpacePoint{1.0, 0.0}), 0.5, 1e-15);

  MetricField mc(ScalarField::constant(3.0));
  EXPECT_NEAR(symplectic_norm_at(mc, s, PhaseSpacePoint{-4.0, 0.25}), 3.0, 1e-14);

  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    // random SPD with unit determinant
    Mat a(2, 2);
    a << u(rng), u(rng), u(rng), u(rng);
    Mat spd = a * a.transpose() + 0.1 * Mat::Identity(2, 2);
    spd /= std::sqrt(spd.determinant());
    spd = 0.5 * (spd + spd.transpose());
    if (std::abs(spd.determinant() - 1.0) > 1e-12) continue;
    MetricField mr(ScalarField::pendulum_offset(0.7), spd);
    const Vec x = random_point(rng, 2);
    EXPECT_NEAR(symplectic_norm_at(mr, s, PhaseSpacePoint(x)), mr.h().value(x),
                1e-10 * mr.h().value(x));
  }

  MetricField m4(ScalarField::harmonic());
  EXPECT_THROW(symplectic_norm_at(m4, SymplecticStructure(2), PhaseSpacePoint{1, 0, 0, 1}),
               UnsupportedDimension);
}

TEST(ScalarField, AnalyticDerivativesMatchCentralDifferences) {
  std::mt19937_64 rng(17);
  for (const auto& f : builtin_fields()) {
    const int dim = f.fixed_dimension() ? f.fixed_dimension() : 4;
    const auto fd = f.with_mode(FiniteDifferenceDerivatives{1e-5});
    for (int trial = 0; trial < 100; ++trial) {
      const Vec x = random_point(rng, dim);
      // plain second-order central differences with step 1e-5
      const double s = 1e-5;
      Vec cg(dim);
      for (int i = 0; i < dim; ++i) {
        Vec a = x, b = x;
        a(i) += s;
        b(i) -= s;
        cg(i) = (f.value(a) - f.value(b)) / (2 * s);
      }
      const Vec g = f.gradient(x);
      EXPECT_LE((g - cg).norm(), 1e-6 * std::max(1.0, g.norm())) << f.name();
      Mat ch(dim, dim);
      for (int i = 0; i < dim; ++i) {
        Vec a = x, b = x;
        a(i) += s;
        b(i) -= s;
        ch.col(i) = (f.gradient(a) - f.gradient(b)) / (2 * s);
      }
      const Mat h = f.hessian(x);
      EXPECT_LE((h - ch).norm(), 1e-6 * std::max(1.0, h.norm())) << f.name();
      EXPECT_LE((fd.gradient(x) - g).norm(), 1e-6 * std::max(1.0, g.norm()));
    }
  }
}

TEST(ScalarField, PolynomialDefaultsToFiniteDifferences) {
  const auto f = ScalarField::polynomial({{{2, 1}, 1.0}});  // q^2 p
  EXPECT_FALSE(f.analytic());
  const Vec x = (Vec(2) << 1.0, 1.0).finished();
  EXPECT_NEAR(f.value(x), 1.0, 1e-15);
  EXPECT_NEAR(f.gradient(x)(0), 2.0, 1e-9);
  EXPECT_NEAR(f.gradient(x)(1), 1.0, 1e-9);
  const Mat h = f.hessian(x);
  EXPECT_NEAR(h(0, 0), 2.0, 1e-6);
  EXPECT_NEAR(h(0, 1), 2.0, 1e-6);
  EXPECT_NEAR(h(1, 1), 0.0, 1e-6);
  EXPECT_THROW(f.value(Vec::Zero(4)), InvalidArgument);
  EXPECT_THROW(ScalarField::polynomial({{{1, 0, 0}, 1.0}}), InvalidArgument);
}
