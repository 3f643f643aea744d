#pragma once

// One degree of freedom: the order-hbar effective Hamiltonian of the slow
// motion, and a finite-difference magnetic Schroedinger solver on the flat
// Cartesian background to test it against.

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "shadowflow/errors.hpp"
#include "shadowflow/geometry.hpp"
#include "shadowflow/scalar_field.hpp"

namespace shadowflow::quantum {

using Cplx = std::complex<double>;
using SpMatC = Eigen::SparseMatrix<Cplx>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;

// ---------------------------------------------------------------------------
// effective Hamiltonian

/// I1 = |grad h|^2 / (4 h^2) - (Laplacian h) / (8 h): the choice under which
/// the order-hbar term of the slow Hamiltonian vanishes.
inline double i1_standard(const ScalarField& h, const PhaseSpacePoint& x, double h_min = kDefaultHMin) {
  const ScalarInvariants inv = scalar_invariants_at(h, x, h_min);
  return 0.25 * inv.grad_norm_sq_over_h_sq - 0.125 * inv.laplacian_over_h;
}

/// Second-order invariant. Left open; contributes nothing.
inline double i2_hook(const ScalarField&, const PhaseSpacePoint&) { return 0.0; }

struct I1Standard {};
struct I1Zero {};
struct I1Custom {
  std::function<double(const ScalarField&, const PhaseSpacePoint&)> f;
};
using I1Choice = std::variant<I1Standard, I1Zero, I1Custom>;

inline double i1_value(const I1Choice& choice, const ScalarField& h, const PhaseSpacePoint& x,
                       double h_min = kDefaultHMin) {
  if (std::holds_alternative<I1Standard>(choice)) return i1_standard(h, x, h_min);
  if (std::holds_alternative<I1Zero>(choice)) return 0.0;
  const auto& c = std::get<I1Custom>(choice);
  if (!c.f) throw InvalidArgument("custom I1 has no function");
  return c.f(h, x);
}

/// Coefficients of H = h Jb + hbar c2 Jb^2 + hbar (c0 + I1) at one point.
struct EffectiveTerms {
  double hbar = 0.0;
  double h = 0.0;
  double zeroth = 0.0;                // h / 2
  double jbar_coefficient = 0.0;      // h
  double jbar2_coefficient = 0.0;     // (lap/h - 3 |grad|^2/h^2) / 4
  double constant_coefficient = 0.0;  // (lap/h - |grad|^2/h^2) / 16
  double i1 = 0.0;
  double order_h_coefficient = 0.0;   // lap/(8h) - |grad|^2/(4h^2) + I1

  /// Energy of fast level n (Jb = n + 1/2) through order hbar.
  double level(int n) const {
    const double j = n + 0.5;
    return jbar_coefficient * j + hbar * (jbar2_coefficient * j * j + constant_coefficient + i1);
  }
};

inline EffectiveTerms adiabatic_expansion_terms(const ScalarField& h, double hbar, const PhaseSpacePoint& x,
                                                const I1Choice& i1 = I1Standard{},
                                                double h_min = kDefaultHMin) {
  if (x.n() != 1) throw UnsupportedDimension("effective Hamiltonian is implemented for n = 1 only");
  if (!(hbar >= 0.0)) throw InvalidArgument("hbar must be nonnegative");
  const ScalarInvariants inv = scalar_invariants_at(h, x, h_min);
  const double g2 = inv.grad_norm_sq_over_h_sq;
  const double lap = inv.laplacian_over_h;
  EffectiveTerms t;
  t.hbar = hbar;
  t.h = h.value(x.coords());
  t.zeroth = 0.5 * t.h;
  t.jbar_coefficient = t.h;
  t.jbar2_coefficient = 0.25 * (lap - 3.0 * g2);
  t.constant_coefficient = (lap - g2) / 16.0;
  t.i1 = i1_value(i1, h, x, h_min);
  t.order_h_coefficient = 0.125 * lap - 0.25 * g2 + t.i1;
  return t;
}

/// h/2 + hbar [lap/(8h) - |grad|^2/(4h^2) + I1].
inline double effective_hamiltonian_value(const ScalarField& h, double hbar, const PhaseSpacePoint& x,
                                          const I1Choice& i1 = I1Standard{},
                                          double h_min = kDefaultHMin) {
  const EffectiveTerms t = adiabatic_expansion_terms(h, hbar, x, i1, h_min);
  return t.zeroth + hbar * t.order_h_coefficient;
}

// ---------------------------------------------------------------------------
// magnetic Schroedinger operator

enum class GaugeChoice { Symmetric, Landau };

inline std::string gauge_name(GaugeChoice g) { return g == GaugeChoice::Symmetric ? "symmetric" : "landau"; }

/// Square box [-L, L]^2 with N points per axis, Dirichlet walls on the
/// outermost points, so (N-2)^2 unknowns.
struct GridSpec {
  double L = 3.0;
  int N = 192;
  double hbar = 0.1;

  void validate() const {
    if (!(L > 0.0)) throw InvalidArgument("grid half-width L must be positive");
    if (N < 64) throw InvalidArgument("grid needs N >= 64 points per axis");
    if (!(hbar > 0.0)) throw InvalidArgument("hbar must be positive");
  }
  double spacing() const { return 2.0 * L / (N - 1); }
  int interior() const { return N - 2; }
  double coord(int i) const { return -L + i * spacing(); }
};

struct SpectrumOptions {
  GaugeChoice gauge = GaugeChoice::Symmetric;
  bool i1_potential = false;  // add hbar * I1_standard(B) as a scalar potential
  // eigenvalues nearest this shift are returned; NaN = just below the spectrum
  double shift = std::numeric_limits<double>::quiet_NaN();
  int extra_vectors = 16;   // block size = k + extra_vectors
  double tol = 1e-8;        // residual |H x - lambda x| / max(1, |lambda|)
  // Inside a near-degenerate cluster wider than the block the residual
  // stalls at the cluster splitting; a Ritz value that has stopped moving
  // (by < tol) is accepted once its residual, which bounds the distance to
  // the nearest eigenvalue, is below this.
  double cluster_tol = 1e-5;
  int max_iterations = 400;
  double wall_tolerance = 1e-6;  // <= 0 disables the a-posteriori wall check
  std::uint64_t seed = 0x5eedf10bULL;
};

struct SpectrumReport {
  double hbar = 0.0;
  double L = 0.0;
  int N = 0;
  std::string gauge;
  double shift = 0.0;
  std::vector<double> eigenvalues;  // ascending
  std::vector<int> bands;
  bool bands_separated = false;  // a gap cleanly splits the lowest band off
  std::vector<double> predicted;
  std::vector<double> rel_errors;
  std::vector<double> residuals;
  std::vector<double> wall_amplitude;  // max boundary-ring |psi| / max |psi|
  int iterations = 0;
};

namespace detail {

inline const std::vector<std::pair<double, double>>& gauss_legendre_16() {
  // nodes on [0, 1] and weights summing to 1
  static const std::vector<std::pair<double, double>> rule = [] {
    const int n = 16;
    std::vector<std::pair<double, double>> r;
    for (int i = 1; i <= n; ++i) {
      double z = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (z * p1 - p0) / (z * z - 1.0);
        const double dz = p1 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      r.emplace_back(0.5 * (1.0 - z), 1.0 / ((1.0 - z * z) * dp * dp));
    }
    return r;
  }();
  return rule;
}

inline double field_at(const ScalarField& B, double x, double y) {
  Vec v(2);
  v << x, y;
  return B.value(v);
}

/// Symmetric (radial) gauge: theta = (-y, x) * int_0^1 s B(s x, s y) ds.
inline std::pair<double, double> radial_potential(const ScalarField& B, double x, double y) {
  double f = 0.0;
  for (const auto& [s, w] : gauss_legendre_16()) f += w * s * field_at(B, s * x, s * y);
  return {-y * f, x * f};
}

/// Landau gauge: theta = (-int_0^y B(x, t) dt, 0).
inline double landau_theta_x(const ScalarField& B, double x, double y) {
  double f = 0.0;
  for (const auto& [s, w] : gauss_legendre_16()) f += w * field_at(B, x, s * y);
  return -y * f;
}

/// int theta . dl along the straight segment (x0, y0) -> (x0 + dx, y0 + dy).
inline double link_flux(const ScalarField& B, GaugeChoice gauge, double x0, double y0, double dx, double dy) {
  if (gauge == GaugeChoice::Landau && dx == 0.0) return 0.0;
  double phi = 0.0;
  for (const auto& [s, w] : gauss_legendre_16()) {
    const double x = x0 + s * dx, y = y0 + s * dy;
    if (gauge == GaugeChoice::Symmetric) {
      const auto [tx, ty] = radial_potential(B, x, y);
      phi += w * (tx * dx + ty * dy);
    } else {
      phi += w * landau_theta_x(B, x, y) * dx;
    }
  }
  return phi;
}

inline double uniform_pm1(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0;
}

inline MatC orthonormalize(const MatC& y) {
  Eigen::HouseholderQR<MatC> qr(y);
  return qr.householderQ() * MatC::Identity(y.rows(), y.cols());
}

}  // namespace detail

/// Hermitian matrix of H = (1/2 hbar) (-i hbar grad - theta)^2 [+ hbar I1(B)]
/// on the interior points, with Peierls link phases exp(-i int theta.dl / hbar)
/// and curl theta = B. Row index = (i - 1) * (N - 2) + (j - 1), i along x.
inline SpMatC magnetic_operator(const ScalarField& B, const GridSpec& grid,
                                GaugeChoice gauge = GaugeChoice::Symmetric, bool i1_potential = false) {
  grid.validate();
  const int m = grid.interior();
  const double a = grid.spacing();
  const double hop = grid.hbar / (2.0 * a * a);
  auto index = [m](int i, int j) { return (i - 1) * m + (j - 1); };

  std::vector<Eigen::Triplet<Cplx>> trip;
  trip.reserve(static_cast<std::size_t>(m) * m * 5);
  for (int i = 1; i <= m; ++i) {
    for (int j = 1; j <= m; ++j) {
      const double x = grid.coord(i), y = grid.coord(j);
      double diag = 4.0 * hop;
      if (i1_potential) diag += grid.hbar * i1_standard(B, PhaseSpacePoint{x, y});
      trip.emplace_back(index(i, j), index(i, j), Cplx(diag, 0.0));
      // links to the +x and +y neighbours; the reverse entries are conjugates
      const int ni[2] = {i + 1, i}, nj[2] = {j, j + 1};
      for (int d = 0; d < 2; ++d) {
        if (ni[d] > m || nj[d] > m) continue;
        const double phi = detail::link_flux(B, gauge, x, y, d == 0 ? a : 0.0, d == 1 ? a : 0.0);
        const Cplx u = -hop * std::polar(1.0, -phi / grid.hbar);
        trip.emplace_back(index(i, j), index(ni[d], nj[d]), u);
        trip.emplace_back(index(ni[d], nj[d]), index(i, j), std::conj(u));
      }
    }
  }
  SpMatC H(m * m, m * m);
  H.setFromTriplets(trip.begin(), trip.end());
  return H;
}

/// Number of eigenvalues of the Hermitian H below x: the count of negative
/// pivots of H - x = L D L^H (Sylvester's law of inertia).
inline int eigenvalues_below(const SpMatC& H, double x) {
  SpMatC M = H;
  for (int i = 0; i < M.rows(); ++i) M.coeffRef(i, i) -= x;
  Eigen::SimplicialLDLT<SpMatC, Eigen::Lower> ldlt(M);
  if (ldlt.info() != Eigen::Success) throw SolverNoConvergence("LDL factorization failed at x = " + std::to_string(x));
  int neg = 0;
  for (Eigen::Index i = 0; i < ldlt.vectorD().size(); ++i) {
    const double d = std::real(ldlt.vectorD()(i));
    if (d == 0.0) throw SolverNoConvergence("x = " + std::to_string(x) + " is numerically an eigenvalue");
    if (d < 0.0) ++neg;
  }
  return neg;
}

/// Labels sorted eigenvalues by fast level. The largest gap, if it stands
/// out from the rest (> 4x the median of the other gaps and above the
/// solver noise), ends the lowest band; further such gaps start new bands.
inline std::pair<std::vector<int>, bool> label_bands(const std::vector<double>& ev) {
  std::vector<int> labels(ev.size(), 0);
  if (ev.size() < 3) return {labels, false};
  std::vector<double> gaps(ev.size() - 1);
  for (std::size_t i = 0; i + 1 < ev.size(); ++i) gaps[i] = ev[i + 1] - ev[i];
  const auto top = static_cast<std::size_t>(std::max_element(gaps.begin(), gaps.end()) - gaps.begin());
  std::vector<double> rest;
  for (std::size_t i = 0; i < gaps.size(); ++i)
    if (i != top) rest.push_back(gaps[i]);
  std::nth_element(rest.begin(), rest.begin() + rest.size() / 2, rest.end());
  const double median = rest[rest.size() / 2];
  const double noise = 1e-6 * std::max(std::abs(ev.front()), std::abs(ev.back()));
  auto is_break = [&](double g) { return g > 4.0 * median && g > noise; };
  if (!is_break(gaps[top])) return {labels, false};
  int band = 0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    if (i == top || (i > top && is_break(gaps[i]))) ++band;
    labels[i + 1] = i < top ? 0 : band;
  }
  return {labels, true};
}

/// k eigenvalues of the magnetic operator nearest the shift (the lowest k by
/// default), by shift-invert block subspace iteration with Rayleigh-Ritz.
inline SpectrumReport magnetic_spectrum(const ScalarField& B, const GridSpec& grid, int k,
                                        const SpectrumOptions& opt = {}) {
  grid.validate();
  if (k < 1) throw InvalidArgument("eigenvalue count k must be positive");
  const int m = grid.interior();
  const int n = m * m;
  const int p = std::min(n, k + std::max(opt.extra_vectors, 1));
  if (k > n) throw InvalidArgument("k exceeds the number of grid unknowns");

  // a priori: resolve the magnetic length sqrt(hbar / B) by 4 spacings
  double bmax = 0.0, vmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid.N; ++i)
    for (int j = 0; j < grid.N; ++j) bmax = std::max(bmax, std::abs(detail::field_at(B, grid.coord(i), grid.coord(j))));
  if (bmax > 0.0 && !(grid.spacing() < std::sqrt(grid.hbar / bmax) / 4.0))
    throw GridTooCoarse("spacing " + std::to_string(grid.spacing()) + " does not resolve the magnetic length " +
                        std::to_string(std::sqrt(grid.hbar / bmax)) + " by 4 points");

  const SpMatC H = magnetic_operator(B, grid, opt.gauge, opt.i1_potential);
  for (int kk = 0; kk < H.outerSize(); ++kk)
    for (SpMatC::InnerIterator it(H, kk); it; ++it)
      if (it.row() == it.col()) vmin = std::min(vmin, it.value().real() - 4.0 * grid.hbar / (2.0 * grid.spacing() * grid.spacing()));

  // Default: the lowest k. Start below min V (the kinetic part is
  // nonnegative), then move the shift just under the first Ritz value once
  // it settles so that nearby edge states separate quickly.
  const bool lowest = std::isnan(opt.shift);
  double sigma = lowest ? std::min(0.0, vmin) - 1e-3 * std::max(1.0, bmax) : opt.shift;
  Eigen::SimplicialLDLT<SpMatC, Eigen::Lower> solver;
  solver.analyzePattern(H);
  auto factor = [&](double shift) {
    SpMatC M = H;
    for (int i = 0; i < n; ++i) M.coeffRef(i, i) -= shift;
    solver.factorize(M);
    if (solver.info() != Eigen::Success) throw SolverNoConvergence("factorization of H - shift failed");
  };
  factor(sigma);
  bool refined = !lowest;

  std::mt19937_64 rng(opt.seed);
  MatC X(n, p);
  for (int c = 0; c < p; ++c)
    for (int r = 0; r < n; ++r) X(r, c) = Cplx(detail::uniform_pm1(rng), detail::uniform_pm1(rng));
  X = detail::orthonormalize(X);

  SpectrumReport rep;
  rep.hbar = grid.hbar;
  rep.L = grid.L;
  rep.N = grid.N;
  rep.gauge = gauge_name(opt.gauge);

  std::vector<int> order(p);
  Eigen::VectorXd theta;
  Eigen::VectorXd res(p);
  Eigen::VectorXd prev = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::infinity());
  bool converged = false;
  for (int it = 1; it <= opt.max_iterations && !converged; ++it) {
    MatC Y = solver.solve(X);
    if (solver.info() != Eigen::Success) throw SolverNoConvergence("shift-invert solve failed");
    Y = detail::orthonormalize(Y);
    const MatC HY = H * Y;
    MatC A = Y.adjoint() * HY;
    A = 0.5 * (A + A.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<MatC> es(A);
    theta = es.eigenvalues();
    for (int i = 0; i < p; ++i) order[i] = i;
    if (!lowest)
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return std::abs(theta(a) - sigma) < std::abs(theta(b) - sigma); });
    MatC V(p, p);
    Eigen::VectorXd th(p);
    for (int i = 0; i < p; ++i) {
      V.col(i) = es.eigenvectors().col(order[i]);
      th(i) = theta(order[i]);
    }
    theta = th;
    X = Y * V;
    const MatC R = HY * V - X * theta.cast<Cplx>().asDiagonal();
    converged = true;
    for (int i = 0; i < p; ++i) {
      res(i) = R.col(i).norm();
      const double scale = std::max(1.0, std::abs(theta(i)));
      const bool settled = std::abs(theta(i) - prev(i)) <= opt.tol * scale && res(i) <= opt.cluster_tol * scale;
      if (i < k && res(i) > opt.tol * scale && !settled) converged = false;
    }
    if (!refined && (std::abs(theta(0) - prev(0)) <= 1e-4 * std::max(1.0, std::abs(theta(0))) || it >= 10)) {
      sigma = theta(0) - 0.01 * std::max(std::abs(theta(0)), theta(k - 1) - theta(0));
      factor(sigma);
      refined = true;
      converged = false;
    }
    prev = theta;
    rep.iterations = it;
  }
  if (!converged)
    throw SolverNoConvergence("subspace iteration did not converge in " + std::to_string(opt.max_iterations) +
                              " iterations");

  rep.shift = sigma;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return theta(a) < theta(b); });
  for (int i : idx) {
    rep.eigenvalues.push_back(theta(i));
    rep.residuals.push_back(res(i));
    const VecC psi = X.col(i);
    double wall = 0.0;
    for (int a = 1; a <= m; ++a)
      for (int b : {1, m}) {
        wall = std::max(wall, std::abs(psi((a - 1) * m + (b - 1))));
        wall = std::max(wall, std::abs(psi((b - 1) * m + (a - 1))));
      }
    rep.wall_amplitude.push_back(wall / psi.cwiseAbs().maxCoeff());
  }
  auto [labels, separated] = label_bands(rep.eigenvalues);
  rep.bands = labels;
  rep.bands_separated = separated;

  if (opt.wall_tolerance > 0.0)
    for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i)
      if (rep.wall_amplitude[i] > opt.wall_tolerance)
        throw GridTooCoarse("eigenstate " + std::to_string(i) + " has relative wall amplitude " +
                            std::to_string(rep.wall_amplitude[i]) + "; enlarge L");
  return rep;
}

// ---------------------------------------------------------------------------
// comparison against the slow spectrum

struct LandauLevel {
  int n = 0;
  double expected = 0.0;       // b (n + 1/2)
  int count = 0;               // computed eigenvalues within rel_window of expected
  double max_rel_error = 0.0;  // over those eigenvalues
  // inertia counts over the whole operator, -1 = not counted
  int window_multiplicity = -1;  // eigenvalues within rel_window of expected
  int tower_multiplicity = -1;   // eigenvalues from this level's window up to the next one's
};

struct LandauCheck {
  double b = 0.0;
  double flux_states = 0.0;  // b (2L)^2 / (2 pi hbar)
  double rel_window = 0.01;
  std::vector<LandauLevel> levels;
};

inline LandauCheck landau_check(const std::vector<double>& eigenvalues, double b, const GridSpec& grid,
                                double rel_window = 0.01) {
  LandauCheck c;
  c.b = b;
  c.rel_window = rel_window;
  c.flux_states = b * 4.0 * grid.L * grid.L / (2.0 * std::numbers::pi * grid.hbar);
  if (eigenvalues.empty()) return c;
  const double top = *std::max_element(eigenvalues.begin(), eigenvalues.end());
  for (int n = 0; b * (n + 0.5) <= top * (1.0 + rel_window); ++n) {
    LandauLevel lv;
    lv.n = n;
    lv.expected = b * (n + 0.5);
    for (double e : eigenvalues) {
      const double err = std::abs(e / lv.expected - 1.0);
      if (err <= rel_window) {
        ++lv.count;
        lv.max_rel_error = std::max(lv.max_rel_error, err);
      }
    }
    c.levels.push_back(lv);
  }
  return c;
}

/// Same, with multiplicities of the first `levels` levels counted on the
/// operator itself. Edge states of tower n rise from b(n + 1/2) and reach
/// b(n + 3/2) as their guiding centre reaches the wall, so the tower count
/// is the number of guiding centres that fit in the box.
inline LandauCheck landau_check(const std::vector<double>& eigenvalues, double b, const GridSpec& grid,
                                const SpMatC& H, int levels, double rel_window = 0.01) {
  LandauCheck c = landau_check(eigenvalues, b, grid, rel_window);
  for (int n = 0; n < levels; ++n) {
    if (static_cast<int>(c.levels.size()) <= n) {
      LandauLevel lv;
      lv.n = n;
      lv.expected = b * (n + 0.5);
      c.levels.push_back(lv);
    }
    LandauLevel& lv = c.levels[n];
    const int below = eigenvalues_below(H, lv.expected * (1.0 - rel_window));
    lv.window_multiplicity = eigenvalues_below(H, lv.expected * (1.0 + rel_window)) - below;
    lv.tower_multiplicity = eigenvalues_below(H, b * (n + 1.5) * (1.0 - rel_window)) - below;
  }
  return c;
}

struct BandComparison {
  std::vector<int> m;
  std::vector<double> eigenvalues;
  std::vector<double> predicted;      // (1/2) * spectrum of h
  std::vector<double> rel_errors;
  std::vector<double> predicted_alt;  // spectrum of h, the factor absorbed
  std::vector<double> rel_errors_alt;
  std::optional<LandauCheck> landau;  // set instead when h is constant
};

/// Spectrum of h(Q, P) with [Q, P] = i hbar, where it is known in closed form.
inline double slow_level(const ScalarField& h, double hbar, int m) {
  if (std::holds_alternative<Harmonic>(h.kind())) return hbar * (m + 0.5);
  if (const auto* s = std::get_if<ShiftedHarmonic>(&h.kind())) return s->c + hbar * (m + 0.5);
  throw InvalidArgument("no closed-form spectrum for h of kind " + h.name());
}

/// Matches the lowest band of `report` against (1/2) * spectrum of h.
/// `report` must come from the Cartesian-background field of this h. With
/// `lowest` > 0 the band is taken to be the lowest `lowest` eigenvalues
/// instead of being found from the gap structure.
inline BandComparison band_compare(SpectrumReport& report, const ScalarField& h, double hbar, int lowest = 0) {
  BandComparison out;
  if (const auto* c = std::get_if<Constant>(&h.kind())) {
    GridSpec g;
    g.L = report.L;
    g.N = report.N;
    g.hbar = report.hbar;
    out.landau = landau_check(report.eigenvalues, c->value, g);
    return out;
  }
  std::vector<std::size_t> low;
  if (lowest > 0) {
    if (lowest > static_cast<int>(report.eigenvalues.size()))
      throw InvalidArgument("report holds fewer than " + std::to_string(lowest) + " eigenvalues");
    for (int i = 0; i < lowest; ++i) low.push_back(static_cast<std::size_t>(i));
  } else {
    if (!report.bands_separated)
      throw BandIdentificationAmbiguous("no gap separates the lowest band among " +
                                        std::to_string(report.eigenvalues.size()) + " eigenvalues");
    for (std::size_t i = 0; i < report.eigenvalues.size(); ++i)
      if (report.bands[i] == 0) low.push_back(i);
  }
  if (low.size() < 3)
    throw BandIdentificationAmbiguous("lowest band has " + std::to_string(low.size()) + " levels, need 3");
  report.predicted.assign(report.eigenvalues.size(), std::numeric_limits<double>::quiet_NaN());
  report.rel_errors.assign(report.eigenvalues.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t mi = 0; mi < low.size(); ++mi) {
    const int lvl = static_cast<int>(mi);
    const double e = report.eigenvalues[low[mi]];
    const double full = slow_level(h, hbar, lvl);
    out.m.push_back(lvl);
    out.eigenvalues.push_back(e);
    out.predicted.push_back(0.5 * full);
    out.rel_errors.push_back(std::abs(e / (0.5 * full) - 1.0));
    out.predicted_alt.push_back(full);
    out.rel_errors_alt.push_back(std::abs(e / full - 1.0));
    report.predicted[low[mi]] = 0.5 * full;
    report.rel_errors[low[mi]] = out.rel_errors.back();
  }
  return out;
}

}  // namespace shadowflow::quantum
