#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

#include "shadowflow/errors.hpp"
#include "shadowflow/linalg.hpp"

namespace shadowflow::ode {

struct Options {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 1e300;
  double initial_step = 0.0;  // 0: estimate from the first derivative
  std::size_t max_steps = 50'000'000;
};

struct Stats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evaluations = 0;
  // Accepted steps that were chosen by the error controller, i.e. not cut
  // short to land on an output time.
  std::size_t free_steps = 0;
  double free_step_sum = 0.0;

  double mean_free_step() const { return free_steps ? free_step_sum / free_steps : 0.0; }
};

/// Dormand-Prince 5(4) embedded pair with FSAL and standard step control.
///
/// The right-hand side may throw MetricSingular when a trial stage leaves
/// the admissible domain; the step is then rejected and shrunk. Only if the
/// step collapses to the roundoff floor is the exception propagated.
class DormandPrince54 {
 public:
  explicit DormandPrince54(Options opt) : opt_(opt) {
    if (!(opt_.rel_tol > 0.0 && opt_.rel_tol < 1.0) || !(opt_.abs_tol > 0.0 && opt_.abs_tol < 1.0))
      throw InvalidArgument("tolerances must lie in (0, 1)");
    if (!(opt_.max_step > 0.0)) throw InvalidArgument("max_step must be positive");
  }

  const Stats& stats() const noexcept { return stats_; }
  double proposed_step() const noexcept { return h_; }

  /// Advance (t, y) to exactly t_end (t_end > t). Works with any callable
  /// f(double t, const Vec& y) -> Vec.
  template <class Rhs>
  void advance(Rhs&& f, double& t, Vec& y, double t_end) {
    if (!(t_end > t)) return;
    if (!have_k1_ || k1_.size() != y.size() || t != t_k1_) {
      k1_ = f(t, y);
      ++stats_.rhs_evaluations;
      have_k1_ = true;
      t_k1_ = t;
    }
    if (h_ <= 0.0) h_ = opt_.initial_step > 0.0 ? opt_.initial_step : initial_step(y, t_end - t);

    while (t < t_end) {
      if (stats_.accepted + stats_.rejected >= opt_.max_steps)
        throw StepSizeUnderflow("step budget exhausted at t = " + std::to_string(t));
      double h = std::min(h_, opt_.max_step);
      bool clamped = false;
      if (t + 1.01 * h >= t_end) {
        h = t_end - t;
        clamped = h < h_;
      }
      const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
      if (h < floor) throw StepSizeUnderflow("step size underflow at t = " + std::to_string(t));

      double err = 0.0;
      bool stage_failed = false;
      try {
        err = attempt(f, t, y, h);
      } catch (const MetricSingular&) {
        if (h <= 4.0 * floor) throw;
        stage_failed = true;
      }
      if (stage_failed || !(err <= 1.0) || !y_new_.allFinite()) {
        ++stats_.rejected;
        const double fac = stage_failed || !std::isfinite(err)
                               ? 0.25
                               : std::max(0.2, 0.9 * std::pow(err, -0.2));
        h_ = h * fac;
        continue;
      }

      ++stats_.accepted;
      if (!clamped) {
        ++stats_.free_steps;
        stats_.free_step_sum += h;
      }
      t = (h == t_end - t) ? t_end : t + h;
      y.swap(y_new_);
      k1_.swap(k7_);  // FSAL
      t_k1_ = t;
      const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      // a clamped step says nothing about the achievable step size
      if (!clamped) h_ = h * fac;
    }
  }

  /// Forget the cached derivative (call when the right-hand side changes).
  void reset() {
    have_k1_ = false;
    h_ = 0.0;
  }

 private:
  template <class Rhs>
  double attempt(Rhs& f, double t, const Vec& y, double h) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // fifth minus fourth order weights
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const Vec k2 = f(t + c2 * h, y + h * a21 * k1_);
    const Vec k3 = f(t + c3 * h, y + h * (a31 * k1_ + a32 * k2));
    const Vec k4 = f(t + c4 * h, y + h * (a41 * k1_ + a42 * k2 + a43 * k3));
    const Vec k5 = f(t + c5 * h, y + h * (a51 * k1_ + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec k6 = f(t + h, y + h * (a61 * k1_ + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    y_new_ = y + h * (b1 * k1_ + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    k7_ = f(t + h, y_new_);
    stats_.rhs_evaluations += 6;

    const Vec err_vec = h * (e1 * k1_ + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7_);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double sc = opt_.abs_tol + opt_.rel_tol * std::max(std::abs(y(i)), std::abs(y_new_(i)));
      const double r = err_vec(i) / sc;
      acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(y.size()));
  }

  double initial_step(const Vec& y, double span) const {
    double d0 = 0.0, d1 = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double sc = opt_.abs_tol + opt_.rel_tol * std::abs(y(i));
      d0 += (y(i) / sc) * (y(i) / sc);
      d1 += (k1_(i) / sc) * (k1_(i) / sc);
    }
    d0 = std::sqrt(d0 / y.size());
    d1 = std::sqrt(d1 / y.size());
    double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    return std::min({h, span, opt_.max_step});
  }

  Options opt_;
  Stats stats_;
  double h_ = 0.0;
  bool have_k1_ = false;
  double t_k1_ = 0.0;
  Vec k1_, k7_, y_new_;
};

}  // namespace shadowflow::ode
