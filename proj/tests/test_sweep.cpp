#include <gtest/gtest.h>

#include <cstdlib>

#include "shadowflow/sweep.hpp"

using namespace shadowflow;

namespace {
const SweepReport& default_report() {
  static const SweepReport rep = run_sweep(SweepSpec{});
  return rep;
}
}  // namespace

TEST(Sweep, SpecValidation) {
  SweepSpec s;
  EXPECT_NO_THROW(s.validate());
  s.mu = {0.01, 0.02};
  EXPECT_THROW(s.validate(), InvalidArgument);
  s.mu = {0.02, 0.02};
  EXPECT_THROW(s.validate(), InvalidArgument);
  s.mu = {};
  EXPECT_THROW(s.validate(), InvalidArgument);
  s = SweepSpec{};
  s.l = -1;
  EXPECT_THROW(s.validate(), InvalidArgument);
}

TEST(Sweep, ClassifiesEachPoint) {
  const auto& rep = default_report();
  ASSERT_EQ(rep.points.size(), 6u);
  EXPECT_DOUBLE_EQ(rep.points[0].p_param, 1.6);
  EXPECT_EQ(rep.points[0].regime, oscillator::Regime::UnboundExponential);
  for (std::size_t i = 1; i < rep.points.size(); ++i) EXPECT_EQ(rep.points[i].regime, oscillator::Regime::Bound);
}

TEST(Sweep, GuidingCenterErrorShrinksMonotonically) {
  const auto& rep = default_report();
  for (std::size_t i = 1; i < rep.points.size(); ++i) {
    EXPECT_LT(rep.points[i].sup_X_error, rep.points[i - 1].sup_X_error);
    EXPECT_LT(rep.points[i].J_variation, rep.points[i - 1].J_variation);
  }
  EXPECT_TRUE(rep.fits.at("sup_X_error").ok);
  EXPECT_GE(rep.fits.at("sup_X_error").fit.slope, 0.5);
  EXPECT_GE(rep.fits.at("J_variation").fit.slope, 0.8);
  EXPECT_GT(rep.fits.at("separation_residual").fit.slope, 0.0);
}

TEST(Sweep, EnergyConservedAtEveryPoint) {
  for (const auto& p : default_report().points) {
    EXPECT_EQ(p.termination, Termination::Completed);
    EXPECT_LT(p.energy_drift, 1e-8) << p.mu;
  }
}

TEST(Sweep, AcceptedStepScalesLinearlyWithMu) {
  const auto& f = default_report().fits.at("mean_step");
  ASSERT_TRUE(f.ok);
  EXPECT_NEAR(f.fit.slope, 1.0, 0.2);
}

TEST(Sweep, BoundOnlyFitLacksRange) {
  // dropping the unbound mu = 0.1 point leaves 1.4 decades
  const auto& f = default_report().fits_bound_only.at("sup_X_error");
  EXPECT_FALSE(f.ok);
  EXPECT_NE(f.error.find("1.5 decades"), std::string::npos);
}

TEST(Sweep, DeterministicAcrossWorkerCounts) {
  SweepSpec s;
  s.mu = {0.05, 0.02, 0.01, 0.005};
  setenv("SHADOWFLOW_THREADS", "1", 1);
  const auto a = run_sweep(s);
  setenv("SHADOWFLOW_THREADS", "3", 1);
  const auto b = run_sweep(s);
  unsetenv("SHADOWFLOW_THREADS");
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    EXPECT_EQ(a.points[i].sup_X_error, b.points[i].sup_X_error);
    EXPECT_EQ(a.points[i].J_variation, b.points[i].J_variation);
    EXPECT_EQ(a.points[i].accepted_steps, b.points[i].accepted_steps);
  }
}

TEST(Parallel, WorkerCountFromEnvironment) {
  setenv("SHADOWFLOW_THREADS", "5", 1);
  EXPECT_EQ(worker_count(), 5u);
  setenv("SHADOWFLOW_THREADS", "junk", 1);
  EXPECT_GE(worker_count(), 1u);
  unsetenv("SHADOWFLOW_THREADS");
  std::vector<int> out(50, 0);
  parallel_for(out.size(), [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], static_cast<int>(i * i));
  EXPECT_THROW(parallel_for(4, [](std::size_t i) { if (i == 2) throw InvalidArgument("x"); }), InvalidArgument);
}
