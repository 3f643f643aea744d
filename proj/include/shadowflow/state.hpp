#pragma once

#include <string>
#include <vector>

#include "shadowflow/errors.hpp"
#include "shadowflow/geometry.hpp"
#include "shadowflow/ode.hpp"

namespace shadowflow {

/// Position and velocity (xi, xidot) of the extended 2n-dof system.
struct ExtendedState {
  ExtendedState(PhaseSpacePoint x_, Vec v_) : x(std::move(x_)), v(std::move(v_)) {
    if (v.size() != x.dim()) throw InvalidArgument("velocity dimension does not match position");
    if (!v.allFinite()) throw InvalidArgument("velocity has non-finite entries");
  }
  PhaseSpacePoint x;
  Vec v;
};

/// Fast/slow split at one instant.
struct GuidingDecomposition {
  Vec Pi;            // kinematical momenta, mu^(1/2) g_ij v^j
  Vec X;             // guiding center, xi + mu^(1/2) omega_bar Pi
  double J = 0.0;    // 1/2 sum Pi_i^2
  double E_ext = 0.0;  // conserved energy of the system that produced the sample
};

struct IntegratorConfig {
  double mu = 1.0;
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 1e300;
  double horizon = 1.0;
  double sample_interval = 0.05;

  void validate() const {
    if (!(mu > 0.0)) throw InvalidArgument("mu must be positive");
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw InvalidArgument("rel_tol must lie in (0, 1)");
    if (!(abs_tol > 0.0 && abs_tol < 1.0)) throw InvalidArgument("abs_tol must lie in (0, 1)");
    if (!(max_step > 0.0)) throw InvalidArgument("max_step must be positive");
    if (!(horizon > 0.0)) throw InvalidArgument("horizon must be positive");
    if (!(sample_interval > 0.0 && sample_interval <= horizon))
      throw InvalidArgument("sample_interval must lie in (0, horizon]");
  }

  ode::Options ode_options() const {
    ode::Options o;
    o.rel_tol = rel_tol;
    o.abs_tol = abs_tol;
    o.max_step = max_step;
    return o;
  }
};

enum class Termination { Completed, MetricSingular, StepSizeUnderflow };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::Completed: return "completed";
    case Termination::MetricSingular: return "MetricSingular";
    case Termination::StepSizeUnderflow: return "StepSizeUnderflow";
  }
  return "unknown";
}

struct Sample {
  double t = 0.0;
  ExtendedState state;
  GuidingDecomposition gc;
};

struct Trajectory {
  std::vector<Sample> samples;  // strictly increasing t, first at t = 0
  IntegratorConfig config;
  Termination termination = Termination::Completed;
  std::string message;
  ode::Stats stats;

  bool empty() const noexcept { return samples.empty(); }
  double t_end() const { return samples.empty() ? 0.0 : samples.back().t; }
};

}  // namespace shadowflow
