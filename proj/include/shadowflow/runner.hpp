#pragma once

// Experiment orchestration behind the command-line tool: one function per
// command, each writing CSV/JSON files into an output directory.
//
// Exit codes: 0 success, 1 configuration error, 2 numerical failure (the
// files produced so far are kept and error.json describes the failure).

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "shadowflow/config.hpp"
#include "shadowflow/dynamics.hpp"
#include "shadowflow/guiding_center.hpp"
#include "shadowflow/oscillator.hpp"
#include "shadowflow/quantum.hpp"
#include "shadowflow/sweep.hpp"

namespace shadowflow::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kConvention =
    "omega = [[0,-I],[I,0]]; reference flow dxi/dt = (dh/dp, -dh/dq); metric g = gamma/h; "
    "magnetic field B = d1 theta2 - d2 theta1";

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"simulate", "oracle", "sweep", "spectrum", "fig1"};
  return c;
}

struct RunResult {
  int exit_code = 0;
  std::vector<std::string> files;  // in the order written
  std::string error;               // set when exit_code != 0
};

/// Tool version, config hash and sign convention, as written into every file.
inline std::string version_and_provenance(const config::ExperimentConfig& cfg) {
  return std::string("shadowflow ") + kVersion + "\nconfig_hash " + config::config_hash(cfg) + "\nconvention " +
         kConvention + "\n";
}

/// 17 significant digits: every double reads back exactly.
inline std::string csv_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

class Writer {
 public:
  Writer(const std::filesystem::path& dir, const config::ExperimentConfig& cfg, std::string command)
      : dir_(dir), cfg_(cfg), command_(std::move(command)), hash_(config::config_hash(cfg)) {
    std::filesystem::create_directories(dir_);
  }

  void csv(const std::string& name, const std::vector<std::string>& columns,
           const std::vector<std::vector<double>>& rows) {
    std::ostringstream o;
    o << "# shadowflow " << kVersion << "\n# command " << command_ << "\n# config_hash " << hash_
      << "\n# convention " << kConvention << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) o << (i ? "," : "") << columns[i];
    o << "\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) o << (i ? "," : "") << csv_number(row[i]);
      o << "\n";
    }
    put(name, o.str());
  }

  void json(const std::string& name, const Json& payload) {
    Json doc;
    doc["provenance"] = {{"tool", "shadowflow"},
                         {"version", kVersion},
                         {"command", command_},
                         {"config_hash", hash_},
                         {"convention", kConvention}};
    doc["config"] = config::to_text(cfg_, false);
    for (const auto& [k, v] : payload.items()) doc[k] = v;
    put(name, doc.dump(2) + "\n");
  }

  const std::vector<std::string>& files() const { return files_; }

 private:
  void put(const std::string& name, const std::string& text) {
    std::ofstream f(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + (dir_ / name).string());
    f << text;
    if (!f) throw std::runtime_error("write failed for " + (dir_ / name).string());
    files_.push_back(name);
  }

  std::filesystem::path dir_;
  const config::ExperimentConfig& cfg_;
  std::string command_;
  std::string hash_;
  std::vector<std::string> files_;
};

inline Vec to_vec(const std::vector<double>& v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

inline Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline Json numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number_or_null(x));
  return a;
}

inline bool numerical(const Error& e) {
  static const std::vector<std::string> kinds{"MetricSingular",      "StepSizeUnderflow",   "DegenerateFastMotion",
                                              "SolverNoConvergence", "GridTooCoarse",       "BandIdentificationAmbiguous",
                                              "EmptyOverlap",        "InsufficientData"};
  for (const auto& k : kinds)
    if (e.kind() == k) return true;
  return false;
}

inline Json error_json(const std::string& kind, const std::string& message, const std::vector<std::string>& partial) {
  Json e;
  e["error"] = {{"kind", kind}, {"message", message}};
  e["partial_outputs"] = partial;
  return e;
}

// -- extended-oscillator runs shared by oracle and fig1 ----------------------

struct OscillatorRun {
  oscillator::Params params;  // t0 = 0
  oscillator::Regime regime = oscillator::Regime::Bound;
  double horizon = 0.0;
  double sample_interval = 0.0;
  Trajectory traj;
  oscillator::Params printed, rederived;  // phased through the initial state
  std::vector<double> r2, r2_printed, r2_rederived;
  double max_rel_error_printed = 0.0;
  double max_rel_error_rederived = 0.0;
};

inline OscillatorRun oscillator_run(double p, double E, double l, const std::vector<double>& start, double horizon,
                                    double rel_tol, double abs_tol, double samples_per_period) {
  OscillatorRun run;
  run.params = oscillator::Params::from_p(p, E, l);
  run.regime = oscillator::classify(run.params);
  const double mu = run.params.mu;
  const double period = run.regime == oscillator::Regime::Bound ? oscillator::radial_period(run.params)
                                                                 : std::numbers::pi * mu / l;
  run.horizon = horizon;
  run.sample_interval = std::min({0.05, period / samples_per_period, horizon});

  const MetricField m(ScalarField::harmonic());
  const SymplecticStructure s(1);
  const ExtendedState init = oscillator::initial_state(mu, E, l, PhaseSpacePoint(to_vec(start)));
  IntegratorConfig ic;
  ic.mu = mu;
  ic.rel_tol = rel_tol;
  ic.abs_tol = abs_tol;
  ic.horizon = run.horizon;
  ic.sample_interval = run.sample_interval;
  run.traj = integrate_extended(m, s, ic, init);
  run.printed = oscillator::phase_from_state(mu, init, oscillator::Form::Printed);
  run.rederived = oscillator::phase_from_state(mu, init, oscillator::Form::Rederived);
  for (const auto& smp : run.traj.samples) {
    const Vec& x = smp.state.x.coords();
    const double r2 = x.squaredNorm();
    const double a = oscillator::exact_r_squared(run.printed, smp.t, oscillator::Form::Printed);
    const double b = oscillator::exact_r_squared(run.rederived, smp.t, oscillator::Form::Rederived);
    run.r2.push_back(r2);
    run.r2_printed.push_back(a);
    run.r2_rederived.push_back(b);
    run.max_rel_error_printed = std::max(run.max_rel_error_printed, std::abs(r2 / a - 1.0));
    run.max_rel_error_rederived = std::max(run.max_rel_error_rederived, std::abs(r2 / b - 1.0));
  }
  return run;
}

inline Json oscillator_summary(const OscillatorRun& run) {
  Json j;
  j["p"] = run.params.p_param();
  j["mu"] = run.params.mu;
  j["E"] = run.params.E;
  j["l"] = run.params.l;
  j["regime"] = oscillator::to_string(run.regime);
  j["horizon"] = run.horizon;
  j["sample_interval"] = run.sample_interval;
  j["termination"] = to_string(run.traj.termination);
  j["t_end"] = run.traj.t_end();
  j["samples"] = run.traj.samples.size();
  j["t0_printed"] = run.printed.t0;
  j["t0_rederived"] = run.rederived.t0;
  j["max_rel_error_printed"] = number_or_null(run.max_rel_error_printed);
  j["max_rel_error_rederived"] = number_or_null(run.max_rel_error_rederived);
  return j;
}

// -- commands ----------------------------------------------------------------

inline RunResult run_simulate(const config::ExperimentConfig& cfg, Writer& w) {
  const auto& d = cfg.dynamics;
  if (d.v.empty() && (cfg.system.h != "harmonic" || cfg.system.n != 1))
    throw ValidationError("dynamics.v", "needed unless h = harmonic with n = 1, where (E, l) fix the velocity");
  const MetricField m = cfg.system.metric();
  const SymplecticStructure s(cfg.system.n);
  const PhaseSpacePoint x0(to_vec(d.xi));
  const ExtendedState init =
      d.v.empty() ? oscillator::initial_state(d.mu, d.E, d.l, x0, d.inward) : ExtendedState(x0, to_vec(d.v));

  IntegratorConfig ic;
  ic.mu = d.mu;
  ic.rel_tol = d.rel_tol;
  ic.abs_tol = d.abs_tol;
  ic.max_step = d.max_step;
  ic.horizon = d.horizon;
  ic.sample_interval = d.sample_interval;
  if (ic.sample_interval == 0.0) {
    double gyro = std::numeric_limits<double>::infinity();
    try {
      gyro = gyro_period_estimate(m, s, d.mu, init);
    } catch (const DegenerateFastMotion&) {
    }
    ic.sample_interval = std::min({0.05, gyro / 16.0, d.horizon});
  }

  const Trajectory tr = integrate_extended(m, s, ic, init);
  const int dim = x0.dim();
  std::vector<std::string> cols{"t"};
  for (const char* name : {"xi", "v", "Pi", "X"})
    for (int i = 1; i <= dim; ++i) cols.push_back(std::string(name) + "_" + std::to_string(i));
  cols.push_back("J");
  cols.push_back("E_ext");
  std::vector<std::vector<double>> rows;
  rows.reserve(tr.samples.size());
  for (const auto& smp : tr.samples) {
    std::vector<double> row{smp.t};
    for (const Vec* v : {&smp.state.x.coords(), &smp.state.v, &smp.gc.Pi, &smp.gc.X})
      row.insert(row.end(), v->data(), v->data() + v->size());
    row.push_back(smp.gc.J);
    row.push_back(smp.gc.E_ext);
    rows.push_back(std::move(row));
  }
  w.csv("trajectory.csv", cols, rows);

  Json out;
  out["mu"] = d.mu;
  out["n"] = cfg.system.n;
  out["h"] = m.h().name();
  out["horizon"] = d.horizon;
  out["sample_interval"] = ic.sample_interval;
  out["termination"] = to_string(tr.termination);
  out["t_end"] = tr.t_end();
  out["samples"] = tr.samples.size();
  out["accepted_steps"] = tr.stats.accepted;
  out["rejected_steps"] = tr.stats.rejected;
  const GuidingDecomposition& gc0 = tr.samples.front().gc;
  double drift = 0.0, action_var = 0.0;
  const double h0 = m.h().value(gc0.X);
  for (const auto& smp : tr.samples) {
    drift = std::max(drift, std::abs(smp.gc.E_ext / gc0.E_ext - 1.0));
    const double hx = m.h().value(smp.gc.X);
    if (h0 > 0.0 && hx > 0.0) action_var = std::max(action_var, std::abs((smp.gc.E_ext / hx) / (gc0.E_ext / h0) - 1.0));
  }
  out["energy_drift"] = number_or_null(drift);
  out["action_variation"] = number_or_null(action_var);

  if (d.reference && h0 > 0.0 && gc0.E_ext > 0.0) {
    const double rate = gc0.E_ext / h0;
    const Trajectory ref = integrate_reference(m.h(), s, ic, PhaseSpacePoint(gc0.X), rate);
    std::vector<std::string> rcols{"t"};
    for (int i = 1; i <= dim; ++i) rcols.push_back("X_" + std::to_string(i));
    rcols.push_back("h");
    std::vector<std::vector<double>> rrows;
    for (const auto& smp : ref.samples) {
      std::vector<double> row{smp.t};
      const Vec& x = smp.state.x.coords();
      row.insert(row.end(), x.data(), x.data() + x.size());
      row.push_back(smp.gc.E_ext);
      rrows.push_back(std::move(row));
    }
    w.csv("reference.csv", rcols, rrows);
    const Deviation dev = deviation_from_reference(tr, ref);
    out["reference"] = {{"rate", rate},
                        {"termination", to_string(ref.termination)},
                        {"t_end", ref.t_end()},
                        {"sup_X_error", dev.sup_X_error},
                        {"sup_xi_error", dev.sup_xi_error},
                        {"J_variation", dev.J_relative_variation}};
  }
  w.json("simulate.json", out);

  RunResult r;
  if (tr.termination != Termination::Completed) {
    r.exit_code = 2;
    r.error = tr.message;
    w.json("error.json", error_json(to_string(tr.termination), tr.message, w.files()));
  }
  return r;
}

inline RunResult run_oracle(const config::ExperimentConfig& cfg, Writer& w) {
  const auto& o = cfg.oracle;
  const auto prm = oscillator::Params::from_p(o.p, o.E, o.l);
  const double horizon =
      oscillator::classify(prm) == oscillator::Regime::Bound ? o.periods * oscillator::radial_period(prm) : o.horizon;
  const OscillatorRun run = oscillator_run(o.p, o.E, o.l, o.start, horizon, o.rel_tol, o.abs_tol, 32.0);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < run.traj.samples.size(); ++i) {
    const auto& smp = run.traj.samples[i];
    rows.push_back({smp.t, smp.state.x.q(0), smp.state.x.p(0), run.r2[i], run.r2_printed[i], run.r2_rederived[i]});
  }
  w.csv("oracle.csv", {"t", "q", "p", "r2", "r2_printed", "r2_rederived"}, rows);
  Json out = oscillator_summary(run);
  if (run.regime == oscillator::Regime::Bound) out["periods"] = o.periods;
  w.json("oracle.json", out);

  RunResult r;
  if (run.traj.termination != Termination::Completed) {
    r.exit_code = 2;
    r.error = run.traj.message;
    w.json("error.json", error_json(to_string(run.traj.termination), run.traj.message, w.files()));
  }
  return r;
}

inline RunResult run_fig1(const config::ExperimentConfig& cfg, Writer& w) {
  const auto& f = cfg.fig1;
  Json index;
  index["panels"] = Json::array();
  if (!f.enabled) {
    index["enabled"] = false;
    w.json("fig1.json", index);
    return {};
  }
  index["enabled"] = true;
  std::vector<OscillatorRun> runs(f.p.size());
  parallel_for(f.p.size(), [&](std::size_t i) {
    runs[i] = oscillator_run(f.p[i], f.E, f.l, f.start, f.horizon, f.rel_tol, f.abs_tol, f.samples_per_period);
  });
  std::string failed_kind, failed_message;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& run = runs[i];
    char name[32];
    std::snprintf(name, sizeof name, "fig1_panel_%zu.csv", i + 1);
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < run.traj.samples.size(); ++k) {
      const auto& smp = run.traj.samples[k];
      rows.push_back({smp.t, smp.state.x.q(0), smp.state.x.p(0), std::sqrt(run.r2[k]), run.r2_printed[k],
                      run.r2_rederived[k]});
    }
    w.csv(name, {"t", "q", "p", "r", "r2_exact", "r2_rederived"}, rows);
    Json panel = oscillator_summary(run);
    panel["file"] = name;
    index["panels"].push_back(panel);
    if (run.traj.termination != Termination::Completed && failed_kind.empty()) {
      failed_kind = to_string(run.traj.termination);
      failed_message = "panel " + std::to_string(i + 1) + ": " + run.traj.message;
    }
  }
  w.json("fig1.json", index);
  RunResult r;
  if (!failed_kind.empty()) {
    r.exit_code = 2;
    r.error = failed_message;
    w.json("error.json", error_json(failed_kind, failed_message, w.files()));
  }
  return r;
}

inline RunResult run_sweep_command(const config::ExperimentConfig& cfg, Writer& w) {
  const auto& c = cfg.sweep;
  SweepSpec spec;
  spec.mu = c.mu;
  spec.E = c.E;
  spec.l = c.l;
  spec.start = to_vec(c.start);
  spec.horizon = c.horizon;
  spec.rel_tol = c.rel_tol;
  spec.abs_tol = c.abs_tol;
  spec.samples_per_gyration = c.samples_per_gyration;
  const SweepReport rep = run_sweep(spec);

  std::vector<std::vector<double>> rows;
  for (const auto& p : rep.points)
    rows.push_back({p.mu, p.p_param, p.sup_X_error, p.sup_xi_error, p.J_variation, p.J_raw_variation,
                    p.separation_residual, p.energy_drift, p.mean_step, static_cast<double>(p.accepted_steps), p.t_end});
  w.csv("sweep.csv",
        {"mu", "p", "sup_X_error", "sup_xi_error", "J_variation", "J_raw_variation", "separation_residual",
         "energy_drift", "mean_step", "accepted_steps", "t_end"},
        rows);

  auto fits = [](const std::map<std::string, SlopeFit>& m) {
    Json slopes, residuals, errors = Json::object();
    for (const auto& name : sweep_metric_names()) {
      const SlopeFit& f = m.at(name);
      slopes[name] = f.ok ? number_or_null(f.fit.slope) : Json(nullptr);
      residuals[name] = f.ok ? number_or_null(f.fit.residual) : Json(nullptr);
      if (!f.ok) errors[name] = f.error;
    }
    return std::tuple{slopes, residuals, errors};
  };
  Json out;
  std::vector<double> mu, sx, jv;
  for (const auto& p : rep.points) {
    mu.push_back(p.mu);
    sx.push_back(p.sup_X_error);
    jv.push_back(p.J_variation);
  }
  out["mu"] = numbers(mu);
  out["sup_X_error"] = numbers(sx);
  out["J_variation"] = numbers(jv);
  auto [slopes, residuals, errors] = fits(rep.fits);
  out["slopes"] = slopes;
  out["residuals"] = residuals;
  out["fit_errors"] = errors;
  auto [bslopes, bresiduals, berrors] = fits(rep.fits_bound_only);
  out["bound_only"] = {{"slopes", bslopes}, {"residuals", bresiduals}, {"fit_errors", berrors}};
  Json pts = Json::array();
  std::string failed;
  for (const auto& p : rep.points) {
    pts.push_back({{"mu", p.mu},
                   {"p", p.p_param},
                   {"regime", oscillator::to_string(p.regime)},
                   {"termination", to_string(p.termination)},
                   {"t_end", p.t_end},
                   {"sample_interval", p.sample_interval},
                   {"energy_drift", number_or_null(p.energy_drift)},
                   {"accepted_steps", p.accepted_steps}});
    if (p.termination != Termination::Completed && failed.empty())
      failed = "mu = " + csv_number(p.mu) + " ended with " + to_string(p.termination);
  }
  out["points"] = pts;
  w.json("sweep.json", out);

  RunResult r;
  if (!failed.empty()) {
    r.exit_code = 2;
    r.error = failed;
    w.json("error.json", error_json("MetricSingular", failed, w.files()));
  }
  return r;
}

inline Json spectrum_json(const quantum::SpectrumReport& rep) {
  Json j;
  j["hbar"] = rep.hbar;
  j["grid"] = {{"L", rep.L}, {"N", rep.N}};
  j["gauge"] = rep.gauge;
  j["shift"] = number_or_null(rep.shift);
  j["eigenvalues"] = numbers(rep.eigenvalues);
  j["bands"] = rep.bands;
  j["bands_separated"] = rep.bands_separated;
  j["predicted"] = numbers(rep.predicted);
  j["rel_errors"] = numbers(rep.rel_errors);
  j["residuals"] = numbers(rep.residuals);
  j["wall_amplitude"] = numbers(rep.wall_amplitude);
  j["iterations"] = rep.iterations;
  return j;
}

inline RunResult run_spectrum(const config::ExperimentConfig& cfg, Writer& w) {
  const auto& c = cfg.spectrum;
  if (cfg.system.n != 1) throw ValidationError("system.n", "the spectrum command needs n = 1");
  const ScalarField B = cfg.system.field();
  quantum::GridSpec grid;
  grid.L = c.L;
  grid.N = c.N;
  grid.hbar = c.hbar;
  quantum::SpectrumOptions opt;
  opt.gauge = c.gauge == "landau" ? quantum::GaugeChoice::Landau : quantum::GaugeChoice::Symmetric;
  opt.i1_potential = c.i1_potential;
  if (c.shift) opt.shift = *c.shift;
  opt.wall_tolerance = c.wall_tolerance;

  quantum::SpectrumReport rep = quantum::magnetic_spectrum(B, grid, c.k, opt);
  Json out = spectrum_json(rep);
  out["i1_potential"] = c.i1_potential;
  out["field"] = B.name();

  RunResult r;
  if (const auto* k = std::get_if<Constant>(&B.kind())) {
    const quantum::SpMatC H = quantum::magnetic_operator(B, grid, opt.gauge, opt.i1_potential);
    const quantum::LandauCheck lc = quantum::landau_check(rep.eigenvalues, k->value, grid, H, c.landau_levels);
    Json levels = Json::array();
    for (const auto& lv : lc.levels)
      levels.push_back({{"n", lv.n},
                        {"expected", lv.expected},
                        {"count", lv.count},
                        {"max_rel_error", lv.max_rel_error},
                        {"window_multiplicity", lv.window_multiplicity},
                        {"tower_multiplicity", lv.tower_multiplicity}});
    out["landau"] = {
        {"b", lc.b}, {"flux_states", lc.flux_states}, {"rel_window", lc.rel_window}, {"levels", levels}};
  } else if (c.slow_h != "none") {
    const ScalarField slow =
        c.slow_h == "harmonic" ? ScalarField::harmonic() : ScalarField::shifted_harmonic(c.slow_c);
    try {
      const quantum::BandComparison bc = quantum::band_compare(rep, slow, c.hbar, c.compare_levels);
      out["predicted"] = numbers(rep.predicted);
      out["rel_errors"] = numbers(rep.rel_errors);
      out["comparison"] = {{"slow_h", slow.name()},
                           {"m", bc.m},
                           {"eigenvalues", numbers(bc.eigenvalues)},
                           {"predicted", numbers(bc.predicted)},
                           {"rel_errors", numbers(bc.rel_errors)},
                           {"predicted_alt", numbers(bc.predicted_alt)},
                           {"rel_errors_alt", numbers(bc.rel_errors_alt)}};
    } catch (const BandIdentificationAmbiguous& e) {
      w.json("spectrum.json", out);
      r.exit_code = 2;
      r.error = e.what();
      w.json("error.json", error_json(e.kind(), e.what(), w.files()));
      return r;
    }
  }
  w.json("spectrum.json", out);
  return r;
}

}  // namespace detail

/// Runs `command` and writes its files into `out`. Configuration problems
/// surface as exit code 1, numerical failures as 2 with error.json.
inline RunResult run(const config::ExperimentConfig& cfg, const std::string& command,
                     const std::filesystem::path& out) {
  bool known = false;
  for (const auto& c : commands()) known = known || c == command;
  if (!known) return {1, {}, "unknown command '" + command + "'"};

  detail::Writer w(out, cfg, command);
  RunResult r;
  try {
    if (command == "simulate") r = detail::run_simulate(cfg, w);
    if (command == "oracle") r = detail::run_oracle(cfg, w);
    if (command == "fig1") r = detail::run_fig1(cfg, w);
    if (command == "sweep") r = detail::run_sweep_command(cfg, w);
    if (command == "spectrum") r = detail::run_spectrum(cfg, w);
  } catch (const ValidationError& e) {
    r = {1, {}, e.what()};
  } catch (const Error& e) {
    if (!detail::numerical(e)) {
      r = {1, {}, e.what()};
    } else {
      r = {2, {}, e.what()};
      w.json("error.json", detail::error_json(e.kind(), e.what(), w.files()));
    }
  }
  r.files = w.files();
  return r;
}

}  // namespace shadowflow::cli
