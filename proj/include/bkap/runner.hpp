#pragma once

// Batch experiment runner: dispatches a validated RunConfig to the matching
// solver pipeline and writes the CSV artifacts plus a manifest of the
// resolved parameters.  All artifact content is assembled in memory first and
// written in one pass, so a solver failure leaves no partial output; a write
// failure removes everything written so far.
//
// CSV schemas (header row mandatory, doubles in full-precision scientific
// notation, LF line endings):
//   time series: time,species,value
//   profiles:    x,quantity,statistic,value   (statistic: mean | sd | value)
//   studies:     <parameter>,quantity,statistic,error   (parameter: K | epsilon)

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>
#include <vector>

#include "bkap/drift_diffusion.hpp"
#include "bkap/run_config.hpp"
#include "bkap/uq_harness.hpp"

namespace bkap {

namespace detail {

inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17e", v);
  return buf;
}

inline std::string human_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace detail

// --- CSV row types and builders ----------------------------------------------

struct TimeSeriesRow {
  double time = 0.0;
  std::string species;
  double value = 0.0;
};

struct ProfileRow {
  double x = 0.0;
  std::string quantity;
  std::string statistic;
  double value = 0.0;
};

inline std::string time_series_csv(const std::vector<TimeSeriesRow>& rows) {
  std::string out = "time,species,value\n";
  for (const TimeSeriesRow& r : rows)
    out += detail::csv_num(r.time) + "," + r.species + "," + detail::csv_num(r.value) + "\n";
  return out;
}

inline std::string profile_csv(const std::vector<ProfileRow>& rows) {
  std::string out = "x,quantity,statistic,value\n";
  for (const ProfileRow& r : rows)
    out += detail::csv_num(r.x) + "," + r.quantity + "," + r.statistic + "," +
           detail::csv_num(r.value) + "\n";
  return out;
}

inline std::string study_csv(const std::string& parameter_name, const std::vector<StudyRow>& rows) {
  std::string out = parameter_name + ",quantity,statistic,error\n";
  for (const StudyRow& r : rows)
    out += detail::csv_num(r.parameter) + "," + r.quantity + "," + r.statistic + "," +
           detail::csv_num(r.value) + "\n";
  return out;
}

inline std::vector<ProfileRow> profile_rows_from_stats(const StatsField& f,
                                                       const SpatialMesh& mesh) {
  require(f.n_cells() == mesh.n_cells, "profile_rows_from_stats: mesh mismatch");
  std::vector<ProfileRow> rows;
  rows.reserve(static_cast<std::size_t>(8) * mesh.n_cells);
  auto emit_quantity = [&](const std::string& name, const QuantityStats& q) {
    for (int i = 0; i < mesh.n_cells; ++i)
      rows.push_back({mesh.centers[i], name, "mean", q.mean[i]});
    for (int i = 0; i < mesh.n_cells; ++i) rows.push_back({mesh.centers[i], name, "sd", q.sd[i]});
  };
  emit_quantity("rho_1", f.rho[0]);
  emit_quantity("rho_2", f.rho[1]);
  emit_quantity("u_1", f.u[0]);
  emit_quantity("u_2", f.u[1]);
  return rows;
}

inline std::vector<ProfileRow> profile_rows_from_macro(const MacroState& m,
                                                       const SpatialMesh& mesh) {
  std::vector<ProfileRow> rows;
  rows.reserve(static_cast<std::size_t>(6) * mesh.n_cells);
  auto emit_quantity = [&](const std::string& name, const std::vector<double>& v) {
    require(static_cast<int>(v.size()) == mesh.n_cells, "profile_rows_from_macro: mesh mismatch");
    for (int i = 0; i < mesh.n_cells; ++i) rows.push_back({mesh.centers[i], name, "value", v[i]});
  };
  emit_quantity("rho_1", m.rho[0]);
  emit_quantity("rho_2", m.rho[1]);
  emit_quantity("u_1", m.u[0]);
  emit_quantity("u_2", m.u[1]);
  emit_quantity("phi", m.phi);
  emit_quantity("e_field", m.e_field);
  return rows;
}

// --- artifact writing ---------------------------------------------------------

struct Artifact {
  std::string name;     // file name inside the output directory
  std::string content;  // complete file bytes
};

// Writes all artifacts into dir (created if needed).  On any failure every
// file written by this call is removed again and the directory is removed if
// this call created it and it ended up empty.
inline std::vector<std::string> write_artifacts(const std::string& dir_str,
                                                const std::vector<Artifact>& artifacts) {
  namespace fs = std::filesystem;
  require(!dir_str.empty(), "write_artifacts: empty output directory");
  const fs::path dir(dir_str);
  const bool created = fs::create_directories(dir);
  std::vector<fs::path> written;
  std::vector<std::string> names;
  try {
    for (const Artifact& a : artifacts) {
      const fs::path p = dir / a.name;
      std::ofstream out(p, std::ios::binary | std::ios::trunc);
      ensure(out.good(), "cannot open output file " + p.string());
      out.write(a.content.data(), static_cast<std::streamsize>(a.content.size()));
      out.flush();
      ensure(out.good(), "failed writing output file " + p.string());
      written.push_back(p);
      names.push_back(a.name);
    }
  } catch (...) {
    std::error_code ec;
    for (const fs::path& p : written) fs::remove(p, ec);
    if (created) fs::remove(dir, ec);  // removes only if empty
    throw;
  }
  return names;
}

// --- model assembly from a configuration --------------------------------------

// Kernel, doping, and initial-data closures named by the configuration.  The
// decay experiment builds its own seeded perturbation instead.
inline RandomInputs experiment_inputs(const RunConfig& c) {
  require(c.initial != InitialKind::kPerturbed,
          "experiment_inputs: perturbed initial data is generated by the decay pipeline");
  RandomInputs in;
  const double sb = c.sigma_base, ss = c.sigma_slope;
  in.sigma1 = [sb, ss](double, double, double, double z) { return sb + ss * z; };
  in.sigma2 = in.sigma1;
  in.sigma1_zfree = in.sigma2_zfree = (ss == 0.0);
  if (c.recomb == RecombKind::kGauss) {
    in.sigmaI = [](double, double v, double w, double) {
      return std::exp(-(v - w) * (v - w)) / std::sqrt(M_PI);
    };
  } else {
    in.sigmaI = [](double, double, double, double) { return 0.0; };
  }
  in.sigmaI_zfree = true;
  const double ds = c.doping_slope;
  if (c.doping == DopingKind::kChannel) {
    in.doping = [ds](double x, double z) { return doping_channel(x) * (1.0 + ds * z); };
    in.doping_zfree = (ds == 0.0);
  } else {
    in.doping = [](double, double) { return 0.0; };
    in.doping_zfree = true;
  }
  const double beta = c.beta;
  if (c.initial == InitialKind::kEquilibrium) {
    in.initial = [beta](int s, double, double v, double) { return maxwellian(s, v, beta); };
    in.initial_zfree = true;
  } else {  // kSineDensity: density sin(pi (z+1) / 2) times the Maxwellian
    in.initial = [beta](int s, double, double v, double z) {
      return std::sin(0.5 * M_PI * (z + 1.0)) * maxwellian(s, v, beta);
    };
    in.initial_zfree = false;
  }
  in.kernels_xfree = true;
  return in;
}

inline int step_count(double t_final, double dt) {
  require(dt > 0 && t_final > 0, "step_count: positive dt and t_final required");
  const long long n = std::llround(t_final / dt);
  return static_cast<int>(n < 1 ? 1 : n);
}

inline ProblemSetup experiment_setup(const RunConfig& c) {
  ProblemSetup s;
  s.mesh = build_mesh(0.0, 1.0, c.n_cells);
  s.params.beta = c.beta;
  s.params.gamma = c.gamma;
  s.params.epsilon = c.epsilon;
  s.inputs = experiment_inputs(c);
  s.cfg.epsilon = c.epsilon;
  s.cfg.dt = c.dt;
  s.cfg.phi_bc_left = c.phi_left;
  s.cfg.phi_bc_right = c.phi_right;
  s.cfg.boundary = BoundaryKind::kEquilibriumInflow;
  s.cfg.field = FieldMode::kSelfConsistent;
  s.nv_electrons = c.n_v;
  s.nv_holes = c.n_v;
  s.n_steps = step_count(c.t_final, c.dt);
  return s;
}

// Averages blocks of `ratio` consecutive fine cells onto the coarse grid; the
// exact restriction between nested cell-centered meshes.
inline std::vector<double> restrict_to_coarse(const std::vector<double>& fine, int ratio) {
  require(ratio >= 1, "restrict_to_coarse: ratio must be >= 1");
  require(fine.size() % static_cast<std::size_t>(ratio) == 0,
          "restrict_to_coarse: fine size must be a multiple of the ratio");
  const std::size_t nc = fine.size() / ratio;
  std::vector<double> out(nc, 0.0);
  for (std::size_t i = 0; i < nc; ++i) {
    double acc = 0.0;
    for (int k = 0; k < ratio; ++k) acc += fine[i * ratio + k];
    out[i] = acc / ratio;
  }
  return out;
}

// --- experiment pipelines -------------------------------------------------------

struct RunResult {
  std::vector<std::string> files;  // artifact names, in write order
  std::string summary;             // human-readable result lines
};

namespace detail {

// Deterministic kinetic run at z = 0 recording the equilibrium-distance time
// series; used by test1a, test1b, and custom runs.
inline KineticSolver deterministic_run(const ProblemSetup& s, int n_outputs,
                                       std::vector<TimeSeriesRow>* series) {
  KineticSolver solver(s.mesh, s.params, s.inputs, 0.0, s.cfg, s.nv_electrons, s.nv_holes);
  const int stride = std::max(1, s.n_steps / std::max(1, n_outputs));
  auto record = [&solver, series]() {
    if (series == nullptr) return;
    const SpeciesPair<double> d = equilibrium_distance(solver);
    series->push_back({solver.state().time, "electrons", d[0]});
    series->push_back({solver.state().time, "holes", d[1]});
  };
  record();
  for (int step = 1; step <= s.n_steps; ++step) {
    solver.step();
    if (step % stride == 0 || step == s.n_steps) record();
  }
  return solver;
}

inline std::string species_label(const std::string& quantity) {
  if (quantity == "f_1") return "electrons";
  if (quantity == "f_2") return "holes";
  return quantity;
}

}  // namespace detail

inline void run_equilibration(const RunConfig& c, std::vector<Artifact>& arts,
                              std::string& summary) {
  const ProblemSetup setup = experiment_setup(c);
  std::vector<TimeSeriesRow> series;
  const KineticSolver solver = detail::deterministic_run(setup, c.n_outputs, &series);
  arts.push_back({"equilibrium_distance.csv", time_series_csv(series)});
  arts.push_back({"profiles.csv", profile_csv(profile_rows_from_macro(solver.macro(), setup.mesh))});
  const SpeciesPair<double> d = equilibrium_distance(solver);
  summary += "equilibrium distance at t = " + detail::human_num(solver.state().time) +
             ": electrons " + detail::human_num(d[0]) + ", holes " + detail::human_num(d[1]) +
             "\n";
}

inline void run_diffusion_limit(const RunConfig& c, std::vector<Artifact>& arts,
                                std::string& summary) {
  const ProblemSetup setup = experiment_setup(c);
  const KineticSolver solver = detail::deterministic_run(setup, c.n_outputs, nullptr);

  // drift-diffusion reference on its own (finer) grid, restricted afterwards
  const SpatialMesh dd_mesh = build_mesh(0.0, 1.0, c.dd_n_cells);
  SpeciesPair<VelocityGrid> grids;
  grids[0] = hermite_rule(c.dd_n_v, 1.0);
  grids[1] = hermite_rule(c.dd_n_v, c.beta);
  const SpeciesPair<double> mu = mobilities(setup.inputs, grids, 0.0);
  const RecombinationCoeffs rc = recombination_coeffs(setup.inputs, grids, 0.0);
  std::vector<double> doping(dd_mesh.n_cells), n0(dd_mesh.n_cells), p0(dd_mesh.n_cells);
  for (int i = 0; i < dd_mesh.n_cells; ++i) {
    const double x = dd_mesh.centers[i];
    doping[i] = setup.inputs.doping(x, 0.0);
    // initial densities = velocity integrals of the initial distributions
    double dn = 0.0, dp = 0.0;
    for (int m = 0; m < grids[0].n_nodes; ++m)
      dn += grids[0].weights[m] * setup.inputs.initial(0, x, grids[0].nodes[m], 0.0);
    for (int m = 0; m < grids[1].n_nodes; ++m)
      dp += grids[1].weights[m] * setup.inputs.initial(1, x, grids[1].nodes[m], 0.0);
    n0[i] = dn;
    p0[i] = dp;
  }
  DdConfig dcfg;
  dcfg.dt = c.dd_dt;
  dcfg.gamma = c.gamma;
  dcfg.phi_left = c.phi_left;
  dcfg.phi_right = c.phi_right;
  dcfg.boundary_density = 1.0;
  dcfg.field = FieldMode::kSelfConsistent;
  DdState dd = dd_initialize(dd_mesh, n0, p0, doping, dcfg);
  const int dd_steps = step_count(c.t_final, c.dd_dt);
  for (int step = 0; step < dd_steps; ++step) dd_step(dd, dd_mesh, doping, rc, mu, dcfg);

  const int ratio = c.dd_n_cells / c.n_cells;
  const std::vector<double> ref_n = restrict_to_coarse(dd.n, ratio);
  const std::vector<double> ref_p = restrict_to_coarse(dd.p, ratio);
  const double err_n = relative_l2(solver.macro().rho[0], ref_n);
  const double err_p = relative_l2(solver.macro().rho[1], ref_p);

  arts.push_back(
      {"kinetic_profiles.csv", profile_csv(profile_rows_from_macro(solver.macro(), setup.mesh))});
  std::vector<ProfileRow> ref_rows;
  for (int i = 0; i < setup.mesh.n_cells; ++i)
    ref_rows.push_back({setup.mesh.centers[i], "rho_1", "value", ref_n[i]});
  for (int i = 0; i < setup.mesh.n_cells; ++i)
    ref_rows.push_back({setup.mesh.centers[i], "rho_2", "value", ref_p[i]});
  arts.push_back({"reference_profiles.csv", profile_csv(ref_rows)});
  std::vector<StudyRow> err_rows{{c.epsilon, "rho_1", "rel_l2", err_n},
                                 {c.epsilon, "rho_2", "rel_l2", err_p}};
  arts.push_back({"limit_error.csv", study_csv("epsilon", err_rows)});
  summary += "relative L2 distance to the drift-diffusion reference at t = " +
             detail::human_num(c.t_final) + ": rho_1 " + detail::human_num(err_n) + ", rho_2 " +
             detail::human_num(err_p) + "\n";
}

inline void run_chaos_vs_collocation(const RunConfig& c, std::vector<Artifact>& arts,
                                     std::string& summary) {
  const ProblemSetup setup = experiment_setup(c);
  const StatsField sg = run_sg(setup, c.order, c.n_z_quad);
  const StatsField sc = run_collocation(setup, c.n_colloc);
  arts.push_back({"sg_profiles.csv", profile_csv(profile_rows_from_stats(sg, setup.mesh))});
  arts.push_back({"sc_profiles.csv", profile_csv(profile_rows_from_stats(sc, setup.mesh))});
  const StatsErrors errs = error_mean_sd(sg, sc, setup.mesh.dx);
  const double k = static_cast<double>(c.order);
  std::vector<StudyRow> rows{
      {k, "rho_1", "mean", errs.rho[0].e_mean}, {k, "rho_1", "sd", errs.rho[0].e_sd},
      {k, "rho_2", "mean", errs.rho[1].e_mean}, {k, "rho_2", "sd", errs.rho[1].e_sd},
      {k, "u_1", "mean", errs.u[0].e_mean},     {k, "u_1", "sd", errs.u[0].e_sd},
      {k, "u_2", "mean", errs.u[1].e_mean},     {k, "u_2", "sd", errs.u[1].e_sd}};
  arts.push_back({"sg_vs_sc_error.csv", study_csv("K", rows)});
  summary += "chaos (K = " + std::to_string(c.order) + ") vs collocation (" +
             std::to_string(c.n_colloc) + " nodes) L2(x) errors at t = " +
             detail::human_num(c.t_final) + ":\n";
  for (const StudyRow& r : rows)
    summary += "  " + r.quantity + " " + r.statistic + ": " + detail::human_num(r.value) + "\n";
}

inline void run_order_study(const RunConfig& c, std::vector<Artifact>& arts,
                            std::string& summary) {
  const ProblemSetup setup = experiment_setup(c);
  const StatsField ref = run_collocation(setup, c.n_colloc);
  std::vector<int> k_list;
  for (int k = 1; k <= c.order; ++k) k_list.push_back(k);
  const StudyResult study = convergence_study_K(setup, k_list, ref, c.n_z_quad);
  arts.push_back({"convergence.csv", study_csv(study.parameter_name, study.rows)});
  summary += "expansion-order study vs collocation (" + std::to_string(c.n_colloc) +
             " nodes) at t = " + detail::human_num(study.time) + ":\n";
  for (int k : k_list) {
    double total = 0.0;
    for (const StudyRow& r : study.rows)
      if (r.parameter == static_cast<double>(k)) total += r.value * r.value;
    summary += "  K = " + std::to_string(k) + ": total error " +
               detail::human_num(std::sqrt(total)) + "\n";
  }
}

inline void run_decay(const RunConfig& c, std::vector<Artifact>& arts, std::string& summary) {
  DecayConfig dc;
  dc.epsilon = c.epsilon;
  dc.beta = c.beta;
  dc.sigma_base = c.sigma_base;
  dc.sigma_slope = c.sigma_slope;
  dc.n_cells = c.n_cells;
  dc.n_v = c.n_v;
  dc.dt = c.dt;
  dc.t_final = c.t_final;
  dc.n_z_nodes = c.n_colloc;
  dc.n_outputs = c.n_outputs;
  dc.amplitude = c.perturb_amplitude;
  dc.seed = c.seed;
  const DecayResult res = sensitivity_decay_experiment(dc);
  std::vector<TimeSeriesRow> series;
  for (const StudyRow& r : res.series.rows)
    series.push_back({r.parameter, detail::species_label(r.quantity), r.value});
  arts.push_back({"decay_series.csv", time_series_csv(series)});
  for (int s = 0; s < 2; ++s) {
    const char* name = (s == 0) ? "electrons" : "holes";
    if (res.fit_valid[s]) {
      summary += std::string(name) + ": decay rate " + detail::human_num(res.rate[s]) +
                 ", R^2 " + detail::human_num(res.fit[s].r_squared) + ", non-monotone " +
                 std::to_string(res.non_monotone_pairs[s]) + "/" +
                 std::to_string(res.total_pairs[s]) + " sample pairs\n";
    } else {
      summary += std::string(name) + ": perturbation at or below the roundoff floor; no rate fitted\n";
    }
  }
}

// Runs the configured experiment and writes its artifacts plus the manifest
// (the emitted resolved configuration, re-runnable via --config).  Throws
// ConfigError for invalid configurations and std::exception subclasses for
// solver failures; in both cases no partial output remains.
inline RunResult run_experiment(const RunConfig& cfg) {
  validate_config(cfg);
  std::vector<Artifact> arts;
  std::string summary;
  switch (cfg.experiment) {
    case Experiment::kTest1a:
    case Experiment::kCustom:
      run_equilibration(cfg, arts, summary);
      break;
    case Experiment::kTest1b:
      run_diffusion_limit(cfg, arts, summary);
      break;
    case Experiment::kTest2a:
    case Experiment::kTest2b:
    case Experiment::kTest2c:
      run_chaos_vs_collocation(cfg, arts, summary);
      break;
    case Experiment::kTest2d:
      run_order_study(cfg, arts, summary);
      break;
    case Experiment::kDecay:
      run_decay(cfg, arts, summary);
      break;
  }
  arts.push_back({"run_manifest.cfg", emit(cfg)});
  RunResult res;
  res.files = write_artifacts(cfg.output_dir, arts);
  res.summary = summary;
  return res;
}

}  // namespace bkap
