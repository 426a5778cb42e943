#pragma once
// Pipelines behind the command-line front end: benchmark runs, dataset
// generation, evaluation and the mesh-refinement study. Each command writes
// its outputs plus a run manifest holding the fully resolved configuration,
// the build version, wall-clock time and a per-step convergence log.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "pfm/cases.hpp"
#include "pfm/io.hpp"
#include "pfm/metrics.hpp"
#include "pfm/solver.hpp"

namespace pfm {

struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::string version = kVersion;
  double wall_seconds = 0.0;
  nlohmann::json log = nlohmann::json::array();

  void write(const std::string& path) const {
    nlohmann::json j{{"command", command},
                     {"config", config},
                     {"version", version},
                     {"wall_seconds", wall_seconds},
                     {"log", log}};
    std::ofstream out(path);
    if (!out) throw IoError(IoError::Kind::Unwritable, "manifest: cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError(IoError::Kind::Unwritable, "manifest: write failed for " + path);
  }
};

inline nlohmann::json solver_config_json(const SolverConfig& c) {
  return {{"stag_tol", c.stag_tol},
          {"max_stag_iters", c.max_stag_iters},
          {"lin_rtol", c.lin_rtol},
          {"preconditioner", precon_label(c.preconditioner)}};
}

inline nlohmann::json step_log_entry(int step, const StepRecord& r) {
  return {{"step", step},
          {"displacement", r.applied_displacement},
          {"force", r.reaction_force},
          {"iterations", r.staggered_iterations},
          {"converged", r.converged},
          {"phi_min", r.phi_min},
          {"phi_max", r.phi_max}};
}

// Rebuild the scenario a sample file was produced from; together with the
// stored solver settings this reproduces the file's curves bitwise.
inline ScenarioSpec scenario_from_attributes(const SampleAttributes& a) {
  ScenarioSpec sc;
  sc.bc = parse_dataset_bc(a.bc);
  sc.decomposition = parse_decomp(a.decomposition);
  sc.grid = StructuredGrid(a.nx, a.ny, a.Lx, a.Ly);
  sc.material = MaterialParams::make(a.E, a.nu, a.Gc, a.l0, a.gamma_star, a.k_res);
  sc.schedule.values = a.schedule;
  sc.nominal_l0 = a.l0;
  const SampleSpec sample{a.seed, a.n_cracks, a.cracks};
  apply_case_layout(sc, &sample);
  return sc;
}

inline SolverConfig solver_from_attributes(const SampleAttributes& a) {
  SolverConfig c;
  c.stag_tol = a.stag_tol;
  c.max_stag_iters = a.max_stag_iters;
  c.lin_rtol = a.lin_rtol;
  c.preconditioner = parse_precon(a.preconditioner);
  return c;
}

// RMS distance between two force-displacement curves, both linearly
// interpolated onto uniform points spanning the shared displacement range.
inline double curve_l2_distance(const Curve& a, const Curve& b, int samples = 256) {
  if (a.displacement.size() < 2 || b.displacement.size() < 2)
    throw std::invalid_argument("curve_l2_distance: curves need at least 2 points");
  const double lo = std::max(a.displacement.front(), b.displacement.front());
  const double hi = std::min(a.displacement.back(), b.displacement.back());
  if (!(hi > lo)) throw std::invalid_argument("curve_l2_distance: no displacement overlap");
  auto interp = [](const Curve& c, double x) {
    const auto& u = c.displacement;
    std::size_t k = 1;
    while (k + 1 < u.size() && u[k] < x) ++k;
    const double t = (x - u[k - 1]) / (u[k] - u[k - 1]);
    return c.force[k - 1] + t * (c.force[k] - c.force[k - 1]);
  };
  double sum = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double x = lo + (hi - lo) * i / (samples - 1);
    const double d = interp(a, x) - interp(b, x);
    sum += d * d;
  }
  return std::sqrt(sum / samples);
}

struct BenchOptions {
  BcKind bc = BcKind::TensionBenchmark;
  DecompKind decomp = DecompKind::Spectral;
  int resolution = 128;
  std::string out_dir = ".";
  std::string format = "h5";
  bool reference_schedule = false;  // tension: the original 2000-step program
  ScenarioOptions scenario;
  SolverConfig solver;
};

struct BenchSummary {
  std::string curve_path, field_path, manifest_path;
  double peak_force = 0.0, final_force = 0.0;
  int steps = 0;
  bool all_converged = true;
  bool l0_rescaled = false;
};

inline BenchSummary run_bench(const BenchOptions& opts) {
  namespace fs = std::filesystem;
  const auto t0 = std::chrono::steady_clock::now();
  ScenarioSpec sc = build_scenario(opts.bc, opts.decomp, opts.resolution, nullptr, opts.scenario);
  if (opts.reference_schedule) {
    if (sc.bc != BcKind::TensionBenchmark)
      throw std::invalid_argument("run_bench: reference schedule applies to the tension case");
    sc.schedule = tension_reference_schedule();
  }

  const fs::path dir =
      fs::path(opts.out_dir) / (sc.label() + "-" + std::to_string(opts.resolution));
  fs::create_directories(dir);

  std::vector<double> displacement, force;
  FieldGrid final_phase;
  RunManifest manifest;
  BenchSummary summary;
  int step = 0;
  run_simulation(sc, opts.solver, [&](const StepRecord& r) {
    displacement.push_back(r.applied_displacement);
    force.push_back(r.reaction_force);
    final_phase = field_from_nodal(sc.grid, r.phi);
    manifest.log.push_back(step_log_entry(step, r));
    summary.all_converged = summary.all_converged && r.converged;
    ++step;
  });

  summary.steps = step;
  summary.l0_rescaled = sc.l0_rescaled;
  for (double f : force) summary.peak_force = std::max(summary.peak_force, f);
  summary.final_force = force.empty() ? 0.0 : force.back();

  summary.curve_path = (dir / "curve.csv").string();
  export_curve(displacement, force, summary.curve_path);
  summary.field_path = (dir / ("phase_final." + opts.format)).string();
  write_field(summary.field_path, final_phase);

  manifest.command = "bench";
  manifest.config = {{"case", bc_label(sc.bc)},
                     {"decomposition", decomp_label(sc.decomposition)},
                     {"resolution", opts.resolution},
                     {"out_dir", opts.out_dir},
                     {"format", opts.format},
                     {"reference_schedule", opts.reference_schedule},
                     {"steps", sc.schedule.steps()},
                     {"total_displacement", sc.schedule.values.back()},
                     {"l0", sc.material.l0},
                     {"l0_rescaled", sc.l0_rescaled},
                     {"solver", solver_config_json(opts.solver)}};
  manifest.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  summary.manifest_path = (dir / "manifest.json").string();
  manifest.write(summary.manifest_path);
  return summary;
}

struct GenerateOptions {
  std::vector<std::uint64_t> seeds;
  BcKind bc = BcKind::BiaxialDataset;
  DecompKind decomp = DecompKind::Spectral;
  int resolution = 800;
  std::string out_dir = ".";
  std::string format = "h5";
  bool overwrite = false;
  int jobs = 1;
  ScenarioOptions scenario;
  SolverConfig solver;
};

struct GenerateSummary {
  struct Entry {
    std::uint64_t seed = 0;
    std::string path;
    bool ok = false;
    std::string error;      // empty on success
    bool solver_failure = false;
    int steps = 0;
    double wall_seconds = 0.0;
    nlohmann::json step_log;
  };
  std::vector<Entry> entries;
  std::string manifest_path;
  int failures = 0;
};

inline GenerateSummary run_generate(const GenerateOptions& opts) {
  namespace fs = std::filesystem;
  if (opts.seeds.empty()) throw std::invalid_argument("run_generate: no seeds");
  if (!is_dataset(opts.bc))
    throw std::invalid_argument("run_generate: bc must be a dataset boundary condition");
  if (opts.jobs < 1) throw std::invalid_argument("run_generate: jobs must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();

  const detail::CaseDefaults def = detail::case_defaults(opts.bc);
  const double margin = default_margin(kDatasetCrackLength, def.l0);

  const fs::path dir = fs::path(opts.out_dir) /
                       (std::string(bc_label(opts.bc)) + "-" + decomp_label(opts.decomp));
  fs::create_directories(dir);

  GenerateSummary summary;
  summary.entries.resize(opts.seeds.size());

  auto run_one = [&](std::size_t k) {
    GenerateSummary::Entry& entry = summary.entries[k];
    const std::uint64_t seed = opts.seeds[k];
    const auto s0 = std::chrono::steady_clock::now();
    entry.seed = seed;
    entry.step_log = nlohmann::json::array();
    const fs::path path = dir / (std::to_string(seed) + "." + opts.format);
    entry.path = path.string();
    try {
      if (!opts.overwrite && fs::exists(path))
        throw IoError(IoError::Kind::Unwritable,
                      "output exists, pass overwrite to replace: " + path.string());
      const SampleSpec sample =
          sample_cracks(seed, def.Lx, def.Ly, margin, kDatasetCrackLength);
      const ScenarioSpec sc =
          build_scenario(opts.bc, opts.decomp, opts.resolution, &sample, opts.scenario);
      SampleWriter writer(path.string(), attributes_for(sc, opts.solver, seed));
      int step = 0;
      run_simulation(sc, opts.solver, [&](const StepRecord& r) {
        writer.add_step(sc.grid, r);
        entry.step_log.push_back(step_log_entry(step, r));
        ++step;
      });
      writer.finish();
      entry.steps = step;
      entry.ok = true;
    } catch (const SolveError& e) {
      entry.error = std::string(e.what()) + " (step " + std::to_string(e.step) + ")";
      entry.solver_failure = true;
      std::error_code ec;
      fs::remove(path, ec);
      fs::remove(path.string() + ".json", ec);
    } catch (const std::exception& e) {
      entry.error = e.what();
    }
    entry.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - s0).count();
  };

  if (opts.jobs == 1) {
    for (std::size_t k = 0; k < opts.seeds.size(); ++k) run_one(k);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t k = next.fetch_add(1); k < opts.seeds.size(); k = next.fetch_add(1))
        run_one(k);
    };
    std::vector<std::thread> pool;
    const int n = std::min<int>(opts.jobs, static_cast<int>(opts.seeds.size()));
    pool.reserve(n);
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  RunManifest manifest;
  manifest.command = "generate";
  manifest.config = {{"bc", bc_label(opts.bc)},
                     {"decomposition", decomp_label(opts.decomp)},
                     {"resolution", opts.resolution},
                     {"out_dir", opts.out_dir},
                     {"format", opts.format},
                     {"overwrite", opts.overwrite},
                     {"jobs", opts.jobs},
                     {"margin", margin},
                     {"crack_length", kDatasetCrackLength},
                     {"seeds", opts.seeds},
                     {"solver", solver_config_json(opts.solver)}};
  for (const auto& e : summary.entries) {
    manifest.log.push_back({{"seed", e.seed},
                            {"path", e.path},
                            {"ok", e.ok},
                            {"error", e.error},
                            {"steps", e.steps},
                            {"wall_seconds", e.wall_seconds},
                            {"step_log", e.step_log}});
    if (!e.ok) ++summary.failures;
  }
  manifest.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  summary.manifest_path = (dir / "manifest.json").string();
  manifest.write(summary.manifest_path);
  return summary;
}

struct EvalOptions {
  std::vector<std::string> preds, gts;
  std::string mode = "dice";  // dice | hard | soft | search
  double thr_pred = 0.4, thr_gt = 0.4;
  int grid = 0;  // resample both sides to grid x grid when > 0
  std::string report_path;  // empty: no report file
};

struct EvalReport {
  std::string mode;
  double thr_pred = 0.0, thr_gt = 0.0;
  std::vector<double> per_sample;  // pairwise or per-member scores
  std::vector<std::string> errors;
  double ensemble_dice = -1.0;  // hard/soft modes
  double mean_dice = 0.0;

  nlohmann::json to_json() const {
    nlohmann::json j{{"mode", mode},
                     {"thr_pred", thr_pred},
                     {"thr_gt", thr_gt},
                     {"per_sample", per_sample},
                     {"errors", errors},
                     {"mean_dice", mean_dice}};
    if (ensemble_dice >= 0.0) j["ensemble_dice"] = ensemble_dice;
    return j;
  }
};

inline EvalReport run_eval(const EvalOptions& opts) {
  if (opts.preds.empty()) throw std::invalid_argument("run_eval: no prediction files");
  if (opts.gts.empty()) throw std::invalid_argument("run_eval: no ground-truth files");

  auto load = [&](const std::string& path) {
    FieldGrid f = read_phase_field(path);
    if (opts.grid > 0) f = downsample(f, opts.grid, opts.grid);
    return f;
  };

  EvalReport report;
  report.mode = opts.mode;
  report.thr_pred = opts.thr_pred;
  report.thr_gt = opts.thr_gt;

  if (opts.mode == "dice") {
    if (opts.preds.size() != opts.gts.size())
      throw std::invalid_argument("run_eval: dice mode needs equally many preds and gts");
    double sum = 0.0;
    int ok = 0;
    for (std::size_t i = 0; i < opts.preds.size(); ++i) {
      try {
        const double d = dice(binarize(load(opts.preds[i]), opts.thr_pred),
                              binarize(load(opts.gts[i]), opts.thr_gt));
        report.per_sample.push_back(d);
        sum += d;
        ++ok;
      } catch (const std::exception& e) {
        report.errors.push_back(opts.preds[i] + ": " + e.what());
      }
    }
    report.mean_dice = ok > 0 ? sum / ok : 0.0;
  } else if (opts.mode == "hard" || opts.mode == "soft") {
    if (opts.gts.size() != 1)
      throw std::invalid_argument("run_eval: voting modes take one ground-truth file");
    const BinaryMask gt = binarize(load(opts.gts[0]), opts.thr_gt);
    std::vector<FieldGrid> fields;
    for (const std::string& p : opts.preds) fields.push_back(load(p));
    double sum = 0.0;
    for (const FieldGrid& f : fields) {
      const double d = dice(binarize(f, opts.thr_pred), gt);
      report.per_sample.push_back(d);
      sum += d;
    }
    report.mean_dice = sum / fields.size();
    if (opts.mode == "hard") {
      std::vector<BinaryMask> masks;
      masks.reserve(fields.size());
      for (const FieldGrid& f : fields) masks.push_back(binarize(f, opts.thr_pred));
      report.ensemble_dice = dice(hard_vote(masks), gt);
    } else {
      report.ensemble_dice = dice(binarize(soft_vote(fields), opts.thr_pred), gt);
    }
  } else if (opts.mode == "search") {
    if (opts.preds.size() != opts.gts.size())
      throw std::invalid_argument("run_eval: search mode needs equally many preds and gts");
    std::vector<FieldGrid> preds, gts;
    for (const std::string& p : opts.preds) preds.push_back(load(p));
    for (const std::string& p : opts.gts) gts.push_back(load(p));
    const ThresholdSearchResult best = threshold_search(preds, gts);
    report.thr_pred = best.thresholds.thr_pred;
    report.thr_gt = best.thresholds.thr_gt;
    report.mean_dice = best.mean_dice;
  } else {
    throw std::invalid_argument("run_eval: unknown mode " + opts.mode);
  }

  if (!opts.report_path.empty()) {
    std::ofstream out(opts.report_path);
    if (!out)
      throw IoError(IoError::Kind::Unwritable, "run_eval: cannot write " + opts.report_path);
    out << report.to_json().dump(2) << '\n';
  }
  return report;
}

struct MeshstudyOptions {
  BcKind bc = BcKind::TensionBenchmark;
  DecompKind decomp = DecompKind::Spectral;
  std::vector<int> resolutions;
  std::uint64_t seed = 42;  // used when bc is a dataset condition
  std::string out_dir = ".";
  ScenarioOptions scenario;
  SolverConfig solver;
};

struct MeshstudySummary {
  std::vector<int> resolutions;
  std::vector<std::string> curve_paths;
  std::vector<double> distances;  // successive-pair curve distances
  std::string manifest_path, summary_path;
  double fixed_l0 = 0.0;
};

inline MeshstudySummary run_meshstudy(const MeshstudyOptions& opts) {
  namespace fs = std::filesystem;
  if (opts.resolutions.size() < 2)
    throw std::invalid_argument("run_meshstudy: need at least two resolutions");
  const auto t0 = std::chrono::steady_clock::now();

  const detail::CaseDefaults def = detail::case_defaults(opts.bc);
  int coarsest = opts.resolutions[0];
  for (int r : opts.resolutions) {
    if (r < 2) throw std::invalid_argument("run_meshstudy: resolution too small");
    coarsest = std::min(coarsest, r);
  }
  // One l0 for every resolution, resolvable on the coarsest grid, so the
  // discrete solutions converge to a common continuum problem.
  const double fixed_l0 =
      std::max(opts.scenario.l0_override > 0.0 ? opts.scenario.l0_override : def.l0,
               2.0 * std::max(def.Lx, def.Ly) / coarsest);

  SampleSpec sample;
  const bool dataset = is_dataset(opts.bc);
  if (dataset) {
    const double margin = default_margin(kDatasetCrackLength, def.l0);
    sample = sample_cracks(opts.seed, def.Lx, def.Ly, margin, kDatasetCrackLength);
  }

  const fs::path dir = fs::path(opts.out_dir) / (std::string("meshstudy-") + bc_label(opts.bc) +
                                                 "-" + decomp_label(opts.decomp));
  fs::create_directories(dir);

  MeshstudySummary summary;
  summary.resolutions = opts.resolutions;
  summary.fixed_l0 = fixed_l0;

  RunManifest manifest;
  std::vector<Curve> curves;
  for (int res : opts.resolutions) {
    ScenarioOptions sopt = opts.scenario;
    sopt.l0_override = fixed_l0;
    sopt.policy = ResolutionPolicy::Strict;
    const ScenarioSpec sc =
        build_scenario(opts.bc, opts.decomp, res, dataset ? &sample : nullptr, sopt);
    Curve curve;
    nlohmann::json step_log = nlohmann::json::array();
    int step = 0;
    run_simulation(sc, opts.solver, [&](const StepRecord& r) {
      curve.displacement.push_back(r.applied_displacement);
      curve.force.push_back(r.reaction_force);
      step_log.push_back(step_log_entry(step, r));
      ++step;
    });
    const std::string curve_path = (dir / ("curve_" + std::to_string(res) + ".csv")).string();
    export_curve(curve.displacement, curve.force, curve_path);
    summary.curve_paths.push_back(curve_path);
    curves.push_back(std::move(curve));
    manifest.log.push_back({{"resolution", res}, {"steps", step}, {"step_log", step_log}});
  }

  for (std::size_t i = 0; i + 1 < curves.size(); ++i)
    summary.distances.push_back(curve_l2_distance(curves[i], curves[i + 1]));

  nlohmann::json sj{{"resolutions", summary.resolutions},
                    {"l0", fixed_l0},
                    {"distances", summary.distances},
                    {"curves", summary.curve_paths}};
  summary.summary_path = (dir / "summary.json").string();
  {
    std::ofstream out(summary.summary_path);
    if (!out)
      throw IoError(IoError::Kind::Unwritable,
                    "run_meshstudy: cannot write " + summary.summary_path);
    out << sj.dump(2) << '\n';
  }

  manifest.command = "meshstudy";
  manifest.config = {{"case", bc_label(opts.bc)},
                     {"decomposition", decomp_label(opts.decomp)},
                     {"resolutions", opts.resolutions},
                     {"seed", opts.seed},
                     {"out_dir", opts.out_dir},
                     {"l0", fixed_l0},
                     {"solver", solver_config_json(opts.solver)}};
  manifest.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  summary.manifest_path = (dir / "manifest.json").string();
  manifest.write(summary.manifest_path);
  return summary;
}

}  // namespace pfm
