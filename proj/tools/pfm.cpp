// Batch front end: benchmarks, dataset generation, evaluation, mesh study.
// Exit codes: 0 success, 1 usage, 2 solver failure, 3 I/O failure.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pfm/commands.hpp"

namespace {

pfm::ResolutionPolicy parse_policy(const std::string& s) {
  if (s == "rescale") return pfm::ResolutionPolicy::RescaleL0;
  if (s == "strict") return pfm::ResolutionPolicy::Strict;
  if (s == "keep") return pfm::ResolutionPolicy::KeepL0;
  throw std::invalid_argument("unknown resolution policy: " + s);
}

// Benchmarks by name, plus the dataset scenarios with sampled crack patterns.
pfm::BcKind parse_study_case(const std::string& s) {
  if (s == "tension-dataset") return pfm::BcKind::BiaxialDataset;
  if (s == "shear-dataset") return pfm::BcKind::ShearDataset;
  return pfm::parse_bench_case(s);
}

// "42", "1,2,3" or "1..8" (inclusive).
std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> seeds;
  auto parse_one = [](const std::string& tok) {
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(tok, &used);
    if (used != tok.size()) throw std::invalid_argument("bad seed: " + tok);
    return v;
  };
  const std::size_t dots = s.find("..");
  if (dots != std::string::npos) {
    const std::uint64_t lo = parse_one(s.substr(0, dots));
    const std::uint64_t hi = parse_one(s.substr(dots + 2));
    if (hi < lo) throw std::invalid_argument("seed range is empty: " + s);
    for (std::uint64_t v = lo; v <= hi; ++v) seeds.push_back(v);
    return seeds;
  }
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const std::string tok =
        s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (tok.empty()) throw std::invalid_argument("bad seed list: " + s);
    seeds.push_back(parse_one(tok));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return seeds;
}

struct SolverFlags {
  double stag_tol = pfm::SolverConfig{}.stag_tol;
  int max_stag = pfm::SolverConfig{}.max_stag_iters;
  double lin_rtol = pfm::SolverConfig{}.lin_rtol;
  std::string precon = pfm::precon_label(pfm::SolverConfig{}.preconditioner);

  void attach(CLI::App* cmd) {
    cmd->add_option("--stag-tol", stag_tol, "Staggered convergence tolerance on max |dphi|");
    cmd->add_option("--max-stag", max_stag, "Staggered iteration cap per load step");
    cmd->add_option("--lin-rtol", lin_rtol, "Linear solver relative residual tolerance");
    cmd->add_option("--precon", precon, "Linear preconditioner: none | jacobi | ic0");
  }

  pfm::SolverConfig resolve() const {
    pfm::SolverConfig c;
    c.stag_tol = stag_tol;
    c.max_stag_iters = max_stag;
    c.lin_rtol = lin_rtol;
    c.preconditioner = pfm::parse_precon(precon);
    c.validate();
    return c;
  }
};

struct ScenarioFlags {
  int steps = 0;
  double total = 0.0;
  double l0 = 0.0;
  std::string policy = "rescale";

  void attach(CLI::App* cmd) {
    cmd->add_option("--steps", steps, "Load step count (0: case default)");
    cmd->add_option("--total", total, "Total applied displacement in mm (0: case default)");
    cmd->add_option("--l0", l0, "Regularization length override in mm (0: case default)");
    cmd->add_option("--policy", policy,
                    "When the grid cannot resolve l0: rescale | strict | keep");
  }

  pfm::ScenarioOptions resolve() const {
    pfm::ScenarioOptions o;
    o.steps = steps;
    o.total_displacement = total;
    o.l0_override = l0;
    o.policy = parse_policy(policy);
    return o;
  }
};

int run(int argc, char** argv) {
  CLI::App app{"Quasi-static phase-field brittle fracture on structured 2D grids"};
  app.set_config("--config", "", "Config file; command-line flags override its values");
  app.require_subcommand(1);

  // bench
  auto* bench = app.add_subcommand("bench", "Run one benchmark case, write curve and field");
  std::string bench_case, bench_decomp;
  pfm::BenchOptions bopt;
  SolverFlags bsolver;
  ScenarioFlags bscen;
  bench->add_option("case", bench_case, "tension | shear | coalescence")->required();
  bench->add_option("decomp", bench_decomp, "spect | voldev | starconvex")->required();
  bench->add_option("resolution", bopt.resolution, "Elements per side")
      ->check(CLI::PositiveNumber);
  bench->add_option("--out", bopt.out_dir, "Output directory");
  bench->add_option("--format", bopt.format, "Field file format: h5 | pfb");
  bench->add_flag("--reference-schedule", bopt.reference_schedule,
                  "Tension only: 500 x 1e-5 mm then 1500 x 1e-6 mm steps");
  bscen.attach(bench);
  bsolver.attach(bench);

  // generate
  auto* gen = app.add_subcommand("generate", "Produce dataset sample files for a seed set");
  std::string gen_seeds, gen_bc, gen_decomp;
  pfm::GenerateOptions gopt;
  SolverFlags gsolver;
  ScenarioFlags gscen;
  gen->add_option("seeds", gen_seeds, "Seed, comma list, or inclusive range lo..hi")->required();
  gen->add_option("bc", gen_bc, "tension | shear")->required();
  gen->add_option("decomp", gen_decomp, "spect | voldev | starconvex")->required();
  gen->add_option("--res", gopt.resolution, "Elements per side")->check(CLI::PositiveNumber);
  gen->add_option("--out", gopt.out_dir, "Output directory");
  gen->add_option("--format", gopt.format, "Sample file format: h5 | pfb");
  gen->add_flag("--overwrite", gopt.overwrite, "Replace existing sample files");
  gen->add_option("--jobs", gopt.jobs, "Concurrent seed workers")->check(CLI::PositiveNumber);
  gscen.attach(gen);
  gsolver.attach(gen);

  // eval
  auto* eval = app.add_subcommand("eval", "Score predicted crack fields against ground truth");
  pfm::EvalOptions eopt;
  eval->add_option("mode", eopt.mode, "dice | hard | soft | search")->required();
  eval->add_option("--pred", eopt.preds, "Prediction field/sample files")
      ->required()
      ->expected(-1);
  eval->add_option("--gt", eopt.gts, "Ground-truth field/sample files")->required()->expected(-1);
  eval->add_option("--thr-pred", eopt.thr_pred, "Binarization threshold for predictions");
  eval->add_option("--thr-gt", eopt.thr_gt, "Binarization threshold for ground truth");
  eval->add_option("--grid", eopt.grid, "Resample both sides to this square grid before scoring");
  eval->add_option("--report", eopt.report_path, "Write the JSON report to this path");

  // meshstudy
  auto* mesh = app.add_subcommand("meshstudy", "Same scenario across grid resolutions");
  std::string mesh_case, mesh_decomp;
  pfm::MeshstudyOptions mopt;
  SolverFlags msolver;
  ScenarioFlags mscen;
  mesh->add_option("case", mesh_case,
                   "tension | shear | coalescence | tension-dataset | shear-dataset")
      ->required();
  mesh->add_option("decomp", mesh_decomp, "spect | voldev | starconvex")->required();
  mesh->add_option("--res", mopt.resolutions, "Resolutions, finest last")
      ->required()
      ->expected(-1);
  mesh->add_option("--seed", mopt.seed, "Crack seed when the case is a dataset bc");
  mesh->add_option("--out", mopt.out_dir, "Output directory");
  mscen.attach(mesh);
  msolver.attach(mesh);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (bench->parsed()) {
    bopt.bc = pfm::parse_bench_case(bench_case);
    bopt.decomp = pfm::parse_decomp(bench_decomp);
    bopt.scenario = bscen.resolve();
    bopt.solver = bsolver.resolve();
    const pfm::BenchSummary s = pfm::run_bench(bopt);
    std::printf("curve: %s\nfield: %s\nmanifest: %s\n", s.curve_path.c_str(),
                s.field_path.c_str(), s.manifest_path.c_str());
    std::printf("steps=%d peak_force=%.6g final_force=%.6g all_converged=%d l0_rescaled=%d\n",
                s.steps, s.peak_force, s.final_force, int(s.all_converged), int(s.l0_rescaled));
    return 0;
  }

  if (gen->parsed()) {
    gopt.seeds = parse_seeds(gen_seeds);
    gopt.bc = pfm::parse_dataset_bc(gen_bc);
    gopt.decomp = pfm::parse_decomp(gen_decomp);
    gopt.scenario = gscen.resolve();
    gopt.solver = gsolver.resolve();
    const pfm::GenerateSummary s = pfm::run_generate(gopt);
    bool io_failure = false, solver_failure = false;
    for (const auto& e : s.entries) {
      if (e.ok) {
        std::printf("seed %llu: ok %s (%d steps, %.1f s)\n",
                    static_cast<unsigned long long>(e.seed), e.path.c_str(), e.steps,
                    e.wall_seconds);
      } else {
        std::fprintf(stderr, "seed %llu: FAILED %s\n",
                     static_cast<unsigned long long>(e.seed), e.error.c_str());
        (e.solver_failure ? solver_failure : io_failure) = true;
      }
    }
    std::printf("manifest: %s\n", s.manifest_path.c_str());
    if (io_failure) return 3;
    if (solver_failure) return 2;
    return 0;
  }

  if (eval->parsed()) {
    const pfm::EvalReport r = pfm::run_eval(eopt);
    std::printf("%s\n", r.to_json().dump(2).c_str());
    if (eopt.mode == "search")
      std::printf("best thr_pred=%.2f thr_gt=%.2f mean_dice=%.6f\n", r.thr_pred, r.thr_gt,
                  r.mean_dice);
    const bool nothing_scored =
        r.per_sample.empty() && r.ensemble_dice < 0.0 && eopt.mode != "search";
    return nothing_scored ? 3 : 0;
  }

  if (mesh->parsed()) {
    mopt.bc = parse_study_case(mesh_case);
    mopt.decomp = pfm::parse_decomp(mesh_decomp);
    mopt.scenario = mscen.resolve();
    mopt.solver = msolver.resolve();
    const pfm::MeshstudySummary s = pfm::run_meshstudy(mopt);
    for (std::size_t i = 0; i < s.distances.size(); ++i)
      std::printf("L2(%d -> %d) = %.8g\n", s.resolutions[i], s.resolutions[i + 1],
                  s.distances[i]);
    std::printf("summary: %s\nmanifest: %s\n", s.summary_path.c_str(), s.manifest_path.c_str());
    return 0;
  }

  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const pfm::SolveError& e) {
    std::fprintf(stderr, "solver failure: %s (step %d, %d iterations, residual %g)\n", e.what(),
                 e.step, e.iterations, e.residual);
    return 2;
  } catch (const pfm::IoError& e) {
    std::fprintf(stderr, "i/o failure: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
