#pragma once
// Scenario construction: the three validation benchmarks (tension, shear,
// crack coalescence) and the two dataset boundary conditions (biaxial
// tension, shear), plus the seeded random-crack sampler.
//
// Scenario construction is pure: equal inputs give equal specs. Sampling is
// a deterministic function of the seed with a pinned generator and pinned
// value mappings, so the same build reproduces samples bitwise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfm/history.hpp"
#include "pfm/material.hpp"
#include "pfm/mesh.hpp"
#include "pfm/solver.hpp"

namespace pfm {

enum class BcKind {
  TensionBenchmark,
  ShearBenchmark,
  CoalescenceBenchmark,
  BiaxialDataset,
  ShearDataset,
};

inline bool is_dataset(BcKind bc) {
  return bc == BcKind::BiaxialDataset || bc == BcKind::ShearDataset;
}

// Labels used in output paths; the biaxial dataset goes by "tension".
inline const char* bc_label(BcKind bc) {
  switch (bc) {
    case BcKind::TensionBenchmark: return "tension";
    case BcKind::ShearBenchmark: return "shear";
    case BcKind::CoalescenceBenchmark: return "coalescence";
    case BcKind::BiaxialDataset: return "tension";
    case BcKind::ShearDataset: return "shear";
  }
  throw std::invalid_argument("bc_label: unknown kind");
}

inline const char* decomp_label(DecompKind kind) {
  switch (kind) {
    case DecompKind::Spectral: return "spect";
    case DecompKind::VolDev: return "voldev";
    case DecompKind::StarConvex: return "starconvex";
  }
  throw std::invalid_argument("decomp_label: unknown kind");
}

inline DecompKind parse_decomp(const std::string& s) {
  if (s == "spect") return DecompKind::Spectral;
  if (s == "voldev") return DecompKind::VolDev;
  if (s == "starconvex") return DecompKind::StarConvex;
  throw std::invalid_argument("parse_decomp: unknown decomposition " + s);
}

inline BcKind parse_bench_case(const std::string& s) {
  if (s == "tension") return BcKind::TensionBenchmark;
  if (s == "shear") return BcKind::ShearBenchmark;
  if (s == "coalescence") return BcKind::CoalescenceBenchmark;
  throw std::invalid_argument("parse_bench_case: unknown case " + s);
}

inline BcKind parse_dataset_bc(const std::string& s) {
  if (s == "tension") return BcKind::BiaxialDataset;
  if (s == "shear") return BcKind::ShearDataset;
  throw std::invalid_argument("parse_dataset_bc: unknown boundary condition " + s);
}

// Seeded generator with pinned value mappings. The raw engine is the
// standard-library mt19937_64; doubles take the top 53 bits, integer ranges
// use rejection, so draws are unbiased and identical on every platform.
class Rng64 {
 public:
  static constexpr const char* kId = "mt19937_64-u53/v1";

  explicit Rng64(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return (next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [lo, hi], inclusive.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    if (lo > hi) throw std::invalid_argument("uniform_int: empty range");
    const std::uint64_t range = hi - lo + 1;  // overflows to 0 on full range
    if (range == 0) return next();
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return lo + x % range;
  }

 private:
  std::mt19937_64 engine_;
};

struct SampleSpec {
  std::uint64_t seed = 0;
  int n_cracks = 0;
  std::vector<CrackSegment> cracks;
};

inline constexpr double kDatasetCrackLength = 0.25;  // mm

// Inset keeping the diffuse seeded halo off the Dirichlet edges.
inline double default_margin(double crack_length, double l0) {
  return 0.5 * crack_length + 2.0 * l0;
}

// Draws n in {10..20}, then (cx, cy, theta) per crack in that order; centers
// uniform in the margin-inset rectangle, theta uniform in [0, pi).
inline SampleSpec sample_cracks(std::uint64_t seed, double Lx, double Ly, double margin,
                                double length = kDatasetCrackLength) {
  if (!(margin >= 0.5 * length))
    throw std::invalid_argument("sample_cracks: margin must cover half the crack length");
  if (!(2.0 * margin < Lx && 2.0 * margin < Ly))
    throw std::invalid_argument("sample_cracks: margin too large for domain");
  Rng64 rng(seed);
  SampleSpec s;
  s.seed = seed;
  s.n_cracks = static_cast<int>(rng.uniform_int(10, 20));
  s.cracks.reserve(s.n_cracks);
  for (int k = 0; k < s.n_cracks; ++k) {
    CrackSegment c;
    c.cx = margin + rng.uniform() * (Lx - 2.0 * margin);
    c.cy = margin + rng.uniform() * (Ly - 2.0 * margin);
    c.theta = rng.uniform() * std::numbers::pi;
    c.length = length;
    s.cracks.push_back(c);
  }
  return s;
}

enum class ResolutionPolicy {
  Strict,     // reject grids with h > l0/2
  RescaleL0,  // grow l0 to 2h and flag the scenario
  KeepL0,     // keep the nominal l0 even if under-resolved
};

struct ScenarioOptions {
  ResolutionPolicy policy = ResolutionPolicy::RescaleL0;
  int steps = 0;                    // 0: case default
  double total_displacement = 0.0;  // mm; 0: case default
  double l0_override = 0.0;         // mm; 0: case nominal
};

struct ScenarioSpec {
  BcKind bc = BcKind::TensionBenchmark;
  DecompKind decomposition = DecompKind::Spectral;
  StructuredGrid grid;
  MaterialParams material;  // l0 already adjusted to the grid
  LoadSchedule schedule;
  std::vector<CrackSegment> cracks;
  BoundaryDrive drive;
  Edge reaction_edge = Edge::Top;
  DofComponent reaction_component = DofComponent::Y;
  std::vector<int> phase_fixed_nodes;
  double nominal_l0 = 0.0;  // mm, before any rescale
  bool l0_rescaled = false;

  std::string label() const {
    return std::string(bc_label(bc)) + "-" + decomp_label(decomposition);
  }
};

// Loading program of the original tension benchmark: 500 steps at 1e-5 mm
// followed by 1500 steps at 1e-6 mm.
inline LoadSchedule tension_reference_schedule() {
  return LoadSchedule::two_rate(500, 1e-5, 1500, 1e-6);
}

namespace detail {

struct CaseDefaults {
  double Lx, Ly;
  double E, nu, Gc, l0;  // MPa, -, N/mm, mm
  int steps;
  double total_displacement;  // mm
};

inline CaseDefaults case_defaults(BcKind bc) {
  switch (bc) {
    case BcKind::TensionBenchmark:
      return {1.0, 1.0, 210e3, 0.3, 2.7, 4e-3, 130, 6.5e-3};
    case BcKind::ShearBenchmark:
      return {1.0, 1.0, 210e3, 0.3, 2.7, 4e-3, 120, 1.2e-2};
    case BcKind::CoalescenceBenchmark:
      return {4.0, 4.0, 30e3, 0.333, 3e-3, 0.12, 120, 6.0e-3};
    case BcKind::BiaxialDataset:
      return {1.0, 1.0, 1000e3, 0.3, 1.0, 0.01, 100, 5.0e-3};
    case BcKind::ShearDataset:
      return {1.0, 1.0, 1000e3, 0.3, 1.0, 0.01, 100, 1.2e-2};
  }
  throw std::invalid_argument("case_defaults: unknown kind");
}

}  // namespace detail

// Cracks, driven edges, reaction edge and phase constraints of a case; needs
// sc.bc and sc.grid to be set. Used both when building scenarios and when
// reconstructing them from sample-file attributes.
inline void apply_case_layout(ScenarioSpec& sc, const SampleSpec* sample) {
  switch (sc.bc) {
    case BcKind::TensionBenchmark:
      sc.cracks = {{0.25, 0.5, 0.0, 0.5}};  // notch from the left-edge midpoint
      sc.drive.add_edge(sc.grid, Edge::Bottom, DofComponent::X, 0.0);
      sc.drive.add_edge(sc.grid, Edge::Bottom, DofComponent::Y, 0.0);
      sc.drive.add_edge(sc.grid, Edge::Top, DofComponent::Y, 1.0);
      sc.reaction_edge = Edge::Top;
      sc.reaction_component = DofComponent::Y;
      break;
    case BcKind::ShearBenchmark:
      sc.cracks = {{0.25, 0.5, 0.0, 0.5}};
      sc.drive.add_edge(sc.grid, Edge::Bottom, DofComponent::X, 0.0);
      sc.drive.add_edge(sc.grid, Edge::Bottom, DofComponent::Y, 0.0);
      sc.drive.add_edge(sc.grid, Edge::Top, DofComponent::X, 1.0);
      sc.drive.add_edge(sc.grid, Edge::Top, DofComponent::Y, 0.0);
      sc.reaction_edge = Edge::Top;
      sc.reaction_component = DofComponent::X;
      break;
    case BcKind::CoalescenceBenchmark: {
      // Two parallel 45-degree flaws whose inner tips face each other across
      // a 0.2 mm ligament at the domain center.
      const double th = 0.25 * std::numbers::pi;
      sc.cracks = {{1.65, 1.75, th, 1.0}, {2.35, 2.25, th, 1.0}};
      sc.drive.add_edge(sc.grid, Edge::Bottom, DofComponent::X, 0.0);
      sc.drive.add_edge(sc.grid, Edge::Bottom, DofComponent::Y, 0.0);
      sc.drive.add_edge(sc.grid, Edge::Top, DofComponent::X, 0.0);
      sc.drive.add_edge(sc.grid, Edge::Top, DofComponent::Y, 1.0);
      sc.reaction_edge = Edge::Top;
      sc.reaction_component = DofComponent::Y;
      break;
    }
    case BcKind::BiaxialDataset:
      sc.cracks = sample->cracks;
      // outward normal displacement on all four edges, tangential free
      sc.drive.add_edge(sc.grid, Edge::Left, DofComponent::X, -1.0);
      sc.drive.add_edge(sc.grid, Edge::Right, DofComponent::X, 1.0);
      sc.drive.add_edge(sc.grid, Edge::Bottom, DofComponent::Y, -1.0);
      sc.drive.add_edge(sc.grid, Edge::Top, DofComponent::Y, 1.0);
      sc.reaction_edge = Edge::Top;
      sc.reaction_component = DofComponent::Y;
      break;
    case BcKind::ShearDataset: {
      sc.cracks = sample->cracks;
      sc.drive.add_edge(sc.grid, Edge::Bottom, DofComponent::X, 0.0);
      sc.drive.add_edge(sc.grid, Edge::Bottom, DofComponent::Y, 0.0);
      sc.drive.add_edge(sc.grid, Edge::Top, DofComponent::X, 1.0);
      sc.drive.add_edge(sc.grid, Edge::Top, DofComponent::Y, 0.0);
      sc.reaction_edge = Edge::Top;
      sc.reaction_component = DofComponent::X;
      // keep cracks from running along the driven edges
      for (int node : boundary_nodes(sc.grid, Edge::Bottom)) sc.phase_fixed_nodes.push_back(node);
      for (int node : boundary_nodes(sc.grid, Edge::Top)) sc.phase_fixed_nodes.push_back(node);
      break;
    }
  }
}

inline ScenarioSpec build_scenario(BcKind bc, DecompKind decomposition, int resolution,
                                   const SampleSpec* sample = nullptr,
                                   const ScenarioOptions& options = {}) {
  const detail::CaseDefaults def = detail::case_defaults(bc);
  if (is_dataset(bc) && sample == nullptr)
    throw std::invalid_argument("build_scenario: dataset scenarios need a crack sample");
  if (!is_dataset(bc) && sample != nullptr)
    throw std::invalid_argument("build_scenario: benchmark scenarios take no crack sample");

  ScenarioSpec sc;
  sc.bc = bc;
  sc.decomposition = decomposition;
  sc.grid = StructuredGrid(resolution, resolution, def.Lx, def.Ly);

  sc.nominal_l0 = options.l0_override > 0.0 ? options.l0_override : def.l0;
  double l0 = sc.nominal_l0;
  const double h = std::max(sc.grid.hx, sc.grid.hy);
  if (l0 < 2.0 * h) {
    switch (options.policy) {
      case ResolutionPolicy::Strict:
        throw std::invalid_argument("build_scenario: grid too coarse for l0 (need h <= l0/2)");
      case ResolutionPolicy::RescaleL0:
        l0 = 2.0 * h;
        sc.l0_rescaled = true;
        break;
      case ResolutionPolicy::KeepL0:
        break;
    }
  }
  sc.material = MaterialParams::make(def.E, def.nu, def.Gc, l0, /*gamma_star=*/5.0);

  const int steps = options.steps > 0 ? options.steps : def.steps;
  const double total =
      options.total_displacement > 0.0 ? options.total_displacement : def.total_displacement;
  sc.schedule = LoadSchedule::uniform(steps, total / steps);

  apply_case_layout(sc, sample);
  return sc;
}

inline void run_simulation(const ScenarioSpec& sc, const SolverConfig& config,
                           const std::function<void(const StepRecord&)>& sink) {
  sc.schedule.validate();
  Simulation sim(sc.grid, sc.material, sc.decomposition, sc.drive, sc.reaction_edge,
                 sc.reaction_component, sc.phase_fixed_nodes,
                 make_history_field(sc.grid, sc.cracks, sc.material), config);
  sim.initialize();
  for (int s = 0; s < sc.schedule.steps(); ++s) sink(sim.step(sc.schedule.values[s], s));
}

inline std::vector<StepRecord> run_simulation(const ScenarioSpec& sc,
                                              const SolverConfig& config) {
  std::vector<StepRecord> records;
  records.reserve(sc.schedule.steps());
  run_simulation(sc, config, [&](const StepRecord& r) { records.push_back(r); });
  return records;
}

}  // namespace pfm
