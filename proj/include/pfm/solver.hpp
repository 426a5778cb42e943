#pragma once
// Staggered (alternating minimization) quasi-static stepping. Each load step
// repeats: solve the degraded momentum system, fold the tensile energy into
// the history field, solve the phase system, until the max nodal phase change
// drops below tolerance or the iteration cap is hit. Non-converged steps are
// flagged on the record and the run continues.
//
// All solves run serially with warm starts from the previous iterate, so a
// repeated run is bitwise identical.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pfm/assembly.hpp"
#include "pfm/history.hpp"
#include "pfm/material.hpp"
#include "pfm/mesh.hpp"
#include "pfm/sparse.hpp"

namespace pfm {

struct SolverConfig {
  double stag_tol = 1e-4;     // staggered tolerance on max |delta phi|
  int max_stag_iters = 200;
  double lin_rtol = 1e-10;    // linear relative residual tolerance
  PreconKind preconditioner = PreconKind::IncompleteCholesky;

  void validate() const {
    if (!(stag_tol > 0.0)) throw std::invalid_argument("SolverConfig: stag_tol must be > 0");
    if (max_stag_iters < 1)
      throw std::invalid_argument("SolverConfig: max_stag_iters must be >= 1");
    if (!(lin_rtol > 0.0)) throw std::invalid_argument("SolverConfig: lin_rtol must be > 0");
  }
};

// Absolute boundary displacement per step; magnitudes must not decrease.
struct LoadSchedule {
  std::vector<double> values;  // mm

  void validate() const {
    if (values.empty()) throw std::invalid_argument("LoadSchedule: empty schedule");
    for (std::size_t i = 1; i < values.size(); ++i)
      if (std::abs(values[i]) < std::abs(values[i - 1]))
        throw std::invalid_argument("LoadSchedule: magnitudes must be non-decreasing");
  }

  int steps() const { return static_cast<int>(values.size()); }

  static LoadSchedule uniform(int n, double increment) {
    LoadSchedule s;
    s.values.resize(n);
    for (int i = 0; i < n; ++i) s.values[i] = (i + 1) * increment;
    return s;
  }

  // Two-rate ramp: n1 steps at du1 followed by n2 steps at du2, cumulative.
  static LoadSchedule two_rate(int n1, double du1, int n2, double du2) {
    LoadSchedule s;
    s.values.reserve(n1 + n2);
    double u = 0.0;
    for (int i = 0; i < n1; ++i) s.values.push_back(u += du1);
    for (int i = 0; i < n2; ++i) s.values.push_back(u += du2);
    return s;
  }
};

// Displacement constraints driven by the scalar load: dof value = scale * load.
// Fixed dofs carry scale 0.
struct BoundaryDrive {
  std::vector<int> dofs;
  std::vector<double> scales;

  void add_edge(const StructuredGrid& g, Edge edge, DofComponent c, double scale) {
    for (int node : boundary_nodes(g, edge)) {
      dofs.push_back(displacement_dof(node, c));
      scales.push_back(scale);
    }
  }
};

struct StepRecord {
  std::vector<double> phi, ux, uy;  // nodal fields
  double applied_displacement = 0.0;  // mm
  double reaction_force = 0.0;        // N (per unit thickness)
  int staggered_iterations = 0;
  bool converged = true;
  double phi_min = 0.0, phi_max = 0.0;
};

class Simulation {
 public:
  Simulation(const StructuredGrid& grid, const MaterialParams& params, DecompKind kind,
             BoundaryDrive drive, Edge reaction_edge, DofComponent reaction_component,
             std::vector<int> phase_fixed_nodes, HistoryField initial_history,
             SolverConfig config)
      : grid_(grid),
        kind_(kind),
        drive_(std::move(drive)),
        reaction_edge_(reaction_edge),
        reaction_component_(reaction_component),
        config_(config),
        elasticity_(grid, params),
        phase_(grid, params),
        history_(std::move(initial_history)),
        u_(grid.dof_count(), 0.0),
        phi_(grid.node_count(), 0.0) {
    config_.validate();
    if (history_.h.size() != static_cast<std::size_t>(grid.element_count()) * 4)
      throw std::invalid_argument("Simulation: history size mismatch");
    if (!phase_fixed_nodes.empty()) {
      phase_bc_.emplace(grid.node_count());
      for (int node : phase_fixed_nodes) phase_bc_->set(node, 0.0);
    }
  }

  // Relax the phase field against the seeded history before any load is
  // applied, so step 0 starts from the diffuse initial cracks.
  void initialize() {
    phase_.assemble_into(psys_, history_, phase_bc_ ? &*phase_bc_ : nullptr);
    phi_ = solve_or_throw(psys_, phi_, -1, "initial phase solve");
  }

  StepRecord step(double load, int step_index = -1) {
    DirichletSet bc(grid_.dof_count());
    for (std::size_t k = 0; k < drive_.dofs.size(); ++k)
      bc.set(drive_.dofs[k], drive_.scales[k] * load);

    StepRecord rec;
    rec.applied_displacement = load;
    rec.converged = false;

    std::vector<double> phi_at_momentum_solve;
    for (int it = 1; it <= config_.max_stag_iters; ++it) {
      phi_at_momentum_solve = phi_;
      elasticity_.assemble_into(esys_, phi_, bc);
      u_ = solve_or_throw(esys_, u_, step_index, "momentum solve");

      const std::vector<double> psi = elasticity_.quad_tensile_energy(u_, kind_);
      update_history(history_, psi);

      phase_.assemble_into(psys_, history_, phase_bc_ ? &*phase_bc_ : nullptr);
      std::vector<double> phi_new = solve_or_throw(psys_, phi_, step_index, "phase solve");

      double dmax = 0.0;
      for (std::size_t i = 0; i < phi_.size(); ++i)
        dmax = std::max(dmax, std::abs(phi_new[i] - phi_[i]));
      phi_ = std::move(phi_new);
      rec.staggered_iterations = it;
      if (dmax < config_.stag_tol) {
        rec.converged = true;
        break;
      }
    }

    // Reaction paired with the phase state the last momentum solve used.
    const std::vector<double> f = elasticity_.internal_force(phi_at_momentum_solve, u_);
    rec.reaction_force = edge_reaction(grid_, f, reaction_edge_, reaction_component_);

    rec.phi = phi_;
    const auto [lo, hi] = std::minmax_element(phi_.begin(), phi_.end());
    rec.phi_min = *lo;
    rec.phi_max = *hi;
    rec.ux.resize(grid_.node_count());
    rec.uy.resize(grid_.node_count());
    for (int n = 0; n < grid_.node_count(); ++n) {
      rec.ux[n] = u_[2 * n];
      rec.uy[n] = u_[2 * n + 1];
    }
    return rec;
  }

  const std::vector<double>& phi() const { return phi_; }
  const std::vector<double>& displacement() const { return u_; }
  const HistoryField& history() const { return history_; }
  const StructuredGrid& grid() const { return grid_; }

 private:
  std::vector<double> solve_or_throw(const SparseSystem& sys,
                                     const std::vector<double>& guess, int step_index,
                                     const char* what) {
    CgOptions opts;
    opts.rtol = config_.lin_rtol;
    opts.preconditioner = config_.preconditioner;
    opts.initial_guess = guess;
    CgResult res = solve_spd(sys, opts);
    if (!res.converged)
      throw SolveError(std::string(what) + ": conjugate gradient stalled",
                       res.iterations, res.residual, step_index);
    return std::move(res.x);
  }

  StructuredGrid grid_;
  DecompKind kind_;
  BoundaryDrive drive_;
  Edge reaction_edge_;
  DofComponent reaction_component_;
  SolverConfig config_;
  ElasticityAssembler elasticity_;
  PhaseAssembler phase_;
  std::optional<DirichletSet> phase_bc_;
  HistoryField history_;
  SparseSystem esys_, psys_;
  std::vector<double> u_, phi_;
};

}  // namespace pfm
