#pragma once
// Global assembly of the degraded elasticity system and the linear phase
// system on the uniform Q1 grid. The grid is uniform, so the element matrices
// per Gauss point are identical across elements and are precomputed once;
// per-element assembly only scales and scatters them.
//
// Voigt order is (xx, yy, xy) with engineering shear 2*exy in B. Dirichlet
// conditions are applied by symmetric elimination: constrained rows/columns
// stay in the pattern as zeros, the diagonal is set to 1 and the prescribed
// value moves to the right-hand side, keeping the matrix SPD.
//
// Accumulation is element-major and serial, so identical inputs produce
// bitwise-identical systems.

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "pfm/history.hpp"
#include "pfm/material.hpp"
#include "pfm/mesh.hpp"
#include "pfm/sparse.hpp"

namespace pfm {

class DirichletSet {
 public:
  explicit DirichletSet(int dof_count) : mask_(dof_count, 0), values_(dof_count, 0.0) {}

  // Re-setting the same dof with the same value is allowed; conflicting
  // values indicate a scenario bug and throw.
  void set(int dof, double value) {
    if (dof < 0 || dof >= static_cast<int>(mask_.size()))
      throw std::out_of_range("DirichletSet: dof index out of range");
    if (mask_[dof]) {
      if (values_[dof] != value)
        throw std::invalid_argument("DirichletSet: conflicting values for one dof");
      return;
    }
    mask_[dof] = 1;
    values_[dof] = value;
    ++count_;
  }

  bool contains(int dof) const { return mask_[dof] != 0; }
  double value_at(int dof) const { return values_[dof]; }
  int dof_count() const { return static_cast<int>(mask_.size()); }
  int size() const { return count_; }

 private:
  std::vector<char> mask_;
  std::vector<double> values_;
  int count_ = 0;
};

// Constrain one component along a grid edge. Phase constraints use the node
// index itself as the dof.
inline void constrain_edge(DirichletSet& bc, const StructuredGrid& g, Edge edge,
                           DofComponent c, double value) {
  for (int node : boundary_nodes(g, edge))
    bc.set(c == DofComponent::Phase ? node : displacement_dof(node, c), value);
}

// CSR pattern with one row per node and the 9-node stencil of a structured
// Q1 grid; values zeroed.
inline CsrMatrix scalar_pattern(const StructuredGrid& g) {
  CsrMatrix A;
  A.n = g.node_count();
  A.row_ptr.assign(A.n + 1, 0);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) {
      const int ni = (i > 0 ? 1 : 0) + 1 + (i < g.nx ? 1 : 0);
      const int nj = (j > 0 ? 1 : 0) + 1 + (j < g.ny ? 1 : 0);
      A.row_ptr[g.node_index(i, j) + 1] = ni * nj;
    }
  for (int r = 0; r < A.n; ++r) A.row_ptr[r + 1] += A.row_ptr[r];
  A.cols.resize(A.row_ptr[A.n]);
  A.vals.assign(A.row_ptr[A.n], 0.0);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) {
      int k = A.row_ptr[g.node_index(i, j)];
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          const int ii = i + di, jj = j + dj;
          if (ii < 0 || ii > g.nx || jj < 0 || jj > g.ny) continue;
          A.cols[k++] = g.node_index(ii, jj);
        }
    }
  return A;
}

// Same stencil with two interleaved dofs per node; 18 columns per interior row.
inline CsrMatrix vector_pattern(const StructuredGrid& g) {
  const CsrMatrix S = scalar_pattern(g);
  CsrMatrix A;
  A.n = 2 * S.n;
  A.row_ptr.assign(A.n + 1, 0);
  for (int r = 0; r < S.n; ++r) {
    const int len = 2 * (S.row_ptr[r + 1] - S.row_ptr[r]);
    A.row_ptr[2 * r + 1] = A.row_ptr[2 * r] + len;
    A.row_ptr[2 * r + 2] = A.row_ptr[2 * r + 1] + len;
  }
  A.cols.resize(A.row_ptr[A.n]);
  A.vals.assign(A.row_ptr[A.n], 0.0);
  for (int r = 0; r < S.n; ++r)
    for (int c = 0; c < 2; ++c) {
      int k = A.row_ptr[2 * r + c];
      for (int s = S.row_ptr[r]; s < S.row_ptr[r + 1]; ++s) {
        A.cols[k++] = 2 * S.cols[s];
        A.cols[k++] = 2 * S.cols[s] + 1;
      }
    }
  return A;
}

namespace detail {

// Per-element scatter map: CSR value index of each (local row, local col)
// block start. Rows 2a and 2a+1 share one column layout, so the second row's
// index is the first plus the row length.
inline std::vector<int> build_scatter(const CsrMatrix& pattern, const StructuredGrid& g,
                                      int dofs_per_node) {
  std::vector<int> scatter(static_cast<std::size_t>(g.element_count()) * 16);
  for (int e = 0; e < g.element_count(); ++e) {
    const auto nodes = g.element_nodes(e);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        const int idx = pattern.find(dofs_per_node * nodes[a], dofs_per_node * nodes[b]);
        if (idx < 0) throw std::logic_error("build_scatter: entry missing from pattern");
        scatter[static_cast<std::size_t>(e) * 16 + a * 4 + b] = idx;
      }
  }
  return scatter;
}

inline void finalize_dirichlet(SparseSystem& sys, const DirichletSet& bc) {
  for (int d = 0; d < bc.dof_count(); ++d) {
    if (!bc.contains(d)) continue;
    sys.matrix.vals[sys.matrix.find(d, d)] = 1.0;
    sys.rhs[d] = bc.value_at(d);
  }
}

}  // namespace detail

class ElasticityAssembler {
 public:
  ElasticityAssembler(const StructuredGrid& grid, const MaterialParams& params)
      : grid_(grid), params_(params), pattern_(vector_pattern(grid)) {
    scatter_ = detail::build_scatter(pattern_, grid, 2);
    const Quadrature& quad = Quadrature::gauss2x2();
    const double detJ = 0.25 * grid.hx * grid.hy;
    const double c00 = params.lambda + 2.0 * params.mu;
    const double c01 = params.lambda;
    const double c22 = params.mu;
    for (int q = 0; q < 4; ++q) {
      const ShapeEval s = shape_eval(quad.points[q].x, quad.points[q].y);
      auto& B = B_[q];
      B = {};
      for (int a = 0; a < 4; ++a) {
        const double dx = s.grad[a].x * 2.0 / grid.hx;
        const double dy = s.grad[a].y * 2.0 / grid.hy;
        B[0][2 * a] = dx;
        B[1][2 * a + 1] = dy;
        B[2][2 * a] = dy;
        B[2][2 * a + 1] = dx;
      }
      auto& K = Kq_[q];
      for (int r = 0; r < 8; ++r)
        for (int c = 0; c <= r; ++c) {
          const double v = B[0][r] * (c00 * B[0][c] + c01 * B[1][c]) +
                           B[1][r] * (c01 * B[0][c] + c00 * B[1][c]) +
                           B[2][r] * c22 * B[2][c];
          K[r][c] = K[c][r] = quad.weights[q] * detJ * v;
        }
    }
  }

  const StructuredGrid& grid() const { return grid_; }
  const MaterialParams& params() const { return params_; }

  SparseSystem assemble(std::span<const double> phi_nodal, const DirichletSet& bc) const {
    SparseSystem sys;
    assemble_into(sys, phi_nodal, bc);
    return sys;
  }

  // Reuses the storage of sys across calls.
  void assemble_into(SparseSystem& sys, std::span<const double> phi_nodal,
                     const DirichletSet& bc) const {
    check_sizes(phi_nodal.size(), bc);
    if (sys.matrix.n != pattern_.n) {
      sys.matrix = pattern_;
      sys.rhs.assign(pattern_.n, 0.0);
    } else {
      std::fill(sys.matrix.vals.begin(), sys.matrix.vals.end(), 0.0);
      std::fill(sys.rhs.begin(), sys.rhs.end(), 0.0);
    }
    const Quadrature& quad = Quadrature::gauss2x2();
    std::array<double, 4> shape_at[4];
    for (int q = 0; q < 4; ++q)
      shape_at[q] = shape_eval(quad.points[q].x, quad.points[q].y).value;

    for (int e = 0; e < grid_.element_count(); ++e) {
      const auto nodes = grid_.element_nodes(e);
      std::array<double, 4> gq;
      for (int q = 0; q < 4; ++q) {
        double phi = 0.0;
        for (int a = 0; a < 4; ++a) phi += shape_at[q][a] * phi_nodal[nodes[a]];
        gq[q] = degradation(phi, params_.k_res);
      }
      std::array<int, 8> gd;
      for (int a = 0; a < 4; ++a) {
        gd[2 * a] = 2 * nodes[a];
        gd[2 * a + 1] = 2 * nodes[a] + 1;
      }
      const int* sc = &scatter_[static_cast<std::size_t>(e) * 16];
      for (int r = 0; r < 8; ++r) {
        const bool row_fixed = bc.contains(gd[r]);
        const int a = r / 2;
        const int row_len = row_fixed ? 0
                                      : sys.matrix.row_ptr[gd[r] + 1] - sys.matrix.row_ptr[gd[r]];
        for (int c = 0; c < 8; ++c) {
          const double k = gq[0] * Kq_[0][r][c] + gq[1] * Kq_[1][r][c] +
                           gq[2] * Kq_[2][r][c] + gq[3] * Kq_[3][r][c];
          if (row_fixed) continue;
          if (bc.contains(gd[c])) {
            sys.rhs[gd[r]] -= k * bc.value_at(gd[c]);
          } else {
            int idx = sc[a * 4 + c / 2] + (c & 1);
            if (r & 1) idx += row_len;
            sys.matrix.vals[idx] += k;
          }
        }
      }
    }
    detail::finalize_dirichlet(sys, bc);
  }

  // f = K(phi) u without boundary treatment; edge reactions are sums of f at
  // constrained dofs.
  std::vector<double> internal_force(std::span<const double> phi_nodal,
                                     std::span<const double> u) const {
    if (phi_nodal.size() != static_cast<std::size_t>(grid_.node_count()))
      throw std::invalid_argument("internal_force: phi size mismatch");
    if (u.size() != static_cast<std::size_t>(grid_.dof_count()))
      throw std::invalid_argument("internal_force: u size mismatch");
    const Quadrature& quad = Quadrature::gauss2x2();
    std::array<double, 4> shape_at[4];
    for (int q = 0; q < 4; ++q)
      shape_at[q] = shape_eval(quad.points[q].x, quad.points[q].y).value;

    std::vector<double> f(grid_.dof_count(), 0.0);
    for (int e = 0; e < grid_.element_count(); ++e) {
      const auto nodes = grid_.element_nodes(e);
      std::array<double, 8> ue;
      for (int a = 0; a < 4; ++a) {
        ue[2 * a] = u[2 * nodes[a]];
        ue[2 * a + 1] = u[2 * nodes[a] + 1];
      }
      for (int q = 0; q < 4; ++q) {
        double phi = 0.0;
        for (int a = 0; a < 4; ++a) phi += shape_at[q][a] * phi_nodal[nodes[a]];
        const double g = degradation(phi, params_.k_res);
        for (int r = 0; r < 8; ++r) {
          double s = 0.0;
          for (int c = 0; c < 8; ++c) s += Kq_[q][r][c] * ue[c];
          f[2 * nodes[r / 2] + (r & 1)] += g * s;
        }
      }
    }
    return f;
  }

  // Tensile energy density at every Gauss point, element-major, 4 per element.
  std::vector<double> quad_tensile_energy(std::span<const double> u,
                                          DecompKind kind) const {
    if (u.size() != static_cast<std::size_t>(grid_.dof_count()))
      throw std::invalid_argument("quad_tensile_energy: u size mismatch");
    std::vector<double> psi(static_cast<std::size_t>(grid_.element_count()) * 4);
    for (int e = 0; e < grid_.element_count(); ++e) {
      const auto nodes = grid_.element_nodes(e);
      std::array<double, 8> ue;
      for (int a = 0; a < 4; ++a) {
        ue[2 * a] = u[2 * nodes[a]];
        ue[2 * a + 1] = u[2 * nodes[a] + 1];
      }
      for (int q = 0; q < 4; ++q) {
        double v[3] = {0.0, 0.0, 0.0};
        for (int k = 0; k < 8; ++k) {
          v[0] += B_[q][0][k] * ue[k];
          v[1] += B_[q][1][k] * ue[k];
          v[2] += B_[q][2][k] * ue[k];
        }
        const Strain2 eps{v[0], v[1], 0.5 * v[2]};
        psi[4 * e + q] = energy_split(eps, kind, params_).tensile;
      }
    }
    return psi;
  }

 private:
  void check_sizes(std::size_t phi_size, const DirichletSet& bc) const {
    if (phi_size != static_cast<std::size_t>(grid_.node_count()))
      throw std::invalid_argument("assemble_elasticity: phi size mismatch");
    if (bc.dof_count() != grid_.dof_count())
      throw std::invalid_argument("assemble_elasticity: dirichlet dof count mismatch");
  }

  StructuredGrid grid_;
  MaterialParams params_;
  CsrMatrix pattern_;
  std::vector<int> scatter_;
  std::array<std::array<double, 8>, 3> B_[4];   // strain-displacement per Gauss point
  std::array<std::array<double, 8>, 8> Kq_[4];  // w |J| B^T C B per Gauss point
};

class PhaseAssembler {
 public:
  PhaseAssembler(const StructuredGrid& grid, const MaterialParams& params)
      : grid_(grid), params_(params), pattern_(scalar_pattern(grid)) {
    scatter_ = detail::build_scatter(pattern_, grid, 1);
    const Quadrature& quad = Quadrature::gauss2x2();
    const double detJ = 0.25 * grid.hx * grid.hy;
    for (int q = 0; q < 4; ++q) {
      const ShapeEval s = shape_eval(quad.points[q].x, quad.points[q].y);
      for (int a = 0; a < 4; ++a) {
        Nw_[q][a] = quad.weights[q] * detJ * s.value[a];
        const double gx = s.grad[a].x * 2.0 / grid.hx;
        const double gy = s.grad[a].y * 2.0 / grid.hy;
        for (int b = 0; b <= a; ++b) {
          const double gbx = s.grad[b].x * 2.0 / grid.hx;
          const double gby = s.grad[b].y * 2.0 / grid.hy;
          Mq_[q][a][b] = Mq_[q][b][a] = quad.weights[q] * detJ * s.value[a] * s.value[b];
          Gq_[q][a][b] = Gq_[q][b][a] = quad.weights[q] * detJ * (gx * gbx + gy * gby);
        }
      }
    }
  }

  const StructuredGrid& grid() const { return grid_; }

  SparseSystem assemble(const HistoryField& H, const DirichletSet* bc = nullptr) const {
    SparseSystem sys;
    assemble_into(sys, H, bc);
    return sys;
  }

  void assemble_into(SparseSystem& sys, const HistoryField& H,
                     const DirichletSet* bc = nullptr) const {
    if (H.h.size() != static_cast<std::size_t>(grid_.element_count()) * 4)
      throw std::invalid_argument("assemble_phase: history size mismatch");
    if (bc && bc->dof_count() != grid_.node_count())
      throw std::invalid_argument("assemble_phase: dirichlet dof count mismatch");
    if (sys.matrix.n != pattern_.n) {
      sys.matrix = pattern_;
      sys.rhs.assign(pattern_.n, 0.0);
    } else {
      std::fill(sys.matrix.vals.begin(), sys.matrix.vals.end(), 0.0);
      std::fill(sys.rhs.begin(), sys.rhs.end(), 0.0);
    }
    const double reaction = params_.Gc / params_.l0;
    const double diffusion = params_.Gc * params_.l0;

    for (int e = 0; e < grid_.element_count(); ++e) {
      const auto nodes = grid_.element_nodes(e);
      const double* He = &H.h[static_cast<std::size_t>(e) * 4];
      const int* sc = &scatter_[static_cast<std::size_t>(e) * 16];
      for (int a = 0; a < 4; ++a) {
        const int ga = nodes[a];
        double be = 0.0;
        for (int q = 0; q < 4; ++q) be += 2.0 * He[q] * Nw_[q][a];
        const bool row_fixed = bc && bc->contains(ga);
        if (!row_fixed) sys.rhs[ga] += be;
        for (int b = 0; b < 4; ++b) {
          double k = 0.0;
          for (int q = 0; q < 4; ++q)
            k += (reaction + 2.0 * He[q]) * Mq_[q][a][b] + diffusion * Gq_[q][a][b];
          if (row_fixed) continue;
          if (bc && bc->contains(nodes[b])) {
            sys.rhs[ga] -= k * bc->value_at(nodes[b]);
          } else {
            sys.matrix.vals[sc[a * 4 + b]] += k;
          }
        }
      }
    }
    if (bc) detail::finalize_dirichlet(sys, *bc);
  }

 private:
  StructuredGrid grid_;
  MaterialParams params_;
  CsrMatrix pattern_;
  std::vector<int> scatter_;
  double Nw_[4][4];         // w |J| N_a at each Gauss point
  double Mq_[4][4][4];      // w |J| N_a N_b
  double Gq_[4][4][4];      // w |J| grad N_a . grad N_b
};

// Sum of internal-force components over one edge.
inline double edge_reaction(const StructuredGrid& g, std::span<const double> f,
                            Edge edge, DofComponent c) {
  if (f.size() != static_cast<std::size_t>(g.dof_count()))
    throw std::invalid_argument("edge_reaction: force size mismatch");
  double s = 0.0;
  for (int node : boundary_nodes(g, edge)) s += f[displacement_dof(node, c)];
  return s;
}

}  // namespace pfm
