#pragma once
// Uniform structured Q1 mesh on a rectangular domain.
//
// Node numbering is lexicographic with x running fastest, so node (i, j)
// has index j*(nx+1) + i. Displacement DOFs are interleaved per node as
// (ux, uy). Elements are numbered the same way and list their nodes
// counter-clockwise. The grid is uniform, so the element Jacobian is the
// constant diag(hx/2, hy/2).

#include <array>
#include <stdexcept>
#include <vector>

#include "pfm/common.hpp"

namespace pfm {

struct StructuredGrid {
  int nx = 0, ny = 0;         // element counts per axis
  double Lx = 0.0, Ly = 0.0;  // domain edge lengths [mm]
  double hx = 0.0, hy = 0.0;  // element sizes [mm]

  StructuredGrid() = default;

  StructuredGrid(int nx_, int ny_, double Lx_, double Ly_)
      : nx(nx_), ny(ny_), Lx(Lx_), Ly(Ly_) {
    if (nx <= 0 || ny <= 0)
      throw std::invalid_argument("StructuredGrid: element counts must be positive");
    if (!(Lx > 0.0) || !(Ly > 0.0))
      throw std::invalid_argument("StructuredGrid: edge lengths must be positive");
    hx = Lx / nx;
    hy = Ly / ny;
  }

  int node_count() const { return (nx + 1) * (ny + 1); }
  int element_count() const { return nx * ny; }
  int dof_count() const { return 2 * node_count(); }

  int node_index(int i, int j) const { return j * (nx + 1) + i; }

  Vec2 node_coords(int node) const {
    if (node < 0 || node >= node_count())
      throw std::out_of_range("node_coords: node index out of range");
    const int i = node % (nx + 1);
    const int j = node / (nx + 1);
    return {i * hx, j * hy};
  }

  // Counter-clockwise corners: (i,j), (i+1,j), (i+1,j+1), (i,j+1).
  std::array<int, 4> element_nodes(int e) const {
    if (e < 0 || e >= element_count())
      throw std::out_of_range("element_nodes: element index out of range");
    const int i = e % nx;
    const int j = e / nx;
    const int n0 = node_index(i, j);
    return {n0, n0 + 1, n0 + nx + 2, n0 + nx + 1};
  }

  // Lower-left corner of element e.
  Vec2 element_origin(int e) const {
    const int i = e % nx;
    const int j = e / nx;
    return {i * hx, j * hy};
  }
};

enum class Edge { Left, Right, Bottom, Top };

enum class DofComponent { X, Y, Phase };

struct EdgeSelector {
  Edge edge;
  DofComponent component;
};

// Interleaved displacement DOF of a node. Phase DOFs coincide with node indices.
inline int displacement_dof(int node, DofComponent c) {
  if (c == DofComponent::Phase)
    throw std::invalid_argument("displacement_dof: phase is not a displacement component");
  return 2 * node + (c == DofComponent::Y ? 1 : 0);
}

// Nodes on the named edge, ascending.
inline std::vector<int> boundary_nodes(const StructuredGrid& g, Edge edge) {
  std::vector<int> nodes;
  switch (edge) {
    case Edge::Bottom:
      nodes.reserve(g.nx + 1);
      for (int i = 0; i <= g.nx; ++i) nodes.push_back(g.node_index(i, 0));
      break;
    case Edge::Top:
      nodes.reserve(g.nx + 1);
      for (int i = 0; i <= g.nx; ++i) nodes.push_back(g.node_index(i, g.ny));
      break;
    case Edge::Left:
      nodes.reserve(g.ny + 1);
      for (int j = 0; j <= g.ny; ++j) nodes.push_back(g.node_index(0, j));
      break;
    case Edge::Right:
      nodes.reserve(g.ny + 1);
      for (int j = 0; j <= g.ny; ++j) nodes.push_back(g.node_index(g.nx, j));
      break;
  }
  return nodes;
}

struct ShapeEval {
  std::array<double, 4> value;  // N_a
  std::array<Vec2, 4> grad;     // dN_a/d(xi, eta), reference coordinates
};

// Q1 basis on [-1,1]^2, node order matching element_nodes. Physical gradients
// follow by scaling with 2/hx and 2/hy.
inline ShapeEval shape_eval(double xi, double eta) {
  ShapeEval s;
  const double xm = 1.0 - xi, xp = 1.0 + xi;
  const double em = 1.0 - eta, ep = 1.0 + eta;
  s.value = {0.25 * xm * em, 0.25 * xp * em, 0.25 * xp * ep, 0.25 * xm * ep};
  s.grad = {Vec2{-0.25 * em, -0.25 * xm}, Vec2{0.25 * em, -0.25 * xp},
            Vec2{0.25 * ep, 0.25 * xp}, Vec2{-0.25 * ep, 0.25 * xm}};
  return s;
}

struct Quadrature {
  std::array<Vec2, 4> points;
  std::array<double, 4> weights;

  // 2x2 Gauss rule; integrates bilinear*bilinear products exactly.
  static const Quadrature& gauss2x2() {
    static const Quadrature q = [] {
      const double g = 1.0 / std::sqrt(3.0);
      Quadrature r;
      r.points = {Vec2{-g, -g}, Vec2{g, -g}, Vec2{g, g}, Vec2{-g, g}};
      r.weights = {1.0, 1.0, 1.0, 1.0};
      return r;
    }();
    return q;
  }
};

// Physical coordinates of the 4 Gauss points of element e, in quadrature order.
inline std::array<Vec2, 4> element_quad_points(const StructuredGrid& g, int e) {
  const Quadrature& q = Quadrature::gauss2x2();
  const Vec2 o = g.element_origin(e);
  std::array<Vec2, 4> pts;
  for (int k = 0; k < 4; ++k) {
    pts[k] = {o.x + 0.5 * (q.points[k].x + 1.0) * g.hx,
              o.y + 0.5 * (q.points[k].y + 1.0) * g.hy};
  }
  return pts;
}

}  // namespace pfm
