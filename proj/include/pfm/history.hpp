#pragma once
// Initial cracks seeded as a strain-history field, and the running maximum
// of the tensile energy density that enforces crack irreversibility.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "pfm/material.hpp"
#include "pfm/mesh.hpp"

namespace pfm {

struct CrackSegment {
  double cx = 0.0, cy = 0.0;  // center [mm]
  double theta = 0.0;         // orientation [rad]
  double length = 0.0;        // [mm]

  Vec2 endpoint0() const {
    return {cx - 0.5 * length * std::cos(theta), cy - 0.5 * length * std::sin(theta)};
  }
  Vec2 endpoint1() const {
    return {cx + 0.5 * length * std::cos(theta), cy + 0.5 * length * std::sin(theta)};
  }
};

// Euclidean distance to the closed segment (projection clamped to endpoints).
inline double distance_to_segment(Vec2 p, const CrackSegment& c) {
  const Vec2 a = c.endpoint0();
  const Vec2 b = c.endpoint1();
  const Vec2 ab = b - a;
  const double len_sq = dot(ab, ab);
  double t = (len_sq > 0.0) ? dot(p - a, ab) / len_sq : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - (a + t * ab));
}

// Seeded history at a point: each crack contributes a linear ramp of width
// l0/2 around the segment, scaled so the phase solve recovers phi ~= phi_c on
// the crack; overlapping cracks combine by pointwise maximum.
inline double initial_history(Vec2 p, std::span<const CrackSegment> cracks,
                              const MaterialParams& m, double phi_c = 0.999) {
  if (!(phi_c > 0.0 && phi_c < 1.0))
    throw std::invalid_argument("initial_history: phi_c must lie in (0, 1)");
  const double scale = phi_c / (1.0 - phi_c) * m.Gc / (2.0 * m.l0);
  double h = 0.0;
  for (const CrackSegment& c : cracks) {
    const double d = distance_to_segment(p, c);
    if (d <= 0.5 * m.l0) h = std::max(h, scale * (1.0 - 2.0 * d / m.l0));
  }
  return h;
}

// Per-quadrature-point history, element-major with 4 Gauss values per element.
struct HistoryField {
  std::vector<double> h;

  static HistoryField zeros(const StructuredGrid& g) {
    HistoryField f;
    f.h.assign(static_cast<std::size_t>(g.element_count()) * 4, 0.0);
    return f;
  }
};

inline HistoryField make_history_field(const StructuredGrid& g,
                                       std::span<const CrackSegment> cracks,
                                       const MaterialParams& m, double phi_c = 0.999) {
  HistoryField f = HistoryField::zeros(g);
  for (int e = 0; e < g.element_count(); ++e) {
    const auto pts = element_quad_points(g, e);
    for (int q = 0; q < 4; ++q) f.h[4 * e + q] = initial_history(pts[q], cracks, m, phi_c);
  }
  return f;
}

// Pointwise H = max(H, psi+); idempotent on repeated application.
inline void update_history(HistoryField& H, std::span<const double> psi_plus) {
  if (psi_plus.size() != H.h.size())
    throw std::invalid_argument("update_history: size mismatch");
  for (std::size_t i = 0; i < H.h.size(); ++i) H.h[i] = std::max(H.h[i], psi_plus[i]);
}

}  // namespace pfm
