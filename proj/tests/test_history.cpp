#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "pfm/history.hpp"

using namespace pfm;

namespace {
const MaterialParams kMat = MaterialParams::make(1000e3, 0.3, 1.0, 0.01);
}

TEST_CASE("distance to a segment clamps to the endpoints") {
  const CrackSegment c{0.5, 0.5, 0.0, 0.5};  // from (0.25, 0.5) to (0.75, 0.5)
  CHECK(c.endpoint0().x == Catch::Approx(0.25));
  CHECK(c.endpoint1().x == Catch::Approx(0.75));
  CHECK(distance_to_segment({0.5, 0.7}, c) == Catch::Approx(0.2));
  CHECK(distance_to_segment({0.9, 0.5}, c) == Catch::Approx(0.15));
  CHECK(distance_to_segment({0.1, 0.1}, c) == Catch::Approx(std::hypot(0.15, 0.4)));
  CHECK(distance_to_segment({0.6, 0.5}, c) == Catch::Approx(0.0).margin(1e-15));

  const CrackSegment tilted{0.0, 0.0, 0.25 * std::numbers::pi, 2.0 * std::sqrt(2.0)};
  // segment from (-1,-1) to (1,1); the perpendicular from (1,-1) has length sqrt(2)
  CHECK(distance_to_segment({1.0, -1.0}, tilted) == Catch::Approx(std::sqrt(2.0)));

  const CrackSegment degenerate{0.3, 0.4, 1.0, 0.0};
  CHECK(distance_to_segment({0.0, 0.0}, degenerate) == Catch::Approx(0.5));
}

TEST_CASE("seeded history: on-crack magnitude, support width, monotone ramp") {
  const CrackSegment c{0.5, 0.5, 0.0, 0.25};
  const CrackSegment cracks[1] = {c};

  // phi_c/(1-phi_c) * Gc/(2 l0) with phi_c = 0.999, Gc = 1, l0 = 0.01
  const double on_crack = initial_history({0.5, 0.5}, cracks, kMat);
  CHECK(on_crack == Catch::Approx(49950.0).epsilon(1e-12));

  // linear ramp: half the peak at d = l0/4
  CHECK(initial_history({0.5, 0.5 + 0.0025}, cracks, kMat) ==
        Catch::Approx(0.5 * on_crack).epsilon(1e-12));

  // support ends at d = l0/2
  CHECK(initial_history({0.5, 0.5 + 0.005}, cracks, kMat) == 0.0);
  CHECK(initial_history({0.5, 0.5 + 0.0051}, cracks, kMat) == 0.0);
  CHECK(initial_history({0.5, 0.9}, cracks, kMat) == 0.0);

  // continuous approach to zero at the support edge; the ramp factor
  // 1 - 2d/l0 cancels to ~ulp(1), hence the absolute slack
  const double eps = 1e-6;
  const double near_edge = initial_history({0.5, 0.5 + 0.005 - eps}, cracks, kMat);
  CHECK(near_edge > 0.0);
  CHECK(near_edge <= on_crack * (2.0 * eps / kMat.l0 + 1e-12));

  double prev = on_crack;
  for (double d = 0.0005; d <= 0.005; d += 0.0005) {
    const double h = initial_history({0.5, 0.5 + d}, cracks, kMat);
    CHECK(h <= prev);
    prev = h;
  }

  CHECK_THROWS_AS(initial_history({0.5, 0.5}, cracks, kMat, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(initial_history({0.5, 0.5}, cracks, kMat, 0.0), std::invalid_argument);
}

TEST_CASE("overlapping cracks combine by maximum, not sum") {
  const CrackSegment a{0.5, 0.5, 0.0, 0.25};
  const CrackSegment b{0.5, 0.5, 0.5 * std::numbers::pi, 0.25};
  const CrackSegment both[2] = {a, b};
  const CrackSegment only_a[1] = {a};
  const double h_both = initial_history({0.5, 0.5}, both, kMat);
  const double h_one = initial_history({0.5, 0.5}, only_a, kMat);
  CHECK(h_both == h_one);
}

TEST_CASE("history field covers every quadrature point") {
  StructuredGrid g(8, 8, 1.0, 1.0);
  // the halo half-width l0/2 must exceed the 0.036 Gauss offset at h = 0.125
  const MaterialParams wide = kMat.with_l0(0.1);
  const std::vector<CrackSegment> cracks = {{0.5, 0.5, 0.0, 0.25}};
  const HistoryField f = make_history_field(g, cracks, wide);
  REQUIRE(f.h.size() == static_cast<std::size_t>(g.element_count()) * 4);

  double peak = 0.0;
  for (double v : f.h) {
    CHECK(v >= 0.0);
    peak = std::max(peak, v);
  }
  CHECK(peak > 0.0);

  // quadrature points far from the crack carry no seed
  for (int e = 0; e < g.element_count(); ++e) {
    const Vec2 o = g.element_origin(e);
    if (o.y > 0.7)
      for (int q = 0; q < 4; ++q) CHECK(f.h[4 * e + q] == 0.0);
  }

  const HistoryField empty = HistoryField::zeros(g);
  for (double v : empty.h) CHECK(v == 0.0);
}

TEST_CASE("history update is a pointwise running maximum") {
  StructuredGrid g(2, 2, 1.0, 1.0);
  HistoryField H = HistoryField::zeros(g);
  std::vector<double> psi(H.h.size());
  for (std::size_t i = 0; i < psi.size(); ++i) psi[i] = static_cast<double>(i % 5);
  update_history(H, psi);
  CHECK(H.h == psi);

  std::vector<double> lower(psi.size(), 1.5);
  update_history(H, lower);
  for (std::size_t i = 0; i < psi.size(); ++i) CHECK(H.h[i] == std::max(psi[i], 1.5));

  const std::vector<double> snapshot = H.h;
  update_history(H, psi);
  CHECK(H.h == snapshot);  // idempotent

  std::vector<double> wrong(psi.size() - 1, 0.0);
  CHECK_THROWS_AS(update_history(H, wrong), std::invalid_argument);
}
