#pragma once
// Material parameters, small-strain kinematics and the tensile/compressive
// strain-energy splits (spectral, volumetric-deviatoric, star-convex).
//
// Plane strain. The 2D trace tr(eps) = exx + eyy is paired with the 3D
// volumetric convention: kappa0 = lambda + 2 mu / 3, and the deviatoric part
// keeps its out-of-plane component -tr(eps)/3. Under this pairing
//   1/2 kappa0 tr^2 + mu eps_D:eps_D  ==  1/2 lambda tr^2 + mu tr(eps^2)
// holds exactly, so all three splits sum back to the undegraded density.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pfm/common.hpp"

namespace pfm {

struct LameConstants {
  double lambda = 0.0;  // MPa
  double mu = 0.0;      // MPa
  double kappa0 = 0.0;  // bulk modulus, MPa
};

inline LameConstants lame_from(double E, double nu) {
  if (!(E > 0.0)) throw std::invalid_argument("lame_from: E must be positive");
  if (!(nu >= 0.0 && nu < 0.5))
    throw std::invalid_argument("lame_from: nu must lie in [0, 0.5)");
  const double lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  const double mu = E / (2.0 * (1.0 + nu));
  return {lambda, mu, lambda + 2.0 * mu / 3.0};
}

struct MaterialParams {
  double E = 0.0;           // Young's modulus [MPa]
  double nu = 0.0;          // Poisson's ratio
  double Gc = 0.0;          // critical energy release rate [N/mm]
  double l0 = 0.0;          // characteristic length [mm]
  double gamma_star = 0.0;  // star-convex ratio sigma_e^- / sigma_e^+
  double k_res = 1e-6;      // residual stiffness factor
  double lambda = 0.0, mu = 0.0, kappa0 = 0.0;  // derived [MPa]

  static MaterialParams make(double E, double nu, double Gc, double l0,
                             double gamma_star = 0.0, double k_res = 1e-6) {
    const LameConstants lame = lame_from(E, nu);
    if (!(Gc > 0.0)) throw std::invalid_argument("MaterialParams: Gc must be positive");
    if (!(l0 > 0.0)) throw std::invalid_argument("MaterialParams: l0 must be positive");
    if (gamma_star < 0.0)
      throw std::invalid_argument("MaterialParams: gamma_star must be non-negative");
    if (k_res < 0.0)
      throw std::invalid_argument("MaterialParams: k_res must be non-negative");
    return {E, nu, Gc, l0, gamma_star, k_res, lame.lambda, lame.mu, lame.kappa0};
  }

  MaterialParams with_l0(double new_l0) const {
    MaterialParams p = *this;
    p.l0 = new_l0;
    return p;
  }
};

// Symmetric 2D strain; xy is the tensor component (engineering shear / 2).
struct Strain2 {
  double xx = 0.0, yy = 0.0, xy = 0.0;
  double trace() const { return xx + yy; }
};

struct Stress2 {
  double xx = 0.0, yy = 0.0, xy = 0.0;  // MPa
};

enum class DecompKind { Spectral, VolDev, StarConvex };

struct EnergySplit {
  double tensile = 0.0;      // psi+ [MPa]
  double compressive = 0.0;  // psi- [MPa]
};

struct EigenPair2 {
  double v1 = 0.0, v2 = 0.0;  // v1 >= v2
  Vec2 e1, e2;                // orthonormal
};

// Closed-form eigendecomposition of a symmetric 2x2 tensor.
inline EigenPair2 eig2_sym(const Strain2& s) {
  const double m = 0.5 * (s.xx + s.yy);
  const double d = 0.5 * (s.xx - s.yy);
  const double r = std::hypot(d, s.xy);
  EigenPair2 out;
  out.v1 = m + r;
  out.v2 = m - r;
  if (r == 0.0) {
    // repeated eigenvalue: any orthonormal pair reconstructs the tensor
    out.e1 = {1.0, 0.0};
    out.e2 = {0.0, 1.0};
    return out;
  }
  // Eigenvector of v1 from whichever deflated row is better conditioned.
  Vec2 v = (d >= 0.0) ? Vec2{d + r, s.xy} : Vec2{s.xy, r - d};
  const double len = norm(v);
  out.e1 = {v.x / len, v.y / len};
  out.e2 = {-out.e1.y, out.e1.x};
  return out;
}

// Undegraded isotropic density psi0 = 1/2 lambda tr^2 + mu tr(eps^2).
inline double elastic_energy_density(const Strain2& e, const MaterialParams& p) {
  const double tr = e.trace();
  const double tr_sq = e.xx * e.xx + e.yy * e.yy + 2.0 * e.xy * e.xy;
  return 0.5 * p.lambda * tr * tr + p.mu * tr_sq;
}

// eps_D : eps_D including the out-of-plane deviatoric component (tr/3)^2.
inline double deviatoric_inner(const Strain2& e) {
  const double v = e.trace() / 3.0;
  const double dxx = e.xx - v;
  const double dyy = e.yy - v;
  return dxx * dxx + dyy * dyy + v * v + 2.0 * e.xy * e.xy;
}

inline EnergySplit energy_split(const Strain2& e, DecompKind kind,
                                const MaterialParams& p) {
  const double tr = e.trace();
  const double tr_pos = std::max(tr, 0.0);
  const double tr_neg = std::max(-tr, 0.0);
  switch (kind) {
    case DecompKind::Spectral: {
      const EigenPair2 eig = eig2_sym(e);
      const double p1 = std::max(eig.v1, 0.0), p2 = std::max(eig.v2, 0.0);
      const double n1 = std::min(eig.v1, 0.0), n2 = std::min(eig.v2, 0.0);
      return {0.5 * p.lambda * tr_pos * tr_pos + p.mu * (p1 * p1 + p2 * p2),
              0.5 * p.lambda * tr_neg * tr_neg + p.mu * (n1 * n1 + n2 * n2)};
    }
    case DecompKind::VolDev:
    case DecompKind::StarConvex: {
      // gamma* = 0 reduces star-convex to volumetric-deviatoric
      const double gs = (kind == DecompKind::StarConvex) ? p.gamma_star : 0.0;
      const double dev = deviatoric_inner(e);
      return {0.5 * p.kappa0 * (tr_pos * tr_pos - gs * tr_neg * tr_neg) + p.mu * dev,
              (1.0 + gs) * 0.5 * p.kappa0 * tr_neg * tr_neg};
    }
  }
  throw std::invalid_argument("energy_split: unknown decomposition kind");
}

// Stiffness reduction factor (1 - phi)^2 + k_res.
inline double degradation(double phi, double k_res) {
  const double a = 1.0 - phi;
  return a * a + k_res;
}

// Hybrid scheme: the full isotropic stress is degraded, keeping the momentum
// equation linear in u.
inline Stress2 hybrid_stress(const Strain2& e, double phi, const MaterialParams& p) {
  const double g = degradation(phi, p.k_res);
  const double vol = p.lambda * e.trace();
  return {g * (vol + 2.0 * p.mu * e.xx), g * (vol + 2.0 * p.mu * e.yy),
          g * 2.0 * p.mu * e.xy};
}

}  // namespace pfm
