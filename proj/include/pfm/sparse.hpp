#pragma once
// Compressed-row symmetric sparse matrices and a preconditioned conjugate
// gradient solver (Jacobi default, optional zero-fill incomplete Cholesky).
// Everything here runs serially with a fixed operation order, so repeated
// solves are bitwise reproducible.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "pfm/common.hpp"

namespace pfm {

struct CsrMatrix {
  int n = 0;
  std::vector<int> row_ptr;  // size n+1
  std::vector<int> cols;     // column indices, sorted within each row
  std::vector<double> vals;

  // y = A x
  void multiply(std::span<const double> x, std::span<double> y) const {
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += vals[k] * x[cols[k]];
      y[i] = s;
    }
  }

  // index into vals for (row, col), or -1 if not in the pattern
  int find(int row, int col) const {
    const int lo = row_ptr[row], hi = row_ptr[row + 1];
    const auto it = std::lower_bound(cols.begin() + lo, cols.begin() + hi, col);
    if (it != cols.begin() + hi && *it == col)
      return static_cast<int>(it - cols.begin());
    return -1;
  }

  double infinity_asymmetry() const {
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
        const int j = cols[k];
        const int kt = find(j, i);
        const double vt = (kt >= 0) ? vals[kt] : 0.0;
        worst = std::max(worst, std::abs(vals[k] - vt));
      }
    return worst;
  }
};

struct SparseSystem {
  CsrMatrix matrix;
  std::vector<double> rhs;
};

enum class PreconKind { None, Jacobi, IncompleteCholesky };

struct CgOptions {
  double rtol = 1e-10;
  int max_iterations = 0;  // 0: use max(1000, 2n)
  PreconKind preconditioner = PreconKind::Jacobi;
  std::span<const double> initial_guess = {};  // empty: start from zero
};

struct CgResult {
  std::vector<double> x;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;  // achieved ||Ax-b|| / ||b||
};

namespace detail {

// Zero-fill incomplete Cholesky of the lower triangle. On pivot breakdown the
// factorization restarts with a progressively larger diagonal shift.
struct IncompleteCholesky {
  int n = 0;
  std::vector<int> row_ptr, cols;  // lower triangle including diagonal
  std::vector<double> vals;
  std::vector<int> diag;  // position of the diagonal entry in each row

  static IncompleteCholesky factor(const CsrMatrix& A) {
    IncompleteCholesky L;
    L.n = A.n;
    L.row_ptr.assign(A.n + 1, 0);
    for (int i = 0; i < A.n; ++i) {
      int cnt = 0;
      for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
        if (A.cols[k] <= i) ++cnt;
      L.row_ptr[i + 1] = L.row_ptr[i] + cnt;
    }
    L.cols.resize(L.row_ptr[A.n]);
    L.vals.resize(L.row_ptr[A.n]);
    L.diag.resize(A.n);

    double diag_scale = 0.0;
    for (int i = 0; i < A.n; ++i) {
      const int d = A.find(i, i);
      if (d >= 0) diag_scale = std::max(diag_scale, std::abs(A.vals[d]));
    }

    double shift = 0.0;
    for (int attempt = 0; attempt < 30; ++attempt) {
      if (L.try_factor(A, shift)) return L;
      shift = (shift == 0.0) ? 1e-8 * diag_scale : 4.0 * shift;
    }
    throw SolveError("incomplete Cholesky failed even with diagonal shift", 0, 0.0);
  }

  bool try_factor(const CsrMatrix& A, double shift) {
    for (int i = 0; i < n; ++i) {
      int out = row_ptr[i];
      for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
        if (A.cols[k] > i) break;
        cols[out] = A.cols[k];
        vals[out] = A.vals[k] + (A.cols[k] == i ? shift : 0.0);
        ++out;
      }
      diag[i] = out - 1;
      if (cols[diag[i]] != i) return false;  // structurally missing diagonal
    }
    for (int i = 0; i < n; ++i) {
      for (int ki = row_ptr[i]; ki <= diag[i]; ++ki) {
        const int j = cols[ki];
        // subtract sum_{m < j} L(i,m) L(j,m)
        double s = vals[ki];
        int pi = row_ptr[i], pj = row_ptr[j];
        while (pi < ki && pj < diag[j]) {
          if (cols[pi] == cols[pj]) {
            s -= vals[pi] * vals[pj];
            ++pi;
            ++pj;
          } else if (cols[pi] < cols[pj]) {
            ++pi;
          } else {
            ++pj;
          }
        }
        if (j == i) {
          if (!(s > 0.0)) return false;  // breakdown
          vals[ki] = std::sqrt(s);
        } else {
          vals[ki] = s / vals[diag[j]];
        }
      }
    }
    return true;
  }

  // z = (L L^T)^{-1} r
  void apply(std::span<const double> r, std::span<double> z,
             std::vector<double>& work) const {
    work.assign(r.begin(), r.end());
    for (int i = 0; i < n; ++i) {
      double s = work[i];
      for (int k = row_ptr[i]; k < diag[i]; ++k) s -= vals[k] * work[cols[k]];
      work[i] = s / vals[diag[i]];
    }
    for (int i = n - 1; i >= 0; --i) {
      const double zi = work[i] / vals[diag[i]];
      z[i] = zi;
      for (int k = row_ptr[i]; k < diag[i]; ++k) work[cols[k]] -= vals[k] * zi;
    }
  }
};

inline double dot_product(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

inline CgResult solve_spd(const SparseSystem& sys, const CgOptions& opts) {
  const CsrMatrix& A = sys.matrix;
  const std::vector<double>& b = sys.rhs;
  const int n = A.n;
  if (static_cast<int>(b.size()) != n)
    throw std::invalid_argument("solve_spd: rhs size mismatch");

  CgResult res;
  res.x.assign(n, 0.0);

  const double bnorm = std::sqrt(detail::dot_product(b, b));
  if (bnorm == 0.0) {
    res.converged = true;
    return res;  // zero right-hand side has the zero solution
  }

  if (!opts.initial_guess.empty()) {
    if (opts.initial_guess.size() != static_cast<std::size_t>(n))
      throw std::invalid_argument("solve_spd: initial guess size mismatch");
    std::copy(opts.initial_guess.begin(), opts.initial_guess.end(), res.x.begin());
  }

  std::vector<double> r(n), z(n), p(n), Ap(n), work;
  A.multiply(res.x, r);
  for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];

  std::vector<double> jacobi_inv;
  detail::IncompleteCholesky ic;
  if (opts.preconditioner == PreconKind::Jacobi) {
    jacobi_inv.resize(n);
    for (int i = 0; i < n; ++i) {
      const int d = A.find(i, i);
      const double v = (d >= 0) ? A.vals[d] : 0.0;
      if (!(v > 0.0))
        throw std::invalid_argument("solve_spd: non-positive diagonal entry");
      jacobi_inv[i] = 1.0 / v;
    }
  } else if (opts.preconditioner == PreconKind::IncompleteCholesky) {
    ic = detail::IncompleteCholesky::factor(A);
  }

  auto precondition = [&](const std::vector<double>& rin, std::vector<double>& zout) {
    switch (opts.preconditioner) {
      case PreconKind::None:
        zout = rin;
        break;
      case PreconKind::Jacobi:
        for (int i = 0; i < n; ++i) zout[i] = jacobi_inv[i] * rin[i];
        break;
      case PreconKind::IncompleteCholesky:
        ic.apply(rin, zout, work);
        break;
    }
  };

  const int max_iter = opts.max_iterations > 0 ? opts.max_iterations
                                               : std::max(1000, 2 * n);
  precondition(r, z);
  p = z;
  double rz = detail::dot_product(r, z);

  double rnorm = std::sqrt(detail::dot_product(r, r));
  for (int it = 0; it < max_iter && rnorm / bnorm > opts.rtol; ++it) {
    A.multiply(p, Ap);
    const double pAp = detail::dot_product(p, Ap);
    if (!(pAp > 0.0))
      throw SolveError("solve_spd: non-positive curvature, matrix not SPD", it, rnorm / bnorm);
    const double alpha = rz / pAp;
    for (int i = 0; i < n; ++i) res.x[i] += alpha * p[i];
    for (int i = 0; i < n; ++i) r[i] -= alpha * Ap[i];
    ++res.iterations;
    rnorm = std::sqrt(detail::dot_product(r, r));
    if (rnorm / bnorm <= opts.rtol) {
      // recursive residual reached the target; confirm with the true residual
      A.multiply(res.x, Ap);
      for (int i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
      rnorm = std::sqrt(detail::dot_product(r, r));
      if (rnorm / bnorm <= opts.rtol) break;
    }
    precondition(r, z);
    const double rz_new = detail::dot_product(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }

  res.residual = rnorm / bnorm;
  res.converged = res.residual <= opts.rtol;
  return res;
}

inline CgResult solve_spd(const SparseSystem& sys, double rtol = 1e-10) {
  CgOptions opts;
  opts.rtol = rtol;
  return solve_spd(sys, opts);
}

}  // namespace pfm
