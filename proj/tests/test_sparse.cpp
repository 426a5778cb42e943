#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "pfm/sparse.hpp"

using namespace pfm;

namespace {

CsrMatrix from_dense(const std::vector<std::vector<double>>& d) {
  CsrMatrix A;
  A.n = static_cast<int>(d.size());
  A.row_ptr.push_back(0);
  for (int i = 0; i < A.n; ++i) {
    for (int j = 0; j < A.n; ++j)
      if (d[i][j] != 0.0) {
        A.cols.push_back(j);
        A.vals.push_back(d[i][j]);
      }
    A.row_ptr.push_back(static_cast<int>(A.cols.size()));
  }
  return A;
}

// dense Gaussian elimination with partial pivoting, the oracle for CG
std::vector<double> dense_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const int n = static_cast<int>(b.size());
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(a[i][k]) > std::abs(a[piv][k])) piv = i;
    std::swap(a[k], a[piv]);
    std::swap(b[k], b[piv]);
    for (int i = k + 1; i < n; ++i) {
      const double f = a[i][k] / a[k][k];
      for (int j = k; j < n; ++j) a[i][j] -= f * a[k][j];
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
    x[i] = s / a[i][i];
  }
  return x;
}

CsrMatrix poisson1d(int n) {
  CsrMatrix A;
  A.n = n;
  A.row_ptr.push_back(0);
  for (int i = 0; i < n; ++i) {
    if (i > 0) {
      A.cols.push_back(i - 1);
      A.vals.push_back(-1.0);
    }
    A.cols.push_back(i);
    A.vals.push_back(2.0);
    if (i < n - 1) {
      A.cols.push_back(i + 1);
      A.vals.push_back(-1.0);
    }
    A.row_ptr.push_back(static_cast<int>(A.cols.size()));
  }
  return A;
}

}  // namespace

TEST_CASE("csr multiply and lookup match the dense definition") {
  const std::vector<std::vector<double>> d = {
      {4.0, -1.0, 0.0}, {-1.0, 4.0, -1.0}, {0.0, -1.0, 4.0}};
  const CsrMatrix A = from_dense(d);
  CHECK(A.find(0, 2) == -1);
  CHECK(A.vals[A.find(1, 0)] == -1.0);
  CHECK(A.vals[A.find(2, 2)] == 4.0);

  const std::vector<double> x = {1.0, 2.0, 3.0};
  std::vector<double> y(3);
  A.multiply(x, y);
  CHECK(y[0] == Catch::Approx(2.0));
  CHECK(y[1] == Catch::Approx(4.0));
  CHECK(y[2] == Catch::Approx(10.0));

  CHECK(A.infinity_asymmetry() == 0.0);
  CsrMatrix B = A;
  B.vals[B.find(0, 1)] = -2.0;
  CHECK(B.infinity_asymmetry() == Catch::Approx(1.0));
}

TEST_CASE("cg solves diagonal systems exactly") {
  SparseSystem sys;
  sys.matrix = from_dense({{2.0, 0.0}, {0.0, 4.0}});
  sys.rhs = {2.0, 8.0};
  const CgResult r = solve_spd(sys);
  REQUIRE(r.converged);
  CHECK(r.x[0] == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(r.x[1] == Catch::Approx(2.0).epsilon(1e-12));

  sys.matrix = from_dense({{1.0, 0.0}, {0.0, 1.0}});
  sys.rhs = {3.5, -2.5};
  const CgResult id = solve_spd(sys);
  REQUIRE(id.converged);
  CHECK(id.x[0] == Catch::Approx(3.5).epsilon(1e-13));
  CHECK(id.x[1] == Catch::Approx(-2.5).epsilon(1e-13));
}

TEST_CASE("zero right-hand side short-circuits to the zero solution") {
  SparseSystem sys;
  sys.matrix = poisson1d(10);
  sys.rhs.assign(10, 0.0);
  const CgResult r = solve_spd(sys);
  CHECK(r.converged);
  CHECK(r.iterations == 0);
  for (double v : r.x) CHECK(v == 0.0);
}

TEST_CASE("cg matches dense elimination on a random spd system") {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const int n = 50;
  std::vector<std::vector<double>> m(n, std::vector<double>(n));
  for (auto& row : m)
    for (double& v : row) v = uni(rng);
  // A = M^T M + I is SPD with a dense pattern
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) a[i][j] += m[k][i] * m[k][j];
      if (i == j) a[i][j] += 1.0;
    }
  std::vector<double> b(n);
  for (double& v : b) v = uni(rng);

  SparseSystem sys{from_dense(a), b};
  CgOptions opts;
  opts.rtol = 1e-12;
  opts.max_iterations = 10000;
  const CgResult r = solve_spd(sys, opts);
  REQUIRE(r.converged);

  const std::vector<double> ref = dense_solve(a, b);
  for (int i = 0; i < n; ++i) CHECK(r.x[i] == Catch::Approx(ref[i]).margin(1e-8));
}

TEST_CASE("jacobi preconditioner rejects non-positive diagonals") {
  SparseSystem sys;
  sys.matrix = from_dense({{1.0, 0.5}, {0.5, -1.0}});
  sys.rhs = {1.0, 1.0};
  CHECK_THROWS_AS(solve_spd(sys), std::invalid_argument);
}

TEST_CASE("indefinite systems raise a solver error") {
  SparseSystem sys;
  sys.matrix = from_dense({{1.0, 0.0}, {0.0, -1.0}});
  sys.rhs = {1.0, 1.0};
  CgOptions opts;
  opts.preconditioner = PreconKind::None;
  CHECK_THROWS_AS(solve_spd(sys, opts), SolveError);
}

TEST_CASE("incomplete cholesky is exact for tridiagonal systems") {
  SparseSystem sys;
  sys.matrix = poisson1d(100);
  sys.rhs.assign(100, 1.0);
  CgOptions opts;
  opts.preconditioner = PreconKind::IncompleteCholesky;
  const CgResult r = solve_spd(sys, opts);
  REQUIRE(r.converged);
  // zero fill-in on a tridiagonal pattern is the complete factorization
  CHECK(r.iterations <= 2);

  std::vector<double> check(100);
  sys.matrix.multiply(r.x, check);
  for (double v : check) CHECK(v == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("preconditioners agree on the solution") {
  SparseSystem sys;
  sys.matrix = poisson1d(60);
  sys.rhs.resize(60);
  for (int i = 0; i < 60; ++i) sys.rhs[i] = std::sin(0.1 * i);

  CgOptions none, jac, ic;
  none.preconditioner = PreconKind::None;
  jac.preconditioner = PreconKind::Jacobi;
  ic.preconditioner = PreconKind::IncompleteCholesky;
  const CgResult a = solve_spd(sys, none);
  const CgResult b = solve_spd(sys, jac);
  const CgResult c = solve_spd(sys, ic);

  auto verify = [&](const CgResult& r) {
    REQUIRE(r.converged);
    std::vector<double> ax(60);
    sys.matrix.multiply(r.x, ax);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 60; ++i) {
      num += (ax[i] - sys.rhs[i]) * (ax[i] - sys.rhs[i]);
      den += sys.rhs[i] * sys.rhs[i];
    }
    CHECK(std::sqrt(num / den) <= 1e-9);
  };
  verify(a);
  verify(b);
  verify(c);

  double scale = 0.0;
  for (double v : a.x) scale = std::max(scale, std::abs(v));
  for (int i = 0; i < 60; ++i) {
    CHECK(a.x[i] == Catch::Approx(b.x[i]).margin(1e-6 * scale));
    CHECK(a.x[i] == Catch::Approx(c.x[i]).margin(1e-6 * scale));
  }
}

TEST_CASE("warm start from the exact solution converges immediately") {
  SparseSystem sys;
  sys.matrix = poisson1d(30);
  sys.rhs.assign(30, 0.5);
  const CgResult cold = solve_spd(sys);
  REQUIRE(cold.converged);

  CgOptions opts;
  opts.initial_guess = cold.x;
  const CgResult warm = solve_spd(sys, opts);
  CHECK(warm.converged);
  CHECK(warm.iterations == 0);
  CHECK(warm.x == cold.x);
}

TEST_CASE("repeated solves are bitwise identical") {
  SparseSystem sys;
  sys.matrix = poisson1d(40);
  sys.rhs.resize(40);
  for (int i = 0; i < 40; ++i) sys.rhs[i] = 1.0 / (1.0 + i);
  const CgResult a = solve_spd(sys);
  const CgResult b = solve_spd(sys);
  CHECK(a.x == b.x);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("rhs size mismatch throws") {
  SparseSystem sys;
  sys.matrix = poisson1d(5);
  sys.rhs.assign(4, 1.0);
  CHECK_THROWS_AS(solve_spd(sys), std::invalid_argument);
}
