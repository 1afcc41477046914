#include <doctest.h>

#include <random>

#include "atmpc/lp.hpp"
#include "atmpc/qp.hpp"

using namespace atmpc;

namespace {

qp::SparseRows sparse(const Matrix& A) { return A.sparseView(); }

}  // namespace

TEST_CASE("LP optimum, infeasibility and unboundedness") {
  Matrix A(3, 2);
  A << 1, 0, 0, 1, 1, 1;
  Vector b(3);
  b << 1, 2, 2.5;
  const auto r = lp::maximize(Vector::Ones(2), A, b);
  REQUIRE(r.status == lp::LpStatus::kOptimal);
  CHECK(r.value == doctest::Approx(2.5));

  Matrix Ai(2, 1);
  Ai << 1, -1;
  Vector bi(2);
  bi << -1, -1;
  CHECK(lp::maximize(Vector::Ones(1), Ai, bi).status == lp::LpStatus::kInfeasible);

  Matrix Au(1, 1);
  Au << -1;
  CHECK(lp::maximize(Vector::Ones(1), Au, Vector::Zero(1)).status == lp::LpStatus::kUnbounded);
}

TEST_CASE("Chebyshev ball of a box") {
  Matrix A(4, 2);
  A << 1, 0, -1, 0, 0, 1, 0, -1;
  Vector b(4);
  b << 1, 1, 3, 1;
  const auto c = lp::chebyshev_center(A, b, 10.0);
  REQUIRE(c.feasible);
  CHECK(c.radius == doctest::Approx(1.0));
}

TEST_CASE("textbook inequality QP") {
  // min (x1 − 1)² + (x2 − 2.5)² over a pentagon; optimum (1.4, 1.7).
  qp::QpProblem p;
  p.H = 2.0 * Matrix::Identity(2, 2);
  p.g.resize(2);
  p.g << -2, -5;
  Matrix A(5, 2);
  A << -1, 2, 1, 2, 1, -2, -1, 0, 0, -1;
  p.A_ineq = sparse(A);
  p.b_ineq.resize(5);
  p.b_ineq << 2, 6, 2, 0, 0;
  p.A_eq = Matrix(0, 2);
  p.b_eq = Vector(0);
  const auto r = qp::solve(p);
  REQUIRE(r.status == qp::QpStatus::kOptimal);
  CHECK(r.x(0) == doctest::Approx(1.4));
  CHECK(r.x(1) == doctest::Approx(1.7));
  CHECK(r.lambda_ineq(0) == doctest::Approx(0.8));
}

TEST_CASE("equality-constrained QP") {
  qp::QpProblem p;
  p.H = Matrix::Identity(2, 2);
  p.g = Vector::Zero(2);
  p.A_eq = Matrix::Ones(1, 2);
  p.b_eq = Vector::Ones(1);
  p.A_ineq = qp::SparseRows(0, 2);
  p.b_ineq = Vector(0);
  const auto r = qp::solve(p);
  REQUIRE(r.status == qp::QpStatus::kOptimal);
  CHECK(r.x(0) == doctest::Approx(0.5));
  CHECK(r.x(1) == doctest::Approx(0.5));
}

TEST_CASE("infeasible QP is reported") {
  qp::QpProblem p;
  p.H = Matrix::Identity(1, 1);
  p.g = Vector::Zero(1);
  Matrix A(2, 1);
  A << 1, -1;
  p.A_ineq = sparse(A);
  p.b_ineq.resize(2);
  p.b_ineq << -1, -1;
  p.A_eq = Matrix(0, 1);
  p.b_eq = Vector(0);
  CHECK(qp::solve(p).status == qp::QpStatus::kInfeasible);
}

TEST_CASE("property: random feasible QPs satisfy KKT") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 6, m = 15;
    Matrix M(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = g(rng);
    qp::QpProblem p;
    p.H = M * M.transpose() + 0.1 * Matrix::Identity(n, n);
    p.g.resize(n);
    for (int i = 0; i < n; ++i) p.g(i) = 5.0 * g(rng);
    Matrix A(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = g(rng);
    Vector x0(n);
    for (int i = 0; i < n; ++i) x0(i) = g(rng);
    p.A_ineq = sparse(A);
    p.b_ineq = A * x0 + Vector::Constant(m, 0.1);
    p.A_eq = Matrix(0, n);
    p.b_eq = Vector(0);
    const auto r = qp::solve(p);
    REQUIRE(r.status == qp::QpStatus::kOptimal);
    const Vector slack = p.b_ineq - A * r.x;
    CHECK(slack.minCoeff() >= -1e-8);
    CHECK(r.lambda_ineq.minCoeff() >= -1e-9);
    CHECK(std::abs(slack.dot(r.lambda_ineq)) <= 1e-6 * std::max(1.0, r.lambda_ineq.norm()));
    const Vector grad = p.H * r.x + p.g + A.transpose() * r.lambda_ineq;
    CHECK(grad.cwiseAbs().maxCoeff() <= 1e-6 * std::max(1.0, p.g.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("duplicated and degenerate rows do not break the active set") {
  qp::QpProblem p;
  p.H = Matrix::Identity(2, 2);
  p.g.resize(2);
  p.g << -3, -3;
  Matrix A(6, 2);
  A << 1, 0, 1, 0, 2, 0, 0, 1, 0, 1, 1, 1;
  p.A_ineq = sparse(A);
  p.b_ineq.resize(6);
  p.b_ineq << 1, 1, 2, 1, 1, 2;
  p.A_eq = Matrix(0, 2);
  p.b_eq = Vector(0);
  const auto r = qp::solve(p);
  REQUIRE(r.status == qp::QpStatus::kOptimal);
  CHECK(r.x(0) == doctest::Approx(1.0));
  CHECK(r.x(1) == doctest::Approx(1.0));
}
