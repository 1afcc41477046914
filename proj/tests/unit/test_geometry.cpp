#include <doctest.h>

#include <random>

#include "atmpc/errors.hpp"
#include "atmpc/geometry.hpp"

using namespace atmpc;
using namespace atmpc::geometry;

namespace {

Matrix pts(std::initializer_list<std::pair<double, double>> list) {
  Matrix V(2, static_cast<int>(list.size()));
  int k = 0;
  for (auto [x, y] : list) V.col(k++) << x, y;
  return V;
}

bool has_vertex(const Polytope& P, double x, double y, double tol = 1e-9) {
  for (int k = 0; k < P.num_vertices(); ++k)
    if (std::abs(P.V()(0, k) - x) <= tol && std::abs(P.V()(1, k) - y) <= tol) return true;
  return false;
}

Vector v2(double x, double y) {
  Vector v(2);
  v << x, y;
  return v;
}

Polytope random_polygon(std::mt19937_64& rng, double r) {
  std::uniform_real_distribution<double> u(-r, r);
  Matrix V(2, 6);
  for (int k = 0; k < 6; ++k) V.col(k) << u(rng), u(rng);
  return Polytope::from_vertices(V);
}

}  // namespace

TEST_CASE("unit square converts between representations") {
  const Polytope P = to_hrep(Polytope::from_vertices(pts({{1, 1}, {1, -1}, {-1, 1}, {-1, -1}})));
  CHECK(P.num_rows() == 4);
  for (int i = 0; i < 4; ++i) CHECK(P.b()(i) == doctest::Approx(1.0));
  CHECK(P.support(v2(1, 0)) == doctest::Approx(1.0));
}

TEST_CASE("simplex halfspaces enumerate to three vertices") {
  Matrix A(3, 2);
  A << -1, 0, 0, -1, 1, 1;
  const Polytope P = to_vrep(Polytope::from_halfspaces(A, Vector::Map(std::vector<double>{0, 0, 1}.data(), 3)));
  CHECK(P.num_vertices() == 3);
  CHECK(has_vertex(P, 0, 0));
  CHECK(has_vertex(P, 1, 0));
  CHECK(has_vertex(P, 0, 1));
}

TEST_CASE("unbounded halfspaces raise on vertex request") {
  Matrix A(1, 2);
  A << 1, 0;
  CHECK_THROWS_AS(to_vrep(Polytope::from_halfspaces(A, Vector::Ones(1))), Error);
}

TEST_CASE("interior points are dropped from the vertex list") {
  const Polytope P = Polytope::from_vertices(pts({{0, 0}, {2, 0}, {0, 2}, {0.5, 0.5}, {1, 1}}));
  CHECK(P.num_vertices() == 3);
}

TEST_CASE("box Minkowski sum and identity element") {
  const Polytope S = minkowski_sum(Polytope::box(2, 1.0), Polytope::box(2, 0.5));
  CHECK(S.num_vertices() == 4);
  CHECK(has_vertex(S, 1.5, 1.5));
  const Polytope P = Polytope::from_vertices(pts({{0, 0}, {2, 0}, {0, 1}}));
  const Polytope Z = minkowski_sum(P, Polytope::point(Vector::Zero(2)));
  CHECK(Z.num_vertices() == 3);
  CHECK(contains(P, Z));
  CHECK(contains(Z, P));
}

TEST_CASE("two orthogonal segments sum to a square") {
  const Polytope a = Polytope::from_vertices(pts({{-1, 0}, {1, 0}}));
  const Polytope b = Polytope::from_vertices(pts({{0, -1}, {0, 1}}));
  const Polytope S = minkowski_sum(a, b);
  CHECK(S.num_vertices() == 4);
  CHECK(volume(S) == doctest::Approx(4.0));
}

TEST_CASE("triangle plus diamond matches a convex-hull oracle") {
  // Hull of pairwise sums computed independently (scipy ConvexHull).
  const Polytope T = Polytope::from_vertices(pts({{0, 0}, {2, 0}, {0, 1}}));
  const Polytope D = Polytope::from_vertices(pts({{0.5, 0}, {0, 0.5}, {-0.5, 0}, {0, -0.5}}));
  const Polytope S = minkowski_sum(T, D);
  CHECK(S.num_vertices() == 7);
  for (auto [x, y] : std::vector<std::pair<double, double>>{
           {-0.5, 0.0}, {0.0, -0.5}, {2.0, -0.5}, {2.5, 0.0}, {2.0, 0.5}, {0.0, 1.5}, {-0.5, 1.0}})
    CHECK(has_vertex(S, x, y));
  CHECK(volume(S) == doctest::Approx(4.0));
}

TEST_CASE("Pontryagin difference of boxes and self difference") {
  const Polytope D = pontryagin_diff(Polytope::box(2, 40.0), Polytope::box(2, 1.0));
  CHECK(has_vertex(D, 39, 39));
  CHECK(has_vertex(D, -39, 39));
  const Polytope Z = pontryagin_diff(Polytope::box(2, 1.0), Polytope::box(2, 1.0));
  CHECK(!Z.is_empty());
  CHECK(diameter(Z) <= 1e-9);
}

TEST_CASE("Pontryagin difference of a triangle matches a halfspace oracle") {
  // Offsets shifted by the box support, intersected with scipy.
  const Polytope T = Polytope::from_vertices(pts({{0, 0}, {4, 0}, {0, 2}}));
  const Polytope D = pontryagin_diff(T, Polytope::box(2, 0.1));
  CHECK(D.num_vertices() == 3);
  CHECK(has_vertex(D, 0.1, 0.1));
  CHECK(has_vertex(D, 3.5, 0.1));
  CHECK(has_vertex(D, 0.1, 1.8));
  CHECK(volume(D) == doctest::Approx(2.89));
}

TEST_CASE("subtracting a too-large set gives the empty value") {
  const Polytope D = pontryagin_diff(Polytope::box(2, 1.0), Polytope::box(2, 2.0));
  CHECK(D.is_empty());
}

TEST_CASE("property: (P ⊖ Q) ⊕ Q ⊆ P and P ⊆ (P ⊕ Q) ⊖ Q") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    const Polytope P = random_polygon(rng, 1.0);
    const Polytope Q = random_polygon(rng, 0.2);
    const Polytope D = pontryagin_diff(P, Q);
    if (!D.is_empty()) CHECK(contains(P, minkowski_sum(D, Q), 1e-8));
    CHECK(contains(pontryagin_diff(minkowski_sum(P, Q), Q), P, 1e-8));
  }
}

TEST_CASE("property: support of a sum is the sum of supports") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < 30; ++i) {
    const Polytope P = random_polygon(rng, 1.0), Q = random_polygon(rng, 0.7);
    const Polytope S = minkowski_sum(P, Q);
    const Vector a = v2(g(rng), g(rng));
    CHECK(S.support(a) == doctest::Approx(P.support(a) + Q.support(a)).epsilon(1e-10));
  }
}

TEST_CASE("affine image, translation and scaling") {
  Matrix T(2, 2);
  T << 2, 0, 0, 0.5;
  const Polytope I = affine_image(T, Polytope::box(2, 1.0));
  CHECK(has_vertex(I, 2, 0.5));
  const Polytope S = translate(scale(Polytope::box(2, 1.0), 3.0), v2(1, -1));
  CHECK(has_vertex(S, 4, 2));
  CHECK(has_vertex(S, -2, -4));
}

TEST_CASE("intersection and hull") {
  const Polytope a = Polytope::box(v2(0, 0), v2(2, 2));
  const Polytope b = Polytope::box(v2(1, 1), v2(3, 3));
  CHECK(volume(intersect(a, b)) == doctest::Approx(1.0));
  CHECK(volume(convex_hull(a, b)) == doctest::Approx(8.0));
  CHECK(intersect(a, translate(b, v2(5, 5))).is_empty());
}

TEST_CASE("projection of a 3-D box onto two coordinates") {
  Vector lo(3), hi(3);
  lo << -1, -2, -3;
  hi << 1, 2, 3;
  const Polytope P = project(Polytope::box(lo, hi), {0, 2});
  CHECK(P.dim() == 2);
  CHECK(has_vertex(P, 1, 3));
  CHECK(volume(P) == doctest::Approx(12.0));
}

TEST_CASE("lower-dimensional sets keep a consistent chart") {
  const Polytope seg = Polytope::from_vertices(pts({{0, 0}, {1, 1}, {2, 2}}));
  CHECK(seg.num_vertices() == 2);
  CHECK(volume(seg) == doctest::Approx(std::sqrt(8.0)));
  CHECK(seg.contains_point(v2(0.5, 0.5)));
  CHECK(!seg.contains_point(v2(0.5, 0.6)));
}

TEST_CASE("Hausdorff distance of nested boxes") {
  CHECK(hausdorff(Polytope::box(2, 1.0), Polytope::box(2, 1.5)) == doctest::Approx(0.5 * std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("mRPI outer bound for scaled identity hits the analytic scaling") {
  for (double lam : {0.3, 0.5, 0.9}) {
    const Matrix F = lam * Matrix::Identity(2, 2);
    const Polytope W = Polytope::box(2, 1.0);
    const Polytope R = mrpi_outer(F, W, 1e-3);
    const double exact = 1.0 / (1.0 - lam);
    for (const Vector& a : {v2(1, 0), v2(0, 1), v2(1, 1), v2(-1, 0.5)}) {
      const double h = R.support(a), h_exact = exact * W.support(a);
      CHECK(h >= h_exact * (1 - 1e-9));
      CHECK(h <= h_exact * (1 + 1e-3));
    }
    CHECK(is_robust_invariant(F, R, W));
  }
}

TEST_CASE("mRPI rejects an unstable map") {
  CHECK_THROWS_AS(mrpi_outer(1.1 * Matrix::Identity(2, 2), Polytope::box(2, 1.0), 1e-3), Error);
}

TEST_CASE("maximal invariant set of a scalar loop") {
  // x⁺ = 0.9x + w, |w| ≤ 0.01, u = −0.5x ∈ [−0.2, 0.2], |x| ≤ 1: the input row binds first, |x| ≤ 0.4.
  const Matrix Acl = Matrix::Constant(1, 1, 0.9);
  const Matrix K = Matrix::Constant(1, 1, -0.5);
  const Polytope S = max_invariant_set(Acl, Polytope::box(1, 0.01), Polytope::box(1, 1.0), Polytope::box(1, 0.2), K);
  CHECK(S.support(Vector::Ones(1)) == doctest::Approx(0.4));
  CHECK(S.support(-Vector::Ones(1)) == doctest::Approx(0.4));
  CHECK(is_robust_invariant(Acl, S, Polytope::box(1, 0.01)));
}

TEST_CASE("maximal invariant set is empty when the disturbance is too large") {
  const Matrix Acl = Matrix::Constant(1, 1, 0.9);
  const Matrix K = Matrix::Constant(1, 1, -0.5);
  CHECK_THROWS_AS(max_invariant_set(Acl, Polytope::box(1, 0.5), Polytope::box(1, 1.0), Polytope::box(1, 0.2), K),
                  Error);
}

TEST_CASE("point projection lands on the nearest face") {
  const Vector p = project_point(Polytope::box(2, 1.0), v2(3, 0.5));
  CHECK(p(0) == doctest::Approx(1.0));
  CHECK(p(1) == doctest::Approx(0.5));
}
