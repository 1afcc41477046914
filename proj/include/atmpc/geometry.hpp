#pragma once

#include <optional>
#include <vector>

#include "atmpc/linalg.hpp"

namespace atmpc::geometry {

// Absolute tolerance on normalized H-rows for containment and equality tests.
inline constexpr double kTolGeo = 1e-9;
// Two vertices are the same point when ‖v − w‖∞ ≤ kVertexMergeTol.
inline constexpr double kVertexMergeTol = 1e-8;

// Convex polytope with optional halfspace (A x ≤ b, rows of unit norm) and
// vertex (columns of V) representations. Immutable; cheap to copy-share.
//
// Empty sets are ordinary values with is_empty() == true; they carry no
// representation.
class Polytope {
 public:
  Polytope() = default;

  // Rows are normalized and exact duplicates merged. No pruning, no vertices.
  static Polytope from_halfspaces(const Matrix& A, const Vector& b);
  // Vertices are columns. Computes the minimal V-rep and the H-rep.
  static Polytope from_vertices(const Matrix& V);
  static Polytope empty(int dim);
  static Polytope point(const Vector& x);
  static Polytope box(const Vector& lower, const Vector& upper);
  static Polytope box(int dim, double radius);

  // Assembles an already-consistent pair without recomputation.
  static Polytope from_both_unchecked(const Matrix& A, const Vector& b, const Matrix& V);

  int dim() const { return dim_; }
  bool is_empty() const { return empty_; }
  bool has_hrep() const { return A_.has_value(); }
  bool has_vrep() const { return V_.has_value(); }

  const Matrix& A() const;
  const Vector& b() const;
  const Matrix& V() const;  // dim × num_vertices
  int num_rows() const { return has_hrep() ? static_cast<int>(A_->rows()) : 0; }
  int num_vertices() const { return has_vrep() ? static_cast<int>(V_->cols()) : 0; }

  // h_P(a) = max over vertices of a·v. Requires V-rep; −∞ for empty sets.
  double support(const Vector& a) const;
  bool contains_point(const Vector& x, double tol = kTolGeo) const;

 private:
  int dim_ = 0;
  bool empty_ = true;
  std::optional<Matrix> A_;
  std::optional<Vector> b_;
  std::optional<Matrix> V_;
};

// Axis-aligned box; fast path for ‖x‖∞-type constraint sets.
struct Interval {
  Vector lower;
  Vector upper;

  Interval(Vector lo, Vector hi);
  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const Vector& x, double tol = kTolGeo) const;
  double support(const Vector& a) const;
  Polytope to_polytope() const;
};

// Orthonormal coordinates of the affine hull of a point set:
// x = origin + basis z, with normals spanning the orthogonal complement.
struct AffineChart {
  Vector origin;
  Matrix basis;    // n × k
  Matrix normals;  // n × (n − k)

  int ambient_dim() const { return static_cast<int>(origin.size()); }
  int chart_dim() const { return static_cast<int>(basis.cols()); }
  Vector to_local(const Vector& x) const { return basis.transpose() * (x - origin); }
  Vector to_global(const Vector& z) const { return origin + basis * z; }
  // Embeds a chart-coordinate polytope; the H-rep gains equality pairs for
  // the normal directions.
  Polytope lift(const Polytope& local) const;
  // Chart-coordinate image of a polytope lying in the affine hull.
  Polytope restrict(const Polytope& global) const;
};

AffineChart affine_chart(const Matrix& points);

// Representation completion. to_vrep raises UnboundedSet/EmptySet.
Polytope to_hrep(const Polytope& P);
Polytope to_vrep(const Polytope& P);
// Both representations with redundant rows pruned; empty input maps to the
// empty value, unbounded input raises UnboundedSet.
Polytope complete(const Polytope& P);

Polytope minkowski_sum(const Polytope& P, const Polytope& Q);
Polytope pontryagin_diff(const Polytope& P, const Polytope& Q);
Polytope affine_image(const Matrix& T, const Polytope& P);
Polytope translate(const Polytope& P, const Vector& shift);
Polytope scale(const Polytope& P, double factor);
Polytope intersect(const Polytope& P, const Polytope& Q);
Polytope project(const Polytope& P, const std::vector<int>& coords);
Polytope cartesian_product(const Polytope& P, const Polytope& Q);
// Convex hull of the union (also accepts a single extra point via point()).
Polytope convex_hull(const Polytope& P, const Polytope& Q);
Polytope convex_hull(const std::vector<Polytope>& sets);

bool contains(const Polytope& P, const Polytope& Q, double tol = kTolGeo);
bool contains_point(const Polytope& P, const Vector& x, double tol = kTolGeo);

// max over vertices of the normalized-row slack violation; ≤ 0 means inside.
double max_violation(const Polytope& P, const Vector& x);

// Intrinsic volume (length/area/volume in the affine hull's dimension).
double volume(const Polytope& P);
double diameter(const Polytope& P);
// Radius of the smallest origin-centered ∞-ball containing P.
double inf_radius(const Polytope& P);
// Euclidean Hausdorff distance: largest vertex-to-set distance in either direction.
double hausdorff(const Polytope& P, const Polytope& Q);

// Euclidean projection of x onto P (small QP over the H-rep).
Vector project_point(const Polytope& P, const Vector& x);

// Row redundancy removal: one LP per row. Returns kept row indices.
std::vector<int> irredundant_rows(const Matrix& A, const Vector& b);

// ε-accurate outer approximation of the minimal RPI set of x⁺ = F x + w,
// w ∈ W. A W without interior margin around 0 is first enlarged by a box of
// half-width bloat_ratio · ‖W‖∞, so the result is RPI for that enlarged set.
Polytope mrpi_outer(const Matrix& F, const Polytope& W, double eps, int iter_cap = 200,
                    double bloat_ratio = 1e-3);

// Maximal S ⊆ X with K S ⊆ U and Acl S ⊕ W ⊆ S.
Polytope max_invariant_set(const Matrix& Acl, const Polytope& W, const Polytope& X, const Polytope& U,
                           const Matrix& K, int iter_cap = 200);

// True iff F·R ⊕ W ⊆ R (support-function test per H-row of R).
bool is_robust_invariant(const Matrix& F, const Polytope& R, const Polytope& W, double tol = kTolGeo);

}  // namespace atmpc::geometry
