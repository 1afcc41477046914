#include "atmpc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <Eigen/SVD>

#include "atmpc/errors.hpp"
#include "atmpc/lp.hpp"
#include "atmpc/qp.hpp"

namespace atmpc::geometry {
namespace {

constexpr double kRowZeroTol = 1e-12;

void require_same_dim(int a, int b, const char* where) {
  if (a != b) fail(ErrorCode::kDimMismatch, std::string(where) + ": dimensions " + std::to_string(a) + " vs " + std::to_string(b));
}

// Visits every size-r subset of {0..k-1} in lexicographic order.
template <typename Fn>
void for_each_combination(int k, int r, Fn&& fn) {
  if (r > k || r <= 0) return;
  std::vector<int> idx(r);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    fn(idx);
    int i = r - 1;
    while (i >= 0 && idx[i] == k - r + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < r; ++j) idx[j] = idx[j - 1] + 1;
  }
}

Matrix dedup_columns(const Matrix& V, double tol) {
  std::vector<int> keep;
  for (int j = 0; j < V.cols(); ++j) {
    bool dup = false;
    for (int k : keep) {
      if ((V.col(j) - V.col(k)).cwiseAbs().maxCoeff() <= tol) {
        dup = true;
        break;
      }
    }
    if (!dup) keep.push_back(j);
  }
  Matrix out(V.rows(), static_cast<int>(keep.size()));
  for (size_t i = 0; i < keep.size(); ++i) out.col(static_cast<int>(i)) = V.col(keep[i]);
  return out;
}

struct RowSet {
  Matrix A;
  Vector b;
  bool infeasible = false;
};

// Unit-normalizes rows, drops vanishing rows (flagging 0 ≤ negative), merges
// duplicates keeping the tightest offset.
RowSet normalize_rows(const Matrix& A, const Vector& b) {
  RowSet out;
  const int n = static_cast<int>(A.cols());
  std::vector<Vector> rows;
  std::vector<double> offs;
  for (int i = 0; i < A.rows(); ++i) {
    const double nrm = A.row(i).norm();
    if (nrm <= kRowZeroTol) {
      if (b(i) < -kTolGeo) out.infeasible = true;
      continue;
    }
    Vector a = A.row(i).transpose() / nrm;
    const double bi = b(i) / nrm;
    bool merged = false;
    for (size_t k = 0; k < rows.size(); ++k) {
      if ((rows[k] - a).cwiseAbs().maxCoeff() <= 1e-12) {
        offs[k] = std::min(offs[k], bi);
        merged = true;
        break;
      }
    }
    if (!merged) {
      rows.push_back(std::move(a));
      offs.push_back(bi);
    }
  }
  out.A.resize(static_cast<int>(rows.size()), n);
  out.b.resize(static_cast<int>(rows.size()));
  for (size_t k = 0; k < rows.size(); ++k) {
    out.A.row(static_cast<int>(k)) = rows[k].transpose();
    out.b(static_cast<int>(k)) = offs[k];
  }
  return out;
}

struct ChartFit {
  AffineChart chart;
  Matrix local;  // chart coordinates of the input points
};

ChartFit fit_chart(const Matrix& pts) {
  const int n = static_cast<int>(pts.rows());
  const int k = static_cast<int>(pts.cols());
  ChartFit fit;
  fit.chart.origin = pts.rowwise().mean();
  const Matrix X = pts.colwise() - fit.chart.origin;
  const double scale = pts.size() > 0 ? std::max(1.0, pts.cwiseAbs().maxCoeff()) : 1.0;
  int r = 0;
  Matrix U = Matrix::Identity(n, n);
  if (k > 1 && n > 0) {
    Eigen::JacobiSVD<Matrix> svd(X, Eigen::ComputeFullU);
    U = svd.matrixU();
    const Vector& sv = svd.singularValues();
    const double tol = 1e-10 * scale * std::sqrt(static_cast<double>(k));
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > tol) ++r;
  }
  fit.chart.basis = U.leftCols(r);
  fit.chart.normals = U.rightCols(n - r);
  fit.local = fit.chart.basis.transpose() * X;
  return fit;
}

double cross2(const Vector& o, const Vector& a, const Vector& b) {
  return (a(0) - o(0)) * (b(1) - o(1)) - (a(1) - o(1)) * (b(0) - o(0));
}

struct LocalHull {
  Matrix A;
  Vector b;
  std::vector<int> vertex_idx;
};

LocalHull hull_1d(const Matrix& Z) {
  LocalHull h;
  int lo = 0, hi = 0;
  for (int j = 1; j < Z.cols(); ++j) {
    if (Z(0, j) < Z(0, lo)) lo = j;
    if (Z(0, j) > Z(0, hi)) hi = j;
  }
  h.A.resize(2, 1);
  h.b.resize(2);
  h.A << 1.0, -1.0;
  h.b << Z(0, hi), -Z(0, lo);
  h.vertex_idx = {lo, hi};
  return h;
}

// Andrew's monotone chain; counter-clockwise vertex order.
LocalHull hull_2d(const Matrix& Z) {
  const int k = static_cast<int>(Z.cols());
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (Z(0, a) != Z(0, b)) return Z(0, a) < Z(0, b);
    return Z(1, a) < Z(1, b);
  });
  const double scale = std::max(1.0, Z.cwiseAbs().maxCoeff());
  const double tol = 1e-13 * scale * scale;
  std::vector<int> hull(2 * k);
  int h = 0;
  for (int i = 0; i < k; ++i) {
    while (h >= 2 && cross2(Z.col(hull[h - 2]), Z.col(hull[h - 1]), Z.col(order[i])) <= tol) --h;
    hull[h++] = order[i];
  }
  for (int i = k - 2, lower = h + 1; i >= 0; --i) {
    while (h >= lower && cross2(Z.col(hull[h - 2]), Z.col(hull[h - 1]), Z.col(order[i])) <= tol) --h;
    hull[h++] = order[i];
  }
  hull.resize(std::max(h - 1, 1));
  LocalHull out;
  out.vertex_idx = hull;
  const int nv = static_cast<int>(hull.size());
  out.A.resize(nv, 2);
  out.b.resize(nv);
  for (int i = 0; i < nv; ++i) {
    const Vector p = Z.col(hull[i]);
    const Vector q = Z.col(hull[(i + 1) % nv]);
    Vector nrm(2);
    nrm << q(1) - p(1), p(0) - q(0);
    nrm.normalize();
    out.A.row(i) = nrm.transpose();
    out.b(i) = nrm.dot(p);
  }
  return out;
}

// Facet enumeration over r-subsets; adequate for the few dozen points that
// arise in chart dimension ≥ 3.
LocalHull hull_nd(const Matrix& Z) {
  const int r = static_cast<int>(Z.rows());
  const int k = static_cast<int>(Z.cols());
  const double scale = std::max(1.0, Z.cwiseAbs().maxCoeff());
  const double tol = 1e-9 * scale;
  std::vector<Vector> normals;
  std::vector<double> offsets;
  for_each_combination(k, r, [&](const std::vector<int>& idx) {
    Matrix D(r - 1, r);
    for (int i = 1; i < r; ++i) D.row(i - 1) = (Z.col(idx[i]) - Z.col(idx[0])).transpose();
    Eigen::JacobiSVD<Matrix> svd(D, Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    if (sv.size() < r - 1 || sv(r - 2) <= 1e-7 * scale) return;
    Vector nrm = svd.matrixV().col(r - 1);
    double off = nrm.dot(Z.col(idx[0]));
    const Vector s = Z.transpose() * nrm;
    const bool below = (s.array() <= off + tol).all();
    const bool above = (s.array() >= off - tol).all();
    if (!below && !above) return;
    if (!below) {
      nrm = -nrm;
      off = -off;
    }
    for (size_t f = 0; f < normals.size(); ++f) {
      if ((normals[f] - nrm).cwiseAbs().maxCoeff() <= 1e-9 && std::abs(offsets[f] - off) <= tol) return;
    }
    normals.push_back(nrm);
    offsets.push_back(off);
  });
  LocalHull out;
  out.A.resize(static_cast<int>(normals.size()), r);
  out.b.resize(static_cast<int>(normals.size()));
  for (size_t f = 0; f < normals.size(); ++f) {
    out.A.row(static_cast<int>(f)) = normals[f].transpose();
    out.b(static_cast<int>(f)) = offsets[f];
  }
  for (int j = 0; j < k; ++j) {
    std::vector<int> tight;
    for (int f = 0; f < out.A.rows(); ++f)
      if (out.A.row(f).dot(Z.col(j)) >= out.b(f) - tol) tight.push_back(f);
    if (static_cast<int>(tight.size()) < r) continue;
    Matrix T(static_cast<int>(tight.size()), r);
    for (size_t i = 0; i < tight.size(); ++i) T.row(static_cast<int>(i)) = out.A.row(tight[i]);
    Eigen::FullPivLU<Matrix> lu(T);
    lu.setThreshold(1e-9);
    if (lu.rank() == r) out.vertex_idx.push_back(j);
  }
  return out;
}

Polytope hull_of_points(const Matrix& pts_in) {
  const int n = static_cast<int>(pts_in.rows());
  if (pts_in.cols() == 0) return Polytope::empty(n);
  const Matrix pts = dedup_columns(pts_in, kVertexMergeTol);
  const ChartFit fit = fit_chart(pts);
  const AffineChart& ch = fit.chart;
  const int r = ch.chart_dim();

  LocalHull lh;
  if (r == 0) {
    lh.vertex_idx = {0};
    lh.A.resize(0, 0);
    lh.b.resize(0);
  } else if (r == 1) {
    lh = hull_1d(fit.local);
  } else if (r == 2) {
    lh = hull_2d(fit.local);
  } else {
    lh = hull_nd(fit.local);
  }

  const int nv = static_cast<int>(lh.vertex_idx.size());
  Matrix V(n, nv);
  for (int j = 0; j < nv; ++j) {
    const int i = lh.vertex_idx[j];
    V.col(j) = (r == n) ? Vector(pts.col(i)) : Vector(ch.origin + ch.basis * fit.local.col(i));
  }
  if (r == 0) V.col(0) = ch.origin;

  const int nf = static_cast<int>(lh.A.rows());
  const int ne = n - r;
  Matrix A(nf + 2 * ne, n);
  Vector b(nf + 2 * ne);
  for (int f = 0; f < nf; ++f) {
    const Vector a = ch.basis * lh.A.row(f).transpose();
    A.row(f) = a.transpose();
    b(f) = lh.b(f) + a.dot(ch.origin);
  }
  for (int e = 0; e < ne; ++e) {
    const Vector nu = ch.normals.col(e);
    A.row(nf + 2 * e) = nu.transpose();
    b(nf + 2 * e) = nu.dot(ch.origin);
    A.row(nf + 2 * e + 1) = -nu.transpose();
    b(nf + 2 * e + 1) = -nu.dot(ch.origin);
  }
  return Polytope::from_both_unchecked(A, b, V);
}

bool is_bounded(const Matrix& A, const Vector& b) {
  const int d = static_cast<int>(A.cols());
  for (int j = 0; j < d; ++j) {
    for (double sgn : {1.0, -1.0}) {
      Vector c = Vector::Zero(d);
      c(j) = sgn;
      if (lp::maximize(c, A, b).status == lp::LpStatus::kUnbounded) return false;
    }
  }
  return true;
}

// Basic feasible points of {A x ≤ b}; caller guarantees bounded and nonempty.
Matrix enumerate_vertices(const Matrix& A, const Vector& b) {
  const int m = static_cast<int>(A.rows());
  const int d = static_cast<int>(A.cols());
  std::vector<Vector> found;
  std::vector<double> excess;
  const double bscale = std::max(1.0, b.size() ? b.cwiseAbs().maxCoeff() : 0.0);
  for_each_combination(m, d, [&](const std::vector<int>& idx) {
    Matrix S(d, d);
    Vector rhs(d);
    for (int i = 0; i < d; ++i) {
      S.row(i) = A.row(idx[i]);
      rhs(i) = b(idx[i]);
    }
    Eigen::PartialPivLU<Matrix> lu(S);
    if (std::abs(lu.determinant()) <= 1e-12) return;
    const Vector x = lu.solve(rhs);
    const double over = (A * x - b).maxCoeff();
    if (over > 1e-9 * bscale) return;
    // A degenerate vertex is reached from several bases; keep the solve that
    // violates the other rows least.
    for (size_t j = 0; j < found.size(); ++j)
      if ((found[j] - x).cwiseAbs().maxCoeff() <= kVertexMergeTol) {
        if (over < excess[j]) {
          found[j] = x;
          excess[j] = over;
        }
        return;
      }
    found.push_back(x);
    excess.push_back(over);
  });
  Matrix V(d, static_cast<int>(found.size()));
  for (size_t j = 0; j < found.size(); ++j) V.col(static_cast<int>(j)) = found[j];
  return V;
}

// Completes an H-described set: emptiness, boundedness, pruning, vertices.
Polytope complete_from_rows(const RowSet& rows, int dim) {
  if (rows.infeasible) return Polytope::empty(dim);
  if (dim == 0) return Polytope::from_both_unchecked(Matrix(0, 0), Vector(0), Matrix(0, 1));
  if (rows.A.rows() == 0) fail(ErrorCode::kUnboundedSet, "halfspace set without rows");
  const lp::Chebyshev cb = lp::chebyshev_center(rows.A, rows.b);
  if (!cb.feasible) return Polytope::empty(dim);
  if (!is_bounded(rows.A, rows.b)) fail(ErrorCode::kUnboundedSet, "polyhedron is unbounded");
  std::vector<int> keep = irredundant_rows(rows.A, rows.b);
  const double bscale = std::max(1.0, rows.b.cwiseAbs().maxCoeff());
  Matrix A, V;
  Vector b;
  // The pruning LPs can misjudge nearly parallel rows; a pruned row that cuts
  // an enumerated vertex was not redundant and goes back in.
  for (int pass = 0; pass <= rows.A.rows(); ++pass) {
    A.resize(static_cast<int>(keep.size()), dim);
    b.resize(static_cast<int>(keep.size()));
    for (size_t i = 0; i < keep.size(); ++i) {
      A.row(static_cast<int>(i)) = rows.A.row(keep[i]);
      b(static_cast<int>(i)) = rows.b(keep[i]);
    }
    V = enumerate_vertices(A, b);
    if (V.cols() == 0) return Polytope::empty(dim);
    const Vector worst = ((rows.A * V).colwise() - rows.b).rowwise().maxCoeff();
    std::vector<char> kept(rows.A.rows(), 0);
    for (int i : keep) kept[i] = 1;
    bool added = false;
    for (int i = 0; i < rows.A.rows(); ++i)
      if (!kept[i] && worst(i) > 1e-9 * bscale) {
        keep.push_back(i);
        added = true;
      }
    if (!added) break;
    std::sort(keep.begin(), keep.end());
  }
  // Each enumerated point solves dim independent tight rows, so with interior
  // it is already a vertex; only flat sets need the hull pass for their chart.
  const double scale = std::max(1.0, V.cwiseAbs().maxCoeff());
  if (cb.radius > 1e-7 * scale) return Polytope::from_both_unchecked(A, b, V);
  const Polytope minimal = hull_of_points(V);
  return Polytope::from_both_unchecked(A, b, minimal.V());
}

}  // namespace

// ---------------------------------------------------------------- Polytope

Polytope Polytope::from_halfspaces(const Matrix& A, const Vector& b) {
  if (A.rows() != b.size()) fail(ErrorCode::kDimMismatch, "from_halfspaces: A rows vs b size");
  Polytope P;
  P.dim_ = static_cast<int>(A.cols());
  const RowSet rows = normalize_rows(A, b);
  if (rows.infeasible) return empty(P.dim_);
  P.empty_ = false;
  P.A_ = rows.A;
  P.b_ = rows.b;
  return P;
}

Polytope Polytope::from_vertices(const Matrix& V) { return hull_of_points(V); }

Polytope Polytope::empty(int dim) {
  Polytope P;
  P.dim_ = dim;
  P.empty_ = true;
  return P;
}

Polytope Polytope::point(const Vector& x) { return hull_of_points(x); }

Polytope Polytope::box(const Vector& lower, const Vector& upper) { return Interval(lower, upper).to_polytope(); }

Polytope Polytope::box(int dim, double radius) {
  return box(Vector::Constant(dim, -radius), Vector::Constant(dim, radius));
}

Polytope Polytope::from_both_unchecked(const Matrix& A, const Vector& b, const Matrix& V) {
  Polytope P;
  P.dim_ = static_cast<int>(V.rows());
  P.empty_ = V.cols() == 0;
  if (P.empty_) return P;
  P.A_ = A;
  P.b_ = b;
  P.V_ = V;
  return P;
}

const Matrix& Polytope::A() const {
  if (!A_) fail(ErrorCode::kEmptySet, "polytope has no halfspace representation");
  return *A_;
}
const Vector& Polytope::b() const {
  if (!b_) fail(ErrorCode::kEmptySet, "polytope has no halfspace representation");
  return *b_;
}
const Matrix& Polytope::V() const {
  if (!V_) fail(ErrorCode::kEmptySet, "polytope has no vertex representation");
  return *V_;
}

double Polytope::support(const Vector& a) const {
  if (empty_) return -std::numeric_limits<double>::infinity();
  return (V().transpose() * a).maxCoeff();
}

bool Polytope::contains_point(const Vector& x, double tol) const {
  if (empty_) return false;
  if (has_hrep()) return ((*A_) * x - *b_).maxCoeff() <= tol;
  return geometry::contains_point(to_hrep(*this), x, tol);
}

// ---------------------------------------------------------------- Interval

Interval::Interval(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size()) fail(ErrorCode::kDimMismatch, "Interval bounds");
  if ((lower.array() > upper.array()).any()) fail(ErrorCode::kEmptySet, "Interval with lower > upper");
}

bool Interval::contains(const Vector& x, double tol) const {
  return (x.array() >= lower.array() - tol).all() && (x.array() <= upper.array() + tol).all();
}

double Interval::support(const Vector& a) const {
  double s = 0.0;
  for (int i = 0; i < dim(); ++i) s += a(i) >= 0 ? a(i) * upper(i) : a(i) * lower(i);
  return s;
}

Polytope Interval::to_polytope() const {
  const int n = dim();
  Matrix V(n, 1 << n);
  for (int mask = 0; mask < (1 << n); ++mask)
    for (int i = 0; i < n; ++i) V(i, mask) = (mask >> i) & 1 ? upper(i) : lower(i);
  if ((upper - lower).minCoeff() <= 0.0) return hull_of_points(V);
  Matrix A(2 * n, n);
  Vector b(2 * n);
  A.setZero();
  for (int i = 0; i < n; ++i) {
    A(2 * i, i) = 1.0;
    b(2 * i) = upper(i);
    A(2 * i + 1, i) = -1.0;
    b(2 * i + 1) = -lower(i);
  }
  return Polytope::from_both_unchecked(A, b, V);
}

// ---------------------------------------------------------------- charts

AffineChart affine_chart(const Matrix& points) {
  if (points.cols() == 0) fail(ErrorCode::kEmptySet, "affine_chart of no points");
  return fit_chart(dedup_columns(points, kVertexMergeTol)).chart;
}

Polytope AffineChart::lift(const Polytope& local) const {
  const int n = ambient_dim();
  if (local.is_empty()) return Polytope::empty(n);
  require_same_dim(local.dim(), chart_dim(), "AffineChart::lift");
  const Polytope L = complete(local);
  const int nf = L.num_rows();
  const int ne = static_cast<int>(normals.cols());
  Matrix A(nf + 2 * ne, n);
  Vector b(nf + 2 * ne);
  for (int f = 0; f < nf; ++f) {
    const Vector a = basis * L.A().row(f).transpose();
    A.row(f) = a.transpose();
    b(f) = L.b()(f) + a.dot(origin);
  }
  for (int e = 0; e < ne; ++e) {
    A.row(nf + 2 * e) = normals.col(e).transpose();
    b(nf + 2 * e) = normals.col(e).dot(origin);
    A.row(nf + 2 * e + 1) = -normals.col(e).transpose();
    b(nf + 2 * e + 1) = -normals.col(e).dot(origin);
  }
  const Matrix V = (basis * L.V()).colwise() + origin;
  return Polytope::from_both_unchecked(A, b, V);
}

Polytope AffineChart::restrict(const Polytope& global) const {
  if (global.is_empty()) return Polytope::empty(chart_dim());
  require_same_dim(global.dim(), ambient_dim(), "AffineChart::restrict");
  const Polytope G = to_vrep(global);
  return Polytope::from_vertices(basis.transpose() * (G.V().colwise() - origin));
}

// ---------------------------------------------------------------- conversions

Polytope to_hrep(const Polytope& P) {
  if (P.is_empty() || P.has_hrep()) return P;
  return hull_of_points(P.V());
}

Polytope to_vrep(const Polytope& P) {
  if (P.is_empty()) fail(ErrorCode::kEmptySet, "to_vrep of empty set");
  if (P.has_vrep()) return P;
  const Polytope C = complete_from_rows(RowSet{P.A(), P.b(), false}, P.dim());
  if (C.is_empty()) fail(ErrorCode::kEmptySet, "halfspace system is infeasible");
  return C;
}

Polytope complete(const Polytope& P) {
  if (P.is_empty()) return P;
  if (P.has_hrep() && P.has_vrep()) return P;
  if (P.has_vrep()) return hull_of_points(P.V());
  return complete_from_rows(RowSet{P.A(), P.b(), false}, P.dim());
}

std::vector<int> irredundant_rows(const Matrix& A, const Vector& b) {
  const int m = static_cast<int>(A.rows());
  std::vector<char> keep(m, 1);
  for (int i = 0; i < m; ++i) {
    int cnt = 0;
    for (int j = 0; j < m; ++j)
      if (keep[j] && j != i) ++cnt;
    Matrix Ao(cnt, A.cols());
    Vector bo(cnt);
    for (int j = 0, k = 0; j < m; ++j) {
      if (!keep[j] || j == i) continue;
      Ao.row(k) = A.row(j);
      bo(k++) = b(j);
    }
    const lp::LpResult r = lp::maximize(A.row(i).transpose(), Ao, bo);
    if (r.status == lp::LpStatus::kOptimal && r.value <= b(i) + kTolGeo * std::max(1.0, std::abs(b(i)))) keep[i] = 0;
  }
  std::vector<int> out;
  for (int i = 0; i < m; ++i)
    if (keep[i]) out.push_back(i);
  return out;
}

// ---------------------------------------------------------------- algebra

Polytope minkowski_sum(const Polytope& P, const Polytope& Q) {
  require_same_dim(P.dim(), Q.dim(), "minkowski_sum");
  if (P.is_empty() || Q.is_empty()) return Polytope::empty(P.dim());
  const Polytope Pv = to_vrep(P);
  const Polytope Qv = to_vrep(Q);
  const int np = Pv.num_vertices(), nq = Qv.num_vertices();
  Matrix S(P.dim(), np * nq);
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < nq; ++j) S.col(i * nq + j) = Pv.V().col(i) + Qv.V().col(j);
  return hull_of_points(S);
}

Polytope pontryagin_diff(const Polytope& P, const Polytope& Q) {
  require_same_dim(P.dim(), Q.dim(), "pontryagin_diff");
  if (P.is_empty()) return P;
  if (Q.is_empty()) return complete(P);
  const Polytope Ph = to_hrep(P);
  const Polytope Qv = to_vrep(Q);
  Vector b = Ph.b();
  for (int i = 0; i < b.size(); ++i) {
#ifdef ATMPC_MUTATE_PONTRYAGIN
    b(i) += Qv.support(Ph.A().row(i).transpose());
#else
    b(i) -= Qv.support(Ph.A().row(i).transpose());
#endif
  }
  return complete_from_rows(RowSet{Ph.A(), b, false}, P.dim());
}

Polytope affine_image(const Matrix& T, const Polytope& P) {
  require_same_dim(static_cast<int>(T.cols()), P.dim(), "affine_image");
  if (P.is_empty()) return Polytope::empty(static_cast<int>(T.rows()));
  return hull_of_points(T * to_vrep(P).V());
}

Polytope translate(const Polytope& P, const Vector& shift) {
  require_same_dim(static_cast<int>(shift.size()), P.dim(), "translate");
  if (P.is_empty()) return P;
  const Polytope C = complete(P);
  return Polytope::from_both_unchecked(C.A(), C.b() + C.A() * shift, C.V().colwise() + shift);
}

Polytope scale(const Polytope& P, double factor) {
  if (P.is_empty()) return P;
  if (factor <= 0.0) return hull_of_points(factor * to_vrep(P).V());
  const Polytope C = complete(P);
  return Polytope::from_both_unchecked(C.A(), factor * C.b(), factor * C.V());
}

Polytope intersect(const Polytope& P, const Polytope& Q) {
  require_same_dim(P.dim(), Q.dim(), "intersect");
  if (P.is_empty() || Q.is_empty()) return Polytope::empty(P.dim());
  const Polytope Ph = to_hrep(P), Qh = to_hrep(Q);
  Matrix A(Ph.num_rows() + Qh.num_rows(), P.dim());
  Vector b(A.rows());
  A << Ph.A(), Qh.A();
  b << Ph.b(), Qh.b();
  return complete_from_rows(normalize_rows(A, b), P.dim());
}

Polytope project(const Polytope& P, const std::vector<int>& coords) {
  const int n = P.dim();
  std::vector<char> seen(n, 0);
  for (int c : coords) {
    if (c < 0 || c >= n || seen[c]) fail(ErrorCode::kDimMismatch, "project: bad coordinate index");
    seen[c] = 1;
  }
  const int k = static_cast<int>(coords.size());
  if (P.is_empty()) return Polytope::empty(k);
  if (!P.has_hrep()) {
    Matrix V(k, P.num_vertices());
    for (int i = 0; i < k; ++i) V.row(i) = P.V().row(coords[i]);
    return hull_of_points(V);
  }

  // Column order: kept coordinates first, then the ones to eliminate.
  std::vector<int> order(coords);
  for (int c = 0; c < n; ++c)
    if (!seen[c]) order.push_back(c);
  Matrix A(P.num_rows(), n);
  for (int j = 0; j < n; ++j) A.col(j) = P.A().col(order[j]);
  Vector b = P.b();

  for (int last = n - 1; last >= k; --last) {
    std::vector<int> pos, neg, zero;
    for (int i = 0; i < A.rows(); ++i) {
      const double a = A(i, last);
      if (a > 1e-12) pos.push_back(i);
      else if (a < -1e-12) neg.push_back(i);
      else zero.push_back(i);
    }
    const int rows = static_cast<int>(zero.size() + pos.size() * neg.size());
    Matrix An(rows, last);
    Vector bn(rows);
    int r = 0;
    for (int i : zero) {
      An.row(r) = A.row(i).head(last);
      bn(r++) = b(i);
    }
    for (int i : pos) {
      for (int j : neg) {
        const double wi = 1.0 / A(i, last), wj = -1.0 / A(j, last);
        An.row(r) = wi * A.row(i).head(last) + wj * A.row(j).head(last);
        bn(r++) = wi * b(i) + wj * b(j);
      }
    }
    RowSet rs = normalize_rows(An, bn);
    if (rs.infeasible) return Polytope::empty(k);
    if (last > k && rs.A.rows() > 0) {
      if (!lp::chebyshev_center(rs.A, rs.b).feasible) return Polytope::empty(k);
      const std::vector<int> keep = irredundant_rows(rs.A, rs.b);
      Matrix Ak(static_cast<int>(keep.size()), last);
      Vector bk(static_cast<int>(keep.size()));
      for (size_t i = 0; i < keep.size(); ++i) {
        Ak.row(static_cast<int>(i)) = rs.A.row(keep[i]);
        bk(static_cast<int>(i)) = rs.b(keep[i]);
      }
      A = Ak;
      b = bk;
    } else {
      A = rs.A;
      b = rs.b;
    }
  }
  return complete_from_rows(normalize_rows(A, b), k);
}

Polytope cartesian_product(const Polytope& P, const Polytope& Q) {
  const int n = P.dim(), m = Q.dim();
  if (P.is_empty() || Q.is_empty()) return Polytope::empty(n + m);
  const Polytope Pc = complete(P), Qc = complete(Q);
  Matrix A = Matrix::Zero(Pc.num_rows() + Qc.num_rows(), n + m);
  Vector b(A.rows());
  A.topLeftCorner(Pc.num_rows(), n) = Pc.A();
  A.bottomRightCorner(Qc.num_rows(), m) = Qc.A();
  b << Pc.b(), Qc.b();
  Matrix V(n + m, Pc.num_vertices() * Qc.num_vertices());
  for (int i = 0; i < Pc.num_vertices(); ++i)
    for (int j = 0; j < Qc.num_vertices(); ++j) {
      V.col(i * Qc.num_vertices() + j) << Pc.V().col(i), Qc.V().col(j);
    }
  return Polytope::from_both_unchecked(A, b, V);
}

Polytope convex_hull(const Polytope& P, const Polytope& Q) { return convex_hull(std::vector<Polytope>{P, Q}); }

Polytope convex_hull(const std::vector<Polytope>& sets) {
  if (sets.empty()) fail(ErrorCode::kEmptySet, "convex_hull of no sets");
  const int n = sets.front().dim();
  int total = 0;
  std::vector<Polytope> vs;
  for (const Polytope& S : sets) {
    require_same_dim(S.dim(), n, "convex_hull");
    if (S.is_empty()) continue;
    vs.push_back(to_vrep(S));
    total += vs.back().num_vertices();
  }
  if (total == 0) return Polytope::empty(n);
  Matrix V(n, total);
  int c = 0;
  for (const Polytope& S : vs) {
    V.middleCols(c, S.num_vertices()) = S.V();
    c += S.num_vertices();
  }
  return hull_of_points(V);
}

bool contains(const Polytope& P, const Polytope& Q, double tol) {
  require_same_dim(P.dim(), Q.dim(), "contains");
  if (Q.is_empty()) return true;
  if (P.is_empty()) return false;
  const Polytope Ph = to_hrep(P);
  const Polytope Qv = to_vrep(Q);
  const Matrix S = (Ph.A() * Qv.V()).colwise() - Ph.b();
  return S.maxCoeff() <= tol;
}

bool contains_point(const Polytope& P, const Vector& x, double tol) {
  require_same_dim(P.dim(), static_cast<int>(x.size()), "contains_point");
  if (P.is_empty()) return false;
  return max_violation(P, x) <= tol;
}

double max_violation(const Polytope& P, const Vector& x) {
  if (P.is_empty()) return std::numeric_limits<double>::infinity();
  const Polytope Ph = to_hrep(P);
  if (Ph.num_rows() == 0) return -std::numeric_limits<double>::infinity();
  return (Ph.A() * x - Ph.b()).maxCoeff();
}

namespace {

// Affine directions of a point set: orthonormal columns spanning aff(pts) − mean.
Matrix affine_directions(const Matrix& pts, double scale) {
  const Vector c = pts.rowwise().mean();
  const Matrix X = pts.colwise() - c;
  if (X.cols() < 2) return Matrix(pts.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(X, Eigen::ComputeThinU);
  const double tol = 1e-10 * scale * std::sqrt(static_cast<double>(X.cols()));
  int r = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > tol) ++r;
  return svd.matrixU().leftCols(r);
}

// k-volume of the face spanned by vertices S of a complete polytope, by the
// pyramid decomposition over its (k−1)-faces. Faces come from vertex-row
// incidences, so no hull is recomputed.
double face_volume(const Matrix& V, const Matrix& A, const Vector& b, const std::vector<int>& S, int k,
                   double scale) {
  if (k == 0) return 1.0;
  Matrix pts(V.rows(), static_cast<int>(S.size()));
  for (std::size_t j = 0; j < S.size(); ++j) pts.col(static_cast<int>(j)) = V.col(S[j]);
  const Vector c = pts.rowwise().mean();
  if (k == 1) {
    const Matrix D = affine_directions(pts, scale);
    if (D.cols() == 0) return 0.0;
    const Vector t = D.col(0).transpose() * (pts.colwise() - c);
    return t.maxCoeff() - t.minCoeff();
  }
  const double tight_tol = 1e-9 * scale;
  std::set<std::vector<int>> faces;
  for (int r = 0; r < A.rows(); ++r) {
    std::vector<int> T;
    for (int j : S)
      if (A.row(r).dot(V.col(j)) >= b(r) - tight_tol) T.push_back(j);
    if (static_cast<int>(T.size()) < k || T.size() == S.size()) continue;
    faces.insert(std::move(T));
  }
  double vol = 0.0;
  for (auto it = faces.begin(); it != faces.end(); ++it) {
    // Keep maximal sets only; a proper subset of another face is a lower face.
    bool maximal = true;
    for (const auto& other : faces)
      if (other.size() > it->size() && std::includes(other.begin(), other.end(), it->begin(), it->end())) {
        maximal = false;
        break;
      }
    if (!maximal) continue;
    Matrix F(V.rows(), static_cast<int>(it->size()));
    for (std::size_t j = 0; j < it->size(); ++j) F.col(static_cast<int>(j)) = V.col((*it)[j]);
    const Matrix D = affine_directions(F, scale);
    if (D.cols() != k - 1) continue;
    const Vector w = c - F.rowwise().mean();
    const double height = (w - D * (D.transpose() * w)).norm();
    vol += height * face_volume(V, A, b, *it, k - 1, scale) / k;
  }
  return vol;
}

}  // namespace

double volume(const Polytope& P) {
  if (P.is_empty()) return 0.0;
  const Polytope Pc = complete(P);
  const ChartFit fit = fit_chart(Pc.V());
  const int k = fit.chart.chart_dim();
  if (k == 0) return 0.0;
  const double scale = std::max(1.0, Pc.V().cwiseAbs().maxCoeff());
  std::vector<int> all(Pc.num_vertices());
  for (int j = 0; j < Pc.num_vertices(); ++j) all[j] = j;
  return face_volume(Pc.V(), Pc.A(), Pc.b(), all, k, scale);
}

double diameter(const Polytope& P) {
  if (P.is_empty()) return 0.0;
  const Polytope Pv = to_vrep(P);
  double d = 0.0;
  for (int i = 0; i < Pv.num_vertices(); ++i)
    for (int j = i + 1; j < Pv.num_vertices(); ++j) d = std::max(d, (Pv.V().col(i) - Pv.V().col(j)).norm());
  return d;
}

double inf_radius(const Polytope& P) {
  if (P.is_empty()) return 0.0;
  return to_vrep(P).V().cwiseAbs().maxCoeff();
}

double hausdorff(const Polytope& P, const Polytope& Q) {
  require_same_dim(P.dim(), Q.dim(), "hausdorff");
  if (P.is_empty() || Q.is_empty()) return std::numeric_limits<double>::infinity();
  // dist(·, convex set) is convex, so each one-sided distance peaks at a vertex.
  const Polytope Pv = to_vrep(P), Qv = to_vrep(Q);
  auto one_sided = [](const Polytope& from, const Polytope& to) {
    double h = 0.0;
    for (int j = 0; j < from.num_vertices(); ++j) {
      const Vector v = from.V().col(j);
      h = std::max(h, (v - project_point(to, v)).norm());
    }
    return h;
  };
  return std::max(one_sided(Pv, Qv), one_sided(Qv, Pv));
}

Vector project_point(const Polytope& P, const Vector& x) {
  require_same_dim(P.dim(), static_cast<int>(x.size()), "project_point");
  if (P.is_empty()) fail(ErrorCode::kEmptySet, "project_point onto empty set");
  const Polytope Ph = to_hrep(P);
  if (max_violation(Ph, x) <= 0.0) return x;
  qp::QpProblem pb;
  const int n = P.dim();
  pb.H = Matrix::Identity(n, n);
  pb.g = -x;
  pb.A_ineq = Ph.A().sparseView();
  pb.b_ineq = Ph.b();
  pb.A_eq.resize(0, n);
  pb.b_eq.resize(0);
  const qp::QpResult r = qp::solve(pb);
  if (r.status == qp::QpStatus::kInfeasible) fail(ErrorCode::kEmptySet, "project_point: infeasible set");
  return r.x;
}

}  // namespace atmpc::geometry
