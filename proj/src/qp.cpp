#include "atmpc/qp.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/QR>

namespace atmpc::qp {

const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::kOptimal: return "Optimal";
    case QpStatus::kInfeasible: return "Infeasible";
    case QpStatus::kNumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();
// Unit-normal rows violated by less than this count as satisfied.
constexpr double kViolTol = 1e-11;

// Constraint in GI form: npᵀx + c ≥ 0 (equalities: = 0). Normals are unit
// length; `scale` converts multipliers back to the caller's row scaling.
struct GiConstraint {
  Eigen::SparseVector<double> np;
  double c = 0.0;
  double scale = 1.0;
};

double dot(const Eigen::SparseVector<double>& a, const Vector& x) {
  double s = 0.0;
  for (Eigen::SparseVector<double>::InnerIterator it(a); it; ++it) s += it.value() * x(it.index());
  return s;
}

class GoldfarbIdnani {
 public:
  GoldfarbIdnani(const Matrix& G, const Vector& g0, std::vector<GiConstraint> eq, std::vector<GiConstraint> in)
      : n_(static_cast<int>(g0.size())), G_(G), g0_(g0), eq_(std::move(eq)), in_(std::move(in)) {}

  QpStatus run() {
    const int n = n_;
    const int p = static_cast<int>(eq_.size());
    const int m = static_cast<int>(in_.size());

    Eigen::LLT<Matrix> llt(G_);
    if (llt.info() != Eigen::Success) return QpStatus::kNumericalFailure;
    // J = L⁻ᵀ so that J Jᵀ = G⁻¹.
    const Matrix L = llt.matrixL();
    J_ = L.transpose().triangularView<Eigen::Upper>().solve(Matrix::Identity(n, n));

    x_ = -llt.solve(g0_);
    R_ = Matrix::Zero(n, n);
    u_ = Vector::Zero(p + m + 1);
    A_.assign(p + m + 1, 0);
    iq_ = 0;
    R_norm_ = 1.0;
    Vector d(n), z(n), r(n + 1);

    for (int i = 0; i < p; ++i) {
      const auto& con = eq_[i];
      d = J_.transpose() * Vector(con.np);
      update_z(z, d);
      update_r(r, d);
      double t2 = 0.0;
      const double znp = dot(con.np, z);
      if (z.squaredNorm() > kEps) t2 = (-dot(con.np, x_) - con.c) / znp;
      x_ += t2 * z;
      u_(iq_) = t2;
      for (int k = 0; k < iq_; ++k) u_(k) -= t2 * r(k);
      A_[iq_] = -i - 1;
      if (!add_constraint(d)) {
        // Linearly dependent equality: acceptable only if already satisfied.
        --iq_;
        R_.col(iq_).setZero();
        u_(iq_) = 0.0;
        A_[iq_] = 0;
        if (std::abs(dot(con.np, x_) + con.c) > 1e-9) return QpStatus::kInfeasible;
      }
    }

    Vector s = Vector::Zero(m);
    std::vector<int> iai(m);
    std::vector<char> iaexcl(m, 1);
    for (int i = 0; i < m; ++i) iai[i] = i;
    Vector u_old(p + m + 1), x_old(n);
    std::vector<int> A_old(p + m + 1);
    int ip = -1;

    const int cap = 20 * (n + m) + 100;
    while (true) {  // l1
      if (++iterations_ > cap) return QpStatus::kNumericalFailure;
      for (int i = p; i < iq_; ++i) iai[A_[i]] = -1;
      double psi = 0.0;
      for (int i = 0; i < m; ++i) {
        iaexcl[i] = 1;
        s(i) = dot(in_[i].np, x_) + in_[i].c;
        psi = std::min(psi, s(i));
      }
      if (psi >= -kViolTol) return QpStatus::kOptimal;
      u_old.head(iq_) = u_.head(iq_);
      for (int i = 0; i < iq_; ++i) A_old[i] = A_[i];
      x_old = x_;

      bool restart_l1 = false;
      while (!restart_l1) {  // l2
        double ss = 0.0;
        ip = -1;
        for (int i = 0; i < m; ++i) {
          if (s(i) < std::min(ss, -kViolTol) && iai[i] != -1 && iaexcl[i]) {
            ss = s(i);
            ip = i;
          }
        }
        if (ip < 0) return QpStatus::kOptimal;
        u_(iq_) = 0.0;
        A_[iq_] = ip;

        bool back_to_l2 = false;
        while (!back_to_l2 && !restart_l1) {  // l2a
          if (++iterations_ > cap) return QpStatus::kNumericalFailure;
          const auto& con = in_[ip];
          d = J_.transpose() * Vector(con.np);
          update_z(z, d);
          update_r(r, d);

          int l = -1;
          double t1 = kInf;
          for (int k = p; k < iq_; ++k) {
            if (r(k) > 0.0 && u_(k) / r(k) < t1) {
              t1 = u_(k) / r(k);
              l = A_[k];
            }
          }
          double t2 = kInf;
          const double znp = dot(con.np, z);
          if (z.squaredNorm() > kEps) {
            t2 = -s(ip) / znp;
            if (t2 < 0.0) t2 = kInf;
          }
          const double t = std::min(t1, t2);
          if (t >= kInf) return QpStatus::kInfeasible;

          if (t2 >= kInf) {
            for (int k = 0; k < iq_; ++k) u_(k) -= t * r(k);
            u_(iq_) += t;
            iai[l] = l;
            delete_constraint(p, l);
            continue;
          }

          x_ += t * z;
          for (int k = 0; k < iq_; ++k) u_(k) -= t * r(k);
          u_(iq_) += t;

          if (std::abs(t - t2) < kEps) {
            if (!add_constraint(d)) {
              iaexcl[ip] = 0;
              delete_constraint(p, ip);
              for (int i = 0; i < m; ++i) iai[i] = i;
              for (int i = p; i < iq_; ++i) {
                A_[i] = A_old[i];
                u_(i) = u_old(i);
                iai[A_[i]] = -1;
              }
              x_ = x_old;
              back_to_l2 = true;
            } else {
              iai[ip] = -1;
              restart_l1 = true;
            }
            continue;
          }

          iai[l] = l;
          delete_constraint(p, l);
          s(ip) = dot(con.np, x_) + con.c;
        }
      }
    }
  }

  const Vector& x() const { return x_; }
  int iterations() const { return iterations_; }

  // Multipliers in GI sign convention, indexed like eq_ / in_.
  void multipliers(Vector& ueq, Vector& uin) const {
    ueq = Vector::Zero(static_cast<int>(eq_.size()));
    uin = Vector::Zero(static_cast<int>(in_.size()));
    for (int k = 0; k < iq_; ++k) {
      if (A_[k] < 0) ueq(-A_[k] - 1) = u_(k);
      else uin(A_[k]) = u_(k);
    }
  }

 private:
  void update_z(Vector& z, const Vector& d) const {
    z.setZero();
    for (int j = iq_; j < n_; ++j) z += J_.col(j) * d(j);
  }

  void update_r(Vector& r, const Vector& d) const {
    for (int i = iq_ - 1; i >= 0; --i) {
      double sum = 0.0;
      for (int j = i + 1; j < iq_; ++j) sum += R_(i, j) * r(j);
      r(i) = (d(i) - sum) / R_(i, i);
    }
  }

  bool add_constraint(Vector& d) {
    for (int j = n_ - 1; j >= iq_ + 1; --j) {
      double cc = d(j - 1);
      double ss = d(j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      d(j) = 0.0;
      ss /= h;
      cc /= h;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d(j - 1) = -h;
      } else {
        d(j - 1) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = 0; k < n_; ++k) {
        const double t1 = J_(k, j - 1);
        const double t2 = J_(k, j);
        J_(k, j - 1) = t1 * cc + t2 * ss;
        J_(k, j) = xny * (t1 + J_(k, j - 1)) - t2;
      }
    }
    ++iq_;
    for (int i = 0; i < iq_; ++i) R_(i, iq_ - 1) = d(i);
    if (std::abs(d(iq_ - 1)) <= kEps * R_norm_) return false;
    R_norm_ = std::max(R_norm_, std::abs(d(iq_ - 1)));
    return true;
  }

  void delete_constraint(int p, int l) {
    int qq = -1;
    for (int i = p; i < iq_; ++i) {
      if (A_[i] == l) {
        qq = i;
        break;
      }
    }
    if (qq < 0) return;
    for (int i = qq; i < iq_ - 1; ++i) {
      A_[i] = A_[i + 1];
      u_(i) = u_(i + 1);
      R_.col(i) = R_.col(i + 1);
    }
    A_[iq_ - 1] = A_[iq_];
    u_(iq_ - 1) = u_(iq_);
    A_[iq_] = 0;
    u_(iq_) = 0.0;
    for (int j = 0; j < iq_; ++j) R_(j, iq_ - 1) = 0.0;
    --iq_;
    if (iq_ == 0) return;
    for (int j = qq; j < iq_; ++j) {
      double cc = R_(j, j);
      double ss = R_(j + 1, j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      cc /= h;
      ss /= h;
      R_(j + 1, j) = 0.0;
      if (cc < 0.0) {
        R_(j, j) = -h;
        cc = -cc;
        ss = -ss;
      } else {
        R_(j, j) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = j + 1; k < iq_; ++k) {
        const double t1 = R_(j, k);
        const double t2 = R_(j + 1, k);
        R_(j, k) = t1 * cc + t2 * ss;
        R_(j + 1, k) = xny * (t1 + R_(j, k)) - t2;
      }
      for (int k = 0; k < n_; ++k) {
        const double t1 = J_(k, j);
        const double t2 = J_(k, j + 1);
        J_(k, j) = t1 * cc + t2 * ss;
        J_(k, j + 1) = xny * (J_(k, j) + t1) - t2;
      }
    }
  }

  int n_;
  Matrix G_;
  Vector g0_;
  std::vector<GiConstraint> eq_;
  std::vector<GiConstraint> in_;
  Matrix J_;
  Matrix R_;
  Vector x_;
  Vector u_;
  std::vector<int> A_;
  int iq_ = 0;
  double R_norm_ = 1.0;
  int iterations_ = 0;
};

}  // namespace

QpResult solve(const QpProblem& pb) {
  const int n = pb.num_vars();
  QpResult res;
  res.x = Vector::Zero(n);
  res.lambda_ineq = Vector::Zero(pb.A_ineq.rows());
  res.lambda_eq = Vector::Zero(pb.A_eq.rows());

  std::vector<GiConstraint> eq, in;
  for (int i = 0; i < pb.A_eq.rows(); ++i) {
    const double nrm = pb.A_eq.row(i).norm();
    if (nrm == 0.0) {
      if (std::abs(pb.b_eq(i)) > 1e-12) {
        res.status = QpStatus::kInfeasible;
        return res;
      }
      eq.push_back(GiConstraint{Eigen::SparseVector<double>(n), 0.0, 0.0});
      continue;
    }
    GiConstraint c;
    c.np = (pb.A_eq.row(i).transpose() / nrm).sparseView();
    c.c = -pb.b_eq(i) / nrm;
    c.scale = nrm;
    eq.push_back(std::move(c));
  }
  in.reserve(pb.A_ineq.rows());
  for (int i = 0; i < pb.A_ineq.rows(); ++i) {
    const double nrm = pb.A_ineq.row(i).norm();
    GiConstraint c;
    c.np.resize(n);
    if (nrm == 0.0) {
      if (pb.b_ineq(i) < -1e-12) {
        res.status = QpStatus::kInfeasible;
        return res;
      }
      c.c = 1.0;  // trivially satisfied row
      c.scale = 0.0;
      in.push_back(std::move(c));
      continue;
    }
    for (SparseRows::InnerIterator it(pb.A_ineq, i); it; ++it) c.np.insert(it.index()) = -it.value() / nrm;
    c.c = pb.b_ineq(i) / nrm;
    c.scale = nrm;
    in.push_back(std::move(c));
  }

  GoldfarbIdnani gi(pb.H, pb.g, std::move(eq), std::move(in));
  const QpStatus st = gi.run();
  res.iterations = gi.iterations();
  res.x = gi.x();
  if (st != QpStatus::kOptimal) {
    res.status = st;
    return res;
  }
  Vector ueq, uin;
  gi.multipliers(ueq, uin);
  for (int i = 0; i < uin.size(); ++i) {
    const double nrm = pb.A_ineq.row(i).norm();
    res.lambda_ineq(i) = nrm > 0.0 ? uin(i) / nrm : 0.0;
  }
  for (int i = 0; i < ueq.size(); ++i) {
    const double nrm = pb.A_eq.row(i).norm();
    res.lambda_eq(i) = nrm > 0.0 ? -ueq(i) / nrm : 0.0;
  }

  const Vector& x = res.x;
  res.objective = 0.5 * x.dot(pb.H * x) + pb.g.dot(x);
  double viol = 0.0;
  if (pb.A_ineq.rows() > 0) {
    const Vector ax = pb.A_ineq * x - pb.b_ineq;
    for (int i = 0; i < ax.size(); ++i) {
      const double nrm = pb.A_ineq.row(i).norm();
      if (nrm > 0.0) viol = std::max(viol, ax(i) / nrm);
    }
  }
  if (pb.A_eq.rows() > 0) viol = std::max(viol, (pb.A_eq * x - pb.b_eq).cwiseAbs().maxCoeff());
  res.primal_residual = viol;

  const Vector grad0 = pb.H * x + pb.g;
  auto stationarity = [&]() {
    Vector grad = grad0;
    if (pb.A_ineq.rows() > 0) grad += pb.A_ineq.transpose() * res.lambda_ineq;
    if (pb.A_eq.rows() > 0) grad += pb.A_eq.transpose() * res.lambda_eq;
    return grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
  };
  const double grad_scale = std::max({1.0, (pb.H * x).cwiseAbs().maxCoeff(), pb.g.size() ? pb.g.cwiseAbs().maxCoeff() : 0.0});
  res.stationarity_residual = stationarity();
  if (res.stationarity_residual > 1e-6 * grad_scale) {
    // Long degenerate pivot sequences leave round-off in the dual iterate; the
    // active set is still right, so re-solve the multipliers on it.
    std::vector<int> act;
    for (int i = 0; i < uin.size(); ++i)
      if (uin(i) > 0.0) act.push_back(i);
    const int ne = static_cast<int>(pb.A_eq.rows());
    Matrix M(n, ne + static_cast<int>(act.size()));
    if (ne > 0) M.leftCols(ne) = pb.A_eq.transpose();
    for (std::size_t k = 0; k < act.size(); ++k) M.col(ne + static_cast<int>(k)) = pb.A_ineq.row(act[k]).transpose();
    const Vector lam = M.completeOrthogonalDecomposition().solve(-grad0);
    Vector lin = Vector::Zero(pb.A_ineq.rows());
    for (std::size_t k = 0; k < act.size(); ++k) lin(act[k]) = lam(ne + static_cast<int>(k));
    const Vector keep_in = res.lambda_ineq, keep_eq = res.lambda_eq;
    res.lambda_ineq = lin;
    res.lambda_eq = lam.head(ne);
    const double refined = stationarity();
    if (refined < res.stationarity_residual) {
      res.stationarity_residual = refined;
    } else {
      res.lambda_ineq = keep_in;
      res.lambda_eq = keep_eq;
    }
  }

  const bool ok = res.primal_residual <= 1e-7 && res.stationarity_residual <= 1e-6 * grad_scale &&
                  (res.lambda_ineq.size() == 0 || res.lambda_ineq.minCoeff() >= -1e-9 * grad_scale);
  res.status = ok ? QpStatus::kOptimal : QpStatus::kNumericalFailure;
  return res;
}

}  // namespace atmpc::qp
