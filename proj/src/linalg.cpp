#include "atmpc/linalg.hpp"

#include <Eigen/Eigenvalues>

namespace atmpc {

Matrix kron_identity_row(int n, const Vector& v) {
  const int k = static_cast<int>(v.size());
  Matrix out = Matrix::Zero(n, n * k);
  for (int i = 0; i < n; ++i) out.block(i, i * k, 1, k) = v.transpose();
  return out;
}

double spectral_radius(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(M, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double min_sym_eigenvalue(const Matrix& M) {
  const Matrix S = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Vector vec_rows(const Matrix& M) {
  Vector out(M.size());
  int k = 0;
  for (int i = 0; i < M.rows(); ++i)
    for (int j = 0; j < M.cols(); ++j) out(k++) = M(i, j);
  return out;
}

double inf_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  return M.cwiseAbs().maxCoeff();
}

}  // namespace atmpc
