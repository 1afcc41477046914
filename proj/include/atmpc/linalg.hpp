#pragma once

#include <Eigen/Dense>

namespace atmpc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// I_n ⊗ vᵀ, the n × (n·len(v)) block-diagonal row layout used by the filter.
Matrix kron_identity_row(int n, const Vector& v);

double spectral_radius(const Matrix& M);

// Smallest eigenvalue of (M + Mᵀ)/2.
double min_sym_eigenvalue(const Matrix& M);

// Row-major vectorization of M (rows concatenated).
Vector vec_rows(const Matrix& M);

double inf_norm(const Matrix& M);

}  // namespace atmpc
