#pragma once

#include <Eigen/Core>

#include "zsirl/types.hpp"

// Vectorization conventions, symmetric packing and the dense continuous-time
// Lyapunov solver used throughout the library.
//
// Conventions (fixed once, verified by the bilinear-identity tests):
//   quad_basis(x) = [x1^2, 2 x1 x2, ..., 2 x1 xn, x2^2, ..., xn^2]
//   pack_sym(W)   = upper triangle of W row by row (no doubling)
//   vec_row(A)    = row-major flattening [a11, a12, ..., amn]
// so that quad_basis(x) . pack_sym(W) = x' W x for symmetric W, and
// a' W b = sum_ij a_i W_ij b_j = kron_vec(a, b) . vec_row(W).

namespace zsirl {

inline constexpr double kTolLyapunov = 1e-9;
inline constexpr double kTolGare = 1e-7;
inline constexpr double kEpsHurwitz = 1e-9;
inline constexpr double kEpsPsd = 1e-8;
inline constexpr double kRankTol = 1e-10;
inline constexpr double kCondMax = 1e8;
inline constexpr double kStateBlowup = 1e6;

// n(n+1)/2
int packed_size(int n);

// Quadratic monomial basis with doubled cross terms.
Eigen::VectorXd quad_basis(const Eigen::VectorXd& x);

// Row-major flattening of a matrix.
Eigen::VectorXd vec_row(const Eigen::MatrixXd& A);

// Inverse of vec_row for a rows x cols matrix.
Eigen::MatrixXd unvec_row(const Eigen::VectorXd& v, int rows, int cols);

// Kronecker product of two vectors, (x kron y)[i*q + j] = x_i y_j.
Eigen::VectorXd kron_vec(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// Upper triangle of a symmetric matrix, row by row.
Eigen::VectorXd pack_sym(const Eigen::MatrixXd& M);

// Rebuild the symmetric matrix from its packed upper triangle.
Eigen::MatrixXd unpack_sym(const Eigen::VectorXd& packed, int n);

// Reshape a cross-integral vector int(x kron y) into the p x q moment matrix
// M with M(i, j) = int x_i y_j.
Eigen::MatrixXd cross_matrix(const Eigen::VectorXd& ixy, int p, int q);

// (M + M') / 2
Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& M);

// Smallest eigenvalue of a symmetric matrix.
double min_sym_eig(const Eigen::MatrixXd& M);

// True iff every eigenvalue of A has real part < -eps.
bool is_hurwitz(const Eigen::MatrixXd& A, double eps = kEpsHurwitz);

// Loewner order check: true iff B - A has minimum eigenvalue >= -eps.
// Both arguments must be symmetric.
bool psd_leq(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double eps = kEpsPsd);

// Unique symmetric solution P of A_cl' P + P A_cl + M = 0 for Hurwitz A_cl
// and symmetric M, via a dense solve in packed coordinates. P > 0 when M > 0.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A_cl, const Eigen::MatrixXd& M,
                               double tol = kTolLyapunov);

}  // namespace zsirl
