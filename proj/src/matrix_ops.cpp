#include "zsirl/matrix_ops.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace zsirl {

namespace {

bool all_finite(const Eigen::MatrixXd& M) { return M.allFinite(); }

void require_symmetric(const Eigen::MatrixXd& M, const char* name) {
    if (M.rows() != M.cols()) {
        throw std::invalid_argument(std::string(name) + " must be square");
    }
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
        throw std::invalid_argument(std::string(name) + " must be symmetric");
    }
}

}  // namespace

void SystemDynamics::validate() const {
    if (A.rows() == 0 || A.rows() != A.cols()) {
        throw std::invalid_argument("dynamics: A must be square and non-empty");
    }
    if (B.rows() != A.rows() || B.cols() < 1) {
        throw std::invalid_argument("dynamics: B must be n x m with m >= 1");
    }
    if (D.rows() != A.rows() || D.cols() < 1) {
        throw std::invalid_argument("dynamics: D must be n x z with z >= 1");
    }
    if (!all_finite(A) || !all_finite(B) || !all_finite(D)) {
        throw std::invalid_argument("dynamics: entries must be finite");
    }
}

void CostWeights::validate(const SystemDynamics& dyn) const {
    if (Q.rows() != dyn.n() || Q.cols() != dyn.n()) {
        throw std::invalid_argument("weights: Q must be n x n");
    }
    if (R.rows() != dyn.m() || R.cols() != dyn.m()) {
        throw std::invalid_argument("weights: R must be m x m");
    }
    require_symmetric(Q, "weights: Q");
    require_symmetric(R, "weights: R");
    if (min_sym_eig(symmetrized(Q)) <= 0.0) {
        throw std::invalid_argument("weights: Q must be positive definite");
    }
    if (min_sym_eig(symmetrized(R)) <= 0.0) {
        throw std::invalid_argument("weights: R must be positive definite");
    }
    if (!(gamma > 0.0)) {
        throw std::invalid_argument("weights: gamma must be positive");
    }
}

int packed_size(int n) { return n * (n + 1) / 2; }

Eigen::VectorXd quad_basis(const Eigen::VectorXd& x) {
    const int n = static_cast<int>(x.size());
    if (n < 1) {
        throw std::invalid_argument("quad_basis: empty vector");
    }
    Eigen::VectorXd out(packed_size(n));
    int k = 0;
    for (int i = 0; i < n; ++i) {
        out[k++] = x[i] * x[i];
        for (int j = i + 1; j < n; ++j) {
            out[k++] = 2.0 * x[i] * x[j];
        }
    }
    return out;
}

Eigen::VectorXd vec_row(const Eigen::MatrixXd& A) {
    Eigen::VectorXd out(A.size());
    int k = 0;
    for (int i = 0; i < A.rows(); ++i) {
        for (int j = 0; j < A.cols(); ++j) {
            out[k++] = A(i, j);
        }
    }
    return out;
}

Eigen::MatrixXd unvec_row(const Eigen::VectorXd& v, int rows, int cols) {
    if (v.size() != static_cast<Eigen::Index>(rows) * cols) {
        throw std::invalid_argument("unvec_row: size mismatch");
    }
    Eigen::MatrixXd out(rows, cols);
    int k = 0;
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            out(i, j) = v[k++];
        }
    }
    return out;
}

Eigen::VectorXd kron_vec(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    Eigen::VectorXd out(x.size() * y.size());
    int k = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        for (Eigen::Index j = 0; j < y.size(); ++j) {
            out[k++] = x[i] * y[j];
        }
    }
    return out;
}

Eigen::VectorXd pack_sym(const Eigen::MatrixXd& M) {
    require_symmetric(M, "pack_sym: input");
    const int n = static_cast<int>(M.rows());
    Eigen::VectorXd out(packed_size(n));
    int k = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            out[k++] = M(i, j);
        }
    }
    return out;
}

Eigen::MatrixXd unpack_sym(const Eigen::VectorXd& packed, int n) {
    if (packed.size() != packed_size(n)) {
        throw std::invalid_argument("unpack_sym: packed length does not match dimension");
    }
    Eigen::MatrixXd M(n, n);
    int k = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            M(i, j) = packed[k];
            M(j, i) = packed[k];
            ++k;
        }
    }
    return M;
}

Eigen::MatrixXd cross_matrix(const Eigen::VectorXd& ixy, int p, int q) {
    return unvec_row(ixy, p, q);
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& M) { return 0.5 * (M + M.transpose()); }

double min_sym_eig(const Eigen::MatrixXd& M) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized(M));
    if (es.info() != Eigen::Success) {
        throw NumericError("min_sym_eig: eigenvalue computation failed");
    }
    return es.eigenvalues().minCoeff();
}

bool is_hurwitz(const Eigen::MatrixXd& A, double eps) {
    if (A.rows() != A.cols()) {
        throw std::invalid_argument("is_hurwitz: matrix must be square");
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) {
        throw NumericError("is_hurwitz: eigenvalue computation failed");
    }
    return es.eigenvalues().real().maxCoeff() < -eps;
}

bool psd_leq(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double eps) {
    require_symmetric(A, "psd_leq: A");
    require_symmetric(B, "psd_leq: B");
    if (A.rows() != B.rows()) {
        throw std::invalid_argument("psd_leq: dimension mismatch");
    }
    return min_sym_eig(B - A) >= -eps;
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A_cl, const Eigen::MatrixXd& M, double tol) {
    const int n = static_cast<int>(A_cl.rows());
    if (A_cl.cols() != n) {
        throw std::invalid_argument("solve_lyapunov: A_cl must be square");
    }
    require_symmetric(M, "solve_lyapunov: M");
    if (M.rows() != n) {
        throw std::invalid_argument("solve_lyapunov: dimension mismatch");
    }
    if (!is_hurwitz(A_cl)) {
        throw StabilityError("solve_lyapunov: A_cl is not Hurwitz");
    }

    // Assemble the packed-coordinate operator column by column: the image of
    // each symmetric basis matrix E under E -> A_cl' E + E A_cl.
    const int N = packed_size(n);
    Eigen::MatrixXd op(N, N);
    int col = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, n);
            E(i, j) = 1.0;
            E(j, i) = 1.0;
            const Eigen::MatrixXd img = A_cl.transpose() * E + E * A_cl;
            int row = 0;
            for (int a = 0; a < n; ++a) {
                for (int b = a; b < n; ++b) {
                    op(row++, col) = img(a, b);
                }
            }
            ++col;
        }
    }

    Eigen::VectorXd rhs(N);
    int row = 0;
    for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) {
            rhs[row++] = -M(a, b);
        }
    }

    const Eigen::VectorXd p = op.partialPivLu().solve(rhs);
    const Eigen::MatrixXd P = unpack_sym(p, n);

    const double residual = (A_cl.transpose() * P + P * A_cl + M).norm();
    if (!P.allFinite() || residual > tol) {
        std::ostringstream msg;
        msg << "solve_lyapunov: residual " << residual << " exceeds tolerance " << tol;
        throw NumericError(msg.str());
    }
    return P;
}

}  // namespace zsirl
