#include "zsirl/gare.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>
#include <vector>

#include "zsirl/matrix_ops.hpp"

namespace zsirl {

namespace {

// Stabilizing solution of A' P + P A + Q - P G P = 0 from the stable
// invariant subspace of H = [A, -G; -Q, -A'].
Eigen::MatrixXd stable_subspace_solution(const Eigen::MatrixXd& A, const Eigen::MatrixXd& G,
                                         const Eigen::MatrixXd& Q) {
    const int n = static_cast<int>(A.rows());
    Eigen::MatrixXd H(2 * n, 2 * n);
    H << A, -G, -Q, -A.transpose();

    Eigen::EigenSolver<Eigen::MatrixXd> es(H);
    if (es.info() != Eigen::Success) {
        throw NumericError("solve_care: Hamiltonian eigendecomposition failed");
    }

    std::vector<int> stable;
    for (int i = 0; i < 2 * n; ++i) {
        if (es.eigenvalues()[i].real() < 0.0) {
            stable.push_back(i);
        }
    }
    if (static_cast<int>(stable.size()) != n) {
        std::ostringstream msg;
        msg << "solve_care: Hamiltonian has " << stable.size()
            << " stable eigenvalues, expected " << n << " (no stabilizing solution)";
        throw NoSolutionError(msg.str());
    }

    Eigen::MatrixXcd basis(2 * n, n);
    for (int j = 0; j < n; ++j) {
        basis.col(j) = es.eigenvectors().col(stable[j]);
    }
    const Eigen::MatrixXcd X1 = basis.topRows(n);
    const Eigen::MatrixXcd X2 = basis.bottomRows(n);

    Eigen::FullPivLU<Eigen::MatrixXcd> lu(X1.transpose());
    if (!lu.isInvertible()) {
        throw NoSolutionError("solve_care: stable subspace basis is degenerate");
    }
    const Eigen::MatrixXcd Pc = lu.solve(X2.transpose()).transpose();
    if (Pc.imag().cwiseAbs().maxCoeff() > 1e-6 * std::max(1.0, Pc.real().cwiseAbs().maxCoeff())) {
        throw NumericError("solve_care: solution has a non-negligible imaginary part");
    }
    return symmetrized(Pc.real());
}

// Newton polish on the full game equation: each step solves the Lyapunov
// equation obtained by linearizing the Riccati defect at the current P.
Eigen::MatrixXd newton_polish(const SystemDynamics& dyn, const CostWeights& w, Eigen::MatrixXd P,
                              int max_steps) {
    const double inv_g2 = 1.0 / (w.gamma * w.gamma);
    const Eigen::LLT<Eigen::MatrixXd> rllt(w.R);
    for (int step = 0; step < max_steps; ++step) {
        const Eigen::MatrixXd K = rllt.solve(dyn.B.transpose() * P);
        const Eigen::MatrixXd L = inv_g2 * dyn.D.transpose() * P;
        const Eigen::MatrixXd A_cl = dyn.A - dyn.B * K + dyn.D * L;
        if (!is_hurwitz(A_cl)) {
            throw NumericError("solve_gare: Newton iterate lost closed-loop stability");
        }
        const Eigen::MatrixXd M = symmetrized(w.Q + K.transpose() * w.R * K -
                                              w.gamma * w.gamma * L.transpose() * L);
        const Eigen::MatrixXd P_next = solve_lyapunov(A_cl, M);
        const double step_norm = (P_next - P).norm();
        P = P_next;
        if (step_norm <= 1e-13 * std::max(1.0, P.norm())) {
            break;
        }
    }
    return P;
}

Eigen::MatrixXd folded_iteration(const SystemDynamics& dyn, const CostWeights& w) {
    const double inv_g2 = 1.0 / (w.gamma * w.gamma);
    const Eigen::MatrixXd DDt = dyn.D * dyn.D.transpose();

    Eigen::MatrixXd P = solve_care(dyn.A, dyn.B, w.Q, w.R);
    constexpr int kMaxOuter = 400;
    for (int outer = 0; outer < kMaxOuter; ++outer) {
        const Eigen::MatrixXd Q_folded = symmetrized(w.Q + inv_g2 * P * DDt * P);
        const Eigen::MatrixXd P_next = solve_care(dyn.A, dyn.B, Q_folded, w.R);
        const double delta = (P_next - P).norm();
        P = P_next;
        if (delta <= 1e-11 * std::max(1.0, P.norm())) {
            return newton_polish(dyn, w, P, 20);
        }
        if (min_sym_eig(P) <= 0.0) {
            throw NumericError("solve_gare: folded iterate became indefinite");
        }
    }
    throw NoSolutionError("solve_gare: folded iteration did not converge within budget");
}

GameSolution finalize(const SystemDynamics& dyn, const CostWeights& w, const Eigen::MatrixXd& P,
                      int iterations) {
    GameSolution sol;
    sol.P = symmetrized(P);
    sol.K = Eigen::LLT<Eigen::MatrixXd>(w.R).solve(dyn.B.transpose() * sol.P);
    sol.L = (1.0 / (w.gamma * w.gamma)) * dyn.D.transpose() * sol.P;
    sol.residual = gare_residual(dyn, w, sol.P);
    sol.iterations = iterations;

    if (min_sym_eig(sol.P) <= 0.0) {
        throw NumericError("solve_gare: solution is not positive definite");
    }
    if (sol.residual > kTolGare) {
        std::ostringstream msg;
        msg << "solve_gare: residual " << sol.residual << " exceeds tolerance " << kTolGare;
        throw NumericError(msg.str());
    }
    if (!is_hurwitz(dyn.A - dyn.B * sol.K)) {
        throw NoSolutionError("solve_gare: A - B K is not Hurwitz");
    }
    if (!is_hurwitz(dyn.A - dyn.B * sol.K + dyn.D * sol.L)) {
        throw NoSolutionError("solve_gare: A - B K + D L is not Hurwitz");
    }
    return sol;
}

}  // namespace

double gare_residual(const SystemDynamics& dyn, const CostWeights& w, const Eigen::MatrixXd& P) {
    const double inv_g2 = 1.0 / (w.gamma * w.gamma);
    const Eigen::MatrixXd defect =
        dyn.A.transpose() * P + P * dyn.A + w.Q -
        P * dyn.B * Eigen::LLT<Eigen::MatrixXd>(w.R).solve(dyn.B.transpose() * P) +
        inv_g2 * P * dyn.D * dyn.D.transpose() * P;
    return defect.norm();
}

Eigen::MatrixXd solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
    const Eigen::MatrixXd G =
        B * Eigen::LLT<Eigen::MatrixXd>(R).solve(B.transpose());
    return stable_subspace_solution(A, G, Q);
}

Eigen::MatrixXd solve_gare_hamiltonian(const SystemDynamics& dyn, const CostWeights& w) {
    const double inv_g2 = 1.0 / (w.gamma * w.gamma);
    const Eigen::MatrixXd G =
        dyn.B * Eigen::LLT<Eigen::MatrixXd>(w.R).solve(dyn.B.transpose()) -
        inv_g2 * dyn.D * dyn.D.transpose();
    Eigen::MatrixXd P = stable_subspace_solution(dyn.A, G, w.Q);
    return newton_polish(dyn, w, P, 10);
}

GameSolution solve_gare(const SystemDynamics& dyn, const CostWeights& w) {
    dyn.validate();
    w.validate(dyn);

    try {
        return finalize(dyn, w, folded_iteration(dyn, w), 0);
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception&) {
        // Sequential route failed; try the direct Hamiltonian route before
        // giving up.
    }
    return finalize(dyn, w, solve_gare_hamiltonian(dyn, w), 1);
}

}  // namespace zsirl
