#pragma once

#include "zsirl/types.hpp"

// Direct solver for the game algebraic Riccati equation
//
//   A' P + P A + Q - P B R^-1 B' P + (1/gamma^2) P D D' P = 0,
//
// returning the stabilizing solution P = P' > 0 together with the gains
// K = R^-1 B' P and L = (1/gamma^2) D' P. Used as ground truth by the
// learning modules and the verification suite.
//
// The caller is responsible for (A, B) being controllable; an unsolvable
// problem (for example gamma below the attenuation bound) raises
// NoSolutionError.

namespace zsirl {

// Frobenius norm of the GARE defect at P.
double gare_residual(const SystemDynamics& dyn, const CostWeights& w, const Eigen::MatrixXd& P);

// Stabilizing solution of the standard Riccati equation (no disturbance
// term) via the stable invariant subspace of the Hamiltonian matrix.
Eigen::MatrixXd solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);

// Direct eigenvector route for the full game equation; exposed so tests can
// cross-check it against the sequential route used by solve_gare.
Eigen::MatrixXd solve_gare_hamiltonian(const SystemDynamics& dyn, const CostWeights& w);

// Primary oracle. Sequentially folds the disturbance quadratic into the
// state weight and resolves a standard Riccati problem each pass, then
// polishes with Newton steps on the full equation; falls back to the direct
// Hamiltonian route if that fails.
GameSolution solve_gare(const SystemDynamics& dyn, const CostWeights& w);

}  // namespace zsirl
