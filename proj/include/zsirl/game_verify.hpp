#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "zsirl/types.hpp"

// Executable certificates for a learned game solution: residual checks of
// the defining equations, pointwise Hamiltonian saddle verification, the
// multi-solution family relations between a learned cost and the true one,
// cost scaling, and the trajectory imitation error index.

namespace zsirl {

struct CheckResult {
    std::string name;
    double value = 0.0;      // measured residual / statistic
    double tolerance = 0.0;  // every check carries an explicit tolerance
    bool pass = false;
    std::string detail;
};

struct VerificationReport {
    std::vector<CheckResult> checks;

    void add(std::string name, double value, double tolerance, std::string detail = "");
    void add_flag(std::string name, bool ok, std::string detail = "");
    void add_lower_bound(std::string name, double value, double lower_bound,
                         std::string detail = "");
    bool all_pass() const;
    void append(const VerificationReport& other);
};

void write_report_csv(const VerificationReport& report, const std::string& path);
void print_report(const VerificationReport& report, std::ostream& out);

// Residual of the closed-loop consistency condition under the target gain:
// || (A - B K_T)' P + P (A - B K_T) + Q + (1/gamma^2) P D D' P + K_T' R K_T ||_F.
// Zero together with the game Riccati residual certifies that the learned
// cost reproduces the target gain.
double target_consistency_residual(const SystemDynamics& dyn, const Eigen::MatrixXd& K_target,
                                   const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q,
                                   const Eigen::MatrixXd& R, double gamma);

// Hamiltonian of the quadratic game at state x with inputs (u, d):
// x'Qx + u'Ru - gamma^2 d'd + (Ax + Bu + Dd)'Px + x'P(Ax + Bu + Dd).
double hamiltonian(const SystemDynamics& dyn, const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q,
                   const Eigen::MatrixXd& R, double gamma, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& u, const Eigen::VectorXd& d);

// Sampled saddle-point certificate: for random (x, du, dd) it checks that
// the Hamiltonian vanishes at (u*, d*) and that unilateral deviations move
// it the right way. Failures are recorded in the report, never thrown.
VerificationReport saddle_check(const SystemDynamics& dyn, const GameSolution& sol,
                                const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R, double gamma,
                                int samples, std::uint64_t seed, double zero_tol = 1e-9,
                                double slack = 1e-9);

// Residuals of the relations tying a learned tuple (Q*, R, gamma, P*) to the
// target tuple when both explain the same gain: with Q_o = Q_T - Q*,
// R_o = R_T - R and P_o = P_T - P*,
//   B' P_o = R_o R_T^-1 B' P_T
//   Q_o + A' P_o + P_o A - K_T' R_o K_T
//     + (1/gamma_T^2) P_T D D' P_T - (1/gamma^2) P* D D' P* = 0.
// Small residuals place the learned solution in the equivalence family of
// the target gain even when the weights themselves differ.
VerificationReport nonuniqueness_residuals(const SystemDynamics& dyn, const CostWeights& target_w,
                                           const GameSolution& target_sol,
                                           const CostWeights& learned_w,
                                           const Eigen::MatrixXd& learned_P,
                                           double tolerance = 1e-4);

// Uniformly scaled weights (c Q, c R, sqrt(c) gamma): the game value scales
// by c while the optimal gain is unchanged.
CostWeights scale_solution(const CostWeights& target, double c);

// Imitation error index: per-component RMS mismatch of two equally sampled
// trajectories, averaged over the state dimensions.
double imitation_error(const std::vector<Eigen::VectorXd>& learner_samples,
                       const std::vector<Eigen::VectorXd>& target_samples);

}  // namespace zsirl
