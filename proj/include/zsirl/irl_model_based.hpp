#pragma once

#include <Eigen/Core>

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "zsirl/types.hpp"

// Model-based inverse reinforcement learning for the expert-learner zero-sum
// game. Starting from weights (Q0, R, gamma) and L0 = 0, each iteration
//   1. solves the closed-loop value equation under the target gain
//      (A - B K_T)' P + P (A - B K_T) = -Q_i - K_T' R K_T - gamma^2 L_i' L_i,
//   2. updates the gains K = R^-1 B' P and L = (1/gamma^2) D' P,
//   3. reconstructs the state weight
//      Q_next = -A' P - P A + K' R K - gamma^2 L' L,
// until the value matrix stops moving. At the fixed point the recovered gain
// equals the target gain.

namespace zsirl {

struct IrlConfig {
    Eigen::MatrixXd R;   // m x m, symmetric positive definite
    double gamma = 0.0;  // > 0
    Eigen::MatrixXd Q0;  // n x n, symmetric positive definite
    int max_iters = 500;
    double tol_converge = 1e-8;

    void validate(int n, int m) const;
};

struct IterationRecord {
    int iter = 0;
    Eigen::MatrixXd Q;  // weight used by this iteration's value solve
    Eigen::MatrixXd P;
    Eigen::MatrixXd K;  // gain produced from P
    Eigen::MatrixXd L;
    // Diagnostics, NaN when the information needed to evaluate them is not
    // available (the data-driven runner fills them only when given the true
    // dynamics for audit).
    double gare_residual = std::numeric_limits<double>::quiet_NaN();
    double target_residual = std::numeric_limits<double>::quiet_NaN();
    double gain_error = std::numeric_limits<double>::quiet_NaN();
    bool hurwitz_ok = true;
    double weight_shift = 0.0;    // positive-definiteness repair applied to Q_next
    double policy_residual = 0.0;  // value-step residual (Lyapunov or least squares)
};

struct IterationTrace {
    std::vector<IterationRecord> records;
    bool converged = false;
    int iterations_used = 0;
    int linear_solves = 0;

    const IterationRecord& last() const;
};

// Value matrix for the current weight estimate under the target gain.
// Requires A - B K_target Hurwitz and returns a symmetric positive definite P.
Eigen::MatrixXd policy_correction(const SystemDynamics& dyn, const Eigen::MatrixXd& K_target,
                                  const Eigen::MatrixXd& Q_i, const Eigen::MatrixXd& L_i,
                                  const IrlConfig& cfg);

// Greedy gain pair from a value matrix.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> input_update(const SystemDynamics& dyn,
                                                         const Eigen::MatrixXd& P_i,
                                                         const IrlConfig& cfg);

// State-weight reconstruction; by construction (P_i, Q_next) satisfy the
// learner game Riccati equation.
Eigen::MatrixXd weight_update(const SystemDynamics& dyn, const Eigen::MatrixXd& P_i,
                              const Eigen::MatrixXd& K_next, const Eigen::MatrixXd& L_next,
                              const IrlConfig& cfg);

// Full iteration. Non-convergence within cfg.max_iters is reported through
// the trace, not thrown.
IterationTrace run_model_based(const SystemDynamics& dyn, const Eigen::MatrixXd& K_target,
                               const IrlConfig& cfg);

// Trace CSV: one row per iteration with packed Q and P, row-major K and L,
// residuals and flags. Lossless at 17 significant digits.
void write_trace_csv(const IterationTrace& trace, int n, int m, int z, const std::string& path);
IterationTrace read_trace_csv(const std::string& path, int* n_out = nullptr, int* m_out = nullptr,
                              int* z_out = nullptr);

}  // namespace zsirl
