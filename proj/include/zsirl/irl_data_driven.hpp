#pragma once

#include <Eigen/Core>
#include <Eigen/QR>

#include <memory>
#include <vector>

#include "zsirl/irl_model_based.hpp"
#include "zsirl/lti_sim.hpp"
#include "zsirl/matrix_ops.hpp"
#include "zsirl/types.hpp"

// Data-driven variant of the zero-sum game IRL iteration. Both updates are
// batch least-squares problems assembled once from trajectory integrals:
//
// Value / gain step, per expert window [t, t+T]:
//   d_xx . packed(P) - 2 int e'R K x dt - 2 gamma^2 int d'L x dt
//     = - int ( x'Q_i x + (u - e)'R(u - e) + gamma^2 x'L_i'L_i x ) dt
// with unknowns stacked as [packed(P); vec_row(K); vec_row(L)].
//
// Weight step, per learner window:
//   int x'Q_next x dt = -(d_xx . packed(P))
//     + int ( 2u'RKx + x'K'RKx ) dt + gamma^2 int ( 2d'Lx - x'L'Lx ) dt.
//
// The regressor matrices depend only on the batch (and the fixed R, gamma),
// so they are factored once and reused across all iterations. No model
// knowledge enters the iteration; dynamics may optionally be supplied purely
// to fill trace diagnostics.

namespace zsirl {

struct PolicyRegression {
    int n = 0, m = 0, z = 0;
    double gamma = 0.0;
    Eigen::MatrixXd R;
    Eigen::MatrixXd Phi;        // l x (n(n+1)/2 + nm + nz), iteration independent
    Eigen::MatrixXd ixx_stack;  // l x n(n+1)/2, feeds the right side
    Eigen::MatrixXd ivv_stack;  // l x m(m+1)/2
    double condition_number = 0.0;
    int numerical_rank = 0;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;

    int unknowns() const;
    bool full_rank() const { return numerical_rank >= unknowns(); }
};

struct WeightRegression {
    int n = 0, m = 0, z = 0;
    Eigen::MatrixXd Phi;        // k x n(n+1)/2 (window integrals of the quadratic basis)
    Eigen::MatrixXd dxx_stack;  // k x n(n+1)/2
    std::vector<Eigen::MatrixXd> m_xu;  // per-window n x m moment matrices
    std::vector<Eigen::MatrixXd> m_xd;  // per-window n x z
    double condition_number = 0.0;
    int numerical_rank = 0;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;

    bool full_rank() const;
};

struct PolicySolution {
    Eigen::MatrixXd P, K, L;
    double residual = 0.0;  // least-squares residual norm
    bool ill_conditioned = false;
};

struct WeightSolution {
    Eigen::MatrixXd Q;
    double residual = 0.0;
    double shift = 0.0;      // identity shift applied to restore positive definiteness
    bool degraded = false;   // true when the shift was needed
};

struct RankReport {
    int expert_rank = 0;
    int expert_required = 0;
    bool expert_ok = false;
    double expert_smin = 0.0, expert_smax = 0.0;
    int learner_rank = 0;
    int learner_required = 0;
    bool learner_ok = false;
    double learner_smin = 0.0, learner_smax = 0.0;

    bool pass() const { return expert_ok && learner_ok; }
};

// Numerical ranks of the raw excitation stacks [I_xx | I_xu | I_xd] (expert)
// and I_xx (learner); singular values above rank_tol times the largest count.
RankReport check_rank(const DataBatch& expert, const DataBatch& learner,
                      double rank_tol = kRankTol);

PolicyRegression build_policy_regressors(const DataBatch& expert, const IrlConfig& cfg);

// One value/gain solve. Throws RankDeficientError when the regressor is rank
// deficient; an excessive condition number only flags the result.
PolicySolution solve_policy_lsq(const PolicyRegression& reg, const Eigen::MatrixXd& Q_i,
                                const Eigen::MatrixXd& L_i, const IrlConfig& cfg);

WeightRegression build_weight_regressors(const DataBatch& learner);

WeightSolution solve_weight_lsq(const WeightRegression& reg, const Eigen::MatrixXd& P_i,
                                const Eigen::MatrixXd& K_next, const Eigen::MatrixXd& L_next,
                                const IrlConfig& cfg);

// Optional model knowledge used only to populate trace diagnostics
// (residuals against the true dynamics, stability flags, gain error).
struct TraceDiagnostics {
    const SystemDynamics* dyn = nullptr;
    const Eigen::MatrixXd* K_target = nullptr;
};

// Divergence of the data-driven iteration carries the partial trace.
class IterationDivergence : public DivergenceError {
  public:
    IterationDivergence(const std::string& what, IterationTrace trace)
        : DivergenceError(what), trace(std::move(trace)) {}

    IterationTrace trace;
};

// Single-loop data-driven iteration from (Q0, L0 = 0): regressors are built
// and factored once, then one value solve and one weight solve per
// iteration until the value matrix stops moving.
IterationTrace run_data_driven(const DataBatch& expert, const DataBatch& learner,
                               const IrlConfig& cfg, const TraceDiagnostics& diag = {});

}  // namespace zsirl
