#include "zsirl/irl_data_driven.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <sstream>

#include "zsirl/game_verify.hpp"
#include "zsirl/gare.hpp"
#include "zsirl/matrix_ops.hpp"

namespace zsirl {

namespace {

constexpr double kValueBlowup = 1e8;

struct RankInfo {
    int rank = 0;
    double smin = 0.0;
    double smax = 0.0;
    double condition = std::numeric_limits<double>::infinity();
};

RankInfo numerical_rank(const Eigen::MatrixXd& M, double rank_tol) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const Eigen::VectorXd& s = svd.singularValues();
    RankInfo info;
    if (s.size() == 0) {
        return info;
    }
    info.smax = s[0];
    info.smin = s[s.size() - 1];
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s[i] > rank_tol * info.smax && s[i] > 0.0) {
            ++info.rank;
        }
    }
    if (info.smin > 0.0) {
        info.condition = info.smax / info.smin;
    }
    return info;
}

}  // namespace

int PolicyRegression::unknowns() const { return packed_size(n) + n * m + n * z; }

bool WeightRegression::full_rank() const { return numerical_rank >= packed_size(n); }

RankReport check_rank(const DataBatch& expert, const DataBatch& learner, double rank_tol) {
    RankReport report;

    const int N_e = packed_size(expert.n);
    const int cols_e = N_e + expert.n * expert.m + expert.n * expert.z;
    Eigen::MatrixXd excitation(expert.window_count(), cols_e);
    for (int w = 0; w < expert.window_count(); ++w) {
        const BatchWindow& win = expert.windows[w];
        excitation.row(w) << win.i_xx.transpose(), win.i_xu.transpose(), win.i_xd.transpose();
    }
    const RankInfo e = numerical_rank(excitation, rank_tol);
    report.expert_rank = e.rank;
    report.expert_required = cols_e;
    report.expert_ok = e.rank >= cols_e;
    report.expert_smin = e.smin;
    report.expert_smax = e.smax;

    const int N_l = packed_size(learner.n);
    Eigen::MatrixXd ixx(learner.window_count(), N_l);
    for (int w = 0; w < learner.window_count(); ++w) {
        ixx.row(w) = learner.windows[w].i_xx.transpose();
    }
    const RankInfo l = numerical_rank(ixx, rank_tol);
    report.learner_rank = l.rank;
    report.learner_required = N_l;
    report.learner_ok = l.rank >= N_l;
    report.learner_smin = l.smin;
    report.learner_smax = l.smax;

    return report;
}

PolicyRegression build_policy_regressors(const DataBatch& expert, const IrlConfig& cfg) {
    if (expert.role != BatchRole::Expert) {
        throw std::invalid_argument(
            "build_policy_regressors: batch lacks probing integrals (learner role)");
    }
    expert.validate();
    cfg.validate(expert.n, expert.m);

    PolicyRegression reg;
    reg.n = expert.n;
    reg.m = expert.m;
    reg.z = expert.z;
    reg.gamma = cfg.gamma;
    reg.R = cfg.R;

    const int N = packed_size(reg.n);
    const int l = expert.window_count();
    const int cols = reg.unknowns();
    reg.Phi.resize(l, cols);
    reg.ixx_stack.resize(l, N);
    reg.ivv_stack.resize(l, packed_size(reg.m));

    const double g2 = cfg.gamma * cfg.gamma;
    for (int w = 0; w < l; ++w) {
        const BatchWindow& win = expert.windows[w];
        // Coefficients of packed(P): quadratic-basis increment across the window.
        reg.Phi.row(w).head(N) = win.d_xx.transpose();
        // Coefficients of vec_row(K): -2 int e'R K x dt = -2 <K, R M_xe'>.
        const Eigen::MatrixXd m_xe = cross_matrix(win.i_xe, reg.n, reg.m);
        reg.Phi.row(w).segment(N, reg.n * reg.m) =
            -2.0 * vec_row(cfg.R * m_xe.transpose()).transpose();
        // Coefficients of vec_row(L): -2 gamma^2 int d'L x dt.
        const Eigen::MatrixXd m_xd = cross_matrix(win.i_xd, reg.n, reg.z);
        reg.Phi.row(w).tail(reg.n * reg.z) =
            -2.0 * g2 * vec_row(m_xd.transpose()).transpose();

        reg.ixx_stack.row(w) = win.i_xx.transpose();
        reg.ivv_stack.row(w) = win.i_vv.transpose();
    }

    const RankInfo info = numerical_rank(reg.Phi, kRankTol);
    reg.numerical_rank = info.rank;
    reg.condition_number = info.condition;
    reg.qr.compute(reg.Phi);
    return reg;
}

PolicySolution solve_policy_lsq(const PolicyRegression& reg, const Eigen::MatrixXd& Q_i,
                                const Eigen::MatrixXd& L_i, const IrlConfig& cfg) {
    if (!reg.full_rank()) {
        std::ostringstream msg;
        msg << "solve_policy_lsq: excitation rank " << reg.numerical_rank << " is short of the "
            << reg.unknowns() << " unknowns by " << reg.unknowns() - reg.numerical_rank;
        throw RankDeficientError(msg.str());
    }
    const int N = packed_size(reg.n);
    if (Q_i.rows() != reg.n || L_i.rows() != reg.z || L_i.cols() != reg.n) {
        throw std::invalid_argument("solve_policy_lsq: iterate dimension mismatch");
    }

    const double g2 = cfg.gamma * cfg.gamma;
    const Eigen::MatrixXd Q_bar = symmetrized(Q_i + g2 * L_i.transpose() * L_i);
    const Eigen::VectorXd psi =
        -(reg.ixx_stack * pack_sym(Q_bar) + reg.ivv_stack * pack_sym(cfg.R));

    const Eigen::VectorXd theta = reg.qr.solve(psi);

    PolicySolution sol;
    sol.P = unpack_sym(theta.head(N), reg.n);
    sol.K = unvec_row(theta.segment(N, reg.n * reg.m), reg.m, reg.n);
    sol.L = unvec_row(theta.tail(reg.n * reg.z), reg.z, reg.n);
    sol.residual = (reg.Phi * theta - psi).norm();
    sol.ill_conditioned = reg.condition_number > kCondMax;
    return sol;
}

WeightRegression build_weight_regressors(const DataBatch& learner) {
    learner.validate();

    WeightRegression reg;
    reg.n = learner.n;
    reg.m = learner.m;
    reg.z = learner.z;

    const int N = packed_size(reg.n);
    const int k = learner.window_count();
    reg.Phi.resize(k, N);
    reg.dxx_stack.resize(k, N);
    reg.m_xu.reserve(k);
    reg.m_xd.reserve(k);
    for (int w = 0; w < k; ++w) {
        const BatchWindow& win = learner.windows[w];
        reg.Phi.row(w) = win.i_xx.transpose();
        reg.dxx_stack.row(w) = win.d_xx.transpose();
        reg.m_xu.push_back(cross_matrix(win.i_xu, reg.n, reg.m));
        reg.m_xd.push_back(cross_matrix(win.i_xd, reg.n, reg.z));
    }

    const RankInfo info = numerical_rank(reg.Phi, kRankTol);
    reg.numerical_rank = info.rank;
    reg.condition_number = info.condition;
    reg.qr.compute(reg.Phi);
    return reg;
}

WeightSolution solve_weight_lsq(const WeightRegression& reg, const Eigen::MatrixXd& P_i,
                                const Eigen::MatrixXd& K_next, const Eigen::MatrixXd& L_next,
                                const IrlConfig& cfg) {
    const int N = packed_size(reg.n);
    if (!reg.full_rank()) {
        std::ostringstream msg;
        msg << "solve_weight_lsq: quadratic-basis rank " << reg.numerical_rank
            << " is short of the " << N << " unknowns by " << N - reg.numerical_rank;
        throw RankDeficientError(msg.str());
    }

    const double g2 = cfg.gamma * cfg.gamma;
    const Eigen::VectorXd p_packed = pack_sym(symmetrized(P_i));
    const Eigen::VectorXd krk = pack_sym(symmetrized(K_next.transpose() * cfg.R * K_next));
    const Eigen::VectorXd ll = pack_sym(symmetrized(L_next.transpose() * L_next));
    const Eigen::MatrixXd rk_coeff = cfg.R * K_next;  // <K, R M_xu'> = <R K, M_xu'>

    const int k = static_cast<int>(reg.Phi.rows());
    Eigen::VectorXd psi(k);
    for (int w = 0; w < k; ++w) {
        const double cross_u = (rk_coeff * reg.m_xu[w]).trace();   // int u'R K x dt
        const double cross_d = (L_next * reg.m_xd[w]).trace();     // int d'L x dt
        const double iq = 2.0 * cross_u + reg.Phi.row(w).dot(krk) +
                          g2 * (2.0 * cross_d - reg.Phi.row(w).dot(ll));
        psi[w] = -reg.dxx_stack.row(w).dot(p_packed) + iq;
    }

    const Eigen::VectorXd q_packed = reg.qr.solve(psi);

    WeightSolution sol;
    sol.Q = unpack_sym(q_packed, reg.n);
    sol.residual = (reg.Phi * q_packed - psi).norm();
    const double min_eig = min_sym_eig(sol.Q);
    if (min_eig < 0.0) {
        // Quadrature or measurement noise can push the reconstructed weight
        // slightly indefinite; shift it back and record the repair.
        sol.shift = -min_eig + 1e-8;
        sol.Q += sol.shift * Eigen::MatrixXd::Identity(reg.n, reg.n);
        sol.degraded = true;
    }
    return sol;
}

IterationTrace run_data_driven(const DataBatch& expert, const DataBatch& learner,
                               const IrlConfig& cfg, const TraceDiagnostics& diag) {
    if (expert.n != learner.n || expert.m != learner.m || expert.z != learner.z) {
        throw std::invalid_argument("run_data_driven: batch dimensions disagree");
    }
    cfg.validate(expert.n, expert.m);

    const RankReport ranks = check_rank(expert, learner);
    if (!ranks.pass()) {
        std::ostringstream msg;
        msg << "run_data_driven: excitation rank conditions fail (expert " << ranks.expert_rank
            << "/" << ranks.expert_required << ", learner " << ranks.learner_rank << "/"
            << ranks.learner_required << ")";
        throw RankDeficientError(msg.str());
    }

    const PolicyRegression preg = build_policy_regressors(expert, cfg);
    const WeightRegression wreg = build_weight_regressors(learner);

    IterationTrace trace;
    Eigen::MatrixXd Q = symmetrized(cfg.Q0);
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(expert.z, expert.n);
    Eigen::MatrixXd P_prev;

    for (int i = 0; i < cfg.max_iters; ++i) {
        const PolicySolution ps = solve_policy_lsq(preg, Q, L, cfg);
        const WeightSolution ws = solve_weight_lsq(wreg, ps.P, ps.K, ps.L, cfg);
        trace.linear_solves += 2;

        IterationRecord rec;
        rec.iter = i;
        rec.Q = Q;
        rec.P = ps.P;
        rec.K = ps.K;
        rec.L = ps.L;
        rec.weight_shift = ws.shift;
        rec.policy_residual = ps.residual;
        if (diag.dyn != nullptr) {
            CostWeights w_next{ws.Q, cfg.R, cfg.gamma};
            rec.gare_residual = gare_residual(*diag.dyn, w_next, ps.P);
            rec.hurwitz_ok = is_hurwitz(diag.dyn->A - diag.dyn->B * ps.K);
            if (diag.K_target != nullptr) {
                rec.target_residual =
                    target_consistency_residual(*diag.dyn, *diag.K_target, ps.P, Q, cfg.R,
                                                cfg.gamma);
            }
        }
        if (diag.K_target != nullptr) {
            rec.gain_error = (ps.K - *diag.K_target).norm();
        }
        trace.records.push_back(std::move(rec));

        if (!ps.P.allFinite() || ps.P.norm() > kValueBlowup) {
            trace.iterations_used = static_cast<int>(trace.records.size());
            throw IterationDivergence("run_data_driven: value iterate diverged", trace);
        }

        const bool value_fixed = i > 0 && (ps.P - P_prev).norm() <= cfg.tol_converge;
        const bool weight_fixed =
            (ws.Q - Q).norm() <= cfg.tol_converge && (ps.L - L).norm() <= cfg.tol_converge;
        P_prev = ps.P;
        Q = ws.Q;
        L = ps.L;
        if (value_fixed || weight_fixed) {
            trace.converged = true;
            break;
        }
    }
    trace.iterations_used = static_cast<int>(trace.records.size());
    return trace;
}

}  // namespace zsirl
