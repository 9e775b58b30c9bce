#include "zsirl/irl_model_based.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

#include "csv_util.hpp"
#include "zsirl/gare.hpp"
#include "zsirl/game_verify.hpp"
#include "zsirl/matrix_ops.hpp"

namespace zsirl {

void IrlConfig::validate(int n, int m) const {
    if (R.rows() != m || R.cols() != m) {
        throw std::invalid_argument("irl config: R must be m x m");
    }
    if ((R - R.transpose()).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, R.norm()) ||
        min_sym_eig(R) <= 0.0) {
        throw std::invalid_argument("irl config: R must be symmetric positive definite");
    }
    if (Q0.rows() != n || Q0.cols() != n) {
        throw std::invalid_argument("irl config: Q0 must be n x n");
    }
    if ((Q0 - Q0.transpose()).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, Q0.norm()) ||
        min_sym_eig(Q0) <= 0.0) {
        throw std::invalid_argument("irl config: Q0 must be symmetric positive definite");
    }
    if (!(gamma > 0.0)) {
        throw std::invalid_argument("irl config: gamma must be positive");
    }
    if (max_iters < 1 || !(tol_converge > 0.0)) {
        throw std::invalid_argument("irl config: max_iters and tol_converge must be positive");
    }
}

const IterationRecord& IterationTrace::last() const {
    if (records.empty()) {
        throw std::logic_error("trace is empty");
    }
    return records.back();
}

Eigen::MatrixXd policy_correction(const SystemDynamics& dyn, const Eigen::MatrixXd& K_target,
                                  const Eigen::MatrixXd& Q_i, const Eigen::MatrixXd& L_i,
                                  const IrlConfig& cfg) {
    const Eigen::MatrixXd A_cl = dyn.A - dyn.B * K_target;
    const Eigen::MatrixXd M =
        symmetrized(Q_i + K_target.transpose() * cfg.R * K_target +
                    cfg.gamma * cfg.gamma * L_i.transpose() * L_i);
    const Eigen::MatrixXd P = solve_lyapunov(A_cl, M);
    if (min_sym_eig(P) <= 0.0) {
        throw NumericError("policy_correction: value matrix is not positive definite");
    }
    return P;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> input_update(const SystemDynamics& dyn,
                                                         const Eigen::MatrixXd& P_i,
                                                         const IrlConfig& cfg) {
    const Eigen::MatrixXd K = Eigen::LLT<Eigen::MatrixXd>(cfg.R).solve(dyn.B.transpose() * P_i);
    const Eigen::MatrixXd L = (1.0 / (cfg.gamma * cfg.gamma)) * dyn.D.transpose() * P_i;
    return {K, L};
}

Eigen::MatrixXd weight_update(const SystemDynamics& dyn, const Eigen::MatrixXd& P_i,
                              const Eigen::MatrixXd& K_next, const Eigen::MatrixXd& L_next,
                              const IrlConfig& cfg) {
    return symmetrized(-dyn.A.transpose() * P_i - P_i * dyn.A +
                       K_next.transpose() * cfg.R * K_next -
                       cfg.gamma * cfg.gamma * L_next.transpose() * L_next);
}

IterationTrace run_model_based(const SystemDynamics& dyn, const Eigen::MatrixXd& K_target,
                               const IrlConfig& cfg) {
    dyn.validate();
    cfg.validate(dyn.n(), dyn.m());
    if (K_target.rows() != dyn.m() || K_target.cols() != dyn.n()) {
        throw std::invalid_argument("run_model_based: target gain must be m x n");
    }
    if (!is_hurwitz(dyn.A - dyn.B * K_target)) {
        throw StabilityError("run_model_based: A - B K_target is not Hurwitz");
    }

    const CostWeights learner_w{cfg.Q0, cfg.R, cfg.gamma};  // Q field replaced per iteration

    IterationTrace trace;
    Eigen::MatrixXd Q = symmetrized(cfg.Q0);
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(dyn.z(), dyn.n());
    Eigen::MatrixXd P_prev;

    for (int i = 0; i < cfg.max_iters; ++i) {
        const Eigen::MatrixXd P = policy_correction(dyn, K_target, Q, L, cfg);
        trace.linear_solves += 1;
        const auto [K_next, L_next] = input_update(dyn, P, cfg);
        const Eigen::MatrixXd Q_next = weight_update(dyn, P, K_next, L_next, cfg);

        IterationRecord rec;
        rec.iter = i;
        rec.Q = Q;
        rec.P = P;
        rec.K = K_next;
        rec.L = L_next;
        CostWeights w_next = learner_w;
        w_next.Q = Q_next;
        rec.gare_residual = gare_residual(dyn, w_next, P);
        rec.target_residual = target_consistency_residual(dyn, K_target, P, Q, cfg.R, cfg.gamma);
        rec.gain_error = (K_next - K_target).norm();
        rec.hurwitz_ok = is_hurwitz(dyn.A - dyn.B * K_next);
        rec.policy_residual =
            ((dyn.A - dyn.B * K_target).transpose() * P + P * (dyn.A - dyn.B * K_target) + Q +
             K_target.transpose() * cfg.R * K_target +
             cfg.gamma * cfg.gamma * L.transpose() * L)
                .norm();
        trace.records.push_back(std::move(rec));

        const bool value_fixed = i > 0 && (P - P_prev).norm() <= cfg.tol_converge;
        const bool weight_fixed =
            (Q_next - Q).norm() <= cfg.tol_converge && (L_next - L).norm() <= cfg.tol_converge;
        P_prev = P;
        Q = Q_next;
        L = L_next;
        if (value_fixed || weight_fixed) {
            trace.converged = true;
            break;
        }
    }
    trace.iterations_used = static_cast<int>(trace.records.size());
    return trace;
}

void write_trace_csv(const IterationTrace& trace, int n, int m, int z, const std::string& path) {
    auto out = csv::open_out(path);
    out << "# zsirl-trace n=" << n << " m=" << m << " z=" << z
        << " converged=" << (trace.converged ? 1 : 0) << " iterations=" << trace.iterations_used
        << " linear_solves=" << trace.linear_solves << "\n";

    const int N = packed_size(n);
    out << "iter";
    auto head = [&out](const char* prefix, int count) {
        for (int i = 0; i < count; ++i) {
            out << ',' << prefix << i;
        }
    };
    head("q", N);
    head("p", N);
    head("k", m * n);
    head("l", z * n);
    out << ",gare_residual,target_residual,gain_error,hurwitz_ok,weight_shift,policy_residual\n";

    for (const IterationRecord& rec : trace.records) {
        out << rec.iter;
        auto emit = [&out](const Eigen::VectorXd& v) {
            for (Eigen::Index i = 0; i < v.size(); ++i) {
                out << ',' << csv::g17(v[i]);
            }
        };
        emit(pack_sym(rec.Q));
        emit(pack_sym(rec.P));
        emit(vec_row(rec.K));
        emit(vec_row(rec.L));
        out << ',' << csv::g17(rec.gare_residual) << ',' << csv::g17(rec.target_residual) << ','
            << csv::g17(rec.gain_error) << ',' << (rec.hurwitz_ok ? 1 : 0) << ','
            << csv::g17(rec.weight_shift) << ',' << csv::g17(rec.policy_residual) << "\n";
    }
}

IterationTrace read_trace_csv(const std::string& path, int* n_out, int* m_out, int* z_out) {
    auto in = csv::open_in(path);
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error(path + ": empty file");
    }
    const auto meta = csv::parse_meta(line, "zsirl-trace");
    const int n = static_cast<int>(csv::to_double(csv::meta_value(meta, "n"), path));
    const int m = static_cast<int>(csv::to_double(csv::meta_value(meta, "m"), path));
    const int z = static_cast<int>(csv::to_double(csv::meta_value(meta, "z"), path));

    IterationTrace trace;
    trace.converged = csv::meta_value(meta, "converged") == "1";
    trace.iterations_used =
        static_cast<int>(csv::to_double(csv::meta_value(meta, "iterations"), path));
    trace.linear_solves =
        static_cast<int>(csv::to_double(csv::meta_value(meta, "linear_solves"), path));

    if (!std::getline(in, line)) {
        throw std::runtime_error(path + ": missing header row");
    }
    const int N = packed_size(n);
    const std::size_t expected = 1 + 2 * N + m * n + z * n + 6;
    if (csv::split(csv::trim(line), ',').size() != expected) {
        throw std::runtime_error(path + ": header column count mismatch");
    }

    int line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string trimmed = csv::trim(line);
        if (trimmed.empty()) {
            continue;
        }
        const auto fields = csv::split(trimmed, ',');
        if (fields.size() != expected) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": column count mismatch");
        }
        std::size_t k = 0;
        auto num = [&]() {
            return csv::to_double(fields[k++], path + ":" + std::to_string(line_no));
        };
        auto take = [&](int count) {
            Eigen::VectorXd v(count);
            for (int i = 0; i < count; ++i) {
                v[i] = num();
            }
            return v;
        };
        IterationRecord rec;
        rec.iter = static_cast<int>(num());
        rec.Q = unpack_sym(take(N), n);
        rec.P = unpack_sym(take(N), n);
        rec.K = unvec_row(take(m * n), m, n);
        rec.L = unvec_row(take(z * n), z, n);
        rec.gare_residual = num();
        rec.target_residual = num();
        rec.gain_error = num();
        rec.hurwitz_ok = num() != 0.0;
        rec.weight_shift = num();
        rec.policy_residual = num();
        trace.records.push_back(std::move(rec));
    }

    if (n_out != nullptr) {
        *n_out = n;
    }
    if (m_out != nullptr) {
        *m_out = m;
    }
    if (z_out != nullptr) {
        *z_out = z;
    }
    return trace;
}

}  // namespace zsirl
