#include "zsirl/game_verify.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "csv_util.hpp"
#include "zsirl/matrix_ops.hpp"

namespace zsirl {

namespace {

std::uint64_t splitmix64(std::uint64_t v) {
    v += 0x9e3779b97f4a7c15ULL;
    v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
    v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
    return v ^ (v >> 31);
}

// Deterministic sequence of vectors with components in [-1, 1].
class SampleStream {
  public:
    explicit SampleStream(std::uint64_t seed) : state_(seed) {}

    Eigen::VectorXd draw(int dim) {
        Eigen::VectorXd v(dim);
        for (int i = 0; i < dim; ++i) {
            state_ = splitmix64(state_);
            v[i] = 2.0 * (static_cast<double>(state_ >> 11) * 0x1.0p-53) - 1.0;
        }
        return v;
    }

  private:
    std::uint64_t state_;
};

}  // namespace

void VerificationReport::add(std::string name, double value, double tolerance,
                             std::string detail) {
    checks.push_back(
        {std::move(name), value, tolerance, std::abs(value) <= tolerance, std::move(detail)});
}

void VerificationReport::add_flag(std::string name, bool ok, std::string detail) {
    checks.push_back({std::move(name), ok ? 1.0 : 0.0, 0.0, ok, std::move(detail)});
}

void VerificationReport::add_lower_bound(std::string name, double value, double lower_bound,
                                         std::string detail) {
    checks.push_back({std::move(name), value, lower_bound, value >= lower_bound,
                      std::move(detail)});
}

bool VerificationReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const CheckResult& c) { return c.pass; });
}

void VerificationReport::append(const VerificationReport& other) {
    checks.insert(checks.end(), other.checks.begin(), other.checks.end());
}

void write_report_csv(const VerificationReport& report, const std::string& path) {
    auto out = csv::open_out(path);
    out << "check,value,tolerance,pass,detail\n";
    for (const CheckResult& c : report.checks) {
        out << c.name << ',' << csv::g17(c.value) << ',' << csv::g17(c.tolerance) << ','
            << (c.pass ? 1 : 0) << ',' << c.detail << "\n";
    }
}

void print_report(const VerificationReport& report, std::ostream& out) {
    std::size_t width = 4;
    for (const CheckResult& c : report.checks) {
        width = std::max(width, c.name.size());
    }
    for (const CheckResult& c : report.checks) {
        std::ostringstream line;
        line << (c.pass ? "PASS  " : "FAIL  ");
        line << c.name;
        line << std::string(width - c.name.size() + 2, ' ');
        line << "value=" << c.value << "  tol=" << c.tolerance;
        if (!c.detail.empty()) {
            line << "  (" << c.detail << ")";
        }
        out << line.str() << "\n";
    }
}

double target_consistency_residual(const SystemDynamics& dyn, const Eigen::MatrixXd& K_target,
                                   const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q,
                                   const Eigen::MatrixXd& R, double gamma) {
    const Eigen::MatrixXd A_cl = dyn.A - dyn.B * K_target;
    const Eigen::MatrixXd defect =
        A_cl.transpose() * P + P * A_cl + Q +
        (1.0 / (gamma * gamma)) * P * dyn.D * dyn.D.transpose() * P +
        K_target.transpose() * R * K_target;
    return defect.norm();
}

double hamiltonian(const SystemDynamics& dyn, const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q,
                   const Eigen::MatrixXd& R, double gamma, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& u, const Eigen::VectorXd& d) {
    const Eigen::VectorXd xdot = dyn.A * x + dyn.B * u + dyn.D * d;
    return x.dot(Q * x) + u.dot(R * u) - gamma * gamma * d.dot(d) + xdot.dot(P * x) +
           x.dot(P * xdot);
}

VerificationReport saddle_check(const SystemDynamics& dyn, const GameSolution& sol,
                                const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R, double gamma,
                                int samples, std::uint64_t seed, double zero_tol, double slack) {
    if (samples < 1) {
        throw std::invalid_argument("saddle_check: samples must be >= 1");
    }
    SampleStream rng(seed);

    double max_abs_h0 = 0.0;
    double worst_upper = std::numeric_limits<double>::infinity();  // min of H0 - H(u*, d)
    double worst_lower = std::numeric_limits<double>::infinity();  // min of H(u, d*) - H0
    int upper_violations = 0;
    int lower_violations = 0;

    for (int s = 0; s < samples; ++s) {
        Eigen::VectorXd x = rng.draw(dyn.n());
        if (x.norm() < 1e-9) {
            x.setOnes();
        }
        x.normalize();
        const Eigen::VectorXd du = rng.draw(dyn.m());
        const Eigen::VectorXd dd = rng.draw(dyn.z());

        const Eigen::VectorXd u_star = -sol.K * x;
        const Eigen::VectorXd d_star = sol.L * x;

        const double h0 = hamiltonian(dyn, sol.P, Q, R, gamma, x, u_star, d_star);
        const double h_dev_d = hamiltonian(dyn, sol.P, Q, R, gamma, x, u_star, d_star + dd);
        const double h_dev_u = hamiltonian(dyn, sol.P, Q, R, gamma, x, u_star + du, d_star);

        max_abs_h0 = std::max(max_abs_h0, std::abs(h0));
        worst_upper = std::min(worst_upper, h0 - h_dev_d);
        worst_lower = std::min(worst_lower, h_dev_u - h0);
        if (h_dev_d > h0 + slack) {
            ++upper_violations;
        }
        if (h_dev_u < h0 - slack) {
            ++lower_violations;
        }
    }

    VerificationReport report;
    report.add("hamiltonian_zero_at_optimum", max_abs_h0, zero_tol,
               "max |H(x,u*,d*)| over " + std::to_string(samples) + " unit-norm states");
    report.add_flag("saddle_disturbance_side", upper_violations == 0,
                    "violations=" + std::to_string(upper_violations) +
                        " min_margin=" + csv::g17(worst_upper));
    report.add_flag("saddle_control_side", lower_violations == 0,
                    "violations=" + std::to_string(lower_violations) +
                        " min_margin=" + csv::g17(worst_lower));
    return report;
}

VerificationReport nonuniqueness_residuals(const SystemDynamics& dyn, const CostWeights& target_w,
                                           const GameSolution& target_sol,
                                           const CostWeights& learned_w,
                                           const Eigen::MatrixXd& learned_P, double tolerance) {
    const Eigen::MatrixXd Q_o = target_w.Q - learned_w.Q;
    const Eigen::MatrixXd R_o = target_w.R - learned_w.R;
    const Eigen::MatrixXd P_o = target_sol.P - learned_P;
    const Eigen::MatrixXd& K_T = target_sol.K;
    const Eigen::MatrixXd DDt = dyn.D * dyn.D.transpose();

    const double gain_relation =
        (dyn.B.transpose() * P_o -
         R_o * Eigen::LLT<Eigen::MatrixXd>(target_w.R).solve(dyn.B.transpose() * target_sol.P))
            .norm();
    const double weight_relation =
        (Q_o + dyn.A.transpose() * P_o + P_o * dyn.A - K_T.transpose() * R_o * K_T +
         (1.0 / (target_w.gamma * target_w.gamma)) * target_sol.P * DDt * target_sol.P -
         (1.0 / (learned_w.gamma * learned_w.gamma)) * learned_P * DDt * learned_P)
            .norm();

    VerificationReport report;
    report.add("family_gain_relation", gain_relation, tolerance,
               "B'P_o vs R_o R_T^-1 B'P_T");
    report.add("family_weight_relation", weight_relation, tolerance,
               "weight-difference equation");
    return report;
}

CostWeights scale_solution(const CostWeights& target, double c) {
    if (!(c > 0.0)) {
        throw std::invalid_argument("scale_solution: c must be positive");
    }
    CostWeights scaled;
    scaled.Q = c * target.Q;
    scaled.R = c * target.R;
    scaled.gamma = std::sqrt(c) * target.gamma;
    return scaled;
}

double imitation_error(const std::vector<Eigen::VectorXd>& learner_samples,
                       const std::vector<Eigen::VectorXd>& target_samples) {
    if (learner_samples.size() != target_samples.size() || learner_samples.empty()) {
        throw std::invalid_argument("imitation_error: sample counts must match and be non-empty");
    }
    const Eigen::Index n = learner_samples.front().size();
    const double a = static_cast<double>(learner_samples.size());
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double sq = 0.0;
        for (std::size_t k = 0; k < learner_samples.size(); ++k) {
            if (learner_samples[k].size() != n || target_samples[k].size() != n) {
                throw std::invalid_argument("imitation_error: state dimension mismatch");
            }
            const double diff = learner_samples[k][i] - target_samples[k][i];
            sq += diff * diff;
        }
        total += std::sqrt(sq / a);
    }
    return total / static_cast<double>(n);
}

}  // namespace zsirl
