#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "zsirl/types.hpp"

// Fixed-step simulation of the expert and learner agents and collection of
// the time-windowed trajectory integrals consumed by the data-driven
// learner. Inputs are held constant over each integration step (zero-order
// hold) and window integrals are accumulated by the composite trapezoid
// rule on the integration grid, with the held input value used at both ends
// of each step.

namespace zsirl {

enum class SignalKind { Zero, UniformRandom, SinusoidSum };

// Exogenous signal description. UniformRandom draws one value per
// integration step in amplitude * [0, 1), deterministically from (seed,
// sample index, component). SinusoidSum evaluates amplitude * sum_i
// sin(w_i t) on every component.
struct SignalSpec {
    SignalKind kind = SignalKind::Zero;
    double amplitude = 0.0;
    std::vector<double> frequencies;
    std::uint64_t seed = 0;

    static SignalSpec zero();
    static SignalSpec uniform_random(double amplitude, std::uint64_t seed);
    static SignalSpec sinusoid_sum(double amplitude, std::vector<double> frequencies);

    void validate() const;
};

Eigen::VectorXd sample_signal(const SignalSpec& spec, double t, std::uint64_t sample_index,
                              int dim);

// One classical Runge-Kutta step of xdot = A x + B u + D d with u, d fixed.
Eigen::VectorXd rk4_step(const SystemDynamics& dyn, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u, const Eigen::VectorXd& d, double h);

enum class BatchRole { Expert, Learner };

// Per-window integrals. Naming: I_ab is the window integral of a kron b,
// d_xx the increment of the quadratic basis across the window, I_xx the
// window integral of the quadratic basis, and I_vv (expert only) the window
// integral of the quadratic basis of u - e, i.e. of the noise-free input.
struct BatchWindow {
    Eigen::VectorXd start_state;  // n
    Eigen::VectorXd end_state;    // n
    Eigen::VectorXd d_xx;         // n(n+1)/2
    Eigen::VectorXd i_xx;         // n(n+1)/2
    Eigen::VectorXd i_xu;         // n*m
    Eigen::VectorXd i_xd;         // n*z
    Eigen::VectorXd i_xe;         // n*m, expert only
    Eigen::VectorXd i_vv;         // m(m+1)/2, expert only
};

struct DataBatch {
    int n = 0;
    int m = 0;
    int z = 0;
    double T_window = 0.0;
    BatchRole role = BatchRole::Learner;
    std::vector<BatchWindow> windows;

    int window_count() const { return static_cast<int>(windows.size()); }
    int required_windows() const;

    // Dimension, finiteness and bookkeeping checks (d_xx must equal the
    // quadratic-basis increment of the recorded states).
    void validate() const;
};

// Simulate the expert closed loop u = -K_target x + e against disturbance d
// and accumulate all policy-regression integrals. The probing signal e is
// recorded separately from u so the cross term with e can be formed later.
DataBatch collect_expert_batch(const SystemDynamics& dyn, const Eigen::MatrixXd& K_target,
                               const SignalSpec& noise, const SignalSpec& disturbance,
                               double T_window, int window_count, double h,
                               const Eigen::VectorXd& x0);

// Simulate the learner under the stabilizing behavior policy u = -K_behavior
// x and accumulate the weight-regression integrals.
DataBatch collect_learner_batch(const SystemDynamics& dyn, const Eigen::MatrixXd& K_behavior,
                                const SignalSpec& disturbance, double T_window, int window_count,
                                double h, const Eigen::VectorXd& x0);

// Closed-loop trajectory u = -K x without probing, sampled on the
// integration grid (duration/h + 1 states including t = 0).
struct Trajectory {
    double h = 0.0;
    std::vector<double> t;
    std::vector<Eigen::VectorXd> x;
};

Trajectory simulate_closed_loop(const SystemDynamics& dyn, const Eigen::MatrixXd& K,
                                const SignalSpec& disturbance, double duration, double h,
                                const Eigen::VectorXd& x0);

// CSV round trip, lossless at 17 significant digits.
void write_batch_csv(const DataBatch& batch, const std::string& path);
DataBatch read_batch_csv(const std::string& path);

}  // namespace zsirl
