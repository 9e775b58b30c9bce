#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "support/test_util.hpp"
#include "zsirl/lti_sim.hpp"
#include "zsirl/matrix_ops.hpp"

using namespace zsirl;

namespace {

SystemDynamics scalar_dyn(double a, double b, double d) {
    SystemDynamics dyn;
    dyn.A = Eigen::MatrixXd::Constant(1, 1, a);
    dyn.B = Eigen::MatrixXd::Constant(1, 1, b);
    dyn.D = Eigen::MatrixXd::Constant(1, 1, d);
    return dyn;
}

Eigen::VectorXd scalar_vec(double v) { return Eigen::VectorXd::Constant(1, v); }

double decay_error(double h) {
    // global RK4 error for xdot = -x over [0, 1]
    const SystemDynamics dyn = scalar_dyn(-1.0, 0.0, 0.0);
    Eigen::VectorXd x = scalar_vec(1.0);
    const int steps = static_cast<int>(std::llround(1.0 / h));
    for (int s = 0; s < steps; ++s) {
        x = rk4_step(dyn, x, scalar_vec(0.0), scalar_vec(0.0), h);
    }
    return std::abs(x[0] - std::exp(-1.0));
}

}  // namespace

TEST_CASE("rk4 single step values") {
    const SystemDynamics decay = scalar_dyn(-1.0, 0.0, 0.0);
    const Eigen::VectorXd x1 =
        rk4_step(decay, scalar_vec(1.0), scalar_vec(0.0), scalar_vec(0.0), 0.1);
    CHECK(x1[0] == doctest::Approx(0.9048375).epsilon(1e-12));  // 4th-order Taylor of e^-0.1
    CHECK(std::abs(x1[0] - std::exp(-0.1)) < 1e-6);

    const SystemDynamics integrator = scalar_dyn(0.0, 1.0, 0.0);
    const Eigen::VectorXd x2 =
        rk4_step(integrator, scalar_vec(0.0), scalar_vec(2.0), scalar_vec(0.0), 0.5);
    CHECK(x2[0] == doctest::Approx(1.0).epsilon(1e-14));

    const SystemDynamics idle = scalar_dyn(0.0, 0.0, 0.0);
    const Eigen::VectorXd x3 =
        rk4_step(idle, scalar_vec(0.7), scalar_vec(0.0), scalar_vec(0.0), 0.3);
    CHECK(x3[0] == 0.7);

    CHECK_THROWS_AS(rk4_step(decay, scalar_vec(1.0), scalar_vec(0.0), scalar_vec(0.0), 0.0),
                    std::invalid_argument);
}

TEST_CASE("rk4 is fourth order") {
    CHECK(decay_error(0.001) < 1e-10);
    const double ratio = decay_error(0.01) / decay_error(0.005);
    CHECK(ratio > 12.0);
    CHECK(ratio < 20.0);
}

TEST_CASE("signal sampling") {
    const SignalSpec zero = SignalSpec::zero();
    CHECK(sample_signal(zero, 3.0, 17, 2).norm() == 0.0);

    const SignalSpec rnd = SignalSpec::uniform_random(0.003, 42);
    for (std::uint64_t i = 0; i < 500; ++i) {
        const Eigen::VectorXd v = sample_signal(rnd, 0.0, i, 1);
        CHECK(v[0] >= 0.0);
        CHECK(v[0] < 0.003);
    }
    // deterministic in (seed, index, component)
    CHECK(sample_signal(rnd, 0.0, 7, 1) == sample_signal(rnd, 99.0, 7, 1));
    CHECK(sample_signal(rnd, 0.0, 7, 1) != sample_signal(rnd, 0.0, 8, 1));

    const SignalSpec sin1 = SignalSpec::sinusoid_sum(2.5, {4.0});
    CHECK(sample_signal(sin1, 0.0, 0, 1)[0] == 0.0);
    CHECK(sample_signal(sin1, 0.25, 0, 1)[0] == doctest::Approx(2.5 * std::sin(1.0)));

    CHECK_THROWS_AS(SignalSpec::sinusoid_sum(1.0, {2.0, 2.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(SignalSpec::sinusoid_sum(1.0, {}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(SignalSpec::uniform_random(-1.0, 3).validate(), std::invalid_argument);
}

TEST_CASE("expert batch at equilibrium is all zeros") {
    const SystemDynamics dyn = zsirl::testing::bench_dynamics();
    Eigen::MatrixXd K(1, 2);
    K << 1.9869, 3.5779;
    const DataBatch batch = collect_expert_batch(dyn, K, SignalSpec::zero(), SignalSpec::zero(),
                                                 0.008, 8, 0.001, Eigen::VectorXd::Zero(2));
    for (const BatchWindow& w : batch.windows) {
        CHECK(w.i_xx.norm() == 0.0);
        CHECK(w.i_xu.norm() == 0.0);
        CHECK(w.i_xd.norm() == 0.0);
        CHECK(w.i_xe.norm() == 0.0);
        CHECK(w.i_vv.norm() == 0.0);
        CHECK(w.d_xx.norm() == 0.0);
    }
}

TEST_CASE("constant state window integrates the quadratic basis exactly") {
    SystemDynamics dyn;
    dyn.A = Eigen::MatrixXd::Zero(2, 2);
    dyn.B = Eigen::MatrixXd::Zero(2, 1);
    dyn.D = Eigen::MatrixXd::Zero(2, 1);
    Eigen::VectorXd x0(2);
    x0 << 1.0, 0.0;
    const DataBatch batch =
        collect_expert_batch(dyn, Eigen::MatrixXd::Zero(1, 2), SignalSpec::zero(),
                             SignalSpec::zero(), 0.008, 7, 0.001, x0);
    const BatchWindow& w = batch.windows.front();
    CHECK(w.i_xx[0] == doctest::Approx(0.008).epsilon(1e-14));
    CHECK(w.i_xx[1] == 0.0);
    CHECK(w.i_xx[2] == 0.0);
    CHECK(w.d_xx.norm() == 0.0);
}

TEST_CASE("learner batch matches the closed-form decay integral at second order") {
    const SystemDynamics dyn = scalar_dyn(-1.0, 1.0, 0.0);
    const double T = 0.5;
    auto first_ixx = [&](double h) {
        const DataBatch b = collect_learner_batch(dyn, Eigen::MatrixXd::Zero(1, 1),
                                                  SignalSpec::zero(), T, 1, h, scalar_vec(1.0));
        return b.windows.front().i_xx[0];
    };
    const double closed = (1.0 - std::exp(-2.0 * T)) / 2.0;
    const double e1 = std::abs(first_ixx(0.0005) - closed);
    const double e2 = std::abs(first_ixx(0.00025) - closed);
    CHECK(e1 < 1e-6);
    CHECK(e1 / e2 > 3.0);  // trapezoid: error shrinks ~4x per halving
    CHECK(e1 / e2 < 5.0);
}

TEST_CASE("window bookkeeping identity holds exactly") {
    const SystemDynamics dyn = zsirl::testing::bench_dynamics();
    Eigen::MatrixXd K(1, 2);
    K << 1.9869, 3.5779;
    Eigen::VectorXd x0(2);
    x0 << 1.0, -1.0;
    const DataBatch batch =
        collect_expert_batch(dyn, K, SignalSpec::sinusoid_sum(0.2, {1.0, 5.0}),
                             SignalSpec::uniform_random(0.01, 5), 0.008, 12, 0.001, x0);
    for (const BatchWindow& w : batch.windows) {
        const Eigen::VectorXd expect = quad_basis(w.end_state) - quad_basis(w.start_state);
        CHECK((w.d_xx - expect).norm() == 0.0);
    }
    CHECK_NOTHROW(batch.validate());
}

TEST_CASE("identical seeds reproduce batches bit for bit") {
    const SystemDynamics dyn = zsirl::testing::bench_dynamics();
    Eigen::MatrixXd K(1, 2);
    K << 1.9869, 3.5779;
    Eigen::VectorXd x0(2);
    x0 << 1.0, -1.0;
    auto make = [&]() {
        return collect_expert_batch(dyn, K, SignalSpec::sinusoid_sum(0.1, {1.0, 3.0, 7.0}),
                                    SignalSpec::uniform_random(0.003, 11), 0.008, 10, 0.001, x0);
    };
    const DataBatch a = make();
    const DataBatch b = make();
    REQUIRE(a.window_count() == b.window_count());
    for (int i = 0; i < a.window_count(); ++i) {
        CHECK(a.windows[i].i_xx == b.windows[i].i_xx);
        CHECK(a.windows[i].i_xu == b.windows[i].i_xu);
        CHECK(a.windows[i].i_xd == b.windows[i].i_xd);
        CHECK(a.windows[i].i_xe == b.windows[i].i_xe);
        CHECK(a.windows[i].end_state == b.windows[i].end_state);
    }
}

TEST_CASE("collection error paths") {
    const SystemDynamics dyn = scalar_dyn(1.0, 1.0, 0.0);  // unstable open loop
    // Non-stabilizing behavior policy.
    CHECK_THROWS_AS(collect_learner_batch(dyn, Eigen::MatrixXd::Zero(1, 1), SignalSpec::zero(),
                                          0.1, 2, 0.01, scalar_vec(1.0)),
                    StabilityError);
    // Divergence guard: expert collection does not require stability.
    CHECK_THROWS_AS(collect_expert_batch(dyn, Eigen::MatrixXd::Zero(1, 1), SignalSpec::zero(),
                                         SignalSpec::zero(), 2.0, 8, 0.01, scalar_vec(1e4)),
                    DivergenceError);
    // Window grid must tile T_window.
    CHECK_THROWS_AS(collect_learner_batch(scalar_dyn(-1.0, 1.0, 0.0), Eigen::MatrixXd::Zero(1, 1),
                                          SignalSpec::zero(), 0.1, 2, 0.03, scalar_vec(1.0)),
                    std::invalid_argument);
    // Too few windows for the role.
    CHECK_THROWS_AS(collect_expert_batch(scalar_dyn(-1.0, 1.0, 0.0), Eigen::MatrixXd::Zero(1, 1),
                                         SignalSpec::zero(), SignalSpec::zero(), 0.1, 2, 0.01,
                                         scalar_vec(1.0)),
                    std::invalid_argument);
}

TEST_CASE("batch CSV round trip is lossless") {
    const SystemDynamics dyn = zsirl::testing::bench_dynamics();
    Eigen::MatrixXd K(1, 2);
    K << 1.9869, 3.5779;
    Eigen::VectorXd x0(2);
    x0 << 1.0, -1.0;
    const DataBatch expert =
        collect_expert_batch(dyn, K, SignalSpec::sinusoid_sum(0.1, {1.0, 3.0, 7.0, 12.0, 18.0}),
                             SignalSpec::uniform_random(0.003, 11), 0.008, 9, 0.001, x0);
    Eigen::MatrixXd Kb(1, 2);
    Kb << 1.2129, 2.2812;
    const DataBatch learner = collect_learner_batch(
        dyn, Kb, SignalSpec::uniform_random(0.003, 13), 0.008, 5, 0.001, x0);

    const auto dir = std::filesystem::temp_directory_path() / "zsirl_batch_roundtrip";
    std::filesystem::create_directories(dir);
    for (const DataBatch* b : {&expert, &learner}) {
        const std::string path = (dir / "batch.csv").string();
        write_batch_csv(*b, path);
        const DataBatch back = read_batch_csv(path);
        REQUIRE(back.window_count() == b->window_count());
        CHECK(back.n == b->n);
        CHECK(back.T_window == b->T_window);
        CHECK(back.role == b->role);
        for (int i = 0; i < b->window_count(); ++i) {
            CHECK(back.windows[i].start_state == b->windows[i].start_state);
            CHECK(back.windows[i].end_state == b->windows[i].end_state);
            CHECK(back.windows[i].d_xx == b->windows[i].d_xx);
            CHECK(back.windows[i].i_xx == b->windows[i].i_xx);
            CHECK(back.windows[i].i_xu == b->windows[i].i_xu);
            CHECK(back.windows[i].i_xd == b->windows[i].i_xd);
            if (b->role == BatchRole::Expert) {
                CHECK(back.windows[i].i_xe == b->windows[i].i_xe);
                CHECK(back.windows[i].i_vv == b->windows[i].i_vv);
            }
        }
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("closed-loop trajectory simulation") {
    const SystemDynamics dyn = scalar_dyn(-1.0, 1.0, 0.0);
    const Trajectory traj = simulate_closed_loop(dyn, Eigen::MatrixXd::Zero(1, 1),
                                                 SignalSpec::zero(), 1.0, 0.001, scalar_vec(1.0));
    REQUIRE(traj.x.size() == 1001);
    CHECK(traj.t.front() == 0.0);
    CHECK(traj.t.back() == doctest::Approx(1.0));
    CHECK(std::abs(traj.x.back()[0] - std::exp(-1.0)) < 1e-10);
}
