#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <random>

#include "support/test_util.hpp"
#include "zsirl/gare.hpp"
#include "zsirl/irl_model_based.hpp"
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

IrlConfig scalar_cfg(double q0, double r, double gamma) {
    IrlConfig cfg;
    cfg.Q0 = Eigen::MatrixXd::Constant(1, 1, q0);
    cfg.R = Eigen::MatrixXd::Constant(1, 1, r);
    cfg.gamma = gamma;
    return cfg;
}

}  // namespace

TEST_CASE("policy_correction scalar values") {
    const SystemDynamics dyn = scalar_dyn(0.0, 1.0, 0.0);
    const IrlConfig cfg = scalar_cfg(1.0, 1.0, 10.0);
    const Eigen::MatrixXd L0 = Eigen::MatrixXd::Zero(1, 1);

    const Eigen::MatrixXd P1 = policy_correction(dyn, Eigen::MatrixXd::Constant(1, 1, 1.0),
                                                 Eigen::MatrixXd::Constant(1, 1, 1.0), L0, cfg);
    CHECK(P1(0, 0) == doctest::Approx(1.0).epsilon(1e-12));

    const Eigen::MatrixXd P2 = policy_correction(dyn, Eigen::MatrixXd::Constant(1, 1, 2.0),
                                                 Eigen::MatrixXd::Constant(1, 1, 1.0), L0, cfg);
    CHECK(P2(0, 0) == doctest::Approx(1.25).epsilon(1e-12));

    // Unstable target loop is rejected.
    CHECK_THROWS_AS(policy_correction(dyn, Eigen::MatrixXd::Constant(1, 1, -1.0),
                                      Eigen::MatrixXd::Constant(1, 1, 1.0), L0, cfg),
                    StabilityError);
}

TEST_CASE("policy_correction recovers the value of a known solution") {
    // With (Q, L) taken from an oracle solution the closed-loop value
    // equation is solved by exactly that solution's P.
    std::mt19937_64 rng(31);
    const auto game = zsirl::testing::random_game(rng);
    IrlConfig cfg;
    cfg.R = game.weights.R;
    cfg.gamma = game.weights.gamma;
    cfg.Q0 = game.weights.Q;
    const Eigen::MatrixXd P =
        policy_correction(game.dyn, game.sol.K, game.weights.Q, game.sol.L, cfg);
    CHECK((P - game.sol.P).norm() <= 1e-9 * std::max(1.0, game.sol.P.norm()));
}

TEST_CASE("input_update") {
    const SystemDynamics dyn = scalar_dyn(0.0, 1.0, 0.0);
    const IrlConfig cfg = scalar_cfg(1.0, 1.0, 10.0);
    const auto [K, L] = input_update(dyn, Eigen::MatrixXd::Constant(1, 1, 1.25), cfg);
    CHECK(K(0, 0) == doctest::Approx(1.25).epsilon(1e-14));
    CHECK(L(0, 0) == 0.0);  // D = 0

    // Published value matrix reproduces the published gains.
    const SystemDynamics bench = zsirl::testing::bench_dynamics();
    IrlConfig bench_cfg;
    bench_cfg.R = Eigen::MatrixXd::Constant(1, 1, 2.0);
    bench_cfg.gamma = 3.0;
    bench_cfg.Q0 = Eigen::MatrixXd::Identity(2, 2);
    Eigen::MatrixXd P_ref(2, 2);
    P_ref << 3.7459, 1.3246, 1.3246, 2.3853;
    const auto [Kb, Lb] = input_update(bench, P_ref, bench_cfg);
    CHECK(std::abs(Kb(0, 0) - 1.9869) <= 1e-3);
    CHECK(std::abs(Kb(0, 1) - 3.5779) <= 1e-3);
    CHECK(std::abs(Lb(0, 0) - 0.4162) <= 1e-3);
    CHECK(std::abs(Lb(0, 1) - 0.1472) <= 1e-3);
}

TEST_CASE("weight_update scalar recursion values") {
    const SystemDynamics dyn = scalar_dyn(0.0, 1.0, 0.0);
    const IrlConfig cfg = scalar_cfg(1.0, 1.0, 10.0);
    const Eigen::MatrixXd Q1 =
        weight_update(dyn, Eigen::MatrixXd::Constant(1, 1, 1.25),
                      Eigen::MatrixXd::Constant(1, 1, 1.25), Eigen::MatrixXd::Zero(1, 1), cfg);
    CHECK(Q1(0, 0) == doctest::Approx(1.5625).epsilon(1e-14));

    // Second step of the hand recursion: P = (Q+4)/4, Q' = P^2.
    const double P1 = (1.5625 + 4.0) / 4.0;
    CHECK(P1 == doctest::Approx(1.390625).epsilon(1e-15));
    const Eigen::MatrixXd Q2 = weight_update(
        dyn, Eigen::MatrixXd::Constant(1, 1, P1),
        Eigen::MatrixXd::Constant(1, 1, P1), Eigen::MatrixXd::Zero(1, 1),
        scalar_cfg(1.0, 1.0, 10.0));
    CHECK(Q2(0, 0) == doctest::Approx(1.933837890625).epsilon(1e-14));
}

TEST_CASE("weight_update at an oracle fixed point returns the generating weight") {
    std::mt19937_64 rng(32);
    const auto game = zsirl::testing::random_game(rng);
    IrlConfig cfg;
    cfg.R = game.weights.R;
    cfg.gamma = game.weights.gamma;
    cfg.Q0 = game.weights.Q;
    const Eigen::MatrixXd Q = weight_update(game.dyn, game.sol.P, game.sol.K, game.sol.L, cfg);
    CHECK((Q - game.weights.Q).norm() <= 1e-8 * std::max(1.0, game.weights.Q.norm()));
}

TEST_CASE("scalar run that starts at the fixed point converges in one iteration") {
    const SystemDynamics dyn = scalar_dyn(0.0, 1.0, 0.0);
    const IrlConfig cfg = scalar_cfg(1.0, 1.0, 10.0);
    const IterationTrace trace =
        run_model_based(dyn, Eigen::MatrixXd::Constant(1, 1, 1.0), cfg);
    CHECK(trace.converged);
    CHECK(trace.iterations_used == 1);
    CHECK(trace.last().P(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(trace.last().Q(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(trace.last().K(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("scalar run follows the hand recursion and approaches the target gain") {
    const SystemDynamics dyn = scalar_dyn(0.0, 1.0, 0.0);
    IrlConfig cfg = scalar_cfg(1.0, 1.0, 10.0);
    cfg.max_iters = 4000;
    cfg.tol_converge = 1e-7;
    const IterationTrace trace =
        run_model_based(dyn, Eigen::MatrixXd::Constant(1, 1, 2.0), cfg);

    // Q follows 1 -> 1.5625 -> 1.933837890625 -> ... -> 4; P = (Q + 4)/4.
    REQUIRE(trace.records.size() >= 3);
    CHECK(trace.records[0].Q(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(trace.records[0].P(0, 0) == doctest::Approx(1.25).epsilon(1e-12));
    CHECK(trace.records[1].Q(0, 0) == doctest::Approx(1.5625).epsilon(1e-12));
    CHECK(trace.records[1].P(0, 0) == doctest::Approx(1.390625).epsilon(1e-12));
    CHECK(trace.records[2].Q(0, 0) == doctest::Approx(1.933837890625).epsilon(1e-12));

    // The weight increments are quadratic in the gain error, so the stop at
    // |dP| <= 1e-7 leaves a gain error of about 2 sqrt(tol).
    CHECK(trace.converged);
    CHECK(trace.last().gain_error <= 1e-3);
    // Weights increase monotonically toward 4.
    for (std::size_t i = 0; i + 1 < trace.records.size(); ++i) {
        CHECK(trace.records[i + 1].Q(0, 0) >= trace.records[i].Q(0, 0) - 1e-12);
    }
    CHECK(trace.last().Q(0, 0) <= 4.0 + 1e-9);
}

TEST_CASE("two-state benchmark run satisfies the exact-iteration guarantees") {
    const SystemDynamics dyn = zsirl::testing::bench_dynamics();
    const GameSolution target = solve_gare(dyn, zsirl::testing::bench_target_weights());

    IrlConfig cfg;
    cfg.Q0 = Eigen::Vector2d(1.0, 0.5).asDiagonal();
    cfg.R = Eigen::MatrixXd::Identity(1, 1);
    cfg.gamma = 40.0;
    cfg.max_iters = 20000;
    cfg.tol_converge = 1e-8;

    const IterationTrace trace = run_model_based(dyn, target.K, cfg);
    CHECK(trace.converged);
    CHECK(trace.last().gain_error <= 0.01);
    CHECK(trace.last().target_residual <= 1e-6);
    CHECK(trace.linear_solves == trace.iterations_used);

    // Per-iteration certificates: weights monotone, loop stabilizing, and the
    // reconstructed weight consistent with the game Riccati equation.
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
        const IterationRecord& rec = trace.records[i];
        CHECK(rec.hurwitz_ok);
        CHECK(rec.gare_residual <= kTolGare);
        if (i + 1 < trace.records.size()) {
            CHECK(psd_leq(rec.Q, trace.records[i + 1].Q));
        }
    }

    // The limit bounds every iterate: Q_i + g^2 L_i'L_i <= Q* + g^2 L*'L*.
    const Eigen::MatrixXd bound =
        trace.last().Q + 1600.0 * trace.last().L.transpose() * trace.last().L;
    for (std::size_t i = 0; i < trace.records.size(); i += 500) {
        const IterationRecord& rec = trace.records[i];
        CHECK(psd_leq(rec.Q + 1600.0 * rec.L.transpose() * rec.L, bound, 1e-6));
    }
}

TEST_CASE("randomized recovery against the oracle gain") {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 50; ++trial) {
        const auto game = zsirl::testing::random_game(rng);

        IrlConfig cfg;
        cfg.R = game.weights.R;
        cfg.gamma = game.weights.gamma;
        const double qmin = min_sym_eig(game.weights.Q);
        cfg.Q0 = 0.4 * qmin * Eigen::MatrixXd::Identity(2, 2);
        cfg.max_iters = 60000;
        cfg.tol_converge = 1e-10;

        const IterationTrace trace = run_model_based(game.dyn, game.sol.K, cfg);
        CHECK(trace.last().gain_error <= 1e-4 * std::max(1.0, game.sol.K.norm()));
    }
}

TEST_CASE("non-convergence is reported, not thrown") {
    const SystemDynamics dyn = scalar_dyn(0.0, 1.0, 0.0);
    IrlConfig cfg = scalar_cfg(1.0, 1.0, 10.0);
    cfg.max_iters = 3;
    cfg.tol_converge = 1e-12;
    const IterationTrace trace =
        run_model_based(dyn, Eigen::MatrixXd::Constant(1, 1, 2.0), cfg);
    CHECK_FALSE(trace.converged);
    CHECK(trace.iterations_used == 3);
}

TEST_CASE("trace CSV round trip") {
    const SystemDynamics dyn = zsirl::testing::bench_dynamics();
    const GameSolution target = solve_gare(dyn, zsirl::testing::bench_target_weights());
    IrlConfig cfg;
    cfg.Q0 = Eigen::Vector2d(1.0, 0.5).asDiagonal();
    cfg.R = Eigen::MatrixXd::Identity(1, 1);
    cfg.gamma = 40.0;
    cfg.max_iters = 25;
    cfg.tol_converge = 1e-12;
    const IterationTrace trace = run_model_based(dyn, target.K, cfg);

    const auto path = std::filesystem::temp_directory_path() / "zsirl_trace_roundtrip.csv";
    write_trace_csv(trace, 2, 1, 1, path.string());
    int n = 0, m = 0, z = 0;
    const IterationTrace back = read_trace_csv(path.string(), &n, &m, &z);
    REQUIRE(back.records.size() == trace.records.size());
    CHECK(n == 2);
    CHECK(m == 1);
    CHECK(z == 1);
    CHECK(back.converged == trace.converged);
    CHECK(back.linear_solves == trace.linear_solves);
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
        CHECK(back.records[i].Q == trace.records[i].Q);
        CHECK(back.records[i].P == trace.records[i].P);
        CHECK(back.records[i].K == trace.records[i].K);
        CHECK(back.records[i].L == trace.records[i].L);
        CHECK(back.records[i].gain_error == trace.records[i].gain_error);
    }
    std::filesystem::remove(path);
}
