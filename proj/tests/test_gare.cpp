#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "support/test_util.hpp"
#include "zsirl/gare.hpp"
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

CostWeights scalar_weights(double q, double r, double gamma) {
    CostWeights w;
    w.Q = Eigen::MatrixXd::Constant(1, 1, q);
    w.R = Eigen::MatrixXd::Constant(1, 1, r);
    w.gamma = gamma;
    return w;
}

}  // namespace

TEST_CASE("scalar closed forms") {
    // a=-1, b=1, no disturbance channel influence: P^2 + 2P - 3 = 0 -> P = 1.
    const GameSolution s1 = solve_gare(scalar_dyn(-1.0, 1.0, 0.0), scalar_weights(3.0, 1.0, 5.0));
    CHECK(s1.P(0, 0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(s1.K(0, 0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(s1.L(0, 0) == doctest::Approx(0.0).epsilon(1e-12));

    // a=0, b=d=1, gamma=sqrt(2): 1 - P^2 + P^2/2 = 0 -> P = sqrt(2).
    const GameSolution s2 =
        solve_gare(scalar_dyn(0.0, 1.0, 1.0), scalar_weights(1.0, 1.0, std::sqrt(2.0)));
    CHECK(s2.P(0, 0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
    CHECK(s2.K(0, 0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
    CHECK(s2.L(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-10));
}

TEST_CASE("two-state benchmark target matches the published solution") {
    const GameSolution sol =
        solve_gare(zsirl::testing::bench_dynamics(), zsirl::testing::bench_target_weights());

    Eigen::MatrixXd P_ref(2, 2);
    P_ref << 3.7459, 1.3246, 1.3246, 2.3853;
    Eigen::MatrixXd K_ref(1, 2);
    K_ref << 1.9869, 3.5779;
    Eigen::MatrixXd L_ref(1, 2);
    L_ref << 0.4162, 0.1472;

    CHECK((sol.P - P_ref).cwiseAbs().maxCoeff() <= 1e-3);
    CHECK((sol.K - K_ref).cwiseAbs().maxCoeff() <= 1e-3);
    CHECK((sol.L - L_ref).cwiseAbs().maxCoeff() <= 1e-3);
    CHECK(sol.residual <= kTolGare);
}

TEST_CASE("randomized scalar problems against the closed form") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> ua(-2.0, -0.1);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double a = ua(rng);
        const double b = 0.4 + u01(rng);
        const double d = u01(rng);
        const double q = 0.3 + 2.0 * u01(rng);
        const double r = 0.5 + 1.5 * u01(rng);
        // keep b^2/r - d^2/gamma^2 safely positive
        const double gamma = (d / b) * std::sqrt(r) * (1.5 + u01(rng));

        const double c2 = b * b / r - d * d / (gamma * gamma);
        const double P_closed = (a + std::sqrt(a * a + c2 * q)) / c2;

        const GameSolution sol = solve_gare(scalar_dyn(a, b, d), scalar_weights(q, r, gamma));
        CHECK(std::abs(sol.P(0, 0) - P_closed) <= 1e-8 * std::max(1.0, P_closed));
    }
}

TEST_CASE("solution properties on randomized two-state games") {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 25; ++trial) {
        const auto game = zsirl::testing::random_game(rng);
        CHECK(game.sol.residual <= kTolGare);
        CHECK(min_sym_eig(game.sol.P) > 0.0);
        CHECK(is_hurwitz(game.dyn.A - game.dyn.B * game.sol.K));
        CHECK(is_hurwitz(game.dyn.A - game.dyn.B * game.sol.K + game.dyn.D * game.sol.L));
        // The two solve routes agree.
        const Eigen::MatrixXd P_direct = solve_gare_hamiltonian(game.dyn, game.weights);
        CHECK((P_direct - game.sol.P).norm() <= 1e-8 * std::max(1.0, game.sol.P.norm()));
    }
}

TEST_CASE("gare error paths") {
    // gamma below the attenuation bound: no positive stabilizing solution.
    CHECK_THROWS_AS(solve_gare(scalar_dyn(0.0, 1.0, 1.0), scalar_weights(1.0, 1.0, 0.9)),
                    NumericError);
    // Invalid weights.
    CHECK_THROWS_AS(solve_gare(scalar_dyn(-1.0, 1.0, 0.0), scalar_weights(-1.0, 1.0, 1.0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(solve_gare(scalar_dyn(-1.0, 1.0, 0.0), scalar_weights(1.0, 1.0, -2.0)),
                    std::invalid_argument);
}
