#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

// Core value types shared by all zsirl modules: continuous-time LTI agent
// dynamics, quadratic game cost weights, and the solution triple of the
// associated game algebraic Riccati equation (GARE).

namespace zsirl {

// State dynamics xdot = A x + B u + D d of one agent.
struct SystemDynamics {
    Eigen::MatrixXd A;  // n x n
    Eigen::MatrixXd B;  // n x m
    Eigen::MatrixXd D;  // n x z

    int n() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(B.cols()); }
    int z() const { return static_cast<int>(D.cols()); }

    void validate() const;
};

// Quadratic cost weights: state weight Q > 0, input weight R > 0 and
// disturbance attenuation gamma > 0.
struct CostWeights {
    Eigen::MatrixXd Q;
    Eigen::MatrixXd R;
    double gamma = 0.0;

    void validate(const SystemDynamics& dyn) const;
};

// Stabilizing GARE solution: value matrix P = P' > 0, control gain K and
// disturbance gain L, with u = -K x and worst-case d = L x.
struct GameSolution {
    Eigen::MatrixXd P;
    Eigen::MatrixXd K;
    Eigen::MatrixXd L;
    double residual = 0.0;  // Frobenius norm of the GARE defect
    int iterations = 0;
};

class StabilityError : public std::runtime_error {
  public:
    explicit StabilityError(const std::string& what) : std::runtime_error(what) {}
};

class NumericError : public std::runtime_error {
  public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

class NoSolutionError : public NumericError {
  public:
    explicit NoSolutionError(const std::string& what) : NumericError(what) {}
};

class RankDeficientError : public std::runtime_error {
  public:
    explicit RankDeficientError(const std::string& what) : std::runtime_error(what) {}
};

class DivergenceError : public std::runtime_error {
  public:
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace zsirl
