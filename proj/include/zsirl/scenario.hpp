#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "zsirl/game_verify.hpp"
#include "zsirl/irl_data_driven.hpp"
#include "zsirl/irl_model_based.hpp"
#include "zsirl/lti_sim.hpp"
#include "zsirl/types.hpp"

// Configuration-driven experiment runner: loads a scenario from a flat
// dotted-key text file, runs the requested learning algorithm(s) end to end
// (oracle gain, data collection, iteration, trajectory replay, verification)
// and emits deterministic CSV artifacts.

namespace zsirl {

enum class AlgorithmChoice { ModelBased, DataDriven, Both };

struct ScenarioConfig {
    SystemDynamics dyn;

    // Exactly one of the two must be set: the expert's true cost weights
    // (the oracle gain is then computed) or an externally supplied gain.
    std::optional<CostWeights> expert_weights;
    std::optional<Eigen::MatrixXd> target_gain;

    Eigen::MatrixXd Q0;
    Eigen::MatrixXd R;
    double gamma = 0.0;
    Eigen::MatrixXd K_behavior;

    double T_window = 0.0;
    int expert_windows = 0;
    int learner_windows = 0;
    double h = 0.0;  // defaults to T_window / 8
    Eigen::VectorXd x0;

    SignalSpec noise;                // probing added to the expert input
    SignalSpec expert_disturbance;   // d acting on the expert while collecting
    SignalSpec learner_disturbance;  // d acting on the learner while collecting

    AlgorithmChoice algorithm = AlgorithmChoice::DataDriven;
    int max_iters = 500;
    double tol_converge = 1e-8;
    int te_samples = 250;
    std::uint64_t seed = 1;
    std::string out_dir = "out";

    IrlConfig irl_config() const;
    void validate() const;
};

// Parse and fully validate a scenario file. Unknown keys, malformed values
// and constraint violations are reported with the offending line or field.
ScenarioConfig load_config(const std::string& path);

// Re-emit a configuration; load_config(save_config(cfg)) preserves all
// semantic fields.
void save_config(const ScenarioConfig& cfg, const std::string& path);

// Replace the master seed and re-derive the three signal seeds from it.
void override_seed(ScenarioConfig& cfg, std::uint64_t seed);

struct RunSummary {
    bool converged = false;
    int iterations = 0;
    double gain_error = std::numeric_limits<double>::quiet_NaN();
    double te = std::numeric_limits<double>::quiet_NaN();
    bool checks_pass = false;
    double wall_seconds = 0.0;  // reported, never written to artifacts
    std::string error;          // non-empty when the pipeline failed part-way
};

struct RunArtifacts {
    std::string out_dir;
    std::string trace_csv;        // headline algorithm (data-driven when it ran)
    std::string trace_model_csv;  // model-based trace when both algorithms ran
    std::string expert_batch_csv;
    std::string learner_batch_csv;
    std::string trajectory_csv;
    std::string verification_csv;
    std::string summary_csv;
    RunSummary summary;

    // Kept in memory so plot emission and tests need not re-parse the files.
    IterationTrace trace;
    Eigen::MatrixXd K_target;
    std::vector<double> traj_t;
    std::vector<Eigen::VectorXd> traj_learner;
    std::vector<Eigen::VectorXd> traj_target;
    VerificationReport verification;
    int n = 0, m = 0, z = 0;
};

struct RunOptions {
    // When set, batches are read from these files instead of being collected.
    std::string expert_batch_path;
    std::string learner_batch_path;
};

// Full pipeline. On a module failure the partial artifacts (batches, rank
// information, summary carrying the error) are written before the exception
// is rethrown.
RunArtifacts run_scenario(const ScenarioConfig& cfg, const RunOptions& opts = {});

// Long-format plot inputs derived from a finished run: the convergence
// series (iteration vs gain error and iterate increments) and the
// learner/target trajectory overlay.
void emit_plot_data(const RunArtifacts& artifacts);

// Rebuild artifacts from a run directory (used by the report tool).
RunArtifacts load_artifacts(const std::string& out_dir);

// Recompute the summary numbers from the emitted CSVs; exact equality with
// the stored summary is part of the artifact contract.
RunSummary recompute_summary(const RunArtifacts& artifacts);

}  // namespace zsirl
