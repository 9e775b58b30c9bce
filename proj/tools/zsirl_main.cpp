// Command-line front end: oracle solves, data collection, the two learning
// algorithms, verification and report regeneration, all driven by a scenario
// configuration file.
//
// Exit codes: 0 = run converged and every check passed, 2 = the run finished
// but convergence or a check failed, 1 = error.

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>

#include "zsirl/gare.hpp"
#include "zsirl/irl_data_driven.hpp"
#include "zsirl/lti_sim.hpp"
#include "zsirl/matrix_ops.hpp"
#include "zsirl/scenario.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool out_required) {
    cmd->add_option("--config", args.config_path, "scenario configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    auto* out = cmd->add_option("--out", args.out_dir, "output directory (overrides run.out)");
    if (out_required) {
        out->required();
    }
    cmd->add_option("--seed", args.seed, "override every seed in the configuration")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_flag("--quiet", args.quiet, "suppress progress output");
}

zsirl::ScenarioConfig load_cfg(const CommonArgs& args) {
    zsirl::ScenarioConfig cfg = zsirl::load_config(args.config_path);
    if (!args.out_dir.empty()) {
        cfg.out_dir = args.out_dir;
    }
    if (args.seed_set) {
        zsirl::override_seed(cfg, args.seed);
    }
    return cfg;
}

void print_matrix(const std::string& name, const Eigen::MatrixXd& M) {
    std::cout << name << " =\n" << M << "\n";
}

int run_gare(const CommonArgs& args) {
    const zsirl::ScenarioConfig cfg = load_cfg(args);
    if (!cfg.expert_weights) {
        std::cerr << "gare: the configuration provides expert.K; nothing to solve\n";
        return 1;
    }
    const zsirl::GameSolution sol = zsirl::solve_gare(cfg.dyn, *cfg.expert_weights);
    if (!args.quiet) {
        print_matrix("P", sol.P);
        print_matrix("K", sol.K);
        print_matrix("L", sol.L);
        std::cout << "residual = " << sol.residual << "\n";
    }
    return 0;
}

int run_collect(const CommonArgs& args) {
    zsirl::ScenarioConfig cfg = load_cfg(args);
    std::filesystem::create_directories(cfg.out_dir);

    Eigen::MatrixXd K_target;
    if (cfg.expert_weights) {
        K_target = zsirl::solve_gare(cfg.dyn, *cfg.expert_weights).K;
    } else {
        K_target = *cfg.target_gain;
    }
    const zsirl::DataBatch expert =
        zsirl::collect_expert_batch(cfg.dyn, K_target, cfg.noise, cfg.expert_disturbance,
                                    cfg.T_window, cfg.expert_windows, cfg.h, cfg.x0);
    const zsirl::DataBatch learner =
        zsirl::collect_learner_batch(cfg.dyn, cfg.K_behavior, cfg.learner_disturbance,
                                     cfg.T_window, cfg.learner_windows, cfg.h, cfg.x0);
    zsirl::write_batch_csv(expert, (std::filesystem::path(cfg.out_dir) / "expert_batch.csv").string());
    zsirl::write_batch_csv(learner,
                           (std::filesystem::path(cfg.out_dir) / "learner_batch.csv").string());

    const zsirl::RankReport ranks = zsirl::check_rank(expert, learner);
    zsirl::VerificationReport rep;
    rep.add_flag("rank_expert", ranks.expert_ok,
                 "rank " + std::to_string(ranks.expert_rank) + " of required " +
                     std::to_string(ranks.expert_required));
    rep.add_flag("rank_learner", ranks.learner_ok,
                 "rank " + std::to_string(ranks.learner_rank) + " of required " +
                     std::to_string(ranks.learner_required));
    zsirl::write_report_csv(rep, (std::filesystem::path(cfg.out_dir) / "rank_report.csv").string());
    if (!args.quiet) {
        zsirl::print_report(rep, std::cout);
    }
    return rep.all_pass() ? 0 : 2;
}

int run_algorithm(const CommonArgs& args, zsirl::AlgorithmChoice algorithm,
                  const zsirl::RunOptions& opts) {
    zsirl::ScenarioConfig cfg = load_cfg(args);
    cfg.algorithm = algorithm;
    const zsirl::RunArtifacts art = zsirl::run_scenario(cfg, opts);
    zsirl::emit_plot_data(art);
    if (!args.quiet) {
        zsirl::print_report(art.verification, std::cout);
        std::cout << "converged = " << (art.summary.converged ? "yes" : "no")
                  << ", iterations = " << art.summary.iterations
                  << ", |K*-K_T| = " << art.summary.gain_error << ", Te = " << art.summary.te
                  << ", wall = " << art.summary.wall_seconds << " s\n";
        std::cout << "artifacts in " << art.out_dir << "\n";
    }
    return art.summary.converged && art.summary.checks_pass ? 0 : 2;
}

int run_verify(const CommonArgs& args) {
    const zsirl::ScenarioConfig cfg = load_cfg(args);
    if (!cfg.expert_weights) {
        std::cerr << "verify: oracle verification needs expert weights in the configuration\n";
        return 1;
    }
    const zsirl::CostWeights& w = *cfg.expert_weights;
    const zsirl::GameSolution sol = zsirl::solve_gare(cfg.dyn, w);

    zsirl::VerificationReport rep;
    rep.add("target_gare_residual", sol.residual, zsirl::kTolGare, "oracle solution defect");
    rep.add_flag("closed_loop_hurwitz", zsirl::is_hurwitz(cfg.dyn.A - cfg.dyn.B * sol.K),
                 "A - B K");
    rep.add_flag("game_loop_hurwitz",
                 zsirl::is_hurwitz(cfg.dyn.A - cfg.dyn.B * sol.K + cfg.dyn.D * sol.L),
                 "A - B K + D L");
    rep.append(zsirl::saddle_check(cfg.dyn, sol, w.Q, w.R, w.gamma, 1000, cfg.seed ^ 0x5eedULL));
    for (double c : {0.5, 2.0, 10.0}) {
        const zsirl::GameSolution scaled = zsirl::solve_gare(cfg.dyn, zsirl::scale_solution(w, c));
        rep.add("scaling_gain_invariance_c" + std::to_string(c).substr(0, 4),
                (scaled.K - sol.K).norm(), 1e-8 * std::max(1.0, sol.K.norm()),
                "gain under uniformly scaled weights");
        rep.add("scaling_value_ratio_c" + std::to_string(c).substr(0, 4),
                (scaled.P - c * sol.P).norm(), 1e-6 * c * sol.P.norm(),
                "value matrix scales with the weights");
    }

    if (!args.out_dir.empty()) {
        std::filesystem::create_directories(args.out_dir);
        zsirl::write_report_csv(
            rep, (std::filesystem::path(args.out_dir) / "verification_target.csv").string());
    }
    if (!args.quiet) {
        zsirl::print_report(rep, std::cout);
    }
    return rep.all_pass() ? 0 : 2;
}

int run_report(const std::string& dir, bool quiet) {
    const zsirl::RunArtifacts art = zsirl::load_artifacts(dir);
    const zsirl::RunSummary recomputed = zsirl::recompute_summary(art);
    zsirl::emit_plot_data(art);

    const bool consistent = recomputed.converged == art.summary.converged &&
                            recomputed.iterations == art.summary.iterations &&
                            recomputed.gain_error == art.summary.gain_error &&
                            recomputed.te == art.summary.te;
    if (!quiet) {
        std::cout << "converged = " << (art.summary.converged ? "yes" : "no")
                  << ", iterations = " << art.summary.iterations
                  << ", |K*-K_T| = " << art.summary.gain_error << ", Te = " << art.summary.te
                  << "\n";
        std::cout << "summary " << (consistent ? "matches" : "DOES NOT match")
                  << " the recomputation from the CSVs\n";
        std::cout << "plot data regenerated in " << dir << "\n";
    }
    return consistent ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"inverse reinforcement learning for zero-sum linear differential games"};
    app.require_subcommand(1);

    CommonArgs gare_args, collect_args, alg1_args, alg2_args, verify_args;
    std::string report_dir;
    bool report_quiet = false;
    zsirl::RunOptions alg2_opts;

    add_common(app.add_subcommand("gare", "solve the expert game Riccati equation"), gare_args,
               false);
    add_common(app.add_subcommand("collect", "collect expert and learner data batches"),
               collect_args, true);
    add_common(app.add_subcommand("alg1", "run the model-based learner"), alg1_args, false);
    auto* alg2 = app.add_subcommand("alg2", "run the data-driven learner");
    add_common(alg2, alg2_args, false);
    alg2->add_option("--expert-batch", alg2_opts.expert_batch_path,
                     "read the expert batch from this CSV instead of simulating")
        ->check(CLI::ExistingFile);
    alg2->add_option("--learner-batch", alg2_opts.learner_batch_path,
                     "read the learner batch from this CSV instead of simulating")
        ->check(CLI::ExistingFile);
    add_common(app.add_subcommand("verify", "verify the oracle solution of the configured game"),
               verify_args, false);
    auto* report = app.add_subcommand("report", "recompute summary and plot data from a run");
    report->add_option("--out", report_dir, "run directory to read")->required();
    report->add_flag("--quiet", report_quiet, "suppress output");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("gare")) {
            return run_gare(gare_args);
        }
        if (app.got_subcommand("collect")) {
            return run_collect(collect_args);
        }
        if (app.got_subcommand("alg1")) {
            return run_algorithm(alg1_args, zsirl::AlgorithmChoice::ModelBased, {});
        }
        if (app.got_subcommand("alg2")) {
            return run_algorithm(alg2_args, zsirl::AlgorithmChoice::DataDriven, alg2_opts);
        }
        if (app.got_subcommand("verify")) {
            return run_verify(verify_args);
        }
        if (app.got_subcommand("report")) {
            return run_report(report_dir, report_quiet);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
