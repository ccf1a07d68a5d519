#include "hydra/error.hpp"
#include "hydra/pipeline.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

namespace {

template <typename F>
int guarded(const char* stage, F&& body) {
    try {
        body();
        return 0;
    } catch (const hydra::Error& e) {
        std::cerr << "error [" << stage << "]: " << e.what() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error [" << stage << "]: " << e.what() << '\n';
    }
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hydra: schedule-driven detection over event-count traces"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path, "experiment config (INI)")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("-o,--out", out_dir, "artifact directory")->capture_default_str();
    };

    std::string objective_arg, aggregation_arg;
    double lambda_arg = 0.0, tol_arg = 0.0;
    int max_iters_arg = 0;
    auto add_solver_overrides = [&](CLI::App* cmd) {
        cmd->add_option("--objective", objective_arg, "override objective: logistic|mse");
        cmd->add_option("--lambda", lambda_arg, "override l2 penalty weight");
        cmd->add_option("--max-iters", max_iters_arg, "override solver iteration cap");
        cmd->add_option("--tol", tol_arg, "override relative duality-gap target");
        cmd->add_option("--aggregation", aggregation_arg,
                        "override aggregation: logit-mean|logit-sum|mean|preds");
    };

    CLI::App* sim = app.add_subcommand("simulate", "generate the synthetic trace corpus");
    add_common(sim);
    CLI::App* train = app.add_subcommand("train-base", "train per-feature-set detectors");
    add_common(train);
    CLI::App* learn = app.add_subcommand("learn-schedule",
                                         "build the sequence confidence matrix and solve for x");
    add_common(learn);
    add_solver_overrides(learn);
    CLI::App* eval = app.add_subcommand("evaluate", "score sequences and the schedule on test data");
    add_common(eval);
    bool with_sensitivity = false;
    CLI::App* report = app.add_subcommand("report", "render report.txt from persisted artifacts");
    add_common(report);
    report->add_flag("--with-sensitivity", with_sensitivity,
                     "also run the objective/aggregation grid and split comparison");
    CLI::App* deploy = app.add_subcommand("deploy-sim", "simulate per-sample sequence draws");
    add_common(deploy);
    CLI::App* run = app.add_subcommand("run", "all stages in order");
    add_common(run);
    add_solver_overrides(run);
    run->add_flag("--with-sensitivity", with_sensitivity,
                  "include sensitivity studies in the report");

    CLI11_PARSE(app, argc, argv);
    CLI::App* sub = app.get_subcommands().front();

    auto given = [&](const char* name) {
        const CLI::Option* o = sub->get_option_no_throw(name);
        return o != nullptr && o->count() > 0;
    };
    hydra::ExperimentConfig cfg;
    const int rc = guarded("config", [&] {
        cfg = hydra::ExperimentConfig::load(config_path);
        if (given("--objective")) cfg.objective.kind = hydra::parse_objective(objective_arg);
        if (given("--lambda")) {
            cfg.objective.lambda = lambda_arg;
            cfg.objective.penalty =
                lambda_arg > 0.0 ? hydra::PenaltyKind::l2 : hydra::PenaltyKind::none;
        }
        if (given("--max-iters")) cfg.solver.max_iters = max_iters_arg;
        if (given("--tol")) cfg.solver.tol = tol_arg;
        if (given("--aggregation")) cfg.aggregation = hydra::parse_aggregation(aggregation_arg);
    });
    if (rc != 0) return rc;

    auto run_stage = [&](const char* name, auto&& stage) {
        const int code = guarded(name, stage);
        if (code == 0) std::cout << name << ": ok (" << out_dir << ")\n";
        return code;
    };

    if (sub == sim) return run_stage("simulate", [&] { hydra::stage_simulate(cfg, out_dir); });
    if (sub == train) return run_stage("train-base", [&] { hydra::stage_train_base(cfg, out_dir); });
    if (sub == learn)
        return run_stage("learn-schedule", [&] { hydra::stage_learn_schedule(cfg, out_dir); });
    if (sub == eval) return run_stage("evaluate", [&] { hydra::stage_evaluate(cfg, out_dir); });
    if (sub == report)
        return run_stage("report", [&] { hydra::stage_report(cfg, out_dir, with_sensitivity); });
    if (sub == deploy) return run_stage("deploy-sim", [&] { hydra::stage_deploy_sim(cfg, out_dir); });
    if (sub == run) {
        int code = run_stage("simulate", [&] { hydra::stage_simulate(cfg, out_dir); });
        if (code == 0) code = run_stage("train-base", [&] { hydra::stage_train_base(cfg, out_dir); });
        if (code == 0)
            code = run_stage("learn-schedule", [&] { hydra::stage_learn_schedule(cfg, out_dir); });
        if (code == 0) code = run_stage("evaluate", [&] { hydra::stage_evaluate(cfg, out_dir); });
        if (code == 0)
            code = run_stage("report", [&] { hydra::stage_report(cfg, out_dir, with_sensitivity); });
        if (code == 0) code = run_stage("deploy-sim", [&] { hydra::stage_deploy_sim(cfg, out_dir); });
        return code;
    }
    return 1;
}
