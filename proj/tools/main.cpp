#include <cstdio>
#include <exception>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "sharpreplay/harness.hpp"

using namespace sharpreplay;

int main(int argc, char** argv) {
    CLI::App app{"Replay-based continual learning benchmark runner"};

    ExperimentConfig cfg;
    std::string method = "er";
    std::string scenario = "class-il";
    std::string dataset = "synthetic";

    const std::map<std::string, Method> methods{
        {"online", Method::Online},   {"joint", Method::Joint},
        {"er", Method::Er},           {"er-sam", Method::ErSam},
        {"derpp", Method::Derpp},     {"derpp-sam", Method::DerppSam},
        {"mgser-sam", Method::MgserSam},
    };
    const std::map<std::string, ScenarioKind> scenarios{
        {"task-il", ScenarioKind::TaskIl},
        {"class-il", ScenarioKind::ClassIl},
        {"domain-perm", ScenarioKind::DomainPerm},
        {"domain-rot", ScenarioKind::DomainRot},
    };

    app.add_option("--method", method, "Training method")
        ->check(CLI::IsMember(methods))
        ->capture_default_str();
    app.add_option("--scenario", scenario, "Evaluation scenario / stream construction")
        ->check(CLI::IsMember(scenarios))
        ->capture_default_str();
    app.add_option("--dataset", dataset, "Data source")
        ->check(CLI::IsMember({"synthetic", "mnist"}))
        ->capture_default_str();
    app.add_option("--mnist-dir", cfg.mnist_dir,
                   "Directory with the four standard IDX files (mnist dataset only)");
    app.add_option("--tasks", cfg.n_tasks, "Number of tasks in the stream")
        ->capture_default_str();
    app.add_option("--buffer", cfg.buffer_capacity, "Memory buffer capacity M")
        ->capture_default_str();
    app.add_option("--epochs", cfg.epochs, "Epochs per task")->capture_default_str();
    app.add_option("--batch", cfg.batch_size, "Batch size (task and memory draws)")
        ->capture_default_str();
    app.add_option("--lr", cfg.lr, "Learning rate")->capture_default_str();
    app.add_option("--rho", cfg.rho, "Sharpness-aware perturbation radius")
        ->capture_default_str();
    app.add_option("--seeds", cfg.seeds, "Seed list, comma separated")
        ->delimiter(',')
        ->capture_default_str();
    app.add_option("--out", cfg.out_dir, "Output directory")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    cfg.method = methods.at(method);
    cfg.scenario = scenarios.at(scenario);
    cfg.source = dataset == "mnist" ? DataSource::Mnist : DataSource::Synthetic;

    try {
        const RunReport report = run_experiment(cfg);
        emit_report(report, cfg.out_dir);
        std::printf("method=%s scenario=%s buffer=%zu seeds=%zu\n", method.c_str(),
                    scenario.c_str(), cfg.buffer_capacity, cfg.seeds.size());
        std::printf("acc %.4f +- %.4f\n", report.acc_mean, report.acc_std);
        if (report.forget_mean) {
            std::printf("forget %.4f +- %.4f (|forget| %.4f)\n", *report.forget_mean,
                        *report.forget_std, std::abs(*report.forget_mean));
        }
        std::printf("steps %llu, backward passes %llu\n",
                    static_cast<unsigned long long>(report.total_steps),
                    static_cast<unsigned long long>(report.total_backward_passes));
        std::printf("results written to %s\n", cfg.out_dir.c_str());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
