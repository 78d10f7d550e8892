#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sharpreplay/metrics.hpp"
#include "sharpreplay/optim.hpp"
#include "sharpreplay/scenarios.hpp"

namespace sharpreplay {

// The CLI's scenario choices: the two split scenarios plus the two domain
// constructions (feature permutation, image rotation).
enum class ScenarioKind { TaskIl, ClassIl, DomainPerm, DomainRot };

enum class DataSource { Synthetic, Mnist };

// Seeded Gaussian-cluster generator settings: one mean per class on a sphere
// of radius 2.5, isotropic noise sigma 0.6, features affinely squashed to
// [0,1]. Learnable but not trivial at desk scale.
struct SyntheticSpec {
    int class_count = 10;
    int per_class = 6000; // generated per class, then split train/test
    int feature_dim = 64;
    std::optional<std::pair<int, int>> image_shape = std::pair{8, 8};
    double test_fraction = 1.0 / 3.0;
};

struct ExperimentConfig {
    Method method = Method::Er;
    ScenarioKind scenario = ScenarioKind::ClassIl;
    std::size_t buffer_capacity = 400;
    int epochs = 1;
    std::size_t batch_size = 32;
    double lr = 0.05;
    double rho = 0.05;
    int n_tasks = 5;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    DataSource source = DataSource::Synthetic;
    SyntheticSpec synthetic;
    std::string mnist_dir; // holds the four standard IDX files
    std::size_t hidden = 400;
    double epsilon = 1e-12;
    std::string out_dir = "results";
};

struct SeedResult {
    std::uint64_t seed = 0;
    ResultMatrix matrix;
    MetricSummary summary;
    std::uint64_t steps = 0;
    std::uint64_t backward_passes = 0;
};

struct RunReport {
    ExperimentConfig config;
    std::vector<SeedResult> per_seed;
    double acc_mean = 0.0;
    double acc_std = 0.0;
    std::optional<double> forget_mean;
    std::optional<double> forget_std;
    std::uint64_t total_steps = 0;
    std::uint64_t total_backward_passes = 0;
};

// IDX ingestion (big-endian magic 0x803 for images, 0x801 for labels);
// pixels scaled to [0,1], image shape attached.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);

Dataset gen_synthetic(int class_count, int per_class, int feature_dim,
                      std::optional<std::pair<int, int>> image_shape, std::uint64_t seed);

// Per class, the last round(fraction * count) rows become the test split.
std::pair<Dataset, Dataset> split_train_test(const Dataset& base, double test_fraction);

// Fraction of test rows whose eval_predict matches the label.
double evaluate_accuracy(const Model& model, const Dataset& test, Scenario scenario,
                         std::span<const int> class_ids);

// Full protocol: per seed, build the stream, train tasks sequentially (Joint
// trains once on the union of all task data), evaluate every seen task after
// each task, summarize. Deterministic per (config, seed).
RunReport run_experiment(const ExperimentConfig& cfg);

// Writes one matrix CSV per seed, a machine-readable summary.json, and the
// first-task accuracy curve CSV. Atomic renames, no timestamps.
void emit_report(const RunReport& report, const std::filesystem::path& out_dir);

std::string method_name(Method m);
std::string scenario_name(ScenarioKind s);

} // namespace sharpreplay
