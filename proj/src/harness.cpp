#include "sharpreplay/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <numeric>

#include <json.hpp>

#include "sharpreplay/rng.hpp"

namespace sharpreplay {

namespace {

void validate(const ExperimentConfig& cfg) {
    if (cfg.lr <= 0.0) throw ConfigError("config: lr must be > 0");
    if (cfg.rho < 0.0) throw ConfigError("config: rho must be >= 0");
    if (cfg.epsilon <= 0.0) throw ConfigError("config: epsilon must be > 0");
    if (cfg.batch_size < 1) throw ConfigError("config: batch size must be >= 1");
    if (cfg.epochs < 1) throw ConfigError("config: epochs must be >= 1");
    if (cfg.n_tasks < 1) throw ConfigError("config: tasks must be >= 1");
    if (cfg.buffer_capacity < 1) throw ConfigError("config: buffer capacity must be >= 1");
    if (cfg.hidden < 1) throw ConfigError("config: hidden width must be >= 1");
    if (cfg.seeds.empty()) throw ConfigError("config: seed list is empty");
    if (cfg.source == DataSource::Mnist && cfg.mnist_dir.empty()) {
        throw ConfigError("config: mnist source needs --mnist-dir");
    }
}

Scenario eval_scenario(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::TaskIl: return Scenario::TaskIl;
        case ScenarioKind::ClassIl: return Scenario::ClassIl;
        case ScenarioKind::DomainPerm:
        case ScenarioKind::DomainRot: return Scenario::DomainIl;
    }
    throw ConfigError("unknown scenario kind");
}

std::pair<Dataset, Dataset> build_bases(const ExperimentConfig& cfg, std::uint64_t seed) {
    if (cfg.source == DataSource::Mnist) {
        const std::filesystem::path dir = cfg.mnist_dir;
        Dataset train = load_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte");
        Dataset test = load_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte");
        if (train.class_count != test.class_count) {
            // Rare subsampled files; align on the larger label range.
            train.class_count = test.class_count = std::max(train.class_count, test.class_count);
        }
        return {std::move(train), std::move(test)};
    }
    const SyntheticSpec& s = cfg.synthetic;
    const Dataset full = gen_synthetic(s.class_count, s.per_class, s.feature_dim,
                                       s.image_shape, derive_seed(seed, "synthetic"));
    return split_train_test(full, s.test_fraction);
}

TaskStream build_stream(const ExperimentConfig& cfg, const Dataset& train_base,
                        const Dataset& test_base, std::uint64_t seed) {
    switch (cfg.scenario) {
        case ScenarioKind::TaskIl:
        case ScenarioKind::ClassIl: {
            const int per_task = train_base.class_count / cfg.n_tasks;
            if (per_task < 1) {
                throw ConfigError("config: " + std::to_string(cfg.n_tasks) +
                                  " tasks need at least as many classes, base has " +
                                  std::to_string(train_base.class_count));
            }
            const Scenario sc = cfg.scenario == ScenarioKind::TaskIl ? Scenario::TaskIl
                                                                     : Scenario::ClassIl;
            return make_split_stream(train_base, test_base, cfg.n_tasks, per_task, sc);
        }
        case ScenarioKind::DomainPerm:
            return make_permuted_stream(train_base, test_base, cfg.n_tasks,
                                        derive_seed(seed, "transform"));
        case ScenarioKind::DomainRot:
            return make_rotated_stream(train_base, test_base, cfg.n_tasks,
                                       derive_seed(seed, "transform"));
    }
    throw ConfigError("unknown scenario kind");
}

struct TrainPool {
    Tensor2 x;
    std::vector<int> y;
    std::vector<int> task_of_row;
};

TrainPool union_pool(const TaskStream& stream) {
    std::size_t rows = 0;
    for (const Task& t : stream.tasks) rows += t.train.size();
    TrainPool pool;
    pool.x = Tensor2(rows, stream.tasks[0].train.feature_dim());
    pool.y.reserve(rows);
    pool.task_of_row.reserve(rows);
    std::size_t r = 0;
    for (const Task& t : stream.tasks) {
        for (std::size_t i = 0; i < t.train.size(); ++i, ++r) {
            auto src = t.train.inputs.row(i);
            std::copy(src.begin(), src.end(), pool.x.row(r).begin());
            pool.y.push_back(t.train.labels[i]);
            pool.task_of_row.push_back(t.task_id);
        }
    }
    return pool;
}

// One pass over a shuffled index set, chunked into batches.
template <typename StepFn>
void run_epoch(const Tensor2& x, const std::vector<int>& y, int task_id,
               std::size_t batch_size, Rng& order_rng, StepFn&& do_step) {
    std::vector<std::size_t> order(x.rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), order_rng);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t count = std::min(batch_size, order.size() - start);
        Batch b;
        b.task_id = task_id;
        b.x = Tensor2(count, x.cols);
        b.y.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            auto src = x.row(order[start + i]);
            std::copy(src.begin(), src.end(), b.x.row(i).begin());
            b.y.push_back(y[order[start + i]]);
        }
        do_step(b);
    }
}

SeedResult run_one_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
    const auto [train_base, test_base] = build_bases(cfg, seed);
    const TaskStream stream = build_stream(cfg, train_base, test_base, seed);
    const std::size_t t_count = stream.tasks.size();
    const Scenario sc = eval_scenario(cfg.scenario);

    Model model = model_init({train_base.feature_dim(), cfg.hidden,
                              static_cast<std::size_t>(train_base.class_count)},
                             derive_seed(seed, "init"));
    MemoryBuffer buffer(cfg.buffer_capacity, static_cast<std::size_t>(train_base.class_count));
    Rng order_rng = make_stream(seed, "data-order");
    Rng buffer_rng = make_stream(seed, "buffer");

    OptimConfig ocfg;
    ocfg.lr = cfg.lr;
    ocfg.rho = cfg.rho;
    ocfg.batch_size = cfg.batch_size;
    ocfg.method = cfg.method;
    ocfg.epsilon = cfg.epsilon;

    SeedResult result{seed, ResultMatrix(t_count), {}, 0, 0};
    auto do_step = [&](const Batch& b) {
        const StepReport rep = train_step(model, b, buffer, ocfg, buffer_rng);
        ++result.steps;
        result.backward_passes += static_cast<std::uint64_t>(rep.backward_passes);
    };
    auto eval_task = [&](std::size_t after, std::size_t on) {
        const Task& task = stream.tasks[on];
        result.matrix.record_eval(after, on,
                                  evaluate_accuracy(model, task.test, sc, task.class_ids));
    };

    if (cfg.method == Method::Joint) {
        // One training phase over the union of all task data, then the
        // final row of the matrix; earlier rows stay unfilled.
        const TrainPool pool = union_pool(stream);
        for (int e = 0; e < cfg.epochs; ++e) {
            run_epoch(pool.x, pool.y, 0, cfg.batch_size, order_rng, do_step);
        }
        for (std::size_t j = 0; j < t_count; ++j) eval_task(t_count - 1, j);
    } else {
        for (std::size_t t = 0; t < t_count; ++t) {
            const Task& task = stream.tasks[t];
            for (int e = 0; e < cfg.epochs; ++e) {
                run_epoch(task.train.inputs, task.train.labels, task.task_id, cfg.batch_size,
                          order_rng, do_step);
            }
            for (std::size_t j = 0; j <= t; ++j) eval_task(t, j);
        }
    }

    result.summary = summarize(result.matrix);
    return result;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample standard deviation; zero for a single value.
double std_of(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

} // namespace

double evaluate_accuracy(const Model& model, const Dataset& test, Scenario scenario,
                         std::span<const int> class_ids) {
    if (test.size() == 0) throw InputError("evaluate_accuracy: empty test set");
    const Tensor2 logits = forward(model, test.inputs);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < logits.rows; ++r) {
        if (eval_predict(logits.row(r), scenario, class_ids) == test.labels[r]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

RunReport run_experiment(const ExperimentConfig& cfg) {
    validate(cfg);
    RunReport report;
    report.config = cfg;
    // Seeds are independent runs with no shared mutable state; results are
    // collected in seed order, so the report is identical either way.
    std::vector<std::future<SeedResult>> futures;
    futures.reserve(cfg.seeds.size());
    for (std::uint64_t seed : cfg.seeds) {
        futures.push_back(std::async(std::launch::async,
                                     [&cfg, seed] { return run_one_seed(cfg, seed); }));
    }
    for (auto& f : futures) {
        report.per_seed.push_back(f.get());
        report.total_steps += report.per_seed.back().steps;
        report.total_backward_passes += report.per_seed.back().backward_passes;
    }

    std::vector<double> accs;
    std::vector<double> forgets;
    for (const SeedResult& r : report.per_seed) {
        accs.push_back(r.summary.acc);
        if (r.summary.forget) forgets.push_back(*r.summary.forget);
    }
    report.acc_mean = mean_of(accs);
    report.acc_std = std_of(accs, report.acc_mean);
    if (!forgets.empty()) {
        report.forget_mean = mean_of(forgets);
        report.forget_std = std_of(forgets, *report.forget_mean);
    }
    return report;
}

namespace {

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open for writing: " + tmp.string());
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!f) throw IoError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string format6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

} // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::Online: return "online";
        case Method::Joint: return "joint";
        case Method::Er: return "er";
        case Method::ErSam: return "er-sam";
        case Method::Derpp: return "derpp";
        case Method::DerppSam: return "derpp-sam";
        case Method::MgserSam: return "mgser-sam";
    }
    return "unknown";
}

std::string scenario_name(ScenarioKind s) {
    switch (s) {
        case ScenarioKind::TaskIl: return "task-il";
        case ScenarioKind::ClassIl: return "class-il";
        case ScenarioKind::DomainPerm: return "domain-perm";
        case ScenarioKind::DomainRot: return "domain-rot";
    }
    return "unknown";
}

void emit_report(const RunReport& report, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    for (const SeedResult& r : report.per_seed) {
        write_atomic(out_dir / ("matrix_seed" + std::to_string(r.seed) + ".csv"),
                     r.matrix.to_csv());
    }

    // First-task accuracy after each task, averaged over seeds (empty cells
    // where no seed recorded the point, e.g. joint runs).
    const std::size_t t_count = report.per_seed.front().matrix.task_count();
    std::string curve;
    for (std::size_t i = 0; i < t_count; ++i) {
        std::vector<double> vals;
        for (const SeedResult& r : report.per_seed) {
            if (r.matrix.filled(i, 0)) vals.push_back(r.matrix.at(i, 0));
        }
        curve += std::to_string(i);
        curve.push_back(',');
        if (!vals.empty()) {
            const double m = mean_of(vals);
            curve += format6(m);
            curve.push_back(',');
            curve += format6(std_of(vals, m));
        } else {
            curve.push_back(',');
        }
        curve.push_back('\n');
    }
    write_atomic(out_dir / "first_task_curve.csv", curve);

    nlohmann::ordered_json j;
    j["config"] = {
        {"method", method_name(report.config.method)},
        {"scenario", scenario_name(report.config.scenario)},
        {"dataset", report.config.source == DataSource::Mnist ? "mnist" : "synthetic"},
        {"buffer", report.config.buffer_capacity},
        {"epochs", report.config.epochs},
        {"batch", report.config.batch_size},
        {"lr", report.config.lr},
        {"rho", report.config.rho},
        {"tasks", report.config.n_tasks},
        {"hidden", report.config.hidden},
        {"seeds", report.config.seeds},
    };
    nlohmann::ordered_json seeds = nlohmann::ordered_json::array();
    for (const SeedResult& r : report.per_seed) {
        nlohmann::ordered_json s;
        s["seed"] = r.seed;
        s["acc"] = r.summary.acc;
        if (r.summary.forget) {
            s["forget"] = *r.summary.forget;
            s["forget_abs"] = std::abs(*r.summary.forget);
        }
        s["steps"] = r.steps;
        s["backward_passes"] = r.backward_passes;
        s["per_task_curve"] = r.summary.per_task_curve;
        seeds.push_back(std::move(s));
    }
    j["per_seed"] = std::move(seeds);
    j["acc_mean"] = report.acc_mean;
    j["acc_std"] = report.acc_std;
    if (report.forget_mean) {
        j["forget_mean"] = *report.forget_mean;
        j["forget_std"] = *report.forget_std;
        j["forget_abs_mean"] = std::abs(*report.forget_mean);
    }
    j["total_steps"] = report.total_steps;
    j["total_backward_passes"] = report.total_backward_passes;
    write_atomic(out_dir / "summary.json", j.dump(2) + "\n");
}

} // namespace sharpreplay
