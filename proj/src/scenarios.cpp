#include "sharpreplay/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <unordered_set>

#include "sharpreplay/rng.hpp"

namespace sharpreplay {

namespace {

void check_base(const Dataset& d, const char* name) {
    if (d.inputs.rows != d.labels.size()) {
        throw InputError(std::string(name) + ": row/label count mismatch");
    }
    for (int y : d.labels) {
        if (y < 0 || y >= d.class_count) {
            throw InputError(std::string(name) + ": label " + std::to_string(y) +
                             " outside [0, " + std::to_string(d.class_count) + ")");
        }
    }
}

void check_pair(const Dataset& train, const Dataset& test) {
    check_base(train, "train base");
    check_base(test, "test base");
    if (train.class_count != test.class_count) {
        throw InputError("train/test bases disagree on class count");
    }
    if (train.feature_dim() != test.feature_dim()) {
        throw InputError("train/test bases disagree on feature dim");
    }
}

Dataset select_classes(const Dataset& base, const std::unordered_set<int>& wanted) {
    Dataset out;
    out.class_count = base.class_count;
    out.image_shape = base.image_shape;
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < base.size(); ++r) {
        if (wanted.count(base.labels[r])) rows.push_back(r);
    }
    out.inputs = Tensor2(rows.size(), base.feature_dim());
    out.labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto src = base.inputs.row(rows[i]);
        std::copy(src.begin(), src.end(), out.inputs.row(i).begin());
        out.labels.push_back(base.labels[rows[i]]);
    }
    return out;
}

Dataset apply_permutation(const Dataset& base, const std::vector<std::size_t>& perm) {
    Dataset out = base;
    for (std::size_t r = 0; r < base.size(); ++r) {
        auto src = base.inputs.row(r);
        auto dst = out.inputs.row(r);
        for (std::size_t j = 0; j < perm.size(); ++j) dst[j] = src[perm[j]];
    }
    return out;
}

Dataset apply_rotation(const Dataset& base, double angle_degrees) {
    const auto [h, w] = *base.image_shape;
    Dataset out = base;
    for (std::size_t r = 0; r < base.size(); ++r) {
        const std::vector<double> rotated = rotate_image(base.inputs.row(r), h, w, angle_degrees);
        std::copy(rotated.begin(), rotated.end(), out.inputs.row(r).begin());
    }
    return out;
}

std::vector<int> all_class_ids(int class_count) {
    std::vector<int> ids(static_cast<std::size_t>(class_count));
    std::iota(ids.begin(), ids.end(), 0);
    return ids;
}

} // namespace

TaskStream make_split_stream(const Dataset& train_base, const Dataset& test_base,
                             int n_tasks, int classes_per_task, Scenario scenario,
                             std::optional<std::uint64_t> shuffle_seed) {
    check_pair(train_base, test_base);
    if (scenario == Scenario::DomainIl) {
        throw ConfigError("make_split_stream: split streams realize task-IL or class-IL");
    }
    if (n_tasks < 1 || classes_per_task < 1) {
        throw ConfigError("make_split_stream: n_tasks and classes_per_task must be >= 1");
    }
    const long needed = static_cast<long>(n_tasks) * classes_per_task;
    if (needed > train_base.class_count) {
        throw ConfigError("make_split_stream: " + std::to_string(needed) +
                          " classes requested, base has " +
                          std::to_string(train_base.class_count));
    }

    std::vector<int> order = all_class_ids(train_base.class_count);
    if (shuffle_seed) {
        Rng rng = make_stream(*shuffle_seed, "class-order");
        std::shuffle(order.begin(), order.end(), rng);
    }

    TaskStream stream;
    stream.scenario = scenario;
    for (int t = 0; t < n_tasks; ++t) {
        Task task;
        task.task_id = t;
        task.class_ids.assign(order.begin() + static_cast<std::ptrdiff_t>(t) * classes_per_task,
                              order.begin() + static_cast<std::ptrdiff_t>(t + 1) * classes_per_task);
        std::sort(task.class_ids.begin(), task.class_ids.end());
        const std::unordered_set<int> wanted(task.class_ids.begin(), task.class_ids.end());
        task.train = select_classes(train_base, wanted);
        task.test = select_classes(test_base, wanted);
        stream.tasks.push_back(std::move(task));
    }
    return stream;
}

TaskStream make_permuted_stream(const Dataset& train_base, const Dataset& test_base,
                                int n_tasks, std::uint64_t seed) {
    check_pair(train_base, test_base);
    if (n_tasks < 1) throw ConfigError("make_permuted_stream: n_tasks must be >= 1");
    if (train_base.feature_dim() < 2) {
        throw ConfigError("make_permuted_stream: need feature_dim >= 2");
    }

    TaskStream stream;
    stream.scenario = Scenario::DomainIl;
    for (int t = 0; t < n_tasks; ++t) {
        Task task;
        task.task_id = t;
        task.class_ids = all_class_ids(train_base.class_count);
        if (t == 0) {
            task.train = train_base;
            task.test = test_base;
        } else {
            std::vector<std::size_t> perm(train_base.feature_dim());
            std::iota(perm.begin(), perm.end(), std::size_t{0});
            Rng rng = make_stream(seed, "perm-task-" + std::to_string(t));
            std::shuffle(perm.begin(), perm.end(), rng);
            task.train = apply_permutation(train_base, perm);
            task.test = apply_permutation(test_base, perm);
        }
        stream.tasks.push_back(std::move(task));
    }
    return stream;
}

TaskStream make_rotated_stream(const Dataset& train_base, const Dataset& test_base,
                               int n_tasks, std::uint64_t seed) {
    check_pair(train_base, test_base);
    if (n_tasks < 1) throw ConfigError("make_rotated_stream: n_tasks must be >= 1");
    if (!train_base.image_shape) {
        throw ConfigError("make_rotated_stream: base carries no image shape");
    }
    const auto [h, w] = *train_base.image_shape;
    if (h < 1 || w < 1 || static_cast<std::size_t>(h) * static_cast<std::size_t>(w) !=
                              train_base.feature_dim()) {
        throw ConfigError("make_rotated_stream: image shape does not match feature dim");
    }

    Rng rng = make_stream(seed, "rotation-angles");
    std::uniform_real_distribution<double> angle_dist(0.0, 180.0);

    TaskStream stream;
    stream.scenario = Scenario::DomainIl;
    for (int t = 0; t < n_tasks; ++t) {
        Task task;
        task.task_id = t;
        task.class_ids = all_class_ids(train_base.class_count);
        const double angle = t == 0 ? 0.0 : angle_dist(rng);
        if (t == 0) {
            task.train = train_base;
            task.test = test_base;
        } else {
            task.train = apply_rotation(train_base, angle);
            task.test = apply_rotation(test_base, angle);
        }
        stream.tasks.push_back(std::move(task));
    }
    return stream;
}

std::vector<double> rotate_image(std::span<const double> pixels, int h, int w,
                                 double angle_degrees) {
    if (h < 1 || w < 1 || pixels.size() != static_cast<std::size_t>(h) * static_cast<std::size_t>(w)) {
        throw ShapeError("rotate_image: pixel count does not match h x w");
    }
    const double rad = angle_degrees * std::numbers::pi / 180.0;
    const double c = std::cos(rad);
    const double s = std::sin(rad);
    const double cy = (h - 1) / 2.0;
    const double cx = (w - 1) / 2.0;
    std::vector<double> out(pixels.size(), 0.0);
    for (int r = 0; r < h; ++r) {
        for (int col = 0; col < w; ++col) {
            const double dr = r - cy;
            const double dc = col - cx;
            const long sr = std::lround(cy + c * dr - s * dc);
            const long sc = std::lround(cx + s * dr + c * dc);
            if (sr >= 0 && sr < h && sc >= 0 && sc < w) {
                out[static_cast<std::size_t>(r) * w + col] =
                    pixels[static_cast<std::size_t>(sr) * w + sc];
            }
        }
    }
    return out;
}

int eval_predict(std::span<const double> logits, Scenario scenario,
                 std::span<const int> task_class_ids) {
    if (logits.empty()) throw InputError("eval_predict: empty logits");
    if (scenario == Scenario::TaskIl) {
        if (task_class_ids.empty()) {
            throw InputError("eval_predict: task-IL needs the task's class ids");
        }
        int best = -1;
        for (int c : task_class_ids) {
            if (c < 0 || static_cast<std::size_t>(c) >= logits.size()) {
                throw InputError("eval_predict: class id " + std::to_string(c) +
                                 " outside the logit range");
            }
            const double v = logits[static_cast<std::size_t>(c)];
            if (best < 0 || v > logits[static_cast<std::size_t>(best)] ||
                (v == logits[static_cast<std::size_t>(best)] && c < best)) {
                best = c;
            }
        }
        return best;
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.size(); ++c) {
        if (logits[c] > logits[best]) best = c;
    }
    return static_cast<int>(best);
}

} // namespace sharpreplay
