#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sharpreplay/tensor.hpp"

namespace sharpreplay {

// Labeled examples, one per row, features in [0,1]. image_shape (h, w) is
// present when rows are flattened images, which the rotation transform needs.
struct Dataset {
    Tensor2 inputs;
    std::vector<int> labels;
    int class_count = 0;
    std::optional<std::pair<int, int>> image_shape;

    std::size_t size() const { return inputs.rows; }
    std::size_t feature_dim() const { return inputs.cols; }
};

enum class Scenario { TaskIl, ClassIl, DomainIl };

struct Task {
    int task_id = 0;
    Dataset train;
    Dataset test;
    std::vector<int> class_ids; // classes present (split) or the full label set (domain)
};

struct TaskStream {
    std::vector<Task> tasks;
    Scenario scenario = Scenario::ClassIl;
};

// Class-split stream for the incremental scenarios: classes are assigned to
// tasks in ascending label order (or a seeded shuffle when shuffle_seed is
// given); each task keeps exactly its classes from both bases. Requires
// n_tasks * classes_per_task <= class_count.
TaskStream make_split_stream(const Dataset& train_base, const Dataset& test_base,
                             int n_tasks, int classes_per_task, Scenario scenario,
                             std::optional<std::uint64_t> shuffle_seed = std::nullopt);

// Domain stream: task 0 is the identity, later tasks apply independent seeded
// feature permutations to train and test alike. Labels unchanged.
TaskStream make_permuted_stream(const Dataset& train_base, const Dataset& test_base,
                                int n_tasks, std::uint64_t seed);

// Domain stream: task 0 rotates by 0 degrees, later tasks by seeded-uniform
// angles in [0, 180). Inverse-mapped nearest-neighbor resampling on the image
// grid; out-of-bounds source pixels read as 0.
TaskStream make_rotated_stream(const Dataset& train_base, const Dataset& test_base,
                               int n_tasks, std::uint64_t seed);

// Rotate one flattened h x w image about its center, nearest-neighbor.
std::vector<double> rotate_image(std::span<const double> pixels, int h, int w,
                                 double angle_degrees);

// Prediction rule per scenario: global argmax, except task-IL restricts the
// argmax to the queried task's classes. Ties break toward the lowest index.
int eval_predict(std::span<const double> logits, Scenario scenario,
                 std::span<const int> task_class_ids);

} // namespace sharpreplay
