#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sharpreplay/errors.hpp"

namespace sharpreplay {

// T x T accuracy record: cell (i, j) holds task j's test accuracy measured
// after finishing training task i. Cells are written once; a fill mask tracks
// which ones exist (joint runs populate only the final row).
class ResultMatrix {
public:
    explicit ResultMatrix(std::size_t task_count);

    void record_eval(std::size_t after_task, std::size_t on_task, double accuracy);
    bool filled(std::size_t after_task, std::size_t on_task) const;
    double at(std::size_t after_task, std::size_t on_task) const;
    std::size_t task_count() const { return t_; }

    // T rows of T comma-separated values, 6 decimals, unfilled cells empty,
    // every row newline-terminated.
    std::string to_csv() const;

private:
    std::size_t index(std::size_t i, std::size_t j) const;
    std::size_t t_;
    std::vector<double> values_;
    std::vector<bool> mask_;
};

struct MetricSummary {
    double acc = 0.0;
    std::optional<double> forget;     // signed, as printed; absent when T = 1
    std::vector<double> per_task_curve; // mean accuracy over seen tasks after each task
};

// Mean of the final row. Requires the final row fully populated.
double acc_final(const ResultMatrix& matrix);

// Signed mean of final-minus-best accuracy over all but the last task;
// <= 0 whenever forgetting occurred, nullopt for a single task. The best
// per-task accuracy ranges over the populated cells of that task's column.
std::optional<double> forgetting(const ResultMatrix& matrix);

MetricSummary summarize(const ResultMatrix& matrix);

} // namespace sharpreplay
