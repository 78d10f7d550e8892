#include "sharpreplay/metrics.hpp"

#include <cstdio>

namespace sharpreplay {

ResultMatrix::ResultMatrix(std::size_t task_count)
    : t_(task_count), values_(task_count * task_count, 0.0),
      mask_(task_count * task_count, false) {
    if (task_count < 1) throw ConfigError("ResultMatrix: need at least one task");
}

std::size_t ResultMatrix::index(std::size_t i, std::size_t j) const {
    if (i >= t_ || j >= t_) {
        throw UsageError("ResultMatrix: cell (" + std::to_string(i) + ", " +
                         std::to_string(j) + ") outside " + std::to_string(t_) + " tasks");
    }
    return i * t_ + j;
}

void ResultMatrix::record_eval(std::size_t after_task, std::size_t on_task, double accuracy) {
    const std::size_t k = index(after_task, on_task);
    if (accuracy < 0.0 || accuracy > 1.0) {
        throw UsageError("ResultMatrix: accuracy " + std::to_string(accuracy) +
                         " outside [0, 1]");
    }
    if (mask_[k]) {
        throw UsageError("ResultMatrix: cell (" + std::to_string(after_task) + ", " +
                         std::to_string(on_task) + ") already recorded");
    }
    values_[k] = accuracy;
    mask_[k] = true;
}

bool ResultMatrix::filled(std::size_t after_task, std::size_t on_task) const {
    return mask_[index(after_task, on_task)];
}

double ResultMatrix::at(std::size_t after_task, std::size_t on_task) const {
    const std::size_t k = index(after_task, on_task);
    if (!mask_[k]) {
        throw UsageError("ResultMatrix: cell (" + std::to_string(after_task) + ", " +
                         std::to_string(on_task) + ") never recorded");
    }
    return values_[k];
}

std::string ResultMatrix::to_csv() const {
    std::string out;
    char buf[32];
    for (std::size_t i = 0; i < t_; ++i) {
        for (std::size_t j = 0; j < t_; ++j) {
            if (j > 0) out.push_back(',');
            if (mask_[i * t_ + j]) {
                std::snprintf(buf, sizeof(buf), "%.6f", values_[i * t_ + j]);
                out += buf;
            }
        }
        out.push_back('\n');
    }
    return out;
}

double acc_final(const ResultMatrix& matrix) {
    const std::size_t t = matrix.task_count();
    double sum = 0.0;
    for (std::size_t j = 0; j < t; ++j) {
        if (!matrix.filled(t - 1, j)) {
            throw UsageError("acc_final: final row missing task " + std::to_string(j));
        }
        sum += matrix.at(t - 1, j);
    }
    return sum / static_cast<double>(t);
}

std::optional<double> forgetting(const ResultMatrix& matrix) {
    const std::size_t t = matrix.task_count();
    if (t < 2) return std::nullopt;
    double sum = 0.0;
    for (std::size_t j = 0; j + 1 < t; ++j) {
        if (!matrix.filled(t - 1, j)) {
            throw UsageError("forgetting: final row missing task " + std::to_string(j));
        }
        double best = matrix.at(t - 1, j);
        for (std::size_t r = 0; r + 1 < t; ++r) {
            if (matrix.filled(r, j)) best = std::max(best, matrix.at(r, j));
        }
        sum += matrix.at(t - 1, j) - best;
    }
    return sum / static_cast<double>(t - 1);
}

MetricSummary summarize(const ResultMatrix& matrix) {
    MetricSummary s;
    s.acc = acc_final(matrix);
    s.forget = forgetting(matrix);
    const std::size_t t = matrix.task_count();
    for (std::size_t i = 0; i < t; ++i) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t j = 0; j < t; ++j) {
            if (matrix.filled(i, j)) {
                sum += matrix.at(i, j);
                ++count;
            }
        }
        s.per_task_curve.push_back(count ? sum / static_cast<double>(count) : 0.0);
    }
    return s;
}

} // namespace sharpreplay
