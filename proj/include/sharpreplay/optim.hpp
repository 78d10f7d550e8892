#pragma once

#include "sharpreplay/model.hpp"
#include "sharpreplay/replay.hpp"

namespace sharpreplay {

enum class Method { Online, Joint, Er, ErSam, Derpp, DerppSam, MgserSam };

struct OptimConfig {
    double lr = 0.05;
    double rho = 0.05;
    std::size_t batch_size = 32; // shared by the task batch and both memory draws
    Method method = Method::Er;
    double epsilon = 1e-12; // gradient-norm guard for the perturbation
};

// Per-step audit record. backward_passes counts full gradient sweeps over the
// step's batches: 1 for plain descent methods, 2 for the sharpness-aware ones.
struct StepReport {
    LossBreakdown losses;     // evaluated at the unperturbed parameters
    double grad_norm = 0.0;   // norm of the gradient actually applied
    int backward_passes = 0;
    double delta_norm = 0.0;  // norm of the applied weight perturbation
};

struct Batch {
    Tensor2 x;
    std::vector<int> y;
    int task_id = 0;
};

// First-order worst-case perturbation: rho * grad / max(||grad||, epsilon).
// Collinear with grad; norm equals rho whenever ||grad|| >= epsilon.
GradVector sam_perturbation(const GradVector& grad, double rho, double epsilon);

// Elementwise params - lr * grad.
std::vector<double> sgd_apply(std::vector<double> params, const GradVector& grad, double lr);

// One training step per method. Every step consumes the task batch, applies
// exactly one parameter update, and (except Online) offers the task batch
// items to the buffer afterwards with the post-update logits as their frozen
// soft targets. All memory draws happen before any gradient work, in a fixed
// order (one merged/CE draw, then the logit draw where applicable), so a
// cloned rng replays them exactly.
StepReport step_online(Model& model, const Batch& task_batch, const OptimConfig& cfg);
StepReport step_er(Model& model, const Batch& task_batch, MemoryBuffer& buffer,
                   const OptimConfig& cfg, Rng& rng);
StepReport step_er_sam(Model& model, const Batch& task_batch, MemoryBuffer& buffer,
                       const OptimConfig& cfg, Rng& rng);
StepReport step_derpp(Model& model, const Batch& task_batch, MemoryBuffer& buffer,
                      const OptimConfig& cfg, Rng& rng);
StepReport step_derpp_sam(Model& model, const Batch& task_batch, MemoryBuffer& buffer,
                          const OptimConfig& cfg, Rng& rng);
// Two-pass memory-guided step: the perturbation comes from the combined
// gradient of the task loss and the soft memory loss, the update adds the
// retained memory-loss gradient at the unperturbed point back in.
StepReport step_mgser_sam(Model& model, const Batch& task_batch, MemoryBuffer& buffer,
                          const OptimConfig& cfg, Rng& rng);

// Dispatch on cfg.method. Online and Joint both take plain task-batch steps;
// the joint data arrangement itself lives in the harness.
StepReport train_step(Model& model, const Batch& task_batch, MemoryBuffer& buffer,
                      const OptimConfig& cfg, Rng& rng);

} // namespace sharpreplay
