#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "sharpreplay/tensor.hpp"

namespace sharpreplay {

enum class Activation { Relu, Tanh };

// Fully connected network with any number of affine layers. The last layer
// output is returned raw (pre-softmax logits); softmax_rows turns logits into
// class probabilities. Plain value type, no internal shared state.
struct Model {
    std::vector<std::size_t> layer_dims; // input, hidden..., classes
    Activation activation = Activation::Relu;
    std::vector<Tensor2> weights;              // per layer, fan_in x fan_out
    std::vector<std::vector<double>> biases;   // per layer, fan_out

    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t class_count() const { return layer_dims.back(); }
    std::size_t param_count() const;
};

// Weights uniform in +-sqrt(6/(fan_in+fan_out)), biases zero, deterministic
// per seed. layer_dims needs at least (input, classes).
Model model_init(const std::vector<std::size_t>& layer_dims, std::uint64_t seed,
                 Activation activation = Activation::Relu);

// Pre-softmax logits, one row per input row.
Tensor2 forward(const Model& model, const Tensor2& inputs);

// Numerically stable row-wise softmax (max-shifted).
Tensor2 softmax_rows(const Tensor2& logits);

// Which loss components a loss_and_grad call computes on its batch. The
// cross-entropy mean is filed under task_loss and/or replay_ce_loss per the
// flags; logit_match adds the squared distance between the batch logits and
// the given targets, averaged over batch rows and class dims.
struct LossSpec {
    bool task_ce = false;
    bool replay_ce = false;
    bool logit_match = false;
};

struct LossBreakdown {
    double task_loss = 0.0;
    double replay_ce_loss = 0.0;
    double logit_match_loss = 0.0;
    double total = 0.0;
};

LossBreakdown operator+(const LossBreakdown& a, const LossBreakdown& b);

// Flat gradient, aligned with params_get order.
using GradVector = std::vector<double>;

// Batch-mean losses plus the exact analytic gradient of their sum with
// respect to the flattened parameters. logit_targets is required iff
// spec.logit_match is set and must be batch x class_count.
std::pair<LossBreakdown, GradVector> loss_and_grad(const Model& model,
                                                   const Tensor2& batch_x,
                                                   const std::vector<int>& batch_y,
                                                   const Tensor2* logit_targets,
                                                   const LossSpec& spec);

// Flattened parameter vector: per layer, weight matrix row-major then bias.
// set(get(m)) leaves the model bit-for-bit unchanged.
std::vector<double> params_get(const Model& model);
void params_set(Model& model, std::span<const double> flat);

} // namespace sharpreplay
