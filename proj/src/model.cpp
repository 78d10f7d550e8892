#include "sharpreplay/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sharpreplay/rng.hpp"

namespace sharpreplay {

std::size_t Model::param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        n += layer_dims[l] * layer_dims[l + 1] + layer_dims[l + 1];
    }
    return n;
}

Model model_init(const std::vector<std::size_t>& layer_dims, std::uint64_t seed,
                 Activation activation) {
    if (layer_dims.size() < 2) {
        throw ConfigError("model_init: need at least (input, classes) dims, got " +
                          std::to_string(layer_dims.size()));
    }
    for (std::size_t d : layer_dims) {
        if (d < 1) throw ConfigError("model_init: every layer dim must be >= 1");
    }

    Model m;
    m.layer_dims = layer_dims;
    m.activation = activation;
    Rng rng = make_stream(seed, "model-init");
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const std::size_t fan_in = layer_dims[l];
        const std::size_t fan_out = layer_dims[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        Tensor2 w(fan_in, fan_out);
        for (double& v : w.data) v = dist(rng);
        m.weights.push_back(std::move(w));
        m.biases.emplace_back(fan_out, 0.0);
    }
    return m;
}

namespace {

double activate(double pre, Activation a) {
    return a == Activation::Relu ? (pre > 0.0 ? pre : 0.0) : std::tanh(pre);
}

// Derivative expressed through the activation output (enough for both kinds).
double activate_grad(double post, double pre, Activation a) {
    return a == Activation::Relu ? (pre > 0.0 ? 1.0 : 0.0) : 1.0 - post * post;
}

Tensor2 affine(const Tensor2& x, const Tensor2& w, const std::vector<double>& b) {
    Tensor2 out(x.rows, w.cols);
    for (std::size_t r = 0; r < x.rows; ++r) {
        double* orow = out.data.data() + r * out.cols;
        for (std::size_t j = 0; j < w.cols; ++j) orow[j] = b[j];
        const double* xrow = x.data.data() + r * x.cols;
        for (std::size_t i = 0; i < x.cols; ++i) {
            const double xi = xrow[i];
            const double* wrow = w.data.data() + i * w.cols;
            for (std::size_t j = 0; j < w.cols; ++j) orow[j] += xi * wrow[j];
        }
    }
    return out;
}

struct ForwardCache {
    std::vector<Tensor2> activations;     // activations[0] = input, one per layer
    std::vector<Tensor2> preactivations;  // pre-activation of every layer
};

Tensor2 forward_cached(const Model& m, const Tensor2& x, ForwardCache* cache) {
    if (x.cols != m.input_dim()) {
        throw ShapeError("forward: input has " + std::to_string(x.cols) +
                         " features, model expects " + std::to_string(m.input_dim()));
    }
    Tensor2 cur = x;
    if (cache) cache->activations.push_back(cur);
    const std::size_t layers = m.weights.size();
    for (std::size_t l = 0; l < layers; ++l) {
        Tensor2 pre = affine(cur, m.weights[l], m.biases[l]);
        if (l + 1 == layers) {
            if (cache) cache->preactivations.push_back(pre);
            return pre; // logits stay pre-softmax
        }
        Tensor2 post = pre;
        for (double& v : post.data) v = activate(v, m.activation);
        if (cache) {
            cache->preactivations.push_back(std::move(pre));
            cache->activations.push_back(post);
        }
        cur = std::move(post);
    }
    return cur; // unreachable for valid models
}

} // namespace

Tensor2 forward(const Model& model, const Tensor2& inputs) {
    return forward_cached(model, inputs, nullptr);
}

Tensor2 softmax_rows(const Tensor2& logits) {
    Tensor2 out(logits.rows, logits.cols);
    for (std::size_t r = 0; r < logits.rows; ++r) {
        auto in = logits.row(r);
        auto o = out.row(r);
        const double m = *std::max_element(in.begin(), in.end());
        double sum = 0.0;
        for (std::size_t j = 0; j < in.size(); ++j) {
            o[j] = std::exp(in[j] - m);
            sum += o[j];
        }
        for (double& v : o) v /= sum;
    }
    return out;
}

LossBreakdown operator+(const LossBreakdown& a, const LossBreakdown& b) {
    return {a.task_loss + b.task_loss, a.replay_ce_loss + b.replay_ce_loss,
            a.logit_match_loss + b.logit_match_loss, a.total + b.total};
}

std::pair<LossBreakdown, GradVector> loss_and_grad(const Model& model,
                                                   const Tensor2& batch_x,
                                                   const std::vector<int>& batch_y,
                                                   const Tensor2* logit_targets,
                                                   const LossSpec& spec) {
    const bool ce_on = spec.task_ce || spec.replay_ce;
    if (!ce_on && !spec.logit_match) {
        throw InputError("loss_and_grad: loss spec enables no components");
    }
    if (batch_x.rows == 0) throw InputError("loss_and_grad: empty batch");
    if (spec.logit_match && logit_targets == nullptr) {
        throw InputError("loss_and_grad: logit_match requires logit targets");
    }
    const std::size_t classes = model.class_count();
    if (ce_on) {
        if (batch_y.size() != batch_x.rows) {
            throw InputError("loss_and_grad: " + std::to_string(batch_y.size()) +
                             " labels for " + std::to_string(batch_x.rows) + " rows");
        }
        for (int y : batch_y) {
            if (y < 0 || static_cast<std::size_t>(y) >= classes) {
                throw InputError("loss_and_grad: label " + std::to_string(y) +
                                 " outside [0, " + std::to_string(classes) + ")");
            }
        }
    }
    if (spec.logit_match &&
        (logit_targets->rows != batch_x.rows || logit_targets->cols != classes)) {
        throw ShapeError("loss_and_grad: logit targets must be batch x class_count");
    }

    ForwardCache cache;
    const Tensor2 logits = forward_cached(model, batch_x, &cache);
    const double inv_n = 1.0 / static_cast<double>(batch_x.rows);
    // CE mean is counted once per enabled CE slot, so both flags double it.
    const double ce_weight =
        (spec.task_ce ? 1.0 : 0.0) + (spec.replay_ce ? 1.0 : 0.0);

    LossBreakdown lb;
    Tensor2 dlogits(logits.rows, logits.cols, 0.0);

    if (ce_on) {
        const Tensor2 probs = softmax_rows(logits);
        double ce = 0.0;
        for (std::size_t r = 0; r < logits.rows; ++r) {
            auto lrow = logits.row(r);
            const double m = *std::max_element(lrow.begin(), lrow.end());
            double sum = 0.0;
            for (double v : lrow) sum += std::exp(v - m);
            ce += m + std::log(sum) - lrow[static_cast<std::size_t>(batch_y[r])];
            auto prow = probs.row(r);
            auto drow = dlogits.row(r);
            for (std::size_t j = 0; j < classes; ++j) {
                drow[j] += ce_weight * prow[j] * inv_n;
            }
            drow[static_cast<std::size_t>(batch_y[r])] -= ce_weight * inv_n;
        }
        ce *= inv_n;
        if (spec.task_ce) lb.task_loss = ce;
        if (spec.replay_ce) lb.replay_ce_loss = ce;
    }

    if (spec.logit_match) {
        // Mean squared logit distance over batch rows and class dims (the
        // mse_loss convention): smooth at zero, zero iff targets match.
        const double inv_nc = inv_n / static_cast<double>(classes);
        double lm = 0.0;
        for (std::size_t r = 0; r < logits.rows; ++r) {
            auto lrow = logits.row(r);
            auto zrow = logit_targets->row(r);
            auto drow = dlogits.row(r);
            for (std::size_t j = 0; j < classes; ++j) {
                const double diff = lrow[j] - zrow[j];
                lm += diff * diff;
                drow[j] += 2.0 * diff * inv_nc;
            }
        }
        lb.logit_match_loss = lm * inv_nc;
    }

    lb.total = lb.task_loss + lb.replay_ce_loss + lb.logit_match_loss;

    // Backward sweep over the cached affine stack.
    GradVector grad(model.param_count(), 0.0);
    const std::size_t layers = model.weights.size();
    // Offsets of each layer's weight block in the flat vector.
    std::vector<std::size_t> offsets(layers);
    std::size_t off = 0;
    for (std::size_t l = 0; l < layers; ++l) {
        offsets[l] = off;
        off += model.weights[l].data.size() + model.biases[l].size();
    }

    Tensor2 d = std::move(dlogits);
    for (std::size_t l = layers; l-- > 0;) {
        const Tensor2& a = cache.activations[l];
        const Tensor2& w = model.weights[l];
        double* wgrad = grad.data() + offsets[l];
        double* bgrad = wgrad + w.data.size();
        for (std::size_t r = 0; r < d.rows; ++r) {
            const double* drow = d.data.data() + r * d.cols;
            const double* arow = a.data.data() + r * a.cols;
            for (std::size_t i = 0; i < a.cols; ++i) {
                const double ai = arow[i];
                double* wg = wgrad + i * w.cols;
                for (std::size_t j = 0; j < w.cols; ++j) wg[j] += ai * drow[j];
            }
            for (std::size_t j = 0; j < d.cols; ++j) bgrad[j] += drow[j];
        }
        if (l == 0) break;
        Tensor2 dprev(d.rows, w.rows, 0.0);
        for (std::size_t r = 0; r < d.rows; ++r) {
            const double* drow = d.data.data() + r * d.cols;
            double* prow = dprev.data.data() + r * dprev.cols;
            for (std::size_t i = 0; i < w.rows; ++i) {
                const double* wrow = w.data.data() + i * w.cols;
                double s = 0.0;
                for (std::size_t j = 0; j < w.cols; ++j) s += wrow[j] * drow[j];
                prow[i] = s;
            }
        }
        const Tensor2& post = cache.activations[l];
        const Tensor2& pre = cache.preactivations[l - 1];
        for (std::size_t idx = 0; idx < dprev.data.size(); ++idx) {
            dprev.data[idx] *= activate_grad(post.data[idx], pre.data[idx], model.activation);
        }
        d = std::move(dprev);
    }

    return {lb, std::move(grad)};
}

std::vector<double> params_get(const Model& model) {
    std::vector<double> flat;
    flat.reserve(model.param_count());
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        flat.insert(flat.end(), model.weights[l].data.begin(), model.weights[l].data.end());
        flat.insert(flat.end(), model.biases[l].begin(), model.biases[l].end());
    }
    return flat;
}

void params_set(Model& model, std::span<const double> flat) {
    if (flat.size() != model.param_count()) {
        throw ShapeError("params_set: got " + std::to_string(flat.size()) +
                         " values, model has " + std::to_string(model.param_count()));
    }
    std::size_t off = 0;
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        auto& w = model.weights[l].data;
        std::copy_n(flat.begin() + off, w.size(), w.begin());
        off += w.size();
        auto& b = model.biases[l];
        std::copy_n(flat.begin() + off, b.size(), b.begin());
        off += b.size();
    }
}

} // namespace sharpreplay
