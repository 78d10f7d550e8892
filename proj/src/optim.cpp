#include "sharpreplay/optim.hpp"

#include <string>

namespace sharpreplay {

GradVector sam_perturbation(const GradVector& grad, double rho, double epsilon) {
    if (rho < 0.0) throw ConfigError("sam_perturbation: rho must be >= 0");
    if (epsilon <= 0.0) throw ConfigError("sam_perturbation: epsilon must be > 0");
    const double norm = l2_norm(grad);
    const double scale = rho / std::max(norm, epsilon);
    GradVector delta(grad.size());
    for (std::size_t i = 0; i < grad.size(); ++i) delta[i] = grad[i] * scale;
    return delta;
}

std::vector<double> sgd_apply(std::vector<double> params, const GradVector& grad, double lr) {
    if (params.size() != grad.size()) {
        throw ShapeError("sgd_apply: " + std::to_string(params.size()) + " params vs " +
                         std::to_string(grad.size()) + " gradient entries");
    }
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
    return params;
}

namespace {

void check_task_batch(const Batch& b) {
    if (b.x.rows == 0) throw InputError("train step: task batch is empty");
    if (b.y.size() != b.x.rows) throw InputError("train step: labels do not match batch rows");
}

std::vector<double> add(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

void add_into(GradVector& acc, const GradVector& g) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
}

Batch merge(const Batch& task, const std::vector<MemoryItem>& replay) {
    Batch out;
    out.task_id = task.task_id;
    out.x = Tensor2(task.x.rows + replay.size(), task.x.cols);
    out.y = task.y;
    std::copy(task.x.data.begin(), task.x.data.end(), out.x.data.begin());
    for (std::size_t i = 0; i < replay.size(); ++i) {
        std::copy(replay[i].x.begin(), replay[i].x.end(),
                  out.x.data.begin() + static_cast<std::ptrdiff_t>((task.x.rows + i) * out.x.cols));
        out.y.push_back(replay[i].y);
    }
    return out;
}

Batch items_batch(const std::vector<MemoryItem>& items) {
    Batch out;
    out.x = Tensor2(items.size(), items.empty() ? 0 : items[0].x.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        std::copy(items[i].x.begin(), items[i].x.end(),
                  out.x.data.begin() + static_cast<std::ptrdiff_t>(i * out.x.cols));
        out.y.push_back(items[i].y);
    }
    return out;
}

Tensor2 items_logits(const std::vector<MemoryItem>& items) {
    Tensor2 z(items.size(), items.empty() ? 0 : items[0].z.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        std::copy(items[i].z.begin(), items[i].z.end(),
                  z.data.begin() + static_cast<std::ptrdiff_t>(i * z.cols));
    }
    return z;
}

// Frozen soft targets come from the post-update model: the most learned
// state available while the task is still current.
void offer_task_items(Model& model, const Batch& task, MemoryBuffer& buffer, Rng& rng) {
    const Tensor2 logits = forward(model, task.x);
    for (std::size_t r = 0; r < task.x.rows; ++r) {
        MemoryItem item;
        auto xr = task.x.row(r);
        item.x.assign(xr.begin(), xr.end());
        item.y = task.y[r];
        auto zr = logits.row(r);
        item.z.assign(zr.begin(), zr.end());
        item.task_id = task.task_id;
        buffer.offer(std::move(item), rng);
    }
}

// One gradient sweep of the soft replay loss: CE on the label draw plus the
// squared logit distance on the logit draw. Disjoint components, so their
// separate gradients sum to the sweep gradient.
std::pair<LossBreakdown, GradVector> replay_soft_grad(const Model& model,
                                                      const std::vector<MemoryItem>& b1,
                                                      const std::vector<MemoryItem>& b2) {
    LossBreakdown lb;
    GradVector g(model.param_count(), 0.0);
    if (!b1.empty()) {
        const Batch batch = items_batch(b1);
        auto [l, gr] = loss_and_grad(model, batch.x, batch.y, nullptr, LossSpec{.replay_ce = true});
        lb = lb + l;
        add_into(g, gr);
    }
    if (!b2.empty()) {
        const Batch batch = items_batch(b2);
        const Tensor2 targets = items_logits(b2);
        auto [l, gr] = loss_and_grad(model, batch.x, batch.y, &targets, LossSpec{.logit_match = true});
        lb = lb + l;
        add_into(g, gr);
    }
    return {lb, std::move(g)};
}

} // namespace

StepReport step_online(Model& model, const Batch& task_batch, const OptimConfig& cfg) {
    check_task_batch(task_batch);
    auto [lb, g] = loss_and_grad(model, task_batch.x, task_batch.y, nullptr,
                                 LossSpec{.task_ce = true});
    params_set(model, sgd_apply(params_get(model), g, cfg.lr));
    return {lb, l2_norm(g), 1, 0.0};
}

StepReport step_er(Model& model, const Batch& task_batch, MemoryBuffer& buffer,
                   const OptimConfig& cfg, Rng& rng) {
    check_task_batch(task_batch);
    const auto replay = buffer.sample(cfg.batch_size, rng);
    const Batch merged = merge(task_batch, replay);
    auto [lb, g] = loss_and_grad(model, merged.x, merged.y, nullptr, LossSpec{.task_ce = true});
    params_set(model, sgd_apply(params_get(model), g, cfg.lr));
    offer_task_items(model, task_batch, buffer, rng);
    return {lb, l2_norm(g), 1, 0.0};
}

StepReport step_er_sam(Model& model, const Batch& task_batch, MemoryBuffer& buffer,
                       const OptimConfig& cfg, Rng& rng) {
    check_task_batch(task_batch);
    const auto replay = buffer.sample(cfg.batch_size, rng);
    const Batch merged = merge(task_batch, replay);
    const std::vector<double> theta = params_get(model);

    auto [lb, g1] = loss_and_grad(model, merged.x, merged.y, nullptr, LossSpec{.task_ce = true});
    const GradVector delta = sam_perturbation(g1, cfg.rho, cfg.epsilon);
    params_set(model, add(theta, delta));
    auto [lb2, g2] = loss_and_grad(model, merged.x, merged.y, nullptr, LossSpec{.task_ce = true});
    (void)lb2;
    params_set(model, sgd_apply(theta, g2, cfg.lr)); // perturbation is transient

    offer_task_items(model, task_batch, buffer, rng);
    return {lb, l2_norm(g2), 2, l2_norm(delta)};
}

StepReport step_derpp(Model& model, const Batch& task_batch, MemoryBuffer& buffer,
                      const OptimConfig& cfg, Rng& rng) {
    check_task_batch(task_batch);
    const auto b1 = buffer.sample(cfg.batch_size, rng);
    const auto b2 = buffer.sample(cfg.batch_size, rng);

    auto [lb_t, g] = loss_and_grad(model, task_batch.x, task_batch.y, nullptr,
                                   LossSpec{.task_ce = true});
    auto [lb_s, g_s] = replay_soft_grad(model, b1, b2);
    add_into(g, g_s);
    const LossBreakdown lb = lb_t + lb_s;

    params_set(model, sgd_apply(params_get(model), g, cfg.lr));
    offer_task_items(model, task_batch, buffer, rng);
    return {lb, l2_norm(g), 1, 0.0};
}

StepReport step_derpp_sam(Model& model, const Batch& task_batch, MemoryBuffer& buffer,
                          const OptimConfig& cfg, Rng& rng) {
    check_task_batch(task_batch);
    const auto b1 = buffer.sample(cfg.batch_size, rng);
    const auto b2 = buffer.sample(cfg.batch_size, rng);
    const std::vector<double> theta = params_get(model);

    auto total_grad = [&]() {
        auto [lb_t, g] = loss_and_grad(model, task_batch.x, task_batch.y, nullptr,
                                       LossSpec{.task_ce = true});
        auto [lb_s, g_s] = replay_soft_grad(model, b1, b2);
        add_into(g, g_s);
        return std::pair{lb_t + lb_s, std::move(g)};
    };

    auto [lb, g1] = total_grad();
    const GradVector delta = sam_perturbation(g1, cfg.rho, cfg.epsilon);
    params_set(model, add(theta, delta));
    auto [lb2, g2] = total_grad(); // same batches at the perturbed point
    (void)lb2;
    params_set(model, sgd_apply(theta, g2, cfg.lr));

    offer_task_items(model, task_batch, buffer, rng);
    return {lb, l2_norm(g2), 2, l2_norm(delta)};
}

StepReport step_mgser_sam(Model& model, const Batch& task_batch, MemoryBuffer& buffer,
                          const OptimConfig& cfg, Rng& rng) {
    check_task_batch(task_batch);
    const auto b1 = buffer.sample(cfg.batch_size, rng);
    const auto b2 = buffer.sample(cfg.batch_size, rng);
    const std::vector<double> theta = params_get(model);

    // Pass 1: component gradients at theta, one sweep over disjoint parts.
    auto [lb_t, g_t] = loss_and_grad(model, task_batch.x, task_batch.y, nullptr,
                                     LossSpec{.task_ce = true});
    auto [lb_s, g_mem] = replay_soft_grad(model, b1, b2);
    const GradVector delta = sam_perturbation(add(g_t, g_mem), cfg.rho, cfg.epsilon);

    // Pass 2: combined gradient at theta + delta, same batches.
    params_set(model, add(theta, delta));
    auto [lb_tp, g2] = loss_and_grad(model, task_batch.x, task_batch.y, nullptr,
                                     LossSpec{.task_ce = true});
    (void)lb_tp;
    auto [lb_sp, g2_mem] = replay_soft_grad(model, b1, b2);
    (void)lb_sp;
    add_into(g2, g2_mem);

    // Memory guidance: the retained pass-1 replay gradient joins the update.
    add_into(g2, g_mem);
    params_set(model, sgd_apply(theta, g2, cfg.lr));

    offer_task_items(model, task_batch, buffer, rng);
    return {lb_t + lb_s, l2_norm(g2), 2, l2_norm(delta)};
}

StepReport train_step(Model& model, const Batch& task_batch, MemoryBuffer& buffer,
                      const OptimConfig& cfg, Rng& rng) {
    switch (cfg.method) {
        case Method::Online:
        case Method::Joint:
            return step_online(model, task_batch, cfg);
        case Method::Er:
            return step_er(model, task_batch, buffer, cfg, rng);
        case Method::ErSam:
            return step_er_sam(model, task_batch, buffer, cfg, rng);
        case Method::Derpp:
            return step_derpp(model, task_batch, buffer, cfg, rng);
        case Method::DerppSam:
            return step_derpp_sam(model, task_batch, buffer, cfg, rng);
        case Method::MgserSam:
            return step_mgser_sam(model, task_batch, buffer, cfg, rng);
    }
    throw ConfigError("train_step: unknown method");
}

} // namespace sharpreplay
