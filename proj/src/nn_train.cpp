#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mrs/nn.hpp"

namespace mrs::nn {

LossGrad mse_loss(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size())
        throw ShapeError("mse_loss length mismatch: " + std::to_string(pred.size()) + " vs " +
                         std::to_string(target.size()));
    LossGrad out;
    out.grad.resize(pred.size());
    const double k = double(pred.size());
    for (size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        out.loss += d * d;
        out.grad[i] = 2.0 * d / k;
    }
    out.loss /= k;
    return out;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               int64_t t, const AdamConfig& cfg) {
    if (params.size() != grads.size()) throw ShapeError("adam_step size mismatch");
    if (t < 1) throw Error("adam step index must be >= 1");
    if (state.m.size() != params.size()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    const double bc1 = 1.0 - std::pow(cfg.beta1, double(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, double(t));
    for (size_t i = 0; i < params.size(); ++i) {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
}

namespace {

struct Prepared {
    std::vector<std::vector<double>> inputs;  // per sample, rows*bins
    std::vector<std::vector<double>> targets;
};

Prepared prepare(const Dataset& data, const InputConfig& input_cfg, const Network& net) {
    if (data.samples.empty()) throw Error("dataset is empty");
    if (input_cfg.rows() != net.config.input_rows ||
        input_cfg.window.bins != net.config.input_cols)
        throw ShapeError("input config does not match the network input shape");
    if (int(data.metabolite_order.size()) != net.config.output_dim)
        throw ShapeError("dataset has " + std::to_string(data.metabolite_order.size()) +
                         " labels, network outputs " + std::to_string(net.config.output_dim));
    Prepared p;
    p.inputs.resize(data.size());
    p.targets.resize(data.size());
    for (size_t i = 0; i < data.size(); ++i) {
        p.inputs[i] = assemble_input(data.samples[i], input_cfg).data;
        p.targets[i] = data.label_vector(i);
    }
    return p;
}

Tensor4 gather_batch(const Prepared& p, const std::vector<size_t>& order, size_t begin,
                     size_t end, int rows, int cols) {
    Tensor4 x(int(end - begin), 1, rows, cols);
    for (size_t b = begin; b < end; ++b)
        std::copy(p.inputs[order[b]].begin(), p.inputs[order[b]].end(),
                  x.v.begin() + long((b - begin) * p.inputs[order[b]].size()));
    return x;
}

double batch_pass(Network& net, const Prepared& p, const std::vector<size_t>& order,
                  size_t begin, size_t end, const ForwardCtx& ctx, Tensor4* grad_out) {
    const int rows = net.config.input_rows;
    const int cols = net.config.input_cols;
    const int k = net.config.output_dim;
    Tensor4 x = gather_batch(p, order, begin, end, rows, cols);
    Tensor4 y = net.forward(std::move(x), ctx);

    const int batch = int(end - begin);
    double loss = 0.0;
    if (grad_out) *grad_out = Tensor4(batch, k, 1, 1);
    for (int b = 0; b < batch; ++b) {
        const auto& target = p.targets[order[begin + size_t(b)]];
        LossGrad lg = mse_loss({y.v.data() + size_t(b) * size_t(k), size_t(k)}, target);
        loss += lg.loss;
        if (grad_out)
            for (int j = 0; j < k; ++j)
                grad_out->v[size_t(b) * size_t(k) + size_t(j)] = lg.grad[size_t(j)] / double(batch);
    }
    return loss / double(batch);
}

}  // namespace

double evaluate_loss(Network& net, const Dataset& data, const InputConfig& input_cfg) {
    const Prepared p = prepare(data, input_cfg, net);
    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), size_t(0));
    const size_t chunk = 256;
    double total = 0.0;
    for (size_t begin = 0; begin < data.size(); begin += chunk) {
        const size_t end = std::min(begin + chunk, data.size());
        total += batch_pass(net, p, order, begin, end, ForwardCtx{.train = false}, nullptr) *
                 double(end - begin);
    }
    return total / double(data.size());
}

TrainHistory train(Network& net, const Dataset& train_data, const Dataset& val_data,
                   const TrainConfig& cfg, const InputConfig& input_cfg) {
    if (cfg.batch_size < 1) throw Error("batch size must be >= 1");
    if (cfg.max_epochs < 1) throw Error("epoch count must be >= 1");
    if (cfg.early_stop_patience < 1) throw Error("early stop patience must be >= 1");
    if (train_data.metabolite_order != val_data.metabolite_order)
        throw ShapeError("train and validation datasets disagree on metabolite order");

    const Prepared train_p = prepare(train_data, input_cfg, net);
    const Prepared val_p = prepare(val_data, input_cfg, net);
    net.input_config = input_cfg;
    net.labels = train_data.metabolite_order;

    const AdamConfig adam{cfg.learning_rate, cfg.beta1, cfg.beta2, 1e-8};
    auto blocks = net.param_blocks(true);
    std::vector<AdamState> states(blocks.size());
    int64_t step = 0;

    TrainHistory history;
    history.best_val_loss = std::numeric_limits<double>::infinity();
    std::vector<double> best_params = net.snapshot_params();
    int epochs_without_improvement = 0;

    std::vector<size_t> train_order(train_data.size());
    std::iota(train_order.begin(), train_order.end(), size_t(0));
    std::vector<size_t> val_order(val_data.size());
    std::iota(val_order.begin(), val_order.end(), size_t(0));

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        {
            SplitMix rng(cfg.seed, 0x53485546ULL, uint64_t(epoch));
            for (size_t i = train_order.size() - 1; i > 0; --i)
                std::swap(train_order[i], train_order[rng.next() % (i + 1)]);
        }

        double train_loss = 0.0;
        size_t trained = 0;
        size_t batch_index = 0;
        for (size_t begin = 0; begin < train_order.size(); begin += size_t(cfg.batch_size)) {
            const size_t end = std::min(begin + size_t(cfg.batch_size), train_order.size());
            if (end - begin < 2) continue;  // batch norm cannot use a singleton batch
            const ForwardCtx ctx{.train = true,
                                 .salt = mix64(cfg.seed, uint64_t(epoch), batch_index)};
            net.zero_grads();
            Tensor4 grad;
            const double loss =
                batch_pass(net, train_p, train_order, begin, end, ctx, &grad);
            if (!std::isfinite(loss))
                throw TrainingDiverged("training loss diverged at epoch " + std::to_string(epoch),
                                       history);
            for (auto it = net.layers.rbegin(); it != net.layers.rend(); ++it)
                grad = (*it)->backward(std::move(grad));
            ++step;
            for (size_t i = 0; i < blocks.size(); ++i)
                adam_step(*blocks[i].values, *blocks[i].grads, states[i], step, adam);
            train_loss += loss * double(end - begin);
            trained += end - begin;
            ++batch_index;
        }
        if (trained == 0) throw Error("no usable training batches (all singletons)");
        train_loss /= double(trained);

        double val_loss = 0.0;
        {
            const size_t chunk = 256;
            for (size_t begin = 0; begin < val_order.size(); begin += chunk) {
                const size_t end = std::min(begin + chunk, val_order.size());
                val_loss += batch_pass(net, val_p, val_order, begin, end,
                                       ForwardCtx{.train = false}, nullptr) *
                            double(end - begin);
            }
            val_loss /= double(val_order.size());
        }
        if (!std::isfinite(val_loss))
            throw TrainingDiverged("validation loss diverged at epoch " + std::to_string(epoch),
                                   history);

        history.epochs.push_back({epoch, train_loss, val_loss});

        if (val_loss < history.best_val_loss - cfg.early_stop_min_delta) {
            history.best_val_loss = val_loss;
            history.best_epoch = epoch;
            best_params = net.snapshot_params();
            epochs_without_improvement = 0;
        } else {
            ++epochs_without_improvement;
        }
        if (epochs_without_improvement >= cfg.early_stop_patience) {
            history.early_stopped = true;
            break;
        }
    }

    if (cfg.restore_best && history.best_epoch > 0) net.restore_params(best_params);
    return history;
}

}  // namespace mrs::nn
