#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "mrs/nn.hpp"

using namespace mrs;
using namespace mrs::nn;

namespace {

Tensor4 filled(int n, int c, int h, int w, uint64_t seed) {
    Tensor4 t(n, c, h, w);
    SplitMix rng(seed);
    for (auto& v : t.v) v = 2.0 * rng.uniform() - 1.0;
    return t;
}

// scalar probe loss: fixed random weighting of the layer output
struct Probe {
    std::vector<double> coeff;

    explicit Probe(size_t n, uint64_t seed = 99) {
        SplitMix rng(seed);
        coeff.resize(n);
        for (auto& c : coeff) c = 2.0 * rng.uniform() - 1.0;
    }
    double loss(const Tensor4& y) const {
        double s = 0.0;
        for (size_t i = 0; i < y.count(); ++i) s += coeff[i] * y.v[i];
        return s;
    }
    Tensor4 grad(const Tensor4& y) const {
        Tensor4 g(y.n, y.c, y.h, y.w);
        g.v = coeff;
        return g;
    }
};

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

// analytic vs central-difference gradients for one layer, checking the input
// gradient everywhere and every parameter of every block
void check_layer_gradients(Layer& layer, Tensor4 x, double tol = 1e-4) {
    const ForwardCtx ctx{.train = true, .salt = 1234};
    const double h = 1e-6;

    Tensor4 y = layer.forward(x, ctx);
    Probe probe(y.count());
    for (auto& block : layer.params())
        if (block.grads) std::fill(block.grads->begin(), block.grads->end(), 0.0);
    const Tensor4 gx = layer.backward(probe.grad(y));

    auto loss_at = [&](Tensor4& input) {
        Tensor4 out = layer.forward(input, ctx);
        return probe.loss(out);
    };

    for (size_t i = 0; i < x.count(); ++i) {
        const double keep = x.v[i];
        x.v[i] = keep + h;
        const double lp = loss_at(x);
        x.v[i] = keep - h;
        const double lm = loss_at(x);
        x.v[i] = keep;
        const double fd = (lp - lm) / (2.0 * h);
        CHECK(rel_err(gx.v[i], fd) < tol);
    }

    for (auto& block : layer.params()) {
        if (!block.grads) continue;
        for (size_t i = 0; i < block.values->size(); ++i) {
            const double keep = (*block.values)[i];
            (*block.values)[i] = keep + h;
            const double lp = loss_at(x);
            (*block.values)[i] = keep - h;
            const double lm = loss_at(x);
            (*block.values)[i] = keep;
            const double fd = (lp - lm) / (2.0 * h);
            CHECK(rel_err((*block.grads)[i], fd) < tol);
        }
    }
}

}  // namespace

// --- convolution --------------------------------------------------------------

TEST_CASE("conv2d hand examples") {
    SUBCASE("length-3 input, kernel [1,1]") {
        Conv2d conv(1, 1, 1, 2, 1, 1, Padding::Valid);
        conv.weight = {1.0, 1.0};
        Tensor4 x(1, 1, 1, 3);
        x.v = {1.0, 2.0, 3.0};
        const Tensor4 y = conv.forward(x, {});
        REQUIRE(y.w == 2);
        CHECK(y.v[0] == doctest::Approx(3.0));
        CHECK(y.v[1] == doctest::Approx(5.0));
    }
    SUBCASE("2048 columns, 1x7 kernel, 1x2 stride, valid") {
        Conv2d conv(1, 4, 1, 7, 1, 2, Padding::Valid);
        CHECK(conv.output_shape({1, 1, 2048}).w == 1021);
    }
    SUBCASE("identity 1x1 kernel") {
        Conv2d conv(1, 1, 1, 1, 1, 1, Padding::Valid);
        conv.weight = {1.0};
        Tensor4 x = filled(2, 1, 3, 5, 1);
        const Tensor4 y = conv.forward(x, {});
        CHECK(y.v == x.v);
    }
    SUBCASE("same padding keeps ceil(n/s) columns") {
        Conv2d conv(1, 1, 1, 3, 1, 1, Padding::Same);
        CHECK(conv.output_shape({1, 1, 10}).w == 10);
        Conv2d strided(1, 1, 1, 3, 1, 3, Padding::Same);
        CHECK(strided.output_shape({1, 1, 10}).w == 4);
    }
    SUBCASE("kernel larger than input") {
        Conv2d conv(1, 1, 1, 9, 1, 1, Padding::Valid);
        Tensor4 x = filled(1, 1, 1, 4, 2);
        CHECK_THROWS_AS(conv.forward(x, {}), ShapeError);
    }
}

TEST_CASE("conv2d gradients match finite differences") {
    SUBCASE("plain valid") {
        Conv2d conv(2, 3, 1, 3, 1, 1, Padding::Valid);
        SplitMix rng(5);
        conv.init_weights(rng);
        check_layer_gradients(conv, filled(2, 2, 1, 9, 7));
    }
    SUBCASE("strided") {
        Conv2d conv(2, 2, 1, 3, 1, 2, Padding::Valid);
        SplitMix rng(6);
        conv.init_weights(rng);
        check_layer_gradients(conv, filled(2, 2, 1, 11, 8));
    }
    SUBCASE("row kernel") {
        Conv2d conv(1, 2, 3, 3, 1, 1, Padding::Valid);
        SplitMix rng(7);
        conv.init_weights(rng);
        check_layer_gradients(conv, filled(2, 1, 4, 7, 9));
    }
    SUBCASE("same padding with stride") {
        Conv2d conv(2, 2, 1, 5, 1, 3, Padding::Same);
        SplitMix rng(8);
        conv.init_weights(rng);
        check_layer_gradients(conv, filled(2, 2, 1, 10, 10));
    }
    SUBCASE("zero upstream gradient gives zero gradients") {
        Conv2d conv(1, 1, 1, 3, 1, 1, Padding::Valid);
        SplitMix rng(9);
        conv.init_weights(rng);
        Tensor4 x = filled(1, 1, 1, 6, 11);
        Tensor4 y = conv.forward(x, {.train = true});
        Tensor4 zero(y.n, y.c, y.h, y.w);
        const Tensor4 gx = conv.backward(zero);
        for (double v : gx.v) CHECK(v == 0.0);
        for (double v : conv.grad_weight) CHECK(v == 0.0);
    }
    SUBCASE("single element follows the scalar chain rule") {
        Conv2d conv(1, 1, 1, 1, 1, 1, Padding::Valid);
        conv.weight = {0.5};
        Tensor4 x(1, 1, 1, 1);
        x.v = {3.0};
        conv.forward(x, {.train = true});
        Tensor4 g(1, 1, 1, 1);
        g.v = {2.0};
        const Tensor4 gx = conv.backward(g);
        CHECK(gx.v[0] == doctest::Approx(0.5 * 2.0));
        CHECK(conv.grad_weight[0] == doctest::Approx(3.0 * 2.0));
        CHECK(conv.grad_bias[0] == doctest::Approx(2.0));
    }
}

// --- max pooling ----------------------------------------------------------------

TEST_CASE("maxpool") {
    MaxPool pool(3);
    SUBCASE("window maxima") {
        Tensor4 x(1, 1, 1, 6);
        x.v = {1.0, 3.0, 2.0, 5.0, 4.0, 0.0};
        const Tensor4 y = pool.forward(x, {});
        REQUIRE(y.w == 2);
        CHECK(y.v[0] == doctest::Approx(3.0));
        CHECK(y.v[1] == doctest::Approx(5.0));
    }
    SUBCASE("ties send gradient to the first element") {
        Tensor4 x(1, 1, 1, 3);
        x.v = {2.0, 2.0, 2.0};
        pool.forward(x, {});
        Tensor4 g(1, 1, 1, 1);
        g.v = {1.0};
        const Tensor4 gx = pool.backward(g);
        CHECK(gx.v[0] == doctest::Approx(1.0));
        CHECK(gx.v[1] == 0.0);
        CHECK(gx.v[2] == 0.0);
    }
    SUBCASE("pooling after an identity conv equals pooling the input") {
        Conv2d conv(1, 1, 1, 1, 1, 1, Padding::Valid);
        conv.weight = {1.0};
        Tensor4 x = filled(1, 1, 1, 9, 3);
        const Tensor4 via_conv = pool.forward(conv.forward(x, {}), {});
        MaxPool pool2(3);
        const Tensor4 direct = pool2.forward(x, {});
        CHECK(via_conv.v == direct.v);
    }
    SUBCASE("gradient matches finite differences") {
        MaxPool p(2);
        check_layer_gradients(p, filled(2, 2, 1, 8, 13));
    }
}

// --- relu / batchnorm / dropout ---------------------------------------------------

TEST_CASE("relu") {
    ReLU relu;
    Tensor4 x(1, 1, 1, 3);
    x.v = {-1.0, 0.0, 2.0};
    const Tensor4 y = relu.forward(x, {});
    CHECK(y.v[0] == 0.0);
    CHECK(y.v[1] == 0.0);
    CHECK(y.v[2] == 2.0);
    check_layer_gradients(relu, filled(2, 2, 1, 7, 21));
}

TEST_CASE("batchnorm") {
    SUBCASE("inference with unit statistics is the identity") {
        BatchNorm bn(2);
        Tensor4 x = filled(3, 2, 1, 5, 15);
        const Tensor4 y = bn.forward(x, {.train = false});
        for (size_t i = 0; i < x.count(); ++i) CHECK(std::abs(y.v[i] - x.v[i]) < 1e-9);
    }
    SUBCASE("train mode standardises each channel") {
        BatchNorm bn(1);
        Tensor4 x = filled(4, 1, 1, 8, 16);
        const Tensor4 y = bn.forward(x, {.train = true});
        double mean = 0.0, var = 0.0;
        for (double v : y.v) mean += v;
        mean /= double(y.count());
        for (double v : y.v) var += (v - mean) * (v - mean);
        var /= double(y.count());
        CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
    }
    SUBCASE("singleton batches are rejected in train mode") {
        BatchNorm bn(1);
        Tensor4 x = filled(1, 1, 1, 4, 17);
        CHECK_THROWS_AS(bn.forward(x, {.train = true}), DegenerateBatch);
    }
    SUBCASE("gradients through the batch statistics match finite differences") {
        BatchNorm bn(2);
        SplitMix rng(31);
        for (auto& g : bn.gamma) g = 0.5 + rng.uniform();
        for (auto& b : bn.beta) b = rng.uniform() - 0.5;
        check_layer_gradients(bn, filled(3, 2, 1, 4, 18));
    }
}

TEST_CASE("dropout") {
    SUBCASE("inference passes through untouched") {
        Dropout d(0.4);
        Tensor4 x = filled(2, 1, 1, 16, 23);
        const Tensor4 y = d.forward(x, {.train = false});
        CHECK(y.v == x.v);
    }
    SUBCASE("train mode zeroes a fraction and rescales the rest") {
        Dropout d(0.4);
        Tensor4 x(1, 1, 1, 10000);
        std::fill(x.v.begin(), x.v.end(), 1.0);
        const Tensor4 y = d.forward(x, {.train = true, .salt = 5});
        size_t zeros = 0;
        for (double v : y.v) {
            if (v == 0.0)
                ++zeros;
            else
                CHECK(v == doctest::Approx(1.0 / 0.6));
        }
        CHECK(double(zeros) / double(y.count()) == doctest::Approx(0.4).epsilon(0.05));
    }
    SUBCASE("mask is a deterministic function of the salt") {
        Dropout d(0.25);
        Tensor4 x = filled(2, 1, 1, 64, 29);
        const Tensor4 a = d.forward(x, {.train = true, .salt = 7});
        const Tensor4 b = d.forward(x, {.train = true, .salt = 7});
        CHECK(a.v == b.v);
        const Tensor4 c = d.forward(x, {.train = true, .salt = 8});
        CHECK(a.v != c.v);
    }
    SUBCASE("gradient matches finite differences under a fixed mask") {
        Dropout d(0.3);
        check_layer_gradients(d, filled(2, 1, 1, 12, 37));
    }
    SUBCASE("rate bounds") { CHECK_THROWS_AS(Dropout(1.0), Error); }
}

// --- dense / softmax ----------------------------------------------------------------

TEST_CASE("dense") {
    Dense dense(6, 4);
    SplitMix rng(41);
    dense.init_weights(rng);
    for (auto& b : dense.bias) b = rng.uniform() - 0.5;
    check_layer_gradients(dense, filled(3, 1, 2, 3, 43));
}

TEST_CASE("softmax") {
    Softmax sm;
    SUBCASE("uniform logits give the uniform distribution") {
        Tensor4 x(1, 5, 1, 1);
        const Tensor4 y = sm.forward(x, {});
        for (double v : y.v) CHECK(v == doctest::Approx(0.2));
    }
    SUBCASE("invariant under adding a constant") {
        Tensor4 x = filled(1, 5, 1, 1, 47);
        Tensor4 shifted = x;
        for (auto& v : shifted.v) v += 37.5;
        const Tensor4 a = sm.forward(x, {});
        const Tensor4 b = sm.forward(shifted, {});
        for (size_t i = 0; i < a.count(); ++i) CHECK(std::abs(a.v[i] - b.v[i]) < 1e-12);
    }
    SUBCASE("outputs form a simplex") {
        Tensor4 x = filled(3, 5, 1, 1, 53);
        const Tensor4 y = sm.forward(x, {});
        for (int i = 0; i < 3; ++i) {
            double total = 0.0;
            for (int k = 0; k < 5; ++k) {
                const double v = y.v[size_t(i) * 5 + size_t(k)];
                CHECK(v >= 0.0);
                total += v;
            }
            CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
    SUBCASE("gradient matches finite differences") {
        Softmax layer;
        check_layer_gradients(layer, filled(2, 4, 1, 1, 59));
    }
}

// --- loss / optimiser -----------------------------------------------------------------

TEST_CASE("mse loss") {
    SUBCASE("zero at equality") {
        const std::vector<double> p = {0.2, 0.8};
        CHECK(mse_loss(p, p).loss == doctest::Approx(0.0));
    }
    SUBCASE("swapped one-hot pair") {
        const std::vector<double> p = {1.0, 0.0}, t = {0.0, 1.0};
        CHECK(mse_loss(p, t).loss == doctest::Approx(1.0));
    }
    SUBCASE("gradient matches finite differences") {
        std::vector<double> p = {0.3, 0.5, 0.2}, t = {0.1, 0.7, 0.2};
        const auto lg = mse_loss(p, t);
        const double h = 1e-7;
        for (size_t i = 0; i < p.size(); ++i) {
            p[i] += h;
            const double lp = mse_loss(p, t).loss;
            p[i] -= 2 * h;
            const double lm = mse_loss(p, t).loss;
            p[i] += h;
            CHECK(rel_err(lg.grad[i], (lp - lm) / (2 * h)) < 1e-8);
        }
    }
    SUBCASE("length mismatch") {
        const std::vector<double> p = {1.0}, t = {1.0, 2.0};
        CHECK_THROWS_AS(mse_loss(p, t), ShapeError);
    }
}

TEST_CASE("adam") {
    AdamConfig cfg;
    SUBCASE("first unit-gradient step moves by about the learning rate") {
        std::vector<double> p = {1.0};
        std::vector<double> g = {1.0};
        AdamState state;
        adam_step(p, g, state, 1, cfg);
        CHECK(p[0] == doctest::Approx(1.0 - 1e-4).epsilon(1e-7));
    }
    SUBCASE("zero gradient leaves parameters alone") {
        std::vector<double> p = {0.7, -0.2};
        std::vector<double> g = {0.0, 0.0};
        AdamState state;
        adam_step(p, g, state, 1, cfg);
        CHECK(p[0] == doctest::Approx(0.7));
        CHECK(p[1] == doctest::Approx(-0.2));
    }
    SUBCASE("equal gradients give equal updates") {
        std::vector<double> p = {0.1, 0.1};
        std::vector<double> g = {0.42, 0.42};
        AdamState state;
        adam_step(p, g, state, 1, cfg);
        CHECK(p[0] == p[1]);
    }
}

// --- builder / network ------------------------------------------------------------------

namespace {

int count_kind(const Network& net, const std::string& kind) {
    int n = 0;
    for (const auto& l : net.layers)
        if (l->kind() == kind) ++n;
    return n;
}

}  // namespace

TEST_CASE("builder row-reduction structure") {
    SUBCASE("two rows need exactly one height-2 reduction") {
        NetworkConfig cfg;
        cfg.input_rows = 2;
        cfg.channel_scale = 1.0 / 64.0;
        Network net = build_network(cfg, 1);
        std::vector<const Conv2d*> row_convs;
        for (const auto& l : net.layers) {
            const auto* conv = dynamic_cast<const Conv2d*>(l.get());
            if (conv && conv->kh > 1) row_convs.push_back(conv);
        }
        REQUIRE(row_convs.size() == 1);
        CHECK(row_convs[0]->kh == 2);
    }
    SUBCASE("nine rows reduce in four height-3 steps") {
        NetworkConfig cfg;
        cfg.input_rows = 9;
        cfg.channel_scale = 1.0 / 64.0;
        Network net = build_network(cfg, 1);
        int reductions = 0;
        for (const auto& l : net.layers) {
            const auto* conv = dynamic_cast<const Conv2d*>(l.get());
            if (conv && conv->kh == 3) ++reductions;
        }
        CHECK(reductions == 4);
    }
    SUBCASE("pooling variant swaps strided reductions for max pools") {
        NetworkConfig cfg;
        cfg.input_rows = 2;
        cfg.channel_scale = 1.0 / 64.0;
        cfg.reduction = ReductionVariant::Pooling;
        Network net = build_network(cfg, 1);
        CHECK(count_kind(net, "maxpool") == 4);
        for (const auto& l : net.layers) {
            const auto* conv = dynamic_cast<const Conv2d*>(l.get());
            if (conv) CHECK(conv->sw <= 2);  // no stride-3 reductions left
        }
        NetworkConfig strided = cfg;
        strided.reduction = ReductionVariant::Strided;
        CHECK(count_kind(build_network(strided, 1), "maxpool") == 0);
    }
    SUBCASE("batch norm appears exactly once, after the first convolution") {
        NetworkConfig cfg;
        cfg.channel_scale = 1.0 / 64.0;
        Network net = build_network(cfg, 1);
        CHECK(count_kind(net, "batchnorm") == 1);
        CHECK(net.layers[0]->kind() == "conv2d");
        CHECK(net.layers[1]->kind() == "relu");
        CHECK(net.layers[2]->kind() == "batchnorm");
        CHECK(net.layers[3]->kind() == "dropout");
    }
}

TEST_CASE("all variants type-check and emit simplex outputs for 1..9 rows") {
    for (SizeVariant size : {SizeVariant::Small, SizeVariant::Medium, SizeVariant::Large}) {
        for (ReductionVariant red : {ReductionVariant::Strided, ReductionVariant::Pooling}) {
            for (int rows = 1; rows <= 9; ++rows) {
                NetworkConfig cfg;
                cfg.size = size;
                cfg.reduction = red;
                cfg.input_rows = rows;
                cfg.channel_scale = 1.0 / 128.0;
                Network net = build_network(cfg, 3);
                Tensor4 x = filled(1, 1, rows, 2048, uint64_t(rows) * 100 + 1);
                const Tensor4 y = net.forward(std::move(x), {.train = false});
                REQUIRE(y.count() == 5);
                double total = 0.0;
                for (double v : y.v) {
                    CHECK(v >= 0.0);
                    total += v;
                }
                CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("tiny columns overflow the stack") {
    NetworkConfig cfg;
    cfg.input_cols = 64;  // reductions run out of columns
    cfg.channel_scale = 1.0 / 64.0;
    CHECK_THROWS_AS(build_network(cfg, 1), ArchitectureError);
}

// --- training ------------------------------------------------------------------------

namespace {

struct TinyData {
    std::vector<BasisSet> basis;
    Dataset train, val;
    InputConfig cfg;

    explicit TinyData(int train_n = 12, int val_n = 8) {
        SynthesisInfo info;
        info.time_samples = 512;
        PpmWindow w{4.5, 1.5, 512};
        basis = build_basis(default_models(), {1.0}, w, info);
        train = generate_dataset(basis, train_n, 21, 0.0);
        val = generate_dataset(basis, val_n, 22, 0.0, 1000);
        cfg = parse_input_config("off,diff", "m", w);
    }

    NetworkConfig net_cfg() const {
        NetworkConfig c;
        c.input_rows = 2;
        c.input_cols = 512;
        c.channel_scale = 1.0 / 128.0;
        return c;
    }
};

}  // namespace

namespace {

std::vector<double> trainable_params(Network& net) {
    std::vector<double> flat;
    for (auto& block : net.param_blocks(true))
        flat.insert(flat.end(), block.values->begin(), block.values->end());
    return flat;
}

// Freeze the network output: zero learning rate stops weight updates, and a
// zeroed batch-norm gain keeps the (still-updating) running statistics out of
// the forward pass, so the validation loss is exactly constant.
void freeze_outputs(Network& net) {
    for (auto& layer : net.layers)
        if (auto* bn = dynamic_cast<BatchNorm*>(layer.get()))
            std::fill(bn->gamma.begin(), bn->gamma.end(), 0.0);
}

}  // namespace

TEST_CASE("constant validation loss stops training at epoch 16") {
    TinyData data;
    Network net = build_network(data.net_cfg(), 5);
    freeze_outputs(net);
    const auto before = trainable_params(net);

    TrainConfig tc;
    tc.learning_rate = 0.0;
    tc.batch_size = 4;
    tc.max_epochs = 100;
    tc.seed = 9;
    const TrainHistory h = train(net, data.train, data.val, tc, data.cfg);

    CHECK(h.epochs.size() == 16);  // patience 15 after the first epoch
    CHECK(h.early_stopped);
    CHECK(h.best_epoch == 1);
    const auto after = trainable_params(net);
    CHECK(before == after);  // zero learning rate leaves the weights alone
    for (size_t e = 1; e < h.epochs.size(); ++e)
        CHECK(h.epochs[e].val_loss == h.epochs[0].val_loss);
}

TEST_CASE("training restores the best validation weights") {
    TinyData data;
    Network net = build_network(data.net_cfg(), 6);
    TrainConfig tc;
    tc.learning_rate = 1e-3;
    tc.batch_size = 4;
    tc.max_epochs = 6;
    tc.seed = 10;
    const TrainHistory h = train(net, data.train, data.val, tc, data.cfg);
    REQUIRE(h.best_epoch >= 1);
    // recomputing the validation loss on the restored weights reproduces the
    // recorded best
    const double val = evaluate_loss(net, data.val, data.cfg);
    CHECK(val == doctest::Approx(h.best_val_loss).epsilon(1e-12));
}

TEST_CASE("training is bit-reproducible from the seed") {
    TinyData data;
    TrainConfig tc;
    tc.learning_rate = 1e-3;
    tc.batch_size = 4;
    tc.max_epochs = 3;
    tc.seed = 77;

    Network a = build_network(data.net_cfg(), 42);
    Network b = build_network(data.net_cfg(), 42);
    const TrainHistory ha = train(a, data.train, data.val, tc, data.cfg);
    const TrainHistory hb = train(b, data.train, data.val, tc, data.cfg);
    REQUIRE(ha.epochs.size() == hb.epochs.size());
    for (size_t e = 0; e < ha.epochs.size(); ++e) {
        CHECK(ha.epochs[e].train_loss == hb.epochs[e].train_loss);
        CHECK(ha.epochs[e].val_loss == hb.epochs[e].val_loss);
    }
    CHECK(a.snapshot_params() == b.snapshot_params());
}

TEST_CASE("predictions live on the simplex and are deterministic") {
    TinyData data;
    Network net = build_network(data.net_cfg(), 6);
    net.labels = data.train.metabolite_order;
    net.input_config = data.cfg;
    const InputTensor x = assemble_input(data.train.samples[0], data.cfg);
    const auto a = net.predict_values(x);
    const auto b = net.predict_values(x);
    CHECK(a == b);
    double total = 0.0;
    for (double v : a) {
        CHECK(v >= 0.0);
        total += v;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    const auto named = net.predict(x);
    CHECK(named.size() == 5);
    CHECK(named.count("NAA") == 1);
}

// --- checkpoints -----------------------------------------------------------------------

TEST_CASE("checkpoint round trip preserves inference exactly") {
    TinyData data;
    Network net = build_network(data.net_cfg(), 8);
    TrainConfig tc;
    tc.learning_rate = 1e-3;
    tc.batch_size = 4;
    tc.max_epochs = 2;
    tc.seed = 3;
    train(net, data.train, data.val, tc, data.cfg);

    const auto path =
        (std::filesystem::temp_directory_path() / "roundtrip.mrsnet").string();
    save_checkpoint(net, path);
    Network loaded = load_checkpoint(path);

    CHECK(loaded.labels == net.labels);
    CHECK(loaded.config.input_rows == net.config.input_rows);
    CHECK(loaded.input_config.acquisitions == net.input_config.acquisitions);
    CHECK(loaded.snapshot_params() == net.snapshot_params());

    const InputTensor x = assemble_input(data.val.samples[0], data.cfg);
    const auto a = net.predict_values(x);
    const auto b = loaded.predict_values(x);
    for (size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
    std::filesystem::remove(path);
}

TEST_CASE("corrupted checkpoint blob is a format error") {
    TinyData data;
    Network net = build_network(data.net_cfg(), 8);
    const auto path = (std::filesystem::temp_directory_path() / "short.mrsnet").string();
    save_checkpoint(net, path);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 128);
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);
    std::filesystem::remove(path);
}
