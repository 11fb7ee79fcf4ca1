#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mrs/preprocess.hpp"
#include "mrs/util.hpp"

namespace mrs::nn {

// Dense (batch, channels, rows, cols) tensor, row-major.
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<double> v;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_), v(size_t(n_) * size_t(c_) * size_t(h_) * size_t(w_), 0.0) {}

    size_t count() const { return v.size(); }
    size_t plane() const { return size_t(h) * size_t(w); }
    double* at(int i, int ci) { return v.data() + (size_t(i) * size_t(c) + size_t(ci)) * plane(); }
    const double* at(int i, int ci) const {
        return v.data() + (size_t(i) * size_t(c) + size_t(ci)) * plane();
    }
};

struct Shape3 {
    int c = 0, h = 0, w = 0;
    bool operator==(const Shape3&) const = default;
};

enum class Padding { Valid, Same };

struct ForwardCtx {
    bool train = false;
    uint64_t salt = 0;  // dropout mask stream key
};

// A parameter array of a layer plus its gradient buffer. Non-trainable blocks
// (batch-norm running statistics) are persisted and snapshotted but skipped by
// the optimiser.
struct ParamBlock {
    std::string name;
    std::vector<double>* values = nullptr;
    std::vector<double>* grads = nullptr;
    bool trainable = true;
};

// Layers take tensors by value so elementwise stages can run in place and
// caches can be moved rather than copied.
class Layer {
  public:
    virtual ~Layer() = default;
    virtual std::string kind() const = 0;
    virtual Shape3 output_shape(const Shape3& in) const = 0;
    virtual Tensor4 forward(Tensor4 x, const ForwardCtx& ctx) = 0;
    virtual Tensor4 backward(Tensor4 grad_out) = 0;
    virtual std::vector<ParamBlock> params() { return {}; }
    virtual nlohmann::json describe() const;
    virtual void init_weights(SplitMix&) {}

    int index = 0;  // position in the network, keys the dropout streams
};

class Conv2d : public Layer {
  public:
    Conv2d(int in_ch, int out_ch, int kh, int kw, int sh, int sw, Padding pad);
    std::string kind() const override { return "conv2d"; }
    Shape3 output_shape(const Shape3& in) const override;
    Tensor4 forward(Tensor4 x, const ForwardCtx& ctx) override;
    Tensor4 backward(Tensor4 grad_out) override;
    std::vector<ParamBlock> params() override;
    nlohmann::json describe() const override;
    void init_weights(SplitMix& rng) override;

    int in_ch, out_ch, kh, kw, sh, sw;
    Padding pad;
    std::vector<double> weight, bias;            // (out,in,kh,kw), (out)
    std::vector<double> grad_weight, grad_bias;

  private:
    void pads(int in_h, int in_w, int& pt, int& pl, int& out_h, int& out_w) const;
    void im2col(const double* x, int in_h, int in_w, int pt, int pl, int oh, int ow,
                double* col) const;
    Tensor4 x_;
};

class ReLU : public Layer {
  public:
    std::string kind() const override { return "relu"; }
    Shape3 output_shape(const Shape3& in) const override { return in; }
    Tensor4 forward(Tensor4 x, const ForwardCtx& ctx) override;
    Tensor4 backward(Tensor4 grad_out) override;

  private:
    std::vector<uint8_t> mask_;  // 1 where the input was positive
};

class BatchNorm : public Layer {
  public:
    explicit BatchNorm(int channels, double momentum = 0.99, double eps = 1e-10);
    std::string kind() const override { return "batchnorm"; }
    Shape3 output_shape(const Shape3& in) const override { return in; }
    Tensor4 forward(Tensor4 x, const ForwardCtx& ctx) override;
    Tensor4 backward(Tensor4 grad_out) override;
    std::vector<ParamBlock> params() override;
    nlohmann::json describe() const override;

    int channels;
    double momentum, eps;
    std::vector<double> gamma, beta, running_mean, running_var;
    std::vector<double> grad_gamma, grad_beta;

  private:
    Tensor4 xhat_;
    std::vector<double> inv_std_;
};

class Dropout : public Layer {
  public:
    explicit Dropout(double rate);
    std::string kind() const override { return "dropout"; }
    Shape3 output_shape(const Shape3& in) const override { return in; }
    Tensor4 forward(Tensor4 x, const ForwardCtx& ctx) override;
    Tensor4 backward(Tensor4 grad_out) override;
    nlohmann::json describe() const override;

    double rate;

  private:
    std::vector<uint8_t> keep_;  // 1 where the unit stayed active
};

// Window (1, w) with stride (1, w); gradient goes to the first maximum.
class MaxPool : public Layer {
  public:
    explicit MaxPool(int width);
    std::string kind() const override { return "maxpool"; }
    Shape3 output_shape(const Shape3& in) const override;
    Tensor4 forward(Tensor4 x, const ForwardCtx& ctx) override;
    Tensor4 backward(Tensor4 grad_out) override;
    nlohmann::json describe() const override;

    int width;

  private:
    Shape3 in_shape_;
    int batch_ = 0;
    std::vector<int> argmax_;
};

class Dense : public Layer {
  public:
    Dense(int in_features, int out_features);
    std::string kind() const override { return "dense"; }
    Shape3 output_shape(const Shape3& in) const override;
    Tensor4 forward(Tensor4 x, const ForwardCtx& ctx) override;
    Tensor4 backward(Tensor4 grad_out) override;
    std::vector<ParamBlock> params() override;
    nlohmann::json describe() const override;
    void init_weights(SplitMix& rng) override;

    int in_features, out_features;
    std::vector<double> weight, bias;  // (out, in), (out)
    std::vector<double> grad_weight, grad_bias;

  private:
    Tensor4 x_;
};

class Softmax : public Layer {
  public:
    std::string kind() const override { return "softmax"; }
    Shape3 output_shape(const Shape3& in) const override { return in; }
    Tensor4 forward(Tensor4 x, const ForwardCtx& ctx) override;
    Tensor4 backward(Tensor4 grad_out) override;

  private:
    Tensor4 y_;
};

// --- network -----------------------------------------------------------------

enum class SizeVariant { Small, Medium, Large };
enum class ReductionVariant { Strided, Pooling };

const char* size_name(SizeVariant v);
SizeVariant size_from_name(const std::string& name);
const char* reduction_name(ReductionVariant v);
ReductionVariant reduction_from_name(const std::string& name);

struct NetworkConfig {
    SizeVariant size = SizeVariant::Small;
    ReductionVariant reduction = ReductionVariant::Strided;
    int input_rows = 2;
    int input_cols = 2048;
    int output_dim = 5;
    double channel_scale = 1.0;  // multiplies the 256/512 channel counts
};

class Network {
  public:
    NetworkConfig config;
    std::vector<std::unique_ptr<Layer>> layers;
    std::vector<std::string> labels;  // output order of metabolite names
    InputConfig input_config;         // how tensors are assembled for this net

    Tensor4 forward(Tensor4 x, const ForwardCtx& ctx);
    void zero_grads();

    std::vector<ParamBlock> param_blocks(bool trainable_only);
    // flat snapshot of everything persistent (weights + BN statistics)
    std::vector<double> snapshot_params();
    void restore_params(const std::vector<double>& flat);

    // single input tensor -> output_dim values on the simplex
    std::vector<double> predict_values(const InputTensor& x);
    ConcentrationVector predict(const InputTensor& x);
};

// Convolutional stack: two strided convs over the frequency axis, row
// reductions until the tensor has one row, two conv+reduce passes at 256-scale
// then 512-scale channels, a 1024-wide dense layer and a softmax head.
Network build_network(const NetworkConfig& cfg, uint64_t init_seed = 0);

// --- loss / optimiser ----------------------------------------------------------

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

LossGrad mse_loss(std::span<const double> pred, std::span<const double> target);

struct AdamState {
    std::vector<double> m, v;
};

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// standard bias-corrected update at step t (t >= 1)
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               int64_t t, const AdamConfig& cfg);

// --- training ------------------------------------------------------------------

struct TrainConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    int batch_size = 64;
    int max_epochs = 200;
    double early_stop_min_delta = 1e-12;
    int early_stop_patience = 15;
    bool restore_best = true;
    uint64_t seed = 0;
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;
    double best_val_loss = 0.0;
    bool early_stopped = false;
};

struct TrainingDiverged : DivergenceError {
    TrainingDiverged(const std::string& msg, TrainHistory h)
        : DivergenceError(msg), history(std::move(h)) {}
    TrainHistory history;
};

// Minibatch ADAM over MSE between softmax outputs and normalised labels, with
// per-epoch seeded shuffling and early stopping on the validation loss.
TrainHistory train(Network& net, const Dataset& train_data, const Dataset& val_data,
                   const TrainConfig& cfg, const InputConfig& input_cfg);

// validation-style loss of the network on a dataset (inference mode)
double evaluate_loss(Network& net, const Dataset& data, const InputConfig& input_cfg);

// --- checkpoints ---------------------------------------------------------------

void save_checkpoint(const Network& net, const std::string& path);
Network load_checkpoint(const std::string& path);

}  // namespace mrs::nn
