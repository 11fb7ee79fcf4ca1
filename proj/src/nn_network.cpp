#include <cmath>
#include <cstring>

#include "mrs/io.hpp"
#include "mrs/nn.hpp"

namespace mrs::nn {

const char* size_name(SizeVariant v) {
    switch (v) {
        case SizeVariant::Small: return "small";
        case SizeVariant::Medium: return "medium";
        case SizeVariant::Large: return "large";
    }
    return "?";
}

SizeVariant size_from_name(const std::string& name) {
    if (name == "small") return SizeVariant::Small;
    if (name == "medium") return SizeVariant::Medium;
    if (name == "large") return SizeVariant::Large;
    throw Error("unknown network size: " + name);
}

const char* reduction_name(ReductionVariant v) {
    return v == ReductionVariant::Strided ? "strided" : "pooling";
}

ReductionVariant reduction_from_name(const std::string& name) {
    if (name == "strided") return ReductionVariant::Strided;
    if (name == "pooling") return ReductionVariant::Pooling;
    throw Error("unknown reduction variant: " + name);
}

namespace {

int scaled(int channels, double scale) {
    return std::max(1, int(std::ceil(double(channels) * scale)));
}

struct Builder {
    Network net;
    Shape3 shape;

    void add(std::unique_ptr<Layer> layer) {
        layer->index = int(net.layers.size());
        try {
            shape = layer->output_shape(shape);
        } catch (const ShapeError& e) {
            throw ArchitectureError("input too small for the layer stack: " +
                                    std::string(e.what()));
        }
        if (shape.c < 1 || shape.h < 1 || shape.w < 1)
            throw ArchitectureError("layer " + layer->kind() + " reduces the tensor to nothing");
        net.layers.push_back(std::move(layer));
    }

    void conv(int out_ch, int kh, int kw, int sh, int sw, Padding pad, double dropout,
              bool batch_norm = false) {
        add(std::make_unique<Conv2d>(shape.c, out_ch, kh, kw, sh, sw, pad));
        add(std::make_unique<ReLU>());
        if (batch_norm) add(std::make_unique<BatchNorm>(out_ch));
        add(std::make_unique<Dropout>(dropout));
    }
};

}  // namespace

Network build_network(const NetworkConfig& cfg, uint64_t init_seed) {
    if (cfg.input_rows < 1 || cfg.input_rows > 9)
        throw ArchitectureError("input rows must be in [1, 9]");
    if (cfg.input_cols < 1) throw ArchitectureError("input cols must be positive");
    if (cfg.output_dim < 1) throw ArchitectureError("output dim must be positive");
    if (!(cfg.channel_scale > 0.0 && cfg.channel_scale <= 1.0))
        throw ArchitectureError("channel scale must be in (0, 1]");

    int k1 = 7, k2 = 5, red1_w = 3;
    switch (cfg.size) {
        case SizeVariant::Small: break;
        case SizeVariant::Medium: k1 = 9; k2 = 7; red1_w = 5; break;
        case SizeVariant::Large: k1 = 16; k2 = 8; red1_w = 7; break;
    }
    const int c1 = scaled(256, cfg.channel_scale);
    const int c2 = scaled(512, cfg.channel_scale);

    Builder b;
    b.net.config = cfg;
    b.shape = {1, cfg.input_rows, cfg.input_cols};

    b.conv(c1, 1, k1, 1, 2, Padding::Valid, 0.4, /*batch_norm=*/true);
    b.conv(c1, 1, k2, 1, 2, Padding::Valid, 0.4);

    // row-combining reductions: height-min(3, rows) kernels until one row
    // remains; a one-row input instead gets a single width-3 pass
    if (cfg.input_rows == 1) {
        b.conv(c1, 1, 3, 1, 1, Padding::Valid, 0.25);
    } else {
        while (b.shape.h > 1) {
            const int kh = std::min(3, b.shape.h);
            b.conv(c1, kh, red1_w, 1, 1, Padding::Valid, 0.25);
        }
    }

    const bool pooling = cfg.reduction == ReductionVariant::Pooling;
    for (int c : {c1, c2}) {
        for (int rep = 0; rep < 2; ++rep) {
            b.conv(c, 1, 3, 1, 1, Padding::Same, 0.25);
            if (pooling) {
                b.conv(c, 1, 3, 1, 1, Padding::Valid, 0.25);
                b.add(std::make_unique<MaxPool>(3));
            } else {
                b.conv(c, 1, 3, 1, 3, Padding::Valid, 0.25);
            }
        }
    }

    b.add(std::make_unique<Dense>(b.shape.c * b.shape.h * b.shape.w, 1024));
    b.add(std::make_unique<Dense>(1024, cfg.output_dim));
    b.add(std::make_unique<Softmax>());

    for (auto& layer : b.net.layers) {
        SplitMix rng(init_seed, 0x494e4954ULL, uint64_t(layer->index));
        layer->init_weights(rng);
    }
    return std::move(b.net);
}

Tensor4 Network::forward(Tensor4 x, const ForwardCtx& ctx) {
    for (auto& layer : layers) x = layer->forward(std::move(x), ctx);
    return x;
}

void Network::zero_grads() {
    for (auto& layer : layers)
        for (auto& block : layer->params())
            if (block.grads) std::fill(block.grads->begin(), block.grads->end(), 0.0);
}

std::vector<ParamBlock> Network::param_blocks(bool trainable_only) {
    std::vector<ParamBlock> out;
    for (auto& layer : layers)
        for (auto& block : layer->params())
            if (!trainable_only || block.trainable) out.push_back(block);
    return out;
}

std::vector<double> Network::snapshot_params() {
    std::vector<double> flat;
    for (auto& block : param_blocks(false))
        flat.insert(flat.end(), block.values->begin(), block.values->end());
    return flat;
}

void Network::restore_params(const std::vector<double>& flat) {
    size_t pos = 0;
    for (auto& block : param_blocks(false)) {
        if (pos + block.values->size() > flat.size())
            throw ShapeError("parameter snapshot too short");
        std::copy(flat.begin() + long(pos), flat.begin() + long(pos + block.values->size()),
                  block.values->begin());
        pos += block.values->size();
    }
    if (pos != flat.size()) throw ShapeError("parameter snapshot size mismatch");
}

std::vector<double> Network::predict_values(const InputTensor& x) {
    if (x.rows != config.input_rows || x.bins != config.input_cols)
        throw ShapeError("input tensor is " + std::to_string(x.rows) + "x" +
                         std::to_string(x.bins) + ", network expects " +
                         std::to_string(config.input_rows) + "x" +
                         std::to_string(config.input_cols));
    Tensor4 t(1, 1, x.rows, x.bins);
    t.v = x.data;
    Tensor4 y = forward(std::move(t), ForwardCtx{.train = false});
    return y.v;
}

ConcentrationVector Network::predict(const InputTensor& x) {
    const auto values = predict_values(x);
    ConcentrationVector out;
    for (size_t i = 0; i < values.size(); ++i) {
        const std::string name =
            i < labels.size() ? labels[i] : "output" + std::to_string(i);
        out[name] = values[i];
    }
    return out;
}

// --- checkpoints ----------------------------------------------------------------

namespace {
constexpr char kNetMagic[8] = {'M', 'R', 'S', 'N', 'E', 'T', '1', '\0'};
constexpr uint32_t kNetVersion = 1;

std::unique_ptr<Layer> layer_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "conv2d")
        return std::make_unique<Conv2d>(j.at("in_ch").get<int>(), j.at("out_ch").get<int>(),
                                        j.at("kh").get<int>(), j.at("kw").get<int>(),
                                        j.at("sh").get<int>(), j.at("sw").get<int>(),
                                        j.at("pad").get<std::string>() == "same" ? Padding::Same
                                                                                 : Padding::Valid);
    if (kind == "relu") return std::make_unique<ReLU>();
    if (kind == "batchnorm")
        return std::make_unique<BatchNorm>(j.at("channels").get<int>(),
                                           j.at("momentum").get<double>(),
                                           j.at("eps").get<double>());
    if (kind == "dropout") return std::make_unique<Dropout>(j.at("rate").get<double>());
    if (kind == "maxpool") return std::make_unique<MaxPool>(j.at("width").get<int>());
    if (kind == "dense")
        return std::make_unique<Dense>(j.at("in_features").get<int>(),
                                       j.at("out_features").get<int>());
    if (kind == "softmax") return std::make_unique<Softmax>();
    throw Error("unknown layer kind in checkpoint: " + kind);
}

}  // namespace

void save_checkpoint(const Network& net, const std::string& path) {
    nlohmann::json header;
    header["config"] = {{"size", size_name(net.config.size)},
                        {"reduction", reduction_name(net.config.reduction)},
                        {"input_rows", net.config.input_rows},
                        {"input_cols", net.config.input_cols},
                        {"output_dim", net.config.output_dim},
                        {"channel_scale", net.config.channel_scale}};
    header["labels"] = net.labels;
    {
        nlohmann::json in;
        in["acquisitions"] = nlohmann::json::array();
        for (auto a : net.input_config.acquisitions) in["acquisitions"].push_back(acquisition_name(a));
        in["components"] = nlohmann::json::array();
        for (auto c : net.input_config.components) in["components"].push_back(component_name(c));
        in["window"] = {{"high_ppm", net.input_config.window.high_ppm},
                        {"low_ppm", net.input_config.window.low_ppm},
                        {"bins", net.input_config.window.bins}};
        header["input"] = std::move(in);
    }

    uint64_t offset = 0;
    header["layers"] = nlohmann::json::array();
    for (const auto& layer : net.layers) {
        nlohmann::json jl = layer->describe();
        nlohmann::json blocks = nlohmann::json::array();
        for (auto& block : const_cast<Layer&>(*layer).params()) {
            blocks.push_back({{"name", block.name},
                              {"offset", offset},
                              {"count", block.values->size()}});
            offset += block.values->size();
        }
        jl["blocks"] = std::move(blocks);
        header["layers"].push_back(std::move(jl));
    }
    const std::string htext = header.dump();

    io::Writer w(path);
    w.magic(kNetMagic);
    w.u32(kNetVersion);
    w.u64(htext.size());
    w.bytes(htext.data(), htext.size());
    for (const auto& layer : net.layers)
        for (auto& block : const_cast<Layer&>(*layer).params()) w.f64_array(*block.values);
    w.close();
}

Network load_checkpoint(const std::string& path) {
    io::Reader r(path);
    r.expect_magic(kNetMagic);
    const uint32_t version = r.u32();
    if (version != kNetVersion)
        throw VersionError("unsupported checkpoint version " + std::to_string(version) + " in " +
                           path);
    const uint64_t hlen = r.u64();
    const size_t hoff = r.offset();

    Network net;
    try {
        const nlohmann::json header = nlohmann::json::parse(r.str(hlen));
        const auto& jc = header.at("config");
        net.config.size = size_from_name(jc.at("size").get<std::string>());
        net.config.reduction = reduction_from_name(jc.at("reduction").get<std::string>());
        net.config.input_rows = jc.at("input_rows").get<int>();
        net.config.input_cols = jc.at("input_cols").get<int>();
        net.config.output_dim = jc.at("output_dim").get<int>();
        net.config.channel_scale = jc.at("channel_scale").get<double>();
        net.labels = header.at("labels").get<std::vector<std::string>>();
        const auto& ji = header.at("input");
        for (const auto& a : ji.at("acquisitions"))
            net.input_config.acquisitions.push_back(acquisition_from_name(a.get<std::string>()));
        for (const auto& c : ji.at("components"))
            net.input_config.components.push_back(component_from_name(c.get<std::string>()));
        net.input_config.window.high_ppm = ji.at("window").at("high_ppm").get<double>();
        net.input_config.window.low_ppm = ji.at("window").at("low_ppm").get<double>();
        net.input_config.window.bins = ji.at("window").at("bins").get<int>();

        for (const auto& jl : header.at("layers")) {
            auto layer = layer_from_json(jl);
            layer->index = int(net.layers.size());
            auto blocks = layer->params();
            const auto& jblocks = jl.at("blocks");
            if (jblocks.size() != blocks.size())
                throw FormatError("checkpoint layer block count mismatch", hoff);
            for (size_t i = 0; i < blocks.size(); ++i) {
                const size_t count = jblocks[i].at("count").get<size_t>();
                if (count != blocks[i].values->size())
                    throw FormatError("checkpoint block size mismatch for " + blocks[i].name,
                                      hoff);
            }
            net.layers.push_back(std::move(layer));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad checkpoint header: ") + e.what(), hoff);
    }

    for (auto& layer : net.layers)
        for (auto& block : layer->params()) *block.values = r.f64_array(block.values->size());
    r.expect_eof();
    return net;
}

}  // namespace mrs::nn
