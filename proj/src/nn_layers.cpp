#include <algorithm>
#include <cmath>

#include "mrs/nn.hpp"

namespace mrs::nn {

nlohmann::json Layer::describe() const { return {{"kind", kind()}}; }

namespace {

// dot product with independent partial sums so the compiler can vectorise
// without reassociating a single accumulation chain
inline double dot(const double* a, const double* b, int n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    double s = (s0 + s1) + (s2 + s3);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

inline void axpy(double a, const double* x, double* y, int n) {
    for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

// one shared input row into four output rows (kernel-tap reads amortised)
inline void axpy4(double a0, double a1, double a2, double a3, const double* x, double* y0,
                  double* y1, double* y2, double* y3, int n) {
    for (int i = 0; i < n; ++i) {
        const double xv = x[i];
        y0[i] += a0 * xv;
        y1[i] += a1 * xv;
        y2[i] += a2 * xv;
        y3[i] += a3 * xv;
    }
}

// four weighted input rows into one output row
inline void gather4(double a0, double a1, double a2, double a3, const double* x0,
                    const double* x1, const double* x2, const double* x3, double* y, int n) {
    for (int i = 0; i < n; ++i) y[i] += a0 * x0[i] + a1 * x1[i] + a2 * x2[i] + a3 * x3[i];
}

// four dot products sharing one input row, two partial chains per lane
inline void dot4(const double* x, const double* g0, const double* g1, const double* g2,
                 const double* g3, int n, double* out) {
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    double b0 = 0.0, b1 = 0.0, b2 = 0.0, b3 = 0.0;
    int i = 0;
    for (; i + 2 <= n; i += 2) {
        const double x0 = x[i], x1 = x[i + 1];
        a0 += x0 * g0[i];
        b0 += x1 * g0[i + 1];
        a1 += x0 * g1[i];
        b1 += x1 * g1[i + 1];
        a2 += x0 * g2[i];
        b2 += x1 * g2[i + 1];
        a3 += x0 * g3[i];
        b3 += x1 * g3[i + 1];
    }
    if (i < n) {
        const double xv = x[i];
        a0 += xv * g0[i];
        a1 += xv * g1[i];
        a2 += xv * g2[i];
        a3 += xv * g3[i];
    }
    out[0] = a0 + b0;
    out[1] = a1 + b1;
    out[2] = a2 + b2;
    out[3] = a3 + b3;
}

}  // namespace

// --- Conv2d --------------------------------------------------------------------
//
// Convolutions run per sample over an im2col patch matrix (rows: one kernel
// tap per input channel, columns: output positions), so the hot loops are
// contiguous multiply-adds along the output axis.

Conv2d::Conv2d(int in_ch_, int out_ch_, int kh_, int kw_, int sh_, int sw_, Padding pad_)
    : in_ch(in_ch_), out_ch(out_ch_), kh(kh_), kw(kw_), sh(sh_), sw(sw_), pad(pad_) {
    if (in_ch < 1 || out_ch < 1 || kh < 1 || kw < 1 || sh < 1 || sw < 1)
        throw ShapeError("conv2d parameters must be positive");
    weight.assign(size_t(out_ch) * size_t(in_ch) * size_t(kh) * size_t(kw), 0.0);
    bias.assign(size_t(out_ch), 0.0);
    grad_weight.assign(weight.size(), 0.0);
    grad_bias.assign(bias.size(), 0.0);
}

void Conv2d::init_weights(SplitMix& rng) {
    // He-uniform over the receptive field; biases start at zero
    const double limit = std::sqrt(6.0 / (double(in_ch) * double(kh) * double(kw)));
    for (auto& w : weight) w = limit * (2.0 * rng.uniform() - 1.0);
    std::fill(bias.begin(), bias.end(), 0.0);
}

void Conv2d::pads(int in_h, int in_w, int& pt, int& pl, int& out_h, int& out_w) const {
    if (pad == Padding::Valid) {
        if (in_h < kh || in_w < kw)
            throw ShapeError("conv2d kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                             " larger than input " + std::to_string(in_h) + "x" +
                             std::to_string(in_w));
        pt = pl = 0;
        out_h = (in_h - kh) / sh + 1;
        out_w = (in_w - kw) / sw + 1;
    } else {
        out_h = (in_h + sh - 1) / sh;
        out_w = (in_w + sw - 1) / sw;
        const int total_h = std::max((out_h - 1) * sh + kh - in_h, 0);
        const int total_w = std::max((out_w - 1) * sw + kw - in_w, 0);
        // extra padding goes on the trailing side
        pt = total_h / 2;
        pl = total_w / 2;
    }
}

Shape3 Conv2d::output_shape(const Shape3& in) const {
    if (in.c != in_ch) throw ShapeError("conv2d channel mismatch");
    int pt, pl, oh, ow;
    pads(in.h, in.w, pt, pl, oh, ow);
    return {out_ch, oh, ow};
}

void Conv2d::im2col(const double* x, int in_h, int in_w, int pt, int pl, int oh, int ow,
                    double* col) const {
    // col has in_ch*kh*kw rows of oh*ow columns
    double* row = col;
    for (int ci = 0; ci < in_ch; ++ci) {
        const double* plane = x + size_t(ci) * size_t(in_h) * size_t(in_w);
        for (int u = 0; u < kh; ++u) {
            for (int v = 0; v < kw; ++v) {
                for (int r = 0; r < oh; ++r) {
                    double* out = row + size_t(r) * size_t(ow);
                    const int ih = r * sh + u - pt;
                    if (ih < 0 || ih >= in_h) {
                        std::fill(out, out + ow, 0.0);
                        continue;
                    }
                    const double* xrow = plane + size_t(ih) * size_t(in_w);
                    const int off = v - pl;
                    // output columns whose tap stays inside the row
                    const int q_lo = std::min(ow, std::max(0, (-off + sw - 1) / sw));
                    const int q_hi = std::min(ow - 1, (in_w - 1 - off) / sw);
                    for (int q = 0; q < q_lo; ++q) out[q] = 0.0;
                    if (sw == 1) {
                        for (int q = q_lo; q <= q_hi; ++q) out[q] = xrow[q + off];
                    } else {
                        for (int q = q_lo; q <= q_hi; ++q) out[q] = xrow[q * sw + off];
                    }
                    for (int q = q_hi + 1; q < ow; ++q) out[q] = 0.0;
                }
                row += size_t(oh) * size_t(ow);
            }
        }
    }
}

Tensor4 Conv2d::forward(Tensor4 x, const ForwardCtx& ctx) {
    if (x.c != in_ch) throw ShapeError("conv2d channel mismatch");
    int pt, pl, oh, ow;
    pads(x.h, x.w, pt, pl, oh, ow);
    const int K = in_ch * kh * kw;
    const int M = oh * ow;

    Tensor4 y(x.n, out_ch, oh, ow);
    auto gemm_rows = [&](const double* col, double* yp, int co_begin, int co_end) {
        // y[co] = bias[co] + sum_k W[co][k] * col[k], four channels per pass
        int co = co_begin;
        for (; co + 4 <= co_end; co += 4) {
            double* y0 = yp + size_t(co - co_begin) * size_t(M);
            double* y1 = y0 + size_t(M);
            double* y2 = y1 + size_t(M);
            double* y3 = y2 + size_t(M);
            for (int c = 0; c < 4; ++c)
                std::fill(y0 + size_t(c) * size_t(M), y0 + size_t(c + 1) * size_t(M),
                          bias[size_t(co + c)]);
            const double* w0 = weight.data() + size_t(co) * size_t(K);
            for (int k = 0; k < K; ++k)
                axpy4(w0[k], w0[k + K], w0[k + 2 * K], w0[k + 3 * K],
                      col + size_t(k) * size_t(M), y0, y1, y2, y3, M);
        }
        for (; co < co_end; ++co) {
            double* yrow = yp + size_t(co - co_begin) * size_t(M);
            std::fill(yrow, yrow + M, bias[size_t(co)]);
            const double* wrow = weight.data() + size_t(co) * size_t(K);
            for (int k = 0; k < K; ++k)
                axpy(wrow[k], col + size_t(k) * size_t(M), yrow, M);
        }
    };

    if (x.n == 1) {
        // single-sample path: share one patch matrix, split output channels
        std::vector<double> col(size_t(K) * size_t(M));
        im2col(x.at(0, 0), x.h, x.w, pt, pl, oh, ow, col.data());
        const int chunk = std::max(4, (out_ch + 4 * worker_count() - 1) / (4 * worker_count()) * 4);
        const int64_t chunks = (out_ch + chunk - 1) / chunk;
        parallel_for(0, chunks, [&](int64_t b) {
            const int begin = int(b) * chunk;
            const int end = std::min(out_ch, begin + chunk);
            gemm_rows(col.data(), y.at(0, begin), begin, end);
        });
    } else {
        parallel_for(0, x.n, [&](int64_t i) {
            std::vector<double> col(size_t(K) * size_t(M));
            im2col(x.at(int(i), 0), x.h, x.w, pt, pl, oh, ow, col.data());
            gemm_rows(col.data(), y.at(int(i), 0), 0, out_ch);
        });
    }
    if (ctx.train) x_ = std::move(x);
    return y;
}

Tensor4 Conv2d::backward(Tensor4 g) {
    const Tensor4& x = x_;
    if (x.n == 0) throw ShapeError("conv2d backward before forward");
    int pt, pl, oh, ow;
    pads(x.h, x.w, pt, pl, oh, ow);
    if (g.n != x.n || g.c != out_ch || g.h != oh || g.w != ow)
        throw ShapeError("conv2d upstream gradient shape mismatch");
    const int K = in_ch * kh * kw;
    const int M = oh * ow;

    Tensor4 gx(x.n, x.c, x.h, x.w);
    // per-sample weight/bias contributions, reduced in sample order afterwards
    std::vector<double> gw_parts(size_t(x.n) * weight.size());
    std::vector<double> gb_parts(size_t(x.n) * bias.size());

    parallel_for(0, x.n, [&](int64_t i) {
        std::vector<double> col(size_t(K) * size_t(M));
        im2col(x.at(int(i), 0), x.h, x.w, pt, pl, oh, ow, col.data());

        double* gw = gw_parts.data() + size_t(i) * weight.size();
        double* gb = gb_parts.data() + size_t(i) * bias.size();
        std::vector<double> gcol(size_t(K) * size_t(M), 0.0);
        int co = 0;
        for (; co + 4 <= out_ch; co += 4) {
            const double* g0 = g.at(int(i), co);
            const double* g1 = g.at(int(i), co + 1);
            const double* g2 = g.at(int(i), co + 2);
            const double* g3 = g.at(int(i), co + 3);
            for (int c = 0; c < 4; ++c) {
                const double* gp = g.at(int(i), co + c);
                double b = 0.0;
                for (int m = 0; m < M; ++m) b += gp[m];
                gb[co + c] = b;
            }
            const double* w0 = weight.data() + size_t(co) * size_t(K);
            for (int k = 0; k < K; ++k) {
                const double* colrow = col.data() + size_t(k) * size_t(M);
                double partial[4];
                dot4(colrow, g0, g1, g2, g3, M, partial);
                gw[size_t(co) * size_t(K) + size_t(k)] = partial[0];
                gw[size_t(co + 1) * size_t(K) + size_t(k)] = partial[1];
                gw[size_t(co + 2) * size_t(K) + size_t(k)] = partial[2];
                gw[size_t(co + 3) * size_t(K) + size_t(k)] = partial[3];
                gather4(w0[k], w0[k + K], w0[k + 2 * K], w0[k + 3 * K], g0, g1, g2, g3,
                        gcol.data() + size_t(k) * size_t(M), M);
            }
        }
        for (; co < out_ch; ++co) {
            const double* gp = g.at(int(i), co);
            double b = 0.0;
            for (int m = 0; m < M; ++m) b += gp[m];
            gb[co] = b;
            const double* wrow = weight.data() + size_t(co) * size_t(K);
            double* gwrow = gw + size_t(co) * size_t(K);
            for (int k = 0; k < K; ++k) {
                const double* colrow = col.data() + size_t(k) * size_t(M);
                gwrow[k] = dot(gp, colrow, M);
                if (wrow[k] != 0.0)
                    axpy(wrow[k], gp, gcol.data() + size_t(k) * size_t(M), M);
            }
        }

        // col2im: scatter the patch gradients back onto the input plane
        double* gxp = gx.at(int(i), 0);
        const double* row = gcol.data();
        for (int ci = 0; ci < in_ch; ++ci) {
            double* plane = gxp + size_t(ci) * size_t(x.h) * size_t(x.w);
            for (int u = 0; u < kh; ++u) {
                for (int v = 0; v < kw; ++v) {
                    for (int r = 0; r < oh; ++r) {
                        const int ih = r * sh + u - pt;
                        if (ih >= 0 && ih < x.h) {
                            double* xrow = plane + size_t(ih) * size_t(x.w);
                            const double* grow = row + size_t(r) * size_t(ow);
                            const int off = v - pl;
                            const int q_lo = std::min(ow, std::max(0, (-off + sw - 1) / sw));
                            const int q_hi = std::min(ow - 1, (x.w - 1 - off) / sw);
                            for (int q = q_lo; q <= q_hi; ++q) xrow[q * sw + off] += grow[q];
                        }
                    }
                    row += size_t(oh) * size_t(ow);
                }
            }
        }
    });

    for (int i = 0; i < x.n; ++i) {
        const double* gw = gw_parts.data() + size_t(i) * weight.size();
        for (size_t k = 0; k < weight.size(); ++k) grad_weight[k] += gw[k];
        const double* gb = gb_parts.data() + size_t(i) * bias.size();
        for (size_t k = 0; k < bias.size(); ++k) grad_bias[k] += gb[k];
    }
    return gx;
}

std::vector<ParamBlock> Conv2d::params() {
    return {{"weight", &weight, &grad_weight, true}, {"bias", &bias, &grad_bias, true}};
}

nlohmann::json Conv2d::describe() const {
    return {{"kind", kind()},   {"in_ch", in_ch}, {"out_ch", out_ch},
            {"kh", kh},         {"kw", kw},       {"sh", sh},
            {"sw", sw},         {"pad", pad == Padding::Same ? "same" : "valid"}};
}

// --- ReLU ----------------------------------------------------------------------

Tensor4 ReLU::forward(Tensor4 x, const ForwardCtx& ctx) {
    if (ctx.train) {
        mask_.resize(x.count());
        for (size_t k = 0; k < x.count(); ++k) {
            const bool pos = x.v[k] > 0.0;
            mask_[k] = pos;
            if (!pos) x.v[k] = 0.0;
        }
    } else {
        for (auto& v : x.v) v = v > 0.0 ? v : 0.0;
    }
    return x;
}

Tensor4 ReLU::backward(Tensor4 g) {
    if (mask_.size() != g.count()) throw ShapeError("relu backward shape mismatch");
    for (size_t k = 0; k < g.count(); ++k)
        if (!mask_[k]) g.v[k] = 0.0;
    return g;
}

// --- BatchNorm -----------------------------------------------------------------

BatchNorm::BatchNorm(int channels_, double momentum_, double eps_)
    : channels(channels_), momentum(momentum_), eps(eps_) {
    gamma.assign(size_t(channels), 1.0);
    beta.assign(size_t(channels), 0.0);
    running_mean.assign(size_t(channels), 0.0);
    running_var.assign(size_t(channels), 1.0);
    grad_gamma.assign(size_t(channels), 0.0);
    grad_beta.assign(size_t(channels), 0.0);
}

Tensor4 BatchNorm::forward(Tensor4 x, const ForwardCtx& ctx) {
    if (x.c != channels) throw ShapeError("batchnorm channel mismatch");
    const size_t plane = x.plane();
    if (!ctx.train) {
        parallel_for(0, channels, [&](int64_t ci) {
            const double scale = gamma[size_t(ci)] / std::sqrt(running_var[size_t(ci)] + eps);
            const double shift = beta[size_t(ci)] - scale * running_mean[size_t(ci)];
            for (int i = 0; i < x.n; ++i) {
                double* xp = x.at(i, int(ci));
                for (size_t k = 0; k < plane; ++k) xp[k] = scale * xp[k] + shift;
            }
        });
        return x;
    }

    if (x.n == 1) throw DegenerateBatch("batch norm needs a batch of at least 2 in train mode");
    const double count = double(x.n) * double(plane);
    xhat_ = Tensor4(x.n, x.c, x.h, x.w);
    inv_std_.assign(size_t(channels), 0.0);
    parallel_for(0, channels, [&](int64_t ci) {
        double sum = 0.0, sq = 0.0;
        for (int i = 0; i < x.n; ++i) {
            const double* xp = x.at(i, int(ci));
            for (size_t k = 0; k < plane; ++k) {
                sum += xp[k];
                sq += xp[k] * xp[k];
            }
        }
        const double mean = sum / count;
        const double var = std::max(sq / count - mean * mean, 0.0);
        const double istd = 1.0 / std::sqrt(var + eps);
        inv_std_[size_t(ci)] = istd;
        const double gam = gamma[size_t(ci)], bet = beta[size_t(ci)];
        for (int i = 0; i < x.n; ++i) {
            double* xp = x.at(i, int(ci));
            double* hp = xhat_.at(i, int(ci));
            for (size_t k = 0; k < plane; ++k) {
                const double h = (xp[k] - mean) * istd;
                hp[k] = h;
                xp[k] = gam * h + bet;
            }
        }
        running_mean[size_t(ci)] = momentum * running_mean[size_t(ci)] + (1.0 - momentum) * mean;
        running_var[size_t(ci)] = momentum * running_var[size_t(ci)] + (1.0 - momentum) * var;
    });
    return x;
}

Tensor4 BatchNorm::backward(Tensor4 g) {
    if (xhat_.count() != g.count()) throw ShapeError("batchnorm backward shape mismatch");
    const size_t plane = g.plane();
    const double count = double(g.n) * double(plane);
    parallel_for(0, channels, [&](int64_t ci) {
        double sum_g = 0.0, sum_gh = 0.0;
        for (int i = 0; i < g.n; ++i) {
            const double* gp = g.at(i, int(ci));
            const double* hp = xhat_.at(i, int(ci));
            for (size_t k = 0; k < plane; ++k) {
                sum_g += gp[k];
                sum_gh += gp[k] * hp[k];
            }
        }
        grad_beta[size_t(ci)] += sum_g;
        grad_gamma[size_t(ci)] += sum_gh;
        const double scale = gamma[size_t(ci)] * inv_std_[size_t(ci)] / count;
        for (int i = 0; i < g.n; ++i) {
            double* gp = g.at(i, int(ci));
            const double* hp = xhat_.at(i, int(ci));
            for (size_t k = 0; k < plane; ++k)
                gp[k] = scale * (count * gp[k] - sum_g - hp[k] * sum_gh);
        }
    });
    return g;
}

std::vector<ParamBlock> BatchNorm::params() {
    return {{"gamma", &gamma, &grad_gamma, true},
            {"beta", &beta, &grad_beta, true},
            {"running_mean", &running_mean, nullptr, false},
            {"running_var", &running_var, nullptr, false}};
}

nlohmann::json BatchNorm::describe() const {
    return {{"kind", kind()}, {"channels", channels}, {"momentum", momentum}, {"eps", eps}};
}

// --- Dropout -------------------------------------------------------------------

Dropout::Dropout(double rate_) : rate(rate_) {
    if (rate < 0.0 || rate >= 1.0) throw Error("dropout rate must be in [0, 1)");
}

Tensor4 Dropout::forward(Tensor4 x, const ForwardCtx& ctx) {
    if (!ctx.train || rate == 0.0) return x;
    const double inv_keep = 1.0 / (1.0 - rate);
    keep_.resize(x.count());
    const size_t per_sample = x.count() / size_t(x.n);
    parallel_for(0, x.n, [&](int64_t i) {
        // one deterministic stream per (salt, layer, sample)
        SplitMix rng(ctx.salt, uint64_t(index), uint64_t(i));
        uint8_t* kp = keep_.data() + size_t(i) * per_sample;
        double* xp = x.v.data() + size_t(i) * per_sample;
        for (size_t k = 0; k < per_sample; ++k) {
            const bool keep = rng.uniform() >= rate;
            kp[k] = keep;
            xp[k] *= double(keep) * inv_keep;
        }
    });
    return x;
}

Tensor4 Dropout::backward(Tensor4 g) {
    if (rate == 0.0) return g;
    if (keep_.size() != g.count()) throw ShapeError("dropout backward shape mismatch");
    const double inv_keep = 1.0 / (1.0 - rate);
    for (size_t k = 0; k < g.count(); ++k) g.v[k] *= double(keep_[k]) * inv_keep;
    return g;
}

nlohmann::json Dropout::describe() const { return {{"kind", kind()}, {"rate", rate}}; }

// --- MaxPool -------------------------------------------------------------------

MaxPool::MaxPool(int width_) : width(width_) {
    if (width < 1) throw ShapeError("maxpool width must be positive");
}

Shape3 MaxPool::output_shape(const Shape3& in) const {
    if (in.w < width) throw ShapeError("maxpool window wider than input");
    return {in.c, in.h, (in.w - width) / width + 1};
}

Tensor4 MaxPool::forward(Tensor4 x, const ForwardCtx& ctx) {
    const Shape3 out = output_shape({x.c, x.h, x.w});
    Tensor4 y(x.n, out.c, out.h, out.w);
    batch_ = x.n;
    in_shape_ = {x.c, x.h, x.w};
    argmax_.assign(y.count(), 0);
    parallel_for(0, int64_t(x.n) * x.c, [&](int64_t idx) {
        const int i = int(idx / x.c);
        const int ci = int(idx % x.c);
        const double* xp = x.at(i, ci);
        double* yp = y.at(i, ci);
        int* ap = argmax_.data() + (size_t(i) * size_t(x.c) + size_t(ci)) * y.plane();
        for (int r = 0; r < out.h; ++r) {
            for (int q = 0; q < out.w; ++q) {
                const int base = r * x.w + q * width;
                int best = base;
                double best_v = xp[base];
                for (int v = 1; v < width; ++v) {
                    if (xp[base + v] > best_v) {  // ties keep the first index
                        best_v = xp[base + v];
                        best = base + v;
                    }
                }
                yp[size_t(r) * size_t(out.w) + size_t(q)] = best_v;
                ap[size_t(r) * size_t(out.w) + size_t(q)] = best;
            }
        }
    });
    (void)ctx;
    return y;
}

Tensor4 MaxPool::backward(Tensor4 g) {
    if (g.n != batch_) throw ShapeError("maxpool backward shape mismatch");
    Tensor4 gx(batch_, in_shape_.c, in_shape_.h, in_shape_.w);
    parallel_for(0, int64_t(g.n) * g.c, [&](int64_t idx) {
        const int i = int(idx / g.c);
        const int ci = int(idx % g.c);
        const double* gp = g.at(i, ci);
        double* gxp = gx.at(i, ci);
        const int* ap = argmax_.data() + (size_t(i) * size_t(g.c) + size_t(ci)) * g.plane();
        for (size_t k = 0; k < g.plane(); ++k) gxp[ap[k]] += gp[k];
    });
    return gx;
}

nlohmann::json MaxPool::describe() const { return {{"kind", kind()}, {"width", width}}; }

// --- Dense ---------------------------------------------------------------------

Dense::Dense(int in_features_, int out_features_)
    : in_features(in_features_), out_features(out_features_) {
    if (in_features < 1 || out_features < 1) throw ShapeError("dense dimensions must be positive");
    weight.assign(size_t(out_features) * size_t(in_features), 0.0);
    bias.assign(size_t(out_features), 0.0);
    grad_weight.assign(weight.size(), 0.0);
    grad_bias.assign(bias.size(), 0.0);
}

void Dense::init_weights(SplitMix& rng) {
    const double limit = std::sqrt(6.0 / double(in_features));
    for (auto& w : weight) w = limit * (2.0 * rng.uniform() - 1.0);
    std::fill(bias.begin(), bias.end(), 0.0);
}

Shape3 Dense::output_shape(const Shape3& in) const {
    if (in.c * in.h * in.w != in_features) throw ShapeError("dense input feature mismatch");
    return {out_features, 1, 1};
}

Tensor4 Dense::forward(Tensor4 x, const ForwardCtx& ctx) {
    if (int(x.count()) / x.n != in_features) throw ShapeError("dense input feature mismatch");
    Tensor4 y(x.n, out_features, 1, 1);
    parallel_for(0, x.n, [&](int64_t i) {
        const double* xp = x.v.data() + size_t(i) * size_t(in_features);
        double* yp = y.v.data() + size_t(i) * size_t(out_features);
        for (int o = 0; o < out_features; ++o)
            yp[o] = bias[size_t(o)] + dot(weight.data() + size_t(o) * size_t(in_features), xp,
                                          in_features);
    });
    if (ctx.train) x_ = std::move(x);
    return y;
}

Tensor4 Dense::backward(Tensor4 g) {
    const Tensor4& x = x_;
    if (x.n == 0) throw ShapeError("dense backward before forward");
    if (g.n != x.n || int(g.count()) / g.n != out_features)
        throw ShapeError("dense upstream gradient shape mismatch");

    parallel_for(0, out_features, [&](int64_t o) {
        double* gwrow = grad_weight.data() + size_t(o) * size_t(in_features);
        double gb = 0.0;
        for (int i = 0; i < x.n; ++i) {
            const double gv = g.v[size_t(i) * size_t(out_features) + size_t(o)];
            gb += gv;
            if (gv == 0.0) continue;
            axpy(gv, x.v.data() + size_t(i) * size_t(in_features), gwrow, in_features);
        }
        grad_bias[size_t(o)] += gb;
    });

    Tensor4 gx(x.n, x.c, x.h, x.w);
    parallel_for(0, x.n, [&](int64_t i) {
        double* gxp = gx.v.data() + size_t(i) * size_t(in_features);
        const double* gp = g.v.data() + size_t(i) * size_t(out_features);
        for (int o = 0; o < out_features; ++o) {
            if (gp[o] == 0.0) continue;
            axpy(gp[o], weight.data() + size_t(o) * size_t(in_features), gxp, in_features);
        }
    });
    return gx;
}

std::vector<ParamBlock> Dense::params() {
    return {{"weight", &weight, &grad_weight, true}, {"bias", &bias, &grad_bias, true}};
}

nlohmann::json Dense::describe() const {
    return {{"kind", kind()}, {"in_features", in_features}, {"out_features", out_features}};
}

// --- Softmax -------------------------------------------------------------------

Tensor4 Softmax::forward(Tensor4 x, const ForwardCtx& ctx) {
    const size_t k = x.count() / size_t(x.n);
    for (int i = 0; i < x.n; ++i) {
        double* xp = x.v.data() + size_t(i) * k;
        double mx = xp[0];
        for (size_t j = 1; j < k; ++j) mx = std::max(mx, xp[j]);
        double sum = 0.0;
        for (size_t j = 0; j < k; ++j) {
            xp[j] = std::exp(xp[j] - mx);
            sum += xp[j];
        }
        for (size_t j = 0; j < k; ++j) xp[j] /= sum;
    }
    if (ctx.train) y_ = x;
    return x;
}

Tensor4 Softmax::backward(Tensor4 g) {
    if (y_.count() != g.count()) throw ShapeError("softmax backward shape mismatch");
    const size_t k = g.count() / size_t(g.n);
    for (int i = 0; i < g.n; ++i) {
        const double* yp = y_.v.data() + size_t(i) * k;
        double* gp = g.v.data() + size_t(i) * k;
        double dotgy = 0.0;
        for (size_t j = 0; j < k; ++j) dotgy += gp[j] * yp[j];
        for (size_t j = 0; j < k; ++j) gp[j] = yp[j] * (gp[j] - dotgy);
    }
    return g;
}

}  // namespace mrs::nn
