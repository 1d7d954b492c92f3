#include "drift/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace drift::nn {

void conv2d_forward(const double* in, int C, int H, int W, const double* weight, const double* bias,
                    int OC, int K, int P, double* out) {
    const int OH = H + 2 * P - K + 1;
    const int OW = W + 2 * P - K + 1;
    for (int oc = 0; oc < OC; ++oc) {
        double* out_map = out + static_cast<std::size_t>(oc) * OH * OW;
        const double b = bias ? bias[oc] : 0.0;
        for (int i = 0; i < OH * OW; ++i) out_map[i] = b;
        for (int ic = 0; ic < C; ++ic) {
            const double* in_map = in + static_cast<std::size_t>(ic) * H * W;
            const double* w_kernel = weight + (static_cast<std::size_t>(oc) * C + ic) * K * K;
            for (int ky = 0; ky < K; ++ky) {
                for (int kx = 0; kx < K; ++kx) {
                    const double wv = w_kernel[ky * K + kx];
                    if (wv == 0.0) continue;
                    for (int oy = 0; oy < OH; ++oy) {
                        const int iy = oy + ky - P;
                        if (iy < 0 || iy >= H) continue;
                        const int ox_lo = std::max(0, P - kx);
                        const int ox_hi = std::min(OW, W + P - kx);
                        const double* src = in_map + static_cast<std::size_t>(iy) * W + (ox_lo + kx - P);
                        double* dst = out_map + static_cast<std::size_t>(oy) * OW + ox_lo;
                        for (int ox = ox_lo; ox < ox_hi; ++ox) *dst++ += wv * *src++;
                    }
                }
            }
        }
    }
}

void conv2d_backward(const double* in, int C, int H, int W, const double* weight, int OC, int K, int P,
                     const double* d_out, double* d_in, double* d_weight, double* d_bias) {
    const int OH = H + 2 * P - K + 1;
    const int OW = W + 2 * P - K + 1;
    if (d_bias) {
        for (int oc = 0; oc < OC; ++oc) {
            const double* g = d_out + static_cast<std::size_t>(oc) * OH * OW;
            double acc = 0.0;
            for (int i = 0; i < OH * OW; ++i) acc += g[i];
            d_bias[oc] += acc;
        }
    }
    for (int oc = 0; oc < OC; ++oc) {
        const double* g_map = d_out + static_cast<std::size_t>(oc) * OH * OW;
        for (int ic = 0; ic < C; ++ic) {
            const double* in_map = in + static_cast<std::size_t>(ic) * H * W;
            const double* w_kernel = weight + (static_cast<std::size_t>(oc) * C + ic) * K * K;
            double* dw_kernel =
                d_weight ? d_weight + (static_cast<std::size_t>(oc) * C + ic) * K * K : nullptr;
            double* di_map = d_in ? d_in + static_cast<std::size_t>(ic) * H * W : nullptr;
            for (int ky = 0; ky < K; ++ky) {
                for (int kx = 0; kx < K; ++kx) {
                    const double wv = w_kernel[ky * K + kx];
                    double dw_acc = 0.0;
                    for (int oy = 0; oy < OH; ++oy) {
                        const int iy = oy + ky - P;
                        if (iy < 0 || iy >= H) continue;
                        const int ox_lo = std::max(0, P - kx);
                        const int ox_hi = std::min(OW, W + P - kx);
                        const double* g = g_map + static_cast<std::size_t>(oy) * OW + ox_lo;
                        const double* src = in_map + static_cast<std::size_t>(iy) * W + (ox_lo + kx - P);
                        if (dw_kernel)
                            for (int ox = ox_lo; ox < ox_hi; ++ox) dw_acc += g[ox - ox_lo] * src[ox - ox_lo];
                        if (di_map) {
                            double* di = di_map + static_cast<std::size_t>(iy) * W + (ox_lo + kx - P);
                            for (int ox = ox_lo; ox < ox_hi; ++ox) di[ox - ox_lo] += wv * g[ox - ox_lo];
                        }
                    }
                    if (dw_kernel) dw_kernel[ky * K + kx] += dw_acc;
                }
            }
        }
    }
}

void relu_forward(const double* in, int n, double* out) {
    for (int i = 0; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void relu_backward(const double* pre, int n, const double* d_out, double* d_in) {
    for (int i = 0; i < n; ++i)
        if (pre[i] > 0.0) d_in[i] += d_out[i];
}

void maxpool2_forward(const double* in, int C, int H, int W, double* out, int* argmax) {
    if (H % 2 || W % 2) throw std::invalid_argument("maxpool2: H and W must be even");
    const int OH = H / 2, OW = W / 2;
    for (int c = 0; c < C; ++c) {
        const double* in_map = in + static_cast<std::size_t>(c) * H * W;
        double* out_map = out + static_cast<std::size_t>(c) * OH * OW;
        int* arg_map = argmax + static_cast<std::size_t>(c) * OH * OW;
        for (int oy = 0; oy < OH; ++oy) {
            for (int ox = 0; ox < OW; ++ox) {
                const int base = (2 * oy) * W + 2 * ox;
                int best = base;
                double best_v = in_map[base];
                const int cand[3] = {base + 1, base + W, base + W + 1};
                for (int k = 0; k < 3; ++k)
                    if (in_map[cand[k]] > best_v) {
                        best_v = in_map[cand[k]];
                        best = cand[k];
                    }
                out_map[oy * OW + ox] = best_v;
                arg_map[oy * OW + ox] = static_cast<int>(c) * H * W + best;
            }
        }
    }
}

void maxpool2_backward(const int* argmax, int n_out, const double* d_out, double* d_in) {
    for (int i = 0; i < n_out; ++i) d_in[argmax[i]] += d_out[i];
}

void linear_forward(const double* in, int in_dim, const double* weight, const double* bias, int out_dim,
                    double* out) {
    for (int o = 0; o < out_dim; ++o) {
        const double* w_row = weight + static_cast<std::size_t>(o) * in_dim;
        double acc = bias ? bias[o] : 0.0;
        for (int i = 0; i < in_dim; ++i) acc += w_row[i] * in[i];
        out[o] = acc;
    }
}

void linear_backward(const double* in, int in_dim, const double* weight, int out_dim, const double* d_out,
                     double* d_in, double* d_weight, double* d_bias) {
    for (int o = 0; o < out_dim; ++o) {
        const double g = d_out[o];
        if (d_bias) d_bias[o] += g;
        if (d_weight) {
            double* dw_row = d_weight + static_cast<std::size_t>(o) * in_dim;
            for (int i = 0; i < in_dim; ++i) dw_row[i] += g * in[i];
        }
        if (d_in) {
            const double* w_row = weight + static_cast<std::size_t>(o) * in_dim;
            for (int i = 0; i < in_dim; ++i) d_in[i] += g * w_row[i];
        }
    }
}

BilinearPlan make_bilinear_plan(int src, int dst) {
    if (src < 1 || dst < 1) throw std::invalid_argument("bilinear: sizes must be positive");
    BilinearPlan plan;
    plan.src = src;
    plan.dst = dst;
    plan.idx.resize(static_cast<std::size_t>(dst) * dst * 4);
    plan.tap.resize(static_cast<std::size_t>(dst) * dst * 4);
    const double scale = dst > 1 ? double(src - 1) / double(dst - 1) : 0.0;
    for (int r = 0; r < dst; ++r) {
        const double sr = r * scale;
        int r0 = static_cast<int>(sr);
        if (r0 > src - 2) r0 = std::max(0, src - 2);
        const double fr = src > 1 ? sr - r0 : 0.0;
        for (int c = 0; c < dst; ++c) {
            const double sc = c * scale;
            int c0 = static_cast<int>(sc);
            if (c0 > src - 2) c0 = std::max(0, src - 2);
            const double fc = src > 1 ? sc - c0 : 0.0;
            const int r1 = std::min(r0 + 1, src - 1);
            const int c1 = std::min(c0 + 1, src - 1);
            const std::size_t k = (static_cast<std::size_t>(r) * dst + c) * 4;
            plan.idx[k + 0] = r0 * src + c0;
            plan.idx[k + 1] = r0 * src + c1;
            plan.idx[k + 2] = r1 * src + c0;
            plan.idx[k + 3] = r1 * src + c1;
            plan.tap[k + 0] = (1 - fr) * (1 - fc);
            plan.tap[k + 1] = (1 - fr) * fc;
            plan.tap[k + 2] = fr * (1 - fc);
            plan.tap[k + 3] = fr * fc;
        }
    }
    return plan;
}

void bilinear_forward(const BilinearPlan& plan, const double* in, double* out) {
    const int n = plan.dst * plan.dst;
    for (int i = 0; i < n; ++i) {
        const std::size_t k = static_cast<std::size_t>(i) * 4;
        out[i] = plan.tap[k] * in[plan.idx[k]] + plan.tap[k + 1] * in[plan.idx[k + 1]] +
                 plan.tap[k + 2] * in[plan.idx[k + 2]] + plan.tap[k + 3] * in[plan.idx[k + 3]];
    }
}

void bilinear_backward(const BilinearPlan& plan, const double* d_out, double* d_in) {
    const int n = plan.dst * plan.dst;
    for (int i = 0; i < n; ++i) {
        const std::size_t k = static_cast<std::size_t>(i) * 4;
        d_in[plan.idx[k]] += plan.tap[k] * d_out[i];
        d_in[plan.idx[k + 1]] += plan.tap[k + 1] * d_out[i];
        d_in[plan.idx[k + 2]] += plan.tap[k + 2] * d_out[i];
        d_in[plan.idx[k + 3]] += plan.tap[k + 3] * d_out[i];
    }
}

void sigmoid_forward(const double* in, int n, double* out) {
    for (int i = 0; i < n; ++i) out[i] = 1.0 / (1.0 + std::exp(-in[i]));
}

void sigmoid_backward(const double* out, int n, const double* d_out, double* d_in) {
    for (int i = 0; i < n; ++i) d_in[i] += d_out[i] * out[i] * (1.0 - out[i]);
}

double bce_forward(const double* pred, const double* target, int n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double p = std::clamp(pred[i], kBceClampEps, 1.0 - kBceClampEps);
        acc -= target[i] * std::log(p) + (1.0 - target[i]) * std::log(1.0 - p);
    }
    return acc / n;
}

void bce_backward(const double* pred, const double* target, int n, double scale, double* d_pred) {
    const double inv_n = scale / n;
    for (int i = 0; i < n; ++i) {
        if (pred[i] < kBceClampEps || pred[i] > 1.0 - kBceClampEps) continue;  // clamped: flat
        d_pred[i] += inv_n * (-target[i] / pred[i] + (1.0 - target[i]) / (1.0 - pred[i]));
    }
}

}  // namespace drift::nn
