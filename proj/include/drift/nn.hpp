#pragma once

#include <vector>

namespace drift::nn {

// All ops are stride-1 and run on row-major buffers. Gradient outputs are
// accumulated (+=) so callers can sum over a batch; pass nullptr to skip one.

// square kernel K, zero padding P; output is OC x OH x OW with OH = H + 2P - K + 1
void conv2d_forward(const double* in, int C, int H, int W, const double* weight, const double* bias,
                    int OC, int K, int P, double* out);
void conv2d_backward(const double* in, int C, int H, int W, const double* weight, int OC, int K, int P,
                     const double* d_out, double* d_in, double* d_weight, double* d_bias);

void relu_forward(const double* in, int n, double* out);
void relu_backward(const double* pre, int n, const double* d_out, double* d_in);  // accumulates

// 2x2 max pool, H and W even; argmax stores the flat input index per output cell
void maxpool2_forward(const double* in, int C, int H, int W, double* out, int* argmax);
void maxpool2_backward(const int* argmax, int n_out, const double* d_out, double* d_in);  // accumulates

void linear_forward(const double* in, int in_dim, const double* weight, const double* bias, int out_dim,
                    double* out);
void linear_backward(const double* in, int in_dim, const double* weight, int out_dim, const double* d_out,
                     double* d_in, double* d_weight, double* d_bias);

// Precomputed align-corners bilinear interpolation from src x src to dst x dst.
struct BilinearPlan {
    int src = 0;
    int dst = 0;
    std::vector<int> idx;     // 4 source indices per output pixel
    std::vector<double> tap;  // 4 weights per output pixel, summing to 1
};
BilinearPlan make_bilinear_plan(int src, int dst);
void bilinear_forward(const BilinearPlan& plan, const double* in, double* out);
void bilinear_backward(const BilinearPlan& plan, const double* d_out, double* d_in);  // accumulates

void sigmoid_forward(const double* in, int n, double* out);
void sigmoid_backward(const double* out, int n, const double* d_out, double* d_in);  // accumulates

// Mean binary cross-entropy with probability clamp to [eps, 1-eps].
inline constexpr double kBceClampEps = 1e-6;
double bce_forward(const double* pred, const double* target, int n);
// gradient w.r.t. pred, scaled by `scale` (use 1/batch for batch means); accumulates
void bce_backward(const double* pred, const double* target, int n, double scale, double* d_pred);

}  // namespace drift::nn
