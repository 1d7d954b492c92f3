#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "drift/image.hpp"
#include "drift/nn.hpp"
#include "drift/preprocess.hpp"
#include "drift/tensor.hpp"

namespace drift {

// Architecture sizes. Defaults target the 16-node / 16-channel / 36 px rig:
// per-channel conv branches (3x3 widths w1, w2 + 2x2 max pool), a 1x1 fusion
// conv, then the ANC decoder: linear to f x f, learnable attention map,
// bilinear upsample to grid_px, two smoothing convs, logistic output.
struct ModelConfig {
    int channels = 16;
    int nodes = 16;
    int grid_px = 36;
    int f = 12;
    int branch_w1 = 8;
    int branch_w2 = 16;
    int fused = 32;
    int dec_w = 8;

    int pooled() const { return nodes / 2; }
    int feat_len() const { return fused * pooled() * pooled(); }
    void validate() const;
};

struct TrainConfig {
    int epochs = 30;
    double learning_rate = 1e-2;
    int batch_size = 8;
    std::uint64_t seed = 0;
    std::string loss = "bce";  // only BCE is defined
    int finetune_epochs = 50;
    double finetune_lr = 1e-3;
    double momentum = 0.9;

    void validate() const;
};

struct DriftModel {
    ModelConfig config;
    std::string geom_hash;  // guards checkpoint/dataset pairing
    NormStats norm;
    std::vector<Tensor> params;

    // canonical layout: 4 tensors per branch, then fusion/linear/attention/decoder
    Tensor& branch_conv1_w(int b) { return params[4 * b + 0]; }
    Tensor& branch_conv1_b(int b) { return params[4 * b + 1]; }
    Tensor& branch_conv2_w(int b) { return params[4 * b + 2]; }
    Tensor& branch_conv2_b(int b) { return params[4 * b + 3]; }
    Tensor& fusion_w() { return params[4 * config.channels + 0]; }
    Tensor& fusion_b() { return params[4 * config.channels + 1]; }
    Tensor& anc_linear_w() { return params[4 * config.channels + 2]; }
    Tensor& anc_linear_b() { return params[4 * config.channels + 3]; }
    Tensor& attention() { return params[4 * config.channels + 4]; }
    Tensor& dec_conv1_w() { return params[4 * config.channels + 5]; }
    Tensor& dec_conv1_b() { return params[4 * config.channels + 6]; }
    Tensor& dec_conv2_w() { return params[4 * config.channels + 7]; }
    Tensor& dec_conv2_b() { return params[4 * config.channels + 8]; }

    const Tensor& branch_conv1_w(int b) const { return params[4 * b + 0]; }
    const Tensor& branch_conv1_b(int b) const { return params[4 * b + 1]; }
    const Tensor& branch_conv2_w(int b) const { return params[4 * b + 2]; }
    const Tensor& branch_conv2_b(int b) const { return params[4 * b + 3]; }
    const Tensor& fusion_w() const { return params[4 * config.channels + 0]; }
    const Tensor& fusion_b() const { return params[4 * config.channels + 1]; }
    const Tensor& anc_linear_w() const { return params[4 * config.channels + 2]; }
    const Tensor& anc_linear_b() const { return params[4 * config.channels + 3]; }
    const Tensor& attention() const { return params[4 * config.channels + 4]; }
    const Tensor& dec_conv1_w() const { return params[4 * config.channels + 5]; }
    const Tensor& dec_conv1_b() const { return params[4 * config.channels + 6]; }
    const Tensor& dec_conv2_w() const { return params[4 * config.channels + 7]; }
    const Tensor& dec_conv2_b() const { return params[4 * config.channels + 8]; }

    const Tensor& param(int i) const { return params[i]; }
    int n_params() const { return static_cast<int>(params.size()); }

    // true iff any encoder-side tensor (branches or fusion) is trainable
    bool encoder_trainable() const;
};

DriftModel build_model(const ModelConfig& config, std::uint64_t seed);

// Scratch activations for one frame; reusable across calls with one model config.
struct Workspace {
    ModelConfig cfg;
    nn::BilinearPlan up_plan;
    std::vector<double> pre1, act1, pre2, act2;  // all branches stacked
    std::vector<int> pool_arg;
    std::vector<double> concat, fusion_pre, fusion_act;
    std::vector<double> lin_out, att_out, up_out;
    std::vector<double> dec_pre1, dec_act1, dec_pre2, out;
    // gradients flowing backward
    std::vector<double> d_out, d_pre2, d_act1, d_dec_pre1, d_up, d_att, d_lin;
    std::vector<double> d_fusion_act, d_fusion_pre, d_concat;
    std::vector<double> d_act2, d_pre2b, d_act1b, d_pre1b;

    void init(const ModelConfig& config);
};

// Encoder/decoder pass on an already-standardized tensor. Output values are
// strictly inside (0, 1).
ReconImage forward(const DriftModel& model, const RssTensor& x);
void forward_frame(const DriftModel& model, const double* x, Workspace& ws);

double loss_bce(const ReconImage& pred, const TargetMask& mask);

// Reverse pass: zeroes then fills grads of every trainable tensor; returns the loss.
double backward(DriftModel& model, const RssTensor& x, const TargetMask& mask);

// One recorded sample prepared for training: raw (unstandardized) tensors
// sharing one ground-truth mask; frames of a sample form a mini-batch.
struct TrainSample {
    std::vector<RssTensor> frames;
    TargetMask mask;
};

TrainSample make_train_sample(const SampleRecord& record, const NetworkGeometry& geom, double fallback_dbm);

struct TrainResult {
    std::vector<double> loss_curve;  // mean per-frame loss per epoch
};

// Mini-batch SGD with momentum. Computes and stores normalization statistics
// from the samples when the model has none; standardizes internally.
TrainResult train(DriftModel& model, const std::vector<TrainSample>& samples, const TrainConfig& config);

// Supervised adaptation on one tuber's post-change recording: only the ANC
// linear layer stays trainable; every other tensor is bit-identical after.
TrainResult one_shot_finetune(DriftModel& model, std::span<const TrainSample> recording,
                              const TrainConfig& config);

// Standardize with the model's stored statistics, then forward.
ReconImage reconstruct(const DriftModel& model, const RssTensor& raw);

void save_checkpoint(const DriftModel& model, const std::string& path);
DriftModel load_checkpoint(const std::string& path);

}  // namespace drift
