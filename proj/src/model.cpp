#include "drift/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "drift/common.hpp"
#include "drift/rng.hpp"

namespace drift {

void ModelConfig::validate() const {
    if (channels < 1) throw std::invalid_argument("model: channels must be >= 1");
    if (nodes < 2 || nodes % 2 != 0) throw std::invalid_argument("model: nodes must be even and >= 2");
    if (grid_px < 2) throw std::invalid_argument("model: grid_px must be >= 2");
    if (f < 2) throw std::invalid_argument("model: f must be >= 2");
    if (branch_w1 < 1 || branch_w2 < 1 || fused < 1 || dec_w < 1)
        throw std::invalid_argument("model: layer widths must be >= 1");
}

void TrainConfig::validate() const {
    if (epochs < 0 || finetune_epochs < 0) throw std::invalid_argument("train: epoch counts must be >= 0");
    if (!(learning_rate > 0) || !(finetune_lr > 0))
        throw std::invalid_argument("train: learning rates must be positive");
    if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (loss != "bce") throw std::invalid_argument("train: unsupported loss '" + loss + "'");
    if (momentum < 0 || momentum >= 1) throw std::invalid_argument("train: momentum must be in [0, 1)");
}

bool DriftModel::encoder_trainable() const {
    for (int i = 0; i < 4 * config.channels + 2; ++i)
        if (params[i].trainable) return true;
    return false;
}

namespace {

void init_uniform(Tensor& t, int fan_in, Rng& rng) {
    // He-uniform: keeps activation variance flat through the ReLU stacks
    const double bound = std::sqrt(6.0 / double(fan_in));
    for (double& v : t.data) v = rng.uniform(-bound, bound);
}

std::string branch_name(int b, const char* suffix) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "branch%02d.%s", b, suffix);
    return std::string(buf);
}

}  // namespace

DriftModel build_model(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    DriftModel model;
    model.config = config;
    Rng rng(seed);

    const int C = config.channels;
    for (int b = 0; b < C; ++b) {
        Tensor w1(branch_name(b, "conv1.w"), {config.branch_w1, 1, 3, 3});
        init_uniform(w1, 9, rng);
        Tensor b1(branch_name(b, "conv1.b"), {config.branch_w1});
        Tensor w2(branch_name(b, "conv2.w"), {config.branch_w2, config.branch_w1, 3, 3});
        init_uniform(w2, config.branch_w1 * 9, rng);
        Tensor b2(branch_name(b, "conv2.b"), {config.branch_w2});
        model.params.push_back(std::move(w1));
        model.params.push_back(std::move(b1));
        model.params.push_back(std::move(w2));
        model.params.push_back(std::move(b2));
    }
    Tensor fw("fusion.w", {config.fused, C * config.branch_w2, 1, 1});
    init_uniform(fw, C * config.branch_w2, rng);
    Tensor fb("fusion.b", {config.fused});
    model.params.push_back(std::move(fw));
    model.params.push_back(std::move(fb));

    Tensor lw("anc.linear.w", {config.f * config.f, config.feat_len()});
    init_uniform(lw, config.feat_len(), rng);
    Tensor lb("anc.linear.b", {config.f * config.f});
    model.params.push_back(std::move(lw));
    model.params.push_back(std::move(lb));

    Tensor att("anc.attention", {config.f, config.f});
    std::fill(att.data.begin(), att.data.end(), 1.0);  // identity start
    model.params.push_back(std::move(att));

    Tensor d1w("decoder.conv1.w", {config.dec_w, 1, 3, 3});
    init_uniform(d1w, 9, rng);
    Tensor d1b("decoder.conv1.b", {config.dec_w});
    Tensor d2w("decoder.conv2.w", {1, config.dec_w, 3, 3});
    init_uniform(d2w, config.dec_w * 9, rng);
    Tensor d2b("decoder.conv2.b", {1});
    model.params.push_back(std::move(d1w));
    model.params.push_back(std::move(d1b));
    model.params.push_back(std::move(d2w));
    model.params.push_back(std::move(d2b));
    return model;
}

void Workspace::init(const ModelConfig& config) {
    cfg = config;
    up_plan = nn::make_bilinear_plan(config.f, config.grid_px);
    const int C = config.channels;
    const int n = config.nodes;
    const int hp = config.pooled();
    const int G = config.grid_px;
    pre1.assign(std::size_t(C) * config.branch_w1 * n * n, 0.0);
    act1.assign(pre1.size(), 0.0);
    pre2.assign(std::size_t(C) * config.branch_w2 * n * n, 0.0);
    act2.assign(pre2.size(), 0.0);
    pool_arg.assign(std::size_t(C) * config.branch_w2 * hp * hp, 0);
    concat.assign(std::size_t(C) * config.branch_w2 * hp * hp, 0.0);
    fusion_pre.assign(std::size_t(config.fused) * hp * hp, 0.0);
    fusion_act.assign(fusion_pre.size(), 0.0);
    lin_out.assign(std::size_t(config.f) * config.f, 0.0);
    att_out.assign(lin_out.size(), 0.0);
    up_out.assign(std::size_t(G) * G, 0.0);
    dec_pre1.assign(std::size_t(config.dec_w) * G * G, 0.0);
    dec_act1.assign(dec_pre1.size(), 0.0);
    dec_pre2.assign(std::size_t(G) * G, 0.0);
    out.assign(dec_pre2.size(), 0.0);

    d_out.assign(out.size(), 0.0);
    d_pre2.assign(dec_pre2.size(), 0.0);
    d_act1.assign(dec_act1.size(), 0.0);
    d_dec_pre1.assign(dec_pre1.size(), 0.0);
    d_up.assign(up_out.size(), 0.0);
    d_att.assign(att_out.size(), 0.0);
    d_lin.assign(lin_out.size(), 0.0);
    d_fusion_act.assign(fusion_act.size(), 0.0);
    d_fusion_pre.assign(fusion_pre.size(), 0.0);
    d_concat.assign(concat.size(), 0.0);
    d_act2.assign(std::size_t(config.branch_w2) * n * n, 0.0);
    d_pre2b.assign(d_act2.size(), 0.0);
    d_act1b.assign(std::size_t(config.branch_w1) * n * n, 0.0);
    d_pre1b.assign(d_act1b.size(), 0.0);
}

void forward_frame(const DriftModel& model, const double* x, Workspace& ws) {
    const ModelConfig& c = model.config;
    const int n = c.nodes;
    const int hp = c.pooled();
    const int G = c.grid_px;
    const DriftModel& m = model;

    for (int b = 0; b < c.channels; ++b) {
        const double* xb = x + std::size_t(b) * n * n;
        double* p1 = ws.pre1.data() + std::size_t(b) * c.branch_w1 * n * n;
        double* a1 = ws.act1.data() + std::size_t(b) * c.branch_w1 * n * n;
        double* p2 = ws.pre2.data() + std::size_t(b) * c.branch_w2 * n * n;
        double* a2 = ws.act2.data() + std::size_t(b) * c.branch_w2 * n * n;
        double* pooled = ws.concat.data() + std::size_t(b) * c.branch_w2 * hp * hp;
        int* arg = ws.pool_arg.data() + std::size_t(b) * c.branch_w2 * hp * hp;

        nn::conv2d_forward(xb, 1, n, n, m.branch_conv1_w(b).data.data(), m.branch_conv1_b(b).data.data(),
                           c.branch_w1, 3, 1, p1);
        nn::relu_forward(p1, c.branch_w1 * n * n, a1);
        nn::conv2d_forward(a1, c.branch_w1, n, n, m.branch_conv2_w(b).data.data(),
                           m.branch_conv2_b(b).data.data(), c.branch_w2, 3, 1, p2);
        nn::relu_forward(p2, c.branch_w2 * n * n, a2);
        nn::maxpool2_forward(a2, c.branch_w2, n, n, pooled, arg);
    }

    nn::conv2d_forward(ws.concat.data(), c.channels * c.branch_w2, hp, hp, m.fusion_w().data.data(),
                       m.fusion_b().data.data(), c.fused, 1, 0, ws.fusion_pre.data());
    nn::relu_forward(ws.fusion_pre.data(), c.fused * hp * hp, ws.fusion_act.data());

    nn::linear_forward(ws.fusion_act.data(), c.feat_len(), m.anc_linear_w().data.data(),
                       m.anc_linear_b().data.data(), c.f * c.f, ws.lin_out.data());

    const double* att = m.attention().data.data();
    for (int i = 0; i < c.f * c.f; ++i) ws.att_out[i] = ws.lin_out[i] * att[i];

    nn::bilinear_forward(ws.up_plan, ws.att_out.data(), ws.up_out.data());

    nn::conv2d_forward(ws.up_out.data(), 1, G, G, m.dec_conv1_w().data.data(), m.dec_conv1_b().data.data(),
                       c.dec_w, 3, 1, ws.dec_pre1.data());
    nn::relu_forward(ws.dec_pre1.data(), c.dec_w * G * G, ws.dec_act1.data());
    nn::conv2d_forward(ws.dec_act1.data(), c.dec_w, G, G, m.dec_conv2_w().data.data(),
                       m.dec_conv2_b().data.data(), 1, 3, 1, ws.dec_pre2.data());
    nn::sigmoid_forward(ws.dec_pre2.data(), G * G, ws.out.data());
}

namespace {

// reverse pass assuming ws.d_out holds dLoss/d(sigmoid output); accumulates
// gradients into the trainable tensors' grad buffers
void backward_frame(DriftModel& model, const double* x, Workspace& ws) {
    const ModelConfig& c = model.config;
    const int n = c.nodes;
    const int hp = c.pooled();
    const int G = c.grid_px;

    std::fill(ws.d_pre2.begin(), ws.d_pre2.end(), 0.0);
    nn::sigmoid_backward(ws.out.data(), G * G, ws.d_out.data(), ws.d_pre2.data());

    std::fill(ws.d_act1.begin(), ws.d_act1.end(), 0.0);
    {
        Tensor& w = model.dec_conv2_w();
        Tensor& b = model.dec_conv2_b();
        nn::conv2d_backward(ws.dec_act1.data(), c.dec_w, G, G, w.data.data(), 1, 3, 1, ws.d_pre2.data(),
                            ws.d_act1.data(), w.trainable ? w.grad.data() : nullptr,
                            b.trainable ? b.grad.data() : nullptr);
    }

    std::fill(ws.d_dec_pre1.begin(), ws.d_dec_pre1.end(), 0.0);
    nn::relu_backward(ws.dec_pre1.data(), c.dec_w * G * G, ws.d_act1.data(), ws.d_dec_pre1.data());

    std::fill(ws.d_up.begin(), ws.d_up.end(), 0.0);
    {
        Tensor& w = model.dec_conv1_w();
        Tensor& b = model.dec_conv1_b();
        nn::conv2d_backward(ws.up_out.data(), 1, G, G, w.data.data(), c.dec_w, 3, 1, ws.d_dec_pre1.data(),
                            ws.d_up.data(), w.trainable ? w.grad.data() : nullptr,
                            b.trainable ? b.grad.data() : nullptr);
    }

    std::fill(ws.d_att.begin(), ws.d_att.end(), 0.0);
    nn::bilinear_backward(ws.up_plan, ws.d_up.data(), ws.d_att.data());

    {
        Tensor& att = model.attention();
        const int ff = c.f * c.f;
        if (att.trainable)
            for (int i = 0; i < ff; ++i) att.grad[i] += ws.d_att[i] * ws.lin_out[i];
        for (int i = 0; i < ff; ++i) ws.d_lin[i] = ws.d_att[i] * att.data[i];
    }

    const bool deep = model.encoder_trainable();
    {
        Tensor& w = model.anc_linear_w();
        Tensor& b = model.anc_linear_b();
        if (deep) std::fill(ws.d_fusion_act.begin(), ws.d_fusion_act.end(), 0.0);
        nn::linear_backward(ws.fusion_act.data(), c.feat_len(), w.data.data(), c.f * c.f, ws.d_lin.data(),
                            deep ? ws.d_fusion_act.data() : nullptr,
                            w.trainable ? w.grad.data() : nullptr, b.trainable ? b.grad.data() : nullptr);
    }
    if (!deep) return;  // everything below the linear layer is frozen

    std::fill(ws.d_fusion_pre.begin(), ws.d_fusion_pre.end(), 0.0);
    nn::relu_backward(ws.fusion_pre.data(), c.fused * hp * hp, ws.d_fusion_act.data(),
                      ws.d_fusion_pre.data());

    std::fill(ws.d_concat.begin(), ws.d_concat.end(), 0.0);
    {
        Tensor& w = model.fusion_w();
        Tensor& b = model.fusion_b();
        nn::conv2d_backward(ws.concat.data(), c.channels * c.branch_w2, hp, hp, w.data.data(), c.fused, 1, 0,
                            ws.d_fusion_pre.data(), ws.d_concat.data(),
                            w.trainable ? w.grad.data() : nullptr, b.trainable ? b.grad.data() : nullptr);
    }

    for (int b = 0; b < c.channels; ++b) {
        const double* xb = x + std::size_t(b) * n * n;
        const double* a1 = ws.act1.data() + std::size_t(b) * c.branch_w1 * n * n;
        const double* p1 = ws.pre1.data() + std::size_t(b) * c.branch_w1 * n * n;
        const double* p2 = ws.pre2.data() + std::size_t(b) * c.branch_w2 * n * n;
        const double* d_pool = ws.d_concat.data() + std::size_t(b) * c.branch_w2 * hp * hp;
        const int* arg = ws.pool_arg.data() + std::size_t(b) * c.branch_w2 * hp * hp;

        std::fill(ws.d_act2.begin(), ws.d_act2.end(), 0.0);
        nn::maxpool2_backward(arg, c.branch_w2 * hp * hp, d_pool, ws.d_act2.data());

        std::fill(ws.d_pre2b.begin(), ws.d_pre2b.end(), 0.0);
        nn::relu_backward(p2, c.branch_w2 * n * n, ws.d_act2.data(), ws.d_pre2b.data());

        std::fill(ws.d_act1b.begin(), ws.d_act1b.end(), 0.0);
        {
            Tensor& w = model.branch_conv2_w(b);
            Tensor& bb = model.branch_conv2_b(b);
            nn::conv2d_backward(a1, c.branch_w1, n, n, w.data.data(), c.branch_w2, 3, 1, ws.d_pre2b.data(),
                                ws.d_act1b.data(), w.trainable ? w.grad.data() : nullptr,
                                bb.trainable ? bb.grad.data() : nullptr);
        }

        std::fill(ws.d_pre1b.begin(), ws.d_pre1b.end(), 0.0);
        nn::relu_backward(p1, c.branch_w1 * n * n, ws.d_act1b.data(), ws.d_pre1b.data());
        {
            Tensor& w = model.branch_conv1_w(b);
            Tensor& bb = model.branch_conv1_b(b);
            nn::conv2d_backward(xb, 1, n, n, w.data.data(), c.branch_w1, 3, 1, ws.d_pre1b.data(), nullptr,
                                w.trainable ? w.grad.data() : nullptr,
                                bb.trainable ? bb.grad.data() : nullptr);
        }
    }
}

void check_input(const DriftModel& model, const RssTensor& x) {
    if (x.channels != model.config.channels || x.nodes != model.config.nodes)
        throw std::invalid_argument("model: input tensor is " + std::to_string(x.channels) + "x" +
                                    std::to_string(x.nodes) + "x" + std::to_string(x.nodes) +
                                    ", model expects " + std::to_string(model.config.channels) + "x" +
                                    std::to_string(model.config.nodes) + "x" +
                                    std::to_string(model.config.nodes));
}

std::vector<double> mask_to_double(const TargetMask& mask) {
    std::vector<double> t(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) t[i] = mask.v[i] ? 1.0 : 0.0;
    return t;
}

}  // namespace

ReconImage forward(const DriftModel& model, const RssTensor& x) {
    check_input(model, x);
    Workspace ws;
    ws.init(model.config);
    forward_frame(model, x.v.data(), ws);
    ReconImage img(model.config.grid_px, model.config.grid_px);
    img.v = ws.out;
    return img;
}

double loss_bce(const ReconImage& pred, const TargetMask& mask) {
    if (pred.rows != mask.rows || pred.cols != mask.cols)
        throw std::invalid_argument("loss: prediction and mask shapes differ");
    const std::vector<double> target = mask_to_double(mask);
    return nn::bce_forward(pred.v.data(), target.data(), static_cast<int>(pred.size()));
}

double backward(DriftModel& model, const RssTensor& x, const TargetMask& mask) {
    check_input(model, x);
    if (mask.rows != model.config.grid_px || mask.cols != model.config.grid_px)
        throw std::invalid_argument("backward: mask shape does not match grid");
    for (Tensor& t : model.params)
        if (t.trainable) {
            t.ensure_grad();
            t.zero_grad();
        }
    Workspace ws;
    ws.init(model.config);
    forward_frame(model, x.v.data(), ws);
    const std::vector<double> target = mask_to_double(mask);
    const int n = static_cast<int>(ws.out.size());
    const double loss = nn::bce_forward(ws.out.data(), target.data(), n);
    std::fill(ws.d_out.begin(), ws.d_out.end(), 0.0);
    nn::bce_backward(ws.out.data(), target.data(), n, 1.0, ws.d_out.data());
    backward_frame(model, x.v.data(), ws);
    return loss;
}

TrainSample make_train_sample(const SampleRecord& record, const NetworkGeometry& geom, double fallback_dbm) {
    TrainSample sample;
    sample.mask = record.mask;
    ImputationState state(geom.n_links(), geom.channels, fallback_dbm);
    for (const RssFrame& frame : record.frames) {
        const RssFrame filled = impute(frame, state);
        sample.frames.push_back(to_tensor(filled, geom));
    }
    return sample;
}

namespace {

struct Sgd {
    double lr;
    double momentum;
    std::vector<std::vector<double>> velocity;

    explicit Sgd(DriftModel& model, double lr_, double momentum_) : lr(lr_), momentum(momentum_) {
        velocity.resize(model.params.size());
        for (std::size_t i = 0; i < model.params.size(); ++i)
            if (model.params[i].trainable) velocity[i].assign(model.params[i].data.size(), 0.0);
    }

    void step(DriftModel& model) {
        for (std::size_t i = 0; i < model.params.size(); ++i) {
            Tensor& t = model.params[i];
            if (!t.trainable) continue;
            auto& v = velocity[i];
            for (std::size_t k = 0; k < t.data.size(); ++k) {
                v[k] = momentum * v[k] + t.grad[k];
                t.data[k] -= lr * v[k];
            }
        }
    }
};

TrainResult run_epochs(DriftModel& model, const std::vector<TrainSample>& raw_samples, int epochs,
                       double lr, const TrainConfig& config) {
    // standardize once up front
    std::vector<TrainSample> samples = raw_samples;
    for (TrainSample& s : samples)
        for (RssTensor& t : s.frames) apply_norm(t, model.norm);

    for (Tensor& t : model.params)
        if (t.trainable) t.ensure_grad();

    Workspace ws;
    ws.init(model.config);
    Sgd opt(model, lr, config.momentum);
    Rng rng(config.seed);

    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainResult result;
    const int out_n = model.config.grid_px * model.config.grid_px;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t frame_count = 0;
        for (std::size_t s : order) {
            const TrainSample& sample = samples[s];
            const std::vector<double> target = mask_to_double(sample.mask);
            for (std::size_t first = 0; first < sample.frames.size();
                 first += static_cast<std::size_t>(config.batch_size)) {
                const std::size_t last =
                    std::min(sample.frames.size(), first + static_cast<std::size_t>(config.batch_size));
                const double scale = 1.0 / double(last - first);
                for (Tensor& t : model.params)
                    if (t.trainable) t.zero_grad();
                for (std::size_t fi = first; fi < last; ++fi) {
                    forward_frame(model, sample.frames[fi].v.data(), ws);
                    epoch_loss += nn::bce_forward(ws.out.data(), target.data(), out_n);
                    ++frame_count;
                    std::fill(ws.d_out.begin(), ws.d_out.end(), 0.0);
                    nn::bce_backward(ws.out.data(), target.data(), out_n, scale, ws.d_out.data());
                    backward_frame(model, sample.frames[fi].v.data(), ws);
                }
                opt.step(model);
            }
        }
        const double mean_loss = frame_count ? epoch_loss / double(frame_count) : 0.0;
        if (!std::isfinite(mean_loss))
            throw std::runtime_error("train: loss diverged (epoch " + std::to_string(epoch) + ")");
        result.loss_curve.push_back(mean_loss);
    }
    return result;
}

}  // namespace

TrainResult train(DriftModel& model, const std::vector<TrainSample>& samples, const TrainConfig& config) {
    config.validate();
    if (samples.empty()) throw std::invalid_argument("train: empty training set");
    if (model.norm.empty()) {
        std::vector<const RssTensor*> all;
        for (const TrainSample& s : samples)
            for (const RssTensor& t : s.frames) all.push_back(&t);
        model.norm = compute_norm_stats_tensors(all);
    }
    return run_epochs(model, samples, config.epochs, config.learning_rate, config);
}

TrainResult one_shot_finetune(DriftModel& model, std::span<const TrainSample> recording,
                              const TrainConfig& config) {
    config.validate();
    if (recording.empty()) throw std::invalid_argument("finetune: no samples");
    for (const TrainSample& s : recording)
        if (s.mask.size() == 0) throw std::invalid_argument("finetune: sample without ground-truth mask");
    if (model.norm.empty()) throw std::logic_error("finetune: model has no normalization stats (not trained)");

    for (Tensor& t : model.params) {
        t.trainable = false;
        t.drop_grad();
    }
    model.anc_linear_w().trainable = true;
    model.anc_linear_b().trainable = true;

    std::vector<TrainSample> samples(recording.begin(), recording.end());
    return run_epochs(model, samples, config.finetune_epochs, config.finetune_lr, config);
}

ReconImage reconstruct(const DriftModel& model, const RssTensor& raw) {
    if (model.norm.empty()) throw std::logic_error("reconstruct: model has no normalization stats");
    RssTensor x = raw;
    apply_norm(x, model.norm);
    return forward(model, x);
}

void save_checkpoint(const DriftModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "drift-checkpoint-v1\n";
    out << "geometry_hash=" << model.geom_hash << "\n";
    const ModelConfig& c = model.config;
    out << "channels=" << c.channels << "\nnodes=" << c.nodes << "\ngrid_px=" << c.grid_px << "\nf=" << c.f
        << "\nbranch_w1=" << c.branch_w1 << "\nbranch_w2=" << c.branch_w2 << "\nfused=" << c.fused
        << "\ndec_w=" << c.dec_w << "\n";
    auto write_list = [&out](const char* key, const std::vector<double>& v) {
        out << key << "=";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out << ',';
            out << format_double(v[i]);
        }
        out << "\n";
    };
    write_list("norm_mean", model.norm.mean);
    write_list("norm_std", model.norm.std_dev);
    out << "tensors=" << model.params.size() << "\n";
    for (const Tensor& t : model.params) {
        out << "tensor=" << t.name << " shape=";
        for (std::size_t i = 0; i < t.shape.size(); ++i) {
            if (i) out << 'x';
            out << t.shape[i];
        }
        out << " trainable=" << (t.trainable ? 1 : 0) << "\n";
        for (std::size_t i = 0; i < t.data.size(); ++i) {
            if (i) out << ' ';
            out << format_double(t.data[i]);
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

std::vector<double> parse_double_list(const std::string& s, const char* what) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= s.size() && !s.empty()) {
        std::size_t end = s.find(',', pos);
        if (end == std::string::npos) end = s.size();
        out.push_back(parse_double(std::string_view(s).substr(pos, end - pos), what));
        pos = end + 1;
        if (end == s.size()) break;
    }
    return out;
}

std::string expect_kv(std::istream& in, const std::string& key, const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": truncated checkpoint (want " + key + ")");
    const std::string prefix = key + "=";
    if (line.rfind(prefix, 0) != 0)
        throw std::runtime_error(path + ": expected '" + key + "=...', got '" + line + "'");
    return line.substr(prefix.size());
}

}  // namespace

DriftModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "drift-checkpoint-v1")
        throw std::runtime_error(path + ": not a drift checkpoint (bad magic)");

    DriftModel model;
    model.geom_hash = expect_kv(in, "geometry_hash", path);
    ModelConfig c;
    c.channels = static_cast<int>(parse_long(expect_kv(in, "channels", path), "channels"));
    c.nodes = static_cast<int>(parse_long(expect_kv(in, "nodes", path), "nodes"));
    c.grid_px = static_cast<int>(parse_long(expect_kv(in, "grid_px", path), "grid_px"));
    c.f = static_cast<int>(parse_long(expect_kv(in, "f", path), "f"));
    c.branch_w1 = static_cast<int>(parse_long(expect_kv(in, "branch_w1", path), "branch_w1"));
    c.branch_w2 = static_cast<int>(parse_long(expect_kv(in, "branch_w2", path), "branch_w2"));
    c.fused = static_cast<int>(parse_long(expect_kv(in, "fused", path), "fused"));
    c.dec_w = static_cast<int>(parse_long(expect_kv(in, "dec_w", path), "dec_w"));
    model.config = c;
    model.norm.mean = parse_double_list(expect_kv(in, "norm_mean", path), "norm_mean");
    model.norm.std_dev = parse_double_list(expect_kv(in, "norm_std", path), "norm_std");

    const long n_tensors = parse_long(expect_kv(in, "tensors", path), "tensors");
    for (long ti = 0; ti < n_tensors; ++ti) {
        if (!std::getline(in, line)) throw std::runtime_error(path + ": truncated tensor header");
        // tensor=<name> shape=<d0xd1...> trainable=<0|1>
        std::istringstream header(line);
        std::string name_field, shape_field, train_field;
        header >> name_field >> shape_field >> train_field;
        if (name_field.rfind("tensor=", 0) != 0 || shape_field.rfind("shape=", 0) != 0 ||
            train_field.rfind("trainable=", 0) != 0)
            throw std::runtime_error(path + ": malformed tensor header '" + line + "'");
        Tensor t;
        t.name = name_field.substr(7);
        std::string dims = shape_field.substr(6);
        std::size_t pos = 0;
        while (pos < dims.size()) {
            std::size_t end = dims.find('x', pos);
            if (end == std::string::npos) end = dims.size();
            t.shape.push_back(static_cast<int>(parse_long(dims.substr(pos, end - pos), "shape")));
            pos = end + 1;
        }
        t.trainable = parse_long(train_field.substr(10), "trainable") != 0;
        if (!std::getline(in, line)) throw std::runtime_error(path + ": truncated tensor data for " + t.name);
        t.data.reserve(t.numel());
        std::size_t start = 0;
        while (start < line.size()) {
            std::size_t end = line.find(' ', start);
            if (end == std::string::npos) end = line.size();
            if (end > start)
                t.data.push_back(parse_double(std::string_view(line).substr(start, end - start), "tensor data"));
            start = end + 1;
        }
        if (t.data.size() != t.numel())
            throw std::runtime_error(path + ": tensor " + t.name + " has " + std::to_string(t.data.size()) +
                                     " values, shape wants " + std::to_string(t.numel()));
        model.params.push_back(std::move(t));
    }
    if (model.params.size() != static_cast<std::size_t>(4 * c.channels + 9))
        throw std::runtime_error(path + ": unexpected tensor count for configuration");
    return model;
}

}  // namespace drift
