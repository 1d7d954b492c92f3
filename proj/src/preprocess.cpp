#include "drift/preprocess.hpp"

#include <cmath>
#include <stdexcept>

#include "drift/common.hpp"

namespace drift {

RssFrame impute(const RssFrame& frame, ImputationState& state) {
    if (frame.links != state.links || frame.channels != state.channels)
        throw std::invalid_argument("impute: frame dimensions do not match state");
    RssFrame out = frame;
    for (std::size_t i = 0; i < out.v.size(); ++i) {
        if (is_missing(out.v[i])) {
            out.v[i] = is_missing(state.last_seen[i]) ? state.fallback_dbm : state.last_seen[i];
        } else {
            state.last_seen[i] = out.v[i];
        }
    }
    return out;
}

RssTensor to_tensor(const RssFrame& frame, const NetworkGeometry& geom) {
    if (frame.links != geom.n_links() || frame.channels != geom.channels)
        throw std::invalid_argument("to_tensor: frame dimensions do not match geometry");
    for (double v : frame.v)
        if (is_missing(v)) throw std::invalid_argument("to_tensor: frame has MISSING entries (impute first)");

    const int n = geom.n_nodes();
    RssTensor tensor(geom.channels, n);
    for (int l = 0; l < geom.n_links(); ++l) {
        const auto [i, j] = geom.links[l];
        for (int c = 0; c < geom.channels; ++c) tensor.at(c, i, j) = frame.at(l, c);
    }
    return tensor;
}

RssTensor to_tensor(const RssFrame& frame, const NetworkGeometry& geom, const NormStats& stats) {
    if (static_cast<int>(stats.mean.size()) != geom.channels ||
        static_cast<int>(stats.std_dev.size()) != geom.channels)
        throw std::invalid_argument("to_tensor: stats do not cover every channel");
    RssTensor tensor = to_tensor(frame, geom);
    const int n = tensor.nodes;
    for (int c = 0; c < tensor.channels; ++c) {
        const double mu = stats.mean[c];
        const double sigma = stats.std_dev[c];
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j) tensor.at(c, i, j) = (tensor.at(c, i, j) - mu) / sigma;
    }
    return tensor;
}

RssFrame tensor_to_frame(const RssTensor& tensor, const NetworkGeometry& geom) {
    if (tensor.nodes != geom.n_nodes() || tensor.channels != geom.channels)
        throw std::invalid_argument("tensor_to_frame: tensor dimensions do not match geometry");
    RssFrame frame(geom.n_links(), geom.channels);
    for (int l = 0; l < geom.n_links(); ++l) {
        const auto [i, j] = geom.links[l];
        for (int c = 0; c < geom.channels; ++c) frame.at(l, c) = tensor.at(c, i, j);
    }
    return frame;
}

NormStats compute_norm_stats(const std::vector<RssFrame>& frames, const NetworkGeometry& geom) {
    if (frames.empty()) throw std::invalid_argument("compute_norm_stats: no frames");
    NormStats stats;
    stats.mean.assign(geom.channels, 0.0);
    stats.std_dev.assign(geom.channels, 1.0);
    const std::size_t per_channel = frames.size() * static_cast<std::size_t>(geom.n_links());
    for (int c = 0; c < geom.channels; ++c) {
        double sum = 0.0;
        for (const RssFrame& f : frames) {
            if (f.links != geom.n_links() || f.channels != geom.channels)
                throw std::invalid_argument("compute_norm_stats: frame dimensions do not match geometry");
            for (int l = 0; l < f.links; ++l) {
                const double v = f.at(l, c);
                if (is_missing(v)) throw std::invalid_argument("compute_norm_stats: MISSING entry");
                sum += v;
            }
        }
        const double mu = sum / double(per_channel);
        double ss = 0.0;
        for (const RssFrame& f : frames)
            for (int l = 0; l < f.links; ++l) {
                const double d = f.at(l, c) - mu;
                ss += d * d;
            }
        double sigma = std::sqrt(ss / double(per_channel));
        if (!(sigma > 1e-12)) sigma = 1.0;
        stats.mean[c] = mu;
        stats.std_dev[c] = sigma;
    }
    return stats;
}

NormStats compute_norm_stats_tensors(const std::vector<const RssTensor*>& tensors) {
    if (tensors.empty()) throw std::invalid_argument("compute_norm_stats_tensors: no tensors");
    const int C = tensors.front()->channels;
    const int n = tensors.front()->nodes;
    NormStats stats;
    stats.mean.assign(C, 0.0);
    stats.std_dev.assign(C, 1.0);
    const std::size_t per_channel = tensors.size() * static_cast<std::size_t>(n) * (n - 1);
    for (int c = 0; c < C; ++c) {
        double sum = 0.0;
        for (const RssTensor* t : tensors) {
            if (t->channels != C || t->nodes != n)
                throw std::invalid_argument("compute_norm_stats_tensors: inconsistent tensor dims");
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (i != j) sum += t->at(c, i, j);
        }
        const double mu = sum / double(per_channel);
        double ss = 0.0;
        for (const RssTensor* t : tensors)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (i != j) {
                        const double d = t->at(c, i, j) - mu;
                        ss += d * d;
                    }
        double sigma = std::sqrt(ss / double(per_channel));
        if (!(sigma > 1e-12)) sigma = 1.0;
        stats.mean[c] = mu;
        stats.std_dev[c] = sigma;
    }
    return stats;
}

void apply_norm(RssTensor& tensor, const NormStats& stats) {
    if (static_cast<int>(stats.mean.size()) != tensor.channels)
        throw std::invalid_argument("apply_norm: stats do not cover every channel");
    for (int c = 0; c < tensor.channels; ++c) {
        const double mu = stats.mean[c];
        const double sigma = stats.std_dev[c];
        for (int i = 0; i < tensor.nodes; ++i)
            for (int j = 0; j < tensor.nodes; ++j)
                if (i != j) tensor.at(c, i, j) = (tensor.at(c, i, j) - mu) / sigma;
    }
}

RssFrame mean_frame(const std::vector<RssFrame>& frames, std::size_t first, std::size_t count) {
    if (frames.empty() || count == 0 || first + count > frames.size())
        throw std::invalid_argument("mean_frame: bad frame range");
    RssFrame out(frames[first].links, frames[first].channels);
    out.timestamp = frames[first + count - 1].timestamp;
    for (std::size_t f = first; f < first + count; ++f) {
        if (frames[f].links != out.links || frames[f].channels != out.channels)
            throw std::invalid_argument("mean_frame: inconsistent frame dimensions");
        for (std::size_t i = 0; i < out.v.size(); ++i) {
            if (is_missing(frames[f].v[i])) throw std::invalid_argument("mean_frame: MISSING entry");
            out.v[i] += frames[f].v[i];
        }
    }
    for (double& v : out.v) v /= double(count);
    return out;
}

}  // namespace drift
