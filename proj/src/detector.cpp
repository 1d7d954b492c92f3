#include "drift/detector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "drift/common.hpp"

namespace drift {

int default_top_k(int n_links, double fraction) {
    return std::max(1, static_cast<int>(std::lround(fraction * n_links)));
}

namespace {

void validate_config(const DetectorConfig& config, int n_links) {
    if (config.window < 2) throw std::invalid_argument("detector: window must be >= 2");
    if (config.top_k < 1 || config.top_k > n_links)
        throw std::invalid_argument("detector: top_k must be in [1, M_links]");
    if (!(config.alpha > 0)) throw std::invalid_argument("detector: alpha must be positive");
}

// per-link series values after channel collapse
std::vector<double> collapse(const RssFrame& frame, ChannelPolicy policy) {
    std::vector<double> row(frame.links);
    switch (policy) {
        case ChannelPolicy::MeanOverChannels:
            for (int l = 0; l < frame.links; ++l) {
                double sum = 0.0;
                for (int c = 0; c < frame.channels; ++c) {
                    const double v = frame.at(l, c);
                    if (is_missing(v))
                        throw std::invalid_argument("detector: frame has MISSING entries (impute first)");
                    sum += v;
                }
                row[l] = sum / frame.channels;
            }
            return row;
    }
    throw std::logic_error("detector: unknown channel policy");
}

// mean of the top_k per-link sample stds over W collapsed rows
double score_rows(const std::vector<std::vector<double>>& rows, const DetectorConfig& config) {
    const int W = static_cast<int>(rows.size());
    const int n_links = static_cast<int>(rows.front().size());
    std::vector<double> stds(n_links);
    for (int l = 0; l < n_links; ++l) {
        double mean = 0.0;
        for (int f = 0; f < W; ++f) mean += rows[f][l];
        mean /= W;
        double ss = 0.0;
        for (int f = 0; f < W; ++f) {
            const double d = rows[f][l] - mean;
            ss += d * d;
        }
        stds[l] = std::sqrt(ss / (W - 1));
    }
    std::sort(stds.begin(), stds.end(), std::greater<double>());
    double sum = 0.0;
    for (int i = 0; i < config.top_k; ++i) sum += stds[i];
    return sum / config.top_k;
}

}  // namespace

double window_score(std::span<const RssFrame> buffer, const DetectorConfig& config) {
    if (buffer.empty()) throw std::invalid_argument("window_score: empty buffer");
    validate_config(config, buffer.front().links);
    if (static_cast<int>(buffer.size()) != config.window)
        throw std::invalid_argument("window_score: buffer holds " + std::to_string(buffer.size()) +
                                    " frames, want exactly " + std::to_string(config.window));
    std::vector<std::vector<double>> rows;
    rows.reserve(buffer.size());
    for (const RssFrame& f : buffer) rows.push_back(collapse(f, config.channel_policy));
    return score_rows(rows, config);
}

double calibrate(std::span<const RssFrame> static_stream, const DetectorConfig& config) {
    if (static_stream.empty()) throw std::invalid_argument("calibrate: empty stream");
    validate_config(config, static_stream.front().links);
    const std::size_t W = static_cast<std::size_t>(config.window);
    if (static_stream.size() < W)
        throw std::invalid_argument("calibrate: stream shorter than the window (" +
                                    std::to_string(static_stream.size()) + " < " + std::to_string(W) + ")");
    std::vector<std::vector<double>> rows;
    rows.reserve(static_stream.size());
    for (const RssFrame& f : static_stream) rows.push_back(collapse(f, config.channel_policy));

    double envelope = 0.0;
    std::vector<std::vector<double>> window(W);
    for (std::size_t start = 0; start + W <= rows.size(); ++start) {
        for (std::size_t i = 0; i < W; ++i) window[i] = rows[start + i];
        envelope = std::max(envelope, score_rows(window, config));
    }
    return envelope;
}

const char* decision_name(Decision d) {
    switch (d) {
        case Decision::Warmup: return "WARMUP";
        case Decision::Stable: return "STABLE";
        case Decision::Change: return "CHANGE";
    }
    return "?";
}

Decision step(const RssFrame& frame, DetectorState& state, const DetectorConfig& config) {
    validate_config(config, frame.links);
    state.buffer.push_back(frame);
    while (static_cast<int>(state.buffer.size()) > config.window) state.buffer.pop_front();
    if (static_cast<int>(state.buffer.size()) < config.window) return Decision::Warmup;
    if (!state.calibrated())
        throw std::logic_error("detector: step asked for a decision before calibration");

    std::vector<std::vector<double>> rows;
    rows.reserve(state.buffer.size());
    for (const RssFrame& f : state.buffer) rows.push_back(collapse(f, config.channel_policy));
    state.last_score = score_rows(rows, config);

    if (state.debounce_left > 0) {
        --state.debounce_left;
        return Decision::Stable;
    }
    if (state.last_score > config.alpha * state.sigma_static) {
        state.debounce_left = config.window;
        return Decision::Change;
    }
    return Decision::Stable;
}

void write_event_log(const std::string& path, const std::vector<DetectorEvent>& events) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "frame,score,threshold,decision\n";
    for (const auto& e : events) {
        out << e.frame << ',';
        if (!std::isnan(e.score)) out << format_double(e.score);
        out << ',' << format_double(e.threshold) << ',' << decision_name(e.decision) << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace drift
