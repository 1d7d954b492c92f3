#pragma once

#include <deque>
#include <span>
#include <string>
#include <vector>

#include "drift/simulator.hpp"

namespace drift {

enum class ChannelPolicy {
    MeanOverChannels,  // collapse each frame's link row to its channel mean
};

struct DetectorConfig {
    int window = 10;
    int top_k = 24;  // default: 10% of the 240 default links
    double alpha = 1.2;
    ChannelPolicy channel_policy = ChannelPolicy::MeanOverChannels;
};

// top_k = max(1, round(fraction * M_links))
int default_top_k(int n_links, double fraction = 0.10);

// Mean of the top_k per-link sample standard deviations over a full window.
double window_score(std::span<const RssFrame> buffer, const DetectorConfig& config);

// Conservative static envelope: max window_score over all full windows.
double calibrate(std::span<const RssFrame> static_stream, const DetectorConfig& config);

enum class Decision { Warmup, Stable, Change };

const char* decision_name(Decision d);

struct DetectorState {
    std::deque<RssFrame> buffer;
    double sigma_static = -1.0;  // < 0 means uncalibrated
    double last_score = 0.0;
    int debounce_left = 0;

    bool calibrated() const { return sigma_static >= 0.0; }
};

// Push one imputed frame; WARMUP until the window is full, then CHANGE iff
// score > alpha * sigma_static. After a CHANGE the detector stays quiet for
// `window` frames so one transition yields one event.
Decision step(const RssFrame& frame, DetectorState& state, const DetectorConfig& config);

struct DetectorEvent {
    int frame = 0;
    double score = 0.0;  // NaN while warming up
    double threshold = 0.0;
    Decision decision = Decision::Warmup;
};

// CSV: frame,score,threshold,decision
void write_event_log(const std::string& path, const std::vector<DetectorEvent>& events);

}  // namespace drift
