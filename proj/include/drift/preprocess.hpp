#pragma once

#include <vector>

#include "drift/common.hpp"
#include "drift/geometry.hpp"
#include "drift/simulator.hpp"

namespace drift {

// Forward-fill state: most recent non-missing RSS per (link, channel).
struct ImputationState {
    int links = 0;
    int channels = 0;
    double fallback_dbm = kDefaultBaselineDbm;
    std::vector<double> last_seen;  // NaN until first observation

    ImputationState() = default;
    ImputationState(int l, int c, double fallback)
        : links(l), channels(c), fallback_dbm(fallback),
          last_seen(static_cast<std::size_t>(l) * c, missing_value()) {}
};

// Replace MISSING entries by the most recent value on the same (link, channel),
// falling back to fallback_dbm before the first observation. Updates state.
RssFrame impute(const RssFrame& frame, ImputationState& state);

// Per-channel node-adjacency arrangement: entry [c, i, j] = RSS of link i->j.
struct RssTensor {
    int channels = 0;
    int nodes = 0;
    std::vector<double> v;

    RssTensor() = default;
    RssTensor(int c, int n) : channels(c), nodes(n), v(static_cast<std::size_t>(c) * n * n, 0.0) {}

    double at(int c, int i, int j) const {
        return v[(static_cast<std::size_t>(c) * nodes + i) * nodes + j];
    }
    double& at(int c, int i, int j) { return v[(static_cast<std::size_t>(c) * nodes + i) * nodes + j]; }
    std::size_t size() const { return v.size(); }
};

// Training-split standardization statistics, one (mean, std) per channel.
struct NormStats {
    std::vector<double> mean;
    std::vector<double> std_dev;

    bool empty() const { return mean.empty(); }
};

RssTensor to_tensor(const RssFrame& frame, const NetworkGeometry& geom);
RssTensor to_tensor(const RssFrame& frame, const NetworkGeometry& geom, const NormStats& stats);

// Inverse of the off-diagonal arrangement (used by round-trip checks).
RssFrame tensor_to_frame(const RssTensor& tensor, const NetworkGeometry& geom);

// Per-channel mean/std over all off-diagonal entries of the given frames.
// A zero (or near-zero) std guards to 1.
NormStats compute_norm_stats(const std::vector<RssFrame>& frames, const NetworkGeometry& geom);
NormStats compute_norm_stats_tensors(const std::vector<const RssTensor*>& tensors);

// Standardize off-diagonal entries in place; the diagonal stays 0.
void apply_norm(RssTensor& tensor, const NormStats& stats);

// Mean of frames entry-wise (all frames imputed, same dims).
RssFrame mean_frame(const std::vector<RssFrame>& frames, std::size_t first, std::size_t count);

}  // namespace drift
