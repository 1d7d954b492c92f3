#pragma once

#include <memory>
#include <span>
#include <vector>

#include "drift/geometry.hpp"
#include "drift/image.hpp"
#include "drift/simulator.hpp"

namespace drift {

struct TikhonovConfig {
    double reg_lambda = 1.0;
    int reference_frames = 10;
};

// Per-entry mean of the first `reference_frames` frames of an empty-scene
// recording; the reference RSS level used to form attenuation vectors.
std::vector<double> estimate_rss_baseline(std::span<const RssFrame> empty_frames, int reference_frames);

// delta_g[l] = mean over channels of (baseline - frame); frame must be imputed.
std::vector<double> attenuation_vector(const RssFrame& frame, const std::vector<double>& baseline);

// argmin ||W r - delta_g||^2 + reg_lambda ||r||^2 via the normal equations.
ReconImage rti_reconstruct(const WeightMatrix& weights, const std::vector<double>& delta_g,
                           const TikhonovConfig& config, int grid_px);

// Prefactored solver for repeated reconstructions with one (W, lambda) pair.
class RtiSolver {
public:
    RtiSolver(const WeightMatrix& weights, double reg_lambda, int grid_px);
    ~RtiSolver();
    RtiSolver(RtiSolver&&) noexcept;
    RtiSolver& operator=(RtiSolver&&) noexcept;

    ReconImage solve(const std::vector<double>& delta_g) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace drift
