#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drift/geometry.hpp"
#include "drift/image.hpp"

namespace drift {

// Elliptical target: semi-axes in cm, centre in area coordinates, attenuation
// is its per-pixel contribution to the image vector r.
struct TargetSpec {
    double a_cm = 3.0;
    double b_cm = 2.0;
    double cx_cm = 36.0;
    double cy_cm = 36.0;
    double rotation_deg = 0.0;
    double attenuation = 2.0;
};

// A static multipath state: per-(link, channel) RSS offsets plus the dynamics
// of the recording (motion bursts, packet loss).
struct EnvironmentProfile {
    std::string env_id = "E1";
    int links = 0;
    int channels = 0;
    std::vector<double> link_bias_dbm;  // links x channels, |bias| <= 5
    double burst_rate = 0.0;            // per-frame probability of a motion burst
    double burst_sigma_dbm = 2.0;
    double drop_prob = 0.0;

    double bias(int l, int c) const { return link_bias_dbm[static_cast<std::size_t>(l) * channels + c]; }
    double& bias(int l, int c) { return link_bias_dbm[static_cast<std::size_t>(l) * channels + c]; }
};

// One time slice of per-link, per-channel RSS; missing entries are NaN.
struct RssFrame {
    int timestamp = 0;
    int links = 0;
    int channels = 0;
    std::vector<double> v;

    RssFrame() = default;
    RssFrame(int l, int c, double fill = 0.0)
        : links(l), channels(c), v(static_cast<std::size_t>(l) * c, fill) {}

    double at(int l, int c) const { return v[static_cast<std::size_t>(l) * channels + c]; }
    double& at(int l, int c) { return v[static_cast<std::size_t>(l) * channels + c]; }
    std::size_t size() const { return v.size(); }
};

// Everything recorded for one (tuber, environment, rotation): an RSS frame
// sequence plus the shared ground-truth mask.
struct SampleRecord {
    std::string tuber_id;
    std::string env_id;
    double rotation_deg = 0.0;
    std::vector<RssFrame> frames;
    TargetMask mask;
};

inline constexpr double kDefaultBaselineDbm = -55.0;
inline constexpr double kDefaultNoiseSigmaDbm = 0.5;

TargetMask rasterize_mask(const TargetSpec& spec, const NetworkGeometry& geom);

// attenuation * mask, i.e. the image vector r the forward model sees
ReconImage target_image(const TargetSpec& spec, const NetworkGeometry& geom);

EnvironmentProfile make_environment(const NetworkGeometry& geom, const std::string& env_id);

// New profile differing from env_from on ceil(changed_fraction * M) links
// (all channels of each changed link redrawn uniformly in [-max_bias, max_bias]).
EnvironmentProfile switch_environment(const EnvironmentProfile& env_from, std::uint64_t rng_seed,
                                      double changed_fraction, double max_bias_dbm);

// Eq-style forward model: baseline - W r + bias + noise (+ burst), then drops.
RssFrame synthesize_frame(const NetworkGeometry& geom, const WeightMatrix& weights, const ReconImage& r,
                          const EnvironmentProfile& env, double noise_sigma_dbm, std::uint64_t rng_seed,
                          double baseline_dbm = kDefaultBaselineDbm);

// Dataset generator configuration; defaults follow the 16-node, 72 cm rig.
struct SimConfig {
    std::string out_dir;
    std::uint64_t seed = 1;

    double side_cm = 72.0;
    int node_count = 16;
    int grid_px = 36;
    int channels = 16;
    double lambda_cm = kDefaultLambdaCm;

    int tubers = 26;
    int rotations = 8;
    int frames_per_rotation = 4;
    int dynamic_count = 5;
    int environment_count = 4;
    int calib_frames = 30;

    double baseline_dbm = kDefaultBaselineDbm;
    double noise_sigma_dbm = kDefaultNoiseSigmaDbm;
    double drop_prob = 0.01;
    double burst_rate = 0.0;
    double burst_sigma_dbm = 2.0;
    double changed_fraction = 0.3;
    double max_bias_dbm = 5.0;
    double attenuation = 2.0;

    // tuber dimension ranges (full lengths/widths in cm, largest to smallest)
    double length_max_cm = 10.5;
    double length_min_cm = 2.0;
    double width_max_cm = 7.0;
    double width_min_cm = 1.0;
    double depth_min_cm = 10.7;
    double depth_max_cm = 15.5;

    double platform_offset_cm = 12.0;
    double jitter_cm = 1.5;
};

// Writes the full dataset tree (manifest, environments, calib + tuber records).
// Returns the manifest path.
std::string generate_dataset(const SimConfig& config);

}  // namespace drift
