#include "drift/simulator.hpp"

#include <cmath>
#include <stdexcept>

#include "drift/common.hpp"
#include "drift/rng.hpp"

namespace drift {

namespace {
constexpr double kDegToRad = 0.017453292519943295;
}

TargetMask rasterize_mask(const TargetSpec& spec, const NetworkGeometry& geom) {
    if (spec.a_cm <= 0 || spec.b_cm <= 0)
        throw std::invalid_argument("rasterize_mask: semi-axes must be positive");
    if (spec.cx_cm < 0 || spec.cx_cm > geom.side_cm || spec.cy_cm < 0 || spec.cy_cm > geom.side_cm)
        throw std::invalid_argument("rasterize_mask: target centre outside sensing area");

    TargetMask mask(geom.grid_px, geom.grid_px);
    const double theta = spec.rotation_deg * kDegToRad;
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    for (int m = 0; m < geom.n_pixels(); ++m) {
        const auto p = geom.pixel_center(m);
        const double dx = p[0] - spec.cx_cm;
        const double dy = p[1] - spec.cy_cm;
        // rotate into the ellipse frame
        const double u = ct * dx + st * dy;
        const double w = -st * dx + ct * dy;
        const double q = (u / spec.a_cm) * (u / spec.a_cm) + (w / spec.b_cm) * (w / spec.b_cm);
        mask.v[m] = q <= 1.0 ? 1 : 0;
    }
    return mask;
}

ReconImage target_image(const TargetSpec& spec, const NetworkGeometry& geom) {
    const TargetMask mask = rasterize_mask(spec, geom);
    ReconImage r(mask.rows, mask.cols);
    for (std::size_t i = 0; i < mask.size(); ++i) r.v[i] = mask.v[i] ? spec.attenuation : 0.0;
    return r;
}

EnvironmentProfile make_environment(const NetworkGeometry& geom, const std::string& env_id) {
    EnvironmentProfile env;
    env.env_id = env_id;
    env.links = geom.n_links();
    env.channels = geom.channels;
    env.link_bias_dbm.assign(static_cast<std::size_t>(env.links) * env.channels, 0.0);
    return env;
}

EnvironmentProfile switch_environment(const EnvironmentProfile& env_from, std::uint64_t rng_seed,
                                      double changed_fraction, double max_bias_dbm) {
    if (changed_fraction <= 0.0 || changed_fraction > 1.0)
        throw std::invalid_argument("switch_environment: changed_fraction must be in (0, 1]");
    if (max_bias_dbm <= 0.0 || max_bias_dbm > 5.0)
        throw std::invalid_argument("switch_environment: max_bias_dbm must be in (0, 5]");

    EnvironmentProfile env = env_from;
    Rng rng(rng_seed);
    const auto n_changed =
        static_cast<std::size_t>(std::ceil(changed_fraction * env.links));
    const auto changed = rng.sample_indices(static_cast<std::size_t>(env.links), n_changed);
    for (std::size_t l : changed)
        for (int c = 0; c < env.channels; ++c)
            env.bias(static_cast<int>(l), c) = rng.uniform(-max_bias_dbm, max_bias_dbm);
    return env;
}

RssFrame synthesize_frame(const NetworkGeometry& geom, const WeightMatrix& weights, const ReconImage& r,
                          const EnvironmentProfile& env, double noise_sigma_dbm, std::uint64_t rng_seed,
                          double baseline_dbm) {
    if (weights.rows != geom.n_links() || weights.cols != geom.n_pixels())
        throw std::invalid_argument("synthesize_frame: weight matrix does not match geometry");
    if (static_cast<int>(r.size()) != geom.n_pixels())
        throw std::invalid_argument("synthesize_frame: target image does not match pixel grid");
    if (env.links != geom.n_links() || env.channels != geom.channels)
        throw std::invalid_argument("synthesize_frame: environment profile does not match geometry");

    const int M = geom.n_links();
    const int C = geom.channels;
    std::vector<double> attenuation(M, 0.0);
    for (int l = 0; l < M; ++l) {
        const double* row = weights.row(l);
        double acc = 0.0;
        for (int m = 0; m < weights.cols; ++m) acc += row[m] * r.v[m];
        attenuation[l] = acc;
    }

    Rng rng(rng_seed);
    const bool burst = rng.bernoulli(env.burst_rate);
    RssFrame frame(M, C);
    for (int l = 0; l < M; ++l) {
        for (int c = 0; c < C; ++c) {
            double value = baseline_dbm - attenuation[l] + env.bias(l, c);
            if (noise_sigma_dbm > 0) value += rng.normal(0.0, noise_sigma_dbm);
            if (burst) value += rng.normal(0.0, env.burst_sigma_dbm);
            if (rng.bernoulli(env.drop_prob)) value = missing_value();
            frame.at(l, c) = value;
        }
    }
    return frame;
}

}  // namespace drift
