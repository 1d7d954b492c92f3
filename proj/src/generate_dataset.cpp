#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "drift/common.hpp"
#include "drift/dataset.hpp"
#include "drift/kvfile.hpp"
#include "drift/rng.hpp"
#include "drift/simulator.hpp"

namespace fs = std::filesystem;

namespace drift {

namespace {

// stable sub-stream tags for seed derivation
enum : std::uint64_t { kStreamEnv = 1, kStreamDynamic = 2, kStreamTuber = 3, kStreamFrame = 4, kStreamCalib = 5 };

std::string tuber_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "t%02d", index + 1);
    return std::string(buf);
}

double lerp(double a, double b, double t) { return a + (b - a) * t; }

}  // namespace

std::string generate_dataset(const SimConfig& config) {
    if (config.out_dir.empty()) throw std::invalid_argument("generate_dataset: out_dir is empty");
    if (config.tubers < 1) throw std::invalid_argument("generate_dataset: need at least one tuber");
    if (config.rotations < 1) throw std::invalid_argument("generate_dataset: need at least one rotation");
    if (config.frames_per_rotation < 1)
        throw std::invalid_argument("generate_dataset: need at least one frame per rotation");
    if (config.environment_count < 1)
        throw std::invalid_argument("generate_dataset: need at least one environment");
    if (config.dynamic_count > config.tubers)
        throw std::invalid_argument("generate_dataset: more dynamic tubers than tubers");

    const NetworkGeometry geom =
        build_geometry(config.side_cm, config.node_count, config.grid_px, config.channels);
    const WeightMatrix weights = ellipse_weights(geom, config.lambda_cm);

    // environment chain E1 -> E2 -> ... (E1 is the zero-bias initial state)
    std::vector<EnvironmentProfile> envs;
    for (int e = 0; e < config.environment_count; ++e) {
        const std::string env_id = "E" + std::to_string(e + 1);
        if (e == 0) {
            envs.push_back(make_environment(geom, env_id));
        } else {
            EnvironmentProfile next =
                switch_environment(envs.back(), derive_seed(config.seed, {kStreamEnv, std::uint64_t(e)}),
                                   config.changed_fraction, config.max_bias_dbm);
            next.env_id = env_id;
            envs.push_back(next);
        }
        envs.back().burst_rate = config.burst_rate;
        envs.back().burst_sigma_dbm = config.burst_sigma_dbm;
        envs.back().drop_prob = config.drop_prob;
    }

    // dynamic designation: which tubers also get post-change recordings
    std::vector<bool> dynamic(config.tubers, false);
    {
        Rng rng(derive_seed(config.seed, {kStreamDynamic}));
        for (std::size_t idx : rng.sample_indices(static_cast<std::size_t>(config.tubers),
                                                  static_cast<std::size_t>(config.dynamic_count)))
            dynamic[idx] = true;
    }

    fs::create_directories(config.out_dir);
    fs::create_directories(fs::path(config.out_dir) / "environments");
    for (const auto& env : envs)
        write_environment((fs::path(config.out_dir) / "environments" / (env.env_id + ".txt")).string(), env);

    // empty-scene calibration recordings, one per environment
    {
        const ReconImage empty(geom.grid_px, geom.grid_px, 0.0);
        TargetMask empty_mask(geom.grid_px, geom.grid_px, 0);
        for (std::size_t e = 0; e < envs.size(); ++e) {
            SampleRecord record;
            record.tuber_id = kCalibTuberId;
            record.env_id = envs[e].env_id;
            record.rotation_deg = 0.0;
            record.mask = empty_mask;
            for (int f = 0; f < config.calib_frames; ++f) {
                RssFrame frame = synthesize_frame(geom, weights, empty, envs[e], config.noise_sigma_dbm,
                                                  derive_seed(config.seed, {kStreamCalib, e, std::uint64_t(f)}),
                                                  config.baseline_dbm);
                frame.timestamp = f;
                record.frames.push_back(std::move(frame));
            }
            write_sample(sample_dir(config.out_dir, record.tuber_id, record.env_id, 0.0), record);
        }
        write_tuber_meta((fs::path(config.out_dir) / kCalibTuberId / "meta.txt").string(),
                         TuberMeta{0.0, 0.0, 0.0, 0.0, false});
    }

    std::vector<std::string> tuber_ids;
    std::vector<std::string> dynamic_ids;
    for (int t = 0; t < config.tubers; ++t) {
        const std::string id = tuber_name(t);
        tuber_ids.push_back(id);
        if (dynamic[t]) dynamic_ids.push_back(id);

        const double grade = config.tubers > 1 ? double(t) / (config.tubers - 1) : 0.0;
        TargetSpec spec;
        spec.a_cm = lerp(config.length_max_cm, config.length_min_cm, grade) / 2.0;
        spec.b_cm = lerp(config.width_max_cm, config.width_min_cm, grade) / 2.0;
        spec.attenuation = config.attenuation;

        Rng place_rng(derive_seed(config.seed, {kStreamTuber, std::uint64_t(t)}));
        const double offset_cm =
            config.platform_offset_cm + place_rng.uniform(-config.jitter_cm, config.jitter_cm);
        const double base_angle_deg = place_rng.uniform(0.0, 360.0);
        const double orient0_deg = place_rng.uniform(0.0, 180.0);
        const double depth_cm = lerp(config.depth_min_cm, config.depth_max_cm, grade);

        fs::create_directories(fs::path(config.out_dir) / id);
        write_tuber_meta((fs::path(config.out_dir) / id / "meta.txt").string(),
                         TuberMeta{spec.a_cm, spec.b_cm, depth_cm, spec.attenuation, dynamic[t]});

        const int env_count_for_tuber = dynamic[t] ? config.environment_count : 1;
        for (int e = 0; e < env_count_for_tuber; ++e) {
            for (int rot = 0; rot < config.rotations; ++rot) {
                const double angle_deg = 360.0 * rot / config.rotations;
                const double platform_rad = (base_angle_deg + angle_deg) * 0.017453292519943295;
                spec.cx_cm = geom.side_cm / 2 + offset_cm * std::cos(platform_rad);
                spec.cy_cm = geom.side_cm / 2 + offset_cm * std::sin(platform_rad);
                spec.rotation_deg = orient0_deg + angle_deg;

                SampleRecord record;
                record.tuber_id = id;
                record.env_id = envs[e].env_id;
                record.rotation_deg = angle_deg;
                record.mask = rasterize_mask(spec, geom);
                if (mask_count(record.mask) == 0) {
                    // sub-pixel tuber: keep at least its footprint pixel so
                    // ground truth is never empty
                    const double px = geom.pixel_size_cm();
                    const int col = std::clamp(int(spec.cx_cm / px), 0, geom.grid_px - 1);
                    const int row = std::clamp(int(spec.cy_cm / px), 0, geom.grid_px - 1);
                    record.mask.at(row, col) = 1;
                }
                ReconImage r(geom.grid_px, geom.grid_px);
                for (std::size_t i = 0; i < record.mask.size(); ++i)
                    r.v[i] = record.mask.v[i] ? spec.attenuation : 0.0;
                for (int f = 0; f < config.frames_per_rotation; ++f) {
                    RssFrame frame = synthesize_frame(
                        geom, weights, r, envs[e], config.noise_sigma_dbm,
                        derive_seed(config.seed,
                                    {kStreamFrame, std::uint64_t(t), std::uint64_t(e), std::uint64_t(rot),
                                     std::uint64_t(f)}),
                        config.baseline_dbm);
                    frame.timestamp = f;
                    record.frames.push_back(std::move(frame));
                }
                write_sample(sample_dir(config.out_dir, id, record.env_id, angle_deg), record);
            }
        }
    }

    KvFile manifest;
    manifest.set("format", "drift-dataset-v1");
    manifest.set_long("seed", static_cast<long>(config.seed));
    manifest.set_long("tubers", config.tubers);
    manifest.set_long("rotations", config.rotations);
    manifest.set_long("frames_per_rotation", config.frames_per_rotation);
    manifest.set_long("calib_frames", config.calib_frames);
    manifest.set_double("baseline_dbm", config.baseline_dbm);
    manifest.set_double("noise_sigma_dbm", config.noise_sigma_dbm);
    manifest.set_double("drop_prob", config.drop_prob);
    manifest.set_double("burst_rate", config.burst_rate);
    manifest.set_double("burst_sigma_dbm", config.burst_sigma_dbm);
    manifest.set_double("changed_fraction", config.changed_fraction);
    manifest.set_double("max_bias_dbm", config.max_bias_dbm);
    manifest.set_double("attenuation", config.attenuation);
    manifest.set_double("lambda_cm", config.lambda_cm);
    manifest.set_double("platform_offset_cm", config.platform_offset_cm);
    manifest.set_double("jitter_cm", config.jitter_cm);
    std::string env_list, tuber_list, dynamic_list;
    for (std::size_t i = 0; i < envs.size(); ++i) env_list += (i ? "," : "") + envs[i].env_id;
    for (std::size_t i = 0; i < tuber_ids.size(); ++i) tuber_list += (i ? "," : "") + tuber_ids[i];
    for (std::size_t i = 0; i < dynamic_ids.size(); ++i) dynamic_list += (i ? "," : "") + dynamic_ids[i];
    manifest.set("environments", env_list);
    manifest.set("tuber_ids", tuber_list);
    manifest.set("dynamic", dynamic_list);
    // geometry block
    KvFile geo = KvFile::parse_text(serialize_geometry(geom), "geometry");
    for (const auto& [key, value] : geo.entries()) manifest.set(key, value);

    const std::string manifest_path = (fs::path(config.out_dir) / "manifest.txt").string();
    manifest.save(manifest_path);
    return manifest_path;
}

}  // namespace drift
