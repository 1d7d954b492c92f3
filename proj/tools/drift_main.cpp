// drift: command-line front end for the RF tomography workbench.
// Subcommands: gen, calibrate, train, detect, finetune, reconstruct, eval.
// Each subcommand accepts --config <key=value file>; flags override file
// values, unknown config keys are rejected. DRIFT_SEED is the seed fallback.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

#include <CLI11.hpp>

#include "drift/common.hpp"
#include "drift/dataset.hpp"
#include "drift/detector.hpp"
#include "drift/evalharness.hpp"
#include "drift/kvfile.hpp"
#include "drift/model.hpp"
#include "drift/postprocess.hpp"
#include "drift/rng.hpp"
#include "drift/simulator.hpp"

namespace fs = std::filesystem;
using namespace drift;

namespace {

std::uint64_t env_seed_or(std::uint64_t fallback) {
    if (const char* s = std::getenv("DRIFT_SEED"))
        return static_cast<std::uint64_t>(parse_long(s, "DRIFT_SEED"));
    return fallback;
}

// config-file defaults for one subcommand: applied before flag parsing so
// flags win; keys that match no registered name are rejected
class FileConfig {
public:
    void load(const std::string& path) {
        kv_ = KvFile::load(path);
        loaded_ = true;
    }
    bool loaded() const { return loaded_; }
    bool has(const std::string& key) const { return loaded_ && kv_.has(key); }

    void apply_string(std::string& target, const std::string& key) {
        note(key);
        if (has(key)) target = kv_.get(key);
    }
    void apply_double(double& target, const std::string& key) {
        note(key);
        if (has(key)) target = kv_.get_double(key);
    }
    template <typename Int>
    void apply_int(Int& target, const std::string& key) {
        note(key);
        if (has(key)) target = static_cast<Int>(kv_.get_long(key));
    }
    void apply_bool(bool& target, const std::string& key) {
        note(key);
        if (has(key)) target = kv_.get_long(key) != 0;
    }

    void reject_unknown() const {
        if (!loaded_) return;
        for (const auto& key : kv_.keys())
            if (!known_.count(key)) throw std::runtime_error("unknown config key '" + key + "'");
    }

private:
    void note(const std::string& key) { known_.insert(key); }
    KvFile kv_;
    bool loaded_ = false;
    std::set<std::string> known_;
};

// pre-scan argv so the file is loaded before options are registered
std::optional<std::string> scan_config_path(int argc, char** argv) {
    for (int i = 1; i < argc - 1; ++i)
        if (std::string(argv[i]) == "--config") return std::string(argv[i + 1]);
    return std::nullopt;
}

NetworkGeometry geometry_for(const std::string& explicit_dataset, const std::string& csv_path) {
    if (!explicit_dataset.empty()) return load_manifest(explicit_dataset).geometry;
    fs::path p = fs::absolute(csv_path).parent_path();
    for (int up = 0; up < 3; ++up) p = p.parent_path();
    if (fs::exists(p / "manifest.txt")) return load_manifest(p.string()).geometry;
    throw std::runtime_error("cannot locate manifest.txt above " + csv_path + "; pass --dataset");
}

// standalone rss.csv stream reader (same row format as dataset records)
std::vector<RssFrame> load_rss_csv(const std::string& path, const NetworkGeometry& geom) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error(path + ":1: empty file");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != "frame,link,channel,rss_dbm")
        throw std::runtime_error(path + ":1: unexpected header '" + header + "'");
    struct Row {
        int frame, link, channel;
        double value;
    };
    std::vector<Row> rows;
    std::string line;
    int lineno = 1, max_frame = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno);
        const std::size_t c1 = line.find(',');
        const std::size_t c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
        const std::size_t c3 = c2 == std::string::npos ? c2 : line.find(',', c2 + 1);
        if (c3 == std::string::npos) throw std::runtime_error(where + ": expected 4 fields");
        Row r{};
        r.frame = static_cast<int>(parse_long(std::string_view(line).substr(0, c1), where.c_str()));
        r.link = static_cast<int>(parse_long(std::string_view(line).substr(c1 + 1, c2 - c1 - 1), where.c_str()));
        r.channel =
            static_cast<int>(parse_long(std::string_view(line).substr(c2 + 1, c3 - c2 - 1), where.c_str()));
        const auto field = std::string_view(line).substr(c3 + 1);
        r.value = field.empty() ? missing_value() : parse_double(field, where.c_str());
        if (r.link < 0 || r.link >= geom.n_links() || r.channel < 0 || r.channel >= geom.channels)
            throw std::runtime_error(where + ": link/channel out of range for geometry");
        max_frame = std::max(max_frame, r.frame);
        rows.push_back(r);
    }
    if (max_frame < 0) throw std::runtime_error(path + ": no data rows");
    std::vector<RssFrame> frames(static_cast<std::size_t>(max_frame) + 1,
                                 RssFrame(geom.n_links(), geom.channels, missing_value()));
    for (std::size_t f = 0; f < frames.size(); ++f) frames[f].timestamp = static_cast<int>(f);
    for (const Row& r : rows) frames[r.frame].at(r.link, r.channel) = r.value;
    return frames;
}

std::vector<RssFrame> impute_all(const std::vector<RssFrame>& frames, const NetworkGeometry& geom,
                                 double fallback) {
    ImputationState state(geom.n_links(), geom.channels, fallback);
    std::vector<RssFrame> out;
    out.reserve(frames.size());
    for (const RssFrame& f : frames) out.push_back(impute(f, state));
    return out;
}

std::vector<std::pair<std::string, std::string>> parse_transitions(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find(',', pos);
        if (end == std::string::npos) end = text.size();
        const std::string item = text.substr(pos, end - pos);
        const std::size_t colon = item.find(':');
        if (colon == std::string::npos)
            throw std::runtime_error("bad transition '" + item + "' (want FROM:TO)");
        out.emplace_back(item.substr(0, colon), item.substr(colon + 1));
        pos = end + 1;
    }
    if (out.empty()) throw std::runtime_error("no transitions given");
    return out;
}

double manifest_fallback_dbm(const std::string& dataset, const std::string& csv_path) {
    if (!dataset.empty()) return load_manifest(dataset).baseline_dbm;
    fs::path p = fs::absolute(csv_path).parent_path();
    for (int up = 0; up < 3; ++up) p = p.parent_path();
    if (fs::exists(p / "manifest.txt")) return load_manifest(p.string()).baseline_dbm;
    return kDefaultBaselineDbm;
}

// ---------------------------------------------------------------- gen

struct GenArgs {
    SimConfig cfg;
    std::string config_path;

    void setup(CLI::App& app, FileConfig& file) {
        cfg.seed = env_seed_or(1);
        file.apply_string(cfg.out_dir, "out");
        file.apply_int(cfg.tubers, "tubers");
        file.apply_int(cfg.rotations, "rotations");
        file.apply_int(cfg.frames_per_rotation, "frames");
        file.apply_int(cfg.seed, "seed");
        file.apply_double(cfg.side_cm, "side_cm");
        file.apply_int(cfg.node_count, "nodes");
        file.apply_int(cfg.grid_px, "grid");
        file.apply_int(cfg.channels, "channels");
        file.apply_double(cfg.lambda_cm, "lambda");
        file.apply_int(cfg.dynamic_count, "dynamic");
        file.apply_int(cfg.environment_count, "envs");
        file.apply_int(cfg.calib_frames, "calib_frames");
        file.apply_double(cfg.baseline_dbm, "baseline");
        file.apply_double(cfg.noise_sigma_dbm, "noise");
        file.apply_double(cfg.drop_prob, "drop_prob");
        file.apply_double(cfg.burst_rate, "burst_rate");
        file.apply_double(cfg.burst_sigma_dbm, "burst_sigma");
        file.apply_double(cfg.changed_fraction, "changed_fraction");
        file.apply_double(cfg.max_bias_dbm, "max_bias");
        file.apply_double(cfg.attenuation, "attenuation");
        file.apply_double(cfg.platform_offset_cm, "offset");
        file.apply_double(cfg.jitter_cm, "jitter");
        file.reject_unknown();

        auto* sub = app.add_subcommand("gen", "generate a synthetic dataset");
        sub->add_option("--config", config_path, "key=value config file");
        sub->add_option("--out", cfg.out_dir, "output dataset directory")->required(cfg.out_dir.empty());
        sub->add_option("--tubers", cfg.tubers)->check(CLI::PositiveNumber);
        sub->add_option("--rotations", cfg.rotations)->check(CLI::PositiveNumber);
        sub->add_option("--frames", cfg.frames_per_rotation)->check(CLI::PositiveNumber);
        sub->add_option("--seed", cfg.seed);
        sub->add_option("--side-cm", cfg.side_cm);
        sub->add_option("--nodes", cfg.node_count);
        sub->add_option("--grid", cfg.grid_px);
        sub->add_option("--channels", cfg.channels);
        sub->add_option("--lambda", cfg.lambda_cm);
        sub->add_option("--dynamic", cfg.dynamic_count);
        sub->add_option("--envs", cfg.environment_count);
        sub->add_option("--calib-frames", cfg.calib_frames);
        sub->add_option("--baseline", cfg.baseline_dbm);
        sub->add_option("--noise", cfg.noise_sigma_dbm);
        sub->add_option("--drop-prob", cfg.drop_prob);
        sub->add_option("--burst-rate", cfg.burst_rate);
        sub->add_option("--burst-sigma", cfg.burst_sigma_dbm);
        sub->add_option("--changed-fraction", cfg.changed_fraction);
        sub->add_option("--max-bias", cfg.max_bias_dbm);
        sub->add_option("--attenuation", cfg.attenuation);
        sub->add_option("--offset", cfg.platform_offset_cm);
        sub->add_option("--jitter", cfg.jitter_cm);
        sub->callback([this]() { std::cout << generate_dataset(cfg) << "\n"; });
    }
};

// ---------------------------------------------------------------- calibrate

struct CalibrateArgs {
    std::string in_csv, dataset, out_path, config_path;
    DetectorConfig det{};
    int top_k = 0;

    void setup(CLI::App& app, FileConfig& file) {
        file.apply_string(in_csv, "in");
        file.apply_string(dataset, "dataset");
        file.apply_string(out_path, "out");
        file.apply_int(det.window, "window");
        file.apply_int(top_k, "top_k");
        file.apply_double(det.alpha, "alpha");
        file.reject_unknown();

        auto* sub = app.add_subcommand("calibrate", "compute the static threshold from a quiet stream");
        sub->add_option("--config", config_path, "key=value config file");
        sub->add_option("--in", in_csv, "static-scene rss.csv")->required(in_csv.empty());
        sub->add_option("--dataset", dataset, "dataset root (geometry source)");
        sub->add_option("--out", out_path, "write calibration state file here");
        sub->add_option("--window", det.window);
        sub->add_option("--top-k", top_k, "0 = 10% of links");
        sub->add_option("--alpha", det.alpha);
        sub->callback([this]() {
            const NetworkGeometry geom = geometry_for(dataset, in_csv);
            det.top_k = top_k > 0 ? top_k : default_top_k(geom.n_links());
            const auto frames =
                impute_all(load_rss_csv(in_csv, geom), geom, manifest_fallback_dbm(dataset, in_csv));
            const double sigma = calibrate(frames, det);
            std::cout << "sigma_static=" << format_double(sigma) << "\n";
            if (!out_path.empty()) {
                KvFile kv;
                kv.set_double("sigma_static", sigma);
                kv.set_long("window", det.window);
                kv.set_long("top_k", det.top_k);
                kv.set_double("alpha", det.alpha);
                kv.save(out_path);
            }
        });
    }
};

// ---------------------------------------------------------------- detect

struct DetectArgs {
    std::string in_csv, calib_csv, state_path, dataset, out_path = "events.csv", config_path;
    DetectorConfig det{};
    int top_k = 0;

    void setup(CLI::App& app, FileConfig& file) {
        file.apply_string(in_csv, "in");
        file.apply_string(calib_csv, "calib");
        file.apply_string(state_path, "state");
        file.apply_string(dataset, "dataset");
        file.apply_string(out_path, "out");
        file.apply_int(det.window, "window");
        file.apply_int(top_k, "top_k");
        file.apply_double(det.alpha, "alpha");
        file.reject_unknown();

        auto* sub = app.add_subcommand("detect", "run the change detector over an RSS stream");
        sub->add_option("--config", config_path, "key=value config file");
        sub->add_option("--in", in_csv, "input rss.csv stream")->required(in_csv.empty());
        sub->add_option("--calib", calib_csv, "static rss.csv to calibrate on");
        sub->add_option("--state", state_path, "calibration state file from `calibrate --out`");
        sub->add_option("--dataset", dataset, "dataset root (geometry source)");
        sub->add_option("--out", out_path, "event CSV path");
        sub->add_option("--window", det.window);
        sub->add_option("--top-k", top_k, "0 = 10% of links");
        sub->add_option("--alpha", det.alpha);
        sub->callback([this]() {
            const NetworkGeometry geom = geometry_for(dataset, in_csv);
            det.top_k = top_k > 0 ? top_k : default_top_k(geom.n_links());
            const double fallback = manifest_fallback_dbm(dataset, in_csv);
            DetectorState state;
            if (!state_path.empty()) {
                KvFile kv = KvFile::load(state_path);
                state.sigma_static = kv.get_double("sigma_static");
                det.window = static_cast<int>(kv.get_long("window"));
                det.top_k = static_cast<int>(kv.get_long("top_k"));
                det.alpha = kv.get_double("alpha");
            } else if (!calib_csv.empty()) {
                const auto calib_frames = impute_all(load_rss_csv(calib_csv, geom), geom, fallback);
                state.sigma_static = calibrate(calib_frames, det);
            } else {
                throw std::runtime_error("detect needs --calib or --state");
            }
            const auto frames = impute_all(load_rss_csv(in_csv, geom), geom, fallback);
            std::vector<DetectorEvent> events;
            for (const RssFrame& f : frames) {
                const Decision d = step(f, state, det);
                events.push_back({f.timestamp, d == Decision::Warmup ? missing_value() : state.last_score,
                                  det.alpha * state.sigma_static, d});
            }
            write_event_log(out_path, events);
            std::cout << out_path << "\n";
        });
    }
};

// ---------------------------------------------------------------- train

struct TrainArgs {
    std::string dataset, out_ckpt, env = "E1", config_path;
    int k = 2;
    std::uint64_t split_seed = 7;
    TrainConfig train_cfg{};
    ModelConfig model_cfg{};

    void setup(CLI::App& app, FileConfig& file) {
        train_cfg.seed = env_seed_or(0);
        file.apply_string(dataset, "dataset");
        file.apply_string(out_ckpt, "out");
        file.apply_string(env, "env");
        file.apply_int(k, "k");
        file.apply_int(split_seed, "split_seed");
        file.apply_int(train_cfg.epochs, "epochs");
        file.apply_double(train_cfg.learning_rate, "lr");
        file.apply_int(train_cfg.batch_size, "batch");
        file.apply_int(train_cfg.seed, "seed");
        file.apply_double(train_cfg.momentum, "momentum");
        file.apply_int(model_cfg.f, "f");
        file.apply_int(model_cfg.branch_w1, "branch_w1");
        file.apply_int(model_cfg.branch_w2, "branch_w2");
        file.apply_int(model_cfg.fused, "fused");
        file.apply_int(model_cfg.dec_w, "dec_w");
        file.reject_unknown();

        auto* sub = app.add_subcommand("train", "pre-train the reconstruction model");
        sub->add_option("--config", config_path, "key=value config file");
        sub->add_option("--dataset", dataset)->required(dataset.empty());
        sub->add_option("--out", out_ckpt, "checkpoint path")->required(out_ckpt.empty());
        sub->add_option("--env", env, "training environment");
        sub->add_option("--k", k, "leave-k-out (reserves fine-tune/test tubers)");
        sub->add_option("--split-seed", split_seed);
        sub->add_option("--epochs", train_cfg.epochs);
        sub->add_option("--lr", train_cfg.learning_rate);
        sub->add_option("--batch", train_cfg.batch_size);
        sub->add_option("--seed", train_cfg.seed);
        sub->add_option("--momentum", train_cfg.momentum);
        sub->add_option("--f", model_cfg.f);
        sub->add_option("--w1", model_cfg.branch_w1);
        sub->add_option("--w2", model_cfg.branch_w2);
        sub->add_option("--fused", model_cfg.fused);
        sub->add_option("--dec-w", model_cfg.dec_w);
        sub->callback([this]() {
            const Manifest manifest = load_manifest(dataset);
            const NetworkGeometry& geom = manifest.geometry;
            model_cfg.channels = geom.channels;
            model_cfg.nodes = geom.n_nodes();
            model_cfg.grid_px = geom.grid_px;
            const SplitPlan split = make_split(manifest.tuber_ids, manifest.dynamic_ids, k, split_seed);
            std::vector<TrainSample> samples;
            for (const std::string& tuber : split.train_ids)
                for (int r = 0; r < manifest.rotations; ++r) {
                    const double angle = 360.0 * r / manifest.rotations;
                    samples.push_back(make_train_sample(
                        load_sample(sample_dir(dataset, tuber, env, angle), geom), geom,
                        manifest.baseline_dbm));
                }
            DriftModel model = build_model(model_cfg, train_cfg.seed);
            model.geom_hash = geometry_hash(geom);
            const TrainResult tr = train(model, samples, train_cfg);
            save_checkpoint(model, out_ckpt);
            std::cout << out_ckpt << " final_loss=" << format_double(tr.loss_curve.back()) << "\n";
        });
    }
};

// ---------------------------------------------------------------- finetune

struct FinetuneArgs {
    std::string model_path, dataset, tuber, env, out_ckpt, config_path;
    TrainConfig train_cfg{};

    void setup(CLI::App& app, FileConfig& file) {
        train_cfg.seed = env_seed_or(0);
        file.apply_string(model_path, "model");
        file.apply_string(dataset, "dataset");
        file.apply_string(tuber, "tuber");
        file.apply_string(env, "env");
        file.apply_string(out_ckpt, "out");
        file.apply_int(train_cfg.finetune_epochs, "epochs");
        file.apply_double(train_cfg.finetune_lr, "lr");
        file.apply_int(train_cfg.batch_size, "batch");
        file.apply_int(train_cfg.seed, "seed");
        file.reject_unknown();

        auto* sub = app.add_subcommand("finetune", "one-shot fine-tune the ANC linear layer");
        sub->add_option("--config", config_path, "key=value config file");
        sub->add_option("--model", model_path)->required(model_path.empty());
        sub->add_option("--dataset", dataset)->required(dataset.empty());
        sub->add_option("--tuber", tuber, "fine-tune tuber id")->required(tuber.empty());
        sub->add_option("--env", env, "post-change environment")->required(env.empty());
        sub->add_option("--out", out_ckpt, "adapted checkpoint path")->required(out_ckpt.empty());
        sub->add_option("--epochs", train_cfg.finetune_epochs);
        sub->add_option("--lr", train_cfg.finetune_lr);
        sub->add_option("--batch", train_cfg.batch_size);
        sub->add_option("--seed", train_cfg.seed);
        sub->callback([this]() {
            const Manifest manifest = load_manifest(dataset);
            const NetworkGeometry& geom = manifest.geometry;
            DriftModel model = load_checkpoint(model_path);
            if (model.geom_hash != geometry_hash(geom))
                throw std::runtime_error("checkpoint geometry hash does not match dataset");
            std::vector<TrainSample> recording;
            for (int r = 0; r < manifest.rotations; ++r) {
                const double angle = 360.0 * r / manifest.rotations;
                recording.push_back(make_train_sample(
                    load_sample(sample_dir(dataset, tuber, env, angle), geom), geom, manifest.baseline_dbm));
            }
            one_shot_finetune(model, recording, train_cfg);
            save_checkpoint(model, out_ckpt);
            std::cout << out_ckpt << "\n";
        });
    }
};

// ---------------------------------------------------------------- reconstruct

struct ReconstructArgs {
    std::string model_path, sample_path, method = "neural", out_path, raw_path, calib_env, config_path;
    CannyConfig canny{};
    TikhonovConfig tik{};
    int eval_window = 10;

    void setup(CLI::App& app, FileConfig& file) {
        file.apply_string(model_path, "model");
        file.apply_string(sample_path, "sample");
        file.apply_string(method, "method");
        file.apply_string(out_path, "out");
        file.apply_string(raw_path, "raw");
        file.apply_string(calib_env, "calib_env");
        file.apply_double(canny.gaussian_sigma, "canny_sigma");
        file.apply_double(canny.low_thresh, "canny_low");
        file.apply_double(canny.high_thresh, "canny_high");
        file.apply_double(tik.reg_lambda, "reg_lambda");
        file.apply_int(tik.reference_frames, "ref_frames");
        file.apply_int(eval_window, "window");
        file.reject_unknown();

        auto* sub = app.add_subcommand("reconstruct", "reconstruct one sample (neural or linear)");
        sub->add_option("--config", config_path, "key=value config file");
        sub->add_option("--model", model_path, "checkpoint (neural method)");
        sub->add_option("--sample", sample_path, "dataset/<tuber>/<env>/<rotation> directory")
            ->required(sample_path.empty());
        sub->add_option("--method", method)->check(CLI::IsMember({"neural", "linear"}));
        sub->add_option("--out", out_path, "post-processed mask PGM")->required(out_path.empty());
        sub->add_option("--raw", raw_path, "also write the raw reconstruction PGM here");
        sub->add_option("--calib-env", calib_env, "environment whose empty-scene recording forms the RSS reference (linear)");
        sub->add_option("--canny-sigma", canny.gaussian_sigma);
        sub->add_option("--canny-low", canny.low_thresh);
        sub->add_option("--canny-high", canny.high_thresh);
        sub->add_option("--reg-lambda", tik.reg_lambda);
        sub->add_option("--ref-frames", tik.reference_frames);
        sub->add_option("--window", eval_window, "final frame-window length");
        sub->callback([this]() {
            fs::path leaf = fs::absolute(sample_path);
            const fs::path root = leaf.parent_path().parent_path().parent_path();
            const Manifest manifest = load_manifest(root.string());
            const NetworkGeometry& geom = manifest.geometry;
            const SampleRecord record = load_sample(leaf.string(), geom);
            ImputationState state(geom.n_links(), geom.channels, manifest.baseline_dbm);
            std::vector<RssFrame> frames;
            for (const RssFrame& f : record.frames) frames.push_back(impute(f, state));
            const std::size_t window =
                std::min<std::size_t>(frames.size(), static_cast<std::size_t>(std::max(1, eval_window)));
            const RssFrame mean = mean_frame(frames, frames.size() - window, window);

            ReconImage recon;
            if (method == "neural") {
                if (model_path.empty()) throw std::runtime_error("neural method needs --model");
                const DriftModel model = load_checkpoint(model_path);
                if (model.geom_hash != geometry_hash(geom))
                    throw std::runtime_error("checkpoint geometry hash does not match dataset");
                recon = reconstruct(model, to_tensor(mean, geom));
            } else {
                const std::string env = calib_env.empty() ? record.env_id : calib_env;
                const SampleRecord calib =
                    load_sample(sample_dir(root.string(), kCalibTuberId, env, 0.0), geom);
                ImputationState cstate(geom.n_links(), geom.channels, manifest.baseline_dbm);
                std::vector<RssFrame> cframes;
                for (const RssFrame& f : calib.frames) cframes.push_back(impute(f, cstate));
                const auto baseline = estimate_rss_baseline(cframes, tik.reference_frames);
                const WeightMatrix weights = ellipse_weights(geom, manifest.lambda_cm);
                recon = rti_reconstruct(weights, attenuation_vector(mean, baseline), tik, geom.grid_px);
            }
            write_pgm(out_path, canny_region(recon, canny));
            if (!raw_path.empty()) write_pgm_scaled(raw_path, recon);
            std::cout << out_path << "\n";
        });
    }
};

// ---------------------------------------------------------------- eval

struct EvalArgs {
    ExperimentConfig cfg;
    std::string transitions_text = "E1:E2";
    std::string config_path;
    bool no_images = false;

    void setup(CLI::App& app, FileConfig& file) {
        cfg.seed = env_seed_or(7);
        file.apply_string(cfg.dataset_dir, "dataset");
        file.apply_string(cfg.output_dir, "out");
        file.apply_int(cfg.k, "k");
        file.apply_int(cfg.seed, "seed");
        file.apply_string(transitions_text, "transitions");
        file.apply_int(cfg.train.epochs, "epochs");
        file.apply_double(cfg.train.learning_rate, "lr");
        file.apply_int(cfg.train.batch_size, "batch");
        file.apply_int(cfg.train.seed, "train_seed");
        file.apply_int(cfg.train.finetune_epochs, "finetune_epochs");
        file.apply_double(cfg.train.finetune_lr, "finetune_lr");
        file.apply_double(cfg.train.momentum, "momentum");
        file.apply_int(cfg.model.f, "f");
        file.apply_int(cfg.model.branch_w1, "branch_w1");
        file.apply_int(cfg.model.branch_w2, "branch_w2");
        file.apply_int(cfg.model.fused, "fused");
        file.apply_int(cfg.model.dec_w, "dec_w");
        file.apply_int(cfg.detector.window, "window");
        file.apply_int(cfg.detector.top_k, "top_k");
        file.apply_double(cfg.detector.alpha, "alpha");
        file.apply_double(cfg.canny.gaussian_sigma, "canny_sigma");
        file.apply_double(cfg.canny.low_thresh, "canny_low");
        file.apply_double(cfg.canny.high_thresh, "canny_high");
        file.apply_double(cfg.tikhonov.reg_lambda, "reg_lambda");
        file.apply_int(cfg.tikhonov.reference_frames, "ref_frames");
        file.apply_string(cfg.pretrained_ckpt, "pretrained");
        file.apply_int(cfg.stream_pre_frames, "stream_pre");
        file.apply_int(cfg.stream_post_frames, "stream_post");
        file.apply_int(cfg.transition_burst_frames, "burst_frames");
        file.apply_double(cfg.transition_burst_sigma, "burst_sigma");
        file.apply_int(cfg.eval_window, "eval_window");
        bool images = cfg.write_images;
        file.apply_bool(images, "images");
        cfg.write_images = images;
        file.reject_unknown();

        auto* sub = app.add_subcommand("eval", "run the leave-k-out transition experiment");
        sub->add_option("--config", config_path, "key=value config file");
        sub->add_option("--dataset", cfg.dataset_dir)->required(cfg.dataset_dir.empty());
        sub->add_option("--out", cfg.output_dir)->required(cfg.output_dir.empty());
        sub->add_option("--k", cfg.k);
        sub->add_option("--seed", cfg.seed);
        sub->add_option("--transitions", transitions_text, "comma list of FROM:TO");
        sub->add_option("--epochs", cfg.train.epochs);
        sub->add_option("--lr", cfg.train.learning_rate);
        sub->add_option("--batch", cfg.train.batch_size);
        sub->add_option("--train-seed", cfg.train.seed);
        sub->add_option("--finetune-epochs", cfg.train.finetune_epochs);
        sub->add_option("--finetune-lr", cfg.train.finetune_lr);
        sub->add_option("--f", cfg.model.f);
        sub->add_option("--w1", cfg.model.branch_w1);
        sub->add_option("--w2", cfg.model.branch_w2);
        sub->add_option("--fused", cfg.model.fused);
        sub->add_option("--dec-w", cfg.model.dec_w);
        sub->add_option("--pretrained", cfg.pretrained_ckpt, "reuse an existing checkpoint");
        sub->add_option("--window", cfg.detector.window);
        sub->add_option("--top-k", cfg.detector.top_k, "0 = 10% of links");
        sub->add_option("--alpha", cfg.detector.alpha);
        sub->add_flag("--no-images", no_images, "skip PGM triptychs");
        sub->callback([this]() {
            cfg.transitions = parse_transitions(transitions_text);
            if (no_images) cfg.write_images = false;
            const ExperimentResult result = run_experiment(cfg);
            std::cout << format_report(result);
            std::cout << "report: " << (fs::path(cfg.output_dir) / "report.csv").string() << "\n";
        });
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"drift: RF tomography of underground targets in dynamic environments"};
    app.require_subcommand(1);

    FileConfig file;
    // the config file feeds whichever subcommand is invoked
    try {
        if (auto path = scan_config_path(argc, argv)) file.load(*path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    GenArgs gen;
    CalibrateArgs calibrate;
    DetectArgs detect;
    TrainArgs train;
    FinetuneArgs finetune;
    ReconstructArgs reconstruct;
    EvalArgs eval;

    try {
        const std::string command = argc > 1 ? argv[1] : "";
        FileConfig unused;
        gen.setup(app, command == "gen" ? file : unused);
        calibrate.setup(app, command == "calibrate" ? file : unused);
        detect.setup(app, command == "detect" ? file : unused);
        train.setup(app, command == "train" ? file : unused);
        finetune.setup(app, command == "finetune" ? file : unused);
        reconstruct.setup(app, command == "reconstruct" ? file : unused);
        eval.setup(app, command == "eval" ? file : unused);
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
