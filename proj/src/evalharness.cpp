#include "drift/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "drift/common.hpp"
#include "drift/rng.hpp"

namespace fs = std::filesystem;

namespace drift {

namespace {

constexpr std::uint64_t kStreamReplay = 0x7265706c6179ull;  // replay sub-stream tag

std::vector<double> rotation_angles(const Manifest& manifest) {
    std::vector<double> angles;
    for (int r = 0; r < manifest.rotations; ++r) angles.push_back(360.0 * r / manifest.rotations);
    return angles;
}

std::vector<RssFrame> imputed_frames(const SampleRecord& record, const NetworkGeometry& geom,
                                     double fallback_dbm) {
    ImputationState state(geom.n_links(), geom.channels, fallback_dbm);
    std::vector<RssFrame> out;
    out.reserve(record.frames.size());
    for (const RssFrame& f : record.frames) out.push_back(impute(f, state));
    return out;
}

ReconImage mask_attenuation_image(const TargetMask& mask, double attenuation) {
    ReconImage r(mask.rows, mask.cols);
    for (std::size_t i = 0; i < mask.size(); ++i) r.v[i] = mask.v[i] ? attenuation : 0.0;
    return r;
}

struct EvalInputs {
    std::vector<RssTensor> raw_tensors;     // one per rotation (final-window mean)
    std::vector<RssFrame> mean_frames;      // same, as frames for the linear path
    std::vector<TargetMask> masks;          // per rotation
};

EvalInputs gather_eval_inputs(const std::string& dataset_dir, const Manifest& manifest,
                              const std::string& tuber, const std::string& env, int eval_window) {
    EvalInputs inputs;
    for (double angle : rotation_angles(manifest)) {
        const std::string dir = sample_dir(dataset_dir, tuber, env, angle);
        const SampleRecord record = load_sample(dir, manifest.geometry);
        const auto frames = imputed_frames(record, manifest.geometry, manifest.baseline_dbm);
        const std::size_t window =
            std::min<std::size_t>(frames.size(), static_cast<std::size_t>(std::max(1, eval_window)));
        RssFrame mean = mean_frame(frames, frames.size() - window, window);
        inputs.raw_tensors.push_back(to_tensor(mean, manifest.geometry));
        inputs.mean_frames.push_back(std::move(mean));
        inputs.masks.push_back(record.mask);
    }
    return inputs;
}

MetricReport average_metrics(const std::vector<MetricReport>& reports) {
    MetricReport mean;
    for (const MetricReport& r : reports) {
        mean.iou += r.iou;
        mean.rpd += r.rpd;
        mean.ede_cm += r.ede_cm;
        mean.pixel_size_cm = r.pixel_size_cm;
    }
    const double n = double(reports.size());
    mean.iou /= n;
    mean.rpd /= n;
    mean.ede_cm /= n;
    return mean;
}

std::string transition_label(const std::string& from, const std::string& to) { return from + "->" + to; }

std::string transition_file_tag(const std::string& from, const std::string& to) {
    return from + "_to_" + to;
}

}  // namespace

std::vector<ReportRow> aggregate(const std::vector<ReportRow>& rows) {
    if (rows.empty()) throw std::invalid_argument("aggregate: no rows");
    std::vector<ReportRow> out;
    for (const ReportRow& row : rows) {
        auto it = std::find_if(out.begin(), out.end(), [&](const ReportRow& a) {
            return a.transition == row.transition && a.method == row.method;
        });
        if (it == out.end()) {
            ReportRow agg;
            agg.transition = row.transition;
            agg.method = row.method;
            agg.tuber = "MEAN";
            out.push_back(agg);
            it = out.end() - 1;
        }
        it->metrics.iou += row.metrics.iou;
        it->metrics.rpd += row.metrics.rpd;
        it->metrics.ede_cm += row.metrics.ede_cm;
        it->metrics.pixel_size_cm = row.metrics.pixel_size_cm;
    }
    for (ReportRow& agg : out) {
        double n = 0;
        for (const ReportRow& row : rows)
            if (row.transition == agg.transition && row.method == agg.method) ++n;
        agg.metrics.iou /= n;
        agg.metrics.rpd /= n;
        agg.metrics.ede_cm /= n;
    }
    return out;
}

std::string format_report(const ExperimentResult& result) {
    std::ostringstream out;
    auto line = [&out](const ReportRow& row) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%-10s %-16s %-6s %8.3f %8.3f %8.3f\n", row.transition.c_str(),
                      row.method.c_str(), row.tuber.c_str(), row.metrics.rpd, row.metrics.iou,
                      row.metrics.ede_cm);
        out << buf;
    };
    out << "transition method           tuber       RPD      IoU      EDE\n";
    for (const ReportRow& row : result.rows) line(row);
    out << "---\n";
    for (const ReportRow& row : result.aggregates) line(row);
    out << "---\n";
    for (const auto& [label, frame] : result.change_frames) {
        out << "change " << label << ": ";
        if (frame < 0)
            out << "none\n";
        else
            out << "frame " << frame << "\n";
    }
    char footer[256];
    std::snprintf(footer, sizeof(footer),
                  "reference (hardware study): leave-2-out RPD %.2f, IoU %.2f, EDE %.2f cm; "
                  "overall EDE %.2f cm (%.1f%% improvement)\n",
                  kReferenceLeave2OutRpd, kReferenceLeave2OutIou, kReferenceLeave2OutEdeCm,
                  kReferenceAverageEdeCm, kReferenceImprovementPercent);
    out << footer;
    return out.str();
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    const Manifest manifest = load_manifest(config.dataset_dir);
    const NetworkGeometry& geom = manifest.geometry;
    const std::string geom_hash = geometry_hash(geom);
    if (config.transitions.empty()) throw std::invalid_argument("run_experiment: no transitions");
    for (const auto& [from, to] : config.transitions) {
        for (const std::string& env : {from, to})
            if (std::find(manifest.environments.begin(), manifest.environments.end(), env) ==
                manifest.environments.end())
                throw std::invalid_argument("run_experiment: environment " + env + " not in dataset");
    }
    fs::create_directories(config.output_dir);

    ExperimentResult result;
    result.split = make_split(manifest.tuber_ids, manifest.dynamic_ids, config.k, config.seed);
    result.split.env_train = config.transitions.front().first;
    result.split.env_test = config.transitions.back().second;

    ModelConfig model_cfg = config.model;
    model_cfg.channels = geom.channels;
    model_cfg.nodes = geom.n_nodes();
    model_cfg.grid_px = geom.grid_px;

    // 1. pre-train on the train tubers in the source environment (or reuse)
    DriftModel pretrained;
    if (!config.pretrained_ckpt.empty()) {
        pretrained = load_checkpoint(config.pretrained_ckpt);
        if (pretrained.geom_hash != geom_hash)
            throw std::runtime_error("run_experiment: checkpoint geometry hash " + pretrained.geom_hash +
                                     " does not match dataset " + geom_hash);
    } else {
        pretrained = build_model(model_cfg, config.train.seed);
        pretrained.geom_hash = geom_hash;
        std::vector<TrainSample> train_set;
        for (const std::string& tuber : result.split.train_ids) {
            for (double angle : rotation_angles(manifest)) {
                const SampleRecord record = load_sample(
                    sample_dir(config.dataset_dir, tuber, result.split.env_train, angle), geom);
                train_set.push_back(make_train_sample(record, geom, manifest.baseline_dbm));
            }
        }
        TrainResult tr = train(pretrained, train_set, config.train);
        result.pretrain_curve = tr.loss_curve;
    }
    result.pretrained_ckpt_path = (fs::path(config.output_dir) / "pretrained.ckpt").string();
    save_checkpoint(pretrained, result.pretrained_ckpt_path);

    DetectorConfig det_cfg = config.detector;
    if (det_cfg.top_k <= 0) det_cfg.top_k = default_top_k(geom.n_links());

    const WeightMatrix weights = ellipse_weights(geom, manifest.lambda_cm);
    const RtiSolver solver(weights, config.tikhonov.reg_lambda, geom.grid_px);

    DriftModel current = pretrained;  // continually adapted copy

    for (std::size_t ti = 0; ti < config.transitions.size(); ++ti) {
        const auto& [env_from, env_to] = config.transitions[ti];
        const std::string label = transition_label(env_from, env_to);

        // 2. calibrate on the source-environment static recording
        const SampleRecord calib_record =
            load_sample(sample_dir(config.dataset_dir, kCalibTuberId, env_from, 0.0), geom);
        const auto calib_frames = imputed_frames(calib_record, geom, manifest.baseline_dbm);
        const double sigma_static = calibrate(calib_frames, det_cfg);

        // 3. replay the transition stream with the fine-tune tuber in place
        const SampleRecord ft_rot0 = load_sample(
            sample_dir(config.dataset_dir, result.split.finetune_id, env_from, 0.0), geom);
        const ReconImage r_img = mask_attenuation_image(ft_rot0.mask, manifest.attenuation);
        const EnvironmentProfile profile_from = load_environment(config.dataset_dir, env_from);
        const EnvironmentProfile profile_to = load_environment(config.dataset_dir, env_to);
        EnvironmentProfile profile_burst = profile_to;
        profile_burst.burst_rate = 1.0;
        profile_burst.burst_sigma_dbm = config.transition_burst_sigma;

        std::vector<RssFrame> stream;
        int frame_no = 0;
        auto synth = [&](const EnvironmentProfile& env, int count) {
            for (int i = 0; i < count; ++i, ++frame_no) {
                RssFrame f = synthesize_frame(geom, weights, r_img, env, manifest.noise_sigma_dbm,
                                              derive_seed(config.seed, {kStreamReplay, ti,
                                                                        std::uint64_t(frame_no)}),
                                              manifest.baseline_dbm);
                f.timestamp = frame_no;
                stream.push_back(std::move(f));
            }
        };
        synth(profile_from, config.stream_pre_frames);
        if (env_from != env_to) synth(profile_burst, config.transition_burst_frames);
        synth(profile_to, config.stream_post_frames);

        DetectorState det_state;
        det_state.sigma_static = sigma_static;
        ImputationState imp_state(geom.n_links(), geom.channels, manifest.baseline_dbm);
        std::vector<DetectorEvent> events;
        int change_frame = -1;
        for (const RssFrame& frame : stream) {
            const RssFrame filled = impute(frame, imp_state);
            const Decision decision = step(filled, det_state, det_cfg);
            DetectorEvent ev;
            ev.frame = frame.timestamp;
            ev.score = decision == Decision::Warmup ? missing_value() : det_state.last_score;
            ev.threshold = det_cfg.alpha * sigma_static;
            ev.decision = decision;
            events.push_back(ev);
            if (decision == Decision::Change && change_frame < 0) change_frame = frame.timestamp;
        }
        write_event_log((fs::path(config.output_dir) /
                         ("detector_" + transition_file_tag(env_from, env_to) + ".csv"))
                            .string(),
                        events);
        result.change_frames.emplace_back(label, change_frame);

        // 4. one-shot fine-tune on the fine-tune tuber's post-change recording
        if (change_frame >= 0) {
            std::vector<TrainSample> recording;
            for (double angle : rotation_angles(manifest)) {
                const SampleRecord record = load_sample(
                    sample_dir(config.dataset_dir, result.split.finetune_id, env_to, angle), geom);
                recording.push_back(make_train_sample(record, geom, manifest.baseline_dbm));
            }
            TrainConfig ft_cfg = config.train;
            ft_cfg.seed = derive_seed(config.train.seed, {0xF17E, ti});
            one_shot_finetune(current, recording, ft_cfg);
        }

        // 5. evaluate every held-out tuber in the target environment
        const auto baseline_rss = estimate_rss_baseline(calib_frames, config.tikhonov.reference_frames);
        const double px_cm = geom.pixel_size_cm();
        for (const std::string& tuber : result.split.test_ids) {
            const EvalInputs inputs =
                gather_eval_inputs(config.dataset_dir, manifest, tuber, env_to, config.eval_window);

            struct MethodEval {
                const char* name;
                std::vector<MetricReport> per_rotation;
                TargetMask first_post;
                ReconImage first_raw;
            };
            MethodEval methods[3] = {{"neural", {}, {}, {}},
                                     {"neural+finetune", {}, {}, {}},
                                     {"linear", {}, {}, {}}};
            for (std::size_t rot = 0; rot < inputs.raw_tensors.size(); ++rot) {
                const ReconImage recon_plain = reconstruct(pretrained, inputs.raw_tensors[rot]);
                const ReconImage recon_ft = reconstruct(current, inputs.raw_tensors[rot]);
                const ReconImage recon_lin =
                    solver.solve(attenuation_vector(inputs.mean_frames[rot], baseline_rss));
                const ReconImage* recons[3] = {&recon_plain, &recon_ft, &recon_lin};
                for (int m = 0; m < 3; ++m) {
                    TargetMask post = canny_region(*recons[m], config.canny);
                    methods[m].per_rotation.push_back(compute_metrics(post, inputs.masks[rot], px_cm));
                    if (rot == 0) {
                        methods[m].first_post = post;
                        methods[m].first_raw = *recons[m];
                    }
                }
            }
            for (const MethodEval& m : methods) {
                ReportRow row;
                row.transition = label;
                row.method = m.name;
                row.tuber = tuber;
                row.metrics = average_metrics(m.per_rotation);
                result.rows.push_back(row);
                if (config.write_images) {
                    const fs::path img_dir = fs::path(config.output_dir) / "images" /
                                             transition_file_tag(env_from, env_to) / m.name;
                    fs::create_directories(img_dir);
                    write_pgm((img_dir / (tuber + "_gt.pgm")).string(), inputs.masks[0]);
                    write_pgm_scaled((img_dir / (tuber + "_raw.pgm")).string(), m.first_raw);
                    write_pgm((img_dir / (tuber + "_post.pgm")).string(), m.first_post);
                }
            }
        }
    }

    result.aggregates = aggregate(result.rows);

    // report.csv: per-sample rows then MEAN rows, Table-1 column order
    {
        std::ofstream csv(fs::path(config.output_dir) / "report.csv", std::ios::binary);
        if (!csv) throw std::runtime_error("cannot write report.csv");
        csv << "transition,method,tuber,rpd,iou,ede_cm\n";
        auto emit = [&csv](const ReportRow& row) {
            csv << row.transition << ',' << row.method << ',' << row.tuber << ','
                << format_double(row.metrics.rpd) << ',' << format_double(row.metrics.iou) << ','
                << format_double(row.metrics.ede_cm) << '\n';
        };
        for (const ReportRow& row : result.rows) emit(row);
        for (const ReportRow& row : result.aggregates) emit(row);
        if (!csv) throw std::runtime_error("write failed: report.csv");
    }
    {
        std::ofstream txt(fs::path(config.output_dir) / "report.txt", std::ios::binary);
        if (!txt) throw std::runtime_error("cannot write report.txt");
        txt << format_report(result);
        if (!txt) throw std::runtime_error("write failed: report.txt");
    }
    return result;
}

}  // namespace drift
