#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "drift/baseline.hpp"
#include "drift/dataset.hpp"
#include "drift/detector.hpp"
#include "drift/model.hpp"
#include "drift/postprocess.hpp"

namespace drift {

// Published reference numbers from the original hardware study, printed in
// the report footer for context (desk-scale synthetic runs target trends,
// not these values).
inline constexpr double kReferenceLeave2OutRpd = 0.07;
inline constexpr double kReferenceLeave2OutIou = 0.90;
inline constexpr double kReferenceLeave2OutEdeCm = 1.85;
inline constexpr double kReferenceAverageEdeCm = 2.29;
inline constexpr double kReferenceImprovementPercent = 23.2;

struct ExperimentConfig {
    std::string dataset_dir;
    std::string output_dir;
    int k = 2;
    std::uint64_t seed = 7;
    std::vector<std::pair<std::string, std::string>> transitions = {{"E1", "E2"}};

    ModelConfig model;      // channels/nodes/grid_px are overridden from the manifest
    TrainConfig train;
    DetectorConfig detector;  // top_k <= 0 derives 10% of links
    CannyConfig canny;
    TikhonovConfig tikhonov;

    std::string pretrained_ckpt;  // reuse this checkpoint instead of training

    // transition stream replay: pre frames in the source environment, a burst
    // window while the layout changes (skipped when source == target), post
    // frames in the target environment
    int stream_pre_frames = 30;
    int stream_post_frames = 30;
    int transition_burst_frames = 20;
    double transition_burst_sigma = 2.0;

    int eval_window = 10;  // final frame-window per rotation
    bool write_images = true;
};

struct ReportRow {
    std::string transition;  // "E1->E2"
    std::string method;      // "neural" | "neural+finetune" | "linear"
    std::string tuber;       // tuber id, or "MEAN" in aggregates
    MetricReport metrics;
};

struct ExperimentResult {
    SplitPlan split;
    std::vector<ReportRow> rows;
    std::vector<ReportRow> aggregates;
    std::vector<double> pretrain_curve;
    // first CHANGE frame per transition, -1 if the detector stayed quiet
    std::vector<std::pair<std::string, int>> change_frames;
    std::string pretrained_ckpt_path;
};

// Full protocol: pre-train (or load), replay each transition, fine-tune on
// CHANGE, evaluate the held-out tubers, write report.csv/report.txt plus
// per-sample image triptychs under output_dir.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Per-(transition, method) means over the per-sample rows.
std::vector<ReportRow> aggregate(const std::vector<ReportRow>& rows);

// Aligned text table in RPD / IoU / EDE column order, with the reference
// footer.
std::string format_report(const ExperimentResult& result);

}  // namespace drift
