#pragma once

#include <string>
#include <vector>

#include "drift/image.hpp"

namespace drift {

// Hysteresis thresholds are fractions of the maximum gradient magnitude.
struct CannyConfig {
    double gaussian_sigma = 1.0;
    double low_thresh = 0.1;
    double high_thresh = 0.3;
};

// Canny edges (blur, Sobel, non-maximum suppression, hysteresis), then the
// region enclosed by the edges: complement of a border flood fill, largest
// 4-connected component. Components that enclose no interior pixel (open
// arcs, speckle) never qualify, so a constant image yields an empty mask.
TargetMask canny_region(const ReconImage& recon, const CannyConfig& config);

// |a and b| / |a or b|; 1 when both masks are empty.
double iou(const TargetMask& a, const TargetMask& b);

// |count(est) - count(gt)| / count(gt); ground truth must be nonempty.
double rpd(const TargetMask& est, const TargetMask& gt);

// Diameter of the circle whose area equals the absolute pixel-count
// difference, in cm.
double ede(const TargetMask& est, const TargetMask& gt, double pixel_size_cm);

struct MetricReport {
    double iou = 0.0;
    double rpd = 0.0;
    double ede_cm = 0.0;
    double pixel_size_cm = 0.0;
};

MetricReport compute_metrics(const TargetMask& est, const TargetMask& gt, double pixel_size_cm);

struct MetricRow {
    std::string sample;
    MetricReport metrics;
};

// CSV: sample,iou,rpd,ede_cm
void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows);

}  // namespace drift
