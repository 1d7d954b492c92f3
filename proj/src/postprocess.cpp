#include "drift/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <stdexcept>

#include "drift/common.hpp"

namespace drift {

namespace {

// separable Gaussian with replicate borders
ReconImage gaussian_blur(const ReconImage& src, double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        kernel[k + radius] = std::exp(-0.5 * (k * k) / (sigma * sigma));
        sum += kernel[k + radius];
    }
    for (double& k : kernel) k /= sum;

    const int R = src.rows, C = src.cols;
    ReconImage tmp(R, C), dst(R, C);
    for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += kernel[k + radius] * src.at(r, std::clamp(c + k, 0, C - 1));
            tmp.at(r, c) = acc;
        }
    for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += kernel[k + radius] * tmp.at(std::clamp(r + k, 0, R - 1), c);
            dst.at(r, c) = acc;
        }
    return dst;
}

constexpr double kTan67 = 2.414213562373095;  // tan(67.5 deg): 4-sector split

}  // namespace

TargetMask canny_region(const ReconImage& recon, const CannyConfig& config) {
    if (!(config.gaussian_sigma > 0)) throw std::invalid_argument("canny: gaussian_sigma must be positive");
    if (!(config.low_thresh > 0) || !(config.low_thresh < config.high_thresh))
        throw std::invalid_argument("canny: need 0 < low_thresh < high_thresh");
    for (double v : recon.v)
        if (!std::isfinite(v)) throw std::invalid_argument("canny: image has non-finite values");

    const int R = recon.rows, C = recon.cols;
    TargetMask empty(R, C, 0);
    if (R < 3 || C < 3) return empty;

    const ReconImage smooth = gaussian_blur(recon, config.gaussian_sigma);

    // Sobel gradients, replicate border
    ReconImage gx(R, C), gy(R, C), mag(R, C);
    auto px = [&](int r, int c) { return smooth.at(std::clamp(r, 0, R - 1), std::clamp(c, 0, C - 1)); };
    double max_mag = 0.0;
    for (int r = 0; r < R; ++r) {
        for (int c = 0; c < C; ++c) {
            const double sx = px(r - 1, c + 1) + 2 * px(r, c + 1) + px(r + 1, c + 1) -
                              px(r - 1, c - 1) - 2 * px(r, c - 1) - px(r + 1, c - 1);
            const double sy = px(r + 1, c - 1) + 2 * px(r + 1, c) + px(r + 1, c + 1) -
                              px(r - 1, c - 1) - 2 * px(r - 1, c) - px(r - 1, c + 1);
            gx.at(r, c) = sx;
            gy.at(r, c) = sy;
            mag.at(r, c) = std::sqrt(sx * sx + sy * sy);
            max_mag = std::max(max_mag, mag.at(r, c));
        }
    }
    if (max_mag <= 1e-12) return empty;  // flat image: no edges

    // non-maximum suppression along the quantized gradient direction; on a
    // two-pixel plateau the pixel on the brighter side survives (strict test
    // toward the gradient, non-strict away from it)
    ReconImage ridge(R, C, 0.0);
    for (int r = 0; r < R; ++r) {
        for (int c = 0; c < C; ++c) {
            const double m = mag.at(r, c);
            if (m <= 0.0) continue;
            const double ax = std::abs(gx.at(r, c));
            const double ay = std::abs(gy.at(r, c));
            int dr, dc;
            if (ax >= kTan67 * ay) {
                dr = 0;
                dc = 1;
            } else if (ay >= kTan67 * ax) {
                dr = 1;
                dc = 0;
            } else if (gx.at(r, c) * gy.at(r, c) > 0) {
                dr = 1;
                dc = 1;
            } else {
                dr = 1;
                dc = -1;
            }
            // orient (dr,dc) along the gradient vector
            if (gy.at(r, c) * dr + gx.at(r, c) * dc < 0) {
                dr = -dr;
                dc = -dc;
            }
            auto mag_at = [&](int rr, int cc) {
                return (rr < 0 || rr >= R || cc < 0 || cc >= C) ? 0.0 : mag.at(rr, cc);
            };
            const double forward = mag_at(r + dr, c + dc);
            const double backward = mag_at(r - dr, c - dc);
            if (m > forward && m >= backward) ridge.at(r, c) = m;
        }
    }

    // hysteresis linking: strong seeds grow through weak pixels, 8-connected
    const double high_abs = config.high_thresh * max_mag;
    const double low_abs = config.low_thresh * max_mag;
    Grid<std::uint8_t> edge(R, C, 0);
    std::queue<int> frontier;
    for (int i = 0; i < R * C; ++i) {
        if (ridge.v[i] >= high_abs) {
            edge.v[i] = 1;
            frontier.push(i);
        }
    }
    while (!frontier.empty()) {
        const int i = frontier.front();
        frontier.pop();
        const int r = i / C, c = i % C;
        for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc) {
                if (!dr && !dc) continue;
                const int rr = r + dr, cc = c + dc;
                if (rr < 0 || rr >= R || cc < 0 || cc >= C) continue;
                const int j = rr * C + cc;
                if (!edge.v[j] && ridge.v[j] >= low_abs) {
                    edge.v[j] = 1;
                    frontier.push(j);
                }
            }
    }

    // exterior flood fill from the border, 4-connected through non-edge pixels
    Grid<std::uint8_t> exterior(R, C, 0);
    std::queue<int> flood;
    auto seed = [&](int r, int c) {
        const int i = r * C + c;
        if (!edge.v[i] && !exterior.v[i]) {
            exterior.v[i] = 1;
            flood.push(i);
        }
    };
    for (int c = 0; c < C; ++c) {
        seed(0, c);
        seed(R - 1, c);
    }
    for (int r = 0; r < R; ++r) {
        seed(r, 0);
        seed(r, C - 1);
    }
    while (!flood.empty()) {
        const int i = flood.front();
        flood.pop();
        const int r = i / C, c = i % C;
        const int nbr[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
        for (auto& n : nbr) {
            if (n[0] < 0 || n[0] >= R || n[1] < 0 || n[1] >= C) continue;
            const int j = n[0] * C + n[1];
            if (!edge.v[j] && !exterior.v[j]) {
                exterior.v[j] = 1;
                flood.push(j);
            }
        }
    }

    // 4-connected components of the non-exterior set; a real region must
    // enclose at least one non-edge pixel
    Grid<int> label(R, C, 0);
    int best_label = 0;
    std::size_t best_size = 0;
    int next_label = 0;
    for (int start = 0; start < R * C; ++start) {
        if (exterior.v[start] || label.v[start]) continue;
        ++next_label;
        std::size_t size = 0;
        bool has_interior = false;
        std::queue<int> bfs;
        bfs.push(start);
        label.v[start] = next_label;
        while (!bfs.empty()) {
            const int i = bfs.front();
            bfs.pop();
            ++size;
            if (!edge.v[i]) has_interior = true;
            const int r = i / C, c = i % C;
            const int nbr[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
            for (auto& n : nbr) {
                if (n[0] < 0 || n[0] >= R || n[1] < 0 || n[1] >= C) continue;
                const int j = n[0] * C + n[1];
                if (!exterior.v[j] && !label.v[j]) {
                    label.v[j] = next_label;
                    bfs.push(j);
                }
            }
        }
        if (has_interior && size > best_size) {
            best_size = size;
            best_label = next_label;
        }
    }
    if (best_label == 0) return empty;

    // The crest ring straddles the true boundary by half a pixel, so an edge
    // pixel joins the region only when its intensity sits on the interior
    // side of the interior/exterior midpoint.
    double interior_sum = 0.0, exterior_sum = 0.0;
    std::size_t interior_n = 0, exterior_n = 0;
    for (int i = 0; i < R * C; ++i) {
        if (label.v[i] == best_label && !edge.v[i]) {
            interior_sum += recon.v[i];
            ++interior_n;
        } else if (exterior.v[i]) {
            exterior_sum += recon.v[i];
            ++exterior_n;
        }
    }
    const double interior_mean = interior_n ? interior_sum / double(interior_n) : 0.0;
    const double exterior_mean = exterior_n ? exterior_sum / double(exterior_n) : interior_mean;
    const double level = 0.5 * (interior_mean + exterior_mean);
    const bool bright_region = interior_mean >= exterior_mean;

    Grid<std::uint8_t> filtered(R, C, 0);
    for (int i = 0; i < R * C; ++i) {
        if (label.v[i] != best_label) continue;
        if (!edge.v[i])
            filtered.v[i] = 1;
        else if (bright_region ? recon.v[i] >= level : recon.v[i] <= level)
            filtered.v[i] = 1;
    }

    // ownership filtering can nick a component apart; keep the largest piece
    Grid<int> relabel(R, C, 0);
    int final_label = 0, next2 = 0;
    std::size_t final_size = 0;
    for (int start = 0; start < R * C; ++start) {
        if (!filtered.v[start] || relabel.v[start]) continue;
        ++next2;
        std::size_t size = 0;
        std::queue<int> bfs;
        bfs.push(start);
        relabel.v[start] = next2;
        while (!bfs.empty()) {
            const int i = bfs.front();
            bfs.pop();
            ++size;
            const int r = i / C, c = i % C;
            const int nbr[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
            for (auto& n : nbr) {
                if (n[0] < 0 || n[0] >= R || n[1] < 0 || n[1] >= C) continue;
                const int j = n[0] * C + n[1];
                if (filtered.v[j] && !relabel.v[j]) {
                    relabel.v[j] = next2;
                    bfs.push(j);
                }
            }
        }
        if (size > final_size) {
            final_size = size;
            final_label = next2;
        }
    }
    if (final_label == 0) return empty;

    TargetMask region(R, C, 0);
    for (int i = 0; i < R * C; ++i) region.v[i] = relabel.v[i] == final_label ? 1 : 0;
    return region;
}

double iou(const TargetMask& a, const TargetMask& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("iou: mask shapes differ");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool pa = a.v[i] != 0, pb = b.v[i] != 0;
        inter += pa && pb;
        uni += pa || pb;
    }
    return uni == 0 ? 1.0 : double(inter) / double(uni);
}

double rpd(const TargetMask& est, const TargetMask& gt) {
    if (!est.same_shape(gt)) throw std::invalid_argument("rpd: mask shapes differ");
    const std::size_t gt_count = mask_count(gt);
    if (gt_count == 0) throw std::invalid_argument("rpd: ground-truth mask is empty");
    const std::size_t est_count = mask_count(est);
    const std::size_t diff = est_count > gt_count ? est_count - gt_count : gt_count - est_count;
    return double(diff) / double(gt_count);
}

double ede(const TargetMask& est, const TargetMask& gt, double pixel_size_cm) {
    if (!est.same_shape(gt)) throw std::invalid_argument("ede: mask shapes differ");
    const std::size_t a = mask_count(est), b = mask_count(gt);
    const std::size_t diff = a > b ? a - b : b - a;
    const double area_cm2 = double(diff) * pixel_size_cm * pixel_size_cm;
    const double pi = 3.14159265358979323846;
    return 2.0 * std::sqrt(area_cm2 / pi);
}

MetricReport compute_metrics(const TargetMask& est, const TargetMask& gt, double pixel_size_cm) {
    MetricReport r;
    r.iou = iou(est, gt);
    r.rpd = rpd(est, gt);
    r.ede_cm = ede(est, gt, pixel_size_cm);
    r.pixel_size_cm = pixel_size_cm;
    return r;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "sample,iou,rpd,ede_cm\n";
    for (const auto& row : rows)
        out << row.sample << ',' << format_double(row.metrics.iou) << ',' << format_double(row.metrics.rpd)
            << ',' << format_double(row.metrics.ede_cm) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace drift
