#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>

#include "drift/postprocess.hpp"
#include "drift/rng.hpp"
#include "test_util.hpp"

using namespace drift;

namespace {

ReconImage disk_image(int grid, double cx, double cy, double radius, double inside = 1.0) {
    ReconImage img(grid, grid, 0.0);
    for (int r = 0; r < grid; ++r)
        for (int c = 0; c < grid; ++c)
            if (std::hypot(c - cx, r - cy) <= radius) img.at(r, c) = inside;
    return img;
}

TargetMask disk_mask(int grid, double cx, double cy, double radius) {
    TargetMask m(grid, grid, 0);
    for (int r = 0; r < grid; ++r)
        for (int c = 0; c < grid; ++c)
            if (std::hypot(c - cx, r - cy) <= radius) m.at(r, c) = 1;
    return m;
}

TargetMask mask_of(int grid, std::initializer_list<std::pair<int, int>> pixels) {
    TargetMask m(grid, grid, 0);
    for (auto [r, c] : pixels) m.at(r, c) = 1;
    return m;
}

}  // namespace

TEST_CASE("canny recovers sharp disks with IoU >= 0.9") {
    const CannyConfig cfg;
    for (int radius = 4; radius <= 10; ++radius) {
        const ReconImage img = disk_image(36, 18, 18, radius);
        const TargetMask truth = disk_mask(36, 18, 18, radius);
        const TargetMask region = canny_region(img, cfg);
        INFO("radius ", radius, " iou ", iou(region, truth));
        CHECK(iou(region, truth) >= 0.9);
    }
}

TEST_CASE("canny on an off-centre soft blob still closes a region") {
    CannyConfig cfg;
    ReconImage img(36, 36, 0.0);
    for (int r = 0; r < 36; ++r)
        for (int c = 0; c < 36; ++c) {
            const double d = std::hypot(c - 13.4, r - 21.7);
            img.at(r, c) = 1.0 / (1.0 + std::exp(d - 6.0));  // smooth edge near radius 6
        }
    const TargetMask region = canny_region(img, cfg);
    CHECK(mask_count(region) > 50);
    const TargetMask truth = disk_mask(36, 13, 22, 6.0);
    CHECK(iou(region, truth) > 0.7);
}

TEST_CASE("constant images produce empty masks") {
    const CannyConfig cfg;
    CHECK(mask_count(canny_region(ReconImage(36, 36, 0.0), cfg)) == 0);
    CHECK(mask_count(canny_region(ReconImage(36, 36, 0.73), cfg)) == 0);
}

TEST_CASE("of two disjoint blobs only the larger survives") {
    const CannyConfig cfg;
    ReconImage img = disk_image(36, 10, 10, 7);
    for (int r = 0; r < 36; ++r)
        for (int c = 0; c < 36; ++c)
            if (std::hypot(c - 28, r - 28) <= 3.5) img.at(r, c) = 1.0;
    const TargetMask region = canny_region(img, cfg);
    CHECK(mask_count(region) > 0);
    // nothing survives in the small blob's quadrant
    for (int r = 24; r < 33; ++r)
        for (int c = 24; c < 33; ++c) CHECK(region.at(r, c) == 0);
    // the large blob is covered
    CHECK(iou(region, disk_mask(36, 10, 10, 7)) >= 0.9);
}

TEST_CASE("canny is translation-equivariant away from the border") {
    const CannyConfig cfg;
    const ReconImage a = disk_image(36, 15, 16, 5);
    const ReconImage b = disk_image(36, 16, 17, 5);  // shifted by (1, 1)
    const TargetMask ra = canny_region(a, cfg);
    const TargetMask rb = canny_region(b, cfg);
    REQUIRE(mask_count(ra) > 0);
    CHECK(mask_count(ra) == mask_count(rb));
    for (int r = 0; r < 35; ++r)
        for (int c = 0; c < 35; ++c) CHECK(ra.at(r, c) == rb.at(r + 1, c + 1));
}

TEST_CASE("canny validates configuration and input") {
    ReconImage img(8, 8, 0.0);
    CannyConfig bad;
    bad.gaussian_sigma = 0.0;
    CHECK_THROWS_AS(canny_region(img, bad), std::invalid_argument);
    bad = CannyConfig{};
    bad.low_thresh = 0.5;
    bad.high_thresh = 0.2;
    CHECK_THROWS_AS(canny_region(img, bad), std::invalid_argument);
    img.at(3, 3) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(canny_region(img, CannyConfig{}), std::invalid_argument);
}

TEST_CASE("iou anchors") {
    const TargetMask a = mask_of(8, {{1, 1}, {1, 2}, {2, 1}});
    CHECK(iou(a, a) == 1.0);

    const TargetMask b = mask_of(8, {{5, 5}, {5, 6}});
    CHECK(iou(a, b) == 0.0);

    // 100-pixel mask vs its 50-pixel subset
    TargetMask big(20, 20, 0), half(20, 20, 0);
    for (int i = 0; i < 100; ++i) {
        big.v[i] = 1;
        if (i < 50) half.v[i] = 1;
    }
    CHECK(iou(big, half) == 0.5);

    const TargetMask empty(8, 8, 0);
    CHECK(iou(empty, empty) == 1.0);
    CHECK(iou(a, empty) == 0.0);
    CHECK(iou(a, b) == iou(b, a));

    TargetMask other_shape(9, 8, 0);
    CHECK_THROWS_AS(iou(a, other_shape), std::invalid_argument);
}

TEST_CASE("rpd anchors") {
    TargetMask gt(20, 20, 0), est(20, 20, 0);
    for (int i = 0; i < 100; ++i) gt.v[i] = 1;
    for (int i = 0; i < 110; ++i) est.v[i] = 1;
    CHECK(rpd(est, gt) == doctest::Approx(0.10));

    TargetMask est2(20, 20, 0);
    for (int i = 0; i < 70; ++i) est2.v[i] = 1;
    CHECK(rpd(est2, gt) == doctest::Approx(0.30));
    CHECK(rpd(gt, gt) == 0.0);

    const TargetMask empty(20, 20, 0);
    CHECK_THROWS_AS(rpd(est, empty), std::invalid_argument);
}

TEST_CASE("ede anchors") {
    TargetMask gt(20, 20, 0), est(20, 20, 0);
    for (int i = 0; i < 100; ++i) gt.v[i] = 1;
    for (int i = 0; i < 100; ++i) est.v[i] = 1;
    CHECK(ede(est, gt, 2.0) == 0.0);

    // area difference of exactly pi cm^2 -> diameter 2 cm
    TargetMask gt2(20, 20, 0), est2(20, 20, 0);
    gt2.v[0] = 1;
    est2.v[0] = 1;
    est2.v[1] = 1;  // one extra pixel
    const double px = std::sqrt(M_PI);
    CHECK(ede(est2, gt2, px) == doctest::Approx(2.0));

    // counts 120 vs 100 at 2 cm/px: 2*sqrt(80/pi)
    TargetMask est3(20, 20, 0);
    for (int i = 0; i < 120; ++i) est3.v[i] = 1;
    CHECK(ede(est3, gt, 2.0) == doctest::Approx(2.0 * std::sqrt(80.0 / M_PI)));
    CHECK(ede(est3, gt, 2.0) == doctest::Approx(10.0925).epsilon(1e-3));

    // linear in the pixel size
    CHECK(ede(est3, gt, 4.0) == doctest::Approx(2.0 * ede(est3, gt, 2.0)));
}

TEST_CASE("metrics oracle: brute-force counting on 100 random pairs") {
    Rng rng(55);
    for (int trial = 0; trial < 100; ++trial) {
        TargetMask a(12, 12, 0), b(12, 12, 0);
        for (auto& p : a.v) p = rng.bernoulli(0.4) ? 1 : 0;
        for (auto& p : b.v) p = rng.bernoulli(0.4) ? 1 : 0;
        if (mask_count(b) == 0) b.at(0, 0) = 1;

        std::size_t inter = 0, uni = 0, ca = 0, cb = 0;
        for (std::size_t i = 0; i < a.v.size(); ++i) {
            inter += a.v[i] && b.v[i];
            uni += a.v[i] || b.v[i];
            ca += a.v[i];
            cb += b.v[i];
        }
        CHECK(iou(a, b) == (uni ? double(inter) / double(uni) : 1.0));
        CHECK(rpd(a, b) == double(ca > cb ? ca - cb : cb - ca) / double(cb));
        const double px = 1.5;
        const double expect =
            2.0 * std::sqrt(double(ca > cb ? ca - cb : cb - ca) * px * px / M_PI);
        const double got = ede(a, b, px);
        CHECK(std::abs(got - expect) <= 1e-12 * std::max(1.0, expect));
    }
}

TEST_CASE("metrics of a mask against itself are (1, 0, 0)") {
    Rng rng(66);
    TargetMask m(10, 10, 0);
    for (auto& p : m.v) p = rng.bernoulli(0.5) ? 1 : 0;
    if (mask_count(m) == 0) m.at(4, 4) = 1;
    const MetricReport r = compute_metrics(m, m, 2.0);
    CHECK(r.iou == 1.0);
    CHECK(r.rpd == 0.0);
    CHECK(r.ede_cm == 0.0);
}

TEST_CASE("metric csv rows") {
    testutil::TempDir tmp("csv");
    std::vector<MetricRow> rows;
    rows.push_back({"t01", {0.9, 0.1, 1.5, 2.0}});
    rows.push_back({"t02", {0.8, 0.25, 2.5, 2.0}});
    const std::string path = tmp.sub("metrics.csv");
    write_metrics_csv(path, rows);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "sample,iou,rpd,ede_cm");
    std::getline(in, line);
    CHECK(line == "t01,0.9,0.1,1.5");
}
