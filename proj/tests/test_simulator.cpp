#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "drift/common.hpp"
#include "drift/dataset.hpp"
#include "drift/simulator.hpp"
#include "test_util.hpp"

using namespace drift;
namespace fs = std::filesystem;

namespace {

const NetworkGeometry kGeom = build_geometry(72, 16, 36, 16);
const WeightMatrix kWeights = ellipse_weights(kGeom, 4.0);

EnvironmentProfile quiet_env(const NetworkGeometry& g) {
    EnvironmentProfile env = make_environment(g, "E1");
    env.drop_prob = 0.0;
    env.burst_rate = 0.0;
    return env;
}

void tree_signature(const fs::path& root, std::string& listing) {
    std::vector<fs::path> files;
    for (auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        listing += fs::relative(f, root).string() + "\n" + content + "\x01";
    }
}

}  // namespace

TEST_CASE("rasterized circle area matches the analytic area within 15%") {
    TargetSpec spec;
    spec.a_cm = 6;
    spec.b_cm = 6;
    spec.cx_cm = 36;
    spec.cy_cm = 36;
    const TargetMask mask = rasterize_mask(spec, kGeom);
    const double analytic_px = M_PI * 36.0 / 4.0;  // pi r^2 / (2 cm/px)^2
    const double count = double(mask_count(mask));
    CHECK(count > 0.85 * analytic_px);
    CHECK(count < 1.15 * analytic_px);
}

TEST_CASE("sub-pixel target centred on a pixel centre hits exactly one pixel") {
    TargetSpec spec;
    spec.a_cm = 0.4;  // pixel size is 2 cm
    spec.b_cm = 0.4;
    spec.cx_cm = 37.0;  // centre of pixel (18, 18)
    spec.cy_cm = 37.0;
    const TargetMask mask = rasterize_mask(spec, kGeom);
    CHECK(mask_count(mask) == 1);
    CHECK(mask.at(18, 18) == 1);
}

TEST_CASE("rotating an ellipse by 180 degrees leaves the mask unchanged") {
    TargetSpec spec;
    spec.a_cm = 5;
    spec.b_cm = 2;
    spec.cx_cm = 30;
    spec.cy_cm = 40;
    spec.rotation_deg = 23.0;
    const TargetMask a = rasterize_mask(spec, kGeom);
    spec.rotation_deg = 203.0;
    const TargetMask b = rasterize_mask(spec, kGeom);
    CHECK(a == b);
}

TEST_CASE("rasterize rejects a centre outside the area") {
    TargetSpec spec;
    spec.cx_cm = -1;
    CHECK_THROWS_AS(rasterize_mask(spec, kGeom), std::invalid_argument);
}

TEST_CASE("empty scene with zero noise gives the baseline everywhere") {
    const ReconImage empty(36, 36, 0.0);
    const RssFrame f = synthesize_frame(kGeom, kWeights, empty, quiet_env(kGeom), 0.0, 42);
    for (double v : f.v) CHECK(v == -55.0);
}

TEST_CASE("single-pixel target attenuates each link by exactly its weight") {
    ReconImage r(36, 36, 0.0);
    const int pixel = 18 * 36 + 18;
    r.v[pixel] = 2.0;
    const RssFrame f = synthesize_frame(kGeom, kWeights, r, quiet_env(kGeom), 0.0, 42);
    for (int l = 0; l < kGeom.n_links(); ++l)
        for (int c = 0; c < kGeom.channels; ++c)
            CHECK(f.at(l, c) == doctest::Approx(-55.0 - kWeights.at(l, pixel) * 2.0));
}

TEST_CASE("drop_prob = 1 marks every entry MISSING") {
    EnvironmentProfile env = quiet_env(kGeom);
    env.drop_prob = 1.0;
    const ReconImage empty(36, 36, 0.0);
    const RssFrame f = synthesize_frame(kGeom, kWeights, empty, env, 0.5, 7);
    for (double v : f.v) CHECK(is_missing(v));
}

TEST_CASE("noiseless attenuation is monotone and linear in the target") {
    const auto env = quiet_env(kGeom);
    ReconImage small(36, 36, 0.0), big(36, 36, 0.0);
    small.v[18 * 36 + 18] = 2.0;
    big.v[18 * 36 + 18] = 2.0;
    big.v[18 * 36 + 19] = 2.0;
    big.v[10 * 36 + 9] = 2.0;
    const RssFrame f_small = synthesize_frame(kGeom, kWeights, small, env, 0.0, 1);
    const RssFrame f_big = synthesize_frame(kGeom, kWeights, big, env, 0.0, 1);
    for (std::size_t i = 0; i < f_small.v.size(); ++i) CHECK(f_big.v[i] <= f_small.v[i] + 1e-12);

    // disjoint single-pixel targets attenuate additively
    ReconImage p1(36, 36, 0.0), p2(36, 36, 0.0), both(36, 36, 0.0);
    p1.v[100] = 2.0;
    p2.v[700] = 2.0;
    both.v[100] = 2.0;
    both.v[700] = 2.0;
    const RssFrame f1 = synthesize_frame(kGeom, kWeights, p1, env, 0.0, 1);
    const RssFrame f2 = synthesize_frame(kGeom, kWeights, p2, env, 0.0, 1);
    const RssFrame f12 = synthesize_frame(kGeom, kWeights, both, env, 0.0, 1);
    for (std::size_t i = 0; i < f1.v.size(); ++i) {
        const double att1 = -55.0 - f1.v[i];
        const double att2 = -55.0 - f2.v[i];
        const double att12 = -55.0 - f12.v[i];
        CHECK(att12 == doctest::Approx(att1 + att2));
    }
}

TEST_CASE("synthesis is a pure function of the seed") {
    EnvironmentProfile env = quiet_env(kGeom);
    env.drop_prob = 0.1;
    const ReconImage empty(36, 36, 0.0);
    const RssFrame a = synthesize_frame(kGeom, kWeights, empty, env, 0.5, 99);
    const RssFrame b = synthesize_frame(kGeom, kWeights, empty, env, 0.5, 99);
    REQUIRE(a.v.size() == b.v.size());
    for (std::size_t i = 0; i < a.v.size(); ++i) {
        CHECK(is_missing(a.v[i]) == is_missing(b.v[i]));
        if (!is_missing(a.v[i])) CHECK(a.v[i] == b.v[i]);
    }
    const RssFrame c = synthesize_frame(kGeom, kWeights, empty, env, 0.5, 100);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.v.size(); ++i)
        if (is_missing(a.v[i]) != is_missing(c.v[i]) || (!is_missing(a.v[i]) && a.v[i] != c.v[i]))
            any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("MISSING rate converges to drop_prob") {
    EnvironmentProfile env = quiet_env(kGeom);
    env.drop_prob = 0.05;
    const ReconImage empty(36, 36, 0.0);
    std::size_t missing = 0, total = 0;
    for (int f = 0; f < 40; ++f) {
        const RssFrame frame = synthesize_frame(kGeom, kWeights, empty, env, 0.5, 1000 + f);
        for (double v : frame.v) {
            missing += is_missing(v);
            ++total;
        }
    }
    const double rate = double(missing) / double(total);
    const double se = std::sqrt(0.05 * 0.95 / double(total));
    CHECK(std::abs(rate - 0.05) < 3 * se);
}

TEST_CASE("switch_environment changes exactly ceil(fraction*M) links") {
    const auto env = quiet_env(kGeom);
    const double fraction = 1.0 / kGeom.n_links();  // one link
    const EnvironmentProfile next = switch_environment(env, 5, fraction, 5.0);
    std::size_t changed_entries = 0;
    for (std::size_t i = 0; i < env.link_bias_dbm.size(); ++i)
        changed_entries += env.link_bias_dbm[i] != next.link_bias_dbm[i];
    CHECK(changed_entries == std::size_t(kGeom.channels));

    const EnvironmentProfile wide = switch_environment(env, 6, 0.2, 5.0);
    std::size_t changed_links = 0;
    for (int l = 0; l < kGeom.n_links(); ++l) {
        bool diff = false;
        for (int c = 0; c < kGeom.channels; ++c)
            if (env.bias(l, c) != wide.bias(l, c)) diff = true;
        changed_links += diff;
    }
    CHECK(changed_links == std::size_t(std::ceil(0.2 * kGeom.n_links())));
    for (double b : wide.link_bias_dbm) CHECK(std::abs(b) <= 5.0);

    const EnvironmentProfile again = switch_environment(env, 6, 0.2, 5.0);
    CHECK(again.link_bias_dbm == wide.link_bias_dbm);
}

TEST_CASE("switch_environment validates its parameters") {
    const auto env = quiet_env(kGeom);
    CHECK_THROWS_AS(switch_environment(env, 1, 0.0, 5.0), std::invalid_argument);
    CHECK_THROWS_AS(switch_environment(env, 1, 1.5, 5.0), std::invalid_argument);
    CHECK_THROWS_AS(switch_environment(env, 1, 0.5, 6.0), std::invalid_argument);
}

TEST_CASE("generate_dataset writes the documented tree") {
    testutil::TempDir tmp("gen");
    SimConfig cfg;
    cfg.out_dir = tmp.sub("ds");
    cfg.seed = 3;
    cfg.tubers = 6;
    cfg.rotations = 2;
    cfg.frames_per_rotation = 2;
    cfg.dynamic_count = 2;
    cfg.environment_count = 2;
    cfg.calib_frames = 4;
    cfg.node_count = 6;
    cfg.grid_px = 12;
    cfg.channels = 3;
    const std::string manifest_path = generate_dataset(cfg);
    CHECK(fs::exists(manifest_path));

    const Manifest m = load_manifest(cfg.out_dir);
    CHECK(m.tuber_ids.size() == 6);
    CHECK(m.dynamic_ids.size() == 2);
    CHECK(m.environments == std::vector<std::string>{"E1", "E2"});

    // every tuber has E1 data; only dynamic tubers also carry E2 data
    for (const auto& id : m.tuber_ids) {
        CHECK(fs::exists(fs::path(cfg.out_dir) / id / "E1" / "0" / "rss.csv"));
        const bool dynamic =
            std::find(m.dynamic_ids.begin(), m.dynamic_ids.end(), id) != m.dynamic_ids.end();
        CHECK(fs::exists(fs::path(cfg.out_dir) / id / "E2") == dynamic);
        CHECK(fs::exists(fs::path(cfg.out_dir) / id / "meta.txt"));
    }
    CHECK(fs::exists(fs::path(cfg.out_dir) / "calib" / "E1" / "0" / "rss.csv"));
    CHECK(fs::exists(fs::path(cfg.out_dir) / "environments" / "E2.txt"));

    const EnvironmentProfile e2 = load_environment(cfg.out_dir, "E2");
    CHECK(e2.links == 30);
    bool any_bias = false;
    for (double b : e2.link_bias_dbm) any_bias |= b != 0.0;
    CHECK(any_bias);
}

TEST_CASE("smallest config produces exactly one record") {
    testutil::TempDir tmp("gen1");
    SimConfig cfg;
    cfg.out_dir = tmp.sub("ds");
    cfg.tubers = 1;
    cfg.rotations = 1;
    cfg.frames_per_rotation = 1;
    cfg.dynamic_count = 0;
    cfg.environment_count = 1;
    cfg.calib_frames = 2;
    cfg.node_count = 4;
    cfg.grid_px = 4;
    cfg.channels = 1;
    generate_dataset(cfg);
    const SampleRecord rec = load_sample(sample_dir(cfg.out_dir, "t01", "E1", 0.0));
    CHECK(rec.frames.size() == 1);
    CHECK(rec.tuber_id == "t01");
}

TEST_CASE("same seed regenerates a byte-identical dataset") {
    testutil::TempDir tmp("twice");
    SimConfig cfg;
    cfg.tubers = 3;
    cfg.rotations = 2;
    cfg.frames_per_rotation = 2;
    cfg.dynamic_count = 1;
    cfg.environment_count = 2;
    cfg.calib_frames = 3;
    cfg.node_count = 5;
    cfg.grid_px = 8;
    cfg.channels = 2;
    cfg.seed = 11;
    cfg.out_dir = tmp.sub("a");
    generate_dataset(cfg);
    cfg.out_dir = tmp.sub("b");
    generate_dataset(cfg);

    std::string la, lb;
    tree_signature(tmp.sub("a"), la);
    tree_signature(tmp.sub("b"), lb);
    CHECK(la == lb);
    CHECK(!la.empty());
}
