#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "drift/common.hpp"
#include "drift/dataset.hpp"
#include "drift/image.hpp"
#include "drift/rng.hpp"
#include "test_util.hpp"

using namespace drift;
namespace fs = std::filesystem;

namespace {

const NetworkGeometry kGeom = build_geometry(40, 4, 4, 2);

SampleRecord make_record() {
    SampleRecord rec;
    rec.tuber_id = "t01";
    rec.env_id = "E1";
    rec.rotation_deg = 0.0;
    rec.mask = TargetMask(4, 4, 0);
    rec.mask.at(1, 2) = 1;
    for (int f = 0; f < 3; ++f) {
        RssFrame frame(kGeom.n_links(), kGeom.channels);
        frame.timestamp = f;
        for (std::size_t i = 0; i < frame.v.size(); ++i)
            frame.v[i] = -50.0 - double(f) - 0.125 * double(i);
        rec.frames.push_back(frame);
    }
    rec.frames[1].at(3, 1) = missing_value();
    return rec;
}

// dataset skeleton so load_sample can find the manifest three levels up
void write_skeleton(const std::string& root) {
    fs::create_directories(root);
    std::ofstream m(fs::path(root) / "manifest.txt");
    m << "format=drift-dataset-v1\nseed=1\ntubers=1\nrotations=1\nframes_per_rotation=3\n"
      << "calib_frames=2\nbaseline_dbm=-55\nnoise_sigma_dbm=0.5\ndrop_prob=0\nburst_rate=0\n"
      << "burst_sigma_dbm=2\nchanged_fraction=0.3\nmax_bias_dbm=5\nattenuation=2\nlambda_cm=4\n"
      << "platform_offset_cm=12\njitter_cm=1.5\nenvironments=E1\ntuber_ids=t01\ndynamic=\n"
      << serialize_geometry(kGeom);
}

}  // namespace

TEST_CASE("write then load round-trips a record exactly") {
    testutil::TempDir tmp("roundtrip");
    write_skeleton(tmp.str());
    const SampleRecord rec = make_record();
    const std::string dir = sample_dir(tmp.str(), rec.tuber_id, rec.env_id, rec.rotation_deg);
    write_sample(dir, rec);

    const SampleRecord back = load_sample(dir);
    CHECK(back.tuber_id == rec.tuber_id);
    CHECK(back.env_id == rec.env_id);
    CHECK(back.rotation_deg == rec.rotation_deg);
    CHECK(back.mask == rec.mask);
    REQUIRE(back.frames.size() == rec.frames.size());
    for (std::size_t f = 0; f < rec.frames.size(); ++f)
        for (std::size_t i = 0; i < rec.frames[f].v.size(); ++i) {
            CHECK(is_missing(back.frames[f].v[i]) == is_missing(rec.frames[f].v[i]));
            if (!is_missing(rec.frames[f].v[i])) CHECK(back.frames[f].v[i] == rec.frames[f].v[i]);
        }
}

TEST_CASE("a row absent from rss.csv loads as MISSING") {
    testutil::TempDir tmp("absent");
    write_skeleton(tmp.str());
    const SampleRecord rec = make_record();
    const std::string dir = sample_dir(tmp.str(), "t01", "E1", 0.0);
    write_sample(dir, rec);

    // drop the (frame 0, link 2, channel 1) row entirely
    const fs::path csv = fs::path(dir) / "rss.csv";
    std::ifstream in(csv);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line))
        if (line.rfind("0,2,1,", 0) != 0) lines.push_back(line);
    in.close();
    std::ofstream out(csv, std::ios::trunc | std::ios::binary);
    for (const auto& l : lines) out << l << "\n";
    out.close();

    const SampleRecord back = load_sample(dir);
    CHECK(is_missing(back.frames[0].at(2, 1)));
    CHECK(!is_missing(back.frames[0].at(2, 0)));
}

TEST_CASE("a gray mask pixel is a parse error") {
    testutil::TempDir tmp("gray");
    write_skeleton(tmp.str());
    const SampleRecord rec = make_record();
    const std::string dir = sample_dir(tmp.str(), "t01", "E1", 0.0);
    write_sample(dir, rec);

    // corrupt one mask byte to a mid-gray value
    const fs::path pgm = fs::path(dir) / "mask.pgm";
    std::fstream file(pgm, std::ios::in | std::ios::out | std::ios::binary);
    file.seekg(0, std::ios::end);
    const auto size = file.tellg();
    file.seekp(static_cast<std::streamoff>(size) - 3);
    const char gray = 127;
    file.write(&gray, 1);
    file.close();

    CHECK_THROWS_AS(load_sample(dir), std::runtime_error);
}

TEST_CASE("parse errors carry file and line information") {
    testutil::TempDir tmp("badline");
    write_skeleton(tmp.str());
    const SampleRecord rec = make_record();
    const std::string dir = sample_dir(tmp.str(), "t01", "E1", 0.0);
    write_sample(dir, rec);

    const fs::path csv = fs::path(dir) / "rss.csv";
    std::ofstream out(csv, std::ios::app | std::ios::binary);
    out << "0,4,x,nonsense\n";
    out.close();

    try {
        load_sample(dir);
        FAIL("expected a parse error");
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("rss.csv") != std::string::npos);
        CHECK(msg.find(":") != std::string::npos);
    }
}

TEST_CASE("tuber meta round trip") {
    testutil::TempDir tmp("meta");
    const TuberMeta meta{3.25, 1.5, 12.75, 2.0, true};
    write_tuber_meta(tmp.sub("meta.txt"), meta);
    const TuberMeta back = load_tuber_meta(tmp.sub("meta.txt"));
    CHECK(back.a_cm == meta.a_cm);
    CHECK(back.b_cm == meta.b_cm);
    CHECK(back.depth_cm == meta.depth_cm);
    CHECK(back.attenuation == meta.attenuation);
    CHECK(back.dynamic == meta.dynamic);
}

TEST_CASE("environment profile round trip") {
    testutil::TempDir tmp("env");
    EnvironmentProfile env = make_environment(kGeom, "E3");
    env.burst_rate = 0.25;
    env.drop_prob = 0.01;
    env.bias(2, 1) = -3.5;
    write_environment(tmp.sub("E3.txt"), env);
    const EnvironmentProfile back = load_environment(tmp.sub("E3.txt"));
    CHECK(back.env_id == "E3");
    CHECK(back.links == env.links);
    CHECK(back.channels == env.channels);
    CHECK(back.burst_rate == env.burst_rate);
    CHECK(back.link_bias_dbm == env.link_bias_dbm);
}

TEST_CASE("leave-k-out split sizes follow the 26-K relation") {
    std::vector<std::string> all;
    for (int i = 1; i <= 26; ++i) all.push_back("t" + std::to_string(i));
    const std::vector<std::string> dynamic{all[2], all[6], all[11], all[17], all[23]};

    const SplitPlan plan = make_split(all, dynamic, 2, 9);
    CHECK(plan.k == 2);
    CHECK(plan.train_ids.size() == 23);
    CHECK(plan.test_ids.size() == 2);
    CHECK(!plan.finetune_id.empty());

    // fine-tune and test tubers come from the dynamic designation
    auto in_dynamic = [&](const std::string& id) {
        return std::find(dynamic.begin(), dynamic.end(), id) != dynamic.end();
    };
    CHECK(in_dynamic(plan.finetune_id));
    for (const auto& id : plan.test_ids) CHECK(in_dynamic(id));

    // disjoint and covering
    std::set<std::string> seen(plan.train_ids.begin(), plan.train_ids.end());
    seen.insert(plan.finetune_id);
    for (const auto& id : plan.test_ids) seen.insert(id);
    CHECK(seen.size() == all.size());
}

TEST_CASE("k = total - 2 leaves a single training tuber") {
    std::vector<std::string> all{"a", "b", "c", "d", "e"};
    const SplitPlan plan = make_split(all, {}, 3, 1);
    CHECK(plan.train_ids.size() == 1);
    CHECK(plan.test_ids.size() == 3);
}

TEST_CASE("split is deterministic in the seed and validates k") {
    std::vector<std::string> all{"a", "b", "c", "d", "e", "f"};
    const SplitPlan p1 = make_split(all, {}, 2, 17);
    const SplitPlan p2 = make_split(all, {}, 2, 17);
    CHECK(p1.train_ids == p2.train_ids);
    CHECK(p1.finetune_id == p2.finetune_id);
    CHECK(p1.test_ids == p2.test_ids);

    CHECK_THROWS_AS(make_split(all, {}, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_split(all, {}, 5, 1), std::invalid_argument);
}

TEST_CASE("random splits stay disjoint (property)") {
    std::vector<std::string> all;
    for (int i = 0; i < 12; ++i) all.push_back("t" + std::to_string(i));
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const int k = 1 + int(rng.below(10));
        const SplitPlan plan = make_split(all, {}, k, rng.next_u64());
        CHECK(plan.train_ids.size() + plan.test_ids.size() + 1 == all.size());
        std::set<std::string> seen(plan.train_ids.begin(), plan.train_ids.end());
        for (const auto& id : plan.test_ids) {
            CHECK(!seen.count(id));
            seen.insert(id);
        }
        CHECK(!seen.count(plan.finetune_id));
    }
}
