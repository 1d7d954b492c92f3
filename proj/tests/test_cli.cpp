#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

struct CommandResult {
    int exit_code;
    std::string output;
};

CommandResult run_cli(const std::string& args, const std::string& env = "") {
    testutil::TempDir out("clilog");
    const std::string log = out.sub("log.txt");
    const std::string cmd = env + " " + std::string(DRIFT_CLI_PATH) + " " + args + " > " + log + " 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(log, std::ios::binary);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return {WEXITSTATUS(status), text};
}

std::string tree_signature(const fs::path& root) {
    std::vector<fs::path> files;
    for (auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::string listing;
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        listing += fs::relative(f, root).string() + "\n";
        listing += std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        listing += '\x01';
    }
    return listing;
}

const char* kSmallGeom = "--nodes 6 --grid 12 --channels 4";

std::string gen_args(const std::string& out, int seed) {
    std::ostringstream ss;
    ss << "gen --out " << out << " --seed " << seed << " " << kSmallGeom
       << " --tubers 5 --rotations 2 --frames 3 --dynamic 2 --envs 2 --calib-frames 30"
       << " --attenuation 3 --offset 14";
    return ss.str();
}

}  // namespace

TEST_CASE("gen writes a dataset and is byte-identical on rerun") {
    testutil::TempDir tmp("gen");
    auto r1 = run_cli(gen_args(tmp.sub("a"), 9));
    REQUIRE(r1.exit_code == 0);
    CHECK(r1.output.find("manifest.txt") != std::string::npos);
    CHECK(fs::exists(tmp.sub("a") + "/manifest.txt"));
    int tuber_dirs = 0;
    for (auto& e : fs::directory_iterator(tmp.sub("a")))
        if (e.is_directory() && e.path().filename().string().starts_with("t")) ++tuber_dirs;
    CHECK(tuber_dirs == 5);

    auto r2 = run_cli(gen_args(tmp.sub("b"), 9));
    REQUIRE(r2.exit_code == 0);
    CHECK(tree_signature(tmp.sub("a")) == tree_signature(tmp.sub("b")));
}

TEST_CASE("gen rejects zero tubers with a usage error") {
    testutil::TempDir tmp("gen0");
    auto r = run_cli("gen --out " + tmp.sub("x") + " --tubers 0");
    CHECK(r.exit_code != 0);
}

TEST_CASE("DRIFT_SEED provides the seed fallback") {
    testutil::TempDir tmp("seed");
    auto with_flag = run_cli(gen_args(tmp.sub("flag"), 31));
    std::string no_seed_args = gen_args(tmp.sub("env"), 31);
    const auto pos = no_seed_args.find("--seed 31");
    no_seed_args.erase(pos, std::string("--seed 31 ").size());
    auto with_env = run_cli(no_seed_args, "DRIFT_SEED=31");
    REQUIRE(with_flag.exit_code == 0);
    REQUIRE(with_env.exit_code == 0);
    CHECK(tree_signature(tmp.sub("flag")) == tree_signature(tmp.sub("env")));
}

TEST_CASE("calibrate and detect: static stream stays STABLE") {
    testutil::TempDir tmp("detect");
    REQUIRE(run_cli(gen_args(tmp.sub("ds"), 10)).exit_code == 0);
    const std::string calib_csv = tmp.sub("ds") + "/calib/E1/0/rss.csv";
    const std::string tuber_csv = tmp.sub("ds") + "/t01/E1/0/rss.csv";

    auto cal = run_cli("calibrate --in " + calib_csv + " --out " + tmp.sub("state.txt"));
    REQUIRE(cal.exit_code == 0);
    CHECK(cal.output.find("sigma_static=") != std::string::npos);
    CHECK(fs::exists(tmp.sub("state.txt")));

    auto det = run_cli("detect --in " + tuber_csv + " --calib " + calib_csv + " --out " +
                       tmp.sub("events.csv"));
    REQUIRE(det.exit_code == 0);
    std::ifstream in(tmp.sub("events.csv"));
    std::string line;
    std::getline(in, line);
    CHECK(line == "frame,score,threshold,decision");
    bool change = false, stable_or_warmup = false;
    while (std::getline(in, line)) {
        if (line.find("CHANGE") != std::string::npos) change = true;
        if (line.find("STABLE") != std::string::npos || line.find("WARMUP") != std::string::npos)
            stable_or_warmup = true;
    }
    CHECK(!change);
    CHECK(stable_or_warmup);

    // the saved state file drives detect the same way
    auto det2 = run_cli("detect --in " + tuber_csv + " --state " + tmp.sub("state.txt") + " --out " +
                        tmp.sub("events2.csv"));
    REQUIRE(det2.exit_code == 0);
    std::ifstream a(tmp.sub("events.csv")), b(tmp.sub("events2.csv"));
    const std::string ca((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    const std::string cb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(ca == cb);
}

TEST_CASE("train, reconstruct, finetune, eval round trip") {
    testutil::TempDir tmp("pipeline");
    REQUIRE(run_cli(gen_args(tmp.sub("ds"), 12)).exit_code == 0);

    const std::string model_flags = " --f 4 --w1 4 --w2 6 --fused 8 --dec-w 4";
    auto train1 = run_cli("train --dataset " + tmp.sub("ds") + " --out " + tmp.sub("m.ckpt") +
                          " --k 1 --epochs 4 --seed 2" + model_flags);
    REQUIRE(train1.exit_code == 0);
    REQUIRE(fs::exists(tmp.sub("m.ckpt")));

    // train twice: byte-identical checkpoints
    auto train2 = run_cli("train --dataset " + tmp.sub("ds") + " --out " + tmp.sub("m2.ckpt") +
                          " --k 1 --epochs 4 --seed 2" + model_flags);
    REQUIRE(train2.exit_code == 0);
    std::ifstream fa(tmp.sub("m.ckpt"), std::ios::binary), fb(tmp.sub("m2.ckpt"), std::ios::binary);
    const std::string ca((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    const std::string cb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    CHECK(ca == cb);

    auto rec = run_cli("reconstruct --model " + tmp.sub("m.ckpt") + " --sample " + tmp.sub("ds") +
                       "/t01/E1/0 --method neural --out " + tmp.sub("mask.pgm") + " --raw " +
                       tmp.sub("raw.pgm"));
    REQUIRE(rec.exit_code == 0);
    CHECK(fs::exists(tmp.sub("mask.pgm")));
    CHECK(fs::exists(tmp.sub("raw.pgm")));

    auto lin = run_cli("reconstruct --sample " + tmp.sub("ds") + "/t01/E1/0 --method linear --out " +
                       tmp.sub("lin.pgm"));
    REQUIRE(lin.exit_code == 0);
    CHECK(fs::exists(tmp.sub("lin.pgm")));

    // fine-tune on a dynamic tuber's post-change recording
    std::ifstream manifest(tmp.sub("ds") + "/manifest.txt");
    std::string line, dynamic_id;
    while (std::getline(manifest, line))
        if (line.rfind("dynamic=", 0) == 0) dynamic_id = line.substr(8, line.find(',') - 8);
    REQUIRE(!dynamic_id.empty());
    auto ft = run_cli("finetune --model " + tmp.sub("m.ckpt") + " --dataset " + tmp.sub("ds") +
                      " --tuber " + dynamic_id + " --env E2 --out " + tmp.sub("ft.ckpt") +
                      " --epochs 3");
    REQUIRE(ft.exit_code == 0);
    CHECK(fs::exists(tmp.sub("ft.ckpt")));

    auto eval = run_cli("eval --dataset " + tmp.sub("ds") + " --out " + tmp.sub("report") +
                        " --k 1 --epochs 4 --finetune-epochs 3 --transitions E1:E2 --no-images" +
                        model_flags);
    REQUIRE(eval.exit_code == 0);
    REQUIRE(fs::exists(tmp.sub("report") + "/report.csv"));
    std::ifstream csv(tmp.sub("report") + "/report.csv");
    int neural = 0, finetuned = 0, linear = 0;
    while (std::getline(csv, line)) {
        neural += line.find(",neural,") != std::string::npos;
        finetuned += line.find(",neural+finetune,") != std::string::npos;
        linear += line.find(",linear,") != std::string::npos;
    }
    CHECK(neural >= 1);
    CHECK(finetuned >= 1);
    CHECK(linear >= 1);
}

TEST_CASE("config files feed defaults; flags override; unknown keys rejected") {
    testutil::TempDir tmp("cfg");
    {
        std::ofstream cfg(tmp.sub("gen.cfg"));
        cfg << "tubers=4\nrotations=2\nframes=2\nnodes=6\ngrid=12\nchannels=4\nseed=5\n"
            << "dynamic=2\nenvs=1\ncalib_frames=12\n";
    }
    auto r = run_cli("gen --config " + tmp.sub("gen.cfg") + " --out " + tmp.sub("ds") + " --tubers 3");
    REQUIRE(r.exit_code == 0);
    int tuber_dirs = 0;
    for (auto& e : fs::directory_iterator(tmp.sub("ds")))
        if (e.is_directory() && e.path().filename().string().starts_with("t")) ++tuber_dirs;
    CHECK(tuber_dirs == 3);  // the flag beat the file's 4

    {
        std::ofstream cfg(tmp.sub("bad.cfg"));
        cfg << "tubers=4\nbogus_key=1\n";
    }
    auto bad = run_cli("gen --config " + tmp.sub("bad.cfg") + " --out " + tmp.sub("ds2"));
    CHECK(bad.exit_code != 0);
    CHECK(bad.output.find("bogus_key") != std::string::npos);
}

TEST_CASE("missing inputs give a single-line machine-parsable error") {
    auto r = run_cli("detect --in /nonexistent/rss.csv --calib /nonexistent/other.csv");
    CHECK(r.exit_code != 0);
    CHECK(r.output.rfind("error:", 0) == 0);
    CHECK(r.output.find('\n') == r.output.size() - 1);  // exactly one line
}
