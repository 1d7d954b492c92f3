#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drift/geometry.hpp"
#include "drift/simulator.hpp"

namespace drift {

// Parsed dataset/manifest.txt: generator config plus the geometry block.
struct Manifest {
    NetworkGeometry geometry;
    std::uint64_t seed = 0;
    int tubers = 0;
    int rotations = 0;
    int frames_per_rotation = 0;
    int calib_frames = 0;
    double baseline_dbm = kDefaultBaselineDbm;
    double noise_sigma_dbm = kDefaultNoiseSigmaDbm;
    double lambda_cm = kDefaultLambdaCm;
    double attenuation = 2.0;
    std::vector<std::string> environments;
    std::vector<std::string> tuber_ids;
    std::vector<std::string> dynamic_ids;
};

struct TuberMeta {
    double a_cm = 0.0;
    double b_cm = 0.0;
    double depth_cm = 0.0;
    double attenuation = 0.0;
    bool dynamic = false;
};

// Leave-k-out split: |test| = k, one fine-tune tuber, the rest train.
struct SplitPlan {
    int k = 0;
    std::vector<std::string> train_ids;
    std::string finetune_id;
    std::vector<std::string> test_ids;
    std::string env_train;
    std::string env_test;
};

Manifest load_manifest(const std::string& dataset_dir);

std::string sample_dir(const std::string& dataset_dir, const std::string& tuber_id,
                       const std::string& env_id, double rotation_deg);

void write_sample(const std::string& dir, const SampleRecord& record);

// `dir` must be a <dataset>/<tuber>/<env>/<rotation> leaf; geometry is taken
// from the dataset manifest three levels up.
SampleRecord load_sample(const std::string& dir);
SampleRecord load_sample(const std::string& dir, const NetworkGeometry& geom);

void write_tuber_meta(const std::string& path, const TuberMeta& meta);
TuberMeta load_tuber_meta(const std::string& path);

void write_environment(const std::string& path, const EnvironmentProfile& env);
EnvironmentProfile load_environment(const std::string& path);
EnvironmentProfile load_environment(const std::string& dataset_dir, const std::string& env_id);

// Deterministic leave-k-out plan. Fine-tune and test tubers are drawn from
// `dynamic_ids` when that set is non-empty, otherwise from all tubers.
SplitPlan make_split(const std::vector<std::string>& all_tubers, const std::vector<std::string>& dynamic_ids,
                     int k, std::uint64_t seed);

inline const char* kCalibTuberId = "calib";

}  // namespace drift
