#include "drift/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "drift/common.hpp"
#include "drift/image.hpp"
#include "drift/kvfile.hpp"
#include "drift/rng.hpp"

namespace fs = std::filesystem;

namespace drift {

namespace {

std::vector<std::string> split_csv_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t end = s.find(',', pos);
        if (end == std::string::npos) end = s.size();
        if (end > pos) out.push_back(s.substr(pos, end - pos));
        pos = end + 1;
    }
    return out;
}

}  // namespace

Manifest load_manifest(const std::string& dataset_dir) {
    const std::string path = (fs::path(dataset_dir) / "manifest.txt").string();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();

    KvFile kv = KvFile::parse_text(text, path);
    Manifest m;
    m.geometry = parse_geometry(text, path);
    m.seed = static_cast<std::uint64_t>(kv.get_long("seed"));
    m.tubers = static_cast<int>(kv.get_long("tubers"));
    m.rotations = static_cast<int>(kv.get_long("rotations"));
    m.frames_per_rotation = static_cast<int>(kv.get_long("frames_per_rotation"));
    m.calib_frames = static_cast<int>(kv.get_long("calib_frames"));
    m.baseline_dbm = kv.get_double("baseline_dbm");
    m.noise_sigma_dbm = kv.get_double("noise_sigma_dbm");
    m.lambda_cm = kv.get_double("lambda_cm");
    m.attenuation = kv.get_double("attenuation");
    m.environments = split_csv_list(kv.get("environments"));
    m.tuber_ids = split_csv_list(kv.get("tuber_ids"));
    m.dynamic_ids = split_csv_list(kv.get("dynamic"));
    return m;
}

std::string sample_dir(const std::string& dataset_dir, const std::string& tuber_id,
                       const std::string& env_id, double rotation_deg) {
    return (fs::path(dataset_dir) / tuber_id / env_id / format_double(rotation_deg)).string();
}

void write_sample(const std::string& dir, const SampleRecord& record) {
    if (record.frames.empty()) throw std::invalid_argument("write_sample: record has no frames");
    fs::create_directories(dir);

    std::ofstream csv(fs::path(dir) / "rss.csv", std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write rss.csv in " + dir);
    csv << "frame,link,channel,rss_dbm\n";
    std::string line;
    for (std::size_t f = 0; f < record.frames.size(); ++f) {
        const RssFrame& frame = record.frames[f];
        for (int l = 0; l < frame.links; ++l) {
            for (int c = 0; c < frame.channels; ++c) {
                line.clear();
                line += std::to_string(f);
                line += ',';
                line += std::to_string(l);
                line += ',';
                line += std::to_string(c);
                line += ',';
                const double v = frame.at(l, c);
                if (!is_missing(v)) line += format_double(v);
                line += '\n';
                csv << line;
            }
        }
    }
    if (!csv) throw std::runtime_error("write failed: rss.csv in " + dir);

    write_pgm((fs::path(dir) / "mask.pgm").string(), record.mask);
}

SampleRecord load_sample(const std::string& dir) {
    const fs::path leaf(dir);
    const fs::path root = leaf.parent_path().parent_path().parent_path();
    Manifest manifest = load_manifest(root.string());
    return load_sample(dir, manifest.geometry);
}

SampleRecord load_sample(const std::string& dir, const NetworkGeometry& geom) {
    const fs::path leaf(dir);
    SampleRecord record;
    record.tuber_id = leaf.parent_path().parent_path().filename().string();
    record.env_id = leaf.parent_path().filename().string();
    record.rotation_deg = parse_double(leaf.filename().string(), "rotation directory");

    record.mask = read_pgm_mask((leaf / "mask.pgm").string());
    if (record.mask.rows != geom.grid_px || record.mask.cols != geom.grid_px)
        throw std::runtime_error(dir + ": mask is " + std::to_string(record.mask.rows) + "x" +
                                 std::to_string(record.mask.cols) + " but manifest grid_px is " +
                                 std::to_string(geom.grid_px));

    const std::string csv_path = (leaf / "rss.csv").string();
    std::ifstream csv(csv_path, std::ios::binary);
    if (!csv) throw std::runtime_error("cannot open " + csv_path);
    std::string header;
    if (!std::getline(csv, header)) throw std::runtime_error(csv_path + ":1: empty file");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != "frame,link,channel,rss_dbm")
        throw std::runtime_error(csv_path + ":1: unexpected header '" + header + "'");

    struct Row {
        int frame, link, channel;
        double value;  // NaN = missing
    };
    std::vector<Row> rows;
    std::string line;
    int lineno = 1;
    int max_frame = -1;
    while (std::getline(csv, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = csv_path + ":" + std::to_string(lineno);
        std::size_t c1 = line.find(',');
        std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        std::size_t c3 = c2 == std::string::npos ? std::string::npos : line.find(',', c2 + 1);
        if (c3 == std::string::npos) throw std::runtime_error(where + ": expected 4 fields");
        Row row{};
        row.frame = static_cast<int>(parse_long(std::string_view(line).substr(0, c1), where.c_str()));
        row.link = static_cast<int>(parse_long(std::string_view(line).substr(c1 + 1, c2 - c1 - 1), where.c_str()));
        row.channel = static_cast<int>(parse_long(std::string_view(line).substr(c2 + 1, c3 - c2 - 1), where.c_str()));
        std::string_view field = std::string_view(line).substr(c3 + 1);
        row.value = field.empty() ? missing_value() : parse_double(field, where.c_str());
        if (row.frame < 0) throw std::runtime_error(where + ": negative frame index");
        if (row.link < 0 || row.link >= geom.n_links())
            throw std::runtime_error(where + ": link " + std::to_string(row.link) + " out of range for manifest geometry");
        if (row.channel < 0 || row.channel >= geom.channels)
            throw std::runtime_error(where + ": channel " + std::to_string(row.channel) + " out of range for manifest geometry");
        max_frame = std::max(max_frame, row.frame);
        rows.push_back(row);
    }
    if (max_frame < 0) throw std::runtime_error(csv_path + ": no data rows");

    record.frames.assign(static_cast<std::size_t>(max_frame) + 1,
                         RssFrame(geom.n_links(), geom.channels, missing_value()));
    for (std::size_t f = 0; f < record.frames.size(); ++f)
        record.frames[f].timestamp = static_cast<int>(f);
    for (const Row& row : rows) record.frames[row.frame].at(row.link, row.channel) = row.value;
    return record;
}

void write_tuber_meta(const std::string& path, const TuberMeta& meta) {
    KvFile kv;
    kv.set_double("a_cm", meta.a_cm);
    kv.set_double("b_cm", meta.b_cm);
    kv.set_double("depth_cm", meta.depth_cm);
    kv.set_double("attenuation", meta.attenuation);
    kv.set_long("dynamic", meta.dynamic ? 1 : 0);
    kv.save(path);
}

TuberMeta load_tuber_meta(const std::string& path) {
    KvFile kv = KvFile::load(path);
    TuberMeta meta;
    meta.a_cm = kv.get_double("a_cm");
    meta.b_cm = kv.get_double("b_cm");
    meta.depth_cm = kv.get_double("depth_cm");
    meta.attenuation = kv.get_double("attenuation");
    meta.dynamic = kv.get_long("dynamic") != 0;
    return meta;
}

void write_environment(const std::string& path, const EnvironmentProfile& env) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "env_id=" << env.env_id << "\n";
    out << "links=" << env.links << "\n";
    out << "channels=" << env.channels << "\n";
    out << "burst_rate=" << format_double(env.burst_rate) << "\n";
    out << "burst_sigma_dbm=" << format_double(env.burst_sigma_dbm) << "\n";
    out << "drop_prob=" << format_double(env.drop_prob) << "\n";
    out << "bias=";
    for (std::size_t i = 0; i < env.link_bias_dbm.size(); ++i) {
        if (i) out << ',';
        out << format_double(env.link_bias_dbm[i]);
    }
    out << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

EnvironmentProfile load_environment(const std::string& path) {
    KvFile kv = KvFile::load(path);
    EnvironmentProfile env;
    env.env_id = kv.get("env_id");
    env.links = static_cast<int>(kv.get_long("links"));
    env.channels = static_cast<int>(kv.get_long("channels"));
    env.burst_rate = kv.get_double("burst_rate");
    env.burst_sigma_dbm = kv.get_double("burst_sigma_dbm");
    env.drop_prob = kv.get_double("drop_prob");
    const auto fields = split_csv_list(kv.get("bias"));
    if (fields.size() != static_cast<std::size_t>(env.links) * env.channels)
        throw std::runtime_error(path + ": bias has " + std::to_string(fields.size()) + " entries, want " +
                                 std::to_string(static_cast<std::size_t>(env.links) * env.channels));
    env.link_bias_dbm.reserve(fields.size());
    for (const auto& f : fields) env.link_bias_dbm.push_back(parse_double(f, "bias"));
    return env;
}

EnvironmentProfile load_environment(const std::string& dataset_dir, const std::string& env_id) {
    return load_environment((fs::path(dataset_dir) / "environments" / (env_id + ".txt")).string());
}

SplitPlan make_split(const std::vector<std::string>& all_tubers, const std::vector<std::string>& dynamic_ids,
                     int k, std::uint64_t seed) {
    const int total = static_cast<int>(all_tubers.size());
    if (k < 1 || k > total - 2)
        throw std::invalid_argument("make_split: k must be in [1, total-2], got k=" + std::to_string(k) +
                                    " with " + std::to_string(total) + " tubers");
    std::vector<std::string> pool = dynamic_ids.empty() ? all_tubers : dynamic_ids;
    if (static_cast<int>(pool.size()) < k + 1)
        throw std::invalid_argument("make_split: need at least k+1 dynamic tubers");

    Rng rng(seed);
    const auto picks = rng.sample_indices(pool.size(), static_cast<std::size_t>(k) + 1);
    SplitPlan plan;
    plan.k = k;
    plan.finetune_id = pool[picks[0]];
    for (std::size_t i = 1; i < picks.size(); ++i) plan.test_ids.push_back(pool[picks[i]]);
    std::sort(plan.test_ids.begin(), plan.test_ids.end());
    for (const auto& id : all_tubers) {
        if (id == plan.finetune_id) continue;
        if (std::find(plan.test_ids.begin(), plan.test_ids.end(), id) != plan.test_ids.end()) continue;
        plan.train_ids.push_back(id);
    }
    return plan;
}

}  // namespace drift
