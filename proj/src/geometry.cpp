#include "drift/geometry.hpp"

#include <cmath>
#include <stdexcept>

#include "drift/common.hpp"
#include "drift/kvfile.hpp"

namespace drift {

namespace {

// Point on the square perimeter at arc length t from (0,0), walking
// (0,0) -> (s,0) -> (s,s) -> (0,s) -> (0,0).
std::array<double, 2> perimeter_point(double s, double t) {
    if (t < s) return {t, 0.0};
    if (t < 2 * s) return {s, t - s};
    if (t < 3 * s) return {3 * s - t, s};
    return {0.0, 4 * s - t};
}

}  // namespace

NetworkGeometry build_geometry(double side_cm, int node_count, int grid_px, int channels) {
    if (side_cm <= 0) throw std::invalid_argument("build_geometry: side_cm must be positive");
    if (node_count < 3) throw std::invalid_argument("build_geometry: need at least 3 nodes");
    if (grid_px < 2) throw std::invalid_argument("build_geometry: grid_px must be at least 2");
    if (channels < 1) throw std::invalid_argument("build_geometry: channels must be at least 1");

    NetworkGeometry g;
    g.side_cm = side_cm;
    g.grid_px = grid_px;
    g.channels = channels;
    g.nodes.reserve(node_count);
    const double spacing = 4.0 * side_cm / node_count;
    for (int i = 0; i < node_count; ++i) g.nodes.push_back(perimeter_point(side_cm, i * spacing));
    g.links.reserve(static_cast<std::size_t>(node_count) * (node_count - 1));
    for (int i = 0; i < node_count; ++i)
        for (int j = 0; j < node_count; ++j)
            if (i != j) g.links.emplace_back(i, j);
    return g;
}

double link_length(const NetworkGeometry& geom, int link_index) {
    if (link_index < 0 || link_index >= geom.n_links())
        throw std::out_of_range("link_length: link index " + std::to_string(link_index) + " out of range");
    const auto [i, j] = geom.links[link_index];
    const double dx = geom.nodes[i][0] - geom.nodes[j][0];
    const double dy = geom.nodes[i][1] - geom.nodes[j][1];
    return std::sqrt(dx * dx + dy * dy);
}

WeightMatrix ellipse_weights(const NetworkGeometry& geom, double lambda_cm) {
    if (lambda_cm <= 0) throw std::invalid_argument("ellipse_weights: lambda_cm must be positive");

    WeightMatrix W;
    W.rows = geom.n_links();
    W.cols = geom.n_pixels();
    W.lambda_cm = lambda_cm;
    W.w.assign(static_cast<std::size_t>(W.rows) * W.cols, 0.0);

    std::vector<std::array<double, 2>> centers(geom.n_pixels());
    for (int m = 0; m < geom.n_pixels(); ++m) centers[m] = geom.pixel_center(m);

    for (int l = 0; l < W.rows; ++l) {
        const auto [i, j] = geom.links[l];
        const auto& a = geom.nodes[i];
        const auto& b = geom.nodes[j];
        const double d = link_length(geom, l);
        const double limit = d + lambda_cm;
        const double inv_sqrt_d = 1.0 / std::sqrt(d);
        double* row = W.w.data() + static_cast<std::size_t>(l) * W.cols;
        for (int m = 0; m < W.cols; ++m) {
            const double dax = centers[m][0] - a[0];
            const double day = centers[m][1] - a[1];
            const double dbx = centers[m][0] - b[0];
            const double dby = centers[m][1] - b[1];
            const double sum = std::sqrt(dax * dax + day * day) + std::sqrt(dbx * dbx + dby * dby);
            if (sum <= limit) row[m] = inv_sqrt_d;
        }
    }
    return W;
}

std::string serialize_geometry(const NetworkGeometry& geom) {
    KvFile kv;
    kv.set_double("side_cm", geom.side_cm);
    kv.set_long("grid_px", geom.grid_px);
    kv.set_long("channels", geom.channels);
    std::string nodes;
    for (std::size_t i = 0; i < geom.nodes.size(); ++i) {
        if (i) nodes += ';';
        nodes += format_double(geom.nodes[i][0]) + "," + format_double(geom.nodes[i][1]);
    }
    kv.set("nodes", nodes);
    return kv.serialize();
}

NetworkGeometry parse_geometry(const std::string& text, const std::string& origin) {
    KvFile kv = KvFile::parse_text(text, origin);
    NetworkGeometry g;
    g.side_cm = kv.get_double("side_cm");
    g.grid_px = static_cast<int>(kv.get_long("grid_px"));
    g.channels = static_cast<int>(kv.get_long("channels"));
    const std::string& nodes = kv.get("nodes");
    std::size_t pos = 0;
    while (pos < nodes.size()) {
        std::size_t end = nodes.find(';', pos);
        if (end == std::string::npos) end = nodes.size();
        std::string pair = nodes.substr(pos, end - pos);
        std::size_t comma = pair.find(',');
        if (comma == std::string::npos) throw std::runtime_error(origin + ": bad node entry '" + pair + "'");
        g.nodes.push_back({parse_double(pair.substr(0, comma), "node x"),
                           parse_double(pair.substr(comma + 1), "node y")});
        pos = end + 1;
    }
    if (g.nodes.size() < 3) throw std::runtime_error(origin + ": fewer than 3 nodes");
    const int n = static_cast<int>(g.nodes.size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) g.links.emplace_back(i, j);
    return g;
}

std::string geometry_hash(const NetworkGeometry& geom) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(serialize_geometry(geom))));
    return std::string(buf);
}

}  // namespace drift
