#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace drift {

// Square sensing area with perimeter nodes and a pixel grid.
// Immutable after construction; safe to share across threads.
struct NetworkGeometry {
    double side_cm = 72.0;
    std::vector<std::array<double, 2>> nodes;   // positions in cm, on the square boundary
    std::vector<std::pair<int, int>> links;     // ordered (tx, rx) pairs, i != j
    int grid_px = 36;
    int channels = 16;

    int n_nodes() const { return static_cast<int>(nodes.size()); }
    int n_links() const { return static_cast<int>(links.size()); }
    int n_pixels() const { return grid_px * grid_px; }
    double pixel_size_cm() const { return side_cm / grid_px; }

    // pixel m = row * grid_px + col; centre of pixel (row, col)
    std::array<double, 2> pixel_center(int m) const {
        const double px = pixel_size_cm();
        const int row = m / grid_px;
        const int col = m % grid_px;
        return {(col + 0.5) * px, (row + 0.5) * px};
    }

    // index of the directed link (i -> j) in lexicographic enumeration
    int link_index(int i, int j) const { return i * (n_nodes() - 1) + (j > i ? j - 1 : j); }
};

// Dense M_links x N_pixels shadowing weights from the normalized ellipse model:
// entry (l, m) = 1/sqrt(d_l) iff pixel m's centre lies inside the ellipse with
// the link endpoints as foci and major axis d_l + lambda_cm, else 0.
struct WeightMatrix {
    int rows = 0;  // links
    int cols = 0;  // pixels
    double lambda_cm = 0.0;
    std::vector<double> w;

    double at(int l, int m) const { return w[static_cast<std::size_t>(l) * cols + m]; }
    const double* row(int l) const { return w.data() + static_cast<std::size_t>(l) * cols; }
};

NetworkGeometry build_geometry(double side_cm, int node_count, int grid_px, int channels);

double link_length(const NetworkGeometry& geom, int link_index);

WeightMatrix ellipse_weights(const NetworkGeometry& geom, double lambda_cm);

// key=value block used in dataset manifests
std::string serialize_geometry(const NetworkGeometry& geom);
NetworkGeometry parse_geometry(const std::string& text, const std::string& origin);
std::string geometry_hash(const NetworkGeometry& geom);

inline constexpr double kDefaultLambdaCm = 4.0;

}  // namespace drift
