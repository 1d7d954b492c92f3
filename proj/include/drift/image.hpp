#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace drift {

// Row-major grid over the sensing area; row 0 is the y=0 edge.
template <typename T>
struct Grid {
    int rows = 0;
    int cols = 0;
    std::vector<T> v;

    Grid() = default;
    Grid(int r, int c, T fill = T{}) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, fill) {}

    T& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    const T& at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
    std::size_t size() const { return v.size(); }
    bool same_shape(const Grid& o) const { return rows == o.rows && cols == o.cols; }
    bool operator==(const Grid& o) const { return rows == o.rows && cols == o.cols && v == o.v; }
};

// Binary ground truth / post-processed region: values are exactly 0 or 1.
using TargetMask = Grid<std::uint8_t>;
// Real-valued reconstruction over the same pixel grid.
using ReconImage = Grid<double>;

std::size_t mask_count(const TargetMask& m);

// Binary PGM (P5, maxval 255). Masks are stored as 0/255.
void write_pgm(const std::string& path, const TargetMask& mask);
TargetMask read_pgm_mask(const std::string& path);  // rejects gray values

// Reconstruction export: linearly rescaled to 0..255 (constant image -> 0).
void write_pgm_scaled(const std::string& path, const ReconImage& img);

}  // namespace drift
