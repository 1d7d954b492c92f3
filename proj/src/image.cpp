#include "drift/image.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace drift {

std::size_t mask_count(const TargetMask& m) {
    std::size_t n = 0;
    for (auto p : m.v) n += p != 0;
    return n;
}

void write_pgm(const std::string& path, const TargetMask& mask) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "P5\n" << mask.cols << " " << mask.rows << "\n255\n";
    std::vector<unsigned char> bytes(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) bytes[i] = mask.v[i] ? 255 : 0;
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

int read_pgm_token(std::istream& in, const std::string& path) {
    // skip whitespace and '#' comments between header fields
    int c = in.get();
    while (c != EOF && (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '#')) {
        if (c == '#')
            while (c != EOF && c != '\n') c = in.get();
        c = in.get();
    }
    if (c == EOF) throw std::runtime_error(path + ": truncated PGM header");
    int value = 0;
    bool any = false;
    while (c != EOF && c >= '0' && c <= '9') {
        value = value * 10 + (c - '0');
        any = true;
        c = in.get();
    }
    if (!any) throw std::runtime_error(path + ": malformed PGM header");
    return value;
}

}  // namespace

TargetMask read_pgm_mask(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '5') throw std::runtime_error(path + ": not a binary PGM (P5)");
    int cols = read_pgm_token(in, path);
    int rows = read_pgm_token(in, path);
    int maxval = read_pgm_token(in, path);
    if (maxval != 255) throw std::runtime_error(path + ": expected maxval 255");
    TargetMask mask(rows, cols);
    std::vector<unsigned char> bytes(mask.size());
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
        throw std::runtime_error(path + ": truncated pixel data");
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        if (bytes[i] == 0)
            mask.v[i] = 0;
        else if (bytes[i] == 255)
            mask.v[i] = 1;
        else
            throw std::runtime_error(path + ": mask pixel " + std::to_string(i) + " has gray value " +
                                     std::to_string(int(bytes[i])) + " (want 0 or 255)");
    }
    return mask;
}

void write_pgm_scaled(const std::string& path, const ReconImage& img) {
    double lo = img.v.empty() ? 0.0 : *std::min_element(img.v.begin(), img.v.end());
    double hi = img.v.empty() ? 0.0 : *std::max_element(img.v.begin(), img.v.end());
    double span = hi - lo;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "P5\n" << img.cols << " " << img.rows << "\n255\n";
    std::vector<unsigned char> bytes(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) {
        double t = span > 0 ? (img.v[i] - lo) / span : 0.0;
        bytes[i] = static_cast<unsigned char>(t * 255.0 + 0.5);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace drift
