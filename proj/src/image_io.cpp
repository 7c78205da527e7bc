#include "calibforge/image_io.hpp"

#include "calibforge/error.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

namespace calibforge {
namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
    std::string tok;
    while (in) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    in >> tok;
    return tok;
}

int parse_dim(const std::string& tok, const std::string& path) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(tok, &pos);
        if (pos != tok.size() || v <= 0) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw IoError(path, "bad image dimension '" + tok + "'");
    }
}

std::uint32_t byteswap32(std::uint32_t x) {
    return (x >> 24) | ((x >> 8) & 0xff00u) | ((x << 8) & 0xff0000u) | (x << 24);
}

void check_crop(int img_w, int img_h, int u0, int v0, int w, int h) {
    if (u0 < 0 || v0 < 0 || w <= 0 || h <= 0 || u0 + w > img_w || v0 + h > img_h)
        throw InputError("crop rectangle outside image bounds");
}

}  // namespace

void write_pfm(const std::string& path, const DepthImage& depth) {
    depth.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path, "cannot open for writing");
    out << "Pf\n" << depth.width << " " << depth.height << "\n-1.0\n";
    std::vector<std::uint32_t> row(depth.width);
    for (int v = depth.height - 1; v >= 0; --v) {
        for (int u = 0; u < depth.width; ++u) {
            std::uint32_t bits = std::bit_cast<std::uint32_t>(depth.at(u, v));
            if constexpr (std::endian::native == std::endian::big) bits = byteswap32(bits);
            row[u] = bits;
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
    }
    if (!out) throw IoError(path, "write failed");
}

DepthImage read_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open for reading");
    const std::string magic = next_token(in);
    if (magic != "Pf") throw IoError(path, "not a grayscale PFM file (magic '" + magic + "')");
    const int w = parse_dim(next_token(in), path);
    const int h = parse_dim(next_token(in), path);
    double scale = 0.0;
    try {
        scale = std::stod(next_token(in));
    } catch (const std::exception&) {
        throw IoError(path, "bad PFM scale");
    }
    if (scale == 0.0) throw IoError(path, "PFM scale must be non-zero");
    in.get();  // single whitespace byte before the raster
    const bool little = scale < 0.0;
    const bool swap = little != (std::endian::native == std::endian::little);

    DepthImage depth(w, h);
    std::vector<std::uint32_t> row(w);
    for (int v = h - 1; v >= 0; --v) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
        if (!in) throw IoError(path, "truncated PFM raster");
        for (int u = 0; u < w; ++u) depth.at(u, v) = std::bit_cast<float>(swap ? byteswap32(row[u]) : row[u]);
    }
    try {
        depth.validate();
    } catch (const InputError& e) {
        throw IoError(path, e.what());
    }
    return depth;
}

void write_ppm(const std::string& path, const RgbImage& rgb) {
    rgb.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path, "cannot open for writing");
    out << "P6\n" << rgb.width << " " << rgb.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(rgb.data.data()), static_cast<std::streamsize>(rgb.data.size()));
    if (!out) throw IoError(path, "write failed");
}

RgbImage read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open for reading");
    const std::string magic = next_token(in);
    if (magic != "P6") throw IoError(path, "not a binary PPM file (magic '" + magic + "')");
    const int w = parse_dim(next_token(in), path);
    const int h = parse_dim(next_token(in), path);
    const int maxval = parse_dim(next_token(in), path);
    if (maxval != 255) throw IoError(path, "only 8-bit PPM (maxval 255) is supported");
    in.get();
    RgbImage rgb(w, h);
    in.read(reinterpret_cast<char*>(rgb.data.data()), static_cast<std::streamsize>(rgb.data.size()));
    if (!in) throw IoError(path, "truncated PPM raster");
    return rgb;
}

DepthImage crop(const DepthImage& img, int u0, int v0, int width, int height) {
    check_crop(img.width, img.height, u0, v0, width, height);
    DepthImage out(width, height);
    for (int v = 0; v < height; ++v)
        for (int u = 0; u < width; ++u) out.at(u, v) = img.at(u0 + u, v0 + v);
    return out;
}

RgbImage crop(const RgbImage& img, int u0, int v0, int width, int height) {
    check_crop(img.width, img.height, u0, v0, width, height);
    RgbImage out(width, height);
    for (int v = 0; v < height; ++v)
        std::memcpy(out.pixel(0, v), img.pixel(u0, v0 + v), static_cast<std::size_t>(width) * 3);
    return out;
}

}  // namespace calibforge
