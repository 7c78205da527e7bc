#pragma once

#include "calibforge/camera.hpp"

#include <string>

namespace calibforge {

// Depth maps travel as grayscale PFM ("Pf"): little-endian float32, negative
// scale in the header, scanlines stored bottom-up. Values are meters.
void write_pfm(const std::string& path, const DepthImage& depth);
DepthImage read_pfm(const std::string& path);

// Color images travel as binary PPM ("P6"), maxval 255.
void write_ppm(const std::string& path, const RgbImage& rgb);
RgbImage read_ppm(const std::string& path);

DepthImage crop(const DepthImage& img, int u0, int v0, int width, int height);
RgbImage crop(const RgbImage& img, int u0, int v0, int width, int height);

}  // namespace calibforge
