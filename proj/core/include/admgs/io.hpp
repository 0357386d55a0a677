#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "admgs/image.hpp"
#include "admgs/vec.hpp"

namespace admgs {

// ---- PFM: 32-bit float images, "PF" (3-channel) / "Pf" (1-channel),
// negative scale marks little-endian payload. Scanlines are stored
// bottom-to-top per the format; the in-memory Image is top-down.
void write_pfm(const std::string& path, const Image<float>& image);
Image<float> read_pfm(const std::string& path);

// ---- PNG: 8-bit RGB (or grayscale) with values mapped from [0, 1].
void write_png(const std::string& path, const Image<float>& image);
Image<float> read_png(const std::string& path);

// Quantization used when writing PNG: round(clamp01(v)·255)/255.
inline float png_quantize(float v) {
  const float c = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
  return float(int(c * 255.f + 0.5f)) / 255.f;
}

// ---- ASCII PLY point clouds with x y z nx ny nz columns.
struct PointCloud {
  std::vector<Vec3<double>> positions;
  std::vector<Vec3<double>> normals;
};

void write_ply(const std::string& path, const PointCloud& cloud);
PointCloud read_ply(const std::string& path);

// ---- Small file helpers.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
std::vector<std::uint8_t> read_binary_file(const std::string& path);
void write_binary_file(const std::string& path,
                       const std::vector<std::uint8_t>& bytes);

}  // namespace admgs
