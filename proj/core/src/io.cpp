#include "admgs/io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "admgs/errors.hpp"

namespace admgs {

namespace {

bool host_is_little_endian() {
  const std::uint16_t probe = 1;
  return *reinterpret_cast<const std::uint8_t*>(&probe) == 1;
}

}  // namespace

void write_pfm(const std::string& path, const Image<float>& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw InvalidArgument("write_pfm: only 1 or 3 channels supported");
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("write_pfm: cannot open " + path);
  f << (image.channels == 3 ? "PF" : "Pf") << "\n"
    << image.width << " " << image.height << "\n"
    << "-1.0\n";  // negative scale: little-endian
  // Bottom-to-top scanlines.
  const std::size_t row_floats = std::size_t(image.width) * image.channels;
  std::vector<float> row(row_floats);
  for (int y = image.height - 1; y >= 0; --y) {
    std::memcpy(row.data(), &image.data[image.index(y, 0, 0)],
                row_floats * sizeof(float));
    if (!host_is_little_endian()) {
      for (auto& v : row) {
        auto* b = reinterpret_cast<std::uint8_t*>(&v);
        std::swap(b[0], b[3]);
        std::swap(b[1], b[2]);
      }
    }
    f.write(reinterpret_cast<const char*>(row.data()),
            std::streamsize(row_floats * sizeof(float)));
  }
  if (!f) throw IoError("write_pfm: write failed for " + path);
}

Image<float> read_pfm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("read_pfm: cannot open " + path);
  std::string magic;
  int width = 0, height = 0;
  double scale = 0;
  f >> magic >> width >> height >> scale;
  if ((magic != "PF" && magic != "Pf") || width <= 0 || height <= 0 ||
      scale == 0) {
    throw IoError("read_pfm: malformed header in " + path);
  }
  f.get();  // single whitespace after the scale
  const int channels = magic == "PF" ? 3 : 1;
  const bool file_le = scale < 0;
  Image<float> image(width, height, channels);
  const std::size_t row_floats = std::size_t(width) * channels;
  std::vector<float> row(row_floats);
  for (int y = height - 1; y >= 0; --y) {
    f.read(reinterpret_cast<char*>(row.data()),
           std::streamsize(row_floats * sizeof(float)));
    if (!f) throw IoError("read_pfm: truncated payload in " + path);
    if (file_le != host_is_little_endian()) {
      for (auto& v : row) {
        auto* b = reinterpret_cast<std::uint8_t*>(&v);
        std::swap(b[0], b[3]);
        std::swap(b[1], b[2]);
      }
    }
    std::memcpy(&image.data[image.index(y, 0, 0)], row.data(),
                row_floats * sizeof(float));
  }
  return image;
}

void write_png(const std::string& path, const Image<float>& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw InvalidArgument("write_png: only 1 or 3 channels supported");
  }
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("write_png: cannot open " + path);
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    std::fclose(fp);
    throw IoError("write_png: libpng failure for " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, png_uint_32(image.width), png_uint_32(image.height),
               8,
               image.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(std::size_t(image.width) * image.channels);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < image.channels; ++c) {
        const float v = clamp01(image.at(y, x, c));
        row[std::size_t(x) * image.channels + c] =
            png_byte(int(v * 255.f + 0.5f));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

Image<float> read_png(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw IoError("read_png: cannot open " + path);
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    std::fclose(fp);
    throw IoError("read_png: libpng failure for " + path);
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  const int width = int(png_get_image_width(png, info));
  const int height = int(png_get_image_height(png, info));
  const int color = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const int channels = int(png_get_channels(png, info));
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw IoError("read_png: unsupported channel count in " + path);
  }
  Image<float> image(width, height, channels);
  std::vector<png_byte> row(std::size_t(width) * channels);
  for (int y = 0; y < height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        image.at(y, x, c) =
            float(row[std::size_t(x) * channels + c]) / 255.f;
      }
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return image;
}

void write_ply(const std::string& path, const PointCloud& cloud) {
  if (cloud.positions.size() != cloud.normals.size()) {
    throw InvalidArgument("write_ply: positions/normals size mismatch");
  }
  std::ofstream f(path);
  if (!f) throw IoError("write_ply: cannot open " + path);
  f << "ply\nformat ascii 1.0\n"
    << "element vertex " << cloud.positions.size() << "\n"
    << "property float x\nproperty float y\nproperty float z\n"
    << "property float nx\nproperty float ny\nproperty float nz\n"
    << "end_header\n";
  f.precision(9);
  for (std::size_t i = 0; i < cloud.positions.size(); ++i) {
    const auto& p = cloud.positions[i];
    const auto& n = cloud.normals[i];
    f << p.x << " " << p.y << " " << p.z << " " << n.x << " " << n.y << " "
      << n.z << "\n";
  }
  if (!f) throw IoError("write_ply: write failed for " + path);
}

PointCloud read_ply(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("read_ply: cannot open " + path);
  std::string line;
  std::size_t count = 0;
  bool in_header = true;
  std::vector<std::string> properties;
  while (in_header && std::getline(f, line)) {
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "element") {
      std::string kind;
      ss >> kind >> count;
      if (kind != "vertex") throw IoError("read_ply: unsupported element");
    } else if (tok == "property") {
      std::string type, name;
      ss >> type >> name;
      properties.push_back(name);
    } else if (tok == "end_header") {
      in_header = false;
    } else if (tok == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt != "ascii") throw IoError("read_ply: only ascii supported");
    }
  }
  const std::vector<std::string> expected = {"x", "y", "z", "nx", "ny", "nz"};
  if (properties != expected) {
    throw IoError("read_ply: expected x y z nx ny nz columns");
  }
  PointCloud cloud;
  cloud.positions.reserve(count);
  cloud.normals.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Vec3<double> p, n;
    if (!(f >> p.x >> p.y >> p.z >> n.x >> n.y >> n.z)) {
      throw IoError("read_ply: truncated vertex data in " + path);
    }
    cloud.positions.push_back(p);
    cloud.normals.push_back(n);
  }
  return cloud;
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  f << content;
  if (!f) throw IoError("write failed for " + path);
}

std::vector<std::uint8_t> read_binary_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw IoError("cannot open " + path);
  const std::size_t size = std::size_t(f.tellg());
  f.seekg(0);
  std::vector<std::uint8_t> bytes(size);
  f.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(size));
  if (!f) throw IoError("read failed for " + path);
  return bytes;
}

void write_binary_file(const std::string& path,
                       const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          std::streamsize(bytes.size()));
  if (!f) throw IoError("write failed for " + path);
}

}  // namespace admgs
