#pragma once

#include <cstddef>
#include <vector>

#include "admgs/errors.hpp"

namespace admgs {

// Dense H×W×C image, row-major, channel-interleaved.
template <class T>
struct Image {
  int width = 0, height = 0, channels = 0;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, int c, T fill = T(0))
      : width(w), height(h), channels(c),
        data(std::size_t(w) * std::size_t(h) * std::size_t(c), fill) {}

  std::size_t index(int y, int x, int c) const {
    return (std::size_t(y) * width + x) * channels + c;
  }
  T& at(int y, int x, int c = 0) { return data[index(y, x, c)]; }
  const T& at(int y, int x, int c = 0) const { return data[index(y, x, c)]; }
  std::size_t pixel_count() const { return std::size_t(width) * height; }
  bool same_shape(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  template <class U>
  Image<U> cast() const {
    Image<U> out(width, height, channels);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = U(data[i]);
    return out;
  }
};

template <class T>
void require_same_shape(const Image<T>& a, const Image<T>& b,
                        const char* what) {
  if (!a.same_shape(b)) {
    throw InvalidArgument(std::string(what) + ": image shapes differ");
  }
}

}  // namespace admgs
