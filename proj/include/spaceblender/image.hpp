#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <limits>

namespace spaceblender {

/// Row-major single-channel raster; rows() is the image height.
template <typename T>
using Image = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Z-depth in meters. Pixels without a value hold kMissingDepth.
using DepthImage = Image<float>;
using MaskImage = Image<bool>;
/// ADE20K class ids; kUnlabeled where no class applies.
using LabelImage = Image<std::int32_t>;

inline constexpr float kMissingDepth = std::numeric_limits<float>::infinity();
inline constexpr std::int32_t kUnlabeled = -1;

inline bool is_missing(float depth) { return depth == kMissingDepth; }

/// RGB raster with channels in [0,1]; one row of `pixels` per pixel, in
/// row-major pixel order (index = y * width + x).
struct ColorImage {
  using Pixels = Eigen::Array<float, Eigen::Dynamic, 3, Eigen::RowMajor>;

  int width = 0;
  int height = 0;
  Pixels pixels;

  ColorImage() = default;
  ColorImage(int w, int h) : width(w), height(h), pixels(Pixels::Zero(Eigen::Index(w) * h, 3)) {}

  static ColorImage filled(int w, int h, const Eigen::Vector3f& rgb) {
    ColorImage img(w, h);
    img.pixels.rowwise() = rgb.transpose().array();
    return img;
  }

  Eigen::Index index(int x, int y) const { return Eigen::Index(y) * width + x; }
  auto at(int x, int y) { return pixels.row(index(x, y)); }
  auto at(int x, int y) const { return pixels.row(index(x, y)); }

  bool same_size(int w, int h) const { return width == w && height == h; }
};

template <typename T>
bool same_size(const Image<T>& img, int width, int height) {
  return img.cols() == width && img.rows() == height;
}

/// Converts between [0,1] float and 8-bit channels (round to nearest).
inline std::uint8_t to_byte(float v) {
  const float c = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
  return static_cast<std::uint8_t>(c * 255.f + 0.5f);
}

/// Center-crops to the largest square, returning the crop offset via out params.
ColorImage center_crop_square(const ColorImage& img, int* offset_x = nullptr, int* offset_y = nullptr);

/// Bilinear resampling with pixel-center alignment; same-size input is copied.
ColorImage resize_bilinear(const ColorImage& img, int width, int height);

/// Binary dilation with a disk of radius `radius` pixels.
MaskImage dilate(const MaskImage& mask, int radius);

}  // namespace spaceblender
