#include "spaceblender/image.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace spaceblender {

ColorImage center_crop_square(const ColorImage& img, int* offset_x, int* offset_y) {
  const int side = std::min(img.width, img.height);
  const int ox = (img.width - side) / 2;
  const int oy = (img.height - side) / 2;
  if (offset_x) *offset_x = ox;
  if (offset_y) *offset_y = oy;
  ColorImage out(side, side);
  for (int y = 0; y < side; ++y) {
    out.pixels.middleRows(out.index(0, y), side) = img.pixels.middleRows(img.index(ox, y + oy), side);
  }
  return out;
}

ColorImage resize_bilinear(const ColorImage& img, int width, int height) {
  if (img.width == width && img.height == height) return img;
  ColorImage out(width, height);
  const double sx = double(img.width) / width;
  const double sy = double(img.height) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, double(img.height - 1));
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, img.height - 1);
    const float wy = static_cast<float>(fy - y0);
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, double(img.width - 1));
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, img.width - 1);
      const float wx = static_cast<float>(fx - x0);
      out.at(x, y) = (1.f - wy) * ((1.f - wx) * img.at(x0, y0) + wx * img.at(x1, y0)) +
                     wy * ((1.f - wx) * img.at(x0, y1) + wx * img.at(x1, y1));
    }
  }
  return out;
}

MaskImage dilate(const MaskImage& mask, int radius) {
  if (radius <= 0) return mask;
  const int h = static_cast<int>(mask.rows()), w = static_cast<int>(mask.cols());
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      if (dx * dx + dy * dy <= radius * radius) offsets.emplace_back(dx, dy);

  MaskImage out = MaskImage::Constant(h, w, false);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask(y, x)) continue;
      for (const auto& [dx, dy] : offsets) {
        const int xx = x + dx, yy = y + dy;
        if (xx >= 0 && yy >= 0 && xx < w && yy < h) out(yy, xx) = true;
      }
    }
  }
  return out;
}

}  // namespace spaceblender
