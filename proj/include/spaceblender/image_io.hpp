#pragma once

#include "spaceblender/image.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace spaceblender {

/// Decodes PNG (8 or 16 bit, gray/RGB, alpha dropped) or JPEG, by signature.
ColorImage decode_image(const std::vector<std::uint8_t>& bytes);
ColorImage read_image(const std::filesystem::path& path);

/// RGB PNG with 8 or 16 bits per channel.
std::vector<std::uint8_t> encode_png(const ColorImage& img, int bit_depth = 8);
void write_png(const std::filesystem::path& path, const ColorImage& img, int bit_depth = 8);
/// Mask as an 8-bit gray PNG (255 where true).
std::vector<std::uint8_t> encode_mask_png(const MaskImage& mask);
void write_mask_png(const std::filesystem::path& path, const MaskImage& mask);

/// Float depth file: int32 LE width, int32 LE height, then width*height
/// little-endian float32 values in row-major order.
std::vector<std::uint8_t> encode_depth(const DepthImage& depth);
DepthImage decode_depth(const std::vector<std::uint8_t>& bytes);
void write_depth_file(const std::filesystem::path& path, const DepthImage& depth);
DepthImage read_depth_file(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace spaceblender
