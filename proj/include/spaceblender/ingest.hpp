#pragma once

#include "spaceblender/backends.hpp"

#include <optional>
#include <string>

namespace spaceblender {

inline constexpr int kPreparedSize = 512;
inline constexpr int kMinInputSize = 64;
/// Dilation applied to the person mask before inpainting, pixels.
inline constexpr int kPersonDilation = 8;

struct PreparedImage {
  ColorImage color;
  std::string source_id;
  std::optional<std::string> caption;
};

/// Center-crops to a square and resamples to 512x512. Throws
/// std::invalid_argument for inputs under 64 px per side.
PreparedImage preprocess_input(const ColorImage& raw, std::string source_id = {});

/// Dilated mask of person-labeled pixels.
MaskImage person_mask(const LabelImage& labels, int dilation = kPersonDilation);

/// Replaces people with inpainted content prompted by the person-free caption.
/// Images without people are returned unchanged.
PreparedImage remove_people(const PreparedImage& img, SegmentationBackend& seg, InpaintBackend& inpaint,
                            CaptionBackend& vlm, std::uint64_t seed = 0);

}  // namespace spaceblender
