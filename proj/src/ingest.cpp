#include "spaceblender/ingest.hpp"

#include "spaceblender/ade20k.hpp"
#include "spaceblender/prompts.hpp"

namespace spaceblender {

PreparedImage preprocess_input(const ColorImage& raw, std::string source_id) {
  if (raw.width < kMinInputSize || raw.height < kMinInputSize) {
    throw std::invalid_argument("input image " + std::to_string(raw.width) + "x" + std::to_string(raw.height) +
                                " is smaller than " + std::to_string(kMinInputSize) + " px per side");
  }
  PreparedImage out;
  out.color = resize_bilinear(center_crop_square(raw), kPreparedSize, kPreparedSize);
  out.source_id = std::move(source_id);
  return out;
}

MaskImage person_mask(const LabelImage& labels, int dilation) {
  const MaskImage raw = labels == ade20k::kPerson;
  return dilation > 0 ? dilate(raw, dilation) : raw;
}

PreparedImage remove_people(const PreparedImage& img, SegmentationBackend& seg, InpaintBackend& inpaint,
                            CaptionBackend& vlm, std::uint64_t seed) {
  LabelImage labels;
  try {
    labels = seg.segment(img.color);
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError("ingest", std::string("segmentation failed: ") + e.what());
  }
  if (!(labels == ade20k::kPerson).any()) return img;

  const MaskImage mask = person_mask(labels);
  if (mask.all()) throw PipelineError("ingest", "person mask covers the whole image of '" + img.source_id + "'");

  PreparedImage out = img;
  try {
    const std::string caption = img.caption ? *img.caption : caption_image(img.color, vlm);
    InpaintRequest request;
    request.color = img.color;
    request.mask = mask;
    request.prompt = strip_person_terms(caption);
    request.negative_prompt = "person, people";
    request.seed = seed;
    ColorImage filled = inpaint.inpaint(request);
    if (!filled.same_size(img.color.width, img.color.height)) {
      throw PipelineError("ingest", "inpaint backend returned a differently sized image");
    }
    // Outside the mask the input is authoritative.
    for (int y = 0; y < img.color.height; ++y)
      for (int x = 0; x < img.color.width; ++x)
        if (mask(y, x)) out.color.at(x, y) = filled.at(x, y);
    out.caption = request.prompt;
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError("ingest", std::string("person removal failed: ") + e.what());
  }
  return out;
}

}  // namespace spaceblender
