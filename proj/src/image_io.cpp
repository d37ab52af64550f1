#include "spaceblender/image_io.hpp"

#include <png.h>
// jpeglib.h needs size_t and FILE declared first.
#include <cstdio>
#include <jpeglib.h>

#include <csetjmp>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace spaceblender {
namespace {

struct PngReadState {
  const std::vector<std::uint8_t>* bytes;
  std::size_t pos;
};

void png_read_bytes(png_structp png, png_bytep out, png_size_t n) {
  auto* s = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (s->pos + n > s->bytes->size()) png_error(png, "truncated PNG");
  std::memcpy(out, s->bytes->data() + s->pos, n);
  s->pos += n;
}

void png_write_bytes(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}

void png_flush_noop(png_structp) {}

// libpng is C: errors leave through longjmp, never through a C++ throw.
thread_local std::string g_png_error;
[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
  g_png_error = msg;
  png_longjmp(png, 1);
}
void png_warn(png_structp, png_const_charp) {}

ColorImage decode_png(const std::vector<std::uint8_t>& bytes) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  if (!png) throw std::runtime_error("PNG: cannot create reader");
  png_infop info = png_create_info_struct(png);
  PngReadState state{&bytes, 0};
  std::vector<std::uint8_t> data;
  std::vector<png_bytep> rows;
  png_uint_32 w = 0, h = 0;
  int depth = 8;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("PNG: " + g_png_error);
  }
  {
    png_set_read_fn(png, &state, png_read_bytes);
    png_read_info(png, info);
    w = png_get_image_width(png, info);
    h = png_get_image_height(png, info);
    const int color_type = png_get_color_type(png, info);
    depth = png_get_bit_depth(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png), png_set_strip_alpha(png);
    if (depth == 16) png_set_swap(png);
    png_read_update_info(png, info);
    depth = png_get_bit_depth(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    data.resize(rowbytes * h);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = data.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);

  ColorImage img(static_cast<int>(w), static_cast<int>(h));
  {
    for (png_uint_32 y = 0; y < h; ++y) {
      for (png_uint_32 x = 0; x < w; ++x) {
        for (int c = 0; c < 3; ++c) {
          float v;
          if (depth == 16) {
            std::uint16_t s;
            std::memcpy(&s, rows[y] + (x * 3 + c) * 2, 2);
            v = float(s) / 65535.f;
          } else {
            v = float(rows[y][x * 3 + c]) / 255.f;
          }
          img.pixels(img.index(int(x), int(y)), c) = v;
        }
      }
    }
  }
  return img;
}

std::vector<std::uint8_t> encode_png_rows(int w, int h, int channels, int bit_depth,
                                          const std::vector<std::uint8_t>& data) {
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  if (!png) throw std::runtime_error("PNG: cannot create writer");
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("PNG: " + g_png_error);
  }
  {
    png_set_write_fn(png, &out, png_write_bytes, png_flush_noop);
    png_set_IHDR(png, info, png_uint_32(w), png_uint_32(h), bit_depth,
                 channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16) png_set_swap(png);
    const std::size_t rowbytes = std::size_t(w) * channels * (bit_depth / 8);
    for (int y = 0; y < h; ++y) png_write_row(png, const_cast<png_bytep>(data.data() + std::size_t(y) * rowbytes));
    png_write_end(png, nullptr);
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
};

[[noreturn]] void jpeg_fail(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  std::longjmp(err->jump, 1);
}

ColorImage decode_jpeg(const std::vector<std::uint8_t>& bytes) {
  jpeg_decompress_struct cinfo{};
  JpegError err{};
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_fail;
  std::vector<std::uint8_t> data;
  int w = 0, h = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw std::runtime_error("JPEG: decode failed");
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  w = static_cast<int>(cinfo.output_width);
  h = static_cast<int>(cinfo.output_height);
  data.resize(std::size_t(w) * h * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = data.data() + std::size_t(cinfo.output_scanline) * w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);

  ColorImage img(w, h);
  for (std::size_t i = 0; i < data.size(); ++i) img.pixels(Eigen::Index(i / 3), Eigen::Index(i % 3)) = float(data[i]) / 255.f;
  return img;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

}  // namespace

ColorImage decode_image(const std::vector<std::uint8_t>& bytes) {
  static constexpr std::uint8_t kPng[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPng, 8) == 0) return decode_png(bytes);
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) return decode_jpeg(bytes);
  throw std::runtime_error("unsupported image format (expected PNG or JPEG)");
}

ColorImage read_image(const std::filesystem::path& path) {
  try {
    return decode_image(read_file(path));
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_png(const ColorImage& img, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw std::invalid_argument("PNG bit depth must be 8 or 16");
  std::vector<std::uint8_t> data;
  data.reserve(std::size_t(img.pixels.size()) * (bit_depth / 8));
  for (Eigen::Index i = 0; i < img.pixels.rows(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const float v = std::clamp(img.pixels(i, c), 0.f, 1.f);
      if (bit_depth == 8) {
        data.push_back(to_byte(v));
      } else {
        const auto s = static_cast<std::uint16_t>(v * 65535.f + 0.5f);
        data.push_back(static_cast<std::uint8_t>(s & 0xFF));
        data.push_back(static_cast<std::uint8_t>(s >> 8));
      }
    }
  }
  return encode_png_rows(img.width, img.height, 3, bit_depth, data);
}

void write_png(const std::filesystem::path& path, const ColorImage& img, int bit_depth) {
  write_file(path, encode_png(img, bit_depth));
}

std::vector<std::uint8_t> encode_mask_png(const MaskImage& mask) {
  std::vector<std::uint8_t> data(static_cast<std::size_t>(mask.size()));
  for (Eigen::Index i = 0; i < mask.size(); ++i) data[std::size_t(i)] = mask(i) ? 255 : 0;
  return encode_png_rows(static_cast<int>(mask.cols()), static_cast<int>(mask.rows()), 1, 8, data);
}

void write_mask_png(const std::filesystem::path& path, const MaskImage& mask) { write_file(path, encode_mask_png(mask)); }

std::vector<std::uint8_t> encode_depth(const DepthImage& depth) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + 4 * std::size_t(depth.size()));
  put_u32(out, static_cast<std::uint32_t>(depth.cols()));
  put_u32(out, static_cast<std::uint32_t>(depth.rows()));
  for (Eigen::Index i = 0; i < depth.size(); ++i) {
    std::uint32_t bits;
    const float v = depth(i);
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
  }
  return out;
}

DepthImage decode_depth(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8) throw std::runtime_error("depth file: missing header");
  const std::uint32_t w = get_u32(bytes.data()), h = get_u32(bytes.data() + 4);
  if (bytes.size() != 8 + 4 * std::size_t(w) * h) throw std::runtime_error("depth file: size does not match header");
  DepthImage depth(h, w);
  for (std::size_t i = 0; i < std::size_t(w) * h; ++i) {
    const std::uint32_t bits = get_u32(bytes.data() + 8 + 4 * i);
    float v;
    std::memcpy(&v, &bits, 4);
    depth(Eigen::Index(i)) = v;
  }
  return depth;
}

void write_depth_file(const std::filesystem::path& path, const DepthImage& depth) {
  write_file(path, encode_depth(depth));
}

DepthImage read_depth_file(const std::filesystem::path& path) { return decode_depth(read_file(path)); }

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace spaceblender
