#pragma once

#include <png.h>

#include <array>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "scribblevs/common.hpp"
#include "scribblevs/grid.hpp"

namespace scribblevs {

/// Raw 16-bit grayscale pixel grid as stored on disk.
struct U16Image {
  int h = 0, w = 0;
  std::vector<uint16_t> v;

  U16Image() = default;
  U16Image(int h_, int w_) : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, 0) {}

  uint16_t operator()(int r, int c) const { return v[static_cast<size_t>(r) * w + c]; }
  uint16_t& operator()(int r, int c) { return v[static_cast<size_t>(r) * w + c]; }
};

namespace detail {

struct PngReader {
  FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;

  explicit PngReader(const std::string& path) {
    fp = std::fopen(path.c_str(), "rb");
    if (fp == nullptr) throw IoError("cannot open for reading: " + path);
    png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png != nullptr) info = png_create_info_struct(png);
    if (info == nullptr) {
      close();
      throw IoError("libpng init failed for " + path);
    }
  }

  ~PngReader() { close(); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;

  void close() {
    if (png != nullptr) png_destroy_read_struct(&png, info != nullptr ? &info : nullptr, nullptr);
    png = nullptr;
    info = nullptr;
    if (fp != nullptr) std::fclose(fp);
    fp = nullptr;
  }
};

struct PngWriter {
  FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;

  explicit PngWriter(const std::string& path) {
    fp = std::fopen(path.c_str(), "wb");
    if (fp == nullptr) throw IoError("cannot open for writing: " + path);
    png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png != nullptr) info = png_create_info_struct(png);
    if (info == nullptr) {
      close();
      throw IoError("libpng init failed for " + path);
    }
  }

  ~PngWriter() { close(); }
  PngWriter(const PngWriter&) = delete;
  PngWriter& operator=(const PngWriter&) = delete;

  void close() {
    if (png != nullptr) png_destroy_write_struct(&png, info != nullptr ? &info : nullptr);
    png = nullptr;
    info = nullptr;
    if (fp != nullptr) std::fclose(fp);
    fp = nullptr;
  }
};

}  // namespace detail

/// Grayscale PNG (8- or 16-bit) as raw integer samples. 8-bit files come back
/// with values in 0..255, 16-bit with 0..65535.
inline U16Image read_png_gray(const std::string& path) {
  detail::PngReader ctx(path);
  if (setjmp(png_jmpbuf(ctx.png))) {
    throw IoError("libpng failed while reading " + path);
  }
  png_init_io(ctx.png, ctx.fp);
  png_read_info(ctx.png, ctx.info);
  const int color = png_get_color_type(ctx.png, ctx.info);
  const int depth = png_get_bit_depth(ctx.png, ctx.info);
  if (color != PNG_COLOR_TYPE_GRAY) {
    throw IoError("expected grayscale PNG: " + path);
  }
  if (depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
  if (depth == 16) png_set_swap(ctx.png);  // little-endian samples in memory
  png_read_update_info(ctx.png, ctx.info);

  U16Image img(static_cast<int>(png_get_image_height(ctx.png, ctx.info)),
               static_cast<int>(png_get_image_width(ctx.png, ctx.info)));
  if (depth == 16) {
    std::vector<png_bytep> rows(static_cast<size_t>(img.h));
    for (int r = 0; r < img.h; ++r) {
      rows[static_cast<size_t>(r)] = reinterpret_cast<png_bytep>(img.v.data() + static_cast<size_t>(r) * img.w);
    }
    png_read_image(ctx.png, rows.data());
  } else {
    std::vector<uint8_t> buf(static_cast<size_t>(img.h) * img.w);
    std::vector<png_bytep> rows(static_cast<size_t>(img.h));
    for (int r = 0; r < img.h; ++r) rows[static_cast<size_t>(r)] = buf.data() + static_cast<size_t>(r) * img.w;
    png_read_image(ctx.png, rows.data());
    for (size_t i = 0; i < buf.size(); ++i) img.v[i] = buf[i];
  }
  png_read_end(ctx.png, nullptr);
  return img;
}

inline void write_png_gray16(const std::string& path, const U16Image& img) {
  detail::PngWriter ctx(path);
  if (setjmp(png_jmpbuf(ctx.png))) {
    throw IoError("libpng failed while writing " + path);
  }
  png_init_io(ctx.png, ctx.fp);
  png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(img.w), static_cast<png_uint_32>(img.h), 16,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(ctx.png, ctx.info);
  png_set_swap(ctx.png);
  std::vector<png_bytep> rows(static_cast<size_t>(img.h));
  for (int r = 0; r < img.h; ++r) {
    rows[static_cast<size_t>(r)] =
        reinterpret_cast<png_bytep>(const_cast<uint16_t*>(img.v.data() + static_cast<size_t>(r) * img.w));
  }
  png_write_image(ctx.png, rows.data());
  png_write_end(ctx.png, nullptr);
}

/// 8-bit grayscale write for dense class masks (labels must fit in a byte).
inline void write_png_gray8(const std::string& path, const LabelImage& m) {
  std::vector<uint8_t> buf(static_cast<size_t>(m.h) * m.w);
  for (size_t i = 0; i < buf.size(); ++i) {
    if (m.v[i] < 0 || m.v[i] > 255) {
      throw IoError("write_png_gray8: label " + std::to_string(m.v[i]) + " does not fit in a byte");
    }
    buf[i] = static_cast<uint8_t>(m.v[i]);
  }
  detail::PngWriter ctx(path);
  if (setjmp(png_jmpbuf(ctx.png))) {
    throw IoError("libpng failed while writing " + path);
  }
  png_init_io(ctx.png, ctx.fp);
  png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(m.w), static_cast<png_uint_32>(m.h), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(ctx.png, ctx.info);
  std::vector<png_bytep> rows(static_cast<size_t>(m.h));
  for (int r = 0; r < m.h; ++r) rows[static_cast<size_t>(r)] = buf.data() + static_cast<size_t>(r) * m.w;
  png_write_image(ctx.png, rows.data());
  png_write_end(ctx.png, nullptr);
}

inline LabelImage read_png_gray8(const std::string& path) {
  const U16Image raw = read_png_gray(path);
  LabelImage m(raw.h, raw.w);
  for (size_t i = 0; i < raw.v.size(); ++i) {
    if (raw.v[i] > 255) throw IoError("read_png_gray8: sample exceeds a byte in " + path);
    m.v[i] = static_cast<int32_t>(raw.v[i]);
  }
  return m;
}

struct PaletteColor {
  uint8_t r = 0, g = 0, b = 0;
};

/// Fixed class palette: distinct hues for up to 12 classes, then a wrap.
inline PaletteColor class_color(int32_t cls) {
  static constexpr std::array<PaletteColor, 12> kTable = {{{31, 119, 180},
                                                           {255, 127, 14},
                                                           {44, 160, 44},
                                                           {214, 39, 40},
                                                           {148, 103, 189},
                                                           {140, 86, 75},
                                                           {227, 119, 194},
                                                           {127, 127, 127},
                                                           {188, 189, 34},
                                                           {23, 190, 207},
                                                           {174, 199, 232},
                                                           {255, 187, 120}}};
  return kTable[static_cast<size_t>(cls) % kTable.size()];
}

/// 8-bit indexed PNG. Index 255 is the unannotated/inactive file sentinel and
/// gets the caller-provided color; class indices use the fixed palette.
inline void write_png_indexed(const std::string& path, const LabelImage& m,
                              PaletteColor sentinel_color = {235, 235, 235}) {
  std::vector<uint8_t> buf(static_cast<size_t>(m.h) * m.w);
  for (size_t i = 0; i < buf.size(); ++i) {
    if (m.v[i] < 0 || m.v[i] > 255) {
      throw IoError("write_png_indexed: index " + std::to_string(m.v[i]) + " does not fit in a byte");
    }
    buf[i] = static_cast<uint8_t>(m.v[i]);
  }
  std::array<png_color, 256> palette;
  for (int i = 0; i < 256; ++i) {
    const PaletteColor c = class_color(i);
    palette[static_cast<size_t>(i)] = {c.r, c.g, c.b};
  }
  palette[255] = {sentinel_color.r, sentinel_color.g, sentinel_color.b};

  detail::PngWriter ctx(path);
  if (setjmp(png_jmpbuf(ctx.png))) {
    throw IoError("libpng failed while writing " + path);
  }
  png_init_io(ctx.png, ctx.fp);
  png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(m.w), static_cast<png_uint_32>(m.h), 8,
               PNG_COLOR_TYPE_PALETTE, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_set_PLTE(ctx.png, ctx.info, palette.data(), 256);
  png_write_info(ctx.png, ctx.info);
  std::vector<png_bytep> rows(static_cast<size_t>(m.h));
  for (int r = 0; r < m.h; ++r) rows[static_cast<size_t>(r)] = buf.data() + static_cast<size_t>(r) * m.w;
  png_write_image(ctx.png, rows.data());
  png_write_end(ctx.png, nullptr);
}

inline LabelImage read_png_indexed(const std::string& path) {
  detail::PngReader ctx(path);
  if (setjmp(png_jmpbuf(ctx.png))) {
    throw IoError("libpng failed while reading " + path);
  }
  png_init_io(ctx.png, ctx.fp);
  png_read_info(ctx.png, ctx.info);
  if (png_get_color_type(ctx.png, ctx.info) != PNG_COLOR_TYPE_PALETTE) {
    throw IoError("expected indexed PNG: " + path);
  }
  if (png_get_bit_depth(ctx.png, ctx.info) < 8) png_set_packing(ctx.png);
  png_read_update_info(ctx.png, ctx.info);

  LabelImage m(static_cast<int>(png_get_image_height(ctx.png, ctx.info)),
               static_cast<int>(png_get_image_width(ctx.png, ctx.info)));
  std::vector<uint8_t> buf(static_cast<size_t>(m.h) * m.w);
  std::vector<png_bytep> rows(static_cast<size_t>(m.h));
  for (int r = 0; r < m.h; ++r) rows[static_cast<size_t>(r)] = buf.data() + static_cast<size_t>(r) * m.w;
  png_read_image(ctx.png, rows.data());
  png_read_end(ctx.png, nullptr);
  for (size_t i = 0; i < buf.size(); ++i) m.v[i] = buf[i];
  return m;
}

}  // namespace scribblevs
