// Copyright 2026 The histoens Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "histoens/image.hpp"

#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cstring>
#include <string>
#include <string_view>

#include "histoens/error.hpp"
#include "histoens/io.hpp"

namespace histoens {
namespace {

// libpng reports errors by longjmp. The functions holding a setjmp below
// only touch trivially-destructible locals, and every buffer they fill is
// allocated by the caller beforehand.
struct PngContext {
  const std::uint8_t* data = nullptr;
  std::size_t size = 0;
  std::size_t pos = 0;
  std::vector<std::uint8_t>* sink = nullptr;
  char message[256] = {};
};

void on_error(png_structp png, png_const_charp msg) {
  auto* ctx = static_cast<PngContext*>(png_get_error_ptr(png));
  std::snprintf(ctx->message, sizeof(ctx->message), "%s", msg);
  png_longjmp(png, 1);
}

void on_warning(png_structp, png_const_charp) {}

void read_from_memory(png_structp png, png_bytep out, png_size_t len) {
  auto* ctx = static_cast<PngContext*>(png_get_io_ptr(png));
  if (len > ctx->size - ctx->pos) png_error(png, "truncated PNG stream");
  std::memcpy(out, ctx->data + ctx->pos, len);
  ctx->pos += len;
}

void write_to_memory(png_structp png, png_bytep in, png_size_t len) {
  auto* ctx = static_cast<PngContext*>(png_get_io_ptr(png));
  ctx->sink->insert(ctx->sink->end(), in, in + len);
}

void flush_noop(png_structp) {}

struct Header {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int channels = 0;
  int bit_depth = 0;
};

bool read_header(png_structp png, png_infop info, Header* header) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);
  header->width = png_get_image_width(png, info);
  header->height = png_get_image_height(png, info);
  header->channels = png_get_channels(png, info);
  header->bit_depth = png_get_bit_depth(png, info);
  return true;
}

bool read_rows(png_structp png, png_infop info, png_bytepp rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_read_image(png, rows);
  png_read_end(png, info);
  return true;
}

bool write_all(png_structp png, png_infop info, const Image* img, png_bytepp rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  int color = PNG_COLOR_TYPE_RGB;
  switch (img->channels) {
    case 1: color = PNG_COLOR_TYPE_GRAY; break;
    case 2: color = PNG_COLOR_TYPE_GRAY_ALPHA; break;
    case 3: color = PNG_COLOR_TYPE_RGB; break;
    case 4: color = PNG_COLOR_TYPE_RGB_ALPHA; break;
  }
  png_set_IHDR(png, info, img->width, img->height, img->bit_depth, color,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows);
  png_write_end(png, info);
  return true;
}

void check_layout(const Image& img) {
  if (img.channels < 1 || img.channels > 4) {
    throw ValidationError("image has unsupported channel count " + std::to_string(img.channels));
  }
  if (img.bit_depth != 8 && img.bit_depth != 16) {
    throw ValidationError("image has unsupported bit depth " + std::to_string(img.bit_depth));
  }
  if (img.pixels.size() != img.row_bytes() * img.height) {
    throw ValidationError("image pixel buffer does not match its dimensions");
  }
}

}  // namespace

Image apply_flip(const Image& img, FlipAxis axis) {
  check_layout(img);
  Image out = img;
  const std::size_t px = img.pixel_bytes();
  const std::size_t stride = img.row_bytes();
  for (std::uint32_t y = 0; y < img.height; ++y) {
    const std::uint8_t* src = img.pixels.data() + y * stride;
    if (axis == FlipAxis::vertical) {
      std::copy_n(src, stride, out.pixels.data() + (img.height - 1 - y) * stride);
      continue;
    }
    std::uint8_t* dst = out.pixels.data() + y * stride;
    for (std::uint32_t x = 0; x < img.width; ++x) {
      std::copy_n(src + x * px, px, dst + (img.width - 1 - x) * px);
    }
  }
  return out;
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw ValidationError("not a PNG stream");
  }
  PngContext ctx;
  ctx.data = bytes.data();
  ctx.size = bytes.size();
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &ctx, on_error, on_warning);
  if (!png) throw std::runtime_error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  png_set_read_fn(png, &ctx, read_from_memory);

  Header header;
  bool ok = info && read_header(png, info, &header);
  Image img;
  if (ok && (header.bit_depth == 8 || header.bit_depth == 16)) {
    img.width = header.width;
    img.height = header.height;
    img.channels = static_cast<std::uint8_t>(header.channels);
    img.bit_depth = static_cast<std::uint8_t>(header.bit_depth);
    img.pixels.resize(img.row_bytes() * img.height);
    std::vector<png_bytep> rows(img.height);
    for (std::uint32_t y = 0; y < img.height; ++y) rows[y] = img.pixels.data() + y * img.row_bytes();
    ok = read_rows(png, info, rows.data());
  } else if (ok) {
    std::snprintf(ctx.message, sizeof(ctx.message), "unsupported bit depth %d", header.bit_depth);
    ok = false;
  }
  png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
  if (!ok) throw ValidationError(std::string("undecodable PNG: ") + ctx.message);
  return img;
}

std::vector<std::uint8_t> encode_png(const Image& img) {
  check_layout(img);
  if (img.width == 0 || img.height == 0) throw ValidationError("cannot encode an empty image");
  std::vector<std::uint8_t> out;
  PngContext ctx;
  ctx.sink = &out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &ctx, on_error, on_warning);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  png_set_write_fn(png, &ctx, write_to_memory, flush_noop);

  std::vector<png_bytep> rows(img.height);
  for (std::uint32_t y = 0; y < img.height; ++y) {
    // libpng takes non-const row pointers but does not modify them on write.
    rows[y] = const_cast<png_bytep>(img.pixels.data() + y * img.row_bytes());
  }
  const bool ok = info && write_all(png, info, &img, rows.data());
  png_destroy_write_struct(&png, info ? &info : nullptr);
  if (!ok) throw std::runtime_error(std::string("PNG encode failed: ") + ctx.message);
  return out;
}

Image read_png(const std::filesystem::path& path) {
  const std::string bytes = io::read_file(path);
  try {
    return decode_png(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_png(const std::filesystem::path& path, const Image& img) {
  const auto bytes = encode_png(img);
  io::write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace histoens
