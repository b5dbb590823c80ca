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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace histoens {

// Interleaved raster. Samples are stored as they appear in the file, so a
// 16-bit sample occupies two bytes in big-endian order.
struct Image {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint8_t channels = 3;   // 1 gray, 2 gray+alpha, 3 RGB, 4 RGBA
  std::uint8_t bit_depth = 8;  // 8 or 16
  std::vector<std::uint8_t> pixels;

  std::size_t pixel_bytes() const noexcept {
    return static_cast<std::size_t>(channels) * (bit_depth / 8);
  }
  std::size_t row_bytes() const noexcept { return pixel_bytes() * width; }

  friend bool operator==(const Image&, const Image&) = default;
};

enum class FlipAxis { horizontal, vertical };

// Horizontal maps (x, y) to (W-1-x, y); vertical maps (x, y) to (x, H-1-y).
Image apply_flip(const Image& img, FlipAxis axis);

// PNG codec. Palette and sub-byte grayscale inputs are expanded to 8-bit
// samples; every other layout round-trips with its channel count and depth.
// Decoding failures throw ValidationError.
Image decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const Image& img);

Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);

}  // namespace histoens
