#pragma once

#include <filesystem>

#include "pnp/image.hpp"
#include "pnp/wire.hpp"

namespace pnp {

// Raw-float format: "PNPF", u32 height, u32 width, u32 channels, then
// height*width*channels float32 values, all little-endian, row-major with
// interleaved channels.

wire::Bytes encode_raw(const ImageF& image);
ImageF decode_raw(std::span<const std::uint8_t> bytes);

void store_raw(const ImageTensor& image, const std::filesystem::path& path);
ImageTensor load_raw(const std::filesystem::path& path);

/// 8-bit PNG, 1 or 3 channels. Load divides by 255; store clamps to [0,1]
/// and rounds half-up.
void store_png(const ImageTensor& image, const std::filesystem::path& path);
ImageTensor load_png(const std::filesystem::path& path);

/// Dispatches on extension: ".png" or ".pnpf".
void store_image(const ImageTensor& image, const std::filesystem::path& path);
ImageTensor load_image(const std::filesystem::path& path);

}  // namespace pnp
