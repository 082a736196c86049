#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

// Little-endian encoding shared by the raw-float file format and the external
// denoiser protocol.
namespace pnp::wire {

using Bytes = std::vector<std::uint8_t>;

inline void append_u32(Bytes& buf, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) buf.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

inline std::uint32_t read_u32(std::span<const std::uint8_t> bytes) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= std::uint32_t(bytes[k]) << (8 * k);
  return v;
}

inline void append_f32(Bytes& buf, std::span<const float> values) {
  const std::size_t start = buf.size();
  buf.resize(start + 4 * values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(values[i]);
    for (int k = 0; k < 4; ++k)
      buf[start + 4 * i + k] = static_cast<std::uint8_t>(bits >> (8 * k));
  }
}

inline void read_f32(std::span<const std::uint8_t> bytes, std::span<float> out) {
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::bit_cast<float>(read_u32(bytes.subspan(4 * i, 4)));
}

}  // namespace pnp::wire
