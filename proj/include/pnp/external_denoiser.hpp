#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "pnp/denoise.hpp"

namespace pnp {

// Wire protocol with an adapter process over its stdin/stdout. All integers
// and floats are little-endian.
//   handshake  client -> "PNPD" u32 version; adapter echoes the same 8 bytes
//   request    u8 type (1), u32 height, u32 width, u32 channels,
//              h*w*c float32 image, h*w*c float32 noise map
//   response   u8 status (0 ok); on ok, h*w*c float32 image
// The session ends when the client closes the adapter's stdin.
namespace protocol {
inline constexpr char kMagic[4] = {'P', 'N', 'P', 'D'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::uint8_t kDenoiseRequest = 1;
inline constexpr std::uint8_t kStatusOk = 0;
}  // namespace protocol

/// Denoiser backed by an adapter process, started with `/bin/sh -c command`.
///
/// One session serves one request at a time; use one instance per thread.
/// The noise map is always sent per channel. Values cross the boundary as
/// float32. A failed status leaves the session usable; protocol violations
/// and timeouts close it.
class ExternalDenoiser final : public Denoiser {
 public:
  explicit ExternalDenoiser(const std::string& command,
                            std::chrono::milliseconds timeout = std::chrono::seconds(60));
  ~ExternalDenoiser() override;
  ExternalDenoiser(const ExternalDenoiser&) = delete;
  ExternalDenoiser& operator=(const ExternalDenoiser&) = delete;

  std::string name() const override { return "external"; }
  const std::string& command() const;

 protected:
  ImageTensor denoise(const ImageTensor& u, const NoiseLevelMap& s) override;

 private:
  struct Session;
  std::unique_ptr<Session> session_;
};

}  // namespace pnp
