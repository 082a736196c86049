#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "pnp/image.hpp"

namespace pnp {

/// Sampling matrix A of a completion / interpolation / demosaicing problem,
/// held as the indicator of sampled entries.
struct SamplingOperator {
  PixelMask mask;

  explicit SamplingOperator(PixelMask m);
  /// Diagonal of A^T A in image layout (the mask itself).
  const ImageTensor& gram_diagonal() const { return mask.values(); }
};

enum class BayerCFA { RGGB, GRBG, GBRG, BGGR };

BayerCFA parse_cfa(std::string_view name);
std::string to_string(BayerCFA cfa);
/// Color channel (0 R, 1 G, 2 B) recorded at a sensor position.
int cfa_channel(BayerCFA cfa, Index row, Index col);

/// Shuffles all spatial positions with a seeded generator and keeps the
/// first round(rate*h*w). The same positions are used in every channel.
PixelMask make_random_pattern(Index height, Index width, Index channels, double rate,
                              std::uint64_t seed);

/// Samples positions with row % factor == 0 and col % factor == 0.
PixelMask make_regular_grid_pattern(Index height, Index width, Index channels, int factor);

/// Three-channel mask; exactly one channel is set at each position.
PixelMask cfa_masks(BayerCFA cfa, Index height, Index width);

/// b = mask .* x, i.e. A^T A x embedded in image shape.
ImageTensor apply_sampling(const ImageTensor& x, const SamplingOperator& op);

/// Collapse a CFA-sampled three-channel image to a one-channel raw mosaic.
ImageTensor mosaic(const ImageTensor& rgb, BayerCFA cfa);
/// Spread a one-channel raw mosaic onto three channels (zeros elsewhere).
ImageTensor unmosaic(const ImageTensor& raw, BayerCFA cfa);

ImageTensor add_gaussian_noise(const ImageTensor& x, double sigma, std::uint64_t seed);

/// Each output entry is drawn from Poisson(peak * x_i); output is in counts.
ImageTensor add_poisson_noise(const ImageTensor& x, double peak, std::uint64_t seed);

}  // namespace pnp
