#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "pnp/image.hpp"
#include "pnp/random.hpp"

namespace pnp::testing {

/// Smooth ramp and sinusoid with a bright disk and a flat rectangle; values
/// in [0, 1].
inline ImageTensor synthetic_image(Index n = 64, Index channels = 3) {
  ImageTensor im(n, n, channels);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      for (Index c = 0; c < channels; ++c) {
        double v = 0.2 + 0.3 * double(i) / double(n) +
                   0.15 * std::sin(2.0 * std::numbers::pi * double(j) / 32.0 + double(c));
        const double di = double(i) - 30.0, dj = double(j) - 36.0;
        if (di * di + dj * dj < 14.0 * 14.0) v += 0.3;
        if (i > 8 && i < 22 && j > 6 && j < 24) v = 0.85 - 0.1 * double(c);
        im(i, j, c) = std::clamp(v, 0.0, 1.0);
      }
  return im;
}

inline ImageTensor random_image(Shape shape, std::uint64_t seed, double lo = 0.0,
                                double hi = 1.0) {
  Rng rng(seed, 99);
  ImageTensor im(shape);
  for (Index i = 0; i < im.size(); ++i) im[i] = lo + (hi - lo) * rng.uniform();
  return im;
}

inline double max_abs_diff(const ImageTensor& a, const ImageTensor& b) {
  return (a.array() - b.array()).abs().maxCoeff();
}

inline double relative_l2(const ImageTensor& x, const ImageTensor& ref) {
  return std::sqrt((x.array() - ref.array()).square().sum() / ref.array().square().sum());
}

}  // namespace pnp::testing
