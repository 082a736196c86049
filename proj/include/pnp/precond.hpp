#pragma once

#include "pnp/image.hpp"

namespace pnp {

/// Diagonal of the preconditioning matrix P in image layout. Entries are
/// strictly positive so P stays invertible.
struct Preconditioner {
  ImageTensor values;

  Preconditioner() = default;
  explicit Preconditioner(ImageTensor v);

  const Shape& shape() const { return values.shape(); }
  const ImageTensor::Array& array() const { return values.array(); }
};

struct MaskPrecondConfig {
  double epsilon = 1.0 / 9.0;
  /// Blur applied to the mask at the last iteration.
  double sigma_f_last = 0.0;
  int iterations = 1;

  double p_max() const { return (1.0 + epsilon) / epsilon; }
  /// Per-iteration blur, chosen so the blur at iteration N is sigma_f_last.
  double sigma_f() const;
  /// Config whose largest value is `p_max`.
  static MaskPrecondConfig from_p_max(double p_max, double sigma_f_last, int iterations);
  void validate() const;
};

/// Truncated (radius ceil(3 sigma)) and normalized Gaussian blur of every
/// channel plane with mirror boundaries. sigma = 0 returns the input.
ImageTensor gaussian_blur(const ImageTensor& map, double sigma);

/// P_i = (max(m^k) + eps) / (m^k_i + eps) with m^k = m0 * g(sigma_f sqrt(k)).
/// m^k is evaluated in one blur, never by iterating; the maximum is taken per
/// channel plane so per-color masks get their own normalization.
Preconditioner mask_preconditioner(const PixelMask& m0, int k, const MaskPrecondConfig& cfg);

/// P = sqrt(max(b, floor)).
Preconditioner poisson_precond_init(const ImageTensor& counts, double floor);

/// P = sqrt(max(denoised, floor)); negative denoiser outputs are floored.
Preconditioner poisson_precond_update(const ImageTensor& denoised, double floor);

Preconditioner identity_preconditioner(const Shape& shape);

}  // namespace pnp
