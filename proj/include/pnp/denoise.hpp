#pragma once

#include <string>

#include "pnp/image.hpp"

namespace pnp {

/// Locally adjustable Gaussian denoiser G(u, s): MAP estimate of an image
/// observed with independent Gaussian noise of per-entry standard deviation
/// s. A constant map s = sigma * 1 gives the fixed-level denoiser.
///
/// `operator()` enforces the contract shared by every implementation: the
/// map must match the image shape and be nonnegative, and an all-zero map
/// returns the input unchanged without calling the backend.
class Denoiser {
 public:
  virtual ~Denoiser() = default;

  ImageTensor operator()(const ImageTensor& u, const NoiseLevelMap& s);

  virtual std::string name() const = 0;

 protected:
  virtual ImageTensor denoise(const ImageTensor& u, const NoiseLevelMap& s) = 0;
};

/// G^scale(u, s) = scale * G(u / scale, s / scale), for data in [0, scale]
/// fed to a denoiser that expects [0, 1].
ImageTensor denoise_rescaled(Denoiser& denoiser, const ImageTensor& u, const NoiseLevelMap& s,
                             double scale);

/// Returns its input. Reference for the external bridge and for N = 0 style
/// checks.
class IdentityDenoiser final : public Denoiser {
 public:
  std::string name() const override { return "identity"; }

 protected:
  ImageTensor denoise(const ImageTensor& u, const NoiseLevelMap&) override { return u; }
};

/// Explicit prior R(x) = kappa/2 ||x - c||^2. Its denoiser, the MAP problem
/// and the preconditioned problem all have closed forms, which makes it the
/// oracle for end-to-end checks.
struct QuadraticPriorParams {
  double kappa = 1.0;
  /// Prior mean image. When empty, every entry uses `mean_value`.
  ImageTensor mean;
  double mean_value = 0.5;

  double mean_at(Index i) const { return mean.empty() ? mean_value : mean[i]; }
};

/// x_i = (u_i + kappa s_i^2 c_i) / (1 + kappa s_i^2).
ImageTensor quadratic_prior_denoise(const ImageTensor& u, const NoiseLevelMap& s,
                                    const QuadraticPriorParams& params);

class QuadraticPriorDenoiser final : public Denoiser {
 public:
  explicit QuadraticPriorDenoiser(QuadraticPriorParams params = {});
  std::string name() const override { return "quadratic"; }
  const QuadraticPriorParams& params() const { return params_; }

 protected:
  ImageTensor denoise(const ImageTensor& u, const NoiseLevelMap& s) override {
    return quadratic_prior_denoise(u, s, params_);
  }

 private:
  QuadraticPriorParams params_;
};

/// Levels below this are treated as this value when weighting neighbours.
inline constexpr double kSmoothingLevelFloor = 1e-3;

/// Spatially adaptive Gaussian smoothing: output entry i is a normalized
/// Gaussian average of its channel plane with bandwidth
/// min(beta * s_i, h_max) pixels, truncated at three bandwidths, mirror
/// boundaries. Neighbour j is additionally weighted by
/// 1 / max(s_j, kSmoothingLevelFloor)^2. Each channel uses its own map plane.
ImageTensor adaptive_smoothing_denoise(const ImageTensor& u, const NoiseLevelMap& s,
                                       double beta = 4.0, double h_max = 8.0);

class AdaptiveSmoothingDenoiser final : public Denoiser {
 public:
  explicit AdaptiveSmoothingDenoiser(double beta = 4.0, double h_max = 8.0);
  std::string name() const override { return "adaptive_smoothing"; }
  double beta() const { return beta_; }
  double h_max() const { return h_max_; }

 protected:
  ImageTensor denoise(const ImageTensor& u, const NoiseLevelMap& s) override {
    return adaptive_smoothing_denoise(u, s, beta_, h_max_);
  }

 private:
  double beta_;
  double h_max_;
};

/// Mirror index into [0, n) without repeating the edge sample
/// (-1 -> 1, n -> n - 2). Periodic for offsets beyond one reflection.
inline Index mirror_index(Index i, Index n) {
  if (n == 1) return 0;
  const Index period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace pnp
