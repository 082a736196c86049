#include "pnp/denoise.hpp"

#include <cmath>
#include <vector>

namespace pnp {

ImageTensor Denoiser::operator()(const ImageTensor& u, const NoiseLevelMap& s) {
  require_same_shape(u, s, name().c_str());
  if (!s.all_finite() || (s.array() < 0.0).any())
    throw InvalidArgument(name() + ": noise level map must be finite and >= 0");
  if ((s.array() == 0.0).all()) return u;
  ImageTensor out = denoise(u, s);
  require_same_shape(u, out, name().c_str());
  if (!out.all_finite()) throw Error(name() + ": denoiser produced non-finite values");
  return out;
}

ImageTensor denoise_rescaled(Denoiser& denoiser, const ImageTensor& u, const NoiseLevelMap& s,
                             double scale) {
  if (!(scale > 0.0)) throw InvalidArgument("denoiser range scale must be > 0");
  if (scale == 1.0) return denoiser(u, s);
  const ImageTensor out = denoiser(u.with(u.array() / scale), s.with(s.array() / scale));
  return out.with(scale * out.array());
}

ImageTensor quadratic_prior_denoise(const ImageTensor& u, const NoiseLevelMap& s,
                                    const QuadraticPriorParams& params) {
  require_same_shape(u, s, "quadratic_prior_denoise");
  if (!params.mean.empty()) require_same_shape(u, params.mean, "quadratic_prior_denoise mean");
  if (!(params.kappa > 0.0) || !std::isfinite(params.kappa))
    throw InvalidArgument("quadratic prior precision must be finite and > 0");
  ImageTensor out(u.shape());
  for (Index i = 0; i < u.size(); ++i) {
    const double ks2 = params.kappa * s[i] * s[i];
    out[i] = s[i] == 0.0 ? u[i] : (u[i] + ks2 * params.mean_at(i)) / (1.0 + ks2);
  }
  return out;
}

QuadraticPriorDenoiser::QuadraticPriorDenoiser(QuadraticPriorParams params)
    : params_(std::move(params)) {
  if (!(params_.kappa > 0.0) || !std::isfinite(params_.kappa))
    throw InvalidArgument("quadratic prior precision must be finite and > 0");
}

ImageTensor adaptive_smoothing_denoise(const ImageTensor& u, const NoiseLevelMap& s, double beta,
                                       double h_max) {
  require_same_shape(u, s, "adaptive_smoothing_denoise");
  if (!(beta > 0.0)) throw InvalidArgument("smoothing beta must be > 0");
  if (!(h_max >= 0.0)) throw InvalidArgument("smoothing h_max must be >= 0");

  const Index h = u.height(), w = u.width(), nc = u.channels();
  const auto max_radius = static_cast<Index>(std::ceil(3.0 * h_max));
  std::vector<double> g(static_cast<std::size_t>(2 * max_radius + 1));
  ImageTensor out(u.shape());

  // Neighbours are weighted by 1 / s_j^2 on top of the spatial kernel, so
  // reliable entries dominate the average. Uniform maps reduce to a plain
  // Gaussian average.
  const double s_floor = kSmoothingLevelFloor;
  ImageTensor precision(u.shape());
  for (Index k = 0; k < u.size(); ++k) {
    const double sk = std::max(s[k], s_floor);
    precision[k] = 1.0 / (sk * sk);
  }

  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j)
      for (Index c = 0; c < nc; ++c) {
        const double bw = std::min(beta * s(i, j, c), h_max);
        const auto radius = static_cast<Index>(std::ceil(3.0 * bw));
        if (bw <= 0.0 || radius == 0) {
          out(i, j, c) = u(i, j, c);
          continue;
        }
        const double inv = 1.0 / (2.0 * bw * bw);
        for (Index d = -radius; d <= radius; ++d)
          g[static_cast<std::size_t>(d + radius)] = std::exp(-double(d * d) * inv);
        double acc = 0.0, norm = 0.0;
        for (Index di = -radius; di <= radius; ++di) {
          const Index ii = mirror_index(i + di, h);
          const double gv = g[static_cast<std::size_t>(di + radius)];
          for (Index dj = -radius; dj <= radius; ++dj) {
            const Index jj = mirror_index(j + dj, w);
            const double wt = gv * g[static_cast<std::size_t>(dj + radius)] * precision(ii, jj, c);
            acc += wt * u(ii, jj, c);
            norm += wt;
          }
        }
        out(i, j, c) = acc / norm;
      }
  return out;
}

AdaptiveSmoothingDenoiser::AdaptiveSmoothingDenoiser(double beta, double h_max)
    : beta_(beta), h_max_(h_max) {
  if (!(beta > 0.0)) throw InvalidArgument("smoothing beta must be > 0");
  if (!(h_max >= 0.0)) throw InvalidArgument("smoothing h_max must be >= 0");
}

}  // namespace pnp
