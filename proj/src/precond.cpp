#include "pnp/precond.hpp"

#include <cmath>
#include <vector>

#include "pnp/denoise.hpp"

namespace pnp {

Preconditioner::Preconditioner(ImageTensor v) : values(std::move(v)) {
  if (!values.all_finite() || !(values.array() > 0.0).all())
    throw InvalidArgument("preconditioner entries must be finite and > 0");
}

double MaskPrecondConfig::sigma_f() const {
  return sigma_f_last / std::sqrt(static_cast<double>(iterations));
}

MaskPrecondConfig MaskPrecondConfig::from_p_max(double p_max, double sigma_f_last,
                                                int iterations) {
  if (!(p_max > 1.0)) throw InvalidArgument("p_max must be > 1");
  return {1.0 / (p_max - 1.0), sigma_f_last, iterations};
}

void MaskPrecondConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidArgument("epsilon must be > 0");
  if (!(sigma_f_last >= 0.0)) throw InvalidArgument("sigma_f_last must be >= 0");
  if (iterations < 1) throw InvalidArgument("iteration count must be >= 1");
}

ImageTensor gaussian_blur(const ImageTensor& map, double sigma) {
  if (!(sigma >= 0.0)) throw InvalidArgument("blur sigma must be >= 0");
  if (sigma == 0.0) return map;

  const auto radius = static_cast<Index>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (Index d = -radius; d <= radius; ++d) {
    const double w = std::exp(-double(d * d) / (2.0 * sigma * sigma));
    kernel[static_cast<std::size_t>(d + radius)] = w;
    total += w;
  }
  for (auto& w : kernel) w /= total;

  const Index h = map.height(), w = map.width(), nc = map.channels();
  ImageTensor rows(map.shape());
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j)
      for (Index c = 0; c < nc; ++c) {
        double acc = 0.0;
        for (Index d = -radius; d <= radius; ++d)
          acc += kernel[static_cast<std::size_t>(d + radius)] * map(i, mirror_index(j + d, w), c);
        rows(i, j, c) = acc;
      }
  ImageTensor out(map.shape());
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j)
      for (Index c = 0; c < nc; ++c) {
        double acc = 0.0;
        for (Index d = -radius; d <= radius; ++d)
          acc += kernel[static_cast<std::size_t>(d + radius)] * rows(mirror_index(i + d, h), j, c);
        out(i, j, c) = acc;
      }
  return out;
}

Preconditioner mask_preconditioner(const PixelMask& m0, int k, const MaskPrecondConfig& cfg) {
  cfg.validate();
  if (k < 0) throw InvalidArgument("iteration index must be >= 0");
  if (m0.count() == 0) throw InvalidArgument("mask preconditioner needs a known pixel");

  const ImageTensor m = gaussian_blur(m0.values(), cfg.sigma_f() * std::sqrt(double(k)));
  const Index nc = m.channels();
  ImageTensor p(m.shape());
  for (Index c = 0; c < nc; ++c) {
    // Strided view of one channel plane.
    Eigen::Map<const Eigen::ArrayXd, 0, Eigen::InnerStride<>> plane(
        m.data() + c, m.shape().pixels(), Eigen::InnerStride<>(nc));
    Eigen::Map<Eigen::ArrayXd, 0, Eigen::InnerStride<>> out(p.data() + c, p.shape().pixels(),
                                                             Eigen::InnerStride<>(nc));
    out = (plane.maxCoeff() + cfg.epsilon) / (plane + cfg.epsilon);
  }
  return Preconditioner(std::move(p));
}

Preconditioner poisson_precond_init(const ImageTensor& counts, double floor) {
  if ((counts.array() < 0.0).any())
    throw InvalidArgument("Poisson preconditioner needs nonnegative counts");
  return poisson_precond_update(counts, floor);
}

Preconditioner poisson_precond_update(const ImageTensor& denoised, double floor) {
  if (!(floor > 0.0)) throw InvalidArgument("Poisson preconditioner floor must be > 0");
  return Preconditioner(denoised.with(denoised.array().max(floor).sqrt()));
}

Preconditioner identity_preconditioner(const Shape& shape) {
  return Preconditioner(ImageTensor::ones(shape));
}

}  // namespace pnp
