#include "pnp/degrade.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#include "pnp/random.hpp"

namespace pnp {
namespace {

// Stream ids keep the generators of different purposes independent even
// when the user passes the same seed everywhere.
constexpr std::uint64_t kPatternStream = 1;
constexpr std::uint64_t kGaussianStream = 2;
constexpr std::uint64_t kPoissonStream = 3;

constexpr const char* kLayouts[] = {"RGGB", "GRBG", "GBRG", "BGGR"};

}  // namespace

SamplingOperator::SamplingOperator(PixelMask m) : mask(std::move(m)) {
  if (mask.count() == 0) throw InvalidArgument("sampling operator has no sampled entry");
}

BayerCFA parse_cfa(std::string_view name) {
  for (int i = 0; i < 4; ++i)
    if (name == kLayouts[i]) return static_cast<BayerCFA>(i);
  throw InvalidArgument("unknown CFA layout '" + std::string(name) + "'");
}

std::string to_string(BayerCFA cfa) { return kLayouts[static_cast<int>(cfa)]; }

int cfa_channel(BayerCFA cfa, Index row, Index col) {
  const char c = kLayouts[static_cast<int>(cfa)][(row % 2) * 2 + (col % 2)];
  return c == 'R' ? 0 : c == 'G' ? 1 : 2;
}

PixelMask make_random_pattern(Index height, Index width, Index channels, double rate,
                              std::uint64_t seed) {
  if (!(rate > 0.0 && rate <= 1.0))
    throw InvalidArgument("sampling rate must be in (0, 1], got " + std::to_string(rate));
  const Index n = height * width;
  const auto keep = static_cast<Index>(std::llround(rate * double(n)));
  if (keep < 1) throw InvalidArgument("sampling rate selects no pixel");

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(seed, kPatternStream);
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }

  PixelMask mask(Shape{height, width, channels});
  for (Index t = 0; t < keep; ++t) {
    const Index p = order[static_cast<std::size_t>(t)];
    for (Index c = 0; c < channels; ++c) mask.set(p / width, p % width, c, true);
  }
  return mask;
}

PixelMask make_regular_grid_pattern(Index height, Index width, Index channels, int factor) {
  if (factor < 2) throw InvalidArgument("grid factor must be >= 2");
  PixelMask mask(Shape{height, width, channels});
  for (Index i = 0; i < height; i += factor)
    for (Index j = 0; j < width; j += factor)
      for (Index c = 0; c < channels; ++c) mask.set(i, j, c, true);
  return mask;
}

PixelMask cfa_masks(BayerCFA cfa, Index height, Index width) {
  if (height < 2 || width < 2) throw InvalidArgument("CFA needs at least 2x2 pixels");
  PixelMask mask(Shape{height, width, 3});
  for (Index i = 0; i < height; ++i)
    for (Index j = 0; j < width; ++j) mask.set(i, j, cfa_channel(cfa, i, j), true);
  return mask;
}

ImageTensor apply_sampling(const ImageTensor& x, const SamplingOperator& op) {
  require_same_shape(x, op.mask, "apply_sampling");
  return x.with(x.array() * op.mask.array());
}

ImageTensor mosaic(const ImageTensor& rgb, BayerCFA cfa) {
  if (rgb.channels() != 3) throw ShapeError("mosaic expects a 3-channel image");
  ImageTensor raw(rgb.height(), rgb.width(), 1);
  for (Index i = 0; i < rgb.height(); ++i)
    for (Index j = 0; j < rgb.width(); ++j) raw(i, j) = rgb(i, j, cfa_channel(cfa, i, j));
  return raw;
}

ImageTensor unmosaic(const ImageTensor& raw, BayerCFA cfa) {
  if (raw.channels() != 1) throw ShapeError("unmosaic expects a 1-channel image");
  ImageTensor rgb(raw.height(), raw.width(), 3);
  for (Index i = 0; i < raw.height(); ++i)
    for (Index j = 0; j < raw.width(); ++j) rgb(i, j, cfa_channel(cfa, i, j)) = raw(i, j);
  return rgb;
}

ImageTensor add_gaussian_noise(const ImageTensor& x, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw InvalidArgument("noise sigma must be >= 0");
  if (sigma == 0.0) return x;
  Rng rng(seed, kGaussianStream);
  ImageTensor out = x;
  for (Index i = 0; i < out.size(); ++i) out[i] += sigma * rng.normal();
  return out;
}

ImageTensor add_poisson_noise(const ImageTensor& x, double peak, std::uint64_t seed) {
  if (!(peak > 0.0)) throw InvalidArgument("Poisson peak must be > 0");
  if ((x.array() < 0.0).any()) throw InvalidArgument("Poisson noise needs nonnegative input");
  Rng rng(seed, kPoissonStream);
  ImageTensor out(x.shape());
  for (Index i = 0; i < out.size(); ++i) out[i] = double(rng.poisson(peak * x[i]));
  return out;
}

}  // namespace pnp
