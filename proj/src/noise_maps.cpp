#include "pnp/noise_maps.hpp"

#include "pnp/random.hpp"

namespace pnp {
namespace {

constexpr std::uint64_t kConstantMapStream = 11;
constexpr std::uint64_t kVariableMapStream = 12;

void check(const MapGenParams& params) {
  if (!(params.mu > 0.0)) throw InvalidArgument("noise map mean mu must be > 0");
}

// Fills channel plane `c` (or all entries when c < 0) from one (W, O) pair.
void fill_variable(NoiseLevelMap& map, double mu, double weight, double offset, Rng& rng,
                   Index c) {
  const Index nc = map.channels();
  for (Index p = 0; p < map.shape().pixels(); ++p)
    for (Index ch = 0; ch < nc; ++ch) {
      if (c >= 0 && ch != c) continue;
      const double x = rng.uniform();
      map[p * nc + ch] = 2.0 * mu * (x * (1.0 - weight) + offset * weight);
    }
}

}  // namespace

NoiseLevelMap generate_noise_map_constant(const Shape& shape, const MapGenParams& params) {
  check(params);
  Rng rng(params.seed, kConstantMapStream);
  return NoiseLevelMap::constant(shape, 2.0 * params.mu * rng.uniform());
}

NoiseLevelMap generate_noise_map_variable(const Shape& shape, const MapGenParams& params) {
  check(params);
  Rng rng(params.seed, kVariableMapStream);
  const double weight = rng.uniform();
  const double offset = rng.uniform();
  NoiseLevelMap map(shape);
  fill_variable(map, params.mu, weight, offset, rng, -1);
  return map;
}

NoiseLevelMap generate_noise_map_variable_given_weight(const Shape& shape,
                                                       const MapGenParams& params,
                                                       double weight) {
  check(params);
  if (!(weight >= 0.0 && weight <= 1.0)) throw InvalidArgument("weight must be in [0, 1]");
  Rng rng(params.seed, kVariableMapStream);
  rng.uniform();  // keep X_i aligned with the unconditioned stream
  const double offset = rng.uniform();
  NoiseLevelMap map(shape);
  fill_variable(map, params.mu, weight, offset, rng, -1);
  return map;
}

NoiseLevelMap generate_noise_map_rgb(const Shape& shape, const MapGenParams& params) {
  check(params);
  if (shape.channels == 1) return generate_noise_map_variable(shape, params);
  NoiseLevelMap map(shape);
  for (Index c = 0; c < shape.channels; ++c) {
    Rng rng(params.seed, kVariableMapStream + 0x100 * std::uint64_t(c + 1));
    const double weight = rng.uniform();
    const double offset = rng.uniform();
    fill_variable(map, params.mu, weight, offset, rng, c);
  }
  return map;
}

NoiseLevelMap generate_cfa_noise_map(BayerCFA cfa, Index height, Index width, double sigma_den,
                                     const MaskPrecondConfig& cfg, int k) {
  if (!(sigma_den >= 0.0)) throw InvalidArgument("sigma_den must be >= 0");
  const Preconditioner p = mask_preconditioner(cfa_masks(cfa, height, width), k, cfg);
  return p.values.with(sigma_den * p.array());
}

}  // namespace pnp
