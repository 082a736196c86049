#pragma once

#include <cstdint>

#include "pnp/degrade.hpp"
#include "pnp/image.hpp"
#include "pnp/precond.hpp"

namespace pnp {

struct MapGenParams {
  /// Mean noise level; samples fall in [0, 2 mu].
  double mu = 25.0 / 255.0;
  std::uint64_t seed = 0;
};

/// Every entry equals one draw of 2 mu X, X ~ U[0, 1].
NoiseLevelMap generate_noise_map_constant(const Shape& shape, const MapGenParams& params);

/// S_i = 2 mu (X_i (1 - W) + O W): one (W, O) per map, X_i i.i.d. per entry.
NoiseLevelMap generate_noise_map_variable(const Shape& shape, const MapGenParams& params);

/// Same process with the weight W fixed instead of drawn.
NoiseLevelMap generate_noise_map_variable_given_weight(const Shape& shape,
                                                       const MapGenParams& params,
                                                       double weight);

/// Variable-map process run independently for each channel plane.
NoiseLevelMap generate_noise_map_rgb(const Shape& shape, const MapGenParams& params);

/// sigma_den times the per-channel mask preconditioner of the CFA at
/// iteration k.
NoiseLevelMap generate_cfa_noise_map(BayerCFA cfa, Index height, Index width, double sigma_den,
                                     const MaskPrecondConfig& cfg, int k);

}  // namespace pnp
