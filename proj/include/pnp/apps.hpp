#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "pnp/degrade.hpp"
#include "pnp/denoise.hpp"
#include "pnp/solver.hpp"

namespace pnp {

struct CompletionTask {
  double rate = 0.2;
};
struct InterpolationTask {
  int factor = 2;
};
struct DemosaicTask {
  BayerCFA cfa = BayerCFA::RGGB;
  double noise_sigma = 0.0;
};
struct PoissonTask {
  double peak = 255.0;
  /// Anscombe-based P^0 with P updates disabled (extreme noise, e.g. peak 1).
  bool anscombe_init = false;
};
using Task = std::variant<CompletionTask, InterpolationTask, DemosaicTask, PoissonTask>;

std::string task_name(const Task& task);

enum class InitKind { Default, Zeros, Observation, Bicubic, Malvar };

/// Everything a restoration needs apart from the data. Unset optionals take
/// the per-task defaults below.
struct TaskConfig {
  Task task = CompletionTask{};
  bool preconditioned = true;
  std::optional<int> iterations;
  std::optional<double> sigma0_den;
  std::optional<double> sigmaN_den;
  std::optional<double> sigma_f_last;
  double p_max = 10.0;
  /// Poisson preconditioner floor in counts; default peak / 255.
  std::optional<double> poisson_floor;
  std::optional<bool> poisson_update;
  std::optional<bool> passthrough;
  InitKind init = InitKind::Default;
  std::uint64_t seed = 0;
};

/// Fully resolved parameters for one run.
struct ResolvedParams {
  int iterations = 1;
  double sigma = 1.0 / 255.0;
  double sigma0_den = 0.0;
  double sigmaN_den = 0.0;
  double sigma_f_last = 0.0;
  double p_max = 10.0;
  double poisson_floor = 1.0;
  bool poisson_update = true;
  bool passthrough = false;
  InitKind init = InitKind::Zeros;
};

/// Applies the per-task defaults: measurement sigma 1/255 for noise-free
/// tasks; completion sigma0 1, sigmaN 1/255, sigma_f_last 0; interpolation
/// sigma0 50/255, sigmaN 1/255, sigma_f_last 0.4; demosaicing sigma0 50/255,
/// sigmaN = noise sigma (1/255 when noise-free), sigma_f_last 0.3; p_max 10.
/// Validates the config and throws ConfigError on inconsistencies.
ResolvedParams resolve(const TaskConfig& config);

/// Degraded input of a task. `mask` is the sampling pattern for completion,
/// interpolation and demosaicing; Poisson observations are counts.
struct Observation {
  ImageTensor data;
  std::optional<PixelMask> mask;
};

/// Builds the observation from a ground-truth image using config.seed.
Observation degrade(const TaskConfig& config, const ImageTensor& truth);

/// Separable Keys bicubic (a = -0.5) upsampling of the samples on a regular
/// grid with the given factor; exact at the samples.
ImageTensor bicubic_init(const ImageTensor& observation, const PixelMask& pattern, int factor);

/// Malvar-He-Cutler 5x5 gradient-corrected linear demosaicing. Accepts the
/// one-channel mosaic or the three-channel sampled image.
ImageTensor malvar_init(const ImageTensor& cfa_observation, BayerCFA cfa);

ImageTensor anscombe_forward(const ImageTensor& counts);
/// Algebraic inverse (z/2)^2 - 3/8, floored at 0.
ImageTensor anscombe_inverse(const ImageTensor& z);

/// Denoise in the variance-stabilized domain with unit sigma, then invert.
ImageTensor anscombe_estimate(const ImageTensor& counts, double peak, Denoiser& denoiser);

/// Builds the problem, initialization, preconditioner and schedule for a task
/// and runs the solver. The reference, if given, feeds the PSNR trace.
RestorationResult run_task(const TaskConfig& config, const Observation& observation,
                           Denoiser& denoiser,
                           const std::optional<ImageTensor>& reference = std::nullopt);

/// The initialization run_task uses, in [0, 1] units.
ImageTensor initial_estimate(const TaskConfig& config, const Observation& observation,
                             Denoiser& denoiser);

}  // namespace pnp
