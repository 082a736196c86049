#include "pnp/apps.hpp"

#include <array>
#include <cmath>

#include "pnp/random.hpp"

namespace pnp {
namespace {

constexpr double kNoiseFreeSigma = 1.0 / 255.0;

using Kernel5 = std::array<std::array<double, 5>, 5>;

// Malvar-He-Cutler filters, in eighths.
constexpr Kernel5 kGreenAtRedBlue = {{{0, 0, -1, 0, 0},
                                      {0, 0, 2, 0, 0},
                                      {-1, 2, 4, 2, -1},
                                      {0, 0, 2, 0, 0},
                                      {0, 0, -1, 0, 0}}};
// Red (blue) at a green pixel whose horizontal neighbours are red (blue).
constexpr Kernel5 kAlongRow = {{{0, 0, 0.5, 0, 0},
                                {0, -1, 0, -1, 0},
                                {-1, 4, 5, 4, -1},
                                {0, -1, 0, -1, 0},
                                {0, 0, 0.5, 0, 0}}};
// Red (blue) at a green pixel whose vertical neighbours are red (blue).
constexpr Kernel5 kAlongColumn = {{{0, 0, -1, 0, 0},
                                   {0, -1, 4, -1, 0},
                                   {0.5, 0, 5, 0, 0.5},
                                   {0, -1, 4, -1, 0},
                                   {0, 0, -1, 0, 0}}};
// Red at blue, blue at red.
constexpr Kernel5 kDiagonal = {{{0, 0, -1.5, 0, 0},
                                {0, 2, 0, 2, 0},
                                {-1.5, 0, 6, 0, -1.5},
                                {0, 2, 0, 2, 0},
                                {0, 0, -1.5, 0, 0}}};

double correlate(const ImageTensor& raw, Index i, Index j, const Kernel5& k) {
  double acc = 0.0;
  for (Index di = -2; di <= 2; ++di)
    for (Index dj = -2; dj <= 2; ++dj) {
      const double w = k[static_cast<std::size_t>(di + 2)][static_cast<std::size_t>(dj + 2)];
      if (w != 0.0)
        acc += w * raw(mirror_index(i + di, raw.height()), mirror_index(j + dj, raw.width()));
    }
  return acc / 8.0;
}

double keys_weight(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

// Upsamples `n_low` samples to `n_high` positions at spacing `factor`.
// Returns per output position the four source indices and weights.
struct Taps {
  std::array<Index, 4> index;
  std::array<double, 4> weight;
};

std::vector<Taps> cubic_taps(Index n_high, Index n_low, int factor) {
  std::vector<Taps> taps(static_cast<std::size_t>(n_high));
  for (Index r = 0; r < n_high; ++r) {
    const Index base = r / factor;
    const double t = double(r % factor) / factor;
    auto& tap = taps[static_cast<std::size_t>(r)];
    for (int m = 0; m < 4; ++m) {
      tap.index[static_cast<std::size_t>(m)] = mirror_index(base + m - 1, n_low);
      tap.weight[static_cast<std::size_t>(m)] = keys_weight(t - (m - 1));
    }
  }
  return taps;
}

bool is_grid(const PixelMask& pattern, int factor) {
  for (Index i = 0; i < pattern.shape().height; ++i)
    for (Index j = 0; j < pattern.shape().width; ++j)
      for (Index c = 0; c < pattern.shape().channels; ++c)
        if (pattern(i, j, c) != (i % factor == 0 && j % factor == 0)) return false;
  return true;
}

int default_iterations(const Task& task, bool preconditioned) {
  return std::visit(
      [&](const auto& t) -> int {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, CompletionTask>)
          return t.rate >= 0.15 ? (preconditioned ? 18 : 118) : (preconditioned ? 20 : 200);
        else if constexpr (std::is_same_v<T, InterpolationTask>)
          return t.factor <= 2 ? (preconditioned ? 6 : 30) : (preconditioned ? 10 : 100);
        else if constexpr (std::is_same_v<T, DemosaicTask>)
          return preconditioned ? 10 : (t.noise_sigma > 0.0 ? 16 : 40);
        else
          return t.anscombe_init ? 100 : (preconditioned ? 20 : 6);
      },
      task);
}

void check_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be > 0");
}

}  // namespace

std::string task_name(const Task& task) {
  constexpr const char* names[] = {"completion", "interpolation", "demosaic", "poisson"};
  return names[task.index()];
}

ResolvedParams resolve(const TaskConfig& config) {
  ResolvedParams r;
  r.p_max = config.p_max;
  if (!(r.p_max > 1.0)) throw ConfigError("p_max must be > 1");

  std::visit(
      [&](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, CompletionTask>) {
          if (!(t.rate > 0.0 && t.rate <= 1.0)) throw ConfigError("completion rate must be in (0, 1]");
          r.sigma0_den = 1.0;
          r.sigmaN_den = kNoiseFreeSigma;
          r.sigma_f_last = 0.0;
          r.passthrough = true;
          r.init = InitKind::Zeros;
        } else if constexpr (std::is_same_v<T, InterpolationTask>) {
          if (t.factor < 2) throw ConfigError("interpolation factor must be >= 2");
          r.sigma0_den = 50.0 / 255.0;
          r.sigmaN_den = kNoiseFreeSigma;
          r.sigma_f_last = 0.4;
          r.passthrough = true;
          r.init = InitKind::Bicubic;
        } else if constexpr (std::is_same_v<T, DemosaicTask>) {
          if (!(t.noise_sigma >= 0.0)) throw ConfigError("demosaic noise sigma must be >= 0");
          r.sigma = t.noise_sigma > 0.0 ? t.noise_sigma : kNoiseFreeSigma;
          r.sigma0_den = 50.0 / 255.0;
          r.sigmaN_den = r.sigma;
          r.sigma_f_last = 0.3;
          r.passthrough = t.noise_sigma == 0.0;
          r.init = InitKind::Malvar;
        } else {
          check_positive(t.peak, "Poisson peak");
          r.sigma = 1.0;
          r.poisson_floor = t.peak / 255.0;
          r.poisson_update = !t.anscombe_init;
          r.passthrough = false;
          r.init = InitKind::Observation;
        }
      },
      config.task);

  const bool poisson = std::holds_alternative<PoissonTask>(config.task);
  r.iterations = config.iterations.value_or(default_iterations(config.task, config.preconditioned));
  if (r.iterations < 0) throw ConfigError("iterations must be >= 0");
  if (config.sigma0_den) r.sigma0_den = *config.sigma0_den;
  if (config.sigmaN_den) r.sigmaN_den = *config.sigmaN_den;
  if (config.sigma_f_last) r.sigma_f_last = *config.sigma_f_last;
  if (config.poisson_floor) r.poisson_floor = *config.poisson_floor;
  if (config.poisson_update) r.poisson_update = *config.poisson_update;
  if (config.passthrough) r.passthrough = *config.passthrough;
  if (config.init != InitKind::Default) r.init = config.init;

  if (poisson) {
    if (config.sigma0_den || config.sigmaN_den || config.sigma_f_last)
      throw ConfigError("Poisson denoising takes no sigma0_den / sigmaN_den / sigma_f_last");
    if (r.passthrough) throw ConfigError("passthrough applies to sampling tasks only");
    check_positive(r.poisson_floor, "Poisson floor");
    if (r.init == InitKind::Bicubic || r.init == InitKind::Malvar)
      throw ConfigError("Poisson denoising supports zeros or observation initialization");
  } else {
    if (config.poisson_floor || config.poisson_update)
      throw ConfigError("Poisson options given for a sampling task");
    check_positive(r.sigmaN_den, "sigmaN_den");
    if (r.sigmaN_den > r.sigma0_den) throw ConfigError("sigmaN_den must not exceed sigma0_den");
    if (!(r.sigma_f_last >= 0.0)) throw ConfigError("sigma_f_last must be >= 0");
    if (r.iterations < 1) throw ConfigError("sampling tasks need at least one iteration");
    const auto* demosaic = std::get_if<DemosaicTask>(&config.task);
    if (r.passthrough && demosaic && demosaic->noise_sigma > 0.0)
      throw ConfigError("passthrough requires noise-free data");
    if (r.init == InitKind::Bicubic && !std::holds_alternative<InterpolationTask>(config.task))
      throw ConfigError("bicubic initialization needs an interpolation task");
    if (r.init == InitKind::Malvar && !demosaic)
      throw ConfigError("Malvar initialization needs a demosaic task");
  }
  return r;
}

Observation degrade(const TaskConfig& config, const ImageTensor& truth) {
  resolve(config);
  const Shape& s = truth.shape();
  return std::visit(
      [&](const auto& t) -> Observation {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, PoissonTask>) {
          return {add_poisson_noise(clip(truth), t.peak, config.seed), std::nullopt};
        } else {
          PixelMask mask;
          ImageTensor source = truth;
          if constexpr (std::is_same_v<T, CompletionTask>) {
            mask = make_random_pattern(s.height, s.width, s.channels, t.rate, config.seed);
          } else if constexpr (std::is_same_v<T, InterpolationTask>) {
            mask = make_regular_grid_pattern(s.height, s.width, s.channels, t.factor);
          } else {
            if (s.channels != 3) throw ShapeError("demosaicing needs a 3-channel image");
            mask = cfa_masks(t.cfa, s.height, s.width);
            source = add_gaussian_noise(truth, t.noise_sigma, config.seed);
          }
          ImageTensor data = apply_sampling(source, SamplingOperator(mask));
          return {std::move(data), std::move(mask)};
        }
      },
      config.task);
}

ImageTensor bicubic_init(const ImageTensor& observation, const PixelMask& pattern, int factor) {
  require_same_shape(observation, pattern, "bicubic_init");
  if (factor < 2 || !is_grid(pattern, factor))
    throw InvalidArgument("bicubic initialization needs a regular grid pattern");
  const Index h = observation.height(), w = observation.width(), nc = observation.channels();
  const Index hl = (h + factor - 1) / factor, wl = (w + factor - 1) / factor;

  const auto col_taps = cubic_taps(w, wl, factor);
  const auto row_taps = cubic_taps(h, hl, factor);
  ImageTensor rows(hl, w, nc);
  for (Index I = 0; I < hl; ++I)
    for (Index j = 0; j < w; ++j)
      for (Index c = 0; c < nc; ++c) {
        const auto& tap = col_taps[static_cast<std::size_t>(j)];
        double acc = 0.0;
        for (std::size_t m = 0; m < 4; ++m)
          acc += tap.weight[m] * observation(I * factor, tap.index[m] * factor, c);
        rows(I, j, c) = acc;
      }
  ImageTensor out(observation.shape());
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j)
      for (Index c = 0; c < nc; ++c) {
        const auto& tap = row_taps[static_cast<std::size_t>(i)];
        double acc = 0.0;
        for (std::size_t m = 0; m < 4; ++m) acc += tap.weight[m] * rows(tap.index[m], j, c);
        out(i, j, c) = acc;
      }
  return out;
}

ImageTensor malvar_init(const ImageTensor& cfa_observation, BayerCFA cfa) {
  const ImageTensor raw =
      cfa_observation.channels() == 1 ? cfa_observation : mosaic(cfa_observation, cfa);
  const Index h = raw.height(), w = raw.width();
  if (h < 2 || w < 2) throw InvalidArgument("demosaicing needs at least 2x2 pixels");
  ImageTensor rgb(h, w, 3);
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j) {
      const int here = cfa_channel(cfa, i, j);
      rgb(i, j, here) = raw(i, j);
      if (here == 1) {
        const int row_color = cfa_channel(cfa, i, j + 1);  // R or B beside us
        rgb(i, j, row_color) = correlate(raw, i, j, kAlongRow);
        rgb(i, j, 2 - row_color) = correlate(raw, i, j, kAlongColumn);
      } else {
        rgb(i, j, 1) = correlate(raw, i, j, kGreenAtRedBlue);
        rgb(i, j, 2 - here) = correlate(raw, i, j, kDiagonal);
      }
    }
  return rgb;
}

ImageTensor anscombe_forward(const ImageTensor& counts) {
  if ((counts.array() < 0.0).any()) throw InvalidArgument("Anscombe transform needs v >= 0");
  return counts.with(2.0 * (counts.array() + 0.375).sqrt());
}

ImageTensor anscombe_inverse(const ImageTensor& z) {
  return z.with((0.25 * z.array().square() - 0.375).max(0.0));
}

ImageTensor anscombe_estimate(const ImageTensor& counts, double peak, Denoiser& denoiser) {
  const ImageTensor z = anscombe_forward(counts);
  const double range = 2.0 * std::sqrt(peak + 0.375);
  const ImageTensor den =
      denoise_rescaled(denoiser, z, NoiseLevelMap::constant(z.shape(), 1.0), range);
  return anscombe_inverse(den);
}

ImageTensor initial_estimate(const TaskConfig& config, const Observation& observation,
                             Denoiser& denoiser) {
  const ResolvedParams params = resolve(config);
  const ImageTensor& data = observation.data;
  if (const auto* poisson = std::get_if<PoissonTask>(&config.task)) {
    if (poisson->anscombe_init) {
      const ImageTensor est = anscombe_estimate(data, poisson->peak, denoiser);
      return est.with(est.array() / poisson->peak);
    }
    if (params.init == InitKind::Zeros) return ImageTensor::zeros(data.shape());
    return data.with(data.array() / poisson->peak);
  }
  switch (params.init) {
    case InitKind::Zeros:
      return ImageTensor::zeros(data.shape());
    case InitKind::Bicubic:
      return bicubic_init(data, *observation.mask, std::get<InterpolationTask>(config.task).factor);
    case InitKind::Malvar:
      return malvar_init(data, std::get<DemosaicTask>(config.task).cfa);
    case InitKind::Observation:
    case InitKind::Default:
      break;
  }
  return data;
}

RestorationResult run_task(const TaskConfig& config, const Observation& observation,
                           Denoiser& denoiser, const std::optional<ImageTensor>& reference) {
  const ResolvedParams params = resolve(config);
  const ImageTensor& data = observation.data;
  if (reference) require_same_shape(*reference, data, "run_task reference");

  const ImageTensor init = initial_estimate(config, observation, denoiser);

  ProblemSpec spec{PoissonProblem{}, IdentityPrecond{}, false, std::nullopt};
  spec.passthrough_known_pixels = params.passthrough;
  Schedule schedule;
  double scale = 1.0;

  if (const auto* poisson = std::get_if<PoissonTask>(&config.task)) {
    if (observation.mask) throw ConfigError("Poisson denoising takes no mask");
    scale = poisson->peak;
    spec.data = PoissonProblem{data, poisson->peak};
    if (config.preconditioned) {
      PoissonPrecond strategy{params.poisson_floor, params.poisson_update, std::nullopt};
      if (poisson->anscombe_init) strategy.initial_estimate = init.with(scale * init.array());
      spec.precond = std::move(strategy);
      schedule = Schedule::explicit_penalty(1.0, 1.0, 1.0, params.iterations);
    } else {
      spec.precond = IdentityPrecond{};
      const double alpha = params.iterations > 0 ? std::pow(4.0, 1.0 / params.iterations) : 1.0;
      schedule = Schedule::explicit_penalty(1.0, 1.0 / poisson->peak, alpha, params.iterations);
    }
  } else {
    if (!observation.mask) throw ConfigError(task_name(config.task) + " needs a sampling mask");
    require_same_shape(data, *observation.mask, "run_task mask");
    if (std::holds_alternative<DemosaicTask>(config.task) && data.channels() != 3)
      throw ConfigError("demosaicing needs a 3-channel observation");
    spec.data = LinearDiagonalProblem{apply_sampling(data, SamplingOperator(*observation.mask)),
                                      SamplingOperator(*observation.mask)};
    if (config.preconditioned)
      spec.precond = MaskPrecond{
          MaskPrecondConfig::from_p_max(params.p_max, params.sigma_f_last, params.iterations)};
    else
      spec.precond = IdentityPrecond{};
    schedule = compute_schedule(params.sigma0_den, params.sigmaN_den, params.iterations,
                                params.sigma);
  }

  return run_admm(spec, schedule, denoiser, init.with(scale * init.array()), reference);
}

}  // namespace pnp
