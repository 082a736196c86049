#include "pnp/solver.hpp"

#include <cmath>
#include <exception>

namespace pnp {

double Schedule::rho(int k) const { return rho0 * std::pow(alpha, k); }
double Schedule::gamma(int k) const { return sigma * sigma / rho(k); }
double Schedule::denoiser_strength(int k) const { return sigma / std::sqrt(rho(k)); }

Schedule Schedule::explicit_penalty(double sigma, double rho0, double alpha, int iterations) {
  if (!(sigma >= 0.0)) throw InvalidArgument("sigma must be >= 0");
  if (!(rho0 > 0.0)) throw InvalidArgument("rho0 must be > 0");
  if (!(alpha >= 1.0)) throw InvalidArgument("alpha must be >= 1");
  if (iterations < 0) throw InvalidArgument("iteration count must be >= 0");
  Schedule s;
  s.sigma = sigma;
  s.rho0 = rho0;
  s.alpha = alpha;
  s.iterations = iterations;
  s.sigma0_den = s.denoiser_strength(0);
  s.sigmaN_den = s.denoiser_strength(iterations);
  return s;
}

Schedule compute_schedule(double sigma0_den, double sigmaN_den, int iterations, double sigma) {
  if (!(sigmaN_den > 0.0)) throw InvalidArgument("final denoiser strength must be > 0");
  if (sigmaN_den > sigma0_den)
    throw InvalidArgument("final denoiser strength exceeds the initial one");
  if (iterations < 1) throw InvalidArgument("iteration count must be >= 1");
  if (!(sigma >= 0.0)) throw InvalidArgument("sigma must be >= 0");
  Schedule s;
  s.sigma = sigma;
  s.sigma0_den = sigma0_den;
  s.sigmaN_den = sigmaN_den;
  s.iterations = iterations;
  const double ratio = sigmaN_den / sigma0_den;
  s.rho0 = ratio * ratio;
  s.alpha = std::pow(1.0 / s.rho0, 1.0 / iterations);
  return s;
}

ImageTensor x_update_linear_diagonal(const SolverState& state, const LinearDiagonalProblem& data) {
  const auto& p = state.precond.array();
  const auto& mask = data.sampling.gram_diagonal().array();
  return state.x.with((p * data.observation.array() + state.rho * state.y.array() -
                       state.l.array()) /
                      (p.square() * mask + state.rho));
}

double x_update_poisson(double u, double b, double p, double rho) {
  // Positive root of rho x^2 - t x - b = 0, t = rho u - p. The second branch
  // avoids cancellation when t is large and negative.
  const double t = rho * u - p;
  const double root = std::sqrt(t * t + 4.0 * rho * b);
  if (t >= 0.0) return (t + root) / (2.0 * rho);
  const double denom = root - t;
  return denom > 0.0 ? 2.0 * b / denom : 0.0;
}

ImageTensor x_update_poisson(const ImageTensor& u, const ImageTensor& counts,
                             const Preconditioner& precond, double rho) {
  require_same_shape(u, counts, "x_update_poisson");
  require_same_shape(u, precond, "x_update_poisson");
  if (!(rho > 0.0)) throw InvalidArgument("rho must be > 0");
  ImageTensor x(u.shape());
  for (Index i = 0; i < x.size(); ++i)
    x[i] = x_update_poisson(u[i], counts[i], precond.values[i], rho);
  return x;
}

ImageTensor denoise_step(const SolverState& state, const ProblemSpec& spec,
                         const Schedule& schedule, Denoiser& denoiser) {
  const auto& p = state.precond.array();
  const ImageTensor input = state.x.with(p * (state.x.array() + state.l.array() / state.rho));
  const NoiseLevelMap map =
      state.x.with((schedule.sigma / std::sqrt(state.rho)) * p);

  if (const auto* poisson = std::get_if<PoissonProblem>(&spec.data))
    return denoise_rescaled(denoiser, input, map, poisson->peak);

  ImageTensor out = denoiser(input, map);
  if (spec.passthrough_known_pixels) {
    const auto& mask = std::get<LinearDiagonalProblem>(spec.data).sampling.mask.array();
    out.array() = (mask != 0.0).select(input.array(), out.array());
  }
  return out;
}

ImageTensor y_update(const SolverState& state, const ProblemSpec& spec, const Schedule& schedule,
                     Denoiser& denoiser) {
  const ImageTensor den = denoise_step(state, spec, schedule, denoiser);
  return den.with(den.array() / state.precond.array());
}

ImageTensor dual_update(const SolverState& state) {
  return state.l.with(state.l.array() + state.rho * (state.x.array() - state.y.array()));
}

SolverState init_state(const ImageTensor& estimate, Preconditioner precond, double rho0) {
  require_same_shape(estimate, precond, "init_state");
  if (!(precond.array() > 0.0).all())
    throw InvalidArgument("init_state: preconditioner must be > 0");
  if (!(rho0 > 0.0)) throw InvalidArgument("init_state: rho must be > 0");
  SolverState s;
  s.x = estimate.with(estimate.array() / precond.array());
  s.y = s.x;
  s.l = ImageTensor::zeros(estimate.shape());
  s.k = 0;
  s.rho = rho0;
  s.precond = std::move(precond);
  return s;
}

namespace {

const PixelMask* sampling_mask(const ProblemSpec& spec) {
  if (const auto* lin = std::get_if<LinearDiagonalProblem>(&spec.data))
    return &lin->sampling.mask;
  return nullptr;
}

const Shape& data_shape(const ProblemSpec& spec) {
  return std::visit(
      [](const auto& d) -> const Shape& {
        if constexpr (std::is_same_v<std::decay_t<decltype(d)>, PoissonProblem>)
          return d.counts.shape();
        else
          return d.observation.shape();
      },
      spec.data);
}

void validate(const ProblemSpec& spec, const Schedule& schedule) {
  if (schedule.iterations < 0) throw InvalidArgument("iteration count must be >= 0");
  if (!(schedule.rho0 > 0.0) || !(schedule.alpha > 0.0))
    throw InvalidArgument("schedule needs rho0 > 0 and alpha > 0");
  if (const auto* lin = std::get_if<LinearDiagonalProblem>(&spec.data)) {
    require_same_shape(lin->observation, lin->sampling.mask, "linear problem");
    if (std::holds_alternative<PoissonPrecond>(spec.precond))
      throw InvalidArgument("Poisson preconditioner requires Poisson data");
  } else {
    const auto& poisson = std::get<PoissonProblem>(spec.data);
    if (!(poisson.peak > 0.0)) throw InvalidArgument("Poisson peak must be > 0");
    const auto& b = poisson.counts.array();
    if ((b < 0.0).any() || (b != b.floor()).any())
      throw InvalidArgument("Poisson data must be nonnegative integer counts");
    if (std::holds_alternative<MaskPrecond>(spec.precond))
      throw InvalidArgument("mask preconditioner requires sampled data");
    if (spec.passthrough_known_pixels)
      throw InvalidArgument("passthrough applies to sampling problems only");
  }
}

double data_scale(const ProblemSpec& spec) {
  if (const auto* poisson = std::get_if<PoissonProblem>(&spec.data)) return poisson->peak;
  return 1.0;
}

ImageTensor finalize(const ImageTensor& estimate, const ProblemSpec& spec) {
  ImageTensor out = clip(estimate.with(estimate.array() / data_scale(spec)));
  if (spec.passthrough_known_pixels) {
    const auto& lin = std::get<LinearDiagonalProblem>(spec.data);
    out.array() = (lin.sampling.mask.array() != 0.0).select(lin.observation.array(), out.array());
  }
  return out;
}

}  // namespace

Preconditioner initial_preconditioner(const ProblemSpec& spec) {
  const Shape& shape = data_shape(spec);
  return std::visit(
      [&](const auto& strategy) -> Preconditioner {
        using T = std::decay_t<decltype(strategy)>;
        if constexpr (std::is_same_v<T, IdentityPrecond>) {
          return identity_preconditioner(shape);
        } else if constexpr (std::is_same_v<T, MaskPrecond>) {
          return mask_preconditioner(*sampling_mask(spec), 0, strategy.config);
        } else {
          if (strategy.initial_estimate) {
            require_shape(*strategy.initial_estimate, shape, "Poisson initial estimate");
            return poisson_precond_update(*strategy.initial_estimate, strategy.floor);
          }
          return poisson_precond_init(std::get<PoissonProblem>(spec.data).counts, strategy.floor);
        }
      },
      spec.precond);
}

RestorationResult run_admm(const ProblemSpec& spec, const Schedule& schedule, Denoiser& denoiser,
                           const ImageTensor& init, const std::optional<ImageTensor>& reference) {
  validate(spec, schedule);
  require_shape(init, data_shape(spec), "run_admm init");
  if (reference) require_same_shape(*reference, init, "run_admm reference");

  RestorationResult result;
  SolverState& state = result.state;
  state = init_state(init, initial_preconditioner(spec), schedule.rho(0));
  ImageTensor estimate = init.with(state.precond.array() * state.x.array());

  const auto* mask_strategy = std::get_if<MaskPrecond>(&spec.precond);
  const auto* poisson_strategy = std::get_if<PoissonPrecond>(&spec.precond);

  for (int k = 0; k < schedule.iterations; ++k) {
    try {
      state.k = k;
      state.rho = schedule.rho(k);
      if (mask_strategy && k > 0) {
        Preconditioner next = mask_preconditioner(*sampling_mask(spec), k, mask_strategy->config);
        // Keep P x, P y and l / P unchanged across the switch; these are the
        // quantities the fixed point fixes independently of P.
        const ImageTensor::Array ratio = state.precond.array() / next.array();
        state.x.array() *= ratio;
        state.y.array() *= ratio;
        state.l.array() /= ratio;
        state.precond = std::move(next);
      }

      state.x = std::visit(
          [&](const auto& data) -> ImageTensor {
            if constexpr (std::is_same_v<std::decay_t<decltype(data)>, PoissonProblem>)
              return x_update_poisson(
                  state.x.with(state.y.array() - state.l.array() / state.rho), data.counts,
                  state.precond, state.rho);
            else
              return x_update_linear_diagonal(state, data);
          },
          spec.data);

      estimate = denoise_step(state, spec, schedule, denoiser);
      state.y = estimate.with(estimate.array() / state.precond.array());
      state.l = dual_update(state);
      if (!state.x.all_finite() || !state.y.all_finite() || !state.l.all_finite())
        throw Error("non-finite iterate");

      TraceRow row;
      row.k = k;
      row.rho = state.rho;
      const auto& p = state.precond.array();
      row.xy_mse = (p * (state.x.array() - state.y.array())).square().mean();
      if (reference) row.psnr = psnr(*reference, finalize(estimate, spec));
      result.trace.push_back(row);

      if (poisson_strategy && poisson_strategy->update_enabled)
        state.precond = poisson_precond_update(estimate, poisson_strategy->floor);

      if (spec.residual_threshold && row.xy_mse < *spec.residual_threshold) {
        state.k = k + 1;
        break;
      }
      state.k = k + 1;
    } catch (const std::exception& e) {
      std::throw_with_nested(IterationError(k, e.what()));
    }
  }
  state.rho = schedule.rho(state.k);
  result.image = finalize(estimate, spec);
  return result;
}

}  // namespace pnp
