#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "pnp/degrade.hpp"
#include "pnp/denoise.hpp"
#include "pnp/image.hpp"
#include "pnp/precond.hpp"

namespace pnp {

/// Penalty schedule rho^k = rho0 * alpha^k and the measurement noise sigma.
/// The denoiser strength at iteration k is sigma / sqrt(rho^k).
struct Schedule {
  double sigma = 1.0 / 255.0;
  double sigma0_den = 0.0;
  double sigmaN_den = 0.0;
  int iterations = 1;
  double rho0 = 1.0;
  double alpha = 1.0;

  double rho(int k) const;
  /// gamma = sigma^2 / rho^k, the proximal weight of the prior.
  double gamma(int k) const;
  double denoiser_strength(int k) const;

  /// Fixed penalty law, bypassing the endpoint derivation.
  static Schedule explicit_penalty(double sigma, double rho0, double alpha, int iterations);
};

/// rho0 = (sigmaN / sigma0)^2, alpha = (1 / rho0)^(1/N): the denoiser
/// strength falls geometrically from sigma0_den at k = 0 to sigmaN_den at
/// k = N when sigma = sigmaN_den.
Schedule compute_schedule(double sigma0_den, double sigmaN_den, int iterations, double sigma);

/// Least-squares data term with a sampling operator: b is A^T b in image
/// layout (zeros at unsampled entries).
struct LinearDiagonalProblem {
  ImageTensor observation;
  SamplingOperator sampling;
};

/// Poisson data term: counts b with peak lambda (data range [0, lambda]).
struct PoissonProblem {
  ImageTensor counts;
  double peak = 1.0;
};

using DataTerm = std::variant<LinearDiagonalProblem, PoissonProblem>;

struct IdentityPrecond {};
struct MaskPrecond {
  MaskPrecondConfig config;
};
struct PoissonPrecond {
  /// Floor applied before the square root, in count units.
  double floor = 1.0 / 255.0;
  bool update_enabled = true;
  /// Estimate used for P^0 instead of the counts.
  std::optional<ImageTensor> initial_estimate;
};
using PrecondStrategy = std::variant<IdentityPrecond, MaskPrecond, PoissonPrecond>;

struct ProblemSpec {
  DataTerm data;
  PrecondStrategy precond = IdentityPrecond{};
  /// Overwrite the denoiser output with its input at sampled entries, and
  /// the final image with the observation there. Noise-free sampling only.
  bool passthrough_known_pixels = false;
  /// Stop once xy_mse falls below this value. Off when unset.
  std::optional<double> residual_threshold;
};

struct SolverState {
  ImageTensor x;
  ImageTensor y;
  ImageTensor l;
  int k = 0;
  double rho = 1.0;
  Preconditioner precond;
};

struct TraceRow {
  int k = 0;
  double rho = 0.0;
  /// mse_between(P x, P y) after the iteration, in image units.
  double xy_mse = 0.0;
  std::optional<double> psnr;
};

struct RestorationResult {
  ImageTensor image;
  std::vector<TraceRow> trace;
  SolverState state;
};

/// x_i = (P_i b_i + rho y_i - l_i) / (P_i^2 mask_i + rho).
ImageTensor x_update_linear_diagonal(const SolverState& state, const LinearDiagonalProblem& data);

/// Closed-form minimizer of -b ln(P x) + P x + rho/2 (x - u)^2 per entry,
/// u = y - l / rho. Nonnegative; entries with b = 0 may be exactly 0.
ImageTensor x_update_poisson(const ImageTensor& u, const ImageTensor& counts,
                             const Preconditioner& precond, double rho);
double x_update_poisson(double u, double b, double p, double rho);

/// Denoiser output (before P^-1) for the current state: G applied to
/// P (x + l / rho) with map (sigma / sqrt(rho)) P, with the range rescaling
/// for Poisson data and the optional passthrough.
ImageTensor denoise_step(const SolverState& state, const ProblemSpec& spec,
                         const Schedule& schedule, Denoiser& denoiser);

/// y = P^-1 denoise_step(...).
ImageTensor y_update(const SolverState& state, const ProblemSpec& spec, const Schedule& schedule,
                     Denoiser& denoiser);

/// l + rho (x - y).
ImageTensor dual_update(const SolverState& state);

/// x0 = P^-1 x_hat0, y0 = x0, l0 = 0.
SolverState init_state(const ImageTensor& estimate, Preconditioner precond, double rho0);

/// P^0 for a problem and strategy.
Preconditioner initial_preconditioner(const ProblemSpec& spec);

/// Runs schedule.iterations ADMM iterations from the natural-units estimate
/// `init`. Each iteration k uses rho^k and P^k, then advances both. The
/// result is the last denoiser output (divided by lambda for Poisson data),
/// clipped to [0, 1].
RestorationResult run_admm(const ProblemSpec& spec, const Schedule& schedule, Denoiser& denoiser,
                           const ImageTensor& init,
                           const std::optional<ImageTensor>& reference = std::nullopt);

}  // namespace pnp
