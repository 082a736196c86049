#include <cmath>

#include "doctest.h"
#include "pnp/denoise.hpp"
#include "pnp/noise_maps.hpp"
#include "support.hpp"

using namespace pnp;
using pnp::testing::max_abs_diff;
using pnp::testing::random_image;

namespace {

// Minimizer of a smooth convex function: bisection on the sign of its
// derivative inside [lo, hi].
template <typename F>
double minimize(F derivative, double lo, double hi) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (derivative(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

class CountingDenoiser final : public Denoiser {
 public:
  int calls = 0;
  std::string name() const override { return "counting"; }

 protected:
  ImageTensor denoise(const ImageTensor& u, const NoiseLevelMap&) override {
    ++calls;
    return u.with(u.array() * 0.5);
  }
};

class NanDenoiser final : public Denoiser {
 public:
  std::string name() const override { return "nan"; }

 protected:
  ImageTensor denoise(const ImageTensor& u, const NoiseLevelMap&) override {
    return u.with(u.array() * std::nan(""));
  }
};

}  // namespace

TEST_CASE("denoiser contract") {
  const auto u = random_image(Shape{5, 4, 3}, 1);
  CountingDenoiser den;
  CHECK(den(u, NoiseLevelMap::zeros(u.shape())) == u);
  CHECK(den.calls == 0);
  CHECK_THROWS_AS(den(u, NoiseLevelMap::zeros(Shape{5, 4, 1})), ShapeError);
  CHECK_THROWS_AS(den(u, NoiseLevelMap::constant(u.shape(), -0.1)), InvalidArgument);
  CHECK_THROWS_AS(den(u, NoiseLevelMap::constant(u.shape(), std::nan(""))), InvalidArgument);
  NanDenoiser bad;
  CHECK_THROWS_AS(bad(u, NoiseLevelMap::constant(u.shape(), 0.1)), Error);
}

TEST_CASE("rescaled denoising") {
  const auto u = random_image(Shape{3, 3, 1}, 2, 0.0, 40.0);
  const auto s = random_image(u.shape(), 3, 0.5, 3.0);
  const double lambda = 40.0;
  SUBCASE("quadratic prior with scaled parameters") {
    // lambda G(u/lambda, s/lambda) with (kappa, c) equals G(u, s) with
    // (kappa / lambda^2, lambda c).
    QuadraticPriorDenoiser unit(QuadraticPriorParams{2.0, {}, 0.3});
    const auto got = denoise_rescaled(unit, u, s, lambda);
    const auto want =
        quadratic_prior_denoise(u, s, QuadraticPriorParams{2.0 / (lambda * lambda), {}, 0.3 * lambda});
    CHECK(max_abs_diff(got, want) <= 1e-12);
  }
  SUBCASE("scale one is a plain call") {
    AdaptiveSmoothingDenoiser den;
    CHECK(denoise_rescaled(den, u, s, 1.0) == den(u, s));
  }
  SUBCASE("scale must be positive") {
    IdentityDenoiser den;
    CHECK_THROWS_AS(denoise_rescaled(den, u, s, 0.0), InvalidArgument);
  }
}

TEST_CASE("quadratic prior denoiser") {
  const auto u = random_image(Shape{6, 5, 3}, 4);
  QuadraticPriorParams params;
  CHECK(quadratic_prior_denoise(u, NoiseLevelMap::zeros(u.shape()), params) == u);

  ImageTensor one(1, 1, 1, 1.0);
  CHECK(quadratic_prior_denoise(one, NoiseLevelMap::ones(one.shape()),
                                QuadraticPriorParams{1.0, {}, 0.0})[0] ==
        doctest::Approx(0.5).epsilon(1e-15));

  const auto s = random_image(u.shape(), 5, 0.0, 0.5);
  const auto tiny = quadratic_prior_denoise(u, s, QuadraticPriorParams{1e-12, {}, 0.5});
  CHECK(max_abs_diff(tiny, u) <= 1e-12);

  // Per-entry minimizer of (1/2)((u - x)/s)^2 + (kappa/2)(x - c)^2.
  Rng rng(6);
  for (int t = 0; t < 200; ++t) {
    const double ui = 4.0 * rng.uniform() - 2.0, si = 0.05 + 2.0 * rng.uniform();
    const double kappa = 0.1 + 5.0 * rng.uniform(), c = rng.uniform();
    ImageTensor uu(1, 1, 1, ui);
    const double got = quadratic_prior_denoise(uu, NoiseLevelMap::constant(uu.shape(), si),
                                               QuadraticPriorParams{kappa, {}, c})[0];
    // d/dx of (1/2)((u - x)/s)^2 + (kappa/2)(x - c)^2
    const double want = minimize(
        [&](double x) { return (x - ui) / (si * si) + kappa * (x - c); }, -10.0, 10.0);
    CHECK(std::abs(got - want) <= 1e-8);
  }

  QuadraticPriorParams with_mean{3.0, random_image(u.shape(), 7), 0.0};
  const auto out = quadratic_prior_denoise(u, s, with_mean);
  for (Index i = 0; i < u.size(); ++i) {
    const double k = 3.0 * s[i] * s[i];
    CHECK(out[i] == doctest::Approx((u[i] + k * with_mean.mean[i]) / (1.0 + k)));
  }
  CHECK_THROWS_AS(QuadraticPriorDenoiser(QuadraticPriorParams{0.0, {}, 0.5}), InvalidArgument);
}

TEST_CASE("adaptive smoothing") {
  const Shape shape{9, 11, 3};
  const auto u = random_image(shape, 8);
  CHECK(adaptive_smoothing_denoise(u, NoiseLevelMap::zeros(shape)) == u);

  const ImageTensor flat(shape, 0.37);
  const auto s = random_image(shape, 9, 0.0, 1.0);
  CHECK(max_abs_diff(adaptive_smoothing_denoise(flat, s), flat) <= 1e-14);

  SUBCASE("impulse with a uniform map keeps its mass") {
    ImageTensor impulse(Shape{31, 31, 1});
    impulse(15, 15) = 1.0;
    const NoiseLevelMap level = NoiseLevelMap::constant(impulse.shape(), 0.5);
    const auto out = adaptive_smoothing_denoise(impulse, level, 4.0, 8.0);
    CHECK(std::abs(out.array().sum() - 1.0) <= 1e-9);
    // Bandwidth 2: the value at the center is the normalized kernel weight.
    double norm = 0.0;
    for (int d = -6; d <= 6; ++d) norm += std::exp(-d * d / 8.0);
    CHECK(out(15, 15) == doctest::Approx(1.0 / (norm * norm)).epsilon(1e-12));
    CHECK(out(15, 16) == doctest::Approx(std::exp(-1.0 / 8.0) / (norm * norm)).epsilon(1e-12));
  }

  SUBCASE("bandwidth is capped at h_max") {
    const NoiseLevelMap big = NoiseLevelMap::constant(shape, 10.0);
    CHECK(max_abs_diff(adaptive_smoothing_denoise(u, big, 4.0, 1.5),
                       adaptive_smoothing_denoise(u, NoiseLevelMap::constant(shape, 1.5 / 4.0),
                                                  4.0, 1.5)) <= 1e-14);
  }

  SUBCASE("entries with zero level are kept") {
    NoiseLevelMap level(shape, 0.3);
    level(4, 5, 1) = 0.0;
    const auto out = adaptive_smoothing_denoise(u, level);
    CHECK(out(4, 5, 1) == u(4, 5, 1));
  }

  SUBCASE("reliable neighbours dominate") {
    ImageTensor v(Shape{1, 3, 1});
    v[0] = 1.0;
    v[1] = 0.0;
    v[2] = 0.0;
    NoiseLevelMap level(v.shape());
    level[0] = 0.01;
    level[1] = 1.0;
    level[2] = 1.0;
    const auto out = adaptive_smoothing_denoise(v, level, 1.0, 8.0);
    CHECK(out[1] > 0.9);
  }

  CHECK_THROWS_AS(AdaptiveSmoothingDenoiser(0.0, 8.0), InvalidArgument);
  CHECK_THROWS_AS(AdaptiveSmoothingDenoiser(4.0, -1.0), InvalidArgument);
}

TEST_CASE("mirror index") {
  CHECK(mirror_index(-1, 5) == 1);
  CHECK(mirror_index(-2, 5) == 2);
  CHECK(mirror_index(5, 5) == 3);
  CHECK(mirror_index(6, 5) == 2);
  CHECK(mirror_index(9, 5) == 1);
  CHECK(mirror_index(3, 1) == 0);
  for (Index i = -40; i < 40; ++i) {
    const Index m = mirror_index(i, 4);
    CHECK(m >= 0);
    CHECK(m < 4);
  }
}

TEST_CASE("constant noise maps") {
  const Shape shape{4, 5, 3};
  MapGenParams params{0.1, 3};
  const auto m = generate_noise_map_constant(shape, params);
  CHECK((m.array() == m[0]).all());
  CHECK(m[0] >= 0.0);
  CHECK(m[0] <= 0.2);
  CHECK(m == generate_noise_map_constant(shape, params));

  double sum = 0.0;
  const int draws = 100000;
  for (int k = 0; k < draws; ++k)
    sum += generate_noise_map_constant(Shape{1, 1, 1}, MapGenParams{0.1, std::uint64_t(k)})[0];
  // 2 mu X has standard deviation 2 mu / sqrt(12).
  CHECK(std::abs(sum / draws - 0.1) <= 3.0 * 0.2 / std::sqrt(12.0 * draws));
  CHECK_THROWS_AS(generate_noise_map_constant(shape, MapGenParams{0.0, 1}), InvalidArgument);
}

TEST_CASE("variable noise maps") {
  const Shape shape{50, 40, 1};
  const MapGenParams params{0.2, 5};
  const auto m = generate_noise_map_variable(shape, params);
  CHECK((m.array() >= 0.0).all());
  CHECK((m.array() <= 0.4).all());
  CHECK(m == generate_noise_map_variable(shape, params));

  const auto flat = generate_noise_map_variable_given_weight(shape, params, 1.0);
  CHECK((flat.array() == flat[0]).all());

  // W = 0: i.i.d. U[0, 2 mu].
  const auto iid = generate_noise_map_variable_given_weight(Shape{1000, 1000, 1}, params, 0.0);
  const double n = double(iid.size());
  const double mean = iid.array().mean();
  const double var = (iid.array() - mean).square().mean();
  CHECK(std::abs(mean - 0.2) <= 3.0 * 0.4 / std::sqrt(12.0 * n));
  // Fourth central moment of U[0, a] is a^4 / 80.
  const double a = 0.4;
  CHECK(std::abs(var - a * a / 12.0) <=
        3.0 * std::sqrt((std::pow(a, 4) / 80.0 - std::pow(a * a / 12.0, 2)) / n));
  CHECK_THROWS_AS(generate_noise_map_variable_given_weight(shape, params, 1.5), InvalidArgument);
}

TEST_CASE("rgb noise maps") {
  const MapGenParams params{0.15, 21};
  const auto gray = generate_noise_map_rgb(Shape{6, 7, 1}, params);
  CHECK(gray == generate_noise_map_variable(Shape{6, 7, 1}, params));

  // Correlation between channels over many maps.
  const int maps = 4000;
  const Shape shape{5, 5, 3};
  double s0 = 0, s1 = 0, s00 = 0, s11 = 0, s01 = 0;
  double n = 0;
  for (int k = 0; k < maps; ++k) {
    const auto m = generate_noise_map_rgb(shape, MapGenParams{0.15, std::uint64_t(1000 + k)});
    CHECK((m.array() >= 0.0).all());
    CHECK((m.array() <= 0.3).all());
    // One pixel per map keeps the samples independent across maps.
    const double a = m(2, 2, 0), b = m(2, 2, 1);
    s0 += a;
    s1 += b;
    s00 += a * a;
    s11 += b * b;
    s01 += a * b;
    n += 1;
  }
  const double cov = s01 / n - (s0 / n) * (s1 / n);
  const double corr = cov / std::sqrt((s00 / n - (s0 / n) * (s0 / n)) * (s11 / n - (s1 / n) * (s1 / n)));
  CHECK(std::abs(corr) <= 3.0 / std::sqrt(n));
}

TEST_CASE("cfa noise maps") {
  const double sigma = 0.05;
  const MaskPrecondConfig plain{1.0 / 9.0, 0.0, 10};
  const auto m = generate_cfa_noise_map(BayerCFA::RGGB, 6, 8, sigma, plain, 3);
  const auto masks = cfa_masks(BayerCFA::RGGB, 6, 8);
  for (Index i = 0; i < m.size(); ++i) {
    if (masks.array()[i] != 0.0)
      CHECK(m[i] == sigma);
    else
      CHECK(m[i] == doctest::Approx(sigma * 10.0).epsilon(1e-12));
  }

  const MaskPrecondConfig blurred{1.0 / 9.0, 0.3, 10};
  const auto b = generate_cfa_noise_map(BayerCFA::GRBG, 6, 8, sigma, blurred, 7);
  const auto direct = mask_preconditioner(cfa_masks(BayerCFA::GRBG, 6, 8), 7, blurred);
  CHECK(max_abs_diff(b, direct.values.with(sigma * direct.array())) == 0.0);
}
