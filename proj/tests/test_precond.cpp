#include <cmath>

#include "doctest.h"
#include "pnp/degrade.hpp"
#include "pnp/precond.hpp"
#include "support.hpp"

using namespace pnp;
using pnp::testing::max_abs_diff;
using pnp::testing::random_image;

namespace {

Index reflect(Index i, Index n) {
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

// Direct 2-D evaluation: m * g(sigma), truncated at ceil(3 sigma), normalized
// over the window, mirror boundaries.
ImageTensor blur_oracle(const ImageTensor& m, double sigma) {
  const Index r = static_cast<Index>(std::ceil(3.0 * sigma));
  double norm = 0.0;
  for (Index a = -r; a <= r; ++a)
    for (Index b = -r; b <= r; ++b) norm += std::exp(-double(a * a + b * b) / (2 * sigma * sigma));
  ImageTensor out(m.shape());
  for (Index i = 0; i < m.height(); ++i)
    for (Index j = 0; j < m.width(); ++j)
      for (Index c = 0; c < m.channels(); ++c) {
        double acc = 0.0;
        for (Index a = -r; a <= r; ++a)
          for (Index b = -r; b <= r; ++b)
            acc += std::exp(-double(a * a + b * b) / (2 * sigma * sigma)) *
                   m(reflect(i + a, m.height()), reflect(j + b, m.width()), c);
        out(i, j, c) = acc / norm;
      }
  return out;
}

}  // namespace

TEST_CASE("preconditioner values must be positive") {
  CHECK_THROWS_AS(Preconditioner(ImageTensor(2, 2, 1, 0.0)), InvalidArgument);
  CHECK_THROWS_AS(Preconditioner(ImageTensor(2, 2, 1, std::nan(""))), InvalidArgument);
  CHECK_NOTHROW(Preconditioner(ImageTensor(2, 2, 1, 1e-9)));
}

TEST_CASE("mask preconditioner config") {
  const MaskPrecondConfig cfg{1.0 / 9.0, 0.4, 16};
  CHECK(cfg.p_max() == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(cfg.sigma_f() == doctest::Approx(0.1).epsilon(1e-14));
  const auto from = MaskPrecondConfig::from_p_max(10.0, 0.4, 16);
  CHECK(from.epsilon == doctest::Approx(1.0 / 9.0).epsilon(1e-14));
  CHECK_THROWS_AS(MaskPrecondConfig::from_p_max(1.0, 0.0, 4), InvalidArgument);
  CHECK_THROWS_AS((MaskPrecondConfig{0.0, 0.0, 4}.validate()), InvalidArgument);
  CHECK_THROWS_AS((MaskPrecondConfig{0.1, -1.0, 4}.validate()), InvalidArgument);
  CHECK_THROWS_AS((MaskPrecondConfig{0.1, 0.0, 0}.validate()), InvalidArgument);
}

TEST_CASE("gaussian blur") {
  const auto m = random_image(Shape{7, 9, 2}, 1);
  CHECK(gaussian_blur(m, 0.0) == m);
  const ImageTensor ones(Shape{7, 9, 2}, 1.0);
  CHECK(max_abs_diff(gaussian_blur(ones, 1.3), ones) <= 1e-14);
  for (double sigma : {0.3, 0.8, 1.7})
    CHECK(max_abs_diff(gaussian_blur(m, sigma), blur_oracle(m, sigma)) <= 1e-12);

  ImageTensor point(Shape{9, 9, 1});
  point(4, 4) = 1.0;
  const auto g = gaussian_blur(point, 1.0);
  double norm = 0.0;
  for (int d = -3; d <= 3; ++d) norm += std::exp(-d * d / 2.0);
  for (int a = -3; a <= 3; ++a)
    for (int b = -3; b <= 3; ++b)
      CHECK(std::abs(g(4 + a, 4 + b) - std::exp(-(a * a + b * b) / 2.0) / (norm * norm)) <= 1e-12);
  CHECK_THROWS_AS(gaussian_blur(m, -1.0), InvalidArgument);
}

TEST_CASE("mask preconditioner with sharp masks") {
  const auto mask = make_random_pattern(12, 10, 3, 0.3, 4);
  const MaskPrecondConfig cfg{1.0 / 9.0, 0.0, 8};
  for (int k : {0, 3, 8}) {
    const auto p = mask_preconditioner(mask, k, cfg);
    for (Index i = 0; i < mask.array().size(); ++i) {
      if (mask.array()[i] != 0.0)
        CHECK(p.values[i] == 1.0);
      else
        CHECK(p.values[i] == doctest::Approx(10.0).epsilon(1e-12));
    }
  }
  PixelMask all(ImageTensor::ones(Shape{5, 6, 1}));
  CHECK(mask_preconditioner(all, 4, MaskPrecondConfig{1.0 / 9.0, 0.5, 8}).values ==
        identity_preconditioner(all.shape()).values);
  CHECK_THROWS_AS(mask_preconditioner(PixelMask(Shape{3, 3, 1}), 0, cfg), InvalidArgument);
  CHECK_THROWS_AS(mask_preconditioner(mask, -1, cfg), InvalidArgument);
}

TEST_CASE("mask preconditioner on a 5x5 single known pixel") {
  // sigma_f_last 0.4, N 6, k 6: the mask is blurred with sigma 0.4.
  PixelMask m0(Shape{5, 5, 1});
  m0.set(2, 2, 0, true);
  const MaskPrecondConfig cfg{1.0 / 9.0, 0.4, 6};
  const auto p = mask_preconditioner(m0, 6, cfg);

  const double eps = 1.0 / 9.0;
  const ImageTensor mk = blur_oracle(m0.values(), 0.4);
  const double peak = mk.array().maxCoeff();
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 5; ++j)
      CHECK(std::abs(p.values(i, j) - (peak + eps) / (mk(i, j) + eps)) <= 1e-12);

  // The center sees the known pixel once; offsets of 2 reflect back onto it
  // from the corners in both axes, so those see it four times.
  const double s2 = 2.0 * 0.4 * 0.4;
  double norm = 0.0;
  for (int a = -2; a <= 2; ++a)
    for (int b = -2; b <= 2; ++b) norm += std::exp(-(a * a + b * b) / s2);
  CHECK(mk(2, 2) == doctest::Approx(1.0 / norm).epsilon(1e-14));
  CHECK(mk(0, 0) == doctest::Approx(4.0 * std::exp(-8.0 / s2) / norm).epsilon(1e-12));
  CHECK(p.values(2, 2) == 1.0);
}

TEST_CASE("mask preconditioner stays within bounds") {
  for (double sigma_f_last : {0.0, 0.3, 0.4, 1.0, 2.5})
    for (int n : {1, 6, 20}) {
      const MaskPrecondConfig cfg{1.0 / 9.0, sigma_f_last, n};
      const auto mask = make_random_pattern(16, 16, 1, 0.2, std::uint64_t(n));
      for (int k = 0; k <= n; ++k) {
        const auto p = mask_preconditioner(mask, k, cfg);
        CHECK(p.array().minCoeff() >= 1.0 - 1e-12);
        CHECK(p.array().maxCoeff() <= 10.0 * (1.0 + 1e-12));
        CHECK(p.array().minCoeff() == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
}

TEST_CASE("per-channel normalization") {
  // A sparse blue plane and a dense green plane each reach 1 somewhere.
  const auto masks = cfa_masks(BayerCFA::RGGB, 8, 8);
  const auto p = mask_preconditioner(masks, 4, MaskPrecondConfig{1.0 / 9.0, 0.3, 4});
  for (Index c = 0; c < 3; ++c) {
    double lo = 1e9;
    for (Index i = 0; i < 8; ++i)
      for (Index j = 0; j < 8; ++j) lo = std::min(lo, p.values(i, j, c));
    CHECK(lo == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("poisson preconditioners") {
  ImageTensor b(1, 3, 1);
  b[0] = 4.0;
  b[1] = 0.0;
  b[2] = 9.0;
  const auto p = poisson_precond_init(b, 0.01);
  CHECK(p.values[0] == 2.0);
  CHECK(p.values[1] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(p.values[2] == 3.0);
  CHECK_THROWS_AS(poisson_precond_init(b.with(b.array() - 1.0), 0.01), InvalidArgument);
  CHECK_THROWS_AS(poisson_precond_init(b, 0.0), InvalidArgument);

  const auto r = random_image(Shape{6, 7, 3}, 5, -2.0, 50.0);
  const auto up = poisson_precond_update(r, 0.2);
  for (Index i = 0; i < r.size(); ++i) {
    CHECK(up.values[i] == std::sqrt(std::max(r[i], 0.2)));
    CHECK(up.values[i] >= std::sqrt(0.2));
  }
  const auto counts = random_image(Shape{6, 7, 3}, 6, 0.0, 50.0);
  CHECK(poisson_precond_update(counts, 0.2).values == poisson_precond_init(counts, 0.2).values);
  CHECK((poisson_precond_update(ImageTensor(Shape{3, 3, 1}, 25.0), 0.2).array() == 5.0).all());
}

TEST_CASE("identity preconditioner") {
  const auto p = identity_preconditioner(Shape{3, 4, 3});
  CHECK(p.shape() == Shape{3, 4, 3});
  CHECK((p.array() == 1.0).all());
}
