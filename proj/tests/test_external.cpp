#include <chrono>
#include <cstdlib>
#include <string>

#include "doctest.h"
#include "pnp/config.hpp"
#include "pnp/external_denoiser.hpp"
#include "support.hpp"

using namespace pnp;
using pnp::testing::random_image;

namespace {

std::string adapter(const std::string& args) { return std::string(PNP_FAKE_ADAPTER) + " " + args; }

}  // namespace

TEST_CASE("passthrough adapter returns the input at float precision") {
  ExternalDenoiser den(adapter("passthrough"));
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    const Index c = seed % 2 == 0 ? 1 : 3;
    const Shape shape{Index(1 + seed % 7), Index(2 + seed % 5), c};
    const auto u = random_image(shape, seed, -2.0, 3.0);
    const auto s = random_image(shape, seed + 1000, 0.01, 1.0);
    const auto out = den(u, s);
    CHECK(out == u.cast<float>().cast<double>());
  }
}

TEST_CASE("quadratic adapter matches the builtin oracle") {
  ExternalDenoiser den(adapter("quadratic 2.5 0.3"));
  const QuadraticPriorParams params{2.5, {}, 0.3};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Shape shape{8, 6, seed % 2 == 0 ? Index(1) : Index(3)};
    const auto u = random_image(shape, seed);
    const auto s = random_image(shape, seed + 50, 0.0, 1.0);
    CHECK(pnp::testing::max_abs_diff(den(u, s), quadratic_prior_denoise(u, s, params)) <= 1e-6);
  }
}

TEST_CASE("zero maps never reach the adapter") {
  // The adapter would fail every request.
  ExternalDenoiser den(adapter("error 9"));
  const auto u = random_image(Shape{3, 3, 1}, 1);
  CHECK(den(u, NoiseLevelMap::zeros(u.shape())) == u);
}

TEST_CASE("adapter error status") {
  ExternalDenoiser den(adapter("flaky 5"));
  const auto u = random_image(Shape{4, 4, 3}, 2);
  const auto s = NoiseLevelMap::constant(u.shape(), 0.1);
  try {
    den(u, s);
    FAIL("expected AdapterError");
  } catch (const AdapterError& e) {
    CHECK(e.status() == 5);
  }
  // The session survives an error status.
  CHECK(den(u, s) == u.cast<float>().cast<double>());
  CHECK_THROWS_AS(den(u, s), AdapterError);
}

TEST_CASE("handshake failures") {
  CHECK_THROWS_AS(ExternalDenoiser(adapter("bad_handshake")), HandshakeError);
  CHECK_THROWS_AS(ExternalDenoiser("exit 0"), HandshakeError);
  CHECK_THROWS_AS(ExternalDenoiser("/nonexistent/adapter/binary"), HandshakeError);
}

TEST_CASE("protocol violations close the session") {
  const auto u = random_image(Shape{4, 5, 1}, 3);
  const auto s = NoiseLevelMap::constant(u.shape(), 0.2);
  SUBCASE("truncated response") {
    ExternalDenoiser den(adapter("truncate"));
    CHECK_THROWS_AS(den(u, s), ProtocolError);
    CHECK_THROWS_AS(den(u, s), ProtocolError);
  }
  SUBCASE("adapter exits") {
    ExternalDenoiser den(adapter("exit"));
    CHECK_THROWS_AS(den(u, s), ProtocolError);
  }
}

TEST_CASE("timeouts") {
  const auto start = std::chrono::steady_clock::now();
  {
    ExternalDenoiser den(adapter("silent"), std::chrono::milliseconds(200));
    const auto u = random_image(Shape{2, 2, 1}, 4);
    CHECK_THROWS_AS(den(u, NoiseLevelMap::constant(u.shape(), 0.1)), TimeoutError);
    CHECK_THROWS_AS(den(u, NoiseLevelMap::constant(u.shape(), 0.1)), ProtocolError);
  }
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(10));
  CHECK_THROWS_AS(ExternalDenoiser("sleep 5", std::chrono::milliseconds(100)), TimeoutError);
}

TEST_CASE("external errors share a base") {
  CHECK_THROWS_AS(ExternalDenoiser(adapter("bad_handshake")), ExternalError);
  CHECK_THROWS_AS(ExternalDenoiser(adapter("bad_handshake")), Error);
}

TEST_CASE("adapter command resolution") {
  DenoiserSpec spec;
  spec.kind = DenoiserSpec::Kind::External;
  ::unsetenv("PNP_ADAPTER");
  CHECK_THROWS_AS(make_denoiser(spec), ConfigError);

  ::setenv("PNP_ADAPTER", adapter("passthrough").c_str(), 1);
  auto from_env = make_denoiser(spec);
  CHECK(dynamic_cast<ExternalDenoiser&>(*from_env).command() == adapter("passthrough"));

  spec.command = adapter("quadratic 1 0.5");
  auto from_spec = make_denoiser(spec);
  CHECK(dynamic_cast<ExternalDenoiser&>(*from_spec).command() == spec.command);

  DenoiserSpec builtin;
  auto overridden = make_denoiser(builtin, adapter("error 3"));
  CHECK(dynamic_cast<ExternalDenoiser&>(*overridden).command() == adapter("error 3"));
  ::unsetenv("PNP_ADAPTER");
}
