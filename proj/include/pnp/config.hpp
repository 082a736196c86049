#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "pnp/apps.hpp"
#include "pnp/denoise.hpp"

namespace pnp {

inline constexpr int kConfigSchemaVersion = 1;

struct DenoiserSpec {
  enum class Kind { AdaptiveSmoothing, Quadratic, Identity, External };
  Kind kind = Kind::AdaptiveSmoothing;
  double beta = 4.0;
  double h_max = 8.0;
  double kappa = 1.0;
  double mean = 0.5;
  /// Adapter command line; empty means "use PNP_ADAPTER".
  std::string command;
  int timeout_ms = 60000;

  bool operator==(const DenoiserSpec&) const = default;
};

struct ExperimentPaths {
  std::optional<std::string> input;
  std::optional<std::string> output;
  std::optional<std::string> raw_output;
  std::optional<std::string> mask;
  std::optional<std::string> reference;
  std::optional<std::string> trace;
};

struct ExperimentConfig {
  TaskConfig task;
  DenoiserSpec denoiser;
  ExperimentPaths paths;
};

/// Parses a JSON config. Unknown keys, wrong types and a missing or
/// unsupported schema_version are ConfigErrors.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical JSON text; parse_config(serialize_config(c)) reproduces c.
std::string serialize_config(const ExperimentConfig& config);

/// Instantiates the denoiser. For external denoisers the command comes from
/// `adapter_override`, then spec.command, then the PNP_ADAPTER environment
/// variable. A non-empty override selects the external denoiser.
std::unique_ptr<Denoiser> make_denoiser(const DenoiserSpec& spec,
                                        const std::optional<std::string>& adapter_override = {});

}  // namespace pnp
