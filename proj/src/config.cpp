#include "pnp/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "pnp/external_denoiser.hpp"

namespace pnp {
namespace {

using json = nlohmann::json;

// Reads keys off a JSON object and rejects whatever is left unread.
class Reader {
 public:
  Reader(const json& object, std::string where) : object_(object), where_(std::move(where)) {
    if (!object_.is_object()) throw ConfigError(where_ + " must be an object");
  }

  template <typename T>
  std::optional<T> opt(const std::string& key) {
    seen_.insert(key);
    const auto it = object_.find(key);
    if (it == object_.end() || it->is_null()) return std::nullopt;
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!it->is_number()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw ConfigError("");
      }
      return it->get<T>();
    } catch (const std::exception&) {
      throw ConfigError(where_ + "." + key + " has the wrong type");
    }
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    return opt<T>(key).value_or(fallback);
  }

  template <typename T>
  T required(const std::string& key) {
    auto v = opt<T>(key);
    if (!v) throw ConfigError(where_ + "." + key + " is required");
    return *v;
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    const auto it = object_.find(key);
    return it == object_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& item : object_.items())
      if (!seen_.count(item.key())) throw ConfigError("unknown key " + where_ + "." + item.key());
  }

 private:
  const json& object_;
  std::string where_;
  std::set<std::string> seen_;
};

constexpr const char* kInitNames[] = {"default", "zeros", "observation", "bicubic", "malvar"};
constexpr const char* kDenoiserNames[] = {"adaptive_smoothing", "quadratic", "identity",
                                          "external"};

InitKind parse_init(const std::string& name) {
  for (int i = 0; i < 5; ++i)
    if (name == kInitNames[i]) return static_cast<InitKind>(i);
  throw ConfigError("unknown init '" + name + "'");
}

Task parse_task(const json& j) {
  Reader r(j, "task");
  const auto kind = r.required<std::string>("kind");
  Task task;
  if (kind == "completion") {
    task = CompletionTask{r.get("rate", 0.2)};
  } else if (kind == "interpolation") {
    task = InterpolationTask{r.get("factor", 2)};
  } else if (kind == "demosaic") {
    try {
      task = DemosaicTask{parse_cfa(r.get<std::string>("cfa", "RGGB")), r.get("noise_sigma", 0.0)};
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  } else if (kind == "poisson") {
    task = PoissonTask{r.required<double>("peak"), r.get("anscombe_init", false)};
  } else {
    throw ConfigError("unknown task kind '" + kind + "'");
  }
  r.finish();
  return task;
}

json task_to_json(const Task& task) {
  return std::visit(
      [](const auto& t) -> json {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, CompletionTask>)
          return {{"kind", "completion"}, {"rate", t.rate}};
        else if constexpr (std::is_same_v<T, InterpolationTask>)
          return {{"kind", "interpolation"}, {"factor", t.factor}};
        else if constexpr (std::is_same_v<T, DemosaicTask>)
          return {{"kind", "demosaic"}, {"cfa", to_string(t.cfa)}, {"noise_sigma", t.noise_sigma}};
        else
          return {{"kind", "poisson"}, {"peak", t.peak}, {"anscombe_init", t.anscombe_init}};
      },
      task);
}

DenoiserSpec parse_denoiser(const json& j) {
  Reader r(j, "denoiser");
  DenoiserSpec spec;
  const auto kind = r.get<std::string>("kind", "adaptive_smoothing");
  bool known = false;
  for (int i = 0; i < 4; ++i)
    if (kind == kDenoiserNames[i]) {
      spec.kind = static_cast<DenoiserSpec::Kind>(i);
      known = true;
    }
  if (!known) throw ConfigError("unknown denoiser kind '" + kind + "'");
  switch (spec.kind) {
    case DenoiserSpec::Kind::AdaptiveSmoothing:
      spec.beta = r.get("beta", spec.beta);
      spec.h_max = r.get("h_max", spec.h_max);
      break;
    case DenoiserSpec::Kind::Quadratic:
      spec.kappa = r.get("kappa", spec.kappa);
      spec.mean = r.get("mean", spec.mean);
      break;
    case DenoiserSpec::Kind::Identity:
      break;
    case DenoiserSpec::Kind::External:
      spec.command = r.get<std::string>("command", "");
      spec.timeout_ms = r.get("timeout_ms", spec.timeout_ms);
      if (spec.timeout_ms <= 0) throw ConfigError("denoiser.timeout_ms must be > 0");
      break;
  }
  r.finish();
  return spec;
}

json denoiser_to_json(const DenoiserSpec& spec) {
  json j{{"kind", kDenoiserNames[static_cast<int>(spec.kind)]}};
  switch (spec.kind) {
    case DenoiserSpec::Kind::AdaptiveSmoothing:
      j["beta"] = spec.beta;
      j["h_max"] = spec.h_max;
      break;
    case DenoiserSpec::Kind::Quadratic:
      j["kappa"] = spec.kappa;
      j["mean"] = spec.mean;
      break;
    case DenoiserSpec::Kind::Identity:
      break;
    case DenoiserSpec::Kind::External:
      if (!spec.command.empty()) j["command"] = spec.command;
      j["timeout_ms"] = spec.timeout_ms;
      break;
  }
  return j;
}

template <typename T>
void put(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Reader r(root, "config");
  const auto version = r.opt<int>("schema_version");
  if (!version) throw ConfigError("config.schema_version is required");
  if (*version != kConfigSchemaVersion)
    throw ConfigError("unsupported schema_version " + std::to_string(*version));

  ExperimentConfig config;
  const json* task = r.child("task");
  if (!task) throw ConfigError("config.task is required");
  config.task.task = parse_task(*task);
  config.task.seed = r.get<std::uint64_t>("seed", 0);

  if (const json* solver = r.child("solver")) {
    Reader s(*solver, "solver");
    config.task.preconditioned = s.get("preconditioned", true);
    config.task.iterations = s.opt<int>("iterations");
    config.task.sigma0_den = s.opt<double>("sigma0_den");
    config.task.sigmaN_den = s.opt<double>("sigmaN_den");
    config.task.sigma_f_last = s.opt<double>("sigma_f_last");
    config.task.p_max = s.get("p_max", 10.0);
    config.task.poisson_floor = s.opt<double>("poisson_floor");
    config.task.poisson_update = s.opt<bool>("poisson_update");
    config.task.passthrough = s.opt<bool>("passthrough");
    config.task.init = parse_init(s.get<std::string>("init", "default"));
    s.finish();
  }
  if (const json* denoiser = r.child("denoiser")) config.denoiser = parse_denoiser(*denoiser);
  if (const json* paths = r.child("paths")) {
    Reader p(*paths, "paths");
    config.paths.input = p.opt<std::string>("input");
    config.paths.output = p.opt<std::string>("output");
    config.paths.raw_output = p.opt<std::string>("raw_output");
    config.paths.mask = p.opt<std::string>("mask");
    config.paths.reference = p.opt<std::string>("reference");
    config.paths.trace = p.opt<std::string>("trace");
    p.finish();
  }
  r.finish();
  try {
    resolve(config.task);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const ExperimentConfig& config) {
  const TaskConfig& t = config.task;
  json solver{{"preconditioned", t.preconditioned},
              {"p_max", t.p_max},
              {"init", kInitNames[static_cast<int>(t.init)]}};
  put(solver, "iterations", t.iterations);
  put(solver, "sigma0_den", t.sigma0_den);
  put(solver, "sigmaN_den", t.sigmaN_den);
  put(solver, "sigma_f_last", t.sigma_f_last);
  put(solver, "poisson_floor", t.poisson_floor);
  put(solver, "poisson_update", t.poisson_update);
  put(solver, "passthrough", t.passthrough);

  json paths = json::object();
  put(paths, "input", config.paths.input);
  put(paths, "output", config.paths.output);
  put(paths, "raw_output", config.paths.raw_output);
  put(paths, "mask", config.paths.mask);
  put(paths, "reference", config.paths.reference);
  put(paths, "trace", config.paths.trace);

  json root{{"schema_version", kConfigSchemaVersion},
            {"task", task_to_json(t.task)},
            {"seed", t.seed},
            {"solver", solver},
            {"denoiser", denoiser_to_json(config.denoiser)},
            {"paths", paths}};
  return root.dump(2) + "\n";
}

std::unique_ptr<Denoiser> make_denoiser(const DenoiserSpec& spec,
                                        const std::optional<std::string>& adapter_override) {
  const bool external = spec.kind == DenoiserSpec::Kind::External ||
                        (adapter_override && !adapter_override->empty());
  if (external) {
    std::string command = adapter_override.value_or("");
    if (command.empty()) command = spec.command;
    if (command.empty())
      if (const char* env = std::getenv("PNP_ADAPTER")) command = env;
    if (command.empty())
      throw ConfigError("external denoiser needs --adapter, denoiser.command or PNP_ADAPTER");
    return std::make_unique<ExternalDenoiser>(command,
                                              std::chrono::milliseconds(spec.timeout_ms));
  }
  switch (spec.kind) {
    case DenoiserSpec::Kind::Quadratic:
      return std::make_unique<QuadraticPriorDenoiser>(
          QuadraticPriorParams{spec.kappa, ImageTensor{}, spec.mean});
    case DenoiserSpec::Kind::Identity:
      return std::make_unique<IdentityDenoiser>();
    default:
      return std::make_unique<AdaptiveSmoothingDenoiser>(spec.beta, spec.h_max);
  }
}

}  // namespace pnp
