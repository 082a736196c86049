#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pnp/apps.hpp"
#include "pnp/config.hpp"
#include "pnp/image_io.hpp"
#include "pnp/random.hpp"

namespace fs = std::filesystem;
using namespace pnp;

namespace {

// Shortest round-trip decimal form, independent of the locale.
std::string number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fixed4(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 4);
  return std::string(buf, r.ptr);
}

std::string describe(const std::exception& e) {
  std::string msg = e.what();
  try {
    std::rethrow_if_nested(e);
  } catch (const std::exception& inner) {
    const std::string more = describe(inner);
    if (msg.find(more) == std::string::npos) msg += ": " + more;
  } catch (...) {
  }
  return msg;
}

const std::string& need(const std::optional<std::string>& path, const char* key) {
  if (!path) throw ConfigError(std::string("paths.") + key + " is required for this command");
  return *path;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void write_text(const fs::path& p, const std::string& text) {
  ensure_parent(p);
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out << text;
  if (!out) throw IoError("short write to " + p.string());
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool is_raw(const fs::path& p) { return p.extension() == ".pnpf"; }

void store_observation(const Observation& obs, const TaskConfig& task, const fs::path& path) {
  if (std::holds_alternative<PoissonTask>(task.task) && !is_raw(path))
    throw ConfigError("Poisson counts exceed the PNG range; use a .pnpf observation path");
  ensure_parent(path);
  store_image(obs.data, path);
}

/// Sampling pattern of a sampling task: read from disk when given, otherwise
/// rebuilt from the task and seed exactly as `degrade` builds it.
std::optional<PixelMask> observation_mask(const ExperimentConfig& cfg, const Shape& shape) {
  const Task& task = cfg.task.task;
  if (std::holds_alternative<PoissonTask>(task)) return std::nullopt;
  if (cfg.paths.mask && fs::exists(*cfg.paths.mask)) {
    ImageTensor values = load_image(*cfg.paths.mask);
    values.array() = (values.array() > 0.5).cast<double>();
    return PixelMask(std::move(values));
  }
  if (const auto* c = std::get_if<CompletionTask>(&task))
    return make_random_pattern(shape.height, shape.width, shape.channels, c->rate, cfg.task.seed);
  if (const auto* i = std::get_if<InterpolationTask>(&task))
    return make_regular_grid_pattern(shape.height, shape.width, shape.channels, i->factor);
  return cfa_masks(std::get<DemosaicTask>(task).cfa, shape.height, shape.width);
}

std::string trace_csv(const RestorationResult& result) {
  std::string out = "k,rho,xy_mse,psnr\n";
  for (const auto& row : result.trace) {
    out += std::to_string(row.k) + "," + number(row.rho) + "," + number(row.xy_mse) + ",";
    if (row.psnr) out += number(*row.psnr);
    out += "\n";
  }
  return out;
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations;
  std::optional<std::string> adapter;
  bool no_precond = false;
};

ExperimentConfig load_with(const std::string& path, const Overrides& o) {
  ExperimentConfig cfg = load_config(path);
  if (o.seed) cfg.task.seed = *o.seed;
  if (o.iterations) cfg.task.iterations = *o.iterations;
  if (o.no_precond) cfg.task.preconditioned = false;
  resolve(cfg.task);
  return cfg;
}

int cmd_degrade(const ExperimentConfig& cfg) {
  const ImageTensor truth = load_image(need(cfg.paths.reference, "reference"));
  const Observation obs = degrade(cfg.task, truth);
  const fs::path out = need(cfg.paths.input, "input");
  store_observation(obs, cfg.task, out);
  if (obs.mask && cfg.paths.mask) {
    ensure_parent(*cfg.paths.mask);
    store_image(obs.mask->values(), *cfg.paths.mask);
  }
  nlohmann::json meta{{"seed", cfg.task.seed}, {"task", task_name(cfg.task.task)},
                      {"height", truth.height()}, {"width", truth.width()},
                      {"channels", truth.channels()}};
  if (obs.mask) meta["sampled_entries"] = obs.mask->count();
  write_text(out.string() + ".json", meta.dump(2) + "\n");
  std::cout << "wrote " << out.string();
  if (obs.mask && cfg.paths.mask) std::cout << " and " << *cfg.paths.mask;
  std::cout << " (seed " << cfg.task.seed << ")\n";
  return 0;
}

int cmd_restore(const ExperimentConfig& cfg, const std::optional<std::string>& adapter) {
  const ImageTensor data = load_image(need(cfg.paths.input, "input"));
  const Observation obs{data, observation_mask(cfg, data.shape())};
  std::optional<ImageTensor> reference;
  if (cfg.paths.reference && fs::exists(*cfg.paths.reference))
    reference = load_image(*cfg.paths.reference);

  auto denoiser = make_denoiser(cfg.denoiser, adapter);
  const RestorationResult result = run_task(cfg.task, obs, *denoiser, reference);

  if (!cfg.paths.output && !cfg.paths.raw_output)
    throw ConfigError("paths.output or paths.raw_output is required for restore");
  if (cfg.paths.output) {
    ensure_parent(*cfg.paths.output);
    store_image(result.image, *cfg.paths.output);
  }
  if (cfg.paths.raw_output) {
    ensure_parent(*cfg.paths.raw_output);
    store_raw(result.image, *cfg.paths.raw_output);
  }
  if (cfg.paths.trace) write_text(*cfg.paths.trace, trace_csv(result));

  std::cout << task_name(cfg.task.task) << ": " << result.trace.size() << " iterations";
  if (reference) std::cout << ", psnr " << fixed4(psnr(*reference, result.image)) << " dB";
  std::cout << "\n";
  return 0;
}

int cmd_eval(const std::string& ref_path, const std::string& test_path, double peak) {
  const ImageTensor ref = load_image(ref_path);
  const ImageTensor test = load_image(test_path);
  const double mse = mse_between(ref, test);
  std::cout << "psnr,mse\n" << fixed4(psnr(ref, test, peak)) << "," << number(mse) << "\n";
  return 0;
}

int cmd_trace_plot(const std::string& trace_path, const std::optional<std::string>& out_path) {
  std::istringstream in(read_text(trace_path));
  std::string line;
  if (!std::getline(in, line) || line != "k,rho,xy_mse,psnr")
    throw IoError(trace_path + " is not a trace file");
  std::string out = "# k,rho,xy_mse,log10_xy_mse,psnr\n";
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (cols.size() == 3) cols.emplace_back();
    if (cols.size() != 4) throw IoError("malformed trace row: " + line);
    double mse = 0.0;
    const auto r = std::from_chars(cols[2].data(), cols[2].data() + cols[2].size(), mse);
    if (r.ec != std::errc()) throw IoError("malformed trace row: " + line);
    const std::string log_mse = mse > 0.0 ? number(std::log10(mse)) : "NaN";
    out += cols[0] + "," + cols[1] + "," + cols[2] + "," + log_mse + "," +
           (cols[3].empty() ? "NaN" : cols[3]) + "\n";
  }
  if (out_path)
    write_text(*out_path, out);
  else
    std::cout << out;
  return 0;
}

struct BatchRow {
  std::string image;
  std::uint64_t seed = 0;
  double psnr_init = 0.0;
  double psnr_out = 0.0;
  std::string error;
};

int cmd_batch(const ExperimentConfig& base, const std::vector<std::string>& images,
              const std::string& out_dir, unsigned threads,
              const std::optional<std::string>& adapter) {
  fs::create_directories(out_dir);
  std::vector<BatchRow> rows(images.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < images.size(); i = next++) {
      BatchRow& row = rows[i];
      row.image = images[i];
      row.seed = derive_seed(base.task.seed, i);
      try {
        TaskConfig task = base.task;
        task.seed = row.seed;
        const ImageTensor truth = load_image(images[i]);
        const Observation obs = degrade(task, truth);
        // One denoiser per run: external sessions are not shared.
        auto denoiser = make_denoiser(base.denoiser, adapter);
        row.psnr_init = psnr(truth, initial_estimate(task, obs, *denoiser));
        const RestorationResult result = run_task(task, obs, *denoiser);
        row.psnr_out = psnr(truth, result.image);
        const std::string stem = std::to_string(i) + "_" + fs::path(images[i]).stem().string();
        store_raw(result.image, fs::path(out_dir) / (stem + ".pnpf"));
        store_png(result.image, fs::path(out_dir) / (stem + ".png"));
      } catch (const std::exception& e) {
        row.error = describe(e);
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, unsigned(images.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::string csv = "index,image,seed,psnr_init,psnr,error\n";
  int failures = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (!r.error.empty()) ++failures;
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    csv += std::to_string(i) + "," + r.image + "," + std::to_string(r.seed) + "," +
           (r.error.empty() ? fixed4(r.psnr_init) + "," + fixed4(r.psnr_out) : std::string(",")) +
           "," + err + "\n";
  }
  write_text(fs::path(out_dir) / "summary.csv", csv);
  std::cout << csv;
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preconditioned plug-and-play ADMM image restoration"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides overrides;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "Experiment config (JSON)")->required();
    sub->add_option("--seed", overrides.seed, "Override the config seed");
  };

  auto* degrade_cmd = app.add_subcommand("degrade", "Synthesize an observation from paths.reference");
  add_common(degrade_cmd);

  auto* restore_cmd = app.add_subcommand("restore", "Restore paths.input");
  add_common(restore_cmd);
  restore_cmd->add_option("--iterations", overrides.iterations, "Override the iteration count");
  restore_cmd->add_flag("--no-precond", overrides.no_precond, "Use P = I");
  restore_cmd->add_option("--adapter", overrides.adapter,
                          "External denoiser command line (overrides PNP_ADAPTER)");

  std::string ref_path, test_path;
  double peak = 1.0;
  auto* eval_cmd = app.add_subcommand("eval", "PSNR and MSE between two images");
  eval_cmd->add_option("reference", ref_path)->required();
  eval_cmd->add_option("test", test_path)->required();
  eval_cmd->add_option("--peak", peak, "Peak value")->check(CLI::PositiveNumber);

  std::string trace_path;
  std::optional<std::string> plot_out;
  auto* plot_cmd = app.add_subcommand("trace-plot", "Gnuplot-ready CSV from a trace");
  plot_cmd->add_option("trace", trace_path)->required();
  plot_cmd->add_option("-o,--output", plot_out);

  std::vector<std::string> images;
  std::string out_dir;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  auto* batch_cmd = app.add_subcommand("batch", "Degrade and restore many images in parallel");
  add_common(batch_cmd);
  batch_cmd->add_option("images", images, "Ground-truth images")->required();
  batch_cmd->add_option("-o,--out-dir", out_dir)->required();
  batch_cmd->add_option("-j,--threads", threads)->check(CLI::PositiveNumber);
  batch_cmd->add_option("--iterations", overrides.iterations);
  batch_cmd->add_option("--adapter", overrides.adapter);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*degrade_cmd) return cmd_degrade(load_with(config_path, overrides));
    if (*restore_cmd) return cmd_restore(load_with(config_path, overrides), overrides.adapter);
    if (*eval_cmd) return cmd_eval(ref_path, test_path, peak);
    if (*plot_cmd) return cmd_trace_plot(trace_path, plot_out);
    if (*batch_cmd)
      return cmd_batch(load_with(config_path, overrides), images, out_dir, threads,
                       overrides.adapter);
  } catch (const std::exception& e) {
    std::cerr << "error: " << describe(e) << "\n";
    return 1;
  }
  return 0;
}
