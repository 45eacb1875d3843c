// Command-line front end: search runs, baselines, replays, analysis
// exports, and multi-seed condition comparisons. Every command writes its
// artifacts plus a manifest.json into a fresh output directory.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "autosampling/analysis.hpp"
#include "autosampling/config.hpp"
#include "autosampling/search.hpp"
#include "autosampling/serialize.hpp"

namespace fs = std::filesystem;
using namespace autosampling;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitRuntimeError = 2;

struct OutputDir {
  fs::path path;

  static OutputDir prepare(const std::string& out, bool force) {
    fs::path p(out);
    if (p.is_relative()) {
      if (const char* root = std::getenv("AUTOSAMPLING_OUTPUT_ROOT"))
        p = fs::path(root) / p;
    }
    if (fs::exists(p / "manifest.json") && !force)
      throw cli::ConfigError("output directory " + p.string() +
                             " already holds a run (use --force to overwrite)");
    fs::create_directories(p);
    return OutputDir{p};
  }
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

void write_run_log(const std::vector<search::ExploitRecord>& records,
                   const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write run log: " + path.string());
  for (const auto& r : records) out << search::record_to_json_line(r) << '\n';
}

void write_search_artifacts(const search::RunResult& result,
                            const OutputDir& dir, cli::Manifest& manifest) {
  save_schedule(result.h_star, dir.path / "h_star.schedule");
  save_distribution(result.distribution, dir.path / "p_final.dist");
  export_distribution_csv(result.distribution, dir.path / "p_final.csv");
  export_schedule_counts_csv(result.h_star, dir.path / "counts.csv");
  trainer::save_model(result.model, dir.path / "model.ckpt");
  write_run_log(result.records, dir.path / "run_log.jsonl");
  manifest.artifacts = {{"schedule", "h_star.schedule"},
                        {"distribution", "p_final.dist"},
                        {"distribution_csv", "p_final.csv"},
                        {"counts_csv", "counts.csv"},
                        {"model", "model.ckpt"},
                        {"run_log", "run_log.jsonl"}};
  manifest.metrics["final_metric"] = result.final_eval.metric;
  manifest.metrics["final_loss"] = result.final_eval.loss;
}

int run_search(const std::string& config_path, const std::string& out,
               bool force, bool as_baseline) {
  cli::ExperimentConfig config = cli::load_config(config_path);
  if (as_baseline) config.search.exploration = search::ExplorationType::kUniform;
  OutputDir dir = OutputDir::prepare(out, force);

  Stopwatch timer;
  Dataset dataset = cli::build_dataset(config);
  search::RunResult result = search::run_autosampling(config.search, dataset);

  cli::Manifest manifest;
  manifest.command = as_baseline ? "baseline" : "search";
  manifest.seed = config.search.seed;
  manifest.config = config;
  write_search_artifacts(result, dir, manifest);
  manifest.wall_seconds = timer.seconds();
  cli::write_manifest(manifest, dir.path);

  std::cout << manifest.command << ": final metric "
            << result.final_eval.metric << " over "
            << result.h_star.num_samples() << " training samples -> "
            << dir.path.string() << '\n';
  return kExitOk;
}

int run_static(const std::string& config_path, const std::string& dist_path,
               const std::string& out, bool force) {
  cli::ExperimentConfig config = cli::load_config(config_path);
  SamplingDistribution dist = load_distribution(dist_path);
  OutputDir dir = OutputDir::prepare(out, force);

  Stopwatch timer;
  Dataset dataset = cli::build_dataset(config);
  if (dist.size() != dataset.num_train())
    throw std::runtime_error("distribution size does not match dataset");
  analysis::ReplayResult result =
      analysis::transfer_run(dist, config.search.arch, config.search, dataset);

  cli::Manifest manifest;
  manifest.command = "static";
  manifest.seed = config.search.seed;
  manifest.config = config;
  trainer::save_model(result.model, dir.path / "model.ckpt");
  manifest.artifacts = {{"model", "model.ckpt"}};
  manifest.metrics["final_metric"] = result.eval.metric;
  manifest.metrics["final_loss"] = result.eval.loss;
  manifest.wall_seconds = timer.seconds();
  cli::write_manifest(manifest, dir.path);

  std::cout << "static: final metric " << result.eval.metric << " -> "
            << dir.path.string() << '\n';
  return kExitOk;
}

int run_replay(const std::string& config_path, const std::string& schedule_path,
               const std::string& arch_override, std::size_t hidden_dim,
               const std::string& out, bool force) {
  cli::ExperimentConfig config = cli::load_config(config_path);
  if (!arch_override.empty()) {
    if (arch_override == "softmax") {
      config.search.arch.kind = trainer::ArchKind::kSoftmax;
    } else if (arch_override == "mlp") {
      config.search.arch.kind = trainer::ArchKind::kMlp;
      if (hidden_dim > 0) config.search.arch.hidden_dim = hidden_dim;
    } else {
      throw cli::ConfigError("--arch must be softmax or mlp");
    }
  }
  SamplingSchedule schedule = load_schedule(schedule_path);
  OutputDir dir = OutputDir::prepare(out, force);

  Stopwatch timer;
  Dataset dataset = cli::build_dataset(config);
  analysis::ReplayResult result = analysis::replay_run(
      schedule, config.search.arch, config.search.hyper, dataset,
      config.search.seed);

  cli::Manifest manifest;
  manifest.command = "replay";
  manifest.seed = config.search.seed;
  manifest.config = config;
  trainer::save_model(result.model, dir.path / "model.ckpt");
  manifest.artifacts = {{"model", "model.ckpt"}};
  manifest.metrics["final_metric"] = result.eval.metric;
  manifest.metrics["final_loss"] = result.eval.loss;
  manifest.wall_seconds = timer.seconds();
  cli::write_manifest(manifest, dir.path);

  std::cout << "replay: final metric " << result.eval.metric << " -> "
            << dir.path.string() << '\n';
  return kExitOk;
}

int run_analyze(const std::string& run_dir, const std::string& out, bool force,
                std::size_t num_segments, bool final_alternation_only) {
  cli::Manifest run = cli::read_manifest(run_dir);
  const fs::path run_path(run_dir);
  SamplingSchedule h_star =
      load_schedule(run_path / run.artifacts.at("schedule"));
  trainer::ModelState model = trainer::load_model(run_path / run.artifacts.at("model"));
  OutputDir dir = OutputDir::prepare(out, force);

  Stopwatch timer;
  cli::ExperimentConfig config = run.config;
  Dataset dataset = cli::build_dataset(config);

  // Per-alternation histograms, x-axis ordered by the final stage ranking.
  std::int32_t max_alt = 0;
  for (std::int32_t tag : h_star.provenance) max_alt = std::max(max_alt, tag);
  std::vector<SamplingSchedule> stages;
  for (std::int32_t a = 0; a <= max_alt; ++a) {
    SamplingSchedule stage;
    stage.dataset_size = h_star.dataset_size;
    stage.batch_size = h_star.batch_size;
    for (std::size_t b = 0; b < h_star.num_batches(); ++b) {
      if (h_star.provenance[b] != a) continue;
      auto batch = h_star.batch(b);
      stage.ids.insert(stage.ids.end(), batch.begin(), batch.end());
      stage.provenance.push_back(a);
    }
    stages.push_back(std::move(stage));
  }
  auto final_hist = analysis::segment_histogram(stages.back(),
                                                dataset.num_train(), num_segments);
  const auto ordering = analysis::rank_by_counts(final_hist);
  cli::Manifest manifest;
  for (std::size_t a = 0; a < stages.size(); ++a) {
    auto h = analysis::segment_histogram(stages[a], dataset.num_train(),
                                         num_segments);
    h.ordering = ordering;
    const std::string name = "histogram_alt" + std::to_string(a) + ".csv";
    analysis::export_histogram_csv(h, dir.path / name);
    manifest.artifacts["histogram_alt" + std::to_string(a)] = name;
  }
  auto overall = analysis::segment_histogram(h_star, dataset.num_train(),
                                             num_segments);
  overall.ordering = ordering;
  analysis::export_histogram_csv(overall, dir.path / "histogram_all.csv");
  manifest.artifacts["histogram_all"] = "histogram_all.csv";

  // Frequency vs loss under the final model.
  auto losses = trainer::per_sample_losses(model, dataset);
  auto table = analysis::frequency_loss_table(h_star, losses);
  analysis::export_freq_loss_csv(table, dir.path / "freq_loss.csv");
  manifest.artifacts["freq_loss"] = "freq_loss.csv";
  if (table.correlation) manifest.metrics["freq_loss_correlation"] = *table.correlation;

  // Distribution estimate for STATIC replays: whole run by default.
  const SamplingSchedule& estimate_from =
      final_alternation_only ? stages.back() : h_star;
  auto p = sampling::estimate_distribution(estimate_from, dataset.num_train());
  save_distribution(p, dir.path / "p_estimate.dist");
  export_distribution_csv(p, dir.path / "p_estimate.csv");
  manifest.artifacts["distribution"] = "p_estimate.dist";
  manifest.artifacts["distribution_csv"] = "p_estimate.csv";
  export_schedule_counts_csv(h_star, dir.path / "counts.csv");
  manifest.artifacts["counts_csv"] = "counts.csv";

  manifest.command = "analyze";
  manifest.seed = run.seed;
  manifest.config = run.config;
  manifest.wall_seconds = timer.seconds();
  cli::write_manifest(manifest, dir.path);

  std::cout << "analyze: " << stages.size() << " stages, "
            << h_star.num_samples() << " samples -> " << dir.path.string()
            << '\n';
  return kExitOk;
}

int run_compare(const std::string& config_path, const std::string& seeds_raw,
                const std::string& out, bool force) {
  cli::ExperimentConfig config = cli::load_config(config_path);
  std::vector<std::uint64_t> seeds;
  std::istringstream is(seeds_raw);
  std::string item;
  while (std::getline(is, item, ','))
    if (!item.empty()) seeds.push_back(std::stoull(item));
  if (seeds.size() < 2)
    throw cli::ConfigError("--seeds needs at least two comma-separated seeds");
  OutputDir dir = OutputDir::prepare(out, force);

  Stopwatch timer;
  Dataset dataset = cli::build_dataset(config);
  auto table = analysis::compare_conditions(config.search, dataset, seeds);
  analysis::export_comparison_csv(table, dir.path / "comparison.csv");

  cli::Manifest manifest;
  manifest.command = "compare";
  manifest.seed = config.search.seed;
  manifest.config = config;
  manifest.artifacts = {{"comparison_csv", "comparison.csv"}};
  for (std::size_t c = 0; c < table.conditions.size(); ++c)
    manifest.metrics["mean_" + table.conditions[c]] = table.means[c];
  manifest.wall_seconds = timer.seconds();
  cli::write_manifest(manifest, dir.path);

  std::cout << "compare:";
  for (std::size_t c = 0; c < table.conditions.size(); ++c)
    std::cout << ' ' << table.conditions[c] << '=' << table.means[c];
  std::cout << " -> " << dir.path.string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AutoSampling: population-based search for data sampling schedules"};
  app.require_subcommand(1);

  std::string config_path, out, dist_path, schedule_path, run_dir;
  std::string arch_override, seeds;
  std::size_t hidden_dim = 0, segments = 10;
  bool force = false, final_alt_only = false;

  auto add_common = [&](CLI::App* cmd, bool needs_config = true) {
    if (needs_config)
      cmd->add_option("--config", config_path, "config file")->required();
    cmd->add_option("--out", out, "output directory")->required();
    cmd->add_flag("--force", force, "overwrite an existing run directory");
  };

  auto* search_cmd = app.add_subcommand("search", "run AutoSampling");
  add_common(search_cmd);
  auto* baseline_cmd =
      app.add_subcommand("baseline", "uniform-sampling training run");
  add_common(baseline_cmd);
  auto* static_cmd =
      app.add_subcommand("static", "train on a schedule drawn from a fixed distribution");
  add_common(static_cmd);
  static_cmd->add_option("--distribution", dist_path, "distribution file")->required();
  auto* replay_cmd =
      app.add_subcommand("replay", "train on a recorded schedule (replay or transfer)");
  add_common(replay_cmd);
  replay_cmd->add_option("--schedule", schedule_path, "schedule file")->required();
  replay_cmd->add_option("--arch", arch_override, "override architecture (softmax|mlp)");
  replay_cmd->add_option("--hidden-dim", hidden_dim, "hidden width for --arch mlp");
  auto* analyze_cmd =
      app.add_subcommand("analyze", "export histogram / frequency-loss CSVs for a run");
  analyze_cmd->add_option("--run", run_dir, "finished run directory")->required();
  add_common(analyze_cmd, false);
  analyze_cmd->add_option("--segments", segments, "histogram segment count");
  analyze_cmd->add_flag("--final-alternation-only", final_alt_only,
                        "estimate the exported distribution from the last alternation only");
  auto* compare_cmd =
      app.add_subcommand("compare", "UNIFORM / STATIC / DYNAMIC comparison over seeds");
  add_common(compare_cmd);
  compare_cmd->add_option("--seeds", seeds, "comma-separated seed list")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitConfigError;
  }

  try {
    if (app.got_subcommand(search_cmd))
      return run_search(config_path, out, force, false);
    if (app.got_subcommand(baseline_cmd))
      return run_search(config_path, out, force, true);
    if (app.got_subcommand(static_cmd))
      return run_static(config_path, dist_path, out, force);
    if (app.got_subcommand(replay_cmd))
      return run_replay(config_path, schedule_path, arch_override, hidden_dim,
                        out, force);
    if (app.got_subcommand(analyze_cmd))
      return run_analyze(run_dir, out, force, segments, final_alt_only);
    if (app.got_subcommand(compare_cmd))
      return run_compare(config_path, seeds, out, force);
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
  return kExitConfigError;
}
