#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "autosampling/sampling.hpp"
#include "autosampling/trainer.hpp"
#include "autosampling/types.hpp"

namespace autosampling::search {

enum class ExplorationType : std::uint8_t { kUniform = 0, kRandom = 1, kMixture = 2 };

std::string to_string(ExplorationType t);
ExplorationType exploration_from_string(const std::string& s);

/// Full configuration of one AutoSampling run. One global seed derives every
/// stream (model init, per-worker per-alternation schedule draws, eval
/// subsampling), so results are bit-reproducible regardless of worker
/// scheduling. num_threads caps the worker pool and never affects results.
struct SearchConfig {
  std::uint32_t population_size = 8;           // N_p
  std::uint32_t intervals_per_exploitation = 8;  // T
  std::uint32_t interval_len = 10;             // N_s, batches per interval
  std::uint32_t batch_size = 25;
  sampling::SmoothingParams smoothing;
  ExplorationType exploration = ExplorationType::kMixture;
  std::uint64_t warmup_batches = 0;
  std::uint32_t total_alternations = 6;
  std::uint64_t seed = 0;
  std::size_t eval_subset = 0;  // 0 = full validation split
  std::uint32_t num_threads = 0;  // 0 = population size, capped by hardware
  trainer::Arch arch;
  trainer::TrainHyper hyper;

  std::size_t batches_per_alternation() const {
    return static_cast<std::size_t>(intervals_per_exploitation) * interval_len;
  }
  std::size_t total_batches() const {
    return batches_per_alternation() * total_alternations;
  }
  std::size_t total_samples() const { return total_batches() * batch_size; }

  /// Throws std::invalid_argument with a field-level message.
  void validate() const;

  /// Uniform exploration is plain training: population size collapses to 1.
  SearchConfig effective() const;
};

/// One population member during a multi-exploitation step.
struct ChildState {
  std::uint32_t worker_index = 0;
  trainer::ModelState model;
  SamplingSchedule sub_schedule;  // the current interval's batches
  RngStream rng;
};

/// Outcome of one exploitation interval: child metrics, the winner, and the
/// winner's sub-schedule that goes into H*.
struct ExploitRecord {
  std::uint32_t alternation = 0;
  std::uint32_t interval = 0;
  std::uint64_t global_step = 0;  // optimizer steps completed at eval time
  std::uint32_t winner = 0;
  double winner_metric = 0.0;
  double winner_loss = 0.0;
  std::vector<double> child_metrics;
  SamplingSchedule winner_sub_schedule;
};

/// Ties go to the lowest worker index.
std::uint32_t select_winner(const std::vector<double>& metrics);

/// Trains the child over its assigned sub-schedule, one step per batch.
ChildState run_interval(ChildState child, const Dataset& dataset,
                        const trainer::TrainHyper& hyper);

struct EvalSettings {
  std::size_t eval_subset = 0;  // 0 = full
  std::uint64_t seed = 0;       // stream seed for the subsample
  std::uint64_t stream_index = 0;  // one subsample per exploit, shared by all children
};

/// Evaluates every child on the same (sub)sample of the validation split,
/// picks the winner, and broadcasts the winner's full training state
/// (weights, momentum buffers, step counter) to the whole population.
ExploitRecord exploit(std::vector<ChildState>& population,
                      const Dataset& dataset, const EvalSettings& eval,
                      std::uint32_t num_threads);

/// Observation hooks, invoked single-threaded between intervals.
struct RunHooks {
  std::function<void(const ExploitRecord&, const std::vector<ChildState>&)>
      after_exploit;
};

/// Runs T exploitation intervals over the pre-drawn per-worker schedules
/// (each T*N_s batches). Appends one ExploitRecord per interval and returns
/// H* = concat of winner sub-schedules, tagged with `alternation`.
SamplingSchedule multi_exploitation(std::vector<ChildState>& population,
                                    const std::vector<SamplingSchedule>& worker_schedules,
                                    const SearchConfig& config,
                                    const Dataset& dataset,
                                    std::uint32_t alternation,
                                    std::vector<ExploitRecord>& records,
                                    const RunHooks& hooks = {});

struct ExploreResult {
  std::vector<SamplingSchedule> worker_schedules;  // one per worker, T*N_s batches
  SamplingDistribution distribution;  // the distribution the draws came from
};

/// The exploration step. For mixture exploration past warm-up this estimates
/// P(D) from the previous H*, smooths it, and draws per-worker schedules from
/// the result; during warm-up (or when no H* exists yet) the sampling
/// distribution stays uniform. Random exploration draws per-worker uniform
/// epoch schedules from distinct streams and ignores H*; uniform exploration
/// draws a single epoch schedule.
ExploreResult explore(const SamplingSchedule* h_star,
                      const SamplingDistribution& prev_distribution,
                      const SearchConfig& config, std::uint32_t alternation,
                      std::size_t dataset_size);

struct RunResult {
  SamplingSchedule h_star;            // all alternations, provenance-tagged
  SamplingDistribution distribution;  // estimated from the full H*
  trainer::ModelState model;          // final winner
  trainer::EvalResult final_eval;     // full validation split
  std::vector<ExploitRecord> records;
};

/// Alg. driver: alternates explore and multi-exploitation for
/// total_alternations rounds from an initially uniform distribution.
RunResult run_autosampling(const SearchConfig& config, const Dataset& dataset,
                           const RunHooks& hooks = {});

// Run-log serialization: one JSON object per line, one line per exploit.
std::string record_to_json_line(const ExploitRecord& r);
std::vector<ExploitRecord> parse_run_log(const std::string& text);

}  // namespace autosampling::search
