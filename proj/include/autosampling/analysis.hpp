#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "autosampling/search.hpp"
#include "autosampling/trainer.hpp"
#include "autosampling/types.hpp"

namespace autosampling::analysis {

/// Appearance counts of a schedule slice over contiguous id segments of
/// equal width. `ordering` is a display permutation over segments, applied
/// only at export time; it defaults to identity.
struct SegmentHistogram {
  std::size_t num_segments = 0;
  std::size_t segment_width = 0;
  std::vector<std::uint64_t> counts;
  std::vector<std::size_t> ordering;

  std::uint64_t total() const;
};

/// num_segments must divide dataset_size.
SegmentHistogram segment_histogram(const SamplingSchedule& slice,
                                   std::size_t dataset_size,
                                   std::size_t num_segments);

/// Permutation of segments by descending count (stable), as used to reorder
/// the x-axis of per-stage histogram exports.
std::vector<std::size_t> rank_by_counts(const SegmentHistogram& h);

void export_histogram_csv(const SegmentHistogram& h,
                          const std::filesystem::path& path);

/// Per-sample (id, frequency, loss) with the Pearson correlation between
/// the two columns. A zero-variance column leaves `correlation` empty —
/// undefined, not zero.
struct FreqLossTable {
  std::vector<std::uint64_t> frequencies;
  std::vector<double> losses;
  std::optional<double> correlation;
};

FreqLossTable frequency_loss_table(const SamplingSchedule& slice,
                                   const std::vector<double>& losses);

void export_freq_loss_csv(const FreqLossTable& t,
                          const std::filesystem::path& path);

/// Whole-run schedule drawn i.i.d. from one fixed distribution, tagged
/// STATIC in provenance.
SamplingSchedule make_static_schedule(const SamplingDistribution& p,
                                      std::size_t total_batches,
                                      std::uint32_t batch_size, RngStream& rng);

struct ReplayResult {
  trainer::ModelState model;
  trainer::EvalResult eval;
};

/// Plain SGD over a fixed schedule, no search. Model init uses the same
/// stream derivation as the search engine, so replaying a recorded H* with
/// the search's seed and architecture reproduces the search's final weights
/// bit-exactly.
ReplayResult replay_run(const SamplingSchedule& schedule,
                        const trainer::Arch& arch,
                        const trainer::TrainHyper& hyper,
                        const Dataset& dataset, std::uint64_t seed);

/// Trains `arch` on a STATIC schedule generated from a distribution learned
/// elsewhere (possibly by a different architecture).
ReplayResult transfer_run(const SamplingDistribution& distribution,
                          const trainer::Arch& arch,
                          const search::SearchConfig& config,
                          const Dataset& dataset);

/// The uniform-exploration baseline schedule for a config: per-alternation
/// epoch schedules drawn from the worker-0 streams, concatenated. Replaying
/// it equals a uniform run_autosampling with the same seed bit-exactly.
SamplingSchedule uniform_baseline_schedule(const search::SearchConfig& config,
                                           std::size_t dataset_size);

struct ComparisonTable {
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> conditions;        // UNIFORM, STATIC, DYNAMIC
  std::vector<std::vector<double>> metrics;   // [condition][seed]
  std::vector<double> means;
  std::vector<double> stddevs;
  std::size_t total_train_samples = 0;        // identical across conditions
};

/// Per seed: one AutoSampling run (DYNAMIC), a STATIC replay of its learned
/// distribution, and the UNIFORM baseline, all trained on the same number of
/// samples and evaluated on the same validation split.
ComparisonTable compare_conditions(const search::SearchConfig& config,
                                   const Dataset& dataset,
                                   const std::vector<std::uint64_t>& seeds);

void export_comparison_csv(const ComparisonTable& t,
                           const std::filesystem::path& path);

}  // namespace autosampling::analysis
