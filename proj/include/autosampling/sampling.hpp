#pragma once

#include <cstdint>
#include <string>

#include "autosampling/rng.hpp"
#include "autosampling/types.hpp"

namespace autosampling::sampling {

/// Parameters of the two-stage distribution smoothing: a log transform with
/// additive factor `beta`, then an equal-weight mixture with `n_uniform`
/// uniform components.
struct SmoothingParams {
  double beta = 1.0;
  std::uint32_t n_uniform = 3;

  /// beta >= 1 keeps log(p + beta) >= 0 pointwise.
  void validate() const;
};

/// Appearance-count estimate of the sampling distribution underlying a
/// schedule: probs[x] = count(x) / total. The schedule must be non-empty.
SamplingDistribution estimate_distribution(const SamplingSchedule& schedule,
                                           std::size_t dataset_size);

/// Smooths p in two stages. With q(x) = log(p(x) + beta) normalized to sum 1,
/// returns P'(x) = q(x)/(N_u+1) + N_u/((N_u+1)|D|), which floors every
/// probability at N_u/((N_u+1)|D|).
///
/// With n_uniform = 0 a zero q(x) survives into the output; that case is
/// permitted but reported through `warning` when a sink is given (stderr
/// otherwise).
SamplingDistribution smooth_distribution(const SamplingDistribution& p,
                                         const SmoothingParams& params,
                                         std::string* warning = nullptr);

/// Draws num_batches batches of batch_size ids i.i.d. from p (with
/// replacement) by cumulative-sum inversion. Deterministic given rng.
SamplingSchedule draw_schedule(const SamplingDistribution& p,
                               std::size_t num_batches, std::uint32_t batch_size,
                               RngStream& rng);

/// Epoch-semantics uniform schedule: concatenated whole-dataset shuffles
/// chopped into exact batches; the tail of the last permutation that does
/// not fill a batch is dropped.
SamplingSchedule draw_uniform_epoch_schedule(std::size_t dataset_size,
                                             std::size_t num_batches,
                                             std::uint32_t batch_size,
                                             RngStream& rng);

}  // namespace autosampling::sampling
