#include "autosampling/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <sstream>

namespace autosampling::sampling {

void SmoothingParams::validate() const {
  if (!(beta >= 1.0)) {
    std::ostringstream msg;
    msg << "smoothing beta must be >= 1, got " << beta;
    throw std::invalid_argument(msg.str());
  }
}

SamplingDistribution estimate_distribution(const SamplingSchedule& schedule,
                                           std::size_t dataset_size) {
  if (dataset_size == 0)
    throw std::invalid_argument("estimate_distribution: dataset_size is 0");
  if (schedule.empty())
    throw std::invalid_argument(
        "estimate_distribution: empty schedule (appearance counts undefined)");
  std::vector<std::uint64_t> counts(dataset_size, 0);
  for (SampleId id : schedule.ids) {
    if (id >= dataset_size)
      throw std::invalid_argument(
          "estimate_distribution: schedule id " + std::to_string(id) +
          " out of range for dataset size " + std::to_string(dataset_size));
    ++counts[id];
  }
  SamplingDistribution d;
  d.probs.resize(dataset_size);
  const double total = static_cast<double>(schedule.num_samples());
  for (std::size_t x = 0; x < dataset_size; ++x)
    d.probs[x] = static_cast<double>(counts[x]) / total;
  return d;
}

SamplingDistribution smooth_distribution(const SamplingDistribution& p,
                                         const SmoothingParams& params,
                                         std::string* warning) {
  p.validate();
  params.validate();
  const std::size_t n = p.size();

  std::vector<double> logs(n);
  double log_sum = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    logs[x] = std::log(p.probs[x] + params.beta);
    log_sum += logs[x];
  }
  if (log_sum <= 0.0)
    throw std::domain_error(
        "smooth_distribution: sum of log(p + beta) is zero, the log-smoothed "
        "component cannot be normalized");

  const double nu = static_cast<double>(params.n_uniform);
  const double mix = 1.0 / (nu + 1.0);
  const double uniform_term = nu * mix / static_cast<double>(n);

  SamplingDistribution out;
  out.probs.resize(n);
  bool zero_survives = false;
  for (std::size_t x = 0; x < n; ++x) {
    const double q = logs[x] / log_sum;
    out.probs[x] = mix * q + uniform_term;
    if (out.probs[x] == 0.0) zero_survives = true;
  }
  if (zero_survives) {
    std::string msg =
        "smooth_distribution: n_uniform = 0 left zero-probability samples in "
        "the output";
    if (warning != nullptr)
      *warning = msg;
    else
      std::cerr << "warning: " << msg << '\n';
  }
  return out;
}

SamplingSchedule draw_schedule(const SamplingDistribution& p,
                               std::size_t num_batches, std::uint32_t batch_size,
                               RngStream& rng) {
  p.validate();
  if (num_batches == 0 || batch_size == 0)
    throw std::invalid_argument("draw_schedule: num_batches and batch_size must be >= 1");

  std::vector<double> cum(p.size());
  std::partial_sum(p.probs.begin(), p.probs.end(), cum.begin());
  const double total = cum.back();

  SamplingSchedule s;
  s.dataset_size = p.size();
  s.batch_size = batch_size;
  const std::size_t n = num_batches * batch_size;
  s.ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.next_double() * total;
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    if (it == cum.end()) --it;  // guards u landing on the rounding edge
    s.ids.push_back(static_cast<SampleId>(it - cum.begin()));
  }
  s.provenance.assign(num_batches, kProvenanceNone);
  return s;
}

SamplingSchedule draw_uniform_epoch_schedule(std::size_t dataset_size,
                                             std::size_t num_batches,
                                             std::uint32_t batch_size,
                                             RngStream& rng) {
  if (num_batches == 0 || batch_size == 0)
    throw std::invalid_argument(
        "draw_uniform_epoch_schedule: num_batches and batch_size must be >= 1");
  if (dataset_size < batch_size)
    throw std::invalid_argument(
        "draw_uniform_epoch_schedule: dataset size " +
        std::to_string(dataset_size) + " smaller than batch size " +
        std::to_string(batch_size));

  SamplingSchedule s;
  s.dataset_size = dataset_size;
  s.batch_size = batch_size;
  const std::size_t n = num_batches * batch_size;
  s.ids.reserve(n);

  std::vector<SampleId> perm(dataset_size);
  std::iota(perm.begin(), perm.end(), SampleId{0});
  while (s.ids.size() < n) {
    rng.shuffle(perm);
    const std::size_t take = std::min(n - s.ids.size(), perm.size());
    s.ids.insert(s.ids.end(), perm.begin(), perm.begin() + take);
  }
  s.provenance.assign(num_batches, kProvenanceNone);
  return s;
}

}  // namespace autosampling::sampling
