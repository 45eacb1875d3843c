#include "autosampling/types.hpp"

#include <cmath>
#include <sstream>

namespace autosampling {

namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw std::invalid_argument(what);
}

}  // namespace

SamplingSchedule SamplingSchedule::slice(std::size_t first,
                                         std::size_t count) const {
  if (first + count > num_batches()) invalid("schedule slice out of range");
  SamplingSchedule out;
  out.dataset_size = dataset_size;
  out.batch_size = batch_size;
  out.ids.assign(ids.begin() + first * batch_size,
                 ids.begin() + (first + count) * batch_size);
  out.provenance.assign(provenance.begin() + first,
                        provenance.begin() + first + count);
  return out;
}

void SamplingSchedule::append(const SamplingSchedule& other) {
  if (other.empty()) return;
  if (empty() && ids.empty()) {
    if (dataset_size == 0) dataset_size = other.dataset_size;
    if (batch_size == 0) batch_size = other.batch_size;
  }
  if (other.dataset_size != dataset_size)
    invalid("schedule append: dataset_size mismatch");
  if (other.batch_size != batch_size)
    invalid("schedule append: batch_size mismatch");
  ids.insert(ids.end(), other.ids.begin(), other.ids.end());
  provenance.insert(provenance.end(), other.provenance.begin(),
                    other.provenance.end());
}

void SamplingSchedule::validate() const {
  if (ids.empty()) {
    if (!provenance.empty())
      invalid("empty schedule carries provenance tags");
    return;
  }
  if (batch_size == 0) invalid("non-empty schedule with batch_size 0");
  if (ids.size() % batch_size != 0)
    invalid("schedule ids are not a whole number of batches");
  if (provenance.size() != num_batches())
    invalid("schedule provenance length != batch count");
  for (SampleId id : ids) {
    if (id >= dataset_size) {
      std::ostringstream msg;
      msg << "schedule references id " << id << " >= dataset size "
          << dataset_size;
      invalid(msg.str());
    }
  }
}

SamplingDistribution SamplingDistribution::uniform(std::size_t dataset_size) {
  SamplingDistribution d;
  d.probs.assign(dataset_size, 1.0 / static_cast<double>(dataset_size));
  return d;
}

void SamplingDistribution::validate() const {
  if (probs.empty()) invalid("empty distribution");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) invalid("distribution has a negative or NaN entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    invalid("distribution does not sum to 1 within 1e-9");
}

void Dataset::validate() const {
  if (feature_dim == 0) invalid("dataset feature_dim is 0");
  if (num_classes == 0) invalid("dataset num_classes is 0");
  if (train_labels.empty()) invalid("dataset has no training samples");
  if (train_features.size() != num_train() * feature_dim)
    invalid("train feature matrix shape mismatch");
  if (val_features.size() != num_val() * feature_dim)
    invalid("val feature matrix shape mismatch");
  for (std::uint32_t y : train_labels)
    if (y >= num_classes) invalid("train label out of range");
  for (std::uint32_t y : val_labels)
    if (y >= num_classes) invalid("val label out of range");
}

}  // namespace autosampling
