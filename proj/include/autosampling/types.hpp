#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace autosampling {

// Dense index into the training split of a Dataset.
using SampleId = std::uint32_t;

// One training mini-batch: a fixed-length window into a schedule's id stream.
using MiniBatch = std::span<const SampleId>;

// Provenance tags for schedule batches. Values >= 0 name the alternation
// that produced the batch; negative values are reserved.
inline constexpr std::int32_t kProvenanceNone = -1;
inline constexpr std::int32_t kProvenanceStatic = -2;

/// Ordered sequence of equally sized mini-batches of sample ids, stored flat.
/// `provenance[b]` tags batch `b` with the alternation that produced it.
struct SamplingSchedule {
  std::uint64_t dataset_size = 0;
  std::uint32_t batch_size = 0;
  std::vector<SampleId> ids;
  std::vector<std::int32_t> provenance;

  std::size_t num_batches() const {
    return batch_size == 0 ? 0 : ids.size() / batch_size;
  }
  std::size_t num_samples() const { return ids.size(); }
  bool empty() const { return ids.empty(); }

  MiniBatch batch(std::size_t b) const {
    return MiniBatch(ids.data() + b * batch_size, batch_size);
  }

  /// Batches [first, first + count) as a schedule sharing this one's header.
  SamplingSchedule slice(std::size_t first, std::size_t count) const;

  /// Appends another schedule's batches; header fields must agree.
  void append(const SamplingSchedule& other);

  void set_provenance(std::int32_t tag) {
    provenance.assign(num_batches(), tag);
  }

  /// Throws std::invalid_argument on any structural violation:
  /// ids not a whole number of batches, provenance length mismatch,
  /// or an id >= dataset_size.
  void validate() const;

  bool operator==(const SamplingSchedule&) const = default;
};

/// Multinomial over dataset indices: probs has one entry per sample id.
struct SamplingDistribution {
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }

  static SamplingDistribution uniform(std::size_t dataset_size);

  /// Throws std::invalid_argument unless all probs >= 0 and they sum
  /// to 1 within 1e-9.
  void validate() const;

  bool operator==(const SamplingDistribution&) const = default;
};

/// In-memory dataset: row-major feature matrices plus class labels for the
/// training split and a disjoint held-out validation split.
struct Dataset {
  std::size_t feature_dim = 0;
  std::uint32_t num_classes = 0;
  std::vector<double> train_features;
  std::vector<std::uint32_t> train_labels;
  std::vector<double> val_features;
  std::vector<std::uint32_t> val_labels;

  std::size_t num_train() const { return train_labels.size(); }
  std::size_t num_val() const { return val_labels.size(); }

  std::span<const double> train_row(SampleId id) const {
    return std::span<const double>(train_features.data() +
                                       static_cast<std::size_t>(id) * feature_dim,
                                   feature_dim);
  }
  std::span<const double> val_row(std::size_t i) const {
    return std::span<const double>(val_features.data() + i * feature_dim,
                                   feature_dim);
  }

  void validate() const;
};

}  // namespace autosampling
