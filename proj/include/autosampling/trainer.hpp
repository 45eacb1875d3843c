#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "autosampling/rng.hpp"
#include "autosampling/types.hpp"

namespace autosampling::trainer {

enum class ArchKind : std::uint8_t { kSoftmax = 0, kMlp = 1 };

/// Architecture descriptor: softmax regression, or one ReLU hidden layer.
struct Arch {
  ArchKind kind = ArchKind::kSoftmax;
  std::size_t feature_dim = 0;
  std::size_t hidden_dim = 0;  // used only for kMlp
  std::uint32_t num_classes = 0;

  std::size_t param_count() const;
  void validate() const;
  bool operator==(const Arch&) const = default;
};

/// Full training state of one child model: flat weights, matching momentum
/// buffers, and the number of train_step calls applied so far.
struct ModelState {
  Arch arch;
  std::vector<double> weights;
  std::vector<double> momentum;
  std::uint64_t step = 0;

  bool operator==(const ModelState&) const = default;
};

enum class LrScheduleKind : std::uint8_t { kConstant = 0, kStepDecay = 1, kCosine = 2 };

struct TrainHyper {
  double base_lr = 0.1;
  double momentum = 0.9;
  LrScheduleKind schedule = LrScheduleKind::kConstant;
  // Step decay: lr is multiplied by decay_factor at each boundary step.
  double decay_factor = 0.1;
  std::vector<std::uint64_t> decay_boundaries;
  // Cosine: anneals from base_lr to cosine_min_lr over cosine_total_steps.
  std::uint64_t cosine_total_steps = 0;
  double cosine_min_lr = 1e-4;

  double lr_at(std::uint64_t step) const;
  void validate() const;
};

struct EvalResult {
  double metric = 0.0;  // top-1 accuracy, exact correct/num ratio
  double loss = 0.0;
  std::size_t num_eval_samples = 0;
};

/// Weights ~ N(0, 1/fan_in) per layer in storage order, biases zero,
/// momentum zero, step 0. Deterministic given rng.
ModelState init_model(const Arch& arch, RngStream& rng);

/// One SGD-with-momentum update on the mean cross-entropy over the batch.
/// The learning rate is read from the schedule at the pre-update step
/// counter. Throws std::runtime_error (carrying the step counter) on a
/// non-finite loss or gradient.
ModelState train_step(const ModelState& model, MiniBatch batch,
                      const Dataset& dataset, const TrainHyper& hyper,
                      double* batch_loss_out = nullptr);

/// Mean cross-entropy over a batch without updating anything.
double batch_loss(const ModelState& model, MiniBatch batch,
                  const Dataset& dataset);

/// Mean cross-entropy gradient over a batch (same path train_step uses).
std::vector<double> batch_gradient(const ModelState& model, MiniBatch batch,
                                   const Dataset& dataset,
                                   double* loss_out = nullptr);

/// Softmax class probabilities for one feature row.
std::vector<double> class_probabilities(const ModelState& model,
                                        std::span<const double> features);

/// Top-1 accuracy and mean loss over the validation split, or over a
/// seeded without-replacement subsample of size eval_subset.
EvalResult evaluate(const ModelState& model, const Dataset& dataset,
                    std::optional<std::size_t> eval_subset = std::nullopt,
                    std::optional<RngStream> rng = std::nullopt);

/// Cross-entropy of every training sample, in SampleId order.
std::vector<double> per_sample_losses(const ModelState& model,
                                      const Dataset& dataset);

/// Gaussian cluster generator with controllable redundancy and label noise.
/// Each cluster contributes samples_per_cluster training points built from
/// samples_per_cluster / redundancy_factor base points, each duplicated
/// redundancy_factor times with tiny jitter. Exactly
/// floor(label_noise_fraction * num_train) uniformly chosen training labels
/// are flipped; the validation split is generated flip-free.
struct SyntheticSpec {
  std::uint32_t num_clusters = 5;
  std::size_t samples_per_cluster = 400;
  std::size_t feature_dim = 16;
  double cluster_separation = 3.0;
  std::uint32_t redundancy_factor = 1;
  double label_noise_fraction = 0.0;
  double val_fraction = 0.25;

  void validate() const;
};

struct SyntheticData {
  Dataset dataset;
  std::vector<SampleId> flipped_ids;  // sorted
};

SyntheticData gen_synthetic_dataset(const SyntheticSpec& spec, RngStream& rng);

// Model checkpoints in the shared binary artifact format.
void save_model(const ModelState& model, const std::filesystem::path& path);
ModelState load_model(const std::filesystem::path& path);
std::vector<std::uint8_t> model_to_bytes(const ModelState& model);

}  // namespace autosampling::trainer
