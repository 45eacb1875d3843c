#include "autosampling/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "autosampling/serialize.hpp"

namespace autosampling::trainer {

namespace {

constexpr std::uint32_t kModelMagic = 0x41534D44;  // "ASMD"
constexpr std::uint32_t kModelVersion = 1;

[[noreturn]] void invalid(const std::string& what) {
  throw std::invalid_argument(what);
}

// Flat weight layout.
//   softmax: W [c x fd], b [c]
//   mlp:     W1 [h x fd], b1 [h], W2 [c x h], b2 [c]
// Matrices are row-major; row k of W holds the weights of output unit k.
struct Layout {
  std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;
};

Layout layout_of(const Arch& a) {
  Layout l;
  if (a.kind == ArchKind::kSoftmax) {
    l.w2 = 0;
    l.b2 = a.num_classes * a.feature_dim;
  } else {
    l.w1 = 0;
    l.b1 = a.hidden_dim * a.feature_dim;
    l.w2 = l.b1 + a.hidden_dim;
    l.b2 = l.w2 + a.num_classes * a.hidden_dim;
  }
  return l;
}

double logsumexp(const std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

// Forward pass for one sample. `hidden` is filled for MLPs with the
// post-ReLU activations; logits always come back in `z`.
void forward(const ModelState& model, std::span<const double> x,
             std::vector<double>& hidden, std::vector<double>& z) {
  const Arch& a = model.arch;
  const Layout l = layout_of(a);
  const double* w = model.weights.data();
  z.assign(a.num_classes, 0.0);
  if (a.kind == ArchKind::kSoftmax) {
    for (std::uint32_t k = 0; k < a.num_classes; ++k) {
      double acc = w[l.b2 + k];
      const double* row = w + l.w2 + static_cast<std::size_t>(k) * a.feature_dim;
      for (std::size_t j = 0; j < a.feature_dim; ++j) acc += row[j] * x[j];
      z[k] = acc;
    }
    return;
  }
  hidden.assign(a.hidden_dim, 0.0);
  for (std::size_t m = 0; m < a.hidden_dim; ++m) {
    double acc = w[l.b1 + m];
    const double* row = w + l.w1 + m * a.feature_dim;
    for (std::size_t j = 0; j < a.feature_dim; ++j) acc += row[j] * x[j];
    hidden[m] = acc > 0.0 ? acc : 0.0;
  }
  for (std::uint32_t k = 0; k < a.num_classes; ++k) {
    double acc = w[l.b2 + k];
    const double* row = w + l.w2 + static_cast<std::size_t>(k) * a.hidden_dim;
    for (std::size_t m = 0; m < a.hidden_dim; ++m) acc += row[m] * hidden[m];
    z[k] = acc;
  }
}

double sample_loss(const ModelState& model, std::span<const double> x,
                   std::uint32_t label, std::vector<double>& hidden,
                   std::vector<double>& z) {
  forward(model, x, hidden, z);
  return logsumexp(z) - z[label];
}

}  // namespace

std::size_t Arch::param_count() const {
  if (kind == ArchKind::kSoftmax)
    return feature_dim * num_classes + num_classes;
  return feature_dim * hidden_dim + hidden_dim + hidden_dim * num_classes +
         num_classes;
}

void Arch::validate() const {
  if (feature_dim == 0) invalid("arch: feature_dim must be >= 1");
  if (num_classes == 0) invalid("arch: num_classes must be >= 1");
  if (kind == ArchKind::kMlp && hidden_dim == 0)
    invalid("arch: hidden_dim must be >= 1 for mlp");
}

double TrainHyper::lr_at(std::uint64_t step) const {
  switch (schedule) {
    case LrScheduleKind::kConstant:
      return base_lr;
    case LrScheduleKind::kStepDecay: {
      double lr = base_lr;
      for (std::uint64_t b : decay_boundaries)
        if (step >= b) lr *= decay_factor;
      return lr;
    }
    case LrScheduleKind::kCosine: {
      if (cosine_total_steps == 0 || step >= cosine_total_steps)
        return cosine_min_lr;
      const double t = static_cast<double>(step) /
                       static_cast<double>(cosine_total_steps);
      return cosine_min_lr +
             0.5 * (base_lr - cosine_min_lr) * (1.0 + std::cos(M_PI * t));
    }
  }
  return base_lr;
}

void TrainHyper::validate() const {
  if (!(base_lr > 0.0)) invalid("hyper: base_lr must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0))
    invalid("hyper: momentum must be in [0, 1)");
  if (schedule == LrScheduleKind::kStepDecay && !(decay_factor > 0.0))
    invalid("hyper: decay_factor must be > 0");
  if (schedule == LrScheduleKind::kCosine) {
    if (cosine_total_steps == 0) invalid("hyper: cosine_total_steps must be >= 1");
    if (!(cosine_min_lr > 0.0)) invalid("hyper: cosine_min_lr must be > 0");
  }
}

ModelState init_model(const Arch& arch, RngStream& rng) {
  arch.validate();
  ModelState m;
  m.arch = arch;
  m.weights.assign(arch.param_count(), 0.0);
  m.momentum.assign(arch.param_count(), 0.0);
  const Layout l = layout_of(arch);
  if (arch.kind == ArchKind::kSoftmax) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(arch.feature_dim));
    for (std::size_t i = 0; i < arch.num_classes * arch.feature_dim; ++i)
      m.weights[l.w2 + i] = scale * rng.next_gaussian();
  } else {
    const double s1 = 1.0 / std::sqrt(static_cast<double>(arch.feature_dim));
    for (std::size_t i = 0; i < arch.hidden_dim * arch.feature_dim; ++i)
      m.weights[l.w1 + i] = s1 * rng.next_gaussian();
    const double s2 = 1.0 / std::sqrt(static_cast<double>(arch.hidden_dim));
    for (std::size_t i = 0; i < arch.num_classes * arch.hidden_dim; ++i)
      m.weights[l.w2 + i] = s2 * rng.next_gaussian();
  }
  return m;
}

std::vector<double> batch_gradient(const ModelState& model, MiniBatch batch,
                                   const Dataset& dataset, double* loss_out) {
  const Arch& a = model.arch;
  const Layout l = layout_of(a);
  std::vector<double> grad(a.param_count(), 0.0);
  std::vector<double> hidden, z, probs(a.num_classes), dhidden;
  double loss = 0.0;
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  for (SampleId id : batch) {
    auto x = dataset.train_row(id);
    const std::uint32_t y = dataset.train_labels[id];
    forward(model, x, hidden, z);
    const double lse = logsumexp(z);
    loss += (lse - z[y]) * inv_b;
    for (std::uint32_t k = 0; k < a.num_classes; ++k)
      probs[k] = std::exp(z[k] - lse);

    if (a.kind == ArchKind::kSoftmax) {
      for (std::uint32_t k = 0; k < a.num_classes; ++k) {
        const double dz = (probs[k] - (k == y ? 1.0 : 0.0)) * inv_b;
        double* grow = grad.data() + l.w2 + static_cast<std::size_t>(k) * a.feature_dim;
        for (std::size_t j = 0; j < a.feature_dim; ++j) grow[j] += dz * x[j];
        grad[l.b2 + k] += dz;
      }
      continue;
    }

    dhidden.assign(a.hidden_dim, 0.0);
    for (std::uint32_t k = 0; k < a.num_classes; ++k) {
      const double dz = (probs[k] - (k == y ? 1.0 : 0.0)) * inv_b;
      double* grow = grad.data() + l.w2 + static_cast<std::size_t>(k) * a.hidden_dim;
      const double* wrow =
          model.weights.data() + l.w2 + static_cast<std::size_t>(k) * a.hidden_dim;
      for (std::size_t m = 0; m < a.hidden_dim; ++m) {
        grow[m] += dz * hidden[m];
        dhidden[m] += dz * wrow[m];
      }
      grad[l.b2 + k] += dz;
    }
    for (std::size_t m = 0; m < a.hidden_dim; ++m) {
      if (hidden[m] <= 0.0) continue;  // ReLU gate
      double* grow = grad.data() + l.w1 + m * a.feature_dim;
      for (std::size_t j = 0; j < a.feature_dim; ++j)
        grow[j] += dhidden[m] * x[j];
      grad[l.b1 + m] += dhidden[m];
    }
  }
  if (loss_out != nullptr) *loss_out = loss;
  return grad;
}

double batch_loss(const ModelState& model, MiniBatch batch,
                  const Dataset& dataset) {
  std::vector<double> hidden, z;
  double loss = 0.0;
  for (SampleId id : batch)
    loss += sample_loss(model, dataset.train_row(id), dataset.train_labels[id],
                        hidden, z);
  return loss / static_cast<double>(batch.size());
}

ModelState train_step(const ModelState& model, MiniBatch batch,
                      const Dataset& dataset, const TrainHyper& hyper,
                      double* batch_loss_out) {
  if (batch.empty()) invalid("train_step: empty batch");
  double loss = 0.0;
  std::vector<double> grad = batch_gradient(model, batch, dataset, &loss);
  if (!std::isfinite(loss)) {
    std::ostringstream msg;
    msg << "train_step: non-finite loss at step " << model.step;
    throw std::runtime_error(msg.str());
  }
  for (double g : grad) {
    if (!std::isfinite(g)) {
      std::ostringstream msg;
      msg << "train_step: non-finite gradient at step " << model.step;
      throw std::runtime_error(msg.str());
    }
  }

  const double lr = hyper.lr_at(model.step);
  ModelState next = model;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    next.momentum[i] = hyper.momentum * next.momentum[i] + grad[i];
    next.weights[i] -= lr * next.momentum[i];
  }
  next.step = model.step + 1;
  if (batch_loss_out != nullptr) *batch_loss_out = loss;
  return next;
}

std::vector<double> class_probabilities(const ModelState& model,
                                        std::span<const double> features) {
  std::vector<double> hidden, z;
  forward(model, features, hidden, z);
  const double lse = logsumexp(z);
  std::vector<double> probs(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) probs[k] = std::exp(z[k] - lse);
  return probs;
}

EvalResult evaluate(const ModelState& model, const Dataset& dataset,
                    std::optional<std::size_t> eval_subset,
                    std::optional<RngStream> rng) {
  if (dataset.num_val() == 0)
    invalid("evaluate: validation split is empty");

  std::vector<std::size_t> indices(dataset.num_val());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  if (eval_subset && *eval_subset > 0 && *eval_subset < indices.size()) {
    if (!rng) invalid("evaluate: eval_subset requires an rng");
    // Partial Fisher-Yates: the first eval_subset entries form the sample.
    for (std::size_t i = 0; i < *eval_subset; ++i) {
      std::size_t j = i + static_cast<std::size_t>(
                              rng->uniform_below(indices.size() - i));
      std::swap(indices[i], indices[j]);
    }
    indices.resize(*eval_subset);
  }

  std::vector<double> hidden, z;
  std::size_t correct = 0;
  double loss = 0.0;
  for (std::size_t i : indices) {
    forward(model, dataset.val_row(i), hidden, z);
    const double lse = logsumexp(z);
    const std::uint32_t y = dataset.val_labels[i];
    loss += lse - z[y];
    std::size_t best = 0;
    for (std::size_t k = 1; k < z.size(); ++k)
      if (z[k] > z[best]) best = k;
    if (best == y) ++correct;
  }
  EvalResult r;
  r.num_eval_samples = indices.size();
  r.metric = static_cast<double>(correct) / static_cast<double>(indices.size());
  r.loss = loss / static_cast<double>(indices.size());
  return r;
}

std::vector<double> per_sample_losses(const ModelState& model,
                                      const Dataset& dataset) {
  std::vector<double> losses(dataset.num_train());
  std::vector<double> hidden, z;
  for (std::size_t i = 0; i < dataset.num_train(); ++i)
    losses[i] = sample_loss(model, dataset.train_row(static_cast<SampleId>(i)),
                            dataset.train_labels[i], hidden, z);
  return losses;
}

void SyntheticSpec::validate() const {
  if (num_clusters == 0) invalid("synthetic: num_clusters must be >= 1");
  if (samples_per_cluster == 0) invalid("synthetic: samples_per_cluster must be >= 1");
  if (feature_dim == 0) invalid("synthetic: feature_dim must be >= 1");
  if (!(cluster_separation > 0.0)) invalid("synthetic: cluster_separation must be > 0");
  if (redundancy_factor == 0) invalid("synthetic: redundancy_factor must be >= 1");
  if (samples_per_cluster % redundancy_factor != 0)
    invalid("synthetic: redundancy_factor must divide samples_per_cluster");
  if (!(label_noise_fraction >= 0.0 && label_noise_fraction < 1.0))
    invalid("synthetic: label_noise_fraction must be in [0, 1)");
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    invalid("synthetic: val_fraction must be in (0, 1)");
}

SyntheticData gen_synthetic_dataset(const SyntheticSpec& spec, RngStream& rng) {
  spec.validate();
  SyntheticData out;
  Dataset& d = out.dataset;
  d.feature_dim = spec.feature_dim;
  d.num_classes = spec.num_clusters;

  std::vector<double> centers(spec.num_clusters * spec.feature_dim);
  for (double& c : centers) c = spec.cluster_separation * rng.next_gaussian();

  const std::size_t num_train =
      static_cast<std::size_t>(spec.num_clusters) * spec.samples_per_cluster;
  const std::size_t base_per_cluster =
      spec.samples_per_cluster / spec.redundancy_factor;
  constexpr double kJitterSigma = 0.01;

  d.train_features.reserve(num_train * spec.feature_dim);
  d.train_labels.reserve(num_train);
  std::vector<double> base(spec.feature_dim);
  for (std::uint32_t k = 0; k < spec.num_clusters; ++k) {
    const double* center = centers.data() +
                           static_cast<std::size_t>(k) * spec.feature_dim;
    for (std::size_t b = 0; b < base_per_cluster; ++b) {
      for (std::size_t j = 0; j < spec.feature_dim; ++j)
        base[j] = center[j] + rng.next_gaussian();
      for (std::uint32_t r = 0; r < spec.redundancy_factor; ++r) {
        for (std::size_t j = 0; j < spec.feature_dim; ++j)
          d.train_features.push_back(base[j] + kJitterSigma * rng.next_gaussian());
        d.train_labels.push_back(k);
      }
    }
  }

  const std::size_t num_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(spec.val_fraction *
                                      static_cast<double>(num_train) +
                                  0.5));
  d.val_features.reserve(num_val * spec.feature_dim);
  d.val_labels.reserve(num_val);
  for (std::size_t i = 0; i < num_val; ++i) {
    const std::uint32_t k = static_cast<std::uint32_t>(i % spec.num_clusters);
    const double* center = centers.data() +
                           static_cast<std::size_t>(k) * spec.feature_dim;
    for (std::size_t j = 0; j < spec.feature_dim; ++j)
      d.val_features.push_back(center[j] + rng.next_gaussian());
    d.val_labels.push_back(k);
  }

  // Exact flip count, not i.i.d. coin flips.
  const std::size_t num_flips = static_cast<std::size_t>(
      spec.label_noise_fraction * static_cast<double>(num_train));
  if (num_flips > 0) {
    std::vector<SampleId> all(num_train);
    std::iota(all.begin(), all.end(), SampleId{0});
    for (std::size_t i = 0; i < num_flips; ++i) {
      std::size_t j =
          i + static_cast<std::size_t>(rng.uniform_below(all.size() - i));
      std::swap(all[i], all[j]);
    }
    all.resize(num_flips);
    std::sort(all.begin(), all.end());
    for (SampleId id : all) {
      const std::uint32_t old_label = d.train_labels[id];
      std::uint32_t wrong = static_cast<std::uint32_t>(
          rng.uniform_below(spec.num_clusters - 1));
      if (wrong >= old_label) ++wrong;
      d.train_labels[id] = wrong;
    }
    out.flipped_ids = std::move(all);
  }

  d.validate();
  return out;
}

std::vector<std::uint8_t> model_to_bytes(const ModelState& model) {
  BinaryWriter w;
  w.u32(kModelMagic);
  w.u32(kModelVersion);
  w.u8(static_cast<std::uint8_t>(model.arch.kind));
  w.u64(model.arch.feature_dim);
  w.u64(model.arch.hidden_dim);
  w.u32(model.arch.num_classes);
  w.u64(model.step);
  w.u64(model.weights.size());
  for (double v : model.weights) w.f64(v);
  for (double v : model.momentum) w.f64(v);
  return w.bytes();
}

void save_model(const ModelState& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  auto bytes = model_to_bytes(model);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ModelState load_model(const std::filesystem::path& path) {
  auto r = BinaryReader::from_file(path);
  if (r.u32() != kModelMagic) r.fail("bad magic, not a model checkpoint");
  if (std::uint32_t v = r.u32(); v != kModelVersion)
    r.fail("unsupported model format version " + std::to_string(v));
  ModelState m;
  m.arch.kind = static_cast<ArchKind>(r.u8());
  m.arch.feature_dim = r.u64();
  m.arch.hidden_dim = r.u64();
  m.arch.num_classes = r.u32();
  m.step = r.u64();
  const std::uint64_t n = r.u64();
  if (n != m.arch.param_count())
    r.fail("weight count does not match architecture");
  m.weights.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) m.weights.push_back(r.f64());
  m.momentum.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) m.momentum.push_back(r.f64());
  r.expect_end();
  return m;
}

}  // namespace autosampling::trainer
