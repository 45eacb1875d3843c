#include "autosampling/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace autosampling::analysis {

namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw std::invalid_argument(what);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

std::uint64_t SegmentHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

SegmentHistogram segment_histogram(const SamplingSchedule& slice,
                                   std::size_t dataset_size,
                                   std::size_t num_segments) {
  if (num_segments == 0) invalid("segment_histogram: num_segments must be >= 1");
  if (dataset_size % num_segments != 0)
    invalid("segment_histogram: num_segments " + std::to_string(num_segments) +
            " does not divide dataset size " + std::to_string(dataset_size));
  SegmentHistogram h;
  h.num_segments = num_segments;
  h.segment_width = dataset_size / num_segments;
  h.counts.assign(num_segments, 0);
  for (SampleId id : slice.ids) {
    if (id >= dataset_size)
      invalid("segment_histogram: schedule id out of range");
    ++h.counts[id / h.segment_width];
  }
  h.ordering.resize(num_segments);
  std::iota(h.ordering.begin(), h.ordering.end(), std::size_t{0});
  return h;
}

std::vector<std::size_t> rank_by_counts(const SegmentHistogram& h) {
  std::vector<std::size_t> order(h.num_segments);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return h.counts[a] > h.counts[b];
  });
  return order;
}

void export_histogram_csv(const SegmentHistogram& h,
                          const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "position,segment,count\n";
  for (std::size_t pos = 0; pos < h.num_segments; ++pos) {
    const std::size_t seg = h.ordering[pos];
    out << pos << ',' << seg << ',' << h.counts[seg] << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

FreqLossTable frequency_loss_table(const SamplingSchedule& slice,
                                   const std::vector<double>& losses) {
  if (losses.size() != slice.dataset_size)
    invalid("frequency_loss_table: losses length must equal dataset size");
  FreqLossTable t;
  t.losses = losses;
  t.frequencies.assign(losses.size(), 0);
  for (SampleId id : slice.ids) ++t.frequencies[id];

  const std::size_t n = losses.size();
  double fmean = 0.0, lmean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    fmean += static_cast<double>(t.frequencies[i]);
    lmean += losses[i];
  }
  fmean /= static_cast<double>(n);
  lmean /= static_cast<double>(n);
  double sff = 0.0, sll = 0.0, sfl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double df = static_cast<double>(t.frequencies[i]) - fmean;
    const double dl = losses[i] - lmean;
    sff += df * df;
    sll += dl * dl;
    sfl += df * dl;
  }
  if (sff > 0.0 && sll > 0.0)
    t.correlation = sfl / std::sqrt(sff * sll);
  return t;
}

void export_freq_loss_csv(const FreqLossTable& t,
                          const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "sample_id,frequency,loss\n";
  for (std::size_t i = 0; i < t.losses.size(); ++i)
    out << i << ',' << t.frequencies[i] << ',' << format_double(t.losses[i])
        << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

SamplingSchedule make_static_schedule(const SamplingDistribution& p,
                                      std::size_t total_batches,
                                      std::uint32_t batch_size, RngStream& rng) {
  SamplingSchedule s = sampling::draw_schedule(p, total_batches, batch_size, rng);
  s.set_provenance(kProvenanceStatic);
  return s;
}

ReplayResult replay_run(const SamplingSchedule& schedule,
                        const trainer::Arch& arch,
                        const trainer::TrainHyper& hyper,
                        const Dataset& dataset, std::uint64_t seed) {
  schedule.validate();
  if (schedule.dataset_size != dataset.num_train())
    invalid("replay_run: schedule was recorded for a different dataset size");
  RngStream init_rng(seed, kStreamDomainInit, 0);
  ReplayResult r;
  r.model = trainer::init_model(arch, init_rng);
  for (std::size_t b = 0; b < schedule.num_batches(); ++b)
    r.model = trainer::train_step(r.model, schedule.batch(b), dataset, hyper);
  r.eval = trainer::evaluate(r.model, dataset);
  return r;
}

SamplingSchedule uniform_baseline_schedule(const search::SearchConfig& config,
                                           std::size_t dataset_size) {
  SamplingSchedule all;
  all.dataset_size = dataset_size;
  all.batch_size = config.batch_size;
  for (std::uint32_t a = 0; a < config.total_alternations; ++a) {
    RngStream rng(config.seed, kStreamDomainWorker, 0, a);
    SamplingSchedule part = sampling::draw_uniform_epoch_schedule(
        dataset_size, config.batches_per_alternation(), config.batch_size, rng);
    part.set_provenance(static_cast<std::int32_t>(a));
    all.append(part);
  }
  return all;
}

ReplayResult transfer_run(const SamplingDistribution& distribution,
                          const trainer::Arch& arch,
                          const search::SearchConfig& config,
                          const Dataset& dataset) {
  RngStream rng(config.seed, kStreamDomainStatic, 0);
  SamplingSchedule schedule = make_static_schedule(
      distribution, config.total_batches(), config.batch_size, rng);
  return replay_run(schedule, arch, config.hyper, dataset, config.seed);
}

ComparisonTable compare_conditions(const search::SearchConfig& config,
                                   const Dataset& dataset,
                                   const std::vector<std::uint64_t>& seeds) {
  if (seeds.size() < 2)
    invalid("compare_conditions: at least 2 seeds required");

  ComparisonTable table;
  table.seeds = seeds;
  table.conditions = {"UNIFORM", "STATIC", "DYNAMIC"};
  table.metrics.assign(3, std::vector<double>(seeds.size(), 0.0));
  table.total_train_samples = config.total_samples();

  for (std::size_t si = 0; si < seeds.size(); ++si) {
    search::SearchConfig cfg = config;
    cfg.seed = seeds[si];

    search::RunResult dynamic = search::run_autosampling(cfg, dataset);
    table.metrics[2][si] = dynamic.final_eval.metric;

    ReplayResult st = transfer_run(dynamic.distribution, cfg.arch, cfg, dataset);
    table.metrics[1][si] = st.eval.metric;

    SamplingSchedule uni = uniform_baseline_schedule(cfg, dataset.num_train());
    ReplayResult u = replay_run(uni, cfg.arch, cfg.hyper, dataset, cfg.seed);
    table.metrics[0][si] = u.eval.metric;
  }

  for (const auto& row : table.metrics) {
    table.means.push_back(mean_of(row));
    table.stddevs.push_back(stddev_of(row));
  }
  return table;
}

void export_comparison_csv(const ComparisonTable& t,
                           const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "condition";
  for (std::uint64_t s : t.seeds) out << ",seed_" << s;
  out << ",mean,stddev\n";
  for (std::size_t c = 0; c < t.conditions.size(); ++c) {
    out << t.conditions[c];
    for (double m : t.metrics[c]) out << ',' << format_double(m);
    out << ',' << format_double(t.means[c]) << ','
        << format_double(t.stddevs[c]) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace autosampling::analysis
