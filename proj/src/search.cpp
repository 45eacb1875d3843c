#include "autosampling/search.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace autosampling::search {

namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw std::invalid_argument(what);
}

std::uint32_t resolve_threads(std::uint32_t requested, std::size_t jobs) {
  std::uint32_t hw = std::max(1u, std::thread::hardware_concurrency());
  std::uint32_t cap = requested == 0 ? hw : std::min(requested, hw);
  return static_cast<std::uint32_t>(std::min<std::size_t>(cap, jobs));
}

// Runs fn(0..n-1) on up to num_threads threads. Results must not depend on
// scheduling; the first exception aborts the batch and is rethrown here.
void parallel_for(std::size_t n, std::uint32_t num_threads,
                  const std::function<void(std::size_t)>& fn) {
  const std::uint32_t threads = resolve_threads(num_threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::uint32_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

std::string to_string(ExplorationType t) {
  switch (t) {
    case ExplorationType::kUniform: return "uniform";
    case ExplorationType::kRandom: return "random";
    case ExplorationType::kMixture: return "mixture";
  }
  return "unknown";
}

ExplorationType exploration_from_string(const std::string& s) {
  if (s == "uniform") return ExplorationType::kUniform;
  if (s == "random") return ExplorationType::kRandom;
  if (s == "mixture") return ExplorationType::kMixture;
  invalid("unknown exploration type '" + s + "' (uniform|random|mixture)");
}

void SearchConfig::validate() const {
  if (population_size == 0) invalid("config: population_size must be >= 1");
  if (intervals_per_exploitation == 0) invalid("config: intervals_per_exploitation must be >= 1");
  if (interval_len == 0) invalid("config: interval_len must be >= 1");
  if (batch_size == 0) invalid("config: batch_size must be >= 1");
  if (total_alternations == 0) invalid("config: total_alternations must be >= 1");
  smoothing.validate();
  arch.validate();
  hyper.validate();
}

SearchConfig SearchConfig::effective() const {
  SearchConfig c = *this;
  if (c.exploration == ExplorationType::kUniform) c.population_size = 1;
  return c;
}

std::uint32_t select_winner(const std::vector<double>& metrics) {
  if (metrics.empty()) invalid("select_winner: no metrics");
  std::uint32_t best = 0;
  for (std::uint32_t i = 1; i < metrics.size(); ++i)
    if (metrics[i] > metrics[best]) best = i;
  return best;
}

ChildState run_interval(ChildState child, const Dataset& dataset,
                        const trainer::TrainHyper& hyper) {
  for (std::size_t b = 0; b < child.sub_schedule.num_batches(); ++b)
    child.model = trainer::train_step(child.model, child.sub_schedule.batch(b),
                                      dataset, hyper);
  return child;
}

ExploitRecord exploit(std::vector<ChildState>& population,
                      const Dataset& dataset, const EvalSettings& eval,
                      std::uint32_t num_threads) {
  if (population.empty()) invalid("exploit: empty population");

  // All children are scored on the same validation subsample, so the copies
  // of this stream must start identical.
  RngStream eval_rng(eval.seed, kStreamDomainEval, eval.stream_index);
  std::optional<std::size_t> subset;
  if (eval.eval_subset > 0) subset = eval.eval_subset;

  std::vector<trainer::EvalResult> results(population.size());
  parallel_for(population.size(), num_threads, [&](std::size_t i) {
    results[i] = trainer::evaluate(population[i].model, dataset, subset,
                                   subset ? std::optional<RngStream>(eval_rng)
                                          : std::nullopt);
  });

  ExploitRecord record;
  record.child_metrics.resize(population.size());
  for (std::size_t i = 0; i < population.size(); ++i)
    record.child_metrics[i] = results[i].metric;
  record.winner = select_winner(record.child_metrics);
  record.winner_metric = record.child_metrics[record.winner];
  record.winner_loss = results[record.winner].loss;
  record.global_step = population[record.winner].model.step;
  record.winner_sub_schedule = population[record.winner].sub_schedule;

  const trainer::ModelState winner_state = population[record.winner].model;
  for (ChildState& child : population) child.model = winner_state;
  return record;
}

SamplingSchedule multi_exploitation(std::vector<ChildState>& population,
                                    const std::vector<SamplingSchedule>& worker_schedules,
                                    const SearchConfig& config,
                                    const Dataset& dataset,
                                    std::uint32_t alternation,
                                    std::vector<ExploitRecord>& records,
                                    const RunHooks& hooks) {
  if (worker_schedules.size() != population.size())
    invalid("multi_exploitation: one schedule per child required");
  const std::size_t t_intervals = config.intervals_per_exploitation;
  const std::size_t n_s = config.interval_len;
  for (const auto& s : worker_schedules)
    if (s.num_batches() != t_intervals * n_s)
      invalid("multi_exploitation: schedule must hold T*N_s batches");

  SamplingSchedule h_star;
  h_star.dataset_size = dataset.num_train();
  h_star.batch_size = config.batch_size;

  for (std::uint32_t t = 0; t < t_intervals; ++t) {
    try {
      for (std::size_t i = 0; i < population.size(); ++i)
        population[i].sub_schedule = worker_schedules[i].slice(t * n_s, n_s);

      parallel_for(population.size(), config.num_threads, [&](std::size_t i) {
        population[i] =
            run_interval(std::move(population[i]), dataset, config.hyper);
      });

      EvalSettings eval;
      eval.eval_subset = config.eval_subset;
      eval.seed = config.seed;
      eval.stream_index =
          static_cast<std::uint64_t>(alternation) * t_intervals + t;
      ExploitRecord record = exploit(population, dataset, eval, config.num_threads);
      record.alternation = alternation;
      record.interval = t;

      h_star.append(record.winner_sub_schedule);
      records.push_back(std::move(record));
      if (hooks.after_exploit) hooks.after_exploit(records.back(), population);
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "alternation " << alternation << ", interval " << t << ": "
          << e.what();
      throw std::runtime_error(msg.str());
    }
  }
  return h_star;
}

ExploreResult explore(const SamplingSchedule* h_star,
                      const SamplingDistribution& prev_distribution,
                      const SearchConfig& config, std::uint32_t alternation,
                      std::size_t dataset_size) {
  const std::size_t num_batches = config.batches_per_alternation();
  const bool in_warmup =
      static_cast<std::uint64_t>(alternation) * num_batches <
      config.warmup_batches;

  ExploreResult out;
  const std::uint32_t workers = config.population_size;
  out.worker_schedules.reserve(workers);

  auto draw_epoch = [&](std::uint32_t worker) {
    RngStream rng(config.seed, kStreamDomainWorker, worker, alternation);
    return sampling::draw_uniform_epoch_schedule(dataset_size, num_batches,
                                                 config.batch_size, rng);
  };

  switch (config.exploration) {
    case ExplorationType::kUniform: {
      out.worker_schedules.push_back(draw_epoch(0));
      out.distribution = SamplingDistribution::uniform(dataset_size);
      break;
    }
    case ExplorationType::kRandom: {
      for (std::uint32_t i = 0; i < workers; ++i)
        out.worker_schedules.push_back(draw_epoch(i));
      out.distribution = SamplingDistribution::uniform(dataset_size);
      break;
    }
    case ExplorationType::kMixture: {
      if (in_warmup) {
        // No usable statistics yet: behave like random exploration and keep
        // the sampling distribution uniform.
        for (std::uint32_t i = 0; i < workers; ++i)
          out.worker_schedules.push_back(draw_epoch(i));
        out.distribution = prev_distribution;
        break;
      }
      SamplingDistribution p =
          (h_star != nullptr && !h_star->empty())
              ? sampling::estimate_distribution(*h_star, dataset_size)
              : prev_distribution;
      SamplingDistribution smoothed =
          sampling::smooth_distribution(p, config.smoothing);
      for (std::uint32_t i = 0; i < workers; ++i) {
        RngStream rng(config.seed, kStreamDomainWorker, i, alternation);
        out.worker_schedules.push_back(sampling::draw_schedule(
            smoothed, num_batches, config.batch_size, rng));
      }
      out.distribution = std::move(smoothed);
      break;
    }
  }
  for (auto& s : out.worker_schedules)
    s.set_provenance(static_cast<std::int32_t>(alternation));
  return out;
}

RunResult run_autosampling(const SearchConfig& config, const Dataset& dataset,
                           const RunHooks& hooks) {
  const SearchConfig cfg = config.effective();
  cfg.validate();
  dataset.validate();
  if (dataset.num_val() == 0)
    invalid("run_autosampling: dataset needs a validation split");
  if (dataset.num_train() < cfg.batch_size)
    invalid("run_autosampling: dataset smaller than one batch");

  RngStream init_rng(cfg.seed, kStreamDomainInit, 0);
  const trainer::ModelState initial = trainer::init_model(cfg.arch, init_rng);

  std::vector<ChildState> population;
  population.reserve(cfg.population_size);
  for (std::uint32_t i = 0; i < cfg.population_size; ++i)
    population.push_back(ChildState{
        i, initial, SamplingSchedule{},
        RngStream(cfg.seed, kStreamDomainWorker, i, 0)});

  RunResult result;
  result.h_star.dataset_size = dataset.num_train();
  result.h_star.batch_size = cfg.batch_size;

  SamplingDistribution current =
      SamplingDistribution::uniform(dataset.num_train());
  SamplingSchedule last_h;

  for (std::uint32_t a = 0; a < cfg.total_alternations; ++a) {
    try {
      ExploreResult ex = explore(last_h.empty() ? nullptr : &last_h, current,
                                 cfg, a, dataset.num_train());
      current = std::move(ex.distribution);
      for (std::size_t i = 0; i < population.size(); ++i)
        population[i].rng = RngStream(cfg.seed, kStreamDomainWorker,
                                      population[i].worker_index, a);
      last_h = multi_exploitation(population, ex.worker_schedules, cfg,
                                  dataset, a, result.records, hooks);
      result.h_star.append(last_h);
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "run_autosampling failed at alternation " << a << ": " << e.what();
      throw std::runtime_error(msg.str());
    }
  }

  result.distribution =
      sampling::estimate_distribution(result.h_star, dataset.num_train());
  result.model = population.front().model;
  result.final_eval = trainer::evaluate(result.model, dataset);
  return result;
}

std::string record_to_json_line(const ExploitRecord& r) {
  nlohmann::json j;
  j["alternation"] = r.alternation;
  j["interval"] = r.interval;
  j["global_step"] = r.global_step;
  j["winner"] = r.winner;
  j["winner_metric"] = r.winner_metric;
  j["winner_loss"] = r.winner_loss;
  j["child_metrics"] = r.child_metrics;
  j["batch_size"] = r.winner_sub_schedule.batch_size;
  j["dataset_size"] = r.winner_sub_schedule.dataset_size;
  j["winner_sub_ids"] = r.winner_sub_schedule.ids;
  return j.dump();
}

std::vector<ExploitRecord> parse_run_log(const std::string& text) {
  std::vector<ExploitRecord> records;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    ExploitRecord r;
    r.alternation = j.at("alternation").get<std::uint32_t>();
    r.interval = j.at("interval").get<std::uint32_t>();
    r.global_step = j.at("global_step").get<std::uint64_t>();
    r.winner = j.at("winner").get<std::uint32_t>();
    r.winner_metric = j.at("winner_metric").get<double>();
    r.winner_loss = j.at("winner_loss").get<double>();
    r.child_metrics = j.at("child_metrics").get<std::vector<double>>();
    r.winner_sub_schedule.batch_size = j.at("batch_size").get<std::uint32_t>();
    r.winner_sub_schedule.dataset_size = j.at("dataset_size").get<std::uint64_t>();
    r.winner_sub_schedule.ids = j.at("winner_sub_ids").get<std::vector<SampleId>>();
    r.winner_sub_schedule.set_provenance(static_cast<std::int32_t>(r.alternation));
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace autosampling::search
