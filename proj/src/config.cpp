#include "autosampling/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace autosampling::cli {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

struct IniData {
  // section -> key -> (value, consumed)
  std::map<std::string, std::map<std::string, std::pair<std::string, bool>>> sections;
  std::string origin;

  bool has(const std::string& section, const std::string& key) {
    auto s = sections.find(section);
    return s != sections.end() && s->second.count(key) > 0;
  }

  std::string take(const std::string& section, const std::string& key) {
    auto& entry = sections[section][key];
    entry.second = true;
    return entry.first;
  }
};

IniData parse_ini(const std::string& text, const std::string& origin) {
  IniData ini;
  ini.origin = origin;
  std::istringstream in(text);
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(line_no) +
                          ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    ini.sections[section][key] = {value, false};
  }
  return ini;
}

[[noreturn]] void field_error(const IniData& ini, const std::string& section,
                              const std::string& key, const std::string& what) {
  throw ConfigError(ini.origin + ": [" + section + "] " + key + ": " + what);
}

template <typename T>
T parse_number(IniData& ini, const std::string& section, const std::string& key,
               T fallback) {
  if (!ini.has(section, key)) return fallback;
  const std::string raw = ini.take(section, key);
  std::istringstream is(raw);
  T value{};
  is >> value;
  if (is.fail() || !is.eof())
    field_error(ini, section, key, "cannot parse '" + raw + "'");
  return value;
}

std::string parse_string(IniData& ini, const std::string& section,
                         const std::string& key, const std::string& fallback) {
  if (!ini.has(section, key)) return fallback;
  return ini.take(section, key);
}

std::vector<std::uint64_t> parse_u64_list(IniData& ini, const std::string& section,
                                          const std::string& key) {
  std::vector<std::uint64_t> out;
  if (!ini.has(section, key)) return out;
  const std::string raw = ini.take(section, key);
  std::istringstream is(raw);
  std::string item;
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stoull(item));
    } catch (const std::exception&) {
      field_error(ini, section, key, "cannot parse list item '" + item + "'");
    }
  }
  return out;
}

void reject_unknown(const IniData& ini) {
  static const std::map<std::string, int> known_sections = {
      {"search", 0}, {"smoothing", 0}, {"trainer", 0}, {"dataset", 0}};
  for (const auto& [section, keys] : ini.sections) {
    if (known_sections.count(section) == 0)
      throw ConfigError(ini.origin + ": unknown section [" + section + "]");
    for (const auto& [key, entry] : keys)
      if (!entry.second)
        throw ConfigError(ini.origin + ": unknown key '" + key +
                          "' in section [" + section + "]");
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    search.smoothing.validate();
    search.hyper.validate();
    if (search.population_size == 0 || search.intervals_per_exploitation == 0 ||
        search.interval_len == 0 || search.batch_size == 0 ||
        search.total_alternations == 0)
      throw std::invalid_argument(
          "population_size, intervals_per_exploitation, interval_len, "
          "batch_size and total_alternations must all be >= 1");
    if (dataset.source == DatasetSource::kSynthetic) {
      dataset.synthetic.validate();
    } else {
      if (dataset.train_csv.empty() || dataset.val_csv.empty())
        throw std::invalid_argument("csv dataset requires train_csv and val_csv");
    }
    if (search.arch.kind == trainer::ArchKind::kMlp &&
        search.arch.hidden_dim == 0)
      throw std::invalid_argument("mlp architecture requires hidden_dim >= 1");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

ExperimentConfig parse_config(const std::string& text,
                              const std::string& origin) {
  IniData ini = parse_ini(text, origin);
  ExperimentConfig c;
  auto& s = c.search;

  s.population_size = parse_number<std::uint32_t>(ini, "search", "population_size", s.population_size);
  s.intervals_per_exploitation = parse_number<std::uint32_t>(
      ini, "search", "intervals_per_exploitation", s.intervals_per_exploitation);
  s.interval_len = parse_number<std::uint32_t>(ini, "search", "interval_len", s.interval_len);
  s.batch_size = parse_number<std::uint32_t>(ini, "search", "batch_size", s.batch_size);
  s.warmup_batches = parse_number<std::uint64_t>(ini, "search", "warmup_batches", s.warmup_batches);
  s.total_alternations = parse_number<std::uint32_t>(ini, "search", "total_alternations", s.total_alternations);
  s.seed = parse_number<std::uint64_t>(ini, "search", "seed", s.seed);
  s.eval_subset = parse_number<std::size_t>(ini, "search", "eval_subset", s.eval_subset);
  s.num_threads = parse_number<std::uint32_t>(ini, "search", "num_threads", s.num_threads);
  const std::string exploration =
      parse_string(ini, "search", "exploration", to_string(s.exploration));
  try {
    s.exploration = search::exploration_from_string(exploration);
  } catch (const std::invalid_argument& e) {
    field_error(ini, "search", "exploration", e.what());
  }

  s.smoothing.beta = parse_number<double>(ini, "smoothing", "beta", s.smoothing.beta);
  s.smoothing.n_uniform = parse_number<std::uint32_t>(ini, "smoothing", "n_uniform", s.smoothing.n_uniform);

  const std::string arch = parse_string(ini, "trainer", "arch", "softmax");
  if (arch == "softmax") {
    s.arch.kind = trainer::ArchKind::kSoftmax;
  } else if (arch == "mlp") {
    s.arch.kind = trainer::ArchKind::kMlp;
  } else {
    field_error(ini, "trainer", "arch", "expected softmax or mlp, got '" + arch + "'");
  }
  s.arch.hidden_dim = parse_number<std::size_t>(ini, "trainer", "hidden_dim", 32);
  s.hyper.base_lr = parse_number<double>(ini, "trainer", "base_lr", s.hyper.base_lr);
  s.hyper.momentum = parse_number<double>(ini, "trainer", "momentum", s.hyper.momentum);
  const std::string sched = parse_string(ini, "trainer", "lr_schedule", "constant");
  if (sched == "constant") {
    s.hyper.schedule = trainer::LrScheduleKind::kConstant;
  } else if (sched == "step") {
    s.hyper.schedule = trainer::LrScheduleKind::kStepDecay;
  } else if (sched == "cosine") {
    s.hyper.schedule = trainer::LrScheduleKind::kCosine;
  } else {
    field_error(ini, "trainer", "lr_schedule",
                "expected constant, step or cosine, got '" + sched + "'");
  }
  s.hyper.decay_factor = parse_number<double>(ini, "trainer", "lr_decay_factor", s.hyper.decay_factor);
  s.hyper.decay_boundaries = parse_u64_list(ini, "trainer", "lr_decay_boundaries");
  s.hyper.cosine_total_steps = parse_number<std::uint64_t>(ini, "trainer", "cosine_total_steps", s.hyper.cosine_total_steps);
  s.hyper.cosine_min_lr = parse_number<double>(ini, "trainer", "cosine_min_lr", s.hyper.cosine_min_lr);

  const std::string source = parse_string(ini, "dataset", "source", "synthetic");
  if (source == "synthetic") {
    c.dataset.source = DatasetSource::kSynthetic;
  } else if (source == "csv") {
    c.dataset.source = DatasetSource::kCsv;
  } else {
    field_error(ini, "dataset", "source", "expected synthetic or csv, got '" + source + "'");
  }
  auto& syn = c.dataset.synthetic;
  syn.num_clusters = parse_number<std::uint32_t>(ini, "dataset", "num_clusters", syn.num_clusters);
  syn.samples_per_cluster = parse_number<std::size_t>(ini, "dataset", "samples_per_cluster", syn.samples_per_cluster);
  syn.feature_dim = parse_number<std::size_t>(ini, "dataset", "feature_dim", syn.feature_dim);
  syn.cluster_separation = parse_number<double>(ini, "dataset", "cluster_separation", syn.cluster_separation);
  syn.redundancy_factor = parse_number<std::uint32_t>(ini, "dataset", "redundancy_factor", syn.redundancy_factor);
  syn.label_noise_fraction = parse_number<double>(ini, "dataset", "label_noise_fraction", syn.label_noise_fraction);
  syn.val_fraction = parse_number<double>(ini, "dataset", "val_fraction", syn.val_fraction);
  c.dataset.train_csv = parse_string(ini, "dataset", "train_csv", "");
  c.dataset.val_csv = parse_string(ini, "dataset", "val_csv", "");

  reject_unknown(ini);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string config_to_ini(const ExperimentConfig& c) {
  std::ostringstream out;
  out.precision(17);
  const auto& s = c.search;
  out << "[search]\n";
  out << "population_size = " << s.population_size << '\n';
  out << "intervals_per_exploitation = " << s.intervals_per_exploitation << '\n';
  out << "interval_len = " << s.interval_len << '\n';
  out << "batch_size = " << s.batch_size << '\n';
  out << "exploration = " << to_string(s.exploration) << '\n';
  out << "warmup_batches = " << s.warmup_batches << '\n';
  out << "total_alternations = " << s.total_alternations << '\n';
  out << "seed = " << s.seed << '\n';
  out << "eval_subset = " << s.eval_subset << '\n';
  out << "num_threads = " << s.num_threads << '\n';
  out << "\n[smoothing]\n";
  out << "beta = " << s.smoothing.beta << '\n';
  out << "n_uniform = " << s.smoothing.n_uniform << '\n';
  out << "\n[trainer]\n";
  out << "arch = " << (s.arch.kind == trainer::ArchKind::kMlp ? "mlp" : "softmax") << '\n';
  out << "hidden_dim = " << s.arch.hidden_dim << '\n';
  out << "base_lr = " << s.hyper.base_lr << '\n';
  out << "momentum = " << s.hyper.momentum << '\n';
  const char* sched = s.hyper.schedule == trainer::LrScheduleKind::kConstant
                          ? "constant"
                          : (s.hyper.schedule == trainer::LrScheduleKind::kStepDecay
                                 ? "step"
                                 : "cosine");
  out << "lr_schedule = " << sched << '\n';
  out << "lr_decay_factor = " << s.hyper.decay_factor << '\n';
  out << "lr_decay_boundaries = ";
  for (std::size_t i = 0; i < s.hyper.decay_boundaries.size(); ++i)
    out << (i ? "," : "") << s.hyper.decay_boundaries[i];
  out << '\n';
  out << "cosine_total_steps = " << s.hyper.cosine_total_steps << '\n';
  out << "cosine_min_lr = " << s.hyper.cosine_min_lr << '\n';
  out << "\n[dataset]\n";
  out << "source = " << (c.dataset.source == DatasetSource::kCsv ? "csv" : "synthetic") << '\n';
  const auto& syn = c.dataset.synthetic;
  out << "num_clusters = " << syn.num_clusters << '\n';
  out << "samples_per_cluster = " << syn.samples_per_cluster << '\n';
  out << "feature_dim = " << syn.feature_dim << '\n';
  out << "cluster_separation = " << syn.cluster_separation << '\n';
  out << "redundancy_factor = " << syn.redundancy_factor << '\n';
  out << "label_noise_fraction = " << syn.label_noise_fraction << '\n';
  out << "val_fraction = " << syn.val_fraction << '\n';
  if (c.dataset.source == DatasetSource::kCsv) {
    out << "train_csv = " << c.dataset.train_csv.string() << '\n';
    out << "val_csv = " << c.dataset.val_csv.string() << '\n';
  }
  return out.str();
}

Dataset build_dataset(ExperimentConfig& config) {
  Dataset d;
  if (config.dataset.source == DatasetSource::kSynthetic) {
    RngStream rng(config.search.seed, kStreamDomainDataset, 0);
    d = trainer::gen_synthetic_dataset(config.dataset.synthetic, rng).dataset;
  } else {
    d = import_dataset_csv(config.dataset.train_csv, config.dataset.val_csv);
  }
  config.search.arch.feature_dim = d.feature_dim;
  config.search.arch.num_classes = d.num_classes;
  return d;
}

void write_manifest(const Manifest& m, const std::filesystem::path& dir) {
  json j;
  j["engine_version"] = kEngineVersion;
  j["command"] = m.command;
  j["seed"] = m.seed;
  j["artifacts"] = m.artifacts;
  j["metrics"] = m.metrics;
  j["wall_seconds"] = m.wall_seconds;
  j["config_ini"] = config_to_ini(m.config);
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot write manifest in " + dir.string());
  out << j.dump(2) << '\n';
}

Manifest read_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in)
    throw std::runtime_error("no manifest.json in " + dir.string());
  json j = json::parse(in);
  Manifest m;
  m.command = j.at("command").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
  if (j.contains("metrics"))
    m.metrics = j.at("metrics").get<std::map<std::string, double>>();
  m.wall_seconds = j.at("wall_seconds").get<double>();
  m.config = parse_config(j.at("config_ini").get<std::string>(),
                          (dir / "manifest.json").string());
  return m;
}

}  // namespace autosampling::cli
