#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "autosampling/search.hpp"
#include "autosampling/trainer.hpp"

namespace autosampling::cli {

inline constexpr const char* kEngineVersion = "0.1.0";

/// Raised for malformed or invalid configuration; the CLI maps it to exit
/// code 1 (runtime failures exit with 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class DatasetSource : std::uint8_t { kSynthetic = 0, kCsv = 1 };

struct DatasetConfig {
  DatasetSource source = DatasetSource::kSynthetic;
  trainer::SyntheticSpec synthetic;
  std::filesystem::path train_csv;
  std::filesystem::path val_csv;
};

/// Everything a run needs: the search configuration plus the dataset recipe.
/// arch.feature_dim / num_classes are resolved from the dataset at build
/// time; the config file only fixes the architecture kind and hidden width.
struct ExperimentConfig {
  search::SearchConfig search;
  DatasetConfig dataset;

  void validate() const;
};

/// Parses the sectioned key=value config format. Unknown sections or keys
/// and malformed values raise ConfigError naming the offending field.
ExperimentConfig parse_config(const std::string& text,
                              const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Renders a config back into the file format (used for run snapshots).
std::string config_to_ini(const ExperimentConfig& config);

/// Builds the dataset named by the config. Synthetic data derives from the
/// config seed; arch dimensions are filled in from the result.
Dataset build_dataset(ExperimentConfig& config);

// Manifest: the JSON audit record every command writes next to its
// artifacts. `artifacts` maps logical names to file names inside the
// output directory.
struct Manifest {
  std::string command;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> artifacts;
  std::map<std::string, double> metrics;
  double wall_seconds = 0.0;
  ExperimentConfig config;
};

void write_manifest(const Manifest& m, const std::filesystem::path& dir);
Manifest read_manifest(const std::filesystem::path& dir);

}  // namespace autosampling::cli
