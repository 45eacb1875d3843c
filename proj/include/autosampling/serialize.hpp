#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "autosampling/types.hpp"

namespace autosampling {

// Little-endian binary primitives shared by every artifact format. Numbers
// are written with fixed widths and doubles as raw IEEE-754 bits, so files
// are byte-stable across runs and platforms.

class BinaryWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i32(std::int32_t v);
  void f64(double v);

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

  /// Writes the buffer to `path`. Throws std::runtime_error with the path
  /// in the message on I/O failure.
  void write_file(const std::filesystem::path& path) const;

 private:
  std::vector<std::uint8_t> bytes_;
};

/// Reader over an in-memory buffer. Any out-of-bounds read throws a parse
/// error naming the byte offset at which the data ran out.
class BinaryReader {
 public:
  explicit BinaryReader(std::vector<std::uint8_t> bytes, std::string origin)
      : bytes_(std::move(bytes)), origin_(std::move(origin)) {}

  static BinaryReader from_file(const std::filesystem::path& path);

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int32_t i32();
  double f64();

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }

  /// Throws unless the whole buffer has been consumed.
  void expect_end() const;

  [[noreturn]] void fail(const std::string& what) const;

 private:
  void need(std::size_t n) const;

  std::vector<std::uint8_t> bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

// Schedule file: magic, version, |D|, batch size, batch count, per-batch
// provenance tags, then the flat id stream. Round-trips bit-exactly.
void save_schedule(const SamplingSchedule& schedule,
                   const std::filesystem::path& path);
SamplingSchedule load_schedule(const std::filesystem::path& path);

std::vector<std::uint8_t> schedule_to_bytes(const SamplingSchedule& schedule);
SamplingSchedule schedule_from_bytes(std::vector<std::uint8_t> bytes,
                                     const std::string& origin = "<memory>");

// Distribution file: magic, version, |D|, probabilities as raw doubles.
void save_distribution(const SamplingDistribution& dist,
                       const std::filesystem::path& path);
SamplingDistribution load_distribution(const std::filesystem::path& path);
std::vector<std::uint8_t> distribution_to_bytes(const SamplingDistribution& d);

// Human-readable exports.
void export_distribution_csv(const SamplingDistribution& dist,
                             const std::filesystem::path& path);
void export_schedule_counts_csv(const SamplingSchedule& schedule,
                                const std::filesystem::path& path);

// Dataset CSV: "id,label,f0,f1,..." with one file per split.
void export_dataset_csv(const Dataset& dataset,
                        const std::filesystem::path& train_path,
                        const std::filesystem::path& val_path);
Dataset import_dataset_csv(const std::filesystem::path& train_path,
                           const std::filesystem::path& val_path);

}  // namespace autosampling
