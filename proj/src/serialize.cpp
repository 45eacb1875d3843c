#include "autosampling/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace autosampling {

namespace {

constexpr std::uint32_t kScheduleMagic = 0x41535343;  // "ASSC"
constexpr std::uint32_t kDistributionMagic = 0x41534454;  // "ASDT"
constexpr std::uint32_t kFormatVersion = 1;

[[noreturn]] void io_fail(const std::filesystem::path& path,
                          const std::string& what) {
  throw std::runtime_error(what + ": " + path.string());
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) io_fail(path, "cannot open for writing");
  return out;
}

}  // namespace

void BinaryWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes_.push_back((v >> (8 * i)) & 0xFF);
}

void BinaryWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) bytes_.push_back((v >> (8 * i)) & 0xFF);
}

void BinaryWriter::i32(std::int32_t v) { u32(std::bit_cast<std::uint32_t>(v)); }

void BinaryWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::write_file(const std::filesystem::path& path) const {
  auto out = open_out(path);
  out.write(reinterpret_cast<const char*>(bytes_.data()),
            static_cast<std::streamsize>(bytes_.size()));
  if (!out) io_fail(path, "write failed");
}

BinaryReader BinaryReader::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail(path, "cannot open for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) io_fail(path, "read failed");
  return BinaryReader(std::move(bytes), path.string());
}

void BinaryReader::fail(const std::string& what) const {
  std::ostringstream msg;
  msg << "parse error in " << origin_ << " at byte " << pos_ << ": " << what;
  throw std::runtime_error(msg.str());
}

void BinaryReader::need(std::size_t n) const {
  if (pos_ + n > bytes_.size()) fail("unexpected end of data");
}

std::uint8_t BinaryReader::u8() {
  need(1);
  return bytes_[pos_++];
}

std::uint32_t BinaryReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

std::uint64_t BinaryReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return v;
}

std::int32_t BinaryReader::i32() { return std::bit_cast<std::int32_t>(u32()); }

double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

void BinaryReader::expect_end() const {
  if (!at_end()) fail("trailing bytes");
}

std::vector<std::uint8_t> schedule_to_bytes(const SamplingSchedule& schedule) {
  schedule.validate();
  BinaryWriter w;
  w.u32(kScheduleMagic);
  w.u32(kFormatVersion);
  w.u64(schedule.dataset_size);
  w.u32(schedule.batch_size);
  w.u64(schedule.num_batches());
  for (std::int32_t tag : schedule.provenance) w.i32(tag);
  for (SampleId id : schedule.ids) w.u32(id);
  return w.bytes();
}

SamplingSchedule schedule_from_bytes(std::vector<std::uint8_t> bytes,
                                     const std::string& origin) {
  BinaryReader r(std::move(bytes), origin);
  if (r.u32() != kScheduleMagic) r.fail("bad magic, not a schedule file");
  if (std::uint32_t v = r.u32(); v != kFormatVersion)
    r.fail("unsupported schedule format version " + std::to_string(v));
  SamplingSchedule s;
  s.dataset_size = r.u64();
  s.batch_size = r.u32();
  const std::uint64_t num_batches = r.u64();
  if (num_batches > 0 && s.batch_size == 0)
    r.fail("batch count " + std::to_string(num_batches) +
           " inconsistent with batch size 0");
  s.provenance.reserve(num_batches);
  for (std::uint64_t b = 0; b < num_batches; ++b) s.provenance.push_back(r.i32());
  s.ids.reserve(num_batches * s.batch_size);
  for (std::uint64_t i = 0; i < num_batches * s.batch_size; ++i) {
    SampleId id = r.u32();
    if (id >= s.dataset_size)
      r.fail("sample id " + std::to_string(id) + " >= dataset size " +
             std::to_string(s.dataset_size));
    s.ids.push_back(id);
  }
  r.expect_end();
  s.validate();
  return s;
}

void save_schedule(const SamplingSchedule& schedule,
                   const std::filesystem::path& path) {
  auto bytes = schedule_to_bytes(schedule);
  std::ofstream out = open_out(path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) io_fail(path, "write failed");
}

SamplingSchedule load_schedule(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail(path, "cannot open for reading");
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  if (in.bad()) io_fail(path, "read failed");
  return schedule_from_bytes(std::move(buf), path.string());
}

void save_distribution(const SamplingDistribution& dist,
                       const std::filesystem::path& path) {
  dist.validate();
  BinaryWriter w;
  w.u32(kDistributionMagic);
  w.u32(kFormatVersion);
  w.u64(dist.size());
  for (double p : dist.probs) w.f64(p);
  w.write_file(path);
}

std::vector<std::uint8_t> distribution_to_bytes(const SamplingDistribution& d) {
  BinaryWriter w;
  w.u32(kDistributionMagic);
  w.u32(kFormatVersion);
  w.u64(d.size());
  for (double p : d.probs) w.f64(p);
  return w.bytes();
}

SamplingDistribution load_distribution(const std::filesystem::path& path) {
  auto r = BinaryReader::from_file(path);
  if (r.u32() != kDistributionMagic) r.fail("bad magic, not a distribution file");
  if (std::uint32_t v = r.u32(); v != kFormatVersion)
    r.fail("unsupported distribution format version " + std::to_string(v));
  SamplingDistribution d;
  const std::uint64_t n = r.u64();
  d.probs.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) d.probs.push_back(r.f64());
  r.expect_end();
  d.validate();
  return d;
}

void export_distribution_csv(const SamplingDistribution& dist,
                             const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "sample_id,probability\n";
  for (std::size_t i = 0; i < dist.size(); ++i)
    out << i << ',' << format_double(dist.probs[i]) << '\n';
  if (!out) io_fail(path, "write failed");
}

void export_schedule_counts_csv(const SamplingSchedule& schedule,
                                const std::filesystem::path& path) {
  std::vector<std::uint64_t> counts(schedule.dataset_size, 0);
  for (SampleId id : schedule.ids) ++counts[id];
  auto out = open_out(path);
  out << "sample_id,count\n";
  for (std::size_t i = 0; i < counts.size(); ++i)
    out << i << ',' << counts[i] << '\n';
  if (!out) io_fail(path, "write failed");
}

namespace {

void export_split_csv(const Dataset& d, bool train,
                      const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "id,label";
  for (std::size_t j = 0; j < d.feature_dim; ++j) out << ",f" << j;
  out << '\n';
  const std::size_t n = train ? d.num_train() : d.num_val();
  for (std::size_t i = 0; i < n; ++i) {
    out << i << ',' << (train ? d.train_labels[i] : d.val_labels[i]);
    auto row = train ? d.train_row(static_cast<SampleId>(i)) : d.val_row(i);
    for (double v : row) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) io_fail(path, "write failed");
}

void import_split_csv(const std::filesystem::path& path,
                      std::size_t& feature_dim, std::vector<double>& features,
                      std::vector<std::uint32_t>& labels) {
  std::ifstream in(path);
  if (!in) io_fail(path, "cannot open for reading");
  std::string line;
  if (!std::getline(in, line)) io_fail(path, "missing CSV header");
  std::size_t cols = 1;
  for (char c : line)
    if (c == ',') ++cols;
  if (cols < 3) io_fail(path, "expected id,label,f0,... header");
  const std::size_t dim = cols - 2;
  if (feature_dim == 0) feature_dim = dim;
  if (dim != feature_dim) io_fail(path, "feature dimension mismatch");

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    if (!std::getline(ls, field, ',')) io_fail(path, "short row");
    if (std::stoull(field) != row)
      io_fail(path, "ids must be dense and in order (row " +
                        std::to_string(row) + ")");
    if (!std::getline(ls, field, ',')) io_fail(path, "short row");
    labels.push_back(static_cast<std::uint32_t>(std::stoul(field)));
    for (std::size_t j = 0; j < feature_dim; ++j) {
      if (!std::getline(ls, field, ',')) io_fail(path, "short row");
      features.push_back(std::stod(field));
    }
    ++row;
  }
}

}  // namespace

void export_dataset_csv(const Dataset& dataset,
                        const std::filesystem::path& train_path,
                        const std::filesystem::path& val_path) {
  dataset.validate();
  export_split_csv(dataset, true, train_path);
  export_split_csv(dataset, false, val_path);
}

Dataset import_dataset_csv(const std::filesystem::path& train_path,
                           const std::filesystem::path& val_path) {
  Dataset d;
  import_split_csv(train_path, d.feature_dim, d.train_features,
                   d.train_labels);
  import_split_csv(val_path, d.feature_dim, d.val_features, d.val_labels);
  std::uint32_t max_label = 0;
  for (std::uint32_t y : d.train_labels) max_label = std::max(max_label, y);
  for (std::uint32_t y : d.val_labels) max_label = std::max(max_label, y);
  d.num_classes = max_label + 1;
  d.validate();
  return d;
}

}  // namespace autosampling
