#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "snaprg/lattice.hpp"

namespace snaprg {

/// A single bit-packed spin configuration: bit b_i = (s_i + 1)/2 at linear
/// site index i, zero-padded to whole 64-bit words (canonical form).
struct Snapshot {
  int64_t n_bits = 0;
  std::vector<uint64_t> words;

  static Snapshot from_bits(std::span<const int> bits);
  static Snapshot from_string(std::string_view bits01);  // e.g. "0110", site 0 first
  int bit(int64_t i) const { return static_cast<int>((words[static_cast<size_t>(i >> 6)] >> (i & 63)) & 1u); }
  int spin(int64_t i) const { return 2 * bit(i) - 1; }
  bool operator==(const Snapshot&) const = default;
};

inline size_t words_for_bits(int64_t n_bits) {
  return static_cast<size_t>((n_bits + 63) / 64);
}

/// Provenance carried in the dataset header.
struct DatasetMeta {
  std::string source = "sampled";  // "sampled" | "ingested"
  std::string model;               // free-form model description
  double beta = 0.0;
  bool has_beta = false;
  uint64_t seed = 0;
  nlohmann::json extra = nlohmann::json::object();  // creation parameters
};

/// Ordered collection of equally sized snapshots on one lattice, stored as a
/// flat row-major block of 64-bit words. n_steps_applied counts decimation
/// steps already applied: bits per snapshot = N / 2^n_steps_applied.
class SnapshotDataset {
 public:
  SnapshotDataset(LatticeSpec lattice, int n_steps_applied, DatasetMeta meta);

  const LatticeSpec& lattice() const { return lattice_; }
  int n_steps_applied() const { return n_steps_applied_; }
  int64_t n_bits() const { return n_bits_; }
  size_t words_per() const { return words_per_; }
  int64_t n_snapshots() const { return static_cast<int64_t>(words_.size() / words_per_); }
  const DatasetMeta& meta() const { return meta_; }
  DatasetMeta& meta() { return meta_; }

  std::span<const uint64_t> snapshot(int64_t i) const {
    return {words_.data() + static_cast<size_t>(i) * words_per_, words_per_};
  }
  const std::vector<uint64_t>& words() const { return words_; }

  /// Validates canonical padding, then appends.
  void append(std::span<const uint64_t> snapshot_words);
  void append(const Snapshot& s);

  /// Pre-sizes storage to n zeroed snapshots for slot-indexed parallel fills.
  void resize(int64_t n) { words_.assign(static_cast<size_t>(n) * words_per_, 0); }
  std::span<uint64_t> snapshot_mut(int64_t i) {
    return {words_.data() + static_cast<size_t>(i) * words_per_, words_per_};
  }

  uint64_t padding_mask() const { return padding_mask_; }

 private:
  LatticeSpec lattice_;
  int n_steps_applied_ = 0;
  int64_t n_bits_ = 0;
  size_t words_per_ = 0;
  uint64_t padding_mask_ = 0;  // bits that must be zero in the last word
  DatasetMeta meta_;
  std::vector<uint64_t> words_;
};

/// Unique snapshots in first-occurrence order, with multiplicities.
struct DedupDataset {
  int64_t n_bits = 0;
  size_t words_per = 0;
  int64_t n_unique = 0;
  int64_t n_total = 0;  // sum of multiplicities
  std::vector<uint64_t> words;
  std::vector<int64_t> multiplicity;

  std::span<const uint64_t> row(int64_t i) const {
    return {words.data() + static_cast<size_t>(i) * words_per, words_per};
  }
};

DedupDataset deduplicate(const SnapshotDataset& dataset);

/// Binary dataset file, magic "SNAPRG01": little-endian header-length u32,
/// UTF-8 JSON header, then N_r records of ceil(N/64) little-endian words.
void write_dataset(const SnapshotDataset& dataset, const std::filesystem::path& path);
SnapshotDataset read_dataset(const std::filesystem::path& path);

enum class SpinEncoding {
  PlusMinusOne,  // tokens -1 / +1
  ZeroOne,       // tokens 0 / 1, 0 meaning s = -1
};

/// Reads one configuration per line, whitespace-separated tokens, site order
/// row-major (x fastest). Lines must carry exactly N tokens.
SnapshotDataset ingest_text(const std::filesystem::path& path, const LatticeSpec& lattice,
                            SpinEncoding encoding);

}  // namespace snaprg
