#include "snaprg/dataset.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace snaprg {

namespace {

constexpr char kMagic[8] = {'S', 'N', 'A', 'P', 'R', 'G', '0', '1'};

int64_t bits_at_step(const LatticeSpec& lattice, int n_steps) {
  return lattice.n_sites() >> n_steps;
}

}  // namespace

Snapshot Snapshot::from_bits(std::span<const int> bits) {
  Snapshot s;
  s.n_bits = static_cast<int64_t>(bits.size());
  s.words.assign(words_for_bits(s.n_bits), 0);
  for (size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) s.words[i >> 6] |= uint64_t{1} << (i & 63);
  return s;
}

Snapshot Snapshot::from_string(std::string_view bits01) {
  Snapshot s;
  s.n_bits = static_cast<int64_t>(bits01.size());
  s.words.assign(words_for_bits(s.n_bits), 0);
  for (size_t i = 0; i < bits01.size(); ++i) {
    if (bits01[i] == '1')
      s.words[i >> 6] |= uint64_t{1} << (i & 63);
    else if (bits01[i] != '0')
      throw std::invalid_argument("Snapshot::from_string: expected only 0/1");
  }
  return s;
}

SnapshotDataset::SnapshotDataset(LatticeSpec lattice, int n_steps_applied, DatasetMeta meta)
    : lattice_(std::move(lattice)), n_steps_applied_(n_steps_applied), meta_(std::move(meta)) {
  if (n_steps_applied_ < 0 || (lattice_.n_sites() >> n_steps_applied_) << n_steps_applied_ !=
                                  lattice_.n_sites())
    throw std::invalid_argument("SnapshotDataset: invalid n_steps_applied for lattice");
  n_bits_ = bits_at_step(lattice_, n_steps_applied_);
  words_per_ = words_for_bits(n_bits_);
  const int tail = static_cast<int>(n_bits_ & 63);
  padding_mask_ = tail == 0 ? 0 : ~uint64_t{0} << tail;
}

void SnapshotDataset::append(std::span<const uint64_t> snapshot_words) {
  if (snapshot_words.size() != words_per_)
    throw std::invalid_argument("SnapshotDataset::append: wrong word count");
  if (padding_mask_ != 0 && (snapshot_words.back() & padding_mask_) != 0)
    throw std::invalid_argument("SnapshotDataset::append: nonzero padding bits");
  words_.insert(words_.end(), snapshot_words.begin(), snapshot_words.end());
}

void SnapshotDataset::append(const Snapshot& s) {
  if (s.n_bits != n_bits_)
    throw std::invalid_argument("SnapshotDataset::append: snapshot bit length mismatch");
  append(std::span<const uint64_t>(s.words));
}

// ---------------------------------------------------------------------------
// Deduplication
// ---------------------------------------------------------------------------

namespace {

uint64_t row_hash(const uint64_t* row, size_t words) {
  // FNV-1a over the packed words
  uint64_t h = 0xcbf29ce484222325ull;
  for (size_t w = 0; w < words; ++w) {
    h ^= row[w];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

DedupDataset deduplicate(const SnapshotDataset& dataset) {
  const int64_t n = dataset.n_snapshots();
  if (n < 1) throw std::invalid_argument("deduplicate: empty dataset");
  const size_t words = dataset.words_per();

  DedupDataset out;
  out.n_bits = dataset.n_bits();
  out.words_per = words;
  out.n_total = n;

  std::unordered_map<uint64_t, std::vector<int64_t>> buckets;  // hash -> unique indices
  buckets.reserve(static_cast<size_t>(n) * 2);
  for (int64_t i = 0; i < n; ++i) {
    const uint64_t* row = dataset.snapshot(i).data();
    auto& bucket = buckets[row_hash(row, words)];
    int64_t found = -1;
    for (int64_t u : bucket) {
      if (std::memcmp(out.words.data() + static_cast<size_t>(u) * words, row,
                      words * sizeof(uint64_t)) == 0) {
        found = u;
        break;
      }
    }
    if (found >= 0) {
      ++out.multiplicity[static_cast<size_t>(found)];
    } else {
      bucket.push_back(out.n_unique);
      out.words.insert(out.words.end(), row, row + words);
      out.multiplicity.push_back(1);
      ++out.n_unique;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Binary format
// ---------------------------------------------------------------------------

namespace {

void put_u32_le(std::string& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64_le(std::string& buf, uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint64_t get_u64_le(const unsigned char* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= uint64_t{p[i]} << (8 * i);
  return v;
}

nlohmann::json header_json(const SnapshotDataset& ds) {
  const DatasetMeta& m = ds.meta();
  nlohmann::json h{
      {"dimension", ds.lattice().dimension()},
      {"lengths", ds.lattice().lengths()},
      {"n_steps_applied", ds.n_steps_applied()},
      {"bits_per_snapshot", ds.n_bits()},
      {"n_snapshots", ds.n_snapshots()},
      {"source", m.source},
      {"model", m.model},
      {"seed", m.seed},
  };
  if (m.has_beta) h["beta"] = m.beta;
  if (!m.extra.empty()) h["extra"] = m.extra;
  return h;
}

}  // namespace

void write_dataset(const SnapshotDataset& dataset, const std::filesystem::path& path) {
  if (dataset.n_snapshots() < 1)
    throw std::invalid_argument("write_dataset: dataset has no snapshots");
  const std::string header = header_json(dataset).dump();

  std::string buf;
  buf.reserve(16 + header.size() + dataset.words().size() * 8);
  buf.append(kMagic, sizeof(kMagic));
  put_u32_le(buf, static_cast<uint32_t>(header.size()));
  buf.append(header);
  for (uint64_t w : dataset.words()) put_u64_le(buf, w);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_dataset: cannot open " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("write_dataset: write failed for " + path.string());
}

SnapshotDataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_dataset: cannot open " + path.string());
  std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (raw.size() < 12 || std::memcmp(raw.data(), kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("read_dataset: bad magic (expected SNAPRG01) in " + path.string());
  uint32_t header_len = 0;
  for (int i = 0; i < 4; ++i)
    header_len |= uint32_t{static_cast<unsigned char>(raw[8 + static_cast<size_t>(i)])} << (8 * i);
  if (raw.size() < 12 + static_cast<size_t>(header_len))
    throw std::runtime_error("read_dataset: truncated header in " + path.string());

  nlohmann::json h;
  try {
    h = nlohmann::json::parse(raw.substr(12, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("read_dataset: malformed header JSON: " + std::string(e.what()));
  }

  LatticeSpec lattice;
  int n_steps = 0;
  int64_t bits = 0, n_r = 0;
  DatasetMeta meta;
  try {
    lattice = build_lattice(h.at("dimension").get<int>(), h.at("lengths").get<std::vector<int>>());
    n_steps = h.at("n_steps_applied").get<int>();
    bits = h.at("bits_per_snapshot").get<int64_t>();
    n_r = h.at("n_snapshots").get<int64_t>();
    meta.source = h.at("source").get<std::string>();
    meta.model = h.at("model").get<std::string>();
    meta.seed = h.at("seed").get<uint64_t>();
    if (h.contains("beta")) {
      meta.beta = h["beta"].get<double>();
      meta.has_beta = true;
    }
    if (h.contains("extra")) meta.extra = h["extra"];
  } catch (const std::exception& e) {
    throw std::runtime_error("read_dataset: invalid header: " + std::string(e.what()));
  }
  if (n_r < 1) throw std::runtime_error("read_dataset: header n_snapshots must be >= 1");

  SnapshotDataset ds(lattice, n_steps, std::move(meta));
  if (ds.n_bits() != bits)
    throw std::runtime_error("read_dataset: header bits_per_snapshot=" + std::to_string(bits) +
                             " inconsistent with lattice (expected " +
                             std::to_string(ds.n_bits()) + ")");

  const size_t words = ds.words_per();
  const size_t body_off = 12 + header_len;
  const size_t body_bytes = raw.size() - body_off;
  const size_t expected = static_cast<size_t>(n_r) * words * 8;
  if (body_bytes != expected)
    throw std::runtime_error("read_dataset: truncated body: expected " + std::to_string(n_r) +
                             " records (" + std::to_string(expected) + " bytes), found " +
                             std::to_string(body_bytes) + " bytes");

  ds.resize(n_r);
  const auto* p = reinterpret_cast<const unsigned char*>(raw.data()) + body_off;
  for (int64_t i = 0; i < n_r; ++i) {
    auto dst = ds.snapshot_mut(i);
    for (size_t w = 0; w < words; ++w, p += 8) dst[w] = get_u64_le(p);
    if (ds.padding_mask() != 0 && (dst[words - 1] & ds.padding_mask()) != 0)
      throw std::runtime_error("read_dataset: nonzero padding bits in record " +
                               std::to_string(i));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Text ingestion
// ---------------------------------------------------------------------------

SnapshotDataset ingest_text(const std::filesystem::path& path, const LatticeSpec& lattice,
                            SpinEncoding encoding) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("ingest_text: cannot open " + path.string());

  DatasetMeta meta;
  meta.source = "ingested";
  meta.model = "external";
  meta.extra["ingested_from"] = path.filename().string();
  meta.extra["encoding"] = encoding == SpinEncoding::PlusMinusOne ? "pm1" : "01";
  SnapshotDataset ds(lattice, 0, std::move(meta));

  const int64_t n = lattice.n_sites();
  std::vector<uint64_t> row(ds.words_per());
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::fill(row.begin(), row.end(), 0);
    int64_t count = 0;
    std::string tok;
    while (ls >> tok) {
      int bit;
      if (encoding == SpinEncoding::PlusMinusOne) {
        if (tok == "+1" || tok == "1")
          bit = 1;
        else if (tok == "-1")
          bit = 0;
        else
          throw std::runtime_error("ingest_text: unknown token '" + tok + "' at line " +
                                   std::to_string(line_no));
      } else {
        if (tok == "1")
          bit = 1;
        else if (tok == "0")
          bit = 0;  // 0 means s = -1
        else
          throw std::runtime_error("ingest_text: unknown token '" + tok + "' at line " +
                                   std::to_string(line_no));
      }
      if (count < n && bit)
        row[static_cast<size_t>(count >> 6)] |= uint64_t{1} << (count & 63);
      ++count;
    }
    if (count == 0) continue;  // blank line
    if (count != n)
      throw std::runtime_error("ingest_text: line " + std::to_string(line_no) + " has " +
                               std::to_string(count) + " tokens, expected " + std::to_string(n));
    ds.append(std::span<const uint64_t>(row));
  }
  if (ds.n_snapshots() == 0) throw std::runtime_error("ingest_text: no configurations in " + path.string());
  return ds;
}

}  // namespace snaprg
