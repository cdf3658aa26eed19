#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

// Data-parallel inner loops: bit-packed Hamming distances (XOR + popcount over
// 64-bit words) and sub-lattice bit gathering. Each kernel has a scalar
// reference implementation plus SIMD variants (AVX2, AVX-512, NEON) selected
// at runtime; all variants are equivalence-tested against the scalar one.

namespace snaprg::kernels {

/// out[i] = popcount(a XOR rows[i]) for n_rows consecutive rows of `words`
/// 64-bit words each. Rows need not be aligned beyond 8 bytes.
using HammingFn = void (*)(const uint64_t* a, const uint64_t* rows, size_t n_rows,
                           size_t words, uint32_t* out);

struct HammingBackend {
  std::string_view name;
  HammingFn fn;
};

/// Backend picked for this process: the widest SIMD level the CPU supports,
/// overridable via the SNAPRG_KERNEL environment variable
/// (scalar | avx2 | avx512 | neon).
const HammingBackend& hamming_backend();

/// All backends runnable on this CPU (always includes "scalar").
std::vector<HammingBackend> hamming_backends_available();

/// Scalar pairwise distance, the reference everything else is tested against.
uint64_t hamming_words(const uint64_t* a, const uint64_t* b, size_t words);

/// Precomputed plan for extracting a sorted subset of bit positions from a
/// packed row into a dense packed prefix (the decimation-mask projection).
struct GatherPlan {
  int64_t n_src_bits = 0;
  int64_t n_dst_bits = 0;
  std::vector<int32_t> positions;      // sorted, unique source bit positions
  std::vector<uint64_t> word_masks;    // per source word: bits to extract
  std::vector<int32_t> out_bit_offset; // per source word: dst offset of its first extracted bit
};

GatherPlan make_gather_plan(std::span<const int32_t> positions, int64_t n_src_bits);

/// dst must hold ceil(n_dst_bits/64) words and be zeroed by the kernel;
/// padding bits of dst end up zero (canonical form).
using GatherFn = void (*)(const GatherPlan&, const uint64_t* src, uint64_t* dst);

struct GatherBackend {
  std::string_view name;
  GatherFn fn;
};

/// BMI2 (pext) variant when available, else scalar; override via the
/// SNAPRG_GATHER environment variable (scalar | bmi2).
const GatherBackend& gather_backend();
std::vector<GatherBackend> gather_backends_available();

}  // namespace snaprg::kernels
