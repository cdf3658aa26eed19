#include "snaprg/kernels.hpp"

#include <bit>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

#if defined(__x86_64__) || defined(_M_X64)
#define SNAPRG_X86 1
#include <immintrin.h>
#else
#define SNAPRG_X86 0
#endif

#if defined(__aarch64__)
#define SNAPRG_NEON 1
#include <arm_neon.h>
#else
#define SNAPRG_NEON 0
#endif

namespace snaprg::kernels {

// ---------------------------------------------------------------------------
// Hamming: scalar reference
// ---------------------------------------------------------------------------

uint64_t hamming_words(const uint64_t* a, const uint64_t* b, size_t words) {
  uint64_t acc0 = 0, acc1 = 0, acc2 = 0, acc3 = 0;
  size_t w = 0;
  for (; w + 4 <= words; w += 4) {
    acc0 += static_cast<uint64_t>(std::popcount(a[w] ^ b[w]));
    acc1 += static_cast<uint64_t>(std::popcount(a[w + 1] ^ b[w + 1]));
    acc2 += static_cast<uint64_t>(std::popcount(a[w + 2] ^ b[w + 2]));
    acc3 += static_cast<uint64_t>(std::popcount(a[w + 3] ^ b[w + 3]));
  }
  for (; w < words; ++w) acc0 += static_cast<uint64_t>(std::popcount(a[w] ^ b[w]));
  return acc0 + acc1 + acc2 + acc3;
}

namespace {

void hamming_scalar(const uint64_t* a, const uint64_t* rows, size_t n_rows, size_t words,
                    uint32_t* out) {
  for (size_t i = 0; i < n_rows; ++i)
    out[i] = static_cast<uint32_t>(hamming_words(a, rows + i * words, words));
}

#if SNAPRG_X86

// ---------------------------------------------------------------------------
// Hamming: AVX2 (vpshufb nibble-LUT popcount, SAD accumulation)
// ---------------------------------------------------------------------------

__attribute__((target("avx2"))) inline __m256i popcount_epi8_avx2(__m256i v) {
  const __m256i lut = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,
                                       0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
  const __m256i low = _mm256_set1_epi8(0x0f);
  const __m256i lo = _mm256_and_si256(v, low);
  const __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), low);
  return _mm256_add_epi8(_mm256_shuffle_epi8(lut, lo), _mm256_shuffle_epi8(lut, hi));
}

__attribute__((target("avx2"))) void hamming_avx2(const uint64_t* a, const uint64_t* rows,
                                                  size_t n_rows, size_t words, uint32_t* out) {
  const __m256i zero = _mm256_setzero_si256();
  for (size_t i = 0; i < n_rows; ++i) {
    const uint64_t* b = rows + i * words;
    __m256i acc = zero;  // 4 x u64 partial sums, saturation-free (max 32*words per lane)
    size_t w = 0;
    for (; w + 4 <= words; w += 4) {
      const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + w));
      const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + w));
      const __m256i cnt = popcount_epi8_avx2(_mm256_xor_si256(va, vb));
      acc = _mm256_add_epi64(acc, _mm256_sad_epu8(cnt, zero));
    }
    uint64_t lanes[4];
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(lanes), acc);
    uint64_t d = lanes[0] + lanes[1] + lanes[2] + lanes[3];
    for (; w < words; ++w) d += static_cast<uint64_t>(std::popcount(a[w] ^ b[w]));
    out[i] = static_cast<uint32_t>(d);
  }
}

// ---------------------------------------------------------------------------
// Hamming: AVX-512 with native 64-bit lane popcount
// ---------------------------------------------------------------------------

__attribute__((target("avx512f,avx512vpopcntdq"))) void hamming_avx512(
    const uint64_t* a, const uint64_t* rows, size_t n_rows, size_t words, uint32_t* out) {
  for (size_t i = 0; i < n_rows; ++i) {
    const uint64_t* b = rows + i * words;
    __m512i acc = _mm512_setzero_si512();
    size_t w = 0;
    for (; w + 8 <= words; w += 8) {
      const __m512i va = _mm512_loadu_si512(a + w);
      const __m512i vb = _mm512_loadu_si512(b + w);
      acc = _mm512_add_epi64(acc, _mm512_popcnt_epi64(_mm512_xor_si512(va, vb)));
    }
    uint64_t d = static_cast<uint64_t>(_mm512_reduce_add_epi64(acc));
    for (; w < words; ++w) d += static_cast<uint64_t>(std::popcount(a[w] ^ b[w]));
    out[i] = static_cast<uint32_t>(d);
  }
}

#endif  // SNAPRG_X86

#if SNAPRG_NEON

void hamming_neon(const uint64_t* a, const uint64_t* rows, size_t n_rows, size_t words,
                  uint32_t* out) {
  for (size_t i = 0; i < n_rows; ++i) {
    const uint64_t* b = rows + i * words;
    uint64x2_t acc = vdupq_n_u64(0);
    size_t w = 0;
    for (; w + 2 <= words; w += 2) {
      const uint8x16_t va = vld1q_u8(reinterpret_cast<const uint8_t*>(a + w));
      const uint8x16_t vb = vld1q_u8(reinterpret_cast<const uint8_t*>(b + w));
      const uint8x16_t cnt = vcntq_u8(veorq_u8(va, vb));
      acc = vaddq_u64(acc, vpaddlq_u32(vpaddlq_u16(vpaddlq_u8(cnt))));
    }
    uint64_t d = vgetq_lane_u64(acc, 0) + vgetq_lane_u64(acc, 1);
    for (; w < words; ++w) d += static_cast<uint64_t>(std::popcount(a[w] ^ b[w]));
    out[i] = static_cast<uint32_t>(d);
  }
}

#endif  // SNAPRG_NEON

std::vector<HammingBackend> enumerate_hamming() {
  std::vector<HammingBackend> v;
#if SNAPRG_X86
  if (__builtin_cpu_supports("avx512f") && __builtin_cpu_supports("avx512vpopcntdq"))
    v.push_back({"avx512", &hamming_avx512});
  if (__builtin_cpu_supports("avx2")) v.push_back({"avx2", &hamming_avx2});
#endif
#if SNAPRG_NEON
  v.push_back({"neon", &hamming_neon});
#endif
  v.push_back({"scalar", &hamming_scalar});
  return v;
}

template <typename Backend>
const Backend& select_backend(const std::vector<Backend>& all, const char* env_var) {
  if (const char* env = std::getenv(env_var)) {
    for (const auto& b : all)
      if (b.name == std::string_view(env)) return b;
    throw std::runtime_error(std::string(env_var) + "=" + env +
                             " names a backend unavailable on this CPU");
  }
  return all.front();
}

}  // namespace

const HammingBackend& hamming_backend() {
  static const std::vector<HammingBackend> all = enumerate_hamming();
  static const HammingBackend& chosen = select_backend(all, "SNAPRG_KERNEL");
  return chosen;
}

std::vector<HammingBackend> hamming_backends_available() { return enumerate_hamming(); }

// ---------------------------------------------------------------------------
// Bit gather
// ---------------------------------------------------------------------------

GatherPlan make_gather_plan(std::span<const int32_t> positions, int64_t n_src_bits) {
  GatherPlan plan;
  plan.n_src_bits = n_src_bits;
  plan.n_dst_bits = static_cast<int64_t>(positions.size());
  plan.positions.assign(positions.begin(), positions.end());
  const size_t src_words = static_cast<size_t>((n_src_bits + 63) / 64);
  plan.word_masks.assign(src_words, 0);
  plan.out_bit_offset.assign(src_words, 0);
  int32_t prev = -1;
  for (int32_t p : positions) {
    if (p <= prev || p >= n_src_bits)
      throw std::invalid_argument("make_gather_plan: positions must be sorted, unique, in range");
    prev = p;
    plan.word_masks[static_cast<size_t>(p >> 6)] |= uint64_t{1} << (p & 63);
  }
  int32_t off = 0;
  for (size_t w = 0; w < src_words; ++w) {
    plan.out_bit_offset[w] = off;
    off += std::popcount(plan.word_masks[w]);
  }
  return plan;
}

namespace {

void gather_scalar(const GatherPlan& plan, const uint64_t* src, uint64_t* dst) {
  const size_t dst_words = static_cast<size_t>((plan.n_dst_bits + 63) / 64);
  std::memset(dst, 0, dst_words * sizeof(uint64_t));
  for (size_t k = 0; k < plan.positions.size(); ++k) {
    const int32_t p = plan.positions[k];
    const uint64_t bit = (src[p >> 6] >> (p & 63)) & 1u;
    dst[k >> 6] |= bit << (k & 63);
  }
}

#if SNAPRG_X86

__attribute__((target("bmi2"))) void gather_bmi2(const GatherPlan& plan, const uint64_t* src,
                                                 uint64_t* dst) {
  const size_t dst_words = static_cast<size_t>((plan.n_dst_bits + 63) / 64);
  std::memset(dst, 0, dst_words * sizeof(uint64_t));
  const size_t src_words = plan.word_masks.size();
  for (size_t w = 0; w < src_words; ++w) {
    const uint64_t mask = plan.word_masks[w];
    if (!mask) continue;
    const uint64_t packed = _pext_u64(src[w], mask);
    const int nbits = std::popcount(mask);
    const int32_t off = plan.out_bit_offset[w];
    const int q = static_cast<int>(off >> 6), r = static_cast<int>(off & 63);
    dst[q] |= packed << r;
    if (r + nbits > 64) dst[q + 1] |= packed >> (64 - r);
  }
}

#endif

std::vector<GatherBackend> enumerate_gather() {
  std::vector<GatherBackend> v;
#if SNAPRG_X86
  if (__builtin_cpu_supports("bmi2")) v.push_back({"bmi2", &gather_bmi2});
#endif
  v.push_back({"scalar", &gather_scalar});
  return v;
}

}  // namespace

const GatherBackend& gather_backend() {
  static const std::vector<GatherBackend> all = enumerate_gather();
  static const GatherBackend& chosen = select_backend(all, "SNAPRG_GATHER");
  return chosen;
}

std::vector<GatherBackend> gather_backends_available() { return enumerate_gather(); }

}  // namespace snaprg::kernels
