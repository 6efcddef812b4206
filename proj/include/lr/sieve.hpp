#pragma once

// Segmented smallest-prime-factor sieve. Factors every integer of a window
// using base primes up to the square root of the scan limit, and turns the
// factorizations into function values.

#include "lr/arith.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lr {

inline std::uint64_t isqrt(std::uint64_t n) {
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<long double>(n)));
  while (r > 0 && static_cast<Value>(r) * r > n) --r;
  while (static_cast<Value>(r + 1) * (r + 1) <= n) ++r;
  return r;
}

/// All primes up to `bound`, from a plain sieve of Eratosthenes.
struct BasePrimes {
  std::uint64_t bound = 1;
  std::vector<std::uint64_t> primes;

  static BasePrimes up_to(std::uint64_t bound) {
    BasePrimes bp;
    bp.bound = bound;
    if (bound < 2) return bp;
    std::vector<bool> composite(bound + 1, false);
    for (std::uint64_t i = 2; i <= bound; ++i) {
      if (composite[i]) continue;
      bp.primes.push_back(i);
      for (std::uint64_t j = i * i; j <= bound; j += i) composite[j] = true;
    }
    return bp;
  }

  /// True when every composite below `hi` has a factor in `primes`.
  bool covers(std::uint64_t hi) const {
    return hi <= 1 || static_cast<Value>(bound + 1) * (bound + 1) > hi - 1;
  }
};

inline constexpr std::size_t kSieveChunk = 1u << 16;

namespace detail {

template <class Rem, class Visitor>
void factor_chunk(std::uint64_t lo, std::uint64_t hi, std::size_t base_offset,
                  std::span<const std::uint64_t> primes, std::vector<Rem>& rem, Visitor& visit) {
  const std::size_t len = hi - lo;
  rem.resize(len);
  for (std::size_t j = 0; j < len; ++j) rem[j] = static_cast<Rem>(lo + j);
  for (const std::uint64_t p64 : primes) {
    if (p64 * p64 >= hi) break;  // larger factors surface as the cofactor
    const auto p = static_cast<Rem>(p64);
    std::uint64_t first = (lo + p64 - 1) / p64 * p64;
    for (std::uint64_t m = first; m < hi; m += p64) {
      const std::size_t j = m - lo;
      Rem r = rem[j] / p;
      unsigned e = 1;
      while (r % p == 0) {
        r /= p;
        ++e;
      }
      rem[j] = r;
      visit(base_offset + j, p64, e);
    }
  }
  for (std::size_t j = 0; j < len; ++j) {
    if (rem[j] > 1) {
      assert(is_prime(rem[j]));
      visit(base_offset + j, static_cast<std::uint64_t>(rem[j]), 1u);
    }
  }
}

}  // namespace detail

/// Calls visit(offset, p, e) for every prime power p^e exactly dividing
/// each n in [lo, hi), offset = n - lo. For a fixed n the primes arrive in
/// increasing order. n = 1 produces no calls.
template <class Visitor>
void factor_range(std::uint64_t lo, std::uint64_t hi, const BasePrimes& base, Visitor&& visit) {
  if (lo == 0) throw std::invalid_argument("factor_range: range must start at 1 or above");
  if (hi <= lo) return;
  if (!base.covers(hi)) throw std::invalid_argument("factor_range: base primes do not reach sqrt(hi)");
  const std::span<const std::uint64_t> primes(base.primes);
  if (hi - 1 <= 0xffffffffull) {
    std::vector<std::uint32_t> rem;
    for (std::uint64_t c = lo; c < hi; c += kSieveChunk) {
      detail::factor_chunk(c, std::min<std::uint64_t>(hi, c + kSieveChunk), c - lo, primes, rem, visit);
    }
  } else {
    std::vector<std::uint64_t> rem;
    for (std::uint64_t c = lo; c < hi; c += kSieveChunk) {
      detail::factor_chunk(c, std::min<std::uint64_t>(hi, c + kSieveChunk), c - lo, primes, rem, visit);
    }
  }
}

/// f(n) for every n in [lo, hi); identical to evaluate(f, factorize(n)).
inline std::vector<Value> evaluate_range(const FunctionId& f, std::uint64_t lo, std::uint64_t hi,
                                         const BasePrimes& base) {
  std::vector<Value> values(hi > lo ? hi - lo : 0, Value{1});
  switch (f.kind) {
    case FunctionId::Kind::CarmichaelLambda:
      factor_range(lo, hi, base, [&](std::size_t j, std::uint64_t p, unsigned e) {
        const auto part = static_cast<std::uint64_t>(prime_power_value(f, p, e));
        const auto acc = static_cast<std::uint64_t>(values[j]);
        values[j] = acc == 1 ? part : lcm_u64(acc, part);
      });
      break;
    case FunctionId::Kind::EulerPhi:
      factor_range(lo, hi, base, [&](std::size_t j, std::uint64_t p, unsigned e) {
        std::uint64_t part = p - 1;
        for (unsigned k = 1; k < e; ++k) part *= p;
        values[j] = static_cast<std::uint64_t>(values[j]) * part;
      });
      break;
    case FunctionId::Kind::DivisorCount:
      factor_range(lo, hi, base, [&](std::size_t j, std::uint64_t, unsigned e) {
        values[j] *= e + 1;
      });
      break;
    case FunctionId::Kind::SigmaD:
      factor_range(lo, hi, base, [&](std::size_t j, std::uint64_t p, unsigned e) {
        values[j] = checked_mul(values[j], prime_power_value(f, p, e));
      });
      break;
  }
  return values;
}

inline constexpr std::uint64_t kDefaultSegmentSize = 1ull << 22;

/// Tiling of [1, limit] into equal segments plus the base primes they share.
class SegmentPlan {
 public:
  SegmentPlan(std::uint64_t limit, std::uint64_t segment_size) : limit_(limit), segment_size_(segment_size) {
    if (limit < 2) throw std::invalid_argument("plan: limit must be at least 2");
    if (limit >= (1ull << 63)) throw std::invalid_argument("plan: limit must be below 2^63");
    if (static_cast<Value>(segment_size) * segment_size < static_cast<Value>(limit) * 4) {
      throw std::invalid_argument("plan: segment_size " + std::to_string(segment_size) +
                                  " is below 2*sqrt(limit)");
    }
    base_ = BasePrimes::up_to(isqrt(limit));
  }

  std::uint64_t limit() const { return limit_; }
  std::uint64_t segment_size() const { return segment_size_; }
  const BasePrimes& base() const { return base_; }
  const std::vector<std::uint64_t>& base_primes() const { return base_.primes; }

  std::uint64_t segment_count() const { return (limit_ + segment_size_ - 1) / segment_size_; }

  /// Half-open [lo, hi) of segment `index`.
  std::pair<std::uint64_t, std::uint64_t> bounds(std::uint64_t index) const {
    if (index >= segment_count()) throw std::out_of_range("segment index outside plan");
    const std::uint64_t lo = 1 + index * segment_size_;
    return {lo, std::min(lo + segment_size_, limit_ + 1)};
  }

 private:
  std::uint64_t limit_;
  std::uint64_t segment_size_;
  BasePrimes base_;
};

inline SegmentPlan plan(std::uint64_t limit, std::uint64_t segment_size = kDefaultSegmentSize) {
  return SegmentPlan(limit, segment_size);
}

struct Segment {
  std::uint64_t lo = 1;
  std::uint64_t hi = 1;
  std::vector<Value> values;  // values[n - lo] = f(n)
};

inline Segment evaluate_segment(const FunctionId& f, const SegmentPlan& plan, std::uint64_t index) {
  const auto [lo, hi] = plan.bounds(index);
  return Segment{lo, hi, evaluate_range(f, lo, hi, plan.base())};
}

// Resumable-scan checkpoint. Layout, all integers little-endian:
//   "LRSV" | u64 limit | u64 segment_size | u64 last completed segment index
//   | u64 payload word count | payload words (u64 each)
struct Checkpoint {
  std::uint64_t limit = 0;
  std::uint64_t segment_size = 0;
  std::uint64_t last_completed = 0;
  std::vector<std::uint64_t> payload;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

namespace detail {

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t get_u64(const std::string& in, std::size_t& pos) {
  if (pos + 8 > in.size()) throw std::runtime_error("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += 8;
  return v;
}

}  // namespace detail

inline std::string encode_checkpoint(const Checkpoint& cp) {
  std::string out = "LRSV";
  detail::put_u64(out, cp.limit);
  detail::put_u64(out, cp.segment_size);
  detail::put_u64(out, cp.last_completed);
  detail::put_u64(out, cp.payload.size());
  for (auto w : cp.payload) detail::put_u64(out, w);
  return out;
}

inline Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "LRSV") != 0) {
    throw std::runtime_error("checkpoint: bad magic header");
  }
  std::size_t pos = 4;
  Checkpoint cp;
  cp.limit = detail::get_u64(bytes, pos);
  cp.segment_size = detail::get_u64(bytes, pos);
  cp.last_completed = detail::get_u64(bytes, pos);
  const std::uint64_t words = detail::get_u64(bytes, pos);
  if (words > (bytes.size() - pos) / 8) throw std::runtime_error("checkpoint: truncated payload");
  cp.payload.resize(words);
  for (auto& w : cp.payload) w = detail::get_u64(bytes, pos);
  if (pos != bytes.size()) throw std::runtime_error("checkpoint: trailing bytes");
  return cp;
}

/// Writes through a temporary file and rename, so a crash leaves either the
/// old or the new checkpoint.
inline void save_checkpoint(const std::string& path, const Checkpoint& cp) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + tmp);
    const std::string bytes = encode_checkpoint(cp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("checkpoint: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error("checkpoint: cannot rename onto " + path);
  }
}

inline std::optional<Checkpoint> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace lr
