#pragma once

// Counting primes p <= x whose shift p + a has a prime factor above x^theta,
// together with the set of such large factors q, the primes p that have more
// than one of them, and per-q progression counts.

#include "lr/arith.hpp"
#include "lr/sieve.hpp"
#include "lr/theta.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace lr {

/// Exact counts at one (x, a, theta).
///
/// residue = -a: "q | p + a" is the congruence p = residue (mod q).
struct CountReport {
  std::uint64_t x = 0;
  std::int64_t a = -1;
  Theta theta;
  std::uint64_t threshold = 0;  // floor(x^theta); q counts iff q > threshold
  std::uint64_t primes = 0;     // pi(x)
  std::uint64_t count_p = 0;    // #{p <= x : P(p + a) > x^theta}
  double delta_hat = 0.0;       // count_p * log x / x
  std::uint64_t count_q = 0;    // #{q > x^theta : q | p + a for some p <= x}
  std::vector<std::uint64_t> violations;                       // p with two or more such q
  std::vector<std::pair<std::uint64_t, std::uint64_t>> q_counts;  // (q, #{p <= x : q | p + a}), by q

  std::int64_t residue() const { return -a; }

  /// Sum over counted q of their progression counts.
  std::uint64_t partition_sum() const {
    std::uint64_t s = 0;
    for (auto [q, c] : q_counts) s += c;
    return s;
  }

  friend bool operator==(const CountReport&, const CountReport&) = default;
};

inline double delta_hat(std::uint64_t count_p, std::uint64_t x) {
  return static_cast<double>(count_p) * std::log(static_cast<double>(x)) / static_cast<double>(x);
}

namespace detail {

inline std::uint64_t abs_shift(std::uint64_t p, std::int64_t a) {
  const auto m = static_cast<__int128>(p) + a;
  return static_cast<std::uint64_t>(m < 0 ? -m : m);
}

struct ShiftedPartial {
  std::uint64_t primes = 0;
  std::uint64_t count_p = 0;
  std::vector<std::uint64_t> qs;  // one entry per (p, q) incidence
  std::vector<std::uint64_t> violations;

  void record(std::uint64_t p, std::span<const std::uint64_t> large) {
    ++primes;
    if (large.empty()) return;
    ++count_p;
    qs.insert(qs.end(), large.begin(), large.end());
    if (large.size() >= 2) violations.push_back(p);
  }
};

inline CountReport finish(std::uint64_t x, std::int64_t a, const Theta& theta, std::uint64_t threshold,
                          ShiftedPartial&& all) {
  CountReport r;
  r.x = x;
  r.a = a;
  r.theta = theta;
  r.threshold = threshold;
  r.primes = all.primes;
  r.count_p = all.count_p;
  r.delta_hat = lr::delta_hat(all.count_p, x);
  std::sort(all.qs.begin(), all.qs.end());
  for (std::size_t i = 0; i < all.qs.size();) {
    std::size_t j = i;
    while (j < all.qs.size() && all.qs[j] == all.qs[i]) ++j;
    r.q_counts.emplace_back(all.qs[i], j - i);
    i = j;
  }
  r.count_q = r.q_counts.size();
  std::sort(all.violations.begin(), all.violations.end());
  r.violations = std::move(all.violations);
  return r;
}

inline void check_args(std::uint64_t x) {
  if (x < 2) throw std::invalid_argument("x must be at least 2");
  if (x >= (1ull << 62)) throw std::invalid_argument("x must be below 2^62");
}

}  // namespace detail

/// Reference path: primality and factorization per prime, no sieve.
inline CountReport shifted_scan_direct(std::uint64_t x, std::int64_t a, const Theta& theta) {
  detail::check_args(x);
  const std::uint64_t threshold = floor_power(x, theta);
  detail::ShiftedPartial part;
  std::vector<std::uint64_t> large;
  for (std::uint64_t p = 2; p <= x; ++p) {
    if (!is_prime(p)) continue;
    large.clear();
    const std::uint64_t m = detail::abs_shift(p, a);
    if (m != 0) {
      const auto fm = factorize(m);
      for (const auto& [q, e] : fm.factors()) {
        if (q > threshold) large.push_back(q);
      }
    }
    part.record(p, large);
  }
  return detail::finish(x, a, theta, threshold, std::move(part));
}

inline constexpr std::uint64_t kShiftedBlock = 1u << 16;

/// Sieve path, bit-identical to shifted_scan_direct. Prime blocks are
/// spread over `threads` workers and combined in block order.
inline CountReport shifted_scan(std::uint64_t x, std::int64_t a, const Theta& theta, unsigned threads = 1) {
  detail::check_args(x);
  if (a > (1ll << 40) || a < -(1ll << 40)) throw std::invalid_argument("|a| too large");
  const std::uint64_t threshold = floor_power(x, theta);
  const std::uint64_t top = x + static_cast<std::uint64_t>(std::max<std::int64_t>(a, 0));
  const BasePrimes base = BasePrimes::up_to(isqrt(top));
  const std::uint64_t blocks = (x + kShiftedBlock - 1) / kShiftedBlock;

  auto run_block = [&](std::uint64_t b) {
    const std::uint64_t plo = 1 + b * kShiftedBlock;
    const std::uint64_t phi = std::min(plo + kShiftedBlock, x + 1);
    const std::size_t len = phi - plo;

    std::vector<std::uint8_t> prime(len, 0);
    factor_range(plo, phi, base, [&](std::size_t j, std::uint64_t p, unsigned e) {
      if (e == 1 && p == plo + j) prime[j] = 1;
    });

    // Large factors of m = p + a for p in [plo, phi), where m >= 1.
    constexpr std::size_t kMaxLarge = 15;  // distinct primes of a 64-bit integer
    std::vector<std::uint8_t> nlarge(len, 0);
    std::vector<std::array<std::uint64_t, kMaxLarge>> large(len);
    const auto mlo_signed = static_cast<std::int64_t>(plo) + a;
    const std::uint64_t mlo = static_cast<std::uint64_t>(std::max<std::int64_t>(mlo_signed, 1));
    const std::uint64_t mhi = static_cast<std::uint64_t>(std::max<std::int64_t>(static_cast<std::int64_t>(phi) + a, 1));
    factor_range(mlo, mhi, base, [&](std::size_t j, std::uint64_t q, unsigned) {
      if (q <= threshold) return;
      const std::size_t idx = static_cast<std::size_t>(static_cast<std::int64_t>(mlo + j) - a) - plo;
      large[idx][nlarge[idx]++] = q;
    });

    detail::ShiftedPartial part;
    std::vector<std::uint64_t> tmp;
    for (std::size_t j = 0; j < len; ++j) {
      if (!prime[j]) continue;
      const std::uint64_t p = plo + j;
      if (static_cast<std::int64_t>(p) + a >= 1) {
        part.record(p, std::span<const std::uint64_t>(large[j].data(), nlarge[j]));
      } else {
        tmp.clear();
        const std::uint64_t m = detail::abs_shift(p, a);
        if (m != 0) {
          const auto fm = factorize(m);
          for (const auto& [q, e] : fm.factors()) {
            if (q > threshold) tmp.push_back(q);
          }
        }
        part.record(p, tmp);
      }
    }
    return part;
  };

  std::vector<detail::ShiftedPartial> parts(blocks);
  const unsigned workers = static_cast<unsigned>(std::min<std::uint64_t>(std::max(1u, threads), blocks));
  if (workers <= 1) {
    for (std::uint64_t b = 0; b < blocks; ++b) parts[b] = run_block(b);
  } else {
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (std::uint64_t b; (b = next.fetch_add(1)) < blocks;) {
          try {
            parts[b] = run_block(b);
          } catch (...) {
            std::lock_guard lock(mu);
            if (!failure) failure = std::current_exception();
            return;
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  detail::ShiftedPartial all;
  for (auto& part : parts) {
    all.primes += part.primes;
    all.count_p += part.count_p;
    all.qs.insert(all.qs.end(), part.qs.begin(), part.qs.end());
    all.violations.insert(all.violations.end(), part.violations.begin(), part.violations.end());
  }
  return detail::finish(x, a, theta, threshold, std::move(all));
}

/// #{p <= x : P(p + a) > x^theta} and delta_hat. Small x goes through the
/// direct path.
inline CountReport count_large_shifted_factor(std::uint64_t x, std::int64_t a, const Theta& theta,
                                              unsigned threads = 1) {
  if (x < 10'000) return shifted_scan_direct(x, a, theta);
  return shifted_scan(x, a, theta, threads);
}

inline void check_residue(std::int64_t residue) {
  if (residue != 1 && residue != -1) throw std::invalid_argument("residue must be +1 or -1");
}

/// #{q > x^theta prime : some prime p <= x has p = residue (mod q)}, with
/// the full report attached.
inline CountReport q_set_count(std::uint64_t x, const Theta& theta, std::int64_t residue, unsigned threads = 1) {
  check_residue(residue);
  return count_large_shifted_factor(x, -residue, theta, threads);
}

/// Primes p <= x for which p - residue has two distinct prime factors above
/// x^theta. Always empty once x^(2 theta) >= x + 1.
inline std::vector<std::uint64_t> uniqueness_check(std::uint64_t x, const Theta& theta, std::int64_t residue,
                                                   unsigned threads = 1) {
  return q_set_count(x, theta, residue, threads).violations;
}

/// Bit table of primes up to a bound, for repeated progression counts.
class PrimeTable {
 public:
  explicit PrimeTable(std::uint64_t bound) : bound_(bound), bits_(bound + 1, false) {
    for (auto p : BasePrimes::up_to(bound).primes) bits_[p] = true;
  }
  std::uint64_t bound() const { return bound_; }
  bool operator()(std::uint64_t n) const { return n <= bound_ ? bits_[n] : is_prime(n); }

 private:
  std::uint64_t bound_;
  std::vector<bool> bits_;
};

/// #{p <= x prime : p = residue (mod q)}. Throws std::logic_error if the
/// count ever exceeds ceil((x + 1) / q).
template <class PrimeTest>
std::uint64_t per_q_progression_count(std::uint64_t x, std::uint64_t q, std::int64_t residue,
                                      const PrimeTest& prime) {
  if (!is_prime(q)) throw std::invalid_argument("per_q_progression_count: q = " + std::to_string(q) + " is not prime");
  const auto qs = static_cast<std::int64_t>(q);
  const auto start = static_cast<std::uint64_t>(((residue % qs) + qs) % qs);
  std::uint64_t count = 0;
  for (std::uint64_t p = start; p <= x; p += q) {
    if (p >= 2 && prime(p)) ++count;
  }
  const std::uint64_t cap = x / q + 1;  // ceil((x + 1) / q)
  if (count > cap) {
    throw std::logic_error("progression count " + std::to_string(count) + " exceeds ceil((x+1)/q) = " +
                           std::to_string(cap));
  }
  return count;
}

inline std::uint64_t per_q_progression_count(std::uint64_t x, std::uint64_t q, std::int64_t residue) {
  return per_q_progression_count(x, q, residue, [](std::uint64_t n) { return is_prime(n); });
}

/// One report per x.
inline std::vector<CountReport> density_table(const std::vector<std::uint64_t>& xs, std::int64_t a,
                                              const Theta& theta, unsigned threads = 1) {
  std::vector<CountReport> out;
  for (auto x : xs) {
    if (x < 10) throw std::invalid_argument("density_table: every x must be at least 10");
    out.push_back(count_large_shifted_factor(x, a, theta, threads));
  }
  return out;
}

}  // namespace lr
