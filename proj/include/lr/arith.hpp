#pragma once

// Exact 64-bit arithmetic: primality, factorization, and the multiplicative
// functions lambda, phi, sigma_d and the divisor count.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lr {

// Function values. sigma_d overflows 64 bits quickly, so every function
// reports into 128 bits.
__extension__ typedef unsigned __int128 Value;

inline std::string to_string(Value v) {
  if (v == 0) return "0";
  std::string s;
  while (v != 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

inline Value checked_mul(Value a, Value b) {
  Value r;
  if (__builtin_mul_overflow(a, b, &r)) {
    throw std::overflow_error("arithmetic function value exceeds 128 bits");
  }
  return r;
}

inline Value checked_add(Value a, Value b) {
  Value r;
  if (__builtin_add_overflow(a, b, &r)) {
    throw std::overflow_error("arithmetic function value exceeds 128 bits");
  }
  return r;
}

namespace detail {

inline std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<Value>(a) * b % m);
}

inline std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
  std::uint64_t result = 1 % m;
  base %= m;
  while (exp != 0) {
    if (exp & 1) result = mul_mod(result, base, m);
    base = mul_mod(base, base, m);
    exp >>= 1;
  }
  return result;
}

inline bool miller_rabin_witness(std::uint64_t n, std::uint64_t a, std::uint64_t d, int s) {
  a %= n;
  if (a == 0) return false;
  std::uint64_t x = pow_mod(a, d, n);
  if (x == 1 || x == n - 1) return false;
  for (int r = 1; r < s; ++r) {
    x = mul_mod(x, x, n);
    if (x == n - 1) return false;
  }
  return true;
}

}  // namespace detail

// Deterministic for every 64-bit input (Sinclair's seven bases).
inline bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p : {2u, 3u, 5u, 7u, 11u, 13u, 17u, 19u, 23u, 29u, 31u, 37u}) {
    if (n % p == 0) return n == p;
  }
  if (n < 37 * 37) return true;
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (std::uint64_t a : {2ull, 325ull, 9375ull, 28178ull, 450775ull, 9780504ull, 1795265022ull}) {
    if (detail::miller_rabin_witness(n, a, d, s)) return false;
  }
  return true;
}

struct PrimePower {
  std::uint64_t p;
  unsigned e;

  friend bool operator==(const PrimePower&, const PrimePower&) = default;
};

/// A positive integer together with its prime-power factorization.
///
/// Factors are sorted by strictly increasing prime, every exponent is at
/// least one, and their product is `n()`. The value 1 has no factors.
class FactoredInteger {
 public:
  FactoredInteger() = default;

  /// Validates and multiplies out a factor list. Throws std::invalid_argument
  /// on unsorted, repeated, non-prime or zero-exponent entries and
  /// std::overflow_error when the product leaves 64 bits.
  static FactoredInteger from_factors(std::vector<PrimePower> factors) {
    std::uint64_t n = 1;
    for (std::size_t i = 0; i < factors.size(); ++i) {
      const auto& [p, e] = factors[i];
      if (e == 0) throw std::invalid_argument("zero exponent in factorization");
      if (i > 0 && factors[i - 1].p >= p) {
        throw std::invalid_argument("factor primes must be strictly increasing");
      }
      if (!is_prime(p)) throw std::invalid_argument("non-prime factor " + std::to_string(p));
      for (unsigned k = 0; k < e; ++k) {
        if (__builtin_mul_overflow(n, p, &n)) {
          throw std::overflow_error("factorization product exceeds 64 bits");
        }
      }
    }
    FactoredInteger f;
    f.n_ = n;
    f.factors_ = std::move(factors);
    return f;
  }

  std::uint64_t n() const { return n_; }
  const std::vector<PrimePower>& factors() const { return factors_; }

  friend bool operator==(const FactoredInteger&, const FactoredInteger&) = default;

 private:
  std::uint64_t n_ = 1;
  std::vector<PrimePower> factors_;
};

namespace detail {

inline std::uint64_t pollard_brent(std::uint64_t n, std::mt19937_64& rng) {
  if (n % 2 == 0) return 2;
  std::uniform_int_distribution<std::uint64_t> dist(1, n - 1);
  for (;;) {
    std::uint64_t y = dist(rng);
    const std::uint64_t c = dist(rng);
    const std::uint64_t m = 128;
    std::uint64_t g = 1, r = 1, q = 1, x = 0, ys = 0;
    auto step = [&](std::uint64_t v) { return (mul_mod(v, v, n) + c) % n; };
    while (g == 1) {
      x = y;
      for (std::uint64_t i = 0; i < r; ++i) y = step(y);
      std::uint64_t k = 0;
      while (k < r && g == 1) {
        ys = y;
        for (std::uint64_t i = 0; i < std::min(m, r - k); ++i) {
          y = step(y);
          q = mul_mod(q, x > y ? x - y : y - x, n);
        }
        g = std::gcd(q, n);
        k += m;
      }
      r <<= 1;
    }
    if (g == n) {
      do {
        ys = step(ys);
        g = std::gcd(x > ys ? x - ys : ys - x, n);
      } while (g == 1);
    }
    if (g != n) return g;
  }
}

inline void split_into(std::uint64_t n, std::mt19937_64& rng, std::vector<std::uint64_t>& out) {
  if (n == 1) return;
  if (is_prime(n)) {
    out.push_back(n);
    return;
  }
  const std::uint64_t d = pollard_brent(n, rng);
  split_into(d, rng, out);
  split_into(n / d, rng, out);
}

}  // namespace detail

inline constexpr std::uint64_t kDefaultSeed = 0x5185'5186'5187'5188ull;

/// Trial division by primes below 1000, then Pollard-Brent on what remains.
/// Every prime reported is confirmed by is_prime. The seed only affects the
/// splitting path, never the result.
inline FactoredInteger factorize(std::uint64_t n, std::uint64_t seed = kDefaultSeed) {
  if (n == 0) throw std::invalid_argument("factorize: n must be positive");
  std::vector<PrimePower> factors;
  auto take = [&](std::uint64_t p) {
    unsigned e = 0;
    while (n % p == 0) {
      n /= p;
      ++e;
    }
    if (e != 0) factors.push_back({p, e});
  };
  take(2);
  for (std::uint64_t p = 3; p < 1000 && p * p <= n; p += 2) take(p);
  if (n > 1) {
    std::vector<std::uint64_t> large;
    if (n < 1000 * 1000) {
      large.push_back(n);
    } else {
      std::mt19937_64 rng(seed);
      detail::split_into(n, rng, large);
      std::sort(large.begin(), large.end());
    }
    for (std::size_t i = 0; i < large.size();) {
      std::size_t j = i;
      while (j < large.size() && large[j] == large[i]) ++j;
      factors.push_back({large[i], static_cast<unsigned>(j - i)});
      i = j;
    }
  }
  return FactoredInteger::from_factors(std::move(factors));
}

/// P(n), with P(1) = 1.
inline std::uint64_t largest_prime_factor(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("largest_prime_factor: n must be positive");
  if (n == 1) return 1;
  return factorize(n).factors().back().p;
}

/// The function under study. Plain sigma is SigmaD with d = 1.
struct FunctionId {
  enum class Kind { CarmichaelLambda, EulerPhi, SigmaD, DivisorCount };

  Kind kind = Kind::CarmichaelLambda;
  unsigned d = 0;

  static FunctionId lambda() { return {Kind::CarmichaelLambda, 0}; }
  static FunctionId phi() { return {Kind::EulerPhi, 0}; }
  static FunctionId sigma(unsigned d = 1) {
    if (d == 0) throw std::invalid_argument("sigma_d requires d >= 1");
    return {Kind::SigmaD, d};
  }
  static FunctionId divisors() { return {Kind::DivisorCount, 0}; }

  /// "lambda", "phi", "sigma", "sigma_3", "d".
  std::string name() const {
    switch (kind) {
      case Kind::CarmichaelLambda: return "lambda";
      case Kind::EulerPhi: return "phi";
      case Kind::SigmaD: return d == 1 ? "sigma" : "sigma_" + std::to_string(d);
      case Kind::DivisorCount: return "d";
    }
    return "?";
  }

  /// Inverse of name(); also accepts "sigma-d"/"sigma_d" with d supplied
  /// separately, and a few spelled-out aliases.
  static FunctionId parse(const std::string& s, unsigned d = 1) {
    if (s == "lambda" || s == "carmichael") return lambda();
    if (s == "phi" || s == "totient") return phi();
    if (s == "sigma") return sigma(d);
    if (s == "sigma-d" || s == "sigma_d") return sigma(d);
    if (s.rfind("sigma_", 0) == 0 && s.size() > 6) {
      return sigma(static_cast<unsigned>(std::stoul(s.substr(6))));
    }
    if (s == "d" || s == "divisors" || s == "tau") return divisors();
    throw std::invalid_argument("unknown function '" + s + "'");
  }

  friend bool operator==(const FunctionId&, const FunctionId&) = default;
};

inline std::uint64_t lcm_u64(std::uint64_t a, std::uint64_t b) {
  return a / std::gcd(a, b) * b;
}

/// f(p^e) for a single prime power.
inline Value prime_power_value(const FunctionId& f, std::uint64_t p, unsigned e) {
  switch (f.kind) {
    case FunctionId::Kind::CarmichaelLambda: {
      if (p == 2) {
        if (e <= 2) return e;  // lambda(2) = 1, lambda(4) = 2
        return Value{1} << (e - 2);
      }
      Value v = p - 1;
      for (unsigned k = 1; k < e; ++k) v = checked_mul(v, p);
      return v;
    }
    case FunctionId::Kind::EulerPhi: {
      Value v = p - 1;
      for (unsigned k = 1; k < e; ++k) v = checked_mul(v, p);
      return v;
    }
    case FunctionId::Kind::SigmaD: {
      Value pd = 1;
      for (unsigned k = 0; k < f.d; ++k) pd = checked_mul(pd, p);
      Value term = 1, sum = 1;
      for (unsigned k = 0; k < e; ++k) {
        term = checked_mul(term, pd);
        sum = checked_add(sum, term);
      }
      return sum;
    }
    case FunctionId::Kind::DivisorCount:
      return Value{e} + 1;
  }
  return 0;
}

/// Folds one prime-power contribution into an accumulated value: lcm for
/// lambda, product for everything else.
inline Value combine_values(const FunctionId& f, Value acc, Value part) {
  if (f.kind == FunctionId::Kind::CarmichaelLambda) {
    // lambda(n) <= n < 2^64
    return lcm_u64(static_cast<std::uint64_t>(acc), static_cast<std::uint64_t>(part));
  }
  return checked_mul(acc, part);
}

inline std::uint64_t carmichael_lambda(const FactoredInteger& fact) {
  std::uint64_t v = 1;
  for (const auto& [p, e] : fact.factors()) {
    v = lcm_u64(v, static_cast<std::uint64_t>(prime_power_value(FunctionId::lambda(), p, e)));
  }
  return v;
}

inline Value evaluate(const FunctionId& f, const FactoredInteger& fact) {
  if (f.kind == FunctionId::Kind::CarmichaelLambda) return carmichael_lambda(fact);
  Value v = 1;
  for (const auto& [p, e] : fact.factors()) v = combine_values(f, v, prime_power_value(f, p, e));
  return v;
}

inline constexpr std::uint64_t kBruteLambdaLimit = 1'000'000;

/// Smallest m >= 1 with a^m = 1 (mod n) for every a coprime to n, taken
/// straight from the definition: the running exponent is raised to the lcm
/// with each element's multiplicative order as elements are visited.
inline std::uint64_t brute_lambda(std::uint64_t n) {
  if (n == 0 || n > kBruteLambdaLimit) {
    throw std::invalid_argument("brute_lambda: n must be in [1, 10^6]");
  }
  if (n <= 2) return 1;
  std::uint64_t m = 1;
  for (std::uint64_t a = 2; a < n; ++a) {
    if (std::gcd(a, n) != 1) continue;
    // b = a^m; if b != 1 the order of a is m * ord(b).
    std::uint64_t b = detail::pow_mod(a, m, n);
    if (b == 1) continue;
    std::uint64_t ord = 1;
    for (std::uint64_t x = b; x != 1; x = x * b % n) ++ord;
    m *= ord;
  }
  return m;
}

}  // namespace lr
