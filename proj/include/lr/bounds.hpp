#pragma once

// Checks of the divisibility mechanism behind the lower bound on the common
// value T of an equal run, the closed-form bound exp(C c (k/2)^c), and the
// growth tables that compare desk-scale F_lambda(x) with (log x)^(1/c).

#include "lr/arith.hpp"
#include "lr/runs.hpp"
#include "lr/shifted.hpp"
#include "lr/sieve.hpp"
#include "lr/theta.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lr {

using BigInt = boost::multiprecision::cpp_int;

inline BigInt to_big(Value v) {
  BigInt hi = static_cast<std::uint64_t>(v >> 64);
  return (hi << 64) | BigInt(static_cast<std::uint64_t>(v));
}

/// The exponent c (default 0.677) and the implied constant C of the q-count
/// lower bound, which is estimated empirically and never fixed here.
struct BoundParams {
  Theta c;
  double C = 1.0;

  BoundParams() = default;
  BoundParams(Theta c_, double C_) : c(c_), C(C_) {
    if (!(C_ > 0.0) || !std::isfinite(C_)) throw std::invalid_argument("BoundParams: C must be positive");
  }
};

/// Thrown when a divisibility that must hold does not.
class VerificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Smallest i in [1, k] with p || n + i. Needs 2p <= k, which guarantees two
/// consecutive multiples of p in the window, at most one of them divisible
/// by p^2.
inline std::uint64_t exact_divisor_witness(std::uint64_t n, std::uint64_t k, std::uint64_t p) {
  if (p < 2) throw std::invalid_argument("exact_divisor_witness: p must be at least 2");
  if (2 * static_cast<Value>(p) > k) throw std::invalid_argument("exact_divisor_witness: requires p <= k/2");
  const Value p2 = static_cast<Value>(p) * p;
  std::uint64_t i = p - n % p;  // first i >= 1 with p | n + i
  for (; i <= k; i += p) {
    if ((static_cast<Value>(n) + i) % p2 != 0) return i;
  }
  throw std::logic_error("exact_divisor_witness: no exact multiple found");
}

/// Which neighbour of p divides f(m) whenever p || m: p - 1 for lambda and
/// phi, p + 1 for sigma_d.
inline int mechanism_shift(const FunctionId& f) {
  switch (f.kind) {
    case FunctionId::Kind::CarmichaelLambda:
    case FunctionId::Kind::EulerPhi:
      return -1;
    case FunctionId::Kind::SigmaD:
      return +1;
    case FunctionId::Kind::DivisorCount:
      break;
  }
  throw std::invalid_argument("no shifted-prime divisibility for " + f.name());
}

struct QWitness {
  std::uint64_t q = 0;
  std::uint64_t p = 0;  // prime p <= k/2 with q | p + shift
  std::uint64_t i = 0;  // p || n + i
};

struct PrimeCheck {
  std::uint64_t p = 0;
  std::uint64_t i = 0;
  Value f_value = 0;  // f(n + i)
  bool divides = false;  // (p + shift) | f(n + i)
};

struct Lemma3Report {
  RunRecord run;
  BoundParams params;
  std::vector<PrimeCheck> prime_checks;  // every prime p <= k/2
  std::vector<QWitness> qualifying;      // every prime q > (k/2)^c reached by some p
  BigInt product = 1;                    // product of qualifying q
  double log_product = 0.0;
  double log_bound = 0.0;                // C c (k/2)^c
  double bound_value = 1.0;              // exp(log_bound), may be inf
  double log_T = 0.0;
  bool bound_holds = false;              // log_bound <= log T; informational, C is empirical
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
};

/// Runs every check of the mechanism on `run` and records failures instead
/// of throwing.
inline Lemma3Report audit_lemma3(const RunRecord& run, const BoundParams& params) {
  if (run.kind != RunKind::Equal) throw std::invalid_argument("audit_lemma3: needs an equal run");
  const int shift = mechanism_shift(run.f);
  Lemma3Report rep;
  rep.run = run;
  rep.params = params;

  const long double half = static_cast<long double>(run.k) / 2.0L;
  const long double c = params.c.value_ld();
  const long double q_floor = std::pow(half, c);
  rep.log_bound = static_cast<double>(params.C * c * q_floor);
  rep.bound_value = std::exp(rep.log_bound);
  rep.log_T = std::log(static_cast<double>(run.value));
  rep.bound_holds = rep.log_bound <= rep.log_T;

  const BigInt T = to_big(run.value);
  const std::uint64_t pmax = run.k / 2;
  std::vector<std::pair<std::uint64_t, QWitness>> found;  // keyed by q
  for (std::uint64_t p = 2; p <= pmax; ++p) {
    if (!is_prime(p)) continue;
    const std::uint64_t i = exact_divisor_witness(run.n, run.k, p);
    const Value fv = evaluate(run.f, factorize(run.n + i));
    const std::uint64_t neighbour = shift < 0 ? p - 1 : p + 1;
    PrimeCheck pc{p, i, fv, fv % neighbour == 0};
    if (!pc.divides) {
      rep.failures.push_back("(p" + std::string(shift < 0 ? "-" : "+") + "1) = " + std::to_string(neighbour) +
                             " does not divide f(" + std::to_string(run.n + i) + ") = " + to_string(fv));
    }
    if (fv != run.value) {
      rep.failures.push_back("f(" + std::to_string(run.n + i) + ") differs from the run value");
    }
    rep.prime_checks.push_back(pc);
    const auto fm = factorize(neighbour);
    for (const auto& [q, e] : fm.factors()) {
      if (static_cast<long double>(q) <= q_floor) continue;
      auto it = std::find_if(found.begin(), found.end(), [&](const auto& e2) { return e2.first == q; });
      if (it == found.end()) found.emplace_back(q, QWitness{q, p, i});
    }
  }
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [q, w] : found) {
    rep.qualifying.push_back(w);
    if (T % q != 0) rep.failures.push_back("q = " + std::to_string(q) + " does not divide T = " + to_string(run.value));
    rep.product *= q;
    rep.log_product += std::log(static_cast<double>(q));
  }
  if (T % rep.product != 0) rep.failures.push_back("product of qualifying q does not divide T");
  if (rep.product > T) rep.failures.push_back("product of qualifying q exceeds T");
  return rep;
}

/// audit_lemma3, but any failed divisibility is a VerificationError.
inline Lemma3Report verify_lemma3(const RunRecord& run, const BoundParams& params) {
  Lemma3Report rep = audit_lemma3(run, params);
  if (!rep.ok()) {
    throw VerificationError("run n = " + std::to_string(run.n) + ", k = " + std::to_string(run.k) + ": " +
                            rep.failures.front());
  }
  return rep;
}

struct DivisibilityCounterexample {
  std::uint64_t m = 0;
  std::uint64_t p = 0;
  Value f_value = 0;
};

struct DivisibilityAudit {
  FunctionId f;
  std::uint64_t limit = 0;
  std::uint64_t pairs_checked = 0;  // (m, p) with p || m
  std::uint64_t violations = 0;
  std::vector<DivisibilityCounterexample> examples;  // first few, by m
};

/// For every m <= limit and every prime p || m, checks (p + shift) | f(m).
inline DivisibilityAudit divisibility_audit(const FunctionId& f, std::uint64_t limit,
                                            std::size_t keep_examples = 10) {
  const int shift = mechanism_shift(f);
  if (limit < 1) throw std::invalid_argument("divisibility_audit: limit must be positive");
  DivisibilityAudit audit;
  audit.f = f;
  audit.limit = limit;
  const BasePrimes base = BasePrimes::up_to(isqrt(limit));
  constexpr std::uint64_t kBlock = 1u << 18;
  for (std::uint64_t lo = 1; lo <= limit; lo += kBlock) {
    const std::uint64_t hi = std::min(lo + kBlock, limit + 1);
    const auto values = evaluate_range(f, lo, hi, base);
    factor_range(lo, hi, base, [&](std::size_t j, std::uint64_t p, unsigned e) {
      if (e != 1) return;
      ++audit.pairs_checked;
      const std::uint64_t neighbour = shift < 0 ? p - 1 : p + 1;
      if (values[j] % neighbour == 0) return;
      ++audit.violations;
      if (audit.examples.size() < keep_examples) audit.examples.push_back({lo + j, p, values[j]});
    });
  }
  std::sort(audit.examples.begin(), audit.examples.end(),
            [](const auto& a, const auto& b) { return a.m != b.m ? a.m < b.m : a.p < b.p; });
  return audit;
}

struct TheoremRow {
  std::uint64_t x = 0;
  std::uint64_t f_lambda = 0;
  double bound = 0.0;  // (log x)^(1/c)
};

/// F_lambda(x) next to (log x)^(1/c). Throws std::logic_error if the F
/// column ever decreases.
inline std::vector<TheoremRow> theorem_report(std::vector<std::uint64_t> xs, const BoundParams& params,
                                              const ScanOptions& options = {}) {
  if (xs.empty()) throw std::invalid_argument("theorem_report: no x values");
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  if (xs.front() < 2) throw std::invalid_argument("theorem_report: x must be at least 2");
  const auto scan = scan_equal(FunctionId::lambda(), xs.back(), xs, options);
  if (!scan.complete) throw std::runtime_error("theorem_report: scan interrupted");
  const double inv_c = 1.0 / params.c.value();
  std::vector<TheoremRow> rows;
  for (auto x : xs) {
    auto it = std::find_if(scan.table.begin(), scan.table.end(), [&](const auto& e) { return e.first == x; });
    TheoremRow row{x, it->second, std::pow(std::log(static_cast<double>(x)), inv_c)};
    if (!rows.empty() && row.f_lambda < rows.back().f_lambda) {
      throw std::logic_error("F_lambda decreased between x = " + std::to_string(rows.back().x) + " and " +
                             std::to_string(x));
    }
    rows.push_back(row);
  }
  return rows;
}

struct MertensReport {
  std::uint64_t limit = 0;
  double max_ratio = 0.0;  // max of sigma(n) / (n log log n), 10 <= n <= limit
  std::uint64_t argmax = 0;
  bool lambda_at_most_n = true;
};

inline MertensReport mertens_report(std::uint64_t limit) {
  if (limit < 10) throw std::invalid_argument("mertens_report: limit must be at least 10");
  MertensReport rep;
  rep.limit = limit;
  const BasePrimes base = BasePrimes::up_to(isqrt(limit));
  constexpr std::uint64_t kBlock = 1u << 18;
  for (std::uint64_t lo = 1; lo <= limit; lo += kBlock) {
    const std::uint64_t hi = std::min(lo + kBlock, limit + 1);
    const auto sigma = evaluate_range(FunctionId::sigma(), lo, hi, base);
    const auto lambda = evaluate_range(FunctionId::lambda(), lo, hi, base);
    for (std::uint64_t n = lo; n < hi; ++n) {
      if (lambda[n - lo] > n) {
        rep.lambda_at_most_n = false;
        throw std::logic_error("lambda(" + std::to_string(n) + ") exceeds n");
      }
      if (n < 10) continue;
      const double nd = static_cast<double>(n);
      const double ratio = static_cast<double>(sigma[n - lo]) / (nd * std::log(std::log(nd)));
      if (ratio > rep.max_ratio) {
        rep.max_ratio = ratio;
        rep.argmax = n;
      }
    }
  }
  return rep;
}

struct CSample {
  std::uint64_t x = 0;
  std::uint64_t count_q = 0;
  double ratio = 0.0;  // count_q log x / x^theta
};

struct CEstimate {
  double C = 0.0;
  Theta theta;
  std::int64_t residue = 1;
  std::vector<CSample> samples;
  bool warning = false;  // C == 0: some sample had no large q
};

/// Largest C with C x^theta / log x <= count_q on every sample.
inline CEstimate estimate_C(const std::vector<std::uint64_t>& xs, const Theta& theta, std::int64_t residue = 1,
                            unsigned threads = 1) {
  if (xs.empty()) throw std::invalid_argument("estimate_C: no sample points");
  CEstimate est;
  est.theta = theta;
  est.residue = residue;
  est.C = std::numeric_limits<double>::infinity();
  for (auto x : xs) {
    const auto rep = q_set_count(x, theta, residue, threads);
    const double xd = static_cast<double>(x);
    const double ratio = static_cast<double>(rep.count_q) * std::log(xd) / std::pow(xd, theta.value());
    est.samples.push_back({x, rep.count_q, ratio});
    est.C = std::min(est.C, ratio);
  }
  est.warning = est.C == 0.0;
  return est;
}

}  // namespace lr
