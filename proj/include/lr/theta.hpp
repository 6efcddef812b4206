#pragma once

// Exponents such as 0.677 kept as exact decimals, and the integer threshold
// floor(x^theta) they induce.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace lr {

/// A decimal exponent num / 10^k in the open interval (0, 1).
class Theta {
 public:
  Theta() : Theta(677, 1000) {}

  /// Parses "0.677", ".5" or "0.5000". At most six decimal places.
  static Theta parse(const std::string& text) {
    std::string s = text;
    const auto dot = s.find('.');
    std::string int_part = dot == std::string::npos ? s : s.substr(0, dot);
    std::string frac = dot == std::string::npos ? "" : s.substr(dot + 1);
    while (!frac.empty() && frac.back() == '0') frac.pop_back();
    auto digits_only = [](const std::string& t) {
      return t.find_first_not_of("0123456789") == std::string::npos;
    };
    if (s.empty() || !digits_only(int_part) || !digits_only(frac) ||
        (int_part.empty() && frac.empty())) {
      throw std::invalid_argument("theta: not a decimal number: '" + text + "'");
    }
    if (!int_part.empty() && std::stoull(int_part) != 0) {
      throw std::invalid_argument("theta must lie in (0, 1), got " + text);
    }
    if (frac.size() > 6) throw std::invalid_argument("theta: at most 6 decimal places");
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    const std::int64_t num = frac.empty() ? 0 : std::stoll(frac);
    return Theta(num, den);
  }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  long double value_ld() const {
    return static_cast<long double>(num_) / static_cast<long double>(den_);
  }

  /// Shortest decimal form, e.g. "0.677".
  std::string str() const {
    std::string frac = std::to_string(num_);
    std::string digits = std::to_string(den_).substr(1);
    while (frac.size() < digits.size()) frac.insert(frac.begin(), '0');
    return "0." + frac;
  }

  friend bool operator==(const Theta&, const Theta&) = default;

 private:
  Theta(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
    if (num_ <= 0 || num_ >= den_) throw std::invalid_argument("theta must lie in (0, 1)");
    reduce();
  }

  void reduce() {
    while (num_ % 10 == 0 && den_ % 10 == 0) {
      num_ /= 10;
      den_ /= 10;
    }
  }

  std::int64_t num_;
  std::int64_t den_;
};

/// floor(x^theta), exact. A prime q satisfies q > x^theta iff q > this value.
inline std::uint64_t floor_power(std::uint64_t x, const Theta& theta) {
  if (x == 0) return 0;
  const long double guess = std::pow(static_cast<long double>(x), theta.value_ld());
  auto t = static_cast<std::uint64_t>(guess);
  // t^den <= x^num  <=>  den*log t <= num*log x; settle near-ties exactly.
  auto not_above = [&](std::uint64_t cand) {
    if (cand == 0) return true;
    const long double lhs = theta.den() * std::log(static_cast<long double>(cand));
    const long double rhs = theta.num() * std::log(static_cast<long double>(x));
    const long double slack = 1e-12L * std::max<long double>(1.0L, std::fabs(rhs));
    if (lhs < rhs - slack) return true;
    if (lhs > rhs + slack) return false;
    using boost::multiprecision::cpp_int;
    using boost::multiprecision::pow;
    return pow(cpp_int(cand), static_cast<unsigned>(theta.den())) <=
           pow(cpp_int(x), static_cast<unsigned>(theta.num()));
  };
  while (t > 0 && !not_above(t)) --t;
  while (not_above(t + 1)) ++t;
  return t;
}

}  // namespace lr
