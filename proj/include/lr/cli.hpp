#pragma once

// Job execution behind the lrtool command line: every pipeline writes its
// CSV/JSONL to files or the given output stream and returns an exit status
// (0 success, 1 verification failure, 2 usage or configuration error).

#include "lr/arith.hpp"
#include "lr/bounds.hpp"
#include "lr/runs.hpp"
#include "lr/shifted.hpp"
#include "lr/theta.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace lr::cli {

enum class ExitCode : int { kOk = 0, kVerificationFailed = 1, kUsage = 2 };

struct JobConfig {
  std::string command;
  FunctionId function = FunctionId::lambda();
  std::uint64_t limit = 0;
  std::vector<std::uint64_t> xs;  // sample points; empty means powers of ten up to limit
  Theta theta;
  std::int64_t a = -1;
  std::int64_t residue = 0;  // 0: both residues where the command allows it
  double C = 0.0;            // 0: estimate from samples
  std::uint64_t segment_size = kDefaultSegmentSize;
  unsigned threads = 0;  // 0: LR_THREADS, else hardware concurrency
  std::uint64_t seed = kDefaultSeed;
  std::string out;         // empty: the output stream
  std::string table_out;   // scan commands: checkpoint table CSV
  std::string checkpoint;  // scan commands: resumable state file
  std::uint64_t stop_after = 0;
};

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names = {"scan-equal",   "scan-monotone", "shifted",  "verify-lemma2",
                                                 "verify-lemma3", "theorem-table", "mertens", "estimate-c"};
  return names;
}

/// Six significant digits.
inline std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  if (const char* env = std::getenv("LR_THREADS"); env != nullptr && *env != '\0') {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline std::vector<std::uint64_t> powers_of_ten_up_to(std::uint64_t limit, std::uint64_t from = 10) {
  std::vector<std::uint64_t> xs;
  for (std::uint64_t x = from; x <= limit; x *= 10) {
    xs.push_back(x);
    if (x > limit / 10) break;
  }
  return xs;
}

namespace detail {

class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw std::runtime_error("cannot open " + path + " for writing");
      stream_ = &file_;
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

inline std::string table_path_for(const JobConfig& cfg) {
  if (!cfg.table_out.empty()) return cfg.table_out;
  if (cfg.out.empty()) return "";
  const std::string suffix = ".csv";
  if (cfg.out.size() > suffix.size() && cfg.out.compare(cfg.out.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return cfg.out.substr(0, cfg.out.size() - suffix.size()) + ".table.csv";
  }
  return cfg.out + ".table.csv";
}

inline std::string run_value(const RunRecord& r) {
  if (r.kind == RunKind::Equal) return to_string(r.value);
  return to_string(r.value) + ":" + to_string(r.last);
}

inline double round6(double v) { return std::strtod(fmt6(v).c_str(), nullptr); }

inline int scan_job(const JobConfig& cfg, RunKind kind, std::ostream& out, std::ostream& diag) {
  ScanOptions opt;
  opt.segment_size = cfg.segment_size;
  opt.threads = resolve_threads(cfg.threads);
  opt.checkpoint_path = cfg.checkpoint;
  opt.stop_after = cfg.stop_after;
  auto xs = cfg.xs.empty() ? powers_of_ten_up_to(cfg.limit) : cfg.xs;
  const auto res = scan(cfg.function, kind, cfg.limit, xs, opt);
  if (!res.complete) {
    diag << "stopped after " << res.segments_done << " segments; rerun with the same --checkpoint to resume\n";
    return static_cast<int>(ExitCode::kOk);
  }
  const std::string fname = cfg.function.name();
  const std::string kname = to_string(kind);
  {
    Sink sink(cfg.out, out);
    *sink << "function,kind,n,k,value\n";
    for (const auto& r : res.runs) {
      *sink << fname << ',' << kname << ',' << r.n << ',' << r.k << ',' << run_value(r) << '\n';
    }
  }
  {
    const std::string tpath = table_path_for(cfg);
    if (tpath.empty()) out << '\n';
    Sink sink(tpath, out);
    *sink << "function,kind,x,longest_k\n";
    for (auto [x, k] : res.table) *sink << fname << ',' << kname << ',' << x << ',' << k << '\n';
  }
  diag << (kind == RunKind::Equal ? "F_" : "G_") << fname << "(" << cfg.limit << ") = " << res.longest << " ("
       << res.runs.size() << " witness" << (res.runs.size() == 1 ? "" : "es") << ")\n";
  return static_cast<int>(ExitCode::kOk);
}

inline void shifted_row(std::ostream& os, const CountReport& r) {
  os << r.x << ',' << r.a << ',' << r.theta.str() << ',' << r.residue() << ',' << r.count_p << ','
     << fmt6(r.delta_hat) << ',' << r.count_q << ',' << r.violations.size() << '\n';
}

inline int shifted_job(const JobConfig& cfg, std::ostream& out, std::ostream&) {
  auto xs = cfg.xs.empty() ? std::vector<std::uint64_t>{cfg.limit} : cfg.xs;
  const auto rows = density_table(xs, cfg.a, cfg.theta, resolve_threads(cfg.threads));
  Sink sink(cfg.out, out);
  *sink << "x,a,theta,residue,count_p,delta_hat,count_q,violations\n";
  for (const auto& r : rows) shifted_row(*sink, r);
  return static_cast<int>(ExitCode::kOk);
}

inline int lemma2_job(const JobConfig& cfg, std::ostream& out, std::ostream& diag) {
  std::vector<std::int64_t> residues =
      cfg.residue == 0 ? std::vector<std::int64_t>{1, -1} : std::vector<std::int64_t>{cfg.residue};
  const unsigned threads = resolve_threads(cfg.threads);
  // q1 q2 > x^(2 theta) >= x + 1 > p - residue forces at most one large q.
  const bool forced_unique =
      static_cast<Value>(floor_power(cfg.limit, cfg.theta) + 1) * (floor_power(cfg.limit, cfg.theta) + 1) > cfg.limit + 1;
  const PrimeTable primes(cfg.limit);
  bool failed = false;
  Sink sink(cfg.out, out);
  *sink << "x,theta,residue,count_p,count_q,partition_sum,violations,identity_holds\n";
  for (auto r : residues) {
    check_residue(r);
    const auto rep = q_set_count(cfg.limit, cfg.theta, r, threads);
    std::uint64_t sum = 0;
    for (auto [q, c] : rep.q_counts) {
      const auto walk = per_q_progression_count(cfg.limit, q, r, primes);
      if (walk != c) {
        diag << "progression count mismatch at q = " << q << ": " << walk << " vs " << c << '\n';
        failed = true;
      }
      sum += walk;
    }
    const bool identity = sum == rep.count_p;
    if (rep.violations.empty() && !identity) failed = true;
    if (forced_unique && !rep.violations.empty()) failed = true;
    if (rep.violations.empty() && rep.count_q > rep.count_p) failed = true;
    *sink << rep.x << ',' << rep.theta.str() << ',' << r << ',' << rep.count_p << ',' << rep.count_q << ',' << sum
          << ',' << rep.violations.size() << ',' << (identity ? "true" : "false") << '\n';
    if (!rep.violations.empty()) {
      diag << "residue " << r << ": " << rep.violations.size() << " primes with two large q, first p = "
           << rep.violations.front() << '\n';
    }
  }
  return static_cast<int>(failed ? ExitCode::kVerificationFailed : ExitCode::kOk);
}

inline nlohmann::json lemma3_json(const Lemma3Report& rep) {
  nlohmann::json j;
  j["function"] = rep.run.f.name();
  j["n"] = rep.run.n;
  j["k"] = rep.run.k;
  j["T"] = to_string(rep.run.value);
  j["c"] = rep.params.c.str();
  j["C"] = round6(rep.params.C);
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& pc : rep.prime_checks) {
    checks.push_back({{"p", pc.p}, {"i", pc.i}, {"f", to_string(pc.f_value)}, {"divides", pc.divides}});
  }
  j["prime_checks"] = checks;
  nlohmann::json qs = nlohmann::json::array();
  for (const auto& w : rep.qualifying) qs.push_back({{"q", w.q}, {"p", w.p}, {"i", w.i}});
  j["q"] = qs;
  j["product"] = rep.product.str();
  j["log_bound"] = round6(rep.log_bound);
  j["bound"] = std::isfinite(rep.bound_value) ? nlohmann::json(round6(rep.bound_value)) : nlohmann::json("inf");
  j["bound_holds"] = rep.bound_holds;
  j["failures"] = rep.failures;
  return j;
}

inline int lemma3_job(const JobConfig& cfg, std::ostream& out, std::ostream& diag) {
  ScanOptions opt;
  opt.segment_size = cfg.segment_size;
  opt.threads = resolve_threads(cfg.threads);
  double C = cfg.C;
  if (C <= 0.0) {
    const auto est = estimate_C(cfg.xs.empty() ? powers_of_ten_up_to(std::max<std::uint64_t>(cfg.limit, 100), 100)
                                               : cfg.xs,
                                cfg.theta, 1, opt.threads);
    C = est.C > 0.0 ? est.C : 1.0;
    if (est.warning) diag << "warning: estimated C is 0 on these samples; using C = 1\n";
  }
  const BoundParams params(cfg.theta, C);
  const auto res = scan_equal(cfg.function, cfg.limit, {}, opt);
  bool failed = false;
  {
    Sink sink(cfg.out, out);
    for (const auto& run : res.runs) {
      const auto rep = audit_lemma3(run, params);
      failed = failed || !rep.ok();
      *sink << lemma3_json(rep).dump() << '\n';
    }
  }
  const auto audit = divisibility_audit(cfg.function, cfg.limit);
  diag << cfg.function.name() << ": F(" << cfg.limit << ") = " << res.longest << ", " << res.runs.size()
       << " record runs audited; exact-divisor pairs checked = " << audit.pairs_checked
       << ", violations = " << audit.violations << '\n';
  for (const auto& ex : audit.examples) {
    diag << "  counterexample m = " << ex.m << ", p = " << ex.p << ", f(m) = " << to_string(ex.f_value) << '\n';
  }
  failed = failed || audit.violations != 0;
  return static_cast<int>(failed ? ExitCode::kVerificationFailed : ExitCode::kOk);
}

inline int theorem_job(const JobConfig& cfg, std::ostream& out, std::ostream&) {
  ScanOptions opt;
  opt.segment_size = cfg.segment_size;
  opt.threads = resolve_threads(cfg.threads);
  auto xs = cfg.xs.empty() ? powers_of_ten_up_to(cfg.limit, 1000) : cfg.xs;
  if (xs.empty()) xs.push_back(cfg.limit);
  const auto rows = theorem_report(xs, BoundParams(cfg.theta, cfg.C > 0 ? cfg.C : 1.0), opt);
  Sink sink(cfg.out, out);
  *sink << "x,F_lambda,bound\n";
  for (const auto& r : rows) *sink << r.x << ',' << r.f_lambda << ',' << fmt6(r.bound) << '\n';
  return static_cast<int>(ExitCode::kOk);
}

inline int mertens_job(const JobConfig& cfg, std::ostream& out, std::ostream&) {
  const auto rep = mertens_report(cfg.limit);
  Sink sink(cfg.out, out);
  *sink << "limit,max_ratio,argmax,lambda_le_n\n";
  *sink << rep.limit << ',' << fmt6(rep.max_ratio) << ',' << rep.argmax << ','
        << (rep.lambda_at_most_n ? "true" : "false") << '\n';
  return static_cast<int>(ExitCode::kOk);
}

inline int estimate_job(const JobConfig& cfg, std::ostream& out, std::ostream& diag) {
  auto xs = cfg.xs.empty() ? powers_of_ten_up_to(cfg.limit, 100) : cfg.xs;
  const std::int64_t residue = cfg.residue == 0 ? 1 : cfg.residue;
  check_residue(residue);
  const auto est = estimate_C(xs, cfg.theta, residue, resolve_threads(cfg.threads));
  Sink sink(cfg.out, out);
  *sink << "x,theta,residue,count_q,C\n";
  for (const auto& s : est.samples) {
    *sink << s.x << ',' << cfg.theta.str() << ',' << residue << ',' << s.count_q << ',' << fmt6(s.ratio) << '\n';
  }
  *sink << "min," << cfg.theta.str() << ',' << residue << ",," << fmt6(est.C) << '\n';
  if (est.warning) diag << "warning: C = 0; some sample has no prime q above x^theta\n";
  return static_cast<int>(ExitCode::kOk);
}

}  // namespace detail

inline void validate(const JobConfig& cfg) {
  if (std::find(commands().begin(), commands().end(), cfg.command) == commands().end()) {
    throw std::invalid_argument("unknown command '" + cfg.command + "'");
  }
  if (cfg.limit < 2 && cfg.xs.empty()) throw std::invalid_argument("--limit must be at least 2");
  for (auto x : cfg.xs) {
    if (x < 2) throw std::invalid_argument("sample points must be at least 2");
  }
  if (cfg.residue != 0 && cfg.residue != 1 && cfg.residue != -1) {
    throw std::invalid_argument("--residue must be 1 or -1");
  }
}

/// Executes one job. Human-readable diagnostics go to `diag`; data goes to
/// cfg.out or, when empty, to `out`.
inline int run(const JobConfig& config, std::ostream& out = std::cout, std::ostream& diag = std::cerr) {
  try {
    validate(config);
    JobConfig cfg = config;
    if (cfg.limit == 0 && !cfg.xs.empty()) cfg.limit = *std::max_element(cfg.xs.begin(), cfg.xs.end());
    const std::string& c = cfg.command;
    if (c == "scan-equal") return detail::scan_job(cfg, RunKind::Equal, out, diag);
    if (c == "scan-monotone") return detail::scan_job(cfg, RunKind::NonIncreasing, out, diag);
    if (c == "shifted") return detail::shifted_job(cfg, out, diag);
    if (c == "verify-lemma2") return detail::lemma2_job(cfg, out, diag);
    if (c == "verify-lemma3") return detail::lemma3_job(cfg, out, diag);
    if (c == "theorem-table") return detail::theorem_job(cfg, out, diag);
    if (c == "mertens") return detail::mertens_job(cfg, out, diag);
    return detail::estimate_job(cfg, out, diag);
  } catch (const VerificationError& e) {
    diag << "verification failed: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kVerificationFailed);
  } catch (const std::logic_error& e) {
    // invalid_argument derives from logic_error; it is a usage problem.
    if (dynamic_cast<const std::invalid_argument*>(&e) != nullptr) {
      diag << "error: " << e.what() << '\n';
      return static_cast<int>(ExitCode::kUsage);
    }
    diag << "verification failed: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kVerificationFailed);
  } catch (const std::exception& e) {
    diag << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kUsage);
  }
}

}  // namespace lr::cli
