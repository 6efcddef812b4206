// lrtool: command-line front end for the run scanners, shifted-prime counts
// and bound reports.

#include "lr/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

// Accepts "1000000", "1e6" and "10^6".
std::uint64_t parse_count(const std::string& s) {
  if (const auto caret = s.find('^'); caret != std::string::npos) {
    const std::uint64_t base = std::stoull(s.substr(0, caret));
    const unsigned exp = static_cast<unsigned>(std::stoul(s.substr(caret + 1)));
    std::uint64_t v = 1;
    for (unsigned i = 0; i < exp; ++i) {
      if (__builtin_mul_overflow(v, base, &v)) throw std::invalid_argument("value out of range: " + s);
    }
    return v;
  }
  if (s.find_first_of("eE.") != std::string::npos) {
    const long double v = std::stold(s);
    if (v < 0 || v != std::floor(v) || v >= 1.8e19L) throw std::invalid_argument("not a count: " + s);
    return static_cast<std::uint64_t>(v);
  }
  std::size_t used = 0;
  const auto v = std::stoull(s, &used);
  if (used != s.size()) throw std::invalid_argument("not a count: " + s);
  return v;
}

constexpr const char* kSchemas = R"(Output schemas (column order is fixed):
  scan-equal, scan-monotone  runs:   function,kind,n,k,value
                                     (value is T for equal runs, first:last otherwise;
                                      a run occupies n+1 .. n+k)
                             table:  function,kind,x,longest_k
  shifted                    x,a,theta,residue,count_p,delta_hat,count_q,violations
  verify-lemma2              x,theta,residue,count_p,count_q,partition_sum,violations,identity_holds
  verify-lemma3              JSONL, one object per record run
  theorem-table              x,F_lambda,bound
  mertens                    limit,max_ratio,argmax,lambda_le_n
  estimate-c                 x,theta,residue,count_q,C   (last row: min)
Exit status: 0 success, 1 verification failure, 2 usage error.
Threads default to LR_THREADS, then to the hardware concurrency.)";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Longest runs of lambda, phi, sigma_d and d, and the shifted-prime counts behind their bounds"};
  app.footer(kSchemas);
  app.require_subcommand(1);

  std::string function = "lambda";
  unsigned d = 1;
  std::string limit_s, theta_s = "0.677", segment_s, stop_s;
  std::vector<std::string> xs_s;
  lr::cli::JobConfig cfg;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--limit,-x", limit_s, "Scan limit x (accepts 1e6 or 10^6)");
    sub->add_option("--threads", cfg.threads, "Worker threads (overrides LR_THREADS)");
    sub->add_option("--seed", cfg.seed, "Seed for randomized factor splitting");
    sub->add_option("--out,-o", cfg.out, "Output file (default: stdout)");
  };
  auto add_function = [&](CLI::App* sub) {
    sub->add_option("--function,-f", function, "lambda | phi | sigma | sigma-d | d")->capture_default_str();
    sub->add_option("--d", d, "Power d for sigma-d")->capture_default_str();
  };
  auto add_samples = [&](CLI::App* sub) {
    sub->add_option("--x-values,--samples", xs_s, "Sample points, comma separated")->delimiter(',');
  };
  auto add_theta = [&](CLI::App* sub) {
    sub->add_option("--theta,--c", theta_s, "Exponent in (0,1), exact decimal")->capture_default_str();
  };
  auto add_scan = [&](CLI::App* sub) {
    sub->add_option("--segment-size", segment_s, "Integers per sieve segment (default 2^22)");
  };

  std::vector<CLI::App*> subs;
  for (const char* name : {"scan-equal", "scan-monotone"}) {
    auto* sub = app.add_subcommand(name, std::string(name) == std::string("scan-equal")
                                             ? "Longest runs f(n+1) = ... = f(n+k), n+k <= x"
                                             : "Longest runs f(n+1) >= ... >= f(n+k), n+k <= x");
    add_common(sub);
    add_function(sub);
    add_samples(sub);
    add_scan(sub);
    sub->add_option("--table", cfg.table_out, "Checkpoint table CSV (default: <out>.table.csv)");
    sub->add_option("--checkpoint", cfg.checkpoint, "Resumable state file");
    sub->add_option("--stop-after", stop_s, "Stop after this many segments (resume later)")->group("");
    subs.push_back(sub);
  }
  {
    auto* sub = app.add_subcommand("shifted", "Count primes p <= x with P(p+a) > x^theta");
    add_common(sub);
    add_samples(sub);
    add_theta(sub);
    sub->add_option("--a", cfg.a, "Shift a")->capture_default_str();
    subs.push_back(sub);
  }
  {
    auto* sub = app.add_subcommand("verify-lemma2", "Uniqueness of the large q and the partition identity");
    add_common(sub);
    add_theta(sub);
    sub->add_option("--residue", cfg.residue, "1 or -1 (default: both)");
    subs.push_back(sub);
  }
  {
    auto* sub = app.add_subcommand("verify-lemma3", "Audit record equal runs and exact-divisor divisibility");
    add_common(sub);
    add_function(sub);
    add_samples(sub);
    add_theta(sub);
    add_scan(sub);
    sub->add_option("--C", cfg.C, "Constant C (default: estimated from samples)");
    subs.push_back(sub);
  }
  {
    auto* sub = app.add_subcommand("theorem-table", "F_lambda(x) against (log x)^(1/c)");
    add_common(sub);
    add_samples(sub);
    add_theta(sub);
    add_scan(sub);
    subs.push_back(sub);
  }
  {
    auto* sub = app.add_subcommand("mertens", "max sigma(n)/(n log log n) over 10 <= n <= x");
    add_common(sub);
    subs.push_back(sub);
  }
  {
    auto* sub = app.add_subcommand("estimate-c", "Fit C = min count_q log x / x^theta over samples");
    add_common(sub);
    add_samples(sub);
    add_theta(sub);
    sub->add_option("--residue", cfg.residue, "1 or -1 (default: 1)");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(lr::cli::ExitCode::kUsage);
  }

  try {
    for (auto* sub : subs) {
      if (sub->parsed()) cfg.command = sub->get_name();
    }
    cfg.function = lr::FunctionId::parse(function, d);
    if (!limit_s.empty()) cfg.limit = parse_count(limit_s);
    for (const auto& x : xs_s) cfg.xs.push_back(parse_count(x));
    cfg.theta = lr::Theta::parse(theta_s);
    if (!segment_s.empty()) cfg.segment_size = parse_count(segment_s);
    if (!stop_s.empty()) cfg.stop_after = parse_count(stop_s);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(lr::cli::ExitCode::kUsage);
  }
  return lr::cli::run(cfg);
}
