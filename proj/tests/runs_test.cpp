#include "lr/bounds.hpp"
#include "lr/runs.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

namespace lr {
namespace {

std::vector<std::uint64_t> starts(const ScanResult& r) {
  std::vector<std::uint64_t> out;
  for (const auto& run : r.runs) out.push_back(run.n);
  return out;
}

ScanOptions small_segments(std::uint64_t size, unsigned threads = 1) {
  ScanOptions o;
  o.segment_size = size;
  o.threads = threads;
  return o;
}

// Values f(1..x) via factorize, with a dummy slot at index 0.
std::vector<Value> direct_values(const FunctionId& f, std::uint64_t x) {
  std::vector<Value> v(x + 1, 0);
  for (std::uint64_t n = 1; n <= x; ++n) v[n] = evaluate(f, factorize(n));
  return v;
}

TEST(ScanEqual, LambdaToTen) {
  const auto r = scan_equal(FunctionId::lambda(), 10);
  EXPECT_EQ(r.longest, 2u);
  EXPECT_EQ(starts(r), (std::vector<std::uint64_t>{0, 2}));
  EXPECT_EQ(r.runs.front().value, Value{1});
}

TEST(ScanEqual, LambdaToFour) {
  const auto r = scan_equal(FunctionId::lambda(), 4);
  EXPECT_EQ(r.longest, 2u);
  EXPECT_EQ(starts(r), (std::vector<std::uint64_t>{0, 2}));
}

TEST(ScanEqual, TotientTripleAt5185) {
  const auto r = scan_equal(FunctionId::phi(), 5188);
  EXPECT_EQ(r.longest, 3u);
  ASSERT_EQ(r.runs.size(), 1u);
  EXPECT_EQ(r.runs[0].n, 5185u);
  EXPECT_EQ(r.runs[0].value, Value{2592});
  // One short of the triple there are only pairs.
  EXPECT_EQ(scan_equal(FunctionId::phi(), 5187).longest, 2u);
}

TEST(ScanEqual, DivisorCountTriple) {
  const auto r = scan_equal(FunctionId::divisors(), 35);
  EXPECT_EQ(r.longest, 3u);
  EXPECT_EQ(starts(r), (std::vector<std::uint64_t>{32}));
}

TEST(ScanMonotone, LambdaToTen) {
  const auto r = scan_monotone(FunctionId::lambda(), 10);
  EXPECT_EQ(r.longest, 2u);
  EXPECT_EQ(starts(r), (std::vector<std::uint64_t>{0, 2, 4, 6, 8}));
  EXPECT_EQ(r.runs[2].value, Value{4});
  EXPECT_EQ(r.runs[2].last, Value{2});
}

TEST(ScanMonotone, TiesCount) {
  const auto r = scan_monotone(FunctionId::phi(), 3);
  EXPECT_EQ(r.longest, 2u);
  EXPECT_EQ(starts(r), (std::vector<std::uint64_t>{0}));
}

TEST(Scan, FrozenValuesToOneMillion) {
  // Independent Python sieve over 1..10^6.
  const auto opt = small_segments(1u << 16);
  EXPECT_EQ(scan_equal(FunctionId::lambda(), 1'000'000, {}, opt).runs.size(), 144u);
  const auto g = scan_monotone(FunctionId::lambda(), 1'000'000, {}, opt);
  EXPECT_EQ(g.longest, 9u);
  EXPECT_EQ(starts(g), (std::vector<std::uint64_t>{345961}));
  const auto d = scan_equal(FunctionId::divisors(), 1'000'000, {}, opt);
  EXPECT_EQ(d.longest, 7u);
  EXPECT_EQ(starts(d), (std::vector<std::uint64_t>{171892, 180964, 647380}));
  EXPECT_EQ(scan_monotone(FunctionId::phi(), 1'000'000, {}, opt).longest, 4u);
  EXPECT_EQ(scan_monotone(FunctionId::divisors(), 1'000'000, {}, opt).longest, 10u);
  const auto s = scan_equal(FunctionId::sigma(), 1'000'000, {}, opt);
  EXPECT_EQ(s.longest, 2u);
  EXPECT_EQ(s.runs.size(), 62u);
}

TEST(Scan, CheckpointTable) {
  const auto r = scan_equal(FunctionId::lambda(), 1'000'000, {1000, 10000, 100000}, small_segments(3000));
  const std::vector<std::pair<std::uint64_t, std::uint64_t>> expect = {
      {1000, 2}, {10000, 2}, {100000, 2}, {1000000, 2}};
  EXPECT_EQ(r.table, expect);
  EXPECT_THROW(scan_equal(FunctionId::lambda(), 100, {101}), std::invalid_argument);
}

TEST(Scan, TableIsNonDecreasing) {
  std::vector<std::uint64_t> xs;
  for (std::uint64_t x = 2; x <= 20000; x += 97) xs.push_back(x);
  for (auto kind : {RunKind::Equal, RunKind::NonIncreasing}) {
    const auto r = scan(FunctionId::phi(), kind, 20000, xs, small_segments(512));
    const auto vals = direct_values(FunctionId::phi(), 20000);
    for (std::size_t i = 0; i < r.table.size(); ++i) {
      if (i) {
        EXPECT_LE(r.table[i - 1].second, r.table[i].second);
      }
      const auto [x, k] = r.table[i];
      std::vector<Value> prefix(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(x) + 1);
      const auto expect = kind == RunKind::Equal
                              ? oracle::longest_runs(prefix, [](Value a, Value b) { return a == b; }).first
                              : oracle::longest_runs(prefix, [](Value a, Value b) { return a >= b; }).first;
      EXPECT_EQ(k, expect) << "x=" << x;
    }
  }
}

TEST(Scan, LambdaHasPairFromTheStart) {
  for (std::uint64_t x = 2; x < 50; ++x) EXPECT_GE(scan_equal(FunctionId::lambda(), x).longest, 2u);
}

TEST(Scan, SegmentedEqualsNaive) {
  const std::uint64_t limit = 60000;
  for (auto f : {FunctionId::lambda(), FunctionId::phi(), FunctionId::sigma(), FunctionId::sigma(3),
                 FunctionId::divisors()}) {
    const auto vals = direct_values(f, limit);
    for (auto kind : {RunKind::Equal, RunKind::NonIncreasing}) {
      auto naive = kind == RunKind::Equal ? oracle::longest_runs(vals, [](Value a, Value b) { return a == b; })
                                          : oracle::longest_runs(vals, [](Value a, Value b) { return a >= b; });
      for (std::uint64_t seg : {490ull, 1000ull, 65536ull}) {
        ScanOptions opt = small_segments(seg);
        opt.verify = false;
        const auto r = scan(f, kind, limit, {}, opt);
        ASSERT_EQ(r.longest, naive.first) << f.name();
        ASSERT_EQ(starts(r), naive.second) << f.name() << " seg=" << seg;
      }
    }
  }
}

TEST(Scan, ThreadCountDoesNotChangeResult) {
  const auto one = scan_equal(FunctionId::phi(), 300000, {1000, 50000}, small_segments(2000, 1));
  const auto four = scan_equal(FunctionId::phi(), 300000, {1000, 50000}, small_segments(2000, 4));
  EXPECT_EQ(one.runs, four.runs);
  EXPECT_EQ(one.table, four.table);
}

TEST(Scan, EqualRunsHaveExactDivisorWitnesses) {
  const auto r = scan_equal(FunctionId::divisors(), 1'000'000, {}, small_segments(1u << 16));
  for (const auto& run : r.runs) {
    for (std::uint64_t p = 2; 2 * p <= run.k; ++p) {
      if (!is_prime(p)) continue;
      const auto i = exact_divisor_witness(run.n, run.k, p);
      EXPECT_EQ((run.n + i) % p, 0u);
      EXPECT_NE((run.n + i) % (p * p), 0u);
    }
  }
}

TEST(Scan, ResumeFromCheckpointMatchesUninterrupted) {
  const auto path = (std::filesystem::temp_directory_path() / "lr_runs_resume_test.bin").string();
  std::filesystem::remove(path);
  ScanOptions opt = small_segments(1000);
  const auto full = scan_monotone(FunctionId::lambda(), 50000, {100, 25000}, opt);

  opt.checkpoint_path = path;
  opt.stop_after = 7;
  auto part = scan_monotone(FunctionId::lambda(), 50000, {100, 25000}, opt);
  EXPECT_FALSE(part.complete);
  EXPECT_EQ(part.segments_done, 7u);
  part = scan_monotone(FunctionId::lambda(), 50000, {100, 25000}, opt);
  EXPECT_EQ(part.segments_done, 14u);
  opt.stop_after = 0;
  const auto resumed = scan_monotone(FunctionId::lambda(), 50000, {100, 25000}, opt);
  EXPECT_TRUE(resumed.complete);
  EXPECT_EQ(resumed.runs, full.runs);
  EXPECT_EQ(resumed.table, full.table);

  // A checkpoint for another configuration is refused.
  EXPECT_THROW(scan_equal(FunctionId::lambda(), 50000, {100, 25000}, opt), std::runtime_error);
  std::filesystem::remove(path);
}

// --- ScanState -------------------------------------------------------------

std::vector<Value> random_values(std::mt19937_64& rng, std::size_t n, unsigned alphabet) {
  std::vector<Value> v(n);
  for (auto& x : v) x = rng() % alphabet;
  return v;
}

ScanState state_of(RunKind kind, std::uint64_t lo, const std::vector<Value>& all, std::size_t from, std::size_t to) {
  return ScanState::from_values(kind, lo + from, std::span<const Value>(all).subspan(from, to - from));
}

TEST(Merge, SplitLambdaTenMatchesSinglePass) {
  const std::vector<Value> lam = {1, 1, 2, 2, 4, 2, 6, 2, 6, 4};
  const auto a = state_of(RunKind::Equal, 1, lam, 0, 5);
  const auto b = state_of(RunKind::Equal, 1, lam, 5, 10);
  EXPECT_EQ(merge(a, b), state_of(RunKind::Equal, 1, lam, 0, 10));
  EXPECT_EQ(longest_blocks(merge(a, b)).first, 2u);
}

TEST(Merge, NoBoundaryRun) {
  const std::vector<Value> v = {5, 5, 5, 1, 2, 3, 7, 7};
  const auto a = state_of(RunKind::Equal, 1, v, 0, 4);
  const auto b = state_of(RunKind::Equal, 1, v, 4, 8);
  const auto m = merge(a, b);
  EXPECT_EQ(longest_blocks(m), longest_blocks(state_of(RunKind::Equal, 1, v, 0, 8)));
  EXPECT_EQ(longest_blocks(m).first, 3u);
}

TEST(Merge, RejectsNonAdjacentOrMixedKinds) {
  const std::vector<Value> v = {1, 2, 3, 4};
  EXPECT_THROW(merge(state_of(RunKind::Equal, 1, v, 0, 2), state_of(RunKind::Equal, 1, v, 3, 4)),
               std::invalid_argument);
  EXPECT_THROW(merge(state_of(RunKind::Equal, 1, v, 0, 2), state_of(RunKind::NonIncreasing, 1, v, 2, 4)),
               std::invalid_argument);
}

TEST(Merge, AssociativeAndEqualToSequential) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 3000; ++trial) {
    const auto kind = trial % 2 ? RunKind::Equal : RunKind::NonIncreasing;
    const std::size_t n = 3 + rng() % 40;
    const auto v = random_values(rng, n, 1 + rng() % 4);
    std::size_t c1 = 1 + rng() % (n - 2);
    std::size_t c2 = c1 + 1 + rng() % (n - c1 - 1);
    const auto a = state_of(kind, 1, v, 0, c1);
    const auto b = state_of(kind, 1, v, c1, c2);
    const auto c = state_of(kind, 1, v, c2, n);
    const auto left = merge(merge(a, b), c);
    const auto right = merge(a, merge(b, c));
    ASSERT_EQ(left, right);
    ASSERT_EQ(left, state_of(kind, 1, v, 0, n));
    std::vector<Value> padded = {0};
    padded.insert(padded.end(), v.begin(), v.end());
    auto naive = kind == RunKind::Equal ? oracle::longest_runs(padded, [](Value x, Value y) { return x == y; })
                                        : oracle::longest_runs(padded, [](Value x, Value y) { return x >= y; });
    const auto [k, blocks] = longest_blocks(left);
    ASSERT_EQ(k, naive.first);
    std::vector<std::uint64_t> got;
    for (const auto& blk : blocks) got.push_back(blk.start - 1);
    ASSERT_EQ(got, naive.second);
  }
}

TEST(Merge, SerializationRoundTrip) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    auto v = random_values(rng, 1 + rng() % 30, 3);
    v[0] = (Value{1} << 100) + 7;
    const auto s = ScanState::from_values(trial % 2 ? RunKind::Equal : RunKind::NonIncreasing, 17, v);
    std::vector<std::uint64_t> words;
    serialize(s, words);
    std::size_t pos = 0;
    EXPECT_EQ(deserialize_state(words, pos), s);
    EXPECT_EQ(pos, words.size());
  }
}

TEST(VerifyRun, CatchesBadRecords) {
  RunRecord good{FunctionId::phi(), RunKind::Equal, 5185, 3, 2592, 2592};
  EXPECT_NO_THROW(verify_run(good, 6000));
  RunRecord shorter = good;
  shorter.k = 2;  // not maximal
  EXPECT_THROW(verify_run(shorter, 6000), std::logic_error);
  RunRecord past = good;
  EXPECT_THROW(verify_run(past, 5187), std::logic_error);
  RunRecord wrong = good;
  wrong.value = 2590;
  EXPECT_THROW(verify_run(wrong, 6000), std::logic_error);
}

}  // namespace
}  // namespace lr
