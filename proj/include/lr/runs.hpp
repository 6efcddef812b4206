#pragma once

// Longest runs f(n+1) = ... = f(n+k) (F_f) and f(n+1) >= ... >= f(n+k)
// (G_f), found by scanning sieve segments in parallel and stitching the
// per-segment boundary states together in order.

#include "lr/arith.hpp"
#include "lr/sieve.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace lr {

enum class RunKind { Equal, NonIncreasing };

inline std::string to_string(RunKind kind) {
  return kind == RunKind::Equal ? "equal" : "nonincreasing";
}

/// Whether f(m) = a and f(m+1) = b may sit next to each other in one run.
inline bool continues(RunKind kind, Value a, Value b) {
  return kind == RunKind::Equal ? a == b : a >= b;
}

/// A run occupying n+1 .. n+k. `value` is f(n+1) (the common value T for
/// equal runs); `last` is f(n+k).
struct RunRecord {
  FunctionId f;
  RunKind kind = RunKind::Equal;
  std::uint64_t n = 0;
  std::uint64_t k = 0;
  Value value = 0;
  Value last = 0;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

/// A maximal block of adjacent positions, all related by `continues`.
struct Block {
  std::uint64_t start = 0;  // first integer of the block
  Value first = 0;
  Value last = 0;

  friend bool operator==(const Block&, const Block&) = default;
};

/// Boundary summary of f over [lo, hi).
///
/// The prefix block touches lo, the suffix block touches hi - 1; they are
/// the same block when the whole range is one run. `best` lists every
/// block that is bounded inside the range on both sides and has the
/// largest such length `best_k`, sorted by start.
struct ScanState {
  RunKind kind = RunKind::Equal;
  std::uint64_t lo = 1;
  std::uint64_t hi = 1;
  Value first = 0;
  Value last = 0;
  std::uint64_t prefix_len = 0;
  Value prefix_last = 0;
  std::uint64_t suffix_len = 0;
  Value suffix_first = 0;
  std::uint64_t best_k = 0;
  std::vector<Block> best;

  std::uint64_t size() const { return hi - lo; }
  bool whole() const { return prefix_len == size(); }

  void offer(std::uint64_t start, std::uint64_t len, Value f0, Value f1) {
    if (len > best_k) {
      best_k = len;
      best.clear();
    }
    if (len == best_k) best.push_back({start, f0, f1});
  }

  /// Summarizes values[i] = f(lo + i). `values` must be non-empty.
  static ScanState from_values(RunKind kind, std::uint64_t lo, std::span<const Value> values) {
    if (values.empty()) throw std::invalid_argument("ScanState: empty range");
    ScanState s;
    s.kind = kind;
    s.lo = lo;
    s.hi = lo + values.size();
    s.first = values.front();
    s.last = values.back();
    std::size_t start = 0;
    bool in_prefix = true;
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
      if (continues(kind, values[i], values[i + 1])) continue;
      if (in_prefix) {
        s.prefix_len = i + 1;
        s.prefix_last = values[i];
        in_prefix = false;
      } else {
        s.offer(lo + start, i + 1 - start, values[start], values[i]);
      }
      start = i + 1;
    }
    if (in_prefix) {
      s.prefix_len = values.size();
      s.prefix_last = values.back();
    }
    s.suffix_len = values.size() - start;
    s.suffix_first = values[start];
    return s;
  }

  friend bool operator==(const ScanState&, const ScanState&) = default;
};

/// Combines the states of adjacent ranges, a immediately left of b.
inline ScanState merge(const ScanState& a, const ScanState& b) {
  if (a.kind != b.kind) throw std::invalid_argument("merge: run kinds differ");
  if (a.hi != b.lo) {
    throw std::invalid_argument("merge: states are not adjacent ([" + std::to_string(a.lo) + "," +
                                std::to_string(a.hi) + ") and [" + std::to_string(b.lo) + "," +
                                std::to_string(b.hi) + "))");
  }
  ScanState s;
  s.kind = a.kind;
  s.lo = a.lo;
  s.hi = b.hi;
  s.first = a.first;
  s.last = b.last;
  s.best_k = a.best_k;
  s.best = a.best;

  const bool joined = continues(a.kind, a.last, b.first);
  s.prefix_len = a.prefix_len;
  s.prefix_last = a.prefix_last;
  s.suffix_len = b.suffix_len;
  s.suffix_first = b.suffix_first;
  if (joined) {
    if (a.whole()) {
      s.prefix_len = a.size() + b.prefix_len;
      s.prefix_last = b.prefix_last;
    }
    if (b.whole()) {
      s.suffix_len = a.suffix_len + b.size();
      s.suffix_first = a.suffix_first;
    }
    if (!a.whole() && !b.whole()) {
      s.offer(a.hi - a.suffix_len, a.suffix_len + b.prefix_len, a.suffix_first, b.prefix_last);
    }
  } else {
    if (!a.whole()) s.offer(a.hi - a.suffix_len, a.suffix_len, a.suffix_first, a.last);
    if (!b.whole()) s.offer(b.lo, b.prefix_len, b.first, b.prefix_last);
  }
  for (const auto& blk : b.best) s.offer(blk.start, b.best_k, blk.first, blk.last);
  return s;
}

/// Longest runs of a state whose range edges are also the scan's edges.
inline std::pair<std::uint64_t, std::vector<Block>> longest_blocks(const ScanState& s) {
  std::uint64_t k = s.best_k;
  std::vector<Block> out;
  auto take = [&](std::uint64_t start, std::uint64_t len, Value f0, Value f1) {
    if (len > k) {
      k = len;
      out.clear();
    }
    if (len == k) out.push_back({start, f0, f1});
  };
  take(s.lo, s.prefix_len, s.first, s.prefix_last);
  if (k == s.best_k) {
    out.insert(out.end(), s.best.begin(), s.best.end());
  }
  if (!s.whole()) take(s.hi - s.suffix_len, s.suffix_len, s.suffix_first, s.last);
  return {k, out};
}

// Checkpoint payload: the state as fixed-width words.
inline void serialize(const ScanState& s, std::vector<std::uint64_t>& out) {
  auto put = [&](Value v) {
    out.push_back(static_cast<std::uint64_t>(v));
    out.push_back(static_cast<std::uint64_t>(v >> 64));
  };
  out.push_back(s.kind == RunKind::Equal ? 0 : 1);
  out.push_back(s.lo);
  out.push_back(s.hi);
  put(s.first);
  put(s.last);
  out.push_back(s.prefix_len);
  put(s.prefix_last);
  out.push_back(s.suffix_len);
  put(s.suffix_first);
  out.push_back(s.best_k);
  out.push_back(s.best.size());
  for (const auto& b : s.best) {
    out.push_back(b.start);
    put(b.first);
    put(b.last);
  }
}

inline ScanState deserialize_state(std::span<const std::uint64_t> in, std::size_t& pos) {
  auto word = [&] {
    if (pos >= in.size()) throw std::runtime_error("checkpoint: truncated scan state");
    return in[pos++];
  };
  auto value = [&] {
    const Value lo = word();
    const Value hi = word();
    return lo | (hi << 64);
  };
  ScanState s;
  s.kind = word() == 0 ? RunKind::Equal : RunKind::NonIncreasing;
  s.lo = word();
  s.hi = word();
  s.first = value();
  s.last = value();
  s.prefix_len = word();
  s.prefix_last = value();
  s.suffix_len = word();
  s.suffix_first = value();
  s.best_k = word();
  const std::uint64_t count = word();
  for (std::uint64_t i = 0; i < count; ++i) {
    Block b;
    b.start = word();
    b.first = value();
    b.last = value();
    s.best.push_back(b);
  }
  return s;
}

/// Recomputes f over the run and its two neighbours with factorize and
/// checks the run relation plus maximality. Throws std::logic_error on
/// mismatch.
inline void verify_run(const RunRecord& run, std::uint64_t limit) {
  auto f_at = [&](std::uint64_t m) { return evaluate(run.f, factorize(m)); };
  if (run.k == 0 || run.n + run.k > limit) throw std::logic_error("run violates 1 <= k, n + k <= x");
  Value prev = f_at(run.n + 1);
  if (prev != run.value) throw std::logic_error("run start value mismatch at n = " + std::to_string(run.n));
  for (std::uint64_t i = 2; i <= run.k; ++i) {
    const Value cur = f_at(run.n + i);
    if (!continues(run.kind, prev, cur)) {
      throw std::logic_error("run broken inside window at n = " + std::to_string(run.n));
    }
    prev = cur;
  }
  if (prev != run.last) throw std::logic_error("run end value mismatch at n = " + std::to_string(run.n));
  if (run.n >= 1 && continues(run.kind, f_at(run.n), run.value)) {
    throw std::logic_error("run extends to the left at n = " + std::to_string(run.n));
  }
  if (run.n + run.k + 1 <= limit && continues(run.kind, run.last, f_at(run.n + run.k + 1))) {
    throw std::logic_error("run extends to the right at n = " + std::to_string(run.n));
  }
}

struct ScanOptions {
  std::uint64_t segment_size = kDefaultSegmentSize;
  unsigned threads = 1;
  std::string checkpoint_path;  // empty: no checkpointing
  std::uint64_t stop_after = 0;  // stop after this many segments in this call (0: never)
  bool verify = true;            // re-verify record runs before returning
  // Upper bound on memory held by in-flight segment arrays.
  std::uint64_t memory_budget = 384ull << 20;
};

struct ScanResult {
  bool complete = true;
  std::uint64_t limit = 0;
  std::uint64_t longest = 0;                                   // F_f(limit) or G_f(limit)
  std::vector<RunRecord> runs;                                 // every run of length `longest`
  std::vector<std::pair<std::uint64_t, std::uint64_t>> table;  // (x, longest run within [1, x])
  std::uint64_t segments_done = 0;
};

namespace detail {

inline std::vector<std::uint64_t> normalize_checkpoints(std::vector<std::uint64_t> xs, std::uint64_t limit) {
  for (auto x : xs) {
    if (x == 0 || x > limit) {
      throw std::invalid_argument("checkpoint x = " + std::to_string(x) + " outside [1, limit]");
    }
  }
  xs.push_back(limit);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

// Pieces of one segment, cut after every checkpoint x inside it.
inline std::vector<ScanState> segment_states(const FunctionId& f, RunKind kind, const SegmentPlan& plan,
                                             std::uint64_t index, const std::vector<std::uint64_t>& xs) {
  const Segment seg = evaluate_segment(f, plan, index);
  std::vector<ScanState> out;
  std::uint64_t cut = seg.lo;
  auto it = std::lower_bound(xs.begin(), xs.end(), seg.lo);
  for (; it != xs.end() && *it + 1 <= seg.hi; ++it) {
    const std::uint64_t end = *it + 1;
    out.push_back(ScanState::from_values(kind, cut, std::span<const Value>(seg.values).subspan(cut - seg.lo, end - cut)));
    cut = end;
  }
  if (cut < seg.hi) {
    out.push_back(ScanState::from_values(kind, cut, std::span<const Value>(seg.values).subspan(cut - seg.lo)));
  }
  return out;
}

struct ResumePoint {
  std::uint64_t next_segment = 0;
  std::optional<ScanState> acc;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> table;
};

inline std::vector<std::uint64_t> checkpoint_payload(const FunctionId& f, RunKind kind,
                                                     const std::vector<std::uint64_t>& xs,
                                                     const ResumePoint& rp) {
  std::vector<std::uint64_t> w;
  w.push_back(static_cast<std::uint64_t>(f.kind));
  w.push_back(f.d);
  w.push_back(kind == RunKind::Equal ? 0 : 1);
  w.push_back(xs.size());
  w.insert(w.end(), xs.begin(), xs.end());
  w.push_back(rp.table.size());
  for (auto [x, k] : rp.table) {
    w.push_back(x);
    w.push_back(k);
  }
  serialize(*rp.acc, w);
  return w;
}

inline ResumePoint resume_from(const Checkpoint& cp, const FunctionId& f, RunKind kind, const SegmentPlan& plan,
                               const std::vector<std::uint64_t>& xs) {
  if (cp.limit != plan.limit() || cp.segment_size != plan.segment_size()) {
    throw std::runtime_error("checkpoint: limit/segment_size differ from this run");
  }
  std::span<const std::uint64_t> w(cp.payload);
  std::size_t pos = 0;
  auto word = [&] {
    if (pos >= w.size()) throw std::runtime_error("checkpoint: truncated payload");
    return w[pos++];
  };
  if (word() != static_cast<std::uint64_t>(f.kind) || word() != f.d ||
      word() != (kind == RunKind::Equal ? 0u : 1u)) {
    throw std::runtime_error("checkpoint: written for a different function or run kind");
  }
  const std::uint64_t nx = word();
  std::vector<std::uint64_t> saved_xs;
  for (std::uint64_t i = 0; i < nx; ++i) saved_xs.push_back(word());
  if (saved_xs != xs) throw std::runtime_error("checkpoint: written with different sample points");
  ResumePoint rp;
  const std::uint64_t nt = word();
  for (std::uint64_t i = 0; i < nt; ++i) {
    const auto x = word();
    rp.table.emplace_back(x, word());
  }
  rp.acc = deserialize_state(w, pos);
  if (pos != w.size()) throw std::runtime_error("checkpoint: trailing payload");
  rp.next_segment = cp.last_completed + 1;
  if (rp.next_segment > plan.segment_count() || rp.acc->hi != (rp.next_segment < plan.segment_count()
                                                                     ? plan.bounds(rp.next_segment).first
                                                                     : plan.limit() + 1)) {
    throw std::runtime_error("checkpoint: state does not match the segment index");
  }
  return rp;
}

}  // namespace detail

/// Scans f over [1, limit] for the longest run of the given kind.
///
/// Segments are evaluated by up to `threads` workers and merged strictly in
/// segment order, so the result does not depend on the thread count. With a
/// checkpoint path the merged prefix is saved after every segment, and a
/// matching checkpoint found on entry is resumed from.
inline ScanResult scan(const FunctionId& f, RunKind kind, std::uint64_t limit,
                       std::vector<std::uint64_t> checkpoints = {}, const ScanOptions& options = {}) {
  const SegmentPlan plan(limit, options.segment_size);
  const auto xs = detail::normalize_checkpoints(std::move(checkpoints), limit);
  const std::uint64_t count = plan.segment_count();

  detail::ResumePoint rp;
  if (!options.checkpoint_path.empty()) {
    if (auto cp = load_checkpoint(options.checkpoint_path)) rp = detail::resume_from(*cp, f, kind, plan, xs);
  }

  std::uint64_t first = rp.next_segment;
  std::uint64_t end = count;
  if (options.stop_after != 0) end = std::min(count, first + options.stop_after);

  auto absorb = [&](std::vector<ScanState>&& pieces) {
    for (auto& piece : pieces) {
      rp.acc = rp.acc ? merge(*rp.acc, piece) : std::move(piece);
      const std::uint64_t x = rp.acc->hi - 1;
      if (std::binary_search(xs.begin(), xs.end(), x)) rp.table.emplace_back(x, longest_blocks(*rp.acc).first);
    }
    ++rp.next_segment;
    if (!options.checkpoint_path.empty()) {
      save_checkpoint(options.checkpoint_path,
                      Checkpoint{limit, plan.segment_size(), rp.next_segment - 1,
                                 detail::checkpoint_payload(f, kind, xs, rp)});
    }
  };

  const std::uint64_t per_segment_bytes = plan.segment_size() * (sizeof(Value) + 8);
  unsigned workers = std::max(1u, options.threads);
  workers = static_cast<unsigned>(std::min<std::uint64_t>(
      workers, std::max<std::uint64_t>(1, options.memory_budget / per_segment_bytes)));
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, std::max<std::uint64_t>(1, end - first)));

  if (workers <= 1) {
    for (std::uint64_t i = first; i < end; ++i) absorb(detail::segment_states(f, kind, plan, i, xs));
  } else {
    std::mutex mu;
    std::condition_variable ready;
    std::condition_variable room;
    std::map<std::uint64_t, std::vector<ScanState>> done;
    std::optional<std::exception_ptr> failure;
    std::atomic<std::uint64_t> next{first};
    std::uint64_t merged = first;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (;;) {
          const std::uint64_t i = next.fetch_add(1);
          if (i >= end) return;
          {
            // Keep workers from racing far ahead of the in-order merge.
            std::unique_lock lock(mu);
            room.wait(lock, [&] { return failure || i < merged + 2 * workers; });
            if (failure) return;
          }
          try {
            auto pieces = detail::segment_states(f, kind, plan, i, xs);
            std::lock_guard lock(mu);
            done.emplace(i, std::move(pieces));
          } catch (...) {
            std::lock_guard lock(mu);
            if (!failure) failure = std::current_exception();
          }
          ready.notify_all();
        }
      });
    }
    try {
      while (merged < end) {
        std::vector<ScanState> pieces;
        {
          std::unique_lock lock(mu);
          ready.wait(lock, [&] { return failure || done.count(merged) != 0; });
          if (failure) break;
          pieces = std::move(done.at(merged));
          done.erase(merged);
        }
        absorb(std::move(pieces));
        {
          std::lock_guard lock(mu);
          ++merged;
        }
        room.notify_all();
      }
    } catch (...) {
      std::lock_guard lock(mu);
      if (!failure) failure = std::current_exception();
    }
    room.notify_all();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(*failure);
  }

  ScanResult result;
  result.limit = limit;
  result.segments_done = rp.next_segment;
  result.complete = rp.next_segment == count;
  result.table = rp.table;
  if (!result.complete) return result;

  auto [k, blocks] = longest_blocks(*rp.acc);
  result.longest = k;
  for (const auto& b : blocks) {
    RunRecord run{f, kind, b.start - 1, k, b.first, b.last};
    if (options.verify) verify_run(run, limit);
    result.runs.push_back(run);
  }
  return result;
}

/// F_f(limit) with every witness of that length.
inline ScanResult scan_equal(const FunctionId& f, std::uint64_t limit, std::vector<std::uint64_t> checkpoints = {},
                             const ScanOptions& options = {}) {
  return scan(f, RunKind::Equal, limit, std::move(checkpoints), options);
}

/// G_f(limit); ties count as non-increasing.
inline ScanResult scan_monotone(const FunctionId& f, std::uint64_t limit, std::vector<std::uint64_t> checkpoints = {},
                                const ScanOptions& options = {}) {
  return scan(f, RunKind::NonIncreasing, limit, std::move(checkpoints), options);
}

}  // namespace lr
