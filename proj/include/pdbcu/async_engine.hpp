#pragma once

#include <pdbcu/mpsc_queue.hpp>
#include <pdbcu/solver_core.hpp>

#include <algorithm>
#include <atomic>
#include <barrier>
#include <chrono>
#include <cstdint>
#include <exception>
#include <memory>
#include <mutex>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

namespace pdbcu {

/// Block gradient produced by a worker from its (possibly stale) read of x.
struct GradientMessage {
  Index block = 0;
  Vector grad;
  std::int64_t born_at = 0;  // master iteration count when the read began
};

enum class StalePolicy { UseAnyway, DropIfOlderThan };

struct EngineConfig {
  RunConfig run;
  int workers = 0;               // p - 1
  std::size_t queue_capacity = 0;  // 0 selects 4 * workers
  StalePolicy stale_policy = StalePolicy::UseAnyway;
  int stale_tau = 0;             // bound for DropIfOlderThan
  // Test mode: the master never computes gradients itself and waits for
  // worker messages instead.
  bool forced_wait = false;

  std::size_t effective_capacity() const {
    return queue_capacity ? queue_capacity : static_cast<std::size_t>(std::max(1, 4 * workers));
  }

  void validate(const ProblemInstance& inst) const {
    run.validate(inst);
    if (workers < 0) throw ParameterError("engine: workers must be nonnegative");
    if (stale_tau < 0) throw ParameterError("engine: stale_tau must be nonnegative");
    if (forced_wait && workers == 0)
      throw ParameterError("engine: forced_wait needs at least one worker");
  }
};

struct DelayStats {
  std::int64_t max_delay = 0;
  double mean_delay = 0.0;
  std::vector<std::int64_t> histogram;  // histogram[d] = gradients used with delay d
  std::int64_t consumed_messages = 0;
  std::int64_t self_computed = 0;
  std::int64_t dropped_overflow = 0;
  std::int64_t dropped_stale = 0;

  std::int64_t dropped() const { return dropped_overflow + dropped_stale; }

  void add(std::int64_t delay) {
    if (histogram.size() <= static_cast<std::size_t>(delay))
      histogram.resize(static_cast<std::size_t>(delay) + 1, 0);
    ++histogram[static_cast<std::size_t>(delay)];
    max_delay = std::max(max_delay, delay);
  }

  void finalize_mean() {
    std::int64_t n = 0;
    double total = 0.0;
    for (std::size_t d = 0; d < histogram.size(); ++d) {
      n += histogram[d];
      total += static_cast<double>(d) * static_cast<double>(histogram[d]);
    }
    mean_delay = n ? total / static_cast<double>(n) : 0.0;
  }
};

struct AsyncResult {
  SaddleState state;
  RunTrace trace;
  DelayStats delays;
  double iterations_per_sec = 0.0;
};

/// Max and mean of the delays recorded in an async run.
inline DelayStats delay_stats(const AsyncResult& r) { return r.delays; }

namespace detail {

/// x shared between master and workers. Each coordinate is an independent
/// atomic, so a reader may see a mix of coordinates from different
/// iterations but never a torn double.
class SharedIterate {
 public:
  explicit SharedIterate(const Vector& x)
      : n_(x.size()), data_(std::make_unique<std::atomic<double>[]>(static_cast<std::size_t>(x.size()))) {
    for (Index j = 0; j < n_; ++j) data_[static_cast<std::size_t>(j)].store(x[j], std::memory_order_relaxed);
  }

  void publish(const BlockRange& b, const Vector& x) {
    for (Index j = b.start; j < b.end(); ++j)
      data_[static_cast<std::size_t>(j)].store(x[j], std::memory_order_relaxed);
  }

  void snapshot(Vector& out) const {
    for (Index j = 0; j < n_; ++j) out[j] = data_[static_cast<std::size_t>(j)].load(std::memory_order_relaxed);
  }

 private:
  Index n_;
  std::unique_ptr<std::atomic<double>[]> data_;
};

}  // namespace detail

/// Master/worker execution. The master owns x, r, lambda and k; workers only
/// read x and send block gradients through a bounded FIFO. Each master
/// iteration consumes at most one message; with none available it samples a
/// block and computes the gradient at the current x itself (same RNG stream
/// as the serial solver, so workers = 0 reproduces it bit for bit).
inline AsyncResult run_async(const ProblemInstance& inst, const EngineConfig& cfg) {
  inst.validate();
  cfg.validate(inst);
  const RunConfig& rc = cfg.run;
  AsyncResult out{SaddleState::initial(inst, rc.initial_point(inst), rc.record_history), {}, {}, 0.0};
  detail::TraceRecorder rec(inst, rc, out.trace);
  rec.write_header("async", out.state);
  out.trace.set("workers", std::to_string(cfg.workers));
  out.trace.set("queue_capacity", std::to_string(cfg.effective_capacity()));
  out.trace.set("stale_policy", cfg.stale_policy == StalePolicy::UseAnyway
                                    ? "use_anyway"
                                    : "drop_if_older_than(" + std::to_string(cfg.stale_tau) + ")");
  if (rc.max_epochs == 0) return out;

  SaddleState& s = out.state;
  const std::int64_t m = inst.num_blocks();
  const auto mu = static_cast<std::uint64_t>(m);
  Rng rng(rc.seed);
  detail::StepBuffers buf(inst);
  DelayStats& stats = out.delays;

  detail::SharedIterate shared(s.x);
  std::atomic<std::int64_t> published_k{0};
  std::atomic<std::int64_t> overflow{0};
  BoundedMpscQueue<GradientMessage> queue(cfg.effective_capacity());
  std::atomic<bool> failed{false};
  std::mutex error_mu;
  std::exception_ptr error;

  auto worker_body = [&](std::stop_token st, int id) {
    try {
      Rng wrng = rng.split(static_cast<std::uint64_t>(id) + 100);
      Vector xhat(inst.dim());
      while (!st.stop_requested()) {
        if (queue.full()) {
          std::this_thread::yield();
          continue;
        }
        const Index j = static_cast<Index>(wrng.uniform_index(mu));
        GradientMessage msg;
        msg.block = j;
        msg.born_at = published_k.load(std::memory_order_acquire);
        shared.snapshot(xhat);
        msg.grad.resize(inst.partition[j].width);
        inst.smooth.block_grad(xhat, inst.partition[j], msg.grad);
        if (queue.push(std::move(msg))) overflow.fetch_add(1, std::memory_order_relaxed);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mu);
      if (!error) error = std::current_exception();
      failed.store(true, std::memory_order_release);
    }
  };

  detail::Stopwatch clock;
  std::vector<std::jthread> pool;
  clock.start();
  for (int w = 0; w < cfg.workers; ++w) pool.emplace_back(worker_body, w);

  auto next_message = [&]() -> std::optional<GradientMessage> {
    for (;;) {
      std::optional<GradientMessage> msg;
      if (cfg.forced_wait) {
        while (!msg) {
          if (failed.load(std::memory_order_acquire)) return std::nullopt;
          msg = queue.wait_pop(std::chrono::milliseconds(50));
        }
      } else {
        msg = queue.try_pop();
      }
      if (!msg) return msg;
      if (cfg.stale_policy == StalePolicy::DropIfOlderThan && s.k - msg->born_at > cfg.stale_tau) {
        ++stats.dropped_stale;
        continue;
      }
      return msg;
    }
  };

  auto abort_if_failed = [&] {
    if (!failed.load(std::memory_order_acquire)) return;
    for (auto& t : pool) t.request_stop();
    pool.clear();
    std::rethrow_exception(error);
  };

  const std::int64_t total = rc.max_epochs * m;
  bool stop = false;
  while (!stop && s.k < total) {
    if (cfg.workers > 0) abort_if_failed();
    std::optional<GradientMessage> msg;
    if (cfg.workers > 0) msg = next_message();
    if (cfg.forced_wait && !msg) abort_if_failed();
    Index i;
    Index w;
    if (msg) {
      i = msg->block;
      w = inst.partition[i].width;
      buf.grad.head(w) = msg->grad;
      stats.add(s.k - msg->born_at);
      ++stats.consumed_messages;
    } else {
      i = static_cast<Index>(rng.uniform_index(mu));
      w = inst.partition[i].width;
      auto grad = buf.grad.head(w);
      inst.smooth.block_grad(s.x, inst.partition[i], grad);
      stats.add(0);
      ++stats.self_computed;
    }
    detail::compute_block(inst, s, rc.plan.beta, rc.plan.eta[i], i, buf.grad.head(w), buf);
    detail::commit_block(inst, rc.plan.rho, s, i, buf.next.head(w), buf.delta);
    if (cfg.workers > 0) {
      shared.publish(inst.partition[i], s.x);
      published_k.store(s.k, std::memory_order_release);
    }

    if (s.k % m == 0) {
      const std::int64_t epoch = s.k / m;
      if (rec.wants(epoch)) {
        clock.stop();
        stats.dropped_overflow = overflow.load(std::memory_order_relaxed);
        stats.finalize_mean();
        TraceRow extra;
        extra.iterations_per_sec = static_cast<double>(s.k) / (clock.elapsed_ms() / 1000.0);
        extra.max_delay = stats.max_delay;
        extra.mean_delay = stats.mean_delay;
        extra.dropped_messages = stats.dropped();
        stop = rec.record(s, epoch, clock.elapsed_ms(), extra);
        clock.start();
      }
    }
  }
  clock.stop();
  for (auto& t : pool) t.request_stop();
  pool.clear();
  if (error) std::rethrow_exception(error);
  stats.dropped_overflow = overflow.load(std::memory_order_relaxed);
  stats.finalize_mean();
  out.iterations_per_sec =
      clock.elapsed_ms() > 0 ? static_cast<double>(s.k) / (clock.elapsed_ms() / 1000.0) : 0.0;
  return out;
}

struct SyncResult {
  SaddleState state;
  RunTrace trace;
  double iterations_per_sec = 0.0;
};

/// Synchronous-parallel counterpart: each round draws p = workers + 1
/// distinct blocks, computes their gradients at the common x in parallel,
/// solves all p block subproblems against the same r and lambda, then
/// applies the p residual/dual updates one by one in increasing block order.
/// Weights come from sync_group_weights unless the plan asks for the serial
/// rule.
inline SyncResult run_sync_parallel(const ProblemInstance& inst, const EngineConfig& cfg) {
  inst.validate();
  cfg.validate(inst);
  const RunConfig& rc = cfg.run;
  const Index p = cfg.workers + 1;
  const std::int64_t m = inst.num_blocks();
  if (p > m) throw ParameterError("sync engine: group size exceeds block count");
  SyncResult out{SaddleState::initial(inst, rc.initial_point(inst), rc.record_history), {}, 0.0};
  detail::TraceRecorder rec(inst, rc, out.trace);
  rec.write_header("sync", out.state);
  out.trace.set("workers", std::to_string(cfg.workers));
  if (rc.max_epochs == 0) return out;

  SaddleState& s = out.state;
  Rng rng(rc.seed);
  const auto mu = static_cast<std::uint64_t>(m);
  std::vector<detail::StepBuffers> bufs;
  bufs.reserve(static_cast<std::size_t>(p));
  for (Index g = 0; g < p; ++g) bufs.emplace_back(inst);
  std::vector<Index> group(static_cast<std::size_t>(p));
  std::vector<std::size_t> order(static_cast<std::size_t>(p));

  auto gradient_for = [&](Index g) {
    const Index i = group[static_cast<std::size_t>(g)];
    auto grad = bufs[static_cast<std::size_t>(g)].grad.head(inst.partition[i].width);
    inst.smooth.block_grad(s.x, inst.partition[i], grad);
  };

  // Helpers compute group members 1..p-1; the master takes member 0.
  std::atomic<bool> done{false};
  std::barrier sync_point(static_cast<std::ptrdiff_t>(p));
  std::mutex error_mu;
  std::exception_ptr error;
  std::vector<std::jthread> helpers;
  for (Index h = 1; h < p; ++h) {
    helpers.emplace_back([&, h] {
      for (;;) {
        sync_point.arrive_and_wait();  // round start
        if (done.load(std::memory_order_acquire)) return;
        try {
          gradient_for(h);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
        sync_point.arrive_and_wait();  // gradients ready
      }
    });
  }
  auto shutdown = [&] {
    if (helpers.empty()) return;
    done.store(true, std::memory_order_release);
    sync_point.arrive_and_wait();
    helpers.clear();
  };

  detail::Stopwatch clock;
  const std::int64_t total = rc.max_epochs * m;
  std::int64_t next_epoch = 1;
  bool stop = false;
  clock.start();
  try {
    while (!stop && s.k < total) {
      for (Index g = 0; g < p; ++g) {
        Index i;
        bool dup;
        do {
          i = static_cast<Index>(rng.uniform_index(mu));
          dup = std::find(group.begin(), group.begin() + g, i) != group.begin() + g;
        } while (dup);
        group[static_cast<std::size_t>(g)] = i;
      }
      if (p > 1) sync_point.arrive_and_wait();
      try {
        gradient_for(0);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
      if (p > 1) sync_point.arrive_and_wait();
      if (error) std::rethrow_exception(error);

      const Vector group_eta = rc.plan.serial_weights_override
                                   ? Vector()
                                   : sync_group_weights(rc.plan, group);
      for (Index g = 0; g < p; ++g) {
        const Index i = group[static_cast<std::size_t>(g)];
        const double eta = rc.plan.serial_weights_override ? rc.plan.eta[i] : group_eta[g];
        auto& b = bufs[static_cast<std::size_t>(g)];
        detail::compute_block(inst, s, rc.plan.beta, eta, i, b.grad.head(inst.partition[i].width), b);
      }
      for (std::size_t g = 0; g < order.size(); ++g) order[g] = g;
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t c) { return group[a] < group[c]; });
      for (std::size_t g : order) {
        const Index i = group[g];
        detail::commit_block(inst, rc.plan.rho, s, i, bufs[g].next.head(inst.partition[i].width),
                             bufs[g].delta);
      }

      if (s.k >= next_epoch * m) {
        const std::int64_t epoch = next_epoch++;
        if (rec.wants(epoch)) {
          clock.stop();
          TraceRow extra;
          extra.iterations_per_sec = static_cast<double>(s.k) / (clock.elapsed_ms() / 1000.0);
          stop = rec.record(s, epoch, clock.elapsed_ms(), extra);
          clock.start();
        }
      }
    }
  } catch (...) {
    shutdown();
    throw;
  }
  clock.stop();
  shutdown();
  out.iterations_per_sec =
      clock.elapsed_ms() > 0 ? static_cast<double>(s.k) / (clock.elapsed_ms() / 1000.0) : 0.0;
  return out;
}

}  // namespace pdbcu
