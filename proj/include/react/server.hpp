#pragma once

// Discrete-event model of the batching model server: a FIFO request queue
// drained by num_workers workers. An idle worker dispatches a batch once
// batch_size requests are waiting or the oldest one has waited max_delay_ms.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <vector>

#include "react/core.hpp"
#include "react/netem.hpp"
#include "react/random.hpp"

namespace react {

struct ServerConfig {
  int num_workers = 1;
  int batch_size = 4;
  double max_delay_ms = 50.0;
  // Affine batch inference time: base_ms + per_item_ms * n.
  double base_ms = 40.0;
  double per_item_ms = 15.0;

  double batch_service_ms(int n) const noexcept { return base_ms + per_item_ms * n; }

  // Throughput with every worker continuously running full batches.
  double saturation_rps() const noexcept {
    return num_workers * batch_size / batch_service_ms(batch_size) * 1000.0;
  }
};

inline std::string validate(const ServerConfig& c) {
  if (c.num_workers < 1) return "num_workers must be >= 1";
  if (c.batch_size < 1) return "batch_size must be >= 1";
  if (c.max_delay_ms < 0) return "max_delay_ms must be >= 0";
  if (c.base_ms < 0 || c.per_item_ms < 0) return "service times must be >= 0";
  if (c.batch_service_ms(1) <= 0) return "batch service time must be positive";
  return {};
}

struct ServerStats {
  double throughput_rps = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double mean_ms = 0.0;
  std::size_t queue_len_max = 0;
  std::size_t completed = 0;
  std::size_t dropped = 0;
};

struct Arrival {
  double time_ms = 0.0;
  std::uint64_t id = 0;
};

struct BatchRecord {
  int worker = 0;
  double dispatch_ms = 0.0;
  double complete_ms = 0.0;
  std::vector<std::uint64_t> ids;
};

struct ServerSimResult {
  std::vector<std::optional<double>> completion_ms;  // per arrival; empty if dropped
  std::vector<BatchRecord> batches;                   // in dispatch order
  ServerStats stats;
};

inline ServerStats summarize(std::span<const double> response_ms, std::size_t dropped, std::size_t queue_len_max,
                             double window_ms) {
  ServerStats s;
  s.completed = response_ms.size();
  s.dropped = dropped;
  s.queue_len_max = queue_len_max;
  if (!response_ms.empty()) {
    std::vector<double> v(response_ms.begin(), response_ms.end());
    s.p50_ms = percentile(v, 50.0);
    s.p95_ms = percentile(v, 95.0);
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean_ms = sum / static_cast<double>(v.size());
  }
  if (window_ms > 0.0) s.throughput_rps = static_cast<double>(s.completed) / (window_ms / 1000.0);
  return s;
}

// Runs the dispatch policy over a time-sorted arrival schedule. Requests still
// queued at the horizon (or arriving after it) are dropped; batches already
// dispatched run to completion.
inline ServerSimResult run_server_sim(std::span<const Arrival> arrivals, const ServerConfig& config,
                                      double horizon_ms) {
  if (auto err = validate(config); !err.empty()) throw ConfigError("server", err);
  for (std::size_t i = 1; i < arrivals.size(); ++i)
    if (arrivals[i].time_ms < arrivals[i - 1].time_ms) throw ContractError("run_server_sim: arrivals not sorted");

  constexpr double inf = std::numeric_limits<double>::infinity();
  ServerSimResult result;
  result.completion_ms.assign(arrivals.size(), std::nullopt);

  using Completion = std::pair<double, int>;  // (time, worker)
  std::priority_queue<Completion, std::vector<Completion>, std::greater<>> busy;
  std::vector<char> idle(static_cast<std::size_t>(config.num_workers), 1);
  std::deque<std::size_t> queue;
  std::size_t next_arrival = 0;
  std::size_t queue_len_max = 0;
  double clock = 0.0;

  auto first_idle = [&]() -> int {
    for (std::size_t w = 0; w < idle.size(); ++w)
      if (idle[w]) return static_cast<int>(w);
    return -1;
  };

  auto dispatch = [&](double now) {
    for (int w = first_idle(); w >= 0 && !queue.empty(); w = first_idle()) {
      const bool full = queue.size() >= static_cast<std::size_t>(config.batch_size);
      const bool expired = now >= arrivals[queue.front()].time_ms + config.max_delay_ms;
      if (!full && !expired) break;
      BatchRecord batch;
      batch.worker = w;
      batch.dispatch_ms = now;
      const std::size_t n = std::min(queue.size(), static_cast<std::size_t>(config.batch_size));
      batch.complete_ms = now + config.batch_service_ms(static_cast<int>(n));
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t idx = queue.front();
        queue.pop_front();
        batch.ids.push_back(arrivals[idx].id);
        result.completion_ms[idx] = batch.complete_ms;
      }
      idle[static_cast<std::size_t>(w)] = 0;
      busy.emplace(batch.complete_ms, w);
      result.batches.push_back(std::move(batch));
    }
  };

  for (;;) {
    const double t_arrival =
        next_arrival < arrivals.size() && arrivals[next_arrival].time_ms <= horizon_ms ? arrivals[next_arrival].time_ms
                                                                                       : inf;
    const double t_done = busy.empty() ? inf : busy.top().first;
    double t_deadline = inf;
    // An expired head is due now, never in the past.
    if (!queue.empty() && first_idle() >= 0)
      t_deadline = std::max(clock, arrivals[queue.front()].time_ms + config.max_delay_ms);
    if (t_deadline > horizon_ms) t_deadline = inf;

    const double now = std::min({t_arrival, t_done, t_deadline});
    if (now == inf) break;
    clock = now;

    while (!busy.empty() && busy.top().first <= now) {
      idle[static_cast<std::size_t>(busy.top().second)] = 1;
      busy.pop();
    }
    while (next_arrival < arrivals.size() && arrivals[next_arrival].time_ms <= now) {
      queue.push_back(next_arrival++);
      queue_len_max = std::max(queue_len_max, queue.size());
    }
    if (now <= horizon_ms) dispatch(now);
  }

  std::vector<double> response;
  response.reserve(arrivals.size());
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    if (result.completion_ms[i])
      response.push_back(*result.completion_ms[i] - arrivals[i].time_ms);
    else
      ++dropped;
  }
  result.stats = summarize(response, dropped, queue_len_max, horizon_ms);
  return result;
}

// Poisson arrivals at `rate_per_s`, ids 0..n-1.
inline std::vector<Arrival> poisson_arrivals(double rate_per_s, std::size_t n, Rng& rng) {
  std::vector<Arrival> out;
  out.reserve(n);
  double t = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    t += rng.exponential(rate_per_s) * 1000.0;
    out.push_back({t, i});
  }
  return out;
}

// Open-loop edge clients: client i joins at i / ramp_per_s seconds and then
// sends one request every period_ms until duration_ms.
inline std::vector<Arrival> client_arrivals(int n_clients, double period_ms, double duration_ms,
                                            double ramp_per_s = 3.0) {
  std::vector<Arrival> out;
  for (int c = 0; c < n_clients; ++c) {
    const double start = c * 1000.0 / ramp_per_s;
    for (double t = start; t < duration_ms; t += period_ms) out.push_back({t, 0});
  }
  std::stable_sort(out.begin(), out.end(), [](const Arrival& a, const Arrival& b) { return a.time_ms < b.time_ms; });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].id = i;
  return out;
}

}  // namespace react
