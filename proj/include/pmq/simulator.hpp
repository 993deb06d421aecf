#pragma once

// Discrete-event simulation of the power-managed server and its farm
// variants. One deterministic event loop per replication: the same config
// and seed give bit-identical results on every platform and thread count.

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <queue>
#include <vector>

#include "pmq/model.hpp"
#include "pmq/rng.hpp"
#include "pmq/stats.hpp"

namespace pmq {

struct SimConfig {
  ServerParams server;
  Workload workload;
  Policy policy;                    // ignored under fork-join (servers stay on)
  std::optional<FarmConfig> farm;   // absent: one server
  std::uint64_t horizon = 220000;   // job completions per replication, warmup included
  std::uint64_t warmup = 20000;     // completions discarded before measuring starts
  std::uint32_t replications = 20;
  std::uint64_t seed = 1;

  int server_count() const { return farm ? farm->servers : 1; }

  void validate() const {
    server.validate();
    workload.validate();
    policy.validate();
    if (farm) farm->validate();
    if (horizon == 0) throw ConfigError("horizon must be > 0");
    if (warmup >= horizon) throw ConfigError("warmup must be < horizon");
    if (replications == 0) throw ConfigError("need at least one replication");
    // stability is checkable except under fork-join, which is run as-is and
    // judged by its reported utilization
    if (!farm || farm->dispatch == Dispatch::bernoulli_split) {
      const double per_server = workload.arrival_rate / server_count();
      if (!(per_server < server.effective_rate()))
        throw UnstableSystem("per-server arrival rate " + std::to_string(per_server) +
                             " >= service capacity " +
                             std::to_string(server.effective_rate()));
    }
  }
};

struct SimResult {
  double response_mean = 0.0;
  double response_ci = 0.0;  // 95% half width over replications
  double power_mean = 0.0;   // whole farm, watts
  double power_ci = 0.0;
  double off_fraction = 0.0;       // time-average fraction of powered-off servers
  double mean_jobs = 0.0;          // time-average number of jobs in system
  double gross_utilization = 0.0;  // serving-time fraction, cancelled work included
  double net_utilization = 0.0;    // completed service only; equals gross without cancellation
  std::uint64_t completions = 0;   // measured job completions over all replications
  std::uint32_t replications = 0;
};

struct TraceRecord {
  double time;
  int server;
  const char* event;
  std::size_t queue_len;  // waiting jobs on that server, excluding the one in service
  const char* mode;
};
using TraceSink = std::function<void(const TraceRecord&)>;

namespace detail {

enum class Mode : int { busy, idle_waiting, off, batch_hold, waking };

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::busy: return "busy";
    case Mode::idle_waiting: return "idle";
    case Mode::off: return "off";
    case Mode::batch_hold: return "batch_hold";
    case Mode::waking: return "waking";
  }
  return "?";
}

// batch holding happens while still powered off, so it draws nothing
inline bool draws_power(Mode m) { return m != Mode::off && m != Mode::batch_hold; }

enum class EventKind : int { departure = 0, arrival = 1, timer = 2 };
enum class TimerType : int { none, idle_expire, batch_expire, wake_done };

struct Event {
  double time;
  EventKind kind;
  TimerType timer;
  int server;
  std::uint64_t token;  // must match the server's counter or the event is stale
  std::uint64_t seq;    // insertion order, final tie breaker
};

// min-heap order: time, then departure < arrival < timer, then lower server
// index, then insertion order
struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    if (a.kind != b.kind) return static_cast<int>(a.kind) > static_cast<int>(b.kind);
    if (a.server != b.server) return a.server > b.server;
    return a.seq > b.seq;
  }
};

using EventHeap = std::priority_queue<Event, std::vector<Event>, EventAfter>;

struct RepStats {
  double response_mean = 0, power_mean = 0, off_fraction = 0, mean_jobs = 0;
  double gross_util = 0, net_util = 0;
};

// Single server or Bernoulli-split farm under the shutdown policy.
class ThresholdFarmSim {
 public:
  ThresholdFarmSim(const SimConfig& cfg, std::uint64_t rep, const TraceSink* sink)
      : cfg_(cfg),
        n_(cfg.server_count()),
        sink_(sink),
        arrivals_(substream(cfg.seed, rep, StreamId::arrivals)),
        routing_(substream(cfg.seed, rep, StreamId::routing)) {
    for (int s = 0; s < n_; ++s)
      service_.push_back(substream(
          cfg.seed, rep, static_cast<std::uint64_t>(StreamId::service_base) + s));
    servers_.resize(n_);
  }

  RepStats run() {
    for (int s = 0; s < n_; ++s) {
      if (!cfg_.policy.idle_threshold.is_never())
        push_event(cfg_.policy.idle_threshold.seconds(), EventKind::timer,
                   TimerType::idle_expire, s, servers_[s].timer_token);
    }
    if (cfg_.warmup == 0) open_window(0.0);
    schedule_next_arrival(0.0);
    while (completed_ < cfg_.horizon) {
      const Event e = heap_.top();
      heap_.pop();
      switch (e.kind) {
        case EventKind::arrival: on_arrival(e); break;
        case EventKind::departure: on_departure(e); break;
        case EventKind::timer: on_timer(e); break;
      }
    }
    return finish();
  }

 private:
  struct ServerSim {
    Mode mode = Mode::idle_waiting;
    std::deque<double> queue;  // arrival stamps of waiting jobs
    double serving_arrival = 0;
    std::uint64_t timer_token = 0;
    std::uint64_t service_token = 0;
    double mode_since = 0;
    double off_time = 0;
    double busy_time = 0;
  };

  void push_event(double time, EventKind k, TimerType tt, int server,
                  std::uint64_t token) {
    heap_.push(Event{time, k, tt, server, token, seq_++});
  }

  void schedule_next_arrival(double t) {
    const double at = t + arrivals_.exponential(cfg_.workload.arrival_rate);
    const int target =
        cfg_.farm ? static_cast<int>(routing_.uniform_below(n_)) : 0;
    push_event(at, EventKind::arrival, TimerType::none, target, 0);
  }

  void set_mode(int s, Mode m, double t) {
    ServerSim& sv = servers_[s];
    if (win_open_) {
      const double span = t - sv.mode_since;
      if (!draws_power(sv.mode)) sv.off_time += span;
      if (sv.mode == Mode::busy) sv.busy_time += span;
    }
    sv.mode_since = t;
    sv.mode = m;
  }

  void touch_jobs(double t) {
    if (win_open_) area_ += num_in_system_ * (t - last_n_);
    last_n_ = t;
  }

  void start_service(int s, double t, double arrival_stamp) {
    ServerSim& sv = servers_[s];
    set_mode(s, Mode::busy, t);
    sv.serving_arrival = arrival_stamp;
    const double demand = service_[s].exponential(cfg_.server.effective_rate());
    push_event(t + demand, EventKind::departure, TimerType::none, s,
               sv.service_token);
  }

  void trace(double t, int s, const char* event) {
    if (sink_)
      (*sink_)(TraceRecord{t, s, event, servers_[s].queue.size(),
                           mode_name(servers_[s].mode)});
  }

  void on_arrival(const Event& e) {
    const double t = e.time;
    schedule_next_arrival(t);
    touch_jobs(t);
    ++num_in_system_;
    ServerSim& sv = servers_[e.server];
    switch (sv.mode) {
      case Mode::busy:
      case Mode::batch_hold:
      case Mode::waking:
        sv.queue.push_back(t);
        break;
      case Mode::idle_waiting:
        ++sv.timer_token;  // cancels the pending idle timer, if any
        start_service(e.server, t, t);
        break;
      case Mode::off:
        sv.queue.push_back(t);
        if (cfg_.policy.batch_delay > 0) {
          set_mode(e.server, Mode::batch_hold, t);
          push_event(t + cfg_.policy.batch_delay, EventKind::timer,
                     TimerType::batch_expire, e.server, sv.timer_token);
        } else {
          set_mode(e.server, Mode::waking, t);
          push_event(t + cfg_.policy.wakeup_latency, EventKind::timer,
                     TimerType::wake_done, e.server, sv.timer_token);
        }
        break;
    }
    trace(t, e.server, "arrival");
  }

  void on_departure(const Event& e) {
    ServerSim& sv = servers_[e.server];
    if (e.token != sv.service_token) return;  // cancelled
    const double t = e.time;
    touch_jobs(t);
    --num_in_system_;
    ++completed_;
    if (completed_ > cfg_.warmup) resp_sum_ += t - sv.serving_arrival;
    if (!sv.queue.empty()) {
      const double a = sv.queue.front();
      sv.queue.pop_front();
      start_service(e.server, t, a);
    } else {
      set_mode(e.server, Mode::idle_waiting, t);
      if (!cfg_.policy.idle_threshold.is_never())
        push_event(t + cfg_.policy.idle_threshold.seconds(), EventKind::timer,
                   TimerType::idle_expire, e.server, sv.timer_token);
    }
    trace(t, e.server, "departure");
    if (completed_ == cfg_.warmup) open_window(t);
    if (completed_ == cfg_.horizon) close_window(t);
  }

  void on_timer(const Event& e) {
    ServerSim& sv = servers_[e.server];
    if (e.token != sv.timer_token) return;  // cancelled by an arrival
    const double t = e.time;
    switch (e.timer) {
      case TimerType::idle_expire:
        set_mode(e.server, Mode::off, t);
        trace(t, e.server, "idle_expire");
        break;
      case TimerType::batch_expire:
        set_mode(e.server, Mode::waking, t);
        push_event(t + cfg_.policy.wakeup_latency, EventKind::timer,
                   TimerType::wake_done, e.server, sv.timer_token);
        trace(t, e.server, "batch_expire");
        break;
      case TimerType::wake_done: {
        // a wake is only ever triggered by an arrival, so work is waiting
        const double a = sv.queue.front();
        sv.queue.pop_front();
        start_service(e.server, t, a);
        trace(t, e.server, "wake_done");
        break;
      }
      case TimerType::none:
        break;
    }
  }

  void open_window(double t) {
    win_open_ = true;
    win_start_ = t;
    resp_sum_ = 0;
    area_ = 0;
    last_n_ = t;
    for (auto& sv : servers_) {
      sv.mode_since = t;
      sv.off_time = 0;
      sv.busy_time = 0;
    }
  }

  void close_window(double t) {
    touch_jobs(t);
    for (int s = 0; s < n_; ++s) set_mode(s, servers_[s].mode, t);
    win_end_ = t;
    win_open_ = false;
  }

  RepStats finish() const {
    RepStats r;
    const double len = win_end_ - win_start_;
    const double measured =
        static_cast<double>(cfg_.horizon - cfg_.warmup);
    double off = 0, busy = 0;
    for (const auto& sv : servers_) {
      off += sv.off_time;
      busy += sv.busy_time;
    }
    r.response_mean = resp_sum_ / measured;
    r.off_fraction = off / (n_ * len);
    r.power_mean = cfg_.server.active_power() * (n_ - off / len);
    r.mean_jobs = area_ / len;
    r.gross_util = busy / (n_ * len);
    r.net_util = r.gross_util;  // nothing is ever cancelled here
    return r;
  }

  const SimConfig& cfg_;
  int n_;
  const TraceSink* sink_;
  Rng arrivals_;
  Rng routing_;
  std::vector<Rng> service_;
  std::vector<ServerSim> servers_;
  EventHeap heap_;
  std::uint64_t seq_ = 0;
  std::uint64_t completed_ = 0;
  std::int64_t num_in_system_ = 0;
  bool win_open_ = false;
  double win_start_ = 0, win_end_ = 0;
  double resp_sum_ = 0, area_ = 0, last_n_ = 0;
};

// Fork-join farm: every job forks one copy per server and departs when
// join_count copies have finished; the surviving copies are cancelled and
// their servers move on immediately. Servers never power down. Service
// demands are drawn per (job, server) at arrival time, so runs with
// different join counts on the same seed see identical randomness.
class ForkJoinSim {
 public:
  ForkJoinSim(const SimConfig& cfg, std::uint64_t rep, const TraceSink* sink)
      : cfg_(cfg),
        n_(cfg.server_count()),
        k_(cfg.farm->join_count),
        sink_(sink),
        arrivals_(substream(cfg.seed, rep, StreamId::arrivals)) {
    for (int s = 0; s < n_; ++s)
      service_.push_back(substream(
          cfg_.seed, rep, static_cast<std::uint64_t>(StreamId::service_base) + s));
    servers_.resize(n_);
  }

  RepStats run() {
    if (cfg_.warmup == 0) open_window(0.0);
    schedule_next_arrival(0.0);
    while (completed_ < cfg_.horizon) {
      const Event e = heap_.top();
      heap_.pop();
      if (e.kind == EventKind::arrival)
        on_arrival(e.time);
      else
        on_departure(e);
    }
    return finish();
  }

 private:
  struct Srv {
    bool busy = false;
    std::uint32_t job = 0;
    double service_start = 0;
    std::uint64_t service_token = 0;
    std::deque<std::uint32_t> queue;  // job ids; finished jobs skipped lazily
    double mark = 0;                  // start of the current busy stretch
    double busy_time = 0;
    double net_time = 0;
  };

  struct Job {
    double arrival;
    int remaining;  // copies still needed before the job departs
    bool done;
  };

  void push_event(double time, EventKind k, int server, std::uint64_t token) {
    heap_.push(Event{time, k, TimerType::none, server, token, seq_++});
  }

  void schedule_next_arrival(double t) {
    push_event(t + arrivals_.exponential(cfg_.workload.arrival_rate),
               EventKind::arrival, 0, 0);
  }

  void touch_jobs(double t) {
    if (win_open_) area_ += num_in_system_ * (t - last_n_);
    last_n_ = t;
  }

  // flushes the running busy stretch into busy_time
  void account(Srv& sv, double t) {
    if (win_open_ && sv.busy) sv.busy_time += t - sv.mark;
    sv.mark = t;
  }

  void trace(double t, int s, const char* event) {
    if (sink_)
      (*sink_)(TraceRecord{t, s, event, servers_[s].queue.size(),
                           servers_[s].busy ? "busy" : "idle"});
  }

  void start_next(int s, double t) {
    Srv& sv = servers_[s];
    account(sv, t);
    while (!sv.queue.empty() && jobs_[sv.queue.front()].done)
      sv.queue.pop_front();
    if (sv.queue.empty()) {
      sv.busy = false;
      return;
    }
    sv.job = sv.queue.front();
    sv.queue.pop_front();
    sv.busy = true;
    sv.service_start = t;
    push_event(t + demands_[sv.job * n_ + s], EventKind::departure, s,
               sv.service_token);
  }

  void on_arrival(double t) {
    schedule_next_arrival(t);
    touch_jobs(t);
    ++num_in_system_;
    const auto j = static_cast<std::uint32_t>(jobs_.size());
    jobs_.push_back(Job{t, k_, false});
    for (int s = 0; s < n_; ++s)
      demands_.push_back(service_[s].exponential(cfg_.server.effective_rate()));
    for (int s = 0; s < n_; ++s) {
      servers_[s].queue.push_back(j);
      if (!servers_[s].busy) start_next(s, t);
    }
    trace(t, 0, "arrival");
  }

  void on_departure(const Event& e) {
    Srv& sv = servers_[e.server];
    if (e.token != sv.service_token) return;  // copy was cancelled
    const double t = e.time;
    const std::uint32_t j = sv.job;
    if (win_open_)
      sv.net_time += t - std::max(sv.service_start, win_start_);
    Job& job = jobs_[j];
    --job.remaining;
    bool closed = false;
    if (job.remaining == 0) {
      job.done = true;
      touch_jobs(t);
      --num_in_system_;
      ++completed_;
      if (completed_ > cfg_.warmup) resp_sum_ += t - job.arrival;
      // cancel the copies still running elsewhere
      for (int s2 = 0; s2 < n_; ++s2) {
        if (s2 == e.server) continue;
        Srv& other = servers_[s2];
        if (other.busy && other.job == j) {
          ++other.service_token;
          start_next(s2, t);
        }
      }
      if (completed_ == cfg_.warmup) open_window(t);
      if (completed_ == cfg_.horizon) closed = true;
    }
    start_next(e.server, t);
    trace(t, e.server, "departure");
    if (closed) close_window(t);
  }

  void open_window(double t) {
    win_open_ = true;
    win_start_ = t;
    resp_sum_ = 0;
    area_ = 0;
    last_n_ = t;
    for (auto& sv : servers_) {
      sv.mark = t;
      sv.busy_time = 0;
      sv.net_time = 0;
    }
  }

  void close_window(double t) {
    touch_jobs(t);
    for (auto& sv : servers_) account(sv, t);
    win_end_ = t;
    win_open_ = false;
  }

  RepStats finish() const {
    RepStats r;
    const double len = win_end_ - win_start_;
    const double measured = static_cast<double>(cfg_.horizon - cfg_.warmup);
    double busy = 0, net = 0;
    for (const auto& sv : servers_) {
      busy += sv.busy_time;
      net += sv.net_time;
    }
    r.response_mean = resp_sum_ / measured;
    r.power_mean = n_ * cfg_.server.active_power();
    r.off_fraction = 0.0;
    r.mean_jobs = area_ / len;
    r.gross_util = busy / (n_ * len);
    r.net_util = net / (n_ * len);
    return r;
  }

  const SimConfig& cfg_;
  int n_;
  int k_;
  const TraceSink* sink_;
  Rng arrivals_;
  std::vector<Rng> service_;
  std::vector<Srv> servers_;
  std::vector<Job> jobs_;
  std::vector<double> demands_;  // demand of (job, server) at job * n_ + server
  EventHeap heap_;
  std::uint64_t seq_ = 0;
  std::uint64_t completed_ = 0;
  std::int64_t num_in_system_ = 0;
  bool win_open_ = false;
  double win_start_ = 0, win_end_ = 0;
  double resp_sum_ = 0, area_ = 0, last_n_ = 0;
};

inline RepStats simulate_one(const SimConfig& cfg, std::uint64_t rep,
                             const TraceSink* sink) {
  if (cfg.farm && cfg.farm->dispatch == Dispatch::fork_join)
    return ForkJoinSim(cfg, rep, sink).run();
  return ThresholdFarmSim(cfg, rep, sink).run();
}

}  // namespace detail

/// Runs all replications and aggregates them. The optional trace sink sees
/// every processed event of replication 0 only.
inline SimResult simulate(const SimConfig& cfg,
                          const TraceSink* trace = nullptr) {
  cfg.validate();
  std::vector<detail::RepStats> reps(cfg.replications);
  for (std::uint32_t r = 0; r < cfg.replications; ++r)
    reps[r] = detail::simulate_one(cfg, r, r == 0 ? trace : nullptr);

  std::vector<double> resp, power;
  resp.reserve(reps.size());
  power.reserve(reps.size());
  SimResult out;
  for (const auto& r : reps) {
    resp.push_back(r.response_mean);
    power.push_back(r.power_mean);
    out.off_fraction += r.off_fraction;
    out.mean_jobs += r.mean_jobs;
    out.gross_utilization += r.gross_util;
    out.net_utilization += r.net_util;
  }
  const auto n = static_cast<double>(reps.size());
  out.off_fraction /= n;
  out.mean_jobs /= n;
  out.gross_utilization /= n;
  out.net_utilization /= n;
  const SampleSummary rs = summarize(resp), ps = summarize(power);
  out.response_mean = rs.mean;
  out.response_ci = rs.count > 1 ? rs.ci_halfwidth() : 0.0;
  out.power_mean = ps.mean;
  out.power_ci = ps.count > 1 ? ps.ci_halfwidth() : 0.0;
  out.completions = (cfg.horizon - cfg.warmup) * cfg.replications;
  out.replications = cfg.replications;
  return out;
}

}  // namespace pmq
