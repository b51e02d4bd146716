#include "lockscale/sim.hpp"

#include <array>
#include <cmath>
#include <deque>
#include <queue>
#include <string>

#include "lockscale/errors.hpp"
#include "lockscale/rng.hpp"

namespace lockscale::sim {

namespace {

// Two-sided 97.5% quantile of Student's t with kBatches - 1 = 19 dof.
constexpr double kT19 = 2.093024054408263;

struct Event {
  std::uint64_t time;
  std::uint64_t seq;
  std::uint32_t customer;
  bool departure;

  bool operator>(const Event& o) const noexcept {
    return time != o.time ? time > o.time : seq > o.seq;
  }
};

std::uint64_t draw(Xoshiro256& rng, Distribution dist, double mean) {
  const double x = dist == Distribution::exponential ? rng.exponential(mean) : mean;
  return static_cast<std::uint64_t>(std::llround(x));
}

class Simulation {
 public:
  explicit Simulation(const SimConfig& cfg)
      : cfg_(cfg),
        window_begin_(cfg.effective_warmup()),
        window_end_(window_begin_ + cfg.sample),
        arrival_time_(cfg.n, 0) {
    Xoshiro256 root(cfg.seed);
    streams_.reserve(cfg.n);
    for (std::uint32_t c = 0; c < cfg.n; ++c) streams_.push_back(root.split());
  }

  SimResult run() {
    for (std::uint32_t c = 0; c < cfg_.n; ++c) schedule(c, think(c), false);

    while (!events_.empty() && events_.top().time < window_end_) {
      const Event ev = events_.top();
      events_.pop();
      advance(ev.time);
      if (ev.departure) {
        depart(ev.customer);
      } else {
        arrive(ev.customer);
      }
    }
    advance(window_end_);
    return summarize();
  }

 private:
  std::uint64_t think(std::uint32_t c) { return draw(streams_[c], cfg_.think_dist, cfg_.a); }
  std::uint64_t service(std::uint32_t c) { return draw(streams_[c], cfg_.service_dist, cfg_.s); }

  void schedule(std::uint32_t c, std::uint64_t delay, bool departure) {
    events_.push(Event{now_ + delay, seq_++, c, departure});
  }

  void start_service(std::uint32_t c) {
    ++in_service_;
    schedule(c, service(c), true);
  }

  void arrive(std::uint32_t c) {
    arrival_time_[c] = now_;
    if (cfg_.mode == ServerMode::single_server && in_service_ > 0) {
      waiting_.push_back(c);
    } else {
      start_service(c);
    }
  }

  void depart(std::uint32_t c) {
    --in_service_;
    if (now_ >= window_begin_) {
      ++completions_;
      response_sum_ += static_cast<double>(now_ - arrival_time_[c]);
      const auto batch = (now_ - window_begin_) * kBatches / cfg_.sample;
      ++batch_completions_[batch];
    }
    schedule(c, think(c), false);
    if (!waiting_.empty()) {
      const std::uint32_t next = waiting_.front();
      waiting_.pop_front();
      start_service(next);
    }
  }

  // Integrates the state over [now_, t) clipped to the sample window.
  void advance(std::uint64_t t) {
    const std::uint64_t from = std::max(now_, window_begin_);
    const std::uint64_t to = std::min(t, window_end_);
    if (to > from) {
      const auto dt = static_cast<double>(to - from);
      queue_area_ += dt * static_cast<double>(in_service_ + waiting_.size());
      if (in_service_ > 0) busy_time_ += dt;
    }
    now_ = t;
  }

  SimResult summarize() const {
    SimResult r;
    const auto window = static_cast<double>(cfg_.sample);
    r.completions = completions_;
    r.throughput = static_cast<double>(completions_) / window;
    r.mean_queue_length = queue_area_ / window;
    r.utilization = busy_time_ / window;
    r.mean_response = completions_ > 0 ? response_sum_ / static_cast<double>(completions_) : 0.0;
    const double littles = r.throughput * r.mean_response;
    r.little_law_error =
        r.mean_queue_length > 0.0 ? std::abs(r.mean_queue_length - littles) / r.mean_queue_length
                                  : 0.0;

    // Batches are equal-length slices of the window (the last may be one
    // cycle longer when sample is not a multiple of kBatches).
    double mean = 0.0;
    std::array<double, kBatches> rates{};
    for (int b = 0; b < kBatches; ++b) {
      const std::uint64_t lo = cfg_.sample * b / kBatches;
      const std::uint64_t hi = cfg_.sample * (b + 1) / kBatches;
      rates[b] = hi > lo ? static_cast<double>(batch_completions_[b]) / static_cast<double>(hi - lo)
                         : 0.0;
      mean += rates[b];
    }
    mean /= kBatches;
    double var = 0.0;
    for (double x : rates) var += (x - mean) * (x - mean);
    var /= kBatches - 1;
    r.ci95_throughput = kT19 * std::sqrt(var / kBatches);
    return r;
  }

  const SimConfig& cfg_;
  const std::uint64_t window_begin_;
  const std::uint64_t window_end_;
  std::vector<Xoshiro256> streams_;
  std::vector<std::uint64_t> arrival_time_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::deque<std::uint32_t> waiting_;
  std::uint64_t now_ = 0;
  std::uint64_t seq_ = 0;
  std::uint32_t in_service_ = 0;

  std::uint64_t completions_ = 0;
  double response_sum_ = 0.0;
  double queue_area_ = 0.0;
  double busy_time_ = 0.0;
  std::array<std::uint64_t, kBatches> batch_completions_{};
};

}  // namespace

std::string_view to_string(Distribution d) noexcept {
  return d == Distribution::exponential ? "exponential" : "deterministic";
}

std::string_view to_string(ServerMode m) noexcept {
  return m == ServerMode::single_server ? "single-server" : "infinite-server";
}

Distribution parse_distribution(std::string_view name) {
  if (name == "exponential" || name == "exp") return Distribution::exponential;
  if (name == "deterministic" || name == "det") return Distribution::deterministic;
  throw InvalidParameter("unknown distribution: " + std::string(name));
}

ServerMode parse_server_mode(std::string_view name) {
  if (name == "single-server" || name == "single") return ServerMode::single_server;
  if (name == "infinite-server" || name == "infinite") return ServerMode::infinite_server;
  throw InvalidParameter("unknown server mode: " + std::string(name));
}

void SimConfig::validate() const {
  if (n < 1) throw InvalidParameter("simulation needs at least one customer");
  if (!(a > 0.0) || !std::isfinite(a)) throw InvalidParameter("think time must be positive");
  if (!(s > 0.0) || !std::isfinite(s)) throw InvalidParameter("service time must be positive");
  if (sample == 0) throw InvalidParameter("sample window must be positive");
  if (warmup && *warmup == 0) throw InvalidParameter("warm-up must be positive");
}

std::uint64_t SimConfig::effective_warmup() const noexcept {
  return warmup ? *warmup : std::max<std::uint64_t>(1, sample / 10);
}

SimResult run(const SimConfig& config) {
  config.validate();
  return Simulation(config).run();
}

std::uint64_t sweep_seed(std::uint64_t base_seed, std::uint32_t n) noexcept {
  return mix_seed(base_seed, n);
}

std::vector<SweepPoint> sweep_serial(const SimConfig& base,
                                     std::span<const std::uint32_t> n_values) {
  std::vector<SweepPoint> out;
  out.reserve(n_values.size());
  for (std::uint32_t n : n_values) {
    SimConfig cfg = base;
    cfg.n = n;
    cfg.seed = sweep_seed(base.seed, n);
    out.push_back(SweepPoint{n, run(cfg)});
  }
  return out;
}

std::vector<SweepPoint> sweep(const SimConfig& base, std::span<const std::uint32_t> n_values) {
  for (std::uint32_t n : n_values) {
    SimConfig cfg = base;
    cfg.n = n;
    cfg.validate();
  }
  std::vector<SweepPoint> out(n_values.size());
  const auto count = static_cast<std::int64_t>(n_values.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < count; ++i) {
    SimConfig cfg = base;
    cfg.n = n_values[i];
    cfg.seed = sweep_seed(base.seed, cfg.n);
    out[i] = SweepPoint{cfg.n, Simulation(cfg).run()};
  }
  return out;
}

}  // namespace lockscale::sim
