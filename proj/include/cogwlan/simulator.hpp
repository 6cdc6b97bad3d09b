#pragma once

// Discrete-event simulation of the full scenario, used as the independent
// check on the analytical pipeline.
//
// The primary side draws Poisson packet arrivals per frame into a finite
// buffer (blocking once c_b packets are held) and schedules up to M slots per
// DL subframe, laid out by the striping policy. The secondary side runs n_s
// saturated nodes on a continuous-time control channel: backoff counters are
// drawn uniformly from the stage window, one countdown step is consumed per
// virtual slot (idle, collision, or another node's complete handshake), and
// the winner of a successful RTS/CTS exchange transmits its packet through
// the empty DL slots, pausing over UL subframes and resuming at the next
// frame start without re-contention. Throughput is counted after a warmup
// period, with a batch-means confidence interval.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cogwlan/config.hpp"
#include "cogwlan/rng.hpp"
#include "cogwlan/striping.hpp"

namespace cogwlan {

struct SimConfig {
  std::uint64_t seed = 1;
  long horizon_frames = 200000;
  long warmup_frames = -1;  // negative: 10% of the horizon
  int batches = 20;
  bool audit = false;            // verify slot bookkeeping as it runs
  bool collect_histogram = false;
};

struct SimResult {
  double per_su_throughput = 0.0;  // packets/second
  double network_throughput = 0.0;
  double ci95_halfwidth = 0.0;
  long frames_simulated = 0;
  std::uint64_t seed = 0;
  long packets_completed = 0;
};

namespace detail {
// Two-sided 97.5% Student t quantiles for small degrees of freedom.
inline double t_quantile_975(int df) {
  static const double q[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365,
                             2.306,  2.262, 2.228, 2.201, 2.179, 2.160, 2.145,
                             2.131,  2.120, 2.110, 2.101, 2.093, 2.086};
  if (df < 1) return 12.706;
  if (df <= 20) return q[df - 1];
  return 1.96;
}
}  // namespace detail

class Simulator {
 public:
  Simulator(const ScenarioConfig& cfg, const SimConfig& sim)
      : cfg_(cfg),
        sim_(sim),
        geom_(derive_geometry(cfg)),
        striping_(geom_, cfg.striping),
        primary_rng_(Rng::stream(sim.seed, 0)) {
    if (sim_.horizon_frames <= 0) throw std::invalid_argument("sim: bad horizon");
    if (sim_.warmup_frames < 0) sim_.warmup_frames = sim_.horizon_frames / 10;
    if (sim_.warmup_frames >= sim_.horizon_frames)
      throw std::invalid_argument("sim: warmup must be shorter than the horizon");

    if (cfg.striping != Striping::Rectangular) {
      cum_.assign(geom_.buffer_slots + 1, std::vector<int>(geom_.cols_dl + 1, 0));
      for (int u = 0; u <= geom_.buffer_slots; ++u) {
        const SlotProfile p = striping_.profile(u);
        for (int c = 1; c <= geom_.cols_dl; ++c)
          cum_[u][c] = cum_[u][c - 1] + p.f[c - 1];
      }
    }
    if (sim_.collect_histogram) histogram_.assign(geom_.buffer_slots + 1, 0);
    states_.reserve(static_cast<std::size_t>(sim_.horizon_frames) + 64);
  }

  SimResult run() {
    struct Node {
      int stage = 1;
      int k = 0;
    };
    std::vector<Node> nodes(cfg_.n_s);
    std::vector<Rng> node_rng;
    node_rng.reserve(cfg_.n_s);
    for (int i = 0; i < cfg_.n_s; ++i) node_rng.push_back(Rng::stream(sim_.seed, i + 1));
    for (int i = 0; i < cfg_.n_s; ++i)
      nodes[i].k = node_rng[i].uniform_int(0, cfg_.w0 - 1);

    const double horizon_t = sim_.horizon_frames * geom_.t_frame;
    const double warmup_t = sim_.warmup_frames * geom_.t_frame;
    const double span = horizon_t - warmup_t;
    const double batch_len = span / sim_.batches;
    std::vector<long> batch_counts(sim_.batches, 0);
    long completed = 0;

    std::vector<int> attempt;
    double t = 0.0;
    while (t < horizon_t) {
      attempt.clear();
      for (int i = 0; i < cfg_.n_s; ++i)
        if (nodes[i].k == 0) attempt.push_back(i);

      if (attempt.empty()) {
        t += cfg_.t_idle;
        for (auto& nd : nodes) --nd.k;
      } else if (attempt.size() == 1) {
        const int w = attempt[0];
        const double data_start = t + cfg_.t_rts + cfg_.t_cts;
        const double data_end = transmit_data(data_start);
        t = data_end + cfg_.t_ack;
        if (t > warmup_t && t <= horizon_t) {
          ++completed;
          int b = static_cast<int>((t - warmup_t) / batch_len);
          batch_counts[std::min(b, sim_.batches - 1)]++;
        }
        nodes[w].stage = 1;
        nodes[w].k = node_rng[w].uniform_int(0, cfg_.w0 - 1);
        for (int i = 0; i < cfg_.n_s; ++i)
          if (i != w) --nodes[i].k;
      } else {
        t += cfg_.t_coll;
        for (int i : attempt) {
          nodes[i].stage = std::min(nodes[i].stage + 1, cfg_.m_stages);
          const int window = cfg_.w0 << (nodes[i].stage - 1);
          nodes[i].k = node_rng[i].uniform_int(0, window - 1);
        }
        for (int i = 0; i < cfg_.n_s; ++i)
          if (nodes[i].k > 0 &&
              std::find(attempt.begin(), attempt.end(), i) == attempt.end())
            --nodes[i].k;
      }
    }

    SimResult res;
    res.seed = sim_.seed;
    res.frames_simulated = sim_.horizon_frames;
    res.packets_completed = completed;
    res.per_su_throughput = completed / (cfg_.n_s * span);
    res.network_throughput = cfg_.n_s * res.per_su_throughput;

    double mean = 0.0;
    for (long c : batch_counts) mean += c / (cfg_.n_s * batch_len);
    mean /= sim_.batches;
    double var = 0.0;
    for (long c : batch_counts) {
      const double x = c / (cfg_.n_s * batch_len) - mean;
      var += x * x;
    }
    var /= (sim_.batches - 1);
    res.ci95_halfwidth =
        detail::t_quantile_975(sim_.batches - 1) * std::sqrt(var / sim_.batches);
    return res;
  }

  // Buffer states observed at frame starts inside [warmup, horizon), by state.
  const std::vector<long long>& state_histogram() const { return histogram_; }

 private:
  // Buffer recursion: slots pending at the start of frame f.
  int frame_state(long f) {
    while (static_cast<long>(states_.size()) <= f) {
      int next;
      if (states_.empty()) {
        next = 0;
      } else {
        const int prev = states_.back();
        const int carry = std::max(prev - geom_.slots_dl, 0);
        const int carry_packets = (carry + cfg_.s_p - 1) / cfg_.s_p;
        const int arrivals = primary_rng_.poisson(cfg_.lambda_p);
        const int admitted = std::min(arrivals, cfg_.c_b - carry_packets);
        next = carry + admitted * cfg_.s_p;
      }
      const long idx = static_cast<long>(states_.size());
      if (sim_.collect_histogram && idx >= sim_.warmup_frames &&
          idx < sim_.horizon_frames)
        ++histogram_[next];
      states_.push_back(next);
    }
    return states_[f];
  }

  // Walks a packet of s_s slots through empty DL slots starting at time t0,
  // crossing UL subframes and frame boundaries, and returns the completion
  // instant. Within a frame the packet consumes the empty slots of each
  // usable column in time order, all empties of a column at once; the final
  // column is occupied for the fraction of its span the packet needs.
  double transmit_data(double t0) {
    long frame = static_cast<long>(std::floor(t0 / geom_.t_frame));
    double s = cfg_.s_s;
    bool first = true;
    for (long hops = 0;; ++hops, ++frame, first = false) {
      if (hops > 20000000) throw std::runtime_error("sim: transmission starved");
      const int u = frame_state(frame);
      const double fs = frame * geom_.t_frame;

      if (cfg_.striping == Striping::Rectangular) {
        const double e = std::max(geom_.slots_dl - u, 0);
        if (e > 0.0) {
          const double phase = first ? t0 - fs : 0.0;
          if (phase < geom_.t_dl) {
            const double res = e * (geom_.t_dl - phase) / geom_.t_dl;
            if (res > s) {
              const double end = fs + phase + s / e * geom_.t_dl;
              if (sim_.audit) audit_end(t0, fs, end);
              return end;
            }
            s -= res;
          }
        }
        continue;
      }

      int cmin = 1;
      if (first) {
        const double q = (t0 - fs) / (geom_.nu * geom_.t_sym);
        const double qr = std::nearbyint(q);
        cmin = (std::abs(q - qr) <= 1e-9 * (1.0 + std::abs(q)))
                   ? static_cast<int>(qr) + 1
                   : static_cast<int>(std::ceil(q)) + 1;
      }
      const auto& cum = cum_[u];
      for (int c = std::max(cmin, 1); c <= geom_.cols_dl; ++c) {
        const int fc = cum[c] - cum[c - 1];
        if (fc <= 0) continue;
        if (s <= fc) {
          const double end =
              fs + ((c - 1) * geom_.nu + geom_.nu * (s / fc)) * geom_.t_sym;
          if (sim_.audit) audit_end(t0, fs, end);
          return end;
        }
        s -= fc;
      }
    }
  }

  void audit_end(double t0, double frame_start, double end) const {
    if (end <= t0 || end - frame_start > geom_.t_dl + 1e-9)
      throw std::runtime_error("sim: transmission ended outside the DL subframe");
  }

  ScenarioConfig cfg_;
  SimConfig sim_;
  FrameGeometry geom_;
  StripingTable striping_;
  Rng primary_rng_;
  std::vector<int> states_;
  std::vector<std::vector<int>> cum_;
  std::vector<long long> histogram_;
};

inline SimResult simulate(const ScenarioConfig& cfg, const SimConfig& sim) {
  return Simulator(cfg, sim).run();
}

}  // namespace cogwlan
