#pragma once

// Saturated DCF contention quantities: per-node attempt probability and
// conditional collision probability from the standard fixed point with
// binary-exponential windows capped after m stages, plus the virtual-slot
// type probabilities seen by a node while it counts down.

#include <cmath>
#include <stdexcept>
#include <utility>

#include "cogwlan/config.hpp"

namespace cogwlan {

struct MacSlotModel {
  double tau_mac = 0.0;  // per-slot attempt probability of one saturated node
  double p_col = 0.0;    // collision probability of an attempt
  double p_idle = 1.0;   // slot types observed by a tagged backing-off node
  double p_coll = 0.0;
  double p_succ = 0.0;
  double t_idle = 0.0;   // idle / collision virtual-slot durations
  double t_coll = 0.0;
};

// Attempt probability given the collision probability, for the backoff
// ladder with windows w0 * 2^(n-1) at stage n and the window held constant
// from stage m on (m - 1 doublings):
// tau = 2 / ((w0 + 1) + p * w0 * sum_{i=0}^{m-2} (2p)^i),
// the stable rearrangement of the classic saturated-DCF closed form
// 2(1-2p) / ((1-2p)(w0+1) + p w0 (1-(2p)^d)) with d doublings. Matches the
// renewal argument exactly: attempts per packet over mean countdown slots
// per packet.
inline double dcf_attempt_probability(double p, int w0, int m) {
  double series = 0.0;
  double term = 1.0;
  for (int i = 0; i + 1 < m; ++i) {
    series += term;
    term *= 2.0 * p;
  }
  return 2.0 / ((w0 + 1) + p * w0 * series);
}

// Solves tau = f(p), p = 1 - (1 - tau)^(n_s - 1) by bisection on p.
inline std::pair<double, double> solve_bianchi(int w0, int m, int n_s) {
  if (w0 < 2 || m < 1 || n_s < 1) throw std::invalid_argument("solve_bianchi: bad arguments");
  if (n_s == 1) return {dcf_attempt_probability(0.0, w0, m), 0.0};

  auto residual = [&](double p) {
    const double tau = dcf_attempt_probability(p, w0, m);
    return p - (1.0 - std::pow(1.0 - tau, n_s - 1));
  };
  double lo = 0.0, hi = 1.0 - 1e-15;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (residual(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const double p = 0.5 * (lo + hi);
  return {dcf_attempt_probability(p, w0, m), p};
}

// Slot-type distribution over the other n_s - 1 nodes.
inline void slot_probabilities(double tau, int n_s, double& p_idle, double& p_coll,
                               double& p_succ) {
  if (n_s == 1) {
    p_idle = 1.0;
    p_coll = 0.0;
    p_succ = 0.0;
    return;
  }
  p_idle = std::pow(1.0 - tau, n_s - 1);
  p_succ = (n_s - 1) * tau * std::pow(1.0 - tau, n_s - 2);
  p_coll = 1.0 - p_idle - p_succ;
}

inline MacSlotModel make_mac_model(const ScenarioConfig& cfg) {
  MacSlotModel mac;
  auto [tau, p] = solve_bianchi(cfg.w0, cfg.m_stages, cfg.n_s);
  mac.tau_mac = tau;
  mac.p_col = p;
  slot_probabilities(tau, cfg.n_s, mac.p_idle, mac.p_coll, mac.p_succ);
  mac.t_idle = cfg.t_idle;
  mac.t_coll = cfg.t_coll;
  return mac;
}

}  // namespace cogwlan
