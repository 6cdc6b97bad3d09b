#pragma once

// Discrete-time Markov chain over the slot backlog of the primary base
// station buffer, observed at frame boundaries. State u (0..N) is the number
// of slots still required to drain the buffer; each frame transmits up to M
// slots and admits Poisson packet arrivals, each worth s_p slots, with the
// overflow pooled into the full-buffer state N.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "cogwlan/config.hpp"

namespace cogwlan {

inline double poisson_pmf(double lambda, int k) {
  if (lambda < 0 || k < 0) throw std::invalid_argument("poisson_pmf: negative input");
  if (lambda == 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(-lambda + k * std::log(lambda) - std::lgamma(k + 1.0));
}

inline Eigen::MatrixXd build_transition_matrix(const ScenarioConfig& cfg,
                                               const FrameGeometry& g) {
  const int n = g.buffer_slots;
  const int m = g.slots_dl;
  const int sp = cfg.s_p;

  // Arrival pmf for k = 0..c_b; anything beyond c_b can only land in the
  // overflow term, so the tail is carried analytically as 1 - cumsum.
  std::vector<double> pmf(cfg.c_b + 1);
  for (int k = 0; k <= cfg.c_b; ++k) pmf[k] = poisson_pmf(cfg.lambda_p, k);

  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (int i = 0; i <= n; ++i) {
    const int carry = std::max(i - m, 0);
    // Largest admissible arrival count before the next state saturates at N.
    const int k_free = static_cast<int>((n - carry + sp - 1) / sp);
    double below = 0.0;
    for (int k = 0; k < k_free; ++k) {
      p(i, carry + k * sp) += pmf[k];
      below += pmf[k];
    }
    p(i, n) += std::max(1.0 - below, 0.0);
  }
  return p;
}

// States reachable from 0 through nonzero transition probabilities.
inline std::vector<int> reachable_states(const Eigen::MatrixXd& p) {
  const int n = static_cast<int>(p.rows());
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v = 0; v < n; ++v) {
      if (!seen[v] && p(u, v) > 0.0) {
        seen[v] = 1;
        stack.push_back(v);
      }
    }
  }
  std::vector<int> out;
  for (int u = 0; u < n; ++u)
    if (seen[u]) out.push_back(u);
  return out;
}

// Stationary distribution of the class reachable from state 0; entries for
// unreachable states are exactly zero. Direct linear solve with the
// normalization constraint replacing one balance equation.
inline Eigen::VectorXd steady_state(const Eigen::MatrixXd& p) {
  const int n = static_cast<int>(p.rows());
  for (int i = 0; i < n; ++i) {
    if (std::abs(p.row(i).sum() - 1.0) > 1e-9)
      throw std::invalid_argument("steady_state: matrix is not row-stochastic");
  }
  const std::vector<int> states = reachable_states(p);
  const int r = static_cast<int>(states.size());

  Eigen::MatrixXd sub(r, r);
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b) sub(a, b) = p(states[a], states[b]);

  Eigen::MatrixXd lhs = sub.transpose() - Eigen::MatrixXd::Identity(r, r);
  lhs.row(r - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(r);
  rhs(r - 1) = 1.0;
  Eigen::VectorXd sol = lhs.partialPivLu().solve(rhs);

  for (int a = 0; a < r; ++a) {
    if (sol(a) < -1e-9) throw std::runtime_error("steady_state: negative probability");
    sol(a) = std::max(sol(a), 0.0);
  }
  sol /= sol.sum();

  const double residual = ((sol.transpose() * sub).transpose() - sol).lpNorm<Eigen::Infinity>();
  if (residual > 1e-10) throw std::runtime_error("steady_state: balance residual too large");

  Eigen::VectorXd full = Eigen::VectorXd::Zero(n);
  for (int a = 0; a < r; ++a) full(states[a]) = sol(a);
  return full;
}

struct PrimaryChain {
  FrameGeometry geom;
  double lambda_p = 0.0;
  Eigen::MatrixXd transition;       // (N+1) x (N+1), rows exactly stochastic
  Eigen::VectorXd pi;               // stationary distribution over 0..N
  std::vector<double> arrival_pmf;  // packet-arrival pmf, k = 0..c_b
  std::vector<int> reachable;       // states reachable from 0, ascending

  // Mean number of empty slots in a DL subframe under pi.
  double mean_empty_slots() const {
    double e = 0.0;
    for (int u : reachable) e += pi(u) * std::max(geom.slots_dl - u, 0);
    return e;
  }

  // Mean slots drained per frame under pi.
  double mean_drained_slots() const {
    double d = 0.0;
    for (int u : reachable) d += pi(u) * std::min(u, geom.slots_dl);
    return d;
  }
};

inline PrimaryChain build_primary_chain(const ScenarioConfig& cfg) {
  PrimaryChain chain;
  chain.geom = derive_geometry(cfg);
  chain.lambda_p = cfg.lambda_p;
  chain.transition = build_transition_matrix(cfg, chain.geom);
  chain.pi = steady_state(chain.transition);
  chain.reachable = reachable_states(chain.transition);
  chain.arrival_pmf.resize(cfg.c_b + 1);
  for (int k = 0; k <= cfg.c_b; ++k) chain.arrival_pmf[k] = poisson_pmf(cfg.lambda_p, k);
  return chain;
}

}  // namespace cogwlan
