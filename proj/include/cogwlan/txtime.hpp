#pragma once

// Transmission-time solver. For every start symbol i it computes the mean
// duration gamma[i] of a secondary packet transmission (UL interruptions and
// multi-frame carryover included), the distribution beta[i][i'] of the symbol
// at which the transmission ends, and the distribution over buffer states of
// the frame in which such a transmission begins.
//
// The computation propagates a unit flow through an open network whose nodes
// are buffer states. A flow visiting node u as class (x, s) either completes
// inside the frame (exits with an end symbol) or occupies the rest of the
// frame and moves to node u' with probability P(u, u'), continuing at the
// next frame start as class (0, s - e_res). Flows are processed level by
// level in decreasing remaining slots s; within a level only fully loaded
// frames (zero empty slots) circulate flow, which is resolved exactly by one
// LU solve against a matrix shared by all levels and start symbols.
//
// The entry distribution is circular: a transmission starts in the same
// frame in which the previous one completed. It is resolved by fixed-point
// iteration seeded with the stationary buffer distribution; exploiting the
// linearity of the flow solve, each iteration is a small matrix-vector
// product against per-node response columns assembled once per start symbol.

#include <Eigen/Dense>

#include <cmath>
#include <atomic>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "cogwlan/config.hpp"
#include "cogwlan/markov_chain.hpp"
#include "cogwlan/striping.hpp"

namespace cogwlan {

struct TxTimeTable {
  FrameGeometry geom;
  Striping policy = Striping::Horizontal;
  int s_s = 0;
  std::vector<double> gamma;               // [i-1], i = 1..k_sym, seconds
  std::vector<std::vector<double>> beta;   // [i-1][i'-1]
  std::vector<std::vector<double>> entry;  // [i-1][u], u = 0..N

  void validate() const {
    const double floor_time = s_s * geom.nu * geom.t_sym / geom.rows;
    for (int i = 1; i <= geom.k_sym; ++i) {
      const auto& row = beta[i - 1];
      double sum = 0.0;
      for (int ip = 1; ip <= geom.k_sym; ++ip) {
        if (ip > geom.k_sym_dl && row[ip - 1] != 0.0)
          throw std::runtime_error("txtime: end-symbol mass in the UL subframe");
        sum += row[ip - 1];
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw std::runtime_error("txtime: beta row does not sum to 1");
      if (!(gamma[i - 1] >= floor_time) || !std::isfinite(gamma[i - 1]))
        throw std::runtime_error("txtime: gamma below physical floor");
      double esum = 0.0;
      for (double v : entry[i - 1]) esum += v;
      if (std::abs(esum - 1.0) > 1e-9)
        throw std::runtime_error("txtime: entry distribution does not sum to 1");
    }
  }
};

struct Qn2Options {
  // Entry distribution of a transmission, i.e. the buffer state of the frame
  // a transmission starts in:
  //  - Shared: the node distribution of the previous completion, with the
  //    previous transmission a class mixture; one fixed point shared by all
  //    start symbols.
  //  - SelfConsistent: each start class is conditioned on its own completion
  //    distribution (a per-class fixed point).
  //  - Stationary: the stationary buffer distribution.
  enum class EntryMode { Shared, SelfConsistent, Stationary };
  EntryMode entry_mode = EntryMode::Shared;
  // Class weights of the previous transmission for Shared mode; uniform over
  // start symbols when empty.
  std::vector<double> start_weights;
  double tol = 1e-10;
  double stall_tol = 1e-8;  // acceptable residual when the iteration stalls
  int max_iters = 10000;
  bool parallel = true;
};

class Qn2Solver {
 public:
  Qn2Solver(const PrimaryChain& chain, const StripingTable& striping, int s_s,
            Qn2Options opts = {})
      : geom_(chain.geom),
        striping_(striping),
        s_s_(s_s),
        opts_(opts),
        nodes_(chain.reachable) {
    const int n = static_cast<int>(nodes_.size());
    pi_.resize(n);
    route_.resize(n);
    std::vector<int> index(geom_.buffer_slots + 1, -1);
    for (int a = 0; a < n; ++a) index[nodes_[a]] = a;
    for (int a = 0; a < n; ++a) {
      pi_[a] = chain.pi(nodes_[a]);
      for (int b = 0; b < n; ++b) {
        const double p = chain.transition(nodes_[a], nodes_[b]);
        if (p > 0.0) route_[a].push_back({b, p});
      }
    }
    // Within-level circulation: only nodes with zero empty slots keep the
    // remaining-slots class unchanged.
    Eigen::MatrixXd coupling = Eigen::MatrixXd::Identity(n, n);
    for (int a = 0; a < n; ++a) {
      if (striping_.empty_total(nodes_[a]) == 0)
        for (auto [b, p] : route_[a]) coupling(b, a) -= p;
    }
    level_lu_.compute(coupling);
  }

  struct StartSolution {
    double gamma = 0.0;
    std::vector<double> beta_row;    // [i'-1]
    std::vector<double> entry_full;  // over 0..N
  };

  // Linear response of the flow network to a unit class-(i, s_s) injection
  // at each single node: gamma contribution, end-symbol mass and completion
  // node per unit of entry mass.
  struct Responses {
    Eigen::VectorXd gamma;  // n
    Eigen::MatrixXd beta;   // k x n
    Eigen::MatrixXd exits;  // n x n
  };

  Responses compute_responses(int i) const {
    const int n = static_cast<int>(nodes_.size());
    Responses r;
    r.gamma.resize(n);
    r.beta.resize(geom_.k_sym, n);
    r.exits.resize(n, n);
    for (int a = 0; a < n; ++a) {
      FlowResult fr = propagate(i, a);
      r.gamma(a) = fr.gamma;
      r.beta.col(a) = fr.beta;
      r.exits.col(a) = fr.exit_node;
    }
    return r;
  }

  StartSolution solve_for_start(int i) const {
    const Responses resp = compute_responses(i);
    Eigen::VectorXd r;
    switch (opts_.entry_mode) {
      case Qn2Options::EntryMode::SelfConsistent:
        r = fixed_point(resp.exits);
        break;
      case Qn2Options::EntryMode::Stationary:
        r = Eigen::Map<const Eigen::VectorXd>(pi_.data(), pi_.size());
        break;
      case Qn2Options::EntryMode::Shared:
        r = shared_entry();
        break;
    }
    return combine(resp, r);
  }

  TxTimeTable build_table() const {
    TxTimeTable t;
    t.geom = geom_;
    t.policy = striping_.policy();
    t.s_s = s_s_;
    t.gamma.assign(geom_.k_sym, 0.0);
    t.beta.assign(geom_.k_sym, {});
    t.entry.assign(geom_.k_sym, {});

    if (opts_.entry_mode == Qn2Options::EntryMode::Shared) {
      const std::vector<Responses> all = all_responses();
      const Eigen::VectorXd q = shared_entry_from(all);
      for (int i = 1; i <= geom_.k_sym; ++i) {
        StartSolution s = combine(all[i - 1], q);
        t.gamma[i - 1] = s.gamma;
        t.beta[i - 1] = std::move(s.beta_row);
        t.entry[i - 1] = std::move(s.entry_full);
      }
    } else {
      parallel_over_starts([&](int i) {
        StartSolution s = solve_for_start(i);
        t.gamma[i - 1] = s.gamma;
        t.beta[i - 1] = std::move(s.beta_row);
        t.entry[i - 1] = std::move(s.entry_full);
      });
    }
    t.validate();
    return t;
  }

 private:
  struct FlowResult {
    double gamma = 0.0;
    Eigen::VectorXd beta;       // completion mass by end symbol
    Eigen::VectorXd exit_node;  // completion mass by node
  };

  StartSolution combine(const Responses& resp, const Eigen::VectorXd& r) const {
    const int n = static_cast<int>(nodes_.size());
    StartSolution out;
    out.gamma = resp.gamma.dot(r);
    Eigen::VectorXd beta = resp.beta * r;
    if (std::abs(beta.sum() - 1.0) > 1e-9)
      throw std::runtime_error("qn2: completion mass lost");
    out.beta_row.assign(beta.data(), beta.data() + geom_.k_sym);
    out.entry_full.assign(geom_.buffer_slots + 1, 0.0);
    for (int a = 0; a < n; ++a) out.entry_full[nodes_[a]] = r(a);
    return out;
  }

  // Damped fixed-point iteration r = normalize(E r) seeded with pi.
  // Rarely-entered absorbing states can leave a residual eigenvalue within
  // ~1e-10 of one; a stalled residual below stall_tol is accepted as the
  // converged limit of the seeded iteration.
  Eigen::VectorXd fixed_point(const Eigen::MatrixXd& exits) const {
    Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(pi_.data(), pi_.size());
    double prev_residual = std::numeric_limits<double>::infinity();
    double best_residual = prev_residual;
    int best_iter = 0;
    bool damped = false;
    for (int iter = 0;; ++iter) {
      if (iter >= opts_.max_iters)
        throw std::runtime_error("qn2: entry-distribution fixed point did not converge");
      Eigen::VectorXd next = exits * r;
      const double total = next.sum();
      if (total <= 0.0) throw std::runtime_error("qn2: flow vanished");
      next /= total;
      const double residual = (next - r).lpNorm<Eigen::Infinity>();
      if (residual > 0.99 * prev_residual) damped = true;
      r = damped ? Eigen::VectorXd(0.5 * (r + next)) : next;
      prev_residual = residual;
      if (residual < 0.5 * best_residual) {  // meaningful progress only
        best_residual = residual;
        best_iter = iter;
      }
      if (residual < opts_.tol) break;
      if (iter - best_iter > 50 && residual < opts_.stall_tol) break;
    }
    return r;
  }

  std::vector<Responses> all_responses() const {
    std::vector<Responses> all(geom_.k_sym);
    parallel_over_starts([&](int i) { all[i - 1] = compute_responses(i); });
    return all;
  }

  Eigen::VectorXd shared_entry_from(const std::vector<Responses>& all) const {
    const int n = static_cast<int>(nodes_.size());
    std::vector<double> w = opts_.start_weights;
    if (w.empty()) w.assign(geom_.k_sym, 1.0 / geom_.k_sym);
    if (static_cast<int>(w.size()) != geom_.k_sym)
      throw std::invalid_argument("qn2: start_weights must have one entry per symbol");
    double wsum = 0.0;
    for (double x : w) wsum += x;
    Eigen::MatrixXd mixed = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < geom_.k_sym; ++i)
      if (w[i] > 0.0) mixed += (w[i] / wsum) * all[i].exits;
    return fixed_point(mixed);
  }

  const Eigen::VectorXd& shared_entry() const {
    std::call_once(shared_once_, [&] { shared_entry_ = shared_entry_from(all_responses()); });
    return shared_entry_;
  }

  template <typename Fn>
  void parallel_over_starts(Fn&& fn) const {
    unsigned threads = opts_.parallel ? std::thread::hardware_concurrency() : 1;
    threads = std::max(1u, std::min(threads, static_cast<unsigned>(geom_.k_sym)));
    if (threads <= 1) {
      for (int i = 1; i <= geom_.k_sym; ++i) fn(i);
      return;
    }
    std::atomic<int> next{1};
    auto work = [&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i > geom_.k_sym) return;
        fn(i);
      }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  // Exact propagation of a unit class-(i, s_s) flow injected at node `a0`.
  FlowResult propagate(int start_symbol, int a0) const {
    const int n = static_cast<int>(nodes_.size());
    FlowResult fr;
    fr.beta = Eigen::VectorXd::Zero(geom_.k_sym);
    fr.exit_node = Eigen::VectorXd::Zero(n);

    // Pending class-(0, s) inflows, largest remaining s first.
    std::map<double, Eigen::VectorXd, std::greater<double>> levels;
    auto spill = [&](int a, double rate, double rem) {
      auto it = levels.find(rem);
      if (it == levels.end())
        it = levels.emplace(rem, Eigen::VectorXd::Zero(n)).first;
      for (auto [b, p] : route_[a]) it->second(b) += rate * p;
    };

    {
      const VisitOutcome v = striping_.visit(nodes_[a0], start_symbol, s_s_);
      fr.gamma += v.service_time;
      if (v.completed) {
        fr.beta(v.end_symbol - 1) += 1.0;
        fr.exit_node(a0) += 1.0;
      } else {
        spill(a0, 1.0, v.remaining);
      }
    }

    while (!levels.empty()) {
      const double s = levels.begin()->first;
      const Eigen::VectorXd ext = std::move(levels.begin()->second);
      levels.erase(levels.begin());

      const Eigen::VectorXd rate = level_lu_.solve(ext);
      for (int a = 0; a < n; ++a) {
        const double q = rate(a);
        if (q <= 0.0) continue;
        const int u = nodes_[a];
        if (striping_.empty_total(u) == 0) {
          // Circulates inside this level; already balanced by the solve.
          fr.gamma += q * geom_.t_frame;
          continue;
        }
        const VisitOutcome v = striping_.visit(u, 0, s);
        fr.gamma += q * v.service_time;
        if (v.completed) {
          fr.beta(v.end_symbol - 1) += q;
          fr.exit_node(a) += q;
        } else {
          spill(a, q, v.remaining);
        }
      }
    }
    return fr;
  }

  FrameGeometry geom_;
  const StripingTable& striping_;
  int s_s_;
  Qn2Options opts_;
  std::vector<int> nodes_;
  std::vector<double> pi_;
  std::vector<std::vector<std::pair<int, double>>> route_;
  Eigen::PartialPivLU<Eigen::MatrixXd> level_lu_;
  mutable std::once_flag shared_once_;
  mutable Eigen::VectorXd shared_entry_;
};

inline TxTimeTable build_txtime_table(const PrimaryChain& chain,
                                      const StripingTable& striping, int s_s,
                                      Qn2Options opts = {}) {
  return Qn2Solver(chain, striping, s_s, opts).build_table();
}

}  // namespace cogwlan
