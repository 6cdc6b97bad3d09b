#pragma once

// Packet-transmission process of one saturated secondary node, modeled as an
// open multi-class network over backoff, RTS, CTS, data and ACK stages.
//
// A customer is one packet. At backoff stage n (window W = w0 * 2^(n-1),
// capped at stage m) it holds class (i, j, k): current frame symbol i, type
// of the virtual slot being served (idle / collision / success of another
// node), and remaining countdown k. Every virtual slot advances the symbol
// clock by the slot duration in whole symbols and decrements k; k = 0 routes
// to the RTS stage with no service. A successful handshake leads through CTS
// to the data stage, whose per-class service time and end-symbol
// distribution come from the transmission-time table; a collided RTS
// re-enters the next backoff stage with the window doubled. Saturation
// closes the loop: the class distribution of fresh packets equals the
// distribution of completed ones.
//
// The traffic equations are solved by normalized fixed-point iteration at
// unit packet departure rate. Service times and routing are rate
// independent, so the network occupancy is exactly linear in the injection
// rate and the saturation throughput is the reciprocal of the occupancy at
// unit rate.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "cogwlan/config.hpp"
#include "cogwlan/mac_model.hpp"
#include "cogwlan/txtime.hpp"

namespace cogwlan {

// Projection of a control-channel duration onto the whole-symbol class
// clock. Ceil blocks every partially occupied symbol, Nearest rounds, and
// Dithered splits the advance across the two neighboring symbol counts with
// the fractional weight, which keeps the class clock unbiased with respect
// to true time.
enum class SymbolRounding { Ceil, Nearest, Dithered };

// Advance of `floor_symbols` with probability `w_floor`, else one more.
struct SymbolShift {
  int floor_symbols = 0;
  double w_floor = 1.0;
};

inline SymbolShift duration_shift(double t, const FrameGeometry& g,
                                  SymbolRounding mode) {
  const double q = t / g.t_sym;
  if (mode == SymbolRounding::Ceil) return {to_symbols(t, g), 1.0};
  if (mode == SymbolRounding::Nearest)
    return {static_cast<int>(std::llround(q)), 1.0};
  double fl = std::floor(q);
  double frac = q - fl;
  if (frac <= 1e-9) return {static_cast<int>(fl), 1.0};
  if (frac >= 1.0 - 1e-9) return {static_cast<int>(fl) + 1, 1.0};
  return {static_cast<int>(fl), 1.0 - frac};
}

struct Qn1Options {
  SymbolRounding rounding = SymbolRounding::Dithered;
  double tol = 1e-10;
  int max_sweeps = 100000;
};

struct Qn1Solution {
  double rho_total = 0.0;        // network occupancy at unit departure rate
  double lambda_sat = 0.0;       // packets/second per node
  double lambda_sat_network = 0.0;
  std::vector<double> start_pmf; // data-transmission start symbol, [i-1]
  int sweeps = 0;

  // Occupancy and flow breakdown, for diagnostics and tests.
  std::vector<double> rho_vs, rho_rts, rho_cts;  // per stage
  double rho_tr = 0.0, rho_ack = 0.0;
  std::vector<double> rts_rate;       // per stage, total RTS attempts
  std::vector<double> vs_entry_rate;  // per stage, total inflow to backoff
  std::vector<double> out;            // exit-symbol distribution, [i-1]
  std::vector<double> tr_in;          // data-stage arrivals by symbol, [i-1]
};

// Distribution over whole-symbol advances.
using SymbolOffsets = std::vector<std::pair<int, double>>;

inline SymbolOffsets offsets_of(const SymbolShift& s) {
  SymbolOffsets d{{s.floor_symbols, s.w_floor}};
  if (s.w_floor < 1.0) d.push_back({s.floor_symbols + 1, 1.0 - s.w_floor});
  return d;
}

inline SymbolOffsets compose_offsets(const SymbolOffsets& a, const SymbolShift& b) {
  SymbolOffsets out;
  for (const auto& [da, wa] : a)
    for (const auto& [db, wb] : offsets_of(b)) {
      bool merged = false;
      for (auto& [d, w] : out)
        if (d == da + db) {
          w += wa * wb;
          merged = true;
          break;
        }
      if (!merged) out.push_back({da + db, wa * wb});
    }
  return out;
}

class Qn1Solver {
 public:
  Qn1Solver(const ScenarioConfig& cfg, const MacSlotModel& mac,
            const TxTimeTable& tx, Qn1Options opts = {})
      : cfg_(cfg), geom_(tx.geom), mac_(mac), tx_(tx), opts_(opts) {
    k_ = geom_.k_sym;
    sh_idle_ = duration_shift(cfg.t_idle, geom_, opts.rounding);
    sh_coll_ = duration_shift(cfg.t_coll, geom_, opts.rounding);
    sh_rts_ = duration_shift(cfg.t_rts, geom_, opts.rounding);
    sh_cts_ = duration_shift(cfg.t_cts, geom_, opts.rounding);
    sh_ack_ = duration_shift(cfg.t_ack, geom_, opts.rounding);

    // Success-slot kernel: the winner's data transmission starts one
    // RTS+CTS after the slot begins, ends per beta, and the observer's next
    // slot starts one ACK later. tau_succ_ is the matching mean duration.
    const SymbolOffsets data_start = compose_offsets(offsets_of(sh_rts_), sh_cts_);
    const SymbolOffsets ack_off = offsets_of(sh_ack_);
    s_kernel_.assign(k_, std::vector<double>(k_, 0.0));
    tau_succ_.assign(k_, 0.0);
    for (int i = 1; i <= k_; ++i) {
      tau_succ_[i - 1] = cfg.t_rts + cfg.t_cts + cfg.t_ack;
      for (const auto& [dd, wd] : data_start) {
        const int ds = advance_symbol(i, dd, geom_);
        tau_succ_[i - 1] += wd * tx.gamma[ds - 1];
        for (int end = 1; end <= geom_.k_sym_dl; ++end) {
          const double b = tx.beta[ds - 1][end - 1];
          if (b > 0.0)
            for (const auto& [da, wa] : ack_off)
              s_kernel_[i - 1][advance_symbol(end, da, geom_) - 1] += wd * wa * b;
        }
      }
    }
  }

  Qn1Solution solve() const {
    std::vector<double> out(k_, 1.0 / k_);
    std::vector<double> colm(k_, 0.0);

    SweepState st;
    for (int sweep = 1;; ++sweep) {
      if (sweep > opts_.max_sweeps)
        throw std::runtime_error("qn1: traffic equations did not converge");
      st = run_sweep(out, colm);
      const double total = std::accumulate(st.out.begin(), st.out.end(), 0.0);
      if (total <= 0.0) throw std::runtime_error("qn1: flow vanished");
      double residual = 0.0;
      for (int i = 0; i < k_; ++i) {
        st.out[i] /= total;
        st.colm_next[i] /= total;
        residual = std::max(residual, std::abs(st.out[i] - out[i]));
        residual = std::max(residual, std::abs(st.colm_next[i] - colm[i]));
      }
      out = st.out;
      colm = st.colm_next;
      if (sweep > 1 && residual < opts_.tol) {
        st.sweeps = sweep;
        break;
      }
    }

    Qn1Solution sol = st;
    if (sol.rho_total <= 0.0) throw std::runtime_error("qn1: degenerate occupancy");
    sol.lambda_sat = 1.0 / sol.rho_total;
    sol.lambda_sat_network = cfg_.n_s * sol.lambda_sat;
    const double trt = std::accumulate(sol.tr_in.begin(), sol.tr_in.end(), 0.0);
    sol.start_pmf.assign(k_, 0.0);
    for (int i = 0; i < k_; ++i) sol.start_pmf[i] = sol.tr_in[i] / trt;
    return sol;
  }

 private:
  struct SweepState : Qn1Solution {
    std::vector<double> colm_next;  // last-stage collision feedback
  };

  // One pass of the traffic equations given the previous exit-symbol
  // distribution and the previous last-stage collision feedback.
  SweepState run_sweep(const std::vector<double>& out_prev,
                       const std::vector<double>& colm_prev) const {
    const int m = cfg_.m_stages;
    SweepState st;
    st.rho_vs.assign(m, 0.0);
    st.rho_rts.assign(m, 0.0);
    st.rho_cts.assign(m, 0.0);
    st.rts_rate.assign(m, 0.0);
    st.vs_entry_rate.assign(m, 0.0);
    st.tr_in.assign(k_, 0.0);
    st.out.assign(k_, 0.0);
    st.colm_next.assign(k_, 0.0);

    const double pj[3] = {mac_.p_idle, mac_.p_coll, mac_.p_succ};
    std::vector<double> col_in(k_, 0.0);  // collision flow entering a stage
    std::vector<double> moved(k_, 0.0);

    for (int stage = 1; stage <= m; ++stage) {
      const int w = cfg_.w0 << (stage - 1);
      // Flow at class (i, j, k): vs[(j * w + k) * k_ + (i - 1)].
      std::vector<double> vs(static_cast<std::size_t>(3) * w * k_, 0.0);

      auto add_entry = [&](const std::vector<double>& by_symbol) {
        double mass = 0.0;
        for (int j = 0; j < 3; ++j) {
          if (pj[j] == 0.0) continue;
          for (int kk = 0; kk < w; ++kk) {
            const double scale = pj[j] / w;
            double* dst = &vs[(static_cast<std::size_t>(j) * w + kk) * k_];
            for (int i = 0; i < k_; ++i) dst[i] += scale * by_symbol[i];
          }
        }
        for (double v : by_symbol) mass += v;
        st.vs_entry_rate[stage - 1] += mass;
      };
      if (stage == 1) add_entry(out_prev);
      if (stage >= 2) add_entry(col_in);
      if (stage == m) add_entry(colm_prev);

      // Serve virtual slots level by level, pushing flow down the countdown.
      for (int kk = w - 1; kk >= 1; --kk) {
        std::fill(moved.begin(), moved.end(), 0.0);
        const double* a_i = &vs[(static_cast<std::size_t>(0) * w + kk) * k_];
        const double* a_c = &vs[(static_cast<std::size_t>(1) * w + kk) * k_];
        const double* a_s = &vs[(static_cast<std::size_t>(2) * w + kk) * k_];
        for (int i = 0; i < k_; ++i) {
          if (a_i[i] != 0.0) {
            st.rho_vs[stage - 1] += a_i[i] * cfg_.t_idle;
            for (const auto& [d, w] : offsets_of(sh_idle_))
              moved[shift(i, d)] += w * a_i[i];
          }
          if (a_c[i] != 0.0) {
            st.rho_vs[stage - 1] += a_c[i] * cfg_.t_coll;
            for (const auto& [d, w] : offsets_of(sh_coll_))
              moved[shift(i, d)] += w * a_c[i];
          }
          if (a_s[i] != 0.0) {
            st.rho_vs[stage - 1] += a_s[i] * tau_succ_[i];
            const auto& row = s_kernel_[i];
            for (int i2 = 0; i2 < k_; ++i2)
              if (row[i2] != 0.0) moved[i2] += a_s[i] * row[i2];
          }
        }
        for (int j = 0; j < 3; ++j) {
          if (pj[j] == 0.0) continue;
          double* dst = &vs[(static_cast<std::size_t>(j) * w + (kk - 1)) * k_];
          for (int i = 0; i < k_; ++i) dst[i] += pj[j] * moved[i];
        }
      }

      // k = 0: route to RTS with no service, symbol unchanged.
      std::vector<double> rts_in(k_, 0.0);
      for (int j = 0; j < 3; ++j) {
        const double* src = &vs[static_cast<std::size_t>(j) * w * k_];
        for (int i = 0; i < k_; ++i) rts_in[i] += src[i];
      }

      std::fill(col_in.begin(), col_in.end(), 0.0);
      std::vector<double> cts_in(k_, 0.0);
      for (int i = 0; i < k_; ++i) {
        const double a = rts_in[i];
        if (a == 0.0) continue;
        st.rts_rate[stage - 1] += a;
        st.rho_rts[stage - 1] += a * cfg_.t_rts;
        for (const auto& [d, w] : offsets_of(sh_rts_)) {
          const int i2 = shift(i, d);
          cts_in[i2] += w * a * (1.0 - mac_.p_col);
          col_in[i2] += w * a * mac_.p_col;
        }
      }
      if (stage == m) st.colm_next = col_in;

      for (int i = 0; i < k_; ++i) {
        const double a = cts_in[i];
        if (a == 0.0) continue;
        st.rho_cts[stage - 1] += a * cfg_.t_cts;
        for (const auto& [d, w] : offsets_of(sh_cts_))
          st.tr_in[shift(i, d)] += w * a;
      }
    }

    std::vector<double> ack_in(k_, 0.0);
    for (int i = 0; i < k_; ++i) {
      const double a = st.tr_in[i];
      if (a == 0.0) continue;
      st.rho_tr += a * tx_.gamma[i];
      for (int end = 1; end <= geom_.k_sym_dl; ++end) {
        const double b = tx_.beta[i][end - 1];
        if (b > 0.0) ack_in[end - 1] += a * b;
      }
    }
    for (int i = 0; i < k_; ++i) {
      const double a = ack_in[i];
      if (a == 0.0) continue;
      st.rho_ack += a * cfg_.t_ack;
      for (const auto& [d, w] : offsets_of(sh_ack_))
        st.out[shift(i, d)] += w * a;
    }

    st.rho_total = st.rho_tr + st.rho_ack;
    for (int n = 0; n < m; ++n)
      st.rho_total += st.rho_vs[n] + st.rho_rts[n] + st.rho_cts[n];
    return st;
  }

  int shift(int i0, int delta) const {  // 0-based symbol shift, wrapping
    return (i0 + delta) % k_;
  }

  ScenarioConfig cfg_;
  FrameGeometry geom_;
  MacSlotModel mac_;
  const TxTimeTable& tx_;
  Qn1Options opts_;
  int k_ = 0;
  SymbolShift sh_idle_, sh_coll_, sh_rts_, sh_cts_, sh_ack_;
  std::vector<std::vector<double>> s_kernel_;
  std::vector<double> tau_succ_;
};

}  // namespace cogwlan
