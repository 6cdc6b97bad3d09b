#pragma once

// Downlink slot-grid occupancy per allocation policy, and the service-time /
// carryover outcome of one secondary visit to a frame.
//
// The DL subframe is a grid of `rows` subchannels by `cols_dl` slot columns;
// column c spans symbols (c-1)*nu+1 .. c*nu. A backlog of u slots occupies
// min(u, M) cells: horizontal striping fills subchannel rows top-down,
// vertical striping fills columns left-to-right, and rectangular treats the
// empty capacity as spread uniformly over the DL subframe. A transmission
// that starts at symbol x may use empty slots in the columns strictly after
// the one containing x, left to right, all empty slots of a column at once.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "cogwlan/config.hpp"

namespace cogwlan {

struct SlotProfile {
  int node = 0;             // backlog state u
  std::vector<int> f;       // empty slots per column, f[c-1] for column c
  long e_total = 0;         // max(M - u, 0)
};

struct VisitOutcome {
  double service_time = 0.0;
  bool completed = false;
  int end_symbol = 0;       // symbol containing the completion instant (completed only)
  double remaining = 0.0;   // slots carried into the next frame (carryover only)
};

class StripingTable {
 public:
  StripingTable(const FrameGeometry& geom, Striping policy)
      : geom_(geom), policy_(policy) {
    if (policy_ != Striping::Rectangular) {
      const int cols = geom_.cols_dl;
      cum_.assign(geom_.buffer_slots + 1, std::vector<int>(cols + 1, 0));
      for (int u = 0; u <= geom_.buffer_slots; ++u) {
        const std::vector<int> f = column_profile(u);
        for (int c = 1; c <= cols; ++c) cum_[u][c] = cum_[u][c - 1] + f[c - 1];
      }
    }
  }

  const FrameGeometry& geometry() const { return geom_; }
  Striping policy() const { return policy_; }

  long empty_total(int u) const {
    check_state(u);
    return std::max(geom_.slots_dl - u, 0);
  }

  SlotProfile profile(int u) const {
    check_state(u);
    if (policy_ == Striping::Rectangular)
      throw std::logic_error("profile: rectangular policy has no column profile");
    SlotProfile p;
    p.node = u;
    p.f = column_profile(u);
    p.e_total = empty_total(u);
    return p;
  }

  // Empty slots usable by a transmission positioned at symbol x (0 = frame
  // start). Zero for every state once x reaches the UL subframe.
  double residual_slots(int u, int x) const {
    check_state(u);
    check_symbol(x);
    if (x >= geom_.k_sym_dl) return 0.0;
    if (policy_ == Striping::Rectangular) {
      const double frac = (geom_.t_dl - x * geom_.t_sym) / geom_.t_dl;
      return empty_total(u) * frac;
    }
    const int cx = column_of(x);
    return static_cast<double>(cum_[u][geom_.cols_dl] - cum_[u][cx]);
  }

  // One visit of a transmission with `s` slots left, positioned at symbol x
  // of a frame with backlog u. Either completes inside this DL subframe or
  // occupies the rest of the frame and carries the unserved remainder.
  VisitOutcome visit(int u, int x, double s) const {
    check_state(u);
    check_symbol(x);
    if (s <= 0.0) throw std::invalid_argument("visit: nothing to transmit");

    VisitOutcome out;
    if (policy_ == Striping::Rectangular) {
      const long e = empty_total(u);
      const double res = residual_slots(u, x);
      if (res > s) {
        out.completed = true;
        out.service_time = s / static_cast<double>(e) * geom_.t_dl;
        out.end_symbol = end_symbol(x, out.service_time);
      } else {
        out.completed = false;
        out.service_time = geom_.t_frame - x * geom_.t_sym;
        out.remaining = s - res;
      }
      return out;
    }

    const int cols = geom_.cols_dl;
    const int cx = x >= geom_.k_sym_dl ? cols : column_of(x);
    const double avail = static_cast<double>(cum_[u][cols] - cum_[u][cx]);
    if (avail >= s) {
      int l = cx + 1;
      while (static_cast<double>(cum_[u][l] - cum_[u][cx]) < s) ++l;
      const double before = static_cast<double>(cum_[u][l - 1] - cum_[u][cx]);
      const int fl = cum_[u][l] - cum_[u][l - 1];
      out.completed = true;
      out.service_time =
          geom_.t_sym * geom_.nu * ((l - (cx + 1)) + (s - before) / fl);
      out.end_symbol = end_symbol(x, out.service_time);
    } else {
      out.completed = false;
      out.service_time = geom_.t_frame - x * geom_.t_sym;
      out.remaining = s - avail;
    }
    return out;
  }

 private:
  void check_state(int u) const {
    if (u < 0 || u > geom_.buffer_slots)
      throw std::invalid_argument("striping: state out of range");
  }
  void check_symbol(int x) const {
    if (x < 0 || x > geom_.k_sym)
      throw std::invalid_argument("striping: symbol out of range");
  }

  int column_of(int x) const { return (x + geom_.nu - 1) / geom_.nu; }

  // Symbol containing the completion instant x*t_sym + service, clamped to
  // the DL subframe.
  int end_symbol(int x, double service) const {
    const double q = x + service / geom_.t_sym;
    const double r = std::nearbyint(q);
    int sym;
    if (std::abs(q - r) <= 1e-9 * (1.0 + std::abs(q)))
      sym = static_cast<int>(r);
    else
      sym = static_cast<int>(std::ceil(q));
    return std::clamp(sym, 1, geom_.k_sym_dl);
  }

  std::vector<int> column_profile(int u) const {
    const int cols = geom_.cols_dl;
    const int rows = geom_.rows;
    const int occ = std::min(u, geom_.slots_dl);
    std::vector<int> f(cols, 0);
    if (policy_ == Striping::Horizontal) {
      const int full_rows = occ / cols;
      const int rem = occ % cols;
      for (int c = 1; c <= cols; ++c)
        f[c - 1] = rows - full_rows - (c <= rem ? 1 : 0);
    } else {  // Vertical
      const int full_cols = occ / rows;
      const int rem = occ % rows;
      for (int c = 1; c <= cols; ++c) {
        if (c <= full_cols)
          f[c - 1] = 0;
        else if (c == full_cols + 1 && rem > 0)
          f[c - 1] = rows - rem;
        else
          f[c - 1] = rows;
      }
    }
    return f;
  }

  FrameGeometry geom_;
  Striping policy_;
  std::vector<std::vector<int>> cum_;  // cum_[u][c] = empties in columns 1..c
};

}  // namespace cogwlan
