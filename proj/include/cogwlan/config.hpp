#pragma once

// Scenario parameters and derived frame geometry shared by every other
// component. A scenario couples one OFDMA TDD primary cell (frame length,
// slot grid, buffer, packet arrival rate, allocation policy) with a set of
// saturated contention-based secondary nodes on a separate control channel.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace cogwlan {

enum class Striping { Horizontal, Vertical, Rectangular };

inline const char* to_string(Striping s) {
  switch (s) {
    case Striping::Horizontal: return "horizontal";
    case Striping::Vertical: return "vertical";
    case Striping::Rectangular: return "rectangular";
  }
  return "?";
}

inline Striping striping_from_string(const std::string& s) {
  if (s == "horizontal") return Striping::Horizontal;
  if (s == "vertical") return Striping::Vertical;
  if (s == "rectangular") return Striping::Rectangular;
  throw std::invalid_argument("unknown striping policy: " + s);
}

// Downlink-to-uplink subframe ratio as an exact rational.
struct Ratio {
  long num = 13;
  long den = 12;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }
  friend bool operator==(const Ratio& a, const Ratio& b) {
    return a.num * b.den == b.num * a.den;
  }
};

struct ScenarioConfig {
  // [primary]
  double t_frame = 5e-3;      // frame duration, seconds
  int n_subchannels = 30;     // rows of the downlink slot grid
  int k_sym_dl = 26;          // time symbols in the DL subframe
  Ratio ratio_r{13, 12};      // DL:UL duration ratio
  int nu = 2;                 // time symbols per slot
  int s_p = 10;               // slots per primary packet
  int c_b = 55;               // primary buffer capacity, packets
  double lambda_p = 25.0;     // primary packet arrivals per frame (Poisson mean)
  Striping striping = Striping::Horizontal;

  // [secondary]
  int s_s = 60;               // slots per secondary packet
  int n_s = 10;               // number of secondary nodes
  int w0 = 4;                 // initial contention window
  int m_stages = 4;           // maximum backoff stages

  // [mac] control-channel timing, seconds
  double t_rts = 50e-6;
  double t_cts = 50e-6;
  double t_ack = 50e-6;
  double t_idle = 20e-6;
  double t_coll = 100e-6;     // collided handshake incl. response timeout
};

struct FrameGeometry {
  int k_sym;        // symbols per frame
  int k_sym_dl;     // symbols in the DL subframe
  int nu;           // symbols per slot
  int rows;         // subchannels
  int cols_dl;      // slot columns in the DL subframe = k_sym_dl / nu
  int slots_dl;     // M, total slots in the DL subframe
  int buffer_slots; // N = c_b * s_p, slots to drain a full buffer
  double t_frame;
  double t_sym;     // symbol duration
  double t_dl;      // DL subframe duration
};

// Validates the scenario and derives the frame geometry. Throws
// std::invalid_argument on a config that violates an invariant, in
// particular when k_sym_dl * (R+1) / R is not an integer symbol count.
inline FrameGeometry derive_geometry(const ScenarioConfig& cfg) {
  auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
  if (cfg.t_frame <= 0) fail("t_frame must be positive");
  if (cfg.n_subchannels < 1) fail("n_subchannels must be >= 1");
  if (cfg.k_sym_dl < 1) fail("k_sym_dl must be >= 1");
  if (cfg.nu < 1) fail("nu must be >= 1");
  if (cfg.k_sym_dl % cfg.nu != 0) fail("k_sym_dl must be divisible by nu");
  if (cfg.ratio_r.num <= 0 || cfg.ratio_r.den <= 0) fail("ratio_r must be positive");
  if (cfg.s_p < 1) fail("s_p must be >= 1");
  if (cfg.s_s < 1) fail("s_s must be >= 1");
  if (cfg.c_b < 1) fail("c_b must be >= 1");
  if (cfg.lambda_p < 0) fail("lambda_p must be >= 0");
  if (cfg.n_s < 1) fail("n_s must be >= 1");
  if (cfg.w0 < 2) fail("w0 must be >= 2");
  if (cfg.m_stages < 1) fail("m_stages must be >= 1");
  if (cfg.t_rts <= 0 || cfg.t_cts <= 0 || cfg.t_ack <= 0 || cfg.t_idle <= 0 ||
      cfg.t_coll <= 0)
    fail("control-channel durations must be positive");

  // K_sym = k_sym_dl * (R + 1) / R, exact in integers.
  const long long scaled =
      static_cast<long long>(cfg.k_sym_dl) * (cfg.ratio_r.num + cfg.ratio_r.den);
  if (scaled % cfg.ratio_r.num != 0)
    fail("k_sym_dl and ratio_r give a non-integer symbol count per frame");

  FrameGeometry g;
  g.k_sym = static_cast<int>(scaled / cfg.ratio_r.num);
  g.k_sym_dl = cfg.k_sym_dl;
  g.nu = cfg.nu;
  g.rows = cfg.n_subchannels;
  g.cols_dl = cfg.k_sym_dl / cfg.nu;
  g.slots_dl = g.rows * g.cols_dl;
  g.buffer_slots = cfg.c_b * cfg.s_p;
  g.t_frame = cfg.t_frame;
  g.t_sym = cfg.t_frame / g.k_sym;
  g.t_dl = g.k_sym_dl * g.t_sym;
  return g;
}

// Duration in whole symbols, rounded up: a signal that partially occupies a
// symbol blocks that symbol. Exact multiples of t_sym are recognized through
// a small relative tolerance so that to_symbols(k * t_sym) == k.
inline int to_symbols(double t, const FrameGeometry& g) {
  if (t < 0) throw std::invalid_argument("to_symbols: negative duration");
  const double q = t / g.t_sym;
  const double r = std::nearbyint(q);
  if (std::abs(q - r) <= 1e-9 * (1.0 + std::abs(q))) return static_cast<int>(r);
  return static_cast<int>(std::ceil(q));
}

// Symbol index advanced by `delta` symbols, wrapping on the frame template
// 1..k_sym.
inline int advance_symbol(int i, long delta, const FrameGeometry& g) {
  if (i < 1 || i > g.k_sym) throw std::invalid_argument("advance_symbol: index out of range");
  if (delta < 0) throw std::invalid_argument("advance_symbol: negative delta");
  return static_cast<int>((i - 1 + delta) % g.k_sym) + 1;
}

}  // namespace cogwlan
