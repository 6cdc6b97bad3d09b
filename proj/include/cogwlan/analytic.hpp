#pragma once

// End-to-end analytical pipeline for one scenario: buffer chain, striping
// table, transmission-time table, MAC contention model, saturation solve.

#include <memory>

#include "cogwlan/config.hpp"
#include "cogwlan/mac_model.hpp"
#include "cogwlan/markov_chain.hpp"
#include "cogwlan/qn1.hpp"
#include "cogwlan/striping.hpp"
#include "cogwlan/txtime.hpp"

namespace cogwlan {

// Chain plus transmission-time table; independent of the secondary node
// count and control timing, so sweeps over n_s can share one of these.
struct AnalyticCore {
  FrameGeometry geom;
  PrimaryChain chain;
  std::unique_ptr<StripingTable> striping;
  TxTimeTable tx;
};

inline AnalyticCore build_analytic_core(const ScenarioConfig& cfg,
                                        Qn2Options qn2_opts = {}) {
  AnalyticCore core;
  core.geom = derive_geometry(cfg);
  core.chain = build_primary_chain(cfg);
  core.striping = std::make_unique<StripingTable>(core.geom, cfg.striping);
  core.tx = build_txtime_table(core.chain, *core.striping, cfg.s_s, qn2_opts);
  return core;
}

struct AnalyticSolution {
  MacSlotModel mac;
  Qn1Solution qn1;
};

inline AnalyticSolution solve_saturation(const ScenarioConfig& cfg,
                                         const AnalyticCore& core,
                                         Qn1Options qn1_opts = {}) {
  AnalyticSolution sol;
  sol.mac = make_mac_model(cfg);
  sol.qn1 = Qn1Solver(cfg, sol.mac, core.tx, qn1_opts).solve();
  return sol;
}

inline AnalyticSolution solve_scenario(const ScenarioConfig& cfg,
                                       Qn2Options qn2_opts = {},
                                       Qn1Options qn1_opts = {}) {
  const AnalyticCore core = build_analytic_core(cfg, qn2_opts);
  return solve_saturation(cfg, core, qn1_opts);
}

}  // namespace cogwlan
