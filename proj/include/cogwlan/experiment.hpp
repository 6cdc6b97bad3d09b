#pragma once

// Parameter-sweep runner behind the command line tool. Expands the cartesian
// grid over lambda_p, n_s, ratio_r and striping, dispatches points to a
// worker pool, and writes one CSV row per point in grid order regardless of
// completion order. Transmission-time tables are memoized across points that
// share everything but the secondary node count and MAC timing.
//
// Sweeping ratio_r keeps the frame template fixed: the total symbol count
// per frame comes from the base config and each swept ratio re-derives the
// DL subframe length k_sym_dl = k_sym * R / (R + 1), rejecting ratios that
// do not give whole symbols.

#include <atomic>
#include <cmath>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cogwlan/analytic.hpp"
#include "cogwlan/config.hpp"
#include "cogwlan/config_io.hpp"
#include "cogwlan/rng.hpp"
#include "cogwlan/simulator.hpp"

namespace cogwlan {

inline const char* kCsvHeader =
    "lambda_p,n_s,ratio_r,policy,lambda_sat_pkts_per_s,big_lambda_sat,"
    "sim_throughput,mismatch_rel";

struct GridPoint {
  ScenarioConfig cfg;
  std::string error;  // set when the point's config is invalid
};

struct RowResult {
  ScenarioConfig cfg;
  std::optional<double> lambda_sat;
  std::optional<double> big_lambda_sat;
  std::optional<double> sim_throughput;
  std::optional<double> mismatch_rel;
  std::string error;
};

struct ExperimentOutcome {
  long rows = 0;
  long point_errors = 0;
  long gate_failures = 0;  // validate mode only; errors count as failures

  bool ok(RunMode mode) const {
    return point_errors == 0 && (mode != RunMode::Validate || gate_failures == 0);
  }
};

inline std::vector<GridPoint> expand_grid(const ExperimentPlan& plan) {
  const ExperimentSettings& s = plan.settings;
  auto lambdas = s.sweep_lambda_p.empty() ? std::vector<double>{plan.base.lambda_p}
                                          : s.sweep_lambda_p;
  auto node_counts =
      s.sweep_n_s.empty() ? std::vector<int>{plan.base.n_s} : s.sweep_n_s;
  auto ratios = s.sweep_ratio_r.empty() ? std::vector<Ratio>{plan.base.ratio_r}
                                        : s.sweep_ratio_r;
  auto policies = s.sweep_striping.empty()
                      ? std::vector<Striping>{plan.base.striping}
                      : s.sweep_striping;

  const long size = static_cast<long>(lambdas.size()) * node_counts.size() *
                    ratios.size() * policies.size();
  if (size > s.grid_cap)
    throw std::invalid_argument("sweep grid has " + std::to_string(size) +
                                " points, above the cap of " +
                                std::to_string(s.grid_cap));

  // Frame template of the base config; swept ratios move the DL:UL boundary
  // inside it.
  const FrameGeometry base_geom = derive_geometry(plan.base);

  std::vector<GridPoint> grid;
  grid.reserve(size);
  for (double lp : lambdas)
    for (int ns : node_counts)
      for (const Ratio& r : ratios)
        for (Striping pol : policies) {
          GridPoint pt;
          pt.cfg = plan.base;
          pt.cfg.lambda_p = lp;
          pt.cfg.n_s = ns;
          pt.cfg.ratio_r = r;
          pt.cfg.striping = pol;
          if (!(r == plan.base.ratio_r)) {
            const long long scaled = static_cast<long long>(base_geom.k_sym) * r.num;
            if (scaled % (r.num + r.den) != 0) {
              pt.error = "ratio " + r.str() + " does not fit the " +
                         std::to_string(base_geom.k_sym) + "-symbol frame";
            } else {
              pt.cfg.k_sym_dl = static_cast<int>(scaled / (r.num + r.den));
              if (pt.cfg.k_sym_dl % pt.cfg.nu != 0)
                pt.error = "ratio " + r.str() + " gives a DL subframe not divisible into slots";
            }
          }
          grid.push_back(std::move(pt));
        }
  return grid;
}

namespace detail {

inline std::string core_key(const ScenarioConfig& c) {
  std::ostringstream k;
  k << c.t_frame << '|' << c.n_subchannels << '|' << c.k_sym_dl << '|'
    << c.ratio_r.str() << '|' << c.nu << '|' << c.s_p << '|' << c.c_b << '|'
    << c.lambda_p << '|' << to_string(c.striping) << '|' << c.s_s;
  return k.str();
}

inline std::string format_opt(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os << std::setprecision(12) << *v;
  return os.str();
}

}  // namespace detail

class ExperimentRunner {
 public:
  explicit ExperimentRunner(const ExperimentPlan& plan) : plan_(plan) {}

  ExperimentOutcome run(std::ostream& csv, std::ostream& log) {
    const std::vector<GridPoint> grid = expand_grid(plan_);
    std::vector<RowResult> rows(grid.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (;;) {
        const std::size_t idx = next.fetch_add(1);
        if (idx >= grid.size()) return;
        rows[idx] = run_point(grid[idx], idx);
      }
    };

    const int jobs = std::max(1, plan_.settings.jobs);
    if (jobs == 1 || grid.size() <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int j = 0; j < std::min<std::size_t>(jobs, grid.size()); ++j)
        pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }

    ExperimentOutcome outcome;
    csv << kCsvHeader << '\n';
    for (const RowResult& r : rows) {
      ++outcome.rows;
      csv << r.cfg.lambda_p << ',' << r.cfg.n_s << ',' << r.cfg.ratio_r.str()
          << ',' << to_string(r.cfg.striping) << ','
          << detail::format_opt(r.lambda_sat) << ','
          << detail::format_opt(r.big_lambda_sat) << ','
          << detail::format_opt(r.sim_throughput) << ','
          << detail::format_opt(r.mismatch_rel) << '\n';
      if (!r.error.empty()) {
        ++outcome.point_errors;
        log << "point (lambda_p=" << r.cfg.lambda_p << ", n_s=" << r.cfg.n_s
            << ", r=" << r.cfg.ratio_r.str() << ", " << to_string(r.cfg.striping)
            << ") failed: " << r.error << '\n';
        if (plan_.settings.mode == RunMode::Validate) ++outcome.gate_failures;
      } else if (plan_.settings.mode == RunMode::Validate &&
                 r.mismatch_rel.value_or(1.0) > plan_.settings.gate) {
        ++outcome.gate_failures;
      }
    }
    return outcome;
  }

 private:
  std::shared_ptr<const AnalyticCore> core_for(const ScenarioConfig& cfg) {
    const std::string key = detail::core_key(cfg);
    {
      std::lock_guard<std::mutex> lk(mu_);
      auto it = cores_.find(key);
      if (it != cores_.end()) return it->second;
    }
    auto core = std::make_shared<AnalyticCore>(build_analytic_core(cfg));
    std::lock_guard<std::mutex> lk(mu_);
    return cores_.emplace(key, std::move(core)).first->second;
  }

  RowResult run_point(const GridPoint& pt, std::size_t index) {
    RowResult row;
    row.cfg = pt.cfg;
    if (!pt.error.empty()) {
      row.error = pt.error;
      return row;
    }
    try {
      const RunMode mode = plan_.settings.mode;
      if (mode != RunMode::Simulate) {
        auto core = core_for(pt.cfg);
        const AnalyticSolution sol = solve_saturation(pt.cfg, *core);
        row.lambda_sat = sol.qn1.lambda_sat;
        row.big_lambda_sat = sol.qn1.lambda_sat_network;
      }
      if (mode != RunMode::Analytic) {
        SimConfig sc;
        std::uint64_t mix = plan_.settings.seed;
        sc.seed = splitmix64_next(mix) ^ (0x9e3779b97f4a7c15ull * (index + 1));
        sc.horizon_frames = plan_.settings.frames;
        sc.warmup_frames = plan_.settings.warmup_frames;
        row.sim_throughput = simulate(pt.cfg, sc).per_su_throughput;
      }
      if (mode == RunMode::Validate)
        row.mismatch_rel =
            std::abs(*row.lambda_sat - *row.sim_throughput) / *row.lambda_sat;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    return row;
  }

  ExperimentPlan plan_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<const AnalyticCore>> cores_;
};

inline ExperimentOutcome run_experiment(const ExperimentPlan& plan,
                                        std::ostream& csv, std::ostream& log) {
  ExperimentRunner runner(plan);
  return runner.run(csv, log);
}

}  // namespace cogwlan
