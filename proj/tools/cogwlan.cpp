// Command-line front end: analytic and simulation runs over parameter
// sweeps, analytic-vs-simulation validation, and transmission-time profile
// dumps, all emitted as CSV.

#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "cogwlan/analytic.hpp"
#include "cogwlan/config_io.hpp"
#include "cogwlan/experiment.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  long frames = 0;
  double gate = 0.0;
  int jobs = 0;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "configuration file")
      ->envname("COGWLAN_CONFIG");
  cmd->add_option("--out", o.out_path, "CSV output path (default: stdout)")
      ->envname("COGWLAN_OUT");
  cmd->add_option("--seed", o.seed, "master seed for simulation runs")
      ->envname("COGWLAN_SEED");
  cmd->add_option("--frames", o.frames, "simulation horizon in frames")
      ->envname("COGWLAN_FRAMES");
  cmd->add_option("--gate", o.gate, "validate: maximum relative mismatch")
      ->envname("COGWLAN_GATE");
  cmd->add_option("--jobs", o.jobs, "worker threads for grid points")
      ->envname("COGWLAN_JOBS");
}

cogwlan::ExperimentPlan make_plan(const CLI::App* cmd, const CommonOpts& o) {
  cogwlan::ExperimentPlan plan;
  if (cmd->count("--config")) plan = cogwlan::load_config(o.config_path);
  if (cmd->count("--out")) plan.settings.out = o.out_path;
  if (cmd->count("--seed")) plan.settings.seed = o.seed;
  if (cmd->count("--frames")) plan.settings.frames = o.frames;
  if (cmd->count("--gate")) plan.settings.gate = o.gate;
  if (cmd->count("--jobs")) plan.settings.jobs = o.jobs;
  return plan;
}

int run_grid(const cogwlan::ExperimentPlan& plan) {
  std::ofstream file;
  std::ostream* csv = &std::cout;
  if (!plan.settings.out.empty()) {
    file.open(plan.settings.out);
    if (!file) {
      std::cerr << "cannot open output file: " << plan.settings.out << '\n';
      return 2;
    }
    csv = &file;
  }
  const cogwlan::ExperimentOutcome outcome =
      cogwlan::run_experiment(plan, *csv, std::cerr);
  return outcome.ok(plan.settings.mode) ? 0 : 1;
}

int run_gamma_profile(const cogwlan::ExperimentPlan& plan) {
  const cogwlan::AnalyticCore core = cogwlan::build_analytic_core(plan.base);
  std::ofstream file;
  std::ostream* csv = &std::cout;
  if (!plan.settings.out.empty()) {
    file.open(plan.settings.out);
    if (!file) {
      std::cerr << "cannot open output file: " << plan.settings.out << '\n';
      return 2;
    }
    csv = &file;
  }
  *csv << "start_symbol,start_time_s,policy,gamma_s\n";
  for (int i = 1; i <= core.geom.k_sym; ++i)
    *csv << i << ',' << i * core.geom.t_sym << ','
         << cogwlan::to_string(plan.base.striping) << ',' << core.tx.gamma[i - 1]
         << '\n';
  return 0;
}

void dump_pi(const cogwlan::PrimaryChain& chain, const std::string& path) {
  std::ofstream out(path);
  out << "state,probability\n";
  for (int u = 0; u < chain.pi.size(); ++u) out << u << ',' << chain.pi(u) << '\n';
}

void dump_start_pmf(const cogwlan::Qn1Solution& qn1, const std::string& path) {
  std::ofstream out(path);
  out << "symbol,probability\n";
  for (std::size_t i = 0; i < qn1.start_pmf.size(); ++i)
    out << i + 1 << ',' << qn1.start_pmf[i] << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Saturation-throughput analysis of an opportunistic WLAN "
               "overlaid on the downlink slots of a TDD OFDMA cell"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string dump_pi_path, dump_pmf_path;

  CLI::App* analytic = app.add_subcommand("analytic", "analytic sweep");
  add_common(analytic, opts);
  analytic->add_option("--dump-pi", dump_pi_path,
                       "write the buffer-state distribution of the base config");
  analytic->add_option("--dump-start-pmf", dump_pmf_path,
                       "write the transmission start-symbol pmf of the base config");

  CLI::App* simulate = app.add_subcommand("simulate", "simulation sweep");
  add_common(simulate, opts);

  CLI::App* sweep = app.add_subcommand("sweep", "sweep in the mode set by the config");
  add_common(sweep, opts);

  CLI::App* validate =
      app.add_subcommand("validate", "analytic vs simulation mismatch gate");
  add_common(validate, opts);

  CLI::App* gamma =
      app.add_subcommand("gamma-profile", "mean transmission time per start symbol");
  add_common(gamma, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* cmd = app.get_subcommands().front();
    cogwlan::ExperimentPlan plan = make_plan(cmd, opts);

    if (cmd == analytic) plan.settings.mode = cogwlan::RunMode::Analytic;
    if (cmd == simulate) plan.settings.mode = cogwlan::RunMode::Simulate;
    if (cmd == validate) plan.settings.mode = cogwlan::RunMode::Validate;

    if (cmd == gamma) return run_gamma_profile(plan);

    if (cmd == analytic && (!dump_pi_path.empty() || !dump_pmf_path.empty())) {
      const cogwlan::AnalyticCore core = cogwlan::build_analytic_core(plan.base);
      if (!dump_pi_path.empty()) dump_pi(core.chain, dump_pi_path);
      if (!dump_pmf_path.empty()) {
        const cogwlan::AnalyticSolution sol = cogwlan::solve_saturation(plan.base, core);
        dump_start_pmf(sol.qn1, dump_pmf_path);
      }
    }
    return run_grid(plan);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
