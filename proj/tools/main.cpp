// Command-line workbench for the robust data-driven MPC library: data
// collection, constant estimation, tightening-coefficient export, closed-loop
// runs, and the canned benchmark reproduction.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ddmpc/config.hpp"
#include "ddmpc/csv.hpp"
#include "ddmpc/errors.hpp"
#include "ddmpc/pipeline.hpp"
#include "ddmpc/svg.hpp"

namespace {

using namespace ddmpc;

struct CliArgs {
  std::string config_path;
  std::string scenario;
  std::string out = "out";
  std::string provenance;
  std::optional<long long> seed;
};

ExperimentConfig resolve_config(const CliArgs& args) {
  if (!args.config_path.empty() && !args.scenario.empty())
    throw config_error("--config and --scenario are mutually exclusive");
  ExperimentConfig cfg;
  if (!args.config_path.empty())
    cfg = load_config(args.config_path);
  else if (!args.scenario.empty())
    cfg = scenario_config(args.scenario);
  else
    throw config_error("one of --config or --scenario is required");
  if (args.seed) {
    if (*args.seed < 0) throw config_error("--seed: must be nonnegative");
    cfg.sim_seed = static_cast<std::uint64_t>(*args.seed);
  }
  if (!args.provenance.empty()) {
    try {
      cfg.provenance = provenance_from_string(args.provenance);
    } catch (const error& e) {
      throw config_error(std::string("--provenance: ") + e.what());
    }
  }
  return cfg;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io_error("cannot create output directory '" + dir + "'");
}

CollectedData save_collection(const ExperimentConfig& cfg,
                              const std::string& out) {
  CollectedData data = collect_experiment(cfg);
  save_dataset(out + "/data/hankel", data.hankel);
  if (data.constants_data)
    save_dataset(out + "/data/constants", *data.constants_data);
  return data;
}

CollectedData load_collection(const ExperimentConfig& cfg,
                              const std::string& out) {
  CollectedData data{load_dataset(out + "/data/hankel"), std::nullopt};
  if (cfg.mode == PlantMode::state)
    data.constants_data = load_dataset(out + "/data/constants");
  return data;
}

// Writes constants.txt per the configured provenance; in state mode the
// exact-constants file rides along for overlays and cross-checks.
SystemConstants save_estimates(const ExperimentConfig& cfg,
                               const CollectedData& data,
                               const std::string& out) {
  const SystemConstants constants = estimate_constants(cfg, data);
  save_constants(out + "/constants.txt", constants);
  if (cfg.mode == PlantMode::state &&
      cfg.provenance == Provenance::data_driven) {
    const SystemConstants oracle =
        oracle_constants(*cfg.plant, cfg.gain, cfg.L, cfg.N, cfg.w_max);
    save_constants(out + "/constants_oracle.txt", oracle);
  }
  return constants;
}

void save_coefficient_tables(const ExperimentConfig& cfg,
                             const SystemConstants& constants,
                             const std::string& out) {
  if (cfg.mode == PlantMode::state) {
    const PredictionErrorConstants pec =
        prediction_error_constants(constants, cfg.L, cfg.N);
    const TighteningCoefficients tc = sf_coefficients(
        pec, constants, cfg.L, cfg.n(), cfg.x_max, cfg.w_max);
    save_coefficients_csv(out + "/coefficients.csv", tc);
    std::optional<TighteningCoefficients> otc;
    const std::string oracle_path = out + "/constants_oracle.txt";
    if (std::filesystem::exists(oracle_path)) {
      const SystemConstants oracle = load_constants(oracle_path);
      const PredictionErrorConstants opec =
          prediction_error_constants(oracle, cfg.L, cfg.N);
      otc = sf_coefficients(opec, oracle, cfg.L, cfg.n(), cfg.x_max,
                            cfg.w_max);
      save_coefficients_csv(out + "/coefficients_oracle.csv", *otc);
    }
    write_coefficient_svgs(out, tc, otc ? &*otc : nullptr);
    return;
  }
  // Output mode: the per-step offsets and extended-state slopes of the
  // input/output rows are the precomputable part of the tightening.
  if (!constants.eta)
    throw estimation_error("eta constants missing for coefficient export");
  const EtaConstants& eta = *constants.eta;
  std::ofstream os(out + "/coefficients.csv");
  if (!os) throw io_error("cannot open coefficients.csv for writing");
  os << "k,delta_bar,u_xi_slope,y_xi_slope\n";
  SvgSeries delta{"delta_bar", {}, {}};
  SvgSeries us{"u xi-slope", {}, {}};
  SvgSeries ys{"y xi-slope", {}, {}};
  double pow_a = 1.0, delta_bar = 0.0;
  char buf[160];
  for (int k = 0; k < cfg.L; ++k) {
    const double u_slope = constants.k_bar * pow_a;
    const double y_slope = eta.eta_c * pow_a;
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", k, delta_bar,
                  u_slope, y_slope);
    os << buf;
    delta.x.push_back(k);
    delta.y.push_back(delta_bar);
    us.x.push_back(k);
    us.y.push_back(u_slope);
    ys.x.push_back(k);
    ys.y.push_back(y_slope);
    delta_bar = delta_bar * eta.eta_a + cfg.w_max;
    pow_a *= eta.eta_a;
  }
  write_svg_plot(out + "/coefficients_a.svg",
                 "Output tightening components", "step k",
                 "coefficient value", {delta, us, ys});
}

int cmd_collect(const CliArgs& args) {
  const ExperimentConfig cfg = resolve_config(args);
  ensure_dir(args.out);
  const CollectedData data = save_collection(cfg, args.out);
  std::printf("collected %d-sample dataset into %s/data/hankel\n",
              data.hankel.length(), args.out.c_str());
  if (data.constants_data)
    std::printf("collected %d-sample dataset into %s/data/constants\n",
                data.constants_data->length(), args.out.c_str());
  return 0;
}

int cmd_estimate(const CliArgs& args) {
  const ExperimentConfig cfg = resolve_config(args);
  ensure_dir(args.out);
  const CollectedData data = load_collection(cfg, args.out);
  const SystemConstants constants = save_estimates(cfg, data, args.out);
  std::printf("constants (%s) -> %s/constants.txt\n",
              to_string(constants.provenance).c_str(), args.out.c_str());
  if (cfg.mode == PlantMode::state) {
    std::printf("c_pe = %.6f, gamma = %.6f, k_bar = %.6f, dbar[%d] = %.6f\n",
                constants.c_pe, constants.gamma, constants.k_bar, cfg.L,
                constants.dbar[static_cast<std::size_t>(cfg.L)]);
  } else if (constants.eta) {
    std::printf("eta_a = %.6f, eta_b = %.6f, eta_c = %.6f, eta_d = %.6f\n",
                constants.eta->eta_a, constants.eta->eta_b,
                constants.eta->eta_c, constants.eta->eta_d);
  }
  return 0;
}

int cmd_coefficients(const CliArgs& args) {
  const ExperimentConfig cfg = resolve_config(args);
  ensure_dir(args.out);
  const SystemConstants constants = load_constants(args.out +
                                                   "/constants.txt");
  save_coefficient_tables(cfg, constants, args.out);
  std::printf("coefficient tables and plots -> %s\n", args.out.c_str());
  return 0;
}

int cmd_run(const CliArgs& args) {
  const ExperimentConfig cfg = resolve_config(args);
  ensure_dir(args.out);
  const CollectedData data = save_collection(cfg, args.out);
  const SystemConstants constants = save_estimates(cfg, data, args.out);
  save_coefficient_tables(cfg, constants, args.out);
  const auto [trace, monitors] = run_experiment(cfg, data, constants);
  write_trace_artifacts(args.out, "trace", trace, cfg.mode);

  const StabilityReport& stab = monitors.practical_stability;
  std::printf("steps: %zu, solves: %zu%s\n", trace.steps.size(),
              trace.solves.size(), trace.aborted ? " (aborted)" : "");
  if (trace.aborted) std::printf("abort: %s\n", trace.abort_reason.c_str());
  std::printf("recursive feasibility: %s\n",
              monitors.recursive_feasibility ? "pass" : "FAIL");
  std::printf("constraint satisfaction: %s\n",
              monitors.constraint_satisfaction ? "pass" : "FAIL");
  std::printf("settling solve instant: %d, terminal cost level: %.6g\n",
              stab.settling_step, stab.terminal_level);
  if (stab.rate_defined)
    std::printf("pre-settling cost decay rate: %.4f per block\n",
                stab.decay_rate);
  std::printf("trace -> %s/trace.csv\n", args.out.c_str());
  return monitors.recursive_feasibility && monitors.constraint_satisfaction
             ? 0
             : 1;
}

int cmd_reproduce_example(const CliArgs& args) {
  ensure_dir(args.out);
  const std::vector<CriterionResult> results =
      run_acceptance_criteria(args.out);
  bool all_pass = true;
  for (const CriterionResult& r : results) {
    std::printf("criterion %d: %s  %s (%s)\n", r.index,
                r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    all_pass = all_pass && r.pass;
  }
  std::printf("report -> %s/report.txt\n", args.out.c_str());
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robust data-driven MPC workbench"};
  app.require_subcommand(1);
  app.fallthrough();

  CliArgs args;
  app.add_option("--config", args.config_path, "experiment config file");
  app.add_option("--scenario", args.scenario,
                 "built-in scenario (two-mass-spring, difference-operator)");
  app.add_option("--out", args.out, "output directory (default: out)");
  app.add_option("--seed", args.seed, "override the simulation seed");
  app.add_option("--provenance", args.provenance,
                 "constants provenance: data or oracle");

  CLI::App* collect = app.add_subcommand(
      "collect", "run the excitation experiments and save the datasets");
  CLI::App* estimate = app.add_subcommand(
      "estimate", "estimate the system constants from saved datasets");
  CLI::App* coefficients = app.add_subcommand(
      "coefficients", "export the tightening coefficient tables and plots");
  CLI::App* run = app.add_subcommand(
      "run", "full pipeline: collect, estimate, coefficients, closed loop");
  CLI::App* reproduce = app.add_subcommand(
      "reproduce-example", "run the benchmark reproduction battery");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (collect->parsed()) return cmd_collect(args);
    if (estimate->parsed()) return cmd_estimate(args);
    if (coefficients->parsed()) return cmd_coefficients(args);
    if (run->parsed()) return cmd_run(args);
    if (reproduce->parsed()) return cmd_reproduce_example(args);
    return 2;
  } catch (const config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const io_error& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 2;
  } catch (const error& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
