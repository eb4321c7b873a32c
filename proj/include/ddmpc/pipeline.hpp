#pragma once

// Experiment pipeline shared by the command-line stages and the acceptance
// suite: data collection, constant estimation honoring the provenance
// switch, program assembly, and closed-loop execution.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ddmpc/config.hpp"
#include "ddmpc/constants.hpp"
#include "ddmpc/mpc.hpp"
#include "ddmpc/ocp.hpp"
#include "ddmpc/plant.hpp"
#include "ddmpc/tightening.hpp"

namespace ddmpc {

// The excitation experiments a configuration prescribes. In state mode the
// long dataset feeds the disturbance-propagation constants and the short one
// the Hankel matrices; in output mode a single dataset serves both roles.
// Both draw their disturbances from one stream seeded by noise_seed, long
// dataset first.
struct CollectedData {
  DataSet hankel;
  std::optional<DataSet> constants_data;
};

CollectedData collect_experiment(const ExperimentConfig& cfg);

// Data-driven or oracle constants per cfg.provenance. Oracle constants need
// a built-in state-space plant; output mode is always data-driven and fills
// only the eta block (plus trivial rho_0/dbar entries).
SystemConstants estimate_constants(const ExperimentConfig& cfg,
                                   const CollectedData& data);

SfOcpSpec build_sf_spec(const ExperimentConfig& cfg, const CollectedData& data,
                        const SystemConstants& constants);

OfOcpSpec build_of_spec(const ExperimentConfig& cfg, const CollectedData& data,
                        const SystemConstants& constants);

// Closed loop per the configuration; seed_offset shifts sim_seed for
// multi-seed sweeps.
std::pair<ClosedLoopTrace, Monitors> run_experiment(
    const ExperimentConfig& cfg, const CollectedData& data,
    const SystemConstants& constants, std::uint64_t seed_offset = 0);

// Coefficient plots coefficients_a.svg / coefficients_b.svg beneath dir,
// with an oracle overlay when oracle_tc is given.
void write_coefficient_svgs(const std::string& dir,
                            const TighteningCoefficients& tc,
                            const TighteningCoefficients* oracle_tc);

// stem.csv plus stem.svg beneath dir; state traces log x, output traces y.
void write_trace_artifacts(const std::string& dir, const std::string& stem,
                           const ClosedLoopTrace& trace, PlantMode mode);

// One acceptance criterion outcome; detail carries the measured numbers.
struct CriterionResult {
  int index = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

// Runs the full acceptance battery in order. When out_dir is nonempty the
// reproduction artifacts (datasets, constants, coefficient CSV/SVGs, trace
// CSV/SVG, report.txt) are written beneath it.
std::vector<CriterionResult> run_acceptance_criteria(
    const std::string& out_dir);

}  // namespace ddmpc
