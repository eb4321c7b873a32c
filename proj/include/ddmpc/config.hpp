#pragma once

// Experiment configuration: structured text file parsing, built-in scenario
// presets, and validation with named-field diagnostics.

#include <cstdint>
#include <optional>
#include <string>

#include "ddmpc/constants.hpp"
#include "ddmpc/plant.hpp"
#include "ddmpc/signals.hpp"

namespace ddmpc {

enum class PlantMode { state, output };

std::string to_string(PlantMode m);

// Complete description of one experiment. Exactly one of plant/model is
// engaged, matching mode. x_max bounds the state in state mode and the
// output in output mode.
struct ExperimentConfig {
  PlantMode mode = PlantMode::state;
  Provenance provenance = Provenance::data_driven;

  std::string plant_name;                        // built-in name, or empty
  std::optional<LtiPlant> plant;                 // state mode
  std::optional<DifferenceOperatorModel> model;  // output mode
  Mat gain;  // pre-stabilizing K (state) or K_tilde (output)

  double w_max = 0.0;
  double u_max = 0.0;
  double x_max = 0.0;

  int N = 0;
  int N_prime = 0;  // constants dataset length; state mode only
  int pe_order = 0;  // 0 picks the mode default
  std::uint64_t excitation_seed = 0;
  std::uint64_t excitation_seed_long = 0;
  std::uint64_t noise_seed = 0;

  int L = 0;
  Mat Q, R;  // empty means identity of the right size
  double lambda_alpha = 0.0;
  double lambda_sigma = 0.0;
  double lambda_alpha_prime = 1.0;  // Gamma-estimation regularizers
  double lambda_sigma_prime = 1.0;

  Vec x0;              // state mode initial state
  Vec hist_u, hist_y;  // output mode pre-history, oldest sample first
  int t_sim = 0;
  int warmup = 0;  // output mode zero-excitation steps before t = 0
  std::uint64_t sim_seed = 0;

  int n() const;  // plant order
  int m() const;
  int p() const;

  // L + n + 1 in state mode, L + 2n + 1 in output mode, unless overridden.
  int effective_pe_order() const;

  // Fills defaulted fields (Q, R, pe_order) in place, then validates.
  void finalize();

  // Throws config_error naming the offending field on any violation:
  // plant present and consistent with mode, bounds positive (w_max >= 0),
  // L >= n, N >= (m+1)(L+n+1)-1 in state mode, N' >= N when used, shapes of
  // gain/Q/R/x0/histories, positive regularizers, t_sim >= 1.
  void validate() const;
};

// Built-in presets: "two-mass-spring" (state feedback) and
// "difference-operator" (output feedback). Throws config_error on an
// unknown name.
ExperimentConfig scenario_config(const std::string& name);

// Structured text file: [section] headers and key = value lines, full-line
// # comments, matrices as row lists ("1 2; 3 4") or @path to a CSV file
// (relative to the config file). Unknown sections or keys throw.
ExperimentConfig load_config(const std::string& path);

}  // namespace ddmpc
