#include "ddmpc/pipeline.hpp"

#include <cstdio>
#include <utility>
#include <vector>

#include "ddmpc/csv.hpp"
#include "ddmpc/errors.hpp"
#include "ddmpc/signals.hpp"
#include "ddmpc/svg.hpp"

namespace ddmpc {

namespace {

// One shared stream for every collection disturbance, long dataset first,
// so a configuration pins the experiment byte-for-byte.
VecSequence draw_noise(Rng& rng, int dim, int len, double amplitude) {
  Mat w(dim, len);
  for (int k = 0; k < len; ++k) w.col(k) = rng.uniform_vec(dim, amplitude);
  return VecSequence(w);
}

}  // namespace

CollectedData collect_experiment(const ExperimentConfig& cfg) {
  Rng noise(cfg.noise_seed);
  const int pe = cfg.effective_pe_order();
  if (cfg.mode == PlantMode::state) {
    const LtiPlant& plant = *cfg.plant;
    const VecSequence nu_long = generate_pe_input(
        cfg.m(), cfg.N_prime, cfg.u_max, pe, cfg.excitation_seed_long);
    DataSet constants_data = collect_state_data(
        plant, cfg.gain, nu_long,
        draw_noise(noise, cfg.n(), cfg.N_prime, cfg.w_max),
        Vec::Zero(cfg.n()));
    constants_data.w_max = cfg.w_max;

    const VecSequence nu = generate_pe_input(cfg.m(), cfg.N, cfg.u_max, pe,
                                             cfg.excitation_seed);
    DataSet hankel = collect_state_data(
        plant, cfg.gain, nu, draw_noise(noise, cfg.n(), cfg.N, cfg.w_max),
        Vec::Zero(cfg.n()));
    hankel.w_max = cfg.w_max;
    return {std::move(hankel), std::move(constants_data)};
  }
  const VecSequence nu = generate_pe_input(cfg.m(), cfg.N, cfg.u_max, pe,
                                           cfg.excitation_seed);
  DataSet hankel = collect_output_data(
      *cfg.model, cfg.gain, nu,
      draw_noise(noise, cfg.p(), cfg.N, cfg.w_max),
      Vec::Zero(cfg.n() * (cfg.m() + cfg.p())));
  hankel.w_max = cfg.w_max;
  return {std::move(hankel), std::nullopt};
}

SystemConstants estimate_constants(const ExperimentConfig& cfg,
                                   const CollectedData& data) {
  if (cfg.provenance == Provenance::oracle) {
    if (cfg.mode != PlantMode::state)
      throw config_error(
          "experiment.provenance: oracle constants need a state-space plant");
    return oracle_constants(*cfg.plant, cfg.gain, cfg.L, cfg.N, cfg.w_max);
  }
  SystemConstants c;
  c.provenance = Provenance::data_driven;
  c.w_max = cfg.w_max;
  c.k_bar = cfg.gain.size() == 0
                ? 0.0
                : cfg.gain.cwiseAbs().rowwise().sum().maxCoeff();
  if (cfg.mode == PlantMode::state) {
    if (!data.constants_data)
      throw estimation_error("constants dataset missing from the collection");
    const RhoDbar rd = estimate_rho_dbar(*data.constants_data, cfg.N);
    c.rho = rd.rho;
    c.dbar = rd.dbar;
    c.c_pe = estimate_cpe(data.hankel, cfg.L);
    c.gamma = estimate_gamma(data.hankel, cfg.x_max, cfg.w_max,
                             cfg.lambda_alpha_prime, cfg.lambda_sigma_prime);
  } else {
    c.rho = {1.0};
    c.dbar = {0.0};
    c.eta = estimate_etas(data.hankel, cfg.w_max);
  }
  c.validate();
  return c;
}

SfOcpSpec build_sf_spec(const ExperimentConfig& cfg, const CollectedData& data,
                        const SystemConstants& constants) {
  if (cfg.mode != PlantMode::state)
    throw dimension_error("state-feedback program needs a state-mode config");
  const PredictionErrorConstants pec =
      prediction_error_constants(constants, cfg.L, cfg.N);
  const TighteningCoefficients tc = sf_coefficients(
      pec, constants, cfg.L, cfg.n(), cfg.x_max, cfg.w_max);
  SfOcpSpec spec{build_hankel(data.hankel.nu, cfg.L),
                 build_hankel(*data.hankel.state, cfg.L + 1),
                 cfg.L,
                 cfg.n(),
                 cfg.N,
                 cfg.Q,
                 cfg.R,
                 cfg.lambda_alpha,
                 cfg.lambda_sigma,
                 cfg.w_max,
                 tc,
                 pec,
                 cfg.x_max,
                 cfg.u_max,
                 cfg.gain};
  spec.validate();
  return spec;
}

OfOcpSpec build_of_spec(const ExperimentConfig& cfg, const CollectedData& data,
                        const SystemConstants& constants) {
  if (cfg.mode != PlantMode::output)
    throw dimension_error("output-feedback program needs an output-mode config");
  if (!constants.eta)
    throw estimation_error("eta constants missing for the output-feedback program");
  OfOcpSpec spec{build_hankel(data.hankel.nu, cfg.L + cfg.n()),
                 build_hankel(*data.hankel.output, cfg.L + cfg.n()),
                 cfg.L,
                 cfg.n(),
                 cfg.N,
                 cfg.Q,
                 cfg.R,
                 cfg.lambda_alpha,
                 cfg.lambda_sigma,
                 cfg.w_max,
                 *constants.eta,
                 cfg.x_max,
                 cfg.u_max,
                 cfg.gain};
  spec.validate();
  return spec;
}

namespace {

std::vector<double> index_axis(std::size_t count) {
  std::vector<double> x(count);
  for (std::size_t i = 0; i < count; ++i) x[i] = static_cast<double>(i);
  return x;
}

void coefficient_svg(
    const std::string& path, const std::string& title,
    const std::vector<std::pair<std::string, const std::vector<double>*>>&
        curves) {
  std::vector<SvgSeries> series;
  for (const auto& [label, values] : curves)
    series.push_back({label, index_axis(values->size()), *values});
  write_svg_plot(path, title, "step k", "coefficient value", series);
}

}  // namespace

void write_coefficient_svgs(const std::string& dir,
                            const TighteningCoefficients& tc,
                            const TighteningCoefficients* oracle_tc) {
  std::vector<std::pair<std::string, const std::vector<double>*>> a_curves{
      {"a_u (data)", &tc.a_u},
      {"a_alpha (data)", &tc.a_alpha},
      {"a_sigma (data)", &tc.a_sigma},
      {"a_c (data)", &tc.a_c}};
  std::vector<std::pair<std::string, const std::vector<double>*>> b_curves{
      {"b_u (data)", &tc.b_u},
      {"b_alpha (data)", &tc.b_alpha},
      {"b_sigma (data)", &tc.b_sigma},
      {"b_c (data)", &tc.b_c}};
  if (oracle_tc) {
    a_curves.insert(a_curves.end(), {{"a_u (oracle)", &oracle_tc->a_u},
                                     {"a_alpha (oracle)", &oracle_tc->a_alpha},
                                     {"a_sigma (oracle)", &oracle_tc->a_sigma},
                                     {"a_c (oracle)", &oracle_tc->a_c}});
    b_curves.insert(b_curves.end(), {{"b_u (oracle)", &oracle_tc->b_u},
                                     {"b_alpha (oracle)", &oracle_tc->b_alpha},
                                     {"b_sigma (oracle)", &oracle_tc->b_sigma},
                                     {"b_c (oracle)", &oracle_tc->b_c}});
  }
  coefficient_svg(dir + "/coefficients_a.svg",
                  "State tightening coefficients", a_curves);
  coefficient_svg(dir + "/coefficients_b.svg",
                  "Input tightening coefficients", b_curves);
}

void write_trace_artifacts(const std::string& dir, const std::string& stem,
                           const ClosedLoopTrace& trace, PlantMode mode) {
  if (trace.steps.empty()) return;
  const bool use_output = mode == PlantMode::output;
  const std::string prefix = use_output ? "y" : "x";
  write_trace_csv(dir + "/" + stem + ".csv", trace, prefix);
  const Vec& first =
      use_output ? trace.steps.front().y : trace.steps.front().x;
  const int sd = static_cast<int>(first.size());
  const int md = static_cast<int>(trace.steps.front().u.size());
  std::vector<SvgSeries> series(static_cast<std::size_t>(sd + md));
  char label[32];
  for (int i = 0; i < sd; ++i) {
    std::snprintf(label, sizeof(label), "%s_%d", prefix.c_str(), i + 1);
    series[static_cast<std::size_t>(i)].label = label;
  }
  for (int i = 0; i < md; ++i) {
    std::snprintf(label, sizeof(label), "u_%d", i + 1);
    series[static_cast<std::size_t>(sd + i)].label = label;
  }
  for (const TraceStep& s : trace.steps) {
    const Vec& sig = use_output ? s.y : s.x;
    for (int i = 0; i < sd; ++i) {
      series[static_cast<std::size_t>(i)].x.push_back(s.t);
      series[static_cast<std::size_t>(i)].y.push_back(sig(i));
    }
    for (int i = 0; i < md; ++i) {
      series[static_cast<std::size_t>(sd + i)].x.push_back(s.t);
      series[static_cast<std::size_t>(sd + i)].y.push_back(s.u(i));
    }
  }
  write_svg_plot(dir + "/" + stem + ".svg",
                 use_output ? "Closed-loop output and input"
                            : "Closed-loop state and input",
                 "time step t", "signal value", series);
}

std::pair<ClosedLoopTrace, Monitors> run_experiment(
    const ExperimentConfig& cfg, const CollectedData& data,
    const SystemConstants& constants, std::uint64_t seed_offset) {
  if (cfg.mode == PlantMode::state) {
    const SfOcpSpec spec = build_sf_spec(cfg, data, constants);
    DisturbanceSource dis(cfg.w_max, cfg.n(), cfg.sim_seed + seed_offset);
    return run_sf_closed_loop(*cfg.plant, spec, cfg.x0, cfg.t_sim, dis);
  }
  const OfOcpSpec spec = build_of_spec(cfg, data, constants);
  Vec xi0(cfg.n() * (cfg.m() + cfg.p()));
  xi0 << cfg.hist_u, cfg.hist_y;
  DisturbanceSource dis(cfg.w_max, cfg.p(), cfg.sim_seed + seed_offset);
  return run_of_closed_loop(*cfg.model, spec, xi0, cfg.warmup, cfg.t_sim, dis);
}

}  // namespace ddmpc
