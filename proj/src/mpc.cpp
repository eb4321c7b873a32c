#include "ddmpc/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "ddmpc/errors.hpp"

namespace ddmpc {

namespace {

double inf_norm(const Vec& v) {
  return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

int pad_to_block(int t_sim, int n) {
  if (t_sim <= 0) throw config_error("simulation length must be positive");
  const int rem = t_sim % n;
  return rem ? t_sim + (n - rem) : t_sim;
}

}  // namespace

std::pair<ClosedLoopTrace, Monitors> run_sf_closed_loop(
    const LtiPlant& plant, const SfOcpSpec& spec, const Vec& x0, int t_sim,
    DisturbanceSource& disturbance) {
  spec.validate();
  const int n = spec.n;
  const int mm = spec.m();
  if (plant.n() != n || plant.m() != mm)
    throw dimension_error("plant dimensions disagree with the program spec");
  if (x0.size() != n) throw dimension_error("x0 must have n entries");
  if (disturbance.dim() != n)
    throw dimension_error("disturbance dimension must equal n");
  const int total = pad_to_block(t_sim, n);

  ClosedLoopTrace trace;
  Monitors monitors;
  QpWorkspace ws;
  Vec x = x0;
  for (int t = 0; t < total; t += n) {
    OcpSolution sol{VecSequence(Mat::Zero(mm, 1)), VecSequence(Mat::Zero(n, 1)),
                    Vec(),
                    Vec(),
                    0.0,
                    QpStatus::infeasible};
    try {
      sol = solve_sf(spec, x, ws);
    } catch (const feasibility_error& e) {
      trace.aborted = true;
      trace.abort_reason = e.what();
      monitors.recursive_feasibility = false;
      TraceStep step;
      step.t = t;
      step.x = x;
      step.u = Vec::Zero(mm);
      step.nu = Vec::Zero(mm);
      step.solve_instant = true;
      step.feasible = false;
      step.margin_x = spec.x_max - inf_norm(x);
      step.margin_u = spec.u_max;
      trace.steps.push_back(std::move(step));
      break;
    }
    trace.solves.push_back({t, x, sol});
    for (int k = 0; k < n; ++k) {
      const Vec nu = sol.nu_bar.sample(k);
      const Vec u = spec.K * x + nu;
      TraceStep step;
      step.t = t + k;
      step.x = x;
      step.u = u;
      step.nu = nu;
      step.solve_instant = (k == 0);
      step.j_star = (k == 0) ? sol.j_star : 0.0;
      step.margin_x = spec.x_max - inf_norm(x);
      step.margin_u = spec.u_max - inf_norm(u);
      if (step.margin_x < 0.0 || step.margin_u < 0.0)
        monitors.constraint_satisfaction = false;
      trace.steps.push_back(std::move(step));
      x = simulate_step(plant, x, u, disturbance.next()).first;
    }
  }
  trace.final_state = x;
  trace.final_margin_x = spec.x_max - inf_norm(x);
  if (trace.final_margin_x < 0.0) monitors.constraint_satisfaction = false;
  monitors.practical_stability = stability_summary(trace);
  return {std::move(trace), monitors};
}

std::pair<ClosedLoopTrace, Monitors> run_of_closed_loop(
    const DifferenceOperatorModel& model, const OfOcpSpec& spec,
    const Vec& xi0, int warmup, int t_sim, DisturbanceSource& disturbance) {
  spec.validate();
  const ExtendedRealization ext = build_extended(model);
  const int n = spec.n;
  const int mm = spec.m();
  const int pp = spec.p();
  if (ext.order != n || ext.m != mm || ext.p != pp)
    throw dimension_error("model dimensions disagree with the program spec");
  if (xi0.size() != ext.dim())
    throw dimension_error("xi0 must have n(m+p) entries");
  if (disturbance.dim() != pp)
    throw dimension_error("disturbance dimension must equal p");
  if (warmup < 0) throw config_error("warmup must be nonnegative");
  const bool gain_active = spec.K_tilde.cwiseAbs().sum() > 0.0;
  if (gain_active && warmup < n)
    throw config_error(
        "warmup must cover at least n steps when the gain is nonzero");
  const int total = pad_to_block(t_sim, n);

  ClosedLoopTrace trace;
  Monitors monitors;
  QpWorkspace ws;
  Vec xi = xi0;
  // Rolling excitation history; before the simulation the recorded inputs of
  // xi0 stand in for it (the gain was not yet closed).
  Mat hist_nu(mm, n);
  for (int k = 0; k < n; ++k) hist_nu.col(k) = xi.segment(k * mm, mm);

  auto apply = [&](const Vec& nu, int t, bool solve_instant, double j_star) {
    const Vec u = spec.K_tilde * xi + nu;
    const Vec w = disturbance.next();
    const Vec y = ext.C * xi + ext.D * u + w;
    TraceStep step;
    step.t = t;
    step.x = xi;
    step.y = y;
    step.u = u;
    step.nu = nu;
    step.solve_instant = solve_instant;
    step.j_star = j_star;
    step.margin_x = spec.y_max - inf_norm(y);
    step.margin_u = spec.u_max - inf_norm(u);
    if (step.margin_x < 0.0 || step.margin_u < 0.0)
      monitors.constraint_satisfaction = false;
    trace.steps.push_back(std::move(step));
    xi = ext.A * xi + ext.B * u + ext.E * w;
    hist_nu.leftCols(n - 1) = hist_nu.rightCols(n - 1).eval();
    hist_nu.col(n - 1) = nu;
  };

  for (int t = -warmup; t < 0; ++t) apply(Vec::Zero(mm), t, false, 0.0);

  const int ob = n * mm;  // output-history offset inside xi
  for (int t = 0; t < total; t += n) {
    Mat hist_y(pp, n);
    for (int k = 0; k < n; ++k) hist_y.col(k) = xi.segment(ob + k * pp, pp);
    const OfHistory history{VecSequence(hist_nu), VecSequence(hist_y)};
    OcpSolution sol{VecSequence(Mat::Zero(mm, 1)), VecSequence(Mat::Zero(pp, 1)),
                    Vec(),
                    Vec(),
                    0.0,
                    QpStatus::infeasible};
    try {
      sol = solve_of(spec, history, xi, ws);
    } catch (const feasibility_error& e) {
      trace.aborted = true;
      trace.abort_reason = e.what();
      monitors.recursive_feasibility = false;
      TraceStep step;
      step.t = t;
      step.x = xi;
      step.y = Vec::Zero(pp);
      step.u = Vec::Zero(mm);
      step.nu = Vec::Zero(mm);
      step.solve_instant = true;
      step.feasible = false;
      step.margin_x = spec.y_max;
      step.margin_u = spec.u_max;
      trace.steps.push_back(std::move(step));
      break;
    }
    trace.solves.push_back({t, xi, sol});
    for (int k = 0; k < n; ++k)
      apply(sol.nu_bar.sample(n + k), t + k, k == 0, k == 0 ? sol.j_star : 0.0);
  }
  trace.final_state = xi;
  trace.final_margin_x =
      spec.y_max - inf_norm(xi.segment(ob + (n - 1) * pp, pp));
  monitors.practical_stability = stability_summary(trace);
  return {std::move(trace), monitors};
}

Lemma2Report check_lemma2(const ClosedLoopTrace& trace, const LtiPlant& plant,
                          const SfOcpSpec& spec) {
  constexpr double kSlack = 1e-9;
  const Mat a_k = plant.A + plant.B * spec.K;
  Lemma2Report report;
  report.worst_excess = -std::numeric_limits<double>::infinity();
  for (const SolveRecord& rec : trace.solves) {
    const OcpSolution& s = rec.solution;
    const double alpha_l1 = s.alpha.cwiseAbs().sum();
    const double sigma_inf = s.sigma.size() ? s.sigma.cwiseAbs().maxCoeff() : 0.0;
    Vec xhat = rec.state;
    for (int k = 0; k <= spec.L; ++k) {
      const double lhs = (xhat - s.x_bar.sample(k)).cwiseAbs().maxCoeff();
      const double rhs = spec.pec.c_alpha[static_cast<std::size_t>(k)] * alpha_l1 +
                         spec.pec.c_sigma[static_cast<std::size_t>(k)] * sigma_inf;
      ++report.checks;
      const double excess = lhs - rhs;
      report.worst_excess = std::max(report.worst_excess, excess);
      if (excess > kSlack) ++report.violations;
      if (k < spec.L) xhat = a_k * xhat + plant.B * s.nu_bar.sample(k);
    }
  }
  if (report.checks == 0) report.worst_excess = 0.0;
  return report;
}

StabilityReport stability_summary(const ClosedLoopTrace& trace) {
  StabilityReport report;
  const auto& solves = trace.solves;
  if (solves.empty()) return report;
  if (solves.size() == 1) {
    report.settling_step = solves[0].t;
    report.terminal_level = solves[0].solution.j_star;
    return report;
  }
  // Settling: first instant whose relative decrease is at most 5%.
  std::size_t settle = solves.size() - 1;
  for (std::size_t j = 1; j < solves.size(); ++j) {
    const double prev = solves[j - 1].solution.j_star;
    const double cur = solves[j].solution.j_star;
    if (prev <= 0.0) {
      settle = j - 1;
      break;
    }
    if ((prev - cur) / prev <= 0.05) {
      settle = j;
      break;
    }
  }
  report.settling_step = solves[settle].t;
  double level = 0.0;
  for (std::size_t j = settle; j < solves.size(); ++j)
    level += solves[j].solution.j_star;
  report.terminal_level = level / static_cast<double>(solves.size() - settle);
  // Log-linear fit of J* over block indices 0..settle.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (std::size_t j = 0; j <= settle; ++j) {
    const double v = solves[j].solution.j_star;
    if (v <= 0.0) continue;
    const double xj = static_cast<double>(j);
    const double yj = std::log(v);
    sx += xj;
    sy += yj;
    sxx += xj * xj;
    sxy += xj * yj;
    ++count;
  }
  if (count >= 2) {
    const double denom = count * sxx - sx * sx;
    if (denom > 0.0) {
      report.decay_rate = -(count * sxy - sx * sy) / denom;
      report.rate_defined = true;
    }
  }
  return report;
}

}  // namespace ddmpc
