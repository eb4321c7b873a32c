#pragma once

// Assembly and solution of the robust data-driven optimal control problems:
// state feedback with the recursive constraint tightening, and output
// feedback over the extended non-minimal state.

#include "ddmpc/constants.hpp"
#include "ddmpc/qp.hpp"
#include "ddmpc/signals.hpp"
#include "ddmpc/tightening.hpp"

namespace ddmpc {

struct SfOcpSpec {
  HankelMatrix h_nu;  // depth L over nu^d
  HankelMatrix h_x;   // depth L+1 over x^d
  int L = 0;
  int n = 0;
  int N = 0;
  Mat Q;  // n x n, PSD
  Mat R;  // m x m, PD
  double lambda_alpha = 0.0;
  double lambda_sigma = 0.0;
  double w_max = 0.0;
  TighteningCoefficients tc;
  PredictionErrorConstants pec;
  double x_max = 0.0;
  double u_max = 0.0;
  Mat K;  // m x n pre-stabilizing gain

  int m() const { return h_nu.block_dim; }

  // Hankel depths/column counts, weight shapes and definiteness, positive
  // regularizers and bounds, coefficient list lengths. Throws on violation.
  void validate() const;
};

struct OcpSolution {
  VecSequence nu_bar;  // length L (state feedback) or L+n (output feedback)
  VecSequence x_bar;   // states x_bar_0..L, or outputs ybar_{-n..L-1}
  Vec alpha;
  Vec sigma;
  double j_star = 0.0;  // original objective, epigraph helpers excluded
  QpStatus status = QpStatus::max_iter;
};

// Tightened program at the measured state: variables (alpha, sigma, nu, x)
// plus epigraph helpers for ||nu||_1, ||alpha||_1, ||sigma_k||_inf,
// ||nu_k||_inf, and ||K x_k||_inf.
QuadraticProgram assemble_sf(const SfOcpSpec& spec, const Vec& x_t);

// assemble_sf + solve + unpack. Optimal solutions are re-verified against
// the original constraints (equalities to 1e-6, inequalities to 1e-8).
// Infeasibility throws a feasibility error naming x_t and the worst row.
OcpSolution solve_sf(const SfOcpSpec& spec, const Vec& x_t);
OcpSolution solve_sf(const SfOcpSpec& spec, const Vec& x_t, QpWorkspace& ws);

struct OfOcpSpec {
  HankelMatrix h_nu;  // depth L+n over nu^d
  HankelMatrix h_y;   // depth L+n over y^d
  int L = 0;
  int n = 0;  // model order
  int N = 0;
  Mat Q;  // p x p, PSD
  Mat R;  // m x m, PD
  double lambda_alpha = 0.0;
  double lambda_sigma = 0.0;
  double w_max = 0.0;  // output noise bound
  EtaConstants eta;
  double y_max = 0.0;
  double u_max = 0.0;
  Mat K_tilde;  // m x n(m+p)

  int m() const { return h_nu.block_dim; }
  int p() const { return h_y.block_dim; }

  void validate() const;
};

// The n-step initialization window of the output-feedback program: the
// excitation applied over the previous block and the outputs measured then.
struct OfHistory {
  VecSequence nu;  // length n
  VecSequence y;   // length n
};

// Program over the trajectory window k = -n..L-1 with n-step initial and
// terminal pinning; the input/output tightening depends only on
// ||xi_t||_inf, the eta constants, and ||nu_k||_inf epigraph helpers.
QuadraticProgram assemble_of(const OfOcpSpec& spec, const OfHistory& history,
                             const Vec& xi_t);

OcpSolution solve_of(const OfOcpSpec& spec, const OfHistory& history,
                     const Vec& xi_t);
OcpSolution solve_of(const OfOcpSpec& spec, const OfHistory& history,
                     const Vec& xi_t, QpWorkspace& ws);

}  // namespace ddmpc
