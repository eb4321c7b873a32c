#pragma once

// Estimation of every constant entering the constraint tightening:
// disturbance-propagation bounds rho_{A,k} and dbar_k, the excitation
// constant c_pe, the controllability constant Gamma, and the extended-state
// operator bounds eta_* for output feedback. Each data-driven estimator has
// a model-based oracle counterpart used by the test suite.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ddmpc/plant.hpp"
#include "ddmpc/signals.hpp"

namespace ddmpc {

enum class Provenance { data_driven, oracle };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

// Operator-norm bounds for the pre-stabilized extended dynamics
// xi+ = A xi + B nu + E w,  y = C xi + D nu + w.
struct EtaConstants {
  double eta_a = 0.0;
  double eta_b = 0.0;
  double eta_c = 0.0;
  double eta_d = 0.0;
};

struct SystemConstants {
  std::vector<double> rho;   // rho_{A,k} >= ||A_K^k||_inf, k = 0..N
  std::vector<double> dbar;  // dbar_k = w_max * sum_{j<k} rho_j
  double c_pe = 0.0;
  double gamma = 0.0;
  double k_bar = 0.0;  // ||K||_inf
  std::optional<EtaConstants> eta;
  Provenance provenance = Provenance::data_driven;
  double w_max = 0.0;  // disturbance bound the dbar list was built with

  // rho_0 = 1, dbar_0 = 0, dbar nondecreasing and consistent with rho and
  // w_max, scalars nonnegative. Throws on violation.
  void validate() const;
};

// Feasibility family "exists tau >= 0 with P1(sigma_sq) - tau*P2 PSD".
// P1 must be affine in sigma_sq; P2 symmetric.
struct SLemmaProblem {
  std::function<Mat(double)> p1;
  Mat p2;
  std::string label;
};

// Norm-consistency instance: every operator Z mapping regressor columns S to
// response columns R up to noise E*W with ||W||_F^2 <= energy satisfies
// ||Z_sel||_2 <= sigma, where the selector picks rows
// [sel_offset, sel_offset + sel_size) of the stacked unknown. P2 is
// Frobenius-normalized; the multiplier tau absorbs the scale.
SLemmaProblem consistency_problem(const Mat& s, const Mat& r, double energy,
                                  int sel_offset, int sel_size, const Mat& e,
                                  const std::string& label);

// Smallest sigma_sq (relative tolerance tol) admitting a PSD certificate.
// Outer bisection on sigma_sq from a certified-feasible upper end; inner
// golden-section maximization of lambda_min(P1 - tau*P2) over tau >= 0
// (concave in tau, bracket doubled until the peak is enclosed, early exit
// once feasible). PSD slack -1e-9 * ||P1||_F. The cap bounds sigma_sq.
double slemma_min_sigma(const SLemmaProblem& prob, double tol = 1e-6,
                        double cap = 1e6);

struct RhoDbar {
  std::vector<double> rho;   // k = 0..horizon
  std::vector<double> dbar;  // k = 0..horizon
};

// Certified overbounds rho_{A,k} >= ||A_K^k||_inf from recorded state data:
// one consistency problem per step count k (regressor = initial states plus
// the k-step input window, response = states k steps later, noise energy
// from the accumulated k-step disturbance), refined by submultiplicativity
// across splits, then rho_k = sqrt(n) * sigma_k and
// dbar_k = w_max * sum_{j<k} rho_j.
RhoDbar estimate_rho_dbar(const DataSet& data, int horizon);

// c_pe = ||pinv([H_L(nu); H_1(x_{[0,N-L]})])||_1 (max abs column sum).
double estimate_cpe(const DataSet& data, int L);

// Controllability constant: for every vertex v of [-x_max, x_max]^n solve
//   min ||nu||_1 + lambda_alpha * w_max * ||alpha||^2
//       + (lambda_sigma / w_max) * ||sigma||^2
//   s.t. [nu; x + sigma] = [H_n(nu^d); H_{n+1}(x^d)] alpha, x_0 = v, x_n = 0
// and return max ||nu*||_1 / x_max. Requires n <= 12 (vertex enumeration)
// and excitation persistently exciting of order 2n+1.
double estimate_gamma(const DataSet& data, double x_max, double w_max,
                      double lambda_alpha, double lambda_sigma);

// Four consistency solves on the extended-state data matrices (columns
// xi_n..xi_{N-1}, responses the shifted columns / the aligned outputs,
// excitation columns nu_n..nu_{N-1}) with eta = sqrt(input dim) * sigma.
// The extended state is reconstructed from the recorded inputs and outputs
// assuming a zero pre-history before sample 0.
EtaConstants estimate_etas(const DataSet& data, double w_tilde_max);

// Exact constants from full model knowledge: matrix-power norms and the
// dbar recursion, c_pe from noise-free regenerated excitation (median over
// five fixed seeds, unit input bound), Gamma from per-vertex linear
// programs min ||nu||_1 subject to n-step steering of the vertex to zero.
SystemConstants oracle_constants(const LtiPlant& plant, const Mat& K, int L,
                                 int N, double w_max);

// Structured text round trip; one provenance tag per constant.
void save_constants(const std::string& path, const SystemConstants& c);
SystemConstants load_constants(const std::string& path);

}  // namespace ddmpc
