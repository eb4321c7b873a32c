#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ddmpc/signals.hpp"

namespace ddmpc {

// Disturbed LTI plant x+ = Ax + Bu + w, y = Cx + Du.
struct LtiPlant {
  Mat A, B, C, D;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  int p() const { return static_cast<int>(C.rows()); }

  // Throws on inconsistent dimensions; returns false (without throwing) when
  // controllability or observability rank checks fail.
  bool validate() const;
};

// Builds the two-mass-spring benchmark plant (n=4, m=1, C=I, D=0).
LtiPlant two_mass_spring_plant();

// The pre-stabilizing state-feedback gain shipped with the benchmark plant.
Mat two_mass_spring_gain();

// y_k = -A_n y_{k-1} - ... - A_1 y_{k-n} + D u_k + B_n u_{k-1} + ... + B_1 u_{k-n} + w_k.
// Coefficient index i counts the lag from the oldest side: A_1/B_1 multiply the
// n-steps-old sample, A_n/B_n the most recent one.
struct DifferenceOperatorModel {
  std::vector<Mat> A;  // A_1..A_n, each p x p
  std::vector<Mat> B;  // B_1..B_n, each p x m
  Mat D;               // p x m

  int order() const { return static_cast<int>(A.size()); }
  int p() const { return static_cast<int>(D.rows()); }
  int m() const { return static_cast<int>(D.cols()); }

  void validate() const;
};

// Non-minimal realization of a DifferenceOperatorModel over the extended state
// xi_k = (u_{k-n}, ..., u_{k-1}, y_{k-n}, ..., y_{k-1}).
struct ExtendedRealization {
  Mat A;  // n(m+p) x n(m+p)
  Mat B;  // n(m+p) x m
  Mat E;  // n(m+p) x p, routes the noise into the newest output slot
  Mat C;  // p x n(m+p)
  Mat D;  // p x m
  int order = 0;
  int m = 0;
  int p = 0;

  int dim() const { return order * (m + p); }
};

ExtendedRealization build_extended(const DifferenceOperatorModel& model);

// Recorded excitation experiment. Exactly one of state/output is present.
struct DataSet {
  VecSequence nu;                         // applied excitation, length N
  std::optional<VecSequence> state;       // x^d, length N+1
  std::optional<VecSequence> output;      // y^d, length N
  Mat gain;                               // K (or K-tilde) used during collection
  std::optional<VecSequence> disturbance; // true w^d, oracle-only
  double w_max = 0.0;

  int length() const { return nu.length(); }
  void validate() const;
};

// One step of the plant dynamics; returns (x_next, y).
std::pair<Vec, Vec> simulate_step(const LtiPlant& plant, const Vec& x,
                                  const Vec& u, const Vec& w);

// Rolls out x+ = (A+BK)x + B nu + w from x0 and records x^d of length N+1.
DataSet collect_state_data(const LtiPlant& plant, const Mat& K,
                           const VecSequence& nu, const VecSequence& w,
                           const Vec& x0);

// d_k = sum_{i=0}^{k-1} A_K^{k-1-i} w_i; d_0 = 0.
Vec cumulative_disturbance(const Mat& A_K, const VecSequence& w, int k);

// x_hat_k = x_k - d_k for every sample of the recorded state sequence.
// Requires the dataset's true disturbance record.
VecSequence undisturbed_data(const DataSet& data, const Mat& A_K);

// Rolls out the extended realization under u_k = Ktilde xi_k + nu_k and
// records y^d of length N.
DataSet collect_output_data(const DifferenceOperatorModel& model,
                            const Mat& K_tilde, const VecSequence& nu,
                            const VecSequence& w_tilde, const Vec& xi0);

}  // namespace ddmpc
