#pragma once

// Prediction-error constants and the recursive state/input constraint
// tightening coefficients they induce.

#include <string>
#include <vector>

#include "ddmpc/constants.hpp"

namespace ddmpc {

// Per-step weights of the prediction-error bound
// ||xhat_{t+k} - xbar_k||_inf <= c_alpha_k ||alpha||_1 + c_sigma_k ||sigma||_inf.
struct PredictionErrorConstants {
  std::vector<double> c_alpha;  // k = 0..L
  std::vector<double> c_sigma;  // k = 0..L
};

// c_alpha_k = rho_k * dbar_{N-L} + dbar_{N-L+k}, c_sigma_k = rho_k + 1.
PredictionErrorConstants prediction_error_constants(const SystemConstants& c,
                                                    int L, int N);

// Multipliers of ||nu||_1, ||alpha||_1, ||sigma_k||_inf and the constant
// offset in the tightened state rows (a_*) and input rows (b_*), k = 0..L-1.
struct TighteningCoefficients {
  std::vector<double> a_u, a_alpha, a_sigma, a_c;
  std::vector<double> b_u, b_alpha, b_sigma, b_c;
};

// Base case for k < n, then the n-step recursion driven by Gamma, c_pe,
// K_bar, dbar, and the horizon-end prediction-error constants.
TighteningCoefficients sf_coefficients(const PredictionErrorConstants& pec,
                                       const SystemConstants& c, int L, int n,
                                       double x_max, double w_max);

// CSV with columns k,a_u,a_alpha,a_sigma,a_c,b_u,b_alpha,b_sigma,b_c.
void save_coefficients_csv(const std::string& path,
                           const TighteningCoefficients& tc);

}  // namespace ddmpc
