#include "ddmpc/tightening.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "ddmpc/errors.hpp"

namespace ddmpc {

PredictionErrorConstants prediction_error_constants(const SystemConstants& c,
                                                    int L, int N) {
  if (L < 1 || N < L) throw dimension_error("need 1 <= L <= N");
  if (static_cast<int>(c.rho.size()) < L + 1 ||
      static_cast<int>(c.dbar.size()) < N + 1)
    throw dimension_error(
        "prediction_error_constants needs rho up to L and dbar up to N");
  PredictionErrorConstants pec;
  pec.c_alpha.resize(static_cast<std::size_t>(L) + 1);
  pec.c_sigma.resize(static_cast<std::size_t>(L) + 1);
  for (int k = 0; k <= L; ++k) {
    pec.c_alpha[static_cast<std::size_t>(k)] =
        c.rho[static_cast<std::size_t>(k)] *
            c.dbar[static_cast<std::size_t>(N - L)] +
        c.dbar[static_cast<std::size_t>(N - L + k)];
    pec.c_sigma[static_cast<std::size_t>(k)] =
        c.rho[static_cast<std::size_t>(k)] + 1.0;
  }
  return pec;
}

TighteningCoefficients sf_coefficients(const PredictionErrorConstants& pec,
                                       const SystemConstants& c, int L, int n,
                                       double x_max, double w_max) {
  if (n < 1) throw dimension_error("system order must be positive");
  if (L < n)
    throw config_error(
        "prediction horizon must be at least the system order");
  if (static_cast<int>(pec.c_alpha.size()) != L + 1 ||
      static_cast<int>(pec.c_sigma.size()) != L + 1)
    throw dimension_error("prediction-error lists must cover k = 0..L");
  const int N = static_cast<int>(c.dbar.size()) - 1;
  if (N < 1 || n > N)
    throw dimension_error("dbar list too short for the recursion");
  if (std::abs(w_max - c.w_max) > 1e-12 * std::max(1.0, std::abs(w_max)))
    throw config_error(
        "w_max disagrees with the bound the constants were built for");
  if (x_max <= 0.0) throw config_error("x_max must be positive");
  const auto& ca = pec.c_alpha;
  const auto& cs = pec.c_sigma;
  const auto& dbar = c.dbar;
  const double cpe = c.c_pe;
  const double gam = c.gamma;
  const double kbar = c.k_bar;
  TighteningCoefficients tc;
  const auto sz = static_cast<std::size_t>(L);
  tc.a_u.assign(sz, 0.0);
  tc.a_alpha.assign(sz, 0.0);
  tc.a_sigma.assign(sz, 0.0);
  tc.a_c.assign(sz, 0.0);
  tc.b_u.assign(sz, 0.0);
  tc.b_alpha.assign(sz, 0.0);
  tc.b_sigma.assign(sz, 0.0);
  tc.b_c.assign(sz, 0.0);
  for (int k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    tc.a_alpha[i] = ca[i];
    tc.a_sigma[i] = cs[i];
    tc.a_c[i] = dbar[i];
    tc.b_alpha[i] = kbar * ca[i];
    tc.b_sigma[i] = kbar * cs[i];
    tc.b_c[i] = kbar * dbar[i];
  }
  // One application of the candidate-solution argument per n-step block: the
  // index-k coefficients feed index k+n.
  const double spill = cpe * (n * x_max + n * dbar[static_cast<std::size_t>(n)]);
  const double tail = dbar[static_cast<std::size_t>(N - 1)];
  const auto el = static_cast<std::size_t>(L);
  for (int k = 0; k + n < L; ++k) {
    const auto i = static_cast<std::size_t>(k);
    const auto j = static_cast<std::size_t>(k + n);
    tc.a_u[j] = tc.a_u[i] + tc.a_alpha[i] * cpe + tc.a_sigma[i] * cpe * tail;
    tc.a_alpha[j] = tc.a_u[j] * gam * ca[el - 1] + ca[j];
    tc.a_sigma[j] = tc.a_u[j] * gam * cs[el - 1] + cs[j];
    tc.a_c[j] = tc.a_c[i] + tc.a_alpha[i] * spill +
                tc.a_sigma[i] * (tail * spill + dbar[static_cast<std::size_t>(n)]) +
                dbar[static_cast<std::size_t>(n)];
    tc.b_u[j] = tc.b_u[i] + tc.b_alpha[i] * cpe + tc.b_sigma[i] * cpe * tail;
    tc.b_alpha[j] = tc.b_u[j] * gam * ca[el - 1] + kbar * ca[j];
    tc.b_sigma[j] = tc.b_u[j] * gam * cs[el - 1] + kbar * cs[j];
    tc.b_c[j] = tc.b_c[i] + tc.b_alpha[i] * spill +
                tc.b_sigma[i] * (tail * spill + dbar[static_cast<std::size_t>(n)]) +
                kbar * dbar[static_cast<std::size_t>(n)];
  }
  return tc;
}

void save_coefficients_csv(const std::string& path,
                           const TighteningCoefficients& tc) {
  std::ofstream os(path);
  if (!os) throw io_error("cannot open '" + path + "' for writing");
  os << "k,a_u,a_alpha,a_sigma,a_c,b_u,b_alpha,b_sigma,b_c\n";
  char buf[64];
  for (std::size_t k = 0; k < tc.a_u.size(); ++k) {
    os << k;
    for (double v : {tc.a_u[k], tc.a_alpha[k], tc.a_sigma[k], tc.a_c[k],
                     tc.b_u[k], tc.b_alpha[k], tc.b_sigma[k], tc.b_c[k]}) {
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      os << buf;
    }
    os << "\n";
  }
  if (!os) throw io_error("failed writing '" + path + "'");
}

}  // namespace ddmpc
