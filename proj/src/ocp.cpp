#include "ddmpc/ocp.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "ddmpc/errors.hpp"

namespace ddmpc {

namespace {

constexpr double kSolveTol = 1e-8;
constexpr int kSolveMaxIter = 400000;
constexpr double kEqSlack = 1e-6;
constexpr double kIneqSlack = 1e-8;

double min_eigenvalue(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

bool any_positive(const std::vector<double>& a, const std::vector<double>& b) {
  auto pos = [](double v) { return v > 0.0; };
  return std::any_of(a.begin(), a.end(), pos) ||
         std::any_of(b.begin(), b.end(), pos);
}

std::string format_vec(const Vec& v) {
  std::ostringstream os;
  os << "[";
  for (int i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v(i);
  os << "]";
  return os.str();
}

// Worst violated row of the assembled program at the returned iterate, for
// the infeasibility diagnostic.
std::pair<std::string, double> worst_row(const QuadraticProgram& qp,
                                         const Vec& z) {
  double worst = 0.0;
  bool eq = true;
  int row = -1;
  if (qp.num_eq()) {
    const Vec r = (qp.A_eq() * z - qp.b_eq()).cwiseAbs();
    for (int i = 0; i < r.size(); ++i)
      if (r(i) > worst) {
        worst = r(i);
        row = i;
      }
  }
  if (qp.num_ineq()) {
    const Vec r = qp.A_in() * z - qp.b_in();
    for (int i = 0; i < r.size(); ++i)
      if (r(i) > worst) {
        worst = r(i);
        row = i;
        eq = false;
      }
  }
  std::ostringstream os;
  os << (eq ? "equality" : "inequality") << " row " << row;
  return {os.str(), worst};
}

}  // namespace

void SfOcpSpec::validate() const {
  if (L < 1 || n < 1 || N < L + 1)
    throw dimension_error("need L >= 1 and N >= L+1");
  if (h_nu.depth != L || h_x.depth != L + 1)
    throw dimension_error("Hankel depths must be L over nu and L+1 over x");
  if (h_x.block_dim != n)
    throw dimension_error("state Hankel block dimension must equal n");
  const int cols = N - L + 1;
  if (h_nu.entries.cols() != cols || h_x.entries.cols() != cols)
    throw dimension_error("both Hankel blocks need N-L+1 columns");
  const int mm = m();
  if (Q.rows() != n || Q.cols() != n || R.rows() != mm || R.cols() != mm)
    throw dimension_error("Q must be n x n and R must be m x m");
  if (min_eigenvalue(Q) < -1e-10)
    throw dimension_error("Q must be positive semidefinite");
  if (min_eigenvalue(R) <= 0.0)
    throw dimension_error("R must be positive definite");
  if (lambda_alpha <= 0.0 || lambda_sigma <= 0.0)
    throw dimension_error("regularization weights must be positive");
  if (w_max < 0.0) throw dimension_error("w_max must be nonnegative");
  if (x_max <= 0.0 || u_max <= 0.0)
    throw dimension_error("constraint bounds must be positive");
  if (K.rows() != mm || K.cols() != n)
    throw dimension_error("K must be m x n");
  const auto len = static_cast<std::size_t>(L);
  if (tc.a_u.size() != len || tc.a_alpha.size() != len ||
      tc.a_sigma.size() != len || tc.a_c.size() != len ||
      tc.b_u.size() != len || tc.b_alpha.size() != len ||
      tc.b_sigma.size() != len || tc.b_c.size() != len)
    throw dimension_error("tightening coefficients must cover k = 0..L-1");
  if (pec.c_alpha.size() != len + 1 || pec.c_sigma.size() != len + 1)
    throw dimension_error("prediction-error constants must cover k = 0..L");
}

QuadraticProgram assemble_sf(const SfOcpSpec& spec, const Vec& x_t) {
  spec.validate();
  const int n = spec.n;
  const int L = spec.L;
  const int mm = spec.m();
  if (x_t.size() != n) throw dimension_error("x_t must have n entries");
  const int cols = spec.N - L + 1;
  const int traj = n * (L + 1);
  QuadraticProgram qp;
  const int alpha = qp.add_block("alpha", cols);
  const int nu = qp.add_block("nu", mm * L);
  const int x = qp.add_block("x", traj);
  const int sigma = qp.add_block("sigma", traj);
  // Trajectory parametrization [nu; x + sigma] = [H_L(nu^d); H_{L+1}(x^d)] a.
  for (int row = 0; row < mm * L; ++row) {
    RowExpr e;
    e.add_block(alpha, spec.h_nu.entries.row(row).transpose());
    e.add(nu + row, -1.0);
    qp.add_eq(e, 0.0);
  }
  for (int row = 0; row < traj; ++row) {
    RowExpr e;
    e.add_block(alpha, spec.h_x.entries.row(row).transpose());
    e.add(x + row, -1.0);
    e.add(sigma + row, -1.0);
    qp.add_eq(e, 0.0);
  }
  // Initial and terminal pinning.
  for (int i = 0; i < n; ++i) {
    RowExpr e;
    e.add(x + i, 1.0);
    qp.add_eq(e, x_t(i));
  }
  for (int i = 0; i < n; ++i) {
    RowExpr e;
    e.add(x + L * n + i, 1.0);
    qp.add_eq(e, 0.0);
  }
  // Norm helpers, created only where some coefficient references them so no
  // variable is left without constraint pressure.
  const bool use_nu1 = any_positive(spec.tc.a_u, spec.tc.b_u);
  const bool use_al1 = any_positive(spec.tc.a_alpha, spec.tc.b_alpha);
  const bool use_kx = spec.K.cwiseAbs().sum() > 0.0;
  int t_nu = -1, t_alpha = -1;
  if (use_nu1) t_nu = epigraph_abs(qp, qp.block("nu"), "nu_l1");
  if (use_al1) t_alpha = epigraph_abs(qp, qp.block("alpha"), "alpha_l1");
  const int s_inf = qp.add_block("sigma_inf", L);
  const int g_inf = qp.add_block("nu_inf", L);
  const int h_inf = use_kx ? qp.add_block("kx_inf", L) : -1;
  for (int k = 0; k < L; ++k) {
    for (int i = 0; i < n; ++i) {
      for (double sign : {1.0, -1.0}) {
        RowExpr e;
        e.add(sigma + k * n + i, sign);
        e.add(s_inf + k, -1.0);
        qp.add_ineq(e, 0.0);
      }
    }
    for (int j = 0; j < mm; ++j) {
      for (double sign : {1.0, -1.0}) {
        RowExpr e;
        e.add(nu + k * mm + j, sign);
        e.add(g_inf + k, -1.0);
        qp.add_ineq(e, 0.0);
      }
    }
    if (use_kx) {
      for (int j = 0; j < mm; ++j) {
        for (double sign : {1.0, -1.0}) {
          RowExpr e;
          e.add_block(x + k * n, sign * spec.K.row(j).transpose());
          e.add(h_inf + k, -1.0);
          qp.add_ineq(e, 0.0);
        }
      }
    }
  }
  // Tightened state rows: ||x_k||_inf expanded componentwise.
  for (int k = 0; k < L; ++k) {
    for (int i = 0; i < n; ++i) {
      for (double sign : {1.0, -1.0}) {
        RowExpr e;
        e.add(x + k * n + i, sign);
        const auto ki = static_cast<std::size_t>(k);
        if (t_nu >= 0 && spec.tc.a_u[ki] > 0.0) e.add(t_nu, spec.tc.a_u[ki]);
        if (t_alpha >= 0 && spec.tc.a_alpha[ki] > 0.0)
          e.add(t_alpha, spec.tc.a_alpha[ki]);
        if (spec.tc.a_sigma[ki] > 0.0) e.add(s_inf + k, spec.tc.a_sigma[ki]);
        qp.add_ineq(e, spec.x_max - spec.tc.a_c[ki]);
      }
    }
  }
  // Tightened input rows.
  for (int k = 0; k < L; ++k) {
    const auto ki = static_cast<std::size_t>(k);
    RowExpr e;
    e.add(g_inf + k, 1.0);
    if (t_nu >= 0 && spec.tc.b_u[ki] > 0.0) e.add(t_nu, spec.tc.b_u[ki]);
    if (t_alpha >= 0 && spec.tc.b_alpha[ki] > 0.0)
      e.add(t_alpha, spec.tc.b_alpha[ki]);
    if (spec.tc.b_sigma[ki] > 0.0) e.add(s_inf + k, spec.tc.b_sigma[ki]);
    if (use_kx) e.add(h_inf + k, 1.0);
    qp.add_ineq(e, spec.u_max - spec.tc.b_c[ki]);
  }
  const double wg = std::max(spec.w_max, 1e-12);
  for (int k = 0; k < L; ++k) {
    qp.add_quad_cost(nu + k * mm, spec.R);
    qp.add_quad_cost(x + k * n, spec.Q);
  }
  qp.add_diag_cost(alpha, cols, spec.lambda_alpha * wg);
  qp.add_diag_cost(sigma, traj, spec.lambda_sigma / wg);
  return qp;
}

namespace {

OcpSolution unpack_sf(const SfOcpSpec& spec, const QuadraticProgram& qp,
                      const QpSolution& sol) {
  const int n = spec.n;
  const int L = spec.L;
  const int mm = spec.m();
  const Vec nu_v = sol.value(qp.block("nu"));
  const Vec x_v = sol.value(qp.block("x"));
  const Mat nu_mat = Eigen::Map<const Mat>(nu_v.data(), mm, L);
  const Mat x_mat = Eigen::Map<const Mat>(x_v.data(), n, L + 1);
  Vec alpha = sol.value(qp.block("alpha"));
  Vec sigma = sol.value(qp.block("sigma"));
  double j = 0.0;
  for (int k = 0; k < L; ++k) {
    j += nu_mat.col(k).dot(spec.R * nu_mat.col(k));
    j += x_mat.col(k).dot(spec.Q * x_mat.col(k));
  }
  const double wg = std::max(spec.w_max, 1e-12);
  j += spec.lambda_alpha * wg * alpha.squaredNorm();
  j += spec.lambda_sigma / wg * sigma.squaredNorm();
  return {VecSequence(nu_mat), VecSequence(x_mat), std::move(alpha),
          std::move(sigma),    j,                  sol.status};
}

// Optimal solutions must satisfy the original constraints with recomputed
// norms; anything else is a solver defect, not a modeling outcome.
void verify_sf(const SfOcpSpec& spec, const Vec& x_t, const OcpSolution& s) {
  const int n = spec.n;
  const int L = spec.L;
  const int mm = spec.m();
  const int traj = n * (L + 1);
  Vec window(mm * L + traj);
  for (int k = 0; k < L; ++k)
    window.segment(k * mm, mm) = s.nu_bar.sample(k);
  for (int k = 0; k <= L; ++k)
    window.segment(mm * L + k * n, n) = s.x_bar.sample(k) + s.sigma.segment(k * n, n);
  Mat h(mm * L + traj, spec.h_nu.entries.cols());
  h.topRows(mm * L) = spec.h_nu.entries;
  h.bottomRows(traj) = spec.h_x.entries;
  const double eq_resid =
      std::max({(window - h * s.alpha).cwiseAbs().maxCoeff(),
                (s.x_bar.sample(0) - x_t).cwiseAbs().maxCoeff(),
                s.x_bar.sample(L).cwiseAbs().maxCoeff()});
  if (eq_resid > kEqSlack)
    throw solver_error("optimal solution violates the trajectory equalities");
  const double nu_l1 = s.nu_bar.data().cwiseAbs().sum();
  const double al_l1 = s.alpha.cwiseAbs().sum();
  for (int k = 0; k < L; ++k) {
    const auto ki = static_cast<std::size_t>(k);
    const double sig_inf = s.sigma.segment(k * n, n).cwiseAbs().maxCoeff();
    const double lhs_x = s.x_bar.sample(k).cwiseAbs().maxCoeff() +
                         spec.tc.a_u[ki] * nu_l1 + spec.tc.a_alpha[ki] * al_l1 +
                         spec.tc.a_sigma[ki] * sig_inf + spec.tc.a_c[ki];
    const double lhs_u =
        s.nu_bar.sample(k).cwiseAbs().maxCoeff() + spec.tc.b_u[ki] * nu_l1 +
        spec.tc.b_alpha[ki] * al_l1 + spec.tc.b_sigma[ki] * sig_inf +
        spec.tc.b_c[ki] + (spec.K * s.x_bar.sample(k)).cwiseAbs().maxCoeff();
    if (lhs_x > spec.x_max + kIneqSlack || lhs_u > spec.u_max + kIneqSlack)
      throw solver_error("optimal solution violates a tightened constraint");
  }
}

}  // namespace

OcpSolution solve_sf(const SfOcpSpec& spec, const Vec& x_t, QpWorkspace& ws) {
  const QuadraticProgram qp = assemble_sf(spec, x_t);
  const QpSolution sol = solve_qp(qp, ws, kSolveTol, kSolveMaxIter);
  if (sol.status == QpStatus::infeasible) {
    const auto [row, violation] = worst_row(qp, sol.z);
    std::ostringstream os;
    os << "state-feedback program infeasible at x_t = " << format_vec(x_t)
       << "; worst " << row << " violated by " << violation;
    throw feasibility_error(os.str());
  }
  OcpSolution out = unpack_sf(spec, qp, sol);
  if (out.status == QpStatus::optimal) verify_sf(spec, x_t, out);
  return out;
}

OcpSolution solve_sf(const SfOcpSpec& spec, const Vec& x_t) {
  QpWorkspace ws;
  return solve_sf(spec, x_t, ws);
}

void OfOcpSpec::validate() const {
  if (L < 1 || n < 1 || L < n)
    throw dimension_error("need L >= n >= 1");
  if (N < L + n + 1)
    throw dimension_error("need N >= L+n+1 data points");
  if (h_nu.depth != L + n || h_y.depth != L + n)
    throw dimension_error("both Hankel depths must equal L+n");
  const int cols = N - (L + n) + 1;
  if (h_nu.entries.cols() != cols || h_y.entries.cols() != cols)
    throw dimension_error("both Hankel blocks need N-(L+n)+1 columns");
  const int mm = m();
  const int pp = p();
  if (Q.rows() != pp || Q.cols() != pp || R.rows() != mm || R.cols() != mm)
    throw dimension_error("Q must be p x p and R must be m x m");
  if (min_eigenvalue(Q) < -1e-10)
    throw dimension_error("Q must be positive semidefinite");
  if (min_eigenvalue(R) <= 0.0)
    throw dimension_error("R must be positive definite");
  if (lambda_alpha <= 0.0 || lambda_sigma <= 0.0)
    throw dimension_error("regularization weights must be positive");
  if (w_max < 0.0) throw dimension_error("w_max must be nonnegative");
  if (y_max <= 0.0 || u_max <= 0.0)
    throw dimension_error("constraint bounds must be positive");
  if (K_tilde.rows() != mm || K_tilde.cols() != n * (mm + pp))
    throw dimension_error("K_tilde must be m x n(m+p)");
  if (eta.eta_a < 0.0 || eta.eta_b < 0.0 || eta.eta_c < 0.0 ||
      eta.eta_d < 0.0)
    throw dimension_error("eta constants must be nonnegative");
}

QuadraticProgram assemble_of(const OfOcpSpec& spec, const OfHistory& history,
                             const Vec& xi_t) {
  spec.validate();
  const int n = spec.n;
  const int L = spec.L;
  const int mm = spec.m();
  const int pp = spec.p();
  const int win = L + n;  // trajectory indices k = -n..L-1
  if (history.nu.length() != n || history.nu.dim() != mm)
    throw dimension_error("input history must hold n samples of dimension m");
  if (history.y.length() != n || history.y.dim() != pp)
    throw dimension_error("output history must hold n samples of dimension p");
  if (xi_t.size() != n * (mm + pp))
    throw dimension_error("xi_t must have n(m+p) entries");
  const int cols = spec.N - win + 1;
  QuadraticProgram qp;
  const int alpha = qp.add_block("alpha", cols);
  const int nu = qp.add_block("nu", mm * win);
  const int y = qp.add_block("y", pp * win);
  const int sigma = qp.add_block("sigma", pp * win);
  for (int row = 0; row < mm * win; ++row) {
    RowExpr e;
    e.add_block(alpha, spec.h_nu.entries.row(row).transpose());
    e.add(nu + row, -1.0);
    qp.add_eq(e, 0.0);
  }
  for (int row = 0; row < pp * win; ++row) {
    RowExpr e;
    e.add_block(alpha, spec.h_y.entries.row(row).transpose());
    e.add(y + row, -1.0);
    e.add(sigma + row, -1.0);
    qp.add_eq(e, 0.0);
  }
  // n-step initialization from the previous block and the measured outputs.
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < mm; ++j) {
      RowExpr e;
      e.add(nu + k * mm + j, 1.0);
      qp.add_eq(e, history.nu.sample(k)(j));
    }
    for (int i = 0; i < pp; ++i) {
      RowExpr e;
      e.add(y + k * pp + i, 1.0);
      qp.add_eq(e, history.y.sample(k)(i));
    }
  }
  // n-step terminal pinning of the last window entries.
  for (int k = L; k < win; ++k) {
    for (int j = 0; j < mm; ++j) {
      RowExpr e;
      e.add(nu + k * mm + j, 1.0);
      qp.add_eq(e, 0.0);
    }
    for (int i = 0; i < pp; ++i) {
      RowExpr e;
      e.add(y + k * pp + i, 1.0);
      qp.add_eq(e, 0.0);
    }
  }
  const int free = L - n;  // constrained prediction steps k = 0..L-n-1
  const double k_bar = spec.K_tilde.size()
                           ? spec.K_tilde.cwiseAbs().rowwise().sum().maxCoeff()
                           : 0.0;
  const double xi_inf = xi_t.size() ? xi_t.cwiseAbs().maxCoeff() : 0.0;
  if (free > 0) {
    const int g_inf = qp.add_block("nu_inf", free);
    for (int k = 0; k < free; ++k) {
      for (int j = 0; j < mm; ++j) {
        for (double sign : {1.0, -1.0}) {
          RowExpr e;
          e.add(nu + (k + n) * mm + j, sign);
          e.add(g_inf + k, -1.0);
          qp.add_ineq(e, 0.0);
        }
      }
    }
    // Powers of eta_a and the accumulated noise bound delta_k.
    std::vector<double> pow_a(static_cast<std::size_t>(free) + 1, 1.0);
    for (int k = 1; k <= free; ++k)
      pow_a[static_cast<std::size_t>(k)] =
          pow_a[static_cast<std::size_t>(k) - 1] * spec.eta.eta_a;
    std::vector<double> delta(static_cast<std::size_t>(free), 0.0);
    for (int k = 1; k < free; ++k)
      delta[static_cast<std::size_t>(k)] =
          delta[static_cast<std::size_t>(k) - 1] * spec.eta.eta_a + spec.w_max;
    for (int k = 0; k < free; ++k) {
      const auto ki = static_cast<std::size_t>(k);
      RowExpr input;
      RowExpr output;
      for (int i = 0; i < k; ++i) {
        const double weight =
            pow_a[static_cast<std::size_t>(k - 1 - i)] * spec.eta.eta_b;
        if (k_bar * weight > 0.0) input.add(g_inf + i, k_bar * weight);
        if (spec.eta.eta_c * weight > 0.0)
          output.add(g_inf + i, spec.eta.eta_c * weight);
      }
      input.add(g_inf + k, 1.0);
      qp.add_ineq(input, spec.u_max - k_bar * (pow_a[ki] * xi_inf + delta[ki]));
      if (spec.eta.eta_d > 0.0) output.add(g_inf + k, spec.eta.eta_d);
      qp.add_ineq(output,
                  spec.y_max - spec.eta.eta_c * (pow_a[ki] * xi_inf + delta[ki]));
    }
  }
  const double wg = std::max(spec.w_max, 1e-12);
  for (int k = n; k < win; ++k) {
    qp.add_quad_cost(nu + k * mm, spec.R);
    qp.add_quad_cost(y + k * pp, spec.Q);
  }
  qp.add_diag_cost(alpha, cols, spec.lambda_alpha * wg);
  qp.add_diag_cost(sigma, pp * win, spec.lambda_sigma / wg);
  return qp;
}

namespace {

OcpSolution unpack_of(const OfOcpSpec& spec, const QuadraticProgram& qp,
                      const QpSolution& sol) {
  const int n = spec.n;
  const int win = spec.L + n;
  const int mm = spec.m();
  const int pp = spec.p();
  const Vec nu_v = sol.value(qp.block("nu"));
  const Vec y_v = sol.value(qp.block("y"));
  const Mat nu_mat = Eigen::Map<const Mat>(nu_v.data(), mm, win);
  const Mat y_mat = Eigen::Map<const Mat>(y_v.data(), pp, win);
  Vec alpha = sol.value(qp.block("alpha"));
  Vec sigma = sol.value(qp.block("sigma"));
  double j = 0.0;
  for (int k = n; k < win; ++k) {
    j += nu_mat.col(k).dot(spec.R * nu_mat.col(k));
    j += y_mat.col(k).dot(spec.Q * y_mat.col(k));
  }
  const double wg = std::max(spec.w_max, 1e-12);
  j += spec.lambda_alpha * wg * alpha.squaredNorm();
  j += spec.lambda_sigma / wg * sigma.squaredNorm();
  return {VecSequence(nu_mat), VecSequence(y_mat), std::move(alpha),
          std::move(sigma),    j,                  sol.status};
}

void verify_of(const OfOcpSpec& spec, const OfHistory& history,
               const Vec& xi_t, const OcpSolution& s) {
  const int n = spec.n;
  const int L = spec.L;
  const int win = L + n;
  const int mm = spec.m();
  const int pp = spec.p();
  Vec window(mm * win + pp * win);
  for (int k = 0; k < win; ++k) {
    window.segment(k * mm, mm) = s.nu_bar.sample(k);
    window.segment(mm * win + k * pp, pp) =
        s.x_bar.sample(k) + s.sigma.segment(k * pp, pp);
  }
  Mat h(mm * win + pp * win, spec.h_nu.entries.cols());
  h.topRows(mm * win) = spec.h_nu.entries;
  h.bottomRows(pp * win) = spec.h_y.entries;
  double eq_resid = (window - h * s.alpha).cwiseAbs().maxCoeff();
  for (int k = 0; k < n; ++k) {
    eq_resid = std::max(
        eq_resid,
        (s.nu_bar.sample(k) - history.nu.sample(k)).cwiseAbs().maxCoeff());
    eq_resid = std::max(
        eq_resid,
        (s.x_bar.sample(k) - history.y.sample(k)).cwiseAbs().maxCoeff());
    eq_resid =
        std::max(eq_resid, s.nu_bar.sample(L + k).cwiseAbs().maxCoeff());
    eq_resid = std::max(eq_resid, s.x_bar.sample(L + k).cwiseAbs().maxCoeff());
  }
  if (eq_resid > kEqSlack)
    throw solver_error("optimal solution violates the trajectory equalities");
  const double k_bar = spec.K_tilde.size()
                           ? spec.K_tilde.cwiseAbs().rowwise().sum().maxCoeff()
                           : 0.0;
  const double xi_inf = xi_t.size() ? xi_t.cwiseAbs().maxCoeff() : 0.0;
  double pow_a = 1.0;
  double delta = 0.0;
  for (int k = 0; k < L - n; ++k) {
    double tail = 0.0;
    double weight = spec.eta.eta_b;  // eta_A^{k-1-i} eta_B at i = k-1
    for (int i = k - 1; i >= 0; --i) {
      tail += weight * s.nu_bar.sample(i + n).cwiseAbs().maxCoeff();
      weight *= spec.eta.eta_a;
    }
    const double own = s.nu_bar.sample(k + n).cwiseAbs().maxCoeff();
    const double lhs_u = k_bar * (pow_a * xi_inf + tail + delta) + own;
    const double lhs_y = spec.eta.eta_c * (pow_a * xi_inf + tail + delta) +
                         spec.eta.eta_d * own;
    if (lhs_u > spec.u_max + kIneqSlack || lhs_y > spec.y_max + kIneqSlack)
      throw solver_error("optimal solution violates a tightened constraint");
    pow_a *= spec.eta.eta_a;
    delta = delta * spec.eta.eta_a + spec.w_max;
  }
}

}  // namespace

OcpSolution solve_of(const OfOcpSpec& spec, const OfHistory& history,
                     const Vec& xi_t, QpWorkspace& ws) {
  const QuadraticProgram qp = assemble_of(spec, history, xi_t);
  const QpSolution sol = solve_qp(qp, ws, kSolveTol, kSolveMaxIter);
  if (sol.status == QpStatus::infeasible) {
    const auto [row, violation] = worst_row(qp, sol.z);
    std::ostringstream os;
    os << "output-feedback program infeasible at xi_t = " << format_vec(xi_t)
       << "; worst " << row << " violated by " << violation;
    throw feasibility_error(os.str());
  }
  OcpSolution out = unpack_of(spec, qp, sol);
  if (out.status == QpStatus::optimal) verify_of(spec, history, xi_t, out);
  return out;
}

OcpSolution solve_of(const OfOcpSpec& spec, const OfHistory& history,
                     const Vec& xi_t) {
  QpWorkspace ws;
  return solve_of(spec, history, xi_t, ws);
}

}  // namespace ddmpc
