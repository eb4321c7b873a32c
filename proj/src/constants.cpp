#include "ddmpc/constants.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ddmpc/errors.hpp"
#include "ddmpc/qp.hpp"

namespace ddmpc {

namespace {

double lambda_min(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// Max over tau >= 0 of lambda_min(P1 - tau*P2), concave in tau. Returns
// early once a value certifies feasibility against tol_psd.
double inner_max(const Mat& p1, const Mat& p2, double tol_psd) {
  auto g = [&](double tau) { return lambda_min(p1 - tau * p2); };
  const double g0 = g(0.0);
  if (g0 >= tol_psd) return g0;
  double glo = g0, hi = 1.0, ghi = g(hi);
  if (ghi >= tol_psd) return ghi;
  while (ghi > glo) {  // still ascending: peak not yet bracketed
    glo = ghi;
    hi *= 2.0;
    ghi = g(hi);
    if (ghi >= tol_psd) return ghi;
    if (hi > 1e16) break;
  }
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = hi;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double gc = g(c), gd = g(d);
  double best = std::max({g0, glo, gc, gd});
  for (int it = 0; it < 200 && b - a > 1e-8 * std::max(1.0, b); ++it) {
    if (best >= tol_psd) return best;
    if (gc > gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - gr * (b - a);
      gc = g(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + gr * (b - a);
      gd = g(d);
    }
    best = std::max({best, gc, gd});
  }
  return best;
}

Vec cumulative_sums_scaled(const std::vector<double>& rho, double w_max) {
  Vec dbar = Vec::Zero(static_cast<int>(rho.size()));
  for (int k = 1; k < dbar.size(); ++k)
    dbar(k) = dbar(k - 1) + w_max * rho[static_cast<std::size_t>(k) - 1];
  return dbar;
}

}  // namespace

std::string to_string(Provenance p) {
  return p == Provenance::oracle ? "oracle" : "data-driven";
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "oracle") return Provenance::oracle;
  if (s == "data-driven" || s == "data") return Provenance::data_driven;
  throw io_error("unknown provenance tag '" + s + "'");
}

void SystemConstants::validate() const {
  if (rho.empty() || rho.size() != dbar.size())
    throw dimension_error("rho and dbar must be nonempty and equally sized");
  if (std::abs(rho[0] - 1.0) > 1e-12)
    throw estimation_error("rho_0 must equal 1");
  if (std::abs(dbar[0]) > 1e-12) throw estimation_error("dbar_0 must equal 0");
  if (c_pe < 0.0 || gamma < 0.0 || k_bar < 0.0 || w_max < 0.0)
    throw estimation_error("system constants must be nonnegative");
  for (std::size_t k = 0; k + 1 < dbar.size(); ++k) {
    if (rho[k] < 0.0) throw estimation_error("rho entries must be nonnegative");
    const double step = dbar[k + 1] - dbar[k];
    const double want = w_max * rho[k];
    if (step < -1e-12 ||
        std::abs(step - want) > 1e-9 * std::max(1.0, std::abs(want)))
      throw estimation_error("dbar must accumulate w_max * rho_k");
  }
}

SLemmaProblem consistency_problem(const Mat& s, const Mat& r, double energy,
                                  int sel_offset, int sel_size, const Mat& e,
                                  const std::string& label) {
  const int d1 = static_cast<int>(s.rows());
  const int di = static_cast<int>(r.rows());
  if (s.cols() != r.cols())
    throw dimension_error("regressor and response need equal column counts");
  if (e.rows() != di)
    throw dimension_error("noise shape matrix must match the response rows");
  if (sel_offset < 0 || sel_size < 1 || sel_offset + sel_size > d1)
    throw dimension_error("selector outside the stacked unknown");
  if (energy < 0.0) throw dimension_error("noise energy must be nonnegative");
  SLemmaProblem prob;
  prob.label = label;
  prob.p2.resize(d1 + di, d1 + di);
  prob.p2.topLeftCorner(d1, d1) = -s * s.transpose();
  prob.p2.topRightCorner(d1, di) = s * r.transpose();
  prob.p2.bottomLeftCorner(di, d1) = r * s.transpose();
  prob.p2.bottomRightCorner(di, di) =
      energy * (e * e.transpose()) - r * r.transpose();
  const double fro = prob.p2.norm();
  if (fro > 0.0) prob.p2 /= fro;
  const int dim = d1 + di;
  prob.p1 = [dim, di, sel_offset, sel_size](double sigma_sq) {
    Vec diag = Vec::Zero(dim);
    diag.segment(sel_offset, sel_size).setConstant(-1.0);
    diag.tail(di).setConstant(sigma_sq);
    return Mat(diag.asDiagonal());
  };
  return prob;
}

double slemma_min_sigma(const SLemmaProblem& prob, double tol, double cap) {
  auto feasible = [&](double sigma_sq) {
    const Mat p1 = prob.p1(sigma_sq);
    const double tol_psd = -1e-9 * p1.norm();
    return inner_max(p1, prob.p2, tol_psd) >= tol_psd;
  };
  double lo = 0.0, hi = 1.0;
  while (!feasible(hi)) {
    hi *= 2.0;
    if (hi > cap)
      throw estimation_error("norm bound '" + prob.label +
                             "' infeasible below the cap");
  }
  int it = 0;
  for (; it < 200 && hi - lo > tol * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  if (hi - lo > tol * std::max(1.0, hi))
    throw estimation_error("bisection for '" + prob.label +
                           "' did not reach the tolerance");
  return hi;  // certified-feasible upper end of the bracket
}

RhoDbar estimate_rho_dbar(const DataSet& data, int horizon) {
  data.validate();
  if (!data.state)
    throw dimension_error("estimate_rho_dbar needs a state-feedback dataset");
  if (horizon < 0) throw dimension_error("horizon must be nonnegative");
  const Mat& x = data.state->data();
  const Mat& nu = data.nu.data();
  const int n = static_cast<int>(x.rows());
  const int m = static_cast<int>(nu.rows());
  const int big_n = data.length();
  if (horizon > big_n)
    throw dimension_error("horizon exceeds the recorded data length");
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  // Spectral-norm bounds sigma_k >= ||A_K^k||_2; the k-step regressor stacks
  // the initial state over the applied k-input window, the noise energy uses
  // the already certified shorter-step bounds.
  std::vector<double> sigma{1.0};
  double sigma_sum = 0.0;
  for (int k = 1; k <= horizon; ++k) {
    sigma_sum += sigma[static_cast<std::size_t>(k) - 1];
    const int t_ck = big_n - k + 1;
    Mat s(n + m * k, t_ck);
    s.topRows(n) = x.leftCols(t_ck);
    for (int i = 0; i < k; ++i)
      s.middleRows(n + i * m, m) = nu.middleCols(i, t_ck);
    const Mat r = x.middleCols(k, t_ck);
    const double e_k = sqrt_n * data.w_max * sigma_sum;
    const double energy = t_ck * e_k * e_k;
    const double sigma_sq = slemma_min_sigma(
        consistency_problem(s, r, energy, 0, n, Mat::Identity(n, n),
                            "rho_" + std::to_string(k)),
        1e-6, 1e12);
    double bound = std::sqrt(sigma_sq);
    for (int j = 1; j < k; ++j)
      bound = std::min(bound, sigma[static_cast<std::size_t>(j)] *
                                  sigma[static_cast<std::size_t>(k - j)]);
    sigma.push_back(bound);
  }
  RhoDbar out;
  out.rho.resize(static_cast<std::size_t>(horizon) + 1);
  out.rho[0] = 1.0;
  for (int k = 1; k <= horizon; ++k)
    out.rho[static_cast<std::size_t>(k)] =
        sqrt_n * sigma[static_cast<std::size_t>(k)];
  const Vec dbar = cumulative_sums_scaled(out.rho, data.w_max);
  out.dbar.assign(dbar.data(), dbar.data() + dbar.size());
  return out;
}

double estimate_cpe(const DataSet& data, int L) {
  data.validate();
  if (!data.state)
    throw dimension_error("estimate_cpe needs a state-feedback dataset");
  const int big_n = data.length();
  if (L < 1 || big_n < L)
    throw dimension_error("estimate_cpe needs 1 <= L <= N");
  const HankelMatrix h_nu = build_hankel(data.nu, L);
  const Mat x0 = data.state->data().leftCols(big_n - L + 1);
  Mat h_ux(h_nu.entries.rows() + x0.rows(), h_nu.entries.cols());
  h_ux.topRows(h_nu.entries.rows()) = h_nu.entries;
  h_ux.bottomRows(x0.rows()) = x0;
  if (h_ux.norm() == 0.0)
    throw estimation_error("all-zero data admits no excitation constant");
  const Mat pinv = pseudo_inverse(h_ux);
  return pinv.cwiseAbs().colwise().sum().maxCoeff();
}

double estimate_gamma(const DataSet& data, double x_max, double w_max,
                      double lambda_alpha, double lambda_sigma) {
  data.validate();
  if (!data.state)
    throw dimension_error("estimate_gamma needs a state-feedback dataset");
  const int n = data.state->dim();
  const int m = data.nu.dim();
  if (n > 12)
    throw config_error("vertex enumeration is capped at 12 states, got " +
                       std::to_string(n));
  if (x_max <= 0.0) throw config_error("x_max must be positive");
  if (w_max < 0.0) throw config_error("w_max must be nonnegative");
  if (lambda_alpha <= 0.0 || lambda_sigma <= 0.0)
    throw config_error("regularization weights must be positive");
  if (!pe_order_check(data.nu, 2 * n + 1))
    throw excitation_error(
        "estimate_gamma needs excitation persistently exciting of order 2n+1");
  const double w_guard = std::max(w_max, 1e-12);
  const HankelMatrix h_nu = build_hankel(data.nu, n);
  const HankelMatrix h_x = build_hankel(*data.state, n + 1);
  const int cols = static_cast<int>(h_nu.entries.cols());
  const int traj = n * (n + 1);  // stacked state window x_0..x_n
  QpWorkspace ws;
  double gamma = 0.0;
  for (long vertex = 0; vertex < (1L << n); ++vertex) {
    QuadraticProgram qp;
    const int alpha = qp.add_block("alpha", cols);
    const int nu = qp.add_block("nu", m * n);
    const int xvar = qp.add_block("x", traj);
    const int sigma = qp.add_block("sigma", traj);
    for (int row = 0; row < m * n; ++row) {
      RowExpr expr;
      expr.add_block(alpha, h_nu.entries.row(row).transpose());
      expr.add(nu + row, -1.0);
      qp.add_eq(expr, 0.0);
    }
    for (int row = 0; row < traj; ++row) {
      RowExpr expr;
      expr.add_block(alpha, h_x.entries.row(row).transpose());
      expr.add(xvar + row, -1.0);
      expr.add(sigma + row, -1.0);
      qp.add_eq(expr, 0.0);
    }
    for (int i = 0; i < n; ++i) {
      RowExpr head;
      head.add(xvar + i, 1.0);
      qp.add_eq(head, (vertex >> i) & 1 ? x_max : -x_max);
      RowExpr tail;
      tail.add(xvar + n * n + i, 1.0);
      qp.add_eq(tail, 0.0);
    }
    const int t = epigraph_abs(qp, qp.block("nu"), "nu_l1");
    Vec unit(1);
    unit(0) = 1.0;
    qp.add_lin_cost(t, unit);
    qp.add_diag_cost(alpha, cols, lambda_alpha * w_guard);
    qp.add_diag_cost(sigma, traj, lambda_sigma / w_guard);
    const QpSolution sol = solve_qp(qp, ws);
    if (sol.status == QpStatus::infeasible)
      throw estimation_error("controllability vertex subproblem infeasible");
    if (sol.status != QpStatus::optimal)
      throw solver_error("controllability vertex subproblem did not converge");
    gamma = std::max(
        gamma, sol.value(qp.block("nu")).lpNorm<1>() / x_max);
  }
  return gamma;
}

EtaConstants estimate_etas(const DataSet& data, double w_tilde_max) {
  data.validate();
  if (!data.output)
    throw dimension_error("estimate_etas needs an output-feedback dataset");
  const int m = data.nu.dim();
  const int p = data.output->dim();
  if (data.gain.rows() != m || data.gain.cols() <= 0 ||
      data.gain.cols() % (m + p) != 0)
    throw dimension_error("recorded gain must be m x n(m+p)");
  const int n = static_cast<int>(data.gain.cols()) / (m + p);
  const int big_n = data.length();
  const int t_c = big_n - n;
  if (t_c < 1) throw dimension_error("dataset shorter than the model order");
  if (w_tilde_max < 0.0)
    throw dimension_error("noise bound must be nonnegative");
  const int nxi = n * (m + p);
  const int ob = n * m;  // start of the output history block
  const Mat& y = data.output->data();
  const Mat& nu = data.nu.data();
  // Extended states from the recorded inputs/outputs; the applied input is
  // reconstructed through the recorded gain from a zero pre-history.
  Mat xi = Mat::Zero(nxi, big_n + 1);
  for (int k = 0; k < big_n; ++k) {
    const Vec u = data.gain * xi.col(k) + nu.col(k);
    Vec next(nxi);
    if (n > 1) {
      next.segment(0, ob - m) = xi.col(k).segment(m, ob - m);
      next.segment(ob, (n - 1) * p) = xi.col(k).segment(ob + p, (n - 1) * p);
    }
    next.segment(ob - m, m) = u;
    next.segment(ob + (n - 1) * p, p) = y.col(k);
    xi.col(k + 1) = next;
  }
  Mat s(nxi + m, t_c);
  s.topRows(nxi) = xi.middleCols(n, t_c);
  s.bottomRows(m) = nu.middleCols(n, t_c);
  const Mat x_plus = xi.middleCols(n + 1, t_c);
  const Mat y_mat = y.middleCols(n, t_c);
  Mat e_state = Mat::Zero(nxi, p);  // noise enters the newest output slot
  e_state.block(ob + (n - 1) * p, 0, p, p).setIdentity();
  const Mat e_out = Mat::Identity(p, p);
  const double energy = n * w_tilde_max * w_tilde_max * t_c;
  const double sq_nxi = std::sqrt(static_cast<double>(nxi));
  const double sq_m = std::sqrt(static_cast<double>(m));
  EtaConstants eta;
  eta.eta_a = sq_nxi * std::sqrt(slemma_min_sigma(
                           consistency_problem(s, x_plus, energy, 0, nxi,
                                               e_state, "eta_a"),
                           1e-6, 1e12));
  eta.eta_b = sq_m * std::sqrt(slemma_min_sigma(
                         consistency_problem(s, x_plus, energy, nxi, m,
                                             e_state, "eta_b"),
                         1e-6, 1e12));
  eta.eta_c = sq_nxi * std::sqrt(slemma_min_sigma(
                           consistency_problem(s, y_mat, energy, 0, nxi,
                                               e_out, "eta_c"),
                           1e-6, 1e12));
  eta.eta_d = sq_m * std::sqrt(slemma_min_sigma(
                         consistency_problem(s, y_mat, energy, nxi, m, e_out,
                                             "eta_d"),
                         1e-6, 1e12));
  return eta;
}

SystemConstants oracle_constants(const LtiPlant& plant, const Mat& K, int L,
                                 int N, double w_max) {
  if (K.rows() != plant.m() || K.cols() != plant.n())
    throw dimension_error("gain must be m x n");
  if (L < 1 || N < L + 1) throw dimension_error("need 1 <= L <= N-1");
  if (w_max < 0.0) throw dimension_error("w_max must be nonnegative");
  const int n = plant.n();
  const int m = plant.m();
  if (n > 12)
    throw config_error("vertex enumeration is capped at 12 states, got " +
                       std::to_string(n));
  const Mat a_k = plant.A + plant.B * K;
  SystemConstants c;
  c.provenance = Provenance::oracle;
  c.w_max = w_max;
  c.k_bar = K.size() ? K.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
  c.rho.resize(static_cast<std::size_t>(N) + 1);
  Mat power = Mat::Identity(n, n);
  for (int k = 0; k <= N; ++k) {
    c.rho[static_cast<std::size_t>(k)] =
        power.cwiseAbs().rowwise().sum().maxCoeff();
    power = a_k * power;
  }
  const Vec dbar = cumulative_sums_scaled(c.rho, w_max);
  c.dbar.assign(dbar.data(), dbar.data() + dbar.size());
  // c_pe from regenerated noise-free excitation; the median over fixed seeds
  // removes the dependence on any single random draw.
  std::vector<double> cpes;
  const VecSequence w_zero(Mat::Zero(n, N));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const VecSequence nu = generate_pe_input(m, N, 1.0, L + n + 1, seed);
    DataSet run = collect_state_data(plant, K, nu, w_zero, Vec::Zero(n));
    cpes.push_back(estimate_cpe(run, L));
  }
  std::sort(cpes.begin(), cpes.end());
  c.c_pe = cpes[cpes.size() / 2];
  // Gamma: exact n-step steering, min ||nu||_1 s.t. C_n nu = -A_K^n v over
  // the unit-box vertices (the bound is homogeneous in the vertex scale).
  Mat ctrb(n, n * m);
  Mat reach = plant.B;
  for (int i = n - 1; i >= 0; --i) {
    ctrb.middleCols(i * m, m) = reach;
    reach = a_k * reach;
  }
  Mat power_n = Mat::Identity(n, n);
  for (int i = 0; i < n; ++i) power_n = a_k * power_n;
  QpWorkspace ws;
  double gamma = 0.0;
  for (long vertex = 0; vertex < (1L << n); ++vertex) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = (vertex >> i) & 1 ? 1.0 : -1.0;
    QuadraticProgram qp;
    const int nu = qp.add_block("nu", n * m);
    const Vec target = -(power_n * v);
    for (int row = 0; row < n; ++row) {
      RowExpr expr;
      expr.add_block(nu, ctrb.row(row).transpose());
      qp.add_eq(expr, target(row));
    }
    const int t = epigraph_abs(qp, qp.block("nu"), "nu_l1");
    Vec unit(1);
    unit(0) = 1.0;
    qp.add_lin_cost(t, unit);
    const QpSolution sol = solve_qp(qp, ws);
    if (sol.status != QpStatus::optimal)
      throw solver_error("oracle controllability program did not converge");
    gamma = std::max(gamma, sol.value(qp.block("nu")).lpNorm<1>());
  }
  c.gamma = gamma;
  c.validate();
  return c;
}

namespace {

void write_list(std::ostream& os, const std::string& key,
                const std::vector<double>& values, Provenance p) {
  os << "[" << key << "]\n";
  os << "provenance = " << to_string(p) << "\n";
  os << "values =";
  char buf[64];
  for (double v : values) {
    std::snprintf(buf, sizeof(buf), " %.17g", v);
    os << buf;
  }
  os << "\n\n";
}

void write_scalar(std::ostream& os, const std::string& key, double value,
                  Provenance p) {
  os << "[" << key << "]\n";
  os << "provenance = " << to_string(p) << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  os << "value = " << buf << "\n\n";
}

}  // namespace

void save_constants(const std::string& path, const SystemConstants& c) {
  std::ofstream os(path);
  if (!os) throw io_error("cannot open '" + path + "' for writing");
  os << "# system constants\n\n";
  write_scalar(os, "w_max", c.w_max, c.provenance);
  write_scalar(os, "k_bar", c.k_bar, c.provenance);
  write_scalar(os, "c_pe", c.c_pe, c.provenance);
  write_scalar(os, "gamma", c.gamma, c.provenance);
  write_list(os, "rho", c.rho, c.provenance);
  write_list(os, "dbar", c.dbar, c.provenance);
  if (c.eta) {
    write_scalar(os, "eta_a", c.eta->eta_a, c.provenance);
    write_scalar(os, "eta_b", c.eta->eta_b, c.provenance);
    write_scalar(os, "eta_c", c.eta->eta_c, c.provenance);
    write_scalar(os, "eta_d", c.eta->eta_d, c.provenance);
  }
  if (!os) throw io_error("failed writing '" + path + "'");
}

SystemConstants load_constants(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open constants file '" + path + "'");
  SystemConstants c;
  std::string line, section;
  bool have_prov = false;
  std::optional<double> ea, eb, ec, ed;
  while (std::getline(is, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    line = line.substr(first);
    if (line.front() == '[') {
      const auto close = line.find(']');
      if (close == std::string::npos)
        throw io_error("malformed section header in '" + path + "'");
      section = line.substr(1, close - 1);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw io_error("malformed line in '" + path + "': " + line);
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& t) {
      const auto b = t.find_first_not_of(" \t\r");
      const auto e = t.find_last_not_of(" \t\r");
      t = b == std::string::npos ? "" : t.substr(b, e - b + 1);
    };
    trim(key);
    trim(value);
    if (key == "provenance") {
      const Provenance p = provenance_from_string(value);
      if (have_prov && p != c.provenance)
        throw io_error("mixed provenance tags in '" + path + "'");
      c.provenance = p;
      have_prov = true;
      continue;
    }
    std::istringstream vs(value);
    if (key == "values") {
      std::vector<double> values;
      double v;
      while (vs >> v) values.push_back(v);
      if (section == "rho")
        c.rho = std::move(values);
      else if (section == "dbar")
        c.dbar = std::move(values);
      else
        throw io_error("unexpected list section '" + section + "'");
      continue;
    }
    if (key != "value")
      throw io_error("unexpected key '" + key + "' in '" + path + "'");
    double v;
    if (!(vs >> v)) throw io_error("unparsable value in '" + path + "'");
    if (section == "w_max")
      c.w_max = v;
    else if (section == "k_bar")
      c.k_bar = v;
    else if (section == "c_pe")
      c.c_pe = v;
    else if (section == "gamma")
      c.gamma = v;
    else if (section == "eta_a")
      ea = v;
    else if (section == "eta_b")
      eb = v;
    else if (section == "eta_c")
      ec = v;
    else if (section == "eta_d")
      ed = v;
    else
      throw io_error("unexpected scalar section '" + section + "'");
  }
  if (ea || eb || ec || ed) {
    if (!(ea && eb && ec && ed))
      throw io_error("incomplete eta block in '" + path + "'");
    c.eta = EtaConstants{*ea, *eb, *ec, *ed};
  }
  c.validate();
  return c;
}

}  // namespace ddmpc
