#include "ddmpc/qp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

namespace ddmpc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

RowExpr& RowExpr::add(int index, double coeff) {
  if (coeff != 0.0) terms_.emplace_back(index, coeff);
  return *this;
}

RowExpr& RowExpr::add_block(int offset, const Vec& coeffs) {
  for (int i = 0; i < coeffs.size(); ++i)
    if (coeffs(i) != 0.0) terms_.emplace_back(offset + i, coeffs(i));
  return *this;
}

int QuadraticProgram::add_block(const std::string& name, int size) {
  if (size < 1) throw dimension_error("variable block needs size >= 1");
  if (blocks_.count(name))
    throw dimension_error("variable block '" + name + "' already exists");
  const int offset = num_vars_;
  blocks_[name] = {offset, size};
  num_vars_ += size;
  dirty_ = true;
  return offset;
}

VarBlock QuadraticProgram::block(const std::string& name) const {
  auto it = blocks_.find(name);
  if (it == blocks_.end())
    throw dimension_error("unknown variable block '" + name + "'");
  return it->second;
}

bool QuadraticProgram::has_block(const std::string& name) const {
  return blocks_.count(name) > 0;
}

void QuadraticProgram::add_quad_cost(int offset, const Mat& q) {
  if (q.rows() != q.cols())
    throw dimension_error("quadratic cost block must be square");
  if (offset < 0 || offset + q.rows() > num_vars_)
    throw dimension_error("quadratic cost block out of range");
  quad_cost_.emplace_back(offset, q);
  dirty_ = true;
}

void QuadraticProgram::add_diag_cost(int offset, int size, double weight) {
  add_quad_cost(offset, weight * Mat::Identity(size, size));
}

void QuadraticProgram::add_lin_cost(int offset, const Vec& c) {
  if (offset < 0 || offset + c.size() > num_vars_)
    throw dimension_error("linear cost block out of range");
  lin_cost_.emplace_back(offset, c);
  dirty_ = true;
}

void QuadraticProgram::add_eq(const RowExpr& row, double rhs) {
  eq_rows_.push_back(row.terms());
  eq_rhs_.push_back(rhs);
  dirty_ = true;
}

void QuadraticProgram::add_ineq(const RowExpr& row, double rhs) {
  in_rows_.push_back(row.terms());
  in_rhs_.push_back(rhs);
  dirty_ = true;
}

void QuadraticProgram::assemble() const {
  if (!dirty_) return;
  h_ = Mat::Zero(num_vars_, num_vars_);
  for (const auto& [offset, q] : quad_cost_)
    h_.block(offset, offset, q.rows(), q.cols()) += q;
  h_ = 0.5 * (h_ + h_.transpose()).eval();
  f_ = Vec::Zero(num_vars_);
  for (const auto& [offset, c] : lin_cost_) f_.segment(offset, c.size()) += c;

  auto build = [this](const std::vector<std::vector<std::pair<int, double>>>& rows,
                      const std::vector<double>& rhs, Mat& a, Vec& b) {
    a = Mat::Zero(static_cast<int>(rows.size()), num_vars_);
    b = Vec::Zero(static_cast<int>(rhs.size()));
    for (size_t i = 0; i < rows.size(); ++i) {
      for (const auto& [j, v] : rows[i]) {
        if (j < 0 || j >= num_vars_)
          throw dimension_error("constraint row index out of range");
        a(static_cast<int>(i), j) += v;
      }
      b(static_cast<int>(i)) = rhs[i];
    }
  };
  build(eq_rows_, eq_rhs_, a_eq_, b_eq_);
  build(in_rows_, in_rhs_, a_in_, b_in_);
  dirty_ = false;
}

const Mat& QuadraticProgram::H() const { assemble(); return h_; }
const Vec& QuadraticProgram::f() const { assemble(); return f_; }
const Mat& QuadraticProgram::A_eq() const { assemble(); return a_eq_; }
const Vec& QuadraticProgram::b_eq() const { assemble(); return b_eq_; }
const Mat& QuadraticProgram::A_in() const { assemble(); return a_in_; }
const Vec& QuadraticProgram::b_in() const { assemble(); return b_in_; }

double QuadraticProgram::objective(const Vec& z) const {
  assemble();
  return z.dot(h_ * z) + f_.dot(z);
}

void QuadraticProgram::dump(std::ostream& os) const {
  assemble();
  os << "vars " << num_vars_ << "\n";
  for (const auto& [name, b] : blocks_)
    os << "block " << name << " " << b.offset << " " << b.size << "\n";
  auto emit = [&os](const char* label, const Mat& m) {
    os << label << " " << m.rows() << " " << m.cols() << "\n";
    for (int i = 0; i < m.rows(); ++i) {
      for (int j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
      os << "\n";
    }
  };
  emit("H", h_);
  emit("f", f_);
  emit("A_eq", a_eq_);
  emit("b_eq", b_eq_);
  emit("A_in", a_in_);
  emit("b_in", b_in_);
}

double KktResiduals::worst() const {
  return std::max(std::max(stationarity, primal),
                  std::max(dual, complementarity));
}

// ---------------------------------------------------------------------------
// Operator-splitting backend. Internal form: minimize 0.5 z'Pz + q'z subject
// to l <= Az <= u, with P = 2H. Equalities use l = u; inequalities l = -inf.
// ---------------------------------------------------------------------------

struct QpWorkspace::Impl {
  // Structure stamp: refactor when the quadratic or constraint data changes.
  Eigen::Index n = -1, m = -1;
  double h_sum = 0.0, a_sum = 0.0;

  Mat p_s, a_s;       // scaled P, A
  Vec d, e;           // variable / constraint scalings
  double c = 1.0;     // cost scaling
  Vec rho, rho_inv;
  double rho_bar = 0.1;
  Eigen::PartialPivLU<Mat> kkt;
  Vec warm_x, warm_y, warm_w;  // scaled iterates
  bool has_warm = false;
};

QpWorkspace::QpWorkspace() : impl_(std::make_unique<Impl>()) {}
QpWorkspace::~QpWorkspace() = default;
QpWorkspace::QpWorkspace(QpWorkspace&&) noexcept = default;
QpWorkspace& QpWorkspace::operator=(QpWorkspace&&) noexcept = default;

namespace {

struct Problem {
  Mat p;  // 2H, symmetric
  Vec q;
  Mat a;  // eq rows stacked over ineq rows
  Vec l, u;
  int n = 0, m = 0, m_eq = 0;
};

double checksum(const Mat& m) {
  double s = 0.0;
  const double* ptr = m.data();
  for (Eigen::Index i = 0; i < m.size(); ++i)
    s += ptr[i] * static_cast<double>(i % 97 + 1);
  return s;
}

// Modified Ruiz equilibration of [P A'; A 0] plus cost normalization.
void equilibrate(const Problem& prob, QpWorkspace::Impl& ws) {
  const int n = prob.n, m = prob.m;
  ws.d = Vec::Ones(n);
  ws.e = Vec::Ones(m);
  ws.c = 1.0;
  ws.p_s = prob.p;
  ws.a_s = prob.a;
  Vec q_s = prob.q;
  for (int pass = 0; pass < 10; ++pass) {
    Vec dv(n), ev(m);
    for (int j = 0; j < n; ++j) {
      double col = ws.p_s.col(j).cwiseAbs().maxCoeff();
      if (m > 0) col = std::max(col, ws.a_s.col(j).cwiseAbs().maxCoeff());
      dv(j) = col > 1e-12 ? 1.0 / std::sqrt(col) : 1.0;
      dv(j) = std::clamp(dv(j), 1e-4, 1e4);
    }
    for (int i = 0; i < m; ++i) {
      const double row = ws.a_s.row(i).cwiseAbs().maxCoeff();
      ev(i) = row > 1e-12 ? 1.0 / std::sqrt(row) : 1.0;
      ev(i) = std::clamp(ev(i), 1e-4, 1e4);
    }
    ws.p_s = dv.asDiagonal() * ws.p_s * dv.asDiagonal();
    if (m > 0) ws.a_s = ev.asDiagonal() * ws.a_s * dv.asDiagonal();
    q_s = dv.asDiagonal() * q_s;
    ws.d = ws.d.cwiseProduct(dv);
    ws.e = ws.e.cwiseProduct(ev);
    // Cost normalization keeps the quadratic block comparable to A.
    double mean_col = 0.0;
    for (int j = 0; j < n; ++j)
      mean_col += ws.p_s.col(j).cwiseAbs().maxCoeff();
    mean_col /= std::max(1, n);
    const double gamma_den = std::max(mean_col, q_s.cwiseAbs().maxCoeff());
    const double gamma = gamma_den > 1e-12 ? 1.0 / gamma_den : 1.0;
    const double g = std::clamp(gamma, 1e-4, 1e4);
    ws.p_s *= g;
    q_s *= g;
    ws.c *= g;
  }
}

void factor_kkt(QpWorkspace::Impl& ws, double sigma) {
  const int n = static_cast<int>(ws.p_s.rows());
  const int m = static_cast<int>(ws.a_s.rows());
  Mat kkt = Mat::Zero(n + m, n + m);
  kkt.topLeftCorner(n, n) = ws.p_s + sigma * Mat::Identity(n, n);
  if (m > 0) {
    kkt.topRightCorner(n, m) = ws.a_s.transpose();
    kkt.bottomLeftCorner(m, n) = ws.a_s;
    kkt.bottomRightCorner(m, m) = (-ws.rho_inv).asDiagonal();
  }
  ws.kkt.compute(kkt);
}

void set_rho(QpWorkspace::Impl& ws, const Problem& prob) {
  ws.rho = Vec::Constant(prob.m, ws.rho_bar);
  ws.rho.head(prob.m_eq).setConstant(1e3 * ws.rho_bar);
  ws.rho_inv = ws.rho.cwiseInverse();
}

KktResiduals compute_residuals(const Problem& prob, const Vec& z, const Vec& y) {
  KktResiduals r;
  Vec grad = prob.p * z + prob.q;
  if (prob.m > 0) grad += prob.a.transpose() * y;
  r.stationarity = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
  if (prob.m > 0) {
    Vec az = prob.a * z;
    for (int i = 0; i < prob.m; ++i) {
      const double over = az(i) - prob.u(i);
      const double under =
          prob.l(i) == -kInf ? -kInf : prob.l(i) - az(i);
      r.primal = std::max(r.primal, std::max(over, under));
      if (i >= prob.m_eq) {
        r.dual = std::max(r.dual, -y(i));
        r.complementarity =
            std::max(r.complementarity, std::abs(y(i) * (az(i) - prob.u(i))));
      }
    }
    r.primal = std::max(r.primal, 0.0);
    r.dual = std::max(r.dual, 0.0);
  }
  return r;
}

// Active-set refinement: solve the KKT system of the constraints the ADMM
// solution pins, with tiny regularization and iterative refinement.
bool polish(const Problem& prob, Vec& z, Vec& y, KktResiduals& kkt) {
  std::vector<int> active;
  Vec az = prob.m > 0 ? Vec(prob.a * z) : Vec();
  const double y_scale =
      prob.m > 0 && y.size() ? std::max(1.0, y.cwiseAbs().maxCoeff()) : 1.0;
  for (int i = 0; i < prob.m; ++i) {
    if (i < prob.m_eq || y(i) > 1e-10 * y_scale ||
        prob.u(i) - az(i) < 1e-9 * std::max(1.0, std::abs(prob.u(i))))
      active.push_back(i);
  }
  const int n = prob.n;
  const int ma = static_cast<int>(active.size());
  Mat a_act(ma, n);
  Vec b_act(ma);
  for (int k = 0; k < ma; ++k) {
    a_act.row(k) = prob.a.row(active[static_cast<size_t>(k)]);
    b_act(k) = prob.u(active[static_cast<size_t>(k)]);
  }
  const double delta = 1e-9;
  Mat kmat = Mat::Zero(n + ma, n + ma);
  kmat.topLeftCorner(n, n) = prob.p + delta * Mat::Identity(n, n);
  if (ma > 0) {
    kmat.topRightCorner(n, ma) = a_act.transpose();
    kmat.bottomLeftCorner(ma, n) = a_act;
    kmat.bottomRightCorner(ma, ma) = -delta * Mat::Identity(ma, ma);
  }
  Eigen::PartialPivLU<Mat> lu(kmat);
  Vec rhs(n + ma);
  rhs.head(n) = -prob.q;
  rhs.tail(ma) = b_act;
  Vec sol = lu.solve(rhs);
  // Refine against the unregularized system.
  for (int it = 0; it < 3; ++it) {
    Vec resid = rhs;
    resid.head(n) -= prob.p * sol.head(n);
    if (ma > 0) {
      resid.head(n) -= a_act.transpose() * sol.tail(ma);
      resid.tail(ma) -= a_act * sol.head(n);
    }
    sol += lu.solve(resid);
  }
  Vec z_p = sol.head(n);
  Vec y_p = Vec::Zero(prob.m);
  for (int k = 0; k < ma; ++k) y_p(active[static_cast<size_t>(k)]) = sol(n + k);
  // Reject if the polished point violates any constraint or dual sign.
  if (prob.m > 0) {
    Vec az_p = prob.a * z_p;
    for (int i = 0; i < prob.m; ++i) {
      if (az_p(i) > prob.u(i) + 1e-8) return false;
      if (prob.l(i) != -kInf && az_p(i) < prob.l(i) - 1e-8) return false;
      if (i >= prob.m_eq && y_p(i) < -1e-8) return false;
    }
    for (int i = prob.m_eq; i < prob.m; ++i) y_p(i) = std::max(y_p(i), 0.0);
  }
  KktResiduals kkt_p = compute_residuals(prob, z_p, y_p);
  if (kkt_p.worst() < kkt.worst()) {
    z = z_p;
    y = y_p;
    kkt = kkt_p;
    return true;
  }
  return false;
}

// Primal-infeasibility certificate refinement. A candidate direction v must
// satisfy A'v = 0, v_i >= 0 on one-sided rows, and u'v_+ + l'v_- < 0; the raw
// ADMM delta only approaches this. Alternating projection onto null(A') and
// the sign cone sharpens it, and only a direction that passes the strict
// final validation is ever reported, so the loose detection screen cannot
// declare a feasible problem infeasible.
class CertificateRefiner {
 public:
  explicit CertificateRefiner(const Problem& prob) : prob_(prob) {
    scale_b_ = 1.0;
    for (int i = 0; i < prob.m; ++i) {
      scale_b_ = std::max(scale_b_, std::abs(prob.u(i)));
      if (prob.l(i) != -kInf) scale_b_ = std::max(scale_b_, std::abs(prob.l(i)));
    }
  }

  // Cheap screen on the sign-clamped raw direction.
  bool screen(const Vec& v_raw) const {
    Vec v = clamp(v_raw);
    const double dn = v.cwiseAbs().maxCoeff();
    if (dn <= 1e-12) return false;
    if ((prob_.a.transpose() * v).cwiseAbs().maxCoeff() > 1e-3 * dn)
      return false;
    return support(v) <= -1e-4 * dn * scale_b_;
  }

  // Refine and validate; empty result means no certificate was proven.
  // Each outer round freezes the rows the sign cone pins to zero and
  // projects the rest exactly onto the null space of the reduced A' with a
  // rank-revealing QR, so the equality defect drops to roundoff level once
  // the active set stabilizes.
  std::optional<Vec> refine(const Vec& v_raw) {
    Vec v = clamp(v_raw);
    double dn = v.cwiseAbs().maxCoeff();
    if (dn <= 1e-12) return std::nullopt;
    v /= dn;
    for (int round = 0; round < 6; ++round) {
      std::vector<int> free;
      for (int i = 0; i < prob_.m; ++i)
        if (prob_.l(i) != -kInf || v(i) > 0.0) free.push_back(i);
      const int mf = static_cast<int>(free.size());
      if (mf == 0) return std::nullopt;
      Mat a_f(mf, prob_.n);
      Vec v_f(mf);
      for (int k = 0; k < mf; ++k) {
        a_f.row(k) = prob_.a.row(free[static_cast<std::size_t>(k)]);
        v_f(k) = v(free[static_cast<std::size_t>(k)]);
      }
      Eigen::ColPivHouseholderQR<Mat> qr(a_f);
      const auto rank = qr.rank();
      if (rank >= mf) return std::nullopt;  // reduced A' has no null space
      const Mat q1 = qr.householderQ() * Mat::Identity(mf, rank);
      v_f -= q1 * (q1.transpose() * v_f);
      v.setZero();
      for (int k = 0; k < mf; ++k) v(free[static_cast<std::size_t>(k)]) = v_f(k);
      v = clamp(v);
      dn = v.cwiseAbs().maxCoeff();
      if (dn <= 1e-8) return std::nullopt;
      if ((prob_.a.transpose() * v).cwiseAbs().maxCoeff() <= 1e-12 * dn) break;
    }
    const double resid = (prob_.a.transpose() * v).cwiseAbs().maxCoeff();
    dn = v.cwiseAbs().maxCoeff();
    if (dn <= 1e-8 || resid > 1e-10 * dn) return std::nullopt;
    const double sup = support(v);
    if (sup > -1e-6 * dn * scale_b_) return std::nullopt;
    // Farkas margin: emptiness is certified for ||z||_1 up to |sup|/resid.
    if (resid > 0.0 && -sup / resid < 1e8) return std::nullopt;
    return v;
  }

 private:
  Vec clamp(const Vec& v) const {
    Vec out = v;
    for (int i = 0; i < prob_.m; ++i)
      if (prob_.l(i) == -kInf && out(i) < 0.0) out(i) = 0.0;
    return out;
  }

  double support(const Vec& v) const {
    double s = 0.0;
    for (int i = 0; i < prob_.m; ++i) {
      const double pos = std::max(v(i), 0.0);
      const double neg = std::min(v(i), 0.0);
      s += prob_.u(i) * pos;
      if (prob_.l(i) != -kInf) s += prob_.l(i) * neg;
    }
    return s;
  }

  const Problem& prob_;
  double scale_b_ = 1.0;
};

}  // namespace

QpSolution AdmmEngine::solve(const QuadraticProgram& qp, double tol,
                             int max_iter) const {
  QpWorkspace ws;
  return solve(qp, ws, tol, max_iter);
}

QpSolution AdmmEngine::solve(const QuadraticProgram& qp, QpWorkspace& ws_pub,
                             double tol, int max_iter) const {
  if (tol <= 0.0) throw solver_error("solver tolerance must be positive");
  QpWorkspace::Impl& ws = *ws_pub.impl_;

  Problem prob;
  prob.n = qp.num_vars();
  prob.m_eq = qp.num_eq();
  prob.m = qp.num_eq() + qp.num_ineq();
  prob.p = 2.0 * qp.H();
  prob.q = qp.f();
  prob.a.resize(prob.m, prob.n);
  prob.l.resize(prob.m);
  prob.u.resize(prob.m);
  if (qp.num_eq() > 0) {
    prob.a.topRows(qp.num_eq()) = qp.A_eq();
    prob.l.head(qp.num_eq()) = qp.b_eq();
    prob.u.head(qp.num_eq()) = qp.b_eq();
  }
  if (qp.num_ineq() > 0) {
    prob.a.bottomRows(qp.num_ineq()) = qp.A_in();
    prob.l.tail(qp.num_ineq()).setConstant(-kInf);
    prob.u.tail(qp.num_ineq()) = qp.b_in();
  }

  // Unconstrained problems reduce to a linear solve.
  if (prob.m == 0) {
    Eigen::LDLT<Mat> ldlt(prob.p + 1e-12 * Mat::Identity(prob.n, prob.n));
    QpSolution sol;
    sol.z = ldlt.solve(-prob.q);
    sol.y_eq = Vec();
    sol.y_in = Vec();
    sol.kkt = compute_residuals(prob, sol.z, Vec());
    sol.objective = qp.objective(sol.z);
    sol.status =
        sol.kkt.worst() <= tol ? QpStatus::optimal : QpStatus::max_iter;
    return sol;
  }

  // Reuse scaling and factorization when the matrices are unchanged.
  const double h_sum = checksum(prob.p) + checksum(prob.a);
  const bool structure_match =
      ws.n == prob.n && ws.m == prob.m && ws.h_sum == h_sum;
  if (!structure_match) {
    // PSD gate, once per structure: smallest eigenvalue of the cost matrix.
    Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * prob.p,
                                           Eigen::EigenvaluesOnly);
    const double lam_min = eig.eigenvalues().minCoeff();
    const double scale = std::max(1.0, 0.5 * prob.p.cwiseAbs().maxCoeff());
    if (lam_min < -1e-8 * scale)
      throw solver_error("cost matrix is not positive semidefinite");
    ws.n = prob.n;
    ws.m = prob.m;
    ws.h_sum = h_sum;
    ws.rho_bar = 0.1;
    equilibrate(prob, ws);
    set_rho(ws, prob);
    factor_kkt(ws, 1e-6);
    ws.has_warm = false;
  }

  const int n = prob.n, m = prob.m;
  const double sigma = 1e-6;
  const double alpha = 1.6;

  // Scaled problem data.
  Vec q_s = ws.c * ws.d.cwiseProduct(prob.q);
  Vec l_s(m), u_s(m);
  for (int i = 0; i < m; ++i) {
    l_s(i) = prob.l(i) == -kInf ? -kInf : ws.e(i) * prob.l(i);
    u_s(i) = ws.e(i) * prob.u(i);
  }

  Vec x = ws.has_warm ? ws.warm_x : Vec::Zero(n);
  Vec y = ws.has_warm ? ws.warm_y : Vec::Zero(m);
  Vec w = ws.has_warm ? ws.warm_w : Vec::Zero(m);

  QpSolution sol;
  sol.status = QpStatus::max_iter;
  Vec rhs(n + m), xy(n + m);
  Vec x_prev(n), y_prev(m);
  const int check_every = 50;
  double admm_tol = tol;
  CertificateRefiner refiner(prob);
  int refine_attempts = 0;

  int iter = 0;
  while (iter < max_iter) {
    for (int burst = 0; burst < check_every && iter < max_iter;
         ++burst, ++iter) {
      x_prev = x;
      y_prev = y;
      rhs.head(n) = sigma * x - q_s;
      rhs.tail(m) = w - ws.rho_inv.cwiseProduct(y);
      xy = ws.kkt.solve(rhs);
      Vec x_tilde = xy.head(n);
      Vec z_tilde = w + ws.rho_inv.cwiseProduct(xy.tail(m) - y);
      x = alpha * x_tilde + (1.0 - alpha) * x;
      Vec w_cand = alpha * z_tilde + (1.0 - alpha) * w +
                   ws.rho_inv.cwiseProduct(y);
      Vec w_new = w_cand.cwiseMax(l_s).cwiseMin(u_s);
      y = ws.rho.cwiseProduct(w_cand - w_new);
      w = w_new;
    }

    // Scaled residuals for termination and rho adaptation.
    Vec ax = ws.a_s * x;
    Vec r_prim_v = ax - w;
    Vec r_dual_v = ws.p_s * x + q_s + ws.a_s.transpose() * y;
    const double r_prim = r_prim_v.cwiseAbs().maxCoeff();
    const double r_dual = r_dual_v.cwiseAbs().maxCoeff();
    const double s_prim = std::max(
        {ax.cwiseAbs().maxCoeff(), w.cwiseAbs().maxCoeff(), 1.0});
    const double s_dual =
        std::max({(ws.p_s * x).cwiseAbs().maxCoeff(),
                  (ws.a_s.transpose() * y).cwiseAbs().maxCoeff(),
                  q_s.cwiseAbs().maxCoeff(), 1.0});

    if (r_prim <= admm_tol * s_prim && r_dual <= admm_tol * s_dual) {
      // Unscale and evaluate true residuals.
      Vec z_u = ws.d.cwiseProduct(x);
      Vec y_u = ws.e.cwiseProduct(y) / ws.c;
      for (int i = prob.m_eq; i < m; ++i) y_u(i) = std::max(y_u(i), 0.0);
      KktResiduals kkt = compute_residuals(prob, z_u, y_u);
      polish(prob, z_u, y_u, kkt);
      if (kkt.worst() <= tol) {
        sol.z = z_u;
        sol.y_eq = y_u.head(prob.m_eq);
        sol.y_in = y_u.tail(m - prob.m_eq);
        sol.kkt = kkt;
        sol.objective = qp.objective(z_u);
        sol.status = QpStatus::optimal;
        sol.iterations = iter;
        ws.warm_x = x;
        ws.warm_y = y;
        ws.warm_w = w;
        ws.has_warm = true;
        return sol;
      }
      // Accurate scaled solution that fails unscaled checks: tighten and go on.
      admm_tol = std::max(admm_tol * 0.1, 1e-14);
      if (admm_tol <= 1e-13) {
        sol.z = z_u;
        sol.y_eq = y_u.head(prob.m_eq);
        sol.y_in = y_u.tail(m - prob.m_eq);
        sol.kkt = kkt;
        sol.objective = qp.objective(z_u);
        sol.iterations = iter;
        ws.warm_x = x;
        ws.warm_y = y;
        ws.warm_w = w;
        ws.has_warm = true;
        return sol;
      }
    }

    // Infeasibility certificate from the one-step delta: screen the raw
    // direction, then refine and strictly validate before declaring.
    Vec dy = y - y_prev;
    if (dy.cwiseAbs().maxCoeff() > 1e-12 && refine_attempts < 5) {
      Vec dy_u = ws.e.cwiseProduct(dy);  // unscaled certificate direction
      if (refiner.screen(dy_u)) {
        ++refine_attempts;
        if (std::optional<Vec> cert = refiner.refine(dy_u)) {
          sol.status = QpStatus::infeasible;
          sol.z = ws.d.cwiseProduct(x);
          sol.y_eq = cert->head(prob.m_eq);
          sol.y_in = cert->tail(m - prob.m_eq);
          sol.kkt = compute_residuals(prob, sol.z, ws.e.cwiseProduct(y) / ws.c);
          sol.objective = qp.objective(sol.z);
          sol.iterations = iter;
          return sol;
        }
      }
    }
    // Rebalance rho when primal and dual progress diverge. Refactor only on
    // a material change; at the clamp boundary the ratio keeps diverging
    // without moving rho, and refactoring there would reset the iteration
    // dynamics every checkpoint for nothing.
    const double ratio = (r_prim / s_prim) / std::max(r_dual / s_dual, 1e-16);
    if (ratio > 25.0 || ratio < 0.04) {
      const double next = std::clamp(ws.rho_bar * std::sqrt(ratio), 1e-6, 1e6);
      if (next > 1.05 * ws.rho_bar || next < 0.95 * ws.rho_bar) {
        ws.rho_bar = next;
        set_rho(ws, prob);
        factor_kkt(ws, sigma);
      }
    }
  }

  // Iteration budget exhausted: report the best unscaled point.
  Vec z_u = ws.d.cwiseProduct(x);
  Vec y_u = ws.e.cwiseProduct(y) / ws.c;
  for (int i = prob.m_eq; i < m; ++i) y_u(i) = std::max(y_u(i), 0.0);
  sol.z = z_u;
  sol.y_eq = y_u.head(prob.m_eq);
  sol.y_in = y_u.tail(m - prob.m_eq);
  sol.kkt = compute_residuals(prob, z_u, y_u);
  sol.objective = qp.objective(z_u);
  sol.iterations = max_iter;
  ws.warm_x = x;
  ws.warm_y = y;
  ws.warm_w = w;
  ws.has_warm = true;
  return sol;
}

QpSolution solve_qp(const QuadraticProgram& qp, double tol, int max_iter) {
  return AdmmEngine().solve(qp, tol, max_iter);
}

QpSolution solve_qp(const QuadraticProgram& qp, QpWorkspace& ws, double tol,
                    int max_iter) {
  return AdmmEngine().solve(qp, ws, tol, max_iter);
}

int epigraph_abs(QuadraticProgram& qp, const VarBlock& v,
                 const std::string& name) {
  const int s = qp.add_block(name + "_s", v.size);
  const int t = qp.add_block(name, 1);
  for (int i = 0; i < v.size; ++i) {
    qp.add_ineq(RowExpr().add(v.offset + i, 1.0).add(s + i, -1.0), 0.0);
    qp.add_ineq(RowExpr().add(v.offset + i, -1.0).add(s + i, -1.0), 0.0);
  }
  RowExpr sum;
  sum.add(t, 1.0);
  for (int i = 0; i < v.size; ++i) sum.add(s + i, -1.0);
  qp.add_eq(sum, 0.0);
  return t;
}

int epigraph_inf(QuadraticProgram& qp, const VarBlock& v,
                 const std::string& name) {
  const int t = qp.add_block(name, 1);
  for (int i = 0; i < v.size; ++i) {
    qp.add_ineq(RowExpr().add(v.offset + i, 1.0).add(t, -1.0), 0.0);
    qp.add_ineq(RowExpr().add(v.offset + i, -1.0).add(t, -1.0), 0.0);
  }
  return t;
}

}  // namespace ddmpc
