#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ddmpc/signals.hpp"

namespace ddmpc {

struct VarBlock {
  int offset = 0;
  int size = 0;
};

// Sparse row under construction; indices refer to final variable positions.
class RowExpr {
 public:
  RowExpr& add(int index, double coeff);
  RowExpr& add_block(int offset, const Vec& coeffs);
  const std::vector<std::pair<int, double>>& terms() const { return terms_; }

 private:
  std::vector<std::pair<int, double>> terms_;
};

// Dense convex QP: minimize z'Hz + f'z subject to A_eq z = b_eq, A_in z <= b_in.
// Variables are allocated in named blocks; rows may reference blocks added later
// only through indices that already exist when the row is created.
class QuadraticProgram {
 public:
  int add_block(const std::string& name, int size);
  VarBlock block(const std::string& name) const;
  bool has_block(const std::string& name) const;
  int num_vars() const { return num_vars_; }

  // Adds q (sizexsize) into the quadratic form at the block's diagonal position.
  void add_quad_cost(int offset, const Mat& q);
  void add_diag_cost(int offset, int size, double weight);
  void add_lin_cost(int offset, const Vec& c);

  void add_eq(const RowExpr& row, double rhs);
  void add_ineq(const RowExpr& row, double rhs);

  int num_eq() const { return static_cast<int>(eq_rhs_.size()); }
  int num_ineq() const { return static_cast<int>(in_rhs_.size()); }

  // Dense assembled views (built lazily, cached until the program changes).
  const Mat& H() const;
  const Vec& f() const;
  const Mat& A_eq() const;
  const Vec& b_eq() const;
  const Mat& A_in() const;
  const Vec& b_in() const;

  double objective(const Vec& z) const;

  // Labeled dense-text dump for cross-checking with external tools.
  void dump(std::ostream& os) const;

 private:
  void assemble() const;

  int num_vars_ = 0;
  std::map<std::string, VarBlock> blocks_;
  std::vector<std::pair<int, Vec>> lin_cost_;
  std::vector<std::pair<int, Mat>> quad_cost_;
  std::vector<std::vector<std::pair<int, double>>> eq_rows_, in_rows_;
  std::vector<double> eq_rhs_, in_rhs_;
  mutable bool dirty_ = true;
  mutable Mat h_, a_eq_, a_in_;
  mutable Vec f_, b_eq_, b_in_;
};

enum class QpStatus { optimal, infeasible, max_iter };

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;

  double worst() const;
};

struct QpSolution {
  Vec z;
  Vec y_eq;  // equality multipliers
  Vec y_in;  // inequality multipliers (nonnegative at optimum)
  double objective = 0.0;
  QpStatus status = QpStatus::max_iter;
  KktResiduals kkt;
  int iterations = 0;

  Vec value(const VarBlock& b) const { return z.segment(b.offset, b.size); }
};

// Reusable solver state: scaling, KKT factorization, and warm-start iterates.
// Reusing a workspace across solves of structurally identical programs (same
// H and constraint matrices, different rhs/linear terms) skips refactorization.
class QpWorkspace {
 public:
  struct Impl;

  QpWorkspace();
  ~QpWorkspace();
  QpWorkspace(QpWorkspace&&) noexcept;
  QpWorkspace& operator=(QpWorkspace&&) noexcept;

 private:
  friend class AdmmEngine;
  std::unique_ptr<Impl> impl_;
};

// Adapter seam: an alternative backend can be swapped in behind this interface.
class QpEngine {
 public:
  virtual ~QpEngine() = default;
  virtual QpSolution solve(const QuadraticProgram& qp, double tol,
                           int max_iter) const = 0;
};

// Operator-splitting solver with Ruiz preconditioning, cached factorization,
// warm starting, active-set polish, and infeasibility certificates.
class AdmmEngine : public QpEngine {
 public:
  QpSolution solve(const QuadraticProgram& qp, double tol,
                   int max_iter) const override;
  QpSolution solve(const QuadraticProgram& qp, QpWorkspace& ws, double tol,
                   int max_iter) const;
};

QpSolution solve_qp(const QuadraticProgram& qp, double tol = 1e-7,
                    int max_iter = 200000);
QpSolution solve_qp(const QuadraticProgram& qp, QpWorkspace& ws,
                    double tol = 1e-7, int max_iter = 200000);

// Adds slacks s and a scalar t with -s_i <= v_i <= s_i, t = sum s_i, so t pins
// to ||v||_1 wherever t is under downward pressure at the optimum.
// Returns the index of t; blocks are registered as name and name "_s".
int epigraph_abs(QuadraticProgram& qp, const VarBlock& v,
                 const std::string& name);

// Adds a scalar t with -t <= v_i <= t (componentwise), an epigraph of ||v||_inf.
int epigraph_inf(QuadraticProgram& qp, const VarBlock& v,
                 const std::string& name);

}  // namespace ddmpc
