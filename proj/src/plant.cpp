#include "ddmpc/plant.hpp"

#include <string>

namespace ddmpc {

bool LtiPlant::validate() const {
  const int nn = n(), mm = m(), pp = p();
  if (A.rows() != nn || A.cols() != nn)
    throw dimension_error("plant A must be square");
  if (B.rows() != nn)
    throw dimension_error("plant B row count must match A");
  if (C.cols() != nn)
    throw dimension_error("plant C column count must match A");
  if (D.rows() != pp || D.cols() != mm)
    throw dimension_error("plant D must be p x m");
  // Controllability / observability staircase via Kalman rank tests.
  Mat ctrb(nn, nn * mm), obsv(nn * pp, nn);
  Mat Ak = Mat::Identity(nn, nn);
  for (int k = 0; k < nn; ++k) {
    ctrb.middleCols(k * mm, mm) = Ak * B;
    obsv.middleRows(k * pp, pp) = C * Ak;
    Ak = A * Ak;
  }
  return numerical_rank(ctrb) == nn && numerical_rank(obsv) == nn;
}

LtiPlant two_mass_spring_plant() {
  LtiPlant plant;
  plant.A.resize(4, 4);
  plant.A << -0.1799, 1.1799, 0.507, 0.493,
              0.59,   0.41,   0.2465, 0.7535,
             -1.0421, 1.0421, -0.1799, 1.1799,
              0.5211, -0.5211, 0.59,   0.41;
  plant.B.resize(4, 1);
  plant.B << 0.7266, 0.1367, 1.014, 0.493;
  plant.C = Mat::Identity(4, 4);
  plant.D = Mat::Zero(4, 1);
  return plant;
}

Mat two_mass_spring_gain() {
  Mat k(1, 4);
  k << 0.4345, -0.8439, -0.3665, -0.6986;
  return k;
}

void DifferenceOperatorModel::validate() const {
  if (A.empty() || B.size() != A.size())
    throw dimension_error("difference-operator model needs matching A_i/B_i lists");
  const int pp = p(), mm = m();
  for (const Mat& a : A)
    if (a.rows() != pp || a.cols() != pp)
      throw dimension_error("A_i coefficients must be p x p");
  for (const Mat& b : B)
    if (b.rows() != pp || b.cols() != mm)
      throw dimension_error("B_i coefficients must be p x m");
}

ExtendedRealization build_extended(const DifferenceOperatorModel& model) {
  model.validate();
  const int n = model.order();
  const int m = model.m();
  const int p = model.p();
  const int dim = n * (m + p);
  ExtendedRealization ext;
  ext.order = n;
  ext.m = m;
  ext.p = p;
  ext.A = Mat::Zero(dim, dim);
  ext.B = Mat::Zero(dim, m);
  ext.E = Mat::Zero(dim, p);
  ext.C = Mat::Zero(p, dim);
  ext.D = model.D;

  // Input history block: shift up, newest input enters the last slot.
  for (int i = 0; i + 1 < n; ++i)
    ext.A.block(i * m, (i + 1) * m, m, m) = Mat::Identity(m, m);
  ext.B.block((n - 1) * m, 0, m, m) = Mat::Identity(m, m);

  // Output history block: shift up, last row applies the recursion.
  const int ob = n * m;  // offset of the output block
  for (int i = 0; i + 1 < n; ++i)
    ext.A.block(ob + i * p, ob + (i + 1) * p, p, p) = Mat::Identity(p, p);
  // Slot j of a history block holds the sample with lag n-j, so coefficient
  // index j pairs with it: A_1/B_1 multiply the oldest sample (slot 0).
  for (int j = 0; j < n; ++j) {
    ext.C.block(0, j * m, p, m) = model.B[static_cast<size_t>(j)];
    ext.A.block(ob + (n - 1) * p, j * m, p, m) = model.B[static_cast<size_t>(j)];
    ext.C.block(0, ob + j * p, p, p) = -model.A[static_cast<size_t>(j)];
    ext.A.block(ob + (n - 1) * p, ob + j * p, p, p) =
        -model.A[static_cast<size_t>(j)];
  }
  ext.B.block(ob + (n - 1) * p, 0, p, m) = model.D;
  ext.E.block(ob + (n - 1) * p, 0, p, p) = Mat::Identity(p, p);
  return ext;
}

void DataSet::validate() const {
  if (state.has_value() == output.has_value())
    throw dimension_error("DataSet must carry exactly one of state/output");
  if (state && state->length() != length() + 1)
    throw dimension_error("state record must have length N+1");
  if (output && output->length() != length())
    throw dimension_error("output record must have length N");
  if (disturbance) {
    if (disturbance->length() != length())
      throw dimension_error("disturbance record must have length N");
    if (disturbance->data().cwiseAbs().maxCoeff() > w_max + 1e-15)
      throw dimension_error("recorded disturbance exceeds the declared bound");
  }
}

std::pair<Vec, Vec> simulate_step(const LtiPlant& plant, const Vec& x,
                                  const Vec& u, const Vec& w) {
  if (x.size() != plant.n() || u.size() != plant.m() || w.size() != plant.n())
    throw dimension_error("simulate_step dimension mismatch");
  Vec x_next = plant.A * x + plant.B * u + w;
  Vec y = plant.C * x + plant.D * u;
  return {std::move(x_next), std::move(y)};
}

DataSet collect_state_data(const LtiPlant& plant, const Mat& K,
                           const VecSequence& nu, const VecSequence& w,
                           const Vec& x0) {
  if (nu.length() != w.length())
    throw dimension_error("excitation and disturbance lengths must match");
  if (K.rows() != plant.m() || K.cols() != plant.n())
    throw dimension_error("gain must be m x n");
  if (nu.dim() != plant.m() || w.dim() != plant.n() || x0.size() != plant.n())
    throw dimension_error("collect_state_data dimension mismatch");
  const int big_n = nu.length();
  Mat xs(plant.n(), big_n + 1);
  xs.col(0) = x0;
  for (int k = 0; k < big_n; ++k) {
    Vec u = K * xs.col(k) + nu.sample(k);
    xs.col(k + 1) = plant.A * xs.col(k) + plant.B * u + w.sample(k);
  }
  DataSet data{nu, VecSequence(xs), std::nullopt, K, w,
               w.length() ? w.data().cwiseAbs().maxCoeff() : 0.0};
  data.validate();
  return data;
}

Vec cumulative_disturbance(const Mat& A_K, const VecSequence& w, int k) {
  if (k < 0 || k > w.length())
    throw dimension_error("cumulative_disturbance step out of range");
  Vec d = Vec::Zero(A_K.rows());
  for (int i = 0; i < k; ++i) d = A_K * d + w.sample(i);
  return d;
}

VecSequence undisturbed_data(const DataSet& data, const Mat& A_K) {
  if (!data.disturbance)
    throw oracle_unavailable_error(
        "undisturbed_data needs the true disturbance record");
  if (!data.state)
    throw dimension_error("undisturbed_data expects a state-feedback dataset");
  Mat xhat = data.state->data();
  Vec d = Vec::Zero(A_K.rows());
  for (int k = 1; k <= data.length(); ++k) {
    d = A_K * d + data.disturbance->sample(k - 1);
    xhat.col(k) -= d;
  }
  return VecSequence(xhat);
}

DataSet collect_output_data(const DifferenceOperatorModel& model,
                            const Mat& K_tilde, const VecSequence& nu,
                            const VecSequence& w_tilde, const Vec& xi0) {
  const ExtendedRealization ext = build_extended(model);
  if (nu.length() != w_tilde.length())
    throw dimension_error("excitation and noise lengths must match");
  if (K_tilde.rows() != ext.m || K_tilde.cols() != ext.dim())
    throw dimension_error("output-feedback gain must be m x n(m+p)");
  if (nu.dim() != ext.m || w_tilde.dim() != ext.p || xi0.size() != ext.dim())
    throw dimension_error("collect_output_data dimension mismatch");
  const int big_n = nu.length();
  Mat ys(ext.p, big_n);
  Vec xi = xi0;
  for (int k = 0; k < big_n; ++k) {
    Vec u = K_tilde * xi + nu.sample(k);
    ys.col(k) = ext.C * xi + ext.D * u + w_tilde.sample(k);
    xi = ext.A * xi + ext.B * u + ext.E * w_tilde.sample(k);
  }
  DataSet data{nu, std::nullopt, VecSequence(ys), K_tilde, w_tilde,
               w_tilde.length() ? w_tilde.data().cwiseAbs().maxCoeff() : 0.0};
  data.validate();
  return data;
}

}  // namespace ddmpc
