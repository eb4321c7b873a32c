#include "ddmpc/signals.hpp"

#include <Eigen/SVD>
#include <string>

namespace ddmpc {

VecSequence::VecSequence(Mat samples) : data_(std::move(samples)) {
  if (data_.rows() < 1 || data_.cols() < 1)
    throw dimension_error("VecSequence requires d >= 1 and T >= 1, got " +
                          std::to_string(data_.rows()) + "x" +
                          std::to_string(data_.cols()));
}

Vec VecSequence::sample(int k) const {
  if (k < 0 || k >= length())
    throw dimension_error("VecSequence sample index " + std::to_string(k) +
                          " out of range [0, " + std::to_string(length()) +
                          ")");
  return data_.col(k);
}

VecSequence VecSequence::head(int count) const {
  if (count < 1 || count > length())
    throw dimension_error("VecSequence head count " + std::to_string(count) +
                          " out of range");
  return VecSequence(data_.leftCols(count));
}

HankelMatrix build_hankel(const VecSequence& z, int depth) {
  if (depth < 1)
    throw dimension_error("Hankel depth must be >= 1");
  const int d = z.dim();
  const int t = z.length();
  if (t < depth)
    throw dimension_error("Hankel depth " + std::to_string(depth) +
                          " exceeds sequence length " + std::to_string(t));
  HankelMatrix h;
  h.depth = depth;
  h.block_dim = d;
  h.entries.resize(d * depth, t - depth + 1);
  for (int j = 0; j + depth <= t; ++j)
    for (int i = 0; i < depth; ++i)
      h.entries.block(d * i, j, d, 1) = z.data().col(j + i);
  return h;
}

Vec stack_window(const VecSequence& z, int a, int b) {
  if (a < 0 || b < a || b >= z.length())
    throw dimension_error("stack_window indices [" + std::to_string(a) + ", " +
                          std::to_string(b) + "] out of range for length " +
                          std::to_string(z.length()));
  const int d = z.dim();
  Vec out(d * (b - a + 1));
  for (int k = a; k <= b; ++k) out.segment(d * (k - a), d) = z.data().col(k);
  return out;
}

int numerical_rank(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 0;
  const double thresh =
      1e-8 * s(0) * static_cast<double>(std::max(m.rows(), m.cols()));
  int rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > thresh) ++rank;
  return rank;
}

Mat pseudo_inverse(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double thresh =
      s.size() == 0
          ? 0.0
          : 1e-8 * s(0) * static_cast<double>(std::max(m.rows(), m.cols()));
  Vec inv = Vec::Zero(s.size());
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > thresh) inv(i) = 1.0 / s(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

bool pe_order_check(const VecSequence& u, int order) {
  if (order < 1) return false;
  if (u.length() < order) return false;
  const HankelMatrix h = build_hankel(u, order);
  return numerical_rank(h.entries) == u.dim() * order;
}

VecSequence generate_pe_input(int m, int length, double bound, int order,
                              std::uint64_t seed) {
  if (m < 1 || length < 1)
    throw dimension_error("generate_pe_input requires m >= 1, length >= 1");
  if (bound <= 0.0)
    throw dimension_error("generate_pe_input requires a positive bound");
  if (length < (m + 1) * order - 1)
    throw dimension_error(
        "length " + std::to_string(length) +
        " below the necessary PE length (m+1)*order-1 = " +
        std::to_string((m + 1) * order - 1));
  for (int attempt = 0; attempt < 100; ++attempt) {
    Rng rng(seed + static_cast<std::uint64_t>(attempt));
    Mat samples(m, length);
    for (int k = 0; k < length; ++k) samples.col(k) = rng.uniform_vec(m, bound);
    VecSequence u(samples);
    if (pe_order_check(u, order)) return u;
  }
  throw excitation_error("no persistently exciting input of order " +
                         std::to_string(order) + " found in 100 attempts (N=" +
                         std::to_string(length) + ")");
}

}  // namespace ddmpc
