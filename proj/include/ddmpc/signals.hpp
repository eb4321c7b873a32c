#pragma once

// Hankel-matrix and window algebra over vector-valued sequences,
// persistency-of-excitation checking, and seeded excitation generation.

#include <Eigen/Dense>
#include <cstdint>
#include <random>

#include "ddmpc/errors.hpp"

namespace ddmpc {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Deterministic uniform sampler. Bits are converted to doubles explicitly
// ((x >> 11) * 2^-53) so streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Uniform on [0, 1).
  double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  // Vector with i.i.d. entries uniform on [-bound, bound].
  Vec uniform_vec(int dim, double bound) {
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v(i) = uniform(-bound, bound);
    return v;
  }

 private:
  std::mt19937_64 eng_;
};

// Ordered list of equal-dimension real vectors, stored as the columns of a
// d x T matrix. Sample k is column k, matching the paper's 0-based k.
class VecSequence {
 public:
  // Takes the samples as columns; requires d >= 1 and T >= 1.
  explicit VecSequence(Mat samples);

  int dim() const { return static_cast<int>(data_.rows()); }
  int length() const { return static_cast<int>(data_.cols()); }
  Vec sample(int k) const;
  const Mat& data() const { return data_; }

  // Prefix of the first `count` samples.
  VecSequence head(int count) const;

 private:
  Mat data_;
};

// Block-Hankel matrix of a sequence: shape (d*L) x (T-L+1), column j is the
// stacked window z_{[j, j+L-1]}.
struct HankelMatrix {
  Mat entries;
  int depth = 0;
  int block_dim = 0;
};

HankelMatrix build_hankel(const VecSequence& z, int depth);

// Stacked window z_{[a,b]} as one vector of dimension d*(b-a+1).
Vec stack_window(const VecSequence& z, int a, int b);

// Numerical rank with the scale-invariant threshold
// sigma_i > 1e-8 * sigma_max * max(rows, cols).
int numerical_rank(const Mat& m);

// Moore-Penrose pseudoinverse through SVD with the same rank threshold.
Mat pseudo_inverse(const Mat& m);

// True iff rank(H_order(u)) = dim(u) * order. False when u is too short.
bool pe_order_check(const VecSequence& u, int order);

// Seeded i.i.d. uniform excitation on [-bound, bound]^m that passes
// pe_order_check; resamples with offset seeds, at most 100 attempts.
VecSequence generate_pe_input(int m, int length, double bound, int order,
                              std::uint64_t seed);

}  // namespace ddmpc
