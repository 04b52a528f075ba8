#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace dsur {

/// Seeded random source with explicit, implementation-independent draw
/// formulas so that runs are reproducible bit-for-bit for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (two draws per call).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  std::uint64_t next_u64() { return engine_(); }

  Eigen::VectorXd normal_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  Eigen::MatrixXd normal_matrix(int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }

  Eigen::VectorXd uniform_vector(int n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }

  /// Uniform direction on the unit sphere in R^n.
  Eigen::VectorXd unit_vector(int n) {
    Eigen::VectorXd v = normal_vector(n);
    double nrm = v.norm();
    while (nrm < 1e-12) {
      v = normal_vector(n);
      nrm = v.norm();
    }
    return v / nrm;
  }

  /// Uniform point in the closed unit ball of R^n.
  Eigen::VectorXd ball_vector(int n) {
    Eigen::VectorXd dir = unit_vector(n);
    double r = std::pow(uniform(), 1.0 / static_cast<double>(n));
    return r * dir;
  }

  /// Random orthogonal matrix from the QR of a Gaussian matrix, with the
  /// sign convention R_ii > 0 so the result is a deterministic function of
  /// the draws.
  Eigen::MatrixXd orthogonal_matrix(int n) {
    Eigen::MatrixXd g = normal_matrix(n, n);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < n; ++i)
      if (r(i, i) < 0) q.col(i) = -q.col(i);
    return q;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dsur
