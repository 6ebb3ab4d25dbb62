#pragma once

#include <cmath>
#include <random>

#include "ccsim/numkernel.hpp"

namespace testing_helpers {

using ccsim::CMat;
using ccsim::CVec;
using ccsim::cplx;

inline CMat random_matrix(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  CMat m(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = cplx{nd(rng), nd(rng)};
  return m;
}

inline CMat random_hermitian(std::mt19937_64& rng, Eigen::Index n) {
  const CMat m = random_matrix(rng, n);
  return 0.5 * (m + m.adjoint());
}

inline CVec random_state(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  CVec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx{nd(rng), nd(rng)};
  return v / v.norm();
}

inline CMat random_density(std::mt19937_64& rng, Eigen::Index n) {
  const CMat m = random_matrix(rng, n);
  CMat rho = m * m.adjoint();
  return rho / rho.trace().real();
}

// Phase-insensitive distance between two vectors.
inline double phase_distance(const CVec& a, const CVec& b) {
  const cplx ov = a.dot(b);
  const cplx phase = std::abs(ov) > 0 ? ov / std::abs(ov) : cplx{1.0, 0.0};
  return (a * phase - b).norm();
}

// Kronecker product of dense matrices.
inline CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace testing_helpers
