#include <algorithm>
#include <cmath>
#include <string>

#include "ccsim/numkernel.hpp"

namespace ccsim {

namespace {

constexpr int kKrylovDim = 30;
constexpr int kMaxHalvings = 60;

// exp(-i tau T) e1 for a real symmetric tridiagonal T.
CVec tridiagonal_exp_e1(const Eigen::MatrixXd& T, double tau) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  const auto& Q = es.eigenvectors();
  const auto& lam = es.eigenvalues();
  CVec coeff(lam.size());
  for (Eigen::Index k = 0; k < lam.size(); ++k) coeff(k) = std::exp(-kI * lam(k) * tau) * Q(0, k);
  return Q.cast<cplx>() * coeff;
}

}  // namespace

CVec expm_apply_vector(const SparseRows& H, double t, const CVec& psi, double tol) {
  if (H.rows() != H.cols() || H.rows() != psi.size()) throw ShapeError("expm_apply: dimension mismatch");
  if (!std::isfinite(t)) throw DomainError("expm_apply: non-finite time");
  if (t == 0.0 || psi.norm() == 0.0) return psi;
  const double sign = t < 0 ? -1.0 : 1.0;
  double remaining = std::abs(t);
  double tau = remaining;
  const auto n = psi.size();
  const int mmax = static_cast<int>(std::min<Eigen::Index>(kKrylovDim, n));
  CVec v = psi;

  while (remaining > 0.0) {
    const double beta = v.norm();
    if (beta == 0.0) break;
    CMat V(n, mmax + 1);
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(mmax, mmax);
    V.col(0) = v / beta;
    int m = mmax;
    double next_beta = 0.0;
    bool breakdown = false;
    for (int j = 0; j < mmax; ++j) {
      CVec w = H * V.col(j);
      // Two passes of full reorthogonalization.
      for (int pass = 0; pass < 2; ++pass) {
        const CVec proj = V.leftCols(j + 1).adjoint() * w;
        w -= V.leftCols(j + 1) * proj;
        if (pass == 0) {
          T(j, j) += proj(j).real();
        }
      }
      const double b = w.norm();
      const double scale = std::max(1.0, std::abs(T(j, j)));
      if (b < 1e-13 * scale) {
        m = j + 1;
        breakdown = true;
        break;
      }
      if (j + 1 < mmax) {
        T(j, j + 1) = T(j + 1, j) = b;
      } else {
        next_beta = b;
      }
      V.col(j + 1) = w / b;
    }
    const Eigen::MatrixXd Tm = T.topLeftCorner(m, m);
    const double budget = tol;
    CVec y;
    int halvings = 0;
    for (;;) {
      y = tridiagonal_exp_e1(Tm, sign * tau);
      const double err = breakdown ? 0.0 : beta * next_beta * std::abs(y(m - 1)) * tau;
      if (err <= budget * tau / std::abs(t) || tau <= 0.0) break;
      if (++halvings > kMaxHalvings) throw StepSizeError("expm_apply: Krylov step failed to converge");
      tau *= 0.5;
    }
    v = beta * (V.leftCols(m) * y);
    remaining -= tau;
    if (remaining < 1e-15 * std::abs(t)) remaining = 0.0;
    tau = std::min(remaining, halvings == 0 ? 2.0 * tau : tau);
  }
  return v;
}

QuantumState expm_apply(const OperatorMatrix& H, double t, const QuantumState& psi) {
  if (!(H.space() == psi.space())) throw ShapeError("expm_apply: operator and state live on different spaces");
  if (!H.hermitian_flag() && !H.is_hermitian())
    throw DomainError("expm_apply: Hamiltonian is not Hermitian");
  if (psi.is_pure()) {
    CVec out = expm_apply_vector(H.to_sparse(), t, psi.vector());
    return QuantumState::pure(psi.space(), out / out.norm());
  }
  const CMat U = psi.dimension() <= kDenseOracleMaxDim ? expm_oracle(H, t) : CMat();
  CMat rho;
  if (U.size() > 0) {
    rho = U * psi.matrix() * U.adjoint();
  } else {
    const SparseRows Hs = H.to_sparse();
    CMat half(psi.matrix().rows(), psi.matrix().cols());
    for (Eigen::Index c = 0; c < half.cols(); ++c) half.col(c) = expm_apply_vector(Hs, t, psi.matrix().col(c));
    CMat adj = half.adjoint();
    for (Eigen::Index c = 0; c < adj.cols(); ++c) adj.col(c) = expm_apply_vector(Hs, t, CVec(adj.col(c)));
    rho = adj.adjoint();
  }
  return QuantumState::density(psi.space(), rho, psi.declared_trace(), false);
}

CMat expm_hermitian_dense(const CMat& H, double t) {
  if (H.rows() != H.cols()) throw ShapeError("expm: matrix is not square");
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (H + H.adjoint()));
  const CMat& Q = es.eigenvectors();
  CVec phases(Q.cols());
  for (Eigen::Index k = 0; k < phases.size(); ++k) phases(k) = std::exp(-kI * es.eigenvalues()(k) * t);
  return Q * phases.asDiagonal() * Q.adjoint();
}

CMat expm_oracle(const OperatorMatrix& H, double t) {
  if (H.dimension() > kDenseOracleMaxDim)
    throw ShapeError("expm_oracle: dimension " + std::to_string(H.dimension()) + " exceeds dense limit");
  if (!H.hermitian_flag() && !H.is_hermitian()) throw DomainError("expm_oracle: Hamiltonian is not Hermitian");
  return expm_hermitian_dense(H.to_dense(), t);
}

double unitarity_defect(const CMat& U) {
  if (U.rows() != U.cols()) throw ShapeError("unitarity check needs a square matrix");
  return (U.adjoint() * U - CMat::Identity(U.rows(), U.cols())).cwiseAbs().maxCoeff();
}

}  // namespace ccsim
