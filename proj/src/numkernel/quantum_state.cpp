#include <cmath>
#include <string>

#include "ccsim/numkernel.hpp"

namespace ccsim {

QuantumState QuantumState::pure(SpaceLabel space, CVec amplitudes) {
  if (static_cast<std::size_t>(amplitudes.size()) != space.dimension())
    throw ShapeError("state vector length does not match space");
  const double norm = amplitudes.norm();
  if (std::abs(norm - 1.0) > kNormTol)
    throw DomainError("pure state is not normalized (norm " + std::to_string(norm) + ")");
  QuantumState s;
  s.space_ = std::move(space);
  s.rep_ = Representation::Pure;
  s.psi_ = std::move(amplitudes);
  return s;
}

QuantumState QuantumState::density(SpaceLabel space, CMat rho, double declared_trace, bool check_positivity) {
  const auto n = static_cast<Eigen::Index>(space.dimension());
  if (rho.rows() != n || rho.cols() != n) throw ShapeError("density matrix shape does not match space");
  const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  if (herm > kHermiticityTol * std::max(1.0, rho.cwiseAbs().maxCoeff()) * 100.0)
    throw DomainError("density matrix is not Hermitian (defect " + std::to_string(herm) + ")");
  rho = 0.5 * (rho + rho.adjoint()).eval();
  const double tr = rho.trace().real();
  if (std::abs(tr - declared_trace) > kNormTol)
    throw DomainError("density matrix trace " + std::to_string(tr) + " differs from declared " +
                      std::to_string(declared_trace));
  if (check_positivity) {
    const double lo = min_eigenvalue(rho);
    if (lo < -kPsdTol) throw DomainError("density matrix is not positive (min eigenvalue " + std::to_string(lo) + ")");
  }
  QuantumState s;
  s.space_ = std::move(space);
  s.rep_ = Representation::Density;
  s.rho_ = std::move(rho);
  s.declared_trace_ = declared_trace;
  return s;
}

QuantumState QuantumState::basis(SpaceLabel space, std::size_t index) {
  if (index >= space.dimension()) throw ShapeError("basis index out of range");
  CVec v = CVec::Zero(static_cast<Eigen::Index>(space.dimension()));
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return pure(std::move(space), std::move(v));
}

QuantumState QuantumState::product(SpaceLabel space, const std::vector<CVec>& locals) {
  if (locals.size() != space.size()) throw ShapeError("product state needs one vector per site");
  CVec v = CVec::Ones(1);
  for (std::size_t k = 0; k < locals.size(); ++k) {
    const auto d = space.sites()[k].dim;
    if (locals[k].size() != d) throw ShapeError("local vector dimension mismatch at site position " + std::to_string(k));
    CVec next(v.size() * d);
    for (Eigen::Index i = 0; i < v.size(); ++i) next.segment(i * d, d) = v(i) * locals[k];
    v = std::move(next);
  }
  const double norm = v.norm();
  if (norm == 0.0) throw DomainError("product state has zero norm");
  return pure(std::move(space), v / norm);
}

QuantumState QuantumState::maximally_mixed(SpaceLabel space) {
  const auto n = static_cast<Eigen::Index>(space.dimension());
  CMat rho = CMat::Identity(n, n) / static_cast<double>(n);
  return density(std::move(space), std::move(rho));
}

const CVec& QuantumState::vector() const {
  if (rep_ != Representation::Pure) throw DomainError("state is not pure");
  return psi_;
}

const CMat& QuantumState::matrix() const {
  if (rep_ != Representation::Density) throw DomainError("state is not a density matrix");
  return rho_;
}

CMat QuantumState::density_matrix() const {
  if (rep_ == Representation::Density) return rho_;
  return psi_ * psi_.adjoint();
}

QuantumState QuantumState::as_density() const {
  if (rep_ == Representation::Density) return *this;
  QuantumState s;
  s.space_ = space_;
  s.rep_ = Representation::Density;
  s.rho_ = psi_ * psi_.adjoint();
  return s;
}

}  // namespace ccsim
