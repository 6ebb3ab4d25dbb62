#pragma once

// Complex linear-algebra substrate: labeled tensor-product spaces, sparse
// operators in deterministic row-major coordinate form, pure/mixed states and
// time propagators (Krylov for production, dense eigendecomposition as the
// independent oracle).

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "ccsim/errors.hpp"

namespace ccsim {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using SparseRows = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

inline constexpr cplx kI{0.0, 1.0};

inline constexpr double kHermiticityTol = 1e-12;
inline constexpr double kNormTol = 1e-10;
inline constexpr double kUnitarityTol = 1e-10;
inline constexpr double kPsdTol = 1e-10;
inline constexpr std::size_t kDenseOracleMaxDim = 4096;

struct SiteSpec {
  int id = 0;
  int dim = 2;
  bool operator==(const SiteSpec&) const = default;
};

// Ordered list of sites. The first site is the slowest-varying factor of the
// tensor product; this ordering is global and never permuted implicitly.
class SpaceLabel {
 public:
  SpaceLabel() = default;
  explicit SpaceLabel(std::vector<SiteSpec> sites);

  // n qubits with ids 0..n-1.
  static SpaceLabel qubits(int n);
  // n sites of equal local dimension with ids 0..n-1.
  static SpaceLabel uniform(int n, int local_dim);

  const std::vector<SiteSpec>& sites() const { return sites_; }
  std::size_t size() const { return sites_.size(); }
  std::size_t dimension() const { return dimension_; }

  bool contains(int id) const;
  std::size_t position(int id) const;
  int local_dim(int id) const;
  // Product of the local dimensions of the sites after `id`.
  std::size_t stride(int id) const;

  bool operator==(const SpaceLabel& other) const { return sites_ == other.sites_; }

 private:
  std::vector<SiteSpec> sites_;
  std::vector<std::size_t> strides_;
  std::size_t dimension_ = 1;
};

struct Entry {
  std::size_t row = 0;
  std::size_t col = 0;
  cplx value{};
};

// Sparse square matrix over a labeled space. Entries are kept sorted
// row-major with duplicates summed and exact zeros dropped, so iteration and
// serialization are reproducible.
class OperatorMatrix {
 public:
  OperatorMatrix() = default;
  OperatorMatrix(SpaceLabel space, std::vector<Entry> entries);

  static OperatorMatrix zero(SpaceLabel space);
  static OperatorMatrix identity(SpaceLabel space);
  static OperatorMatrix diagonal(SpaceLabel space, std::span<const cplx> diag);
  // Entries with |value| <= drop_below are discarded.
  static OperatorMatrix from_dense(SpaceLabel space, const CMat& dense, double drop_below = 0.0);

  const SpaceLabel& space() const { return space_; }
  std::size_t dimension() const { return space_.dimension(); }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t nnz() const { return entries_.size(); }

  cplx at(std::size_t row, std::size_t col) const;
  double max_abs() const;
  // Max-norm of A - A^dagger.
  double hermiticity_defect() const;
  bool is_hermitian(double tol = kHermiticityTol) const { return hermiticity_defect() <= tol; }

  // Marks the operator Hermitian after verifying it to kHermiticityTol.
  OperatorMatrix& require_hermitian();
  bool hermitian_flag() const { return hermitian_flag_; }

  OperatorMatrix adjoint() const;
  CVec apply(const CVec& v) const;
  CMat to_dense() const;
  SparseRows to_sparse() const;
  std::vector<cplx> diagonal_values() const;
  // The same operator with its diagonal removed.
  OperatorMatrix off_diagonal() const;

  OperatorMatrix operator+(const OperatorMatrix& rhs) const;
  OperatorMatrix operator-(const OperatorMatrix& rhs) const;
  OperatorMatrix operator*(const OperatorMatrix& rhs) const;
  OperatorMatrix operator*(cplx scale) const;
  friend OperatorMatrix operator*(cplx scale, const OperatorMatrix& op) { return op * scale; }

 private:
  SpaceLabel space_;
  std::vector<Entry> entries_;
  bool hermitian_flag_ = false;
};

// Single-site operators, defined on a one-site space {id 0, dim}.
OperatorMatrix local_operator(const CMat& matrix);
OperatorMatrix pauli_x();
OperatorMatrix pauli_y();
OperatorMatrix pauli_z();
OperatorMatrix sigma_minus();  // |0><1|
OperatorMatrix sigma_plus();   // |1><0|
OperatorMatrix qubit_number(); // |1><1|
OperatorMatrix annihilation(int local_dim);
OperatorMatrix creation(int local_dim);

// local_op acting on `target_site`, identity elsewhere.
OperatorMatrix embed(const OperatorMatrix& local_op, int target_site, const SpaceLabel& space);

enum class Representation { Pure, Density };

// Pure vector or density matrix over a labeled space. Pure states carry unit
// norm; density matrices are Hermitian, PSD and have the declared trace (1
// for normalized states, less for post-selected branches).
class QuantumState {
 public:
  static QuantumState pure(SpaceLabel space, CVec amplitudes);
  static QuantumState density(SpaceLabel space, CMat rho, double declared_trace = 1.0,
                              bool check_positivity = true);
  static QuantumState basis(SpaceLabel space, std::size_t index);
  // Tensor product of per-site vectors in site order.
  static QuantumState product(SpaceLabel space, const std::vector<CVec>& locals);
  static QuantumState maximally_mixed(SpaceLabel space);

  Representation representation() const { return rep_; }
  bool is_pure() const { return rep_ == Representation::Pure; }
  const SpaceLabel& space() const { return space_; }
  std::size_t dimension() const { return space_.dimension(); }
  const CVec& vector() const;
  const CMat& matrix() const;
  double declared_trace() const { return declared_trace_; }

  CMat density_matrix() const;
  QuantumState as_density() const;

 private:
  QuantumState() = default;
  SpaceLabel space_;
  Representation rep_ = Representation::Pure;
  CVec psi_;
  CMat rho_;
  double declared_trace_ = 1.0;
};

// e^{-iHt} psi via a restarted Lanczos propagator with a posteriori error
// control. H must be Hermitian to kHermiticityTol.
QuantumState expm_apply(const OperatorMatrix& H, double t, const QuantumState& psi);
CVec expm_apply_vector(const SparseRows& H, double t, const CVec& psi, double tol = 1e-12);

// Dense e^{-iHt} from a full eigendecomposition. Independent of expm_apply.
CMat expm_oracle(const OperatorMatrix& H, double t);
CMat expm_hermitian_dense(const CMat& H, double t);

double unitarity_defect(const CMat& U);

// ---- state utilities --------------------------------------------------------

// Applies a local matrix (dim x dim of that site) to a vector or density matrix.
CVec apply_local(const SpaceLabel& space, int site, const CMat& op, const CVec& psi);
CMat apply_local(const SpaceLabel& space, int site, const CMat& op, const CMat& rho);
// Applies a two-site matrix (ordered site_a slower than site_b in the local block).
CVec apply_two_site(const SpaceLabel& space, int site_a, int site_b, const CMat& op, const CVec& psi);
CMat apply_two_site(const SpaceLabel& space, int site_a, int site_b, const CMat& op, const CMat& rho);
QuantumState apply_local(const QuantumState& state, int site, const CMat& op);
QuantumState apply_two_site(const QuantumState& state, int site_a, int site_b, const CMat& op);

// Reduced density matrix on `keep` (ids, in the order given).
QuantumState partial_trace(const QuantumState& state, std::span<const int> keep);

// <target|rho|target> (or |<target|psi>|^2) with the target normalized.
double fidelity_with_pure(const QuantumState& state, const CVec& target);
double trace_distance(const CMat& rho, const CMat& sigma);
double min_eigenvalue(const CMat& hermitian);

}  // namespace ccsim
