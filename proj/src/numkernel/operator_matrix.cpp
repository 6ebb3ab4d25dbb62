#include <algorithm>
#include <cmath>
#include <string>

#include "ccsim/numkernel.hpp"

namespace ccsim {

namespace {

void canonicalize(std::vector<Entry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<Entry> merged;
  merged.reserve(entries.size());
  for (const auto& e : entries) {
    if (!merged.empty() && merged.back().row == e.row && merged.back().col == e.col) {
      merged.back().value += e.value;
    } else {
      merged.push_back(e);
    }
  }
  std::erase_if(merged, [](const Entry& e) { return e.value == cplx{0.0, 0.0}; });
  entries = std::move(merged);
}

void require_same_space(const SpaceLabel& a, const SpaceLabel& b, const char* what) {
  if (!(a == b)) throw ShapeError(std::string("space mismatch in ") + what);
}

}  // namespace

OperatorMatrix::OperatorMatrix(SpaceLabel space, std::vector<Entry> entries)
    : space_(std::move(space)), entries_(std::move(entries)) {
  const auto dim = space_.dimension();
  for (const auto& e : entries_) {
    if (e.row >= dim || e.col >= dim)
      throw ShapeError("operator entry (" + std::to_string(e.row) + ", " + std::to_string(e.col) +
                       ") outside dimension " + std::to_string(dim));
  }
  canonicalize(entries_);
}

OperatorMatrix OperatorMatrix::zero(SpaceLabel space) { return OperatorMatrix(std::move(space), {}); }

OperatorMatrix OperatorMatrix::identity(SpaceLabel space) {
  std::vector<Entry> entries;
  entries.reserve(space.dimension());
  for (std::size_t i = 0; i < space.dimension(); ++i) entries.push_back({i, i, 1.0});
  OperatorMatrix out(std::move(space), std::move(entries));
  out.hermitian_flag_ = true;
  return out;
}

OperatorMatrix OperatorMatrix::diagonal(SpaceLabel space, std::span<const cplx> diag) {
  if (diag.size() != space.dimension()) throw ShapeError("diagonal length does not match space");
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < diag.size(); ++i) entries.push_back({i, i, diag[i]});
  return OperatorMatrix(std::move(space), std::move(entries));
}

OperatorMatrix OperatorMatrix::from_dense(SpaceLabel space, const CMat& dense, double drop_below) {
  const auto dim = space.dimension();
  if (static_cast<std::size_t>(dense.rows()) != dim || static_cast<std::size_t>(dense.cols()) != dim)
    throw ShapeError("dense matrix shape does not match space");
  std::vector<Entry> entries;
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t c = 0; c < dim; ++c) {
      const cplx v = dense(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      if (std::abs(v) > drop_below) entries.push_back({r, c, v});
    }
  return OperatorMatrix(std::move(space), std::move(entries));
}

cplx OperatorMatrix::at(std::size_t row, std::size_t col) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), Entry{row, col, {}},
                             [](const Entry& a, const Entry& b) {
                               return a.row != b.row ? a.row < b.row : a.col < b.col;
                             });
  if (it != entries_.end() && it->row == row && it->col == col) return it->value;
  return {};
}

double OperatorMatrix::max_abs() const {
  double m = 0.0;
  for (const auto& e : entries_) m = std::max(m, std::abs(e.value));
  return m;
}

double OperatorMatrix::hermiticity_defect() const {
  double defect = 0.0;
  for (const auto& e : entries_) defect = std::max(defect, std::abs(e.value - std::conj(at(e.col, e.row))));
  return defect;
}

OperatorMatrix& OperatorMatrix::require_hermitian() {
  const double defect = hermiticity_defect();
  if (defect > kHermiticityTol)
    throw DomainError("operator is not Hermitian (defect " + std::to_string(defect) + ")");
  hermitian_flag_ = true;
  return *this;
}

OperatorMatrix OperatorMatrix::adjoint() const {
  std::vector<Entry> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back({e.col, e.row, std::conj(e.value)});
  OperatorMatrix result(space_, std::move(out));
  result.hermitian_flag_ = hermitian_flag_;
  return result;
}

CVec OperatorMatrix::apply(const CVec& v) const {
  if (static_cast<std::size_t>(v.size()) != dimension()) throw ShapeError("vector length does not match operator");
  CVec out = CVec::Zero(v.size());
  for (const auto& e : entries_)
    out(static_cast<Eigen::Index>(e.row)) += e.value * v(static_cast<Eigen::Index>(e.col));
  return out;
}

CMat OperatorMatrix::to_dense() const {
  const auto n = static_cast<Eigen::Index>(dimension());
  CMat out = CMat::Zero(n, n);
  for (const auto& e : entries_) out(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col)) = e.value;
  return out;
}

SparseRows OperatorMatrix::to_sparse() const {
  const auto n = static_cast<Eigen::Index>(dimension());
  SparseRows out(n, n);
  std::vector<Eigen::Triplet<cplx>> triplets;
  triplets.reserve(entries_.size());
  for (const auto& e : entries_)
    triplets.emplace_back(static_cast<int>(e.row), static_cast<int>(e.col), e.value);
  out.setFromTriplets(triplets.begin(), triplets.end());
  out.makeCompressed();
  return out;
}

std::vector<cplx> OperatorMatrix::diagonal_values() const {
  std::vector<cplx> d(dimension(), cplx{});
  for (const auto& e : entries_)
    if (e.row == e.col) d[e.row] = e.value;
  return d;
}

OperatorMatrix OperatorMatrix::off_diagonal() const {
  std::vector<Entry> out;
  for (const auto& e : entries_)
    if (e.row != e.col) out.push_back(e);
  OperatorMatrix result(space_, std::move(out));
  result.hermitian_flag_ = hermitian_flag_;
  return result;
}

OperatorMatrix OperatorMatrix::operator+(const OperatorMatrix& rhs) const {
  require_same_space(space_, rhs.space_, "operator +");
  std::vector<Entry> all = entries_;
  all.insert(all.end(), rhs.entries_.begin(), rhs.entries_.end());
  OperatorMatrix out(space_, std::move(all));
  out.hermitian_flag_ = hermitian_flag_ && rhs.hermitian_flag_;
  return out;
}

OperatorMatrix OperatorMatrix::operator-(const OperatorMatrix& rhs) const { return *this + rhs * cplx{-1.0, 0.0}; }

OperatorMatrix OperatorMatrix::operator*(cplx scale) const {
  std::vector<Entry> out = entries_;
  for (auto& e : out) e.value *= scale;
  OperatorMatrix result(space_, std::move(out));
  result.hermitian_flag_ = hermitian_flag_ && scale.imag() == 0.0;
  return result;
}

OperatorMatrix OperatorMatrix::operator*(const OperatorMatrix& rhs) const {
  require_same_space(space_, rhs.space_, "operator *");
  const auto dim = dimension();
  // Row offsets of rhs for CSR-style access.
  std::vector<std::size_t> offsets(dim + 1, 0);
  for (const auto& e : rhs.entries_) ++offsets[e.row + 1];
  for (std::size_t r = 0; r < dim; ++r) offsets[r + 1] += offsets[r];

  std::vector<Entry> out;
  std::vector<cplx> acc(dim, cplx{});
  std::vector<char> touched(dim, 0);
  std::vector<std::size_t> cols;
  std::size_t k = 0;
  while (k < entries_.size()) {
    const std::size_t row = entries_[k].row;
    cols.clear();
    for (; k < entries_.size() && entries_[k].row == row; ++k) {
      const auto& a = entries_[k];
      for (std::size_t j = offsets[a.col]; j < offsets[a.col + 1]; ++j) {
        const auto& b = rhs.entries_[j];
        if (!touched[b.col]) {
          touched[b.col] = 1;
          cols.push_back(b.col);
        }
        acc[b.col] += a.value * b.value;
      }
    }
    for (auto c : cols) {
      out.push_back({row, c, acc[c]});
      acc[c] = cplx{};
      touched[c] = 0;
    }
  }
  return OperatorMatrix(space_, std::move(out));
}

// ---- local operators ---------------------------------------------------------

OperatorMatrix local_operator(const CMat& matrix) {
  if (matrix.rows() != matrix.cols() || matrix.rows() < 1) throw ShapeError("local operator must be square");
  return OperatorMatrix::from_dense(SpaceLabel({{0, static_cast<int>(matrix.rows())}}), matrix);
}

OperatorMatrix pauli_x() {
  CMat m(2, 2);
  m << 0, 1, 1, 0;
  return local_operator(m);
}

OperatorMatrix pauli_y() {
  CMat m(2, 2);
  m << 0, -kI, kI, 0;
  return local_operator(m);
}

OperatorMatrix pauli_z() {
  CMat m(2, 2);
  m << 1, 0, 0, -1;
  return local_operator(m);
}

OperatorMatrix sigma_minus() {
  CMat m = CMat::Zero(2, 2);
  m(0, 1) = 1.0;
  return local_operator(m);
}

OperatorMatrix sigma_plus() {
  CMat m = CMat::Zero(2, 2);
  m(1, 0) = 1.0;
  return local_operator(m);
}

OperatorMatrix qubit_number() {
  CMat m = CMat::Zero(2, 2);
  m(1, 1) = 1.0;
  return local_operator(m);
}

OperatorMatrix annihilation(int local_dim) {
  if (local_dim < 1) throw ShapeError("annihilation needs a positive local dimension");
  CMat m = CMat::Zero(local_dim, local_dim);
  for (int n = 1; n < local_dim; ++n) m(n - 1, n) = std::sqrt(static_cast<double>(n));
  return local_operator(m);
}

OperatorMatrix creation(int local_dim) { return annihilation(local_dim).adjoint(); }

OperatorMatrix embed(const OperatorMatrix& local_op, int target_site, const SpaceLabel& space) {
  const std::size_t d = static_cast<std::size_t>(space.local_dim(target_site));
  if (local_op.dimension() != d)
    throw ShapeError("local operator dimension " + std::to_string(local_op.dimension()) +
                     " does not match site " + std::to_string(target_site) + " of dimension " +
                     std::to_string(d));
  const std::size_t inner = space.stride(target_site);
  const std::size_t outer = space.dimension() / (inner * d);
  std::vector<Entry> out;
  out.reserve(local_op.nnz() * inner * outer);
  for (std::size_t o = 0; o < outer; ++o)
    for (const auto& e : local_op.entries())
      for (std::size_t i = 0; i < inner; ++i)
        out.push_back({(o * d + e.row) * inner + i, (o * d + e.col) * inner + i, e.value});
  OperatorMatrix result(space, std::move(out));
  if (local_op.hermitian_flag()) result.require_hermitian();
  return result;
}

}  // namespace ccsim
