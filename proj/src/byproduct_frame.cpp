#include "ccsim/byproduct_frame.hpp"

#include <numeric>
#include <string>

namespace ccsim {

ByproductFrame::ByproductFrame(int n) : pos_(static_cast<std::size_t>(std::max(n, 0))), x_(pos_.size(), 0), z_(pos_.size(), 0) {
  std::iota(pos_.begin(), pos_.end(), 0);
}

void ByproductFrame::check(int k) const {
  if (k < 0 || k >= size()) throw ShapeError("frame index " + std::to_string(k) + " out of range");
}

int ByproductFrame::position(int logical) const {
  check(logical);
  return pos_[static_cast<std::size_t>(logical)];
}

int ByproductFrame::logical_at(int position) const {
  check(position);
  for (std::size_t i = 0; i < pos_.size(); ++i)
    if (pos_[i] == position) return static_cast<int>(i);
  throw ShapeError("frame permutation is corrupt");
}

bool ByproductFrame::x(int logical) const {
  check(logical);
  return x_[static_cast<std::size_t>(logical)];
}

bool ByproductFrame::z(int logical) const {
  check(logical);
  return z_[static_cast<std::size_t>(logical)];
}

bool ByproductFrame::is_identity() const {
  for (std::size_t i = 0; i < pos_.size(); ++i)
    if (pos_[i] != static_cast<int>(i) || x_[i] || z_[i]) return false;
  return true;
}

void ByproductFrame::add_x_at(int position) { x_[static_cast<std::size_t>(logical_at(position))] ^= 1; }
void ByproductFrame::add_z_at(int position) { z_[static_cast<std::size_t>(logical_at(position))] ^= 1; }

void ByproductFrame::swap_positions(int p, int q) {
  const int a = logical_at(p), b = logical_at(q);
  std::swap(pos_[static_cast<std::size_t>(a)], pos_[static_cast<std::size_t>(b)]);
}

void ByproductFrame::cz_positions(int p, int q) {
  if (p == q) throw ShapeError("CZ needs two distinct positions");
  const auto a = static_cast<std::size_t>(logical_at(p)), b = static_cast<std::size_t>(logical_at(q));
  z_[a] ^= x_[b];
  z_[b] ^= x_[a];
}

ByproductFrame ByproductFrame::then(const ByproductFrame& next) const {
  if (next.size() != size()) throw ShapeError("frames of different size");
  ByproductFrame out(size());
  for (std::size_t i = 0; i < pos_.size(); ++i) {
    const auto p = static_cast<std::size_t>(pos_[i]);
    out.pos_[i] = next.pos_[p];
    // In next's labels, our position p is its logical p.
    out.x_[i] = static_cast<char>(next.x_[p] ^ x_[i]);
    out.z_[i] = static_cast<char>(next.z_[p] ^ z_[i]);
  }
  return out;
}

namespace {

void check_sites(const SpaceLabel& space, const std::vector<int>& sites, int n) {
  if (static_cast<int>(sites.size()) != n) throw ShapeError("frame size differs from the number of host sites");
  for (int s : sites)
    if (space.local_dim(s) != 2) throw ShapeError("frame host sites must be qubits");
}

std::vector<std::size_t> index_map(const SpaceLabel& space, const std::vector<int>& sites, const std::vector<int>& target) {
  const auto n = space.dimension();
  std::vector<std::size_t> map(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = i;
    for (std::size_t k = 0; k < sites.size(); ++k) {
      const auto st = space.stride(sites[k]);
      if ((i / st) % 2) j -= st;
    }
    for (std::size_t k = 0; k < sites.size(); ++k) {
      const auto src = space.stride(sites[k]);
      const auto dst = space.stride(sites[static_cast<std::size_t>(target[k])]);
      if ((i / src) % 2) j += dst;
    }
    map[i] = j;
  }
  return map;
}

void check_perm(const std::vector<int>& target) {
  std::vector<char> seen(target.size(), 0);
  for (int t : target) {
    if (t < 0 || t >= static_cast<int>(target.size()) || seen[static_cast<std::size_t>(t)])
      throw ShapeError("not a permutation");
    seen[static_cast<std::size_t>(t)] = 1;
  }
}

CMat pauli_xz(bool x, bool z) {
  CMat m = CMat::Identity(2, 2);
  if (z) m = pauli_z().to_dense() * m;
  if (x) m = pauli_x().to_dense() * m;
  return m;
}

}  // namespace

CVec permute_qubits(const SpaceLabel& space, const std::vector<int>& sites, const std::vector<int>& target, const CVec& psi) {
  check_perm(target);
  check_sites(space, sites, static_cast<int>(target.size()));
  const auto map = index_map(space, sites, target);
  CVec out(psi.size());
  for (std::size_t i = 0; i < map.size(); ++i) out(static_cast<Eigen::Index>(map[i])) = psi(static_cast<Eigen::Index>(i));
  return out;
}

CMat permute_qubits(const SpaceLabel& space, const std::vector<int>& sites, const std::vector<int>& target, const CMat& rho) {
  check_perm(target);
  check_sites(space, sites, static_cast<int>(target.size()));
  const auto map = index_map(space, sites, target);
  CMat out(rho.rows(), rho.cols());
  for (std::size_t c = 0; c < map.size(); ++c)
    for (std::size_t r = 0; r < map.size(); ++r)
      out(static_cast<Eigen::Index>(map[r]), static_cast<Eigen::Index>(map[c])) = rho(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  return out;
}

CVec ByproductFrame::apply(const SpaceLabel& space, const std::vector<int>& sites, const CVec& ideal) const {
  check_sites(space, sites, size());
  CVec v = ideal;
  for (int i = 0; i < size(); ++i)
    if (x(i) || z(i)) v = apply_local(space, sites[static_cast<std::size_t>(i)], pauli_xz(x(i), z(i)), v);
  return permute_qubits(space, sites, pos_, v);
}

CMat ByproductFrame::apply(const SpaceLabel& space, const std::vector<int>& sites, const CMat& ideal) const {
  check_sites(space, sites, size());
  CMat m = ideal;
  for (int i = 0; i < size(); ++i)
    if (x(i) || z(i)) m = apply_local(space, sites[static_cast<std::size_t>(i)], pauli_xz(x(i), z(i)), m);
  return permute_qubits(space, sites, pos_, m);
}

namespace {

std::vector<int> inverse(const std::vector<int>& p) {
  std::vector<int> inv(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) inv[static_cast<std::size_t>(p[i])] = static_cast<int>(i);
  return inv;
}

}  // namespace

CVec ByproductFrame::correct(const SpaceLabel& space, const std::vector<int>& sites, const CVec& actual) const {
  check_sites(space, sites, size());
  CVec v = permute_qubits(space, sites, inverse(pos_), actual);
  for (int i = 0; i < size(); ++i)
    if (x(i) || z(i)) v = apply_local(space, sites[static_cast<std::size_t>(i)], pauli_xz(x(i), z(i)).adjoint(), v);
  return v;
}

CMat ByproductFrame::correct(const SpaceLabel& space, const std::vector<int>& sites, const CMat& actual) const {
  check_sites(space, sites, size());
  CMat m = permute_qubits(space, sites, inverse(pos_), actual);
  for (int i = 0; i < size(); ++i)
    if (x(i) || z(i)) m = apply_local(space, sites[static_cast<std::size_t>(i)], pauli_xz(x(i), z(i)).adjoint(), m);
  return m;
}

nlohmann::json ByproductFrame::to_json() const {
  nlohmann::json paulis = nlohmann::json::array();
  for (int i = 0; i < size(); ++i) paulis.push_back({static_cast<int>(x(i)), static_cast<int>(z(i))});
  return {{"permutation", pos_}, {"pauli", paulis}};
}

}  // namespace ccsim
