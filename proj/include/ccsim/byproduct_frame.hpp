#pragma once

// Deferred Pauli corrections and qubit relabelings.
//
// A frame over n logical qubits hosted on n positions says
//   actual = Perm * Pauli * ideal,
// where Pauli = prod_i X_i^x[i] Z_i^z[i] acts on logical qubit i and Perm moves
// logical qubit i to position position(i). Global phases are not tracked.

#include <vector>

#include "json.hpp"
#include "ccsim/numkernel.hpp"

namespace ccsim {

class ByproductFrame {
 public:
  explicit ByproductFrame(int n = 0);

  int size() const { return static_cast<int>(pos_.size()); }
  int position(int logical) const;
  int logical_at(int position) const;
  bool x(int logical) const;
  bool z(int logical) const;
  bool is_identity() const;

  // Byproducts that occur physically at a position (after the current frame).
  void add_x_at(int position);
  void add_z_at(int position);
  // A physical SWAP of two positions.
  void swap_positions(int p, int q);
  // A physical CZ on two positions, applied while the frame is pending;
  // X byproducts pick up Z on the partner.
  void cz_positions(int p, int q);

  // Frame for "this, then next": (pi2 o pi1, p2 o pi1 xor p1).
  ByproductFrame then(const ByproductFrame& next) const;
  bool operator==(const ByproductFrame&) const = default;

  // `sites[k]` is the space site hosting position k.
  CVec apply(const SpaceLabel& space, const std::vector<int>& sites, const CVec& ideal) const;
  CMat apply(const SpaceLabel& space, const std::vector<int>& sites, const CMat& ideal) const;
  CVec correct(const SpaceLabel& space, const std::vector<int>& sites, const CVec& actual) const;
  CMat correct(const SpaceLabel& space, const std::vector<int>& sites, const CMat& actual) const;

  nlohmann::json to_json() const;

 private:
  void check(int k) const;
  std::vector<int> pos_;  // logical -> position
  std::vector<char> x_, z_;
};

// Moves the content of sites[k] to sites[target[k]]; target is a permutation
// of 0..n-1.
CVec permute_qubits(const SpaceLabel& space, const std::vector<int>& sites, const std::vector<int>& target, const CVec& psi);
CMat permute_qubits(const SpaceLabel& space, const std::vector<int>& sites, const std::vector<int>& target, const CMat& rho);

}  // namespace ccsim
