#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "ccsim/byproduct_frame.hpp"

using namespace ccsim;
using namespace testing_helpers;

namespace {

CMat cz() {
  CMat m = CMat::Identity(4, 4);
  m(3, 3) = -1.0;
  return m;
}

CMat swap_gate() {
  CMat m = CMat::Zero(4, 4);
  m(0, 0) = m(3, 3) = m(1, 2) = m(2, 1) = 1.0;
  return m;
}

ByproductFrame random_frame(std::mt19937_64& rng, int n) {
  ByproductFrame f(n);
  std::uniform_int_distribution<int> pick(0, n - 1), op(0, 3);
  for (int k = 0; k < 12; ++k) {
    const int p = pick(rng);
    int q = pick(rng);
    if (q == p) q = (p + 1) % n;
    switch (op(rng)) {
      case 0: f.add_x_at(p); break;
      case 1: f.add_z_at(p); break;
      case 2: f.swap_positions(p, q); break;
      default: f.cz_positions(p, q); break;
    }
  }
  return f;
}

}  // namespace

TEST_CASE("frame apply equals the explicit permutation times Pauli operator") {
  // Two qubits: X on logical 0, Z on logical 1, then the two swapped.
  ByproductFrame f(2);
  f.add_x_at(0);
  f.add_z_at(1);
  f.swap_positions(0, 1);
  const CMat X = pauli_x().to_dense(), Z = pauli_z().to_dense();
  const CMat expected = swap_gate() * kron(X, Z);
  std::mt19937_64 rng(3);
  const auto space = SpaceLabel::qubits(2);
  for (int k = 0; k < 5; ++k) {
    const CVec psi = random_state(rng, 4);
    CHECK(phase_distance(f.apply(space, {0, 1}, psi), expected * psi) < 1e-12);
  }
  CHECK(f.position(0) == 1);
  CHECK(f.logical_at(0) == 1);
  CHECK(f.x(0));
  CHECK(f.z(1));
}

TEST_CASE("permute_qubits moves site content to the target site") {
  const auto space = SpaceLabel::qubits(3);
  // |100> with content of site 0 sent to site 2, site 2 to site 1, site 1 to site 0.
  const CVec e = QuantumState::basis(space, 4).vector();
  const CVec out = permute_qubits(space, {0, 1, 2}, {2, 0, 1}, e);
  CHECK(std::abs(out(1) - 1.0) < 1e-15);
  CHECK_THROWS_AS(permute_qubits(space, {0, 1, 2}, {0, 0, 1}, e), ShapeError);
}

TEST_CASE("correct undoes apply on a subset of host sites") {
  std::mt19937_64 rng(11);
  const auto space = SpaceLabel::qubits(4);
  const std::vector<int> hosts{3, 0, 2};
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = random_frame(rng, 3);
    const CVec psi = random_state(rng, 16);
    CHECK(phase_distance(f.correct(space, hosts, f.apply(space, hosts, psi)), psi) < 1e-12);
    const CMat rho = random_density(rng, 16);
    CHECK((f.correct(space, hosts, f.apply(space, hosts, rho)) - rho).norm() < 1e-12);
  }
}

TEST_CASE("composition matches sequential application and is associative") {
  std::mt19937_64 rng(5);
  const auto space = SpaceLabel::qubits(3);
  const std::vector<int> hosts{0, 1, 2};
  for (int trial = 0; trial < 30; ++trial) {
    const auto a = random_frame(rng, 3), b = random_frame(rng, 3), c = random_frame(rng, 3);
    const CVec psi = random_state(rng, 8);
    CHECK(phase_distance(b.apply(space, hosts, a.apply(space, hosts, psi)), a.then(b).apply(space, hosts, psi)) < 1e-12);
    CHECK(a.then(b).then(c) == a.then(b.then(c)));
  }
  CHECK(ByproductFrame(3).then(ByproductFrame(3)).is_identity());
}

TEST_CASE("physical operations after a frame are absorbed correctly") {
  std::mt19937_64 rng(9);
  const auto space = SpaceLabel::qubits(3);
  const std::vector<int> hosts{0, 1, 2};
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = random_frame(rng, 3);
    const CVec psi = random_state(rng, 8);
    const CVec actual = f.apply(space, hosts, psi);

    // Z at position 1.
    auto fz = f;
    fz.add_z_at(1);
    CHECK(phase_distance(apply_local(space, 1, pauli_z().to_dense(), actual), fz.apply(space, hosts, psi)) < 1e-12);

    // SWAP of positions 0 and 2.
    auto fs = f;
    fs.swap_positions(0, 2);
    CHECK(phase_distance(apply_two_site(space, 0, 2, swap_gate(), actual), fs.apply(space, hosts, psi)) < 1e-12);

    // CZ on positions 0 and 2 is the ideal CZ on the logicals sitting there,
    // with X byproducts spreading Z onto the partner.
    auto fc = f;
    fc.cz_positions(0, 2);
    const CVec ideal_cz = apply_two_site(space, f.logical_at(0), f.logical_at(2), cz(), psi);
    CHECK(phase_distance(apply_two_site(space, 0, 2, cz(), actual), fc.apply(space, hosts, ideal_cz)) < 1e-12);
  }
}

TEST_CASE("frame JSON lists the permutation and Pauli bits") {
  ByproductFrame f(2);
  f.add_z_at(0);
  f.swap_positions(0, 1);
  const auto j = f.to_json();
  CHECK(j["permutation"] == nlohmann::json({1, 0}));
  CHECK(j["pauli"][0] == nlohmann::json({0, 1}));
  CHECK_THROWS_AS(f.position(2), ShapeError);
}
