#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "ccsim/numkernel.hpp"
#include "ccsim/serialize.hpp"

using namespace ccsim;
using namespace testing_helpers;

namespace {

OperatorMatrix xy_chain(int n, double A) {
  const auto space = SpaceLabel::qubits(n);
  auto H = OperatorMatrix::zero(space);
  for (int k = 0; k + 1 < n; ++k) {
    H = H + A * (embed(pauli_x(), k, space) * embed(pauli_x(), k + 1, space));
    H = H + A * (embed(pauli_y(), k, space) * embed(pauli_y(), k + 1, space));
  }
  H.require_hermitian();
  return H;
}

}  // namespace

TEST_CASE("space label bookkeeping") {
  SpaceLabel s({{1, 3}, {2, 2}});
  CHECK(s.dimension() == 6);
  CHECK(s.stride(1) == 2);
  CHECK(s.stride(2) == 1);
  CHECK_THROWS_AS(s.position(7), ShapeError);
  CHECK_THROWS_AS(SpaceLabel({{0, 2}, {0, 2}}), ShapeError);
  CHECK_THROWS_AS(SpaceLabel({{0, 0}}), ShapeError);
  CHECK(SpaceLabel().dimension() == 1);
}

TEST_CASE("operator entries are canonical") {
  const auto s = SpaceLabel::qubits(1);
  OperatorMatrix op(s, {{1, 0, 2.0}, {0, 1, 1.0}, {0, 1, 1.0}, {1, 1, 0.0}});
  REQUIRE(op.nnz() == 2);
  CHECK(op.entries()[0].row == 0);
  CHECK(op.entries()[0].value == cplx{2.0, 0.0});
  CHECK_THROWS_AS(OperatorMatrix(s, {{2, 0, 1.0}}), ShapeError);
  CHECK_THROWS_AS((pauli_x() + embed(pauli_x(), 0, SpaceLabel::qubits(2))), ShapeError);
}

TEST_CASE("embed") {
  const auto s3 = SpaceLabel::qubits(3);
  CHECK((embed(OperatorMatrix::identity(SpaceLabel::qubits(1)), 1, s3).to_dense() - CMat::Identity(8, 8)).norm() == 0.0);

  // Site 2 of a 2-qubit space has id 1 here; the second factor.
  const auto s2 = SpaceLabel::qubits(2);
  const CMat expect = kron(CMat::Identity(2, 2), pauli_x().to_dense());
  CHECK((embed(pauli_x(), 1, s2).to_dense() - expect).norm() == 0.0);

  const SpaceLabel mixed({{1, 3}, {2, 2}});
  const CMat a3 = annihilation(3).to_dense();
  const CMat brute = kron(a3, CMat::Identity(2, 2));
  const CMat got = embed(annihilation(3), 1, mixed).to_dense();
  CHECK((got - brute).norm() < 1e-15);
  // Nonzeros only where the first factor loses one excitation.
  for (Eigen::Index r = 0; r < 6; ++r)
    for (Eigen::Index c = 0; c < 6; ++c)
      if (got(r, c) != cplx{}) {
        CHECK(r / 2 == c / 2 - 1);
        CHECK(r % 2 == c % 2);
      }

  CHECK_THROWS_AS(embed(pauli_x(), 5, s2), ShapeError);
  CHECK_THROWS_AS(embed(annihilation(3), 0, s2), ShapeError);
}

TEST_CASE("embed is a homomorphism") {
  std::mt19937_64 rng(3);
  const SpaceLabel s({{0, 2}, {1, 3}, {2, 2}});
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = local_operator(random_matrix(rng, 3));
    const auto b = local_operator(random_matrix(rng, 3));
    const CMat lhs = embed(a * b, 1, s).to_dense();
    const CMat rhs = (embed(a, 1, s) * embed(b, 1, s)).to_dense();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("hermiticity flag") {
  auto h = pauli_x() + pauli_z();
  CHECK_NOTHROW(h.require_hermitian());
  CHECK(h.hermitian_flag());
  auto bad = sigma_minus();
  CHECK_THROWS_AS(bad.require_hermitian(), DomainError);
  const auto psi = QuantumState::basis(SpaceLabel::qubits(1), 0);
  CHECK_THROWS_AS(expm_apply(bad, 1.0, psi), DomainError);
}

TEST_CASE("expm_apply examples") {
  const auto s1 = SpaceLabel::qubits(1);
  const auto psi0 = QuantumState::basis(s1, 0);
  auto z = pauli_z();
  z.require_hermitian();
  const auto same = expm_apply(z, 0.0, psi0);
  CHECK((same.vector() - psi0.vector()).norm() == 0.0);
  const double t = 0.37;
  const auto rotated = expm_apply(z, t, psi0);
  CHECK(std::abs(rotated.vector()(0) - std::exp(-kI * t)) < 1e-12);

  const double A = 1.3;
  const auto H = xy_chain(2, A);
  const auto in = QuantumState::basis(SpaceLabel::qubits(2), 0b10);
  const auto out = expm_apply(H, std::numbers::pi / (4 * A), in);
  CHECK(std::abs(std::abs(out.vector()(0b01)) - 1.0) < 1e-10);

  CHECK_THROWS_AS(expm_apply(H, 1.0, psi0), ShapeError);
}

TEST_CASE("expm_oracle examples") {
  const auto s1 = SpaceLabel::qubits(1);
  const CMat I = expm_oracle(OperatorMatrix::zero(s1), 2.0);
  CHECK((I - CMat::Identity(2, 2)).norm() < 1e-15);
  const CMat rx = expm_oracle(pauli_x(), std::numbers::pi / 2);
  CHECK((rx - (-kI) * pauli_x().to_dense()).cwiseAbs().maxCoeff() < 1e-12);

  // Single-excitation block of the 3-site chain.
  const double A = 0.7;
  CMat block = CMat::Zero(3, 3);
  block(0, 1) = block(1, 0) = block(1, 2) = block(2, 1) = 2 * A;
  auto h3 = OperatorMatrix::from_dense(SpaceLabel({{0, 3}}), block);
  h3.require_hermitian();
  const double t0 = std::numbers::pi / (2 * std::sqrt(2.0) * A);
  const CMat U = expm_oracle(h3, t0);
  CHECK(std::abs(std::abs(U(2, 0)) - 1.0) < 1e-12);
  CHECK(unitarity_defect(U) < kUnitarityTol);
  Eigen::SelfAdjointEigenSolver<CMat> es(block);
  CHECK(es.eigenvalues()(0) == doctest::Approx(-2 * std::sqrt(2.0) * A));
  CHECK(std::abs(es.eigenvalues()(1)) < 1e-12);
  CHECK(es.eigenvalues()(2) == doctest::Approx(2 * std::sqrt(2.0) * A));

  CHECK_THROWS_AS(expm_oracle(OperatorMatrix::zero(SpaceLabel::qubits(13)), 1.0), ShapeError);
}

TEST_CASE("3-site chain transfers |100> to |001> at t0") {
  const double A = 1.0;
  const auto H = xy_chain(3, A);
  const auto in = QuantumState::basis(SpaceLabel::qubits(3), 0b100);
  const auto out = expm_apply(H, std::numbers::pi / (2 * std::sqrt(2.0) * A), in);
  CHECK(std::abs(std::abs(out.vector()(0b001)) - 1.0) < 1e-10);
}

TEST_CASE("propagator agrees with oracle on random instances") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const int n = 1 + static_cast<int>(seed % 7);
    const auto space = SpaceLabel::qubits(n);
    const auto dim = static_cast<Eigen::Index>(space.dimension());
    auto H = OperatorMatrix::from_dense(space, random_hermitian(rng, dim));
    H.require_hermitian();
    const double t = std::uniform_real_distribution<double>(-3.0, 3.0)(rng);
    const CVec psi = random_state(rng, dim);
    const auto got = expm_apply(H, t, QuantumState::pure(space, psi));
    const CVec ref = expm_oracle(H, t) * psi;
    CHECK((got.vector() - ref).norm() < 1e-8);
    CHECK(std::abs(got.vector().norm() - 1.0) < 1e-9);
  }
}

TEST_CASE("propagation composes") {
  std::mt19937_64 rng(11);
  const auto space = SpaceLabel::qubits(6);
  auto H = OperatorMatrix::from_dense(space, random_hermitian(rng, 64));
  H.require_hermitian();
  const auto psi = QuantumState::pure(space, random_state(rng, 64));
  const auto once = expm_apply(H, 1.7, psi);
  const auto twice = expm_apply(H, 0.4, expm_apply(H, 1.3, psi));
  CHECK((once.vector() - twice.vector()).norm() < 1e-8);
}

TEST_CASE("long-time sparse propagation") {
  const auto H = xy_chain(10, 1.0);
  std::mt19937_64 rng(5);
  const auto space = H.space();
  const CVec psi = random_state(rng, 1024);
  const CVec got = expm_apply_vector(H.to_sparse(), 25.0, psi);
  const CVec ref = expm_oracle(H, 25.0) * psi;
  CHECK((got - ref).norm() < 1e-8);
}

TEST_CASE("density propagation") {
  std::mt19937_64 rng(2);
  const auto space = SpaceLabel::qubits(3);
  auto H = OperatorMatrix::from_dense(space, random_hermitian(rng, 8));
  H.require_hermitian();
  const CMat rho = random_density(rng, 8);
  const auto out = expm_apply(H, 0.8, QuantumState::density(space, rho));
  const CMat U = expm_oracle(H, 0.8);
  CHECK((out.matrix() - U * rho * U.adjoint()).norm() < 1e-10);
}

TEST_CASE("state invariants") {
  const auto s = SpaceLabel::qubits(1);
  CVec v(2);
  v << 1.0, 1.0;
  CHECK_THROWS_AS(QuantumState::pure(s, v), DomainError);
  CMat bad(2, 2);
  bad << 1.5, 0, 0, -0.5;
  CHECK_THROWS_AS(QuantumState::density(s, bad), DomainError);
  CMat half = CMat::Identity(2, 2) * 0.25;
  CHECK_NOTHROW(QuantumState::density(s, half, 0.5));
  CHECK_THROWS_AS(QuantumState::density(s, half, 1.0), DomainError);
  const auto mm = QuantumState::maximally_mixed(SpaceLabel::qubits(2));
  CHECK(mm.matrix()(0, 0).real() == doctest::Approx(0.25));
}

TEST_CASE("local and two-site application match dense kron") {
  std::mt19937_64 rng(9);
  const SpaceLabel space({{4, 2}, {7, 3}, {1, 2}});
  const CMat op2 = random_matrix(rng, 2);
  const CMat op3 = random_matrix(rng, 3);
  const CVec psi = random_state(rng, 12);
  const CMat dense_local = kron(kron(CMat::Identity(2, 2), op3), CMat::Identity(2, 2));
  CHECK((apply_local(space, 7, op3, psi) - dense_local * psi).norm() < 1e-12);

  const CMat op23 = random_matrix(rng, 6);
  // Acting on sites 7 (dim 3) and 4 (dim 2), reversed order in the block.
  CMat full = CMat::Zero(12, 12);
  for (int a4 = 0; a4 < 2; ++a4)
    for (int a7 = 0; a7 < 3; ++a7)
      for (int b4 = 0; b4 < 2; ++b4)
        for (int b7 = 0; b7 < 3; ++b7)
          for (int s1 = 0; s1 < 2; ++s1) full((a4 * 3 + a7) * 2 + s1, (b4 * 3 + b7) * 2 + s1) = op23(a7 * 2 + a4, b7 * 2 + b4);
  CHECK((apply_two_site(space, 7, 4, op23, psi) - full * psi).norm() < 1e-12);
  const CMat rho = random_density(rng, 12);
  CHECK((apply_two_site(space, 7, 4, op23, rho) - full * rho * full.adjoint()).norm() < 1e-12);
  (void)op2;
}

TEST_CASE("partial trace") {
  std::mt19937_64 rng(4);
  const auto space = SpaceLabel::qubits(3);
  const CVec psi = random_state(rng, 8);
  const auto st = QuantumState::pure(space, psi);
  const int keep[] = {2, 0};
  const auto red = partial_trace(st, keep);
  // Brute force: rho_red[(c,a),(c',a')] = sum_b psi[a b c] psi*[a' b c'].
  CMat ref = CMat::Zero(4, 4);
  for (int a = 0; a < 2; ++a)
    for (int c = 0; c < 2; ++c)
      for (int a2 = 0; a2 < 2; ++a2)
        for (int c2 = 0; c2 < 2; ++c2)
          for (int b = 0; b < 2; ++b) ref(c * 2 + a, c2 * 2 + a2) += psi(a * 4 + b * 2 + c) * std::conj(psi(a2 * 4 + b * 2 + c2));
  CHECK((red.matrix() - ref).norm() < 1e-12);
  const auto red2 = partial_trace(st.as_density(), keep);
  CHECK((red2.matrix() - ref).norm() < 1e-12);
}

TEST_CASE("fidelity and trace distance") {
  const auto s = SpaceLabel::qubits(2);
  CVec t = CVec::Zero(4);
  t(0) = 1.0;
  CHECK(fidelity_with_pure(QuantumState::maximally_mixed(s), t) == doctest::Approx(0.25));
  CHECK(fidelity_with_pure(QuantumState::basis(s, 0), t) == doctest::Approx(1.0));
  CMat a = CMat::Zero(2, 2), b = CMat::Zero(2, 2);
  a(0, 0) = 1.0;
  b(1, 1) = 1.0;
  CHECK(trace_distance(a, b) == doctest::Approx(1.0));
}

TEST_CASE("serialization round trip") {
  std::mt19937_64 rng(8);
  const SpaceLabel space({{3, 2}, {5, 3}});
  const auto op = OperatorMatrix::from_dense(space, random_matrix(rng, 6));
  const auto j = operator_to_json(op);
  const auto back = operator_from_json(j);
  CHECK((back.to_dense() - op.to_dense()).norm() == 0.0);
  CHECK(j["space"][1][0] == 5);
  CHECK(j["entries"][0][0] == 0);
  // Shuffled entries canonicalize to the same document.
  auto shuffled = j;
  std::reverse(shuffled["entries"].begin(), shuffled["entries"].end());
  CHECK(operator_to_json(operator_from_json(shuffled)).dump() == j.dump());

  const auto psi = QuantumState::pure(space, random_state(rng, 6));
  CHECK((state_from_json(state_to_json(psi)).vector() - psi.vector()).norm() == 0.0);
  const auto rho = QuantumState::density(space, random_density(rng, 6));
  CHECK((state_from_json(state_to_json(rho)).matrix() - rho.matrix()).norm() < 1e-15);
}
