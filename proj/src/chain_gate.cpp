#include "ccsim/chain_gate.hpp"

#include <cmath>
#include <numbers>

#include "ccsim/cavity_model.hpp"
#include "ccsim/dynamics.hpp"

namespace ccsim {

double transfer_time(double A) {
  if (!(A > 0)) throw DomainError("coupling A must be positive");
  return std::numbers::pi / (2.0 * std::sqrt(2.0) * A);
}

CMat gate_cp() {
  CMat m = CMat::Identity(4, 4);
  m(3, 3) = -1.0;
  return m;
}

CMat gate_swap() {
  CMat m = CMat::Zero(4, 4);
  m(0, 0) = m(1, 2) = m(2, 1) = m(3, 3) = 1.0;
  return m;
}

CMat gate_zz() {
  CMat m = CMat::Zero(4, 4);
  m(0, 0) = m(3, 3) = 1.0;
  m(1, 1) = m(2, 2) = -1.0;
  return m;
}

CMat canonical_gate(int outcome) {
  if (outcome == 1) return gate_swap() * gate_cp();
  if (outcome == 0) return gate_swap() * gate_zz() * gate_cp();
  throw DomainError("outcome must be 0 or 1");
}

std::string canonical_label(int outcome) {
  if (outcome == 1) return "SWAP.CP";
  if (outcome == 0) return "SWAP.(Z x Z).CP";
  throw DomainError("outcome must be 0 or 1");
}

double gate_distance(const CMat& U, const CMat& V) {
  if (U.rows() != V.rows() || U.cols() != V.cols() || U.rows() != U.cols())
    throw ShapeError("gate_distance: dimension mismatch");
  return 1.0 - std::abs((U.adjoint() * V).trace()) / static_cast<double>(U.rows());
}

namespace {

OperatorMatrix three_chain(double A, double middle_detuning) {
  DetuningProfile d;
  if (middle_detuning != 0.0) d.set(1, middle_detuning);
  return build_effective_xy(SpaceLabel::qubits(3), {{0, 1}, {1, 2}}, A, d);
}

ConditionalGate measure_gate(double A, int outcome, const GateOptions& options, bool strict) {
  if (outcome != 0 && outcome != 1) throw DomainError("outcome must be 0 or 1");
  const double t = options.time < 0 ? transfer_time(A) : options.time;
  const auto H = three_chain(A, 0.0);
  const auto space = H.space();
  CVec mid(2);
  if (options.prep == MediatorPrep::Zero) mid << 1.0, 0.0;
  else mid << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);

  ConditionalGate g;
  g.outcome = outcome;
  g.time = t;
  g.prep = options.prep;
  CMat M(4, 4);
  const char* labels[4] = {"00", "01", "10", "11"};
  double lo = 1.0, hi = 0.0;
  for (int in = 0; in < 4; ++in) {
    CVec a = CVec::Zero(2), b = CVec::Zero(2);
    a((in >> 1) & 1) = 1.0;
    b(in & 1) = 1.0;
    const auto psi = QuantumState::product(space, {a, mid, b});
    const CVec out = evolve_unitary(H, t, psi).state.vector();
    const CVec proj = project_qubit(space, out, 1, MeasurementBasis::z(), outcome);
    for (int o = 0; o < 4; ++o) M(o, in) = proj(((o >> 1) & 1) * 4 + outcome * 2 + (o & 1));
    const double p = M.col(in).squaredNorm();
    g.branch_probabilities[labels[in]] = p;
    lo = std::min(lo, p);
    hi = std::max(hi, p);
    if (strict && p < kImpossibleBranch)
      throw ImpossibleBranchError("outcome " + std::to_string(outcome) + " has probability " + std::to_string(p) +
                                  " for outer input " + labels[in]);
  }
  const double mean = 0.25 * M.squaredNorm();
  g.gate = mean > 0 ? CMat(M / std::sqrt(mean)) : M;
  g.branch_norm_spread = hi - lo;
  g.unitarity_defect = mean > 0 ? unitarity_defect(g.gate) : 1.0;
  g.certified = mean > 0 && g.branch_norm_spread <= options.certify_tol && g.unitarity_defect <= options.certify_tol;
  g.distance_to_canonical = gate_distance(g.gate, canonical_gate(outcome));
  const double d0 = gate_distance(g.gate, canonical_gate(0)), d1 = gate_distance(g.gate, canonical_gate(1));
  g.verified_pairing = canonical_label(d0 <= d1 ? 0 : 1);
  if (strict && !g.certified)
    throw CertificationError("conditional map for outcome " + std::to_string(outcome) +
                             " is not proportional to a unitary (branch spread " + std::to_string(g.branch_norm_spread) +
                             ", unitarity defect " + std::to_string(g.unitarity_defect) + ")");
  return g;
}

}  // namespace

ConditionalGate extract_conditional_gate(double A, int outcome, const GateOptions& options) {
  return measure_gate(A, outcome, options, true);
}

ConditionalGate probe_conditional_gate(double A, int outcome, const GateOptions& options) {
  return measure_gate(A, outcome, options, false);
}

nlohmann::json gate_report(const ConditionalGate& gate) {
  nlohmann::json m = nlohmann::json::array();
  for (Eigen::Index r = 0; r < gate.gate.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < gate.gate.cols(); ++c) row.push_back({gate.gate(r, c).real(), gate.gate(r, c).imag()});
    m.push_back(row);
  }
  nlohmann::json probs = nlohmann::json::object();
  for (const auto& [k, v] : gate.branch_probabilities) probs[k] = v;
  return {{"outcome", gate.outcome},
          {"gate_matrix", m},
          {"distance_to_canonical", gate.distance_to_canonical},
          {"branch_probabilities", probs},
          {"canonical", canonical_label(gate.outcome)},
          {"verified_pairing", gate.verified_pairing},
          {"certified", gate.certified},
          {"time", gate.time},
          {"mediator_prep", gate.prep == MediatorPrep::Zero ? "zero" : "plus"}};
}

double leakage_through_detuned_mediator(double A, double delta, double t) {
  if (delta == 0.0) throw DomainError("leakage needs a detuned mediator (delta != 0)");
  const auto H = three_chain(A, delta);
  const auto psi = QuantumState::basis(H.space(), 0b100);
  return std::norm(evolve_unitary(H, t, psi).state.vector()(0b001));
}

double max_leakage_through_detuned_mediator(double A, double delta, double t, int samples) {
  if (delta == 0.0) throw DomainError("leakage needs a detuned mediator (delta != 0)");
  if (samples < 1) throw DomainError("need at least one sample");
  const auto H = three_chain(A, delta);
  const CMat U = expm_oracle(H, t / samples);
  CVec psi = QuantumState::basis(H.space(), 0b100).vector();
  double best = 0.0;
  for (int k = 0; k < samples; ++k) {
    psi = U * psi;
    best = std::max(best, std::norm(psi(0b001)));
  }
  return best;
}

CMat apply_echo(const std::vector<OperatorMatrix>& hamiltonians, double total_time, const EchoSchedule& echo) {
  if (echo.segments <= 0 || echo.segments % 2 != 0) throw DomainError("echo needs an even, positive segment count");
  if (hamiltonians.empty()) throw ShapeError("apply_echo needs at least one Hamiltonian");
  if (hamiltonians.size() != 1 && static_cast<int>(hamiltonians.size()) != echo.segments)
    throw ShapeError("apply_echo: give one Hamiltonian or one per segment");
  const auto& space = hamiltonians.front().space();
  for (const auto& h : hamiltonians)
    if (!(h.space() == space)) throw ShapeError("apply_echo: segment Hamiltonians on different spaces");
  // Product of Z on every target; diagonal in the computational basis.
  const auto n = static_cast<Eigen::Index>(space.dimension());
  CVec signs = CVec::Ones(n);
  for (int s : echo.targets) {
    if (space.local_dim(s) != 2) throw ShapeError("echo targets must be qubits");
    for (Eigen::Index i = 0; i < n; ++i)
      if ((static_cast<std::size_t>(i) / space.stride(s)) % 2) signs(i) = -signs(i);
  }
  const double dt = total_time / echo.segments;
  CMat U = CMat::Identity(n, n);
  for (int k = 0; k < echo.segments; ++k) {
    const auto& h = hamiltonians.size() == 1 ? hamiltonians.front() : hamiltonians[static_cast<std::size_t>(k)];
    U = signs.asDiagonal() * (expm_oracle(h, dt) * U);
  }
  return U;
}

}  // namespace ccsim
