#pragma once

// Mediated two-qubit gate from a resonant 3-qubit XY chain: evolve for t0,
// measure the middle qubit in Z, read off the gate on the outer pair.

#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "ccsim/numkernel.hpp"

namespace ccsim {

// Time for perfect transfer along a resonant 3-chain: pi / (2 sqrt2 A).
double transfer_time(double A);

CMat gate_cp();
CMat gate_swap();
CMat gate_zz();
// SWAP.CP (outcome 1) and SWAP.(Z x Z).CP (outcome 0).
CMat canonical_gate(int outcome);
std::string canonical_label(int outcome);

// Initial state of the middle qubit before the chain evolves.
enum class MediatorPrep { Zero, Plus };

struct ConditionalGate {
  int outcome = 0;
  CMat gate;  // 4x4 on (first outer, second outer), normalized
  // Keyed by the outer input "00", "01", "10", "11".
  std::map<std::string, double> branch_probabilities;
  double distance_to_canonical = 1.0;
  // Canonical form closest to the measured gate (the verified pairing).
  std::string verified_pairing;
  double branch_norm_spread = 0.0;
  double unitarity_defect = 0.0;
  bool certified = false;
  double time = 0.0;
  MediatorPrep prep = MediatorPrep::Plus;
};

struct GateOptions {
  double time = -1.0;  // < 0 means t0
  MediatorPrep prep = MediatorPrep::Plus;
  double certify_tol = 1e-10;
};

// Throws CertificationError when the conditional map is not proportional to
// a unitary, ImpossibleBranchError when an input has no weight on the outcome.
ConditionalGate extract_conditional_gate(double A, int outcome, const GateOptions& options = {});
// Same measurement without throwing; `certified` reports the verdict.
ConditionalGate probe_conditional_gate(double A, int outcome, const GateOptions& options = {});

nlohmann::json gate_report(const ConditionalGate& gate);

// 1 - |Tr(U^dag V)| / dim.
double gate_distance(const CMat& U, const CMat& V);

// Probability on the third qubit at time t for a single excitation started on
// the first, with the middle detuned by delta.
double leakage_through_detuned_mediator(double A, double delta, double t);
// Largest such probability over `samples` evenly spaced times in (0, t].
double max_leakage_through_detuned_mediator(double A, double delta, double t, int samples = 64);

struct EchoSchedule {
  int segments = 2;  // even, positive
  std::vector<int> targets;
};

// Splits total_time into `segments` equal pieces; after each piece applies Z
// on every target. `hamiltonians` holds one entry per segment or a single
// entry reused for all. Returns the net propagator.
CMat apply_echo(const std::vector<OperatorMatrix>& hamiltonians, double total_time, const EchoSchedule& echo);

}  // namespace ccsim
