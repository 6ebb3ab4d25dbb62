#pragma once

// One-way computation on cluster states: adaptive measurement patterns, the
// box-cluster demos and the two-column recycling executor.

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ccsim/byproduct_frame.hpp"
#include "ccsim/cluster_fab.hpp"
#include "ccsim/numkernel.hpp"

namespace ccsim {

// XY-plane angle theta measures {(|0> +- e^{i theta}|1>)/sqrt2}, outcome 0 on
// the + vector. `adapt` and `flip` index earlier measurements: the angle is
// negated when the parity of `adapt` outcomes is odd, and pi is added when
// the parity of `flip` outcomes is odd. For a Z measurement `adapt` flips the
// outcome and `flip` is ignored.
struct Measurement {
  int qubit = 0;
  bool z_basis = false;
  double angle = 0.0;
  std::vector<int> adapt;
  std::vector<int> flip;
};

// X^(parity of x) Z^(parity of z) left on an output qubit.
struct OutputCorrection {
  int qubit = 0;
  std::vector<int> x;
  std::vector<int> z;
};

struct MeasurementPattern {
  int qubits = 0;
  std::vector<Measurement> measurements;
  std::vector<int> outputs;
  std::vector<OutputCorrection> corrections;

  // Throws ShapeError on bad qubit indices, repeated measurements or measured
  // outputs, DomainError when a rule references a later measurement.
  void validate() const;
  nlohmann::json to_json() const;
  static MeasurementPattern from_json(const nlohmann::json& j);
};

struct PatternOptions {
  OutcomeMode outcomes = OutcomeMode::Sample;  // Average is not meaningful here
  std::vector<int> forced;                     // physical outcomes, pattern order
  std::uint64_t seed = 0;
};

struct PatternRun {
  std::vector<int> outcomes;  // the signals s_k the rules refer to
  std::vector<int> physical;  // what the detector showed
  // Output qubits in pattern order, frame corrected, normalized.
  QuantumState output = QuantumState::basis(SpaceLabel::qubits(1), 0);
  ByproductFrame frame;
  double probability = 1.0;
};

// Pattern qubit k is logical qubit k of `frame`; frame position p is the p-th
// site of the state's space. Frame Paulis are folded into the measured angles
// and outcomes.
PatternRun run_pattern(const QuantumState& state, const MeasurementPattern& pattern, const ByproductFrame& frame,
                       const PatternOptions& options = {});
// Every outcome branch of nonzero weight.
std::vector<PatternRun> run_all_branches(const QuantumState& state, const MeasurementPattern& pattern,
                                         const ByproductFrame& frame);

// H x H x Z x Z on a box cluster with vertices ordered as Graph::box(), then
// relabeled along the resulting path 2-1-0-3. The Z pair leaves Z on both
// chain ends under the CZ|+> convention; that byproduct is undone, so an
// ideal box maps onto graph_state(Graph::path(4)). Throws DomainError when a
// stabilizer expectation of the input is below 1 - tolerance.
QuantumState box_to_linear(const QuantumState& box, double tolerance = 1e-6);
inline constexpr std::array<int, 4> kBoxPathOrder{2, 1, 0, 3};

// Oracle angles {pi * (marked & 1), pi * (marked >> 1)} on box vertices 0 and
// 2, X-basis readout on 1 and 3; the corrected readout (r1, r3) names the
// marked item 2 * r1 + r3.
MeasurementPattern grover_pattern(int marked);

struct GroverResult {
  double success = 0.0;
  std::array<double, 4> histogram{};
};

GroverResult grover_two_qubit(int marked);
GroverResult grover_two_qubit(int marked, const QuantumState& box);
// Throws DomainError unless the record's graph is the box.
GroverResult grover_two_qubit(int marked, const FabricationRecord& record);

// Three adaptive measurements on the path 0-1-2-3 steer qubit 3 to
// cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>.
MeasurementPattern prep_pattern(double theta, double phi);
CVec bloch_state(double theta, double phi);

struct PrepResult {
  CVec target;
  PatternRun run;
  double fidelity = 0.0;
};

PrepResult single_qubit_prep_demo(double theta, double phi, const PatternOptions& options = {});

// Two-qubit gate as Kraus sets per mediator outcome, on (first, second).
struct GateChannel {
  std::array<std::vector<CMat>, 2> kraus;

  static GateChannel ideal();
  // max |sum_K K^dag K - I|.
  double trace_defect() const;
  CMat apply(int outcome, const CMat& rho) const;
};

// The resonant 3-chain between two logical qubits for t0 with the mediator in
// |0>, each end neighbouring one further qubit detuned by delta_off * A
// (omitted when delta_off is infinite); polariton decay on every site. The
// mediator is measured, the rest traced out.
GateChannel mediated_gate_source(double delta_off, double decay = 0.0, double A = 1.0);

// Largest 1 - <SWAP.CP psi|rho|SWAP.CP psi> over random product inputs, where
// rho is the outcome-averaged output after undoing Z x Z on outcome 0.
double max_product_infidelity(const GateChannel& channel, int samples, std::uint64_t seed = 0);

enum class IntraColumn { FreshColumn, None };

struct RecyclingProgram {
  int width = 1;
  // Angles for the measured column, one per row, per round.
  std::vector<std::vector<double>> rounds;
  IntraColumn intra = IntraColumn::FreshColumn;
  std::optional<CVec> input;  // |+>^width when absent

  void validate() const;
  nlohmann::json to_json() const;
  static RecyclingProgram from_json(const nlohmann::json& j);
};

struct CircuitOp {
  bool cz = false;
  int a = 0;
  int b = 0;
  double angle = 0.0;  // H.Rz(-angle) on wire a when !cz

  bool operator==(const CircuitOp&) const = default;
};

// Wire pairs joined by the intra-column gates of one round, from SWAP
// bookkeeping on the fresh column alone.
std::vector<std::pair<int, int>> fresh_column_edges(int width, IntraColumn intra);
std::vector<CircuitOp> compile_recycling(const RecyclingProgram& program);
// Direct state-vector simulation on `width` wires.
CVec run_circuit(int width, const CVec& input, const std::vector<CircuitOp>& ops);

struct RecyclingOptions {
  OutcomeMode outcomes = OutcomeMode::Sample;
  std::vector<int> forced;  // physical data outcomes, round-major
  std::uint64_t seed = 0;
};

struct RecyclingResult {
  QuantumState output = QuantumState::basis(SpaceLabel::qubits(1), 0);
  std::vector<nlohmann::json> log;
  std::vector<int> outcomes;
  std::vector<int> mediator_outcomes;
  std::vector<CircuitOp> realised;
  ByproductFrame frame;
  double probability = 1.0;
};

RecyclingResult run_recycling(const RecyclingProgram& program, const GateChannel& source,
                              const RecyclingOptions& options = {});
void write_round_log(std::ostream& out, const RecyclingResult& result);

}  // namespace ccsim
