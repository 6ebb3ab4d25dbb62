#pragma once

// Cluster-state fabrication on a cavity grid: the four-colour gate schedule,
// the step-by-step protocol with mediator measurements, frame tracking and
// fidelity against the ideal graph state.

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ccsim/byproduct_frame.hpp"
#include "ccsim/chain_gate.hpp"
#include "ccsim/lattice.hpp"
#include "ccsim/numkernel.hpp"

namespace ccsim {

// Undirected simple graph on vertices 0..n-1.
struct Graph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;

  std::vector<int> neighbours(int v) const;
  // Adds the edge, or removes it if present (CZ squares to identity).
  void toggle(int a, int b);
  void validate() const;
  static Graph box();           // 4-cycle 0-1-3-2-0 (corners of a 2x2 square)
  static Graph path(int n);     // 0-1-...-(n-1)
};

// |G> = prod_edges CZ |+>^n, qubit 0 the slowest factor.
CVec graph_state(const Graph& g);

struct GateStep {
  std::string label;
  std::vector<Chain> chains;
  double duration = 0.0;
  std::optional<EchoSchedule> echo;
};

struct GateSchedule {
  std::vector<GateStep> steps;
  std::size_t chain_count() const;
};

// Four steps: horizontal chains starting on an even / odd logical column,
// then vertical chains starting on an even / odd logical row. Steps may be
// empty. Throws ShapeError when the layout has no logical edge.
GateSchedule edge_schedule(const LatticeLayout& layout, double A = 1.0);
// Adds an m-segment Z echo on every second chain of each step.
void add_echo(GateSchedule& schedule, int segments);
// Throws ShapeError when chains overlap within a step or an edge repeats.
void validate_schedule(const LatticeLayout& layout, const GateSchedule& schedule);

// |+> on logical sites, |0> elsewhere, over qubits with ids = site indices.
QuantumState initialize_plus(const LatticeLayout& layout);

enum class Decoupling { Ideal, Realistic };
enum class MediatorPolicy { MeasureAndReset, PostSelectZero };
enum class OutcomeMode { Average, Sample, Forced };

struct FabricationOptions {
  Decoupling decoupling = Decoupling::Realistic;
  double A = 1.0;
  double delta_off = 16.0;  // in units of A
  double decay = 0.0;       // polariton loss rate on every site, units of A
  MediatorPolicy policy = MediatorPolicy::MeasureAndReset;
  OutcomeMode outcomes = OutcomeMode::Average;
  std::vector<int> forced;  // one outcome per chain, schedule order
  std::uint64_t seed = 0;
  // false: every outcome is corrected as if it were the nominal one.
  bool frame_correction = true;
  MediatorPrep prep = MediatorPrep::Zero;
  double dt = 0.0;          // Lindblad step; <= 0 picks half a segment
  // Local error limit for the open-system integrator; a rejected step is
  // retried at half the size.
  double error_limit = 1e-5;
  double idle_time = 0.0;   // decay-only idling after each measurement round
};

struct FabricationRecord {
  std::map<int, int> outcomes;  // mediator site -> outcome (single-branch modes)
  // Frame of the recorded branch (the nominal all-zero branch when averaging).
  ByproductFrame frame;
  Graph graph;
  // Logical-site state, frame corrected and normalized; qubit i is logical i.
  QuantumState state = QuantumState::basis(SpaceLabel::qubits(1), 0);
  // The same before correction (single-branch modes).
  QuantumState raw_state = QuantumState::basis(SpaceLabel::qubits(1), 0);
  double fidelity = 0.0;
  bool postselected = false;
  // Probability of the kept branch set (1 for trace-preserving averaging).
  double probability = 1.0;
  std::size_t branches = 1;
  double max_local_error = 0.0;
};

FabricationRecord run_fabrication(const LatticeLayout& layout, const GateSchedule& schedule,
                                  const FabricationOptions& options = {});

nlohmann::json record_to_json(const FabricationRecord& record);

// <C|rho|C> after undoing `frame` on a state over graph.n qubits.
double cluster_fidelity(const QuantumState& state, const Graph& graph, const ByproductFrame& frame);
// <K_a> for every vertex after undoing `frame`.
std::vector<double> stabilizer_witness(const QuantumState& state, const Graph& graph, const ByproductFrame& frame);

struct SweepRow {
  double delta_over_A = 0.0;
  double fidelity_mean = 0.0;
  double fidelity_postselected = 0.0;
  double noise_rate = 0.0;
  std::uint64_t seed = 0;
};

// Every (delta, rate) pair, run averaged and (unless `postselect` is false,
// which leaves NaN) post-selected; rows ordered by rate, then delta. Work is
// spread over `threads` workers (0 = hardware).
std::vector<SweepRow> sweep_fidelity(const LatticeLayout& layout, const std::vector<double>& deltas,
                                     const std::vector<double>& rates, const FabricationOptions& base,
                                     int echo_segments = 0, int threads = 0, bool postselect = true);
// NaN cells are written empty.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
nlohmann::json sweep_to_json(const std::vector<SweepRow>& rows);
// n points from lo to hi, evenly spaced in log(delta); endpoints exact.
std::vector<double> log_spaced(double lo, double hi, int n);

}  // namespace ccsim
