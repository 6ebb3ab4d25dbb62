#pragma once

// Closed and open-system time evolution, projective qubit measurements.

#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "ccsim/numkernel.hpp"

namespace ccsim {

struct CollapseOperator {
  OperatorMatrix op;
  double rate = 0.0;
};

struct NoiseModel {
  std::vector<CollapseOperator> channels;

  bool empty() const;
  void validate(const SpaceLabel& space) const;
  // |0><1| on each listed qubit at the same rate.
  static NoiseModel polariton_decay(const SpaceLabel& space, const std::vector<int>& sites, double rate);
};

struct EvolutionResult {
  QuantumState state;
  // 1 - trace for normalized inputs; declared_trace - trace in general.
  double trace_deficit = 0.0;
  // Largest step-doubling estimate seen (0 for exact propagation).
  double max_local_error = 0.0;
  // Smallest eigenvalue over positivity checkpoints (1 for pure states).
  double min_eigenvalue = 1.0;
};

struct LindbladOptions {
  double error_limit = 1e-6;
  // Keep the Richardson-extrapolated step (h against two h/2 steps) instead
  // of the plain two-half-step result.
  bool extrapolate = true;
  // Number of evenly spaced positivity checkpoints (the final state is
  // always checked).
  int checkpoints = 4;
  std::optional<CVec> reference;
  std::ostream* diagnostics = nullptr;
};

EvolutionResult evolve_unitary(const OperatorMatrix& H, double t, const QuantumState& psi);

// Integrates the Lindblad equation with a fixed-step integrating-factor RK4:
// the Hamiltonian part is propagated exactly (blockwise over the connected
// sectors of H) and RK4 acts on the dissipator in that frame. Every step is
// also taken as two half steps; the difference is the local error estimate.
EvolutionResult evolve_lindblad(const OperatorMatrix& H, const NoiseModel& noise, double t, const QuantumState& rho,
                                double dt, const LindbladOptions& options = {});

// The same integrator with the sector decomposition and dissipator prepared
// once, for evolving many states under one generator.
class LindbladEvolver {
 public:
  LindbladEvolver(const OperatorMatrix& H, const NoiseModel& noise, double t, double dt, LindbladOptions options = {});
  ~LindbladEvolver();
  LindbladEvolver(LindbladEvolver&&) noexcept;
  LindbladEvolver& operator=(LindbladEvolver&&) noexcept;

  EvolutionResult operator()(const QuantumState& rho) const;
  // Raw density matrix in, raw density matrix out; no validation.
  CMat apply(const CMat& rho, double* max_local_error = nullptr) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

enum class Plane { XY, XZ, YZ };

struct MeasurementBasis {
  bool computational = true;
  double theta = 0.0;
  Plane plane = Plane::XY;

  static MeasurementBasis z() { return {}; }
  static MeasurementBasis tilted(double theta, Plane plane = Plane::XY) { return {false, theta, plane}; }
  // Local vector of the eigenstate for `outcome`.
  CVec vector(int outcome) const;
};

struct MeasurementResult {
  int outcome = 0;
  QuantumState post_state;
  double probability = 0.0;
};

inline constexpr double kImpossibleBranch = 1e-14;

// Projective measurement. With `forced` set the given outcome is taken and its
// probability returned; otherwise the outcome is sampled from `rng`
// (a generator seeded with 0 when none is given).
MeasurementResult measure_qubit(const QuantumState& state, int site, const MeasurementBasis& basis,
                                std::optional<int> forced = std::nullopt, std::mt19937_64* rng = nullptr);

// Unnormalized projection onto one outcome; the result is a density matrix
// (or vector) whose trace (squared norm) is the branch probability.
CMat project_qubit(const SpaceLabel& space, const CMat& rho, int site, const MeasurementBasis& basis, int outcome);
CVec project_qubit(const SpaceLabel& space, const CVec& psi, int site, const MeasurementBasis& basis, int outcome);

// Resets a qubit to |0>: rho -> |0><0| (x) Tr_site(rho).
CMat reset_qubit(const SpaceLabel& space, const CMat& rho, int site);

}  // namespace ccsim
