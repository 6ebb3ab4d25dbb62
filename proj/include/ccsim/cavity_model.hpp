#pragma once

// Coupled cavity array: full atom-photon Hamiltonian, polariton spectrum and
// the effective Mott-phase XY model.

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ccsim/lattice.hpp"
#include "ccsim/numkernel.hpp"

namespace ccsim {

struct ModelParams {
  double omega_d = 5.0e5;  // 1e4 g: inside the Mott-regime window
  double omega_0 = 5.0e5;
  double g = 50.0;
  double A = 1.0;
  double kappa = 0.0;
  double gamma = 0.0;
  int n_max = 2;

  void validate() const;
  // Local dimension of one cavity site: atom (2) x photons (n_max + 1).
  int local_dim() const { return 2 * (n_max + 1); }
};

// Ratio of the effective XY coupling to the full-model hopping A that
// reproduces the single-polariton exchange rate. The |1-> polariton carries
// half its weight in the photon, so the full-model hopping between |1->
// states is A/2 while the XY single-excitation hopping is 2 A_eff.
inline constexpr double kEffectiveCouplingRatio = 0.25;

enum class Branch { Plus, Minus };
enum class Boundary { Open, Periodic };

struct PolaritonSpec {
  Branch branch = Branch::Minus;
  int n = 1;
  double energy = 0.0;
};

// Local basis index on a cavity site: atom * (n_max + 1) + photons.
int cavity_index(int atom, int photons, int n_max);

OperatorMatrix build_full_hamiltonian(const ModelParams& params, int n_sites, const DetuningProfile& detuning,
                                      Boundary boundary = Boundary::Open);

// Total excitation number sum_k (a^dag a + |e><e|)_k on the full space.
OperatorMatrix excitation_number(const ModelParams& params, int n_sites);

// Drive eps * sum_k (a_k + a_k^dag) in the frame rotating at `frame_frequency`
// per excitation; added to the full Hamiltonian it stays time independent.
OperatorMatrix weak_drive_hamiltonian(const ModelParams& params, int n_sites, double eps, double frame_frequency);

std::pair<PolaritonSpec, PolaritonSpec> polariton_spectrum(const ModelParams& params, int n);

// |n+-> on one cavity site as a local vector (resonant form).
CVec polariton_vector(const ModelParams& params, int n, Branch branch);

// A * sum_edges (XX + YY) + sum_k Delta_k n_k over all layout sites and grid edges.
OperatorMatrix build_effective_xy(const LatticeLayout& layout, double A, const DetuningProfile& detuning);
// Same over an explicit qubit space and edge list (site ids from the space).
OperatorMatrix build_effective_xy(const SpaceLabel& space, const std::vector<std::pair<int, int>>& edges, double A,
                                  const DetuningProfile& detuning);

// Population of basis states with two or more excitations on some site.
double mott_violation_probability(const QuantumState& state);

// Two resonant cavities, one |1-> polariton started on the first, against the
// effective two-qubit XY model with A_eff = kEffectiveCouplingRatio * A over
// one exchange period pi / (2 A_eff). The single-excitation trajectory cannot
// leave the Mott space, so a weak coherent drive (0.05 A, rotating at the |1->
// frequency) from the ground state probes it instead.
struct CrossCheckReport {
  double g_over_A = 0.0;
  int n_max = 0;
  double period = 0.0;
  int samples = 0;
  double max_infidelity = 0.0;
  double max_mott_violation = 0.0;        // along the polariton trajectory
  double max_drive_mott_violation = 0.0;  // along the driven trajectory

  nlohmann::json to_json() const;
};

CrossCheckReport full_model_cross_check(const ModelParams& params, int samples = 40);

struct ModelConfig {
  ModelParams params;
  DetuningProfile detuning;
};

ModelConfig model_config_from_json(const nlohmann::json& j);
ModelConfig load_model_config(const std::string& path);

}  // namespace ccsim
