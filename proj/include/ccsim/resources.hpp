#pragma once

// Cavity-grid sizes, step counts and times for cluster-state algorithms, and
// parameter windows for the Mott-regime effective model.

#include <string>
#include <vector>

#include "json.hpp"
#include "ccsim/cavity_model.hpp"

namespace ccsim {

enum class ResourceMode { FullBreadth, Recycling, CircuitModel };

std::string to_string(ResourceMode mode);
// "full-breadth", "recycling" or "circuit-model"; DomainError otherwise.
ResourceMode parse_resource_mode(const std::string& name);

struct ResourceEstimate {
  ResourceMode mode = ResourceMode::FullBreadth;
  int rows = 0;  // cavities
  int cols = 0;
  int logical_qubits = 0;
  int steps = 0;        // consecutive entangling steps
  double time = 0.0;    // units of 1/A
  std::vector<std::string> notes;

  nlohmann::json to_json() const;
};

// Shor-15 fixtures: logical width 11, breadth 156, 156 recycling steps and a
// 15-step circuit on six qubits.
inline constexpr int kShorWidth = 11;
inline constexpr int kShorBreadth = 156;
inline constexpr int kShorRecyclingSteps = 156;
inline constexpr int kShorCircuitSteps = 15;
inline constexpr int kShorCircuitWidth = 3;  // logical rows of the 5x3 grid

// Per step: one chain transfer time t0 = pi/(2 sqrt2 A) for cluster
// building; pi/(sqrt2 A) for a circuit-model step.
double cluster_step_time(double A = 1.0);
double circuit_step_time(double A = 1.0);
// Four steps build any cluster: sqrt2 pi / A.
double cluster_preparation_time(double A = 1.0);

ResourceEstimate estimate_shor15(ResourceMode mode);
// Full breadth: (2w-1) x (2b-1), four steps. Recycling: (2w-1) x 3, b-1
// rounds of four steps. Circuit model: (2w-1) x 3 with b circuit steps.
ResourceEstimate general_grid_for_width(int width, int breadth, ResourceMode mode);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

struct FeasibilityWindow {
  Interval g_over_A{10.0, 100.0};
  Interval omega_over_g{1.0e4, 1.0e5};
  double g_over_loss_min = 1.0e3;
  double decay_safe_time = 10.0;  // units of 1/A
};

struct Technology {
  std::string name;
  double ns_per_inverse_A = 1.0;
};

// Toroidal microcavities (1/A = 1 ns) and microwave stripline resonators
// (1/A = 10 ns), anchored on the decay-safe time 10/A.
std::vector<Technology> technologies();

struct WindowCheck {
  std::string name;
  double value = 0.0;
  bool pass = false;
  // Decades inside the window (negative: outside).
  double margin = 0.0;
};

struct FeasibilityReport {
  std::vector<WindowCheck> checks;
  double preparation_time = 0.0;  // units of 1/A
  double decay_safe_time = 0.0;
  double time_ratio = 0.0;        // preparation / decay-safe
  bool all_pass = false;

  nlohmann::json to_json() const;
};

FeasibilityReport check_feasibility(const ModelParams& params, const FeasibilityWindow& window = {});

enum class TimeUnits { InverseA, Toroid, Stripline };
TimeUnits parse_time_units(const std::string& name);  // "A", "toroid", "stripline"
double convert_time(double t_inverse_A, TimeUnits units);
std::string unit_label(TimeUnits units);

}  // namespace ccsim
