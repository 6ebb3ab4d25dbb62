#include "ccsim/resources.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ccsim/errors.hpp"

namespace ccsim {

namespace {

// Decades between v and the nearest window edge, positive inside.
double decades_inside(double v, const Interval& w) {
  if (!(v > 0.0)) return -std::numeric_limits<double>::infinity();
  return std::min(std::log10(v / w.lo), std::log10(w.hi / v));
}

void check_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be positive and finite");
}

}  // namespace

std::string to_string(ResourceMode mode) {
  switch (mode) {
    case ResourceMode::FullBreadth: return "full-breadth";
    case ResourceMode::Recycling: return "recycling";
    case ResourceMode::CircuitModel: return "circuit-model";
  }
  return "?";
}

ResourceMode parse_resource_mode(const std::string& name) {
  if (name == "full-breadth") return ResourceMode::FullBreadth;
  if (name == "recycling") return ResourceMode::Recycling;
  if (name == "circuit-model") return ResourceMode::CircuitModel;
  throw DomainError("unknown resource mode '" + name + "'");
}

nlohmann::json ResourceEstimate::to_json() const {
  nlohmann::json j{{"mode", to_string(mode)},
                   {"grid", {rows, cols}},
                   {"logical_qubits", logical_qubits},
                   {"steps", steps},
                   {"time_in_inverse_A", time}};
  if (!notes.empty()) j["notes"] = notes;
  return j;
}

double cluster_step_time(double A) {
  check_positive(A, "hopping A");
  return std::numbers::pi / (2.0 * std::numbers::sqrt2 * A);
}

double circuit_step_time(double A) { return 2.0 * cluster_step_time(A); }

double cluster_preparation_time(double A) { return 4.0 * cluster_step_time(A); }

ResourceEstimate general_grid_for_width(int width, int breadth, ResourceMode mode) {
  if (width < 1 || breadth < 1) throw DomainError("width and breadth must be at least 1");
  ResourceEstimate e;
  e.mode = mode;
  e.rows = 2 * width - 1;
  switch (mode) {
    case ResourceMode::FullBreadth:
      e.cols = 2 * breadth - 1;
      e.logical_qubits = width * breadth;
      e.steps = 4;
      e.time = cluster_preparation_time();
      break;
    case ResourceMode::Recycling:
      e.cols = 3;
      e.logical_qubits = 2 * width;
      e.steps = 4 * (breadth - 1);
      e.time = e.steps * cluster_step_time();
      break;
    case ResourceMode::CircuitModel:
      e.cols = 3;
      e.logical_qubits = 2 * width;
      e.steps = breadth;
      e.time = e.steps * circuit_step_time();
      break;
  }
  return e;
}

ResourceEstimate estimate_shor15(ResourceMode mode) {
  switch (mode) {
    case ResourceMode::FullBreadth:
      return general_grid_for_width(kShorWidth, kShorBreadth, mode);
    case ResourceMode::Recycling: {
      auto e = general_grid_for_width(kShorWidth, 2, mode);
      // The step count is a fixture: 4 steps per round would put it at 4(b-1),
      // i.e. 39 rounds, which does not match the breadth of 156.
      e.steps = kShorRecyclingSteps;
      e.time = e.steps * cluster_step_time();
      e.notes.push_back("steps fixed at 156; four steps per round would imply " +
                        std::to_string(kShorRecyclingSteps / 4) + " rounds against a full breadth of " +
                        std::to_string(kShorBreadth));
      return e;
    }
    case ResourceMode::CircuitModel:
      return general_grid_for_width(kShorCircuitWidth, kShorCircuitSteps, mode);
  }
  throw DomainError("unknown resource mode");
}

std::vector<Technology> technologies() { return {{"toroid", 1.0}, {"stripline", 10.0}}; }

nlohmann::json FeasibilityReport::to_json() const {
  nlohmann::json j;
  for (const auto& c : checks)
    j["windows"][c.name] = {{"value", c.value}, {"pass", c.pass}, {"margin_decades", c.margin}};
  j["preparation_time_in_inverse_A"] = preparation_time;
  j["decay_safe_time_in_inverse_A"] = decay_safe_time;
  j["time_ratio"] = time_ratio;
  for (const auto& t : technologies())
    j["technologies"][t.name] = {{"preparation_time_ns", preparation_time * t.ns_per_inverse_A},
                                 {"decay_safe_time_ns", decay_safe_time * t.ns_per_inverse_A}};
  j["all_pass"] = all_pass;
  return j;
}

FeasibilityReport check_feasibility(const ModelParams& params, const FeasibilityWindow& window) {
  check_positive(params.g, "g");
  check_positive(params.A, "A");
  check_positive(params.omega_d, "omega_d");
  check_positive(params.omega_0, "omega_0");
  if (params.kappa < 0.0 || params.gamma < 0.0) throw DomainError("loss rates must be non-negative");

  FeasibilityReport r;
  auto add = [&](std::string name, double v, const Interval& w) {
    r.checks.push_back({std::move(name), v, w.contains(v), decades_inside(v, w)});
  };
  add("g_over_A", params.g / params.A, window.g_over_A);
  add("omega_d_over_g", params.omega_d / params.g, window.omega_over_g);
  add("omega_0_over_g", params.omega_0 / params.g, window.omega_over_g);
  const double loss = std::max(params.kappa, params.gamma);
  const double gl = loss > 0.0 ? params.g / loss : std::numeric_limits<double>::infinity();
  r.checks.push_back({"g_over_loss", gl, gl >= window.g_over_loss_min,
                      std::isinf(gl) ? gl : std::log10(gl / window.g_over_loss_min)});

  // Times in units of 1/A, so the hopping itself is 1 here.
  r.preparation_time = cluster_preparation_time();
  r.decay_safe_time = window.decay_safe_time;
  r.time_ratio = r.preparation_time / r.decay_safe_time;
  r.checks.push_back({"preparation_within_decay_safe_time", r.time_ratio, r.time_ratio <= 1.0,
                      -std::log10(r.time_ratio)});
  r.all_pass = std::all_of(r.checks.begin(), r.checks.end(), [](const WindowCheck& c) { return c.pass; });
  return r;
}

TimeUnits parse_time_units(const std::string& name) {
  if (name == "A" || name == "1/A") return TimeUnits::InverseA;
  if (name == "toroid") return TimeUnits::Toroid;
  if (name == "stripline") return TimeUnits::Stripline;
  throw DomainError("unknown time units '" + name + "'");
}

double convert_time(double t, TimeUnits units) {
  switch (units) {
    case TimeUnits::InverseA: return t;
    case TimeUnits::Toroid: return t * technologies()[0].ns_per_inverse_A;
    case TimeUnits::Stripline: return t * technologies()[1].ns_per_inverse_A;
  }
  return t;
}

std::string unit_label(TimeUnits units) { return units == TimeUnits::InverseA ? "1/A" : "ns"; }

}  // namespace ccsim
