#include "ccsim/cavity_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace ccsim {

void ModelParams::validate() const {
  if (!(g > 0)) throw DomainError("g must be positive");
  if (!(A > 0)) throw DomainError("A must be positive");
  if (n_max < 1) throw DomainError("n_max must be at least 1");
  if (!(kappa >= 0) || !(gamma >= 0)) throw DomainError("decay rates must be non-negative");
  if (!std::isfinite(omega_d) || !std::isfinite(omega_0)) throw DomainError("frequencies must be finite");
}

int cavity_index(int atom, int photons, int n_max) { return atom * (n_max + 1) + photons; }

namespace {

// Local operators on one cavity site.
CMat photon_annihilation(int n_max) {
  const int d = 2 * (n_max + 1);
  CMat a = CMat::Zero(d, d);
  for (int atom = 0; atom < 2; ++atom)
    for (int n = 1; n <= n_max; ++n)
      a(cavity_index(atom, n - 1, n_max), cavity_index(atom, n, n_max)) = std::sqrt(static_cast<double>(n));
  return a;
}

// |g><e| on one cavity site.
CMat atom_lowering(int n_max) {
  const int d = 2 * (n_max + 1);
  CMat s = CMat::Zero(d, d);
  for (int n = 0; n <= n_max; ++n) s(cavity_index(0, n, n_max), cavity_index(1, n, n_max)) = 1.0;
  return s;
}

CMat atom_excited(int n_max) {
  const CMat s = atom_lowering(n_max);
  return s.adjoint() * s;
}

}  // namespace

OperatorMatrix build_full_hamiltonian(const ModelParams& params, int n_sites, const DetuningProfile& detuning,
                                      Boundary boundary) {
  params.validate();
  if (n_sites < 1) throw DomainError("need at least one cavity");
  detuning.validate(n_sites);
  const int d = params.local_dim();
  const auto space = SpaceLabel::uniform(n_sites, d);
  const CMat a = photon_annihilation(params.n_max);
  const CMat sm = atom_lowering(params.n_max);
  const CMat ee = atom_excited(params.n_max);
  const CMat num = a.adjoint() * a;

  auto H = OperatorMatrix::zero(space);
  for (int k = 0; k < n_sites; ++k) {
    const CMat local = params.omega_d * num + (params.omega_0 + detuning.at(k)) * ee +
                       params.g * (a.adjoint() * sm + a * sm.adjoint());
    H = H + embed(local_operator(local), k, space);
  }
  const auto A_op = local_operator(a);
  const auto Ad_op = local_operator(CMat(a.adjoint()));
  auto hop = [&](int k, int l) {
    H = H + params.A * (embed(Ad_op, k, space) * embed(A_op, l, space) + embed(A_op, k, space) * embed(Ad_op, l, space));
  };
  for (int k = 0; k + 1 < n_sites; ++k) hop(k, k + 1);
  if (boundary == Boundary::Periodic && n_sites > 2) hop(n_sites - 1, 0);
  H.require_hermitian();
  return H;
}

OperatorMatrix excitation_number(const ModelParams& params, int n_sites) {
  const auto space = SpaceLabel::uniform(n_sites, params.local_dim());
  const CMat a = photon_annihilation(params.n_max);
  const CMat local = a.adjoint() * a + atom_excited(params.n_max);
  auto N = OperatorMatrix::zero(space);
  for (int k = 0; k < n_sites; ++k) N = N + embed(local_operator(local), k, space);
  N.require_hermitian();
  return N;
}

OperatorMatrix weak_drive_hamiltonian(const ModelParams& params, int n_sites, double eps, double frame_frequency) {
  const auto space = SpaceLabel::uniform(n_sites, params.local_dim());
  const CMat a = photon_annihilation(params.n_max);
  auto H = (-frame_frequency) * excitation_number(params, n_sites);
  for (int k = 0; k < n_sites; ++k) H = H + eps * embed(local_operator(CMat(a + a.adjoint())), k, space);
  H.require_hermitian();
  return H;
}

std::pair<PolaritonSpec, PolaritonSpec> polariton_spectrum(const ModelParams& params, int n) {
  if (n < 1) throw DomainError("polaritons need at least one excitation (n >= 1)");
  // Block {|g,n>, |e,n-1>}.
  const double h00 = n * params.omega_d;
  const double h11 = (n - 1) * params.omega_d + params.omega_0;
  const double off = params.g * std::sqrt(static_cast<double>(n));
  double plus, minus;
  if (params.omega_0 == params.omega_d) {
    plus = n * params.omega_d + off;
    minus = n * params.omega_d - off;
  } else {
    const double mean = 0.5 * (h00 + h11);
    const double half = 0.5 * (h00 - h11);
    const double rabi = std::sqrt(half * half + off * off);
    plus = mean + rabi;
    minus = mean - rabi;
  }
  return {PolaritonSpec{Branch::Plus, n, plus}, PolaritonSpec{Branch::Minus, n, minus}};
}

CVec polariton_vector(const ModelParams& params, int n, Branch branch) {
  if (n < 1 || n > params.n_max) throw DomainError("polariton excitation number out of range");
  CVec v = CVec::Zero(params.local_dim());
  const double s = branch == Branch::Plus ? 1.0 : -1.0;
  v(cavity_index(0, n, params.n_max)) = 1.0 / std::sqrt(2.0);
  v(cavity_index(1, n - 1, params.n_max)) = s / std::sqrt(2.0);
  return v;
}

OperatorMatrix build_effective_xy(const SpaceLabel& space, const std::vector<std::pair<int, int>>& edges, double A,
                                  const DetuningProfile& detuning) {
  for (const auto& s : space.sites())
    if (s.dim != 2) throw ShapeError("effective model sites must be qubits");
  // XX + YY exchanges |01> and |10> with amplitude 2.
  std::vector<Entry> entries;
  for (const auto& [a, b] : edges) {
    if (a == b) throw ShapeError("self edge");
    const auto sa = space.stride(a), sb = space.stride(b);
    for (std::size_t i = 0; i < space.dimension(); ++i) {
      const bool ba = (i / sa) % 2, bb = (i / sb) % 2;
      if (ba && !bb) entries.push_back({i, i - sa + sb, 2.0 * A});
      if (!ba && bb) entries.push_back({i, i + sa - sb, 2.0 * A});
    }
  }
  for (const auto& [site, delta] : detuning.values) {
    if (!space.contains(site) || delta == 0.0) continue;
    const auto st = space.stride(site);
    for (std::size_t i = 0; i < space.dimension(); ++i)
      if ((i / st) % 2) entries.push_back({i, i, delta});
  }
  OperatorMatrix H(space, std::move(entries));
  H.require_hermitian();
  return H;
}

OperatorMatrix build_effective_xy(const LatticeLayout& layout, double A, const DetuningProfile& detuning) {
  detuning.validate(layout.size());
  return build_effective_xy(SpaceLabel::qubits(layout.size()), layout.grid_edges(), A, detuning);
}

double mott_violation_probability(const QuantumState& state) {
  const auto& space = state.space();
  std::vector<int> n_max;
  for (const auto& s : space.sites()) {
    if (s.dim % 2 != 0 || s.dim < 4) throw ShapeError("state is not on an atom-photon space");
    n_max.push_back(s.dim / 2 - 1);
  }
  double p = 0.0;
  const CVec diag = state.is_pure() ? CVec(state.vector().cwiseAbs2().cast<cplx>()) : CVec(state.matrix().diagonal());
  for (std::size_t i = 0; i < space.dimension(); ++i) {
    bool violates = false;
    for (std::size_t k = 0; k < space.size() && !violates; ++k) {
      const auto& s = space.sites()[k];
      const int local = static_cast<int>((i / space.stride(s.id)) % static_cast<std::size_t>(s.dim));
      const int atom = local / (n_max[k] + 1);
      const int photons = local % (n_max[k] + 1);
      violates = atom + photons >= 2;
    }
    if (violates) p += diag(static_cast<Eigen::Index>(i)).real();
  }
  return std::clamp(p, 0.0, 1.0);
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  auto& p = cfg.params;
  p.omega_d = j.value("omega_d", p.omega_d);
  p.omega_0 = j.value("omega_0", p.omega_d);
  p.g = j.value("g", p.g);
  p.A = j.value("A", p.A);
  p.kappa = j.value("kappa", p.kappa);
  p.gamma = j.value("gamma", p.gamma);
  p.n_max = j.value("n_max", p.n_max);
  p.validate();
  if (j.contains("detunings")) {
    for (const auto& [key, value] : j["detunings"].items()) {
      const double v = value.get<double>();
      if (!std::isfinite(v)) throw DomainError("non-finite detuning for site " + key);
      cfg.detuning.set(std::stoi(key), v);
    }
  }
  return cfg;
}

ModelConfig load_model_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DomainError("config " + path + ": " + e.what());
  }
  return model_config_from_json(j);
}

nlohmann::json CrossCheckReport::to_json() const {
  return {{"g_over_A", g_over_A},
          {"n_max", n_max},
          {"period", period},
          {"samples", samples},
          {"max_infidelity", max_infidelity},
          {"max_mott_violation", max_mott_violation},
          {"max_drive_mott_violation", max_drive_mott_violation}};
}

CrossCheckReport full_model_cross_check(const ModelParams& params, int samples) {
  params.validate();
  if (samples < 1) throw DomainError("cross-check needs at least one sample");
  auto p = params;
  p.omega_0 = p.omega_d;
  const auto H = build_full_hamiltonian(p, 2, {});
  const auto& space = H.space();
  CVec vac = CVec::Zero(p.local_dim());
  vac(0) = 1.0;
  const CVec minus = polariton_vector(p, 1, Branch::Minus);
  const CVec s10 = QuantumState::product(space, {minus, vac}).vector();
  const CVec s01 = QuantumState::product(space, {vac, minus}).vector();

  const double a_eff = kEffectiveCouplingRatio * p.A;
  const auto qspace = SpaceLabel::qubits(2);
  const auto Heff = build_effective_xy(qspace, {{0, 1}}, a_eff, {});

  CrossCheckReport r;
  r.g_over_A = p.g / p.A;
  r.n_max = p.n_max;
  r.period = std::numbers::pi / (2.0 * a_eff);
  r.samples = samples;
  const auto full0 = QuantumState::pure(space, s10);
  const auto eff0 = QuantumState::basis(qspace, 2);  // |10>
  const auto drive = H + weak_drive_hamiltonian(p, 2, 0.05 * p.A, p.omega_d - p.g);
  const auto ground = QuantumState::basis(space, 0);
  for (int k = 1; k <= samples; ++k) {
    const double t = r.period * k / samples;
    const auto full = expm_apply(H, t, full0);
    const CVec eff = expm_apply(Heff, t, eff0).vector();
    const CVec mapped = eff(2) * s10 + eff(1) * s01;
    r.max_infidelity = std::max(r.max_infidelity, 1.0 - std::norm(mapped.dot(full.vector())));
    r.max_mott_violation = std::max(r.max_mott_violation, mott_violation_probability(full));
    r.max_drive_mott_violation =
        std::max(r.max_drive_mott_violation, mott_violation_probability(expm_apply(drive, t, ground)));
  }
  return r;
}

}  // namespace ccsim
