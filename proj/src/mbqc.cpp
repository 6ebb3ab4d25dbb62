#include "ccsim/mbqc.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "ccsim/cavity_model.hpp"
#include "ccsim/chain_gate.hpp"
#include "ccsim/dynamics.hpp"

namespace ccsim {

namespace {

constexpr double kPi = std::numbers::pi;

CMat hadamard() {
  CMat h(2, 2);
  h << 1.0, 1.0, 1.0, -1.0;
  return h / std::sqrt(2.0);
}

CVec plus_state() { return CVec::Constant(2, 1.0 / std::sqrt(2.0)); }

CVec kron_vec(const CVec& a, const CVec& b) {
  CVec out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

std::vector<int> site_ids(const SpaceLabel& space) {
  std::vector<int> ids;
  for (const auto& s : space.sites()) {
    if (s.dim != 2) throw ShapeError("measurement patterns act on qubits only");
    ids.push_back(s.id);
  }
  return ids;
}

// Reduced state on `keep` relabeled as qubits 0..k-1 and normalized.
QuantumState reduce(const QuantumState& state, const std::vector<int>& keep) {
  const auto r = partial_trace(state, keep);
  CMat m = r.matrix();
  m /= m.trace().real();
  return QuantumState::density(SpaceLabel::qubits(static_cast<int>(keep.size())), (m + m.adjoint()) / 2.0, 1.0,
                               false);
}

void check_rule(const std::vector<int>& dom, std::size_t k, const char* what) {
  for (int j : dom)
    if (j < 0 || static_cast<std::size_t>(j) >= k)
      throw DomainError(std::string(what) + " of measurement " + std::to_string(k) +
                        " references measurement " + std::to_string(j) + ", which is not earlier");
}

nlohmann::json cvec_json(const CVec& v) {
  auto j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back({v(i).real(), v(i).imag()});
  return j;
}

CVec cvec_from_json(const nlohmann::json& j) {
  CVec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    v(static_cast<Eigen::Index>(i)) = e.is_array() ? cplx(e.at(0).get<double>(), e.at(1).get<double>())
                                                   : cplx(e.get<double>(), 0.0);
  }
  return v;
}

}  // namespace

// ---- patterns ---------------------------------------------------------------

void MeasurementPattern::validate() const {
  if (qubits < 1) throw ShapeError("pattern needs at least one qubit");
  auto in_range = [&](int q) {
    if (q < 0 || q >= qubits) throw ShapeError("pattern qubit " + std::to_string(q) + " out of range");
  };
  std::set<int> measured;
  for (std::size_t k = 0; k < measurements.size(); ++k) {
    const auto& m = measurements[k];
    in_range(m.qubit);
    if (!measured.insert(m.qubit).second) throw ShapeError("qubit " + std::to_string(m.qubit) + " measured twice");
    if (!std::isfinite(m.angle)) throw DomainError("measurement angle must be finite");
    check_rule(m.adapt, k, "adapt rule");
    check_rule(m.flip, k, "flip rule");
  }
  std::set<int> outs;
  for (int q : outputs) {
    in_range(q);
    if (measured.count(q)) throw ShapeError("output qubit " + std::to_string(q) + " is measured");
    if (!outs.insert(q).second) throw ShapeError("output qubit listed twice");
  }
  for (const auto& c : corrections) {
    if (!outs.count(c.qubit)) throw ShapeError("correction on a non-output qubit");
    check_rule(c.x, measurements.size(), "x correction");
    check_rule(c.z, measurements.size(), "z correction");
  }
}

nlohmann::json MeasurementPattern::to_json() const {
  nlohmann::json j;
  j["qubits"] = qubits;
  j["measurements"] = nlohmann::json::array();
  for (const auto& m : measurements)
    j["measurements"].push_back(
        {{"qubit", m.qubit}, {"basis", m.z_basis ? "Z" : "XY"}, {"angle", m.angle}, {"adapt", m.adapt}, {"flip", m.flip}});
  j["outputs"] = outputs;
  j["corrections"] = nlohmann::json::array();
  for (const auto& c : corrections) j["corrections"].push_back({{"qubit", c.qubit}, {"x", c.x}, {"z", c.z}});
  return j;
}

MeasurementPattern MeasurementPattern::from_json(const nlohmann::json& j) {
  MeasurementPattern p;
  p.qubits = j.at("qubits").get<int>();
  for (const auto& e : j.at("measurements")) {
    Measurement m;
    m.qubit = e.at("qubit").get<int>();
    const auto basis = e.value("basis", std::string("XY"));
    if (basis != "XY" && basis != "Z") throw DomainError("unknown measurement basis '" + basis + "'");
    m.z_basis = basis == "Z";
    m.angle = e.value("angle", 0.0);
    m.adapt = e.value("adapt", std::vector<int>{});
    m.flip = e.value("flip", std::vector<int>{});
    p.measurements.push_back(std::move(m));
  }
  p.outputs = j.value("outputs", std::vector<int>{});
  if (j.contains("corrections"))
    for (const auto& e : j.at("corrections"))
      p.corrections.push_back({e.at("qubit").get<int>(), e.value("x", std::vector<int>{}), e.value("z", std::vector<int>{})});
  p.validate();
  return p;
}

PatternRun run_pattern(const QuantumState& state, const MeasurementPattern& pattern, const ByproductFrame& frame,
                       const PatternOptions& options) {
  pattern.validate();
  const auto& space = state.space();
  const auto ids = site_ids(space);
  if (static_cast<int>(ids.size()) != pattern.qubits || frame.size() != pattern.qubits)
    throw ShapeError("state, frame and pattern disagree on the number of qubits");
  if (options.outcomes == OutcomeMode::Average) throw DomainError("patterns run one branch at a time");
  const bool forced = options.outcomes == OutcomeMode::Forced;
  if (forced && options.forced.size() != pattern.measurements.size())
    throw ShapeError("forced outcomes must list one value per measurement");

  std::mt19937_64 rng(options.seed);
  PatternRun run;
  run.frame = frame;
  QuantumState cur = state;
  auto parity = [&](const std::vector<int>& dom) {
    int v = 0;
    for (int k : dom) v ^= run.outcomes[static_cast<std::size_t>(k)];
    return v;
  };
  for (std::size_t k = 0; k < pattern.measurements.size(); ++k) {
    const auto& m = pattern.measurements[k];
    const int site = ids[static_cast<std::size_t>(run.frame.position(m.qubit))];
    MeasurementBasis basis = MeasurementBasis::z();
    int flip = 0;
    if (m.z_basis) {
      flip = parity(m.adapt) ^ static_cast<int>(run.frame.x(m.qubit));
    } else {
      double theta = parity(m.adapt) ? -m.angle : m.angle;
      if (parity(m.flip)) theta += kPi;
      // X|theta,b> ~ |-theta,b> and Z|theta,b> = |theta,1-b>.
      if (run.frame.x(m.qubit)) theta = -theta;
      basis = MeasurementBasis::tilted(theta);
      flip = run.frame.z(m.qubit);
    }
    std::optional<int> f;
    if (forced) f = options.forced[k];
    auto r = measure_qubit(cur, site, basis, f, &rng);
    cur = std::move(r.post_state);
    run.probability *= r.probability;
    run.physical.push_back(r.outcome);
    run.outcomes.push_back(r.outcome ^ flip);
  }
  for (const auto& c : pattern.corrections) {
    const int p = run.frame.position(c.qubit);
    if (parity(c.x)) run.frame.add_x_at(p);
    if (parity(c.z)) run.frame.add_z_at(p);
  }
  if (pattern.outputs.empty()) return run;

  std::vector<int> keep;
  for (int q : pattern.outputs) keep.push_back(ids[static_cast<std::size_t>(q)]);
  const auto corrected = cur.is_pure() ? QuantumState::pure(space, run.frame.correct(space, ids, cur.vector()))
                                       : QuantumState::density(space, run.frame.correct(space, ids, cur.matrix()), 1.0,
                                                               false);
  run.output = reduce(corrected, keep);
  return run;
}

std::vector<PatternRun> run_all_branches(const QuantumState& state, const MeasurementPattern& pattern,
                                         const ByproductFrame& frame) {
  const std::size_t k = pattern.measurements.size();
  if (k > 20) throw DomainError("too many measurements to enumerate");
  std::vector<PatternRun> runs;
  PatternOptions o;
  o.outcomes = OutcomeMode::Forced;
  o.forced.assign(k, 0);
  for (std::size_t bits = 0; bits < (std::size_t{1} << k); ++bits) {
    for (std::size_t j = 0; j < k; ++j) o.forced[j] = static_cast<int>((bits >> j) & 1U);
    try {
      runs.push_back(run_pattern(state, pattern, frame, o));
    } catch (const ImpossibleBranchError&) {
    }
  }
  return runs;
}

// ---- box demos --------------------------------------------------------------

QuantumState box_to_linear(const QuantumState& box, double tolerance) {
  const auto& space = box.space();
  if (space != SpaceLabel::qubits(4)) throw ShapeError("box_to_linear expects qubits 0..3");
  const auto witness = stabilizer_witness(box, Graph::box(), ByproductFrame(4));
  for (double w : witness)
    if (w < 1.0 - tolerance)
      throw DomainError("input is not a box cluster: stabilizer expectation " + std::to_string(w));

  const CMat H = hadamard(), Z = pauli_z().to_dense();
  QuantumState s = apply_local(box, 0, H);
  s = apply_local(s, 1, H);
  s = apply_local(s, 2, Z);
  s = apply_local(s, 3, Z);
  const std::vector<int> sites{0, 1, 2, 3};
  const std::vector<int> target(kBoxPathOrder.begin(), kBoxPathOrder.end());  // self-inverse
  s = s.is_pure() ? QuantumState::pure(space, permute_qubits(space, sites, target, s.vector()))
                  : QuantumState::density(space, permute_qubits(space, sites, target, s.matrix()), 1.0, false);
  // Byproduct on the chain ends.
  s = apply_local(s, 0, Z);
  return apply_local(s, 3, Z);
}

MeasurementPattern grover_pattern(int marked) {
  if (marked < 0 || marked > 3) throw DomainError("marked item must be 0..3");
  MeasurementPattern p;
  p.qubits = 4;
  // s0 leaves X on 1 and Z on 3; s1 leaves X on 3 and Z on 1.
  p.measurements = {{0, false, kPi * (marked & 1), {}, {}},
                    {2, false, kPi * (marked >> 1), {}, {}},
                    {1, false, 0.0, {0}, {1}},
                    {3, false, 0.0, {1}, {0}}};
  return p;
}

GroverResult grover_two_qubit(int marked, const QuantumState& box) {
  GroverResult g;
  for (const auto& run : run_all_branches(box, grover_pattern(marked), ByproductFrame(4)))
    g.histogram[static_cast<std::size_t>(2 * run.outcomes[2] + run.outcomes[3])] += run.probability;
  g.success = g.histogram[static_cast<std::size_t>(marked)];
  return g;
}

GroverResult grover_two_qubit(int marked) {
  return grover_two_qubit(marked, QuantumState::pure(SpaceLabel::qubits(4), graph_state(Graph::box())));
}

GroverResult grover_two_qubit(int marked, const FabricationRecord& record) {
  auto norm = [](const Graph& g) {
    std::set<std::pair<int, int>> s;
    for (auto [a, b] : g.edges) s.insert({std::min(a, b), std::max(a, b)});
    return s;
  };
  if (record.graph.n != 4 || norm(record.graph) != norm(Graph::box()))
    throw DomainError("Grover needs a fabricated box cluster");
  return grover_two_qubit(marked, record.state);
}

CVec bloch_state(double theta, double phi) {
  CVec v(2);
  v << std::cos(theta / 2), std::exp(kI * phi) * std::sin(theta / 2);
  return v;
}

MeasurementPattern prep_pattern(double theta, double phi) {
  const double vx = std::sin(theta) * std::cos(phi), vy = std::sin(theta) * std::sin(phi), vz = std::cos(theta);
  // Output H.Rz(a).Rx(b).Rz(pi/2)|+> has Bloch vector
  // (sin b, -cos a cos b, -sin a cos b).
  const double b = std::asin(std::clamp(vx, -1.0, 1.0));
  const double a = std::atan2(-vz, -vy);
  MeasurementPattern p;
  p.qubits = 4;
  p.measurements = {{0, false, -kPi / 2, {}, {}}, {1, false, -b, {0}, {}}, {2, false, -a, {1}, {0}}};
  p.outputs = {3};
  p.corrections = {{3, {2}, {1}}};
  return p;
}

PrepResult single_qubit_prep_demo(double theta, double phi, const PatternOptions& options) {
  PrepResult r;
  r.target = bloch_state(theta, phi);
  const auto cluster = QuantumState::pure(SpaceLabel::qubits(4), graph_state(Graph::path(4)));
  r.run = run_pattern(cluster, prep_pattern(theta, phi), ByproductFrame(4), options);
  r.fidelity = fidelity_with_pure(r.run.output, r.target);
  return r;
}

// ---- gate channels ----------------------------------------------------------

GateChannel GateChannel::ideal() {
  GateChannel c;
  c.kraus[0] = {canonical_gate(0)};
  return c;
}

double GateChannel::trace_defect() const {
  CMat s = CMat::Zero(4, 4);
  for (const auto& set : kraus)
    for (const auto& k : set) s += k.adjoint() * k;
  return (s - CMat::Identity(4, 4)).cwiseAbs().maxCoeff();
}

CMat GateChannel::apply(int outcome, const CMat& rho) const {
  if (outcome != 0 && outcome != 1) throw DomainError("mediator outcome must be 0 or 1");
  CMat out = CMat::Zero(rho.rows(), rho.cols());
  for (const auto& k : kraus[static_cast<std::size_t>(outcome)]) out += k * rho * k.adjoint();
  return out;
}

GateChannel mediated_gate_source(double delta_off, double decay, double A) {
  if (!(A > 0.0) || !std::isfinite(A)) throw DomainError("hopping A must be positive");
  if (!(delta_off > 0.0)) throw DomainError("off-resonance detuning must be positive");
  if (!(decay >= 0.0) || !std::isfinite(decay)) throw DomainError("decay rate must be non-negative");
  const bool spectators = std::isfinite(delta_off);
  const int n = spectators ? 5 : 3;
  const int a = spectators ? 1 : 0, m = a + 1, b = a + 2;
  const auto space = SpaceLabel::qubits(n);
  std::vector<std::pair<int, int>> edges;
  for (int k = 0; k + 1 < n; ++k) edges.emplace_back(k, k + 1);
  DetuningProfile det;
  if (spectators) {
    det.set(0, delta_off * A);
    det.set(n - 1, delta_off * A);
  }
  const auto H = build_effective_xy(space, edges, A, det);
  const double t = transfer_time(A);

  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  std::function<CMat(const CMat&)> evolve;
  std::optional<LindbladEvolver> lindblad;
  CMat U;
  if (decay > 0.0) {
    LindbladOptions lo;
    lo.error_limit = 1e-7;
    lindblad.emplace(H, NoiseModel::polariton_decay(space, all, decay * A), t, t / 32, lo);
    evolve = [&](const CMat& r) { return lindblad->apply(r); };
  } else {
    U = expm_hermitian_dense(H.to_dense(), t);
    evolve = [&](const CMat& r) { return CMat(U * r * U.adjoint()); };
  }

  const auto sa = space.stride(a), sb = space.stride(b), sm = space.stride(m);
  auto embed = [&](int i) { return static_cast<Eigen::Index>((i >> 1) * sa + (i & 1) * sb); };
  // Everything except a, b: the mediator pinned to the outcome, the rest free.
  std::vector<std::size_t> rest;
  for (std::size_t r = 0; r < space.dimension(); ++r)
    if (((r / sa) & 1U) == 0 && ((r / sb) & 1U) == 0 && ((r / sm) & 1U) == 0) rest.push_back(r);

  const auto dim = static_cast<Eigen::Index>(space.dimension());
  // Outer-pair block of the evolved state, mediator projected on `o`.
  auto run = [&](const CVec& in4) {
    CVec v = CVec::Zero(dim);
    for (int i = 0; i < 4; ++i) v(embed(i)) = in4(i);
    const CMat out = evolve(v * v.adjoint());
    std::array<CMat, 2> red{CMat::Zero(4, 4), CMat::Zero(4, 4)};
    for (int o = 0; o < 2; ++o)
      for (auto r : rest) {
        const auto base = static_cast<Eigen::Index>(r + static_cast<std::size_t>(o) * sm);
        for (int x = 0; x < 4; ++x)
          for (int y = 0; y < 4; ++y) red[static_cast<std::size_t>(o)](x, y) += out(base + embed(x), base + embed(y));
      }
    return red;
  };
  // The integrator expects density matrices, so coherences |i><j| come from
  // positive inputs: |i><j| = (P(i+j) - P(i) - P(j) + i (P(i+ij) - P(i) - P(j))) / 2.
  auto e = [](int i) { return CVec(CVec::Unit(4, i)); };
  std::array<std::array<CMat, 2>, 4> diag;
  for (int i = 0; i < 4; ++i) diag[static_cast<std::size_t>(i)] = run(e(i));
  std::array<CMat, 2> choi{CMat::Zero(16, 16), CMat::Zero(16, 16)};
  auto put = [&](int i, int j, int o, const CMat& block) { choi[static_cast<std::size_t>(o)].block(i * 4, j * 4, 4, 4) = block; };
  for (int i = 0; i < 4; ++i) {
    for (int o = 0; o < 2; ++o) put(i, i, o, diag[static_cast<std::size_t>(i)][static_cast<std::size_t>(o)]);
    for (int j = i + 1; j < 4; ++j) {
      const auto re = run(e(i) + e(j)), im = run(e(i) + kI * e(j));
      for (int o = 0; o < 2; ++o) {
        const auto oi = static_cast<std::size_t>(o);
        const CMat base = diag[static_cast<std::size_t>(i)][oi] + diag[static_cast<std::size_t>(j)][oi];
        const CMat ij = ((re[oi] - base) + kI * (im[oi] - base)) / 2.0;
        put(i, j, o, ij);
        put(j, i, o, ij.adjoint());
      }
    }
  }
  GateChannel ch;
  for (int o = 0; o < 2; ++o) {
    const CMat J = (choi[static_cast<std::size_t>(o)] + choi[static_cast<std::size_t>(o)].adjoint()) / 2.0;
    Eigen::SelfAdjointEigenSolver<CMat> es(J);
    const double top = std::max(es.eigenvalues().maxCoeff(), 0.0);
    for (Eigen::Index e = 0; e < 16; ++e) {
      const double lam = es.eigenvalues()(e);
      if (lam <= 1e-13 * std::max(top, 1.0)) continue;
      CMat K(4, 4);
      for (int i = 0; i < 4; ++i)
        for (int x = 0; x < 4; ++x) K(x, i) = std::sqrt(lam) * es.eigenvectors()(i * 4 + x, e);
      ch.kraus[static_cast<std::size_t>(o)].push_back(K);
    }
  }
  return ch;
}

double max_product_infidelity(const GateChannel& channel, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  auto haar = [&] {
    CVec v(2);
    v << cplx(g(rng), g(rng)), cplx(g(rng), g(rng));
    return CVec(v / v.norm());
  };
  const CMat zz = gate_zz(), ideal = canonical_gate(1);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const CVec psi = kron_vec(haar(), haar());
    const CMat rho = psi * psi.adjoint();
    const CMat out = zz * channel.apply(0, rho) * zz.adjoint() + channel.apply(1, rho);
    const CVec target = ideal * psi;
    worst = std::max(worst, 1.0 - (target.adjoint() * out * target)(0, 0).real());
  }
  return worst;
}

// ---- recycling --------------------------------------------------------------

void RecyclingProgram::validate() const {
  if (width < 1) throw ShapeError("recycling width must be at least 1");
  if (width > 5) throw DomainError("recycling width above 5 is not supported by the dense executor");
  for (const auto& r : rounds) {
    if (static_cast<int>(r.size()) != width)
      throw ShapeError("every round must give one angle per row of the measured column");
    for (double a : r)
      if (!std::isfinite(a)) throw DomainError("measurement angle must be finite");
  }
  if (input) {
    if (input->size() != (Eigen::Index{1} << width)) throw ShapeError("input state has the wrong dimension");
    if (!(input->norm() > 0.0)) throw DomainError("input state is zero");
  }
}

nlohmann::json RecyclingProgram::to_json() const {
  nlohmann::json j{{"width", width}, {"rounds", rounds}, {"intra", intra == IntraColumn::FreshColumn ? "fresh" : "none"}};
  if (input) j["input"] = cvec_json(*input);
  return j;
}

RecyclingProgram RecyclingProgram::from_json(const nlohmann::json& j) {
  RecyclingProgram p;
  p.width = j.at("width").get<int>();
  p.rounds = j.at("rounds").get<std::vector<std::vector<double>>>();
  const auto intra = j.value("intra", std::string("fresh"));
  if (intra == "fresh") p.intra = IntraColumn::FreshColumn;
  else if (intra == "none") p.intra = IntraColumn::None;
  else throw DomainError("unknown intra-column mode '" + intra + "'");
  if (j.contains("input")) p.input = cvec_from_json(j.at("input"));
  p.validate();
  return p;
}

std::vector<std::pair<int, int>> fresh_column_edges(int width, IntraColumn intra) {
  std::vector<std::pair<int, int>> logical_edges;
  std::vector<int> label(static_cast<std::size_t>(std::max(width, 0)));
  std::iota(label.begin(), label.end(), 0);
  if (intra == IntraColumn::FreshColumn)
    for (int parity = 0; parity < 2; ++parity)
      for (int r = parity; r + 1 < width; r += 2) {
        logical_edges.emplace_back(label[static_cast<std::size_t>(r)], label[static_cast<std::size_t>(r + 1)]);
        std::swap(label[static_cast<std::size_t>(r)], label[static_cast<std::size_t>(r + 1)]);
      }
  // The fresh qubit left at row r becomes wire r.
  std::vector<int> wire_of(label.size());
  for (std::size_t r = 0; r < label.size(); ++r) wire_of[static_cast<std::size_t>(label[r])] = static_cast<int>(r);
  std::vector<std::pair<int, int>> out;
  for (auto [x, y] : logical_edges) {
    const int u = wire_of[static_cast<std::size_t>(x)], v = wire_of[static_cast<std::size_t>(y)];
    out.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<CircuitOp> compile_recycling(const RecyclingProgram& program) {
  program.validate();
  const auto edges = fresh_column_edges(program.width, program.intra);
  std::vector<CircuitOp> ops;
  for (const auto& round : program.rounds) {
    for (int r = 0; r < program.width; ++r) ops.push_back({false, r, 0, round[static_cast<std::size_t>(r)]});
    for (auto [a, b] : edges) ops.push_back({true, a, b, 0.0});
  }
  return ops;
}

CVec run_circuit(int width, const CVec& input, const std::vector<CircuitOp>& ops) {
  if (input.size() != (Eigen::Index{1} << width)) throw ShapeError("circuit input has the wrong dimension");
  CVec psi = input / input.norm();
  for (const auto& op : ops) {
    if (op.a < 0 || op.a >= width || (op.cz && (op.b < 0 || op.b >= width || op.b == op.a)))
      throw ShapeError("circuit op references a missing wire");
    if (op.cz) {
      const Eigen::Index ma = Eigen::Index{1} << (width - 1 - op.a), mb = Eigen::Index{1} << (width - 1 - op.b);
      for (Eigen::Index i = 0; i < psi.size(); ++i)
        if ((i & ma) && (i & mb)) psi(i) = -psi(i);
      continue;
    }
    const Eigen::Index stride = Eigen::Index{1} << (width - 1 - op.a);
    const cplx ph = std::exp(-kI * op.angle);
    const double s = 1.0 / std::sqrt(2.0);
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
      if (i & stride) continue;
      const cplx x0 = psi(i), x1 = ph * psi(i + stride);
      psi(i) = s * (x0 + x1);
      psi(i + stride) = s * (x0 - x1);
    }
  }
  return psi;
}

RecyclingResult run_recycling(const RecyclingProgram& program, const GateChannel& source,
                              const RecyclingOptions& options) {
  program.validate();
  const int w = program.width, n = 2 * w;
  const auto rounds = program.rounds.size();
  if (options.outcomes == OutcomeMode::Average) throw DomainError("recycling runs one branch at a time");
  const bool forced = options.outcomes == OutcomeMode::Forced;
  if (forced && options.forced.size() != rounds * static_cast<std::size_t>(w))
    throw ShapeError("forced outcomes must list one value per measured qubit");

  // Column A (fresh) on sites 0..w-1, column B (data) on sites w..2w-1.
  const auto space = SpaceLabel::qubits(n);
  std::vector<int> sites(static_cast<std::size_t>(n));
  std::iota(sites.begin(), sites.end(), 0);
  CVec fresh = plus_state();
  for (int r = 1; r < w; ++r) fresh = kron_vec(fresh, plus_state());
  CVec data = fresh;
  if (program.input) data = *program.input / program.input->norm();
  const CVec psi0 = kron_vec(fresh, data);
  CMat rho = psi0 * psi0.adjoint();

  RecyclingResult res;
  res.frame = ByproductFrame(n);
  auto& frame = res.frame;
  Graph ideal{n, {}};
  std::vector<int> wire(static_cast<std::size_t>(w));
  std::iota(wire.begin(), wire.end(), w);
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const CMat H = hadamard();

  auto gate = [&](int pa, int pb, std::vector<int>& log) {
    std::array<CMat, 2> out;
    std::array<double, 2> p{0.0, 0.0};
    for (int o = 0; o < 2; ++o) {
      out[o] = CMat::Zero(rho.rows(), rho.cols());
      for (const auto& K : source.kraus[static_cast<std::size_t>(o)]) out[o] += apply_two_site(space, pa, pb, K, rho);
      p[o] = out[o].trace().real();
    }
    const double total = p[0] + p[1];
    int m = 0;
    if (p[0] < kImpossibleBranch * total) m = 1;
    else if (p[1] >= kImpossibleBranch * total) m = u(rng) * total < p[0] ? 0 : 1;
    rho = out[m] / p[m];
    res.probability *= p[m] / total;
    ideal.toggle(frame.logical_at(pa), frame.logical_at(pb));
    frame.cz_positions(pa, pb);
    if (m == 0) {
      frame.add_z_at(pa);
      frame.add_z_at(pb);
    }
    frame.swap_positions(pa, pb);
    log.push_back(m);
    res.mediator_outcomes.push_back(m);
  };

  for (std::size_t k = 0; k < rounds; ++k) {
    const auto& angles = program.rounds[k];
    const double p_before = res.probability;
    std::vector<int> mediators, signals, physical;
    if (program.intra == IntraColumn::FreshColumn)
      for (int parity = 0; parity < 2; ++parity)
        for (int r = parity; r + 1 < w; r += 2) gate(r, r + 1, mediators);

    std::vector<int> next(static_cast<std::size_t>(w));
    for (int r = 0; r < w; ++r) {
      next[static_cast<std::size_t>(r)] = frame.logical_at(r);
      gate(r, w + r, mediators);
    }

    for (int r = 0; r < w; ++r) {
      const int d = wire[static_cast<std::size_t>(r)], f = next[static_cast<std::size_t>(r)];
      const int p = frame.position(d);
      const double theta = angles[static_cast<std::size_t>(r)];
      std::optional<int> fo;
      if (forced) fo = options.forced[k * static_cast<std::size_t>(w) + static_cast<std::size_t>(r)];
      auto m = measure_qubit(QuantumState::density(space, rho, 1.0, false), p,
                             MeasurementBasis::tilted(frame.x(d) ? -theta : theta), fo, &rng);
      rho = m.post_state.matrix();
      res.probability *= m.probability;
      const int s = m.outcome ^ static_cast<int>(frame.z(d));
      physical.push_back(m.outcome);
      signals.push_back(s);
      res.outcomes.push_back(s);
      // Z on d equals X on its partner times Z on the partner's other
      // neighbours, by the partner's stabilizer.
      if (s) {
        frame.add_x_at(frame.position(f));
        for (int g : ideal.neighbours(f))
          if (g != d) frame.add_z_at(frame.position(g));
      }
      for (int g : ideal.neighbours(d)) ideal.toggle(d, g);
      rho = apply_local(space, p, H, reset_qubit(space, rho, p));
      if (frame.x(d)) frame.add_x_at(p);
      if (frame.z(d)) frame.add_z_at(p);
    }

    for (int r = 0; r < w; ++r) res.realised.push_back({false, r, 0, angles[static_cast<std::size_t>(r)]});
    std::vector<int> wire_of(static_cast<std::size_t>(n), -1);
    for (int r = 0; r < w; ++r) wire_of[static_cast<std::size_t>(next[static_cast<std::size_t>(r)])] = r;
    std::vector<std::pair<int, int>> edges;
    for (auto [x, y] : ideal.edges) {
      const int a = wire_of[static_cast<std::size_t>(x)], b = wire_of[static_cast<std::size_t>(y)];
      if (a < 0 || b < 0) throw CertificationError("recycling left an edge outside the output column");
      edges.emplace_back(std::min(a, b), std::max(a, b));
    }
    std::sort(edges.begin(), edges.end());
    for (auto [a, b] : edges) res.realised.push_back({true, a, b, 0.0});
    wire = next;

    res.log.push_back({{"round", k},
                       {"angles", angles},
                       {"outcomes", signals},
                       {"physical", physical},
                       {"mediators", mediators},
                       {"probability", res.probability / p_before},
                       {"frame", frame.to_json()}});
  }

  const CMat corrected = frame.correct(space, sites, rho);
  res.output = reduce(QuantumState::density(space, corrected, 1.0, false), wire);
  return res;
}

void write_round_log(std::ostream& out, const RecyclingResult& result) {
  for (const auto& j : result.log) out << j.dump() << '\n';
}

}  // namespace ccsim
