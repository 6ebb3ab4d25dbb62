#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "ccsim/chain_gate.hpp"
#include "ccsim/dynamics.hpp"
#include "ccsim/mbqc.hpp"

using namespace ccsim;
using namespace testing_helpers;

namespace {

constexpr double kPi = std::numbers::pi;

CMat H2() {
  CMat h(2, 2);
  h << 1.0, 1.0, 1.0, -1.0;
  return h / std::sqrt(2.0);
}

CMat rz_neg(double theta) {
  CMat m = CMat::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = std::exp(-kI * theta);
  return m;
}

CMat Zm() { return pauli_z().to_dense(); }
CMat I2() { return CMat::Identity(2, 2); }

CVec plus() { return CVec::Constant(2, 1.0 / std::sqrt(2.0)); }

CVec kv(const CVec& a, const CVec& b) { return kron(CMat(a), CMat(b)).col(0); }

CMat cz4() {
  CMat m = CMat::Identity(4, 4);
  m(3, 3) = -1.0;
  return m;
}

// |<bits in XY basis>|state>|^2 by direct contraction.
double xy_probability(const CVec& psi, const std::vector<double>& angles, const std::vector<int>& bits) {
  CVec bra = CVec::Ones(1);
  for (std::size_t k = 0; k < angles.size(); ++k) {
    CVec v(2);
    v << 1.0 / std::sqrt(2.0), (bits[k] ? -1.0 : 1.0) * std::exp(kI * angles[k]) / std::sqrt(2.0);
    bra = kv(bra, v);
  }
  return std::norm(bra.dot(psi));
}

QuantumState pure(const CVec& v) {
  return QuantumState::pure(SpaceLabel::qubits(static_cast<int>(std::log2(v.size()) + 0.5)), v);
}

std::vector<std::filesystem::path> corpus() {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(std::string(CCSIM_TEST_DATA) + "/recycling"))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

RecyclingProgram load(const std::filesystem::path& p) {
  std::ifstream in(p);
  return RecyclingProgram::from_json(nlohmann::json::parse(in));
}

}  // namespace

TEST_CASE("single teleportation step applies H.Rz(-theta) up to the frame") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 6; ++trial) {
    const CVec psi = trial == 0 ? plus() : random_state(rng, 2);
    const double theta = trial == 0 ? 0.0 : 0.9 * trial - 2.0;
    const CVec cluster = cz4() * kv(psi, plus());
    MeasurementPattern p;
    p.qubits = 2;
    p.measurements = {{0, false, theta, {}, {}}};
    p.outputs = {1};
    p.corrections = {{1, {0}, {}}};
    const CVec expected = H2() * rz_neg(theta) * psi;
    const auto branches = run_all_branches(pure(cluster), p, ByproductFrame(2));
    CHECK(branches.size() == 2);
    for (const auto& b : branches) {
      CHECK(b.probability == doctest::Approx(0.5).epsilon(1e-12));
      CHECK(fidelity_with_pure(b.output, expected) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("box cluster measured in Z and X obeys the stabilizer parities") {
  const CVec box = graph_state(Graph::box());
  MeasurementPattern z;
  z.qubits = 4;
  for (int q = 0; q < 4; ++q) z.measurements.push_back({q, true, 0.0, {}, {}});
  const auto zr = run_all_branches(pure(box), z, ByproductFrame(4));
  // No stabilizer is a pure Z string, so every outcome is equally likely.
  CHECK(zr.size() == 16);
  for (const auto& r : zr) CHECK(r.probability == doctest::Approx(1.0 / 16).epsilon(1e-12));

  MeasurementPattern x;
  x.qubits = 4;
  for (int q = 0; q < 4; ++q) x.measurements.push_back({q, false, 0.0, {}, {}});
  const auto xr = run_all_branches(pure(box), x, ByproductFrame(4));
  // K0 K3 = X0 X3 and K1 K2 = X1 X2.
  CHECK(xr.size() == 4);
  for (const auto& r : xr) {
    CHECK(r.outcomes[0] == r.outcomes[3]);
    CHECK(r.outcomes[1] == r.outcomes[2]);
    CHECK(r.probability == doctest::Approx(xy_probability(box, {0, 0, 0, 0}, r.outcomes)).epsilon(1e-12));
  }
}

TEST_CASE("empty pattern leaves state and frame unchanged") {
  std::mt19937_64 rng(8);
  const CVec psi = random_state(rng, 8);
  MeasurementPattern p;
  p.qubits = 3;
  p.outputs = {0, 1, 2};
  const auto r = run_pattern(pure(psi), p, ByproductFrame(3));
  CHECK(fidelity_with_pure(r.output, psi) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.frame.is_identity());
  CHECK(r.outcomes.empty());

  ByproductFrame f(3);
  f.add_x_at(1);
  f.swap_positions(0, 2);
  CHECK(run_pattern(pure(psi), p, f).frame == f);
}

TEST_CASE("pattern validation and JSON") {
  MeasurementPattern p;
  p.qubits = 3;
  p.measurements = {{0, false, 0.1, {1}, {}}, {1, false, 0.2, {}, {}}};
  CHECK_THROWS_AS(p.validate(), DomainError);
  p.measurements = {{0, false, 0.1, {}, {}}, {0, false, 0.2, {}, {}}};
  CHECK_THROWS_AS(p.validate(), ShapeError);
  p.measurements = {{0, false, 0.1, {}, {}}};
  p.outputs = {0};
  CHECK_THROWS_AS(p.validate(), ShapeError);
  p.outputs = {2};
  p.corrections = {{2, {0}, {5}}};
  CHECK_THROWS_AS(p.validate(), DomainError);

  const auto g = grover_pattern(2);
  const auto back = MeasurementPattern::from_json(nlohmann::json::parse(g.to_json().dump()));
  CHECK(back.to_json() == g.to_json());
  CHECK_THROWS_AS(MeasurementPattern::from_json(nlohmann::json::parse(
                      R"({"qubits":2,"measurements":[{"qubit":0,"basis":"Q"}],"outputs":[1]})")),
                  DomainError);

  PatternOptions avg;
  avg.outcomes = OutcomeMode::Average;
  CHECK_THROWS_AS(run_pattern(pure(graph_state(Graph::box())), g, ByproductFrame(4), avg), DomainError);
}

TEST_CASE("a pending frame is folded into angles and outcomes") {
  std::mt19937_64 rng(21);
  const auto pattern = prep_pattern(1.1, 0.4);
  const CVec ideal = graph_state(Graph::path(4));
  const auto space = SpaceLabel::qubits(4);
  const std::vector<int> hosts{0, 1, 2, 3};
  auto by_signals = [](const std::vector<PatternRun>& runs) {
    std::map<std::vector<int>, const PatternRun*> m;
    for (const auto& r : runs) m[r.outcomes] = &r;
    return m;
  };
  const auto ref_runs = run_all_branches(pure(ideal), pattern, ByproductFrame(4));
  const auto ref = by_signals(ref_runs);
  for (int trial = 0; trial < 8; ++trial) {
    ByproductFrame f(4);
    std::uniform_int_distribution<int> pick(0, 3), op(0, 2);
    for (int k = 0; k < 6; ++k) {
      const int a = pick(rng), b = (a + 1 + pick(rng) % 3) % 4;
      switch (op(rng)) {
        case 0: f.add_x_at(a); break;
        case 1: f.add_z_at(a); break;
        default: f.swap_positions(a, b); break;
      }
    }
    const auto runs = run_all_branches(QuantumState::pure(space, f.apply(space, hosts, ideal)), pattern, f);
    const auto got = by_signals(runs);
    REQUIRE(got.size() == ref.size());
    for (const auto& [signals, r] : got) {
      REQUIRE(ref.count(signals) == 1);
      CHECK(r->probability == doctest::Approx(ref.at(signals)->probability).epsilon(1e-12));
      CHECK(trace_distance(r->output.matrix(), ref.at(signals)->output.matrix()) < 1e-10);
    }
  }
}

TEST_CASE("box_to_linear maps the box onto the 4-qubit path") {
  const CVec box = graph_state(Graph::box());
  const auto lin = box_to_linear(pure(box));
  CHECK(fidelity_with_pure(lin, graph_state(Graph::path(4))) > 1.0 - 1e-10);

  // Explicit layer: Z on the ends, relabeling 2-1-0-3, then H x H x Z x Z.
  CMat P = CMat::Zero(16, 16);
  for (int i = 0; i < 16; ++i) {
    const int b0 = (i >> 3) & 1, b1 = (i >> 2) & 1, b2 = (i >> 1) & 1, b3 = i & 1;
    P((b2 << 3) | (b1 << 2) | (b0 << 1) | b3, i) = 1.0;
  }
  const CMat layer = kron(kron(Zm(), I2()), kron(I2(), Zm())) * P * kron(kron(H2(), H2()), kron(Zm(), Zm()));
  const auto twice = box_to_linear(box_to_linear(pure(box)), 2.0);
  CHECK(fidelity_with_pure(twice, layer * layer * box) == doctest::Approx(1.0).epsilon(1e-12));

  // Depolarized box: overlap is unchanged by local unitaries.
  const CMat rho = 0.7 * box * box.adjoint() + 0.3 * CMat::Identity(16, 16) / 16.0;
  const auto noisy = QuantumState::density(SpaceLabel::qubits(4), rho);
  const double f_in = fidelity_with_pure(noisy, box);
  CHECK(fidelity_with_pure(box_to_linear(noisy, 1.0), graph_state(Graph::path(4))) ==
        doctest::Approx(f_in).epsilon(1e-12));
  CHECK_THROWS_AS(box_to_linear(noisy), DomainError);
  CHECK_THROWS_AS(box_to_linear(pure(graph_state(Graph::path(4)))), DomainError);
}

TEST_CASE("two-qubit Grover on the ideal box finds every marked item") {
  for (int marked = 0; marked < 4; ++marked) {
    const auto g = grover_two_qubit(marked);
    CHECK(g.success == doctest::Approx(1.0).epsilon(1e-9));
    double total = 0.0;
    for (double h : g.histogram) total += h;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  const auto mixed = QuantumState::maximally_mixed(SpaceLabel::qubits(4));
  for (int marked = 0; marked < 4; ++marked)
    CHECK(grover_two_qubit(marked, mixed).success == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_THROWS_AS(grover_pattern(4), DomainError);
}

TEST_CASE("Grover on the fabricated box at 16A detuning") {
  const auto layout = LatticeLayout::standard(3, 3);
  FabricationOptions o;
  o.delta_off = 16.0;
  const auto rec = run_fabrication(layout, edge_schedule(layout), o);
  // With X readout the decoded pair is right iff X0X3 = X1X2 = +1 (up to
  // the oracle signs), so success = (1 + <X0X3> + <X1X2> + <XXXX>) / 4.
  const CMat X = pauli_x().to_dense(), rho = rec.state.density_matrix();
  auto ev = [&](const CMat& op) { return (rho * op).trace().real(); };
  const double oracle = (1.0 + ev(kron(kron(X, I2()), kron(I2(), X))) + ev(kron(kron(I2(), X), kron(X, I2()))) +
                         ev(kron(kron(X, X), kron(X, X)))) / 4.0;
  for (int marked = 0; marked < 4; ++marked) {
    const double s = grover_two_qubit(marked, rec).success;
    CHECK(s > 0.25);
    CHECK(s == doctest::Approx(0.644876794305).epsilon(1e-9));
    CHECK(s == doctest::Approx(oracle).epsilon(1e-10));
  }
  auto bad = rec;
  bad.graph = Graph::path(4);
  CHECK_THROWS_AS(grover_two_qubit(0, bad), DomainError);
}

TEST_CASE("single-qubit preparation reaches a 12-point Bloch grid") {
  for (double theta : {0.4, 1.3, 2.2, 2.9})
    for (double phi : {0.0, 2.1, 4.4}) {
      const auto r = single_qubit_prep_demo(theta, phi);
      CHECK(r.fidelity == doctest::Approx(1.0).epsilon(1e-9));
    }
  CHECK(single_qubit_prep_demo(0.0, 0.0).fidelity == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(single_qubit_prep_demo(kPi, 0.0).fidelity == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(single_qubit_prep_demo(kPi / 2, 0.0).fidelity == doctest::Approx(1.0).epsilon(1e-9));

  // All-X measurements on the path apply H three times: |+> ends as |0>.
  MeasurementPattern allx = prep_pattern(0.0, 0.0);
  for (auto& m : allx.measurements) m.angle = 0.0;
  const auto r = run_pattern(pure(graph_state(Graph::path(4))), allx, ByproductFrame(4));
  CVec zero = CVec::Zero(2);
  zero(0) = 1.0;
  CHECK(fidelity_with_pure(r.output, zero) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("preparation is outcome-covariant over all eight branches") {
  const auto pattern = prep_pattern(1.7, 3.3);
  const auto branches = run_all_branches(pure(graph_state(Graph::path(4))), pattern, ByproductFrame(4));
  CHECK(branches.size() == 8);
  double total = 0.0;
  for (const auto& b : branches) {
    total += b.probability;
    CHECK(trace_distance(b.output.matrix(), branches.front().output.matrix()) < 1e-9);
    CHECK(fidelity_with_pure(b.output, bloch_state(1.7, 3.3)) == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mediated gate channel") {
  const auto exact = mediated_gate_source(std::numeric_limits<double>::infinity());
  REQUIRE(exact.kraus[0].size() == 1);
  CHECK(gate_distance(exact.kraus[0][0], canonical_gate(0)) < 1e-10);
  CHECK(exact.kraus[1].empty());
  CHECK(max_product_infidelity(exact, 20) < 1e-10);
  CHECK(max_product_infidelity(GateChannel::ideal(), 20) < 1e-12);

  const auto detuned = mediated_gate_source(16.0);
  const auto lossy = mediated_gate_source(16.0, 0.05);
  CHECK(detuned.trace_defect() < 1e-7);
  CHECK(lossy.trace_defect() < 1e-7);
  const double off16 = max_product_infidelity(detuned, 64, 3);
  const double off64 = max_product_infidelity(mediated_gate_source(64.0), 64, 3);
  CHECK(off16 > off64);
  CHECK(off64 > 0.0);
  CHECK(max_product_infidelity(mediated_gate_source(std::numeric_limits<double>::infinity(), 0.05), 64, 3) > 1e-3);
  CHECK_THROWS_AS(mediated_gate_source(-1.0), DomainError);
}

TEST_CASE("fresh-column bookkeeping") {
  CHECK(fresh_column_edges(1, IntraColumn::FreshColumn).empty());
  CHECK(fresh_column_edges(2, IntraColumn::FreshColumn) == std::vector<std::pair<int, int>>{{0, 1}});
  // SWAPs in the second gate move the middle fresh qubit to the bottom row.
  CHECK(fresh_column_edges(3, IntraColumn::FreshColumn) == std::vector<std::pair<int, int>>{{0, 2}, {1, 2}});
  CHECK(fresh_column_edges(3, IntraColumn::None).empty());
}

TEST_CASE("recycling corpus matches the direct circuit on every checked branch") {
  const auto files = corpus();
  REQUIRE(files.size() >= 8);
  for (const auto& f : files) {
    const auto prog = load(f);
    INFO(f.filename().string());
    const auto ops = compile_recycling(prog);
    CVec input = CVec::Constant(Eigen::Index{1} << prog.width, std::pow(0.5, prog.width / 2.0));
    if (prog.input) input = *prog.input;
    const CVec oracle = run_circuit(prog.width, input, ops);
    const CMat oracle_rho = oracle * oracle.adjoint();

    const auto sampled = run_recycling(prog, GateChannel::ideal());
    CHECK(sampled.realised == ops);
    CHECK(trace_distance(sampled.output.matrix(), oracle_rho) < 1e-8);
    CHECK(sampled.log.size() == prog.rounds.size());

    const std::size_t k = prog.rounds.size() * static_cast<std::size_t>(prog.width);
    const bool complete = k <= 6;
    const std::size_t count = complete ? (std::size_t{1} << k) : 64;
    std::mt19937_64 rng(99);
    RecyclingOptions o;
    o.outcomes = OutcomeMode::Forced;
    double total = 0.0;
    for (std::size_t b = 0; b < count; ++b) {
      o.forced.clear();
      for (std::size_t j = 0; j < k; ++j) o.forced.push_back(complete ? static_cast<int>((b >> j) & 1U) : static_cast<int>(rng() & 1U));
      const auto r = run_recycling(prog, GateChannel::ideal(), o);
      total += r.probability;
      CHECK(trace_distance(r.output.matrix(), oracle_rho) < 1e-9);
    }
    if (complete) CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("recycling special cases") {
  RecyclingProgram p;
  p.width = 1;
  CHECK(fidelity_with_pure(run_recycling(p, GateChannel::ideal()).output, plus()) == doctest::Approx(1.0).epsilon(1e-12));
  p.rounds = {{0.0}, {0.0}};
  CHECK(fidelity_with_pure(run_recycling(p, GateChannel::ideal()).output, plus()) == doctest::Approx(1.0).epsilon(1e-12));
  p.rounds = {{0.0}, {0.0}, {0.0}};
  CVec zero = CVec::Zero(2);
  zero(0) = 1.0;
  CHECK(fidelity_with_pure(run_recycling(p, GateChannel::ideal()).output, zero) == doctest::Approx(1.0).epsilon(1e-12));

  // One round on two rows: teleport each wire, then the fresh column's CZ.
  RecyclingProgram cz;
  cz.width = 2;
  cz.rounds = {{0.3, 1.1}};
  const CVec direct = cz4() * kron(H2() * rz_neg(0.3), H2() * rz_neg(1.1)) * kv(plus(), plus());
  const auto r = run_recycling(cz, GateChannel::ideal(), {OutcomeMode::Sample, {}, 5});
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(r.output.matrix()(i, i).real() == doctest::Approx(std::norm(direct(i))).epsilon(1e-12));
  CHECK(fidelity_with_pure(r.output, direct) == doctest::Approx(1.0).epsilon(1e-12));

  std::ostringstream log;
  write_round_log(log, r);
  const auto line = nlohmann::json::parse(log.str());
  CHECK(line["round"] == 0);
  CHECK(line["mediators"].size() == 3);

  // A channel built from the exact chain reproduces the ideal executor.
  const auto exact = mediated_gate_source(std::numeric_limits<double>::infinity());
  const auto deep = load(std::filesystem::path(CCSIM_TEST_DATA) / "recycling" / "w2_deep.json");
  CHECK(trace_distance(run_recycling(deep, exact).output.matrix(), run_recycling(deep, GateChannel::ideal()).output.matrix()) < 1e-8);
  const auto off = run_recycling(deep, mediated_gate_source(16.0));
  CHECK(trace_distance(off.output.matrix(), run_recycling(deep, GateChannel::ideal()).output.matrix()) > 1e-4);

  RecyclingProgram bad;
  bad.width = 2;
  bad.rounds = {{0.1}};
  CHECK_THROWS_AS(run_recycling(bad, GateChannel::ideal()), ShapeError);
  CHECK_THROWS_AS(RecyclingProgram::from_json(nlohmann::json::parse(R"({"width":1,"rounds":[[0]],"intra":"both"})")),
                  DomainError);
}
