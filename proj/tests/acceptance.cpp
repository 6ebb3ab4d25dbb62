// Acceptance run: one PASS/FAIL line per criterion with wall time. With no
// arguments every criterion runs; otherwise only the listed numbers. Exit
// status is nonzero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "json.hpp"
#include "ccsim/cavity_model.hpp"
#include "ccsim/chain_gate.hpp"
#include "ccsim/cluster_fab.hpp"
#include "ccsim/dynamics.hpp"
#include "ccsim/mbqc.hpp"
#include "ccsim/resources.hpp"

using namespace ccsim;
using namespace testing_helpers;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

// Criterion 1 ---------------------------------------------------------------

// Dense oracle written from scratch: 8x8 XY Hamiltonian from explicit
// Kronecker products, exponentiated through its eigenbasis.
CMat oracle_gate(double A, int outcome) {
  CMat X(2, 2), Y(2, 2), I = CMat::Identity(2, 2);
  X << 0, 1, 1, 0;
  Y << 0, cplx(0, -1), cplx(0, 1), 0;
  auto k3 = [](const CMat& a, const CMat& b, const CMat& c) { return kron(kron(a, b), c); };
  const CMat H = A * (k3(X, X, I) + k3(Y, Y, I) + k3(I, X, X) + k3(I, Y, Y));
  Eigen::SelfAdjointEigenSolver<CMat> es(H);
  const double t = kPi / (2.0 * std::sqrt(2.0) * A);
  CVec phases(8);
  for (int i = 0; i < 8; ++i) phases(i) = std::exp(cplx(0, -es.eigenvalues()(i) * t));
  const CMat U = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  // Mediator (middle) starts in |+>, is read out as `outcome`.
  CMat G(4, 4);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int a2 = 0; a2 < 2; ++a2)
        for (int b2 = 0; b2 < 2; ++b2) {
          const int out = a * 4 + outcome * 2 + b;
          const cplx amp = (U(out, a2 * 4 + b2) + U(out, a2 * 4 + 2 + b2)) / std::sqrt(2.0);
          G(a * 2 + b, a2 * 2 + b2) = amp;
        }
  return G / std::sqrt((G.adjoint() * G).trace().real() / 4.0);
}

Outcome criterion_gate() {
  Outcome o;
  CMat cp = CMat::Identity(4, 4), swap = CMat::Zero(4, 4), zz = CMat::Zero(4, 4);
  cp(3, 3) = -1.0;
  swap(0, 0) = swap(1, 2) = swap(2, 1) = swap(3, 3) = 1.0;
  zz.diagonal() << 1.0, -1.0, -1.0, 1.0;
  const CMat expected[2] = {swap * zz * cp, swap * cp};
  for (double A : {1.0, 0.37}) {
    for (int k : {0, 1}) {
      const auto g = extract_conditional_gate(A, k);
      const CMat oracle = oracle_gate(A, k);
      const double d_lib = gate_distance(g.gate, expected[k]);
      const double d_oracle = gate_distance(oracle, expected[k]);
      const double d_pair = gate_distance(g.gate, oracle);
      o.check(d_lib < 1e-8 && d_oracle < 1e-8 && d_pair < 1e-8,
              "A=" + fmt(A) + " outcome " + std::to_string(k) + " -> " + canonical_label(k) + ": distance " +
                  fmt(d_lib) + ", oracle " + fmt(d_oracle) + ", library vs oracle " + fmt(d_pair));
    }
  }
  return o;
}

// Criterion 2 ---------------------------------------------------------------

Outcome criterion_ideal_fabrication() {
  Outcome o;
  const auto layout = LatticeLayout::standard(3, 3);
  FabricationOptions opt;
  opt.decoupling = Decoupling::Ideal;
  const auto r = run_fabrication(layout, edge_schedule(layout), opt);
  o.check(r.fidelity >= 1.0 - 1e-8, "box fidelity " + fmt(r.fidelity));
  // Checked independently of the library's fidelity against the explicit
  // graph state built from the recorded edges.
  const auto w = stabilizer_witness(r.state, r.graph, ByproductFrame(r.graph.n));
  double worst = 1.0;
  for (double v : w) worst = std::min(worst, v);
  o.check(w.size() == 4 && worst >= 1.0 - 1e-8, "smallest of four stabilizers " + fmt(worst));
  o.check(r.graph.edges.size() == 4, "graph has " + std::to_string(r.graph.edges.size()) + " edges");
  return o;
}

// Criterion 3 ---------------------------------------------------------------

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Outcome criterion_detuning(double& elapsed_sweep) {
  Outcome o;
  const auto layout = LatticeLayout::standard(3, 3);
  const std::vector<double> rates{0.0, 0.05, 0.08};
  const auto deltas = log_spaced(4.0, 64.0, 16);
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = sweep_fidelity(layout, deltas, rates, FabricationOptions{}, 0, 0, true);
  elapsed_sweep = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  {
    std::ofstream csv("acceptance_sweep.csv");
    write_sweep_csv(csv, rows);
  }

  std::map<double, std::vector<SweepRow>> by_rate;
  for (const auto& r : rows) by_rate[r.noise_rate].push_back(r);

  std::vector<double> x, y;
  for (const auto& r : by_rate[0.0])
    if (r.delta_over_A >= 8.0 - 1e-12) {
      x.push_back(r.delta_over_A);
      y.push_back(1.0 - r.fidelity_mean);
    }
  const double slope = loglog_slope(x, y);
  o.check(std::abs(slope + 2.0) <= 0.3, "log-log slope of noiseless infidelity over [8,64]: " + fmt(slope) +
                                            " (target -2.0 +- 0.3)");

  for (const auto& [rate, curve] : by_rate) {
    for (bool ps : {false, true}) {
      std::string where;
      for (std::size_t i = 1; i < curve.size(); ++i) {
        const double a = ps ? curve[i - 1].fidelity_postselected : curve[i - 1].fidelity_mean;
        const double b = ps ? curve[i].fidelity_postselected : curve[i].fidelity_mean;
        if (b < a) where += " " + fmt(curve[i - 1].delta_over_A) + "->" + fmt(curve[i].delta_over_A);
      }
      o.check(where.empty(), std::string("monotone ") + (ps ? "post-selected" : "averaged") + " curve, rate " +
                                 fmt(rate) + (where.empty() ? "" : ", drops at" + where));
    }
    std::string where;
    for (const auto& r : curve)
      if (r.fidelity_postselected < r.fidelity_mean) where += " " + fmt(r.delta_over_A);
    o.check(where.empty(), "post-selected >= averaged, rate " + fmt(rate) + (where.empty() ? "" : ", violated at" + where));
  }
  for (bool ps : {false, true}) {
    std::string where;
    for (std::size_t i = 0; i < deltas.size(); ++i) {
      auto f = [&](double rate) {
        const auto& r = by_rate[rate][i];
        return ps ? r.fidelity_postselected : r.fidelity_mean;
      };
      if (!(f(0.0) > f(0.05) && f(0.05) > f(0.08))) where += " " + fmt(deltas[i]);
    }
    o.check(where.empty(), std::string("decay ordering 0 > 0.05 > 0.08, ") + (ps ? "post-selected" : "averaged") +
                               (where.empty() ? "" : ", violated at" + where));
  }
  o.check(elapsed_sweep < 600.0, "16-point sweep at three rates took " + fmt(elapsed_sweep) + " s");
  return o;
}

// Criterion 4 ---------------------------------------------------------------

Outcome criterion_full_model() {
  Outcome o;
  ModelParams p;
  p.g = 50.0;
  p.A = 1.0;
  p.n_max = 2;
  const auto r = full_model_cross_check(p);
  o.check(r.max_infidelity <= 0.05, "largest infidelity over one exchange period " + fmt(r.max_infidelity) +
                                        " (effective coupling " + fmt(kEffectiveCouplingRatio) + " A)");
  const double mott = std::max(r.max_mott_violation, r.max_drive_mott_violation);
  o.check(mott <= 1e-3, "largest double-occupancy population " + fmt(mott));
  return o;
}

// Criterion 5 ---------------------------------------------------------------

Outcome criterion_mbqc() {
  Outcome o;
  double worst = 1.0;
  for (int m = 0; m < 4; ++m) worst = std::min(worst, grover_two_qubit(m).success);
  o.check(std::abs(worst - 1.0) <= 1e-9, "ideal Grover, lowest success over four items " + fmt(worst));

  // Every branch of every grid point, not just one sample.
  worst = 1.0;
  int runs = 0;
  for (double theta : {0.4, 1.3, 2.2, 2.9})
    for (double phi : {0.0, 2.1, 4.4})
      for (int b = 0; b < 8; ++b) {
        PatternOptions opt;
        opt.outcomes = OutcomeMode::Forced;
        opt.forced = {b & 1, (b >> 1) & 1, (b >> 2) & 1};
        worst = std::min(worst, single_qubit_prep_demo(theta, phi, opt).fidelity);
        ++runs;
      }
  o.check(std::abs(worst - 1.0) <= 1e-9, "preparation on 12 Bloch points x 8 branches (" + std::to_string(runs) +
                                             " runs), lowest fidelity " + fmt(worst));

  const auto linear = box_to_linear(QuantumState::pure(SpaceLabel::qubits(4), graph_state(Graph::box())));
  const double f = fidelity_with_pure(linear, graph_state(Graph::path(4)));
  o.check(std::abs(f - 1.0) <= 1e-10, "box_to_linear fidelity with the 4-path cluster " + fmt(f));
  return o;
}

// Criterion 6 ---------------------------------------------------------------

Outcome criterion_recycling() {
  Outcome o;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(CCSIM_TEST_DATA "/recycling"))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  o.check(!files.empty(), std::to_string(files.size()) + " corpus programs");

  for (const auto& f : files) {
    std::ifstream in(f);
    const auto prog = RecyclingProgram::from_json(nlohmann::json::parse(in));
    const auto ops = compile_recycling(prog);
    CVec input = CVec::Constant(Eigen::Index{1} << prog.width, std::pow(0.5, prog.width / 2.0));
    if (prog.input) input = *prog.input;
    const CVec oracle = run_circuit(prog.width, input, ops);
    const CMat oracle_rho = oracle * oracle.adjoint();

    const auto sampled = run_recycling(prog, GateChannel::ideal());
    const double d = trace_distance(sampled.output.matrix(), oracle_rho);

    // All branches when there are at most 2^12, otherwise 256 seeded ones.
    const std::size_t k = prog.rounds.size() * static_cast<std::size_t>(prog.width);
    const bool complete = k <= 12;
    const std::size_t count = complete ? (std::size_t{1} << k) : 256;
    std::mt19937_64 rng(7);
    RecyclingOptions opt;
    opt.outcomes = OutcomeMode::Forced;
    double spread = 0.0, total = 0.0;
    CMat first;
    for (std::size_t b = 0; b < count; ++b) {
      opt.forced.clear();
      for (std::size_t j = 0; j < k; ++j)
        opt.forced.push_back(complete ? static_cast<int>((b >> j) & 1U) : static_cast<int>(rng() & 1U));
      const auto r = run_recycling(prog, GateChannel::ideal(), opt);
      total += r.probability;
      if (b == 0) first = r.output.matrix();
      spread = std::max(spread, trace_distance(r.output.matrix(), first));
    }
    const bool ok = d < 1e-8 && spread < 1e-9 && sampled.realised == ops && (!complete || std::abs(total - 1.0) < 1e-10) &&
                    prog.width <= 3 && prog.rounds.size() <= 6;
    o.check(ok, f.stem().string() + ": w=" + std::to_string(prog.width) + " rounds=" +
                    std::to_string(prog.rounds.size()) + ", distance to circuit " + fmt(d) + ", " +
                    std::to_string(count) + (complete ? " (all)" : " (sampled)") + " branches spread " + fmt(spread));
  }
  return o;
}

// Criterion 7 ---------------------------------------------------------------

Outcome criterion_resources() {
  Outcome o;
  const auto full = estimate_shor15(ResourceMode::FullBreadth);
  o.check(full.rows == 21 && full.cols == 311, "full breadth " + std::to_string(full.rows) + "x" + std::to_string(full.cols));
  const auto rec = estimate_shor15(ResourceMode::Recycling);
  o.check(rec.rows == 21 && rec.cols == 3 && rec.steps == 156,
          "recycling " + std::to_string(rec.rows) + "x" + std::to_string(rec.cols) + ", " + std::to_string(rec.steps) +
              " steps");
  const auto circ = estimate_shor15(ResourceMode::CircuitModel);
  const double expected = 15.0 * kPi / std::sqrt(2.0);
  o.check(circ.rows == 5 && circ.cols == 3 && circ.steps == 15 && std::abs(circ.time - expected) < 1e-12,
          "circuit model " + std::to_string(circ.rows) + "x" + std::to_string(circ.cols) + ", " +
              std::to_string(circ.steps) + " steps, time " + fmt(circ.time) + "/A");
  const auto feas = check_feasibility(ModelParams{});
  o.check(feas.all_pass, "default parameters inside every window");
  o.check(std::abs(feas.time_ratio - std::sqrt(2.0) * kPi / 10.0) < 1e-12,
          "preparation / decay-safe time " + fmt(feas.time_ratio));
  return o;
}

// Criterion 8 ---------------------------------------------------------------

Outcome criterion_hygiene() {
  Outcome o;
  constexpr int kInstances = 100;
  double worst_prop = 0.0;
  for (std::uint64_t seed = 0; seed < kInstances; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    const int n = 1 + static_cast<int>(seed % 7);
    const auto space = SpaceLabel::qubits(n);
    const auto dim = static_cast<Eigen::Index>(space.dimension());
    auto H = OperatorMatrix::from_dense(space, random_hermitian(rng, dim));
    H.require_hermitian();
    const double t = std::uniform_real_distribution<double>(-3.0, 3.0)(rng);
    const CVec psi = random_state(rng, dim);
    const auto got = expm_apply(H, t, QuantumState::pure(space, psi));
    const CVec ref = expm_oracle(H, t) * psi;
    worst_prop = std::max(worst_prop, (got.vector() - ref).norm());
  }
  o.check(worst_prop < 1e-8, std::to_string(kInstances) + " propagator instances, worst deviation from oracle " +
                                 fmt(worst_prop));

  double lowest_order = std::numeric_limits<double>::infinity(), worst_trace = 0.0, worst_neg = 0.0;
  for (std::uint64_t seed = 0; seed < kInstances; ++seed) {
    std::mt19937_64 rng(5000 + seed);
    const int n = 1 + static_cast<int>(seed % 3);
    const auto space = SpaceLabel::qubits(n);
    const auto d = static_cast<Eigen::Index>(space.dimension());
    auto H = OperatorMatrix::from_dense(space, random_hermitian(rng, d));
    H.require_hermitian();
    NoiseModel noise;
    std::uniform_real_distribution<double> rate(0.2, 1.0);
    for (int j = 0; j < 2; ++j)
      noise.channels.push_back({OperatorMatrix::from_dense(space, random_matrix(rng, d) / std::sqrt(2.0 * d)), rate(rng)});
    const auto rho = QuantumState::density(space, random_density(rng, d));
    LindbladOptions opt;
    opt.error_limit = 1.0;
    opt.extrapolate = false;
    const auto a = evolve_lindblad(H, noise, 1.0, rho, 0.125, opt);
    const auto b = evolve_lindblad(H, noise, 1.0, rho, 0.0625, opt);
    const auto c = evolve_lindblad(H, noise, 1.0, rho, 0.03125, opt);
    const double order =
        std::log2(trace_distance(a.state.matrix(), b.state.matrix()) / trace_distance(b.state.matrix(), c.state.matrix()));
    lowest_order = std::min(lowest_order, order);
    for (const auto* r : {&a, &b, &c}) {
      worst_trace = std::max(worst_trace, std::abs(r->trace_deficit));
      worst_neg = std::max(worst_neg, -r->min_eigenvalue);
    }
  }
  o.check(lowest_order >= 3.5, std::to_string(kInstances) + " Lindblad instances, lowest observed order " +
                                   fmt(lowest_order) + " (fourth-order scheme)");
  o.check(worst_trace < 1e-7, "largest trace deficit " + fmt(worst_trace));
  o.check(worst_neg < 1e-7, "most negative eigenvalue " + fmt(-worst_neg));
  return o;
}

struct Criterion {
  int id;
  std::string name;
  double limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  double sweep_time = 0.0;
  const std::vector<Criterion> all{
      {1, "gate exactness", 1.0, criterion_gate},
      {2, "ideal fabrication exactness", 10.0, criterion_ideal_fabrication},
      {3, "detuning scaling", 600.0, [&] { return criterion_detuning(sweep_time); }},
      {4, "full-model cross-check", 30.0, criterion_full_model},
      {5, "MBQC demos", 10.0, criterion_mbqc},
      {6, "recycling equivalence", 60.0, criterion_recycling},
      {7, "resource fixtures", 1.0, criterion_resources},
      {8, "numerical hygiene", 120.0, criterion_hygiene},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  bool all_pass = true;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.check(false, std::string("threw: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.check(secs < c.limit_s, "runtime " + fmt(secs) + " s (limit " + fmt(c.limit_s) + " s)");
    all_pass = all_pass && out.pass;
    std::printf("%s criterion %d (%s) %.3f s\n", out.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), secs);
    for (const auto& n : out.notes) std::printf("    %s\n", n.c_str());
    std::fflush(stdout);
  }
  return all_pass ? 0 : 1;
}
