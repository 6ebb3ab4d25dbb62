#include "ccsim/cluster_fab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "ccsim/cavity_model.hpp"
#include "ccsim/dynamics.hpp"

namespace ccsim {

std::vector<int> Graph::neighbours(int v) const {
  std::vector<int> out;
  for (const auto& [a, b] : edges) {
    if (a == v) out.push_back(b);
    if (b == v) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void Graph::toggle(int a, int b) {
  if (a == b) throw ShapeError("graph self loop");
  auto e = std::minmax(a, b);
  auto it = std::find(edges.begin(), edges.end(), std::pair<int, int>(e.first, e.second));
  if (it != edges.end()) edges.erase(it);
  else edges.emplace_back(e.first, e.second);
}

void Graph::validate() const {
  if (n < 1) throw ShapeError("graph needs at least one vertex");
  std::set<std::pair<int, int>> seen;
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n || a == b) throw ShapeError("graph edge out of range");
    if (!seen.insert(std::minmax(a, b)).second) throw ShapeError("repeated graph edge");
  }
}

Graph Graph::box() { return {4, {{0, 1}, {2, 3}, {0, 2}, {1, 3}}}; }

Graph Graph::path(int n) {
  Graph g{n, {}};
  for (int i = 0; i + 1 < n; ++i) g.edges.emplace_back(i, i + 1);
  return g;
}

CVec graph_state(const Graph& g) {
  g.validate();
  if (g.n > 24) throw DomainError("graph state too large for a dense vector");
  const std::size_t dim = std::size_t{1} << g.n;
  const double amp = std::pow(2.0, -0.5 * g.n);
  CVec v(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) {
    int parity = 0;
    for (auto [a, b] : g.edges) parity ^= static_cast<int>((i >> (g.n - 1 - a)) & (i >> (g.n - 1 - b)) & 1U);
    v(static_cast<Eigen::Index>(i)) = parity ? -amp : amp;
  }
  return v;
}

std::size_t GateSchedule::chain_count() const {
  std::size_t n = 0;
  for (const auto& s : steps) n += s.chains.size();
  return n;
}

GateSchedule edge_schedule(const LatticeLayout& layout, double A) {
  const auto chains = layout.chains();
  if (chains.empty()) throw ShapeError("layout hosts no logical edge");
  GateSchedule sch;
  const double t0 = transfer_time(A);
  for (const char* label : {"H-even", "H-odd", "V-even", "V-odd"}) sch.steps.push_back({label, {}, t0, std::nullopt});
  for (const auto& ch : chains) {
    const auto [r, c] = layout.coords(ch.a);
    const int cls = ch.horizontal ? (c / 2) % 2 : 2 + (r / 2) % 2;
    sch.steps[static_cast<std::size_t>(cls)].chains.push_back(ch);
  }
  validate_schedule(layout, sch);
  return sch;
}

void add_echo(GateSchedule& schedule, int segments) {
  if (segments <= 0 || segments % 2) throw DomainError("echo needs a positive even number of segments");
  for (auto& step : schedule.steps) {
    EchoSchedule e{segments, {}};
    for (std::size_t k = 1; k < step.chains.size(); k += 2)
      for (int s : {step.chains[k].a, step.chains[k].mediator, step.chains[k].b}) e.targets.push_back(s);
    step.echo = e;
  }
}

void validate_schedule(const LatticeLayout& layout, const GateSchedule& schedule) {
  std::set<std::pair<int, int>> edges;
  for (const auto& step : schedule.steps) {
    if (!(step.duration >= 0.0) || !std::isfinite(step.duration)) throw DomainError("step duration must be finite");
    std::set<int> used;
    for (const auto& ch : step.chains) {
      for (int s : {ch.a, ch.mediator, ch.b}) {
        if (s < 0 || s >= layout.size()) throw ShapeError("chain site outside the layout");
        if (!used.insert(s).second) throw ShapeError("chains overlap within step " + step.label);
      }
      if (layout.role(ch.a) != Role::Logical || layout.role(ch.b) != Role::Logical ||
          layout.role(ch.mediator) != Role::Mediator)
        throw ShapeError("chain roles must be logical-mediator-logical");
      if (!edges.insert(std::minmax(ch.a, ch.b)).second) throw ShapeError("logical edge scheduled twice");
    }
  }
}

QuantumState initialize_plus(const LatticeLayout& layout) {
  const auto space = SpaceLabel::qubits(layout.size());
  CVec plus(2), zero(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  zero << 1.0, 0.0;
  std::vector<CVec> locals;
  for (int s = 0; s < layout.size(); ++s) locals.push_back(layout.role(s) == Role::Logical ? plus : zero);
  return QuantumState::product(space, locals);
}

namespace {

constexpr std::size_t kMaxMixedDim = std::size_t{1} << 11;

// One weighted outcome branch of the fabrication; unnormalized.
struct Arm {
  ByproductFrame frame;
  bool pure = true;
  CVec psi;
  CMat rho;

  double weight() const { return pure ? psi.squaredNorm() : rho.trace().real(); }
  void to_density() {
    if (!pure) return;
    if (static_cast<std::size_t>(psi.size()) > kMaxMixedDim)
      throw DomainError("mixed-state fabrication is limited to 11 sites");
    rho = psi * psi.adjoint();
    psi.resize(0);
    pure = false;
  }
  void apply(const SpaceLabel& space, int site, const CMat& op) {
    if (pure) psi = apply_local(space, site, op, psi);
    else rho = apply_local(space, site, op, rho);
  }
};

std::string frame_key(const ByproductFrame& f) {
  std::string k;
  for (int i = 0; i < f.size(); ++i) {
    k += f.x(i) ? '1' : '0';
    k += f.z(i) ? '1' : '0';
  }
  return k;
}

void update_frame(ByproductFrame& f, int pa, int pb, int outcome) {
  f.cz_positions(pa, pb);
  if (outcome == 0) {
    f.add_z_at(pa);
    f.add_z_at(pb);
  }
  f.swap_positions(pa, pb);
}

CMat proj(int outcome) {
  CMat p = CMat::Zero(2, 2);
  p(outcome, outcome) = 1.0;
  return p;
}

CMat lower() { return sigma_minus().to_dense(); }

// Generator of one step plus its (lazily built) propagators.
struct StepEngine {
  SpaceLabel space;
  OperatorMatrix H;
  NoiseModel noise;
  double segment = 0.0;
  int segments = 1;
  CVec signs;  // product of Z pulses, empty for none
  double dt = 0.0;
  double error_limit = 1e-6;
  SparseRows Hs;
  std::optional<LindbladEvolver> evolver;
  double max_err = 0.0;

  StepEngine(SpaceLabel sp, OperatorMatrix h, NoiseModel nz, double duration, const std::optional<EchoSchedule>& echo,
             double dt_, double limit)
      : space(std::move(sp)), H(std::move(h)), noise(std::move(nz)), error_limit(limit) {
    segments = echo ? echo->segments : 1;
    segment = duration / segments;
    dt = dt_ > 0.0 ? std::min(dt_, segment) : segment / 2;
    if (echo && !echo->targets.empty()) {
      signs = CVec::Ones(static_cast<Eigen::Index>(space.dimension()));
      for (int t : echo->targets) {
        const auto st = space.stride(t);
        for (std::size_t i = 0; i < space.dimension(); ++i)
          if ((i / st) % 2) signs(static_cast<Eigen::Index>(i)) *= -1.0;
      }
    }
    Hs = H.to_sparse();
  }

  void evolve(Arm& b) {
    if (segment == 0.0) return;
    if (!noise.empty()) b.to_density();
    for (int k = 0; k < segments; ++k) {
      if (b.pure) {
        b.psi = expm_apply_vector(Hs, segment, b.psi);
      } else {
        for (int tries = 0;; ++tries) {
          if (!evolver) {
            LindbladOptions lo;
            lo.error_limit = error_limit;
            evolver.emplace(H, noise, segment, dt, lo);
          }
          try {
            b.rho = evolver->apply(b.rho, &max_err);
            break;
          } catch (const StepSizeError&) {
            if (tries >= 8) throw;
            dt /= 2;
            evolver.reset();
          }
        }
      }
      if (signs.size()) {
        if (b.pure) b.psi = b.psi.cwiseProduct(signs);
        else b.rho = (b.rho.array() * (signs * signs.transpose()).array()).matrix();
      }
    }
  }
};

OperatorMatrix step_hamiltonian(const LatticeLayout& layout, const SpaceLabel& space, const std::vector<Chain>& active,
                                const FabricationOptions& o, bool idle) {
  if (o.decoupling == Decoupling::Ideal) {
    std::vector<std::pair<int, int>> edges;
    for (const auto& ch : active) {
      edges.emplace_back(ch.a, ch.mediator);
      edges.emplace_back(ch.mediator, ch.b);
    }
    return build_effective_xy(space, edges, o.A, {});
  }
  std::set<int> on;
  if (!idle)
    for (const auto& ch : active) on.insert({ch.a, ch.mediator, ch.b});
  DetuningProfile det;
  for (int s = 0; s < layout.size(); ++s) {
    double d = layout.detuning().at(s) * o.A;
    if (layout.role(s) != Role::Logical && !on.count(s)) d += o.delta_off * o.A;
    if (d != 0.0) det.set(s, d);
  }
  return build_effective_xy(space, layout.grid_edges(), o.A, det);
}

}  // namespace

FabricationRecord run_fabrication(const LatticeLayout& layout, const GateSchedule& schedule,
                                  const FabricationOptions& o) {
  validate_schedule(layout, schedule);
  if (!(o.A > 0.0) || !std::isfinite(o.A)) throw DomainError("hopping A must be positive");
  if (o.decoupling == Decoupling::Realistic && !(o.delta_off > 0.0 && std::isfinite(o.delta_off)))
    throw DomainError("realistic mode needs a finite positive off-resonance detuning");
  if (!(o.decay >= 0.0) || !(o.idle_time >= 0.0)) throw DomainError("decay rate and idle time must be non-negative");
  if (o.outcomes == OutcomeMode::Forced && o.forced.size() != schedule.chain_count())
    throw ShapeError("forced outcomes must list one value per scheduled chain");
  for (int v : o.forced)
    if (v != 0 && v != 1) throw DomainError("forced outcomes must be 0 or 1");

  const auto space = SpaceLabel::qubits(layout.size());
  const auto logical = layout.logical_sites();
  const int n = static_cast<int>(logical.size());
  std::map<int, int> position_of;
  for (int i = 0; i < n; ++i) position_of[logical[static_cast<std::size_t>(i)]] = i;
  const NoiseModel noise = o.decay > 0.0 ? NoiseModel::polariton_decay(space, [&] {
    std::vector<int> all(static_cast<std::size_t>(layout.size()));
    for (int s = 0; s < layout.size(); ++s) all[static_cast<std::size_t>(s)] = s;
    return all;
  }(), o.decay * o.A) : NoiseModel{};

  FabricationRecord rec;
  rec.graph.n = n;
  rec.postselected = o.policy == MediatorPolicy::PostSelectZero;
  ByproductFrame nominal(n);
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const bool single = o.outcomes != OutcomeMode::Average;

  std::vector<Arm> branches(1);
  branches[0].frame = ByproductFrame(n);
  branches[0].psi = initialize_plus(layout).vector();
  CMat hadamard(2, 2);
  hadamard << 1, 1, 1, -1;
  hadamard /= std::sqrt(2.0);

  // Splits every branch on the Z outcome of `site`; `fn(outcome, branch)`
  // finishes each child (frame update, reset).
  auto split = [&](int site, const std::vector<int>& allowed, bool sample, auto&& fn) {
    std::vector<Arm> next;
    for (auto& b : branches) {
      std::vector<int> outs = allowed;
      if (sample) {
        Arm b0 = b;
        b0.apply(space, site, proj(0));
        const double p0 = b0.weight() / b.weight();
        outs = {uni(rng) < p0 ? 0 : 1};
      }
      for (int out : outs) {
        Arm c = b;
        c.apply(space, site, proj(out));
        if (c.weight() < kImpossibleBranch) continue;
        fn(out, c);
        next.push_back(std::move(c));
      }
    }
    if (next.empty())
      throw ImpossibleBranchError("no surviving branch after measuring site " + std::to_string(site));
    branches = std::move(next);
  };

  auto merge = [&] {
    std::map<std::string, Arm> by_key;
    for (auto& b : branches) {
      auto key = frame_key(b.frame);
      auto it = by_key.find(key);
      if (it == by_key.end()) {
        by_key.emplace(key, std::move(b));
        continue;
      }
      it->second.to_density();
      b.to_density();
      it->second.rho += b.rho;
    }
    branches.clear();
    for (auto& [k, b] : by_key) branches.push_back(std::move(b));
  };

  std::size_t chain_index = 0;
  double max_err = 0.0;
  for (const auto& step : schedule.steps) {
    if (step.chains.empty()) continue;
    // Mediators start each gate from the reset state |0>, rotated for Plus.
    if (o.prep == MediatorPrep::Plus)
      for (auto& b : branches)
        for (const auto& ch : step.chains) b.apply(space, ch.mediator, hadamard);
    StepEngine eng(space, step_hamiltonian(layout, space, step.chains, o, false), noise, step.duration, step.echo, o.dt, o.error_limit);
    for (auto& b : branches) eng.evolve(b);
    max_err = std::max(max_err, eng.max_err);

    std::map<int, std::pair<const Chain*, std::size_t>> active;
    for (const auto& ch : step.chains) active[ch.mediator] = {&ch, chain_index++};
    for (const auto& ch : step.chains) {
      const int pa = position_of.at(ch.a), pb = position_of.at(ch.b);
      rec.graph.toggle(nominal.logical_at(pa), nominal.logical_at(pb));
    }

    for (int s = 0; s < layout.size(); ++s) {
      if (layout.role(s) == Role::Logical) continue;
      auto it = active.find(s);
      if (it != active.end()) {
        const Chain& ch = *it->second.first;
        const int pa = position_of.at(ch.a), pb = position_of.at(ch.b);
        std::vector<int> allowed{0, 1};
        if (o.policy == MediatorPolicy::PostSelectZero) allowed = {0};
        if (o.outcomes == OutcomeMode::Forced) allowed = {o.forced[it->second.second]};
        const bool sample = o.outcomes == OutcomeMode::Sample && o.policy == MediatorPolicy::MeasureAndReset;
        split(s, allowed, sample, [&](int out, Arm& c) {
          update_frame(c.frame, pa, pb, o.frame_correction ? out : 0);
          if (out == 1) c.apply(space, s, lower());
          if (single) rec.outcomes[s] = out;
        });
        continue;
      }
      // Not part of a gate this step: any excitation here is leakage.
      if (o.policy == MediatorPolicy::PostSelectZero) {
        split(s, {0}, false, [](int, Arm&) {});
      } else if (o.outcomes == OutcomeMode::Sample) {
        split(s, {0, 1}, true, [&](int out, Arm& c) {
          if (out == 1) c.apply(space, s, lower());
        });
      } else {
        for (auto& b : branches) {
          Arm up = b;
          up.apply(space, s, proj(1));
          if (up.weight() < kImpossibleBranch) {
            b.apply(space, s, proj(0));
            continue;
          }
          b.to_density();
          b.rho = reset_qubit(space, b.rho, s);
        }
      }
    }
    for (const auto& ch : step.chains) update_frame(nominal, position_of.at(ch.a), position_of.at(ch.b), 0);
    if (!single) merge();

    if (o.idle_time > 0.0) {
      StepEngine idle(space, step_hamiltonian(layout, space, {}, o, true), noise, o.idle_time, std::nullopt, o.dt, o.error_limit);
      for (auto& b : branches) idle.evolve(b);
      max_err = std::max(max_err, idle.max_err);
    }
  }

  CMat corrected = CMat::Zero(std::int64_t{1} << n, std::int64_t{1} << n);
  CMat raw = corrected;
  double total = 0.0;
  for (const auto& b : branches) {
    total += b.weight();
    const auto& fr = o.frame_correction ? b.frame : nominal;
    if (b.pure) {
      const auto c = QuantumState::pure(space, fr.correct(space, logical, b.psi) / b.psi.norm());
      const auto r = QuantumState::pure(space, b.psi / b.psi.norm());
      corrected += b.weight() * partial_trace(c, logical).matrix();
      raw += b.weight() * partial_trace(r, logical).matrix();
    } else {
      const double w = b.weight();
      const auto c = QuantumState::density(space, fr.correct(space, logical, b.rho) / w, 1.0, false);
      const auto r = QuantumState::density(space, b.rho / w, 1.0, false);
      corrected += w * partial_trace(c, logical).matrix();
      raw += w * partial_trace(r, logical).matrix();
    }
  }
  corrected /= total;
  raw /= total;
  corrected = 0.5 * (corrected + corrected.adjoint()).eval();
  raw = 0.5 * (raw + raw.adjoint()).eval();
  if (min_eigenvalue(corrected) < -1e-7) throw StepSizeError("fabrication lost positivity; reduce the Lindblad step");

  const auto lspace = SpaceLabel::qubits(n);
  rec.state = QuantumState::density(lspace, corrected, 1.0, false);
  rec.raw_state = QuantumState::density(lspace, raw, 1.0, false);
  rec.frame = branches.size() == 1 ? branches[0].frame : nominal;
  rec.probability = total;
  rec.branches = branches.size();
  rec.max_local_error = max_err;
  rec.fidelity = std::clamp(fidelity_with_pure(rec.state, graph_state(rec.graph)), 0.0, 1.0);
  return rec;
}

nlohmann::json record_to_json(const FabricationRecord& r) {
  nlohmann::json outcomes = nlohmann::json::object();
  for (auto [s, v] : r.outcomes) outcomes[std::to_string(s)] = v;
  nlohmann::json edges = nlohmann::json::array();
  for (auto [a, b] : r.graph.edges) edges.push_back({a, b});
  return {{"fidelity", r.fidelity},
          {"postselected", r.postselected},
          {"probability", r.probability},
          {"branches", r.branches},
          {"outcomes", outcomes},
          {"frame", r.frame.to_json()},
          {"graph", {{"vertices", r.graph.n}, {"edges", edges}}},
          {"max_local_error", r.max_local_error}};
}

namespace {

void check_graph_state(const QuantumState& state, const Graph& graph, const ByproductFrame& frame) {
  graph.validate();
  if (frame.size() != graph.n) throw ShapeError("frame and graph sizes differ");
  if (state.space().size() != static_cast<std::size_t>(graph.n)) throw ShapeError("state and graph sizes differ");
}

std::vector<int> host_sites(const QuantumState& s) {
  std::vector<int> ids;
  for (const auto& site : s.space().sites()) ids.push_back(site.id);
  return ids;
}

}  // namespace

double cluster_fidelity(const QuantumState& state, const Graph& graph, const ByproductFrame& frame) {
  check_graph_state(state, graph, frame);
  const auto sites = host_sites(state);
  if (state.is_pure())
    return fidelity_with_pure(QuantumState::pure(state.space(), frame.correct(state.space(), sites, state.vector())),
                              graph_state(graph));
  const CMat c = frame.correct(state.space(), sites, state.matrix());
  return fidelity_with_pure(QuantumState::density(state.space(), c, state.declared_trace(), false), graph_state(graph)) /
         state.declared_trace();
}

std::vector<double> stabilizer_witness(const QuantumState& state, const Graph& graph, const ByproductFrame& frame) {
  check_graph_state(state, graph, frame);
  const auto& space = state.space();
  const auto sites = host_sites(state);
  const CMat rho = frame.correct(space, sites, state.density_matrix());
  const double tr = rho.trace().real();
  const CMat X = pauli_x().to_dense(), Z = pauli_z().to_dense();
  std::vector<double> out;
  for (int a = 0; a < graph.n; ++a) {
    // K_a rho, column by column (apply_local on a matrix would conjugate).
    CMat k = rho;
    for (Eigen::Index c = 0; c < k.cols(); ++c) {
      CVec col = apply_local(space, sites[static_cast<std::size_t>(a)], X, CVec(k.col(c)));
      for (int b : graph.neighbours(a)) col = apply_local(space, sites[static_cast<std::size_t>(b)], Z, col);
      k.col(c) = col;
    }
    out.push_back(k.trace().real() / tr);
  }
  return out;
}

std::vector<SweepRow> sweep_fidelity(const LatticeLayout& layout, const std::vector<double>& deltas,
                                     const std::vector<double>& rates, const FabricationOptions& base,
                                     int echo_segments, int threads, bool postselect) {
  GateSchedule schedule = edge_schedule(layout, base.A);
  if (echo_segments > 0) add_echo(schedule, echo_segments);
  std::vector<SweepRow> rows;
  const double unset = postselect ? 0.0 : std::numeric_limits<double>::quiet_NaN();
  for (double r : rates)
    for (double d : deltas) rows.push_back({d, 0.0, unset, r, base.seed});
  if (threads <= 0) threads = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
  threads = std::min<int>(threads, static_cast<int>(rows.size()));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto work = [&] {
    for (std::size_t i; (i = next++) < rows.size();) {
      try {
        FabricationOptions o = base;
        o.delta_off = rows[i].delta_over_A;
        o.decay = rows[i].noise_rate;
        o.outcomes = OutcomeMode::Average;
        o.policy = MediatorPolicy::MeasureAndReset;
        rows[i].fidelity_mean = run_fabrication(layout, schedule, o).fidelity;
        if (!postselect) continue;
        o.policy = MediatorPolicy::PostSelectZero;
        rows[i].fidelity_postselected = run_fabrication(layout, schedule, o).fidelity;
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "delta_over_A,fidelity_mean,fidelity_postselected,noise_rate,seed\n";
  out << std::setprecision(12);
  for (const auto& r : rows) {
    out << r.delta_over_A << ',' << r.fidelity_mean << ',';
    if (!std::isnan(r.fidelity_postselected)) out << r.fidelity_postselected;
    out << ',' << r.noise_rate << ',' << r.seed << '\n';
  }
}

nlohmann::json sweep_to_json(const std::vector<SweepRow>& rows) {
  auto out = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row{{"delta_over_A", r.delta_over_A}, {"fidelity_mean", r.fidelity_mean},
                       {"noise_rate", r.noise_rate}, {"seed", r.seed}};
    row["fidelity_postselected"] =
        std::isnan(r.fidelity_postselected) ? nlohmann::json(nullptr) : nlohmann::json(r.fidelity_postselected);
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<double> log_spaced(double lo, double hi, int n) {
  if (n < 1 || !(lo > 0.0) || !(hi >= lo)) throw DomainError("log_spaced: need n >= 1 and 0 < lo <= hi");
  if (n == 1) return {lo};
  std::vector<double> v(n);
  const double step = std::log(hi / lo) / (n - 1);
  for (int i = 0; i < n; ++i) v[i] = lo * std::exp(step * i);
  v.front() = lo;
  v.back() = hi;
  return v;
}

}  // namespace ccsim
