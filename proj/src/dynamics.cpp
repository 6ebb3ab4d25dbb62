#include "ccsim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <utility>

namespace ccsim {

bool NoiseModel::empty() const {
  return std::all_of(channels.begin(), channels.end(), [](const auto& c) { return c.rate == 0.0; });
}

void NoiseModel::validate(const SpaceLabel& space) const {
  for (const auto& c : channels) {
    if (!(c.rate >= 0.0) || !std::isfinite(c.rate)) throw DomainError("collapse rates must be finite and non-negative");
    if (!(c.op.space() == space)) throw ShapeError("collapse operator lives on a different space");
  }
}

NoiseModel NoiseModel::polariton_decay(const SpaceLabel& space, const std::vector<int>& sites, double rate) {
  NoiseModel noise;
  for (int s : sites) noise.channels.push_back({embed(sigma_minus(), s, space), rate});
  noise.validate(space);
  return noise;
}

EvolutionResult evolve_unitary(const OperatorMatrix& H, double t, const QuantumState& psi) {
  if (!psi.is_pure()) throw DomainError("evolve_unitary needs a pure state");
  EvolutionResult r{expm_apply(H, t, psi)};
  r.trace_deficit = 1.0 - r.state.vector().squaredNorm();
  return r;
}

namespace {

// H split into its connected sectors; indices are relabeled so that every
// sector is a contiguous range.
struct SectorPropagator {
  std::vector<std::size_t> perm;  // new index -> old index
  std::vector<std::size_t> inv;   // old index -> new index
  std::vector<Eigen::Index> offset;
  std::vector<Eigen::MatrixXcd> vecs;
  std::vector<Eigen::VectorXd> vals;

  explicit SectorPropagator(const OperatorMatrix& H) {
    const std::size_t n = H.dimension();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto& e : H.entries()) {
      const auto a = find(e.row), b = find(e.col);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    std::vector<std::vector<std::size_t>> groups;
    std::vector<long> group_of(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
      const auto root = find(i);
      if (group_of[root] < 0) {
        group_of[root] = static_cast<long>(groups.size());
        groups.emplace_back();
      }
      groups[static_cast<std::size_t>(group_of[root])].push_back(i);
    }
    inv.assign(n, 0);
    Eigen::Index off = 0;
    for (const auto& g : groups) {
      offset.push_back(off);
      for (auto i : g) {
        inv[i] = perm.size();
        perm.push_back(i);
      }
      off += static_cast<Eigen::Index>(g.size());
    }
    offset.push_back(off);
    std::vector<CMat> blocks;
    for (const auto& g : groups) blocks.push_back(CMat::Zero(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(g.size())));
    for (const auto& e : H.entries()) {
      const auto b = static_cast<std::size_t>(group_of[find(e.row)]);
      blocks[b](static_cast<Eigen::Index>(inv[e.row]) - offset[b], static_cast<Eigen::Index>(inv[e.col]) - offset[b]) = e.value;
    }
    for (auto& blk : blocks) {
      Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (blk + blk.adjoint()));
      vecs.push_back(es.eigenvectors());
      vals.push_back(es.eigenvalues());
    }
  }

  std::size_t sectors() const { return vecs.size(); }

  std::vector<CMat> unitaries(double tau) const {
    std::vector<CMat> out;
    for (std::size_t b = 0; b < sectors(); ++b) {
      CVec ph(vals[b].size());
      for (Eigen::Index k = 0; k < ph.size(); ++k) ph(k) = std::exp(-kI * vals[b](k) * tau);
      out.push_back(vecs[b] * ph.asDiagonal() * vecs[b].adjoint());
    }
    return out;
  }

  CMat to_sector_order(const CMat& m) const {
    const auto n = static_cast<Eigen::Index>(perm.size());
    CMat out(n, n);
    for (Eigen::Index c = 0; c < n; ++c)
      for (Eigen::Index r = 0; r < n; ++r) out(r, c) = m(static_cast<Eigen::Index>(perm[r]), static_cast<Eigen::Index>(perm[c]));
    return out;
  }

  CMat from_sector_order(const CMat& m) const {
    const auto n = static_cast<Eigen::Index>(perm.size());
    CMat out(n, n);
    for (Eigen::Index c = 0; c < n; ++c)
      for (Eigen::Index r = 0; r < n; ++r) out(static_cast<Eigen::Index>(perm[r]), static_cast<Eigen::Index>(perm[c])) = m(r, c);
    return out;
  }

  SparseRows to_sector_order(const OperatorMatrix& op) const {
    std::vector<Eigen::Triplet<cplx>> t;
    for (const auto& e : op.entries()) t.emplace_back(static_cast<int>(inv[e.row]), static_cast<int>(inv[e.col]), e.value);
    SparseRows out(static_cast<Eigen::Index>(perm.size()), static_cast<Eigen::Index>(perm.size()));
    out.setFromTriplets(t.begin(), t.end());
    return out;
  }

  // U rho U^dagger with U block diagonal.
  void conjugate(const std::vector<CMat>& U, CMat& rho) const {
    CMat tmp;
    for (std::size_t b = 0; b < sectors(); ++b) {
      const Eigen::Index o = offset[b], s = offset[b + 1] - offset[b];
      tmp.noalias() = U[b] * rho.middleRows(o, s);
      rho.middleRows(o, s) = tmp;
    }
    for (std::size_t b = 0; b < sectors(); ++b) {
      const Eigen::Index o = offset[b], s = offset[b + 1] - offset[b];
      tmp.noalias() = rho.middleCols(o, s) * U[b].adjoint();
      rho.middleCols(o, s) = tmp;
    }
  }
};

// A jump operator with at most one nonzero per row and column (sigma-,
// projectors, shifted ladders): L rho L^dag is then a scatter of entries.
struct Monomial {
  std::vector<Eigen::Index> src, dst;
  std::vector<cplx> coeff;
};

std::optional<Monomial> as_monomial(const SparseRows& L) {
  Monomial m;
  std::vector<char> col_used(static_cast<std::size_t>(L.cols()), 0);
  for (Eigen::Index r = 0; r < L.outerSize(); ++r) {
    int count = 0;
    for (SparseRows::InnerIterator it(L, r); it; ++it) {
      if (it.value() == cplx(0.0)) continue;
      if (++count > 1 || col_used[static_cast<std::size_t>(it.col())]) return std::nullopt;
      col_used[static_cast<std::size_t>(it.col())] = 1;
      m.src.push_back(it.col());
      m.dst.push_back(r);
      m.coeff.push_back(it.value());
    }
  }
  return m;
}

struct Dissipator {
  std::vector<SparseRows> L;
  std::vector<double> rate;
  SparseRows K;  // sum_j r_j L_j^dag L_j
  // Fast path when every channel is monomial: K is then diagonal.
  std::vector<Monomial> mono;
  Eigen::VectorXd kdiag;

  void finalize() {
    mono.clear();
    for (const auto& l : L) {
      auto m = as_monomial(l);
      if (!m) {
        mono.clear();
        return;
      }
      mono.push_back(std::move(*m));
    }
    kdiag = Eigen::VectorXd::Zero(K.rows());
    for (Eigen::Index r = 0; r < K.outerSize(); ++r)
      for (SparseRows::InnerIterator it(K, r); it; ++it) {
        if (it.col() != r && it.value() != cplx(0.0)) {
          mono.clear();
          return;
        }
        if (it.col() == r) kdiag(r) = it.value().real();
      }
  }

  CMat operator()(const CMat& rho) const {
    if (!L.empty() && mono.size() == L.size()) {
      const Eigen::Index n = rho.rows();
      CMat out(n, n);
      for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) out(i, j) = -0.5 * (kdiag(i) + kdiag(j)) * rho(i, j);
      for (std::size_t c = 0; c < mono.size(); ++c) {
        const auto& m = mono[c];
        const std::size_t k = m.src.size();
        for (std::size_t jj = 0; jj < k; ++jj) {
          const cplx cj = rate[c] * std::conj(m.coeff[jj]);
          const cplx* in = rho.col(m.src[jj]).data();
          cplx* o = out.col(m.dst[jj]).data();
          for (std::size_t ii = 0; ii < k; ++ii) o[m.dst[ii]] += m.coeff[ii] * cj * in[m.src[ii]];
        }
      }
      return out;
    }
    CMat out = K * rho;
    out = -0.5 * (out + out.adjoint()).eval();
    for (std::size_t j = 0; j < L.size(); ++j) {
      const CMat x = L[j] * rho;
      const CMat y = L[j] * x.adjoint();
      out += rate[j] * 0.5 * (y + y.adjoint());
    }
    return out;
  }
};

CMat lawson_step(const SectorPropagator& prop, const std::vector<CMat>& half, const Dissipator& D, const CMat& rho,
                 double h) {
  CMat u = rho;
  prop.conjugate(half, u);
  CMat k1 = D(rho);
  prop.conjugate(half, k1);
  const CMat k2 = D(u + (h / 2) * k1);
  const CMat k3 = D(u + (h / 2) * k2);
  CMat w = u + h * k3;
  prop.conjugate(half, w);
  const CMat k4 = D(w);
  CMat out = u + (h / 6) * (k1 + 2 * k2 + 2 * k3);
  prop.conjugate(half, out);
  out += (h / 6) * k4;
  return 0.5 * (out + out.adjoint());
}

}  // namespace

struct LindbladEvolver::Impl {
  SpaceLabel space;
  double t = 0.0;
  int steps = 1;
  double h = 0.0;
  LindbladOptions options;
  SectorPropagator prop;
  Dissipator D;
  bool closed = true;
  std::vector<CMat> full, half, quarter;

  Impl(const OperatorMatrix& H, const NoiseModel& noise, double t_, double dt, LindbladOptions opts)
      : space(H.space()), t(t_), options(std::move(opts)), prop(H) {
    if (!H.hermitian_flag() && !H.is_hermitian()) throw DomainError("evolve_lindblad: Hamiltonian is not Hermitian");
    noise.validate(H.space());
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("evolve_lindblad: duration must be finite and non-negative");
    if (!(dt > 0.0)) throw DomainError("evolve_lindblad: step must be positive");
    steps = std::max(1, static_cast<int>(std::ceil(t / dt - 1e-12)));
    h = t / steps;
    closed = noise.empty();
    if (closed) {
      full = prop.unitaries(t);
      return;
    }
    const auto n = static_cast<Eigen::Index>(H.dimension());
    D.K = SparseRows(n, n);
    for (const auto& c : noise.channels) {
      if (c.rate == 0.0) continue;
      D.L.push_back(prop.to_sector_order(c.op));
      D.rate.push_back(c.rate);
      D.K += SparseRows(c.rate * (D.L.back().adjoint() * D.L.back()));
    }
    D.finalize();
    half = prop.unitaries(h / 2);
    quarter = prop.unitaries(h / 4);
  }

  // Evolves rho (already in sector order) in place; `on_checkpoint(time)` is
  // called where positivity should be checked.
  template <class F>
  void run(CMat& rho, double& max_err, F&& on_checkpoint) const {
    if (t == 0.0) {
      on_checkpoint(0.0);
      return;
    }
    if (closed) {
      prop.conjugate(full, rho);
      on_checkpoint(t);
      return;
    }
    const int every = std::max(1, steps / std::max(1, options.checkpoints));
    for (int s = 0; s < steps; ++s) {
      // One step of h against two of h/2; their difference is the embedded
      // error estimate and the extrapolated combination is kept.
      const CMat coarse = lawson_step(prop, half, D, rho, h);
      const CMat mid = lawson_step(prop, quarter, D, rho, h / 2);
      CMat fine = lawson_step(prop, quarter, D, mid, h / 2);
      const CMat diff = (fine - coarse) / 15.0;
      const double err = diff.cwiseAbs().maxCoeff();
      max_err = std::max(max_err, err);
      if (err > options.error_limit)
        throw StepSizeError("evolve_lindblad: local error estimate " + std::to_string(err) + " exceeds " +
                            std::to_string(options.error_limit) + " at step size " + std::to_string(h));
      if (options.extrapolate) fine += diff;
      rho = std::move(fine);
      const bool last = s + 1 == steps;
      if (last || (options.checkpoints > 0 && (s + 1) % every == 0)) on_checkpoint((s + 1) * h);
    }
  }
};

LindbladEvolver::LindbladEvolver(const OperatorMatrix& H, const NoiseModel& noise, double t, double dt,
                                 LindbladOptions options)
    : impl_(std::make_unique<Impl>(H, noise, t, dt, std::move(options))) {}
LindbladEvolver::~LindbladEvolver() = default;
LindbladEvolver::LindbladEvolver(LindbladEvolver&&) noexcept = default;
LindbladEvolver& LindbladEvolver::operator=(LindbladEvolver&&) noexcept = default;

CMat LindbladEvolver::apply(const CMat& rho_in, double* max_local_error) const {
  const auto& I = *impl_;
  CMat rho = I.prop.to_sector_order(rho_in);
  double err = 0.0;
  I.run(rho, err, [](double) {});
  if (max_local_error) *max_local_error = std::max(*max_local_error, err);
  return I.prop.from_sector_order(rho);
}

EvolutionResult LindbladEvolver::operator()(const QuantumState& rho_in) const {
  const auto& I = *impl_;
  const auto& options = I.options;
  if (!(I.space == rho_in.space())) throw ShapeError("evolve_lindblad: Hamiltonian and state spaces differ");
  const QuantumState rho0 = rho_in.as_density();
  if (I.t == 0.0) return {rho0, 0.0, 0.0, min_eigenvalue(rho0.matrix())};

  CMat rho = I.prop.to_sector_order(rho0.matrix());
  CVec ref;
  if (options.reference) {
    if (options.reference->size() != rho.rows()) throw ShapeError("reference state dimension mismatch");
    ref.resize(rho.rows());
    for (Eigen::Index i = 0; i < ref.size(); ++i) ref(i) = (*options.reference)(static_cast<Eigen::Index>(I.prop.perm[i]));
    ref /= ref.norm();
  }

  EvolutionResult result{rho0};
  auto checkpoint = [&](double time, bool eig) {
    double lo = std::numeric_limits<double>::quiet_NaN();
    if (eig) {
      lo = min_eigenvalue(rho);
      result.min_eigenvalue = std::min(result.min_eigenvalue, lo);
    }
    if (options.diagnostics && options.reference) {
      const double fid = (ref.adjoint() * rho * ref)(0, 0).real();
      *options.diagnostics << time << ',' << rho.trace().real() << ',' << lo << ',' << fid << '\n';
    }
  };
  if (!I.closed && options.diagnostics && options.reference) checkpoint(0.0, false);
  I.run(rho, result.max_local_error, [&](double time) { checkpoint(time, true); });
  if (result.min_eigenvalue < -kPsdTol * 1e3)
    throw StepSizeError("evolve_lindblad: positivity lost (min eigenvalue " + std::to_string(result.min_eigenvalue) + ")");

  const CMat out = I.prop.from_sector_order(rho);
  const double tr = out.trace().real();
  result.trace_deficit = rho0.declared_trace() - tr;
  result.state = QuantumState::density(rho0.space(), out, tr, false);
  return result;
}

EvolutionResult evolve_lindblad(const OperatorMatrix& H, const NoiseModel& noise, double t, const QuantumState& rho_in,
                                double dt, const LindbladOptions& options) {
  if (!(H.space() == rho_in.space())) throw ShapeError("evolve_lindblad: Hamiltonian and state spaces differ");
  return LindbladEvolver(H, noise, t, dt, options)(rho_in);
}

CVec MeasurementBasis::vector(int outcome) const {
  if (outcome != 0 && outcome != 1) throw DomainError("measurement outcome must be 0 or 1");
  CVec v(2);
  if (computational) {
    v << (outcome == 0 ? 1.0 : 0.0), (outcome == 0 ? 0.0 : 1.0);
    return v;
  }
  const double s = outcome == 0 ? 1.0 : -1.0;
  switch (plane) {
    case Plane::XY:
      v << 1.0 / std::sqrt(2.0), s * std::exp(kI * theta) / std::sqrt(2.0);
      break;
    case Plane::XZ:
      if (outcome == 0) v << std::cos(theta / 2), std::sin(theta / 2);
      else v << -std::sin(theta / 2), std::cos(theta / 2);
      break;
    case Plane::YZ:
      if (outcome == 0) v << std::cos(theta / 2), kI * std::sin(theta / 2);
      else v << kI * std::sin(theta / 2), std::cos(theta / 2);
      break;
  }
  return v;
}

namespace {

CMat projector(const MeasurementBasis& basis, int outcome) {
  const CVec v = basis.vector(outcome);
  return v * v.adjoint();
}

void require_qubit(const SpaceLabel& space, int site) {
  if (space.local_dim(site) != 2) throw ShapeError("site " + std::to_string(site) + " is not a qubit");
}

}  // namespace

CMat project_qubit(const SpaceLabel& space, const CMat& rho, int site, const MeasurementBasis& basis, int outcome) {
  require_qubit(space, site);
  return apply_local(space, site, projector(basis, outcome), rho);
}

CVec project_qubit(const SpaceLabel& space, const CVec& psi, int site, const MeasurementBasis& basis, int outcome) {
  require_qubit(space, site);
  return apply_local(space, site, projector(basis, outcome), psi);
}

MeasurementResult measure_qubit(const QuantumState& state, int site, const MeasurementBasis& basis,
                                std::optional<int> forced, std::mt19937_64* rng) {
  const auto& space = state.space();
  require_qubit(space, site);
  const double total = state.is_pure() ? 1.0 : state.matrix().trace().real();
  auto weight = [&](int outcome) {
    if (state.is_pure()) return project_qubit(space, state.vector(), site, basis, outcome).squaredNorm();
    return project_qubit(space, state.matrix(), site, basis, outcome).trace().real();
  };
  const double p0 = std::clamp(weight(0) / total, 0.0, 1.0);
  int outcome;
  if (forced) {
    outcome = *forced;
    if (outcome != 0 && outcome != 1) throw DomainError("forced outcome must be 0 or 1");
  } else {
    std::mt19937_64 fallback(0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    outcome = u(rng ? *rng : fallback) < p0 ? 0 : 1;
  }
  const double p = outcome == 0 ? p0 : 1.0 - p0;
  if (p < kImpossibleBranch)
    throw ImpossibleBranchError("outcome " + std::to_string(outcome) + " on site " + std::to_string(site) +
                                " has probability " + std::to_string(p));
  if (state.is_pure()) {
    CVec v = project_qubit(space, state.vector(), site, basis, outcome);
    return {outcome, QuantumState::pure(space, v / v.norm()), p};
  }
  CMat m = project_qubit(space, state.matrix(), site, basis, outcome);
  m /= m.trace().real();
  return {outcome, QuantumState::density(space, m, 1.0, false), p};
}

CMat reset_qubit(const SpaceLabel& space, const CMat& rho, int site) {
  require_qubit(space, site);
  CMat p0 = CMat::Zero(2, 2);
  p0(0, 0) = 1.0;
  return apply_local(space, site, p0, rho) + apply_local(space, site, sigma_minus().to_dense(), rho);
}

}  // namespace ccsim
