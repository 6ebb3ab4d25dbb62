#include <algorithm>
#include <cmath>
#include <string>

#include "ccsim/numkernel.hpp"

namespace ccsim {

namespace {

// Index groups along which a local operator acts: group k lists the d full
// indices that differ only in the addressed site(s), in local order.
struct Groups {
  Eigen::Index d = 0;
  std::vector<Eigen::Index> idx;  // groups laid out back to back
};

Groups pair_groups(const SpaceLabel& space, int site_a, int site_b, const CMat& op) {
  if (site_a == site_b) throw ShapeError("two-site operation needs distinct sites");
  const auto da = static_cast<Eigen::Index>(space.local_dim(site_a));
  const auto db = static_cast<Eigen::Index>(space.local_dim(site_b));
  if (op.rows() != da * db || op.cols() != da * db) throw ShapeError("two-site matrix has wrong dimension");
  const auto sa = static_cast<Eigen::Index>(space.stride(site_a));
  const auto sb = static_cast<Eigen::Index>(space.stride(site_b));
  const auto n = static_cast<Eigen::Index>(space.dimension());
  Groups g{da * db, {}};
  g.idx.reserve(space.dimension());
  for (Eigen::Index base = 0; base < n; ++base) {
    if ((base / sa) % da != 0 || (base / sb) % db != 0) continue;
    for (Eigen::Index a = 0; a < da; ++a)
      for (Eigen::Index b = 0; b < db; ++b) g.idx.push_back(base + a * sa + b * sb);
  }
  return g;
}

template <int D>
void left_apply_fixed(const Groups& g, const CMat& op, const CMat& m, CMat& out) {
  const Eigen::Matrix<cplx, D, D> o = op;
  const std::size_t ng = g.idx.size() / D;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const cplx* src = m.col(c).data();
    cplx* dst = out.col(c).data();
    for (std::size_t k = 0; k < ng; ++k) {
      const Eigen::Index* ix = &g.idx[k * D];
      Eigen::Matrix<cplx, D, 1> v;
      for (int b = 0; b < D; ++b) v(b) = src[ix[b]];
      const Eigen::Matrix<cplx, D, 1> w = o * v;
      for (int a = 0; a < D; ++a) dst[ix[a]] = w(a);
    }
  }
}

// op applied to the row index of m.
CMat left_apply(const Groups& g, const CMat& op, const CMat& m) {
  CMat out(m.rows(), m.cols());
  if (g.d == 2) {
    left_apply_fixed<2>(g, op, m, out);
    return out;
  }
  if (g.d == 4) {
    left_apply_fixed<4>(g, op, m, out);
    return out;
  }
  CVec v(g.d);
  const std::size_t ng = g.idx.size() / static_cast<std::size_t>(g.d);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const cplx* src = m.col(c).data();
    cplx* dst = out.col(c).data();
    for (std::size_t k = 0; k < ng; ++k) {
      const Eigen::Index* ix = &g.idx[k * static_cast<std::size_t>(g.d)];
      for (Eigen::Index b = 0; b < g.d; ++b) v(b) = src[ix[b]];
      const CVec w = op * v;
      for (Eigen::Index a = 0; a < g.d; ++a) dst[ix[a]] = w(a);
    }
  }
  return out;
}

// m * op^dagger, whole columns at a time.
CMat right_apply_adjoint(const Groups& g, const CMat& op, const CMat& m) {
  CMat out(m.rows(), m.cols());
  const std::size_t ng = g.idx.size() / static_cast<std::size_t>(g.d);
  for (std::size_t k = 0; k < ng; ++k) {
    const Eigen::Index* ix = &g.idx[k * static_cast<std::size_t>(g.d)];
    for (Eigen::Index a = 0; a < g.d; ++a) {
      auto col = out.col(ix[a]);
      col.setZero();
      for (Eigen::Index b = 0; b < g.d; ++b)
        if (op(a, b) != cplx(0.0)) col += std::conj(op(a, b)) * m.col(ix[b]);
    }
  }
  return out;
}

// Single-site action: the rows (columns) addressed by local value a form
// stripes of `inner` consecutive indices, so whole stripes are combined.
struct Stripes {
  Eigen::Index d = 0, inner = 0, outer = 0;
};

Stripes stripes(const SpaceLabel& space, int site, const CMat& op) {
  const auto d = static_cast<Eigen::Index>(space.local_dim(site));
  if (op.rows() != d || op.cols() != d) throw ShapeError("local matrix does not match site " + std::to_string(site));
  const auto inner = static_cast<Eigen::Index>(space.stride(site));
  return {d, inner, static_cast<Eigen::Index>(space.dimension()) / (inner * d)};
}

CMat stripe_left(const Stripes& st, const CMat& op, const CMat& m) {
  CMat out = CMat::Zero(m.rows(), m.cols());
  for (Eigen::Index o = 0; o < st.outer; ++o)
    for (Eigen::Index a = 0; a < st.d; ++a) {
      auto dst = out.middleRows((o * st.d + a) * st.inner, st.inner);
      for (Eigen::Index b = 0; b < st.d; ++b)
        if (op(a, b) != cplx(0.0)) dst += op(a, b) * m.middleRows((o * st.d + b) * st.inner, st.inner);
    }
  return out;
}

CMat stripe_right_adjoint(const Stripes& st, const CMat& op, const CMat& m) {
  CMat out = CMat::Zero(m.rows(), m.cols());
  for (Eigen::Index o = 0; o < st.outer; ++o)
    for (Eigen::Index a = 0; a < st.d; ++a) {
      auto dst = out.middleCols((o * st.d + a) * st.inner, st.inner);
      for (Eigen::Index b = 0; b < st.d; ++b)
        if (op(a, b) != cplx(0.0)) dst += std::conj(op(a, b)) * m.middleCols((o * st.d + b) * st.inner, st.inner);
    }
  return out;
}

void require_length(const SpaceLabel& space, Eigen::Index rows) {
  if (static_cast<std::size_t>(rows) != space.dimension()) throw ShapeError("state dimension does not match space");
}

}  // namespace

CVec apply_local(const SpaceLabel& space, int site, const CMat& op, const CVec& psi) {
  require_length(space, psi.size());
  return stripe_left(stripes(space, site, op), op, psi);
}

CMat apply_local(const SpaceLabel& space, int site, const CMat& op, const CMat& rho) {
  require_length(space, rho.rows());
  const Stripes st = stripes(space, site, op);
  return stripe_right_adjoint(st, op, stripe_left(st, op, rho));
}

CVec apply_two_site(const SpaceLabel& space, int site_a, int site_b, const CMat& op, const CVec& psi) {
  require_length(space, psi.size());
  return left_apply(pair_groups(space, site_a, site_b, op), op, psi);
}

CMat apply_two_site(const SpaceLabel& space, int site_a, int site_b, const CMat& op, const CMat& rho) {
  require_length(space, rho.rows());
  const Groups g = pair_groups(space, site_a, site_b, op);
  return right_apply_adjoint(g, op, left_apply(g, op, rho));
}

QuantumState apply_local(const QuantumState& state, int site, const CMat& op) {
  if (state.is_pure()) {
    CVec v = apply_local(state.space(), site, op, state.vector());
    return QuantumState::pure(state.space(), v / v.norm());
  }
  CMat rho = apply_local(state.space(), site, op, state.matrix());
  return QuantumState::density(state.space(), rho, rho.trace().real(), false);
}

QuantumState apply_two_site(const QuantumState& state, int site_a, int site_b, const CMat& op) {
  if (state.is_pure()) {
    CVec v = apply_two_site(state.space(), site_a, site_b, op, state.vector());
    return QuantumState::pure(state.space(), v / v.norm());
  }
  CMat rho = apply_two_site(state.space(), site_a, site_b, op, state.matrix());
  return QuantumState::density(state.space(), rho, rho.trace().real(), false);
}

QuantumState partial_trace(const QuantumState& state, std::span<const int> keep) {
  const SpaceLabel& space = state.space();
  std::vector<SiteSpec> kept;
  for (int id : keep) {
    if (!space.contains(id)) throw ShapeError("partial trace: unknown site id " + std::to_string(id));
    if (std::any_of(kept.begin(), kept.end(), [id](const SiteSpec& s) { return s.id == id; }))
      throw ShapeError("partial trace: repeated site id " + std::to_string(id));
    kept.push_back({id, space.local_dim(id)});
  }
  SpaceLabel reduced(kept);
  std::vector<int> traced;
  for (const auto& s : space.sites())
    if (!reduced.contains(s.id)) traced.push_back(s.id);

  const auto n = space.dimension();
  std::size_t rest_dim = 1;
  for (int id : traced) rest_dim *= static_cast<std::size_t>(space.local_dim(id));
  // Map each full index to (kept index, traced index).
  std::vector<std::size_t> k_of(n), r_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t k = 0, r = 0;
    for (const auto& s : kept) k = k * s.dim + (i / space.stride(s.id)) % s.dim;
    for (int id : traced) r = r * space.local_dim(id) + (i / space.stride(id)) % space.local_dim(id);
    k_of[i] = k;
    r_of[i] = r;
  }
  const auto kd = static_cast<Eigen::Index>(reduced.dimension());
  CMat out = CMat::Zero(kd, kd);
  if (state.is_pure()) {
    CMat psi_mat = CMat::Zero(kd, static_cast<Eigen::Index>(rest_dim));
    for (std::size_t i = 0; i < n; ++i)
      psi_mat(static_cast<Eigen::Index>(k_of[i]), static_cast<Eigen::Index>(r_of[i])) = state.vector()(static_cast<Eigen::Index>(i));
    out = psi_mat * psi_mat.adjoint();
  } else {
    const CMat& rho = state.matrix();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (r_of[i] == r_of[j])
          out(static_cast<Eigen::Index>(k_of[i]), static_cast<Eigen::Index>(k_of[j])) +=
              rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  return QuantumState::density(std::move(reduced), out, out.trace().real(), false);
}

double fidelity_with_pure(const QuantumState& state, const CVec& target) {
  if (static_cast<std::size_t>(target.size()) != state.dimension()) throw ShapeError("target dimension mismatch");
  const double tn = target.norm();
  if (tn == 0.0) throw DomainError("target state has zero norm");
  const CVec t = target / tn;
  if (state.is_pure()) return std::norm(t.dot(state.vector()));
  return (t.adjoint() * state.matrix() * t)(0, 0).real();
}

double min_eigenvalue(const CMat& hermitian) {
  if (hermitian.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitian, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double trace_distance(const CMat& rho, const CMat& sigma) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols()) throw ShapeError("trace distance shape mismatch");
  const CMat diff = 0.5 * ((rho - sigma) + (rho - sigma).adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(diff, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace ccsim
