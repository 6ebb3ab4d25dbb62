#include "ccsim/serialize.hpp"

#include <string>

namespace ccsim {

using nlohmann::json;

json space_to_json(const SpaceLabel& space) {
  json out = json::array();
  for (const auto& s : space.sites()) out.push_back({s.id, s.dim});
  return out;
}

SpaceLabel space_from_json(const json& j) {
  if (!j.is_array()) throw ShapeError("space must be an array of [site, dim] pairs");
  std::vector<SiteSpec> sites;
  for (const auto& s : j) {
    if (!s.is_array() || s.size() != 2) throw ShapeError("space entry must be [site, dim]");
    sites.push_back({s[0].get<int>(), s[1].get<int>()});
  }
  return SpaceLabel(std::move(sites));
}

json operator_to_json(const OperatorMatrix& op) {
  json entries = json::array();
  for (const auto& e : op.entries()) entries.push_back({e.row, e.col, e.value.real(), e.value.imag()});
  return {{"space", space_to_json(op.space())}, {"entries", entries}};
}

namespace {

std::vector<Entry> entries_from_json(const json& j) {
  std::vector<Entry> out;
  for (const auto& e : j.at("entries")) {
    if (!e.is_array() || e.size() != 4) throw ShapeError("entry must be [row, col, re, im]");
    out.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(), cplx{e[2].get<double>(), e[3].get<double>()}});
  }
  return out;
}

}  // namespace

OperatorMatrix operator_from_json(const json& j) {
  return OperatorMatrix(space_from_json(j.at("space")), entries_from_json(j));
}

json state_to_json(const QuantumState& state) {
  json out;
  out["space"] = space_to_json(state.space());
  json entries = json::array();
  if (state.is_pure()) {
    out["representation"] = "pure";
    const CVec& v = state.vector();
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (v(i) != cplx{}) entries.push_back({i, 0, v(i).real(), v(i).imag()});
  } else {
    out["representation"] = "density";
    out["trace"] = state.declared_trace();
    const CMat& m = state.matrix();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        if (m(r, c) != cplx{}) entries.push_back({r, c, m(r, c).real(), m(r, c).imag()});
  }
  out["entries"] = entries;
  return out;
}

QuantumState state_from_json(const json& j) {
  SpaceLabel space = space_from_json(j.at("space"));
  const auto rep = j.at("representation").get<std::string>();
  const auto n = static_cast<Eigen::Index>(space.dimension());
  const auto entries = entries_from_json(j);
  if (rep == "pure") {
    CVec v = CVec::Zero(n);
    for (const auto& e : entries) {
      if (e.col != 0 || e.row >= space.dimension()) throw ShapeError("pure state entry out of range");
      v(static_cast<Eigen::Index>(e.row)) = e.value;
    }
    return QuantumState::pure(std::move(space), std::move(v));
  }
  if (rep == "density") {
    CMat m = CMat::Zero(n, n);
    for (const auto& e : entries) {
      if (e.row >= space.dimension() || e.col >= space.dimension()) throw ShapeError("density entry out of range");
      m(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col)) = e.value;
    }
    return QuantumState::density(std::move(space), std::move(m), j.value("trace", 1.0));
  }
  throw ShapeError("unknown state representation '" + rep + "'");
}

json matrix_to_json(const CMat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(row);
  }
  return rows;
}

CMat matrix_from_json(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  CMat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j[r].size()) != cols) throw ShapeError("ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = cplx{j[r][c][0].get<double>(), j[r][c][1].get<double>()};
  }
  return m;
}

}  // namespace ccsim
