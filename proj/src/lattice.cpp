#include "ccsim/lattice.hpp"

#include <cmath>

#include "ccsim/errors.hpp"

namespace ccsim {

char role_char(Role r) {
  switch (r) {
    case Role::Logical: return 'L';
    case Role::Mediator: return 'M';
    case Role::Off: return 'O';
  }
  return '?';
}

double DetuningProfile::at(int site) const {
  auto it = values.find(site);
  return it == values.end() ? 0.0 : it->second;
}

void DetuningProfile::validate(int n_sites) const {
  for (const auto& [site, delta] : values) {
    if (site < 0 || site >= n_sites) throw DomainError("detuning given for unknown site " + std::to_string(site));
    if (!std::isfinite(delta)) throw DomainError("detuning on site " + std::to_string(site) + " is not finite");
  }
}

LatticeLayout::LatticeLayout(int rows, int cols, std::vector<Role> roles, DetuningProfile detuning)
    : rows_(rows), cols_(cols), roles_(std::move(roles)), detuning_(std::move(detuning)) {
  if (rows < 1 || cols < 1) throw ShapeError("lattice needs at least one row and one column");
  if (static_cast<int>(roles_.size()) != rows * cols) throw ShapeError("role map size differs from rows*cols");
  for (int s = 0; s < size(); ++s) {
    const auto [r, c] = coords(s);
    const Role role = roles_[static_cast<std::size_t>(s)];
    if (role == Role::Logical && (r % 2 != 0 || c % 2 != 0))
      throw ShapeError("logical site at (" + std::to_string(r) + "," + std::to_string(c) + ") is not on even coordinates");
    if (role == Role::Mediator) {
      const bool horiz = c > 0 && c + 1 < cols && roles_[static_cast<std::size_t>(s - 1)] == Role::Logical &&
                         roles_[static_cast<std::size_t>(s + 1)] == Role::Logical;
      const bool vert = r > 0 && r + 1 < rows && roles_[static_cast<std::size_t>(s - cols)] == Role::Logical &&
                        roles_[static_cast<std::size_t>(s + cols)] == Role::Logical;
      if (!horiz && !vert)
        throw ShapeError("mediator at (" + std::to_string(r) + "," + std::to_string(c) + ") does not sit between two logical sites");
    }
  }
  detuning_.validate(size());
}

LatticeLayout LatticeLayout::standard(int rows, int cols) {
  if (rows < 1 || cols < 1) throw ShapeError("lattice needs at least one row and one column");
  std::vector<Role> roles;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int odd = (r % 2) + (c % 2);
      Role role = odd == 0 ? Role::Logical : odd == 1 ? Role::Mediator : Role::Off;
      // Border mediators without a logical partner are switched off.
      if (role == Role::Mediator) {
        const bool ok = (r % 2 == 0) ? (c + 1 < cols) : (r + 1 < rows);
        if (!ok) role = Role::Off;
      }
      roles.push_back(role);
    }
  return LatticeLayout(rows, cols, std::move(roles));
}

LatticeLayout LatticeLayout::from_grid(const std::vector<std::string>& grid) {
  if (grid.empty()) throw ShapeError("empty grid");
  const int cols = static_cast<int>(grid[0].size());
  std::vector<Role> roles;
  for (const auto& row : grid) {
    if (static_cast<int>(row.size()) != cols) throw ShapeError("grid rows have different lengths");
    for (char ch : row) {
      switch (ch) {
        case 'L': roles.push_back(Role::Logical); break;
        case 'M': roles.push_back(Role::Mediator); break;
        case 'O':
        case '.': roles.push_back(Role::Off); break;
        default: throw ShapeError(std::string("unknown role character '") + ch + "'");
      }
    }
  }
  return LatticeLayout(static_cast<int>(grid.size()), cols, std::move(roles));
}

LatticeLayout LatticeLayout::from_json(const nlohmann::json& j) {
  auto layout = from_grid(j.at("grid").get<std::vector<std::string>>());
  if (j.contains("detunings")) {
    DetuningProfile d;
    for (const auto& [key, value] : j["detunings"].items()) d.set(std::stoi(key), value.get<double>());
    layout.set_detuning(std::move(d));
  }
  return layout;
}

nlohmann::json LatticeLayout::to_json() const {
  std::vector<std::string> grid;
  for (int r = 0; r < rows_; ++r) {
    std::string row;
    for (int c = 0; c < cols_; ++c) row.push_back(role_char(role(site(r, c))));
    grid.push_back(row);
  }
  nlohmann::json j{{"grid", grid}};
  if (!detuning_.values.empty()) {
    nlohmann::json d = nlohmann::json::object();
    for (const auto& [s, v] : detuning_.values) d[std::to_string(s)] = v;
    j["detunings"] = d;
  }
  return j;
}

int LatticeLayout::site(int r, int c) const {
  if (r < 0 || r >= rows_ || c < 0 || c >= cols_) throw ShapeError("grid coordinate out of range");
  return r * cols_ + c;
}

std::pair<int, int> LatticeLayout::coords(int s) const {
  if (s < 0 || s >= size()) throw ShapeError("site id " + std::to_string(s) + " out of range");
  return {s / cols_, s % cols_};
}

Role LatticeLayout::role(int s) const {
  coords(s);
  return roles_[static_cast<std::size_t>(s)];
}

void LatticeLayout::set_detuning(DetuningProfile d) {
  d.validate(size());
  detuning_ = std::move(d);
}

std::vector<int> LatticeLayout::logical_sites() const {
  std::vector<int> out;
  for (int s = 0; s < size(); ++s)
    if (roles_[static_cast<std::size_t>(s)] == Role::Logical) out.push_back(s);
  return out;
}

std::vector<int> LatticeLayout::mediator_sites() const {
  std::vector<int> out;
  for (int s = 0; s < size(); ++s)
    if (roles_[static_cast<std::size_t>(s)] == Role::Mediator) out.push_back(s);
  return out;
}

std::vector<std::pair<int, int>> LatticeLayout::grid_edges() const {
  std::vector<std::pair<int, int>> out;
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) {
      if (c + 1 < cols_) out.emplace_back(site(r, c), site(r, c + 1));
      if (r + 1 < rows_) out.emplace_back(site(r, c), site(r + 1, c));
    }
  return out;
}

std::vector<Chain> LatticeLayout::chains() const {
  std::vector<Chain> out;
  for (int s = 0; s < size(); ++s) {
    if (roles_[static_cast<std::size_t>(s)] != Role::Mediator) continue;
    const auto [r, c] = coords(s);
    if (c > 0 && c + 1 < cols_ && role(s - 1) == Role::Logical && role(s + 1) == Role::Logical)
      out.push_back({s - 1, s, s + 1, true});
    if (r > 0 && r + 1 < rows_ && role(s - cols_) == Role::Logical && role(s + cols_) == Role::Logical)
      out.push_back({s - cols_, s, s + cols_, false});
  }
  return out;
}

std::vector<std::pair<int, int>> LatticeLayout::logical_edges() const {
  std::vector<std::pair<int, int>> out;
  for (const auto& ch : chains()) out.emplace_back(ch.a, ch.b);
  return out;
}

}  // namespace ccsim
