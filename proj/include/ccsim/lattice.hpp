#pragma once

// 2D cavity grid with per-site roles. Site id = row * cols + col.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace ccsim {

enum class Role { Logical, Mediator, Off };

char role_char(Role r);

// Per-site detuning Delta_k in units of A; sites absent from the map are on
// resonance.
struct DetuningProfile {
  std::map<int, double> values;

  double at(int site) const;
  void set(int site, double delta) { values[site] = delta; }
  // Throws DomainError on non-finite values or sites outside [0, n_sites).
  void validate(int n_sites) const;
};

// (logical, mediator, logical) triple along a grid row or column.
struct Chain {
  int a = 0;
  int mediator = 0;
  int b = 0;
  bool horizontal = true;
  bool operator==(const Chain&) const = default;
};

class LatticeLayout {
 public:
  LatticeLayout(int rows, int cols, std::vector<Role> roles, DetuningProfile detuning = {});

  // Logical on (even, even), mediator where exactly one coordinate is odd,
  // off where both are odd.
  static LatticeLayout standard(int rows, int cols);
  // One string per row: 'L' logical, 'M' mediator, 'O' (or '.') off.
  static LatticeLayout from_grid(const std::vector<std::string>& grid);
  static LatticeLayout from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int size() const { return rows_ * cols_; }
  int site(int r, int c) const;
  std::pair<int, int> coords(int site) const;
  Role role(int site) const;
  const DetuningProfile& detuning() const { return detuning_; }
  void set_detuning(DetuningProfile d);

  std::vector<int> logical_sites() const;
  std::vector<int> mediator_sites() const;
  // Nearest-neighbour grid edges (a < b), row-major order.
  std::vector<std::pair<int, int>> grid_edges() const;
  // Every mediator with a logical site on both sides along one axis.
  std::vector<Chain> chains() const;
  // Logical-lattice edges (pairs of logical site ids), one per chain.
  std::vector<std::pair<int, int>> logical_edges() const;

 private:
  int rows_;
  int cols_;
  std::vector<Role> roles_;
  DetuningProfile detuning_;
};

}  // namespace ccsim
