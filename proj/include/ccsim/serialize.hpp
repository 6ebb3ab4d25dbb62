#pragma once

// JSON documents for operators and states:
//   {"space": [[site, dim], ...], "entries": [[row, col, re, im], ...]}
// Entries are sorted row-major. States add "representation" ("pure" or
// "density"); pure states store amplitudes as [[index, 0, re, im], ...].

#include "json.hpp"

#include "ccsim/numkernel.hpp"

namespace ccsim {

nlohmann::json space_to_json(const SpaceLabel& space);
SpaceLabel space_from_json(const nlohmann::json& j);

nlohmann::json operator_to_json(const OperatorMatrix& op);
OperatorMatrix operator_from_json(const nlohmann::json& j);

nlohmann::json state_to_json(const QuantumState& state);
QuantumState state_from_json(const nlohmann::json& j);

nlohmann::json matrix_to_json(const CMat& m);
CMat matrix_from_json(const nlohmann::json& j);

}  // namespace ccsim
