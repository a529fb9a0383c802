#pragma once

// JSON graph documents.
//
//   {
//     "name":   "G1",
//     "nodes":  [ {"name": "X1", "constant": true},
//                 {"name": "X2", "hidden": false, "link": "identity",
//                  "noise": {"kind": "none"}}, ... ],
//     "edges":  [ {"from": "X1", "to": "X2", "weight": 0.3}, ... ],
//     "target": "Y"
//   }
//
// "link" is either a bare kind string ("identity", "logistic") or an object:
//   {"kind": "identity", "l2": 0.01}
//   {"kind": "logistic", "scale": 4.0, "offset": -2.0}
//   {"kind": "tabulated", "knots": [...], "values": [...], "l2": 0.0}
// "noise" kinds are "none" and "truncated-gaussian" (with "stddev").
// Missing fields default to: hidden=false, constant=false, link=identity,
// noise=none. Constant nodes are moved to the front (stable order); a node's
// parents appear in the order its incoming edges are listed.

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "ccb/model.hpp"

namespace ccb {

[[nodiscard]] CausalModel model_from_json(const nlohmann::json& doc);
[[nodiscard]] nlohmann::json model_to_json(const CausalModel& model);

[[nodiscard]] CausalModel read_model_file(const std::filesystem::path& path);
void write_model_file(const CausalModel& model, const std::filesystem::path& path);

/// A builtin graph name (G1..G5) or a path to a graph document.
[[nodiscard]] CausalModel load_model(const std::string& name_or_path);

/// "{X3,X4,X5}" using node names.
[[nodiscard]] std::string format_node_set(const CausalModel& model, const Intervention& iv);

}  // namespace ccb
