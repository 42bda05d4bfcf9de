#pragma once

#include <nlohmann/json.hpp>

#include "rwre/env_model.hpp"
#include "rwre/pvp_core.hpp"

namespace rwre {

// Environment schema:
//   {"dim": d, "kind": "periodic", "extents": [L_1, ...], "table": [law, ...]}
//   {"dim": d, "kind": "homogeneous", "law": law}
//   {"dim": d, "kind": "iid", "family": [{"weight": w, "law": law}, ...], "seed": u64}
//   {"dim": 2, "kind": "column_ab", "prob_a": p, "seed": u64}
//   {"dim": 2, "kind": "column_ab_periodic", "pattern": "ABAB", "height": h}
// with an optional "offset": [z_1, ...]. A law is [{"y": [..], "p": p}, ...]
// where p is a number or an exact "num/den" string. Periodic tables list
// torus sites with the first axis varying fastest.
JumpDistribution law_from_json(int dim, const nlohmann::json& j);
nlohmann::json law_to_json(const JumpDistribution& law);

Environment environment_from_json(const nlohmann::json& j);
nlohmann::json environment_to_json(const Environment& env);

// [[dx, dy], ...]
nlohmann::json sequence_to_json(const DisplacementSequence& seq);
DisplacementSequence sequence_from_json(int dim, const nlohmann::json& j);
// {"lo": "num/den", "hi": "num/den"}
nlohmann::json interval_to_json(const RationalInterval& iv);

}  // namespace rwre
