#pragma once

#include <string>
#include <vector>

#include "ebridge/ensemble.hpp"

namespace ebridge {

// Named parameter families available to configs; each takes its parameters from
// the same JSON object that names it.
std::vector<std::string> family_names();

// Builds an ensemble from a JSON object of one of two shapes:
//   {"family": "<name>", "n_nodes": 16, ...family params}
//   {"nodes": [{"theta": t, "weight": w, "A": [[..]], "B": [[..]]}, ...]}
// Matrices are arrays of rows. Throws Error(invalid_input) with the offending
// field named in the message.
EnsembleSpec ensemble_from_json(const std::string& json_text);

}  // namespace ebridge
