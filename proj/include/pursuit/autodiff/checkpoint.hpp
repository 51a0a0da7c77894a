#pragma once

#include <nlohmann/json.hpp>
#include <stdexcept>

#include "pursuit/autodiff/layers.hpp"

namespace pursuit::ad {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kCheckpointVersion = 1;

// {"version", "parameters": [{"name", "shape": [r, c], "values": [...]}]}
nlohmann::ordered_json parameters_to_json(const ParameterSet& ps);

// Loads values by name into an already-built set. Every parameter must be
// present with a matching shape.
void parameters_from_json(const nlohmann::ordered_json& j, ParameterSet& ps);

}  // namespace pursuit::ad
