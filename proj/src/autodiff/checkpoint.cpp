#include "pursuit/autodiff/checkpoint.hpp"

#include <unordered_map>

namespace pursuit::ad {

nlohmann::ordered_json parameters_to_json(const ParameterSet& ps) {
  nlohmann::ordered_json j;
  j["version"] = kCheckpointVersion;
  auto& arr = j["parameters"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const Parameter& p = ps[i];
    nlohmann::ordered_json e;
    e["name"] = p.name;
    e["shape"] = {p.value.rows(), p.value.cols()};
    e["values"] = std::vector<double>(p.value.values().begin(), p.value.values().end());
    arr.push_back(std::move(e));
  }
  return j;
}

void parameters_from_json(const nlohmann::ordered_json& j, ParameterSet& ps) {
  if (!j.contains("version") || j["version"].get<int>() != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version");
  std::unordered_map<std::string, const nlohmann::ordered_json*> by_name;
  for (const auto& e : j.at("parameters")) by_name[e.at("name").get<std::string>()] = &e;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    Parameter& p = ps[i];
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw CheckpointError("checkpoint is missing parameter '" + p.name + "'");
    const auto& e = *it->second;
    const auto shape = e.at("shape").get<std::vector<int>>();
    if (shape.size() != 2 || shape[0] != p.value.rows() || shape[1] != p.value.cols())
      throw CheckpointError("shape mismatch for parameter '" + p.name + "'");
    auto values = e.at("values").get<std::vector<double>>();
    p.value = Matrix(shape[0], shape[1], std::move(values));
  }
  if (by_name.size() != ps.size()) throw CheckpointError("checkpoint has parameters the model does not define");
}

}  // namespace pursuit::ad
