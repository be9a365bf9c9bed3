#pragma once

// One CLI invocation as a JSON object. Field names are versioned by "schema".

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

namespace sppm::cli {

inline constexpr int kSchema = 1;

struct RunRecord {
  std::string command;
  std::map<std::string, std::string> params;
  nlohmann::json outputs = nlohmann::json::object();
  std::optional<double> wall_time;
  std::optional<std::uint64_t> seed;

  bool operator==(const RunRecord&) const = default;
};

inline nlohmann::json to_json(const RunRecord& r) {
  nlohmann::json j;
  j["schema"] = kSchema;
  j["command"] = r.command;
  j["params"] = r.params;
  j["outputs"] = r.outputs;
  j["wall_time"] = r.wall_time ? nlohmann::json(*r.wall_time) : nlohmann::json(nullptr);
  j["seed"] = r.seed ? nlohmann::json(*r.seed) : nlohmann::json(nullptr);
  return j;
}

inline RunRecord from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("schema", 0) != kSchema) throw std::invalid_argument("run record: missing or unknown schema");
  RunRecord r;
  r.command = j.at("command").get<std::string>();
  r.params = j.at("params").get<std::map<std::string, std::string>>();
  r.outputs = j.at("outputs");
  if (!j.at("wall_time").is_null()) r.wall_time = j.at("wall_time").get<double>();
  if (!j.at("seed").is_null()) r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

}  // namespace sppm::cli
