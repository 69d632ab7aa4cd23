#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "nlgd/experiments.hpp"

namespace nlgd {

using Json = nlohmann::ordered_json;

// Problem or run description that cannot be used. `field` is the dotted path
// of the offending key; `line` is set for syntax errors.
class ConfigError : public InvalidArgument {
 public:
  ConfigError(std::string field, const std::string& message, std::optional<std::size_t> line = std::nullopt);
  const std::string& field() const noexcept { return field_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  std::string field_;
  std::optional<std::size_t> line_;
};

Json parse_json(std::string_view text, const std::string& source = "<config>");
Json read_json_file(const std::filesystem::path& path);

// Config file layout (JSON):
//
//   {
//     "name": "smart_grid",                 optional label
//     "seed": 7,                            master seed
//     "problem": {
//       "family": "smart_grid" | "portfolio" | "quadratic",
//       "m": 20, "n": 1,
//       "demand": [0.0],                    default zeros
//       "agents": [ {...}, ... ]            default: seeded draws
//     },
//     "network": {"type": "watts_strogatz", "k": 4, "p": 0.2}
//              | {"type": "edges", "edges": [[0, 1], ...]}
//              | {"type": "edge_list", "path": "graph.txt"}
//              | {"type": "path" | "ring" | "complete"},
//     "initial": {"point": [...], "perturbation_norm": 1e-3},
//     "reference": [...],                   default: initial.point
//     "run": {"algorithm": "NLGD", "step_size": 1e-3, "noise_std": 0.05,
//             "max_iters": 1000, "record_every": 100, ...},
//     "variants": [ {"label": "LGD", <run fields>}, ... ]
//   }
//
// Agent entries: quadratic {"a": scalar | matrix, "c": [...]},
// smart_grid {"a": ..., "b": ...},
// portfolio {"mu": [...], "sigma": [[...]], "lambda": ..., "gamma": ...}.
// The initial point defaults to the uniform split r/m. Seeds split as:
// graph, agent parameters, initial perturbation and noise each draw from
// their own stream of the master seed.
Scenario scenario_from_json(const Json& config, std::optional<std::uint64_t> seed_override = std::nullopt,
                            const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = std::nullopt);

// Fully explicit description (agents and edges spelled out) that
// scenario_from_json maps back to an identical scenario.
Json scenario_to_json(const Scenario& scenario);

RunConfig run_config_from_json(const Json& section, const std::string& where);
Json run_config_to_json(const RunConfig& config);

// Whitespace separated numbers.
Vector read_vector_file(const std::filesystem::path& path);

}  // namespace nlgd
