#pragma once

// Scenario construction and the JSON configuration format.
//
// {
//   "params":   {"T": 20, "delta_t": 0.1, "epsilon": 0.001,
//                "r_v2v": 2, "r_v2i": 1.5, "r_o": 1, "alpha": 0.5},
//   "arrival_interval": [0.05, 0.3],
//   "seed": 1,
//   "grid":     {"rows": 3, "cols": 3, "block_m": 250, "full_backhaul": false},
//   "topology": {"nodes": [{"id": 0, "x": 0, "y": 0}, ...],
//                "edges": [{"from": 0, "to": 1, "lambda": 0.12}, ...],
//                "backhaul": [[0, 1], ...]},
//   "source": 0, "destination": 8, "max_hops": 6,
//   "broadcast": [{"scheme": "TD", "beams": 1, "delta_t": 0.1}, ...]
// }
//
// Either "grid" or "topology" must be present; an explicit topology wins.
// Every other key is optional and falls back to the defaults below.

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "v2x/routing.hpp"
#include "v2x/simulator.hpp"
#include "v2x/types.hpp"

namespace v2x {

struct GridSpec {
    int rows = 3;
    int cols = 3;
    double block_m = 250.0;
    bool full_backhaul = false;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct Scenario {
    routing::Topology topology;
    SystemParams params;
    NodeId source = 0;
    NodeId destination = 0;
    double arrival_min = 0.05;  // vehicles/s
    double arrival_max = 0.3;
    std::uint64_t seed = 1;
    std::optional<int> max_hops;
    std::optional<GridSpec> grid;
    sim::BroadcastTable broadcast = sim::BroadcastTable::defaults();

    void validate() const;

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// rows x cols RSUs spaced block_m apart, node id r * cols + c, with every
/// street segment present in both directions and an independent uniform
/// arrival rate per direction. Source is the upper-left RSU, destination the
/// lower-right.
Scenario build_grid_scenario(int rows, int cols, double block_m, const SystemParams& params,
                             std::uint64_t seed, double arrival_min = 0.05,
                             double arrival_max = 0.3);

/// 3 x 3 grid, 250 m blocks, default parameters, seed 1.
Scenario default_scenario();

/// Backhaul link between every pair of adjacent RSUs.
void add_full_backhaul(routing::Topology& topology);

Scenario scenario_from_json(const nlohmann::json& doc);
nlohmann::json scenario_to_json(const Scenario& scenario);

Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& scenario, const std::string& path);

}  // namespace v2x
