#include "v2x/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "v2x/rng.hpp"

namespace v2x {

namespace {

using nlohmann::json;

// Stream id reserved for topology draws; simulator hops never reach it.
constexpr std::uint32_t kTopologyStream = 0xFFFFFFFFu;

void reject_unknown(const json& object, const std::set<std::string>& allowed,
                    const std::string& where) {
    if (!object.is_object()) throw Error(ErrorCode::ConfigParse, where + " must be an object");
    for (const auto& [key, value] : object.items()) {
        if (!allowed.count(key)) {
            throw Error(ErrorCode::ConfigParse, "unknown key '" + key + "' in " + where);
        }
    }
}

SystemParams params_from_json(const json& doc) {
    reject_unknown(doc, {"T", "delta_t", "epsilon", "r_v2v", "r_v2i", "r_o", "alpha"}, "params");
    SystemParams p;
    p.T = doc.value("T", p.T);
    p.delta_t = doc.value("delta_t", p.delta_t);
    p.epsilon = doc.value("epsilon", p.epsilon);
    p.r_v2v = doc.value("r_v2v", p.r_v2v);
    p.r_v2i = doc.value("r_v2i", p.r_v2i);
    p.r_o = doc.value("r_o", p.r_o);
    p.alpha = doc.value("alpha", p.alpha);
    return p;
}

json params_to_json(const SystemParams& p) {
    return {{"T", p.T},         {"delta_t", p.delta_t}, {"epsilon", p.epsilon},
            {"r_v2v", p.r_v2v}, {"r_v2i", p.r_v2i},     {"r_o", p.r_o},
            {"alpha", p.alpha}};
}

routing::Topology topology_from_json(const json& doc) {
    reject_unknown(doc, {"nodes", "edges", "backhaul"}, "topology");
    routing::Topology topology;
    for (const auto& node : doc.at("nodes")) {
        reject_unknown(node, {"id", "x", "y"}, "topology node");
        topology.add_node(node.at("id").get<NodeId>(), node.at("x").get<double>(),
                          node.at("y").get<double>());
    }
    for (const auto& edge : doc.at("edges")) {
        reject_unknown(edge, {"from", "to", "lambda"}, "topology edge");
        topology.add_edge(edge.at("from").get<NodeId>(), edge.at("to").get<NodeId>(),
                          edge.at("lambda").get<double>());
    }
    if (doc.contains("backhaul")) {
        for (const auto& link : doc.at("backhaul")) {
            if (!link.is_array() || link.size() != 2) {
                throw Error(ErrorCode::ConfigParse, "backhaul links are [a, b] pairs");
            }
            topology.add_backhaul(link[0].get<NodeId>(), link[1].get<NodeId>());
        }
    }
    return topology;
}

json topology_to_json(const routing::Topology& topology) {
    json nodes = json::array(), edges = json::array(), backhaul = json::array();
    for (const auto& node : topology.nodes()) {
        nodes.push_back({{"id", node.id}, {"x", node.x}, {"y", node.y}});
    }
    for (const auto& edge : topology.edges()) {
        edges.push_back({{"from", edge.from}, {"to", edge.to}, {"lambda", edge.lambda}});
    }
    for (const auto& [a, b] : topology.backhaul_links()) backhaul.push_back({a, b});
    return {{"nodes", nodes}, {"edges", edges}, {"backhaul", backhaul}};
}

sim::BroadcastTable broadcast_from_json(const json& doc) {
    if (!doc.is_array()) throw Error(ErrorCode::ConfigParse, "broadcast must be an array");
    sim::BroadcastTable table;
    for (const auto& entry : doc) {
        reject_unknown(entry, {"scheme", "beams", "delta_t"}, "broadcast entry");
        const auto scheme = sim::scheme_from_string(entry.at("scheme").get<std::string>());
        table.entries[{scheme, entry.at("beams").get<int>()}] = entry.at("delta_t").get<double>();
    }
    return table;
}

json broadcast_to_json(const sim::BroadcastTable& table) {
    json out = json::array();
    for (const auto& [key, value] : table.entries) {
        out.push_back({{"scheme", sim::to_string(key.first)}, {"beams", key.second},
                       {"delta_t", value}});
    }
    return out;
}

}  // namespace

void Scenario::validate() const {
    params.validate();
    topology.validate();
    if (!topology.has_node(source) || !topology.has_node(destination)) {
        throw Error(ErrorCode::InvalidArgument, "source or destination is not a topology node");
    }
    if (source == destination) {
        throw Error(ErrorCode::InvalidArgument, "source and destination coincide");
    }
    if (!(arrival_min > 0.0) || !(arrival_max >= arrival_min) || !std::isfinite(arrival_max)) {
        throw Error(ErrorCode::InvalidArgument, "arrival interval must satisfy 0 < min <= max");
    }
    if (max_hops && *max_hops < 1) {
        throw Error(ErrorCode::InvalidArgument, "max_hops must be >= 1");
    }
}

Scenario build_grid_scenario(int rows, int cols, double block_m, const SystemParams& params,
                             std::uint64_t seed, double arrival_min, double arrival_max) {
    if (rows < 2 || cols < 2) {
        throw Error(ErrorCode::InvalidArgument, "grid needs at least 2 rows and 2 columns");
    }
    if (!(block_m > 0.0)) throw Error(ErrorCode::InvalidArgument, "block length must be positive");

    Scenario scenario;
    scenario.params = params;
    scenario.seed = seed;
    scenario.arrival_min = arrival_min;
    scenario.arrival_max = arrival_max;
    scenario.grid = GridSpec{rows, cols, block_m, false};
    scenario.source = 0;
    scenario.destination = rows * cols - 1;

    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            scenario.topology.add_node(r * cols + c, c * block_m, -r * block_m);
        }
    }
    rng::Substream stream(seed, 0, kTopologyStream);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const NodeId id = r * cols + c;
            std::vector<NodeId> adjacent;
            if (r > 0) adjacent.push_back(id - cols);
            if (c > 0) adjacent.push_back(id - 1);
            if (c + 1 < cols) adjacent.push_back(id + 1);
            if (r + 1 < rows) adjacent.push_back(id + cols);
            for (NodeId next : adjacent) {
                const double lambda = arrival_min + (arrival_max - arrival_min) * stream.uniform();
                scenario.topology.add_edge(id, next, lambda);
            }
        }
    }
    scenario.validate();
    return scenario;
}

Scenario default_scenario() { return build_grid_scenario(3, 3, 250.0, SystemParams{}, 1); }

void add_full_backhaul(routing::Topology& topology) {
    for (const auto& edge : topology.edges()) topology.add_backhaul(edge.from, edge.to);
}

Scenario scenario_from_json(const json& doc) {
    try {
        reject_unknown(doc,
                       {"params", "arrival_interval", "seed", "grid", "topology", "source",
                        "destination", "max_hops", "broadcast"},
                       "scenario");
        const SystemParams params =
            doc.contains("params") ? params_from_json(doc.at("params")) : SystemParams{};
        const std::uint64_t seed = doc.value("seed", std::uint64_t{1});
        double arrival_min = 0.05, arrival_max = 0.3;
        if (doc.contains("arrival_interval")) {
            const auto& interval = doc.at("arrival_interval");
            if (!interval.is_array() || interval.size() != 2) {
                throw Error(ErrorCode::ConfigParse, "arrival_interval must be [min, max]");
            }
            arrival_min = interval[0].get<double>();
            arrival_max = interval[1].get<double>();
        }

        std::optional<GridSpec> grid;
        if (doc.contains("grid")) {
            const auto& g = doc.at("grid");
            reject_unknown(g, {"rows", "cols", "block_m", "full_backhaul"}, "grid");
            grid = GridSpec{g.value("rows", 3), g.value("cols", 3), g.value("block_m", 250.0),
                            g.value("full_backhaul", false)};
        }

        Scenario scenario;
        if (doc.contains("topology")) {
            scenario.topology = topology_from_json(doc.at("topology"));
            scenario.params = params;
            scenario.seed = seed;
            scenario.arrival_min = arrival_min;
            scenario.arrival_max = arrival_max;
            scenario.grid = grid;
        } else if (grid) {
            scenario = build_grid_scenario(grid->rows, grid->cols, grid->block_m, params, seed,
                                           arrival_min, arrival_max);
            scenario.grid = grid;
            if (grid->full_backhaul) add_full_backhaul(scenario.topology);
        } else {
            throw Error(ErrorCode::ConfigParse, "scenario needs a 'grid' or a 'topology'");
        }

        if (doc.contains("source")) {
            scenario.source = doc.at("source").get<NodeId>();
        } else if (!grid) {
            throw Error(ErrorCode::ConfigParse, "explicit topologies need a 'source'");
        }
        if (doc.contains("destination")) {
            scenario.destination = doc.at("destination").get<NodeId>();
        } else if (!grid) {
            throw Error(ErrorCode::ConfigParse, "explicit topologies need a 'destination'");
        } else {
            scenario.destination = grid->rows * grid->cols - 1;
        }
        if (doc.contains("max_hops") && !doc.at("max_hops").is_null()) {
            scenario.max_hops = doc.at("max_hops").get<int>();
        }
        if (doc.contains("broadcast")) scenario.broadcast = broadcast_from_json(doc.at("broadcast"));
        scenario.validate();
        return scenario;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigParse, e.what());
    }
}

json scenario_to_json(const Scenario& scenario) {
    json doc;
    doc["params"] = params_to_json(scenario.params);
    doc["arrival_interval"] = {scenario.arrival_min, scenario.arrival_max};
    doc["seed"] = scenario.seed;
    if (scenario.grid) {
        doc["grid"] = {{"rows", scenario.grid->rows},
                       {"cols", scenario.grid->cols},
                       {"block_m", scenario.grid->block_m},
                       {"full_backhaul", scenario.grid->full_backhaul}};
    }
    doc["topology"] = topology_to_json(scenario.topology);
    doc["source"] = scenario.source;
    doc["destination"] = scenario.destination;
    doc["max_hops"] = scenario.max_hops ? json(*scenario.max_hops) : json(nullptr);
    doc["broadcast"] = broadcast_to_json(scenario.broadcast);
    return doc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigParse, "cannot open " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigParse, path + ": " + e.what());
    }
    return scenario_from_json(doc);
}

void save_scenario(const Scenario& scenario, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
    out << scenario_to_json(scenario).dump(2) << '\n';
}

}  // namespace v2x
