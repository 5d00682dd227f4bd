#include "v2x/routing.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <sstream>

namespace v2x::routing {

namespace {

std::string node_label(NodeId id) {
    std::ostringstream out;
    out << id;
    return out.str();
}

void require_node(const Topology& topology, NodeId id) {
    if (!topology.has_node(id)) {
        throw Error(ErrorCode::InvalidArgument, "unknown node " + node_label(id));
    }
}

double distance(const Node& a, const Node& b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Counter-clockwise angle from `reference` to `angle`, in (0, 2 pi].
double ccw_gap(double reference, double angle) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double gap = std::fmod(angle - reference, two_pi);
    if (gap <= 1e-12) gap += two_pi;
    return gap;
}

std::vector<NodeId> remove_cycles(const std::vector<NodeId>& walk) {
    std::vector<NodeId> path;
    for (NodeId id : walk) {
        auto it = std::find(path.begin(), path.end(), id);
        if (it != path.end()) {
            path.erase(it + 1, path.end());
        } else {
            path.push_back(id);
        }
    }
    return path;
}

}  // namespace

// ---------------------------------------------------------------------------

void Topology::add_node(NodeId id, double x, double y) {
    if (has_node(id)) throw Error(ErrorCode::InvalidArgument, "duplicate node " + node_label(id));
    index_[id] = nodes_.size();
    nodes_.push_back({id, x, y});
    successors_[id];
    neighbours_[id];
}

void Topology::add_edge(NodeId from, NodeId to, double lambda) {
    require_node(*this, from);
    require_node(*this, to);
    if (from == to) throw Error(ErrorCode::InvalidArgument, "self-loop edge");
    if (lambda_.count({from, to})) {
        throw Error(ErrorCode::InvalidArgument,
                    "duplicate edge " + node_label(from) + "->" + node_label(to));
    }
    edges_.push_back({from, to, lambda});
    lambda_[{from, to}] = lambda;
    auto& succ = successors_[from];
    succ.insert(std::upper_bound(succ.begin(), succ.end(), to), to);
    neighbours_[from].insert(to);
    neighbours_[to].insert(from);
}

void Topology::add_backhaul(NodeId a, NodeId b) {
    require_node(*this, a);
    require_node(*this, b);
    if (!has_backhaul(a, b)) backhaul_.emplace_back(a, b);
}

const Node& Topology::node(NodeId id) const {
    require_node(*this, id);
    return nodes_[index_.at(id)];
}

const std::vector<NodeId>& Topology::successors(NodeId id) const {
    require_node(*this, id);
    return successors_.at(id);
}

int Topology::degree(NodeId id) const {
    require_node(*this, id);
    return static_cast<int>(neighbours_.at(id).size());
}

double Topology::lambda(NodeId from, NodeId to) const {
    auto it = lambda_.find({from, to});
    if (it == lambda_.end()) {
        throw Error(ErrorCode::InvalidArgument,
                    "no edge " + node_label(from) + "->" + node_label(to));
    }
    return it->second;
}

bool Topology::has_backhaul(NodeId a, NodeId b) const {
    return std::any_of(backhaul_.begin(), backhaul_.end(), [&](const auto& link) {
        return (link.first == a && link.second == b) || (link.first == b && link.second == a);
    });
}

int Topology::exit_directions(NodeId id) const { return std::max(1, degree(id) - 1); }

void Topology::validate() const {
    if (nodes_.empty()) throw Error(ErrorCode::InvalidArgument, "topology has no nodes");
    for (const auto& node : nodes_) {
        if (!std::isfinite(node.x) || !std::isfinite(node.y)) {
            throw Error(ErrorCode::InvalidArgument,
                        "node " + node_label(node.id) + " has non-finite coordinates");
        }
    }
    for (const auto& edge : edges_) {
        if (!(edge.lambda > 0.0) || !std::isfinite(edge.lambda)) {
            throw Error(ErrorCode::InvalidArgument, "edge " + node_label(edge.from) + "->" +
                                                        node_label(edge.to) +
                                                        " needs a positive arrival rate");
        }
    }
    std::set<NodeId> reached{nodes_.front().id};
    std::deque<NodeId> frontier{nodes_.front().id};
    while (!frontier.empty()) {
        const NodeId id = frontier.front();
        frontier.pop_front();
        for (NodeId next : neighbours_.at(id)) {
            if (reached.insert(next).second) frontier.push_back(next);
        }
    }
    if (reached.size() != nodes_.size()) {
        throw Error(ErrorCode::InvalidArgument, "topology is not connected");
    }
}

// ---------------------------------------------------------------------------

Route path_to_route(const Topology& topology, std::span<const NodeId> path) {
    if (path.size() < 2) throw Error(ErrorCode::InvalidArgument, "path needs at least two nodes");
    Route route;
    route.source = path.front();
    route.destination = path.back();
    for (std::size_t h = 0; h + 1 < path.size(); ++h) {
        Hop hop;
        hop.rsu_id = path[h];
        hop.next_rsu = path[h + 1];
        hop.lambda = topology.lambda(path[h], path[h + 1]);
        hop.deg = topology.exit_directions(path[h + 1]);
        route.hops.push_back(hop);
    }
    return route;
}

RouteSet enumerate_routes(const Topology& topology, NodeId source, NodeId destination,
                          std::optional<int> max_hops) {
    require_node(topology, source);
    require_node(topology, destination);
    if (source == destination) {
        throw Error(ErrorCode::InvalidArgument, "source and destination coincide");
    }
    RouteSet set;
    std::vector<NodeId> path{source};
    std::set<NodeId> on_path{source};

    auto dfs = [&](auto&& self, NodeId at) -> void {
        if (at == destination) {
            set.routes.push_back(path_to_route(topology, path));
            return;
        }
        if (max_hops && static_cast<int>(path.size()) - 1 >= *max_hops) return;
        for (NodeId next : topology.successors(at)) {
            if (on_path.count(next)) continue;
            path.push_back(next);
            on_path.insert(next);
            self(self, next);
            on_path.erase(next);
            path.pop_back();
        }
    };
    dfs(dfs, source);

    if (set.routes.empty()) {
        throw Error(ErrorCode::NoRoute, "destination " + node_label(destination) +
                                            " is unreachable from " + node_label(source));
    }
    return set;
}

// ---------------------------------------------------------------------------

RoutingOutcome global_routing(const RouteSet& set, const SystemParams& params, double alpha,
                              opt::RateModel model) {
    if (set.routes.empty()) throw Error(ErrorCode::NoRoute, "empty route set");
    std::vector<opt::RouteEvaluator> evaluators;
    evaluators.reserve(set.routes.size());
    for (const auto& route : set.routes) evaluators.emplace_back(route, params, model);

    RoutingOutcome out;
    out.norm = opt::build_normalization(evaluators);
    for (std::size_t i = 0; i < evaluators.size(); ++i) {
        auto outcome = opt::solve_global(evaluators[i], alpha, out.norm);
        outcome.route_index = i;
        if (i == 0 || outcome.objective > out.best.objective) out.best = outcome;
        out.per_route.push_back(std::move(outcome));
    }
    out.route = set.routes[out.best.route_index];
    return out;
}

RoutingOutcome distributed_routing(const RouteSet& set, const SystemParams& params, double alpha,
                                   opt::RateModel model, opt::HopNormalization hop_norm) {
    if (set.routes.empty()) throw Error(ErrorCode::NoRoute, "empty route set");
    RoutingOutcome out;
    out.norm = opt::build_normalization(set.routes, params, model);
    for (std::size_t i = 0; i < set.routes.size(); ++i) {
        auto outcome = opt::solve_distributed(set.routes[i], params, alpha, out.norm, hop_norm);
        outcome.route_index = i;
        if (i == 0 || outcome.objective > out.best.objective) out.best = outcome;
        out.per_route.push_back(std::move(outcome));
    }
    out.route = set.routes[out.best.route_index];
    return out;
}

// ---------------------------------------------------------------------------

namespace {

std::map<NodeId, int> hops_to(const Topology& topology, NodeId destination) {
    // BFS over reversed directed edges.
    std::map<NodeId, std::vector<NodeId>> predecessors;
    for (const auto& edge : topology.edges()) predecessors[edge.to].push_back(edge.from);
    std::map<NodeId, int> dist{{destination, 0}};
    std::deque<NodeId> frontier{destination};
    while (!frontier.empty()) {
        const NodeId id = frontier.front();
        frontier.pop_front();
        for (NodeId prev : predecessors[id]) {
            if (dist.emplace(prev, dist[id] + 1).second) frontier.push_back(prev);
        }
    }
    return dist;
}

}  // namespace

int graph_distance(const Topology& topology, NodeId source, NodeId destination) {
    require_node(topology, source);
    require_node(topology, destination);
    const auto dist = hops_to(topology, destination);
    auto it = dist.find(source);
    if (it == dist.end()) throw Error(ErrorCode::NoRoute, "destination unreachable");
    return it->second;
}

Route spr_route(const Topology& topology, NodeId source, NodeId destination) {
    require_node(topology, source);
    require_node(topology, destination);
    if (source == destination) {
        throw Error(ErrorCode::InvalidArgument, "source and destination coincide");
    }
    const auto dist = hops_to(topology, destination);
    if (!dist.count(source)) throw Error(ErrorCode::NoRoute, "destination unreachable");

    std::vector<NodeId> path{source};
    NodeId at = source;
    while (at != destination) {
        const int remaining = dist.at(at);
        for (NodeId next : topology.successors(at)) {  // ascending ids
            auto it = dist.find(next);
            if (it != dist.end() && it->second == remaining - 1) {
                at = next;
                break;
            }
        }
        path.push_back(at);
    }
    return path_to_route(topology, path);
}

GpsrTrace gpsr_trace(const Topology& topology, NodeId source, NodeId destination) {
    require_node(topology, source);
    require_node(topology, destination);
    if (source == destination) {
        throw Error(ErrorCode::InvalidArgument, "source and destination coincide");
    }
    const Node& target = topology.node(destination);
    auto to_target = [&](NodeId id) { return distance(topology.node(id), target); };
    auto angle = [&](NodeId from, double x, double y) {
        const Node& a = topology.node(from);
        return std::atan2(y - a.y, x - a.x);
    };

    GpsrTrace trace;
    trace.walk.push_back(source);
    NodeId at = source;
    NodeId previous = source;
    bool perimeter = false;
    double entry_distance = 0.0;
    std::set<std::pair<NodeId, NodeId>> perimeter_edges;
    const std::size_t step_limit = 4 * topology.edges().size() + topology.nodes().size() + 4;

    while (at != destination) {
        if (trace.walk.size() > step_limit) {
            throw Error(ErrorCode::LoopDetected, "GPSR exceeded its step budget");
        }
        const auto& next_hops = topology.successors(at);
        if (next_hops.empty()) throw Error(ErrorCode::NoRoute, "GPSR reached a dead end");

        if (perimeter && to_target(at) < entry_distance) perimeter = false;

        if (!perimeter) {
            NodeId best = next_hops.front();
            for (NodeId next : next_hops) {
                if (to_target(next) < to_target(best)) best = next;
            }
            if (to_target(best) < to_target(at)) {
                previous = at;
                at = best;
                trace.walk.push_back(at);
                continue;
            }
            perimeter = true;
            trace.used_perimeter = true;
            entry_distance = to_target(at);
            perimeter_edges.clear();
            // First edge counter-clockwise from the line toward the destination.
            const double reference = angle(at, target.x, target.y);
            NodeId chosen = next_hops.front();
            double gap = 10.0;
            for (NodeId next : next_hops) {
                const Node& n = topology.node(next);
                const double g = ccw_gap(reference, angle(at, n.x, n.y));
                if (g < gap) { gap = g; chosen = next; }
            }
            if (!perimeter_edges.insert({at, chosen}).second) {
                throw Error(ErrorCode::LoopDetected, "GPSR perimeter traversal loops");
            }
            previous = at;
            at = chosen;
            trace.walk.push_back(at);
            continue;
        }

        // Right-hand rule: next edge counter-clockwise from the arrival edge.
        const Node& back = topology.node(previous);
        const double reference = angle(at, back.x, back.y);
        NodeId chosen = next_hops.front();
        double gap = 10.0;
        for (NodeId next : next_hops) {
            const Node& n = topology.node(next);
            const double g = ccw_gap(reference, angle(at, n.x, n.y));
            if (g < gap) { gap = g; chosen = next; }
        }
        if (!perimeter_edges.insert({at, chosen}).second) {
            throw Error(ErrorCode::LoopDetected, "GPSR perimeter traversal loops");
        }
        previous = at;
        at = chosen;
        trace.walk.push_back(at);
    }

    const auto path = remove_cycles(trace.walk);
    trace.route = path_to_route(topology, path);
    return trace;
}

Route gpsr_route(const Topology& topology, NodeId source, NodeId destination) {
    return gpsr_trace(topology, source, destination).route;
}

}  // namespace v2x::routing
