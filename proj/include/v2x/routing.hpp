#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "v2x/optimizer.hpp"
#include "v2x/types.hpp"

namespace v2x::routing {

struct Node {
    NodeId id = 0;
    double x = 0.0;  // meters
    double y = 0.0;

    friend bool operator==(const Node&, const Node&) = default;
};

/// Directed street segment with its vehicle arrival rate.
struct Edge {
    NodeId from = 0;
    NodeId to = 0;
    double lambda = 0.1;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// RSU graph. Edges are directed; a node's degree counts distinct
/// neighbours in either direction.
class Topology {
  public:
    void add_node(NodeId id, double x, double y);
    void add_edge(NodeId from, NodeId to, double lambda);
    void add_backhaul(NodeId a, NodeId b);

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<std::pair<NodeId, NodeId>>& backhaul_links() const { return backhaul_; }

    bool has_node(NodeId id) const { return index_.count(id) != 0; }
    const Node& node(NodeId id) const;

    /// Successors along directed edges, ascending by id.
    const std::vector<NodeId>& successors(NodeId id) const;
    int degree(NodeId id) const;
    double lambda(NodeId from, NodeId to) const;
    bool has_backhaul(NodeId a, NodeId b) const;

    /// Exit directions at `id` excluding the U-turn: max(1, degree - 1).
    int exit_directions(NodeId id) const;

    /// Ids unique, coordinates finite, edges reference known nodes with
    /// lambda > 0, and the graph is (weakly) connected.
    void validate() const;

    friend bool operator==(const Topology& a, const Topology& b) {
        return a.nodes_ == b.nodes_ && a.edges_ == b.edges_ && a.backhaul_ == b.backhaul_;
    }

  private:
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::vector<std::pair<NodeId, NodeId>> backhaul_;
    std::map<NodeId, std::size_t> index_;
    std::map<NodeId, std::vector<NodeId>> successors_;
    std::map<NodeId, std::set<NodeId>> neighbours_;
    std::map<std::pair<NodeId, NodeId>, double> lambda_;
};

/// Hop list for a node path; hop h runs from path[h] to path[h+1].
Route path_to_route(const Topology& topology, std::span<const NodeId> path);

struct RouteSet {
    std::vector<Route> routes;
};

/// All simple paths from source to destination in lexicographic order of
/// their node sequences, optionally limited to `max_hops` hops.
RouteSet enumerate_routes(const Topology& topology, NodeId source, NodeId destination,
                          std::optional<int> max_hops = std::nullopt);

struct RoutingOutcome {
    opt::OptimizationOutcome best;      // best.route_index indexes the route set
    Route route;
    opt::NormalizationContext norm;     // shared end-to-end context
    std::vector<opt::OptimizationOutcome> per_route;
};

/// Exhaustive search over the route set with a shared t per route. The
/// smallest route index wins ties.
RoutingOutcome global_routing(const RouteSet& set, const SystemParams& params, double alpha,
                              opt::RateModel model = opt::RateModel::MinOfMeans);

/// Same, with per-hop windows optimized independently.
RoutingOutcome distributed_routing(const RouteSet& set, const SystemParams& params, double alpha,
                                   opt::RateModel model = opt::RateModel::MinOfMeans,
                                   opt::HopNormalization hop_norm = opt::HopNormalization::PerHop);

/// Fewest-hop path; ties go to the lexicographically smaller node sequence.
Route spr_route(const Topology& topology, NodeId source, NodeId destination);

struct GpsrTrace {
    std::vector<NodeId> walk;  // every node visited, in order
    bool used_perimeter = false;
    Route route;               // walk with cycles removed
};

/// Greedy geographic forwarding toward the destination with right-hand-rule
/// perimeter recovery at local minima.
GpsrTrace gpsr_trace(const Topology& topology, NodeId source, NodeId destination);

Route gpsr_route(const Topology& topology, NodeId source, NodeId destination);

/// Hop count of the shortest path by breadth-first search.
int graph_distance(const Topology& topology, NodeId source, NodeId destination);

}  // namespace v2x::routing
