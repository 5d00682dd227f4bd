#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <vector>

#include "support.hpp"
#include "v2x/model_core.hpp"
#include "v2x/optimizer.hpp"
#include "v2x/routing.hpp"
#include "v2x/scenario.hpp"

using namespace v2x;
using routing::Topology;

namespace {

Topology line_graph() {
    Topology topology;
    topology.add_node(0, 0.0, 0.0);
    topology.add_node(1, 250.0, 0.0);
    topology.add_edge(0, 1, 0.1);
    topology.add_edge(1, 0, 0.2);
    return topology;
}

void link(Topology& topology, NodeId a, NodeId b, double lambda = 0.1) {
    topology.add_edge(a, b, lambda);
    topology.add_edge(b, a, lambda);
}

// Independent BFS over the directed edge list.
int bfs_distance(const Topology& topology, NodeId source, NodeId destination) {
    std::map<NodeId, int> dist{{source, 0}};
    std::queue<NodeId> frontier;
    frontier.push(source);
    while (!frontier.empty()) {
        const NodeId at = frontier.front();
        frontier.pop();
        for (const auto& edge : topology.edges()) {
            if (edge.from == at && !dist.count(edge.to)) {
                dist[edge.to] = dist[at] + 1;
                frontier.push(edge.to);
            }
        }
    }
    return dist.count(destination) ? dist[destination] : -1;
}

double euclid(const Topology& topology, NodeId a, NodeId b) {
    const auto& p = topology.node(a);
    const auto& q = topology.node(b);
    return std::hypot(p.x - q.x, p.y - q.y);
}

}  // namespace

TEST_CASE("route enumeration counts") {
    const Topology line = line_graph();
    CHECK(routing::enumerate_routes(line, 0, 1).routes.size() == 1);

    const Scenario two = build_grid_scenario(2, 2, 250.0, SystemParams{}, 1);
    CHECK(routing::enumerate_routes(two.topology, 0, 3).routes.size() == 2);

    const Scenario three = default_scenario();
    const auto set = routing::enumerate_routes(three.topology, 0, 8);
    CHECK(set.routes.size() == 12);
    CHECK(routing::enumerate_routes(three.topology, 0, 8, 4).routes.size() == 6);
    CHECK_THROWS_AS(routing::enumerate_routes(three.topology, 0, 8, 3), Error);
}

TEST_CASE("enumerated routes are simple, ordered, and carry topology data") {
    const Scenario scenario = default_scenario();
    const auto& topology = scenario.topology;
    const auto set = routing::enumerate_routes(topology, 0, 8);
    std::vector<std::vector<NodeId>> sequences;
    for (const auto& route : set.routes) {
        const auto nodes = route.nodes();
        CHECK(nodes.front() == 0);
        CHECK(nodes.back() == 8);
        CHECK(std::set<NodeId>(nodes.begin(), nodes.end()).size() == nodes.size());
        for (std::size_t h = 0; h < route.size(); ++h) {
            CHECK(route.hops[h].lambda == topology.lambda(nodes[h], nodes[h + 1]));
            CHECK(route.hops[h].deg == std::max(1, topology.degree(nodes[h + 1]) - 1));
        }
        sequences.push_back(nodes);
    }
    CHECK(std::is_sorted(sequences.begin(), sequences.end()));

    const auto first = set.routes.front().nodes();
    CHECK(first == std::vector<NodeId>{0, 1, 2, 5, 4, 3, 6, 7, 8});
    const Route spr = routing::spr_route(topology, 0, 8);
    CHECK(spr.hops[0].deg == 2);
    CHECK(spr.hops[1].deg == 1);
    CHECK(spr.hops[3].deg == 1);
}

TEST_CASE("enumeration errors") {
    Topology split;
    split.add_node(0, 0, 0);
    split.add_node(1, 1, 0);
    split.add_node(2, 2, 0);
    split.add_edge(0, 1, 0.1);
    split.add_edge(2, 1, 0.1);
    CHECK_THROWS_AS(routing::enumerate_routes(split, 0, 2), Error);
    try {
        routing::enumerate_routes(split, 0, 2);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoRoute);
    }
    CHECK_THROWS_AS(routing::spr_route(split, 0, 2), Error);
}

TEST_CASE("shortest-path routing") {
    CHECK(routing::spr_route(line_graph(), 0, 1).nodes() == std::vector<NodeId>{0, 1});
    const Scenario two = build_grid_scenario(2, 2, 250.0, SystemParams{}, 1);
    CHECK(routing::spr_route(two.topology, 0, 3).nodes() == std::vector<NodeId>{0, 1, 3});

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Scenario scenario = build_grid_scenario(3, 3, 250.0, SystemParams{}, seed);
        const Route spr = routing::spr_route(scenario.topology, 0, 8);
        CHECK(spr.size() == 4);
        CHECK(spr.nodes() == std::vector<NodeId>{0, 1, 2, 5, 8});
        CHECK(static_cast<int>(spr.size()) == bfs_distance(scenario.topology, 0, 8));
        CHECK(routing::graph_distance(scenario.topology, 0, 8) == 4);
    }
    const Scenario wide = build_grid_scenario(3, 5, 250.0, SystemParams{}, 9);
    CHECK(static_cast<int>(routing::spr_route(wide.topology, 3, 10).size()) ==
          bfs_distance(wide.topology, 3, 10));
}

TEST_CASE("GPSR greedy on the grid") {
    CHECK(routing::gpsr_route(line_graph(), 0, 1).nodes() == std::vector<NodeId>{0, 1});
    const Scenario scenario = default_scenario();
    const auto trace = routing::gpsr_trace(scenario.topology, 0, 8);
    CHECK_FALSE(trace.used_perimeter);
    CHECK(trace.route.size() == 4);
    for (std::size_t i = 1; i < trace.walk.size(); ++i) {
        CHECK(euclid(scenario.topology, trace.walk[i], 8) <
              euclid(scenario.topology, trace.walk[i - 1], 8));
    }
    // Equal-distance neighbours resolve to the smaller id.
    CHECK(trace.walk == std::vector<NodeId>{0, 1, 4, 5, 8});
}

TEST_CASE("GPSR perimeter recovery around a concave obstacle") {
    // S sits in a pocket: both neighbours are farther from D than S is.
    Topology topology;
    topology.add_node(0, 0, 0);    // S
    topology.add_node(1, 4, 0);    // D
    topology.add_node(2, 0, 2);    // A
    topology.add_node(3, 4, 2);    // C
    topology.add_node(4, 0, -2);   // B, dead end
    link(topology, 0, 2);
    link(topology, 2, 3);
    link(topology, 3, 1);
    link(topology, 0, 4);
    topology.validate();
    const auto trace = routing::gpsr_trace(topology, 0, 1);
    CHECK(trace.used_perimeter);
    CHECK(trace.walk == std::vector<NodeId>{0, 2, 3, 1});
    CHECK(trace.route.nodes() == std::vector<NodeId>{0, 2, 3, 1});
}

TEST_CASE("GPSR reports perimeter loops") {
    // D can only send toward S, so the perimeter walk circles the triangle.
    Topology topology;
    topology.add_node(0, 0, 0);
    topology.add_node(1, -1, 1);
    topology.add_node(2, -1, -1);
    topology.add_node(3, 5, 0);
    link(topology, 0, 1);
    link(topology, 1, 2);
    link(topology, 2, 0);
    topology.add_edge(3, 0, 0.1);
    try {
        routing::gpsr_trace(topology, 0, 3);
        FAIL("expected a loop");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::LoopDetected);
    }
}

TEST_CASE("global routing") {
    SystemParams p;
    const Route single = test::make_route({{0.1, 3}, {0.2, 2}});
    routing::RouteSet one{{single}};
    const auto outcome = routing::global_routing(one, p, 0.5);
    const auto norm = opt::build_normalization(one.routes, p, opt::RateModel::MinOfMeans);
    const auto direct = opt::solve_global(single, p, 0.5, norm);
    CHECK(outcome.best.route_index == 0);
    CHECK(outcome.best.t_star == direct.t_star);
    CHECK(outcome.best.objective == direct.objective);

    routing::RouteSet twins{{single, single}};
    const auto tied = routing::global_routing(twins, p, 0.5);
    CHECK(tied.best.route_index == 0);
    CHECK(tied.per_route[0].objective == tied.per_route[1].objective);

    const Scenario scenario = default_scenario();
    const auto set = routing::enumerate_routes(scenario.topology, 0, 8);
    const Route spr = routing::spr_route(scenario.topology, 0, 8);
    for (double alpha : {0.0, 0.5, 1.0}) {
        const auto result = routing::global_routing(set, scenario.params, alpha);
        for (const auto& per_route : result.per_route) {
            CHECK(result.best.objective >= per_route.objective);
        }
        const auto spr_outcome = opt::solve_global(spr, scenario.params, alpha, result.norm);
        CHECK(result.best.objective >= spr_outcome.objective);
        if (alpha == 0.0) CHECK(result.best.e2e_latency <= spr_outcome.e2e_latency + 1e-12);
    }
}

TEST_CASE("distributed routing") {
    SystemParams p;
    const Route hop = test::make_route({{0.2, 3}});
    routing::RouteSet one{{hop}};
    const auto outcome = routing::distributed_routing(one, p, 0.5);
    const auto direct = opt::solve_distributed(
        hop, p, 0.5, opt::build_normalization(one.routes, p, opt::RateModel::MinOfMeans));
    CHECK(outcome.best.t_hat == direct.t_hat);
    CHECK(outcome.best.objective == direct.objective);

    routing::RouteSet flat{{test::make_route({{0.1, 1}, {0.2, 1}}), test::make_route({{0.3, 1}, {0.05, 1}})}};
    CHECK(routing::distributed_routing(flat, p, 0.5).best.route_index == 0);

    const Scenario scenario = default_scenario();
    const auto set = routing::enumerate_routes(scenario.topology, 0, 8);
    for (double alpha : {0.0, 0.5, 1.0}) {
        const auto result = routing::distributed_routing(set, scenario.params, alpha);
        for (const auto& per_route : result.per_route) {
            CHECK(result.best.objective >= per_route.objective);
        }
        CHECK(result.best.t_hat.size() == result.route.size());
    }
}

TEST_CASE("topology validation") {
    Topology bad;
    bad.add_node(0, 0, 0);
    bad.add_node(1, std::nan(""), 0);
    bad.add_edge(0, 1, 0.1);
    CHECK_THROWS_AS(bad.validate(), Error);

    Topology zero;
    zero.add_node(0, 0, 0);
    zero.add_node(1, 1, 0);
    zero.add_edge(0, 1, 0.0);
    CHECK_THROWS_AS(zero.validate(), Error);

    Topology apart;
    apart.add_node(0, 0, 0);
    apart.add_node(1, 1, 0);
    CHECK_THROWS_AS(apart.validate(), Error);
    CHECK_THROWS_AS(apart.add_node(1, 2, 0), Error);
}
