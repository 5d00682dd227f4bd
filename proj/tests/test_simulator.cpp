#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "support.hpp"
#include "v2x/model_core.hpp"
#include "v2x/rng.hpp"
#include "v2x/routing.hpp"
#include "v2x/scenario.hpp"
#include "v2x/simulator.hpp"

using namespace v2x;
using v2x::test::make_hop;
using v2x::test::make_route;

namespace {

bool same_estimate(const sim::EmpiricalEstimate& a, const sim::EmpiricalEstimate& b) {
    return a.snapshots == b.snapshots && a.mean_latency == b.mean_latency &&
           a.se_latency == b.se_latency && a.mean_rate == b.mean_rate && a.se_rate == b.se_rate &&
           a.per_hop_mean_latency == b.per_hop_mean_latency &&
           a.per_hop_mean_rate == b.per_hop_mean_rate && a.branch_counts == b.branch_counts;
}

std::vector<std::pair<NodeId, NodeId>> route_links(const Route& route) {
    std::vector<std::pair<NodeId, NodeId>> links;
    for (const auto& hop : route.hops) links.emplace_back(hop.rsu_id, hop.next_rsu);
    return links;
}

}  // namespace

TEST_CASE("Philox4x32-10 known answers") {
    CHECK(rng::philox4x32({0, 0, 0, 0}, {0, 0}) ==
          rng::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(rng::philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                          {0xffffffffu, 0xffffffffu}) ==
          rng::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(rng::philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                          {0xa4093822u, 0x299f31d0u}) ==
          rng::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("substreams") {
    rng::Substream a(7, 3, 2), b(7, 3, 2), c(7, 3, 1), d(8, 3, 2);
    std::set<double> seen;
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
        CHECK(u == b.uniform());
        seen.insert(u);
    }
    CHECK(seen.size() == 1000);
    CHECK(c.uniform() != rng::Substream(7, 3, 2).uniform());
    CHECK(d.uniform() != rng::Substream(7, 3, 2).uniform());

    test::Moments moments;
    rng::Substream e(11, 0, 0);
    for (int i = 0; i < 200'000; ++i) moments.add(e.uniform());
    CHECK(std::abs(moments.mean() - 0.5) <= 4 * moments.se());
}

TEST_CASE("hop outcomes") {
    SystemParams p;
    for (std::uint64_t i = 0; i < 2000; ++i) {
        rng::Substream stream(3, i, 0);
        const auto forward = sim::simulate_hop(make_hop(0.1, 1), 8.0, p, stream);
        CHECK(forward.branch == sim::Branch::CourierForward);
        CHECK(forward.latency == p.T);
        CHECK(forward.hop_rate == p.r_o);
        CHECK(forward.discovery_time == 0.0);
    }
    for (auto mode : {sim::SamplingMode::Physical, sim::SamplingMode::Independent}) {
        for (std::uint64_t i = 0; i < 20'000; ++i) {
            rng::Substream stream(4, i, 0);
            const auto outcome = sim::simulate_hop(make_hop(0.2, 3), 0.0, p, stream, mode);
            CHECK(outcome.branch != sim::Branch::DiscoverySuccess);
        }
    }
    for (std::uint64_t i = 0; i < 20'000; ++i) {
        rng::Substream stream(5, i, 0);
        const auto outcome = sim::simulate_hop(make_hop(0.15, 3), 6.0, p, stream);
        switch (outcome.branch) {
            case sim::Branch::DiscoverySuccess:
                CHECK(outcome.latency == p.T);
                CHECK(outcome.discovery_time <= 6.0 + 1e-12);
                CHECK(outcome.hop_rate == doctest::Approx(
                          (p.r_v2v * (p.T - outcome.discovery_time) + p.r_o * (p.T - 6.0)) / p.T));
                break;
            case sim::Branch::DiscoveryFailure:
                CHECK(outcome.latency == doctest::Approx(2 * p.T + outcome.discovery_time));
                CHECK(outcome.hop_rate ==
                      doctest::Approx((p.r_v2i * (p.T - 6.0) + p.r_o * 6.0) / outcome.latency));
                break;
            case sim::Branch::CourierForward:
                CHECK(outcome.latency == p.T);
                break;
            default:
                FAIL("backhaul branch without backhaul");
        }
    }
}

TEST_CASE("branch frequencies converge to the analytic probabilities") {
    SystemParams p;
    const Hop hop = make_hop(0.1, 3);
    const double t = 8.0;
    const int n = 1'000'000;
    double forward = 0, success = 0, failure = 0;
    for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(n); ++i) {
        rng::Substream stream(9, i, 0);
        switch (sim::simulate_hop(hop, t, p, stream, sim::SamplingMode::Independent).branch) {
            case sim::Branch::CourierForward: ++forward; break;
            case sim::Branch::DiscoverySuccess: ++success; break;
            default: ++failure; break;
        }
    }
    auto within = [n](double count, double prob) {
        return std::abs(count / n - prob) <= 4 * std::sqrt(prob * (1 - prob) / n);
    };
    CHECK(within(forward, model::p_courier_forward(hop)));
    CHECK(within(success, model::p_success(hop, t, p)));
    CHECK(within(failure, model::p_failure(hop, t, p)));

    // Physical mode starts trials after the candidate arrives; report the gap.
    double physical_success = 0;
    for (std::uint64_t i = 0; i < 200'000; ++i) {
        rng::Substream stream(9, i, 0);
        physical_success += sim::simulate_hop(hop, t, p, stream).branch == sim::Branch::DiscoverySuccess;
    }
    MESSAGE("P(success): analytic " << model::p_success(hop, t, p) << ", physical mode "
                                    << physical_success / 200'000);
    CHECK(physical_success / 200'000 <= model::p_success(hop, t, p) + 0.01);
}

TEST_CASE("route simulation basics") {
    SystemParams p;
    sim::SimConfig config;
    config.snapshots = 500;
    const auto forward = sim::simulate_route(make_route({{0.1, 1}, {0.2, 1}, {0.3, 1}}), 5.0, p, config);
    CHECK(forward.mean_latency == 3 * p.T);
    CHECK(forward.se_latency == 0.0);
    CHECK(forward.mean_rate == p.r_o);

    const Route route = make_route({{0.1, 3}, {0.2, 2}, {0.15, 3}});
    for (std::uint64_t s = 0; s < 200; ++s) {
        const std::vector<double> t_hat{4.0, 8.0, 12.0};
        const auto snapshot = sim::simulate_snapshot(route, t_hat, p, config, s);
        double total = 0.0, weakest = 1e300;
        for (const auto& hop : snapshot.per_hop) {
            total += hop.latency;
            weakest = std::min(weakest, hop.hop_rate);
        }
        CHECK(snapshot.e2e_latency == doctest::Approx(total).epsilon(1e-14));
        CHECK(snapshot.e2e_rate == weakest);
    }

    const std::vector<double> short_vector{1.0};
    CHECK_THROWS_AS(sim::simulate_route(route, short_vector, p, config), Error);
    sim::SimConfig empty;
    empty.snapshots = 0;
    CHECK_THROWS_AS(empty.validate(), Error);
}

TEST_CASE("simulation is deterministic across runs and thread counts") {
    const Scenario scenario = default_scenario();
    const Route route = routing::spr_route(scenario.topology, 0, 8);
    sim::SimConfig config;
    config.snapshots = 1;
    config.seed = 99;
    config.threads = 1;
    CHECK(same_estimate(sim::simulate_route(route, 8.0, scenario.params, config),
                        sim::simulate_route(route, 8.0, scenario.params, config)));
    config.snapshots = 20'000;
    const auto single = sim::simulate_route(route, 8.0, scenario.params, config);
    for (unsigned threads : {2u, 3u, 8u}) {
        config.threads = threads;
        CHECK(same_estimate(single, sim::simulate_route(route, 8.0, scenario.params, config)));
    }
    config.seed = 100;
    CHECK_FALSE(same_estimate(single, sim::simulate_route(route, 8.0, scenario.params, config)));
}

TEST_CASE("backhaul forwarding") {
    const Scenario scenario = default_scenario();
    const SystemParams& p = scenario.params;
    const Route route = routing::spr_route(scenario.topology, 0, 8);
    sim::SimConfig config;
    config.snapshots = 20'000;
    config.seed = 7;

    const auto plain = sim::simulate_route(route, 0.0, p, config);
    const auto unlinked = sim::simulate_with_backhaul(route, 0.0, p, config, {});
    CHECK(same_estimate(plain, unlinked));

    const auto links = route_links(route);
    const auto linked = sim::simulate_with_backhaul(route, 0.0, p, config, links);
    CHECK(linked.mean_latency < plain.mean_latency);
    CHECK(linked.frequency(sim::Branch::BackhaulForward) > 0.0);
    CHECK(linked.frequency(sim::Branch::DiscoveryFailure) == 0.0);

    // Coupled snapshots: backhaul never lengthens a delivery.
    sim::SimConfig with = config;
    with.backhaul_enabled = true;
    const std::vector<double> t_hat(route.size(), 3.0);
    for (std::uint64_t s = 0; s < 5000; ++s) {
        const auto a = sim::simulate_snapshot(route, t_hat, p, config, s);
        const auto b = sim::simulate_snapshot(route, t_hat, p, with, s, links);
        CHECK(b.e2e_latency <= a.e2e_latency);
        for (std::size_t h = 0; h < route.size(); ++h) {
            if (a.per_hop[h].branch == sim::Branch::DiscoveryFailure) {
                CHECK(b.per_hop[h].branch == sim::Branch::BackhaulForward);
                CHECK(b.per_hop[h].latency == p.T);
                CHECK(b.per_hop[h].hop_rate ==
                      doctest::Approx((4 * p.r_v2i * (p.T - 3.0) + p.r_o * 3.0) / p.T));
            } else {
                CHECK(b.per_hop[h].branch == a.per_hop[h].branch);
                CHECK(b.per_hop[h].latency == a.per_hop[h].latency);
            }
        }
    }

    // A link that does not match the hop direction is not used.
    const std::vector<std::pair<NodeId, NodeId>> unrelated{{3, 6}};
    CHECK(same_estimate(plain, sim::simulate_with_backhaul(route, 0.0, p, config, unrelated)));
}

TEST_CASE("broadcast scheme table") {
    const auto table = sim::BroadcastTable::defaults();
    CHECK(sim::delta_t_for_scheme(sim::Scheme::TD, 1, table) == 0.1);
    for (int beams : {1, 2, 4, 8, 16}) {
        CHECK(sim::delta_t_for_scheme(sim::Scheme::FD, beams, table) ==
              sim::delta_t_for_scheme(sim::Scheme::CD, beams, table));
    }
    const double sd = sim::delta_t_for_scheme(sim::Scheme::SD, 4, table);
    CHECK(sd > 0.1);
    CHECK(sd < sim::delta_t_for_scheme(sim::Scheme::FD, 4, table));
    CHECK(table.validate().empty());

    CHECK_THROWS_AS(sim::delta_t_for_scheme(sim::Scheme::TD, 2, table), Error);
    CHECK_THROWS_AS(sim::delta_t_for_scheme(sim::Scheme::SD, 40, table), Error);
    try {
        sim::scheme_from_string("XD");
        FAIL("expected unknown scheme");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownScheme);
    }
    CHECK(sim::scheme_from_string("sd") == sim::Scheme::SD);

    auto broken = table;
    broken.entries[{sim::Scheme::TD, 1}] = 0.5;
    broken.entries[{sim::Scheme::CD, 2}] = 0.9;
    CHECK(broken.validate().size() >= 2);
}
