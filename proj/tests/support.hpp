#pragma once

// Shared fixtures and independent sampling oracles for the unit tests. The
// oracles use std::mt19937_64 so they share no code with the simulator.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <utility>
#include <vector>

#include "v2x/types.hpp"

namespace v2x::test {

inline Hop make_hop(double lambda, int deg, NodeId id = 0) {
    Hop hop;
    hop.lambda = lambda;
    hop.deg = deg;
    hop.rsu_id = id;
    hop.next_rsu = id + 1;
    return hop;
}

/// Route with consecutive RSU ids starting at 0.
inline Route make_route(std::initializer_list<std::pair<double, int>> hops) {
    Route route;
    NodeId id = 0;
    for (const auto& [lambda, deg] : hops) route.hops.push_back(make_hop(lambda, deg, id++));
    route.source = 0;
    route.destination = id;
    return route;
}

/// Running mean and standard error.
struct Moments {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::uint64_t n = 0;

    void add(double x) {
        sum += x;
        sum_sq += x * x;
        ++n;
    }
    double mean() const { return sum / n; }
    double se() const {
        const double m = mean();
        const double var = (sum_sq - n * m * m) / (n - 1);
        return std::sqrt(std::max(var, 0.0) / n);
    }
};

class Oracle {
  public:
    explicit Oracle(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return unit_(engine_); }
    double exponential(double rate) { return std::exponential_distribution<double>(rate)(engine_); }
    bool bernoulli(double p) { return uniform() < p; }

    /// Index of the first success among Bernoulli(p) trials (>= 1).
    int geometric(double p) {
        int i = 1;
        while (!bernoulli(p)) ++i;
        return i;
    }

  private:
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

}  // namespace v2x::test
