#include "v2x/simulator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "v2x/model_core.hpp"

namespace v2x::sim {

namespace {

double exponential(double u, double rate) { return -std::log(u) / rate; }

// First success index (>= 1) of Bernoulli(p) trials by inversion.
double first_success(double u, double p) {
    if (p >= 1.0) return 1.0;
    return 1.0 + std::floor(std::log(u) / std::log1p(-p));
}

bool linked(std::span<const std::pair<NodeId, NodeId>> links, NodeId a, NodeId b) {
    return std::any_of(links.begin(), links.end(), [&](const auto& link) {
        return (link.first == a && link.second == b) || (link.first == b && link.second == a);
    });
}

unsigned worker_count(const SimConfig& config) {
    unsigned n = config.threads;
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::uint64_t>(n, config.snapshots));
}

void check_windows(const Route& route, std::span<const double> t_hat,
                   const SystemParams& params) {
    if (t_hat.size() != route.size()) {
        throw Error(ErrorCode::InvalidArgument,
                    "per-hop window vector length does not match the hop count");
    }
    for (double t : t_hat) {
        if (!(t >= 0.0 && t <= params.T)) {
            throw Error(ErrorCode::InvalidArgument, "discovery window must lie in [0, T]");
        }
    }
}

}  // namespace

const char* to_string(Branch branch) {
    switch (branch) {
        case Branch::CourierForward: return "courier_forward";
        case Branch::DiscoverySuccess: return "discovery_success";
        case Branch::DiscoveryFailure: return "discovery_failure";
        case Branch::BackhaulForward: return "backhaul_forward";
    }
    return "?";
}

const char* to_string(SamplingMode mode) {
    return mode == SamplingMode::Physical ? "physical" : "independent";
}

SamplingMode sampling_mode_from_string(const std::string& name) {
    if (name == "physical") return SamplingMode::Physical;
    if (name == "independent") return SamplingMode::Independent;
    throw Error(ErrorCode::InvalidArgument, "unknown sampling mode '" + name + "'");
}

HopOutcome simulate_hop(const Hop& hop, double t, const SystemParams& params,
                        rng::Substream& stream, SamplingMode mode, BackhaulOption backhaul) {
    const double u_direction = stream.uniform();
    const double u_arrival = stream.uniform();
    const double u_trials = stream.uniform();
    const double u_rsu = stream.uniform();

    const double T = params.T;
    HopOutcome out;
    if (u_direction < 1.0 / hop.deg) {
        out.branch = Branch::CourierForward;
        out.latency = T;
        out.hop_rate = params.r_o;
        return out;
    }

    const int m = model::max_trials(t, params.delta_t);
    const double arrival = exponential(u_arrival, hop.lambda);
    const double first = first_success(u_trials, params.trial_success());

    double index = 0.0;  // trial at which discovery succeeds, 0 if none
    if (arrival <= t) {
        if (mode == SamplingMode::Independent) {
            index = first;
        } else {
            const double start = std::max(1.0, std::ceil(arrival / params.delta_t));
            index = start - 1.0 + first;
        }
        if (index > m) index = 0.0;
    }

    if (index > 0.0) {
        out.branch = Branch::DiscoverySuccess;
        out.discovery_time = index * params.delta_t;
        out.latency = T;
        out.hop_rate = params.r_v2v * (T - out.discovery_time) / T + params.r_o * (T - t) / T;
        return out;
    }

    if (backhaul.enabled) {
        out.branch = Branch::BackhaulForward;
        out.latency = T;
        out.hop_rate = (backhaul.rate * (T - t) + params.r_o * t) / T;
        return out;
    }

    out.branch = Branch::DiscoveryFailure;
    out.discovery_time = exponential(u_rsu, hop.lambda);
    out.latency = 2.0 * T + out.discovery_time;
    out.hop_rate = (params.r_v2i * (T - t) + params.r_o * t) / out.latency;
    return out;
}

void SimConfig::validate() const {
    if (snapshots < 1) throw Error(ErrorCode::InvalidArgument, "snapshot count must be >= 1");
    if (backhaul_rate && !(*backhaul_rate > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "backhaul rate must be positive");
    }
}

double EmpiricalEstimate::frequency(Branch branch) const {
    std::uint64_t total = 0;
    for (const auto& [b, count] : branch_counts) total += count;
    if (total == 0) return 0.0;
    auto it = branch_counts.find(branch);
    return it == branch_counts.end() ? 0.0 : static_cast<double>(it->second) / total;
}

SnapshotResult simulate_snapshot(const Route& route, std::span<const double> t_hat,
                                 const SystemParams& params, const SimConfig& config,
                                 std::uint64_t snapshot,
                                 std::span<const std::pair<NodeId, NodeId>> backhaul_links) {
    SnapshotResult out;
    out.e2e_rate = std::numeric_limits<double>::infinity();
    const double backhaul_rate = config.backhaul_rate.value_or(4.0 * params.r_v2i);
    for (std::size_t h = 0; h < route.size(); ++h) {
        const Hop& hop = route.hops[h];
        rng::Substream stream(config.seed, snapshot, static_cast<std::uint32_t>(h));
        BackhaulOption backhaul;
        backhaul.enabled =
            config.backhaul_enabled && linked(backhaul_links, hop.rsu_id, hop.next_rsu);
        backhaul.rate = backhaul_rate;
        auto outcome = simulate_hop(hop, t_hat[h], params, stream, config.mode, backhaul);
        out.e2e_latency += outcome.latency;
        out.e2e_rate = std::min(out.e2e_rate, outcome.hop_rate);
        out.per_hop.push_back(outcome);
    }
    return out;
}

namespace {

EmpiricalEstimate run(const Route& route, std::span<const double> t_hat,
                      const SystemParams& params, const SimConfig& config,
                      std::span<const std::pair<NodeId, NodeId>> links) {
    params.validate();
    route.validate();
    config.validate();
    check_windows(route, t_hat, params);

    const std::uint64_t n = config.snapshots;
    std::vector<SnapshotResult> results(n);
    const unsigned workers = worker_count(config);
    auto work = [&](std::uint64_t begin, std::uint64_t end) {
        for (std::uint64_t i = begin; i < end; ++i) {
            results[i] = simulate_snapshot(route, t_hat, params, config, i, links);
        }
    };
    if (workers <= 1) {
        work(0, n);
    } else {
        std::vector<std::thread> pool;
        const std::uint64_t chunk = (n + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            const std::uint64_t begin = w * chunk;
            const std::uint64_t end = std::min(n, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(work, begin, end);
        }
        for (auto& thread : pool) thread.join();
    }

    // Reduce in snapshot order so the result does not depend on scheduling.
    EmpiricalEstimate out;
    out.snapshots = n;
    out.per_hop_mean_latency.assign(route.size(), 0.0);
    out.per_hop_mean_rate.assign(route.size(), 0.0);
    double sum_l = 0.0, sum_r = 0.0;
    for (const auto& snap : results) {
        sum_l += snap.e2e_latency;
        sum_r += snap.e2e_rate;
        for (std::size_t h = 0; h < snap.per_hop.size(); ++h) {
            out.per_hop_mean_latency[h] += snap.per_hop[h].latency;
            out.per_hop_mean_rate[h] += snap.per_hop[h].hop_rate;
            ++out.branch_counts[snap.per_hop[h].branch];
        }
    }
    const double count = static_cast<double>(n);
    out.mean_latency = sum_l / count;
    out.mean_rate = sum_r / count;
    for (std::size_t h = 0; h < route.size(); ++h) {
        out.per_hop_mean_latency[h] /= count;
        out.per_hop_mean_rate[h] /= count;
    }
    if (n > 1) {
        double ss_l = 0.0, ss_r = 0.0;
        for (const auto& snap : results) {
            ss_l += (snap.e2e_latency - out.mean_latency) * (snap.e2e_latency - out.mean_latency);
            ss_r += (snap.e2e_rate - out.mean_rate) * (snap.e2e_rate - out.mean_rate);
        }
        out.se_latency = std::sqrt(ss_l / (count - 1.0) / count);
        out.se_rate = std::sqrt(ss_r / (count - 1.0) / count);
    }
    return out;
}

}  // namespace

EmpiricalEstimate simulate_route(const Route& route, double t, const SystemParams& params,
                                 const SimConfig& config) {
    const std::vector<double> t_hat(route.size(), t);
    return simulate_route(route, t_hat, params, config);
}

EmpiricalEstimate simulate_route(const Route& route, std::span<const double> t_hat,
                                 const SystemParams& params, const SimConfig& config) {
    SimConfig plain = config;
    plain.backhaul_enabled = false;
    return run(route, t_hat, params, plain, {});
}

EmpiricalEstimate simulate_with_backhaul(const Route& route, double t, const SystemParams& params,
                                         const SimConfig& config,
                                         std::span<const std::pair<NodeId, NodeId>> links) {
    const std::vector<double> t_hat(route.size(), t);
    return simulate_with_backhaul(route, t_hat, params, config, links);
}

EmpiricalEstimate simulate_with_backhaul(const Route& route, std::span<const double> t_hat,
                                         const SystemParams& params, const SimConfig& config,
                                         std::span<const std::pair<NodeId, NodeId>> links) {
    SimConfig with = config;
    with.backhaul_enabled = true;
    return run(route, t_hat, params, with, links);
}

// ---------------------------------------------------------------------------

const char* to_string(Scheme scheme) {
    switch (scheme) {
        case Scheme::TD: return "TD";
        case Scheme::FD: return "FD";
        case Scheme::CD: return "CD";
        case Scheme::SD: return "SD";
    }
    return "?";
}

Scheme scheme_from_string(const std::string& name) {
    std::string upper = name;
    for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (upper == "TD") return Scheme::TD;
    if (upper == "FD") return Scheme::FD;
    if (upper == "CD") return Scheme::CD;
    if (upper == "SD") return Scheme::SD;
    throw Error(ErrorCode::UnknownScheme, "unknown broadcast scheme '" + name + "'");
}

BroadcastTable BroadcastTable::defaults(int max_beams) {
    BroadcastTable table;
    table.entries[{Scheme::TD, 1}] = 0.1;
    for (int beams = 1; beams <= max_beams; ++beams) {
        table.entries[{Scheme::SD, beams}] = 0.1 * (1.0 + 0.05 * beams);
        table.entries[{Scheme::FD, beams}] = 0.1 * (1.0 + 0.1 * beams);
        table.entries[{Scheme::CD, beams}] = 0.1 * (1.0 + 0.1 * beams);
    }
    return table;
}

std::vector<std::string> BroadcastTable::validate() const {
    std::vector<std::string> warnings;
    auto td = entries.find({Scheme::TD, 1});
    if (td == entries.end()) {
        warnings.push_back("table has no TD entry for M = 1");
    }
    for (const auto& [key, value] : entries) {
        const auto [scheme, beams] = key;
        std::ostringstream where;
        where << to_string(scheme) << "@" << beams;
        if (!(value > 0.0)) warnings.push_back(where.str() + ": trial duration must be positive");
        if (scheme == Scheme::TD && beams != 1) {
            warnings.push_back(where.str() + ": TD is defined for a single beam only");
        }
        if (td != entries.end() && scheme != Scheme::TD && value < td->second) {
            warnings.push_back(where.str() + " is below TD@1; TD should be the fastest scheme");
        }
        if (scheme == Scheme::FD) {
            auto cd = entries.find({Scheme::CD, beams});
            if (cd == entries.end() || cd->second != value) {
                warnings.push_back(where.str() + " differs from CD@" + std::to_string(beams));
            }
        }
        if (scheme == Scheme::SD && td != entries.end()) {
            auto fd = entries.find({Scheme::FD, beams});
            if (fd != entries.end() && !(value >= td->second && value <= fd->second)) {
                warnings.push_back(where.str() + " is not between TD@1 and FD@" +
                                   std::to_string(beams));
            }
        }
    }
    return warnings;
}

double delta_t_for_scheme(Scheme scheme, int beams, const BroadcastTable& table) {
    if (beams < 1) throw Error(ErrorCode::InvalidArgument, "beam count must be >= 1");
    if (scheme == Scheme::TD && beams != 1) {
        throw Error(ErrorCode::InvalidArgument, "TD is a single-beam scan; M must be 1");
    }
    auto it = table.entries.find({scheme, beams});
    if (it == table.entries.end()) {
        throw Error(ErrorCode::InvalidArgument, std::string("no trial duration configured for ") +
                                                    to_string(scheme) + "@" +
                                                    std::to_string(beams));
    }
    return it->second;
}

}  // namespace v2x::sim
