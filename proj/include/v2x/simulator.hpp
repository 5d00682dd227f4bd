#pragma once

// Monte Carlo delivery simulator. Each snapshot walks the route hop by hop;
// every hop consumes exactly four uniforms from its own (seed, snapshot, hop)
// substream, so runs with and without backhaul see the same randomness.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "v2x/rng.hpp"
#include "v2x/types.hpp"

namespace v2x::sim {

enum class Branch { CourierForward, DiscoverySuccess, DiscoveryFailure, BackhaulForward };

const char* to_string(Branch branch);

enum class SamplingMode {
    Physical,     // trials start at the first slot after the candidate arrives
    Independent,  // arrival and trial outcomes drawn independently
};

const char* to_string(SamplingMode mode);
SamplingMode sampling_mode_from_string(const std::string& name);

struct HopOutcome {
    Branch branch = Branch::CourierForward;
    double latency = 0.0;
    double discovery_time = 0.0;  // vehicle or RSU discovery time; 0 when the courier forwards
    double hop_rate = 0.0;
};

/// Backhaul handling for one hop; disabled when `enabled` is false.
struct BackhaulOption {
    bool enabled = false;
    double rate = 0.0;
};

/// One hop realization. Draws four uniforms from `stream` regardless of the
/// branch taken.
HopOutcome simulate_hop(const Hop& hop, double t, const SystemParams& params,
                        rng::Substream& stream, SamplingMode mode = SamplingMode::Physical,
                        BackhaulOption backhaul = {});

struct SimConfig {
    std::uint64_t snapshots = 1000;
    std::uint64_t seed = 1;
    bool backhaul_enabled = false;
    std::optional<double> backhaul_rate;  // defaults to 4 * r_V2I
    SamplingMode mode = SamplingMode::Physical;
    unsigned threads = 0;  // 0 = hardware concurrency

    void validate() const;
};

struct SnapshotResult {
    double e2e_latency = 0.0;
    double e2e_rate = 0.0;
    std::vector<HopOutcome> per_hop;
};

struct EmpiricalEstimate {
    std::uint64_t snapshots = 0;
    double mean_latency = 0.0;
    double se_latency = 0.0;
    double mean_rate = 0.0;
    double se_rate = 0.0;
    std::vector<double> per_hop_mean_latency;
    std::vector<double> per_hop_mean_rate;
    std::map<Branch, std::uint64_t> branch_counts;  // summed over hops

    /// Branch frequency over all hop realizations.
    double frequency(Branch branch) const;
};

/// Single snapshot with the given per-hop windows.
SnapshotResult simulate_snapshot(const Route& route, std::span<const double> t_hat,
                                 const SystemParams& params, const SimConfig& config,
                                 std::uint64_t snapshot,
                                 std::span<const std::pair<NodeId, NodeId>> backhaul_links = {});

EmpiricalEstimate simulate_route(const Route& route, double t, const SystemParams& params,
                                 const SimConfig& config);

EmpiricalEstimate simulate_route(const Route& route, std::span<const double> t_hat,
                                 const SystemParams& params, const SimConfig& config);

/// Failures at hops whose RSU is linked to the next RSU are forwarded over
/// the backhaul instead of waiting for a candidate.
EmpiricalEstimate simulate_with_backhaul(const Route& route, double t, const SystemParams& params,
                                         const SimConfig& config,
                                         std::span<const std::pair<NodeId, NodeId>> links);

EmpiricalEstimate simulate_with_backhaul(const Route& route, std::span<const double> t_hat,
                                         const SystemParams& params, const SimConfig& config,
                                         std::span<const std::pair<NodeId, NodeId>> links);

// --- broadcast schemes -----------------------------------------------------

enum class Scheme { TD, FD, CD, SD };

const char* to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& name);

/// Trial duration per (scheme, beam count).
struct BroadcastTable {
    std::map<std::pair<Scheme, int>, double> entries;

    /// TD@1 = 0.1, SD@M = 0.1 (1 + 0.05 M), FD@M = CD@M = 0.1 (1 + 0.1 M).
    static BroadcastTable defaults(int max_beams = 16);

    /// Ordering checks; each violated property yields one warning line.
    std::vector<std::string> validate() const;

    friend bool operator==(const BroadcastTable&, const BroadcastTable&) = default;
};

double delta_t_for_scheme(Scheme scheme, int beams, const BroadcastTable& table);

}  // namespace v2x::sim
