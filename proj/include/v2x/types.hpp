#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace v2x {

enum class ErrorCode {
    InvalidArgument,
    InvalidRegime,
    NoRoute,
    LoopDetected,
    QuadratureNonconvergence,
    UnknownScheme,
    ConfigParse,
};

const char* to_string(ErrorCode code);

/// Library-wide exception; `code()` distinguishes the failure class.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

using NodeId = int;

/// Global constants shared by every hop of every route.
///
/// Rates are in arbitrary but consistent units per second; only their
/// ratios matter to the weighted-sum objective after normalization.
struct SystemParams {
    double T = 20.0;          // hop dwell time [s]
    double delta_t = 0.1;     // duration of one discovery trial [s]
    double epsilon = 1e-3;    // per-message decode error probability
    double r_v2v = 2.0;
    double r_v2i = 1.5;
    double r_o = 1.0;         // cellular service rate of the RSU
    double alpha = 0.5;       // rate weight of the weighted sum

    /// Throws Error{InvalidArgument} when an invariant is violated.
    void validate() const;

    /// Per-trial success probability (1-eps)^2.
    double trial_success() const { return (1.0 - epsilon) * (1.0 - epsilon); }

    friend bool operator==(const SystemParams&, const SystemParams&) = default;
};

struct Hop {
    double lambda = 0.1;  // arrival rate of vehicles heading to the next hop [1/s]
    int deg = 1;          // exit directions at the hop's end, U-turn excluded
    NodeId rsu_id = 0;    // RSU covering the hop
    NodeId next_rsu = 0;  // RSU of the following hop (or the destination)

    void validate() const;

    friend bool operator==(const Hop&, const Hop&) = default;
};

struct Route {
    std::vector<Hop> hops;
    NodeId source = 0;
    NodeId destination = 0;

    std::size_t size() const { return hops.size(); }

    /// Node sequence source, ..., destination.
    std::vector<NodeId> nodes() const;

    /// Non-empty, every hop valid, no RSU repeated.
    void validate() const;

    friend bool operator==(const Route&, const Route&) = default;
};

/// Expected (or empirical) delivery performance of one route at one setting.
struct DeliveryEstimate {
    double e2e_latency = 0.0;
    double e2e_rate = 0.0;
    std::vector<double> per_hop_latency;
    std::vector<double> per_hop_rate;
};

}  // namespace v2x
