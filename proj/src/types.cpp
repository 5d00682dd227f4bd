#include "v2x/types.hpp"

#include <cmath>
#include <set>

namespace v2x {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid-argument";
        case ErrorCode::InvalidRegime: return "invalid-regime";
        case ErrorCode::NoRoute: return "no-route";
        case ErrorCode::LoopDetected: return "loop-detected";
        case ErrorCode::QuadratureNonconvergence: return "quadrature-nonconvergence";
        case ErrorCode::UnknownScheme: return "unknown-scheme";
        case ErrorCode::ConfigParse: return "config-parse";
    }
    return "unknown";
}

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

}  // namespace

void SystemParams::validate() const {
    require(std::isfinite(T) && T > 0.0, "T must be positive");
    require(std::isfinite(delta_t) && delta_t > 0.0 && delta_t <= T,
            "delta_t must satisfy 0 < delta_t <= T");
    require(epsilon >= 0.0 && epsilon < 1.0, "epsilon must lie in [0, 1)");
    require(r_v2v >= 0.0 && r_v2i >= 0.0 && r_o >= 0.0, "rates must be non-negative");
    require(std::isfinite(r_v2v) && std::isfinite(r_v2i) && std::isfinite(r_o),
            "rates must be finite");
    require(alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0, 1]");
}

void Hop::validate() const {
    require(std::isfinite(lambda) && lambda > 0.0, "hop arrival rate must be positive");
    require(deg >= 1, "hop degree must be at least 1");
}

std::vector<NodeId> Route::nodes() const {
    std::vector<NodeId> out;
    out.reserve(hops.size() + 1);
    for (const auto& hop : hops) out.push_back(hop.rsu_id);
    out.push_back(hops.empty() ? source : hops.back().next_rsu);
    return out;
}

void Route::validate() const {
    require(!hops.empty(), "route must contain at least one hop");
    std::set<NodeId> seen;
    for (const auto& hop : hops) {
        hop.validate();
        require(seen.insert(hop.rsu_id).second, "route revisits an RSU");
    }
}

}  // namespace v2x
