#include "v2x/model_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace v2x::model {

namespace {

void check_window(double t, const SystemParams& params) {
    if (!(t >= 0.0 && t <= params.T)) {
        throw Error(ErrorCode::InvalidArgument, "discovery window must lie in [0, T]");
    }
}

void check_vector(const Route& route, std::span<const double> t_hat) {
    if (t_hat.size() != route.size()) {
        throw Error(ErrorCode::InvalidArgument,
                    "per-hop window vector length does not match the hop count");
    }
}

// (1 - (1-eps)^2)^m: probability that all m trials fail.
double all_trials_fail(double t, const SystemParams& params) {
    const int m = max_trials(t, params.delta_t);
    return std::pow(1.0 - params.trial_success(), m);
}

}  // namespace

double p_courier_forward(const Hop& hop) { return 1.0 / static_cast<double>(hop.deg); }

int max_trials(double t, double delta_t) {
    if (t <= 0.0) return 0;
    const double q = t / delta_t;
    const double nearest = std::round(q);
    if (std::abs(q - nearest) <= 1e-11 * std::max(1.0, q)) return static_cast<int>(nearest);
    return static_cast<int>(std::floor(q));
}

double p_success(const Hop& hop, double t, const SystemParams& params) {
    check_window(t, params);
    const double not_forward = 1.0 - p_courier_forward(hop);
    const double arrival = -std::expm1(-hop.lambda * t);
    return not_forward * arrival * (1.0 - all_trials_fail(t, params));
}

double p_failure(const Hop& hop, double t, const SystemParams& params) {
    check_window(t, params);
    const double not_forward = 1.0 - p_courier_forward(hop);
    const double no_arrival = std::exp(-hop.lambda * t);
    const double arrival = -std::expm1(-hop.lambda * t);
    return not_forward * (arrival * all_trials_fail(t, params) + no_arrival);
}

double expected_hop_latency(const Hop& hop, double t, const SystemParams& params) {
    const double T = params.T;
    const double fwd = p_courier_forward(hop);
    const double succ = p_success(hop, t, params);
    const double fail = p_failure(hop, t, params);
    return fwd * T + succ * T + fail * (2.0 * T + 1.0 / hop.lambda);
}

double expected_e2e_latency(const Route& route, double t, const SystemParams& params) {
    double total = 0.0;
    for (const auto& hop : route.hops) total += expected_hop_latency(hop, t, params);
    return total;
}

double expected_e2e_latency(const Route& route, std::span<const double> t_hat,
                            const SystemParams& params) {
    check_vector(route, t_hat);
    double total = 0.0;
    for (std::size_t h = 0; h < route.size(); ++h) {
        total += expected_hop_latency(route.hops[h], t_hat[h], params);
    }
    return total;
}

double expected_hop_rate(const Hop& hop, double t, const SystemParams& params) {
    const double T = params.T;
    const double mean_wait = 1.0 / hop.lambda;
    const double fwd = p_courier_forward(hop);
    const double succ = p_success(hop, t, params);
    const double fail = p_failure(hop, t, params);

    const double rate_success = params.r_v2v * (T - mean_wait) / T + params.r_o * (T - t) / T;
    const double rate_failure =
        (params.r_v2i * (T - t) + params.r_o * t) / (2.0 * T + mean_wait);
    return fwd * params.r_o + succ * rate_success + fail * rate_failure;
}

double e2e_rate_min_of_means(const Route& route, double t, const SystemParams& params) {
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& hop : route.hops) lowest = std::min(lowest, expected_hop_rate(hop, t, params));
    return lowest;
}

double e2e_rate_min_of_means(const Route& route, std::span<const double> t_hat,
                             const SystemParams& params) {
    check_vector(route, t_hat);
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t h = 0; h < route.size(); ++h) {
        lowest = std::min(lowest, expected_hop_rate(route.hops[h], t_hat[h], params));
    }
    return lowest;
}

DeliveryEstimate estimate(const Route& route, double t, const SystemParams& params) {
    const std::vector<double> t_hat(route.size(), t);
    return estimate(route, t_hat, params);
}

DeliveryEstimate estimate(const Route& route, std::span<const double> t_hat,
                          const SystemParams& params) {
    check_vector(route, t_hat);
    DeliveryEstimate out;
    out.e2e_rate = std::numeric_limits<double>::infinity();
    for (std::size_t h = 0; h < route.size(); ++h) {
        const double latency = expected_hop_latency(route.hops[h], t_hat[h], params);
        const double rate = expected_hop_rate(route.hops[h], t_hat[h], params);
        out.per_hop_latency.push_back(latency);
        out.per_hop_rate.push_back(rate);
        out.e2e_latency += latency;
        out.e2e_rate = std::min(out.e2e_rate, rate);
    }
    return out;
}

std::vector<std::string> regime_warnings(const Route& route, const SystemParams& params) {
    std::vector<std::string> out;
    for (std::size_t h = 0; h < route.size(); ++h) {
        const auto& hop = route.hops[h];
        if (1.0 / hop.lambda > params.T) {
            std::ostringstream msg;
            msg << "hop " << h << " (RSU " << hop.rsu_id << "): mean candidate wait "
                << 1.0 / hop.lambda << " s exceeds T = " << params.T << " s";
            out.push_back(msg.str());
        }
    }
    return out;
}

}  // namespace v2x::model
