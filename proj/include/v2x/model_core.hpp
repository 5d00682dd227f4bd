#pragma once

// Hop-wise probabilistic delivery model: event probabilities, expected
// latency and expected data rate of a single hop, and their end-to-end
// aggregation along a route.
//
// Every function is pure. `t` is the candidate discovery window and must lie
// in [0, T]; the number of discovery trials it admits is floor(t / delta_t),
// so all quantities are piecewise smooth in t with breaks at multiples of
// delta_t.

#include <span>
#include <string>
#include <vector>

#include "v2x/types.hpp"

namespace v2x::model {

/// Probability that the courier itself continues to the next hop (1/Deg).
double p_courier_forward(const Hop& hop);

/// floor(t / delta_t), snapping quotients within 1e-11 (relative) of an
/// integer so that t = j * delta_t computed in floating point yields j.
int max_trials(double t, double delta_t);

/// Courier does not continue and a candidate is found within the window.
double p_success(const Hop& hop, double t, const SystemParams& params);

/// Courier does not continue and discovery fails (data goes via the RSU).
double p_failure(const Hop& hop, double t, const SystemParams& params);

/// E[L] = P(fwd) T + P(succ) T + P(fail) (2T + 1/lambda).
double expected_hop_latency(const Hop& hop, double t, const SystemParams& params);

double expected_e2e_latency(const Route& route, double t, const SystemParams& params);

/// Per-hop windows (distributed configuration); `t_hat.size()` must equal
/// the hop count.
double expected_e2e_latency(const Route& route, std::span<const double> t_hat,
                            const SystemParams& params);

/// Expected hop rate with the candidate waits replaced by their mean 1/lambda.
double expected_hop_rate(const Hop& hop, double t, const SystemParams& params);

/// Rate of the weakest hop: min over hops of expected_hop_rate.
double e2e_rate_min_of_means(const Route& route, double t, const SystemParams& params);

double e2e_rate_min_of_means(const Route& route, std::span<const double> t_hat,
                             const SystemParams& params);

/// Per-hop and end-to-end expectations at a shared window t.
DeliveryEstimate estimate(const Route& route, double t, const SystemParams& params);

DeliveryEstimate estimate(const Route& route, std::span<const double> t_hat,
                          const SystemParams& params);

/// Hops whose mean candidate wait 1/lambda exceeds T, which drives the
/// mean-substituted success rate below r_O. Not an error, only reported.
std::vector<std::string> regime_warnings(const Route& route, const SystemParams& params);

}  // namespace v2x::model
