#pragma once

// Closed-form reformulation of the delivery model.
//
// Latency collapses to kT plus a per-hop correction driven by
// z(t) = beta + theta - beta*theta. The end-to-end rate is decomposed into
// three scenarios (every hop discovers a candidate, every hop fails, or a
// mixture) whose expected rates are built from order statistics: the
// maximum trial count over hops (geometric) and the maximum RSU candidate
// wait over hops (exponential).

#include <functional>
#include <span>
#include <vector>

#include "v2x/types.hpp"

namespace v2x::closed {

/// Reformulation shorthand for one hop at window t.
struct CoefficientSet {
    double alpha_h = 0.0;  // 1/Deg
    double beta_h = 0.0;   // exp(-lambda t)
    double theta_h = 0.0;  // (1-(1-eps)^2)^m
    double phi_h = 0.0;    // T + 1/lambda
    double zeta_h = 0.0;   // forwarding-branch rate contribution, alpha_h * r_O
    double iota_h = 0.0;   // r_V2V (T - 1/lambda)/T + r_O
    double kappa_h = 0.0;  // r_V2I T / (2T + 1/lambda)
    double nu_h = 0.0;     // -(r_O/T) t
    double chi_h = 0.0;    // (r_O - r_V2I) t / (2T + 1/lambda)
    double z = 0.0;        // beta + theta - beta*theta
};

CoefficientSet coefficients(const Hop& hop, double t, const SystemParams& params);

/// Expected hop latency T + (1-alpha_h) phi_h z.
double hop_latency_closed(const Hop& hop, double t, const SystemParams& params);

/// Expected hop rate zeta + (1-alpha_h)(1-z)(iota+nu) + (1-alpha_h) z (kappa+chi).
double hop_rate_closed(const Hop& hop, double t, const SystemParams& params);

/// kT + sum_h (1-alpha_h) phi_h z_h(t).
double e2e_latency_closed(const Route& route, double t, const SystemParams& params);

// ---------------------------------------------------------------------------
// Order statistics

/// PMF of the maximum of n iid Geometric(p) variables (support 1, 2, ...).
double geometric_max_pmf(double p, int n, int x);

/// CDF of the same maximum, P(max <= x).
double geometric_max_cdf(double p, int n, int x);

/// Density of the maximum of independent Exp(mu_h) variables.
double exponential_max_pdf(std::span<const double> mu, double eta);

/// P(max_h Exp(mu_h) <= eta).
double exponential_max_cdf(std::span<const double> mu, double eta);

/// E[max_h Exp(mu_h)] by quadrature of eta * pdf(eta).
double expected_exponential_max(std::span<const double> mu);

/// E[X] = integral of (1 - F) over [0, upper] for non-negative X.
///
/// `upper` must satisfy 1 - F(upper) < 1e-9 (Error{InvalidArgument}
/// otherwise). Discontinuities of F should be listed in `breakpoints`.
double expectation_from_survival(const std::function<double(double)>& cdf, double upper,
                                 std::span<const double> breakpoints = {});

// ---------------------------------------------------------------------------
// Scenario rates

/// sum_{xi=1..m} xi * geometric_max_pmf(p, k, xi) * delta_t (sum truncated at m).
double expected_max_discovery_time(int hops, int m, const SystemParams& params);

/// Expected rate when every hop discovers a candidate. Requires at least one
/// trial (m >= 1), Error{InvalidRegime} otherwise.
double e_c_all_success(const Route& route, double t, const SystemParams& params);

/// Expected rate when every hop falls back to its RSU.
double e_c_all_failure(const Route& route, double t, const SystemParams& params);

/// Pieces of the mixture-scenario rate.
struct MixtureTerms {
    double f_success_at_ro = 0.0;  // P(min_h C_Success,h <= r_O)
    double f_failure_at_ro = 0.0;  // P(min_l C_Failure,l <= r_O)
    double expected_rho = 0.0;     // E[min(min C_Success, min C_Failure)]
    double value = 0.0;
};

/// (1 - Fs(r_O) Ff(r_O)) r_O + Fs(r_O) Ff(r_O) E(rho). Requires k >= 2.
MixtureTerms mixture_terms(const Route& route, double t, const SystemParams& params);

double e_c_mixture(const Route& route, double t, const SystemParams& params);

struct ScenarioDecomposition {
    double p_all_success = 0.0;
    double p_all_failure = 0.0;
    double p_mixture = 0.0;
    double c_all_success = 0.0;
    double c_all_failure = 0.0;
    double c_mixture = 0.0;

    double expected_rate() const {
        return p_all_success * c_all_success + p_all_failure * c_all_failure +
               p_mixture * c_mixture;
    }
};

/// Probabilities only; the rate fields are left at zero.
ScenarioDecomposition scenario_probabilities(const Route& route, double t,
                                             const SystemParams& params);

/// Full decomposition. Scenario rates with zero probability are not
/// evaluated and stay zero.
ScenarioDecomposition decompose(const Route& route, double t, const SystemParams& params);

/// Expected end-to-end rate as the probability-weighted scenario sum.
double e2e_rate_closed(const Route& route, double t, const SystemParams& params);

/// Route-bound evaluator caching the t-independent pieces (the expected
/// maximum RSU wait) for repeated evaluation over a t grid.
class RouteModel {
  public:
    RouteModel(Route route, SystemParams params);

    const Route& route() const { return route_; }
    const SystemParams& params() const { return params_; }

    double latency(double t) const;
    double rate(double t) const;
    ScenarioDecomposition decompose(double t) const;
    MixtureTerms mixture(double t) const;
    double all_success(double t) const;
    double all_failure(double t) const;

    double expected_max_rsu_wait() const { return expected_max_wait_; }

  private:
    Route route_;
    SystemParams params_;
    std::vector<double> mu_;
    double expected_max_wait_ = 0.0;
    bool all_forward_ = false;
};

}  // namespace v2x::closed
