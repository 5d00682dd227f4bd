#include "v2x/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "v2x/model_core.hpp"
#include "v2x/quadrature.hpp"

namespace v2x::closed {

namespace {

void check_window(double t, const SystemParams& params) {
    if (!(t >= 0.0 && t <= params.T)) {
        throw Error(ErrorCode::InvalidArgument, "discovery window must lie in [0, T]");
    }
}

std::vector<double> arrival_rates(const Route& route) {
    std::vector<double> mu;
    mu.reserve(route.size());
    for (const auto& hop : route.hops) mu.push_back(hop.lambda);
    return mu;
}

bool every_hop_forwards(const Route& route) {
    return std::all_of(route.hops.begin(), route.hops.end(),
                       [](const Hop& hop) { return hop.deg == 1; });
}

// Upper integration limit beyond which the tail of E[max Exp(mu_h)] is
// below 1e-12.
double exponential_max_horizon(std::span<const double> mu) {
    const double slowest = *std::min_element(mu.begin(), mu.end());
    auto tail = [&](double u) {
        double bound = 0.0;
        for (double rate : mu) bound += std::exp(-rate * u) * (u + 1.0 / rate);
        return bound;
    };
    double upper = 1.0 / slowest;
    while (tail(upper) > 1e-12) upper *= 1.5;
    return upper;
}

// CDF of a single Geometric(p) conditioned on success within m trials.
double truncated_geometric_cdf(double p, int m, int j) {
    if (j <= 0) return 0.0;
    if (j >= m) return 1.0;
    if (p >= 1.0) return 1.0;
    return std::expm1(j * std::log1p(-p)) / std::expm1(m * std::log1p(-p));
}

}  // namespace

CoefficientSet coefficients(const Hop& hop, double t, const SystemParams& params) {
    check_window(t, params);
    const double T = params.T;
    const double mean_wait = 1.0 / hop.lambda;
    const int m = model::max_trials(t, params.delta_t);

    CoefficientSet c;
    c.alpha_h = 1.0 / static_cast<double>(hop.deg);
    c.beta_h = std::exp(-hop.lambda * t);
    c.theta_h = std::pow(1.0 - params.trial_success(), m);
    c.phi_h = T + mean_wait;
    c.zeta_h = c.alpha_h * params.r_o;
    c.iota_h = params.r_v2v * (T - mean_wait) / T + params.r_o;
    c.kappa_h = params.r_v2i * T / (2.0 * T + mean_wait);
    c.nu_h = -params.r_o / T * t;
    c.chi_h = (params.r_o - params.r_v2i) * t / (2.0 * T + mean_wait);
    c.z = c.beta_h + c.theta_h - c.beta_h * c.theta_h;
    return c;
}

double hop_latency_closed(const Hop& hop, double t, const SystemParams& params) {
    const auto c = coefficients(hop, t, params);
    return params.T + (1.0 - c.alpha_h) * c.phi_h * c.z;
}

double hop_rate_closed(const Hop& hop, double t, const SystemParams& params) {
    const auto c = coefficients(hop, t, params);
    return c.zeta_h + (1.0 - c.alpha_h) * (1.0 - c.z) * (c.iota_h + c.nu_h) +
           (1.0 - c.alpha_h) * c.z * (c.kappa_h + c.chi_h);
}

double e2e_latency_closed(const Route& route, double t, const SystemParams& params) {
    double total = static_cast<double>(route.size()) * params.T;
    for (const auto& hop : route.hops) {
        const auto c = coefficients(hop, t, params);
        total += (1.0 - c.alpha_h) * c.phi_h * c.z;
    }
    return total;
}

double geometric_max_cdf(double p, int n, int x) {
    if (x <= 0) return 0.0;
    // 1 - (1-p)^x, computed without cancellation for small p.
    const double single = p >= 1.0 ? 1.0 : -std::expm1(x * std::log1p(-p));
    return std::pow(single, n);
}

double geometric_max_pmf(double p, int n, int x) {
    if (!(p > 0.0 && p <= 1.0) || n < 1) {
        throw Error(ErrorCode::InvalidArgument, "geometric_max_pmf needs p in (0,1] and n >= 1");
    }
    if (x < 1) return 0.0;
    return geometric_max_cdf(p, n, x) - geometric_max_cdf(p, n, x - 1);
}

double exponential_max_cdf(std::span<const double> mu, double eta) {
    if (eta <= 0.0) return 0.0;
    double product = 1.0;
    for (double rate : mu) product *= -std::expm1(-rate * eta);
    return product;
}

double exponential_max_pdf(std::span<const double> mu, double eta) {
    if (eta < 0.0) return 0.0;
    double density = 0.0;
    for (std::size_t h = 0; h < mu.size(); ++h) {
        double term = mu[h] * std::exp(-mu[h] * eta);
        for (std::size_t l = 0; l < mu.size(); ++l) {
            if (l != h) term *= -std::expm1(-mu[l] * eta);
        }
        density += term;
    }
    return density;
}

double expected_exponential_max(std::span<const double> mu) {
    if (mu.empty() || std::any_of(mu.begin(), mu.end(), [](double r) { return !(r > 0.0); })) {
        throw Error(ErrorCode::InvalidArgument, "exponential rates must be positive");
    }
    const double upper = exponential_max_horizon(mu);
    const double slowest = *std::min_element(mu.begin(), mu.end());
    std::vector<double> cuts;
    for (double x = 1.0 / slowest; x < upper; x *= 2.0) cuts.push_back(x);
    return quad::integrate([&](double eta) { return eta * exponential_max_pdf(mu, eta); }, 0.0,
                           upper, cuts);
}

double expectation_from_survival(const std::function<double(double)>& cdf, double upper,
                                 std::span<const double> breakpoints) {
    if (!(upper >= 0.0) || 1.0 - cdf(upper) >= 1e-9) {
        throw Error(ErrorCode::InvalidArgument,
                    "survival at the truncation point must be below 1e-9");
    }
    return quad::integrate([&](double x) { return 1.0 - cdf(x); }, 0.0, upper, breakpoints);
}

double expected_max_discovery_time(int hops, int m, const SystemParams& params) {
    const double p = params.trial_success();
    double expectation = 0.0;
    for (int xi = 1; xi <= m; ++xi) {
        expectation += xi * geometric_max_pmf(p, hops, xi);
    }
    return expectation * params.delta_t;
}

double e_c_all_success(const Route& route, double t, const SystemParams& params) {
    return RouteModel(route, params).all_success(t);
}

double e_c_all_failure(const Route& route, double t, const SystemParams& params) {
    return RouteModel(route, params).all_failure(t);
}

MixtureTerms mixture_terms(const Route& route, double t, const SystemParams& params) {
    return RouteModel(route, params).mixture(t);
}

double e_c_mixture(const Route& route, double t, const SystemParams& params) {
    return mixture_terms(route, t, params).value;
}

ScenarioDecomposition scenario_probabilities(const Route& route, double t,
                                             const SystemParams& params) {
    ScenarioDecomposition d;
    d.p_all_success = 1.0;
    d.p_all_failure = 1.0;
    for (const auto& hop : route.hops) {
        d.p_all_success *= model::p_success(hop, t, params);
        d.p_all_failure *= model::p_failure(hop, t, params);
    }
    d.p_mixture = std::max(0.0, 1.0 - d.p_all_success - d.p_all_failure);
    return d;
}

ScenarioDecomposition decompose(const Route& route, double t, const SystemParams& params) {
    return RouteModel(route, params).decompose(t);
}

double e2e_rate_closed(const Route& route, double t, const SystemParams& params) {
    return RouteModel(route, params).rate(t);
}

// ---------------------------------------------------------------------------

RouteModel::RouteModel(Route route, SystemParams params)
    : route_(std::move(route)), params_(params) {
    route_.validate();
    params_.validate();
    mu_ = arrival_rates(route_);
    expected_max_wait_ = expected_exponential_max(mu_);
    all_forward_ = every_hop_forwards(route_);
}

double RouteModel::latency(double t) const { return e2e_latency_closed(route_, t, params_); }

double RouteModel::all_success(double t) const {
    check_window(t, params_);
    const int m = model::max_trials(t, params_.delta_t);
    if (m < 1) {
        throw Error(ErrorCode::InvalidRegime,
                    "all-success scenario needs at least one discovery trial");
    }
    const double T = params_.T;
    const double max_time =
        expected_max_discovery_time(static_cast<int>(route_.size()), m, params_);
    return (params_.r_v2v * (T - max_time) + params_.r_o * (T - t)) / T;
}

double RouteModel::all_failure(double t) const {
    check_window(t, params_);
    const double T = params_.T;
    return (params_.r_v2i * (T - t) + params_.r_o * t) / (2.0 * T + expected_max_wait_);
}

MixtureTerms RouteModel::mixture(double t) const {
    check_window(t, params_);
    if (route_.size() < 2) {
        throw Error(ErrorCode::InvalidArgument, "mixture scenario needs at least two hops");
    }
    const double T = params_.T;
    const double dt = params_.delta_t;
    const double p = params_.trial_success();
    const int k = static_cast<int>(route_.size());
    const int m = model::max_trials(t, dt);

    // min over hops of C_Failure = A / (2T + eta), eta = max RSU wait.
    const double amount = params_.r_v2i * (T - t) + params_.r_o * t;
    const double failure_sup = amount / (2.0 * T);
    auto failure_survival = [&](double x) {
        if (amount <= 0.0) return x < 0.0 ? 1.0 : 0.0;
        if (x <= 0.0) return 1.0;
        if (x >= failure_sup) return 0.0;
        return exponential_max_cdf(mu_, amount / x - 2.0 * T);
    };

    // min over hops of C_Success = c(xi), xi = max trial index, c decreasing.
    std::vector<double> support(static_cast<std::size_t>(m) + 1, 0.0);
    for (int j = 1; j <= m; ++j) {
        support[j] = (params_.r_v2v * (T - j * dt) + params_.r_o * (T - t)) / T;
    }
    auto max_index_cdf = [&](int j) {
        return std::pow(truncated_geometric_cdf(p, m, j), k);
    };
    auto success_survival = [&](double x) {
        if (m == 0) return 1.0;
        if (x >= support[1]) return 0.0;
        if (x < support[m]) return 1.0;
        // Largest j with support[j] > x; then x lies in [c(j+1), c(j)).
        int lo = 1, hi = m;
        while (lo < hi) {
            const int mid = (lo + hi + 1) / 2;
            if (support[mid] > x) lo = mid; else hi = mid - 1;
        }
        return max_index_cdf(lo);
    };

    MixtureTerms out;
    out.f_success_at_ro = 1.0 - success_survival(params_.r_o);
    out.f_failure_at_ro = 1.0 - failure_survival(params_.r_o);

    // E(rho) = integral of S_s * S_f; S_s is a step function, so integrate
    // S_f over the runs on which S_s is constant.
    const double upper = m == 0 ? failure_sup : std::min(support[1], failure_sup);
    struct Run { double from, to, level; };
    std::vector<Run> runs;
    if (m == 0) {
        runs.push_back({0.0, upper, 1.0});
    } else {
        runs.push_back({0.0, support[m], 1.0});
        for (int j = m - 1; j >= 1; --j) {
            const double level = max_index_cdf(j);
            if (level == runs.back().level) {
                runs.back().to = support[j];
            } else {
                runs.push_back({support[j + 1], support[j], level});
            }
        }
    }
    double expected_rho = 0.0;
    for (const auto& run : runs) {
        const double from = std::max(0.0, run.from);
        const double to = std::min(upper, run.to);
        if (to <= from || run.level == 0.0) continue;
        expected_rho += run.level * quad::integrate(failure_survival, from, to);
    }
    out.expected_rho = expected_rho;

    const double both = out.f_success_at_ro * out.f_failure_at_ro;
    out.value = (1.0 - both) * params_.r_o + both * expected_rho;
    return out;
}

ScenarioDecomposition RouteModel::decompose(double t) const {
    auto d = scenario_probabilities(route_, t, params_);
    if (all_forward_ || route_.size() < 2) {
        d.c_mixture = params_.r_o;
    } else if (d.p_mixture > 0.0) {
        d.c_mixture = mixture(t).value;
    }
    if (d.p_all_success > 0.0) d.c_all_success = all_success(t);
    if (d.p_all_failure > 0.0) d.c_all_failure = all_failure(t);
    return d;
}

double RouteModel::rate(double t) const {
    if (all_forward_) return params_.r_o;
    return decompose(t).expected_rate();
}

}  // namespace v2x::closed
