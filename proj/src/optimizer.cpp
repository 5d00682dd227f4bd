#include "v2x/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "v2x/model_core.hpp"

namespace v2x::opt {

namespace {

struct Piece {
    double from = 0.0;
    double to = 0.0;        // exclusive unless closed
    bool closed = false;    // true only for the piece ending at T

    double last() const { return to; }
};

// Smooth pieces of [0, T]. A piece is [j dt, (j+1) dt); the final piece is
// closed at T. When T is itself a breakpoint it forms a single-point piece.
std::vector<Piece> smooth_pieces(const SystemParams& params) {
    const double T = params.T;
    const double dt = params.delta_t;
    const double delta = left_limit_offset(params);
    const int breaks = model::max_trials(T, dt);
    std::vector<Piece> pieces;
    for (int j = 0; j <= breaks; ++j) {
        const double from = j * dt;
        if (model::max_trials(from, dt) == breaks && std::abs(from - T) <= 1e-9 * T) {
            pieces.push_back({T, T, true});
            break;
        }
        const double next = (j + 1) * dt;
        if (j == breaks || next >= T) {
            pieces.push_back({from, T, true});
            break;
        }
        pieces.push_back({from, next - delta, false});
    }
    return pieces;
}

double golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                          double tol, ScalarMaximum& best) {
    constexpr double kInvPhi = 0.6180339887498949;
    double x1 = hi - kInvPhi * (hi - lo);
    double x2 = lo + kInvPhi * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    while (hi - lo > tol) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kInvPhi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kInvPhi * (hi - lo);
            f1 = f(x1);
        }
    }
    const double x = f1 >= f2 ? x1 : x2;
    best = {x, std::max(f1, f2)};
    return x;
}

void consider(ScalarMaximum& best, bool& any, double t, double value) {
    if (!any || value > best.value || (value == best.value && t < best.t)) {
        best = {t, value};
        any = true;
    }
}

double normalize(double x, double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    return (x - lo) / (hi - lo);
}

}  // namespace

const char* to_string(RateModel model) {
    return model == RateModel::ClosedForm ? "closed-form" : "min-of-means";
}

RateModel rate_model_from_string(const std::string& name) {
    if (name == "closed-form" || name == "closed") return RateModel::ClosedForm;
    if (name == "min-of-means" || name == "min") return RateModel::MinOfMeans;
    throw Error(ErrorCode::InvalidArgument, "unknown rate model '" + name + "'");
}

double left_limit_offset(const SystemParams& params) { return 1e-6 * params.delta_t; }

// ---------------------------------------------------------------------------

RouteEvaluator::RouteEvaluator(const Route& route, const SystemParams& params, RateModel model)
    : route_(route), params_(params), model_(model) {
    route_.validate();
    params_.validate();
    if (model_ == RateModel::ClosedForm) {
        closed_ = std::make_shared<const closed::RouteModel>(route_, params_);
    }
}

double RouteEvaluator::latency(double t) const {
    return model::expected_e2e_latency(route_, t, params_);
}

double RouteEvaluator::rate(double t) const {
    if (closed_) return closed_->rate(t);
    return model::e2e_rate_min_of_means(route_, t, params_);
}

// ---------------------------------------------------------------------------

std::vector<double> evaluation_grid(const SystemParams& params) {
    std::vector<double> grid;
    for (const auto& piece : smooth_pieces(params)) {
        grid.push_back(piece.from);
        const double width = piece.last() - piece.from;
        if (width > 0.0) {
            for (int i = 1; i <= 3; ++i) grid.push_back(piece.from + width * i / 4.0);
            grid.push_back(piece.last());
        }
    }
    grid.push_back(params.T);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

double NormalizationContext::norm_latency(double latency) const {
    return normalize(latency, latency_min, latency_max);
}

double NormalizationContext::norm_rate(double rate) const {
    return normalize(rate, rate_min, rate_max);
}

void NormalizationContext::include(double latency, double rate) {
    latency_min = std::min(latency_min, latency);
    latency_max = std::max(latency_max, latency);
    rate_min = std::min(rate_min, rate);
    rate_max = std::max(rate_max, rate);
}

namespace {

NormalizationContext empty_context(const SystemParams& params) {
    NormalizationContext ctx;
    constexpr double inf = std::numeric_limits<double>::infinity();
    ctx.latency_min = inf;
    ctx.latency_max = -inf;
    ctx.rate_min = inf;
    ctx.rate_max = -inf;
    ctx.grid = evaluation_grid(params);
    return ctx;
}

// Latency is non-increasing in t, so the grid end points bound it; the rate
// can peak inside a piece and gets its extrema located explicitly.
void include_rate_extrema(NormalizationContext& ctx, const std::function<double(double)>& rate,
                          const SystemParams& params) {
    const double top = maximize_piecewise(rate, params).value;
    const double bottom = -maximize_piecewise([&](double t) { return -rate(t); }, params).value;
    ctx.rate_max = std::max(ctx.rate_max, top);
    ctx.rate_min = std::min(ctx.rate_min, bottom);
}

}  // namespace

NormalizationContext build_normalization(std::span<const Route> routes,
                                         const SystemParams& params, RateModel model) {
    std::vector<RouteEvaluator> evaluators;
    evaluators.reserve(routes.size());
    for (const auto& route : routes) evaluators.emplace_back(route, params, model);
    return build_normalization(evaluators);
}

NormalizationContext build_normalization(std::span<const RouteEvaluator> routes) {
    if (routes.empty()) {
        throw Error(ErrorCode::InvalidArgument, "normalization needs at least one route");
    }
    auto ctx = empty_context(routes.front().params());
    for (const auto& route : routes) {
        for (double t : ctx.grid) ctx.include(route.latency(t), route.rate(t));
        include_rate_extrema(ctx, [&](double t) { return route.rate(t); }, route.params());
    }
    return ctx;
}

NormalizationContext build_hop_normalization(const Hop& hop, const SystemParams& params) {
    auto ctx = empty_context(params);
    for (double t : ctx.grid) {
        ctx.include(model::expected_hop_latency(hop, t, params),
                    model::expected_hop_rate(hop, t, params));
    }
    include_rate_extrema(
        ctx, [&](double t) { return model::expected_hop_rate(hop, t, params); }, params);
    return ctx;
}

double weighted_sum(double alpha, double norm_rate, double norm_latency) {
    return alpha * norm_rate - (1.0 - alpha) * norm_latency;
}

// ---------------------------------------------------------------------------

ScalarMaximum maximize_piecewise(const std::function<double(double)>& f,
                                 const SystemParams& params) {
    constexpr int kSamples = 8;
    const double tol = 1e-10 * params.T;

    ScalarMaximum best;
    bool any = false;
    consider(best, any, 0.0, f(0.0));

    for (const auto& piece : smooth_pieces(params)) {
        const double width = piece.last() - piece.from;
        if (width <= 0.0) {
            consider(best, any, piece.from, f(piece.from));
            continue;
        }
        std::vector<double> xs(kSamples + 1);
        std::vector<double> fs(kSamples + 1);
        for (int i = 0; i <= kSamples; ++i) {
            xs[i] = i == kSamples ? piece.last() : piece.from + width * i / kSamples;
            fs[i] = f(xs[i]);
            consider(best, any, xs[i], fs[i]);
        }
        // Every sampled local max (piece ends included) brackets a true one.
        for (int i = 0; i <= kSamples; ++i) {
            const int left = i > 0 ? i - 1 : i;
            const int right = i < kSamples ? i + 1 : i;
            if (fs[left] > fs[i] || fs[right] > fs[i]) continue;
            if (fs[left] == fs[i] && fs[right] == fs[i]) continue;
            ScalarMaximum local;
            golden_section_max(f, xs[left], xs[right], tol, local);
            consider(best, any, local.t, local.value);
        }
    }
    return best;
}

std::function<double(double)> global_objective(const RouteEvaluator& route, double alpha,
                                               const NormalizationContext& norm) {
    return [&route, alpha, &norm](double t) {
        return weighted_sum(alpha, norm.norm_rate(route.rate(t)),
                            norm.norm_latency(route.latency(t)));
    };
}

std::function<double(double)> hop_objective(const Hop& hop, const SystemParams& params,
                                            double alpha, const NormalizationContext& hop_norm) {
    return [hop, params, alpha, &hop_norm](double t) {
        return weighted_sum(alpha, hop_norm.norm_rate(model::expected_hop_rate(hop, t, params)),
                            hop_norm.norm_latency(model::expected_hop_latency(hop, t, params)));
    };
}

OptimizationOutcome solve_global(const RouteEvaluator& route, double alpha,
                                 const NormalizationContext& norm) {
    const auto best = maximize_piecewise(global_objective(route, alpha, norm), route.params());
    OptimizationOutcome out;
    out.objective = best.value;
    out.t_star = best.t;
    out.e2e_latency = route.latency(best.t);
    out.e2e_rate = route.rate(best.t);
    return out;
}

OptimizationOutcome solve_global(const Route& route, const SystemParams& params, double alpha,
                                 const NormalizationContext& norm, RateModel model) {
    const RouteEvaluator evaluator(route, params, model);
    return solve_global(evaluator, alpha, norm);
}

OptimizationOutcome solve_distributed(const Route& route, const SystemParams& params, double alpha,
                                      const NormalizationContext& norm,
                                      HopNormalization hop_norm) {
    route.validate();
    params.validate();
    OptimizationOutcome out;
    for (const auto& hop : route.hops) {
        const auto context =
            hop_norm == HopNormalization::PerHop ? build_hop_normalization(hop, params) : norm;
        const auto best = maximize_piecewise(hop_objective(hop, params, alpha, context), params);
        out.t_hat.push_back(best.t);
        out.hop_objective.push_back(best.value);
    }
    out.e2e_latency = model::expected_e2e_latency(route, out.t_hat, params);
    out.e2e_rate = model::e2e_rate_min_of_means(route, out.t_hat, params);
    out.objective =
        weighted_sum(alpha, norm.norm_rate(out.e2e_rate), norm.norm_latency(out.e2e_latency));
    return out;
}

// ---------------------------------------------------------------------------

ConcavityReport verify_concavity(const std::function<double(double)>& f,
                                 const SystemParams& params, int points_per_piece) {
    ConcavityReport report;
    for (const auto& piece : smooth_pieces(params)) {
        const double width = piece.last() - piece.from;
        if (width <= 0.0) continue;
        ++report.pieces;
        const double step = width / points_per_piece;
        std::vector<double> fs(points_per_piece + 1);
        for (int i = 0; i <= points_per_piece; ++i) fs[i] = f(piece.from + step * i);
        bool piece_concave = true;
        for (int i = 1; i < points_per_piece; ++i) {
            const double second = fs[i - 1] - 2.0 * fs[i] + fs[i + 1];
            ++report.interior_points;
            report.max_second_difference = std::max(report.max_second_difference, second);
            if (second <= 1e-9) {
                ++report.concave_points;
            } else {
                piece_concave = false;
            }
        }
        if (piece_concave) ++report.fully_concave_pieces;
    }
    return report;
}

ConcavityReport verify_concavity(const RouteEvaluator& route, double alpha, int points_per_piece) {
    return verify_concavity(
        [&](double t) { return alpha * route.rate(t) - (1.0 - alpha) * route.latency(t); },
        route.params(), points_per_piece);
}

KktReport kkt_report(double t_star, const std::function<double(double)>& f,
                     const SystemParams& params) {
    KktReport report;
    const double T = params.T;
    const double dt = params.delta_t;
    const double h = 1e-4 * dt;
    const double delta = left_limit_offset(params);
    const double value = f(t_star);
    report.tolerance = 1e-6 * std::max(1.0, std::abs(value));

    if (t_star < 0.0 || t_star > T) return report;

    const int j = model::max_trials(t_star, dt);
    const double piece_from = std::min(j * dt, T);
    const double piece_end = std::min((j + 1) * dt - delta, T);
    const double edge = 1e-12 * T;

    const bool at_T = std::abs(t_star - T) <= edge;
    const bool at_piece_start = std::abs(t_star - piece_from) <= edge;
    const bool at_piece_end = t_star >= piece_end - edge;

    // Left derivative: inside the same piece, or, at T, inside the piece that
    // ends at T.
    if (at_T) {
        const double x1 = T - 2.0 * h;
        const double x0 = T - h;
        report.left_derivative = (f(x0) - f(x1)) / h;
    } else if (!at_piece_start) {
        const double x0 = std::max(piece_from, t_star - h);
        report.left_derivative = (value - f(x0)) / (t_star - x0);
    }
    if (!at_T && !at_piece_end) {
        const double x1 = std::min(piece_end, t_star + h);
        report.right_derivative = (f(x1) - value) / (x1 - t_star);
    }

    const bool left_ok = !report.left_derivative || *report.left_derivative >= -report.tolerance;
    const bool right_ok = !report.right_derivative || *report.right_derivative <= report.tolerance;
    report.ok = left_ok && right_ok;
    return report;
}

bool kkt_stationarity_check(double t_star, const std::function<double(double)>& f,
                            const SystemParams& params) {
    return kkt_report(t_star, f, params).ok;
}

bool kkt_stationarity_check(double t_star, const RouteEvaluator& route, double alpha,
                            const NormalizationContext& norm) {
    return kkt_stationarity_check(t_star, global_objective(route, alpha, norm), route.params());
}

}  // namespace v2x::opt
