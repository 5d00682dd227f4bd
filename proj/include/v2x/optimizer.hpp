#pragma once

// Weighted-sum optimization of the candidate discovery window.
//
// The objective alpha * C_norm - (1 - alpha) * L_norm is piecewise smooth in
// t: the trial count floor(t / delta_t) jumps at every multiple of delta_t.
// Maximization therefore runs piece by piece; each piece contributes its
// left end, its left limit at the right end, and its interior local maxima.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "v2x/closed_form.hpp"
#include "v2x/types.hpp"

namespace v2x::opt {

/// Which estimator supplies the end-to-end rate of a route.
enum class RateModel {
    MinOfMeans,  // min over hops of the expected hop rate
    ClosedForm,  // three-scenario decomposition
};

const char* to_string(RateModel model);
RateModel rate_model_from_string(const std::string& name);

/// End-to-end latency and rate of one route as functions of a shared t.
class RouteEvaluator {
  public:
    RouteEvaluator(const Route& route, const SystemParams& params, RateModel model);

    double latency(double t) const;
    double rate(double t) const;

    const Route& route() const { return route_; }
    const SystemParams& params() const { return params_; }
    RateModel model() const { return model_; }

  private:
    Route route_;
    SystemParams params_;
    RateModel model_;
    std::shared_ptr<const closed::RouteModel> closed_;
};

/// Breakpoints j * delta_t (including 0 and T) plus interior points and the
/// left limit of every smooth piece.
std::vector<double> evaluation_grid(const SystemParams& params);

struct NormalizationContext {
    double latency_min = 0.0;
    double latency_max = 0.0;
    double rate_min = 0.0;
    double rate_max = 0.0;
    std::vector<double> grid;

    /// (x - min) / (max - min), or 0 when the range is degenerate.
    double norm_latency(double latency) const;
    double norm_rate(double rate) const;

    /// Widen the ranges to include one more (latency, rate) observation.
    void include(double latency, double rate);
};

/// Min/max of latency and rate over routes x evaluation grid.
NormalizationContext build_normalization(std::span<const Route> routes,
                                         const SystemParams& params, RateModel model);

NormalizationContext build_normalization(std::span<const RouteEvaluator> routes);

/// Hop-wise context over the hop's own expected latency/rate series.
NormalizationContext build_hop_normalization(const Hop& hop, const SystemParams& params);

double weighted_sum(double alpha, double norm_rate, double norm_latency);

struct OptimizationOutcome {
    double objective = 0.0;
    double t_star = 0.0;             // global window
    std::vector<double> t_hat;       // per-hop windows (distributed)
    std::vector<double> hop_objective;  // per-hop optimum (distributed)
    std::size_t route_index = 0;
    double e2e_latency = 0.0;
    double e2e_rate = 0.0;
};

struct ScalarMaximum {
    double t = 0.0;
    double value = 0.0;
};

/// Maximize f over [0, T] under the piecewise structure induced by delta_t.
/// Ties resolve to the smaller t.
ScalarMaximum maximize_piecewise(const std::function<double(double)>& f,
                                 const SystemParams& params);

/// Normalized global objective of one route.
std::function<double(double)> global_objective(const RouteEvaluator& route, double alpha,
                                               const NormalizationContext& norm);

/// Normalized hop-wise objective.
std::function<double(double)> hop_objective(const Hop& hop, const SystemParams& params,
                                            double alpha, const NormalizationContext& hop_norm);

OptimizationOutcome solve_global(const RouteEvaluator& route, double alpha,
                                 const NormalizationContext& norm);

OptimizationOutcome solve_global(const Route& route, const SystemParams& params, double alpha,
                                 const NormalizationContext& norm,
                                 RateModel model = RateModel::MinOfMeans);

/// Range used to normalize hop-wise latency and rate in the distributed solve.
enum class HopNormalization {
    PerHop,  // each hop's own series over the grid
    Shared,  // the end-to-end context
};

/// Per-hop optimization; the returned objective evaluates the resulting
/// route (sum of hop latencies, weakest hop rate) under the shared
/// end-to-end context `norm`.
OptimizationOutcome solve_distributed(const Route& route, const SystemParams& params, double alpha,
                                      const NormalizationContext& norm,
                                      HopNormalization hop_norm = HopNormalization::PerHop);

struct ConcavityReport {
    std::size_t pieces = 0;
    std::size_t interior_points = 0;
    std::size_t concave_points = 0;
    std::size_t fully_concave_pieces = 0;
    double max_second_difference = 0.0;

    double fraction() const {
        return interior_points == 0 ? 1.0
                                    : static_cast<double>(concave_points) / interior_points;
    }
};

/// Second-difference scan of alpha * C - (1 - alpha) * L (unnormalized)
/// restricted to each smooth piece. Points with second difference
/// <= 1e-9 count as concave.
ConcavityReport verify_concavity(const RouteEvaluator& route, double alpha,
                                 int points_per_piece = 16);

ConcavityReport verify_concavity(const std::function<double(double)>& f,
                                 const SystemParams& params, int points_per_piece = 16);

struct KktReport {
    bool ok = false;
    std::optional<double> left_derivative;
    std::optional<double> right_derivative;
    double tolerance = 0.0;
};

/// One-sided stationarity test at t_star: the objective may not increase when
/// leaving t_star within its smooth piece. Piece edges (0, T, multiples of
/// delta_t, left limits) only constrain the side that stays inside the piece.
KktReport kkt_report(double t_star, const std::function<double(double)>& f,
                     const SystemParams& params);

bool kkt_stationarity_check(double t_star, const std::function<double(double)>& f,
                            const SystemParams& params);

bool kkt_stationarity_check(double t_star, const RouteEvaluator& route, double alpha,
                            const NormalizationContext& norm);

/// Offset used for the left-limit candidate of each piece.
double left_limit_offset(const SystemParams& params);

}  // namespace v2x::opt
