#include "v2x/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "v2x/types.hpp"

namespace v2x::quad {

namespace {

constexpr unsigned kMaxDepth = 20;
constexpr double kRelTol = 1e-11;

double integrate_panel(const std::function<double(double)>& f, double a, double b,
                       double abs_tol, double& error) {
    double panel_error = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        f, a, b, kMaxDepth, kRelTol, &panel_error);
    if (!std::isfinite(value) || panel_error > abs_tol) {
        std::ostringstream msg;
        msg << "adaptive quadrature on [" << a << ", " << b << "] reached error estimate "
            << panel_error << " above tolerance " << abs_tol;
        throw Error(ErrorCode::QuadratureNonconvergence, msg.str());
    }
    error += panel_error;
    return value;
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol) {
    return integrate(f, a, b, std::span<const double>{}, abs_tol);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 std::span<const double> breakpoints, double abs_tol) {
    if (!(b > a)) return 0.0;
    std::vector<double> edges{a};
    for (double x : breakpoints) {
        if (x > a && x < b) edges.push_back(x);
    }
    edges.push_back(b);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    const double per_panel = abs_tol / static_cast<double>(edges.size() - 1);
    double total = 0.0;
    double error = 0.0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        total += integrate_panel(f, edges[i], edges[i + 1], per_panel, error);
    }
    return total;
}

}  // namespace v2x::quad
