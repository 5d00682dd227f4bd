#pragma once

#include <functional>
#include <span>

namespace v2x::quad {

/// Absolute error target used throughout the closed-form expectations.
inline constexpr double kAbsTol = 1e-8;

/// Adaptive Gauss-Kronrod (7/15) integral of f over [a, b].
///
/// Throws Error{QuadratureNonconvergence} if the estimated absolute error
/// exceeds `abs_tol`.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = kAbsTol);

/// Same, but splits [a, b] at the given interior points first (kinks or
/// jumps of the integrand).
double integrate(const std::function<double(double)>& f, double a, double b,
                 std::span<const double> breakpoints, double abs_tol = kAbsTol);

}  // namespace v2x::quad
