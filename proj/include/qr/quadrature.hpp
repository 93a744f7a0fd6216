#pragma once

#include <functional>

namespace qr {

/// Default absolute error target for adaptive quadrature.
inline constexpr double kQuadTol = 1e-10;

/// Hard cap on the number of bisected subintervals per integral.
inline constexpr int kQuadMaxIntervals = 1 << 14;

struct QuadResult {
    double value = 0.0;
    double error_estimate = 0.0;  // accumulated Kronrod error bound
    int intervals = 0;            // subintervals actually used
    bool converged = false;       // error_estimate <= tol on exit
};

/// Adaptive Gauss-Kronrod (7/15) integration of f over [a, b] with interval
/// bisection, worst-interval first. Never throws on non-convergence; the
/// caller decides whether a failed `converged` flag is an error.
[[nodiscard]] QuadResult integrate_adaptive(const std::function<double(double)>& f,
                                            double a, double b,
                                            double tol = kQuadTol,
                                            int max_intervals = kQuadMaxIntervals);

}  // namespace qr
