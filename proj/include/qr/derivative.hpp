#pragma once

#include <functional>

#include "qr/errors.hpp"
#include "qr/quaternion.hpp"

namespace qr {

inline constexpr double kFdStepDefault = 1e-3;

/// Fourth-order five-point derivative of f at t. The stencil slides to one
/// side when t is within two steps of the domain boundary [lo, hi], so the
/// order is preserved up to the edge.
inline double fd_derivative(const std::function<double(double)>& f, double t,
                            double h = kFdStepDefault,
                            double lo = -std::numeric_limits<double>::infinity(),
                            double hi = std::numeric_limits<double>::infinity()) {
    if (t < lo || t > hi) throw OutOfDomain("derivative requested outside the domain");
    // Shift so the five nodes base + {0,1,2,3,4} h all lie inside [lo, hi];
    // `pos` is the index of t within the stencil.
    int pos = 2;
    if (t - 2 * h < lo) pos = static_cast<int>(std::floor((t - lo) / h + 1e-9));
    if (t + 2 * h > hi) pos = 4 - static_cast<int>(std::floor((hi - t) / h + 1e-9));
    pos = std::min(std::max(pos, 0), 4);
    const double base = t - pos * h;
    static const double w[5][5] = {
        {-25.0, 48.0, -36.0, 16.0, -3.0}, {-3.0, -10.0, 18.0, -6.0, 1.0},
        {1.0, -8.0, 0.0, 8.0, -1.0},      {-1.0, 6.0, -18.0, 10.0, 3.0},
        {3.0, -16.0, 36.0, -48.0, 25.0},
    };
    double acc = 0.0;
    for (int i = 0; i < 5; ++i) acc += w[pos][i] * f(base + i * h);
    return acc / (12.0 * h);
}

inline Quat fd_derivative(const std::function<Quat(double)>& f, double t,
                          double h = kFdStepDefault,
                          double lo = -std::numeric_limits<double>::infinity(),
                          double hi = std::numeric_limits<double>::infinity()) {
    Quat out;
    for (int n = 0; n < 4; ++n) {
        out[n] = fd_derivative([&f, n](double s) { return f(s)[n]; }, t, h, lo, hi);
    }
    return out;
}

}  // namespace qr
