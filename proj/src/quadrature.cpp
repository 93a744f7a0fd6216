#include "qr/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

namespace qr {
namespace {

// 15-point Kronrod nodes on [-1, 1] (positive half) with the embedded
// 7-point Gauss rule on the odd-indexed nodes. Standard QUADPACK constants.
constexpr double kNodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

constexpr double kWeightsKronrod[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

constexpr double kWeightsGauss[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct PanelEstimate {
    double value;
    double error;
};

PanelEstimate gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double kronrod = fc * kWeightsKronrod[7];
    double gauss = fc * kWeightsGauss[3];
    for (int i = 0; i < 7; ++i) {
        const double lo = f(c - h * kNodes[i]);
        const double hi = f(c + h * kNodes[i]);
        kronrod += (lo + hi) * kWeightsKronrod[i];
        if (i % 2 == 1) gauss += (lo + hi) * kWeightsGauss[i / 2];
    }
    const double value = kronrod * h;
    // |K15 - G7| is a conservative bound for smooth integrands; adaptivity
    // only needs it to rank panels consistently.
    return {value, std::abs((kronrod - gauss) * h)};
}

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

}  // namespace

QuadResult integrate_adaptive(const std::function<double(double)>& f,
                              double a, double b, double tol, int max_intervals) {
    QuadResult out;
    if (a == b) {
        out.converged = true;
        return out;
    }
    const double sign = (b >= a) ? 1.0 : -1.0;
    const double lo = std::min(a, b), hi = std::max(a, b);

    std::priority_queue<Panel> queue;
    PanelEstimate first = gk15(f, lo, hi);
    queue.push({lo, hi, first.value, first.error});
    double total_value = first.value;
    double total_error = first.error;
    int used = 1;

    while (total_error > tol && used < max_intervals) {
        Panel worst = queue.top();
        queue.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // Interval at roundoff resolution; keep its estimate as-is.
            queue.push({worst.a, worst.b, worst.value, 0.0});
            total_error -= worst.error;
            continue;
        }
        PanelEstimate left = gk15(f, worst.a, mid);
        PanelEstimate right = gk15(f, mid, worst.b);
        total_value += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        queue.push({worst.a, mid, left.value, left.error});
        queue.push({mid, worst.b, right.value, right.error});
        ++used;
    }

    out.value = sign * total_value;
    out.error_estimate = total_error;
    out.intervals = used;
    out.converged = total_error <= tol;
    return out;
}

}  // namespace qr
