#include "qr/coeffs.hpp"

#include <algorithm>
#include <cmath>

#include "qr/quadrature.hpp"

namespace qr {
namespace {

double horner(const std::vector<double>& c, double t) {
    double v = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * t + *it;
    return v;
}

bool all_zero(const std::vector<double>& c) {
    return std::all_of(c.begin(), c.end(), [](double v) { return v == 0.0; });
}

std::vector<double> negated(std::vector<double> c) {
    for (double& v : c) v = -v;
    return c;
}

double eval_bump(const ScalarBump& b, double t) {
    const double u = (2.0 * t - (b.lo + b.hi)) / (b.hi - b.lo);
    if (std::abs(u) >= 1.0) return 0.0;
    return b.amp * std::exp(1.0 - 1.0 / (1.0 - u * u));
}

// integral_T^inf t^k exp(-beta t) dt for T >= 0, by repeated parts.
double poly_exp_tail_term(int k, double beta, double T) {
    double sum = 0.0;
    double fact_ratio = 1.0;  // k!/(k-m)! built incrementally
    double Tk = std::pow(T, k);
    for (int m = 0; m <= k; ++m) {
        sum += fact_ratio * Tk / std::pow(beta, m + 1);
        fact_ratio *= static_cast<double>(k - m);
        if (T != 0.0) Tk /= T;
        else Tk = (m == k - 1) ? 1.0 : 0.0;  // T^0 = 1 handled at m = k
    }
    return std::exp(-beta * T) * sum;
}

// Natural cubic spline second derivatives, one Thomas sweep per component.
void build_spline(CoeffTable& table) {
    const size_t n = table.grid.size();
    for (int comp = 0; comp < 4; ++comp) {
        auto& m = table.second_derivs[comp];
        m.assign(n, 0.0);
        if (!table.cubic || n < 3) continue;
        const size_t interior = n - 2;
        std::vector<double> cp(interior, 0.0), dp(interior, 0.0);
        double prev_cp = 0.0, prev_dp = 0.0;
        for (size_t k = 0; k < interior; ++k) {
            const size_t i = k + 1;
            const double h0 = table.grid[i] - table.grid[i - 1];
            const double h1 = table.grid[i + 1] - table.grid[i];
            const double sub = (k == 0) ? 0.0 : h0;
            const double diag = 2.0 * (h0 + h1);
            const double sup = (k + 1 == interior) ? 0.0 : h1;
            const double rhs =
                6.0 * ((table.samples[i + 1][comp] - table.samples[i][comp]) / h1 -
                       (table.samples[i][comp] - table.samples[i - 1][comp]) / h0);
            const double denom = diag - sub * prev_cp;
            cp[k] = sup / denom;
            dp[k] = (rhs - sub * prev_dp) / denom;
            prev_cp = cp[k];
            prev_dp = dp[k];
        }
        for (size_t k = interior; k-- > 0;) {
            m[k + 1] = dp[k] - cp[k] * ((k + 1 < interior) ? m[k + 2] : 0.0);
        }
    }
}

double eval_table_component(const CoeffTable& tb, int comp, double t) {
    const auto& g = tb.grid;
    auto it = std::upper_bound(g.begin(), g.end(), t);
    size_t hi = std::min<size_t>(std::max<ptrdiff_t>(it - g.begin(), 1), g.size() - 1);
    const size_t lo = hi - 1;
    const double h = g[hi] - g[lo];
    const double u = (t - g[lo]) / h;
    const double ylo = tb.samples[lo][comp], yhi = tb.samples[hi][comp];
    if (!tb.cubic) return ylo + u * (yhi - ylo);
    const double mlo = tb.second_derivs[comp][lo], mhi = tb.second_derivs[comp][hi];
    const double a = 1.0 - u, b = u;
    return a * ylo + b * yhi +
           ((a * a * a - a) * mlo + (b * b * b - b) * mhi) * h * h / 6.0;
}

}  // namespace

double eval(const ScalarFn& f, double t) {
    return std::visit(
        [t](const auto& g) -> double {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, ScalarZero>) {
                return 0.0;
            } else if constexpr (std::is_same_v<T, ScalarConst>) {
                return g.c;
            } else if constexpr (std::is_same_v<T, ScalarPoly>) {
                return horner(g.coeffs, t);
            } else if constexpr (std::is_same_v<T, ScalarPolyExp>) {
                return horner(g.coeffs, t) * std::exp(g.alpha * t);
            } else if constexpr (std::is_same_v<T, ScalarPolyTrig>) {
                const double ph = g.omega * t + g.phase;
                return horner(g.coeffs, t) * (g.use_sin ? std::sin(ph) : std::cos(ph));
            } else {
                return eval_bump(g, t);
            }
        },
        f);
}

ScalarFn negate(const ScalarFn& f) {
    return std::visit(
        [](const auto& g) -> ScalarFn {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, ScalarZero>) {
                return g;
            } else if constexpr (std::is_same_v<T, ScalarConst>) {
                return ScalarConst{-g.c};
            } else if constexpr (std::is_same_v<T, ScalarPoly>) {
                return ScalarPoly{negated(g.coeffs)};
            } else if constexpr (std::is_same_v<T, ScalarPolyExp>) {
                return ScalarPolyExp{negated(g.coeffs), g.alpha};
            } else if constexpr (std::is_same_v<T, ScalarPolyTrig>) {
                return ScalarPolyTrig{negated(g.coeffs), g.omega, g.phase, g.use_sin};
            } else {
                ScalarBump b = g;
                b.amp = -b.amp;
                return b;
            }
        },
        f);
}

bool is_identically_zero(const ScalarFn& f) {
    return std::visit(
        [](const auto& g) -> bool {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, ScalarZero>) {
                return true;
            } else if constexpr (std::is_same_v<T, ScalarConst>) {
                return g.c == 0.0;
            } else if constexpr (std::is_same_v<T, ScalarPoly>) {
                return all_zero(g.coeffs);
            } else if constexpr (std::is_same_v<T, ScalarPolyExp>) {
                return all_zero(g.coeffs);
            } else if constexpr (std::is_same_v<T, ScalarPolyTrig>) {
                return all_zero(g.coeffs);
            } else {
                return g.amp == 0.0;
            }
        },
        f);
}

TailEstimate tail_beyond(const ScalarFn& f, double T) {
    if (is_identically_zero(f)) return {TailKind::Vanishes, 0.0};
    return std::visit(
        [T](const auto& g) -> TailEstimate {
            using Ty = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<Ty, ScalarPolyExp>) {
                if (g.alpha >= 0.0) return {TailKind::NonConvergent, 0.0};
                const double beta = -g.alpha;
                double bound = 0.0;
                const double Tp = std::max(T, 0.0);
                for (size_t k = 0; k < g.coeffs.size(); ++k) {
                    if (g.coeffs[k] == 0.0) continue;
                    bound += std::abs(g.coeffs[k]) *
                             poly_exp_tail_term(static_cast<int>(k), beta, Tp);
                }
                if (T < 0.0) {
                    // Crude sup bound over [T, 0] for the unusual negative case.
                    double sup = 0.0;
                    for (int i = 0; i <= 16; ++i) {
                        const double s = T + (0.0 - T) * i / 16.0;
                        sup = std::max(sup, std::abs(horner(g.coeffs, s)) * std::exp(g.alpha * s));
                    }
                    bound += sup * (0.0 - T);
                }
                return {TailKind::Bounded, bound};
            } else if constexpr (std::is_same_v<Ty, ScalarBump>) {
                if (T >= g.hi) return {TailKind::Vanishes, 0.0};
                return {TailKind::Bounded, std::abs(g.amp) * (g.hi - std::max(T, g.lo))};
            } else {
                (void)T;
                return {TailKind::NonConvergent, 0.0};
            }
        },
        f);
}

// ---------------------------------------------------------------------------

CoeffFn CoeffFn::zero() { return CoeffFn{CoeffComponents{}, -std::numeric_limits<double>::infinity()}; }

CoeffFn CoeffFn::constant(const Quat& q) {
    CoeffComponents c;
    for (int n = 0; n < 4; ++n) c.parts[n] = ScalarConst{q[n]};
    return CoeffFn{std::move(c), -std::numeric_limits<double>::infinity()};
}

CoeffFn CoeffFn::componentwise(std::array<ScalarFn, 4> parts) {
    return CoeffFn{CoeffComponents{std::move(parts)},
                   -std::numeric_limits<double>::infinity()};
}

CoeffFn CoeffFn::table(std::vector<double> grid, std::vector<Quat> samples, bool cubic) {
    CoeffTable tb;
    tb.grid = std::move(grid);
    tb.samples = std::move(samples);
    tb.cubic = cubic;
    build_spline(tb);
    CoeffFn f;
    f.t_min = tb.grid.front();
    f.impl = std::move(tb);
    return f;
}

Quat eval(const CoeffFn& f, double t) {
    if (t < f.t_min)
        throw OutOfDomain("coefficient evaluated before the start of its domain");
    if (const auto* tb = std::get_if<CoeffTable>(&f.impl)) {
        if (t > tb->grid.back())
            throw OutOfDomain("coefficient table evaluated beyond its grid");
        return {eval_table_component(*tb, 0, t), eval_table_component(*tb, 1, t),
                eval_table_component(*tb, 2, t), eval_table_component(*tb, 3, t)};
    }
    const auto& c = std::get<CoeffComponents>(f.impl);
    return {eval(c.parts[0], t), eval(c.parts[1], t), eval(c.parts[2], t),
            eval(c.parts[3], t)};
}

CoeffFn negate(const CoeffFn& f) {
    CoeffFn out;
    out.t_min = f.t_min;
    if (const auto* tb = std::get_if<CoeffTable>(&f.impl)) {
        CoeffTable neg = *tb;
        for (Quat& q : neg.samples) q = -q;
        build_spline(neg);
        out.impl = std::move(neg);
    } else {
        const auto& c = std::get<CoeffComponents>(f.impl);
        CoeffComponents neg;
        for (int n = 0; n < 4; ++n) neg.parts[n] = negate(c.parts[n]);
        out.impl = std::move(neg);
    }
    return out;
}

bool is_identically_zero(const CoeffFn& f) {
    if (const auto* tb = std::get_if<CoeffTable>(&f.impl)) {
        return std::all_of(tb->samples.begin(), tb->samples.end(),
                           [](const Quat& q) { return q == Quat::zero(); });
    }
    const auto& c = std::get<CoeffComponents>(f.impl);
    return std::all_of(c.parts.begin(), c.parts.end(),
                       [](const ScalarFn& s) { return is_identically_zero(s); });
}

bool component_identically_zero(const CoeffFn& f, int n) {
    if (const auto* tb = std::get_if<CoeffTable>(&f.impl)) {
        return std::all_of(tb->samples.begin(), tb->samples.end(),
                           [n](const Quat& q) { return q[n] == 0.0; });
    }
    return is_identically_zero(std::get<CoeffComponents>(f.impl).parts[n]);
}

Quat integrate(const CoeffFn& f, double t1, double t2, double tol) {
    double out[4];
    for (int n = 0; n < 4; ++n) {
        const auto r = integrate_adaptive(
            [&f, n](double t) { return eval(f, t)[n]; }, t1, t2, tol);
        if (!r.converged)
            throw ToleranceNotMet("component " + std::to_string(n) +
                                  " quadrature error " + std::to_string(r.error_estimate) +
                                  " above target after " + std::to_string(r.intervals) +
                                  " intervals");
        out[n] = r.value;
    }
    return {out[0], out[1], out[2], out[3]};
}

ImproperIntegral integrate_to_infinity(const CoeffFn& f, double t1, double horizon,
                                       double tol) {
    ImproperIntegral out;
    out.value = integrate(f, t1, horizon, tol);
    if (std::holds_alternative<CoeffTable>(f.impl))
        throw OutOfDomain("sampled coefficient has no tail beyond its grid");
    const auto& c = std::get<CoeffComponents>(f.impl);
    for (const auto& part : c.parts) {
        const TailEstimate te = tail_beyond(part, horizon);
        if (te.kind == TailKind::NonConvergent) {
            out.tail = te;
            return out;
        }
        if (te.kind == TailKind::Bounded) {
            out.tail.kind = TailKind::Bounded;
            out.tail.bound += te.bound;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

double require_number(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number()) throw SchemaError(path, "expected a number");
    return j.get<double>();
}

std::vector<double> require_number_array(const nlohmann::json& j, const std::string& path) {
    if (!j.is_array()) throw SchemaError(path, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (size_t i = 0; i < j.size(); ++i)
        out.push_back(require_number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

nlohmann::ordered_json poly_json(const std::vector<double>& c) {
    return nlohmann::ordered_json(c);
}

}  // namespace

Quat parse_quat(const nlohmann::json& j, const std::string& path) {
    if (j.is_number()) return Quat::real(j.get<double>());
    const auto v = require_number_array(j, path);
    if (v.size() != 4) throw SchemaError(path, "expected 4 components");
    return {v[0], v[1], v[2], v[3]};
}

ScalarFn parse_scalar_fn(const nlohmann::json& j, const std::string& path) {
    if (j.is_number()) {
        const double c = j.get<double>();
        if (c == 0.0) return ScalarZero{};
        return ScalarConst{c};
    }
    if (!j.is_object()) throw SchemaError(path, "expected a number or an object");
    if (j.contains("bump")) {
        const auto& b = j.at("bump");
        if (!b.is_object()) throw SchemaError(path + ".bump", "expected an object");
        ScalarBump out;
        out.amp = require_number(b.at("amp"), path + ".bump.amp");
        const auto support = require_number_array(b.at("support"), path + ".bump.support");
        if (support.size() != 2 || support[0] >= support[1])
            throw SchemaError(path + ".bump.support", "expected [lo, hi] with lo < hi");
        out.lo = support[0];
        out.hi = support[1];
        return out;
    }
    if (!j.contains("poly")) throw SchemaError(path, "unknown scalar function kind");
    std::vector<double> coeffs = require_number_array(j.at("poly"), path + ".poly");
    const bool has_exp = j.contains("exp");
    const bool has_cos = j.contains("cos");
    const bool has_sin = j.contains("sin");
    if (has_exp + has_cos + has_sin > 1)
        throw SchemaError(path, "at most one of exp/cos/sin may be given");
    if (has_exp)
        return ScalarPolyExp{std::move(coeffs), require_number(j.at("exp"), path + ".exp")};
    if (has_cos || has_sin) {
        ScalarPolyTrig out;
        out.coeffs = std::move(coeffs);
        out.omega = require_number(j.at(has_sin ? "sin" : "cos"),
                                   path + (has_sin ? ".sin" : ".cos"));
        out.phase = j.contains("phase") ? require_number(j.at("phase"), path + ".phase") : 0.0;
        out.use_sin = has_sin;
        return out;
    }
    return ScalarPoly{std::move(coeffs)};
}

CoeffFn parse_coeff_fn(const nlohmann::json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    if (j.contains("zero")) return CoeffFn::zero();
    if (j.contains("const")) return CoeffFn::constant(parse_quat(j.at("const"), path + ".const"));
    if (j.contains("components")) {
        const auto& arr = j.at("components");
        if (!arr.is_array() || arr.size() != 4)
            throw SchemaError(path + ".components", "expected 4 scalar functions");
        std::array<ScalarFn, 4> parts;
        for (int n = 0; n < 4; ++n)
            parts[n] = parse_scalar_fn(arr[n], path + ".components[" + std::to_string(n) + "]");
        return CoeffFn::componentwise(std::move(parts));
    }
    if (j.contains("table")) {
        const auto& tb = j.at("table");
        if (!tb.is_object()) throw SchemaError(path + ".table", "expected an object");
        auto grid = require_number_array(tb.at("t"), path + ".table.t");
        if (grid.size() < 2) throw SchemaError(path + ".table.t", "need at least 2 points");
        for (size_t i = 1; i < grid.size(); ++i)
            if (grid[i] <= grid[i - 1])
                throw SchemaError(path + ".table.t", "grid must be strictly increasing");
        const auto& vals = tb.at("values");
        if (!vals.is_array() || vals.size() != grid.size())
            throw SchemaError(path + ".table.values", "expected one sample per grid point");
        std::vector<Quat> samples;
        samples.reserve(vals.size());
        for (size_t i = 0; i < vals.size(); ++i)
            samples.push_back(
                parse_quat(vals[i], path + ".table.values[" + std::to_string(i) + "]"));
        bool cubic = true;
        if (tb.contains("interp")) {
            const auto& interp = tb.at("interp");
            if (!interp.is_string()) throw SchemaError(path + ".table.interp", "expected a string");
            const std::string s = interp.get<std::string>();
            if (s == "linear") cubic = false;
            else if (s == "cubic") cubic = true;
            else throw SchemaError(path + ".table.interp", "expected 'linear' or 'cubic'");
        }
        return CoeffFn::table(std::move(grid), std::move(samples), cubic);
    }
    throw SchemaError(path, "unknown coefficient kind");
}

CoeffSet parse_coeff_set(const nlohmann::json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    CoeffSet out;
    out.t0 = j.contains("t0") ? require_number(j.at("t0"), path + ".t0") : 0.0;
    auto field = [&](const char* name) -> CoeffFn {
        if (!j.contains(name)) return CoeffFn::zero();
        CoeffFn f = parse_coeff_fn(j.at(name), path + "." + name);
        if (std::holds_alternative<CoeffComponents>(f.impl)) f.t_min = out.t0;
        return f;
    };
    out.a = field("a");
    out.b = field("b");
    out.c = field("c");
    out.d = field("d");
    return out;
}

nlohmann::ordered_json serialize(const ScalarFn& f) {
    return std::visit(
        [](const auto& g) -> nlohmann::ordered_json {
            using T = std::decay_t<decltype(g)>;
            nlohmann::ordered_json out;
            if constexpr (std::is_same_v<T, ScalarZero>) {
                return 0.0;
            } else if constexpr (std::is_same_v<T, ScalarConst>) {
                return g.c;
            } else if constexpr (std::is_same_v<T, ScalarPoly>) {
                out["poly"] = poly_json(g.coeffs);
            } else if constexpr (std::is_same_v<T, ScalarPolyExp>) {
                out["poly"] = poly_json(g.coeffs);
                out["exp"] = g.alpha;
            } else if constexpr (std::is_same_v<T, ScalarPolyTrig>) {
                out["poly"] = poly_json(g.coeffs);
                out[g.use_sin ? "sin" : "cos"] = g.omega;
                if (g.phase != 0.0) out["phase"] = g.phase;
            } else {
                out["bump"] = {{"amp", g.amp}, {"support", {g.lo, g.hi}}};
            }
            return out;
        },
        f);
}

nlohmann::ordered_json serialize(const CoeffFn& f) {
    nlohmann::ordered_json out;
    if (const auto* tb = std::get_if<CoeffTable>(&f.impl)) {
        nlohmann::ordered_json t = nlohmann::ordered_json::object();
        t["t"] = tb->grid;
        auto values = nlohmann::ordered_json::array();
        for (const Quat& q : tb->samples) values.push_back({q.w, q.x, q.y, q.z});
        t["values"] = std::move(values);
        t["interp"] = tb->cubic ? "cubic" : "linear";
        out["table"] = std::move(t);
        return out;
    }
    const auto& c = std::get<CoeffComponents>(f.impl);
    if (is_identically_zero(f)) {
        out["zero"] = true;
        return out;
    }
    const bool all_const = std::all_of(c.parts.begin(), c.parts.end(), [](const ScalarFn& s) {
        return std::holds_alternative<ScalarConst>(s) || std::holds_alternative<ScalarZero>(s);
    });
    if (all_const) {
        out["const"] = {eval(c.parts[0], 0.0), eval(c.parts[1], 0.0), eval(c.parts[2], 0.0),
                        eval(c.parts[3], 0.0)};
        return out;
    }
    auto parts = nlohmann::ordered_json::array();
    for (const ScalarFn& s : c.parts) parts.push_back(serialize(s));
    out["components"] = std::move(parts);
    return out;
}

nlohmann::ordered_json serialize(const CoeffSet& s) {
    nlohmann::ordered_json out;
    out["t0"] = s.t0;
    out["a"] = serialize(s.a);
    out["b"] = serialize(s.b);
    out["c"] = serialize(s.c);
    out["d"] = serialize(s.d);
    return out;
}

}  // namespace qr
