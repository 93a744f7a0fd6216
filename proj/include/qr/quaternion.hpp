#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "qr/errors.hpp"

namespace qr {

/// Norm threshold below which a quaternion is treated as non-invertible.
inline constexpr double kZeroThreshold = 1e-12;

/// Entry tolerance used when validating the redundant entries of a symbol
/// matrix in unsymbol().
inline constexpr double kSymbolEntryTol = 1e-9;

/// Real quaternion w + i x + j y + k z with the Hamilton product.
/// Values are immutable in spirit: every operation returns a new value.
template <typename Scalar = double>
struct Quaternion {
    Scalar w{}, x{}, y{}, z{};

    constexpr Quaternion() = default;
    constexpr Quaternion(Scalar w_, Scalar x_, Scalar y_, Scalar z_)
        : w(w_), x(x_), y(y_), z(z_) {}

    /// Embeds a real number.
    static constexpr Quaternion real(Scalar r) { return {r, Scalar(0), Scalar(0), Scalar(0)}; }

    static constexpr Quaternion zero() { return {}; }
    static constexpr Quaternion one() { return real(Scalar(1)); }
    static constexpr Quaternion i() { return {Scalar(0), Scalar(1), Scalar(0), Scalar(0)}; }
    static constexpr Quaternion j() { return {Scalar(0), Scalar(0), Scalar(1), Scalar(0)}; }
    static constexpr Quaternion k() { return {Scalar(0), Scalar(0), Scalar(0), Scalar(1)}; }

    /// Component access in the order (w, x, y, z).
    constexpr Scalar operator[](int n) const {
        return n == 0 ? w : n == 1 ? x : n == 2 ? y : z;
    }
    constexpr Scalar& operator[](int n) {
        return n == 0 ? w : n == 1 ? x : n == 2 ? y : z;
    }

    [[nodiscard]] constexpr Scalar re() const { return w; }
    [[nodiscard]] constexpr Scalar squared_norm() const { return w * w + x * x + y * y + z * z; }
    [[nodiscard]] Scalar norm() const { return std::sqrt(squared_norm()); }

    [[nodiscard]] constexpr Quaternion conjugate() const { return {w, -x, -y, -z}; }

    [[nodiscard]] Eigen::Matrix<Scalar, 4, 1> vec() const {
        return Eigen::Matrix<Scalar, 4, 1>{w, x, y, z};
    }
    static Quaternion from_vec(const Eigen::Matrix<Scalar, 4, 1>& v) {
        return {v[0], v[1], v[2], v[3]};
    }

    friend constexpr Quaternion operator+(const Quaternion& a, const Quaternion& b) {
        return {a.w + b.w, a.x + b.x, a.y + b.y, a.z + b.z};
    }
    friend constexpr Quaternion operator-(const Quaternion& a, const Quaternion& b) {
        return {a.w - b.w, a.x - b.x, a.y - b.y, a.z - b.z};
    }
    friend constexpr Quaternion operator-(const Quaternion& a) {
        return {-a.w, -a.x, -a.y, -a.z};
    }
    friend constexpr Quaternion operator*(Scalar s, const Quaternion& a) {
        return {s * a.w, s * a.x, s * a.y, s * a.z};
    }
    friend constexpr Quaternion operator*(const Quaternion& a, Scalar s) { return s * a; }

    /// Hamilton product; not commutative.
    friend constexpr Quaternion operator*(const Quaternion& a, const Quaternion& b) {
        return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
                a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
                a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
                a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
    }

    friend constexpr bool operator==(const Quaternion& a, const Quaternion& b) {
        return a.w == b.w && a.x == b.x && a.y == b.y && a.z == b.z;
    }
};

using Quat = Quaternion<double>;
using SymbolMatrix = Eigen::Matrix4d;

template <typename S>
[[nodiscard]] Quaternion<S> mul(const Quaternion<S>& a, const Quaternion<S>& b) {
    return a * b;
}

/// Multiplicative inverse conj(q)/|q|^2. Throws NearZeroDivisor when |q|
/// is at or below the zero threshold.
template <typename S>
[[nodiscard]] Quaternion<S> inverse(const Quaternion<S>& q) {
    const S n2 = q.squared_norm();
    if (std::sqrt(n2) <= S(kZeroThreshold))
        throw NearZeroDivisor("quaternion norm below invertibility threshold");
    const S r = S(1) / n2;
    return {q.w * r, -q.x * r, -q.y * r, -q.z * r};
}

/// 4x4 real matrix representation. The map is additive and multiplicative,
/// so quaternion flows can be cross-checked against matrix flows.
template <typename S>
[[nodiscard]] Eigen::Matrix<S, 4, 4> symbol(const Quaternion<S>& q) {
    Eigen::Matrix<S, 4, 4> m;
    m <<  q.w,  q.x,  q.y, -q.z,
         -q.x,  q.w, -q.z, -q.y,
         -q.y,  q.z,  q.w,  q.x,
          q.z,  q.y, -q.x,  q.w;
    return m;
}

/// Reads the quaternion back off the first row of a symbol matrix and
/// validates the remaining entries against the expected pattern.
template <typename S>
[[nodiscard]] Quaternion<S> unsymbol(const Eigen::Matrix<S, 4, 4>& m) {
    const Quaternion<S> q{m(0, 0), m(0, 1), m(0, 2), -m(0, 3)};
    const Eigen::Matrix<S, 4, 4> expect = symbol(q);
    if (((m - expect).template lpNorm<Eigen::Infinity>()) > S(kSymbolEntryTol))
        throw NotASymbol("matrix entries do not match the symbol pattern");
    return q;
}

/// Determinant and trace of symbol(q), computed through Eigen's generic
/// determinant path. Equals (|q|^4, 4 Re q) up to roundoff.
template <typename S>
[[nodiscard]] std::pair<S, S> symbol_invariants(const Quaternion<S>& q) {
    const Eigen::Matrix<S, 4, 4> m = symbol(q);
    return {m.determinant(), m.trace()};
}

}  // namespace qr
