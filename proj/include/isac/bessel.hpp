// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <vector>

namespace isac {

namespace detail {

// Ascending power series, reliable for |x| < 12 at any order we use. The
// accumulation runs in long double: the alternating terms reach ~1e3 before
// cancelling, which would eat ~1e-10 in plain double.
inline double bessel_j_series(int order, double x) {
    const long double half = 0.5L * x;
    long double term = 1.0L;
    for (int k = 1; k <= order; ++k) term *= half / static_cast<long double>(k);
    long double sum = term;
    const long double m = -half * half;
    for (int k = 1; k < 400; ++k) {
        term *= m / (static_cast<long double>(k) * static_cast<long double>(k + order));
        sum += term;
        if (std::abs(term) < 1e-22L * (std::abs(sum) + 1e-300L)) break;
    }
    return static_cast<double>(sum);
}

// Miller's downward recurrence with the normalization
// J_0(x) + 2*sum_k J_{2k}(x) = 1. Returns J_0..J_{l_max}.
inline std::vector<double> bessel_j_miller(int l_max, double x) {
    // Start order: J_M(x) decays like Airy for M > x; this margin keeps the
    // truncated tail below ~1e-16 for the argument range we use (x <= ~200).
    const int margin = 20 + static_cast<int>(12.0 * std::cbrt(x > 1.0 ? x : 1.0));
    const int start = ((l_max > static_cast<int>(x) ? l_max : static_cast<int>(x)) + margin + 1) & ~1;
    std::vector<double> out(static_cast<std::size_t>(l_max) + 1, 0.0);
    double f_up = 0.0;    // f_{k+1}
    double f_k = 1e-30;   // f_k, k = start
    double norm = 0.0;
    for (int k = start; k >= 1; --k) {
        const double f_dn = (2.0 * k / x) * f_k - f_up;  // f_{k-1}
        f_up = f_k;
        f_k = f_dn;
        if ((k - 1) % 2 == 0 && k - 1 > 0) norm += 2.0 * f_k;
        if (k - 1 <= l_max) out[static_cast<std::size_t>(k - 1)] = f_k;
        if (std::abs(f_k) > 1e250) {
            f_k *= 1e-250;
            f_up *= 1e-250;
            norm *= 1e-250;
            for (auto& v : out) v *= 1e-250;
        }
    }
    norm += f_k;  // J_0 term of the normalization sum
    for (auto& v : out) v /= norm;
    return out;
}

}  // namespace detail

// Bessel function of the first kind, integer order. Negative orders and
// arguments fold through J_{-l}(x) = (-1)^l J_l(x), J_l(-x) = (-1)^l J_l(x).
inline double bessel_j(int order, double x) {
    if (!std::isfinite(x)) throw std::domain_error("bessel_j: non-finite argument");
    if (std::abs(order) > 64) throw std::domain_error("bessel_j: |order| > 64");
    double sign = 1.0;
    if (order < 0) {
        order = -order;
        if (order % 2 != 0) sign = -sign;
    }
    if (x < 0.0) {
        x = -x;
        if (order % 2 != 0) sign = -sign;
    }
    if (x == 0.0) return order == 0 ? 1.0 : 0.0;
    if (x < 12.0) return sign * detail::bessel_j_series(order, x);
    return sign * detail::bessel_j_miller(order, x)[static_cast<std::size_t>(order)];
}

// J_0..J_{l_max} in one pass; the spectrum loops want all orders at once.
inline std::vector<double> bessel_j_all(int l_max, double x) {
    if (!std::isfinite(x)) throw std::domain_error("bessel_j_all: non-finite argument");
    if (l_max < 0 || l_max > 64) throw std::domain_error("bessel_j_all: order out of range");
    std::vector<double> out(static_cast<std::size_t>(l_max) + 1, 0.0);
    if (x == 0.0) {
        out[0] = 1.0;
        return out;
    }
    const double ax = std::abs(x);
    if (ax < 12.0) {
        for (int l = 0; l <= l_max; ++l) out[static_cast<std::size_t>(l)] = detail::bessel_j_series(l, ax);
    } else {
        out = detail::bessel_j_miller(l_max, ax);
    }
    if (x < 0.0)
        for (int l = 1; l <= l_max; l += 2) out[static_cast<std::size_t>(l)] = -out[static_cast<std::size_t>(l)];
    return out;
}

}  // namespace isac
