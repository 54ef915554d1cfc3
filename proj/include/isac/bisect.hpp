// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <stdexcept>

namespace isac {

// Bisection root search on [lo, hi]. Requires a sign change across the
// bracket; runs until the bracket width falls below tol, which takes at
// most ceil(log2((hi-lo)/tol)) iterations.
template <typename F>
double bisect(F&& f, double lo, double hi, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("bisect: tol must be > 0");
    if (!(lo < hi)) throw std::invalid_argument("bisect: empty bracket");
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw std::invalid_argument("bisect: f(lo) and f(hi) have the same sign");

    const int max_iters = static_cast<int>(std::ceil(std::log2((hi - lo) / tol))) + 2;
    for (int it = 0; it < max_iters && (hi - lo) > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace isac
