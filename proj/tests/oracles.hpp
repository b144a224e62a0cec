#pragma once

// Independent reference computations. Written from the definitions, without
// touching the library's code paths.

#include <cmath>
#include <cstdint>
#include <vector>

namespace oracles {

inline double choose(unsigned n, unsigned k) {
    double c = 1.0;
    for (unsigned i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
    return c;
}

inline double binom_pmf(unsigned n, unsigned k, double p) {
    return choose(n, k) * std::pow(p, k) * std::pow(1.0 - p, n - k);
}

inline double pooled_z(unsigned x, unsigned n, unsigned y, unsigned m) {
    const double pool = static_cast<double>(x + y) / static_cast<double>(n + m);
    const double se = std::sqrt(pool * (1.0 - pool) * (1.0 / n + 1.0 / m));
    if (se == 0.0) return 0.0;
    return (static_cast<double>(x) / n - static_cast<double>(y) / m) / se;
}

// Sums the probability of every (x', y') table whose |z| reaches the
// observed one, both counts binomial at the observed pooled rate.
inline double enumerated_p(unsigned x, unsigned n, unsigned y, unsigned m) {
    const double pool = static_cast<double>(x + y) / static_cast<double>(n + m);
    if (pool == 0.0 || pool == 1.0) return 1.0;
    const double zobs = std::abs(pooled_z(x, n, y, m));
    double total = 0.0;
    for (unsigned a = 0; a <= n; ++a) {
        for (unsigned b = 0; b <= m; ++b) {
            if (std::abs(pooled_z(a, n, b, m)) >= zobs - 1e-9) total += binom_pmf(n, a, pool) * binom_pmf(m, b, pool);
        }
    }
    return std::min(1.0, total);
}

// 1 - 6 sum d^2 / (n (n^2 - 1)) for untied data.
inline double spearman_untied(const std::vector<double>& rx, const std::vector<double>& ry) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
    const double n = static_cast<double>(rx.size());
    return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

inline double cohen_kappa(double both, double only_a, double only_b, double neither) {
    const double n = both + only_a + only_b + neither;
    const double po = (both + neither) / n;
    const double pa = (both + only_a) / n, pb = (both + only_b) / n;
    const double pe = pa * pb + (1 - pa) * (1 - pb);
    return (po - pe) / (1 - pe);
}

}  // namespace oracles
