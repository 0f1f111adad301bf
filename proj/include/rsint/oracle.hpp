#pragma once

/**
 * @file oracle.hpp
 * @brief Brute-force reference Riemann–Stieltjes sums.
 *
 * Deliberately independent of the Darboux machinery: it only evaluates
 * plain callables at grid midpoints and never asks for bounds.
 */

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "core.hpp"

namespace rsint {

struct OracleResult {
    double value = 0.0;
    std::size_t grid_cells = 0;
    double richardson_estimate = 0.0;
    double stability_gap = 0.0;
};

namespace oracle_detail {

inline bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

/// Pairwise summation of the midpoint terms on [lo, hi] with n cells.
template <class F, class G>
double midpoint_sum(const F& f, const G& g, const std::vector<double>& grid) {
    std::vector<double> terms(grid.size() - 1);
    double g_prev = g(grid[0]);
    for (std::size_t k = 1; k < grid.size(); ++k) {
        const double g_next = g(grid[k]);
        terms[k - 1] = f(0.5 * (grid[k - 1] + grid[k])) * (g_next - g_prev);
        g_prev = g_next;
    }
    for (std::size_t width = 1; width < terms.size(); width *= 2)
        for (std::size_t i = 0; i + width < terms.size(); i += 2 * width) terms[i] += terms[i + width];
    return terms.empty() ? 0.0 : terms[0];
}

inline std::vector<double> uniform_grid(double lo, double hi, std::size_t n) {
    std::vector<double> x(n + 1);
    for (std::size_t i = 0; i <= n; ++i) x[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
    x[n] = hi;
    return x;
}

/// n cells on [lo, hi] graded towards lo. Block l spans
/// [lo + (hi-lo)/2^(l+1), lo + (hi-lo)/2^l] with n/levels uniform cells;
/// the last block reaches down to lo.
inline std::vector<double> graded_grid(double lo, double hi, std::size_t n, int levels) {
    const std::size_t per = n / static_cast<std::size_t>(levels);
    std::vector<double> x;
    double right = hi;
    std::vector<std::vector<double>> blocks;
    for (int l = 0; l < levels; ++l) {
        const double left = (l + 1 == levels) ? lo : lo + (right - lo) * 0.5;
        std::size_t cells = (l + 1 == levels) ? n - per * static_cast<std::size_t>(levels - 1) : per;
        blocks.push_back(uniform_grid(left, right, cells));
        right = left;
    }
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
        if (!x.empty()) x.pop_back();
        x.insert(x.end(), it->begin(), it->end());
    }
    return x;
}

} // namespace oracle_detail

/// Midpoint sums Σ f(mid_k)(G(x_k) − G(x_{k−1})) on uniform grids of n and
/// n/2 cells over I, with I's orientation applied.
template <class F, class G>
OracleResult reference_integral(const F& f, const G& g, const OrientedInterval& i,
                                std::size_t n = std::size_t{1} << 20) {
    if (!oracle_detail::is_power_of_two(n)) throw std::invalid_argument("grid size must be a power of two >= 2");
    OracleResult r;
    r.grid_cells = n;
    if (i.degenerate()) return r;
    const Interval h = i.hull();
    const double s = i.orientation();
    const double vn = s * oracle_detail::midpoint_sum(f, g, oracle_detail::uniform_grid(h.lo, h.hi, n));
    const double vh = s * oracle_detail::midpoint_sum(f, g, oracle_detail::uniform_grid(h.lo, h.hi, n / 2));
    r.value = vn;
    r.richardson_estimate = (4.0 * vn - vh) / 3.0;
    r.stability_gap = std::abs(vn - vh);
    return r;
}

/// Same sums on a grid graded geometrically towards the left end of I, for
/// integrands that blow up there.
template <class F, class G>
OracleResult reference_integral_graded(const F& f, const G& g, const Interval& i,
                                       std::size_t n = std::size_t{1} << 20, int levels = 32) {
    if (!oracle_detail::is_power_of_two(n)) throw std::invalid_argument("grid size must be a power of two >= 2");
    OracleResult r;
    r.grid_cells = n;
    if (i.degenerate()) return r;
    const double vn = oracle_detail::midpoint_sum(f, g, oracle_detail::graded_grid(i.lo, i.hi, n, levels));
    const double vh = oracle_detail::midpoint_sum(f, g, oracle_detail::graded_grid(i.lo, i.hi, n / 2, levels));
    r.value = vn;
    r.richardson_estimate = (4.0 * vn - vh) / 3.0;
    r.stability_gap = std::abs(vn - vh);
    return r;
}

} // namespace rsint
