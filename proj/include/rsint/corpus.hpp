#pragma once

/**
 * @file corpus.hpp
 * @brief Seeded random function generators for property tests and the
 *        verification suite.
 */

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "core.hpp"
#include "piecewise.hpp"

namespace rsint::corpus {

using Rng = std::mt19937_64;

/// Independent stream for case `index` of a run seeded with `seed`.
inline Rng case_rng(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return Rng(seq);
}

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

/// Monotone quadratic through (x0, y0), (x1, y1): y0 + (y1 - y0)·(t + c·t(1 - t))
/// with t the local coordinate and |c| <= 1.
inline Piece quadratic_piece(double x0, double x1, double y0, double y1, double c) {
    const double h = x1 - x0, dy = y1 - y0;
    Piece p;
    p.span = Interval{x0, x1};
    p.eval = [=](double x) {
        if (x == x1) return y1;
        const double t = (x - x0) / h;
        return y0 + dy * (t + c * t * (1.0 - t));
    };
    p.primitive = [=](double x) {
        const double t = (x - x0) / h;
        return h * (y0 * t + dy * (0.5 * t * t + c * (0.5 * t * t - t * t * t / 3.0)));
    };
    return p;
}

enum class SignMode { any, positive, negative, changes };

struct FnShape {
    int max_pieces = 8;
    bool quadratic = true;
    bool jumps = false;
    SignMode sign = SignMode::any;
    double magnitude = 1.0;  // values lie in [-magnitude, magnitude] (or the signed half)
};

namespace detail {

inline double draw_value(Rng& rng, const FnShape& s) {
    switch (s.sign) {
        case SignMode::positive: return uniform(rng, 0.2, 1.0) * s.magnitude;
        case SignMode::negative: return -uniform(rng, 0.2, 1.0) * s.magnitude;
        default: return uniform(rng, -1.0, 1.0) * s.magnitude;
    }
}

} // namespace detail

/// Random piecewise-linear or piecewise-quadratic function on dom with
/// 1..max_pieces monotone pieces.
inline PiecewiseMonotoneFn random_fn(Rng& rng, const Interval& dom, const FnShape& shape = {}) {
    const int n = uniform_int(rng, 1, std::max(1, shape.max_pieces));
    std::vector<double> xs{dom.lo, dom.hi};
    for (int i = 1; i < n; ++i) xs.push_back(uniform(rng, dom.lo, dom.hi));
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::vector<double> cleaned{xs.front()};
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (xs[i] - cleaned.back() > 1e-3 * dom.width() || i + 1 == xs.size()) cleaned.push_back(xs[i]);
    if (cleaned.size() > 2 && cleaned[cleaned.size() - 1] - cleaned[cleaned.size() - 2] <= 1e-3 * dom.width())
        cleaned.erase(cleaned.end() - 2);
    xs = std::move(cleaned);

    const std::size_t np = xs.size() - 1;
    std::vector<double> left(np), right(np);
    double carry = detail::draw_value(rng, shape);
    for (std::size_t i = 0; i < np; ++i) {
        left[i] = carry;
        if (shape.jumps && i > 0 && uniform(rng, 0.0, 1.0) < 0.3) left[i] = detail::draw_value(rng, shape);
        right[i] = detail::draw_value(rng, shape);
        carry = right[i];
    }
    if (shape.sign == SignMode::changes) {
        const bool has_pos = std::any_of(right.begin(), right.end(), [](double v) { return v > 0.05; }) ||
                             left[0] > 0.05;
        const bool has_neg = std::any_of(right.begin(), right.end(), [](double v) { return v < -0.05; }) ||
                             left[0] < -0.05;
        if (!has_pos || !has_neg) {
            left[0] = -0.6 * shape.magnitude;
            right[np - 1] = 0.8 * shape.magnitude;
            if (np == 1) right[0] = 0.8 * shape.magnitude;
        }
    }

    std::vector<Piece> pieces;
    for (std::size_t i = 0; i < np; ++i) {
        if (shape.quadratic && uniform(rng, 0.0, 1.0) < 0.5)
            pieces.push_back(quadratic_piece(xs[i], xs[i + 1], left[i], right[i], uniform(rng, -1.0, 1.0)));
        else
            pieces.push_back(linear_piece(xs[i], xs[i + 1], left[i], right[i]));
    }
    std::vector<double> pv(xs.size());
    pv[0] = left[0];
    pv[np] = right[np - 1];
    for (std::size_t k = 1; k < np; ++k) pv[k] = uniform(rng, 0.0, 1.0) < 0.5 ? right[k - 1] : left[k];
    return PiecewiseMonotoneFn(std::move(pieces), std::move(pv));
}

/// Random partition of dom with n cells (interior points drawn uniformly).
inline Partition random_partition(Rng& rng, const Interval& dom, int n) {
    std::vector<double> pts;
    for (int i = 1; i < n; ++i) pts.push_back(uniform(rng, dom.lo, dom.hi));
    return Partition::from_points(dom, std::move(pts), 1e-9 * dom.width());
}

/// Random interval [a, b] with a in [lo, hi - min_len] and b - a >= min_len.
inline Interval random_interval(Rng& rng, double lo, double hi, double min_len) {
    const double a = uniform(rng, lo, hi - min_len);
    const double b = uniform(rng, a + min_len, hi);
    return {a, b};
}

} // namespace rsint::corpus
