#pragma once

/**
 * @file core.hpp
 * @brief Foundational value types: intervals, oriented intervals, partitions
 *        and enclosures.
 *
 * All types are immutable after construction and safe to share between
 * threads.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace rsint {

/// Absolute slack used for every certified inequality (rounding absorption).
inline constexpr double kSlack = 1e-12;

/// Relative tolerance for points that stray just outside a function domain
/// because of rounding in upstream evaluations (e.g. Φ values).
inline constexpr double kDomainTolerance = 1e-9;

enum class Direction { increasing, decreasing, constant };

inline const char* to_string(Direction d) {
    switch (d) {
        case Direction::increasing: return "increasing";
        case Direction::decreasing: return "decreasing";
        case Direction::constant: return "constant";
    }
    return "?";
}

/// Direction of g∘h given the directions of g and h.
inline Direction compose_direction(Direction outer, Direction inner) {
    if (outer == Direction::constant || inner == Direction::constant) return Direction::constant;
    return outer == inner ? Direction::increasing : Direction::decreasing;
}

/// Closed unoriented interval [lo, hi].
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    Interval() = default;
    Interval(double a, double b) : lo(a), hi(b) {
        if (!(a <= b)) throw std::invalid_argument("Interval requires lo <= hi");
    }

    double width() const noexcept { return hi - lo; }
    double midpoint() const noexcept { return lo + 0.5 * (hi - lo); }
    bool degenerate() const noexcept { return lo == hi; }
    bool contains(double x) const noexcept { return lo <= x && x <= hi; }
    bool contains(const Interval& j) const noexcept { return lo <= j.lo && j.hi <= hi; }
    bool interior(double x) const noexcept { return lo < x && x < hi; }

    /// True when j lies inside this interval up to kDomainTolerance.
    bool covers(const Interval& j) const noexcept {
        const double tol = kDomainTolerance * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
        return j.lo >= lo - tol && j.hi <= hi + tol;
    }

    double clamp(double x) const noexcept { return std::clamp(x, lo, hi); }

    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Endpoint pair with traversal direction; start and end are unordered.
struct OrientedInterval {
    double start = 0.0;
    double end = 0.0;

    int orientation() const noexcept { return start <= end ? 1 : -1; }
    Interval hull() const { return {std::min(start, end), std::max(start, end)}; }
    bool degenerate() const noexcept { return start == end; }
    OrientedInterval reversed() const noexcept { return {end, start}; }

    friend bool operator==(const OrientedInterval&, const OrientedInterval&) = default;
};

/// Splits J at an interior point x into [J.lo, x] and [x, J.hi].
inline std::pair<Interval, Interval> split_interval(const Interval& j, double x) {
    if (!j.interior(x)) throw std::invalid_argument("split point must be strictly interior");
    return {Interval{j.lo, x}, Interval{x, j.hi}};
}

/// Strictly increasing breakpoint sequence x_0 < ... < x_n, n >= 1.
class Partition {
public:
    Partition() : points_{0.0, 1.0} {}

    explicit Partition(std::vector<double> points) : points_(std::move(points)) {
        if (points_.size() < 2) throw std::invalid_argument("Partition needs at least two breakpoints");
        for (std::size_t i = 1; i < points_.size(); ++i) {
            if (!(points_[i - 1] < points_[i]))
                throw std::invalid_argument("Partition breakpoints must be strictly increasing");
        }
    }

    /// n equal cells over `base`.
    static Partition uniform(const Interval& base, std::size_t n) {
        if (n == 0) throw std::invalid_argument("uniform partition needs n >= 1");
        if (base.degenerate()) throw std::invalid_argument("uniform partition needs a non-degenerate base");
        std::vector<double> pts(n + 1);
        for (std::size_t i = 0; i <= n; ++i)
            pts[i] = base.lo + (base.hi - base.lo) * static_cast<double>(i) / static_cast<double>(n);
        pts.back() = base.hi;
        return Partition(std::move(pts));
    }

    /// Builds a partition of `base` from arbitrary interior points: points
    /// outside the open base are dropped and duplicates within `merge_tol`
    /// are merged.
    static Partition from_points(const Interval& base, std::vector<double> interior,
                                 double merge_tol = 0.0) {
        std::vector<double> pts;
        pts.reserve(interior.size() + 2);
        pts.push_back(base.lo);
        std::sort(interior.begin(), interior.end());
        for (double x : interior) {
            if (!(x > base.lo && x < base.hi)) continue;
            if (x - pts.back() <= merge_tol) continue;
            pts.push_back(x);
        }
        while (pts.size() > 1 && base.hi - pts.back() <= merge_tol) pts.pop_back();
        pts.push_back(base.hi);
        return Partition(std::move(pts));
    }

    const std::vector<double>& points() const noexcept { return points_; }
    std::size_t size() const noexcept { return points_.size() - 1; }
    Interval base() const { return {points_.front(), points_.back()}; }
    Interval cell(std::size_t k) const { return {points_[k], points_[k + 1]}; }

    std::vector<Interval> cells() const {
        std::vector<Interval> out;
        out.reserve(size());
        for (std::size_t k = 0; k < size(); ++k) out.push_back(cell(k));
        return out;
    }

    double mesh() const {
        double m = 0.0;
        for (std::size_t k = 0; k < size(); ++k) m = std::max(m, points_[k + 1] - points_[k]);
        return m;
    }

    /// Common refinement; both partitions must share the same base interval.
    Partition refine(const Partition& other) const {
        if (!(base() == other.base())) throw std::invalid_argument("refine requires a common base interval");
        std::vector<double> merged;
        merged.reserve(points_.size() + other.points_.size());
        std::merge(points_.begin(), points_.end(), other.points_.begin(), other.points_.end(),
                   std::back_inserter(merged));
        merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
        return Partition(std::move(merged));
    }

    /// Partition with x inserted (no-op when x is already a breakpoint).
    Partition with_point(double x) const {
        if (!base().interior(x)) throw std::invalid_argument("inserted point must be interior to the base");
        std::vector<double> pts = points_;
        auto it = std::lower_bound(pts.begin(), pts.end(), x);
        if (it != pts.end() && *it == x) return *this;
        pts.insert(it, x);
        return Partition(std::move(pts));
    }

    /// Every cell of *this lies inside some cell of `coarser`.
    bool is_finer_than(const Partition& coarser) const {
        if (!(base() == coarser.base())) return false;
        return std::includes(points_.begin(), points_.end(), coarser.points_.begin(), coarser.points_.end());
    }

    friend bool operator==(const Partition&, const Partition&) = default;

private:
    std::vector<double> points_;
};

/// Bracket [lower, upper] around an integral value.
struct Enclosure {
    double lower = 0.0;
    double upper = 0.0;

    Enclosure() = default;
    Enclosure(double lo, double hi) : lower(lo), upper(hi) {
        if (lo > hi + kSlack * std::max(1.0, std::abs(hi)))
            throw std::invalid_argument("Enclosure requires lower <= upper");
        if (lo > hi) std::swap(lower, upper);
    }

    /// Orders the two values.
    static Enclosure hull_of(double a, double b) { return {std::min(a, b), std::max(a, b)}; }

    double width() const noexcept { return upper - lower; }
    double midpoint() const noexcept { return lower + 0.5 * (upper - lower); }
    bool contains(double v, double tol = 0.0) const noexcept {
        return v >= lower - tol && v <= upper + tol;
    }
    bool overlaps(const Enclosure& o, double widen = 0.0) const noexcept {
        return std::max(lower, o.lower) - widen <= std::min(upper, o.upper) + widen;
    }

    Enclosure operator-() const { return {-upper, -lower}; }
    Enclosure operator+(const Enclosure& o) const { return {lower + o.lower, upper + o.upper}; }
    Enclosure scaled(int sign) const { return sign >= 0 ? *this : -*this; }

    friend bool operator==(const Enclosure&, const Enclosure&) = default;
};

/// Infimum and supremum of a function over an interval.
struct Bounds {
    double inf = 0.0;
    double sup = 0.0;

    double oscillation() const noexcept { return sup - inf; }
    double max_abs() const noexcept { return std::max(std::abs(inf), std::abs(sup)); }

    void include(double v) noexcept {
        inf = std::min(inf, v);
        sup = std::max(sup, v);
    }
};

/// Interval product of two bounds.
inline Bounds multiply(const Bounds& a, const Bounds& b) noexcept {
    const double p1 = a.inf * b.inf, p2 = a.inf * b.sup, p3 = a.sup * b.inf, p4 = a.sup * b.sup;
    return {std::min(std::min(p1, p2), std::min(p3, p4)), std::max(std::max(p1, p2), std::max(p3, p4))};
}

/// Neumaier compensated accumulator.
class CompensatedSum {
public:
    void add(double v) noexcept {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    CompensatedSum& operator+=(double v) noexcept {
        add(v);
        return *this;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Bisection to floating-point resolution for a sign change of g on [a, b].
/// Requires g(a) and g(b) to have opposite signs (or one of them zero).
template <class F>
double bisect_root(F&& g, double a, double b) {
    double ga = g(a);
    if (ga == 0.0) return a;
    double gb = g(b);
    if (gb == 0.0) return b;
    if ((ga < 0.0) == (gb < 0.0)) throw InternalError("bisect_root: no sign change on bracket");
    for (int it = 0; it < 200; ++it) {
        const double m = a + 0.5 * (b - a);
        if (m <= a || m >= b) break;
        const double gm = g(m);
        if (gm == 0.0) return m;
        if ((gm < 0.0) == (ga < 0.0)) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    return a + 0.5 * (b - a);
}

/// Solves h(x) = target for a monotone h on [a, b] by bisection.
template <class F>
double solve_monotone(F&& h, double target, double a, double b) {
    return bisect_root([&](double x) { return h(x) - target; }, a, b);
}

} // namespace rsint
