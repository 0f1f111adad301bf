#pragma once

/**
 * @file adapters.hpp
 * @brief Integrand and integrator concepts, plus small combinators.
 *
 * An integrand exposes a domain, its breakpoints, pointwise evaluation and
 * inf/sup over closed sub-intervals (interior convention, see
 * piecewise.hpp). An integrator additionally reports continuity and its
 * maximal monotone runs.
 */

#include <algorithm>
#include <concepts>
#include <iterator>
#include <vector>

#include "core.hpp"
#include "piecewise.hpp"

namespace rsint {

template <class F>
concept Integrand = requires(const F& f, double x, const Interval& j) {
    { f(x) } -> std::convertible_to<double>;
    { f.bounds_on(j) } -> std::same_as<Bounds>;
    { f.breakpoints() } -> std::convertible_to<std::vector<double>>;
    { f.domain() } -> std::same_as<Interval>;
};

template <class G>
concept Integrator = requires(const G& g, double x, const Interval& j) {
    { g(x) } -> std::convertible_to<double>;
    { g.domain() } -> std::same_as<Interval>;
    { g.breakpoints() } -> std::convertible_to<std::vector<double>>;
    { g.monotone_segments(j) } -> std::same_as<std::vector<MonotoneSegment>>;
    { g.continuous_on(j) } -> std::convertible_to<bool>;
};

/// Sorted union of two breakpoint lists.
inline std::vector<double> merge_breakpoints(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out;
    out.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Pointwise product. Bounds are the interval product of the factor
/// bounds, an enclosure of the true range that tightens as cells shrink.
template <Integrand A, Integrand B>
class Product {
public:
    Product(A a, B b) : a_(std::move(a)), b_(std::move(b)) {
        if (!a_.domain().covers(b_.domain()) || !b_.domain().covers(a_.domain()))
            throw DomainError("product factors must share a domain");
    }

    double operator()(double x) const { return a_(x) * b_(x); }
    Bounds bounds_on(const Interval& j) const { return multiply(a_.bounds_on(j), b_.bounds_on(j)); }
    std::vector<double> breakpoints() const { return merge_breakpoints(a_.breakpoints(), b_.breakpoints()); }
    Interval domain() const { return a_.domain(); }

    const A& first() const noexcept { return a_; }
    const B& second() const noexcept { return b_; }

private:
    A a_;
    B b_;
};

template <Integrand A, Integrand B>
Product<A, B> make_product(A a, B b) {
    return Product<A, B>(std::move(a), std::move(b));
}

template <Integrand A, Integrand B, Integrand C>
auto make_product(A a, B b, C c) {
    return make_product(make_product(std::move(a), std::move(b)), std::move(c));
}

/// Outer∘Inner as an integrator (for example Ψ(Φ)). Inner must be
/// continuous; its monotone runs are subdivided at preimages of the outer
/// function's turning points.
template <Integrator Outer, Integrator Inner>
class ComposedIntegrator {
public:
    ComposedIntegrator(Outer outer, Inner inner) : outer_(std::move(outer)), inner_(std::move(inner)) {}

    double operator()(double x) const { return outer_(inner_(x)); }
    Interval domain() const { return inner_.domain(); }

    std::vector<double> breakpoints() const {
        std::vector<double> pts = inner_.breakpoints();
        for (const auto& s : monotone_segments(inner_.domain())) pts.push_back(s.span.lo);
        pts.push_back(inner_.domain().hi);
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        const Interval dom = inner_.domain();
        std::erase_if(pts, [&](double x) { return !dom.interior(x); });
        return pts;
    }

    bool continuous_on(const Interval& j) const {
        if (!inner_.continuous_on(j)) return false;
        const Bounds img = inner_.bounds_on(j);
        return outer_.continuous_on(Interval{img.inf, img.sup});
    }

    std::vector<MonotoneSegment> monotone_segments(const Interval& j) const {
        std::vector<MonotoneSegment> out;
        auto push = [&](double s, double t, Direction d) {
            if (!(s < t)) return;
            if (!out.empty()) {
                MonotoneSegment& last = out.back();
                if (d == Direction::constant || last.direction == d) {
                    last.span.hi = t;
                    return;
                }
                if (last.direction == Direction::constant) {
                    last.span.hi = t;
                    last.direction = d;
                    return;
                }
            }
            out.push_back({Interval{s, t}, d});
        };
        for (const auto& seg : inner_.monotone_segments(j)) {
            const double s = seg.span.lo, t = seg.span.hi;
            if (seg.direction == Direction::constant) {
                push(s, t, Direction::constant);
                continue;
            }
            const double ys = inner_(s), yt = inner_(t);
            const Interval img{std::min(ys, yt), std::max(ys, yt)};
            auto outer_segs = outer_.monotone_segments(img);
            if (seg.direction == Direction::decreasing) std::reverse(outer_segs.begin(), outer_segs.end());
            double x_prev = s;
            for (std::size_t k = 0; k < outer_segs.size(); ++k) {
                const auto& os = outer_segs[k];
                double x_next = t;
                if (k + 1 < outer_segs.size()) {
                    const double y = seg.direction == Direction::increasing ? os.span.hi : os.span.lo;
                    x_next = solve_monotone(inner_, y, s, t);
                }
                push(x_prev, x_next, compose_direction(os.direction, seg.direction));
                x_prev = x_next;
            }
        }
        return out;
    }

    const Outer& outer() const noexcept { return outer_; }
    const Inner& inner() const noexcept { return inner_; }

private:
    Outer outer_;
    Inner inner_;
};

} // namespace rsint
