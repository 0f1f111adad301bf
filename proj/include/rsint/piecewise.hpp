#pragma once

/**
 * @file piecewise.hpp
 * @brief Bounded functions given as finitely many monotone pieces.
 *
 * Each piece carries an evaluator that is continuous and monotone on its
 * closed sub-interval; evaluating it at a piece end yields the inward
 * one-sided limit. Point values at breakpoints are stored separately, so a
 * jump is encoded by a piece end value that differs from the point value.
 *
 * Sup/inf queries use the interior convention: for a non-degenerate
 * J = [u, v], sup_J f is the least upper bound of f over the open interval
 * (u, v). Endpoint values of J enter through their inward one-sided limits,
 * point values at breakpoints strictly inside J are attained values. With
 * a continuous integrator the Darboux sums built from these bounds bracket
 * the same integral as the closed-cell sums, and a jump sitting on a cell
 * boundary contributes no oscillation.
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include "core.hpp"

namespace rsint {

using ScalarFn = std::function<double(double)>;

struct Piece {
    Interval span;
    ScalarFn eval;
    /// Optional antiderivative of eval on span (any additive constant).
    ScalarFn primitive = {};
    /// Filled in by PiecewiseMonotoneFn from the endpoint values.
    Direction direction = Direction::constant;
};

/// Affine piece through (x0, y0) and (x1, y1), with exact primitive.
inline Piece linear_piece(double x0, double x1, double y0, double y1) {
    const double slope = (x1 > x0) ? (y1 - y0) / (x1 - x0) : 0.0;
    Piece p;
    p.span = Interval{x0, x1};
    p.eval = [=](double x) { return x == x1 ? y1 : y0 + slope * (x - x0); };
    p.primitive = [=](double x) {
        const double d = x - x0;
        return y0 * d + 0.5 * slope * d * d;
    };
    return p;
}

/// Maximal run of a function over which it is monotone in one direction.
struct MonotoneSegment {
    Interval span;
    Direction direction;
};

class PiecewiseMonotoneFn {
public:
    /// Pieces must tile a closed interval in order. `point_values`, when
    /// given, holds f at every knot (domain ends included); otherwise
    /// interior knots take the right piece's value (right-continuous) and
    /// the domain ends take the adjacent piece's end value.
    explicit PiecewiseMonotoneFn(std::vector<Piece> pieces, std::vector<double> point_values = {}) {
        if (pieces.empty()) throw std::invalid_argument("PiecewiseMonotoneFn needs at least one piece");
        auto impl = std::make_shared<Impl>();
        impl->knots.push_back(pieces.front().span.lo);
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            Piece& p = pieces[i];
            if (!p.eval) throw std::invalid_argument("piece without evaluator");
            if (p.span.lo != impl->knots.back())
                throw std::invalid_argument("pieces must tile the domain without gaps");
            if (!(p.span.lo < p.span.hi)) throw std::invalid_argument("pieces must have positive length");
            const double a = p.eval(p.span.lo), b = p.eval(p.span.hi);
            if (!std::isfinite(a) || !std::isfinite(b))
                throw DomainError("piece evaluator is not finite at a piece end");
            p.direction = a < b ? Direction::increasing : (a > b ? Direction::decreasing : Direction::constant);
            impl->knots.push_back(p.span.hi);
            impl->left_ends.push_back(a);
            impl->right_ends.push_back(b);
        }
        const std::size_t nk = impl->knots.size();
        if (point_values.empty()) {
            point_values.resize(nk);
            for (std::size_t k = 0; k + 1 < nk; ++k) point_values[k] = impl->left_ends[k];
            point_values[nk - 1] = impl->right_ends.back();
        }
        if (point_values.size() != nk) throw std::invalid_argument("point_values must have one entry per knot");
        double bound = 0.0;
        for (double v : point_values) {
            if (!std::isfinite(v)) throw DomainError("non-finite point value");
            bound = std::max(bound, std::abs(v));
        }
        for (std::size_t i = 0; i < pieces.size(); ++i)
            bound = std::max({bound, std::abs(impl->left_ends[i]), std::abs(impl->right_ends[i])});
        impl->pieces = std::move(pieces);
        impl->point_values = std::move(point_values);
        impl->bound = bound;
        impl_ = std::move(impl);
    }

    // -- factories ---------------------------------------------------------

    static PiecewiseMonotoneFn constant(const Interval& dom, double c) {
        return PiecewiseMonotoneFn({linear_piece(dom.lo, dom.hi, c, c)});
    }

    static PiecewiseMonotoneFn identity(const Interval& dom) {
        return PiecewiseMonotoneFn({linear_piece(dom.lo, dom.hi, dom.lo, dom.hi)});
    }

    /// x -> slope * x + intercept.
    static PiecewiseMonotoneFn affine(const Interval& dom, double slope, double intercept) {
        return PiecewiseMonotoneFn(
            {linear_piece(dom.lo, dom.hi, slope * dom.lo + intercept, slope * dom.hi + intercept)});
    }

    /// `below` for x < c, `above` for x >= c.
    static PiecewiseMonotoneFn step(const Interval& dom, double c, double below = 0.0, double above = 1.0) {
        if (!dom.interior(c)) throw std::invalid_argument("step location must be interior to the domain");
        std::vector<Piece> pieces{linear_piece(dom.lo, c, below, below), linear_piece(c, dom.hi, above, above)};
        return PiecewiseMonotoneFn(std::move(pieces), {below, above, above});
    }

    /// Continuous piecewise-linear interpolant through (xs[i], ys[i]).
    static PiecewiseMonotoneFn piecewise_linear(const std::vector<double>& xs, const std::vector<double>& ys) {
        if (xs.size() < 2 || xs.size() != ys.size())
            throw std::invalid_argument("piecewise_linear needs matching knots and values");
        std::vector<Piece> pieces;
        for (std::size_t i = 0; i + 1 < xs.size(); ++i)
            pieces.push_back(linear_piece(xs[i], xs[i + 1], ys[i], ys[i + 1]));
        return PiecewiseMonotoneFn(std::move(pieces));
    }

    /// Single monotone piece given by a continuous evaluator.
    static PiecewiseMonotoneFn monotone(const Interval& dom, ScalarFn eval, ScalarFn primitive = {}) {
        Piece p;
        p.span = dom;
        p.eval = std::move(eval);
        p.primitive = std::move(primitive);
        return PiecewiseMonotoneFn({std::move(p)});
    }

    /// Continuous function from an evaluator and the knots splitting it into
    /// monotone pieces.
    static PiecewiseMonotoneFn from_knots(const std::vector<double>& knots, const ScalarFn& eval) {
        if (knots.size() < 2) throw std::invalid_argument("from_knots needs at least two knots");
        std::vector<Piece> pieces;
        for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
            Piece p;
            p.span = Interval{knots[i], knots[i + 1]};
            p.eval = eval;
            pieces.push_back(std::move(p));
        }
        return PiecewiseMonotoneFn(std::move(pieces));
    }

    // -- queries -----------------------------------------------------------

    Interval domain() const { return {impl_->knots.front(), impl_->knots.back()}; }
    const std::vector<Piece>& pieces() const noexcept { return impl_->pieces; }
    std::size_t piece_count() const noexcept { return impl_->pieces.size(); }
    /// All knots, domain ends included.
    const std::vector<double>& knots() const noexcept { return impl_->knots; }
    const std::vector<double>& point_values() const noexcept { return impl_->point_values; }

    /// Interior knots.
    std::vector<double> breakpoints() const {
        const auto& k = impl_->knots;
        return std::vector<double>(k.begin() + 1, k.end() - 1);
    }

    /// M with |f| <= M on the domain (exact supremum of |f|).
    double global_bound() const noexcept { return impl_->bound; }

    /// Inward one-sided limit from the left at knot k (k >= 1).
    double left_limit(std::size_t k) const { return impl_->right_ends.at(k - 1); }
    /// Inward one-sided limit from the right at knot k (k < knots-1).
    double right_limit(std::size_t k) const { return impl_->left_ends.at(k); }

    bool continuous_at(std::size_t k) const {
        const double v = impl_->point_values.at(k);
        const double tol = kSlack * std::max(1.0, std::abs(v));
        if (k > 0 && std::abs(left_limit(k) - v) > tol) return false;
        if (k + 1 < impl_->knots.size() && std::abs(right_limit(k) - v) > tol) return false;
        return true;
    }

    bool continuous() const {
        for (std::size_t k = 0; k < impl_->knots.size(); ++k)
            if (!continuous_at(k)) return false;
        return true;
    }

    /// Continuity on the closed interval J: interior knots and the inward
    /// limits at J's endpoints.
    bool continuous_on(const Interval& j) const {
        const auto& kn = impl_->knots;
        for (std::size_t k = 0; k < kn.size(); ++k) {
            if (kn[k] < j.lo || kn[k] > j.hi) continue;
            const double v = impl_->point_values[k];
            const double tol = kSlack * std::max(1.0, std::abs(v));
            if (k > 0 && kn[k] > j.lo && std::abs(left_limit(k) - v) > tol) return false;
            if (k + 1 < kn.size() && kn[k] < j.hi && std::abs(right_limit(k) - v) > tol) return false;
        }
        return true;
    }

    /// Index of the piece whose half-open span [lo, hi) holds x (the last
    /// piece for the right domain end).
    std::size_t piece_index(double x) const {
        const auto& kn = impl_->knots;
        auto it = std::upper_bound(kn.begin(), kn.end(), x);
        std::size_t i = (it == kn.begin()) ? 0 : static_cast<std::size_t>(it - kn.begin()) - 1;
        return std::min(i, impl_->pieces.size() - 1);
    }

    double operator()(double x) const {
        x = clamp_to_domain(x);
        const auto& kn = impl_->knots;
        auto it = std::upper_bound(kn.begin(), kn.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - kn.begin()) - 1;
        if (kn[i] == x) return impl_->point_values[i];
        return impl_->pieces[i].eval(x);
    }

    /// Exact inf/sup over J under the interior convention.
    Bounds bounds_on(const Interval& j) const {
        const double u = clamp_to_domain(j.lo), v = clamp_to_domain(j.hi);
        if (u >= v) {
            const double val = (*this)(u);
            return {val, val};
        }
        const auto& kn = impl_->knots;
        const auto& pcs = impl_->pieces;
        std::size_t i = piece_index(u);
        Bounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
        for (; i < pcs.size() && kn[i] < v; ++i) {
            const double s = std::max(u, kn[i]);
            const double t = std::min(v, kn[i + 1]);
            b.include(s == kn[i] ? impl_->left_ends[i] : pcs[i].eval(s));
            b.include(t == kn[i + 1] ? impl_->right_ends[i] : pcs[i].eval(t));
            if (kn[i + 1] < v) b.include(impl_->point_values[i + 1]);
        }
        return b;
    }

    /// Maximal monotone runs of f on J (constant pieces join either side).
    std::vector<MonotoneSegment> monotone_segments(const Interval& j) const {
        std::vector<MonotoneSegment> out;
        const auto& kn = impl_->knots;
        const auto& pcs = impl_->pieces;
        if (j.degenerate()) return {{j, Direction::constant}};
        for (std::size_t i = piece_index(j.lo); i < pcs.size() && kn[i] < j.hi; ++i) {
            const double s = std::max(j.lo, kn[i]), t = std::min(j.hi, kn[i + 1]);
            if (!(s < t)) continue;
            const double fs = (s == kn[i]) ? impl_->left_ends[i] : pcs[i].eval(s);
            const double ft = (t == kn[i + 1]) ? impl_->right_ends[i] : pcs[i].eval(t);
            const Direction d = fs < ft ? Direction::increasing
                                        : (fs > ft ? Direction::decreasing : Direction::constant);
            if (out.empty()) {
                out.push_back({Interval{s, t}, d});
                continue;
            }
            MonotoneSegment& last = out.back();
            if (d == Direction::constant || last.direction == d) {
                last.span.hi = t;
            } else if (last.direction == Direction::constant) {
                last.span.hi = t;
                last.direction = d;
            } else {
                out.push_back({Interval{s, t}, d});
            }
        }
        return out;
    }

    /// Maps x into the domain, tolerating rounding-level overshoot.
    double clamp_to_domain(double x) const {
        const double lo = impl_->knots.front(), hi = impl_->knots.back();
        if (x >= lo && x <= hi) return x;
        const double tol = kDomainTolerance * std::max({1.0, std::abs(lo), std::abs(hi)});
        if (x < lo - tol || x > hi + tol || std::isnan(x))
            throw DomainError("point " + std::to_string(x) + " outside domain [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "]");
        return std::clamp(x, lo, hi);
    }

private:
    struct Impl {
        std::vector<Piece> pieces;
        std::vector<double> knots;
        std::vector<double> point_values;
        std::vector<double> left_ends;   // eval at piece lo
        std::vector<double> right_ends;  // eval at piece hi
        double bound = 0.0;
    };
    std::shared_ptr<const Impl> impl_;
};

inline double sup_on(const PiecewiseMonotoneFn& f, const Interval& j) { return f.bounds_on(j).sup; }
inline double inf_on(const PiecewiseMonotoneFn& f, const Interval& j) { return f.bounds_on(j).inf; }
inline double oscillation(const PiecewiseMonotoneFn& f, const Interval& j) { return f.bounds_on(j).oscillation(); }

inline std::vector<MonotoneSegment> monotone_segments(const PiecewiseMonotoneFn& f, const Interval& j) {
    return f.monotone_segments(j);
}

inline bool continuous_on(const PiecewiseMonotoneFn& f, const Interval& j) { return f.continuous_on(j); }

} // namespace rsint
