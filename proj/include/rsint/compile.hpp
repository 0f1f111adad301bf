#pragma once

/**
 * @file compile.hpp
 * @brief Turns an expression into a PiecewiseMonotoneFn on a closed domain.
 *
 * Breakpoints come from three sources. Jump and kink points (step, abs,
 * min, max, piecewise conditions) are located by bisecting the predicate
 * itself down to adjacent doubles. Between those, each smooth branch is cut
 * at its turning points: exact derivative roots for polynomials, quarter
 * periods of sin/cos arguments, and roots of factors, followed by interval
 * analysis of the derivative sign. Only when that analysis stays
 * inconclusive does the compiler sample the derivative, and the result is
 * then flagged as not certified.
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core.hpp"
#include "errors.hpp"
#include "expr.hpp"
#include "piecewise.hpp"

namespace rsint::expr {

struct CompiledFn {
    PiecewiseMonotoneFn fn;
    /// false when some turning point was found by sampling the derivative
    bool certified = true;
    NodePtr source;

    double operator()(double x) const { return fn(x); }
    std::vector<double> breakpoints() const { return fn.breakpoints(); }
    std::vector<Direction> directions() const {
        std::vector<Direction> d;
        for (const auto& p : fn.pieces()) d.push_back(p.direction);
        return d;
    }
};

namespace compile_detail {

constexpr int kMaxDegree = 64;
constexpr int kDomainDepth = 24;
constexpr int kSignDepth = 8;
constexpr int kFallbackSamples = 256;
constexpr int kCheckSamples = 1000;

using Poly = std::vector<double>;

inline bool is_call(const Node& n, std::string_view name) { return n.kind == Kind::call && n.name == name; }

inline bool is_integer(double v) { return std::isfinite(v) && v == std::nearbyint(v); }

inline std::string where(const Node& n) {
    return " at " + std::to_string(n.line) + ":" + std::to_string(n.column);
}

// -- polynomials ---------------------------------------------------------------

inline void trim(Poly& p) {
    while (p.size() > 1 && p.back() == 0.0) p.pop_back();
}

inline Poly poly_mul(const Poly& a, const Poly& b) {
    Poly r(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
    trim(r);
    return r;
}

inline Poly poly_add(Poly a, const Poly& b, double sb) {
    if (a.size() < b.size()) a.resize(b.size(), 0.0);
    for (std::size_t i = 0; i < b.size(); ++i) a[i] += sb * b[i];
    trim(a);
    return a;
}

inline double horner(const Poly& p, double x) {
    double v = 0.0;
    for (auto it = p.rbegin(); it != p.rend(); ++it) v = v * x + *it;
    return v;
}

inline Poly derivative(const Poly& p) {
    if (p.size() <= 1) return {0.0};
    Poly d(p.size() - 1);
    for (std::size_t i = 1; i < p.size(); ++i) d[i - 1] = static_cast<double>(i) * p[i];
    trim(d);
    return d;
}

inline Poly antiderivative(const Poly& p) {
    Poly a(p.size() + 1, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) a[i + 1] = p[i] / static_cast<double>(i + 1);
    return a;
}

/// Coefficients (ascending) when n is a polynomial in the variable.
inline std::optional<Poly> as_poly(const Node& n) {
    if (!depends_on_variable(n)) return Poly{evaluate(n, 0.0)};
    switch (n.kind) {
        case Kind::variable: return Poly{0.0, 1.0};
        case Kind::negate: {
            auto a = as_poly(*n.args[0]);
            if (!a) return std::nullopt;
            for (double& c : *a) c = -c;
            return a;
        }
        case Kind::add:
        case Kind::sub: {
            auto a = as_poly(*n.args[0]), b = as_poly(*n.args[1]);
            if (!a || !b) return std::nullopt;
            return poly_add(*a, *b, n.kind == Kind::add ? 1.0 : -1.0);
        }
        case Kind::mul: {
            auto a = as_poly(*n.args[0]), b = as_poly(*n.args[1]);
            if (!a || !b || a->size() + b->size() - 2 > kMaxDegree) return std::nullopt;
            return poly_mul(*a, *b);
        }
        case Kind::div: {
            if (depends_on_variable(*n.args[1])) return std::nullopt;
            const double d = evaluate(*n.args[1], 0.0);
            auto a = as_poly(*n.args[0]);
            if (!a || d == 0.0) return std::nullopt;
            for (double& c : *a) c /= d;
            return a;
        }
        case Kind::pow: {
            if (depends_on_variable(*n.args[1])) return std::nullopt;
            const double e = evaluate(*n.args[1], 0.0);
            auto b = as_poly(*n.args[0]);
            if (!b || !is_integer(e) || e < 0 || (b->size() - 1) * e > kMaxDegree) return std::nullopt;
            Poly r{1.0};
            for (int i = 0; i < static_cast<int>(e); ++i) r = poly_mul(r, *b);
            return r;
        }
        default: return std::nullopt;
    }
}

/// Shrinks [lo, hi] around the point where pred switches from pred(lo) to
/// pred(hi); returns the first double with pred == pred(hi).
template <class Pred>
double bisect_switch(double lo, double hi, const Pred& pred) {
    const bool right = pred(hi);
    for (int it = 0; it < 2200; ++it) {
        const double mid = lo + 0.5 * (hi - lo);
        if (!(mid > lo && mid < hi)) break;
        (pred(mid) == right ? hi : lo) = mid;
    }
    return hi;
}

/// Sign-changing roots of p strictly inside (a, b), ascending.
inline std::vector<double> poly_crossings(const Poly& p, double a, double b) {
    std::vector<double> roots;
    const int deg = static_cast<int>(p.size()) - 1;
    auto keep = [&](double r) {
        if (r > a && r < b && std::isfinite(r)) roots.push_back(r);
    };
    if (deg <= 0) return roots;
    if (deg == 1) {
        keep(-p[0] / p[1]);
    } else if (deg == 2) {
        const double disc = p[1] * p[1] - 4.0 * p[2] * p[0];
        if (disc > 0.0) {
            const double q = -0.5 * (p[1] + std::copysign(std::sqrt(disc), p[1]));
            keep(q / p[2]);
            if (q != 0.0) keep(p[0] / q);
        }
    } else if (deg == 3) {
        // depressed cubic t^3 + P t + Q with x = t - B/3
        const double B = p[2] / p[3], C = p[1] / p[3], D = p[0] / p[3];
        const double P = C - B * B / 3.0, Q = 2.0 * B * B * B / 27.0 - B * C / 3.0 + D;
        const double disc = -(4.0 * P * P * P + 27.0 * Q * Q);
        std::vector<double> t;
        if (P == 0.0 && Q == 0.0) {
            t = {0.0};
        } else if (disc > 0.0) {
            const double m = 2.0 * std::sqrt(-P / 3.0);
            const double th = std::acos(std::clamp(3.0 * Q / (P * m), -1.0, 1.0)) / 3.0;
            for (int k = 0; k < 3; ++k) t.push_back(m * std::cos(th - 2.0 * M_PI * k / 3.0));
        } else if (disc < 0.0) {
            const double s = std::sqrt(Q * Q / 4.0 + P * P * P / 27.0);
            t = {std::cbrt(-Q / 2.0 + s) + std::cbrt(-Q / 2.0 - s)};
        } else {
            t = {-1.5 * Q / P};  // the simple root; the double root does not cross
        }
        const Poly dp = derivative(p);
        for (double ti : t) {
            double x = ti - B / 3.0;
            for (int k = 0; k < 3; ++k) {
                const double d = horner(dp, x);
                if (d == 0.0) break;
                const double nx = x - horner(p, x) / d;
                if (!std::isfinite(nx)) break;
                x = nx;
            }
            keep(x);
        }
    } else {
        // p is monotone between consecutive crossings of p'
        std::vector<double> pts{a};
        const auto crit = poly_crossings(derivative(p), a, b);
        pts.insert(pts.end(), crit.begin(), crit.end());
        pts.push_back(b);
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            const double s = pts[i], e = pts[i + 1];
            const double vs = horner(p, s), ve = horner(p, e);
            if ((vs < 0.0 && ve > 0.0) || (vs > 0.0 && ve < 0.0))
                keep(bisect_switch(s, e, [&](double x) { return horner(p, x) > 0.0; }));
        }
    }
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
    return roots;
}

// -- interval ranges -------------------------------------------------------------

inline Bounds whole() {
    const double inf = std::numeric_limits<double>::infinity();
    return {-inf, inf};
}

/// Range of sin(t + shift) for t in [lo, hi].
inline Bounds sin_range(double lo, double hi, double shift) {
    lo += shift;
    hi += shift;
    if (!(hi - lo < 2.0 * M_PI)) return {-1.0, 1.0};
    Bounds b{std::min(std::sin(lo), std::sin(hi)), std::max(std::sin(lo), std::sin(hi))};
    const double kmax = std::ceil((lo - M_PI / 2.0) / (2.0 * M_PI));
    if (M_PI / 2.0 + 2.0 * M_PI * kmax <= hi) b.sup = 1.0;
    const double kmin = std::ceil((lo + M_PI / 2.0) / (2.0 * M_PI));
    if (-M_PI / 2.0 + 2.0 * M_PI * kmin <= hi) b.inf = -1.0;
    return b;
}

inline Bounds power_range(const Bounds& b, double e) {
    if (e == 0.0) return {1.0, 1.0};
    if (is_integer(e)) {
        const bool even = std::fmod(std::abs(e), 2.0) == 0.0;
        if (e < 0.0 && b.inf <= 0.0 && b.sup >= 0.0) return whole();
        const double pl = std::pow(b.inf, e), ph = std::pow(b.sup, e);
        if (b.inf >= 0.0 || !even) {
            if (b.inf >= 0.0 || e > 0.0) return {std::min(pl, ph), std::max(pl, ph)};
            return {std::min(pl, ph), std::max(pl, ph)};
        }
        if (b.sup <= 0.0) return {std::min(pl, ph), std::max(pl, ph)};
        return {0.0, std::max(pl, ph)};  // even power, base straddles 0
    }
    if (b.inf < 0.0 || (e < 0.0 && b.inf <= 0.0)) return whole();
    const double pl = std::pow(b.inf, e), ph = std::pow(b.sup, e);
    return {std::min(pl, ph), std::max(pl, ph)};
}

inline Bounds range(const Node& n, const Interval& j) {
    auto r = [&](std::size_t i) { return range(*n.args[i], j); };
    switch (n.kind) {
        case Kind::number:
        case Kind::constant: return {n.value, n.value};
        case Kind::variable: return {j.lo, j.hi};
        case Kind::negate: {
            const Bounds a = r(0);
            return {-a.sup, -a.inf};
        }
        case Kind::add: {
            const Bounds a = r(0), b = r(1);
            return {a.inf + b.inf, a.sup + b.sup};
        }
        case Kind::sub: {
            const Bounds a = r(0), b = r(1);
            return {a.inf - b.sup, a.sup - b.inf};
        }
        case Kind::mul: return multiply(r(0), r(1));
        case Kind::div: {
            const Bounds b = r(1);
            if (b.inf <= 0.0 && b.sup >= 0.0) return whole();
            return multiply(r(0), Bounds{1.0 / b.sup, 1.0 / b.inf});
        }
        case Kind::pow: {
            if (depends_on_variable(*n.args[1])) return whole();
            return power_range(r(0), evaluate(*n.args[1], 0.0));
        }
        case Kind::compare: return {0.0, 1.0};
        case Kind::call: break;
    }
    if (is_call(n, "sin") || is_call(n, "cos")) {
        const Bounds a = r(0);
        return sin_range(a.inf, a.sup, n.name == "cos" ? M_PI / 2.0 : 0.0);
    }
    if (is_call(n, "exp")) {
        const Bounds a = r(0);
        return {std::exp(a.inf), std::exp(a.sup)};
    }
    if (is_call(n, "log")) {
        const Bounds a = r(0);
        if (a.inf <= 0.0) return whole();
        return {std::log(a.inf), std::log(a.sup)};
    }
    if (is_call(n, "abs")) {
        const Bounds a = r(0);
        if (a.inf >= 0.0) return a;
        if (a.sup <= 0.0) return {-a.sup, -a.inf};
        return {0.0, std::max(-a.inf, a.sup)};
    }
    if (is_call(n, "min") || is_call(n, "max")) {
        const Bounds a = r(0), b = r(1);
        if (n.name == "min") return {std::min(a.inf, b.inf), std::min(a.sup, b.sup)};
        return {std::max(a.inf, b.inf), std::max(a.sup, b.sup)};
    }
    if (is_call(n, "step")) {
        const double c = evaluate(*n.args[0], 0.0);
        if (j.lo >= c) return {1.0, 1.0};
        if (j.hi < c) return {0.0, 0.0};
        return {0.0, 1.0};
    }
    // piecewise: hull of the branch values
    Bounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (std::size_t i = 1; i < n.args.size(); i += 2) {
        const Bounds v = r(i);
        b.inf = std::min(b.inf, v.inf);
        b.sup = std::max(b.sup, v.sup);
    }
    const Bounds last = r(n.args.size() - 1);
    return {std::min(b.inf, last.inf), std::max(b.sup, last.sup)};
}

// -- domain checks -------------------------------------------------------------

/// Empty when node n is defined on j according to interval evaluation of
/// its arguments, otherwise the reason.
inline std::string local_violation(const Node& n, const Interval& j) {
    if (n.kind == Kind::div) {
        const Bounds b = range(*n.args[1], j);
        if (!(b.inf > 0.0 || b.sup < 0.0)) return "division by an expression that may vanish";
    } else if (n.kind == Kind::pow) {
        const double e = evaluate(*n.args[1], 0.0);
        const Bounds b = range(*n.args[0], j);
        if (is_integer(e)) {
            if (e < 0.0 && !(b.inf > 0.0 || b.sup < 0.0)) return "negative power of an expression that may vanish";
        } else if (e > 0.0 ? b.inf < 0.0 : b.inf <= 0.0) {
            return "fractional power of an expression that may be negative";
        }
    } else if (is_call(n, "log")) {
        if (!(range(*n.args[0], j).inf > 0.0)) return "log of an expression that may be non-positive";
    }
    return {};
}

inline bool defined_on(const Node& n, const Interval& j, int depth) {
    if (local_violation(n, j).empty()) return true;
    if (depth == 0 || !(j.width() > 0.0)) return false;
    const double m = j.midpoint();
    if (!(m > j.lo && m < j.hi)) return false;
    return defined_on(n, Interval{j.lo, m}, depth - 1) && defined_on(n, Interval{m, j.hi}, depth - 1);
}

/// Throws DomainError unless every partial operation in n is defined on j.
inline void check_domain(const Node& n, const Interval& j) {
    for (const auto& a : n.args) check_domain(*a, j);
    if (n.kind == Kind::pow && depends_on_variable(*n.args[1]))
        throw DomainError("exponent must not depend on the variable" + where(n));
    if (is_call(n, "step") && depends_on_variable(*n.args[0]))
        throw DomainError("step location must be a constant" + where(n));
    if (!defined_on(n, j, kDomainDepth)) {
        const std::string why = local_violation(n, j);
        throw DomainError(why + where(n) + " on [" + format_number(j.lo) + ", " + format_number(j.hi) + "]");
    }
}

// -- derivative sign analysis ------------------------------------------------------

enum class Sg { zero, nonneg, nonpos, unknown };

inline Sg sign_of(const Bounds& b) {
    const double tol = 1e-12 * std::max({1.0, std::abs(b.inf), std::abs(b.sup)});
    if (!(b.inf >= -tol) && !(b.sup <= tol)) return Sg::unknown;
    if (b.inf >= -tol && b.sup <= tol) return Sg::zero;
    return b.inf >= -tol ? Sg::nonneg : Sg::nonpos;
}

inline Sg flip(Sg s) {
    if (s == Sg::nonneg) return Sg::nonpos;
    if (s == Sg::nonpos) return Sg::nonneg;
    return s;
}

inline Sg times(Sg a, Sg b) {
    if (a == Sg::zero || b == Sg::zero) return Sg::zero;
    if (a == Sg::unknown || b == Sg::unknown) return Sg::unknown;
    return a == b ? Sg::nonneg : Sg::nonpos;
}

inline Sg plus(Sg a, Sg b) {
    if (a == Sg::zero) return b;
    if (b == Sg::zero) return a;
    return a == b ? a : Sg::unknown;
}

/// Sign of the derivative of a branch-free node over j, from interval
/// ranges of the subexpressions.
inline Sg dsign(const Node& n, const Interval& j) {
    if (!depends_on_variable(n)) return Sg::zero;
    auto d = [&](std::size_t i) { return dsign(*n.args[i], j); };
    auto s = [&](std::size_t i) { return sign_of(range(*n.args[i], j)); };
    switch (n.kind) {
        case Kind::variable: return Sg::nonneg;
        case Kind::negate: return flip(d(0));
        case Kind::add: return plus(d(0), d(1));
        case Kind::sub: return plus(d(0), flip(d(1)));
        case Kind::mul: return plus(times(d(0), s(1)), times(s(0), d(1)));
        case Kind::div: return plus(times(d(0), s(1)), flip(times(s(0), d(1))));
        case Kind::pow: {
            const double e = evaluate(*n.args[1], 0.0);
            if (e == 0.0) return Sg::zero;
            const Bounds b = range(*n.args[0], j);
            Sg factor = Sg::nonneg;  // sign of u^(e-1)
            if (b.inf < 0.0) {
                if (!is_integer(e)) return Sg::unknown;
                const bool even = std::fmod(std::abs(e - 1.0), 2.0) == 0.0;
                factor = even ? Sg::nonneg : sign_of(b);
            }
            return times(times(e > 0.0 ? Sg::nonneg : Sg::nonpos, factor), d(0));
        }
        case Kind::call: break;
        default: return Sg::unknown;
    }
    if (is_call(n, "exp") || is_call(n, "log")) return d(0);
    if (is_call(n, "sin") || is_call(n, "cos")) {
        const Bounds a = range(*n.args[0], j);
        // sin' = cos = sin(. + π/2), cos' = -sin
        if (n.name == "sin") return times(sign_of(sin_range(a.inf, a.sup, M_PI / 2.0)), d(0));
        return times(flip(sign_of(sin_range(a.inf, a.sup, 0.0))), d(0));
    }
    return Sg::unknown;
}

// -- forward-mode derivative for the sampling fallback ---------------------------

struct Dual {
    double v = 0.0;
    double d = 0.0;
};

inline Dual eval_dual(const Node& n, double x) {
    auto a = [&](std::size_t i) { return eval_dual(*n.args[i], x); };
    switch (n.kind) {
        case Kind::number:
        case Kind::constant: return {n.value, 0.0};
        case Kind::variable: return {x, 1.0};
        case Kind::negate: {
            const Dual u = a(0);
            return {-u.v, -u.d};
        }
        case Kind::add: {
            const Dual u = a(0), w = a(1);
            return {u.v + w.v, u.d + w.d};
        }
        case Kind::sub: {
            const Dual u = a(0), w = a(1);
            return {u.v - w.v, u.d - w.d};
        }
        case Kind::mul: {
            const Dual u = a(0), w = a(1);
            return {u.v * w.v, u.d * w.v + u.v * w.d};
        }
        case Kind::div: {
            const Dual u = a(0), w = a(1);
            return {u.v / w.v, (u.d * w.v - u.v * w.d) / (w.v * w.v)};
        }
        case Kind::pow: {
            const Dual u = a(0);
            const double e = evaluate(*n.args[1], 0.0);
            if (e == 0.0) return {1.0, 0.0};
            return {std::pow(u.v, e), e * std::pow(u.v, e - 1.0) * u.d};
        }
        default: break;
    }
    const Dual u = a(0);
    if (n.name == "sin") return {std::sin(u.v), std::cos(u.v) * u.d};
    if (n.name == "cos") return {std::cos(u.v), -std::sin(u.v) * u.d};
    if (n.name == "exp") return {std::exp(u.v), std::exp(u.v) * u.d};
    if (n.name == "log") return {std::log(u.v), u.d / u.v};
    throw std::logic_error("eval_dual on a branching node");
}

// -- monotone splitting ------------------------------------------------------------

struct Cuts {
    std::vector<double> at;
    bool certified = true;

    void add(const Cuts& o) {
        at.insert(at.end(), o.at.begin(), o.at.end());
        certified = certified && o.certified;
    }
};

inline std::vector<double> cells_of(const Interval& j, std::vector<double> cuts) {
    std::vector<double> pts{j.lo};
    std::sort(cuts.begin(), cuts.end());
    for (double c : cuts)
        if (c > pts.back() && c < j.hi) pts.push_back(c);
    pts.push_back(j.hi);
    return pts;
}

Cuts monotone_cuts(const Node& n, const Interval& j);

/// Points where the branch-free node n changes sign inside j.
inline Cuts sign_changes(const Node& n, const Interval& j) {
    Cuts out;
    if (!depends_on_variable(n)) return out;
    if (auto p = as_poly(n)) {
        out.at = poly_crossings(*p, j.lo, j.hi);
        return out;
    }
    const Cuts m = monotone_cuts(n, j);
    out.certified = m.certified;
    const auto pts = cells_of(j, m.at);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double a = evaluate(n, pts[i]), b = evaluate(n, pts[i + 1]);
        if ((a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0))
            out.at.push_back(bisect_switch(pts[i], pts[i + 1], [&](double x) { return evaluate(n, x) > 0.0; }));
    }
    return out;
}

/// Points where the branch-free node n crosses target + k·period inside j.
inline Cuts level_crossings(const Node& n, const Interval& j, double target, double period) {
    Cuts out;
    if (!depends_on_variable(n)) return out;
    const Cuts m = monotone_cuts(n, j);
    out.certified = m.certified;
    const auto pts = cells_of(j, m.at);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double s = pts[i], e = pts[i + 1];
        const double us = evaluate(n, s), ue = evaluate(n, e);
        const double lo = std::min(us, ue), hi = std::max(us, ue);
        const double k0 = std::floor((lo - target) / period) + 1.0;
        if ((hi - lo) / period > 1e6) throw DomainError("argument of a periodic function varies too fast");
        for (double k = k0;; k += 1.0) {
            const double level = target + k * period;
            if (level >= hi) break;
            if (level <= lo) continue;
            out.at.push_back(bisect_switch(s, e, [&](double x) { return (evaluate(n, x) > level) == (ue > us); }));
        }
    }
    return out;
}

/// Candidate cut points: below every subterm the sign of a factor, the
/// monotonicity of an argument and the quarter period of sin/cos settle.
inline Cuts candidates(const Node& n, const Interval& j) {
    Cuts out;
    if (!depends_on_variable(n)) return out;
    for (const auto& a : n.args)
        if (depends_on_variable(*a)) out.add(monotone_cuts(*a, j));
    if (n.kind == Kind::mul || n.kind == Kind::div) {
        out.add(sign_changes(*n.args[0], j));
        out.add(sign_changes(*n.args[1], j));
    } else if (n.kind == Kind::pow) {
        out.add(sign_changes(*n.args[0], j));
    } else if (is_call(n, "sin") || is_call(n, "cos")) {
        out.add(level_crossings(*n.args[0], j, 0.0, M_PI / 2.0));
    }
    return out;
}

/// Derivative-sign leaves of n over j: cells with a settled sign, bisected
/// down to kSignDepth. Leaves that stay unsettled are cut where sampled
/// slopes change sign, which clears `certified`.
inline void settle(const Node& n, const Interval& j, int depth, std::vector<std::pair<Interval, Sg>>& out,
                   bool& certified) {
    const Sg s = dsign(n, j);
    if (s != Sg::unknown) {
        out.push_back({j, s});
        return;
    }
    const double m = j.midpoint();
    if (depth < kSignDepth && m > j.lo && m < j.hi) {
        settle(n, Interval{j.lo, m}, depth + 1, out, certified);
        settle(n, Interval{m, j.hi}, depth + 1, out, certified);
        return;
    }
    certified = false;
    auto slope = [&](double x) { return eval_dual(n, x).d; };
    std::vector<double> cuts;
    double px = j.lo, pd = slope(j.lo);
    for (int i = 1; i <= kFallbackSamples; ++i) {
        const double x = i == kFallbackSamples ? j.hi : j.lo + j.width() * i / kFallbackSamples;
        const double d = slope(x);
        if (!std::isfinite(d) || d == 0.0) continue;
        if (std::isfinite(pd) && pd != 0.0 && (d > 0.0) != (pd > 0.0))
            cuts.push_back(bisect_switch(px, x, [&](double t) { return (slope(t) > 0.0) == (d > 0.0); }));
        px = x;
        pd = d;
    }
    const auto pts = cells_of(j, cuts);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double d = slope(pts[i] + 0.5 * (pts[i + 1] - pts[i]));
        out.push_back({Interval{pts[i], pts[i + 1]}, d > 0.0 ? Sg::nonneg : (d < 0.0 ? Sg::nonpos : Sg::zero)});
    }
}

/// Interior points of j that split the branch-free node n into monotone
/// pieces.
inline Cuts monotone_cuts(const Node& n, const Interval& j) {
    Cuts out;
    if (!depends_on_variable(n)) return out;
    if (auto p = as_poly(n)) {
        out.at = poly_crossings(derivative(*p), j.lo, j.hi);
        return out;
    }
    const Cuts cand = candidates(n, j);
    out.certified = cand.certified;
    const auto pts = cells_of(j, cand.at);
    std::vector<std::pair<Interval, Sg>> leaves;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        settle(n, Interval{pts[i], pts[i + 1]}, 0, leaves, out.certified);
    // keep only the cuts where the derivative sign actually changes
    Sg run = Sg::zero;
    for (const auto& [cell, s] : leaves) {
        if (s == Sg::zero) continue;
        if (run != Sg::zero && s != run) out.at.push_back(cell.lo);
        run = s;
    }
    return out;
}

// -- branch points -----------------------------------------------------------------

/// The node with every branching construct resolved as it is at x.
inline NodePtr specialize(const NodePtr& n, double x) {
    if (!depends_on_variable(*n)) return n;
    if (is_call(*n, "step")) return number(evaluate(*n, x));
    if (is_call(*n, "abs")) {
        NodePtr u = specialize(n->args[0], x);
        return evaluate(*n->args[0], x) < 0.0 ? make(Kind::negate, {u}) : u;
    }
    if (is_call(*n, "min") || is_call(*n, "max")) {
        const double a = evaluate(*n->args[0], x), b = evaluate(*n->args[1], x);
        const bool first = n->name == "min" ? a <= b : a >= b;
        return specialize(n->args[first ? 0 : 1], x);
    }
    if (is_call(*n, "piecewise")) {
        for (std::size_t i = 0; i + 1 < n->args.size(); i += 2)
            if (evaluate(*n->args[i], x) != 0.0) return specialize(n->args[i + 1], x);
        return specialize(n->args.back(), x);
    }
    std::vector<NodePtr> args;
    for (const auto& a : n->args) args.push_back(specialize(a, x));
    auto m = std::make_shared<Node>(*n);
    m->args = std::move(args);
    return m;
}

inline bool branching(const Node& n) {
    return is_call(n, "step") || is_call(n, "abs") || is_call(n, "min") || is_call(n, "max") ||
           is_call(n, "piecewise");
}

inline bool has_branching(const Node& n) {
    if (branching(n)) return true;
    for (const auto& a : n.args)
        if (has_branching(*a)) return true;
    return false;
}

Cuts branch_points(const NodePtr& n, const Interval& j);

/// Points inside j where pred, a monotone test on `diff` away from inner
/// branch points, switches value.
template <class Pred>
Cuts predicate_switches(const NodePtr& diff, const Interval& j, const Pred& pred) {
    Cuts out = branch_points(diff, j);
    const auto cells = cells_of(j, out.at);
    for (std::size_t c = 0; c + 1 < cells.size(); ++c) {
        const Interval cell{cells[c], cells[c + 1]};
        const NodePtr d = specialize(diff, cell.midpoint());
        check_domain(*d, cell);
        const Cuts m = monotone_cuts(*d, cell);
        out.certified = out.certified && m.certified;
        const auto pts = cells_of(cell, m.at);
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            const double s = std::nextafter(pts[i], pts[i + 1]);
            const double e = std::nextafter(pts[i + 1], pts[i]);
            if (!(s < e)) continue;
            if (pred(s) != pred(e)) out.at.push_back(bisect_switch(s, e, pred));
            // an isolated point value, e.g. a tangency of diff with 0
            if (i > 0 && (pred(pts[i]) != pred(s) || pred(pts[i]) != pred(std::nextafter(pts[i], pts[i - 1]))))
                out.at.push_back(pts[i]);
        }
    }
    return out;
}

/// Jump and kink locations of n inside j.
inline Cuts branch_points(const NodePtr& n, const Interval& j) {
    Cuts out;
    if (!depends_on_variable(*n) || !has_branching(*n)) return out;
    if (is_call(*n, "step")) {
        if (depends_on_variable(*n->args[0])) throw DomainError("step location must be a constant" + where(*n));
        const double c = evaluate(*n->args[0], 0.0);
        if (j.interior(c)) out.at.push_back(c);
        return out;
    }
    if (is_call(*n, "abs")) {
        const NodePtr u = n->args[0];
        return predicate_switches(u, j, [&](double x) { return evaluate(*u, x) >= 0.0; });
    }
    if (is_call(*n, "min") || is_call(*n, "max")) {
        const NodePtr a = n->args[0], b = n->args[1];
        out = branch_points(a, j);
        out.add(branch_points(b, j));
        out.add(predicate_switches(make(Kind::sub, {a, b}), j,
                                   [&](double x) { return evaluate(*a, x) <= evaluate(*b, x); }));
        return out;
    }
    if (is_call(*n, "piecewise")) {
        // conditions are tested in order, so each one only matters where
        // the earlier ones fail; testing all of them everywhere is simpler
        for (std::size_t i = 0; i + 1 < n->args.size(); i += 2) {
            const NodePtr cond = n->args[i];
            out.add(predicate_switches(make(Kind::sub, {cond->args[0], cond->args[1]}), j,
                                       [&](double x) { return evaluate(*cond, x) != 0.0; }));
        }
        // each branch only needs analysis where it is selected
        const auto cells = cells_of(j, out.at);
        for (std::size_t c = 0; c + 1 < cells.size(); ++c) {
            const Interval cell{cells[c], cells[c + 1]};
            const double m = cell.midpoint();
            std::size_t pick = n->args.size() - 1;
            for (std::size_t i = 0; i + 1 < n->args.size(); i += 2)
                if (evaluate(*n->args[i], m) != 0.0) {
                    pick = i + 1;
                    break;
                }
            out.add(branch_points(n->args[pick], cell));
        }
        return out;
    }
    for (const auto& a : n->args) out.add(branch_points(a, j));
    return out;
}

inline Piece make_piece(const NodePtr& smooth, const Interval& span) {
    Piece p;
    p.span = span;
    if (auto poly = as_poly(*smooth)) {
        const Poly c = *poly, prim = antiderivative(c);
        p.eval = [c](double x) { return horner(c, x); };
        p.primitive = [prim](double x) { return horner(prim, x); };
    } else {
        p.eval = [smooth](double x) { return evaluate(*smooth, x); };
    }
    return p;
}

inline void check_pieces(const PiecewiseMonotoneFn& f) {
    const auto& pieces = f.pieces();
    const int per = std::max(8, kCheckSamples / static_cast<int>(pieces.size()));
    const double slack = 1e-9 * std::max(1.0, f.global_bound());
    for (const auto& p : pieces) {
        double prev = p.eval(p.span.lo);
        for (int i = 1; i <= per; ++i) {
            const double x = i == per ? p.span.hi : p.span.lo + p.span.width() * i / per;
            const double v = p.eval(x);
            if (!std::isfinite(v)) throw DomainError("expression is not finite at " + format_number(x));
            const bool bad = (p.direction == Direction::increasing && v < prev - slack) ||
                             (p.direction == Direction::decreasing && v > prev + slack) ||
                             (p.direction == Direction::constant && std::abs(v - prev) > slack);
            if (bad)
                throw InternalError("compiled piece [" + format_number(p.span.lo) + ", " +
                                    format_number(p.span.hi) + "] is not " + to_string(p.direction));
            prev = v;
        }
    }
}

} // namespace compile_detail

/// Piecewise monotone form of e on the closed interval `domain`.
inline CompiledFn compile(const NodePtr& e, const Interval& domain) {
    using namespace compile_detail;
    if (!(domain.lo < domain.hi)) throw std::invalid_argument("compile needs a domain of positive length");
    Cuts structural = branch_points(e, domain);
    const auto cells = cells_of(domain, structural.at);
    std::vector<double> knots{domain.lo};
    std::vector<NodePtr> smooth;
    bool certified = structural.certified;
    for (std::size_t c = 0; c + 1 < cells.size(); ++c) {
        const Interval cell{cells[c], cells[c + 1]};
        const NodePtr s = specialize(e, cell.midpoint());
        check_domain(*s, cell);
        const Cuts m = monotone_cuts(*s, cell);
        certified = certified && m.certified;
        for (double x : cells_of(cell, m.at)) {
            if (x == cell.lo) continue;
            // drop turning points that crowd a knot
            const double tol = 1e-13 * std::max(1.0, std::abs(x));
            if (x != cell.hi && (x - knots.back() < tol || cell.hi - x < tol)) continue;
            knots.push_back(x + 0.0);
            smooth.push_back(s);
        }
    }
    std::vector<Piece> pieces;
    std::vector<double> values;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) pieces.push_back(make_piece(smooth[i], {knots[i], knots[i + 1]}));
    for (double k : knots) values.push_back(evaluate(*e, k));
    PiecewiseMonotoneFn fn(std::move(pieces), std::move(values));
    check_pieces(fn);
    return CompiledFn{std::move(fn), certified, e};
}

inline CompiledFn compile(std::string_view source, const Interval& domain) { return compile(parse(source), domain); }

} // namespace rsint::expr
