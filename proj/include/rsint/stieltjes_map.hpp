#pragma once

/**
 * @file stieltjes_map.hpp
 * @brief Indefinite integrals of piecewise-monotone densities, their
 *        ranges, induced partitions and compositions.
 */

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "core.hpp"
#include "piecewise.hpp"

namespace rsint {

/// Φ(x) = Φ(a) + ∫_[a,x] φ. The cumulative table at density knots is built
/// once at construction and never mutated, so copies share it freely.
/// Inside a piece the piece primitive is used when available. Otherwise the
/// piece is cut into kSubcells equal parts with adaptive Gauss–Kronrod
/// values at the cuts, and a fixed Gauss–Legendre rule covers the rest.
class IndefiniteIntegral {
public:
    IndefiniteIntegral(PiecewiseMonotoneFn density, double a, double base_value) {
        auto impl = std::make_shared<Impl>(std::move(density));
        Impl& m = *impl;
        const Interval dom = m.density.domain();
        if (!dom.contains(a)) throw DomainError("base point outside density domain");
        m.a = a;
        m.base = base_value;

        const auto& kn = m.density.knots();
        m.build_subcells();
        m.cum.assign(kn.size(), 0.0);
        CompensatedSum acc;
        for (std::size_t i = 0; i + 1 < kn.size(); ++i) {
            acc += m.partial(i, kn[i + 1]);
            m.cum[i + 1] = acc.value();
        }
        // shift so that Φ(a) = base_value
        const std::size_t ia = m.density.piece_index(a);
        const double at_a = m.cum[ia] + m.partial(ia, a);
        for (double& c : m.cum) c += base_value - at_a;
        m.build_segments();
        impl_ = std::move(impl);
    }

    const PiecewiseMonotoneFn& density() const noexcept { return impl_->density; }
    double base_point() const noexcept { return impl_->a; }
    double base_value() const noexcept { return impl_->base; }
    Interval domain() const { return impl_->density.domain(); }
    /// Lipschitz constant M_φ.
    double lipschitz() const noexcept { return impl_->density.global_bound(); }

    double operator()(double x) const {
        const Impl& m = *impl_;
        x = m.density.clamp_to_domain(x);
        if (x == m.a) return m.base;
        const std::size_t i = m.density.piece_index(x);
        const double s = m.density.knots()[i];
        if (x == s) return m.cum[i];
        return m.cum[i] + m.partial(i, x);
    }

    /// Sign changes of the density (turning points of Φ).
    const std::vector<double>& turning_points() const noexcept { return impl_->turning; }

    /// Density knots and turning points strictly inside the domain.
    std::vector<double> breakpoints() const {
        std::vector<double> pts = impl_->density.breakpoints();
        pts.insert(pts.end(), impl_->turning.begin(), impl_->turning.end());
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        return pts;
    }

    bool continuous_on(const Interval&) const noexcept { return true; }

    std::vector<MonotoneSegment> monotone_segments(const Interval& j) const {
        if (j.degenerate()) return {{j, Direction::constant}};
        std::vector<MonotoneSegment> out;
        for (const auto& s : impl_->segments) {
            const double lo = std::max(s.span.lo, j.lo), hi = std::min(s.span.hi, j.hi);
            if (lo < hi) out.push_back({Interval{lo, hi}, s.direction});
        }
        return out;
    }

    /// Exact range of Φ over J (Φ is continuous).
    Bounds bounds_on(const Interval& j) const {
        double lo = (*this)(j.lo), hi = lo;
        auto take = [&](double x) {
            const double v = (*this)(x);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        };
        for (double t : impl_->turning)
            if (j.interior(t)) take(t);
        take(j.hi);
        return {lo, hi};
    }

private:
    struct Impl {
        explicit Impl(PiecewiseMonotoneFn d) : density(std::move(d)) {}

        PiecewiseMonotoneFn density;
        double a = 0.0;
        double base = 0.0;
        std::vector<double> cum;  // Φ at density knots
        std::vector<MonotoneSegment> segments;
        std::vector<double> turning;
        std::vector<std::vector<double>> sub;  // per piece without primitive: ∫ from piece start to each cut

        static constexpr int kSubcells = 64;

        double piece_integral(std::size_t i, double s, double t) const {
            if (s == t) return 0.0;
            const Piece& p = density.pieces()[i];
            if (p.primitive) return p.primitive(t) - p.primitive(s);
            using boost::math::quadrature::gauss_kronrod;
            return gauss_kronrod<double, 21>::integrate(p.eval, s, t, 12, 1e-14);
        }

        void build_subcells() {
            const auto& pcs = density.pieces();
            sub.assign(pcs.size(), {});
            for (std::size_t i = 0; i < pcs.size(); ++i) {
                if (pcs[i].primitive) continue;
                const Interval sp = pcs[i].span;
                std::vector<double>& v = sub[i];
                v.assign(kSubcells + 1, 0.0);
                CompensatedSum acc;
                for (int k = 0; k < kSubcells; ++k) {
                    acc += piece_integral(i, cut(sp, k), cut(sp, k + 1));
                    v[k + 1] = acc.value();
                }
            }
        }

        static double cut(const Interval& sp, int k) {
            return k == kSubcells ? sp.hi : sp.lo + sp.width() * k / kSubcells;
        }

        /// ∫ from the start of piece i to x.
        double partial(std::size_t i, double x) const {
            const Piece& p = density.pieces()[i];
            if (p.primitive) return p.primitive(x) - p.primitive(p.span.lo);
            const Interval sp = p.span;
            int k = static_cast<int>(std::floor((x - sp.lo) / sp.width() * kSubcells));
            k = std::clamp(k, 0, kSubcells - 1);
            while (k > 0 && cut(sp, k) > x) --k;
            while (k + 1 < kSubcells && cut(sp, k + 1) <= x) ++k;
            const double c = cut(sp, k);
            if (x == c) return sub[i][k];
            using boost::math::quadrature::gauss;
            return sub[i][k] + gauss<double, 15>::integrate(p.eval, c, x);
        }

        void build_segments() {
            const auto& kn = density.knots();
            const auto& pcs = density.pieces();
            const double slack = kSlack * std::max(1.0, density.global_bound());
            // elementary sub-intervals: pieces cut at interior sign changes
            std::vector<double> cuts;
            for (std::size_t i = 0; i < pcs.size(); ++i) {
                cuts.push_back(kn[i]);
                const double u = density.right_limit(i), v = density.left_limit(i + 1);
                if ((u < -slack && v > slack) || (u > slack && v < -slack)) {
                    const double r = bisect_root(pcs[i].eval, kn[i], kn[i + 1]);
                    if (r > kn[i] && r < kn[i + 1]) cuts.push_back(r);
                }
            }
            cuts.push_back(kn.back());
            for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
                const Interval cell{cuts[k], cuts[k + 1]};
                const Bounds b = density.bounds_on(cell);
                Direction d = Direction::constant;
                if (b.inf >= -slack && b.sup > slack) d = Direction::increasing;
                else if (b.sup <= slack && b.inf < -slack) d = Direction::decreasing;
                else if (b.inf < -slack && b.sup > slack)
                    throw InternalError("density sign not constant between located sign changes");
                if (segments.empty()) {
                    segments.push_back({cell, d});
                    continue;
                }
                MonotoneSegment& last = segments.back();
                if (d == Direction::constant || last.direction == d) {
                    last.span.hi = cell.hi;
                } else if (last.direction == Direction::constant) {
                    last.span.hi = cell.hi;
                    last.direction = d;
                } else {
                    turning.push_back(cell.lo);
                    segments.push_back({cell, d});
                }
            }
        }
    };
    std::shared_ptr<const Impl> impl_;
};

inline IndefiniteIntegral build_indefinite(PiecewiseMonotoneFn density, double a, double base_value) {
    return IndefiniteIntegral(std::move(density), a, base_value);
}

struct RangeInfo {
    Interval range;
    double x_m = 0.0;
    double x_M = 0.0;
    OrientedInterval oriented_span;
};

/// Φ(I) with extremal points. Candidates are I's endpoints and the turning
/// points inside I; ties within kSlack go to the smallest x.
template <class G>
RangeInfo range_of(const G& phi, const Interval& i) {
    std::vector<double> cand{i.lo};
    for (const auto& seg : phi.monotone_segments(i)) cand.push_back(seg.span.hi);
    cand.push_back(i.hi);
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    std::vector<double> val(cand.size());
    for (std::size_t k = 0; k < cand.size(); ++k) val[k] = phi(cand[k]);
    const double vmin = *std::min_element(val.begin(), val.end());
    const double vmax = *std::max_element(val.begin(), val.end());
    RangeInfo r;
    r.range = Interval{vmin, vmax};
    for (std::size_t k = 0; k < cand.size(); ++k) {
        if (val[k] <= vmin + kSlack) {
            r.x_m = cand[k];
            break;
        }
    }
    for (std::size_t k = 0; k < cand.size(); ++k) {
        if (val[k] >= vmax - kSlack) {
            r.x_M = cand[k];
            break;
        }
    }
    r.oriented_span = OrientedInterval{phi(i.lo), phi(i.hi)};
    return r;
}

/// Oriented image cells [Φ(x_{k-1}), Φ(x_k)], one per cell of P. They tile
/// Φ(I) in order only when Φ is monotone on P's base.
template <class G>
std::vector<OrientedInterval> induce_partition(const G& phi, const Partition& p) {
    const auto& x = p.points();
    std::vector<OrientedInterval> out;
    out.reserve(p.size());
    double prev = phi(x[0]);
    for (std::size_t k = 1; k < x.size(); ++k) {
        const double next = phi(x[k]);
        out.push_back({prev, next});
        prev = next;
    }
    return out;
}

/// f∘Φ as a piecewise-monotone function on J. Pieces are Φ's monotone runs
/// cut at preimages of f's knots; each piece evaluates one monotone piece
/// of f at Φ(x), so its direction is the composition of directions.
template <class G>
PiecewiseMonotoneFn compose(const PiecewiseMonotoneFn& f, const G& phi, const Interval& j) {
    constexpr double kMerge = 1e-12;
    const auto& fk = f.knots();
    std::vector<Piece> pieces;
    std::vector<double> pv;
    auto f_point = [&](double y) { return f(y); };

    for (const auto& seg : phi.monotone_segments(j)) {
        const double s = seg.span.lo, t = seg.span.hi;
        if (pieces.empty()) pv.push_back(f_point(phi(s)));
        if (seg.direction == Direction::constant) {
            const double c = f_point(phi(s));
            Piece p;
            p.span = Interval{s, t};
            p.eval = [c](double) { return c; };
            pieces.push_back(std::move(p));
            pv.push_back(f_point(phi(t)));
            continue;
        }
        const double ys = phi(s), yt = phi(t);
        const double ylo = std::min(ys, yt), yhi = std::max(ys, yt);
        const double ytol = kMerge * std::max(1.0, std::max(std::abs(ylo), std::abs(yhi)));
        // (x, knot index) pairs of interior preimages
        std::vector<std::pair<double, std::size_t>> cuts;
        for (std::size_t k = 0; k < fk.size(); ++k) {
            if (!(fk[k] > ylo + ytol && fk[k] < yhi - ytol)) continue;
            const double x = solve_monotone(phi, fk[k], s, t);
            if (x - s <= kMerge || t - x <= kMerge) continue;
            cuts.emplace_back(x, k);
        }
        std::sort(cuts.begin(), cuts.end());
        std::vector<std::pair<double, std::size_t>> kept;
        for (const auto& c : cuts)
            if (kept.empty() || c.first - kept.back().first > kMerge) kept.push_back(c);

        double x_prev = s;
        for (std::size_t k = 0; k <= kept.size(); ++k) {
            const double x_next = k < kept.size() ? kept[k].first : t;
            const double ymid = phi(x_prev + 0.5 * (x_next - x_prev));
            const Piece& fp = f.pieces()[f.piece_index(ymid)];
            Piece p;
            p.span = Interval{x_prev, x_next};
            p.eval = [ev = fp.eval, lo = fp.span.lo, hi = fp.span.hi, phi](double x) {
                return ev(std::clamp(phi(x), lo, hi));
            };
            pieces.push_back(std::move(p));
            pv.push_back(k < kept.size() ? f.point_values()[kept[k].second] : f_point(phi(t)));
            x_prev = x_next;
        }
    }
    return PiecewiseMonotoneFn(std::move(pieces), std::move(pv));
}

template <class G>
PiecewiseMonotoneFn compose(const PiecewiseMonotoneFn& f, const G& phi) {
    return compose(f, phi, phi.domain());
}

} // namespace rsint
