#pragma once

/**
 * @file darboux.hpp
 * @brief Darboux–Stieltjes sums, oscillation sums, certification by
 *        adaptive refinement, and integral enclosures.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "adapters.hpp"
#include "core.hpp"
#include "piecewise.hpp"

namespace rsint {

/// Continuous integrator that is monotone on `span`. Evaluation returns the
/// increasing normalisation sign()·Φ, so every sum below is taken against
/// a non-decreasing function; a decreasing Φ is handled as −(−Φ).
template <Integrator G>
class StieltjesIntegrator {
public:
    StieltjesIntegrator(G phi, const Interval& span) : phi_(std::move(phi)), span_(span) {
        if (!phi_.domain().covers(span_)) throw DomainError("integration interval outside integrator domain");
        if (!phi_.continuous_on(span_)) throw HypothesisError("integrator is not continuous on the interval");
        direction_ = Direction::constant;
        for (const auto& seg : phi_.monotone_segments(span_)) {
            if (seg.direction == Direction::constant) continue;
            if (direction_ != Direction::constant && seg.direction != direction_)
                throw HypothesisError("integrator is not monotone on the interval");
            direction_ = seg.direction;
        }
    }

    double operator()(double x) const { return sign() * phi_(x); }
    int sign() const noexcept { return direction_ == Direction::decreasing ? -1 : 1; }
    Direction direction() const noexcept { return direction_; }
    const Interval& span() const noexcept { return span_; }
    const G& phi() const noexcept { return phi_; }

    std::vector<double> breakpoints() const {
        std::vector<double> pts;
        for (double x : phi_.breakpoints())
            if (span_.interior(x)) pts.push_back(x);
        return pts;
    }

private:
    G phi_;
    Interval span_;
    Direction direction_ = Direction::constant;
};

struct RefinementBudget {
    int max_rounds = 40;
    std::size_t max_cells = std::size_t{1} << 22;
};

struct CertificationReport {
    Partition partition;
    double upper = 0.0;
    double lower = 0.0;
    double gap = 0.0;
    double osc_sum = 0.0;
    double epsilon = 0.0;
    bool certified = false;
    int rounds = 0;
    /// gap after each round, starting with the initial partition
    std::vector<double> gap_history;

    Enclosure enclosure() const { return Enclosure{lower, upper}; }
};

class NotCertified : public std::runtime_error {
public:
    NotCertified(CertificationReport report, Enclosure best)
        : std::runtime_error("integral not certified within budget: gap " + std::to_string(report.gap) +
                             " > epsilon " + std::to_string(report.epsilon)),
          report_(std::move(report)),
          best_(best) {}

    const CertificationReport& report() const noexcept { return report_; }
    /// Best oriented enclosure reached before the budget ran out.
    const Enclosure& best() const noexcept { return best_; }

private:
    CertificationReport report_;
    Enclosure best_;
};

namespace detail {

struct Cell {
    double l, r, gl, gr;
    Bounds b;
    double contribution() const noexcept { return b.oscillation() * (gr - gl); }
};

struct Sums {
    double upper, lower, osc;
};

inline Sums sum_cells(const std::vector<Cell>& cells) {
    CompensatedSum u, l, o;
    for (const Cell& c : cells) {
        const double dg = c.gr - c.gl;
        u += c.b.sup * dg;
        l += c.b.inf * dg;
        o += c.b.oscillation() * dg;
    }
    return {u.value(), l.value(), o.value()};
}

inline constexpr int kMaxSplit = 64;

/// Number of equal parts for a cell of contribution c at threshold tau.
/// A part of a k-way split is modelled as carrying c/k².
inline int split_count(double c, double tau) {
    if (!(tau > 0.0)) return kMaxSplit;
    const double k = std::ceil(std::sqrt(c / tau));
    return static_cast<int>(std::clamp(k, 2.0, static_cast<double>(kMaxSplit)));
}

/// Contribution threshold for the next round: the largest quarter-octave
/// value whose modelled total meets `target`. Cells at or above it are
/// split into split_count equal parts, leaving c/k in total. When that
/// would need more than `room` new cells, the smallest threshold that fits
/// is returned instead.
inline double refinement_threshold(const std::vector<double>& contrib, double target, std::size_t room) {
    std::map<int, std::pair<double, std::size_t>> bins;
    for (double c : contrib) {
        if (!(c > 0.0)) continue;
        auto& bin = bins[static_cast<int>(std::floor(4.0 * std::log2(c)))];
        bin.first += c;
        ++bin.second;
    }
    if (bins.empty()) return 0.0;
    const int top = bins.rbegin()->first + 1;
    const int bottom = bins.begin()->first - 48;
    double last_fit = std::exp2(top / 4.0);
    for (int t = top; t >= bottom; --t) {
        const double tau = std::exp2(t / 4.0);
        double modelled = 0.0, cost = 0.0;
        for (const auto& [b, bin] : bins) {
            const double rep = std::exp2((b + 1) / 4.0);
            if (rep <= tau) {
                modelled += bin.first;
            } else {
                const int k = split_count(rep, tau);
                modelled += bin.first / k;
                cost += static_cast<double>(bin.second) * (k - 1);
            }
        }
        // over budget: keep the last fitting threshold unless it selects
        // nothing, in which case the caller trims this one largest-first
        if (cost > static_cast<double>(room)) return t + 1 == top ? tau : last_fit;
        if (modelled <= target) return tau;
        last_fit = tau;
    }
    return last_fit;
}

template <Integrand F>
Cell make_cell(const F& f, double l, double r, double gl, double gr) {
    return Cell{l, r, gl, gr, f.bounds_on(Interval{l, r})};
}

/// Refines the initial partition of `span` until the Darboux gap against
/// the non-decreasing callable g is at most epsilon.
template <Integrand F, class G>
CertificationReport refine(const F& f, const G& g, std::vector<double> points, double epsilon,
                           const RefinementBudget& budget) {
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());

    std::vector<Cell> cells;
    cells.reserve(points.size());
    std::vector<double> gv(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) gv[i] = g(points[i]);
    for (std::size_t i = 0; i + 1 < points.size(); ++i)
        cells.push_back(make_cell(f, points[i], points[i + 1], gv[i], gv[i + 1]));

    CertificationReport rep;
    rep.epsilon = epsilon;
    std::vector<double> contrib;
    std::vector<int> parts;
    for (int round = 0;; ++round) {
        const Sums s = sum_cells(cells);
        rep.upper = s.upper;
        rep.lower = s.lower;
        rep.osc_sum = s.osc;
        rep.gap = s.upper - s.lower;
        rep.rounds = round;
        rep.gap_history.push_back(rep.gap);
        if (rep.gap <= epsilon) {
            rep.certified = true;
            break;
        }
        if (round >= budget.max_rounds) break;

        contrib.resize(cells.size());
        for (std::size_t k = 0; k < cells.size(); ++k) {
            const Cell& c = cells[k];
            const double m = c.l + 0.5 * (c.r - c.l);
            contrib[k] = (m > c.l && m < c.r) ? std::max(0.0, c.contribution()) : 0.0;
        }
        std::size_t room = budget.max_cells > cells.size() ? budget.max_cells - cells.size() : 0;
        if (room == 0) break;
        const double tau = refinement_threshold(contrib, 0.9 * epsilon, room);
        std::vector<std::size_t> chosen;
        for (std::size_t k = 0; k < cells.size(); ++k)
            if (contrib[k] > 0.0 && contrib[k] >= tau) chosen.push_back(k);
        if (chosen.empty()) break;
        std::sort(chosen.begin(), chosen.end(), [&](std::size_t a, std::size_t b) {
            return contrib[a] != contrib[b] ? contrib[a] > contrib[b] : a < b;
        });
        parts.assign(cells.size(), 1);
        for (std::size_t k : chosen) {
            if (room == 0) break;
            const int n = std::min<std::size_t>(split_count(contrib[k], tau), room + 1);
            parts[k] = n;
            room -= static_cast<std::size_t>(n - 1);
        }

        std::vector<Cell> next;
        next.reserve(cells.size() + (budget.max_cells > cells.size() ? budget.max_cells - cells.size() - room : 0));
        for (std::size_t k = 0; k < cells.size(); ++k) {
            const Cell& c = cells[k];
            const int n = parts[k];
            if (n == 1) {
                next.push_back(c);
                continue;
            }
            const double h = (c.r - c.l) / n;
            double l = c.l, gl = c.gl;
            for (int i = 1; i <= n; ++i) {
                const double r = i == n ? c.r : c.l + h * i;
                if (i < n && !(r > l && r < c.r)) continue;
                const double gr = i == n ? c.gr : g(r);
                next.push_back(make_cell(f, l, r, gl, gr));
                l = r;
                gl = gr;
            }
        }
        cells = std::move(next);
    }

    std::vector<double> pts;
    pts.reserve(cells.size() + 1);
    for (const Cell& c : cells) pts.push_back(c.l);
    pts.push_back(cells.back().r);
    rep.partition = Partition(std::move(pts));
    return rep;
}

template <Integrand F, class G>
std::vector<double> initial_points(const F& f, const StieltjesIntegrator<G>& s) {
    const Interval& j = s.span();
    std::vector<double> pts{j.lo, j.hi};
    for (double x : f.breakpoints())
        if (j.interior(x)) pts.push_back(x);
    for (double x : s.breakpoints()) pts.push_back(x);
    return pts;
}

template <Integrand F>
void require_domain(const F& f, const Interval& j) {
    if (!f.domain().covers(j)) throw DomainError("interval outside integrand domain");
}

template <Integrand F, class Sign>
double darboux_sum(const F& f, const Sign& g, const Partition& p, bool upper) {
    require_domain(f, p.base());
    CompensatedSum acc;
    const auto& x = p.points();
    double g_prev = g(x[0]);
    for (std::size_t k = 1; k < x.size(); ++k) {
        const double g_next = g(x[k]);
        const Bounds b = f.bounds_on(Interval{x[k - 1], x[k]});
        acc += (upper ? b.sup : b.inf) * (g_next - g_prev);
        g_prev = g_next;
    }
    return acc.value();
}

} // namespace detail

template <Integrator G>
StieltjesIntegrator<G> make_integrator(G phi, const Interval& span) {
    return StieltjesIntegrator<G>(std::move(phi), span);
}

/// Σ sup_{I_k} f · ΔΦ_k, against the increasing normalisation of Φ.
template <Integrand F, Integrator G>
double upper_sum(const F& f, const StieltjesIntegrator<G>& g, const Partition& p) {
    return detail::darboux_sum(f, g, p, true);
}

template <Integrand F, Integrator G>
double lower_sum(const F& f, const StieltjesIntegrator<G>& g, const Partition& p) {
    return detail::darboux_sum(f, g, p, false);
}

template <Integrand F, Integrator G>
double oscillation_sum(const F& f, const StieltjesIntegrator<G>& g, const Partition& p) {
    detail::require_domain(f, p.base());
    CompensatedSum acc;
    const auto& x = p.points();
    double g_prev = g(x[0]);
    for (std::size_t k = 1; k < x.size(); ++k) {
        const double g_next = g(x[k]);
        acc += f.bounds_on(Interval{x[k - 1], x[k]}).oscillation() * (g_next - g_prev);
        g_prev = g_next;
    }
    return acc.value();
}

template <Integrand F, Integrator G>
double upper_sum(const F& f, const G& phi, const Partition& p) {
    return upper_sum(f, make_integrator(phi, p.base()), p);
}

template <Integrand F, Integrator G>
double lower_sum(const F& f, const G& phi, const Partition& p) {
    return lower_sum(f, make_integrator(phi, p.base()), p);
}

template <Integrand F, Integrator G>
double oscillation_sum(const F& f, const G& phi, const Partition& p) {
    return oscillation_sum(f, make_integrator(phi, p.base()), p);
}

/// Adaptive refinement until U − L ≤ epsilon or the budget runs out.
/// The initial partition holds the endpoints of the span and all
/// breakpoints of f and Φ inside it.
template <Integrand F, Integrator G>
CertificationReport certify_integrable(const F& f, const StieltjesIntegrator<G>& g, double epsilon,
                                       const RefinementBudget& budget = {}) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    const Interval& j = g.span();
    detail::require_domain(f, j);
    if (j.degenerate()) {
        CertificationReport rep;
        rep.partition = Partition({j.lo, std::nextafter(j.lo, j.lo + 1.0)});
        rep.epsilon = epsilon;
        rep.certified = true;
        rep.gap_history = {0.0};
        return rep;
    }
    return detail::refine(f, g, detail::initial_points(f, g), epsilon, budget);
}

template <Integrand F, Integrator G>
CertificationReport certify_integrable(const F& f, const G& phi, const Interval& j, double epsilon,
                                       const RefinementBudget& budget = {}) {
    return certify_integrable(f, make_integrator(phi, j), epsilon, budget);
}

struct IntegralResult {
    Enclosure enclosure;
    CertificationReport report;
    int sign = 1;  // orientation × integrator direction
};

/// Oriented integral with its certification report. Does not throw when the
/// budget runs out; check report.certified.
template <Integrand F, Integrator G>
IntegralResult integrate_report(const F& f, const G& phi, const OrientedInterval& i, double epsilon,
                                const RefinementBudget& budget = {}) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    IntegralResult out;
    if (i.degenerate()) {
        out.report.partition = Partition({i.start, std::nextafter(i.start, i.start + 1.0)});
        out.report.epsilon = epsilon;
        out.report.certified = true;
        out.report.gap_history = {0.0};
        return out;
    }
    const auto s = make_integrator(phi, i.hull());
    out.report = certify_integrable(f, s, epsilon, budget);
    out.sign = s.sign() * i.orientation();
    out.enclosure = out.report.enclosure().scaled(out.sign);
    return out;
}

/// Enclosure of ∫_I f dΦ, width ≤ epsilon. Reverse orientation negates;
/// a degenerate interval gives [0, 0].
template <Integrand F, Integrator G>
Enclosure integrate(const F& f, const G& phi, const OrientedInterval& i, double epsilon,
                    const RefinementBudget& budget = {}) {
    IntegralResult r = integrate_report(f, phi, i, epsilon, budget);
    if (!r.report.certified) throw NotCertified(r.report, r.enclosure);
    return r.enclosure;
}

/// ∫_I f dΦ for a continuous Φ that is only piecewise monotone: the hull of
/// I is cut at Φ's turning points and the monotone pieces are summed. The
/// epsilon budget is shared in proportion to piece length.
template <Integrand F, Integrator G>
IntegralResult integrate_piecewise_report(const F& f, const G& phi, const OrientedInterval& i, double epsilon,
                                          const RefinementBudget& budget = {}) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    if (i.degenerate()) return integrate_report(f, phi, i, epsilon, budget);
    const Interval j = i.hull();
    const auto segs = phi.monotone_segments(j);
    IntegralResult out;
    out.sign = i.orientation();
    out.report.epsilon = epsilon;
    out.report.certified = true;
    std::vector<double> pts;
    Enclosure total{0.0, 0.0};
    for (const auto& seg : segs) {
        const double share = epsilon * seg.span.width() / j.width();
        IntegralResult part = integrate_report(f, phi, OrientedInterval{seg.span.lo, seg.span.hi}, share, budget);
        total = total + part.enclosure;
        out.report.certified = out.report.certified && part.report.certified;
        out.report.upper += part.enclosure.upper;
        out.report.lower += part.enclosure.lower;
        out.report.osc_sum += part.report.osc_sum;
        out.report.rounds = std::max(out.report.rounds, part.report.rounds);
        const auto& pp = part.report.partition.points();
        pts.insert(pts.end(), pp.begin(), pp.end());
    }
    out.report.gap = out.report.upper - out.report.lower;
    out.report.gap_history = {out.report.gap};
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    out.report.partition = Partition(std::move(pts));
    out.enclosure = total.scaled(out.sign);
    return out;
}

template <Integrand F, Integrator G>
Enclosure integrate_piecewise(const F& f, const G& phi, const OrientedInterval& i, double epsilon,
                              const RefinementBudget& budget = {}) {
    IntegralResult r = integrate_piecewise_report(f, phi, i, epsilon, budget);
    if (!r.report.certified) throw NotCertified(r.report, r.enclosure);
    return r.enclosure;
}

} // namespace rsint
