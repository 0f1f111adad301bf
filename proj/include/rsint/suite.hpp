#pragma once

/**
 * @file suite.hpp
 * @brief Randomized identity cases shared by the `suite` command and the
 *        acceptance runner.
 */

#include <optional>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "stieltjes_map.hpp"
#include "substitution.hpp"

namespace rsint::suite {

/// One randomized instance. `partition` is set for eq6 cases only.
struct Case {
    Identity identity;
    PiecewiseMonotoneFn f;
    IndefiniteIntegral Psi;
    IndefiniteIntegral Phi;
    OrientedInterval span;
    std::optional<Partition> partition;
};

/// Values of every generated function stay within this bound.
inline constexpr double kMagnitude = 0.5;

namespace detail {

using corpus::Rng;
using corpus::SignMode;

inline OrientedInterval draw_span(Rng& rng) {
    const Interval h = corpus::random_interval(rng, -1.0, 1.0, 0.5);
    return corpus::uniform(rng, 0.0, 1.0) < 0.25 ? OrientedInterval{h.hi, h.lo} : OrientedInterval{h.lo, h.hi};
}

inline SignMode draw_sign(Rng& rng) {
    return corpus::uniform(rng, 0.0, 1.0) < 0.5 ? SignMode::positive : SignMode::negative;
}

/// f and Ψ on a neighbourhood of Φ(I).
inline Case finish_case(Rng& rng, Identity id, const PiecewiseMonotoneFn& phi, const OrientedInterval& span,
                        const corpus::FnShape& psi_shape) {
    const Interval hull = span.hull();
    IndefiniteIntegral Phi(phi, hull.lo, corpus::uniform(rng, -0.5, 0.5));
    const Interval range = range_of(Phi, hull).range;
    const Interval dom{range.lo - 0.05, range.hi + 0.05};
    auto f = corpus::random_fn(rng, dom, {.jumps = true, .magnitude = kMagnitude});
    auto psi = corpus::random_fn(rng, dom, psi_shape);
    IndefiniteIntegral Psi(std::move(psi), dom.lo, 0.0);
    return Case{id, std::move(f), std::move(Psi), std::move(Phi), span, std::nullopt};
}

} // namespace detail

/// Monotone Φ, monotone Ψ and a random partition of I (up to 40 cells).
inline Case make_eq6_case(corpus::Rng& rng) {
    const OrientedInterval span = detail::draw_span(rng);
    const Interval hull = span.hull();
    auto phi = corpus::random_fn(rng, hull, {.sign = detail::draw_sign(rng), .magnitude = kMagnitude});
    Case c = detail::finish_case(rng, Identity::eq6, phi, OrientedInterval{hull.lo, hull.hi},
                                 {.sign = detail::draw_sign(rng), .magnitude = kMagnitude});
    c.partition = corpus::random_partition(rng, hull, corpus::uniform_int(rng, 1, 40));
    return c;
}

/// φ and ψ of constant sign.
inline Case make_eq7_case(corpus::Rng& rng) {
    const OrientedInterval span = detail::draw_span(rng);
    auto phi = corpus::random_fn(rng, span.hull(), {.sign = detail::draw_sign(rng), .magnitude = kMagnitude});
    return detail::finish_case(rng, Identity::eq7, phi, span,
                               {.sign = detail::draw_sign(rng), .magnitude = kMagnitude});
}

/// φ of constant sign, ψ piecewise linear and changing sign.
inline Case make_eq1_case(corpus::Rng& rng) {
    const OrientedInterval span = detail::draw_span(rng);
    auto phi = corpus::random_fn(rng, span.hull(), {.sign = detail::draw_sign(rng), .magnitude = kMagnitude});
    return detail::finish_case(rng, Identity::eq1, phi, span,
                               {.quadratic = false, .sign = corpus::SignMode::changes, .magnitude = kMagnitude});
}

/// φ changing sign, ψ of constant sign.
inline Case make_eq30_case(corpus::Rng& rng) {
    const OrientedInterval span = detail::draw_span(rng);
    auto phi = corpus::random_fn(rng, span.hull(), {.sign = corpus::SignMode::changes, .magnitude = kMagnitude});
    return detail::finish_case(rng, Identity::eq30, phi, span,
                               {.sign = detail::draw_sign(rng), .magnitude = kMagnitude});
}

/// φ(x) = 2x − 1 on [0, 1]: Φ(0) = Φ(1), so both sides vanish for any f, ψ.
inline Case make_eq30_symmetric_case(corpus::Rng& rng) {
    const Interval unit{0.0, 1.0};
    return detail::finish_case(rng, Identity::eq30, PiecewiseMonotoneFn::affine(unit, 2.0, -1.0),
                               OrientedInterval{0.0, 1.0},
                               {.sign = detail::draw_sign(rng), .magnitude = kMagnitude});
}

inline VerificationReport run_case(const Case& c, const VerifyOptions& opt) {
    switch (c.identity) {
        case Identity::eq6: return verify_composition_identity(c.f, c.Psi, c.Phi, *c.partition, opt, false);
        case Identity::eq7: return verify_lemma_eq7(c.f, c.Psi, c.Phi, c.span, opt);
        case Identity::eq1: return verify_substitution_eq1(c.f, c.Psi, c.Phi, c.span, opt);
        case Identity::eq30: return verify_change_of_variable_eq30(c.f, c.Psi, c.Phi, c.span, opt);
        case Identity::coda: break;
    }
    throw std::invalid_argument("no randomized cases for this identity");
}

struct Outcome {
    std::size_t index = 0;
    Identity identity = Identity::eq6;
    bool agree = false;
    bool checks_hold = false;
    double max_gap = 0.0;
    double lhs_mid = 0.0;
    double rhs_mid = 0.0;
    std::string error;

    bool passed() const { return agree && checks_hold && error.empty(); }
};

/// Case `index` of a suite run: the identity cycles eq6, eq7, eq1, eq30.
inline Outcome run_indexed(std::uint64_t seed, std::size_t index, const VerifyOptions& opt) {
    static constexpr Identity kCycle[] = {Identity::eq6, Identity::eq7, Identity::eq1, Identity::eq30};
    auto rng = corpus::case_rng(seed, index);
    Outcome o;
    o.index = index;
    o.identity = kCycle[index % 4];
    try {
        Case c = [&] {
            switch (o.identity) {
                case Identity::eq6: return make_eq6_case(rng);
                case Identity::eq7: return make_eq7_case(rng);
                case Identity::eq1: return make_eq1_case(rng);
                default: return make_eq30_case(rng);
            }
        }();
        const VerificationReport r = run_case(c, opt);
        o.agree = r.agree;
        o.checks_hold = r.checks_hold();
        o.max_gap = r.max_gap;
        o.lhs_mid = r.lhs.midpoint();
        o.rhs_mid = r.rhs.midpoint();
    } catch (const std::exception& e) {
        o.error = e.what();
    }
    return o;
}

} // namespace rsint::suite
