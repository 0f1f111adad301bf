#include <gtest/gtest.h>

#include <cmath>

#include "rsint/rsint.hpp"

using namespace rsint;

namespace {

const Interval kUnit{0.0, 1.0};

} // namespace

TEST(ReferenceIntegral, ConstantAgainstIdentity) {
    auto one = PiecewiseMonotoneFn::constant(kUnit, 1.0);
    auto id = PiecewiseMonotoneFn::identity(kUnit);
    for (std::size_t n : {2u, 64u, 1024u}) {
        const OracleResult r = reference_integral(one, id, OrientedInterval{0.0, 1.0}, n);
        EXPECT_DOUBLE_EQ(r.value, 1.0);
        EXPECT_EQ(r.grid_cells, n);
        EXPECT_DOUBLE_EQ(r.stability_gap, 0.0);
    }
}

TEST(ReferenceIntegral, SquareIntegrator) {
    auto f = [](double x) { return x; };
    auto g = [](double x) { return x * x; };
    const OracleResult r = reference_integral(f, g, OrientedInterval{0.0, 1.0});
    EXPECT_EQ(r.grid_cells, std::size_t{1} << 20);
    EXPECT_NEAR(r.value, 2.0 / 3.0, 1e-12);
    EXPECT_LT(r.stability_gap, 1e-9);
    EXPECT_NEAR(r.richardson_estimate, 2.0 / 3.0, 1e-14);
}

TEST(ReferenceIntegral, ReversedIsNegated) {
    auto f = [](double x) { return std::exp(x); };
    auto g = [](double x) { return std::sin(x); };
    const OracleResult fwd = reference_integral(f, g, OrientedInterval{0.0, 1.0}, 1 << 12);
    const OracleResult rev = reference_integral(f, g, OrientedInterval{1.0, 0.0}, 1 << 12);
    EXPECT_DOUBLE_EQ(fwd.value, -rev.value);
    EXPECT_DOUBLE_EQ(fwd.richardson_estimate, -rev.richardson_estimate);
}

TEST(ReferenceIntegral, DegenerateAndInvalidGrid) {
    auto f = [](double x) { return x; };
    EXPECT_DOUBLE_EQ(reference_integral(f, f, OrientedInterval{0.5, 0.5}, 8).value, 0.0);
    EXPECT_THROW(reference_integral(f, f, OrientedInterval{0.0, 1.0}, 1000), std::invalid_argument);
    EXPECT_THROW(reference_integral(f, f, OrientedInterval{0.0, 1.0}, 1), std::invalid_argument);
}

TEST(ReferenceIntegral, StepIntegrand) {
    auto step = PiecewiseMonotoneFn::step(kUnit, 0.5);
    auto id = PiecewiseMonotoneFn::identity(kUnit);
    EXPECT_DOUBLE_EQ(reference_integral(step, id, OrientedInterval{0.0, 1.0}, 1 << 10).value, 0.5);
}

TEST(GradedReference, UnboundedDensityNearZero) {
    // ∫_0^1 x^0.6 d(x^0.75) = 0.75 / 1.35
    auto f = [](double x) { return std::pow(x, 0.6); };
    auto g = [](double x) { return std::pow(x, 0.75); };
    const OracleResult r = reference_integral_graded(f, g, kUnit);
    EXPECT_NEAR(r.value, 0.75 / 1.35, 1e-9);
    EXPECT_GE(r.stability_gap, 0.0);
}

TEST(GradedReference, MatchesUniformOnSmoothData) {
    auto f = [](double x) { return std::cos(x); };
    auto g = [](double x) { return x * x * x; };
    const OracleResult a = reference_integral_graded(f, g, kUnit, 1 << 16, 8);
    const OracleResult b = reference_integral(f, g, OrientedInterval{0.0, 1.0}, 1 << 16);
    EXPECT_NEAR(a.value, b.value, 1e-8);
}

class OracleProperty : public ::testing::TestWithParam<int> {};

TEST_P(OracleProperty, ConcordsWithCertifiedEnclosure) {
    auto rng = corpus::case_rng(61, GetParam());
    const Interval dom = corpus::random_interval(rng, -1.0, 1.0, 0.3);
    auto f = corpus::random_fn(rng, dom, {.jumps = true});
    auto phi = corpus::random_fn(rng, dom, {.sign = GetParam() % 2 ? corpus::SignMode::positive
                                                                    : corpus::SignMode::negative});
    const IndefiniteIntegral G(phi, dom.lo, 0.0);
    const OrientedInterval i = GetParam() % 3 ? OrientedInterval{dom.lo, dom.hi} : OrientedInterval{dom.hi, dom.lo};
    const Enclosure e = integrate(f, G, i, 1e-5);
    const OracleResult o = reference_integral(f, G, i, 1 << 16);
    EXPECT_GE(o.stability_gap, 0.0);
    EXPECT_LE(std::abs(e.midpoint() - o.richardson_estimate), 0.5 * e.width() + o.stability_gap);
}

INSTANTIATE_TEST_SUITE_P(RandomCorpus, OracleProperty, ::testing::Range(0, 60));
