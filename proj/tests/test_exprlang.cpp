#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>

#include "rsint/compile.hpp"
#include "rsint/corpus.hpp"

using namespace rsint;
using namespace rsint::expr;

namespace {

NodePtr var() { return make(Kind::variable, {}, "x"); }

void expect_tree(const std::string& src, const NodePtr& want) {
    const NodePtr got = parse(src);
    EXPECT_TRUE(equal(*got, *want)) << src << " parsed as " << print(*got);
}

std::vector<Direction> dirs(const CompiledFn& c) { return c.directions(); }

void expect_knots(const CompiledFn& c, const std::vector<double>& want) {
    const auto got = c.breakpoints();
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-15);
}

} // namespace

TEST(Parse, Examples) {
    expect_tree("2*x - 1", make(Kind::sub, {make(Kind::mul, {number(2), var()}), number(1)}));
    const NodePtr pi = parse("pi");
    EXPECT_EQ(pi->kind, Kind::constant);
    EXPECT_DOUBLE_EQ(pi->value, M_PI);
    const NodePtr c = parse("cos(pi*x)");
    ASSERT_EQ(c->kind, Kind::call);
    EXPECT_EQ(c->name, "cos");
    EXPECT_EQ(print(*c), "cos((pi * x))");
    expect_tree("x^(3/4)", make(Kind::pow, {var(), make(Kind::div, {number(3), number(4)})}));
}

TEST(Parse, Precedence) {
    expect_tree("2*x-1^2", make(Kind::sub, {make(Kind::mul, {number(2), var()}),
                                            make(Kind::pow, {number(1), number(2)})}));
    expect_tree("-x^2", make(Kind::negate, {make(Kind::pow, {var(), number(2)})}));
    expect_tree("2^3^2", make(Kind::pow, {number(2), make(Kind::pow, {number(3), number(2)})}));
    expect_tree("2^-1", make(Kind::pow, {number(2), make(Kind::negate, {number(1)})}));
    expect_tree("1-2-3", make(Kind::sub, {make(Kind::sub, {number(1), number(2)}), number(3)}));
    expect_tree("8/4/2", make(Kind::div, {make(Kind::div, {number(8), number(4)}), number(2)}));
    EXPECT_DOUBLE_EQ(evaluate(*parse("-2^2"), 0.0), -4.0);
    EXPECT_DOUBLE_EQ(evaluate(*parse("2*x-1^2"), 3.0), 5.0);
}

TEST(Parse, NumbersAndWhitespace) {
    EXPECT_DOUBLE_EQ(parse("1.5e-3")->value, 1.5e-3);
    EXPECT_DOUBLE_EQ(parse(".25")->value, 0.25);
    EXPECT_DOUBLE_EQ(parse("2E+2")->value, 200.0);
    EXPECT_TRUE(equal(*parse(" \t2 *\n x "), *parse("2*x")));
    EXPECT_THROW(parse("2e"), ParseError);  // no implicit multiplication
}

TEST(Parse, VariableY) {
    const NodePtr n = parse("2*y-1");
    EXPECT_DOUBLE_EQ(evaluate(*n, 3.0), 5.0);
    EXPECT_THROW(parse("x+y"), ParseError);
}

TEST(Parse, Errors) {
    try {
        parse("2 * (x + 1");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 1u);
        EXPECT_EQ(e.column(), 11u);
    }
    try {
        parse("x +\n  foo(x)");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_EQ(e.column(), 3u);
        EXPECT_NE(std::string(e.what()).find("unknown identifier"), std::string::npos);
    }
    EXPECT_THROW(parse("sin(x, 1)"), ParseError);
    EXPECT_THROW(parse("min(x)"), ParseError);
    EXPECT_THROW(parse("x $ 2"), ParseError);
    EXPECT_THROW(parse(""), ParseError);
    EXPECT_THROW(parse("x < 1"), ParseError);
    EXPECT_THROW(parse("piecewise(x < 1, 2)"), ParseError);
    EXPECT_THROW(parse("piecewise(x)"), ParseError);
    EXPECT_THROW(parse("2 3"), ParseError);
}

TEST(Evaluate, Functions) {
    EXPECT_DOUBLE_EQ(evaluate(*parse("step(0.5)"), 0.5), 1.0);
    EXPECT_DOUBLE_EQ(evaluate(*parse("step(0.5)"), 0.4999), 0.0);
    EXPECT_DOUBLE_EQ(evaluate(*parse("min(x, 1-x)"), 0.3), 0.3);
    EXPECT_DOUBLE_EQ(evaluate(*parse("max(x, 1-x)"), 0.3), 0.7);
    EXPECT_DOUBLE_EQ(evaluate(*parse("abs(x-2)"), 0.5), 1.5);
    EXPECT_DOUBLE_EQ(evaluate(*parse("exp(log(x))"), 2.0), 2.0);
    const NodePtr p = parse("piecewise(x < 0.5, 1, x >= 0.8, 2, 3)");
    EXPECT_DOUBLE_EQ(evaluate(*p, 0.1), 1.0);
    EXPECT_DOUBLE_EQ(evaluate(*p, 0.6), 3.0);
    EXPECT_DOUBLE_EQ(evaluate(*p, 0.8), 2.0);
}

TEST(Compile, AffineIsOneIncreasingPiece) {
    const CompiledFn c = compile("2*x-1", Interval{0.0, 1.0});
    EXPECT_TRUE(c.certified);
    EXPECT_TRUE(c.breakpoints().empty());
    EXPECT_EQ(dirs(c), std::vector<Direction>{Direction::increasing});
    EXPECT_DOUBLE_EQ(c(0.25), -0.5);
    ASSERT_TRUE(c.fn.pieces()[0].primitive);
}

TEST(Compile, CosineSplitsAtPi) {
    const CompiledFn c = compile("cos(x)", Interval{0.0, 3.0 * M_PI / 2.0});
    EXPECT_TRUE(c.certified);
    ASSERT_EQ(c.breakpoints().size(), 1u);
    EXPECT_NEAR(c.breakpoints()[0], M_PI, 1e-15);
    EXPECT_EQ(dirs(c), (std::vector<Direction>{Direction::decreasing, Direction::increasing}));
}

TEST(Compile, QuadraticSplitsAtVertex) {
    const CompiledFn c = compile("x^2 - x", Interval{0.0, 1.0});
    EXPECT_TRUE(c.certified);
    ASSERT_EQ(c.breakpoints().size(), 1u);
    EXPECT_DOUBLE_EQ(c.breakpoints()[0], 0.5);
    EXPECT_EQ(dirs(c), (std::vector<Direction>{Direction::decreasing, Direction::increasing}));
}

TEST(Compile, PolynomialTurningPoints) {
    // derivative 4x^3 - 2x: roots 0, ±1/√2 (cubic closed form)
    const CompiledFn quartic = compile("x^4 - x^2", Interval{-1.0, 1.0});
    ASSERT_EQ(quartic.breakpoints().size(), 3u);
    EXPECT_NEAR(quartic.breakpoints()[0], -std::sqrt(0.5), 1e-15);
    EXPECT_NEAR(quartic.breakpoints()[1], 0.0, 1e-15);
    EXPECT_NEAR(quartic.breakpoints()[2], std::sqrt(0.5), 1e-15);
    // derivative of degree 4: isolation and bisection
    const CompiledFn quintic = compile("x^5 - x^3 + 0.1*x", Interval{-1.0, 1.0});
    EXPECT_TRUE(quintic.certified);
    ASSERT_EQ(quintic.breakpoints().size(), 4u);
    for (double r : quintic.breakpoints()) EXPECT_NEAR(5 * std::pow(r, 4) - 3 * r * r + 0.1, 0.0, 1e-14);
    // inflection without a turning point
    EXPECT_TRUE(compile("(x-0.5)^3", Interval{0.0, 1.0}).breakpoints().empty());
}

TEST(Compile, StepGivesExactJump) {
    const CompiledFn c = compile("step(0.5)", Interval{0.0, 1.0});
    ASSERT_EQ(c.breakpoints(), std::vector<double>{0.5});
    EXPECT_DOUBLE_EQ(c(0.5), 1.0);
    EXPECT_DOUBLE_EQ(c.fn.left_limit(1), 0.0);
    EXPECT_DOUBLE_EQ(c.fn.right_limit(1), 1.0);
    EXPECT_DOUBLE_EQ(c.fn.bounds_on(Interval{0.0, 0.5}).sup, 0.0);
}

TEST(Compile, KinksAndBranches) {
    expect_knots(compile("abs(x-0.3)", Interval{0.0, 1.0}), {0.3});
    expect_knots(compile("min(x, 1-x)", Interval{0.0, 1.0}), {0.5});
    expect_knots(compile("abs(abs(x)-0.5)", Interval{-1.0, 1.0}), {-0.5, 0.0, 0.5});
    const CompiledFn pw = compile("piecewise(x < 1/3, x, 2 - x)", Interval{0.0, 1.0});
    ASSERT_EQ(pw.breakpoints().size(), 1u);
    const double k = pw.breakpoints()[0];
    EXPECT_FALSE(k < 1.0 / 3.0);
    EXPECT_TRUE(std::nextafter(k, 0.0) < 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(pw(k), 2.0 - k);
    EXPECT_NEAR(pw.fn.left_limit(1), 1.0 / 3.0, 1e-15);
}

TEST(Compile, IsolatedPointValue) {
    const CompiledFn c = compile("piecewise((x-0.5)^2 > 0, 1, 0)", Interval{0.0, 1.0});
    ASSERT_EQ(c.breakpoints(), std::vector<double>{0.5});
    EXPECT_DOUBLE_EQ(c(0.5), 0.0);
    EXPECT_DOUBLE_EQ(c(0.4), 1.0);
    EXPECT_DOUBLE_EQ(c.fn.bounds_on(Interval{0.0, 1.0}).inf, 0.0);
}

TEST(Compile, TrigAndComposition) {
    const CompiledFn c = compile("sin(exp(x))", Interval{0.0, 3.0});
    EXPECT_TRUE(c.certified);
    // turning points where e^x = π/2 + kπ
    std::vector<double> want;
    for (int k = 0; k < 7; ++k) {
        const double x = std::log(M_PI / 2 + k * M_PI);
        if (x > 0.0 && x < 3.0) want.push_back(x);
    }
    ASSERT_EQ(c.breakpoints().size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(c.breakpoints()[i], want[i], 1e-14);
    EXPECT_TRUE(compile("exp(-x^2)", Interval{-1.0, 2.0}).certified);
    EXPECT_EQ(compile("exp(-x^2)", Interval{-1.0, 2.0}).breakpoints(), std::vector<double>{0.0});
}

TEST(Compile, SamplingFallbackIsFlagged) {
    const CompiledFn c = compile("sin(x) + cos(x)", Interval{0.0, 7.0});
    EXPECT_FALSE(c.certified);
    ASSERT_EQ(c.breakpoints().size(), 2u);
    EXPECT_NEAR(c.breakpoints()[0], M_PI / 4, 1e-12);
    EXPECT_NEAR(c.breakpoints()[1], 5 * M_PI / 4, 1e-12);
}

TEST(Compile, FractionalPowers) {
    const CompiledFn c = compile("x^0.75", Interval{0.0, 1.0});
    EXPECT_TRUE(c.certified);
    EXPECT_EQ(dirs(c), std::vector<Direction>{Direction::increasing});
    EXPECT_THROW(compile("x^0.75", Interval{-1.0, 1.0}), DomainError);
    EXPECT_THROW(compile("x^(-0.5)", Interval{0.0, 1.0}), DomainError);
    EXPECT_NO_THROW(compile("x^(-0.5)", Interval{0.5, 1.0}));
    EXPECT_NO_THROW(compile("x^3", Interval{-1.0, 1.0}));
}

TEST(Compile, DomainGuards) {
    EXPECT_THROW(compile("log(x)", Interval{0.0, 1.0}), DomainError);
    EXPECT_THROW(compile("log(x - 0.5)", Interval{0.0, 1.0}), DomainError);
    EXPECT_NO_THROW(compile("log(x*x - x + 1)", Interval{0.0, 1.0}));
    EXPECT_THROW(compile("1/x", Interval{-1.0, 1.0}), DomainError);
    EXPECT_NO_THROW(compile("1/(x*x + 1)", Interval{-1.0, 1.0}));
    EXPECT_THROW(compile("x^x", Interval{1.0, 2.0}), DomainError);
    EXPECT_THROW(compile("step(x)", Interval{0.0, 1.0}), DomainError);
    // only the branch in use needs to be defined
    EXPECT_NO_THROW(compile("piecewise(x > 0, log(x + 1), 0)", Interval{-2.0, 1.0}));
}

namespace {

/// Random tree over the whole grammar, for printing round trips.
NodePtr random_tree(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    switch (pick(rng)) {
        case 0: {
            const double scale = std::pow(10.0, std::floor(u(rng) * 12.0) - 6.0);
            return number(u(rng) * scale);
        }
        case 1: return var();
        case 2: return parse(u(rng) < 0.5 ? "pi" : "e");
        case 3: return make(Kind::negate, {random_tree(rng, depth - 1)});
        case 4: return make(Kind::add, {random_tree(rng, depth - 1), random_tree(rng, depth - 1)});
        case 5: return make(Kind::sub, {random_tree(rng, depth - 1), random_tree(rng, depth - 1)});
        case 6: return make(Kind::mul, {random_tree(rng, depth - 1), random_tree(rng, depth - 1)});
        case 7: return make(Kind::div, {random_tree(rng, depth - 1), random_tree(rng, depth - 1)});
        case 8: return make(Kind::pow, {random_tree(rng, depth - 1), random_tree(rng, depth - 1)});
        case 9: {
            static const char* names[] = {"sin", "cos", "exp", "log", "abs", "step"};
            return make(Kind::call, {random_tree(rng, depth - 1)}, names[rng() % 6]);
        }
        case 10: return make(Kind::call, {random_tree(rng, depth - 1), random_tree(rng, depth - 1)},
                             rng() % 2 ? "min" : "max");
        default: {
            static const char* ops[] = {"<", "<=", ">", ">="};
            std::vector<NodePtr> args;
            const int n = 1 + static_cast<int>(rng() % 2);
            for (int i = 0; i < n; ++i) {
                args.push_back(make(Kind::compare, {random_tree(rng, depth - 1), random_tree(rng, depth - 1)},
                                    ops[rng() % 4]));
                args.push_back(random_tree(rng, depth - 1));
            }
            args.push_back(random_tree(rng, depth - 1));
            return make(Kind::call, std::move(args), "piecewise");
        }
    }
}

/// Random expression from families the compiler should handle exactly.
std::string random_source(corpus::Rng& rng) {
    auto c = [&] { return format_number(corpus::uniform(rng, -2.0, 2.0)); };
    auto pos = [&] { return format_number(corpus::uniform(rng, 0.5, 3.0)); };
    auto poly = [&] {
        std::string s = c();
        const int deg = corpus::uniform_int(rng, 1, 5);
        for (int k = 1; k <= deg; ++k) s += " + " + c() + "*x^" + std::to_string(k);
        return s;
    };
    switch (corpus::uniform_int(rng, 0, 7)) {
        case 0: return poly();
        case 1: return c() + "*sin(" + pos() + "*x + " + c() + ")";
        case 2: return c() + "*cos(" + pos() + "*x) + " + c();
        case 3: return "exp(" + c() + "*x) * " + pos();
        case 4: return "abs(" + poly() + ")";
        case 5: return "min(" + poly() + ", " + poly() + ")";
        case 6: return "piecewise(x < " + c() + ", " + poly() + ", " + c() + "*sin(x)) + step(" + c() + ")";
        default: return "max(" + c() + "*x, " + c() + "*cos(" + pos() + "*x))";
    }
}

} // namespace

class ExprProperty : public ::testing::TestWithParam<int> {};

TEST_P(ExprProperty, PrintParseRoundTrip) {
    std::mt19937_64 rng(1000 + GetParam());
    for (int i = 0; i < 20; ++i) {
        const NodePtr t = random_tree(rng, 4);
        const std::string text = print(*t);
        const NodePtr back = parse(text);
        ASSERT_TRUE(equal(*t, *back)) << text << " vs " << print(*back);
        EXPECT_EQ(print(*back), text);
    }
}

TEST_P(ExprProperty, CompiledPiecesAreMonotoneAndFaithful) {
    auto rng = corpus::case_rng(71, GetParam());
    const std::string src = random_source(rng);
    const Interval dom = corpus::random_interval(rng, -2.0, 2.0, 0.2);
    const NodePtr e = parse(src);
    const CompiledFn c = compile(e, dom);
    const double slack = 1e-9 * std::max(1.0, c.fn.global_bound());
    for (const auto& p : c.fn.pieces()) {
        for (int k = 0; k < 100; ++k) {
            double a = corpus::uniform(rng, p.span.lo, p.span.hi), b = corpus::uniform(rng, p.span.lo, p.span.hi);
            if (a > b) std::swap(a, b);
            const double fa = c(a), fb = c(b);
            if (a == p.span.lo || b == p.span.lo) continue;  // point value belongs to the knot
            if (p.direction == Direction::increasing) {
                EXPECT_LE(fa, fb + slack) << src;
            } else if (p.direction == Direction::decreasing) {
                EXPECT_GE(fa, fb - slack) << src;
            }
            EXPECT_NEAR(fa, evaluate(*e, a), 1e-12 * std::max(1.0, std::abs(fa))) << src << " at " << a;
        }
    }
    for (std::size_t k = 0; k < c.fn.knots().size(); ++k)
        EXPECT_EQ(c(c.fn.knots()[k]), evaluate(*e, c.fn.knots()[k])) << src;
    // with the interior-sup convention every piece's extremes sit at its ends
    const auto& kn = c.fn.knots();
    for (std::size_t i = 0; i + 1 < kn.size(); ++i) {
        const Bounds b = c.fn.bounds_on(Interval{kn[i], kn[i + 1]});
        const double mid = 0.5 * (kn[i] + kn[i + 1]);
        EXPECT_LE(b.inf, evaluate(*e, mid) + slack);
        EXPECT_GE(b.sup, evaluate(*e, mid) - slack);
    }
}

INSTANTIATE_TEST_SUITE_P(RandomCorpus, ExprProperty, ::testing::Range(0, 100));
