#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "gate/ad.hpp"

using gate::ad::Tape;
using gate::ad::TapeScope;
using gate::ad::Var;

namespace {

// Derivative of f at x by reverse mode.
double reverse(const std::function<Var(const Var&)>& f, double x) {
    Tape tape;
    TapeScope scope(tape);
    const Var in = Var::input(x);
    const Var out = f(in);
    if (out.is_constant()) return 0.0;
    return tape.adjoints(out.index())[static_cast<std::size_t>(in.index())];
}

double central(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

} // namespace

TEST(Ad, ArithmeticPartials) {
    Tape tape;
    TapeScope scope(tape);
    const Var a = Var::input(3.0), b = Var::input(5.0);
    const Var y = a * b + a / b - b;
    const auto adj = tape.adjoints(y.index());
    EXPECT_DOUBLE_EQ(adj[static_cast<std::size_t>(a.index())], 5.0 + 1.0 / 5.0);
    EXPECT_DOUBLE_EQ(adj[static_cast<std::size_t>(b.index())], 3.0 - 3.0 / 25.0 - 1.0);
}

TEST(Ad, ElementaryFunctionsMatchFiniteDifferences) {
    struct Case {
        std::function<Var(const Var&)> v;
        std::function<double(double)> d;
        double x;
    };
    const Case cases[] = {
        {[](const Var& x) { return exp(x); }, [](double x) { return std::exp(x); }, 0.7},
        {[](const Var& x) { return log(x); }, [](double x) { return std::log(x); }, 2.3},
        {[](const Var& x) { return log10(x); }, [](double x) { return std::log10(x); }, 40.0},
        {[](const Var& x) { return log1p(x); }, [](double x) { return std::log1p(x); }, 1e-3},
        {[](const Var& x) { return expm1(x); }, [](double x) { return std::expm1(x); }, -0.4},
        {[](const Var& x) { return sqrt(x); }, [](double x) { return std::sqrt(x); }, 9.0},
        {[](const Var& x) { return pow(x, 1.45); }, [](double x) { return std::pow(x, 1.45); }, 1.7},
        {[](const Var& x) { return pow(10.0, x); }, [](double x) { return std::pow(10.0, x); }, 0.3},
        {[](const Var& x) { return pow(x, x); }, [](double x) { return std::pow(x, x); }, 1.3},
    };
    for (const auto& c : cases) {
        const double g = reverse(c.v, c.x);
        const double fd = central(c.d, c.x, 1e-6 * std::max(1.0, std::abs(c.x)));
        EXPECT_NEAR(g, fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
}

TEST(Ad, ConstantsStayOffTape) {
    Tape tape;
    TapeScope scope(tape);
    const Var c = Var(2.0) * Var(3.0) + exp(Var(1.0));
    EXPECT_TRUE(c.is_constant());
    EXPECT_EQ(tape.size(), 0u);
}

TEST(Ad, SharedSubexpressionAccumulates) {
    const double g = reverse([](const Var& x) {
        const Var y = x * x;
        return y * y + y;
    }, 1.5);
    EXPECT_NEAR(g, 4.0 * std::pow(1.5, 3) + 2.0 * 1.5, 1e-12);
}

TEST(Ad, MaxMinFollowTheSelectedBranch) {
    EXPECT_DOUBLE_EQ(reverse([](const Var& x) { return max(x * 2.0, Var(1.0)); }, 3.0), 2.0);
    EXPECT_DOUBLE_EQ(reverse([](const Var& x) { return max(x * 2.0, Var(1.0)); }, 0.1), 0.0);
    EXPECT_DOUBLE_EQ(reverse([](const Var& x) { return min(x * 2.0, Var(1.0)); }, 0.1), 2.0);
}

TEST(Ad, NoActiveTapeThrows) {
    EXPECT_THROW(Var::input(1.0), std::logic_error);
}

TEST(Ad, ScopesNest) {
    Tape outer, inner;
    TapeScope a(outer);
    {
        TapeScope b(inner);
        Var::input(1.0);
    }
    EXPECT_EQ(Tape::active(), &outer);
    EXPECT_EQ(inner.size(), 1u);
    EXPECT_EQ(outer.size(), 0u);
}
