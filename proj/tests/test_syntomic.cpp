#include "support.hpp"

#include <gtest/gtest.h>

using namespace trcalc;
using namespace trcalc::testing;

namespace {

TruncationParams params(unsigned long p, long e, unsigned long i) { return TruncationParams(Prime(p), Integer(e), i); }
Orbit orbit(unsigned long p, long m, MultiIndex a = {}) { return Orbit(Prime(p), Integer(m), std::move(a)); }

std::vector<unsigned long> closed_exponents(const TruncationParams& t)
{
    std::vector<unsigned long> out;
    for (const auto& s : enumerate_orbits(t, {}))
        out.push_back(s.module.h);
    std::sort(out.rbegin(), out.rend());
    return out;
}

} // namespace

TEST(Orbit, Validation)
{
    EXPECT_THROW(orbit(3, 0), ValidationError);
    EXPECT_THROW(orbit(3, 6), ValidationError);
    EXPECT_NO_THROW(orbit(3, 5));
}

TEST(SFunction, Examples)
{
    EXPECT_EQ(s_function(params(3, 2, 1), Integer(1), {}), 1u);
    EXPECT_EQ(s_function(params(2, 2, 1), Integer(1), {}), 2u);
    EXPECT_EQ(s_function(params(2, 3, 1), Integer(5), {}), 0u);
    EXPECT_THROW(s_function(params(2, 3, 1), Integer(0), {}), ValidationError);
}

TEST(SFunction, MatchesRationalDefinition)
{
    Gen g(20);
    for (int c = 0; c < 500; ++c) {
        unsigned long pv = g.prime();
        Prime p(pv);
        TruncationParams t(p, Integer(g.range(1, 40)), g.range(0, 8));
        Integer m(g.range(1, 300));
        MultiIndex a = g.alpha(p, 3, 40, 4);
        ASSERT_EQ(s_function(t, m, a), naive_s(pv, t.i, t.e, m, alpha_rationals(p, a)));
    }
}

TEST(SFunction, MonotoneInE)
{
    Gen g(21);
    for (int c = 0; c < 500; ++c) {
        unsigned long pv = g.prime();
        Prime p(pv);
        unsigned long i = g.range(0, 8);
        long e = g.range(1, 40), f = e + g.range(0, 40);
        Integer m(g.range(1, 300));
        MultiIndex a = g.alpha(p, 2, 40, 3);
        ASSERT_LE(s_function(TruncationParams(p, Integer(e), i), m, a),
                  s_function(TruncationParams(p, Integer(f), i), m, a));
    }
}

TEST(SFunction, AntitoneInAlpha)
{
    Gen g(22);
    for (int c = 0; c < 500; ++c) {
        unsigned long pv = g.prime();
        Prime p(pv);
        TruncationParams t(p, Integer(g.range(1, 40)), g.range(0, 8));
        Integer m(g.range(1, 300));
        MultiIndex a = g.alpha(p, 2, 40, 3);
        // Raise one entry.
        MultiIndex b = a;
        std::string slot = "t" + std::to_string(g.range(1, 3));
        PAdicFraction old = a.entries().count(slot) ? a.entries().at(slot) : PAdicFraction();
        Integer den = pow_ui(p.integer(), old.pexp());
        b.set(slot, PAdicFraction(p, old.num() + Integer(g.range(0, 40)) * den, old.pexp()));
        ASSERT_GE(s_function(t, m, a), s_function(t, m, b));
        ASSERT_LE(s_function(t, m, a), s_function(t, m, {}));
    }
}

TEST(Syntomic, OrbitExamples)
{
    auto a = h1_syntomic_orbit(params(3, 2, 1), orbit(3, 1));
    EXPECT_EQ(a.module.h, 1u);
    EXPECT_EQ(a.module.to_string(Prime(3)), "W(k)/3^1");
    EXPECT_EQ(h1_syntomic_orbit(params(2, 3, 1), orbit(2, 1)).module.h, 2u);
    EXPECT_EQ(h1_syntomic_orbit(params(3, 2, 1), orbit(3, 2)).module.h, 0u);
}

TEST(Syntomic, EnumerationExamples)
{
    auto a = enumerate_orbits(params(3, 2, 1), {});
    ASSERT_EQ(a.size(), 1u);
    EXPECT_EQ(a[0].orbit.m, 1);
    EXPECT_EQ(a[0].module.h, 1u);

    auto b = enumerate_orbits(params(2, 3, 2), {});
    ASSERT_EQ(b.size(), 2u);
    EXPECT_EQ(b[0].orbit.m, 1);
    EXPECT_EQ(b[0].module.h, 3u);
    EXPECT_EQ(b[1].orbit.m, 5);
    EXPECT_EQ(b[1].module.h, 1u);

    auto c = enumerate_orbits(params(3, 2, 2), {});
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0].module.h, 2u);
}

TEST(Syntomic, EnumerationNeedsBoundsForSlots)
{
    AlphaBounds unbounded{{"t1"}, std::nullopt, std::nullopt};
    EXPECT_THROW(enumerate_orbits(params(2, 3, 1), unbounded), ValidationError);
    AlphaBounds half{{"t1"}, Integer(3), std::nullopt};
    EXPECT_THROW(enumerate_orbits(params(2, 3, 1), half), ValidationError);
}

TEST(Syntomic, EnumerationIsSortedAndUnique)
{
    Prime p(2);
    auto sums = enumerate_orbits(params(2, 3, 3), AlphaBounds{{"a", "b"}, Integer(3), 2ul});
    for (std::size_t k = 1; k < sums.size(); ++k) {
        const auto& x = sums[k - 1].orbit;
        const auto& y = sums[k].orbit;
        ASSERT_TRUE(x.m < y.m || (x.m == y.m && compare(p, x.alpha, y.alpha) < 0));
    }
}

TEST(Syntomic, KernelGeneratorExamples)
{
    EXPECT_EQ(kernel_generator(params(3, 2, 1), orbit(3, 1)), (std::vector<unsigned long>{0}));
    EXPECT_EQ(kernel_generator(params(2, 2, 1), orbit(2, 1)), (std::vector<unsigned long>{0, 0}));
    EXPECT_EQ(kernel_generator(params(2, 3, 2), orbit(2, 1)), (std::vector<unsigned long>{0, 0, 1}));
    EXPECT_THROW(kernel_generator(params(2, 3, 1), orbit(2, 5)), ValidationError);
}

TEST(Syntomic, OtherDegreesVanish)
{
    auto o = h_other_degrees(params(3, 2, 1));
    EXPECT_TRUE(o.reduced_h0.trivial());
    EXPECT_TRUE(o.h2.trivial());
    EXPECT_TRUE(o.higher.trivial());
    EXPECT_EQ(o.full_h0, "Prism(S_T) = A_crys(S_T)");
}

TEST(Syntomic, ExponentIsSOrZero)
{
    Gen g(23);
    for (int c = 0; c < 500; ++c) {
        unsigned long pv = g.prime();
        TruncationParams t(Prime(pv), Integer(g.coprime_to(pv, 1, 60)), g.range(0, 8));
        Orbit o(Prime(pv), Integer(g.coprime_to(pv, 1, 400)));
        auto s = h1_syntomic_orbit(t, o);
        bool divisible = divides(t.e, pow_ui(Integer(pv), s.s) * o.m);
        ASSERT_EQ(s.module.h, divisible ? 0u : s.s);
    }
}

TEST(Syntomic, GeneratorExponentsNondecreasingTowardLevelZero)
{
    Gen g(24);
    for (int c = 0; c < 500; ++c) {
        unsigned long pv = g.prime();
        Prime p(pv);
        TruncationParams t(p, Integer(g.range(1, 40)), g.range(1, 8));
        Orbit o(p, Integer(g.coprime_to(pv, 1, 40)), g.alpha(p, 2, 10, 3));
        auto s = h1_syntomic_orbit(t, o);
        ASSERT_EQ(s.generator_exponents.size(), s.s);
        if (s.s == 0)
            continue;
        ASSERT_EQ(s.generator_exponents.front(), 0u);
        for (std::size_t k = 1; k < s.generator_exponents.size(); ++k)
            ASSERT_LE(s.generator_exponents[k - 1], s.generator_exponents[k]);
    }
}

TEST(Syntomic, TotalOrderIsIEMinusOne)
{
    Gen g(25);
    for (int c = 0; c < 500; ++c) {
        unsigned long pv = g.prime();
        long e = g.coprime_to(pv, 1, 30);
        unsigned long i = g.range(0, 6);
        unsigned long total = 0;
        for (const auto& s : enumerate_orbits(params(pv, e, i), {}))
            total += s.module.h;
        ASSERT_EQ(total, i * (e - 1)) << "p=" << pv << " e=" << e << " i=" << i;
    }
}

TEST(Syntomic, K1MatchesUnitGroup)
{
    // K_1(F_p[x]/x^e, (x)) = (1 + x F_p[x]/x^e)^*.
    for (unsigned long p : {2ul, 3ul, 5ul, 7ul})
        for (long e = 2; e <= 12; ++e) {
            double size = std::pow(double(p), double(e - 1));
            if (size > 70000)
                break;
            EXPECT_EQ(closed_exponents(params(p, e, 1)), unit_group_exponents(p, e)) << "p=" << p << " e=" << e;
        }
}

TEST(Syntomic, UnitGroupOracleExamples)
{
    EXPECT_EQ(unit_group_exponents(3, 2), (std::vector<unsigned long>{1}));
    EXPECT_EQ(unit_group_exponents(2, 3), (std::vector<unsigned long>{2}));
    EXPECT_EQ(unit_group_exponents(2, 4), (std::vector<unsigned long>{2, 1}));
}
