#pragma once

// Closed-form syntomic cohomology Z_p(i)(S_{e,T}) orbit by orbit.
//
// An orbit (m, alpha) with p not dividing m collects the bidegrees
// (p^a m, p^a alpha), a >= 0. On an orbit the divided Frobenius is an
// isomorphism on H^1 up to level s - 1, where s is the first level with
// ceil(p^s m / e) + |p^s alpha| > i, and the kernel of phi/p^i - can is
// cyclic of order p^{v_p({p^s m, e})}.

#include "trcalc/drw.hpp"

#include <algorithm>
#include <optional>
#include <set>
#include <vector>

namespace trcalc {

struct Orbit {
    Orbit(const Prime& p, Integer m_, MultiIndex alpha_ = {}) : m(std::move(m_)), alpha(std::move(alpha_))
    {
        if (sgn(m) <= 0)
            throw ValidationError("orbit: m must be >= 1");
        if (divides(p.integer(), m))
            throw ValidationError("orbit: p divides m = " + m.get_str());
    }

    Integer m;
    MultiIndex alpha;
};

struct SyntomicSummand {
    Orbit orbit;
    CyclicWittModule module;
    unsigned long s = 0;
    /// (c_{s-1}, ..., c_0); empty when s == 0.
    std::vector<unsigned long> generator_exponents;
};

/// Smallest s >= 0 with ceil(p^s m / e) + |p^s alpha| > i.
inline unsigned long s_function(const TruncationParams& params, const Integer& m, const MultiIndex& alpha)
{
    if (sgn(m) <= 0)
        throw ValidationError("s_function: m must be >= 1");
    const Integer weight(params.i);
    Integer pm = m;
    MultiIndex scaled = alpha;
    for (unsigned long s = 0;; ++s) {
        if (ceil_div(pm, params.e) + floor_l1(params.p, scaled) > weight)
            return s;
        pm *= params.p.integer();
        scaled = scale_by_p(params.p, scaled, 1);
    }
}

/// Exponent i - ceil(p^j m/e) - |p^j alpha| of the canonical map at level j (may be negative).
inline Integer canonical_defect(const TruncationParams& params, const Orbit& orbit, unsigned long j)
{
    Integer pj = pow_ui(params.p.integer(), j);
    return Integer(params.i) - ceil_div(pj * orbit.m, params.e) -
           floor_l1(params.p, scale_by_p(params.p, orbit.alpha, j));
}

/// Exponents c_a = sum_{j=a+1}^{s-1} (i - ceil(p^j m/e) - |p^j alpha|) of the
/// kernel generator (h_{s-1}, ..., h_0), h_a = unit * p^{c_a} g_a, obtained
/// from the recursion phi(h_a)/p^i = can(h_{a+1}) with h_{s-1} = g_{s-1}.
inline std::vector<unsigned long> kernel_generator(const TruncationParams& params, const Orbit& orbit)
{
    unsigned long s = s_function(params, orbit.m, orbit.alpha);
    if (s == 0)
        throw ValidationError("kernel_generator: s = 0, the kernel summand is trivial");
    std::vector<unsigned long> out(s, 0);
    // out[k] holds c_{s-1-k}.
    unsigned long acc = 0;
    for (unsigned long k = 1; k < s; ++k) {
        unsigned long j = s - k; // level whose canonical exponent is added
        acc += to_ulong(canonical_defect(params, orbit, j));
        out[k] = acc;
    }
    return out;
}

inline SyntomicSummand h1_syntomic_orbit(const TruncationParams& params, const Orbit& orbit)
{
    unsigned long s = s_function(params, orbit.m, orbit.alpha);
    Integer top = pow_ui(params.p.integer(), s) * orbit.m;
    SyntomicSummand out{orbit, {vp(params.p, brace(top, params.e))}, s, {}};
    if (s > 0)
        out.generator_exponents = kernel_generator(params, orbit);
    return out;
}

/// Finite window over alpha: every slot ranges over num / p^pexp with
/// 0 <= num <= num_max and 0 <= pexp <= pexp_max.
struct AlphaBounds {
    std::vector<std::string> slots;
    std::optional<Integer> num_max;
    std::optional<unsigned long> pexp_max;
};

/// All distinct multi-indices inside the window, in lexicographic order.
inline std::vector<MultiIndex> enumerate_alphas(const Prime& p, const AlphaBounds& bounds)
{
    std::vector<std::string> slots = bounds.slots;
    std::sort(slots.begin(), slots.end());
    slots.erase(std::unique(slots.begin(), slots.end()), slots.end());
    if (slots.empty())
        return {MultiIndex{}};
    if (!bounds.num_max || !bounds.pexp_max)
        throw ValidationError("alpha enumeration over a nonempty slot set needs numerator and p-exponent bounds");
    if (sgn(*bounds.num_max) < 0)
        throw ValidationError("alpha numerator bound must be nonnegative");

    std::vector<PAdicFraction> values;
    for (unsigned long e = 0; e <= *bounds.pexp_max; ++e) {
        for (Integer n = 0; n <= *bounds.num_max; ++n) {
            PAdicFraction x(p, n, e);
            bool seen = std::any_of(values.begin(), values.end(), [&](const PAdicFraction& y) { return y == x; });
            if (!seen)
                values.push_back(x);
        }
    }
    std::sort(values.begin(), values.end(),
              [&](const PAdicFraction& a, const PAdicFraction& b) { return compare(p, a, b) < 0; });

    std::vector<MultiIndex> out{MultiIndex{}};
    for (const auto& slot : slots) {
        std::vector<MultiIndex> next;
        next.reserve(out.size() * values.size());
        for (const auto& base : out) {
            for (const auto& v : values) {
                MultiIndex a = base;
                a.set(slot, v);
                next.push_back(std::move(a));
            }
        }
        out = std::move(next);
    }
    std::sort(out.begin(), out.end(), [&](const MultiIndex& a, const MultiIndex& b) { return compare(p, a, b) < 0; });
    return out;
}

/// Orbits with p not dividing m, m <= i*e (h >= 1 forces s >= 1, hence
/// ceil(m/e) <= i), enumerated without filtering on h.
inline std::vector<Orbit> enumerate_candidate_orbits(const TruncationParams& params, const AlphaBounds& bounds)
{
    std::vector<MultiIndex> alphas = enumerate_alphas(params.p, bounds);
    std::vector<Orbit> out;
    Integer m_max = Integer(params.i) * params.e;
    for (Integer m = 1; m <= m_max; ++m) {
        if (divides(params.p.integer(), m))
            continue;
        for (const auto& a : alphas)
            out.emplace_back(params.p, m, a);
    }
    return out;
}

/// Summands with h >= 1, sorted by (m, alpha).
inline std::vector<SyntomicSummand> enumerate_orbits(const TruncationParams& params, const AlphaBounds& bounds)
{
    std::vector<SyntomicSummand> out;
    for (const auto& orbit : enumerate_candidate_orbits(params, bounds)) {
        SyntomicSummand s = h1_syntomic_orbit(params, orbit);
        if (!s.module.trivial())
            out.push_back(std::move(s));
    }
    return out;
}

/// Cohomology outside degree 1.
struct OtherDegrees {
    CyclicWittModule reduced_h0;  // always 0
    std::string full_h0;          // symbolic: prismatic cohomology of the base S_T
    CyclicWittModule h2;          // always 0
    CyclicWittModule higher;      // H^k, k >= 3: always 0
};

inline OtherDegrees h_other_degrees(const TruncationParams&)
{
    return {{0}, "Prism(S_T) = A_crys(S_T)", {0}, {0}};
}

} // namespace trcalc
