#pragma once

// Per-bidegree data of the two-term divided-power de Rham-Witt complex of
// S_{e,T} = k[y_t^{1/p^oo}, x]/(y_t, x^e): Nygaard scalings, the differential
// coefficient, and the valuations of the divided Frobenius and canonical maps
// on H^1 generators. Units are never tracked here, only p-valuations.

#include "trcalc/padic.hpp"

#include <algorithm>
#include <string>

namespace trcalc {

/// x-weight m and y-multiweight alpha.
struct Bidegree {
    Integer m;
    MultiIndex alpha;
};

/// Prime, truncation exponent e >= 1 and motivic weight i.
struct TruncationParams {
    TruncationParams(Prime p_, Integer e_, unsigned long i_) : p(std::move(p_)), e(std::move(e_)), i(i_)
    {
        if (sgn(e) <= 0)
            throw ValidationError("truncation exponent e must be >= 1");
    }

    Prime p;
    Integer e;
    unsigned long i;
};

/// The group W(k)/p^h; h == 0 is the trivial group.
struct CyclicWittModule {
    unsigned long h = 0;

    bool trivial() const { return h == 0; }
    std::string to_string(const Prime& p) const
    {
        if (h == 0)
            return "0";
        return "W(k)/" + std::to_string(p.value()) + "^" + std::to_string(h);
    }
    friend bool operator==(const CyclicWittModule&, const CyclicWittModule&) = default;
};

/// Exponents of p scaling the degree-0 and degree-1 generators inside N^{>=i}.
struct NygaardExponents {
    unsigned long degree0 = 0;
    unsigned long degree1 = 0;
    friend bool operator==(const NygaardExponents&, const NygaardExponents&) = default;
};

namespace detail {

inline unsigned long clamp_to_weight(const Integer& x)
{
    return sgn(x) <= 0 ? 0ul : to_ulong(x);
}

inline void require_positive_m(const Integer& m, const char* who)
{
    if (sgn(m) <= 0)
        throw ValidationError(std::string(who) + ": m must be >= 1 (the m = 0 column is split off)");
}

} // namespace detail

/// (max(i - floor(m/e) - |alpha|, 0), max(i - ceil(m/e) - |alpha|, 0)).
inline NygaardExponents nygaard_exponents(const TruncationParams& params, const Bidegree& d)
{
    Integer a = floor_l1(params.p, d.alpha);
    Integer w(params.i);
    return {detail::clamp_to_weight(w - floor_div(d.m, params.e) - a),
            detail::clamp_to_weight(w - ceil_div(d.m, params.e) - a)};
}

/// d sends the degree-0 generator of weight m to {m, e} times the degree-1 generator.
inline Integer diff_coeff(const Integer& e, const Integer& m)
{
    detail::require_positive_m(m, "diff_coeff");
    return brace(m, e);
}

/// Valuation t of the divided Frobenius H^1_{(m,alpha)} -> H^1_{(pm,p alpha)}:
/// max(ceil(m/e) + |alpha| - i, 0).
inline Integer frob_h1_valuation(const TruncationParams& params, const Bidegree& d)
{
    detail::require_positive_m(d.m, "frob_h1_valuation");
    Integer t = ceil_div(d.m, params.e) + floor_l1(params.p, d.alpha) - Integer(params.i);
    return sgn(t) > 0 ? t : Integer(0);
}

/// Valuation of the canonical map on H^1 in bidegree (m, alpha).
inline unsigned long can_h1_valuation(const TruncationParams& params, const Bidegree& d)
{
    detail::require_positive_m(d.m, "can_h1_valuation");
    return nygaard_exponents(params, d).degree1;
}

/// H^1 of the full complex in bidegree (m, alpha): W(k)/{m, e}.
inline CyclicWittModule h1_lw(const Prime& p, const Integer& e, const Integer& m)
{
    return {vp(p, diff_coeff(e, m))};
}

/// H^1 of N^{>=i} in bidegree (m, alpha).
inline CyclicWittModule h1_nygaard(const TruncationParams& params, const Bidegree& d)
{
    CyclicWittModule lw = h1_lw(params.p, params.e, d.m);
    Integer fl = floor_div(d.m, params.e);
    Integer cl = ceil_div(d.m, params.e);
    if (Integer(params.i) >= cl + floor_l1(params.p, d.alpha))
        return {lw.h + to_ulong(cl - fl)};
    return lw;
}

} // namespace trcalc
