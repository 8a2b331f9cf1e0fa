#pragma once

// Arbitrary-precision integers. Every quantity that can feed a valuation or a
// factorial ratio goes through Integer; machine words are used only for
// counts (levels, exponents, weights).

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace trcalc {

using Integer = mpz_class;

inline Integer pow_ui(const Integer& base, unsigned long exp)
{
    Integer r;
    mpz_pow_ui(r.get_mpz_t(), base.get_mpz_t(), exp);
    return r;
}

inline Integer pow_ui(unsigned long base, unsigned long exp)
{
    Integer r;
    mpz_ui_pow_ui(r.get_mpz_t(), base, exp);
    return r;
}

inline Integer floor_div(const Integer& a, const Integer& b)
{
    Integer q;
    mpz_fdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return q;
}

inline Integer ceil_div(const Integer& a, const Integer& b)
{
    Integer q;
    mpz_cdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return q;
}

inline bool divides(const Integer& d, const Integer& n)
{
    return mpz_divisible_p(n.get_mpz_t(), d.get_mpz_t()) != 0;
}

/// Nonnegative residue of a modulo m.
inline Integer mod(const Integer& a, const Integer& m)
{
    Integer r;
    mpz_mod(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t());
    return r;
}

inline std::string to_string(const Integer& x) { return x.get_str(); }

inline unsigned long to_ulong(const Integer& x)
{
    if (sgn(x) < 0 || !x.fits_ulong_p())
        throw std::overflow_error("integer " + x.get_str() + " does not fit a machine word");
    return x.get_ui();
}

/// Exact product of the integers in (lo, hi]; 1 when hi <= lo.
/// Binary splitting keeps the operand sizes balanced.
inline Integer range_product(const Integer& lo, const Integer& hi)
{
    if (hi <= lo)
        return Integer(1);
    Integer span = hi - lo;
    if (span <= 16) {
        Integer r(1);
        for (Integer k = lo + 1; k <= hi; ++k)
            r *= k;
        return r;
    }
    Integer mid = lo + span / 2;
    return range_product(lo, mid) * range_product(mid, hi);
}

} // namespace trcalc
