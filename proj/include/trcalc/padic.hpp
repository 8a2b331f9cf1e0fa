#pragma once

// Exact p-adic bookkeeping: the prime, valuations, Legendre's formula, the
// grading coordinates in N[1/p] and multi-indices over named slots.

#include "trcalc/errors.hpp"
#include "trcalc/integer.hpp"

#include <compare>
#include <map>
#include <string>
#include <utility>

namespace trcalc {

class Prime {
public:
    explicit Prime(unsigned long p) : p_(p), z_(p)
    {
        if (!is_prime(p))
            throw ValidationError(std::to_string(p) + " is not prime");
    }

    unsigned long value() const { return p_; }
    const Integer& integer() const { return z_; }

    friend bool operator==(const Prime& a, const Prime& b) { return a.p_ == b.p_; }

    static bool is_prime(unsigned long n)
    {
        if (n < 2)
            return false;
        if (n < 4)
            return true;
        if (n % 2 == 0)
            return false;
        if (n < (1ul << 32)) {
            for (unsigned long d = 3; d * d <= n; d += 2)
                if (n % d == 0)
                    return false;
            return true;
        }
        Integer z(n);
        return mpz_probab_prime_p(z.get_mpz_t(), 40) > 0;
    }

private:
    unsigned long p_;
    Integer z_;
};

/// Largest a with p^a | n. Rejects n == 0.
inline unsigned long vp(const Prime& p, const Integer& n)
{
    if (sgn(n) == 0)
        throw ValidationError("vp: valuation of zero is undefined");
    Integer rest;
    return mpz_remove(rest.get_mpz_t(), n.get_mpz_t(), p.integer().get_mpz_t());
}

inline Integer digit_sum(const Prime& p, Integer n)
{
    Integer s(0);
    Integer r;
    while (sgn(n) > 0) {
        mpz_fdiv_qr(n.get_mpz_t(), r.get_mpz_t(), n.get_mpz_t(), p.integer().get_mpz_t());
        s += r;
    }
    return s;
}

/// v_p(n!) = (n - s_p(n)) / (p - 1).
inline Integer legendre_vp_factorial(const Prime& p, const Integer& n)
{
    if (sgn(n) < 0)
        throw ValidationError("legendre_vp_factorial: negative argument");
    return (n - digit_sum(p, n)) / Integer(p.value() - 1);
}

/// v_p(hi! / lo!) for hi >= lo.
inline Integer vp_factorial_ratio(const Prime& p, const Integer& hi, const Integer& lo)
{
    if (hi < lo)
        throw ValidationError("vp_factorial_ratio: hi < lo");
    return legendre_vp_factorial(p, hi) - legendre_vp_factorial(p, lo);
}

/// hi! / lo!, as the exact product over (lo, hi].
inline Integer factorial_ratio(const Integer& hi, const Integer& lo)
{
    if (hi < lo || sgn(lo) < 0)
        throw ValidationError("factorial_ratio: need 0 <= lo <= hi");
    return range_product(lo, hi);
}

/// {m, e} = m * floor((m-1)/e)! / floor(m/e)!, i.e. m if e does not divide m, e otherwise.
inline Integer brace(const Integer& m, const Integer& e)
{
    if (sgn(m) <= 0)
        throw ValidationError("brace: m must be positive");
    if (sgn(e) <= 0)
        throw ValidationError("brace: e must be positive");
    return divides(e, m) ? e : m;
}

/// An element num / p^pexp of N[1/p], kept normalized: p does not divide num
/// unless num == 0, and zero is stored as 0/p^0.
class PAdicFraction {
public:
    PAdicFraction() = default;

    PAdicFraction(const Prime& p, Integer num, unsigned long pexp = 0) : num_(std::move(num)), pexp_(pexp)
    {
        if (sgn(num_) < 0)
            throw ValidationError("PAdicFraction: numerator must be nonnegative");
        if (sgn(num_) == 0) {
            pexp_ = 0;
            return;
        }
        while (pexp_ > 0 && divides(p.integer(), num_)) {
            num_ /= p.integer();
            --pexp_;
        }
    }

    const Integer& num() const { return num_; }
    unsigned long pexp() const { return pexp_; }
    bool is_zero() const { return sgn(num_) == 0; }

    /// "num/p^pexp" with p written out, e.g. "3/2^2" for 3/4.
    std::string to_string(const Prime& p) const
    {
        return num_.get_str() + "/" + std::to_string(p.value()) + "^" + std::to_string(pexp_);
    }

    friend bool operator==(const PAdicFraction& a, const PAdicFraction& b)
    {
        return a.pexp_ == b.pexp_ && a.num_ == b.num_;
    }

private:
    Integer num_{0};
    unsigned long pexp_ = 0;
};

/// Value order on N[1/p].
inline std::strong_ordering compare(const Prime& p, const PAdicFraction& a, const PAdicFraction& b)
{
    Integer lhs = a.num() * pow_ui(p.integer(), b.pexp());
    Integer rhs = b.num() * pow_ui(p.integer(), a.pexp());
    int c = cmp(lhs, rhs);
    return c < 0 ? std::strong_ordering::less : c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal;
}

inline Integer floor_frac(const Prime& p, const PAdicFraction& x)
{
    return floor_div(x.num(), pow_ui(p.integer(), x.pexp()));
}

/// p^a * x, renormalized.
inline PAdicFraction scale_by_p(const Prime& p, const PAdicFraction& x, unsigned long a)
{
    if (x.is_zero())
        return x;
    if (a >= x.pexp())
        return PAdicFraction(p, x.num() * pow_ui(p.integer(), a - x.pexp()), 0);
    return PAdicFraction(p, x.num(), x.pexp() - a);
}

/// Finitely supported tuple of N[1/p] entries keyed by slot name. Zero
/// entries are never stored, so the empty map is the zero multi-index.
class MultiIndex {
public:
    using Entries = std::map<std::string, PAdicFraction>;

    MultiIndex() = default;

    void set(const std::string& slot, const PAdicFraction& value)
    {
        if (value.is_zero())
            entries_.erase(slot);
        else
            entries_[slot] = value;
    }

    const Entries& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }

    friend bool operator==(const MultiIndex& a, const MultiIndex& b) { return a.entries_ == b.entries_; }

private:
    Entries entries_;
};

/// Sum of the floors of the entries.
inline Integer floor_l1(const Prime& p, const MultiIndex& alpha)
{
    Integer total(0);
    for (const auto& [slot, x] : alpha.entries())
        total += floor_frac(p, x);
    return total;
}

inline MultiIndex scale_by_p(const Prime& p, const MultiIndex& alpha, unsigned long a)
{
    MultiIndex out;
    for (const auto& [slot, x] : alpha.entries())
        out.set(slot, scale_by_p(p, x, a));
    return out;
}

/// Lexicographic order over (slot, value) pairs; slots are compared as strings.
inline std::strong_ordering compare(const Prime& p, const MultiIndex& a, const MultiIndex& b)
{
    auto ia = a.entries().begin();
    auto ib = b.entries().begin();
    for (; ia != a.entries().end() && ib != b.entries().end(); ++ia, ++ib) {
        if (auto c = ia->first <=> ib->first; c != 0)
            return c;
        if (auto c = compare(p, ia->second, ib->second); c != 0)
            return c;
    }
    if (ia == a.entries().end() && ib == b.entries().end())
        return std::strong_ordering::equal;
    return ia == a.entries().end() ? std::strong_ordering::less : std::strong_ordering::greater;
}

inline std::string to_string(const Prime& p, const MultiIndex& alpha)
{
    if (alpha.empty())
        return "0";
    std::string out;
    for (const auto& [slot, x] : alpha.entries()) {
        if (!out.empty())
            out += ';';
        out += slot + "=" + x.to_string(p);
    }
    return out;
}

} // namespace trcalc
