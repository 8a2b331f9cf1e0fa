#pragma once

// Test-only reference computations. None of these call into the library's
// arithmetic beyond the Integer type, so they can serve as independent oracles.

#include "trcalc/trcalc.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

namespace trcalc::testing {

inline constexpr std::uint64_t kSeed = 0x7263616c63ULL;

/// Fixed-seed generator with the handful of shapes the property tests need.
class Gen {
public:
    explicit Gen(std::uint64_t salt = 0) : rng_(kSeed ^ (salt * 0x9e3779b97f4a7c15ULL)) {}

    long range(long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(rng_); }
    bool coin() { return range(0, 1) == 1; }
    unsigned long prime()
    {
        static const unsigned long ps[] = {2, 3, 5, 7, 11};
        return ps[range(0, 4)];
    }
    unsigned long small_prime()
    {
        static const unsigned long ps[] = {2, 3, 5};
        return ps[range(0, 2)];
    }
    long coprime_to(unsigned long p, long lo, long hi)
    {
        for (;;) {
            long x = range(lo, hi);
            if (x % static_cast<long>(p) != 0)
                return x;
        }
    }
    /// Up to `slots` entries num/p^k with num <= num_max, k <= pexp_max.
    MultiIndex alpha(const Prime& p, int slots, long num_max, long pexp_max)
    {
        MultiIndex a;
        int n = static_cast<int>(range(0, slots));
        for (int k = 0; k < n; ++k)
            a.set("t" + std::to_string(k + 1), PAdicFraction(p, Integer(range(0, num_max)), range(0, pexp_max)));
        return a;
    }

private:
    std::mt19937_64 rng_;
};

/// v_p(n!) from the actual product.
inline unsigned long naive_vp_factorial(unsigned long p, unsigned long n)
{
    Integer f = 1;
    for (unsigned long k = 2; k <= n; ++k)
        f *= k;
    unsigned long v = 0;
    while (f % p == 0) {
        f /= p;
        ++v;
    }
    return v;
}

inline unsigned long naive_vp(unsigned long p, Integer n)
{
    unsigned long v = 0;
    while (n % p == 0) {
        n /= p;
        ++v;
    }
    return v;
}

inline Integer rational_floor(const mpq_class& q)
{
    Integer out;
    mpz_fdiv_q(out.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return out;
}

inline Integer rational_ceil(const mpq_class& q)
{
    Integer out;
    mpz_cdiv_q(out.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return out;
}

/// alpha as rationals.
inline std::vector<mpq_class> alpha_rationals(const Prime& p, const MultiIndex& a)
{
    std::vector<mpq_class> out;
    for (const auto& [slot, x] : a.entries()) {
        mpq_class q(x.num(), pow_ui(p.integer(), x.pexp()));
        q.canonicalize();
        out.push_back(q);
    }
    return out;
}

/// Least s with ceil(p^s m / e) + sum floor(p^s alpha_t) > i, over Q.
inline unsigned long naive_s(unsigned long p, unsigned long i, const Integer& e, const Integer& m,
                             const std::vector<mpq_class>& alpha)
{
    for (unsigned long s = 0;; ++s) {
        Integer ps = pow_ui(Integer(p), s);
        mpq_class x(ps * m, e);
        x.canonicalize();
        Integer total = rational_ceil(x);
        for (const auto& a : alpha)
            total += rational_floor(mpq_class(a * mpq_class(ps)));
        if (total > Integer(i))
            return s;
    }
}

/// Invariant factor exponents (descending) of the unit group 1 + x F_p[x]/x^e,
/// by enumerating every element and raising it to p-th powers with plain
/// polynomial multiplication.
inline std::vector<unsigned long> unit_group_exponents(unsigned long p, unsigned long e)
{
    const unsigned long n = e - 1; // coefficients of x^1..x^{e-1}
    std::vector<unsigned> poly(e), acc(e), tmp(e);
    auto mul = [&](const std::vector<unsigned>& a, const std::vector<unsigned>& b, std::vector<unsigned>& out) {
        std::fill(out.begin(), out.end(), 0u);
        for (unsigned long r = 0; r < e; ++r)
            if (a[r])
                for (unsigned long c = 0; r + c < e; ++c)
                    out[r + c] = (out[r + c] + a[r] * b[c]) % p;
    };
    auto is_one = [&](const std::vector<unsigned>& a) {
        if (a[0] != 1)
            return false;
        for (unsigned long r = 1; r < e; ++r)
            if (a[r])
                return false;
        return true;
    };
    std::map<unsigned long, unsigned long> by_order; // log_p(order) -> count
    std::vector<unsigned> digits(n, 0);
    unsigned long total = 1;
    for (unsigned long k = 0; k < n; ++k)
        total *= p;
    for (unsigned long idx = 0; idx < total; ++idx) {
        poly[0] = 1;
        for (unsigned long k = 0; k < n; ++k)
            poly[k + 1] = digits[k];
        unsigned long k = 0;
        acc = poly;
        while (!is_one(acc)) {
            // acc <- acc^p
            std::vector<unsigned> pw(e, 0);
            pw[0] = 1;
            for (unsigned long r = 0; r < p; ++r) {
                mul(pw, acc, tmp);
                pw.swap(tmp);
            }
            acc.swap(pw);
            ++k;
        }
        ++by_order[k];
        for (unsigned long d = 0; d < n; ++d) {
            if (++digits[d] < p)
                break;
            digits[d] = 0;
        }
    }
    // |G[p^k]| = p^{sum_j min(lambda_j, k)}; #lambda_j >= k from consecutive ratios.
    unsigned long max_k = by_order.rbegin()->first;
    std::vector<unsigned long> log_kernel(max_k + 1, 0);
    unsigned long count = 0;
    for (unsigned long k = 0; k <= max_k; ++k) {
        count += by_order.count(k) ? by_order[k] : 0;
        log_kernel[k] = naive_vp(p, Integer(count));
    }
    std::vector<unsigned long> at_least(max_k + 2, 0);
    for (unsigned long k = 1; k <= max_k; ++k)
        at_least[k] = log_kernel[k] - log_kernel[k - 1];
    std::vector<unsigned long> out;
    for (unsigned long k = 1; k <= max_k; ++k) {
        unsigned long exactly = at_least[k] - at_least[k + 1];
        for (unsigned long r = 0; r < exactly; ++r)
            out.push_back(k);
    }
    std::sort(out.rbegin(), out.rend());
    return out;
}

/// Determinant by cofactor expansion (small matrices only).
inline Integer naive_det(const std::vector<std::vector<Integer>>& a)
{
    const std::size_t n = a.size();
    if (n == 0)
        return 1;
    if (n == 1)
        return a[0][0];
    Integer out = 0;
    for (std::size_t c = 0; c < n; ++c) {
        std::vector<std::vector<Integer>> minor;
        for (std::size_t r = 1; r < n; ++r) {
            std::vector<Integer> row;
            for (std::size_t k = 0; k < n; ++k)
                if (k != c)
                    row.push_back(a[r][k]);
            minor.push_back(row);
        }
        Integer term = a[0][c] * naive_det(minor);
        out += (c % 2 == 0) ? term : Integer(-term);
    }
    return out;
}

/// Elementary divisors from determinantal divisors d_k = gcd of k x k minors.
inline std::vector<Integer> determinantal_divisors(const std::vector<std::vector<Integer>>& a)
{
    const std::size_t rows = a.size(), cols = rows ? a[0].size() : 0;
    const std::size_t n = std::min(rows, cols);
    auto subsets = [](std::size_t total, std::size_t k) {
        std::vector<std::vector<std::size_t>> out;
        std::vector<std::size_t> cur;
        auto rec = [&](auto&& self, std::size_t start) -> void {
            if (cur.size() == k) {
                out.push_back(cur);
                return;
            }
            for (std::size_t x = start; x < total; ++x) {
                cur.push_back(x);
                self(self, x + 1);
                cur.pop_back();
            }
        };
        rec(rec, 0);
        return out;
    };
    std::vector<Integer> d(n + 1, 0);
    d[0] = 1;
    for (std::size_t k = 1; k <= n; ++k) {
        Integer g = 0;
        for (const auto& rs : subsets(rows, k))
            for (const auto& cs : subsets(cols, k)) {
                std::vector<std::vector<Integer>> m(k, std::vector<Integer>(k));
                for (std::size_t r = 0; r < k; ++r)
                    for (std::size_t c = 0; c < k; ++c)
                        m[r][c] = a[rs[r]][cs[c]];
                Integer det = naive_det(m);
                mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), det.get_mpz_t());
            }
        d[k] = g;
    }
    std::vector<Integer> out;
    for (std::size_t k = 1; k <= n; ++k)
        out.push_back(sgn(d[k]) == 0 ? Integer(0) : Integer(d[k] / d[k - 1]));
    return out;
}

/// H^1 exponents of every candidate orbit at (p, e, i), T = {}, from the oracle.
inline std::vector<unsigned long> oracle_h1_factors(const TruncationParams& params)
{
    std::vector<unsigned long> out;
    for (const auto& orbit : enumerate_candidate_orbits(params, {}))
        for (auto x : oracle_cohomology(params, default_truncation(params, orbit)).degree1)
            out.push_back(x);
    std::sort(out.rbegin(), out.rend());
    return out;
}

} // namespace trcalc::testing
