#pragma once

// Smith normal form, over Z and over Z/p^N.
//
// The local version pivots on an entry of least p-adic valuation, so every
// pivot divides everything still to be reduced and no gcd steps are needed.
// Units are normalized away; the diagonal is p^{v_0}, p^{v_1}, ... with v
// nondecreasing and v == N standing for zero.

#include "trcalc/matrix.hpp"
#include "trcalc/padic.hpp"

#include <optional>
#include <utility>

namespace trcalc {

struct SNFResult {
    /// Elementary divisors, each dividing the next, zeros last. Length min(rows, cols).
    std::vector<Integer> diagonal;
};

namespace detail {

inline void swap_rows(IntMatrix& a, std::size_t i, std::size_t j)
{
    if (i == j)
        return;
    for (std::size_t c = 0; c < a.cols(); ++c)
        std::swap(a(i, c), a(j, c));
}

inline void swap_cols(IntMatrix& a, std::size_t i, std::size_t j)
{
    if (i == j)
        return;
    for (std::size_t r = 0; r < a.rows(); ++r)
        std::swap(a(r, i), a(r, j));
}

/// row_dst -= q * row_src
inline void row_axpy(IntMatrix& a, std::size_t dst, std::size_t src, const Integer& q)
{
    for (std::size_t c = 0; c < a.cols(); ++c)
        if (sgn(a(src, c)) != 0)
            a(dst, c) -= q * a(src, c);
}

inline void col_axpy(IntMatrix& a, std::size_t dst, std::size_t src, const Integer& q)
{
    for (std::size_t r = 0; r < a.rows(); ++r)
        if (sgn(a(r, src)) != 0)
            a(r, dst) -= q * a(r, src);
}

} // namespace detail

/// Classical Smith normal form over the integers.
inline SNFResult smith_normal_form(IntMatrix a)
{
    const std::size_t n = std::min(a.rows(), a.cols());
    SNFResult out;
    std::size_t t = 0;
    for (; t < n; ++t) {
        // Smallest nonzero entry of the trailing block becomes the pivot.
        auto pick = [&](bool only_cross) -> bool {
            std::size_t br = a.rows(), bc = a.cols();
            for (std::size_t r = t; r < a.rows(); ++r)
                for (std::size_t c = t; c < a.cols(); ++c) {
                    if (only_cross && r != t && c != t)
                        continue;
                    if (sgn(a(r, c)) == 0)
                        continue;
                    if (br == a.rows() || mpz_cmpabs(a(r, c).get_mpz_t(), a(br, bc).get_mpz_t()) < 0) {
                        br = r;
                        bc = c;
                    }
                }
            if (br == a.rows())
                return false;
            detail::swap_rows(a, t, br);
            detail::swap_cols(a, t, bc);
            return true;
        };
        if (!pick(false))
            break;

        for (;;) {
            bool clean = true;
            for (std::size_t r = t + 1; r < a.rows(); ++r) {
                if (sgn(a(r, t)) == 0)
                    continue;
                Integer q = a(r, t) / a(t, t);
                detail::row_axpy(a, r, t, q);
                if (sgn(a(r, t)) != 0)
                    clean = false;
            }
            for (std::size_t c = t + 1; c < a.cols(); ++c) {
                if (sgn(a(t, c)) == 0)
                    continue;
                Integer q = a(t, c) / a(t, t);
                detail::col_axpy(a, c, t, q);
                if (sgn(a(t, c)) != 0)
                    clean = false;
            }
            if (!clean) {
                pick(true);
                continue;
            }
            // Pivot must divide the rest of the block.
            bool divisible = true;
            for (std::size_t r = t + 1; r < a.rows() && divisible; ++r)
                for (std::size_t c = t + 1; c < a.cols(); ++c)
                    if (!divides(a(t, t), a(r, c))) {
                        detail::row_axpy(a, t, r, Integer(-1));
                        divisible = false;
                        break;
                    }
            if (divisible)
                break;
        }
        out.diagonal.push_back(abs(a(t, t)));
    }
    out.diagonal.resize(n, Integer(0));
    return out;
}

/// Smith form over Z/p^N.
struct LocalSNF {
    Prime p{2};
    unsigned long precision = 0;
    /// v_j of the j-th diagonal entry p^{v_j}; precision means the entry is zero.
    std::vector<unsigned long> valuations;
    std::size_t rank = 0;
    /// When requested: U * M * V == diag(p^{v_j}) modulo p^N, U and V invertible.
    std::optional<IntMatrix> U;
    std::optional<IntMatrix> V;
    std::size_t rows = 0;
    std::size_t cols = 0;

    /// Exponents v_j with 0 < v_j < N: the p-torsion of the cokernel.
    std::vector<unsigned long> torsion_exponents() const
    {
        std::vector<unsigned long> out;
        for (std::size_t j = 0; j < rank; ++j)
            if (valuations[j] > 0)
                out.push_back(valuations[j]);
        return out;
    }
};

inline unsigned long valuation_mod(const Prime& p, unsigned long precision, const Integer& x)
{
    if (sgn(x) == 0)
        return precision;
    unsigned long v = vp(p, x);
    return v < precision ? v : precision;
}

inline LocalSNF local_smith_normal_form(const Prime& p, unsigned long precision, const IntMatrix& m,
                                        bool with_transforms = false)
{
    if (precision == 0)
        throw ValidationError("local_smith_normal_form: precision must be >= 1");
    const Integer modulus = pow_ui(p.integer(), precision);
    IntMatrix a = reduce_mod(m, modulus);
    const std::size_t n = std::min(a.rows(), a.cols());

    LocalSNF out;
    out.p = p;
    out.precision = precision;
    out.rows = a.rows();
    out.cols = a.cols();
    IntMatrix U, V;
    if (with_transforms) {
        U = IntMatrix::identity(a.rows());
        V = IntMatrix::identity(a.cols());
    }

    auto reduce_row = [&](IntMatrix& x, std::size_t r) {
        for (std::size_t c = 0; c < x.cols(); ++c)
            if (sgn(x(r, c)) != 0)
                x(r, c) = mod(x(r, c), modulus);
    };
    auto reduce_col = [&](IntMatrix& x, std::size_t c) {
        for (std::size_t r = 0; r < x.rows(); ++r)
            if (sgn(x(r, c)) != 0)
                x(r, c) = mod(x(r, c), modulus);
    };

    std::size_t t = 0;
    for (; t < n; ++t) {
        std::size_t br = 0, bc = 0;
        unsigned long best = precision;
        for (std::size_t r = t; r < a.rows() && best > 0; ++r)
            for (std::size_t c = t; c < a.cols(); ++c) {
                unsigned long v = valuation_mod(p, precision, a(r, c));
                if (v < best) {
                    best = v;
                    br = r;
                    bc = c;
                    if (v == 0)
                        break;
                }
            }
        if (best == precision)
            break;
        detail::swap_rows(a, t, br);
        detail::swap_cols(a, t, bc);
        if (with_transforms) {
            detail::swap_rows(U, t, br);
            detail::swap_cols(V, t, bc);
        }

        const Integer pv = pow_ui(p.integer(), best);
        Integer unit = a(t, t) / pv;
        Integer unit_inv;
        mpz_invert(unit_inv.get_mpz_t(), unit.get_mpz_t(), modulus.get_mpz_t());

        // Normalize the pivot to p^v.
        for (std::size_t c = 0; c < a.cols(); ++c)
            a(t, c) *= unit_inv;
        reduce_row(a, t);
        if (with_transforms) {
            for (std::size_t c = 0; c < U.cols(); ++c)
                U(t, c) *= unit_inv;
            reduce_row(U, t);
        }

        for (std::size_t r = t + 1; r < a.rows(); ++r) {
            if (sgn(a(r, t)) == 0)
                continue;
            Integer q = a(r, t) / pv;
            detail::row_axpy(a, r, t, q);
            reduce_row(a, r);
            if (with_transforms) {
                detail::row_axpy(U, r, t, q);
                reduce_row(U, r);
            }
        }
        for (std::size_t c = t + 1; c < a.cols(); ++c) {
            if (sgn(a(t, c)) == 0)
                continue;
            Integer q = a(t, c) / pv;
            detail::col_axpy(a, c, t, q);
            reduce_col(a, c);
            if (with_transforms) {
                detail::col_axpy(V, c, t, q);
                reduce_col(V, c);
            }
        }
        out.valuations.push_back(best);
    }
    out.rank = t;
    out.valuations.resize(n, precision);
    if (with_transforms) {
        out.U = std::move(U);
        out.V = std::move(V);
    }
    return out;
}

/// Exponent k such that the class of z in coker(M) has order p^k; nullopt
/// when the class has infinite order. Requires a LocalSNF computed with
/// transforms; z lives in the codomain of M.
///
/// The rows of U along the free part of the cokernel kill im(M) only modulo
/// p^N, so on a class of order dividing p^d they vanish modulo p^{N-d}, where
/// d is the largest torsion exponent. Components of at least that valuation
/// count as zero.
inline std::optional<unsigned long> class_order_exponent(const LocalSNF& snf, const std::vector<Integer>& z)
{
    if (!snf.U)
        throw ValidationError("class_order_exponent: SNF computed without transforms");
    if (z.size() != snf.rows)
        throw ValidationError("class_order_exponent: vector length mismatch");
    const Integer modulus = pow_ui(snf.p.integer(), snf.precision);
    unsigned long d_max = 0;
    for (std::size_t j = 0; j < snf.rank; ++j)
        d_max = std::max(d_max, snf.valuations[j]);
    std::vector<Integer> y = *snf.U * z;
    unsigned long k = 0;
    for (std::size_t j = 0; j < y.size(); ++j) {
        y[j] = mod(y[j], modulus);
        unsigned long v = valuation_mod(snf.p, snf.precision, y[j]);
        if (j >= snf.rank) {
            if (v + d_max < snf.precision)
                return std::nullopt;
            continue;
        }
        if (snf.valuations[j] > v)
            k = std::max(k, snf.valuations[j] - v);
    }
    return k;
}

} // namespace trcalc
