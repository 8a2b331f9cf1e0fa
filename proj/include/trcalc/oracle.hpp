#pragma once

// Brute-force verification on a truncated orbit.
//
// For an orbit (m, alpha) the bidegrees (p^a m, p^a alpha), a = 0..A, carry
// one degree-0 generator u_a and one degree-1 generator w_a each. The oracle
// writes down d, the divided Frobenius and the canonical map as integer
// matrices modulo p^N, using only the factorial-ratio coefficients of the
// Frobenius and of d. Nygaard scalings are read off from the exact
// valuations of those coefficients (p^k u lies in N^{>=i} iff k + v(phi(u)) >= i),
// not from the closed forms. Frobenius contributions leaving level A are
// dropped; above level s the canonical map is the identity and Frobenius is
// divisible by p, so the discarded tail is acyclic.
//
// The fiber complex of phi/p^i - can is
//   C^0 = N^0  --delta0-->  C^1 = N^1 + Delta^0  --delta1-->  C^2 = Delta^1
//   delta0(u)    = (d u, F u)
//   delta1(x, y) = F x - d y
// with F = phi/p^i - can (signs configurable).

#include "trcalc/snf.hpp"
#include "trcalc/syntomic.hpp"

#include <optional>
#include <stdexcept>

namespace trcalc {

struct OrbitTruncation {
    Orbit orbit;
    unsigned long A = 0;
    unsigned long N = 0;
};

inline OrbitTruncation default_truncation(const TruncationParams& params, const Orbit& orbit)
{
    unsigned long s = s_function(params, orbit.m, orbit.alpha);
    unsigned long A = s + 2;
    return {orbit, A, params.i * (A + 1) + 8};
}

inline void validate_truncation(const TruncationParams& params, const OrbitTruncation& trunc)
{
    unsigned long s = s_function(params, trunc.orbit.m, trunc.orbit.alpha);
    if (trunc.A < s + 2)
        throw ValidationError("truncation: need A >= s + 2 = " + std::to_string(s + 2));
    if (trunc.N <= params.i * (trunc.A + 1) + 4)
        throw ValidationError("truncation: need N > i*(A+1) + 4 = " + std::to_string(params.i * (trunc.A + 1) + 4));
}

/// p^v * unit with the unit known modulo p^N.
struct PAdicValue {
    unsigned long v = 0;
    Integer unit{1};
};

/// prod_{k in (lo, hi]} k, with p stripped out factor by factor.
inline PAdicValue padic_range_product(const Prime& p, const Integer& lo, const Integer& hi, const Integer& modulus)
{
    PAdicValue out;
    const unsigned long pp = p.value();
    Integer k = lo + 1;
    Integer f;
    for (; k <= hi; ++k) {
        f = k;
        while (mpz_divisible_ui_p(f.get_mpz_t(), pp)) {
            mpz_divexact_ui(f.get_mpz_t(), f.get_mpz_t(), pp);
            ++out.v;
        }
        out.unit *= f;
        mpz_mod(out.unit.get_mpz_t(), out.unit.get_mpz_t(), modulus.get_mpz_t());
    }
    return out;
}

inline PAdicValue operator*(const PAdicValue& a, const PAdicValue& b)
{
    return {a.v + b.v, a.unit * b.unit};
}

/// p^shift * x reduced modulo p^N; shift may be negative as long as it is
/// covered by the valuation of x.
inline Integer padic_entry(const Prime& p, unsigned long precision, const PAdicValue& x, long shift)
{
    long k = static_cast<long>(x.v) + shift;
    if (k < 0)
        throw std::logic_error("oracle: non-integral matrix entry");
    if (static_cast<unsigned long>(k) >= precision)
        return 0;
    Integer modulus = pow_ui(p.integer(), precision);
    return mod(pow_ui(p.integer(), static_cast<unsigned long>(k)) * x.unit, modulus);
}

struct OrbitMatrices {
    Prime p{2};
    unsigned long i = 0;
    unsigned long A = 0;
    unsigned long N = 0;
    Integer modulus;
    std::vector<Integer> weights;             // M_a = p^a m
    std::vector<unsigned long> n0, n1;        // Nygaard scalings per level
    std::vector<unsigned long> frob0_val;     // v(c0_a)
    std::vector<unsigned long> frob1_val;     // v(c1_a)
    std::vector<Integer> brace_at;            // {M_a, e}
    IntMatrix d_prism;                        // Delta^0 -> Delta^1
    IntMatrix d_nygaard;                      // N^0 -> N^1 in scaled bases
    IntMatrix frob0, frob1;                   // phi/p^i : N^k -> Delta^k, level a -> a+1
    IntMatrix can0, can1;                     // N^k -> Delta^k
};

inline OrbitMatrices build_orbit_matrices(const TruncationParams& params, const OrbitTruncation& trunc)
{
    validate_truncation(params, trunc);
    const Prime& p = params.p;
    const unsigned long L = trunc.A + 1;
    OrbitMatrices out;
    out.p = p;
    out.i = params.i;
    out.A = trunc.A;
    out.N = trunc.N;
    out.modulus = pow_ui(p.integer(), trunc.N);
    out.d_prism = IntMatrix(L, L);
    out.d_nygaard = IntMatrix(L, L);
    out.frob0 = IntMatrix(L, L);
    out.frob1 = IntMatrix(L, L);
    out.can0 = IntMatrix(L, L);
    out.can1 = IntMatrix(L, L);

    std::vector<PAdicValue> c0(L), c1(L);
    for (unsigned long a = 0; a < L; ++a) {
        Integer M = pow_ui(p.integer(), a) * trunc.orbit.m;
        out.weights.push_back(M);

        // Frobenius on the y-part: prod_t floor(p n_t)! / floor(n_t)!.
        PAdicValue ratio_alpha;
        const MultiIndex scaled = scale_by_p(p, trunc.orbit.alpha, a);
        for (const auto& [slot, x] : scaled.entries()) {
            Integer lo = floor_frac(p, x);
            Integer hi = floor_frac(p, scale_by_p(p, x, 1));
            ratio_alpha = ratio_alpha * padic_range_product(p, lo, hi, out.modulus);
        }
        Integer pM = M * p.integer();
        c0[a] = ratio_alpha * padic_range_product(p, floor_div(M, params.e), floor_div(pM, params.e), out.modulus);
        c1[a] = PAdicValue{1, 1} * ratio_alpha *
                padic_range_product(p, floor_div(M - 1, params.e), floor_div(pM - 1, params.e), out.modulus);
        out.frob0_val.push_back(c0[a].v);
        out.frob1_val.push_back(c1[a].v);
        out.n0.push_back(c0[a].v >= params.i ? 0 : params.i - c0[a].v);
        out.n1.push_back(c1[a].v >= params.i ? 0 : params.i - c1[a].v);
        if (out.n0[a] < out.n1[a])
            throw std::logic_error("oracle: d does not preserve the Nygaard filtration");

        // d(x^M / floor(M/e)!) = M floor((M-1)/e)!/floor(M/e)! * x^M/floor((M-1)/e)! dlog x
        Integer drop = range_product(floor_div(M - 1, params.e), floor_div(M, params.e));
        if (!divides(drop, M))
            throw std::logic_error("oracle: non-integral differential coefficient");
        Integer coeff = M / drop;
        out.brace_at.push_back(coeff);
        PAdicValue dv{0, 1};
        {
            Integer rest;
            dv.v = mpz_remove(rest.get_mpz_t(), coeff.get_mpz_t(), p.integer().get_mpz_t());
            dv.unit = mod(rest, out.modulus);
        }
        out.d_prism(a, a) = padic_entry(p, trunc.N, dv, 0);
        out.d_nygaard(a, a) = padic_entry(p, trunc.N, dv, static_cast<long>(out.n0[a]) - static_cast<long>(out.n1[a]));
        out.can0(a, a) = padic_entry(p, trunc.N, PAdicValue{out.n0[a], 1}, 0);
        out.can1(a, a) = padic_entry(p, trunc.N, PAdicValue{out.n1[a], 1}, 0);
    }
    for (unsigned long a = 0; a + 1 < L; ++a) {
        long shift0 = static_cast<long>(out.n0[a]) - static_cast<long>(params.i);
        long shift1 = static_cast<long>(out.n1[a]) - static_cast<long>(params.i);
        out.frob0(a + 1, a) = padic_entry(p, trunc.N, c0[a], shift0);
        out.frob1(a + 1, a) = padic_entry(p, trunc.N, c1[a], shift1);
    }
    return out;
}

/// Signs of the two maps inside F = phi_sign * phi/p^i + can_sign * can.
struct FiberSigns {
    int phi = 1;
    int can = -1;
};

struct FiberComplex {
    IntMatrix delta0; // 2L x L
    IntMatrix delta1; // L x 2L
};

inline FiberComplex fiber_complex(const OrbitMatrices& mats, FiberSigns signs = {})
{
    auto combine = [&](const IntMatrix& frob, const IntMatrix& can) {
        IntMatrix out(frob.rows(), frob.cols());
        for (std::size_t r = 0; r < frob.rows(); ++r)
            for (std::size_t c = 0; c < frob.cols(); ++c)
                out(r, c) = mod(signs.phi * frob(r, c) + signs.can * can(r, c), mats.modulus);
        return out;
    };
    FiberComplex out;
    out.delta0 = vstack(mats.d_nygaard, combine(mats.frob0, mats.can0));
    out.delta1 = hstack(combine(mats.frob1, mats.can1), reduce_mod(-mats.d_prism, mats.modulus));
    if (!reduce_mod(out.delta1 * out.delta0, mats.modulus).is_zero())
        throw std::logic_error("oracle: fiber differential does not square to zero");
    return out;
}

/// Cohomology of the fiber complex: cyclic factors as p-exponents, plus free ranks.
struct OracleCohomology {
    std::vector<unsigned long> degree0, degree1, degree2;
    unsigned long free0 = 0, free1 = 0, free2 = 0;
    unsigned long A = 0, N = 0;
    std::string delta0_hash, delta1_hash;

    bool degree_empty(int k) const
    {
        switch (k) {
        case 0: return degree0.empty() && free0 == 0;
        case 1: return degree1.empty() && free1 == 0;
        case 2: return degree2.empty() && free2 == 0;
        default: return true;
        }
    }
    /// Sum of the degree-1 exponents (log_p of the order).
    unsigned long degree1_exponent() const
    {
        unsigned long h = 0;
        for (auto x : degree1)
            h += x;
        return h;
    }
    bool same_groups(const OracleCohomology& o) const
    {
        return degree0 == o.degree0 && degree1 == o.degree1 && degree2 == o.degree2 && free0 == o.free0 &&
               free1 == o.free1 && free2 == o.free2;
    }
};

inline OracleCohomology cohomology_of(const OrbitMatrices& mats, const FiberComplex& fc, const LocalSNF& snf0)
{
    const unsigned long L = mats.A + 1;
    LocalSNF snf1 = local_smith_normal_form(mats.p, mats.N, fc.delta1);
    OracleCohomology out;
    out.A = mats.A;
    out.N = mats.N;
    out.free0 = L - snf0.rank;
    out.degree1 = snf0.torsion_exponents();
    out.free1 = 2 * L - snf1.rank - snf0.rank;
    out.degree2 = snf1.torsion_exponents();
    out.free2 = L - snf1.rank;
    out.delta0_hash = matrix_hash(fc.delta0);
    out.delta1_hash = matrix_hash(fc.delta1);
    return out;
}

inline OracleCohomology oracle_cohomology_at(const TruncationParams& params, const OrbitTruncation& trunc,
                                             FiberSigns signs = {})
{
    OrbitMatrices mats = build_orbit_matrices(params, trunc);
    FiberComplex fc = fiber_complex(mats, signs);
    LocalSNF snf0 = local_smith_normal_form(params.p, trunc.N, fc.delta0);
    return cohomology_of(mats, fc, snf0);
}

/// Cohomology at (A, N), cross-checked against (A+1, N+i).
inline OracleCohomology oracle_cohomology(const TruncationParams& params, const OrbitTruncation& trunc)
{
    OracleCohomology here = oracle_cohomology_at(params, trunc);
    OrbitTruncation wider{trunc.orbit, trunc.A + 1, trunc.N + params.i};
    OracleCohomology there = oracle_cohomology_at(params, wider);
    if (!here.same_groups(there))
        throw TruncationInstability("oracle: cohomology changed between A = " + std::to_string(trunc.A) +
                                    " and A = " + std::to_string(trunc.A + 1) + " for m = " + trunc.orbit.m.get_str());
    return here;
}

/// Everything the oracle knows about one orbit at one truncation exponent e:
/// matrices, the reduced delta0 with its transforms, H^1 and a kernel
/// generator built by solving delta1 z = 0 level by level.
struct OracleLevel {
    TruncationParams params;
    OrbitTruncation trunc;
    OrbitMatrices mats;
    FiberComplex fiber;
    LocalSNF snf0;
    OracleCohomology cohomology;
    /// First level whose divided Frobenius on N^1 is not a unit.
    unsigned long s = 0;
    /// H^1 exponent (sum of its cyclic factors).
    unsigned long h = 0;
    /// Kernel generator z = (x_0..x_A, y_0..y_A) in C^1; empty when s == 0.
    std::vector<Integer> generator;
};

inline OracleLevel make_oracle_level(const TruncationParams& params, const OrbitTruncation& trunc,
                                     FiberSigns signs = {})
{
    OrbitMatrices mats = build_orbit_matrices(params, trunc);
    FiberComplex fc = fiber_complex(mats, signs);
    LocalSNF snf0 = local_smith_normal_form(params.p, trunc.N, fc.delta0, true);
    OracleCohomology coh = cohomology_of(mats, fc, snf0);
    OracleLevel out{params, trunc, std::move(mats), std::move(fc), std::move(snf0), std::move(coh), 0, 0, {}};
    out.h = out.cohomology.degree1_exponent();

    const OrbitMatrices& M = out.mats;
    const unsigned long L = trunc.A + 1;
    unsigned long s = 0;
    while (s < L && M.n1[s] + M.frob1_val[s] <= params.i)
        ++s;
    if (s + 1 >= L)
        throw ValidationError("oracle: truncation too short for the Frobenius to degenerate");
    out.s = s;
    if (s == 0)
        return out;

    const Integer& mod_n = M.modulus;
    auto inverse = [&](const Integer& x) {
        Integer r;
        if (mpz_invert(r.get_mpz_t(), x.get_mpz_t(), mod_n.get_mpz_t()) == 0)
            throw std::logic_error("oracle: expected a unit while solving for the kernel generator");
        return r;
    };
    std::vector<Integer> x(L, Integer(0)), y(L, Integer(0));
    // Row b of delta1: phi*frob1[b][b-1] x_{b-1} + can*can1[b] x_b - d_b y_b = 0.
    x[s - 1] = 1;
    for (unsigned long b = s - 1; b >= 1; --b) {
        Integer lhs = -signs.can * M.can1(b, b) * x[b];
        x[b - 1] = mod(lhs * inverse(mod(signs.phi * M.frob1(b, b - 1), mod_n)), mod_n);
    }
    for (unsigned long b = s; b < L; ++b) {
        Integer lhs = -signs.phi * M.frob1(b, b - 1) * x[b - 1];
        x[b] = mod(lhs * inverse(mod(signs.can * M.can1(b, b), mod_n)), mod_n);
    }
    y[0] = mod(signs.can * M.can1(0, 0) * x[0] * inverse(M.d_prism(0, 0)), mod_n);
    out.generator = x;
    out.generator.insert(out.generator.end(), y.begin(), y.end());
    return out;
}

/// Kernel generator check: delta1 z == 0, z generates H^1, and the p-adic
/// valuations of its N^1 coordinates at levels s-1, ..., 0.
struct KernelCertificate {
    bool annihilated = false;
    bool generates = false;
    bool exponents_match = false;
    unsigned long s = 0;
    unsigned long h = 0;
    std::optional<unsigned long> order_exponent;
    std::vector<unsigned long> oracle_exponents; // (v(x_{s-1}), ..., v(x_0))
    bool pass() const { return annihilated && generates && exponents_match; }
};

inline KernelCertificate certify_kernel_generator(const OracleLevel& level, const std::vector<unsigned long>& expected)
{
    KernelCertificate out;
    out.s = level.s;
    out.h = level.h;
    if (level.s == 0)
        throw ValidationError("certify_kernel_generator: s = 0, the kernel summand is trivial");
    std::vector<Integer> image = level.fiber.delta1 * level.generator;
    out.annihilated = true;
    for (auto& v : image)
        if (sgn(mod(v, level.mats.modulus)) != 0)
            out.annihilated = false;
    out.order_exponent = class_order_exponent(level.snf0, level.generator);
    out.generates = out.order_exponent && *out.order_exponent == level.h && level.cohomology.degree1.size() <= 1 &&
                    level.cohomology.free1 == 0;
    for (unsigned long k = 0; k < level.s; ++k)
        out.oracle_exponents.push_back(valuation_mod(level.params.p, level.trunc.N, level.generator[level.s - 1 - k]));
    out.exponents_match = out.oracle_exponents == expected;
    return out;
}

/// The map S_f -> S_e, x -> x, on one orbit, read off on H^1.
struct TransitionResult {
    /// Valuation of the image of the f-generator at level s_e - 1 (N^1 coordinate), capped at N.
    unsigned long exact_valuation = 0;
    /// The image is p^{image_exponent} H^1_e.
    unsigned long image_exponent = 0;
    unsigned long h_source = 0;
    unsigned long h_target = 0;
};

namespace detail {

inline void require_same_orbit(const OracleLevel& a, const OracleLevel& b)
{
    if (!(a.params.p == b.params.p) || a.params.i != b.params.i || a.trunc.orbit.m != b.trunc.orbit.m ||
        !(a.trunc.orbit.alpha == b.trunc.orbit.alpha))
        throw ValidationError("transition: levels belong to different orbits");
}

} // namespace detail

/// Levelwise scalars of the chain map Delta_{S_f} -> Delta_{S_e} in the
/// Nygaard-scaled bases: (T_N0, T_N1, T_D0, T_D1) per level of the target.
struct ChainMapScalars {
    std::vector<Integer> tn0, tn1, td0, td1;
};

inline ChainMapScalars chain_map_scalars(const OracleLevel& target, const OracleLevel& source)
{
    detail::require_same_orbit(target, source);
    const Prime& p = target.params.p;
    const Integer& e = target.params.e;
    const Integer& f = source.params.e;
    if (f < e)
        throw ValidationError("transition: need f >= e");
    if (source.trunc.A < target.trunc.A || source.trunc.N < target.trunc.N)
        throw ValidationError("transition: source truncation must dominate the target truncation");
    const unsigned long L = target.trunc.A + 1;
    const unsigned long N = target.trunc.N;
    const Integer& modulus = target.mats.modulus;
    ChainMapScalars out;
    for (unsigned long a = 0; a < L; ++a) {
        const Integer& M = target.mats.weights[a];
        // x^M/floor(M/f)! = (floor(M/e)!/floor(M/f)!) x^M/floor(M/e)!
        PAdicValue t0 = padic_range_product(p, floor_div(M, f), floor_div(M, e), modulus);
        PAdicValue t1 = padic_range_product(p, floor_div(M - 1, f), floor_div(M - 1, e), modulus);
        unsigned long nf0 = source.mats.n0[a], ne0 = target.mats.n0[a];
        unsigned long nf1 = source.mats.n1[a], ne1 = target.mats.n1[a];
        if (nf0 < ne0 || nf1 < ne1)
            throw std::logic_error("transition: map does not respect the Nygaard filtration");
        out.td0.push_back(padic_entry(p, N, t0, 0));
        out.td1.push_back(padic_entry(p, N, t1, 0));
        out.tn0.push_back(padic_entry(p, N, t0, static_cast<long>(nf0 - ne0)));
        out.tn1.push_back(padic_entry(p, N, t1, static_cast<long>(nf1 - ne1)));
    }
    return out;
}

/// Checks that the scalars commute with d, phi/p^i and can modulo p^N.
inline bool chain_map_commutes(const OracleLevel& target, const OracleLevel& source, const ChainMapScalars& t)
{
    const OrbitMatrices& E = target.mats;
    const OrbitMatrices& F = source.mats;
    const Integer& modulus = E.modulus;
    const unsigned long L = target.trunc.A + 1;
    auto eq = [&](const Integer& a, const Integer& b) { return mod(a - b, modulus) == 0; };
    for (unsigned long a = 0; a < L; ++a) {
        if (!eq(E.d_nygaard(a, a) * t.tn0[a], t.tn1[a] * F.d_nygaard(a, a)))
            return false;
        if (!eq(E.d_prism(a, a) * t.td0[a], t.td1[a] * F.d_prism(a, a)))
            return false;
        if (!eq(E.can0(a, a) * t.tn0[a], t.td0[a] * F.can0(a, a)))
            return false;
        if (!eq(E.can1(a, a) * t.tn1[a], t.td1[a] * F.can1(a, a)))
            return false;
        if (a + 1 < L) {
            if (!eq(E.frob0(a + 1, a) * t.tn0[a], t.td0[a + 1] * F.frob0(a + 1, a)))
                return false;
            if (!eq(E.frob1(a + 1, a) * t.tn1[a], t.td1[a + 1] * F.frob1(a + 1, a)))
                return false;
        }
    }
    return true;
}

/// Image in C^1 of the target of a C^1 vector of the source.
inline std::vector<Integer> transport(const OracleLevel& target, const OracleLevel& source,
                                      const std::vector<Integer>& z)
{
    ChainMapScalars t = chain_map_scalars(target, source);
    const unsigned long Lt = target.trunc.A + 1;
    const unsigned long Ls = source.trunc.A + 1;
    if (z.size() != 2 * Ls)
        throw ValidationError("transport: vector length mismatch");
    std::vector<Integer> out(2 * Lt);
    for (unsigned long a = 0; a < Lt; ++a) {
        out[a] = mod(t.tn1[a] * z[a], target.mats.modulus);
        out[Lt + a] = mod(t.td0[a] * z[Ls + a], target.mats.modulus);
    }
    return out;
}

inline TransitionResult oracle_transition_map(const OracleLevel& target, const OracleLevel& source)
{
    if (target.h == 0 || source.h == 0)
        throw DegenerateOrbit("transition: trivial group at e = " + target.params.e.get_str() +
                              " or f = " + source.params.e.get_str());
    ChainMapScalars t = chain_map_scalars(target, source);
    if (!chain_map_commutes(target, source, t))
        throw std::logic_error("transition: levelwise map is not a chain map");
    std::vector<Integer> z = transport(target, source, source.generator);
    std::vector<Integer> check = target.fiber.delta1 * z;
    for (auto& v : check)
        if (sgn(mod(v, target.mats.modulus)) != 0)
            throw std::logic_error("transition: image of the kernel generator is not a cocycle");
    std::optional<unsigned long> order = class_order_exponent(target.snf0, z);
    if (!order || *order > target.h)
        throw std::logic_error("transition: image class has no finite order in H^1");
    TransitionResult out;
    out.h_source = source.h;
    out.h_target = target.h;
    out.image_exponent = target.h - *order;
    out.exact_valuation = valuation_mod(target.params.p, target.trunc.N, z[target.s - 1]);
    return out;
}

/// Convenience form: builds both levels with a common default truncation.
inline TransitionResult oracle_transition_map(const TruncationParams& target_params, const Integer& f,
                                              const Orbit& orbit)
{
    TruncationParams source_params(target_params.p, f, target_params.i);
    OrbitTruncation tf = default_truncation(source_params, orbit);
    OrbitTruncation te = default_truncation(target_params, orbit);
    if (te.A > tf.A)
        tf = te;
    te.N = std::max(te.N, tf.N);
    tf.N = te.N;
    OracleLevel target = make_oracle_level(target_params, te);
    OracleLevel source = make_oracle_level(source_params, tf);
    return oracle_transition_map(target, source);
}

} // namespace trcalc
