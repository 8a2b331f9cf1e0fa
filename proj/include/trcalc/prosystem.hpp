#pragma once

// The pro-system {H^1(Z_p(i)(S_{e,T}))}_e over e coprime to p, orbit by orbit.
//
// For f >= e the map S_f -> S_e, x -> x sends the f-level kernel generator to
// unit * p^v times the e-level one, with
//   v = v_p(floor((M-1)/e)! / floor((M-1)/f)!) + ceil(M/e) - ceil(M/f)
//       + sum_{j=s_e}^{s_f-1} (i - ceil(p^j m/f) - |p^j alpha|),   M = p^{s_e-1} m.
// The sum starts at s_e: the level s_e - 1 coordinate of the f-generator
// carries the exponents of levels s_e .. s_f - 1 only.

#include "trcalc/syntomic.hpp"

#include <optional>
#include <string>
#include <vector>

namespace trcalc {

/// A map W(k)/p^{h_f} -> W(k)/p^{h_e} recorded by the valuation of its scalar.
/// to_trivial marks the zero map into the trivial group.
struct ScaledMapDatum {
    unsigned long valuation = 0;
    bool to_trivial = false;
    friend bool operator==(const ScaledMapDatum&, const ScaledMapDatum&) = default;
};

/// The image of a map Z/p^{h_f} -> Z/p^{h_e} given by unit * p^v is p^{min(v, h_e)} Z/p^{h_e}.
inline unsigned long image_exponent(unsigned long h_f, unsigned long h_e, unsigned long v)
{
    if (v + h_f < h_e)
        throw ValidationError("image_exponent: multiplication by p^" + std::to_string(v) + " is not defined from Z/p^" +
                              std::to_string(h_f) + " to Z/p^" + std::to_string(h_e));
    return std::min(v, h_e);
}

inline void require_coprime(const Prime& p, const Integer& x, const char* what)
{
    if (sgn(x) <= 0 || divides(p.integer(), x))
        throw ValidationError(std::string(what) + " = " + x.get_str() + " must be a positive integer coprime to p");
}

/// Transition valuations out of one level e of one orbit, for every f >= e.
/// Also reports, for each f, the largest f' >= f on which every input of the
/// formula (the ceilings ceil(p^j m/f), the floor floor((M-1)/f), h_f) is unchanged.
class TransitionScanner {
public:
    struct Eval {
        unsigned long s_f = 0;
        unsigned long h_f = 0;
        unsigned long valuation = 0;
    };

    TransitionScanner(const Prime& p, unsigned long i, const Integer& e, const Orbit& orbit)
        : p_(p), i_(i), e_(e), orbit_(orbit), params_e_(p, e, i)
    {
        require_coprime(p, e, "e");
        require_coprime(p, orbit.m, "m");
        s_e_ = s_function(params_e_, orbit.m, orbit.alpha);
        h_e_ = vp(p, brace(pow_ui(p.integer(), s_e_) * orbit.m, e));
        if (s_e_ > 0) {
            M_ = pow_ui(p.integer(), s_e_ - 1) * orbit.m;
            v_fact_e_ = legendre_vp_factorial(p, floor_div(M_ - 1, e));
            ceil_e_ = ceil_div(M_, e);
        }
    }

    unsigned long s_e() const { return s_e_; }
    unsigned long h_e() const { return h_e_; }

    Eval at(const Integer& f)
    {
        check_f(f);
        Eval out;
        out.s_f = s_at(f);
        out.h_f = vp(p_, brace(pow_ui(p_.integer(), out.s_f) * orbit_.m, f));
        if (s_e_ == 0)
            return out;
        Integer v = v_fact_e_ - legendre_vp_factorial(p_, floor_div(M_ - 1, f)) + ceil_e_ - ceil_div(M_, f);
        for (unsigned long j = s_e_; j < out.s_f; ++j)
            v += Integer(i_) - ceil_div(pm(j), f) - alpha_floor(j);
        if (sgn(v) < 0)
            throw std::logic_error("transition valuation came out negative");
        out.valuation = to_ulong(v);
        return out;
    }

    /// Largest f' >= f with identical formula inputs on [f, f']; nullopt if unbounded.
    std::optional<Integer> range_end(const Integer& f)
    {
        check_range(f);
        std::optional<Integer> end;
        auto clip = [&](const Integer& x) {
            if (!end || x < *end)
                end = x;
        };
        if (f <= orbit_.m)
            clip(f); // h_f depends on whether f divides m
        unsigned long s_f = s_at(f);
        for (unsigned long j = 0; j <= s_f; ++j) {
            const Integer& X = pm(j);
            Integer q = ceil_div(X, f);
            if (q >= 2)
                clip(floor_div(X - 1, q - 1));
        }
        if (s_e_ > 0) {
            Integer r = floor_div(M_ - 1, f);
            if (sgn(r) > 0)
                clip(floor_div(M_ - 1, r));
        }
        return end;
    }

private:
    void check_f(const Integer& f) const
    {
        require_coprime(p_, f, "f");
        if (f < e_)
            throw ValidationError("transition: need f >= e");
    }
    void check_range(const Integer& f) const
    {
        if (f < e_)
            throw ValidationError("transition: need f >= e");
    }

    const Integer& pm(unsigned long j)
    {
        while (pm_.size() <= j)
            pm_.push_back(pm_.empty() ? orbit_.m : pm_.back() * p_.integer());
        return pm_[j];
    }

    const Integer& alpha_floor(unsigned long j)
    {
        while (alpha_floor_.size() <= j)
            alpha_floor_.push_back(floor_l1(p_, scale_by_p(p_, orbit_.alpha, alpha_floor_.size())));
        return alpha_floor_[j];
    }

    unsigned long s_at(const Integer& f)
    {
        for (unsigned long s = 0;; ++s)
            if (ceil_div(pm(s), f) + alpha_floor(s) > Integer(i_))
                return s;
    }

    Prime p_;
    unsigned long i_;
    Integer e_;
    Orbit orbit_;
    TruncationParams params_e_;
    unsigned long s_e_ = 0;
    unsigned long h_e_ = 0;
    Integer M_, v_fact_e_, ceil_e_;
    std::vector<Integer> pm_;
    std::vector<Integer> alpha_floor_;
};

/// Valuation of tr_{fe} on the orbit; the zero map into the trivial group when s_e = 0.
inline ScaledMapDatum tr_valuation(const TruncationParams& params, const Integer& f, const Orbit& orbit)
{
    TransitionScanner scan(params.p, params.i, params.e, orbit);
    if (scan.s_e() == 0) {
        require_coprime(params.p, f, "f");
        if (f < params.e)
            throw ValidationError("transition: need f >= e");
        return {0, true};
    }
    return {scan.at(f).valuation, false};
}

/// Smallest f in I_p with f >= e, ceil(p^{2s} m/f) = 1 and floor((p^s m - 1)/f) = 0,
/// s = s(p, i, e, m, 0).
inline Integer ml_bound(const TruncationParams& params, const Integer& m)
{
    require_coprime(params.p, params.e, "e");
    require_coprime(params.p, m, "m");
    unsigned long s = s_function(params, m, MultiIndex{});
    Integer f = params.e;
    Integer a = pow_ui(params.p.integer(), 2 * s) * m; // ceil(a/f) = 1 iff f >= a
    Integer b = pow_ui(params.p.integer(), s) * m;     // floor((b-1)/f) = 0 iff f >= b
    if (f < a)
        f = a;
    if (f < b)
        f = b;
    while (divides(params.p.integer(), f))
        ++f;
    return f;
}

/// Cyclic groups over ascending levels with adjacent transitions
/// (transitions[k] maps levels[k+1] to levels[k]).
struct Tower {
    Prime p{2};
    unsigned long i = 0;
    std::optional<Orbit> orbit; // absent for hand-built towers
    std::vector<Integer> levels;
    std::vector<CyclicWittModule> groups;
    std::vector<ScaledMapDatum> transitions;
};

inline void validate_tower(const Tower& t)
{
    if (t.levels.empty())
        throw ValidationError("tower: no levels");
    if (t.groups.size() != t.levels.size() || t.transitions.size() + 1 != t.levels.size())
        throw ValidationError("tower: levels, groups and transitions disagree in length");
    for (std::size_t k = 0; k < t.levels.size(); ++k) {
        require_coprime(t.p, t.levels[k], "tower level");
        if (k > 0 && !(t.levels[k - 1] < t.levels[k]))
            throw ValidationError("tower: levels must be strictly ascending");
    }
    for (std::size_t k = 0; k + 1 < t.levels.size(); ++k) {
        const auto& tr = t.transitions[k];
        if (tr.to_trivial) {
            if (!t.groups[k].trivial())
                throw ValidationError("tower: zero map into a nontrivial group marked as trivial target");
            continue;
        }
        image_exponent(t.groups[k + 1].h, t.groups[k].h, tr.valuation);
    }
}

/// Tower of one orbit over the given levels, from the closed forms.
inline Tower build_tower(const Prime& p, unsigned long i, const Orbit& orbit, const std::vector<Integer>& levels)
{
    Tower t;
    t.p = p;
    t.i = i;
    t.orbit = orbit;
    t.levels = levels;
    for (const auto& e : levels) {
        require_coprime(p, e, "tower level");
        t.groups.push_back(h1_syntomic_orbit(TruncationParams(p, e, i), orbit).module);
    }
    for (std::size_t k = 0; k + 1 < levels.size(); ++k)
        t.transitions.push_back(tr_valuation(TruncationParams(p, levels[k], i), levels[k + 1], orbit));
    validate_tower(t);
    return t;
}

/// Levels in I_p within [lo, hi].
inline std::vector<Integer> levels_coprime_to(const Prime& p, const Integer& lo, const Integer& hi)
{
    std::vector<Integer> out;
    for (Integer e = lo; e <= hi; ++e)
        if (!divides(p.integer(), e))
            out.push_back(e);
    return out;
}

struct LevelImage {
    Integer e;
    unsigned long h = 0;
    /// Stable image of tr_{fe} is p^{image_exponent} W(k)/p^h.
    unsigned long image_exponent = 0;
    /// Proven stabilization level (closed-form towers only).
    std::optional<Integer> ml_bound;
    /// First f from which the image is constant through the end of the scan.
    Integer observed_index;
    /// Last f examined.
    Integer scan_end;
    /// Number of constant ranges visited.
    std::size_t ranges = 0;

    unsigned long order_exponent() const { return h - image_exponent; }
};

struct StabilizedImages {
    Prime p{2};
    std::vector<LevelImage> levels;
    /// Largest observed stabilization index over levels whose images move; the first level otherwise.
    Integer ml_index;
    /// Restricted transitions between stabilized images are all surjective.
    bool lim1_zero = false;
};

struct ScanOptions {
    /// Closed-form towers are scanned up to max(probe, window_factor * ml_bound).
    unsigned long window_factor = 0; // 0 means p
};

namespace detail {

inline LevelImage scan_orbit_level(const Prime& p, unsigned long i, const Integer& e, const Orbit& orbit,
                                   const Integer& probe, const ScanOptions& opt)
{
    TransitionScanner scan(p, i, e, orbit);
    LevelImage out;
    out.e = e;
    out.h = scan.h_e();
    Integer f0 = ml_bound(TruncationParams(p, e, i), orbit.m);
    out.ml_bound = f0;
    unsigned long factor = opt.window_factor ? opt.window_factor : p.value();
    Integer end = f0 * factor;
    if (end < probe)
        end = probe;
    out.scan_end = end;
    if (out.h == 0) {
        out.observed_index = e;
        out.ranges = 1;
        return out;
    }

    struct Run {
        Integer start;
        unsigned long image;
    };
    std::vector<Run> runs;
    Integer f = e;
    while (f <= end) {
        std::optional<Integer> stop = scan.range_end(f);
        Integer last = (!stop || *stop > end) ? end : *stop;
        Integer rep = f;
        while (rep <= last && divides(p.integer(), rep))
            ++rep;
        if (rep <= last) {
            TransitionScanner::Eval ev = scan.at(rep);
            unsigned long img = image_exponent(ev.h_f, out.h, ev.valuation);
            if (runs.empty() || runs.back().image != img)
                runs.push_back({rep, img});
            ++out.ranges;
        }
        f = last + 1;
    }
    out.image_exponent = runs.back().image;
    out.observed_index = runs.back().start;
    if (out.observed_index > f0) {
        Integer before = runs[runs.size() - 2].start;
        throw MittagLefflerViolation("images of tr_{f," + e.get_str() + "} on m = " + orbit.m.get_str() +
                                         " still change past the bound f0 = " + f0.get_str(),
                                     before.get_str(), out.observed_index.get_str());
    }
    return out;
}

inline LevelImage scan_hand_built_level(const Tower& t, std::size_t k)
{
    LevelImage out;
    out.e = t.levels[k];
    out.h = t.groups[k].h;
    out.scan_end = t.levels.back();
    unsigned long acc = 0;
    bool zero = false;
    out.observed_index = t.levels[k];
    unsigned long current = 0;
    for (std::size_t f = k + 1; f < t.levels.size(); ++f) {
        const auto& tr = t.transitions[f - 1];
        if (tr.to_trivial)
            zero = true;
        acc += tr.valuation;
        unsigned long img = zero ? out.h : std::min(acc, out.h);
        if (img != current) {
            current = img;
            out.observed_index = t.levels[f];
        }
        ++out.ranges;
    }
    out.image_exponent = current;
    return out;
}

} // namespace detail

/// Stable images per level, with the Mittag-Leffler check against ml_bound
/// (closed-form towers) and the surjectivity of restricted transitions.
inline StabilizedImages stabilized_images(const Tower& t, const Integer& probe, const ScanOptions& opt = {})
{
    validate_tower(t);
    StabilizedImages out;
    out.p = t.p;
    for (std::size_t k = 0; k < t.levels.size(); ++k) {
        if (t.orbit)
            out.levels.push_back(detail::scan_orbit_level(t.p, t.i, t.levels[k], *t.orbit, probe, opt));
        else
            out.levels.push_back(detail::scan_hand_built_level(t, k));
    }
    // Levels whose images never move do not push the index past the first level.
    out.ml_index = out.levels.front().e;
    for (const auto& l : out.levels)
        if (l.observed_index > l.e && l.observed_index > out.ml_index)
            out.ml_index = l.observed_index;

    // lim^1 = 0: tr_{e'e} must carry the stable image at e' onto the one at e.
    out.lim1_zero = true;
    for (std::size_t k = 0; k + 1 < t.levels.size(); ++k) {
        const LevelImage& lo = out.levels[k];
        const LevelImage& hi = out.levels[k + 1];
        const auto& tr = t.transitions[k];
        unsigned long img = tr.to_trivial ? lo.h : std::min(hi.image_exponent + tr.valuation, lo.h);
        if (img != lo.image_exponent)
            out.lim1_zero = false;
    }
    return out;
}

enum class LimitKind { Finite, ZpFull };

struct ProCyclicLimit {
    LimitKind kind = LimitKind::Finite;
    /// Exponent of the finite limit W(k)/p^h (Finite only).
    unsigned long h = 0;
    Integer ml_index;
    /// Strict increases of the stable image orders over the probe.
    unsigned long increases = 0;
    /// Levels over which the evidence was read.
    Integer window_lo, window_hi;
    bool lim1_zero = true;

    std::string to_string(const Prime& p) const
    {
        if (kind == LimitKind::ZpFull)
            return "W(k)";
        return CyclicWittModule{h}.to_string(p);
    }
};

struct ClassifyOptions {
    unsigned long growth_threshold = 8;
};

/// Inverse limit of the stable images. Finite(h) when the orders are all zero
/// or constant over the trailing window [e_last/p, e_last]; ZpFull when they
/// increase at least growth_threshold times; refused otherwise.
inline ProCyclicLimit limit_classify(const StabilizedImages& images, const ClassifyOptions& opt = {})
{
    if (images.levels.empty())
        throw ValidationError("limit_classify: empty tower");
    if (!images.lim1_zero)
        throw std::logic_error("limit_classify: restricted transitions are not surjective");
    ProCyclicLimit out;
    out.ml_index = images.ml_index;
    out.lim1_zero = images.lim1_zero;
    const auto& L = images.levels;
    for (std::size_t k = 0; k + 1 < L.size(); ++k) {
        if (L[k + 1].order_exponent() < L[k].order_exponent())
            throw std::logic_error("limit_classify: stable image orders decrease along a surjective system");
        if (L[k + 1].order_exponent() > L[k].order_exponent())
            ++out.increases;
    }
    out.window_hi = L.back().e;
    out.window_lo = L.front().e;
    bool all_zero = true;
    for (const auto& l : L)
        all_zero = all_zero && l.order_exponent() == 0;
    if (all_zero) {
        out.h = 0;
        return out;
    }

    Integer lo = floor_div(L.back().e, images.p.integer());
    std::size_t in_window = 0;
    bool constant = true;
    for (const auto& l : L) {
        if (l.e < lo)
            continue;
        if (in_window == 0)
            out.window_lo = l.e;
        ++in_window;
        constant = constant && l.order_exponent() == L.back().order_exponent();
    }
    if (in_window >= 2 && constant) {
        out.h = L.back().order_exponent();
        return out;
    }
    out.window_lo = L.front().e;
    if (out.increases >= opt.growth_threshold) {
        out.kind = LimitKind::ZpFull;
        return out;
    }
    throw ClassificationRefused("stable image orders still grow at e = " + L.back().e.get_str() + " after " +
                                std::to_string(out.increases) + " increases (threshold " +
                                std::to_string(opt.growth_threshold) + ")");
}

/// TR_{2i} from the weight-(i+1) towers, TR_{2i-1} = lim^1 of the same towers.
struct TRSpec {
    Prime p{2};
    unsigned long i = 0;
    AlphaBounds alpha;
    Integer e_min{2};
    Integer probe{30};
    ClassifyOptions classify;
    ScanOptions scan;
};

struct TROrbitResult {
    Orbit orbit;
    StabilizedImages images;
    std::optional<ProCyclicLimit> limit;
    std::string refusal;
};

struct TRResult {
    unsigned long degree_even = 0;
    unsigned long weight = 0;
    Integer probe;
    /// Orbits whose tower is nontrivial somewhere on the probe, sorted by (m, alpha).
    std::vector<TROrbitResult> orbits;
    bool odd_zero_certified = false;
    std::size_t refusals = 0;

    /// Orbits with a nonzero (or refused) limit.
    std::vector<const TROrbitResult*> even_summands() const
    {
        std::vector<const TROrbitResult*> out;
        for (const auto& o : orbits)
            if (!o.limit || o.limit->kind == LimitKind::ZpFull || o.limit->h > 0)
                out.push_back(&o);
        return out;
    }
};

/// The candidate orbits of the TR computation: m <= (i+1) * probe with p not
/// dividing m, alpha inside the window.
inline std::vector<Orbit> tr_candidate_orbits(const TRSpec& spec)
{
    std::vector<MultiIndex> alphas = enumerate_alphas(spec.p, spec.alpha);
    std::vector<Orbit> out;
    Integer m_max = Integer(spec.i + 1) * spec.probe;
    for (Integer m = 1; m <= m_max; ++m) {
        if (divides(spec.p.integer(), m))
            continue;
        for (const auto& a : alphas)
            out.emplace_back(spec.p, m, a);
    }
    return out;
}

/// One orbit of the TR computation; nullopt when every group on the probe is trivial.
inline std::optional<TROrbitResult> tr_orbit(const TRSpec& spec, const Orbit& orbit)
{
    const unsigned long weight = spec.i + 1;
    std::vector<Integer> levels = levels_coprime_to(spec.p, spec.e_min, spec.probe);
    if (levels.empty())
        throw ValidationError("tr: no level coprime to p in [e_min, probe]");
    Tower t = build_tower(spec.p, weight, orbit, levels);
    bool nontrivial = false;
    for (const auto& g : t.groups)
        nontrivial = nontrivial || !g.trivial();
    if (!nontrivial)
        return std::nullopt;
    TROrbitResult r{orbit, stabilized_images(t, spec.probe, spec.scan), std::nullopt, {}};
    try {
        r.limit = limit_classify(r.images, spec.classify);
    } catch (const ClassificationRefused& ex) {
        r.refusal = ex.what();
    }
    return r;
}

inline TRResult assemble_tr(const TRSpec& spec, std::vector<std::optional<TROrbitResult>> per_orbit)
{
    TRResult out;
    out.degree_even = 2 * spec.i;
    out.weight = spec.i + 1;
    out.probe = spec.probe;
    out.odd_zero_certified = true;
    for (auto& r : per_orbit) {
        if (!r)
            continue;
        if (!r->images.lim1_zero)
            out.odd_zero_certified = false;
        if (!r->limit)
            ++out.refusals;
        out.orbits.push_back(std::move(*r));
    }
    return out;
}

inline TRResult tr_groups(const TRSpec& spec)
{
    std::vector<std::optional<TROrbitResult>> per_orbit;
    for (const auto& o : tr_candidate_orbits(spec))
        per_orbit.push_back(tr_orbit(spec, o));
    return assemble_tr(spec, std::move(per_orbit));
}

} // namespace trcalc
