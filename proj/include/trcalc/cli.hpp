#pragma once

// Batch front end: job validation, per-orbit jobs, report assembly and
// serialization. Reports are deterministic: no timestamps, stable key order,
// orbit records sorted by (m, alpha).

#include "trcalc/oracle.hpp"
#include "trcalc/parallel.hpp"
#include "trcalc/prosystem.hpp"

#include <json.hpp>

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

namespace trcalc::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "trcalc 1.0.0";

enum ExitCode : int { kOk = 0, kValidation = 1, kMismatch = 2, kRefused = 3 };

inline const std::vector<std::string>& commands()
{
    static const std::vector<std::string> c{"syntomic", "kgroups", "transition", "ml-check", "tr", "verify"};
    return c;
}

struct JobSpec {
    std::string command;
    std::optional<unsigned long> p;
    std::optional<unsigned long> i;
    std::optional<unsigned long> i_max;
    std::optional<Integer> e;
    std::optional<Integer> e_max;
    std::vector<std::string> slots;
    std::optional<Integer> alpha_num_max;
    std::optional<unsigned long> alpha_pexp_max;
    std::optional<unsigned long> A;
    std::optional<unsigned long> N;
    std::string format = "text";
    std::string out;
};

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

struct Report {
    std::string command;
    json body;
    Table table;
    std::vector<std::string> summary;
    int exit_code = kOk;
};

// Upper limits keeping every request finite and desk-sized.
inline constexpr unsigned long kMaxOrbitWeight = 100000; // i * e
inline constexpr unsigned long kMaxLevel = 20000;        // e_max for tower commands

/// Splits "a,b,c" into slot names; names are [A-Za-z0-9_]+.
inline std::vector<std::string> parse_slots(const std::string& raw)
{
    std::vector<std::string> out;
    if (raw.empty())
        return out;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty())
            throw ValidationError("--slots: empty slot name");
        for (char c : item)
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_'))
                throw ValidationError("--slots: slot names use letters, digits and '_' only: '" + item + "'");
        out.push_back(item);
    }
    std::sort(out.begin(), out.end());
    if (std::adjacent_find(out.begin(), out.end()) != out.end())
        throw ValidationError("--slots: duplicate slot name");
    return out;
}

inline Integer parse_integer(const std::string& flag, const std::string& raw)
{
    Integer x;
    if (raw.empty() || raw.find_first_not_of("0123456789") != std::string::npos || x.set_str(raw, 10) != 0)
        throw ValidationError(flag + ": expected a nonnegative integer, got '" + raw + "'");
    return x;
}

namespace detail {

inline json integer_json(const Integer& x)
{
    if (x.fits_slong_p())
        return json(x.get_si());
    return json(x.get_str());
}

inline json alpha_json(const Prime& p, const MultiIndex& alpha)
{
    json out = json::object();
    for (const auto& [slot, x] : alpha.entries())
        out[slot] = x.to_string(p);
    return out;
}

inline std::string p_power(const Prime& p, unsigned long h) { return pow_ui(p.integer(), h).get_str(); }

inline json exponents_json(const std::vector<unsigned long>& xs)
{
    json out = json::array();
    for (auto x : xs)
        out.push_back(x);
    return out;
}

inline json divisors_json(const Prime& p, const std::vector<unsigned long>& exps)
{
    json out = json::array();
    for (auto x : exps)
        out.push_back(integer_json(pow_ui(p.integer(), x)));
    return out;
}

inline std::string join(const std::vector<std::string>& xs, const std::string& sep)
{
    std::string out;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        if (k)
            out += sep;
        out += xs[k];
    }
    return out;
}

inline std::string exps_string(const std::vector<unsigned long>& xs)
{
    std::vector<std::string> parts;
    for (auto x : xs)
        parts.push_back(std::to_string(x));
    return "(" + join(parts, " ") + ")";
}

/// Group W(k)/p^{h_1} + ... and its specialization Z/p^{h_1} + ... at k = F_p.
inline std::pair<std::string, std::string> group_strings(const Prime& p, const std::vector<unsigned long>& hs)
{
    std::vector<std::string> w, z;
    for (auto h : hs) {
        if (h == 0)
            continue;
        w.push_back(CyclicWittModule{h}.to_string(p));
        z.push_back("Z/" + p_power(p, h));
    }
    if (w.empty())
        return {"0", "0"};
    return {join(w, " + "), join(z, " + ")};
}

inline json metadata(const std::string& command)
{
    json m;
    m["version"] = kVersion;
    m["base_field"] = "k perfect of characteristic p, symbolic; orders are given at k = F_p";
    m["ring"] = "S_{e,T} = k[y_t^{1/p^oo}, x | t in T]/(y_t, x^e)";
    m["reduced"] = "the m = 0 column (the base S_T) is split off; H^0 of the full complex is Prism(S_T) = A_crys(S_T)";
    json ids = json::array();
    if (command == "kgroups")
        ids.push_back("K_{2i-1}(S_{e,T}, (x)) = H^1(Z_p(i)(S_{e,T})) and K_{2i-2}(S_{e,T}, (x)) = 0, via the motivic "
                      "filtration on TC and the Dundas-Goodwillie-McCarthy theorem");
    if (command == "tr" || command == "ml-check" || command == "transition")
        ids.push_back("TR(S_T; Z_p) = lim_e Omega K(S_{e,T}, (x)) (curves on K-theory)");
    if (command == "tr")
        ids.push_back("weight shift: TR_{2i} = lim_e K_{2i+1}(S_{e,T}, (x)) and TR_{2i-1} = lim^1_e K_{2i+1}(S_{e,T}, "
                      "(x)), read off the weight i+1 towers");
    if (command == "tr")
        ids.push_back("p-typical slice: the m = 1 orbit (interpretation flag, not part of the computation)");
    m["identifications"] = ids;
    return m;
}

struct Validated {
    Prime p;
    unsigned long i;
    AlphaBounds alpha;
};

inline Validated validate_common(const JobSpec& spec)
{
    if (std::find(commands().begin(), commands().end(), spec.command) == commands().end())
        throw ValidationError("unknown command '" + spec.command + "'");
    if (spec.format != "text" && spec.format != "json" && spec.format != "csv")
        throw ValidationError("--format must be text, json or csv");
    if (!spec.p)
        throw ValidationError("--p is required");
    if (!spec.i)
        throw ValidationError("--i is required");
    Prime p(*spec.p);
    if (spec.i_max && *spec.i_max < *spec.i)
        throw ValidationError("--i-max must be >= --i");
    if (spec.i_max && spec.command != "kgroups" && spec.command != "tr")
        throw ValidationError("--i-max applies to kgroups and tr only");
    if ((spec.A || spec.N) && spec.command != "syntomic" && spec.command != "kgroups" && spec.command != "verify")
        throw ValidationError("--A/--N apply to syntomic, kgroups and verify only");
    if (spec.e && sgn(*spec.e) <= 0)
        throw ValidationError("--e must be >= 1");
    if (!spec.slots.empty() && (!spec.alpha_num_max || !spec.alpha_pexp_max))
        throw ValidationError("--slots needs both --alpha-num-max and --alpha-pexp-max");
    if (spec.slots.empty() && (spec.alpha_num_max || spec.alpha_pexp_max))
        throw ValidationError("--alpha-num-max/--alpha-pexp-max need --slots");
    AlphaBounds bounds{spec.slots, spec.alpha_num_max, spec.alpha_pexp_max};
    if (spec.alpha_num_max && *spec.alpha_num_max > 10000)
        throw ValidationError("--alpha-num-max is limited to 10000");
    if (spec.alpha_pexp_max && *spec.alpha_pexp_max > 64)
        throw ValidationError("--alpha-pexp-max is limited to 64");
    return {p, *spec.i, bounds};
}

inline void require_e(const JobSpec& spec)
{
    if (!spec.e)
        throw ValidationError("--e is required for " + spec.command);
}

inline void require_orbit_range(const Integer& e, unsigned long i)
{
    if (Integer(i) * e > Integer(kMaxOrbitWeight))
        throw ValidationError("i * e exceeds " + std::to_string(kMaxOrbitWeight));
}

inline json parameters_json(const JobSpec& spec)
{
    json out;
    out["p"] = *spec.p;
    out["i"] = *spec.i;
    if (spec.i_max)
        out["i_max"] = *spec.i_max;
    if (spec.e)
        out["e"] = integer_json(*spec.e);
    if (spec.e_max)
        out["e_max"] = integer_json(*spec.e_max);
    json slots = json::array();
    for (const auto& s : spec.slots)
        slots.push_back(s);
    out["slots"] = slots;
    if (spec.alpha_num_max)
        out["alpha_num_max"] = integer_json(*spec.alpha_num_max);
    if (spec.alpha_pexp_max)
        out["alpha_pexp_max"] = *spec.alpha_pexp_max;
    if (spec.A)
        out["A"] = *spec.A;
    if (spec.N)
        out["N"] = *spec.N;
    return out;
}

inline Report start_report(const JobSpec& spec)
{
    Report r;
    r.command = spec.command;
    r.body["orbits"] = json::array();
    r.body["total_exponent"] = 0;
    r.body["command"] = spec.command;
    r.body["parameters"] = parameters_json(spec);
    r.body["metadata"] = metadata(spec.command);
    return r;
}

inline void finish_status(Report& r)
{
    r.body["status"] = r.exit_code == kOk ? "ok" : r.exit_code == kMismatch ? "mismatch" : "refused";
}

/// Oracle truncation honoring --A/--N overrides.
inline OrbitTruncation truncation_for(const JobSpec& spec, const TruncationParams& params, const Orbit& orbit)
{
    OrbitTruncation t = default_truncation(params, orbit);
    if (spec.A) {
        t.A = *spec.A;
        t.N = params.i * (t.A + 1) + 8;
    }
    if (spec.N)
        t.N = *spec.N;
    validate_truncation(params, t);
    return t;
}

struct OrbitCheck {
    SyntomicSummand summand;
    std::optional<OracleCohomology> oracle;
    std::optional<KernelCertificate> kernel;
    std::string failure;
    bool pass = false;
};

/// Closed form against the oracle on one orbit; kernel certificate when s >= 1.
inline OrbitCheck check_orbit(const JobSpec& spec, const TruncationParams& params, const Orbit& orbit,
                              bool with_kernel)
{
    OrbitCheck out{h1_syntomic_orbit(params, orbit), std::nullopt, std::nullopt, {}, false};
    OrbitTruncation t = truncation_for(spec, params, orbit);
    try {
        out.oracle = oracle_cohomology(params, t);
        if (with_kernel && out.summand.s > 0) {
            OracleLevel level = make_oracle_level(params, t);
            out.kernel = certify_kernel_generator(level, out.summand.generator_exponents);
        }
    } catch (const TruncationInstability& ex) {
        out.failure = ex.what();
        return out;
    } catch (const std::logic_error& ex) {
        if (dynamic_cast<const ValidationError*>(&ex))
            throw;
        out.failure = ex.what();
        return out;
    }
    const OracleCohomology& o = *out.oracle;
    bool cyclic = o.degree1.size() <= 1 && o.free1 == 0;
    out.pass = cyclic && o.degree1_exponent() == out.summand.module.h && o.degree_empty(0) && o.degree_empty(2);
    if (!out.pass)
        out.failure = "closed form and oracle disagree";
    if (out.kernel && !out.kernel->pass()) {
        out.pass = false;
        out.failure = "kernel generator certificate failed";
    }
    return out;
}

inline json oracle_json(const Prime& p, const OracleCohomology& o)
{
    json out;
    out["A"] = o.A;
    out["N"] = o.N;
    out["h"] = o.degree1_exponent();
    json d;
    d["degree0"] = divisors_json(p, o.degree0);
    d["degree1"] = divisors_json(p, o.degree1);
    d["degree2"] = divisors_json(p, o.degree2);
    out["divisors"] = d;
    json f;
    f["degree0"] = o.free0;
    f["degree1"] = o.free1;
    f["degree2"] = o.free2;
    out["free_ranks"] = f;
    out["delta0_hash"] = o.delta0_hash;
    out["delta1_hash"] = o.delta1_hash;
    return out;
}

inline json kernel_json(const KernelCertificate& k)
{
    json out;
    out["annihilated"] = k.annihilated;
    out["generates"] = k.generates;
    out["order_exponent"] = k.order_exponent ? json(*k.order_exponent) : json(nullptr);
    out["oracle_exponents"] = exponents_json(k.oracle_exponents);
    out["exponents_match"] = k.exponents_match;
    return out;
}

inline json orbit_check_json(const Prime& p, const OrbitCheck& c)
{
    json rec;
    rec["m"] = integer_json(c.summand.orbit.m);
    rec["alpha"] = alpha_json(p, c.summand.orbit.alpha);
    rec["s"] = c.summand.s;
    rec["h"] = c.summand.module.h;
    rec["group"] = c.summand.module.to_string(p);
    rec["order_at_Fp"] = p_power(p, c.summand.module.h);
    rec["generator_exponents"] = exponents_json(c.summand.generator_exponents);
    rec["oracle"] = c.oracle ? oracle_json(p, *c.oracle) : json(nullptr);
    if (c.kernel)
        rec["kernel_certificate"] = kernel_json(*c.kernel);
    rec["pass"] = c.pass;
    if (!c.pass)
        rec["failure"] = c.failure;
    return rec;
}

inline std::vector<std::string> base_row(const Prime& p, const Orbit& orbit, const std::string& s,
                                         const std::string& h, const std::string& oracle_h, bool pass)
{
    return {orbit.m.get_str(), to_string(p, orbit.alpha), s, h, oracle_h, pass ? "yes" : "NO"};
}

inline const std::vector<std::string> kBaseHeader{"m", "alpha", "s", "h", "oracle_h", "pass"};

// ---- syntomic ------------------------------------------------------------

inline Report run_syntomic(const JobSpec& spec)
{
    Validated v = validate_common(spec);
    require_e(spec);
    require_orbit_range(*spec.e, v.i);
    TruncationParams params(v.p, *spec.e, v.i);
    std::vector<SyntomicSummand> summands = enumerate_orbits(params, v.alpha);
    std::vector<OrbitCheck> checks = parallel_map(summands.size(), [&](std::size_t k) {
        return check_orbit(spec, params, summands[k].orbit, false);
    });

    Report r = start_report(spec);
    r.table.header = kBaseHeader;
    unsigned long total = 0;
    bool all_pass = true;
    std::vector<unsigned long> hs;
    for (const auto& c : checks) {
        r.body["orbits"].push_back(orbit_check_json(v.p, c));
        total += c.summand.module.h;
        hs.push_back(c.summand.module.h);
        all_pass = all_pass && c.pass;
        r.table.rows.push_back(base_row(v.p, c.summand.orbit, std::to_string(c.summand.s),
                                        std::to_string(c.summand.module.h),
                                        c.oracle ? std::to_string(c.oracle->degree1_exponent()) : "-", c.pass));
    }
    r.body["total_exponent"] = total;
    auto [witt, at_fp] = group_strings(v.p, hs);
    json groups;
    groups["H0_reduced"] = "0";
    groups["H0"] = h_other_degrees(params).full_h0;
    groups["H1"] = witt;
    groups["H1_at_Fp"] = at_fp;
    groups["H1_order_at_Fp"] = p_power(v.p, total);
    groups["H2"] = "0";
    groups["H_ge3"] = "0";
    r.body["groups"] = groups;
    r.body["certificates"] = json::array();
    r.exit_code = all_pass ? kOk : kMismatch;
    r.summary.push_back("H^1(Z_" + std::to_string(v.p.value()) + "(" + std::to_string(v.i) + ")(S_" +
                        spec.e->get_str() + ")) = " + witt);
    r.summary.push_back("total exponent " + std::to_string(total) + ", order " + p_power(v.p, total) +
                        " at k = F_" + std::to_string(v.p.value()));
    r.summary.push_back(std::string("oracle: ") + (all_pass ? "all orbits agree" : "MISMATCH"));
    finish_status(r);
    return r;
}

// ---- kgroups -------------------------------------------------------------

inline Report run_kgroups(const JobSpec& spec)
{
    Validated v = validate_common(spec);
    require_e(spec);
    unsigned long i_hi = spec.i_max.value_or(v.i);
    require_orbit_range(*spec.e, i_hi);

    struct Job {
        unsigned long weight;
        Orbit orbit;
    };
    std::vector<Job> jobs;
    for (unsigned long w = v.i; w <= i_hi; ++w)
        for (auto& s : enumerate_orbits(TruncationParams(v.p, *spec.e, w), v.alpha))
            jobs.push_back({w, s.orbit});
    std::vector<OrbitCheck> checks = parallel_map(jobs.size(), [&](std::size_t k) {
        return check_orbit(spec, TruncationParams(v.p, *spec.e, jobs[k].weight), jobs[k].orbit, false);
    });

    Report r = start_report(spec);
    r.table.header = kBaseHeader;
    r.table.header.push_back("degree");
    unsigned long total = 0;
    bool all_pass = true;
    json groups = json::array();
    for (unsigned long w = v.i; w <= i_hi; ++w) {
        std::vector<unsigned long> hs;
        unsigned long sum = 0;
        for (std::size_t k = 0; k < jobs.size(); ++k) {
            if (jobs[k].weight != w)
                continue;
            const OrbitCheck& c = checks[k];
            json rec = orbit_check_json(v.p, c);
            rec["degree"] = 2 * w - 1;
            r.body["orbits"].push_back(rec);
            hs.push_back(c.summand.module.h);
            sum += c.summand.module.h;
            all_pass = all_pass && c.pass;
            auto row = base_row(v.p, c.summand.orbit, std::to_string(c.summand.s), std::to_string(c.summand.module.h),
                                c.oracle ? std::to_string(c.oracle->degree1_exponent()) : "-", c.pass);
            row.push_back(std::to_string(2 * w - 1));
            r.table.rows.push_back(row);
        }
        total += sum;
        auto [witt, at_fp] = group_strings(v.p, hs);
        std::vector<unsigned long> sorted = hs;
        std::sort(sorted.rbegin(), sorted.rend());
        json odd;
        odd["degree"] = 2 * w - 1;
        odd["group"] = at_fp;
        odd["witt"] = witt;
        odd["elementary_divisors"] = divisors_json(v.p, sorted);
        odd["exponent"] = sum;
        odd["order_at_Fp"] = p_power(v.p, sum);
        groups.push_back(odd);
        json even;
        even["degree"] = 2 * w;
        even["group"] = "0";
        even["witt"] = "0";
        even["elementary_divisors"] = json::array();
        even["exponent"] = 0;
        even["order_at_Fp"] = "1";
        groups.push_back(even);
        std::string name = "K_" + std::to_string(2 * w - 1) + "(k[x]/x^" + spec.e->get_str() + ", (x))";
        r.summary.push_back(name + " = " + at_fp + "   [" + witt + "]");
    }
    r.body["total_exponent"] = total;
    r.body["groups"] = groups;
    r.body["certificates"] = json::array();
    r.exit_code = all_pass ? kOk : kMismatch;
    r.summary.push_back("even relative K-groups vanish in the listed range");
    r.summary.push_back(std::string("oracle: ") + (all_pass ? "all orbits agree" : "MISMATCH"));
    finish_status(r);
    return r;
}

// ---- verify --------------------------------------------------------------

inline Report run_verify(const JobSpec& spec)
{
    Validated v = validate_common(spec);
    require_e(spec);
    require_orbit_range(*spec.e, v.i);
    TruncationParams params(v.p, *spec.e, v.i);
    std::vector<Orbit> orbits = enumerate_candidate_orbits(params, v.alpha);
    for (const auto& o : orbits)
        truncation_for(spec, params, o); // surface bad --A/--N as validation errors up front
    std::vector<OrbitCheck> checks =
        parallel_map(orbits.size(), [&](std::size_t k) { return check_orbit(spec, params, orbits[k], true); });

    Report r = start_report(spec);
    r.table.header = kBaseHeader;
    unsigned long total = 0;
    std::size_t passed = 0;
    json certs = json::array();
    for (const auto& c : checks) {
        r.body["orbits"].push_back(orbit_check_json(v.p, c));
        total += c.summand.module.h;
        passed += c.pass;
        r.table.rows.push_back(base_row(v.p, c.summand.orbit, std::to_string(c.summand.s),
                                        std::to_string(c.summand.module.h),
                                        c.oracle ? std::to_string(c.oracle->degree1_exponent()) : "-", c.pass));
        json cert;
        cert["m"] = integer_json(c.summand.orbit.m);
        cert["alpha"] = alpha_json(v.p, c.summand.orbit.alpha);
        cert["check"] = "closed form = oracle in degree 1, degrees 0 and 2 empty, stable under A -> A+1" +
                        std::string(c.summand.s > 0 ? ", kernel generator certified" : "");
        cert["delta0_hash"] = c.oracle ? json(c.oracle->delta0_hash) : json(nullptr);
        cert["delta1_hash"] = c.oracle ? json(c.oracle->delta1_hash) : json(nullptr);
        cert["pass"] = c.pass;
        certs.push_back(cert);
    }
    r.body["total_exponent"] = total;
    r.body["certificates"] = certs;
    r.exit_code = passed == checks.size() ? kOk : kMismatch;
    r.summary.push_back(std::to_string(passed) + "/" + std::to_string(checks.size()) + " orbits verified");
    r.summary.push_back("H^k = 0 for k >= 2: " +
                        std::string(std::all_of(checks.begin(), checks.end(),
                                                [](const OrbitCheck& c) { return c.oracle && c.oracle->degree_empty(2); })
                                        ? "yes"
                                        : "NO"));
    finish_status(r);
    return r;
}

// ---- transition ----------------------------------------------------------

inline Report run_transition(const JobSpec& spec)
{
    Validated v = validate_common(spec);
    require_e(spec);
    if (!spec.e_max)
        throw ValidationError("--e-max is required for transition");
    require_coprime(v.p, *spec.e, "--e");
    if (!(*spec.e_max > *spec.e))
        throw ValidationError("--e-max must exceed --e");
    if (*spec.e_max > Integer(kMaxLevel))
        throw ValidationError("--e-max is limited to " + std::to_string(kMaxLevel));
    require_orbit_range(*spec.e, v.i);
    TruncationParams target(v.p, *spec.e, v.i);
    std::vector<Integer> sources;
    for (Integer f = *spec.e + 1; f <= *spec.e_max; ++f)
        if (!divides(v.p.integer(), f))
            sources.push_back(f);
    std::vector<SyntomicSummand> summands = enumerate_orbits(target, v.alpha);

    struct Row {
        Integer f;
        unsigned long h_f = 0;
        ScaledMapDatum closed;
        unsigned long closed_image = 0;
        std::optional<TransitionResult> oracle;
        bool pass = false;
        std::string failure;
    };
    auto per_orbit = parallel_map(summands.size(), [&](std::size_t k) {
        const Orbit& orbit = summands[k].orbit;
        std::vector<Row> rows;
        unsigned long A_max = default_truncation(target, orbit).A;
        for (const auto& f : sources)
            A_max = std::max(A_max, default_truncation(TruncationParams(v.p, f, v.i), orbit).A);
        unsigned long N = v.i * (A_max + 1) + 8;
        OrbitTruncation te = default_truncation(target, orbit);
        te.N = N;
        std::optional<OracleLevel> level_e;
        for (const auto& f : sources) {
            Row row;
            row.f = f;
            TruncationParams src(v.p, f, v.i);
            row.h_f = h1_syntomic_orbit(src, orbit).module.h;
            row.closed = tr_valuation(target, f, orbit);
            try {
                row.closed_image = image_exponent(row.h_f, summands[k].module.h, row.closed.valuation);
            } catch (const ValidationError& ex) {
                row.failure = ex.what();
                rows.push_back(row);
                continue;
            }
            if (row.h_f == 0) {
                row.pass = true;
                rows.push_back(row);
                continue;
            }
            try {
                if (!level_e)
                    level_e = make_oracle_level(target, te);
                OrbitTruncation tf = default_truncation(src, orbit);
                tf.N = N;
                OracleLevel level_f = make_oracle_level(src, tf);
                row.oracle = oracle_transition_map(*level_e, level_f);
                row.pass = row.oracle->exact_valuation == row.closed.valuation &&
                           row.oracle->image_exponent == row.closed_image;
                if (!row.pass)
                    row.failure = "closed form and oracle disagree";
            } catch (const std::logic_error& ex) {
                if (dynamic_cast<const ValidationError*>(&ex))
                    throw;
                row.failure = ex.what();
            }
            rows.push_back(row);
        }
        return rows;
    });

    Report r = start_report(spec);
    r.table.header = kBaseHeader;
    for (const char* c : {"f", "h_f", "valuation", "oracle_valuation", "image", "oracle_image"})
        r.table.header.push_back(c);
    unsigned long total = 0;
    bool all_pass = true;
    for (std::size_t k = 0; k < summands.size(); ++k) {
        const SyntomicSummand& s = summands[k];
        json rec;
        rec["m"] = integer_json(s.orbit.m);
        rec["alpha"] = alpha_json(v.p, s.orbit.alpha);
        rec["s"] = s.s;
        rec["h"] = s.module.h;
        rec["group"] = s.module.to_string(v.p);
        json trs = json::array();
        bool orbit_pass = true;
        for (const Row& row : per_orbit[k]) {
            json t;
            t["f"] = integer_json(row.f);
            t["h_f"] = row.h_f;
            t["valuation"] = row.closed.valuation;
            t["image_exponent"] = row.closed_image;
            if (row.oracle) {
                json o;
                o["exact_valuation"] = row.oracle->exact_valuation;
                o["image_exponent"] = row.oracle->image_exponent;
                t["oracle"] = o;
            } else {
                t["oracle"] = nullptr;
            }
            t["degenerate"] = row.h_f == 0;
            t["pass"] = row.pass;
            if (!row.pass)
                t["failure"] = row.failure;
            trs.push_back(t);
            orbit_pass = orbit_pass && row.pass;
            auto cells = base_row(v.p, s.orbit, std::to_string(s.s), std::to_string(s.module.h), "-", row.pass);
            cells.push_back(row.f.get_str());
            cells.push_back(std::to_string(row.h_f));
            cells.push_back(std::to_string(row.closed.valuation));
            cells.push_back(row.oracle ? std::to_string(row.oracle->exact_valuation) : "-");
            cells.push_back(std::to_string(row.closed_image));
            cells.push_back(row.oracle ? std::to_string(row.oracle->image_exponent) : "-");
            r.table.rows.push_back(cells);
        }
        rec["transitions"] = trs;
        rec["pass"] = orbit_pass;
        r.body["orbits"].push_back(rec);
        total += s.module.h;
        all_pass = all_pass && orbit_pass;
    }
    r.body["total_exponent"] = total;
    r.body["certificates"] = json::array();
    r.exit_code = all_pass ? kOk : kMismatch;
    r.summary.push_back("transitions tr_{f," + spec.e->get_str() + "} for f in I_" + std::to_string(v.p.value()) +
                        " up to " + spec.e_max->get_str());
    r.summary.push_back(std::string("oracle: ") + (all_pass ? "all transitions agree" : "MISMATCH"));
    finish_status(r);
    return r;
}

// ---- ml-check ------------------------------------------------------------

inline Report run_ml_check(const JobSpec& spec)
{
    Validated v = validate_common(spec);
    if (!spec.e_max)
        throw ValidationError("--e-max is required for ml-check");
    Integer e_lo = spec.e.value_or(Integer(2));
    if (*spec.e_max < e_lo)
        throw ValidationError("--e-max must be >= --e");
    if (*spec.e_max > Integer(kMaxLevel))
        throw ValidationError("--e-max is limited to " + std::to_string(kMaxLevel));
    require_orbit_range(*spec.e_max, v.i);
    std::vector<Integer> levels = levels_coprime_to(v.p, e_lo, *spec.e_max);
    if (levels.empty())
        throw ValidationError("no level coprime to p in [e, e_max]");
    TruncationParams top(v.p, *spec.e_max, v.i);
    std::vector<Orbit> orbits = enumerate_candidate_orbits(top, v.alpha);

    struct Result {
        Tower tower;
        std::optional<StabilizedImages> images;
        std::optional<MittagLefflerViolation> violation;
    };
    auto results = parallel_map(orbits.size(), [&](std::size_t k) {
        Result out{build_tower(v.p, v.i, orbits[k], levels), std::nullopt, std::nullopt};
        try {
            out.images = stabilized_images(out.tower, *spec.e_max);
        } catch (const MittagLefflerViolation& ex) {
            out.violation = ex;
        }
        return out;
    });

    Report r = start_report(spec);
    r.table.header = kBaseHeader;
    for (const char* c : {"e", "ml_bound", "observed", "image", "lim1_zero"})
        r.table.header.push_back(c);
    unsigned long total = 0;
    bool all_pass = true;
    std::size_t towers = 0;
    for (std::size_t k = 0; k < orbits.size(); ++k) {
        const Result& res = results[k];
        bool nontrivial = std::any_of(res.tower.groups.begin(), res.tower.groups.end(),
                                      [](const CyclicWittModule& g) { return !g.trivial(); });
        if (!nontrivial)
            continue;
        ++towers;
        const Orbit& o = orbits[k];
        unsigned long s0 = s_function(TruncationParams(v.p, levels.front(), v.i), o.m, o.alpha);
        json rec;
        rec["m"] = integer_json(o.m);
        rec["alpha"] = alpha_json(v.p, o.alpha);
        rec["s"] = s0;
        rec["h"] = res.tower.groups.front().h;
        bool pass = res.images && res.images->lim1_zero;
        json lv = json::array();
        if (res.images) {
            for (const auto& l : res.images->levels) {
                json x;
                x["e"] = integer_json(l.e);
                x["h"] = l.h;
                x["image_exponent"] = l.image_exponent;
                x["ml_bound"] = integer_json(*l.ml_bound);
                x["observed_index"] = integer_json(l.observed_index);
                x["scan_end"] = integer_json(l.scan_end);
                lv.push_back(x);
                auto cells = base_row(v.p, o, std::to_string(s0), std::to_string(res.tower.groups.front().h), "-", pass);
                cells.push_back(l.e.get_str());
                cells.push_back(l.ml_bound->get_str());
                cells.push_back(l.observed_index.get_str());
                cells.push_back(std::to_string(l.image_exponent));
                cells.push_back(res.images->lim1_zero ? "yes" : "NO");
                r.table.rows.push_back(cells);
            }
            rec["ml_index"] = integer_json(res.images->ml_index);
            rec["lim1_zero"] = res.images->lim1_zero;
        } else {
            json w;
            w["f"] = res.violation->f;
            w["f_prime"] = res.violation->f_prime;
            w["message"] = res.violation->what();
            rec["ml_violation"] = w;
            auto cells = base_row(v.p, o, std::to_string(s0), std::to_string(res.tower.groups.front().h), "-", false);
            for (int c = 0; c < 5; ++c)
                cells.push_back("-");
            r.table.rows.push_back(cells);
        }
        rec["levels"] = lv;
        rec["pass"] = pass;
        r.body["orbits"].push_back(rec);
        total += res.tower.groups.front().h;
        all_pass = all_pass && pass;
    }
    r.body["total_exponent"] = total;
    json cert;
    cert["statement"] = "images of tr_{f,e} are constant for f >= ml_bound(e, m); restricted transitions surjective";
    cert["towers"] = towers;
    cert["certified"] = all_pass;
    r.body["certificates"] = json::array({cert});
    r.exit_code = all_pass ? kOk : kMismatch;
    r.summary.push_back(std::to_string(towers) + " nontrivial towers over e in I_" + std::to_string(v.p.value()) +
                        " within [" + e_lo.get_str() + ", " + spec.e_max->get_str() + "]");
    r.summary.push_back(std::string("Mittag-Leffler at or before ml_bound, lim^1 = 0: ") +
                        (all_pass ? "CERTIFIED" : "VIOLATED"));
    finish_status(r);
    return r;
}

// ---- tr ------------------------------------------------------------------

inline Report run_tr(const JobSpec& spec)
{
    Validated v = validate_common(spec);
    if (!spec.e_max)
        throw ValidationError("--e-max (the probe level) is required for tr");
    Integer e_lo = spec.e.value_or(Integer(2));
    if (*spec.e_max < e_lo)
        throw ValidationError("--e-max must be >= --e");
    if (*spec.e_max > Integer(kMaxLevel))
        throw ValidationError("--e-max is limited to " + std::to_string(kMaxLevel));
    unsigned long i_hi = spec.i_max.value_or(v.i);
    require_orbit_range(*spec.e_max, i_hi + 1);
    if (levels_coprime_to(v.p, e_lo, *spec.e_max).empty())
        throw ValidationError("no level coprime to p in [e, e_max]");

    Report r = start_report(spec);
    r.table.header = kBaseHeader;
    for (const char* c : {"degree", "limit", "ml_index", "lim1_zero"})
        r.table.header.push_back(c);
    unsigned long total = 0;
    bool refused = false;
    bool odd_all = true;
    json certs = json::array();
    json groups = json::array();
    for (unsigned long i = v.i; i <= i_hi; ++i) {
        TRSpec ts;
        ts.p = v.p;
        ts.i = i;
        ts.alpha = v.alpha;
        ts.e_min = e_lo;
        ts.probe = *spec.e_max;
        std::vector<Orbit> cands = tr_candidate_orbits(ts);
        auto per = parallel_map(cands.size(), [&](std::size_t k) { return tr_orbit(ts, cands[k]); });
        TRResult res = assemble_tr(ts, std::move(per));
        std::vector<std::string> parts;
        std::size_t zp = 0;
        for (const auto& o : res.orbits) {
            const bool nonzero = !o.limit || o.limit->kind == LimitKind::ZpFull || o.limit->h > 0;
            if (!nonzero)
                continue;
            json rec;
            rec["m"] = integer_json(o.orbit.m);
            rec["alpha"] = alpha_json(v.p, o.orbit.alpha);
            unsigned long s_last =
                s_function(TruncationParams(v.p, o.images.levels.back().e, res.weight), o.orbit.m, o.orbit.alpha);
            rec["s"] = s_last;
            rec["degree"] = res.degree_even;
            rec["weight"] = res.weight;
            std::string kind = !o.limit ? "refused" : o.limit->kind == LimitKind::ZpFull ? "Zp" : "finite";
            unsigned long h = o.limit && o.limit->kind == LimitKind::Finite ? o.limit->h : 0;
            rec["h"] = h;
            rec["kind"] = kind;
            rec["limit"] = o.limit ? o.limit->to_string(v.p) : "refused";
            rec["ml_index"] = integer_json(o.images.ml_index);
            rec["lim1_zero"] = o.images.lim1_zero;
            if (o.limit) {
                rec["increases"] = o.limit->increases;
                rec["window"] = json::array({integer_json(o.limit->window_lo), integer_json(o.limit->window_hi)});
            } else {
                rec["refusal"] = o.refusal;
            }
            json orders = json::array();
            for (const auto& l : o.images.levels)
                orders.push_back(l.order_exponent());
            rec["stable_image_orders"] = orders;
            r.body["orbits"].push_back(rec);
            total += h;
            if (o.limit && o.limit->kind == LimitKind::ZpFull)
                ++zp;
            if (o.limit)
                parts.push_back(o.limit->to_string(v.p));
            auto cells = base_row(v.p, o.orbit, std::to_string(s_last), std::to_string(h), "-", o.limit.has_value());
            cells.push_back(std::to_string(res.degree_even));
            cells.push_back(o.limit ? o.limit->to_string(v.p) : "refused");
            cells.push_back(o.images.ml_index.get_str());
            cells.push_back(o.images.lim1_zero ? "yes" : "NO");
            r.table.rows.push_back(cells);
        }
        refused = refused || res.refusals > 0;
        odd_all = odd_all && res.odd_zero_certified;
        json g;
        g["degree"] = res.degree_even;
        g["weight"] = res.weight;
        g["summands"] = parts.size();
        g["zp_summands"] = zp;
        g["refused"] = res.refusals;
        g["group"] = parts.empty() && res.refusals == 0 ? "0" : join(parts, " x ");
        groups.push_back(g);
        json c;
        c["degree"] = static_cast<long>(res.degree_even) - 1;
        c["statement"] = "TR_" + std::to_string(static_cast<long>(res.degree_even) - 1) + " = lim^1 = 0";
        c["towers"] = res.orbits.size();
        c["probe"] = integer_json(*spec.e_max);
        c["certified"] = res.odd_zero_certified;
        certs.push_back(c);
        std::string label = "TR_" + std::to_string(res.degree_even);
        r.summary.push_back(label + " (weight " + std::to_string(res.weight) + "): " +
                            std::to_string(parts.size()) + " nonzero summands, " + std::to_string(zp) +
                            " of type W(k), " + std::to_string(res.refusals) + " refused");
    }
    r.body["total_exponent"] = total;
    r.body["groups"] = groups;
    r.body["certificates"] = certs;
    r.exit_code = !odd_all ? kMismatch : refused ? kRefused : kOk;
    r.summary.push_back(std::string("TR_odd = 0: ") + (odd_all ? "CERTIFIED" : "NOT CERTIFIED") + " (probe e ≤ " +
                        spec.e_max->get_str() + ")");
    finish_status(r);
    return r;
}

} // namespace detail

/// Runs one job. Validation problems throw ValidationError; verification
/// mismatches and refusals come back as the report's exit code.
inline Report run_command(const JobSpec& spec)
{
    if (spec.command == "syntomic")
        return detail::run_syntomic(spec);
    if (spec.command == "kgroups")
        return detail::run_kgroups(spec);
    if (spec.command == "verify")
        return detail::run_verify(spec);
    if (spec.command == "transition")
        return detail::run_transition(spec);
    if (spec.command == "ml-check")
        return detail::run_ml_check(spec);
    if (spec.command == "tr")
        return detail::run_tr(spec);
    throw ValidationError("unknown command '" + spec.command + "'");
}

namespace detail {

inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

/// Display width, counting UTF-8 continuation bytes as zero.
inline std::size_t width(const std::string& s)
{
    std::size_t w = 0;
    for (unsigned char c : s)
        if ((c & 0xC0) != 0x80)
            ++w;
    return w;
}

} // namespace detail

inline std::string emit_report(const Report& report, const std::string& format)
{
    if (format == "json")
        return report.body.dump(2) + "\n";
    if (format == "csv") {
        std::string out;
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t k = 0; k < cells.size(); ++k) {
                if (k)
                    out += ',';
                out += detail::csv_field(cells[k]);
            }
            out += '\n';
        };
        line(report.table.header);
        for (const auto& row : report.table.rows)
            line(row);
        return out;
    }
    if (format != "text")
        throw ValidationError("unknown format '" + format + "'");

    std::string out = "trcalc " + report.command;
    const json& params = report.body["parameters"];
    for (const auto& [k, val] : params.items()) {
        if (val.is_array() && val.empty())
            continue;
        out += " " + k + "=" + (val.is_string() ? val.get<std::string>() : val.dump());
    }
    out += "\n\n";
    const Table& t = report.table;
    std::vector<std::size_t> w(t.header.size(), 0);
    for (std::size_t c = 0; c < t.header.size(); ++c)
        w[c] = detail::width(t.header[c]);
    for (const auto& row : t.rows)
        for (std::size_t c = 0; c < row.size() && c < w.size(); ++c)
            w[c] = std::max(w[c], detail::width(row[c]));
    auto line = [&](const std::vector<std::string>& cells) {
        std::string l;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c)
                l += "  ";
            l += cells[c];
            if (c + 1 < cells.size())
                l += std::string(w[c] - detail::width(cells[c]), ' ');
        }
        out += l + "\n";
    };
    line(t.header);
    std::vector<std::string> rule;
    for (auto x : w)
        rule.push_back(std::string(x, '-'));
    line(rule);
    if (t.rows.empty())
        out += "(no orbits)\n";
    for (const auto& row : t.rows)
        line(row);
    out += "\n";
    for (const auto& s : report.summary)
        out += s + "\n";
    return out;
}

} // namespace trcalc::cli
