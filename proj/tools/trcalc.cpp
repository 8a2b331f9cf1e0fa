// trcalc: syntomic cohomology, relative K-groups and TR of truncated polynomial algebras.

#include "trcalc/trcalc.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

int main(int argc, char** argv)
{
    using namespace trcalc;
    CLI::App app{"Exact calculator for syntomic cohomology, relative K-groups and TR of k[x]/x^e"};
    app.set_version_flag("--version", cli::kVersion);

    cli::JobSpec spec;
    std::string e, e_max, slots, num_max;
    unsigned long p = 0, i = 0, i_max = 0, pexp_max = 0, A = 0, N = 0;

    app.add_option("command", spec.command, "syntomic | kgroups | transition | ml-check | tr | verify")
        ->required()
        ->check(CLI::IsMember(cli::commands()));
    auto* p_opt = app.add_option("--p", p, "prime");
    auto* i_opt = app.add_option("--i", i, "weight (TR degree index for tr)");
    auto* imax_opt = app.add_option("--i-max", i_max, "upper end of a weight range (kgroups, tr)");
    auto* e_opt = app.add_option("--e", e, "truncation level (lower end of the level range for towers)");
    auto* emax_opt = app.add_option("--e-max", e_max, "upper level / probe for transition, ml-check, tr");
    app.add_option("--slots", slots, "comma-separated y-variable slots, e.g. t1,t2");
    auto* num_opt = app.add_option("--alpha-num-max", num_max, "largest numerator in the alpha window");
    auto* pexp_opt = app.add_option("--alpha-pexp-max", pexp_max, "largest p-exponent of alpha denominators");
    auto* A_opt = app.add_option("--A", A, "oracle truncation depth (levels 0..A)");
    auto* N_opt = app.add_option("--N", N, "oracle precision: entries modulo p^N");
    app.add_option("--format", spec.format, "text | json | csv")->check(CLI::IsMember({"text", "json", "csv"}));
    app.add_option("--out", spec.out, "write the report here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& ex) {
        return app.exit(ex);
    } catch (const CLI::ParseError& ex) {
        app.exit(ex);
        return cli::kValidation;
    }

    try {
        if (*p_opt) spec.p = p;
        if (*i_opt) spec.i = i;
        if (*imax_opt) spec.i_max = i_max;
        if (*e_opt) spec.e = cli::parse_integer("--e", e);
        if (*emax_opt) spec.e_max = cli::parse_integer("--e-max", e_max);
        spec.slots = cli::parse_slots(slots);
        if (*num_opt) spec.alpha_num_max = cli::parse_integer("--alpha-num-max", num_max);
        if (*pexp_opt) spec.alpha_pexp_max = pexp_max;
        if (*A_opt) spec.A = A;
        if (*N_opt) spec.N = N;

        cli::Report report = cli::run_command(spec);
        std::string text = cli::emit_report(report, spec.format);
        if (spec.out.empty()) {
            std::cout << text;
        } else {
            std::ofstream f(spec.out, std::ios::binary);
            if (!f)
                throw ValidationError("cannot open --out file '" + spec.out + "'");
            f << text;
        }
        if (report.exit_code == cli::kRefused)
            std::cerr << "trcalc: classification refused for some orbits; extend --e-max\n";
        else if (report.exit_code == cli::kMismatch)
            std::cerr << "trcalc: verification failed\n";
        return report.exit_code;
    } catch (const ValidationError& ex) {
        std::cerr << "trcalc: " << ex.what() << "\n";
        return cli::kValidation;
    } catch (const std::exception& ex) {
        std::cerr << "trcalc: internal error: " << ex.what() << "\n";
        return cli::kMismatch;
    }
}
