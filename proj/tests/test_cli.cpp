#include "support.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <sys/wait.h>

using namespace trcalc;
using namespace trcalc::cli;

namespace {

JobSpec job(std::string command, unsigned long p, unsigned long i, std::optional<long> e = std::nullopt,
            std::optional<long> e_max = std::nullopt)
{
    JobSpec s;
    s.command = std::move(command);
    s.p = p;
    s.i = i;
    if (e)
        s.e = Integer(*e);
    if (e_max)
        s.e_max = Integer(*e_max);
    return s;
}

struct Run {
    int code;
    std::string out;
};

Run run_binary(const std::string& args, const std::string& env = "")
{
    std::string cmd = env + " " + std::string(TRCALC_BINARY) + " " + args + " 2>/dev/null";
    FILE* f = popen(cmd.c_str(), "r");
    std::string out;
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), f)) > 0)
        out.append(buf.data(), n);
    int status = pclose(f);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

} // namespace

TEST(Cli, SyntomicExample)
{
    Report r = run_command(job("syntomic", 3, 1, 2));
    EXPECT_EQ(r.exit_code, kOk);
    ASSERT_EQ(r.body["orbits"].size(), 1u);
    EXPECT_EQ(r.body["orbits"][0]["m"], 1);
    EXPECT_EQ(r.body["orbits"][0]["h"], 1);
    EXPECT_EQ(r.body["orbits"][0]["group"], "W(k)/3^1");
    EXPECT_EQ(r.body["total_exponent"], 1);
    EXPECT_EQ(r.body["status"], "ok");
}

TEST(Cli, JsonKeyOrder)
{
    Report r = run_command(job("syntomic", 3, 1, 2));
    std::vector<std::string> keys;
    for (const auto& [k, v] : r.body.items())
        keys.push_back(k);
    ASSERT_GE(keys.size(), 3u);
    EXPECT_EQ(keys[0], "orbits");
    EXPECT_EQ(keys[1], "total_exponent");
    EXPECT_EQ(keys[2], "command");
}

TEST(Cli, EmptyOrbitListJson)
{
    Report r = run_command(job("syntomic", 3, 0, 2));
    std::string s = emit_report(r, "json");
    EXPECT_EQ(s.rfind("{\n  \"orbits\": [],\n  \"total_exponent\": 0,", 0), 0u) << s;
}

TEST(Cli, KGroupsValues)
{
    JobSpec s = job("kgroups", 2, 1, 3);
    s.i_max = 2;
    Report r = run_command(s);
    EXPECT_EQ(r.exit_code, kOk);
    const auto& g = r.body["groups"];
    ASSERT_EQ(g.size(), 4u);
    EXPECT_EQ(g[0]["degree"], 1);
    EXPECT_EQ(g[0]["group"], "Z/4");
    EXPECT_EQ(g[2]["degree"], 3);
    EXPECT_EQ(g[2]["group"], "Z/8 + Z/2");
    EXPECT_EQ(g[2]["order_at_Fp"], "16");
    EXPECT_EQ(g[3]["group"], "0");
    Report k3 = run_command(job("kgroups", 3, 2, 2));
    EXPECT_EQ(k3.body["groups"][0]["group"], "Z/9");
}

TEST(Cli, VerifyExample)
{
    JobSpec s = job("verify", 2, 2, 3);
    s.A = 6;
    s.N = 24;
    Report r = run_command(s);
    EXPECT_EQ(r.exit_code, kOk);
    for (const auto& o : r.body["orbits"]) {
        EXPECT_TRUE(o["pass"].get<bool>());
        EXPECT_TRUE(o["oracle"]["divisors"]["degree2"].empty());
        EXPECT_EQ(o["oracle"]["A"], 6);
        EXPECT_EQ(o["oracle"]["N"], 24);
    }
    EXPECT_EQ(r.body["certificates"].size(), r.body["orbits"].size());
}

TEST(Cli, VerifyRejectsShortTruncation)
{
    JobSpec s = job("verify", 2, 2, 3);
    s.A = 3; // m = 1 has s = 3
    EXPECT_THROW(run_command(s), ValidationError);
}

TEST(Cli, ValidationErrors)
{
    EXPECT_THROW(run_command(job("syntomic", 4, 1, 2)), ValidationError);
    EXPECT_THROW(run_command(job("syntomic", 3, 1)), ValidationError);
    EXPECT_THROW(run_command(job("nope", 3, 1, 2)), ValidationError);
    EXPECT_THROW(run_command(job("transition", 3, 1, 3, 8)), ValidationError); // e divisible by p
    EXPECT_THROW(run_command(job("transition", 3, 1, 4, 2)), ValidationError); // e_max <= e
    EXPECT_THROW(run_command(job("tr", 3, 1)), ValidationError);               // no probe
    JobSpec s = job("syntomic", 3, 1, 2);
    s.slots = {"t1"};
    EXPECT_THROW(run_command(s), ValidationError); // slots without bounds
    JobSpec r = job("syntomic", 3, 2, 2);
    r.i_max = 1;
    EXPECT_THROW(run_command(r), ValidationError);
    JobSpec big = job("syntomic", 3, 1000, 1000);
    EXPECT_THROW(run_command(big), ValidationError);
    JobSpec fmt = job("syntomic", 3, 1, 2);
    fmt.format = "xml";
    EXPECT_THROW(run_command(fmt), ValidationError);
    EXPECT_THROW(parse_slots("a,,b"), ValidationError);
    EXPECT_THROW(parse_slots("a,a"), ValidationError);
    EXPECT_THROW(parse_slots("a b"), ValidationError);
    EXPECT_THROW(parse_integer("--e", "-3"), ValidationError);
    EXPECT_EQ(parse_slots("t2,t1"), (std::vector<std::string>{"t1", "t2"}));
}

TEST(Cli, CsvHeaderAndRows)
{
    Report r = run_command(job("syntomic", 3, 1, 2));
    EXPECT_EQ(emit_report(r, "csv"), "m,alpha,s,h,oracle_h,pass\n1,0,1,1,1,yes\n");
}

TEST(Cli, AlphaSerialization)
{
    JobSpec s = job("syntomic", 2, 2, 3);
    s.slots = {"t1"};
    s.alpha_num_max = Integer(3);
    s.alpha_pexp_max = 1;
    Report r = run_command(s);
    EXPECT_EQ(r.exit_code, kOk);
    bool saw = false;
    for (const auto& o : r.body["orbits"])
        if (o["alpha"].contains("t1") && o["alpha"]["t1"] == "1/2^1")
            saw = true;
    EXPECT_TRUE(saw);
    std::string csv = emit_report(r, "csv");
    EXPECT_NE(csv.find(",t1=1/2^1,"), std::string::npos);
}

TEST(Cli, SortedOrbitsAndTotals)
{
    JobSpec s = job("syntomic", 3, 3, 4);
    s.slots = {"a", "b"};
    s.alpha_num_max = Integer(2);
    s.alpha_pexp_max = 1;
    Report r = run_command(s);
    long total = 0;
    const auto& orbits = r.body["orbits"];
    for (std::size_t k = 0; k < orbits.size(); ++k) {
        total += orbits[k]["h"].get<long>();
        if (k > 0)
            ASSERT_LE(orbits[k - 1]["m"].get<long>(), orbits[k]["m"].get<long>());
    }
    EXPECT_EQ(r.body["total_exponent"].get<long>(), total);
}

TEST(Cli, JsonRoundTrip)
{
    for (const auto& spec : {job("syntomic", 3, 2, 5), job("transition", 2, 2, 3, 11), job("ml-check", 3, 1, 2, 16),
                             job("tr", 2, 1, 2, 16), job("verify", 5, 2, 4)}) {
        std::string a = emit_report(run_command(spec), "json");
        std::string b = json::parse(a).dump(2) + "\n";
        ASSERT_EQ(a, b) << spec.command;
    }
}

TEST(Cli, DeterministicAcrossParallelism)
{
    JobSpec s = job("kgroups", 3, 1, 7);
    s.i_max = 3;
    setenv("TRCALC_JOBS", "1", 1);
    std::string one = emit_report(run_command(s), "json");
    setenv("TRCALC_JOBS", "6", 1);
    std::string six = emit_report(run_command(s), "json");
    std::string again = emit_report(run_command(s), "json");
    unsetenv("TRCALC_JOBS");
    EXPECT_EQ(one, six);
    EXPECT_EQ(six, again);
}

TEST(Cli, BadJobsVariable)
{
    setenv("TRCALC_JOBS", "zero", 1);
    EXPECT_THROW(jobs_from_env(), ValidationError);
    unsetenv("TRCALC_JOBS");
    EXPECT_EQ(jobs_from_env(), 1u);
}

TEST(Cli, TrTextEnding)
{
    Report r = run_command(job("tr", 3, 1, std::nullopt, 30));
    std::string text = emit_report(r, "text");
    std::string tail = "TR_odd = 0: CERTIFIED (probe e ≤ 30)\n";
    ASSERT_GE(text.size(), tail.size());
    EXPECT_EQ(text.substr(text.size() - tail.size()), tail);
    EXPECT_EQ(r.exit_code, kOk);
}

TEST(Cli, TrRefusalExitCode)
{
    Report r = run_command(job("tr", 3, 0, std::nullopt, 30));
    EXPECT_EQ(r.exit_code, kRefused);
    EXPECT_EQ(r.body["certificates"][0]["certified"], true);
}

TEST(Cli, TransitionAndMlCheckPass)
{
    Report t = run_command(job("transition", 3, 2, 2, 20));
    EXPECT_EQ(t.exit_code, kOk);
    Report m = run_command(job("ml-check", 2, 2, 3, 40));
    EXPECT_EQ(m.exit_code, kOk);
    EXPECT_EQ(m.body["certificates"][0]["certified"], true);
}

TEST(Binary, ExitCodes)
{
    EXPECT_EQ(run_binary("syntomic --p 3 --i 1 --e 2").code, 0);
    EXPECT_EQ(run_binary("syntomic --p 4 --i 1 --e 2").code, 1);
    EXPECT_EQ(run_binary("syntomic --p 3 --i 1 --e 2 --bogus").code, 1);
    EXPECT_EQ(run_binary("frobnicate --p 3").code, 1);
    EXPECT_EQ(run_binary("syntomic --p 3 --i 1 --e 2 --format xml").code, 1);
    EXPECT_EQ(run_binary("tr --p 3 --i 0 --e-max 30").code, 3);
    EXPECT_EQ(run_binary("syntomic --p 3 --i 1 --e 2", "TRCALC_JOBS=abc").code, 1);
}

TEST(Binary, ByteIdenticalRuns)
{
    auto a = run_binary("kgroups --p 2 --i 1 --i-max 3 --e 5 --format json", "TRCALC_JOBS=1");
    auto b = run_binary("kgroups --p 2 --i 1 --i-max 3 --e 5 --format json", "TRCALC_JOBS=4");
    EXPECT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_FALSE(a.out.empty());
}

TEST(Binary, WritesOutFile)
{
    std::string path = ::testing::TempDir() + "trcalc_out.csv";
    auto r = run_binary("syntomic --p 3 --i 1 --e 2 --format csv --out " + path);
    EXPECT_EQ(r.code, 0);
    EXPECT_TRUE(r.out.empty());
    FILE* f = std::fopen(path.c_str(), "r");
    ASSERT_NE(f, nullptr);
    char buf[256] = {};
    std::size_t n = std::fread(buf, 1, sizeof buf - 1, f);
    std::fclose(f);
    EXPECT_EQ(std::string(buf, n), "m,alpha,s,h,oracle_h,pass\n1,0,1,1,1,yes\n");
}
