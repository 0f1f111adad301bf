#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

using namespace rsint;

namespace {

struct CliRun {
    int status = -1;
    std::string out;
    std::string err;
};

CliRun run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "rsint");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    CliRun r;
    r.status = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

/// Runs the installed executable through the shell.
CliRun run_binary(const std::string& args) {
    const std::string cmd = std::string(RSINT_CLI_PATH) + " " + args + " 2>/dev/null";
    CliRun r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int st = pclose(pipe);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

Enclosure enclosure_of(const std::string& out) {
    return json::parse(out).at("enclosure").get<Enclosure>();
}

} // namespace

TEST(Integrate, SquareIntegrator) {
    const CliRun r = run_cli({"integrate", "--f", "x", "--phi", "x^2", "--interval", "0", "1", "--eps", "1e-6"});
    ASSERT_EQ(r.status, 0) << r.err;
    const Enclosure e = enclosure_of(r.out);
    EXPECT_TRUE(e.contains(2.0 / 3.0, 1e-12));
    EXPECT_LE(e.width(), 1e-6);
    EXPECT_TRUE(json::parse(r.out).at("certified").get<bool>());
}

TEST(Integrate, ConstantAgainstIdentity) {
    const CliRun r = run_cli({"integrate", "--f", "1", "--phi", "x", "--interval", "0", "1"});
    ASSERT_EQ(r.status, 0) << r.err;
    const Enclosure e = enclosure_of(r.out);
    EXPECT_NEAR(e.lower, 1.0, 1e-12);
    EXPECT_NEAR(e.upper, 1.0, 1e-12);
}

TEST(Integrate, ReversedOrientation) {
    const CliRun r = run_cli({"integrate", "--f", "x", "--phi", "x", "--interval", "1", "0"});
    ASSERT_EQ(r.status, 0) << r.err;
    const Enclosure e = enclosure_of(r.out);
    EXPECT_TRUE(e.contains(-0.5, 1e-12));
    const json j = json::parse(r.out);
    EXPECT_EQ(j.at("interval").at("start").get<double>(), 1.0);
    EXPECT_EQ(j.at("interval").at("end").get<double>(), 0.0);
}

TEST(Integrate, DensityMatchesIntegrator) {
    const CliRun a = run_cli({"integrate", "--f", "x", "--density", "2*x", "--interval", "0", "1", "--eps", "1e-5"});
    ASSERT_EQ(a.status, 0) << a.err;
    EXPECT_TRUE(enclosure_of(a.out).contains(2.0 / 3.0, 1e-12));
}

TEST(Integrate, NonMonotoneIntegratorAndNegativeEndpoints) {
    // ∫_{-1}^{1} x d(x^2) = 4/3
    const CliRun r = run_cli({"integrate", "--f", "x", "--phi", "x^2", "--interval", "-1", "1", "--eps", "1e-5"});
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_TRUE(enclosure_of(r.out).contains(4.0 / 3.0, 1e-12));
}

TEST(Integrate, Formats) {
    const CliRun csv = run_cli({"integrate", "--f", "1", "--phi", "x", "--interval", "0", "2", "--format", "csv"});
    ASSERT_EQ(csv.status, 0);
    EXPECT_EQ(csv.out.substr(0, csv.out.find('\n')), "lower,upper,midpoint,gap,cells,certified");
    EXPECT_NE(csv.out.find("2,2,2,0,"), std::string::npos);
    const CliRun human = run_cli({"integrate", "--f", "1", "--phi", "x", "--interval", "0", "2", "--format", "human"});
    EXPECT_NE(human.out.find("certified"), std::string::npos);
}

TEST(Integrate, BudgetExhaustedExitsTwo) {
    const CliRun r = run_cli({"integrate", "--f", "sin(20*x)", "--phi", "x", "--interval", "0", "1", "--eps", "1e-9",
                           "--max-cells", "64"});
    EXPECT_EQ(r.status, 2);
    EXPECT_FALSE(json::parse(r.out).at("certified").get<bool>());
}

TEST(Verify, CosineChangeOfVariable) {
    const CliRun r = run_cli({"verify", "eq30", "--f", "y", "--psi", "1", "--density-phi", "cos(x)", "--interval", "0",
                           "4.712388980"});
    ASSERT_EQ(r.status, 0) << r.err;
    const VerificationReport rep = json::parse(r.out).get<VerificationReport>();
    EXPECT_TRUE(rep.agree);
    EXPECT_EQ(rep.identity, Identity::eq30);
    // Φ = sin, so both sides are sin²(b)/2
    const double want = 0.5 * std::pow(std::sin(4.712388980), 2);
    EXPECT_TRUE(rep.lhs.contains(want, 1e-12));
    EXPECT_TRUE(rep.rhs.contains(want, 1e-12));
}

TEST(Verify, ConstantSignSevenThirds) {
    const CliRun r = run_cli({"verify", "eq7", "--f", "y", "--psi", "y", "--density-phi", "2*x", "--interval", "1",
                           "1.41421356"});
    ASSERT_EQ(r.status, 0) << r.err;
    const VerificationReport rep = json::parse(r.out).get<VerificationReport>();
    EXPECT_TRUE(rep.agree);
    const double b2 = 1.41421356 * 1.41421356;
    const double want = (b2 * b2 * b2 - 1.0) / 3.0;  // ∫_1^{b²} y² dy
    EXPECT_TRUE(rep.lhs.contains(want, 1e-12));
    EXPECT_NEAR(rep.lhs.midpoint(), 7.0 / 3.0, 1e-6);
}

TEST(Verify, SignChangingPsiIsAHypothesisError) {
    const CliRun r = run_cli({"verify", "eq7", "--f", "y", "--psi", "2*y-1", "--density-phi", "1", "--interval", "0",
                           "1"});
    EXPECT_EQ(r.status, 3);
    EXPECT_NE(r.err.find("psi changes sign; eq7 requires constant sign"), std::string::npos) << r.err;
}

TEST(Verify, SubstitutionAndSumIdentity) {
    const CliRun eq1 = run_cli({"verify", "eq1", "--f", "y", "--psi", "2*y-1", "--density-phi", "1", "--interval", "0",
                             "1", "--eps", "1e-5"});
    ASSERT_EQ(eq1.status, 0) << eq1.err;
    const VerificationReport r1 = json::parse(eq1.out).get<VerificationReport>();
    EXPECT_TRUE(r1.lhs.contains(1.0 / 6.0, 1e-12));  // ∫_0^1 y (2y-1) dy
    ASSERT_TRUE(r1.classification.has_value());
    const CliRun eq6 = run_cli({"verify", "eq6", "--f", "step(0.3)", "--psi", "1+y", "--density-phi", "1+x",
                             "--interval", "0", "1", "--cells", "7"});
    ASSERT_EQ(eq6.status, 0) << eq6.err;
    const VerificationReport r6 = json::parse(eq6.out).get<VerificationReport>();
    EXPECT_TRUE(r6.checks_hold());
    EXPECT_EQ(r6.quantities.at("cells"), 7.0);
}

TEST(Verify, Coda) {
    const CliRun r = run_cli({"verify", "coda", "--format", "human"});
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_NE(r.out.find("coda: agree"), std::string::npos);
    const CliRun gate = run_cli({"verify", "coda", "--beta", "0.3"});
    EXPECT_EQ(gate.status, 3);
}

TEST(Verify, ReportRoundTrips) {
    const CliRun r = run_cli({"verify", "eq1", "--f", "y^2", "--psi", "y-0.5", "--density-phi", "1", "--interval", "0",
                           "1"});
    ASSERT_EQ(r.status, 0) << r.err;
    const json j = json::parse(r.out);
    const VerificationReport rep = j.get<VerificationReport>();
    EXPECT_EQ(json(rep), j);
    const json again = json::parse(json(rep).dump());
    EXPECT_EQ(again.get<VerificationReport>().lhs, rep.lhs);
    EXPECT_EQ(again.get<VerificationReport>().checks, rep.checks);
    for (const char* key : {"identity", "lhs", "rhs", "agree", "max_gap", "diagnostics"})
        EXPECT_TRUE(j.contains(key)) << key;
}

TEST(Verify, CsvListsChecks) {
    const CliRun r = run_cli({"verify", "eq7", "--f", "y", "--psi", "1", "--density-phi", "1", "--interval", "0", "1",
                           "--format", "csv"});
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "name,value,bound,holds");
    EXPECT_NE(r.out.find("lhs_lower,"), std::string::npos);
}

TEST(Verify, MissingInputsIsUsageError) {
    EXPECT_EQ(run_cli({"verify", "eq7", "--f", "y"}).status, 1);
    EXPECT_EQ(run_cli({"verify", "eq9"}).status, 1);
}

TEST(Classify, IdentityDensity) {
    const CliRun r = run_cli({"classify", "--psi", "y", "--interval", "-1", "1", "--eta", "0.1", "--mesh", "0.5"});
    ASSERT_EQ(r.status, 0) << r.err;
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "left,right,label,osc,sup_abs");
    std::vector<std::string> rows;
    while (std::getline(in, line)) rows.push_back(line);
    ASSERT_EQ(rows.size(), 5u);
    // the two middle cells touch the sign change at 0 and exceed eta
    EXPECT_EQ(rows[0], "-1,-0.5,G,0.5,1");
    EXPECT_EQ(rows[1], "-0.5,0,U,0.5,0.5");
    EXPECT_EQ(rows[2], "0,0.5,U,0.5,0.5");
    EXPECT_EQ(rows[3], "0.5,1,G,0.5,1");
    EXPECT_NE(rows[4].find("sum_U_length=1 "), std::string::npos);
    EXPECT_NE(rows[4].find("within=false"), std::string::npos);
}

TEST(Classify, ConstantAndSmallDensities) {
    const CliRun pos = run_cli({"classify", "--psi", "2", "--interval", "0", "1", "--eta", "0.1", "--cells", "4",
                             "--format", "json"});
    ASSERT_EQ(pos.status, 0) << pos.err;
    const auto cp = json::parse(pos.out).at("classification").get<ClassifiedPartition>();
    EXPECT_EQ(cp.count(Label::G), 4u);
    const CliRun zero = run_cli({"classify", "--psi", "0", "--interval", "0", "1", "--eta", "0.1", "--cells", "4",
                              "--format", "json"});
    EXPECT_EQ(json::parse(zero.out).at("classification").get<ClassifiedPartition>().count(Label::B), 4u);
    // eta above sup|psi|: the sign-change cell becomes B
    const CliRun small = run_cli({"classify", "--psi", "0.05*(y-0.5)", "--interval", "0", "1", "--eta", "0.5",
                               "--cells", "3", "--format", "json"});
    const auto cs = json::parse(small.out).at("classification").get<ClassifiedPartition>();
    EXPECT_EQ(cs.labels[1], Label::B);
}

TEST(Suite, EmptyRunIsVacuousPass) {
    const CliRun r = run_cli({"suite", "--cases", "0"});
    EXPECT_EQ(r.status, 0);
    EXPECT_EQ(r.out, "0/0 agree\n");
}

TEST(Suite, SeedFortyTwoAgrees) {
    const CliRun r = run_cli({"suite", "--seed", "42", "--cases", "40"});
    EXPECT_EQ(r.status, 0) << r.out;
    EXPECT_EQ(r.out, "40/40 agree\n");
}

TEST(Suite, DeterministicJson) {
    const CliRun a = run_cli({"suite", "--seed", "7", "--cases", "12", "--format", "json"});
    const CliRun b = run_cli({"suite", "--seed", "7", "--cases", "12", "--format", "json"});
    EXPECT_EQ(a.out, b.out);
    const CliRun c = run_cli({"suite", "--seed", "8", "--cases", "12", "--format", "json"});
    EXPECT_NE(a.out, c.out);
}

TEST(Suite, ZeroToleranceStillOverlaps) {
    // agreement is overlap of rigorous brackets after widening; both contain
    // the common value, so widening by 0 does not separate them
    const CliRun r = run_cli({"suite", "--seed", "42", "--cases", "8", "--agree-tol", "0", "--format", "json"});
    EXPECT_EQ(r.status, 0);
    EXPECT_EQ(json::parse(r.out).at("passed").get<int>(), 8);
    EXPECT_EQ(run_cli({"suite", "--agree-tol", "-1"}).status, 1);
}

TEST(ExitCodes, UsageAndParseErrors) {
    EXPECT_EQ(run_cli({}).status, 1);
    EXPECT_EQ(run_cli({"frobnicate"}).status, 1);
    EXPECT_EQ(run_cli({"integrate", "--f", "x+", "--phi", "x", "--interval", "0", "1"}).status, 1);
    EXPECT_EQ(run_cli({"integrate", "--f", "x", "--interval", "0", "1"}).status, 1);
    EXPECT_EQ(run_cli({"integrate", "--f", "x", "--phi", "x", "--interval", "0"}).status, 1);
    EXPECT_EQ(run_cli({"integrate", "--f", "x", "--phi", "x", "--interval", "0", "1", "--eps", "0"}).status, 1);
    const CliRun dom = run_cli({"integrate", "--f", "log(x)", "--phi", "x", "--interval", "0", "1"});
    EXPECT_EQ(dom.status, 1);
    EXPECT_NE(dom.err.find("log"), std::string::npos);
    EXPECT_EQ(run_cli({"--help"}).status, 0);
}

TEST(ExitCodes, DiscontinuousIntegratorIsAHypothesisError) {
    EXPECT_EQ(run_cli({"integrate", "--f", "x", "--phi", "step(0.5)", "--interval", "0", "1"}).status, 3);
}

TEST(Output, WritesFile) {
    const std::string path = ::testing::TempDir() + "rsint_cli_out.json";
    const CliRun r = run_cli({"integrate", "--f", "1", "--phi", "x", "--interval", "0", "1", "-o", path});
    ASSERT_EQ(r.status, 0);
    EXPECT_TRUE(r.out.empty());
    std::ifstream in(path);
    const json j = json::parse(in);
    EXPECT_EQ(j.at("command"), "integrate");
}

TEST(Binary, ExitStatusesAndDeterminism) {
    const CliRun a = run_binary("suite --seed 42 --cases 16 --format json");
    const CliRun b = run_binary("suite --seed 42 --cases 16 --format json");
    EXPECT_EQ(a.status, 0);
    EXPECT_FALSE(a.out.empty());
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(run_binary("verify eq7 --f y --psi '2*y-1' --density-phi 1 --interval 0 1").status, 3);
    EXPECT_EQ(run_binary("integrate --f 'x' --phi 'x' --interval 0 1").status, 0);
    EXPECT_EQ(run_binary("integrate --f '(' --phi 'x' --interval 0 1").status, 1);
}
