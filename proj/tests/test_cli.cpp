#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <opband/opband.hpp>

#ifndef OPBAND_CLI
#error "OPBAND_CLI must name the CLI binary"
#endif

using namespace opband;
namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
    static const fs::path d = [] {
        const fs::path p = fs::temp_directory_path() / "opband_cli_test";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return d;
}

struct CliRun {
    int code;
    std::string out;
};

CliRun run(const std::string& args) {
    const fs::path out = workdir() / "stdout.txt";
    const std::string cmd = std::string("\"") + OPBAND_CLI + "\" --workdir \"" + workdir().string() + "\" " + args + " > \"" +
                            out.string() + "\" 2>&1";
    const int st = std::system(cmd.c_str());
    std::ifstream f(out);
    std::stringstream ss;
    ss << f.rdbuf();
    return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, ss.str()};
}

Json load(const std::string& name) { return read_json_file(workdir() / name); }

} // namespace

TEST(Cli, HelpForEverySubcommand) {
    for (const char* s : {"", "gen", "gen points", "gen matrix", "norm", "spectral radius", "spectral opnorm", "invert", "bgs verify",
                          "weights check", "verify", "report"}) {
        const CliRun r = run(std::string(s) + " --help");
        EXPECT_EQ(r.code, 0) << s;
        EXPECT_NE(r.out.find("Usage"), std::string::npos) << s;
    }
}

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run("norm").code, 2);                     // --matrix missing
    EXPECT_EQ(run("gen points --bogus 1").code, 2);
    EXPECT_EQ(run("norm --matrix missing.json").code, 2);
}

TEST(Cli, GenerateAndMeasure) {
    ASSERT_EQ(run("gen points --kind jittered --extent 32 --seed 42 --out p.json").code, 0);
    const PointSet X = load_pointset(workdir() / "p.json");
    EXPECT_EQ(X.coords(), make_jittered(1, 1.0, 0.3, 42, 32).coords());

    ASSERT_EQ(run("gen matrix --pointset p.json --weight polynomial:3 --seed 7 --out a.json").code, 0);
    const BlockMatrix A = load_matrix(workdir() / "a.json");
    GeneratorSpec g;
    EXPECT_TRUE(A == generate_matrix(std::make_shared<const PointSet>(X), g, 7));

    ASSERT_EQ(run("norm --tag jaffard --s 3 --matrix a.json --out n.json").code, 0);
    const Json n = load("n.json");
    EXPECT_EQ(n["value"].get<double>(), jaffard_norm(A, 3).value);
    EXPECT_EQ(n["schema"], report_schema);

    ASSERT_EQ(run("spectral opnorm --matrix a.json --out o.json").code, 0);
    EXPECT_NEAR(load("o.json")["op_norm_l2"].get<double>(), op_norm_l2(A), 1e-12);

    ASSERT_EQ(run("spectral radius --norm jaffard --s 3 --matrix a.json --nmax 16 --out r.json").code, 0);
    EXPECT_EQ(load("r.json")["gelfand_sequence"].size(), 5u);
}

TEST(Cli, InvertWritesInverseAndProfile) {
    ASSERT_EQ(run("gen points --kind lattice --extent 24 --out l.json").code, 0);
    ASSERT_EQ(run("gen matrix --pointset l.json --exact-envelope --shift 0.05 --seed 3 --out s.json").code, 0);
    ASSERT_EQ(run("invert --matrix s.json --out inv.json --profile prof.csv").code, 0);
    const BlockMatrix A = load_matrix(workdir() / "s.json");
    const BlockMatrix Ai = load_matrix(workdir() / "inv.json");
    EXPECT_LE(max_block_diff(A * Ai, BlockMatrix::identity(A.index_set_ptr(), A.block_dim())), 1e-9);
    EXPECT_TRUE(fs::exists(workdir() / "prof.csv"));
    EXPECT_EQ(run("invert --matrix s.json --method neumann --out inv_n.json").code, 0);
    EXPECT_LE(max_block_diff(Ai, load_matrix(workdir() / "inv_n.json")), 1e-8);
}

TEST(Cli, BgsVerifyAndWeights) {
    ASSERT_EQ(run("gen points --kind lattice --extent 16 --out b.json").code, 0);
    ASSERT_EQ(run("gen matrix --pointset b.json --exact-envelope --shift 0.1 --max-distance 1 --out bm.json").code, 0);
    const CliRun r = run("bgs verify --matrix bm.json --grid 64 --samples 4 --out bv.json");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_TRUE(load("bv.json")["passed"].get<bool>());
    EXPECT_EQ(run("weights check --kind polynomial --s 2 --pointset b.json --out w.json").code, 0);
    EXPECT_EQ(run("gen points --kind jittered --extent 16 --out j.json").code, 0);
    ASSERT_EQ(run("gen matrix --pointset j.json --out jm.json").code, 0);
    EXPECT_EQ(run("bgs verify --matrix jm.json").code, 2); // not a lattice
}

TEST(Cli, VerifyAndReport) {
    {
        std::ofstream c(workdir() / "cfg.json");
        c << R"({"seed": 42, "pointset": {"kind": "jittered", "dim": 1, "extent": 16},
                 "pipeline": ["adjoint_involution", "leibniz"], "instances": {"leibniz": 2}})";
    }
    ASSERT_EQ(run("verify --config cfg.json --out rep1.json").code, 0);
    ASSERT_EQ(run("--threads 4 verify --config cfg.json --out rep2.json").code, 0);
    const Json a = load("rep1.json"), b = load("rep2.json");
    EXPECT_EQ(a.dump(), b.dump());
    EXPECT_TRUE(a["passed"].get<bool>());
    const CliRun rep = run("report --in rep1.json --csv rep.csv");
    EXPECT_EQ(rep.code, 0);
    EXPECT_NE(rep.out.find("leibniz"), std::string::npos);
    EXPECT_TRUE(fs::exists(workdir() / "rep.csv"));
}
