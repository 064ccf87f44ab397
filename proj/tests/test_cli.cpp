#include "support.hpp"

#include "dendro/io.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace dendro;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code;
    std::string out;
};

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("dendro_cli_" + std::to_string(::getpid()) + "_" +
                                            ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    /// Runs the CLI with the given arguments; stderr is folded into the output.
    CliRun run(const std::string& args, const std::string& env = "") const {
        std::string cmd = env + (env.empty() ? "" : " ") + DENDRO_CLI_PATH + std::string(" ") + args + " 2>&1";
        FILE* pipe = ::popen(cmd.c_str(), "r");
        if (!pipe) throw std::runtime_error("popen failed");
        std::string out;
        char buf[4096];
        while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
        int status = ::pclose(pipe);
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
    }

    static std::string slurp(const std::string& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    static std::size_t lines(const std::string& text) {
        return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
    }

    fs::path dir_;
};

std::size_t leaves(const Dendrite& d) {
    std::size_t n = 0;
    for (std::size_t v = 0; v < d.vertex_count(); ++v)
        if (d.degree(static_cast<VertexId>(v)) == 1) ++n;
    return n;
}

}  // namespace

TEST_F(Cli, GenComb) {
    CliRun r = run("gen comb --depth 8 -o " + path("comb8.json"));
    ASSERT_EQ(r.code, 0) << r.out;
    Dendrite d = io::dendrite_from_json(io::read_json_file(path("comb8.json")));
    EXPECT_EQ(d, gallery::comb(8));
}

TEST_F(Cli, GenRiemannToothCount) {
    CliRun r = run("gen riemann --qmax 7");
    ASSERT_EQ(r.code, 0) << r.out;
    Dendrite d = io::dendrite_from_json(io::json::parse(r.out));
    EXPECT_EQ(leaves(d), 19u);
}

TEST_F(Cli, GenOmegaStarArms) {
    CliRun r = run("gen omega_star --arms 12");
    ASSERT_EQ(r.code, 0) << r.out;
    Dendrite d = io::dendrite_from_json(io::json::parse(r.out));
    EXPECT_EQ(point_order(d, d.marked("center")), 12u);
}

TEST_F(Cli, GalleryList) {
    CliRun r = run("gallery list");
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("riemann completely_regular=0"), std::string::npos);
    EXPECT_NE(r.out.find("comb completely_regular=1 all_orders_finite=1 in_theorem_class=1"), std::string::npos);
    EXPECT_EQ(lines(r.out), gallery::families().size());
}

TEST_F(Cli, OdometerDiameterTrajectory) {
    CliRun r = run("run --scenario odometer-diam --alpha 1^inf --steps 2187 --out " + path("traj.csv"));
    ASSERT_EQ(r.code, 0) << r.out;
    std::string csv = slurp(path("traj.csv"));
    EXPECT_EQ(lines(csv), 2189u);  // header + n = 0..2187
    EXPECT_EQ(csv.rfind("n,ell,diam\n0,0,1/1\n1,1,1/3\n", 0), 0u);
}

TEST_F(Cli, ExactnessOnComb) {
    ASSERT_EQ(run("gen comb --depth 4 -o " + path("c.json")).code, 0);
    CliRun r = run("run --scenario exactness --dendrite " + path("c.json") + " --arc A --q 1/2 --rho 6/5 --nmax 32");
    ASSERT_EQ(r.code, 0) << r.out;
    io::json j = io::json::parse(r.out);
    EXPECT_TRUE(j["bushes_within_bound"].get<bool>());
    EXPECT_TRUE(j["off_base_edges_covered"].get<bool>());
    EXPECT_EQ(j["manifest"]["bushes"].size(), 5u);
}

TEST_F(Cli, ExactnessPointCaseIsNotCertified) {
    ASSERT_EQ(run("gen star -o " + path("s.json")).code, 0);
    CliRun r = run("run --scenario exactness --dendrite " + path("s.json") + " --point center");
    EXPECT_EQ(r.code, 2) << r.out;
}

TEST_F(Cli, BuildExactWritesMapAndManifest) {
    ASSERT_EQ(run("gen comb --depth 2 -o " + path("c.json")).code, 0);
    CliRun r = run("build exact --dendrite " + path("c.json") + " --arc A -o " + path("m.json") + " --manifest " +
                path("man.json"));
    ASSERT_EQ(r.code, 0) << r.out;
    TreeMap f = io::map_from_json(io::read_json_file(path("m.json")));
    EXPECT_EQ(f.image(whole(f.domain())), whole(f.domain()));
    EXPECT_EQ(io::read_json_file(path("man.json"))["lambda"][0], "1/2");
}

TEST_F(Cli, GchVerdictOnOmegaStar) {
    CliRun b = run("build counterexample omega_star_gch --arms 6 -o " + path("w.json") + " --manifest " + path("wm.json"));
    ASSERT_EQ(b.code, 0) << b.out;
    EXPECT_EQ(io::read_json_file(path("wm.json"))["pieces"].size(), 6u);
    CliRun r = run("run --scenario gch-verdict --map " + path("w.json") + " --family subdendrites --N 200 --csv " +
                path("sens.csv"));
    io::json j = io::json::parse(r.out);
    EXPECT_TRUE(j["prox_pass"].get<bool>());
    EXPECT_EQ(r.code, j["generic_chaos_evidence"].get<bool>() ? 0 : 2);
    EXPECT_EQ(slurp(path("sens.csv")).rfind("index,label,sens,at\n", 0), 0u);
}

TEST_F(Cli, VerdictOnTentAndDeterminism) {
    io::write_json_file(path("tent.json"), io::to_json(support::tent()));
    CliRun a = run("run --scenario verdict --map " + path("tent.json") + " --family subdendrites --seed 5");
    CliRun b = run("run --scenario verdict --map " + path("tent.json") + " --family subdendrites", "DENDRO_SEED=5");
    ASSERT_EQ(a.code, 0) << a.out;
    EXPECT_EQ(a.out, b.out);
    io::json j = io::json::parse(a.out);
    EXPECT_EQ(j["eta_estimate"], "1/1");
    EXPECT_EQ(j["seed"], 5);
}

TEST_F(Cli, VerdictOnIdentityExitsTwo) {
    auto d = support::share(gallery::arc());
    io::write_json_file(path("id.json"), io::to_json(TreeMap::identity(d)));
    CliRun r = run("run --scenario verdict --map " + path("id.json"));
    EXPECT_EQ(r.code, 2);
    EXPECT_FALSE(io::json::parse(r.out)["prox_pass"].get<bool>());
}

TEST_F(Cli, LySample) {
    io::write_json_file(path("tent.json"), io::to_json(support::tent()));
    CliRun r = run("run --scenario ly-sample --map " + path("tent.json") + " --pairs 20 --N 50 --seed 3");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(io::json::parse(r.out)["pairs"], 20);
    CliRun o = run("run --scenario ly-sample --system odometer --pairs 10 --N 100");
    ASSERT_EQ(o.code, 0) << o.out;
    EXPECT_EQ(io::json::parse(o.out)["seed"], 1);
}

TEST_F(Cli, ExportPattern) {
    CliRun r = run("export-pattern --depth 1");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "word,x0,x1,y0,y1\n0,0/1,1/5,0/1,1/3\n1,2/5,3/5,0/1,1/1\n2,4/5,1/1,0/1,1/3\n");
    EXPECT_EQ(lines(run("export-pattern --depth 3").out), 28u);
}

TEST_F(Cli, GehmanCounterexample) {
    CliRun r = run("build counterexample odometer_gehman --depth 3 -o " + path("g.json") + " --manifest " + path("gm.json"));
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(io::read_json_file(path("gm.json"))["leaf_labels"].size(), 8u);
}

TEST_F(Cli, ErrorsNameTheirStage) {
    CliRun unknown = run("gen sierpinski");
    EXPECT_EQ(unknown.code, 1);
    EXPECT_NE(unknown.out.find("error [generate]"), std::string::npos);
    CliRun missing = run("run --scenario verdict --map " + path("nope.json"));
    EXPECT_EQ(missing.code, 1);
    EXPECT_NE(missing.out.find("error [load]"), std::string::npos);
    CliRun bad_alpha = run("run --scenario odometer-diam --alpha 3^inf");
    EXPECT_EQ(bad_alpha.code, 1);
    EXPECT_NE(bad_alpha.out.find("error [config]"), std::string::npos);
    EXPECT_EQ(run("run --scenario nonsense").code, 1);
    EXPECT_EQ(run("frobnicate").code, 1);
    EXPECT_EQ(run("run --scenario ly-sample --system odometer", "DENDRO_SEED=abc").code, 1);
    CliRun exclusive = run("build exact --dendrite x.json --arc A --point c -o y.json");
    EXPECT_EQ(exclusive.code, 1);
}
