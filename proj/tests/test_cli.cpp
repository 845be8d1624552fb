#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "commands.hpp"
#include "doctest.h"
#include "evdag/dag_model.hpp"
#include "evdag/learners.hpp"
#include "evdag/synthesis.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "evdag");
    std::ostringstream out, err;
    const int code = evdag::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("evdag_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("usage errors exit with 2") {
    CHECK(run({}).code == evdag::cli::kUsage);
    CHECK(run({"frobnicate"}).code == evdag::cli::kUsage);
    TempDir dir;
    Run missing = run({"generate", "--family", "chain", "--n", "5"});
    CHECK(missing.code == evdag::cli::kUsage);
    Run bad = run({"generate", "--family", "random", "--n", "5", "--d", "9", "--out", dir / "g.txt"});
    CHECK(bad.code == evdag::cli::kUsage);
    CHECK(bad.err.find("--d") != std::string::npos);
    CHECK(run({"sample", "--graph", dir / "missing.txt", "--out", dir / "s.csv"}).code == evdag::cli::kUsage);
    CHECK(run({"--help"}).code == evdag::cli::kOk);
}

TEST_CASE("generate writes the requested families") {
    TempDir dir;
    Run chain = run({"generate", "--family", "chain", "--n", "5", "--k", "1.2", "--out", dir / "c.txt"});
    REQUIRE(chain.code == 0);
    CHECK(chain.out.find("edges=4") != std::string::npos);
    std::ifstream in(dir / "c.txt");
    evdag::WeightedDag g = evdag::read_edge_list(in);
    CHECK(g.num_edges() == 4);
    CHECK(*g.weight(3, 4) == 1.2);

    Run random = run({"generate", "--family", "random", "--n", "25", "--d", "4", "--bmin", "0.5", "--bmax", "1",
                      "--seed", "7", "--out", dir / "r.txt"});
    REQUIRE(random.code == 0);
    std::ifstream rin(dir / "r.txt");
    evdag::WeightedDag r = evdag::read_edge_list(rin);
    CHECK(r.num_nodes() == 25);
    CHECK(r.max_in_degree() <= 4);
    CHECK(r.edges() == evdag::random_dag(25, 4, 0.5, 1.0, 7).dag().edges());

    Run tree = run({"generate", "--family", "tree", "--height", "3", "--lambda", "0.84", "--out", dir / "t.txt"});
    REQUIRE(tree.code == 0);
    CHECK(tree.out.find("n=15 edges=14") != std::string::npos);
    for (const char* fam : {"matching", "triangle", "nonident", "cancel"})
        CHECK(run({"generate", "--family", fam, "--n", "6", "--out", dir / "f.txt"}).code == 0);
}

TEST_CASE("generate, sample, learn and eval round trip") {
    TempDir dir;
    REQUIRE(run({"generate", "--family", "chain", "--n", "5", "--k", "0.8", "--out", dir / "g.txt"}).code == 0);
    REQUIRE(run({"sample", "--graph", dir / "g.txt", "--m", "100000", "--seed", "3", "--out", dir / "s.csv"}).code == 0);
    CHECK(slurp(dir / "s.csv").rfind("# seed=3 noise=gaussian n=5 m=100000", 0) == 0);
    for (const char* alg : {"exhaustive", "lasso", "variance_baseline"}) {
        Run l = run({"learn", "--data", dir / "s.csv", "--alg", alg, "--d", "2", "--bmin", "0.5", "--out", dir / "l.txt"});
        REQUIRE(l.code == 0);
        CHECK(l.err.find("regressions=") != std::string::npos);
        Run e = run({"eval", "--truth", dir / "g.txt", "--estimate", dir / "l.txt"});
        REQUIRE(e.code == 0);
        CHECK(e.out.rfind("recovered=1 fp=0 fn=0", 0) == 0);
        std::ifstream lin(dir / "l.txt");
        evdag::LearnedStructure ls = evdag::read_learned_structure(lin);
        std::ifstream gin(dir / "g.txt");
        CHECK(ls.to_dag().edges().size() == evdag::read_edge_list(gin).edges().size());
    }
    Run same = run({"sample", "--graph", dir / "g.txt", "--m", "50", "--seed", "3", "--noise", "rademacher"});
    CHECK(same.out == run({"sample", "--graph", dir / "g.txt", "--m", "50", "--seed", "3", "--noise", "rademacher"}).out);
}

TEST_CASE("learner failures exit with 3") {
    TempDir dir;
    REQUIRE(run({"generate", "--family", "chain", "--n", "6", "--k", "0.8", "--out", dir / "g.txt"}).code == 0);
    REQUIRE(run({"sample", "--graph", dir / "g.txt", "--m", "3", "--seed", "1", "--out", dir / "s.csv"}).code == 0);
    Run l = run({"learn", "--data", dir / "s.csv", "--alg", "exhaustive", "--d", "2", "--bmin", "0.5"});
    CHECK(l.code == evdag::cli::kLearnerError);
    CHECK_FALSE(l.err.empty());
    CHECK(run({"learn", "--data", dir / "s.csv", "--alg", "exhaustive"}).code == evdag::cli::kUsage);
}

TEST_CASE("config files feed options and command-line flags win") {
    TempDir dir;
    {
        std::ofstream cfg(dir / "grid.cfg");
        cfg << "# small grid\n"
            << "n = 5,6\nm = 300\nd = 2\ntrials = 2\nseed = 11\nalgs = exhaustive,lasso\nempty_graphs = false\n";
    }
    Run a = run({"grid", "--config", dir / "grid.cfg", "--out", dir / "a.csv"});
    REQUIRE(a.code == 0);
    Run b = run({"grid", "--config", dir / "grid.cfg", "--out", dir / "b.csv"});
    REQUIRE(b.code == 0);
    const std::string ca = slurp(dir / "a.csv");
    CHECK(ca == slurp(dir / "b.csv"));
    CHECK(std::count(ca.begin(), ca.end(), '\n') == 1 + 2 * 1 * 2 * 2);

    REQUIRE(run({"grid", "--config", dir / "grid.cfg", "--trials", "1", "--out", dir / "c.csv"}).code == 0);
    const std::string cc = slurp(dir / "c.csv");
    CHECK(std::count(cc.begin(), cc.end(), '\n') == 1 + 2 * 1 * 2 * 1);

    {
        std::ofstream cfg(dir / "bad.cfg");
        cfg << "bogus = 1\n";
    }
    CHECK(run({"grid", "--config", dir / "bad.cfg"}).code == evdag::cli::kUsage);
    CHECK(run({"grid", "--config", dir / "absent.cfg"}).code == evdag::cli::kUsage);
}

TEST_CASE("config tokens") {
    TempDir dir;
    {
        std::ofstream cfg(dir / "k.cfg");
        cfg << "\n# comment\nempty_graphs = true\n  m = 100, 200 \n";
    }
    auto tokens = evdag::cli::read_config_tokens(dir / "k.cfg");
    REQUIRE(tokens.size() == 2);
    CHECK(tokens[0] == "--empty-graphs=true");
    CHECK(tokens[1] == "--m=100, 200");
    {
        std::ofstream cfg(dir / "broken.cfg");
        cfg << "no equals sign\n";
    }
    CHECK_THROWS(evdag::cli::read_config_tokens(dir / "broken.cfg"));
}

TEST_CASE("verify prints closed-form checks") {
    Run kl = run({"verify", "--suite", "kl", "--bmin", "0.5"});
    CHECK(kl.code == 0);
    CHECK(kl.out.find("matching-KL = 0.03125") != std::string::npos);
    CHECK(kl.out.find("PASS") != std::string::npos);
    CHECK(kl.out.find("FAIL") == std::string::npos);
    Run all = run({"verify", "--graphs", "100"});
    CHECK(all.code == 0);
    CHECK(all.out.find("FAIL") == std::string::npos);
    CHECK(run({"verify", "--suite", "nope"}).code == evdag::cli::kUsage);
}

TEST_CASE("growth command writes one row per n") {
    TempDir dir;
    Run g = run({"growth", "--n", "5,8", "--d", "2", "--graphs", "5", "--out", dir / "g.csv"});
    REQUIRE(g.code == 0);
    const std::string text = slurp(dir / "g.csv");
    CHECK(text.rfind("n,mean_kappa,mean_tau,mean_maxvar,graphs\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}

TEST_CASE("the installed binary runs") {
    const std::string cmd = std::string("\"") + EVDAG_TOOL_PATH + "\" verify --suite kl > /dev/null";
    CHECK(std::system(cmd.c_str()) == 0);
    const std::string bad = std::string("\"") + EVDAG_TOOL_PATH + "\" nonsense > /dev/null 2>&1";
    const int status = std::system(bad.c_str());
    CHECK(WEXITSTATUS(status) == 2);
}
