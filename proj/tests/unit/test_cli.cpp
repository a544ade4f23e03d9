#include "doctest.h"

#include "sparsegrp/cli.hpp"
#include "sparsegrp/io.hpp"

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace sparsegrp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    args.insert(args.begin(), "sparsegrp");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("sparsegrp_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path fixture_dir() {
    const char* env = std::getenv("SPARSEGRP_DATA_DIR");
    return fs::path(env ? env : "data") / "exp1_seed1";
}

}  // namespace

TEST_CASE("usage errors") {
    CHECK(run({}).code == kExitUsage);
    CHECK(run({"frobnicate"}).code == kExitUsage);
    CHECK(run({"fit"}).code == kExitUsage);
}

TEST_CASE("fit on the packaged fixture") {
    const fs::path dir = fixture_dir();
    REQUIRE(fs::exists(dir / "y.csv"));
    const Outcome o = run({"fit", "--method", "hgla", "--data-y", (dir / "y.csv").string(), "--data-g",
                           (dir / "G.csv").string(), "--groups", "4"});
    CHECK(o.code == kExitOk);
    const auto j = nlohmann::json::parse(o.out);
    CHECK(j["method"] == "hgla");
    CHECK_FALSE(j["selected"].empty());
    CHECK(j["theta"].size() == 40);
    CHECK(j["diagnostics"].contains("iterations"));
}

TEST_CASE("fit preconditions and data errors") {
    const fs::path dir = scratch("fit");
    write_text(dir / "y.csv", "1\n2\n3\n4\n");
    write_text(dir / "G.csv", "1,0\n0,1\n1,1\n2,1\n");
    write_text(dir / "bad.csv", "1,0\n0,x\n1,1\n2,1\n");
    write_text(dir / "short.csv", "1,0\n0,1\n");
    const std::string y = (dir / "y.csv").string();
    const std::string g = (dir / "G.csv").string();

    SUBCASE("mkl needs positive gamma") {
        const Outcome o = run({"fit", "--method", "mkl", "--gamma", "0", "--data-y", y, "--data-g", g});
        CHECK(o.code == kExitUsage);
        CHECK(o.err.find("mkl requires positive gamma") != std::string::npos);
    }
    SUBCASE("malformed csv reports the line") {
        const Outcome o = run({"fit", "--method", "lasso", "--data-y", y, "--data-g", (dir / "bad.csv").string()});
        CHECK(o.code == kExitUsage);
        CHECK(o.err.find("line 2") != std::string::npos);
    }
    SUBCASE("row mismatch") {
        const Outcome o = run({"fit", "--data-y", y, "--data-g", (dir / "short.csv").string()});
        CHECK(o.code == kExitUsage);
    }
    SUBCASE("groups must cover the columns") {
        const Outcome o = run({"fit", "--data-y", y, "--data-g", g, "--groups", "3"});
        CHECK(o.code == kExitUsage);
    }
    SUBCASE("zero data give zero estimates") {
        write_text(dir / "zero.csv", "0\n0\n0\n0\n");
        for (const std::string method : {"mkl", "hglb"}) {
            const Outcome o = run({"fit", "--method", method, "--gamma", "0.5", "--sigma2", "1", "--data-y",
                                   (dir / "zero.csv").string(), "--data-g", g});
            REQUIRE(o.code == kExitOk);
            const auto j = nlohmann::json::parse(o.out);
            for (double v : j["theta"]) {
                CHECK(v == 0.0);
            }
            for (double v : j["lambda"]) {
                CHECK(v == 0.0);
            }
        }
    }
    SUBCASE("output file and config defaults") {
        write_text(dir / "cfg.json", R"({"method": "glasso", "sigma2": 0.5})");
        const Outcome o = run({"fit", "--config", (dir / "cfg.json").string(), "--data-y", y, "--data-g", g,
                               "--out", (dir / "est.json").string()});
        CHECK(o.code == kExitOk);
        const auto j = nlohmann::json::parse(slurp(dir / "est.json"));
        CHECK(j["method"] == "glasso");
        CHECK(j["sigma2"] == 0.5);
        const Outcome over = run({"fit", "--config", (dir / "cfg.json").string(), "--method", "lasso", "--data-y", y,
                                  "--data-g", g});
        CHECK(nlohmann::json::parse(over.out)["method"] == "lasso");
    }
}

TEST_CASE("simulate and benchmark") {
    const fs::path dir = scratch("bench");
    SUBCASE("simulate writes a problem") {
        const Outcome o = run({"simulate", "--experiment", "exp2", "--seed", "3", "--out", (dir / "p").string()});
        CHECK(o.code == kExitOk);
        CHECK(read_csv((dir / "p" / "G.csv").string()).cols() == 40);
        CHECK(read_csv((dir / "p" / "y.csv").string()).rows() == 100);
    }
    SUBCASE("benchmark end to end and repeatable") {
        const std::vector<std::string> args{"benchmark", "--experiment", "exp1", "--runs", "5", "--seed", "7",
                                            "--estimators", "hgla,mkl,lasso"};
        std::vector<std::string> a1 = args;
        a1.insert(a1.end(), {"--out", (dir / "r1").string()});
        std::vector<std::string> a2 = args;
        a2.insert(a2.end(), {"--out", (dir / "r2").string()});
        const Outcome o1 = run(a1);
        const Outcome o2 = run(a2);
        CHECK(o1.code == kExitOk);
        CHECK(o1.out == o2.out);
        CHECK(o1.out.find("hgla") != std::string::npos);
        CHECK(slurp(dir / "r1.json") == slurp(dir / "r2.json"));
        CHECK(slurp(dir / "r1.csv") == slurp(dir / "r2.csv"));
    }
    SUBCASE("zero runs") {
        CHECK(run({"benchmark", "--runs", "0"}).code == kExitUsage);
    }
    SUBCASE("unknown estimator lists the registry") {
        const Outcome o = run({"benchmark", "--runs", "1", "--estimators", "hgla,nope"});
        CHECK(o.code == kExitUsage);
        CHECK(o.err.find("nope") != std::string::npos);
        CHECK(o.err.find("adalasso") != std::string::npos);
    }
}

TEST_CASE("arx command") {
    const fs::path dir = scratch("arx");
    REQUIRE(run({"simulate", "--experiment", "arx", "--length", "600", "--seed", "2", "--out", dir.string()}).code ==
            kExitOk);
    const std::string series = (dir / "series.csv").string();
    SUBCASE("scores a known system") {
        const Outcome o = run({"arx", "--data", series, "--method", "hglc", "--q", "10", "--horizon", "4", "--out",
                               (dir / "cod.csv").string(), "--norms-out", (dir / "norms.csv").string()});
        CHECK(o.code == kExitOk);
        const Matrix cod = read_csv((dir / "cod.csv").string());
        CHECK(cod.rows() == 4);
        CHECK(cod(0, 1) > 0.0);
        CHECK(read_csv((dir / "norms.csv").string()).size() == 4);
    }
    SUBCASE("series too short") {
        CHECK(run({"arx", "--data", series, "--q", "700"}).code == kExitUsage);
    }
}
