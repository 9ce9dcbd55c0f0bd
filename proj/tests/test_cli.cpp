#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "operadkit/geometry.hpp"

using nlohmann::json;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

std::string cli()
{
    const char* p = std::getenv("OPERADKIT_CLI");
    return p ? p : "operadkit";
}

Run run(const std::string& args, const std::string& env = "")
{
    const std::string cmd = env + (env.empty() ? "" : " ") + "'" + cli() + "' " + args + " 2>/dev/null";
    Run r;
    FILE* f = popen(cmd.c_str(), "r");
    REQUIRE(f);
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof buf, f)) > 0)
        r.out.append(buf, got);
    const int status = pclose(f);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::filesystem::path scratch(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("operadkit-cli-test-" + std::to_string(getpid()));
    std::filesystem::create_directories(dir);
    return dir / name;
}

void write_file(const std::filesystem::path& p, const std::string& body)
{
    std::ofstream(p) << body;
}

void check_header(const json& j, const std::string& command)
{
    CHECK(j.at("tool") == "operadkit");
    CHECK(j.at("version") == OPERADKIT_VERSION);
    CHECK(j.at("command") == command);
    CHECK(j.at("params").is_object());
    CHECK(j.contains("seed"));
}

} // namespace

TEST_CASE("hh tables", "[cli]")
{
    const Run r = run("hh --degree 3 --max-p 5 --coeff rational");
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    check_header(j, "hh");
    CHECK(j["table"]["n"] == 3);
    CHECK(j["table"]["entries"].size() > 5);

    const json full = json::parse(run("hh --degree 2 --max-p 4").out);
    const Run nr = run("hh --degree 2 --max-p 4 --normalized");
    REQUIRE(nr.code == 0);
    const json norm = json::parse(nr.out);
    REQUIRE(full["table"]["entries"].size() == norm["table"]["entries"].size());
    for (std::size_t k = 0; k < full["table"]["entries"].size(); ++k)
        CHECK(full["table"]["entries"][k]["rank"] == norm["table"]["entries"][k]["rank"]);

    const Run csv = run("hh --degree 2 --max-p 4 --coeff integral --format csv --seed 3");
    REQUIRE(csv.code == 0);
    CHECK(csv.out.rfind("# operadkit", 0) == 0);
    CHECK(csv.out.find("seed") != std::string::npos);
    CHECK(csv.out.find("\nq\\p,0,1,2,3\n") != std::string::npos);
}

TEST_CASE("exit codes", "[cli]")
{
    CHECK(run("hh --degree 0 --max-p 4").code == 2);
    CHECK(run("hh --max-p 4").code == 2);
    CHECK(run("hh --degree 2 --max-p 9").code == 3);
    CHECK(run("hh --degree 2 --coeff real").code == 2);
    CHECK(run("verify no-such-suite").code == 2);
    CHECK(run("verify operad-axioms --operad nothing").code == 2);
    CHECK(run("").code == 2);
    CHECK(run("geom check").code == 2);
    CHECK(run("geom check --input /nonexistent/cfg.json").code == 2);
    CHECK(run("geom knot-eval --curve trefoil --eps 0.5").code == 2);
    CHECK(run("--help").code == 0);
}

TEST_CASE("verify suites", "[cli]")
{
    const Run s2 = run("verify s2-iso --max-level 8");
    REQUIRE(s2.code == 0);
    const json j = json::parse(s2.out);
    check_header(j, "verify");
    CHECK(j["report"]["passed"] == true);
    CHECK(j["params"]["max_level"] == 8);

    CHECK(run("verify operad-axioms --operad poisson --degree 2 --max-arity 4").code == 0);
    CHECK(run("verify operad-axioms --operad choose-two --max-arity 4").code == 0);
    CHECK(run("verify cosimplicial --operad poisson --degree 3 --max-level 5").code == 0);
    const Run geo = run("verify geometry --trials 30 --tol 1e-9 --seed 42");
    CHECK(geo.code == 0);
    CHECK(json::parse(geo.out)["seed"] == 42);

    const Run text = run("verify s2-iso --max-level 4 --format text");
    CHECK(text.code == 0);
    CHECK(text.out.rfind("s2-iso: pass", 0) == 0);
}

TEST_CASE("geom check on files", "[cli]")
{
    std::mt19937_64 rng(1);
    const auto s = operadkit::gauss_map(operadkit::random_points(3, 5, rng));
    const auto good = scratch("good.json");
    write_file(good, s.to_json().dump());
    const Run ok = run("geom check --input '" + good.string() + "' --tol 1e-9");
    REQUIRE(ok.code == 0);
    const json j = json::parse(ok.out);
    check_header(j, "geom check");
    CHECK(j["report"]["max_residual"].get<double>() <= 1e-9);

    auto bent = s;
    bent.u.at(1, 2) = operadkit::basis_vector(3, 0);
    bent.u.at(2, 3) = operadkit::basis_vector(3, 1);
    bent.u.at(1, 3) = -operadkit::basis_vector(3, 2);
    const auto bad = scratch("bad.json");
    write_file(bad, bent.to_json().dump());
    const Run fail = run("geom check --input '" + bad.string() + "'");
    CHECK(fail.code == 1);
    CHECK_FALSE(json::parse(fail.out)["report"]["violations"].empty());

    const auto junk = scratch("junk.json");
    write_file(junk, "{\"m\": 3, \"n\": ");
    CHECK(run("geom check --input '" + junk.string() + "'").code == 2);
}

TEST_CASE("geom computations", "[cli]")
{
    const Run k = run("geom knot-eval --curve trefoil --times 4 --seed 7");
    REQUIRE(k.code == 0);
    const json j = json::parse(k.out);
    check_header(j, "geom knot-eval");
    CHECK(j["seed"] == 7);

    const Run d = run("geom disks-compare --tree \"(* (* *))\" --t-min 1e-6");
    REQUIRE(d.code == 0);
    const json dj = json::parse(d.out);
    CHECK(dj.dump().find("distance_at_t_min") != std::string::npos);

    CHECK(run("geom compose --tree \"((* *) (* * *))\" --m 4").code == 0);
    CHECK(run("geom compose --tree \"(* (*\"").code == 2);
}

TEST_CASE("artifacts are reproducible", "[cli]")
{
    for (const std::string args : {"geom knot-eval --curve trefoil --times 5 --seed 11",
                                   "verify geometry --trials 20 --seed 5", "hh --degree 3 --max-p 4"}) {
        const Run a = run(args), b = run(args), c = run("--threads 2 " + args);
        INFO(args);
        CHECK(a.code == 0);
        CHECK(a.out == b.out);
        CHECK(a.out == c.out);
    }
    CHECK(run("geom knot-eval --times 5 --seed 11").out != run("geom knot-eval --times 5 --seed 12").out);

    const json t = json::parse(run("--timings verify s2-iso --max-level 3").out);
    CHECK(t.contains("seconds"));
}

TEST_CASE("output locations", "[cli]")
{
    const auto dir = scratch("out");
    std::filesystem::create_directories(dir);
    const Run r = run("verify s2-iso --max-level 3", "OPERADKIT_OUTPUT_DIR='" + dir.string() + "'");
    REQUIRE(r.code == 0);
    std::ifstream in(dir / "verify-s2-iso.json");
    std::stringstream body;
    body << in.rdbuf();
    CHECK(body.str() == r.out);

    const auto explicit_path = scratch("table.json");
    const Run e = run("hh --degree 2 --max-p 3 -o '" + explicit_path.string() + "'");
    REQUIRE(e.code == 0);
    std::ifstream in2(explicit_path);
    std::stringstream body2;
    body2 << in2.rdbuf();
    CHECK(body2.str() == e.out);
}
