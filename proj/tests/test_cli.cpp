#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "selfsim/core.hpp"
#include "selfsim/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace selfsim;

namespace {

int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + (env.empty() ? "" : " ") + std::string(SELFSIM_CLI) + " " + args + " >cli_stdout.txt 2>cli_stderr.txt";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

fs::path fresh(const std::string& name) {
    const fs::path d = fs::path("cli_runs") / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

void write_farfield(const fs::path& p, int n) {
    const auto prof = reference_profile(ReferenceKind::FarField, 0.01, 100.0);
    std::vector<double> g;
    for (int i = 0; i < n; ++i) g.push_back(0.01 * std::pow(1e4, i / double(n - 1)));
    std::ofstream f(p);
    io::write_profile_csv(f, prof, g);
}

}  // namespace

TEST_CASE("constants are reproducible") {
    const auto a = fresh("const_a"), b = fresh("const_b");
    REQUIRE(run("--out " + a.string() + " constants") == 0);
    REQUIRE(run("constants", "SELFSIM_OUT_DIR=" + b.string()) == 0);
    const auto sa = slurp(a / "hypergeom.json");
    CHECK(sa == slurp(b / "hypergeom.json"));
    const auto j = json::parse(sa);
    CHECK(j["c1"].get<double>() > 0.0);
    CHECK(j["theta0"].get<double>() == doctest::Approx(3.8643).epsilon(1e-4));
    CHECK(j["cross_check_delta"].get<double>() <= 1e-6);
}

TEST_CASE("usage errors") {
    CHECK(run("--no-such-flag constants") == 64);
    CHECK(run("") == 64);
    CHECK(run("match --k-range 5..3") == 64);
    CHECK(run("match --k-range x") == 64);
    CHECK(run("match --y0-target 0.5") == 64);
}

TEST_CASE("verify exit codes") {
    const auto d = fresh("verify");
    write_farfield(d / "ff.csv", 200);
    CHECK(run("verify " + (d / "ff.csv").string()) == 0);
    CHECK(load("cli_stdout.txt")["passed"] == true);
    CHECK(run("verify " + (d / "ff.csv").string() + " --expect-intersections 2") == 1);
    write_farfield(d / "short.csv", 10);
    CHECK(run("verify " + (d / "short.csv").string()) == 65);
    {
        std::ofstream f(d / "broken.csv");
        f << "y,rho,u\n1,1\n";
    }
    CHECK(run("verify " + (d / "broken.csv").string()) == 65);
    CHECK(run("verify " + (d / "missing.csv").string()) == 65);
}

TEST_CASE("isothermal tables") {
    const auto a = fresh("iso_a"), b = fresh("iso_b");
    REQUIRE(run("--out " + a.string() + " isothermal") == 0);
    REQUIRE(run("--out " + b.string() + " isothermal --ymax 1e5") == 0);
    std::istringstream csv(slurp(a / "isothermal.csv"));
    std::string header, row;
    std::getline(csv, header);
    std::getline(csv, row);
    CHECK(header == "y,Q,eQ,ustar,v1,v2");
    const double y = std::stod(row.substr(0, row.find(',')));
    double ustar = 0.0;
    {
        std::istringstream r(row);
        std::string f;
        for (int i = 0; i < 4; ++i) std::getline(r, f, ',');
        ustar = std::stod(f);
    }
    CHECK(ustar / y == doctest::Approx(-2.0 / 3.0).epsilon(1e-6));
    const double c2a = load(a / "isothermal.json")["c2"].get<double>();
    const double c2b = load(b / "isothermal.json")["c2"].get<double>();
    CHECK(std::fabs(c2a - c2b) <= 5e-4 * c2a);
}

TEST_CASE("matched profiles and their verification") {
    const auto d = fresh("match");
    REQUIRE(run("--out " + d.string() + " match --k-range 3..4") == 0);
    const auto s = load(d / "summary.json");
    REQUIRE(s["roots"].size() == 2);
    CHECK(s["roots"][0]["intersections"] == 4);
    CHECK(s["roots"][1]["intersections"] == 5);
    CHECK(s["roots"][0]["sonic_count"] == 1);
    CHECK(s["failures"].empty());
    const auto csv = (d / "profile_3.csv").string(), side = (d / "profile_3.json").string();
    CHECK(run("verify " + csv + " --sidecar " + side + " --expect-intersections 4 --expect-sonic 1") == 0);
    const auto rep = load("cli_stdout.txt");
    CHECK(rep["velocity"]["exterior_min_slope"].get<double>() >= 0.5);
    CHECK(rep["velocity"]["interior_max_speed"].get<double>() <= 0.5);
    CHECK(run("verify " + csv + " --expect-intersections 5") == 1);
}

TEST_CASE("unreachable k exits with no roots") {
    const auto d = fresh("floor");
    CHECK(run("--out " + d.string() + " match --k-range 50..51") == 3);
    const auto s = load(d / "summary.json");
    CHECK(s["roots"].empty());
    REQUIRE(s["failures"].size() == 2);
    CHECK(s["failures"][0]["reason"] == "PrecisionFloor");
}

TEST_CASE("Larson-Penston profile") {
    const auto d = fresh("lp");
    REQUIRE(run("--out " + d.string() + " lp") == 0);
    const auto j = load(d / "lp_profile.json");
    CHECK(j["y_star"].get<double>() > 2.0);
    CHECK(j["y_star"].get<double>() < 3.0);
    CHECK(j["intersections"] == 1);
    CHECK(j["sonic_count"] == 1);
    CHECK(run("verify " + (d / "lp_profile.csv").string() + " --expect-intersections 1 --expect-sonic 1") == 0);
}

TEST_CASE("configuration dump round trip") {
    const auto d = fresh("config");
    REQUIRE(run("--dump-config --out " + d.string() + " match --k-range 3..3") == 0);
    const auto first = slurp("cli_stdout.txt");
    {
        std::ofstream f(d / "run.toml");
        f << first;
    }
    REQUIRE(run("--config " + (d / "run.toml").string() + " --dump-config match") == 0);
    CHECK(slurp("cli_stdout.txt") == first);
    REQUIRE(run("--config " + (d / "run.toml").string() + " match") == 0);
    CHECK(load(d / "summary.json")["roots"].size() == 1);
}
