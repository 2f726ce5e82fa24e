#include "doctest.h"

#include <cmath>
#include <sstream>

#include "selfsim/analysis.hpp"
#include "selfsim/core.hpp"
#include "selfsim/io.hpp"

using namespace selfsim;

namespace {

std::string farfield_csv(int n) {
    const auto p = reference_profile(ReferenceKind::FarField, 0.01, 100.0);
    std::vector<double> g;
    for (int i = 0; i < n; ++i) g.push_back(0.01 * std::pow(1e4, i / double(n - 1)));
    std::ostringstream os;
    io::write_profile_csv(os, p, g);
    return os.str();
}

}  // namespace

TEST_CASE("number formatting round-trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) CHECK(std::stod(io::fmt17(v)) == v);
}

TEST_CASE("profile csv round trip") {
    std::istringstream is(farfield_csv(81));
    const auto t = io::read_profile_csv(is);
    REQUIRE(t.y.size() == 81);
    CHECK(t.rho.front() == 1e4);
    CHECK(t.u[40] == 0.0);
    const auto p = io::profile_from_table(t);
    for (double y : {0.013, 0.5, 1.0, 7.7, 90.0}) {
        CHECK(p(y).rho * y * y == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(p(y).drho * y * y * y == doctest::Approx(-2.0).epsilon(1e-9));
    }
    const auto r = analysis::verify(p, 1e-6);
    CHECK(r.passed);
}

TEST_CASE("tabulated profile interpolates a curved solution") {
    const auto f = reference_profile(ReferenceKind::Friedman, 0.01, 100.0);
    io::ProfileTable t;
    for (int i = 0; i <= 160; ++i) {
        const double y = 0.01 * std::pow(1e4, i / 160.0);
        t.y.push_back(y);
        t.rho.push_back(f(y).rho);
        t.u.push_back(f(y).u);
    }
    const auto p = io::profile_from_table(t);
    for (double y : {0.02, 3.3, 50.0}) {
        CHECK(p(y).u == doctest::Approx(-2.0 * y / 3.0).epsilon(1e-10));
        CHECK(p(y).du == doctest::Approx(-2.0 / 3.0).epsilon(1e-6));
    }
}

TEST_CASE("malformed csv is rejected") {
    auto rejects = [](const std::string& s) {
        std::istringstream is(s);
        CHECK_THROWS_AS(io::read_profile_csv(is), io::DataFormatError);
    };
    const auto good = farfield_csv(20);
    rejects("");
    rejects("x,rho,u\n1,1,0\n");
    rejects(farfield_csv(10));
    rejects(good + "200,1e-4\n");
    rejects(good + "200,abc,0\n");
    rejects(good + "50,1e-4,0\n");
    rejects(good + "200,-1,0\n");
    rejects(good + "200,nan,0\n");
    std::istringstream crlf("y,rho,u\r\n" + good.substr(good.find('\n') + 1));
    CHECK(io::read_profile_csv(crlf).y.size() == 20);
}

TEST_CASE("report serialisation") {
    const auto r = analysis::verify(reference_profile(ReferenceKind::Friedman, 0.01, 100.0), 1e-8, 1, 1);
    const auto j = io::report_to_json(r);
    CHECK(j["passed"] == true);
    CHECK(j["intersections"]["count"] == 1);
    CHECK(j["sonic_points"][0]["class"] == "Hunter");
    CHECK(j["sonic_count"] == 1);
    const auto s = io::dump(j);
    CHECK(s.back() == '\n');
    CHECK(nlohmann::json::parse(s) == j);
    CHECK(io::dump(j) == s);
}
