// selfsim_cli: isothermal tables, far-field constants, matched profiles, LP profile, verification.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "selfsim/analysis.hpp"
#include "selfsim/errors.hpp"
#include "selfsim/hypergeom.hpp"
#include "selfsim/io.hpp"
#include "selfsim/isothermal.hpp"
#include "selfsim/matcher.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace selfsim;

namespace {

constexpr int kExitFailedChecks = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitNoRoot = 3;
constexpr int kExitUsage = 64;
constexpr int kExitData = 65;

struct RunConfig {
    std::string out_dir = ".";
    double rel_tol = 1e-12;
    double abs_tol = 1e-14;
    // isothermal
    double iso_ymax = 1e6;
    int iso_per_decade = 50;
    // match
    std::string k_range = "3..5";
    std::optional<double> y0;
    double y0_target = 0.015;
    double ext_ymax = 1e3;
    int csv_per_decade = 100;
    // verify
    std::string csv;
    std::string sidecar;
    double verify_tol = 1e-6;
    std::optional<int> expect_intersections;
    std::optional<int> expect_sonic;
};

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
}

std::string profile_csv(const RadialProfile& p, int per_decade) {
    std::ostringstream os;
    io::write_profile_csv(os, p, analysis::sample_grid(p, per_decade));
    return os.str();
}

matcher::MatchConfig match_config(const RunConfig& c) {
    matcher::MatchConfig m;
    m.integrator.rel_tol = c.rel_tol;
    m.integrator.abs_tol = c.abs_tol;
    m.y_max = c.ext_ymax;
    return m;
}

int cmd_isothermal(const RunConfig& c) {
    auto cfg = iso::IsothermalTables::default_config();
    const iso::IsothermalTables t(c.iso_ymax, cfg);
    std::vector<std::vector<double>> rows;
    const int n = static_cast<int>(std::ceil(c.iso_per_decade * std::log10(c.iso_ymax / iso::kLaunchY)));
    for (int i = 0; i <= n; ++i) {
        const double y = i == n ? c.iso_ymax : iso::kLaunchY * std::pow(c.iso_ymax / iso::kLaunchY, i / double(n));
        const auto p = t(y);
        rows.push_back({y, p.Q, p.eQ, p.ustar, p.v1, p.v2});
    }
    std::ostringstream csv;
    io::write_table_csv(csv, {"y", "Q", "eQ", "ustar", "v1", "v2"}, rows);
    write_file(fs::path(c.out_dir) / "isothermal.csv", csv.str());
    auto fit = [](const iso::ConstantFit& f) { return json{{"rms", f.rms}, {"corrected_basis", f.corrected}}; };
    double off = std::fmod(t.ustar_fit.d - t.density_fit.d, 2.0 * kPi);
    if (off < 0.0) off += 2.0 * kPi;
    json j{{"c2", t.density_fit.c},
           {"d2", t.density_fit.d},
           {"c3", t.v1_fit.c},
           {"d3", t.v1_fit.d},
           {"c4", t.v2_fit.c},
           {"d4", t.v2_fit.d},
           {"ustar_amplitude", t.ustar_fit.c},
           {"ustar_phase_offset", off},
           {"y_max", c.iso_ymax},
           {"fit_residuals",
            {{"density", fit(t.density_fit)}, {"ustar", fit(t.ustar_fit)}, {"v1", fit(t.v1_fit)}, {"v2", fit(t.v2_fit)}}}};
    write_file(fs::path(c.out_dir) / "isothermal.json", io::dump(j));
    return 0;
}

int cmd_constants(const RunConfig& c) {
    const auto k = hypergeom::build_constants();
    const auto x = hypergeom::cross_check_constants(k);
    const double delta = std::max(x.max_delta, x.phom_path_delta);
    json j{{"theta0", k.theta0}, {"mu3", k.mu3}, {"mu4", k.mu4}, {"mu5", k.mu5}, {"mu6", k.mu6},
           {"c1", k.c1},         {"d1", k.d1},   {"cross_check_delta", delta}};
    write_file(fs::path(c.out_dir) / "hypergeom.json", io::dump(j));
    if (delta > 1e-6) {
        std::cerr << "cross-check discrepancy " << delta << " above 1e-6\n";
        return kExitNumerical;
    }
    return 0;
}

std::pair<int, int> parse_k_range(const std::string& s) {
    const auto p = s.find("..");
    if (p == std::string::npos) throw CLI::ValidationError("--k-range", "expected a..b");
    try {
        std::size_t u1 = 0, u2 = 0;
        const int a = std::stoi(s.substr(0, p), &u1);
        const int b = std::stoi(s.substr(p + 2), &u2);
        if (u1 != p || u2 != s.size() - p - 2 || a < 0 || b < a) throw std::invalid_argument(s);
        return {a, b};
    } catch (const std::logic_error&) {
        throw CLI::ValidationError("--k-range", "expected non-negative integers a..b with a <= b");
    }
}

json profile_meta(const RadialProfile& p, const analysis::VerificationReport& r) {
    json j;
    if (p.epsilon) j["epsilon"] = *p.epsilon;
    if (p.lambda) j["lambda"] = *p.lambda;
    if (p.y0) j["y0"] = *p.y0;
    if (p.y_star) j["y_star"] = *p.y_star;
    j["intersections"] = r.intersections ? r.intersections->count : -1;
    j["sonic_count"] = r.sonic_points.size();
    j["residual_max"] = r.residual.max_scaled;
    j["report"] = io::report_to_json(r);
    return j;
}

int cmd_match(const RunConfig& c) {
    const auto [k0, k1] = parse_k_range(c.k_range);
    const matcher::MatchContext ctx(match_config(c));
    json summary;
    double y0 = 0.0;
    if (c.y0) {
        y0 = *c.y0;
        if (!(y0 > 0.0 && y0 < 1.0)) throw CLI::ValidationError("--y0", "must lie in (0, 1)");
        summary["y0_policy"] = "explicit";
    } else {
        const auto ch = matcher::choose_y0(ctx.d1(), c.y0_target);
        y0 = ch.y0;
        summary["y0_policy"] = "auto";
        summary["y0_m"] = ch.m;
        summary["y0_deviation"] = ch.deviation;
    }
    summary["y0"] = y0;
    json roots = json::array(), failures = json::array();
    for (int k = k0; k <= k1; ++k) {
        try {
            const auto m = matcher::find_lambda_k(ctx, k, y0);
            const std::string stem = "profile_" + std::to_string(k);
            write_file(fs::path(c.out_dir) / (stem + ".csv"), profile_csv(m.profile, c.csv_per_decade));
            auto meta = profile_meta(m.profile, m.report);
            meta["k"] = k;
            write_file(fs::path(c.out_dir) / (stem + ".json"), io::dump(meta));
            roots.push_back({{"k", k},
                             {"lambda_k", m.lambda},
                             {"epsilon_k", m.epsilon},
                             {"epsilon_predicted", m.epsilon_predicted},
                             {"y_star", m.y_star},
                             {"intersections", m.intersections},
                             {"sonic_count", m.sonic_count},
                             {"residual_max", m.report.residual.max_scaled},
                             {"bracket_inflated", m.bracket_inflated},
                             {"exterior_min_slope", m.exterior_min_slope},
                             {"interior_max_speed", m.interior_max_speed},
                             {"verified", m.report.passed}});
        } catch (const NoBracket& e) {
            failures.push_back({{"k", k}, {"reason", "NoBracket"}, {"message", e.what()}});
        } catch (const PrecisionFloor& e) {
            failures.push_back({{"k", k}, {"reason", "PrecisionFloor"}, {"message", e.what()}});
        } catch (const NumericalError& e) {
            failures.push_back({{"k", k}, {"reason", "NumericalError"}, {"message", e.what()}});
        }
    }
    summary["roots"] = roots;
    summary["failures"] = failures;
    write_file(fs::path(c.out_dir) / "summary.json", io::dump(summary));
    for (const auto& f : failures)
        std::cerr << "k=" << f["k"] << ": " << f["reason"].get<std::string>() << ": " << f["message"].get<std::string>()
                  << "\n";
    return roots.empty() ? kExitNoRoot : 0;
}

int cmd_lp(const RunConfig& c) {
    matcher::LarsonPenstonResult lp;
    try {
        lp = matcher::larson_penston_solve(match_config(c));
    } catch (const NoBracket& e) {
        std::cerr << e.what() << "\n";
        return kExitNoRoot;
    }
    const auto r = analysis::verify(lp.profile, 1e-8, 1, 1);
    write_file(fs::path(c.out_dir) / "lp_profile.csv", profile_csv(lp.profile, c.csv_per_decade));
    auto meta = profile_meta(lp.profile, r);
    meta["rho0"] = lp.rho0;
    meta["junction_mismatch"] = lp.mismatch;
    write_file(fs::path(c.out_dir) / "lp_profile.json", io::dump(meta));
    return 0;
}

int cmd_verify(const RunConfig& c) {
    std::ifstream f(c.csv);
    if (!f) throw io::DataFormatError("cannot open " + c.csv);
    const auto table = io::read_profile_csv(f);
    auto p = io::profile_from_table(table);
    if (!c.sidecar.empty()) {
        std::ifstream s(c.sidecar);
        if (!s) throw io::DataFormatError("cannot open " + c.sidecar);
        json m;
        try {
            m = json::parse(s);
        } catch (const json::exception& e) {
            throw io::DataFormatError(std::string("sidecar: ") + e.what());
        }
        if (m.contains("y0")) p.y0 = m["y0"].get<double>();
        if (m.contains("lambda")) p.lambda = m["lambda"].get<double>();
        if (m.contains("epsilon")) p.epsilon = m["epsilon"].get<double>();
        if (m.contains("y_star")) p.y_star = m["y_star"].get<double>();
    }
    const auto r = analysis::verify(p, c.verify_tol, c.expect_intersections, c.expect_sonic);
    std::cout << io::dump(io::report_to_json(r));
    return r.passed ? 0 : kExitFailedChecks;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-similar collapse profiles: isothermal tables, far-field constants, matched family, LP"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    app.set_config("--config", "", "TOML run configuration; flags override it");
    RunConfig c;
    app.add_option("--out", c.out_dir, "output directory")->envname("SELFSIM_OUT_DIR");
    app.add_option("--rel-tol", c.rel_tol, "integrator relative tolerance");
    app.add_option("--abs-tol", c.abs_tol, "integrator absolute tolerance");
    bool dump_config = false;
    app.add_flag("--dump-config", dump_config, "print the resolved configuration and exit")->configurable(false);

    auto* iso_cmd = app.add_subcommand("isothermal", "ground state tables and fitted constants");
    iso_cmd->add_option("--ymax", c.iso_ymax, "outer radius")->check(CLI::Range(1e3, 1e8));
    iso_cmd->add_option("--per-decade", c.iso_per_decade, "rows per decade")->check(CLI::Range(1, 10000));

    app.add_subcommand("constants", "far-field connection constants");

    auto* match_cmd = app.add_subcommand("match", "matched profiles for a range of k");
    match_cmd->add_option("--k-range", c.k_range, "a..b");
    match_cmd->add_option("--y0", c.y0, "interface radius (default: automatic)");
    match_cmd->add_option("--y0-target", c.y0_target, "scale for the automatic interface radius")
        ->check(CLI::Range(1e-3, 1e-1));
    match_cmd->add_option("--ymax", c.ext_ymax, "outer radius of the exterior")->check(CLI::Range(10.0, 1e6));
    match_cmd->add_option("--per-decade", c.csv_per_decade, "CSV rows per decade")->check(CLI::Range(10, 10000));

    auto* lp_cmd = app.add_subcommand("lp", "Larson-Penston profile");
    lp_cmd->add_option("--ymax", c.ext_ymax, "outer radius")->check(CLI::Range(10.0, 1e6));
    lp_cmd->add_option("--per-decade", c.csv_per_decade, "CSV rows per decade")->check(CLI::Range(10, 10000));

    auto* verify_cmd = app.add_subcommand("verify", "check a profile CSV (y,rho,u)");
    verify_cmd->add_option("csv", c.csv, "profile CSV")->required();
    verify_cmd->add_option("--sidecar", c.sidecar, "JSON with y0/lambda/epsilon/y_star");
    verify_cmd->add_option("--tol", c.verify_tol, "scaled residual tolerance");
    verify_cmd->add_option("--expect-intersections", c.expect_intersections);
    verify_cmd->add_option("--expect-sonic", c.expect_sonic);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        if (rc == 0) return 0;
        std::cerr << app.help();
        return kExitUsage;
    }
    if (dump_config) {
        std::cout << app.config_to_str(true, false);
        return 0;
    }
    try {
        if (!c.out_dir.empty()) fs::create_directories(c.out_dir);
        if (*iso_cmd) return cmd_isothermal(c);
        if (app.got_subcommand("constants")) return cmd_constants(c);
        if (*match_cmd) return cmd_match(c);
        if (*lp_cmd) return cmd_lp(c);
        if (*verify_cmd) return cmd_verify(c);
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n" << app.help();
        return kExitUsage;
    } catch (const io::DataFormatError& e) {
        std::cerr << "data format: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitUsage;
}
