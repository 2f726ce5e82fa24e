#include "selfsim/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>

namespace selfsim::io {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_table_csv(std::ostream& os, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << fmt17(r[i]);
        os << '\n';
    }
}

void write_profile_csv(std::ostream& os, const RadialProfile& p, const std::vector<double>& grid) {
    std::vector<std::vector<double>> rows;
    rows.reserve(grid.size());
    for (double y : grid) {
        const auto pt = p(y);
        rows.push_back({y, pt.rho, pt.u});
    }
    write_table_csv(os, {"y", "rho", "u"}, rows);
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_number(const std::string& s, std::size_t line) {
    std::size_t b = s.find_first_not_of(" \t");
    std::size_t e = s.find_last_not_of(" \t");
    if (b == std::string::npos) throw DataFormatError("empty field on line " + std::to_string(line));
    double v = 0.0;
    const char* first = s.data() + b;
    const char* last = s.data() + e + 1;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v))
        throw DataFormatError("bad number '" + s + "' on line " + std::to_string(line));
    return v;
}

}  // namespace

ProfileTable read_profile_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw DataFormatError("empty file");
    const auto head = split(line);
    if (head.size() < 3 || head[0] != "y" || head[1] != "rho" || head[2] != "u")
        throw DataFormatError("header must start with y,rho,u");
    ProfileTable t;
    std::size_t n = 1;
    while (std::getline(is, line)) {
        ++n;
        if (line.empty() || line == "\r") continue;
        const auto f = split(line);
        if (f.size() != head.size())
            throw DataFormatError("line " + std::to_string(n) + " has " + std::to_string(f.size()) + " fields, expected " +
                                  std::to_string(head.size()));
        const double y = parse_number(f[0], n), rho = parse_number(f[1], n), u = parse_number(f[2], n);
        if (!(y > 0.0)) throw DataFormatError("y must be positive (line " + std::to_string(n) + ")");
        if (!t.y.empty() && !(y > t.y.back()))
            throw DataFormatError("y not strictly increasing at line " + std::to_string(n));
        if (!(rho > 0.0)) throw DataFormatError("rho must be positive (line " + std::to_string(n) + ")");
        t.y.push_back(y);
        t.rho.push_back(rho);
        t.u.push_back(u);
    }
    if (t.y.size() < 16) throw DataFormatError("need at least 16 data rows");
    return t;
}

namespace {

// Lagrange weights (value and derivative) on nodes x[0..m) at s
void lagrange_weights(const double* x, int m, double s, double* w, double* dw) {
    for (int j = 0; j < m; ++j) {
        double l = 1.0, dl = 0.0;
        for (int k = 0; k < m; ++k) {
            if (k == j) continue;
            const double inv = 1.0 / (x[j] - x[k]);
            dl = dl * (s - x[k]) * inv + l * inv;
            l *= (s - x[k]) * inv;
        }
        w[j] = l;
        dw[j] = dl;
    }
}

}  // namespace

RadialProfile profile_from_table(const ProfileTable& t, int points) {
    if (points < 2 || points > 32 || static_cast<std::size_t>(points) > t.y.size())
        throw DataFormatError("interpolation stencil larger than the table");
    auto s = std::make_shared<std::vector<double>>(t.y.size());
    auto lr = std::make_shared<std::vector<double>>(t.y.size());
    auto u = std::make_shared<std::vector<double>>(t.u);
    for (std::size_t i = 0; i < t.y.size(); ++i) {
        (*s)[i] = std::log(t.y[i]);
        (*lr)[i] = std::log(t.rho[i]);
    }
    RadialProfile p;
    p.add_segment({t.y.front(), t.y.back(),
                   [s, lr, u, points](double y) {
                       const double x = std::log(y);
                       const auto n = static_cast<std::ptrdiff_t>(s->size());
                       const auto hi = std::upper_bound(s->begin(), s->end(), x) - s->begin();
                       const std::ptrdiff_t i0 = std::clamp<std::ptrdiff_t>(hi - points / 2, 0, n - points);
                       double w[32], dw[32];
                       lagrange_weights(s->data() + i0, points, x, w, dw);
                       double f = 0.0, df = 0.0, g = 0.0, dg = 0.0;
                       for (int j = 0; j < points; ++j) {
                           f += w[j] * (*lr)[static_cast<std::size_t>(i0 + j)];
                           df += dw[j] * (*lr)[static_cast<std::size_t>(i0 + j)];
                           g += w[j] * (*u)[static_cast<std::size_t>(i0 + j)];
                           dg += dw[j] * (*u)[static_cast<std::size_t>(i0 + j)];
                       }
                       const double rho = std::exp(f);
                       return ProfilePoint{rho, g, rho * df / y, dg / y};
                   },
                   "table"});
    return p;
}

nlohmann::json report_to_json(const analysis::VerificationReport& r) {
    using nlohmann::json;
    json j;
    j["passed"] = r.passed;
    j["failures"] = r.failures;
    j["residual"] = {{"max_scaled", r.residual.max_scaled},
                     {"max_relative", r.residual.max_relative},
                     {"y_at_max", r.residual.y_at_max},
                     {"tolerance", r.residual_tolerance}};
    if (r.intersections) {
        j["intersections"] = {{"count", r.intersections->count},
                              {"roots", r.intersections->roots},
                              {"identically_zero", r.intersections->identically_zero},
                              {"tail_value", r.intersections->tail_value}};
    } else {
        j["intersections"] = {{"error", r.intersection_error}};
    }
    json sp = json::array();
    for (const auto& s : r.sonic_points)
        sp.push_back({{"y", s.y},
                      {"class", analysis::sonic_class_name(s.cls)},
                      {"degenerate", s.degenerate},
                      {"dev_hunter", s.dev_hunter},
                      {"dev_lp", s.dev_lp}});
    j["sonic_points"] = sp;
    j["sonic_count"] = r.sonic_points.size();
    json v = json::object();
    if (r.velocity.exterior_min_slope) v["exterior_min_slope"] = *r.velocity.exterior_min_slope;
    if (r.velocity.interior_max_speed) v["interior_max_speed"] = *r.velocity.interior_max_speed;
    j["velocity"] = v;
    return j;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace selfsim::io
