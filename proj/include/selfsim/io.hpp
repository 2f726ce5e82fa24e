#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "selfsim/analysis.hpp"
#include "selfsim/core.hpp"

namespace selfsim::io {

/// Malformed input file (bad header, short row, non-increasing y, non-positive rho).
class DataFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// %.17g rendering.
std::string fmt17(double v);

/// Rows of (y, rho, u) with a "y,rho,u" header.
void write_profile_csv(std::ostream& os, const RadialProfile& p, const std::vector<double>& grid);

/// Generic table with a header line.
void write_table_csv(std::ostream& os, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

struct ProfileTable {
    std::vector<double> y, rho, u;
};

/// Parse and validate a profile CSV; throws DataFormatError.
ProfileTable read_profile_csv(std::istream& is);

/// Dense profile from tabulated data: local Lagrange interpolation in log y on `points` nearest
/// nodes (at most 32), derivatives from the same stencil.
RadialProfile profile_from_table(const ProfileTable& t, int points = 8);

/// Report as JSON (object keys sorted).
nlohmann::json report_to_json(const analysis::VerificationReport& r);

/// Indented dump with a trailing newline.
std::string dump(const nlohmann::json& j);

}  // namespace selfsim::io
