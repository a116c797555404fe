#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "fermi/genfunc.hpp"

namespace fermi::report {

using nlohmann::json;

// RFC-4180 table; fields containing a comma, quote or newline are quoted
std::string csv(const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows);

// shortest round-trip representation; "nan" / "inf" / "-inf" for non-finite values
std::string number(double x);

// n, rhs_re, rhs_im, lhs_re, abs_err, ratio
std::string to_csv(const ConvergenceReport& r);
// the CSV fields plus lhs_im and the report metadata
json to_json(const ConvergenceReport& r);

// module tolerance constants embedded in every report
json tolerances();

void write_text(const std::string& path, const std::string& text);

}  // namespace fermi::report
