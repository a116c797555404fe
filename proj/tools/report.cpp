#include "report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "fermi/covariance.hpp"
#include "fermi/fock.hpp"
#include "fermi/lattice.hpp"

namespace fermi::report {

namespace {

std::string quoted(const std::string& f) {
  if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
  std::string out = "\"";
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

std::string csv(const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  const auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) out += (i ? "," : "") + quoted(fields[i]);
    out += "\r\n";
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

std::string number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string to_csv(const ConvergenceReport& r) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& row : r.rows)
    rows.push_back({std::to_string(row.n), number(row.rhs.real()), number(row.rhs.imag()),
                    number(row.lhs.real()), number(row.abs_err), number(row.ratio)});
  return csv({"n", "rhs_re", "rhs_im", "lhs_re", "abs_err", "ratio"}, rows);
}

json to_json(const ConvergenceReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"n", row.n},
                    {"rhs_re", row.rhs.real()},
                    {"rhs_im", row.rhs.imag()},
                    {"lhs_re", row.lhs.real()},
                    {"lhs_im", row.lhs.imag()},
                    {"abs_err", row.abs_err},
                    {"ratio", finite_or_null(row.ratio)}});
  return {{"rows", rows},
          {"beta", r.beta},
          {"s", r.s},
          {"model", r.model},
          {"seed", r.seed},
          {"path", fk_path_name(r.path)},
          {"monotone", r.monotone},
          {"empirical_order", finite_or_null(r.empirical_order)}};
}

json tolerances() {
  return {{"bound_slack", kBoundSlack},
          {"decay_rel_slack", kDecayRelSlack},
          {"grid_margin", kGridMargin},
          {"max_fock_modes", kMaxFockModes},
          {"max_grassmann_generators", kMaxGenerators},
          {"wick_max_generators", kWickMaxGenerators},
          {"wick_max_terms", kWickMaxTerms},
          {"mu_grid", {{"step", kMuStep}, {"steps", kMuSteps}}}};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Errc::InvalidInput, "cannot write '" + path + "'");
  out << text;
  require(out.good(), Errc::InvalidInput, "write to '" + path + "' failed");
}

}  // namespace fermi::report
