// fermi: command-line driver for the generating-function, covariance and decay computations.
//
//   fermi genfunc    --model M [--beta --s --n-list --path]
//   fermi covariance [--model M] [--beta --n-list --seed]
//   fermi pfbound    [--model M] [--beta --n-list --samples --seed]
//   fermi decay      --model M [--beta --upsilon --epsilon --gimel --grid-u1 --grid-u2]
//   fermi verify     --model M [--seed --samples]
//
// Exit codes: 0 ok, 1 a checked inequality or agreement failed, 2 bad input.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <utility>

#include <CLI11.hpp>

#include "fermi/covariance.hpp"
#include "fermi/genfunc.hpp"
#include "fermi/lattice.hpp"
#include "fermi/numkernel.hpp"
#include "fermi/random.hpp"
#include "report.hpp"

namespace {

using namespace fermi;
using report::json;

struct RunConfig {
  std::string command;
  std::string model;
  double beta = 1.0;
  double s = 0.3;
  std::vector<int> n_list{4, 8, 16, 24};
  std::uint64_t seed = 7;
  std::string out = ".";
  std::string format = "json";
  int grid_u1 = 16;
  int grid_u2 = 64;
  int grid_alpha = 32;
  std::int64_t samples = 1000;
  std::optional<double> upsilon;
  double epsilon = 1.0;
  double gimel = 0.0;
  std::string path = "auto";
};

// agreement / inequality tolerances used by the suites
constexpr double kAgreeTol = 1e-9;
constexpr double kRealTol = 1e-10;
constexpr double kOrderMin = 0.8;
constexpr double kRelErrMax = 5e-2;

json config_json(const RunConfig& c) {
  json j = {{"command", c.command},
            {"model", c.model},
            {"beta", c.beta},
            {"s", c.s},
            {"n_list", c.n_list},
            {"seed", c.seed},
            {"format", c.format},
            {"grid_u1", c.grid_u1},
            {"grid_u2", c.grid_u2},
            {"grid_alpha", c.grid_alpha},
            {"samples", c.samples},
            {"epsilon", c.epsilon},
            {"gimel", c.gimel},
            {"path", c.path}};
  j["upsilon"] = c.upsilon ? json(*c.upsilon) : json(nullptr);
  return j;
}

void validate(const RunConfig& c) {
  const auto bad = [](const std::string& what) { throw Error(Errc::InvalidInput, what); };
  if (!(c.beta > 0) || !std::isfinite(c.beta)) bad("--beta must be positive");
  if (!std::isfinite(c.s)) bad("--s must be finite");
  if (c.n_list.empty()) bad("--n-list must not be empty");
  for (std::size_t i = 0; i < c.n_list.size(); ++i) {
    if (c.n_list[i] < 2) bad("--n-list entries must be >= 2");
    if (i && c.n_list[i] <= c.n_list[i - 1]) bad("--n-list must be strictly increasing");
  }
  if (c.grid_u1 < 16) bad("--grid-u1 must be >= 16");
  if (c.grid_u2 < 64) bad("--grid-u2 must be >= 64");
  if (c.grid_alpha < 16) bad("--grid-alpha must be >= 16");
  if (c.samples < 1) bad("--samples must be >= 1");
  if (!(c.epsilon > 0 && c.epsilon <= 1)) bad("--epsilon must lie in (0, 1]");
  if (!(c.gimel >= 0)) bad("--gimel must be >= 0");
  if (c.upsilon && !(*c.upsilon >= 0)) bad("--upsilon must be >= 0");
}

struct Check {
  std::string name;
  std::string status;  // pass, fail, skipped
  double value = 0;
  double tolerance = 0;
  std::string note;
};

json checks_json(const std::vector<Check>& cs) {
  json a = json::array();
  for (const auto& c : cs)
    a.push_back({{"name", c.name},
                 {"status", c.status},
                 {"value", std::isfinite(c.value) ? json(c.value) : json(report::number(c.value))},
                 {"tolerance", c.tolerance},
                 {"note", c.note}});
  return a;
}

std::string checks_csv(const std::vector<Check>& cs) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& c : cs)
    rows.push_back({c.name, c.status, report::number(c.value), report::number(c.tolerance), c.note});
  return report::csv({"name", "status", "value", "tolerance", "note"}, rows);
}

Check le(const std::string& name, double value, double tol, std::string note = {}) {
  return {name, value <= tol ? "pass" : "fail", value, tol, std::move(note)};
}
Check ge(const std::string& name, double value, double tol, std::string note = {}) {
  return {name, value >= tol ? "pass" : "fail", value, tol, std::move(note)};
}
Check skipped(const std::string& name, std::string why) {
  return {name, "skipped", 0, 0, std::move(why)};
}

struct Output {
  json body;
  std::string csv;
  std::vector<std::string> failures;
};

// --- model plumbing -----------------------------------------------------------------------------

struct ModelData {
  std::optional<LatticeModel> model;
  SelfDualOperator H;
  BasisProjection P;
  std::string description;
};

BasisProjection projection_for(const LatticeModel& m, const SelfDualOperator& H) {
  return m.gauge_invariant() ? canonical_lattice_projection(m) : diagonalizing_projection(H);
}

ModelData model_data(const RunConfig& c, bool required) {
  if (c.model.empty()) {
    if (required) throw Error(Errc::InvalidInput, c.command + " requires --model");
    Rng rng(c.seed);
    const SelfDualSpace sp = SelfDualSpace::canonical(2);
    SelfDualOperator H(sp, random_selfdual_hamiltonian(rng, sp, 1.0));
    return {std::nullopt, H, diagonalizing_projection(H), "random self-dual Hamiltonian, m=2"};
  }
  LatticeModel m = load_model(c.model);
  SelfDualOperator H = build_hamiltonian(m);
  BasisProjection P = projection_for(m, H);
  return {m, H, P, model_summary(m)};
}

FkPath parse_path(const std::string& p) {
  if (p == "literal") return FkPath::Literal;
  if (p == "wick") return FkPath::Wick;
  if (p == "ring") return FkPath::Ring;
  return FkPath::Auto;
}

// n from the list that pass the fine-grid rule; the rest are reported as skipped
std::vector<int> admissible_n(const SelfDualOperator& H, double beta, const std::vector<int>& ns,
                              std::vector<int>& dropped) {
  const double norm = numkernel::op_norm(H.H());
  std::vector<int> out;
  for (int n : ns) (n > kGridMargin * beta * norm ? out : dropped).push_back(n);
  return out;
}

// --- commands -----------------------------------------------------------------------------------

Output run_genfunc(const RunConfig& c) {
  const ModelData md = model_data(c, true);
  const LatticeModel& m = *md.model;
  const FockRep rep(md.P);
  const Mat W = box_observable(rep, m, m.interaction, m.L);
  const Mat K = box_observable(rep, m, m.observable, m.L);
  std::vector<int> dropped;
  const std::vector<int> ns = admissible_n(md.H, c.beta, c.n_list, dropped);
  if (ns.empty()) throw Error(Errc::GridTooCoarse, "no n in --n-list satisfies n > 1.01 beta ||H||");

  ConvergenceReport r = convergence_study(md.H, rep, W, K, c.beta, c.s, ns, parse_path(c.path));
  r.model = md.description;
  r.seed = c.seed;

  Output o;
  o.body = report::to_json(r);
  o.body["skipped_n"] = dropped;
  o.body["capacity_max_n"] = ns.back();
  o.body["log_moment_generating"] =
      log_moment_generating(m, m.interaction, m.observable, c.beta, c.s, m.L, m.L, m.L);
  for (const auto& row : r.rows)
    if (std::abs(row.rhs.imag()) > kRealTol * std::max(1.0, std::abs(row.rhs)))
      o.failures.push_back("rhs at n=" + std::to_string(row.n) + " is not real");
  o.csv = report::to_csv(r);
  return o;
}

Output run_covariance(const RunConfig& c) {
  const ModelData md = model_data(c, false);
  Output o;
  json rows = json::array();
  std::vector<std::vector<std::string>> csv_rows;
  std::vector<int> dropped;
  for (int n : admissible_n(md.H, c.beta, c.n_list, dropped)) {
    const TimeGrid grid = TimeGrid::make(n, c.beta);
    const CovarianceOperator direct = covariance_direct(md.H, md.P, grid);
    const CovarianceOperator closed = covariance_closed_form_full(md.H, md.P, grid);
    const double diff = numkernel::max_abs(direct.matrix() - closed.matrix());
    const double res = direct.selfduality_residual();
    rows.push_back({{"n", n}, {"n_beta", grid.n_beta}, {"max_abs_diff", diff},
                    {"selfduality_residual", res}});
    csv_rows.push_back({std::to_string(n), std::to_string(grid.n_beta), report::number(diff),
                        report::number(res)});
    if (diff > kAgreeTol) o.failures.push_back("closed form differs at n=" + std::to_string(n));
  }
  o.body = {{"model", md.description}, {"rows", rows}, {"skipped_n", dropped},
            {"tolerance", kAgreeTol}};
  o.csv = report::csv({"n", "n_beta", "max_abs_diff", "selfduality_residual"}, csv_rows);
  return o;
}

Output run_pfbound(const RunConfig& c) {
  const ModelData md = model_data(c, false);
  Output o;
  json rows = json::array();
  std::vector<std::vector<std::string>> csv_rows;
  std::vector<int> dropped;
  for (int n : admissible_n(md.H, c.beta, c.n_list, dropped)) {
    const CovarianceOperator C = covariance_direct(md.H, md.P, TimeGrid::make(n, c.beta));
    PfaffianSweep sw;
    sw.samples = c.samples;
    sw.seed = c.seed;
    PfaffianSweep sharp = sw;
    sharp.paired_subspaces = true;
    PfaffianSweep weighted = sw;
    {
      Rng rng(c.seed ^ 0x5eedu);
      const int k = 3;
      const Eigen::MatrixXd R = Eigen::MatrixXd::NullaryExpr(
          k, k, [&] { return std::normal_distribution<double>(0.0, 1.0)(rng); });
      weighted.weight = R.transpose() * R;
    }
    const std::vector<std::pair<std::string, BoundStats>> stats{
        {"determinant", det_bound_ratio(C, md.P, c.samples, c.seed)},
        {"pfaffian", pfaffian_bound_ratio(C, md.P, sw)},
        {"pfaffian_weighted", pfaffian_bound_ratio(C, md.P, weighted)},
        {"pfaffian_sharpness", pfaffian_bound_ratio(C, md.P, sharp)}};
    for (const auto& [kind, st] : stats) {
      rows.push_back({{"n", n}, {"kind", kind}, {"samples", st.samples},
                      {"max_ratio", st.max_ratio}, {"mean_ratio", st.mean_ratio},
                      {"violations", st.violations}});
      csv_rows.push_back({std::to_string(n), kind, std::to_string(st.samples),
                          report::number(st.max_ratio), report::number(st.mean_ratio),
                          std::to_string(st.violations)});
      if (st.violations > 0)
        o.failures.push_back(kind + " bound violated at n=" + std::to_string(n));
    }
  }
  o.body = {{"model", md.description}, {"rows", rows}, {"skipped_n", dropped}};
  o.csv = report::csv({"n", "kind", "samples", "max_ratio", "mean_ratio", "violations"}, csv_rows);
  return o;
}

// default upsilon: mu0 / beta with 8 S(H, mu0) <= pi, mu0 from the mu grid
double default_upsilon(const Geometry& g, const Mat& H, double beta, double eps) {
  double mu0 = 0;
  for (int i = 1; i <= kMuSteps; ++i) {
    const double mu = 0.01 * i;
    if (8 * combes_thomas_S(g, H, mu, eps) <= M_PI) mu0 = mu;
  }
  return mu0 / beta;
}

json estimate_json(const DecayEstimate& e) {
  return {{"omega", e.value},
          {"beta", e.beta},
          {"upsilon", e.upsilon},
          {"epsilon", e.epsilon},
          {"gimel", e.gimel},
          {"L", e.L},
          {"grid", {{"u1", e.grid.u1}, {"u2", e.grid.u2}, {"alpha", e.grid.alpha}}},
          {"bound", std::isfinite(e.bound) ? json(e.bound) : json("inf")},
          {"satisfied", e.satisfied},
          {"d_projection", e.d_projection},
          {"d_fermi", e.d_fermi},
          {"gap", e.gap}};
}

Output run_decay(const RunConfig& c) {
  const ModelData md = model_data(c, true);
  const LatticeModel& m = *md.model;
  const DecayGrid grid{c.grid_u1, c.grid_u2, c.grid_alpha};
  const Geometry g = lattice_geometry(m);
  const double ups = c.upsilon ? *c.upsilon : default_upsilon(g, md.H.H(), c.beta, c.epsilon);

  const auto estimate = [&](const LatticeModel& mm) {
    const SelfDualOperator H = build_hamiltonian(mm);
    return decay_parameter(lattice_geometry(mm), H.H(), projection_for(mm, H).P(), c.beta, ups,
                           c.epsilon, c.gimel, grid);
  };
  const DecayEstimate at_L = estimate(m);
  const DecayEstimate at_L2 = estimate(with_box(m, m.L + 2));

  Output o;
  o.body = {{"model", md.description},
            {"estimate", estimate_json(at_L)},
            {"l_convergence",
             {{"L", m.L},
              {"omega_L", at_L.value},
              {"omega_L_plus_2", at_L2.value},
              {"rel_change", std::abs(at_L2.value - at_L.value) / std::max(at_L.value, 1e-300)},
              {"projection_drift", projection_drift(m)}}},
            {"note", "finite-volume, finite-grid values; infinite-volume limits are not computed"}};
  std::vector<std::vector<std::string>> csv_rows{
      {std::to_string(m.L), report::number(at_L.value), report::number(at_L.bound),
       at_L.satisfied ? "true" : "false"},
      {std::to_string(m.L + 2), report::number(at_L2.value), report::number(at_L2.bound),
       at_L2.satisfied ? "true" : "false"}};
  if (!at_L.satisfied) o.failures.push_back("decay bound violated at L=" + std::to_string(m.L));

  const double gap = spectral_gap(md.H.H());
  if (gap > 2 * c.gimel) {
    const double gb = gapped_bound(g, md.H.H(), c.beta, ups, c.epsilon, c.gimel, grid);
    const DecayEstimate gapped = decay_parameter(g, md.H.H(), diagonalizing_projection(md.H).P(),
                                                 c.beta, ups, c.epsilon, c.gimel, grid);
    const bool ok = gapped.value <= gb * (1 + kDecayRelSlack);
    o.body["gapped"] = {{"omega", gapped.value},
                        {"bound", std::isfinite(gb) ? json(gb) : json("inf")},
                        {"satisfied", ok}};
    if (!ok) o.failures.push_back("gapped bound violated");
  }
  o.csv = report::csv({"L", "omega", "bound", "satisfied"}, csv_rows);
  return o;
}

// --- verify -------------------------------------------------------------------------------------

std::vector<Check> verify_suite(const RunConfig& c, const ModelData& md) {
  const LatticeModel& m = *md.model;
  std::vector<Check> out;
  Rng rng(c.seed);

  {  // Pfaffian squared against the determinant
    double worst = 0;
    for (int i = 0; i < 50; ++i) {
      const int N = 2 + 2 * (i % 5);
      Mat X = random_matrix(rng, N, N);
      const Mat M = X - X.transpose();
      const cplx pf = numkernel::pfaffian(M), det = numkernel::determinant(M);
      worst = std::max(worst, std::abs(pf * pf - det) / (1 + std::abs(det)));
    }
    out.push_back(le("pfaffian_squared_vs_det", worst, 1e-9));
  }

  const int modes = m.modes();
  if (modes > kMaxFockModes) {
    out.push_back(skipped("car", "too many modes for the Fock representation"));
  } else {
    const FockRep rep(md.P);
    double worst = 0;
    for (int i = 0; i < modes; ++i)
      for (int j = 0; j < modes; ++j) {
        const Mat ac = Mat(rep.a(i) * rep.adag(j)) + Mat(rep.adag(j) * rep.a(i));
        worst = std::max(worst, numkernel::max_abs(ac - (i == j ? rep.identity() : Mat::Zero(ac.rows(), ac.cols()))));
        const Mat aa = Mat(rep.a(i) * rep.a(j)) + Mat(rep.a(j) * rep.a(i));
        worst = std::max(worst, numkernel::max_abs(aa));
      }
    out.push_back(le("car", worst, 1e-13));
  }

  if (2 * md.P.space().dim() > kMaxGenerators || modes > kMaxFockModes) {
    out.push_back(skipped("trace_formula", "n * dim exceeds the Grassmann capacity"));
  } else {
    const FockRep rep(md.P);
    const auto even_op = [&] {
      Mat X = random_matrix(rng, rep.fock_dim(), rep.fock_dim());
      const RVec& p = rep.parity_diagonal();
      for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 0; j < X.cols(); ++j)
          if (p(i) != p(j)) X(i, j) = 0;
      return X;
    };
    const Mat A0 = even_op(), A1 = even_op();
    const cplx exact = tracial_state(rep, Mat(A0 * A1));
    out.push_back(le("trace_formula", std::abs(trace_formula(rep, {A0, A1}) - exact), 1e-10));
  }

  {
    std::vector<int> dropped;
    const auto ns = admissible_n(md.H, c.beta, c.n_list, dropped);
    double worst = 0;
    for (std::size_t i = 0; i < std::min<std::size_t>(2, ns.size()); ++i) {
      const TimeGrid grid = TimeGrid::make(ns[i], c.beta);
      worst = std::max(worst, numkernel::max_abs(covariance_direct(md.H, md.P, grid).matrix() -
                                                 covariance_closed_form_full(md.H, md.P, grid).matrix()));
    }
    out.push_back(ns.empty() ? skipped("covariance_closed_form", "no admissible n")
                             : le("covariance_closed_form", worst, kAgreeTol));

    if (ns.size() < 2 || 3 * md.P.space().dim() > kMaxGenerators || modes > kMaxFockModes) {
      out.push_back(skipped("feynman_kac_order", "model too large or n-list too short"));
      out.push_back(skipped("feynman_kac_rel_err", "model too large or n-list too short"));
    } else {
      const FockRep rep(md.P);
      const Mat W = box_observable(rep, m, m.interaction, m.L);
      const Mat K = box_observable(rep, m, m.observable, m.L);
      const ConvergenceReport r = convergence_study(md.H, rep, W, K, c.beta, c.s, ns);
      const auto& last = r.rows.back();
      out.push_back(ge("feynman_kac_order", r.empirical_order, kOrderMin));
      out.push_back(le("feynman_kac_rel_err", last.abs_err / std::abs(last.lhs), kRelErrMax,
                       "n=" + std::to_string(last.n)));
    }

    if (ns.empty()) {
      out.push_back(skipped("bounds", "no admissible n"));
    } else {
      const CovarianceOperator C = covariance_direct(md.H, md.P, TimeGrid::make(ns.front(), c.beta));
      PfaffianSweep sw;
      sw.samples = std::min<std::int64_t>(c.samples, 200);
      sw.seed = c.seed;
      const BoundStats d = det_bound_ratio(C, md.P, sw.samples, c.seed);
      const BoundStats p = pfaffian_bound_ratio(C, md.P, sw);
      out.push_back(le("determinant_bound", d.max_ratio, 1 + kBoundSlack));
      out.push_back(le("pfaffian_bound", p.max_ratio, 1 + kBoundSlack));
    }
  }

  {
    const Geometry g = lattice_geometry(m);
    const Mat& H = md.H.H();
    out.push_back(le("combes_thomas_S_zero", combes_thomas_S(g, H, 0.0, c.epsilon), 0.0));
    const double mu = 0.1;
    const double S = combes_thomas_S(g, H, mu, c.epsilon);
    const cplx z(0.0, 2 * S + 1.0);
    out.push_back(le("combes_thomas", combes_thomas_check(g, H, z, mu, c.epsilon).max_ratio,
                     1 + 1e-9, "z = i(2S + 1), mu = 0.1"));
    const double ups = c.upsilon ? *c.upsilon : default_upsilon(g, H, c.beta, c.epsilon);
    const DecayEstimate e = decay_parameter(g, H, md.P.P(), c.beta, ups, c.epsilon, 0.0,
                                            {c.grid_u1, c.grid_u2, c.grid_alpha});
    out.push_back(le("decay_bound", e.value, e.bound * (1 + kDecayRelSlack)));
  }
  return out;
}

Output run_verify(const RunConfig& c) {
  const ModelData md = model_data(c, true);
  const std::vector<Check> checks = verify_suite(c, md);
  Output o;
  for (const auto& ch : checks)
    if (ch.status == "fail") o.failures.push_back(ch.name);
  o.body = {{"model", md.description}, {"checks", checks_json(checks)}};
  o.csv = checks_csv(checks);
  return o;
}

int run(const RunConfig& c) {
  validate(c);
  Output o;
  if (c.command == "genfunc") o = run_genfunc(c);
  else if (c.command == "covariance") o = run_covariance(c);
  else if (c.command == "pfbound") o = run_pfbound(c);
  else if (c.command == "decay") o = run_decay(c);
  else o = run_verify(c);

  json doc = {{"config", config_json(c)},
              {"tolerances", report::tolerances()},
              {"result", o.body},
              {"status", o.failures.empty() ? "pass" : "fail"},
              {"failures", o.failures}};
  std::filesystem::create_directories(c.out);
  const std::string base = (std::filesystem::path(c.out) / c.command).string();
  if (c.format == "csv") report::write_text(base + ".csv", o.csv);
  else report::write_text(base + ".json", doc.dump(2) + "\n");

  if (!o.failures.empty()) {
    std::cerr << json{{"status", "fail"}, {"command", c.command}, {"failures", o.failures}}.dump()
              << "\n";
    return 1;
  }
  return 0;
}

void add_options(CLI::App* sub, RunConfig& c) {
  sub->add_option("--model", c.model, "model JSON file");
  sub->add_option("--beta", c.beta, "inverse temperature");
  sub->add_option("--s", c.s, "generating-function parameter");
  sub->add_option("--n-list", c.n_list, "time-grid sizes, e.g. 4,8,16,24")->delimiter(',');
  sub->add_option("--seed", c.seed, "seed for randomized sweeps");
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--format", c.format, "report format")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--grid-u1", c.grid_u1, "u1 grid points for the decay parameter");
  sub->add_option("--grid-u2", c.grid_u2, "u2 trapezoid panels for the decay parameter");
  sub->add_option("--grid-alpha", c.grid_alpha, "alpha grid for the Fermi summability constant");
  sub->add_option("--samples", c.samples, "random samples per bound sweep");
  sub->add_option("--upsilon", c.upsilon, "decay weight exponent upsilon");
  sub->add_option("--epsilon", c.epsilon, "distance exponent epsilon in (0, 1]");
  sub->add_option("--gimel", c.gimel, "time weight exponent");
  sub->add_option("--path", c.path, "Feynman-Kac evaluation path")
      ->check(CLI::IsMember({"auto", "literal", "wick", "ring"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fermi: Grassmann generating functions and covariance bounds"};
  RunConfig c;
  app.require_subcommand(1);
  const std::pair<const char*, const char*> commands[] = {
      {"genfunc", "Feynman-Kac convergence study and finite-volume generating function"},
      {"covariance", "closed-form covariance against the direct inverse"},
      {"pfbound", "determinant and Pfaffian bound sweeps"},
      {"decay", "decay parameter, finite-volume drift and gapped bound"},
      {"verify", "run every check on one model"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_options(sub, c);
    sub->callback([&c, name] { c.command = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    return run(c);
  } catch (const Error& e) {
    std::cerr << json{{"status", "error"}, {"code", errc_name(e.code())}, {"message", e.what()}}.dump()
              << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << json{{"status", "error"}, {"code", "io"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  }
}
