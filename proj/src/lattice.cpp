#include "fermi/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "fermi/numkernel.hpp"

namespace fermi {

using numkernel::max_abs;

namespace {

using Key = std::tuple<std::vector<int>, int, int>;

double norm_of(const std::vector<int>& x) {
  double r = 0;
  for (int v : x) r += double(v) * v;
  return std::sqrt(r);
}

std::vector<int> negated(std::vector<int> x) {
  for (int& v : x) v = -v;
  return x;
}

std::string key_text(const Key& k) {
  std::ostringstream os;
  os << "dx=[";
  const auto& dx = std::get<0>(k);
  for (std::size_t i = 0; i < dx.size(); ++i) os << (i ? "," : "") << dx[i];
  os << "] s=" << std::get<1>(k) << " t=" << std::get<2>(k);
  return os.str();
}

// merges entries and their partners; `sign` = +1 with conjugation (hopping), -1 (pairing)
std::vector<Amplitude> complete_kernel(const std::vector<Amplitude>& in, int d, int nspins,
                                       bool hermitian, const char* what) {
  constexpr double tol = 1e-12;
  std::map<Key, cplx> given;
  for (const auto& a : in) {
    require(static_cast<int>(a.dx.size()) == d, Errc::InvalidInput,
            std::string(what) + ": dx has the wrong dimension");
    require(a.s >= 0 && a.s < nspins && a.t >= 0 && a.t < nspins, Errc::InvalidInput,
            std::string(what) + ": spin index out of range");
    Key k{a.dx, a.s, a.t};
    auto [it, fresh] = given.emplace(k, a.value);
    require(fresh || std::abs(it->second - a.value) <= tol, Errc::Conflict,
            std::string(what) + ": duplicate entry " + key_text(k) + " with different values");
  }
  std::map<Key, cplx> full = given;
  for (const auto& [k, v] : given) {
    Key p{negated(std::get<0>(k)), std::get<2>(k), std::get<1>(k)};
    const cplx pv = hermitian ? std::conj(v) : -v;
    if (p == k) {
      require(std::abs(pv - v) <= tol, hermitian ? Errc::NotHermitian : Errc::NotAntisymmetric,
              std::string(what) + ": self-partner entry " + key_text(k) + " violates " +
                  (hermitian ? "Hermiticity" : "antisymmetry"));
      continue;
    }
    auto it = full.find(p);
    if (it == full.end()) {
      full.emplace(p, pv);
    } else {
      require(std::abs(it->second - pv) <= tol, Errc::Conflict,
              std::string(what) + ": entries " + key_text(k) + " and " + key_text(p) +
                  " are inconsistent");
    }
  }
  std::vector<Amplitude> out;
  for (const auto& [k, v] : full)
    if (v != cplx(0)) out.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), v});
  return out;
}

int spin_from_json(const nlohmann::json& j, const std::vector<std::string>& spins,
                   const std::string& where) {
  if (j.is_number_integer()) return j.get<int>();
  if (j.is_string()) {
    const auto it = std::find(spins.begin(), spins.end(), j.get<std::string>());
    require(it != spins.end(), Errc::InvalidInput, where + ": unknown spin label");
    return static_cast<int>(it - spins.begin());
  }
  throw Error(Errc::InvalidInput, where + ": spin must be a label or an index");
}

std::vector<Amplitude> kernel_from_json(const nlohmann::json& arr,
                                        const std::vector<std::string>& spins,
                                        const std::string& name) {
  std::vector<Amplitude> out;
  if (arr.is_null()) return out;
  require(arr.is_array(), Errc::InvalidInput, name + " must be an array");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& e = arr[i];
    const std::string where = name + "[" + std::to_string(i) + "]";
    require(e.is_object(), Errc::InvalidInput, where + " must be an object");
    for (const auto& [k, v] : e.items())
      require(k == "dx" || k == "s" || k == "t" || k == "re" || k == "im", Errc::InvalidInput,
              where + ": unknown field '" + k + "'");
    require(e.contains("dx") && e["dx"].is_array(), Errc::InvalidInput,
            where + ".dx missing or not an array");
    Amplitude a;
    for (const auto& c : e["dx"]) {
      require(c.is_number_integer(), Errc::InvalidInput, where + ".dx entries must be integers");
      a.dx.push_back(c.get<int>());
    }
    require(e.contains("s") && e.contains("t"), Errc::InvalidInput, where + ": s and t required");
    a.s = spin_from_json(e["s"], spins, where + ".s");
    a.t = spin_from_json(e["t"], spins, where + ".t");
    double re = 0, im = 0;
    if (e.contains("re")) {
      require(e["re"].is_number(), Errc::InvalidInput, where + ".re must be a number");
      re = e["re"].get<double>();
    }
    if (e.contains("im")) {
      require(e["im"].is_number(), Errc::InvalidInput, where + ".im must be a number");
      im = e["im"].get<double>();
    }
    a.value = {re, im};
    out.push_back(std::move(a));
  }
  return out;
}

LocalObservable observable_from_json(const nlohmann::json& arr, int d,
                                     const std::vector<std::string>& spins,
                                     const std::string& name) {
  LocalObservable out;
  if (arr.is_null()) return out;
  require(arr.is_array(), Errc::InvalidInput, name + " must be an array");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& e = arr[i];
    const std::string where = name + "[" + std::to_string(i) + "]";
    require(e.is_object(), Errc::InvalidInput, where + " must be an object");
    for (const auto& [k, v] : e.items())
      require(k == "coeff" || k == "factors", Errc::InvalidInput,
              where + ": unknown field '" + k + "'");
    require(e.contains("coeff") && e["coeff"].is_number(), Errc::InvalidInput,
            where + ".coeff missing or not a number");
    DensityTerm t;
    t.coeff = e["coeff"].get<double>();
    const auto f = e.value("factors", nlohmann::json::array());
    require(f.is_array(), Errc::InvalidInput, where + ".factors must be an array");
    for (std::size_t q = 0; q < f.size(); ++q) {
      const std::string fw = where + ".factors[" + std::to_string(q) + "]";
      require(f[q].is_object() && f[q].contains("dx") && f[q]["dx"].is_array() &&
                  f[q].contains("s"),
              Errc::InvalidInput, fw + " needs dx and s");
      DensityFactor df;
      for (const auto& c : f[q]["dx"]) {
        require(c.is_number_integer(), Errc::InvalidInput, fw + ".dx entries must be integers");
        df.dx.push_back(c.get<int>());
      }
      require(static_cast<int>(df.dx.size()) == d, Errc::InvalidInput,
              fw + ".dx has the wrong dimension");
      df.s = spin_from_json(f[q]["s"], spins, fw + ".s");
      require(df.s >= 0 && df.s < static_cast<int>(spins.size()), Errc::InvalidInput,
              fw + ".s out of range");
      t.factors.push_back(std::move(df));
    }
    out.terms.push_back(std::move(t));
  }
  return out;
}

// e^{ups d^eps} elementwise
RMat weights(const Geometry& g, double upsilon, double eps) {
  return g.dist.unaryExpr([&](double r) { return r == 0.0 ? 1.0 : std::exp(upsilon * std::pow(r, eps)); });
}

double max_weighted_row(const RMat& W, const RMat& absM) {
  return (W.cwiseProduct(absM)).rowwise().sum().maxCoeff();
}

// e^{a x} / (1 + e^{b x}) without overflow, for 0 <= a <= b
double fermi_factor(double a, double b, double x) {
  if (b * x > 0) return std::exp((a - b) * x) / (1.0 + std::exp(-b * x));
  return std::exp(a * x) / (1.0 + std::exp(b * x));
}

struct Spectral {
  RVec values;
  Mat vectors;
};

Spectral spectral(const Mat& H) {
  auto e = numkernel::hermitian_eig(H);
  return {e.values, e.vectors};
}

Mat apply(const Spectral& sp, const RVec& f) {
  return sp.vectors * f.cast<cplx>().asDiagonal() * sp.vectors.adjoint();
}

Mat decay_kernel_spectral(const Spectral& sp, const Mat& P, double beta, double u1, double u2) {
  const double a = alpha_time(beta, u1, u2);
  RVec f(sp.values.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const double x = sp.values(i);
    f(i) = u1 < u2 ? fermi_factor(a, beta, -x) : -fermi_factor(a, beta, x);
  }
  const Mat M = apply(sp, f);
  const Mat Q = Mat::Identity(P.rows(), P.cols()) - P;
  return P * M * P + Q * M * Q;
}

// trapezoid nodes and weights on [a, b] following the uniform grid of step h
void trapezoid(double a, double b, double h, std::vector<double>& x, std::vector<double>& w) {
  x.clear();
  w.clear();
  if (b <= a) return;
  x.push_back(a);
  for (long j = static_cast<long>(std::floor(a / h)) + 1; j * h < b; ++j)
    if (j * h > a) x.push_back(j * h);
  x.push_back(b);
  w.assign(x.size(), 0.0);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double len = x[i + 1] - x[i];
    w[i] += 0.5 * len;
    w[i + 1] += 0.5 * len;
  }
}

double omega_value(const Geometry& g, const Spectral& sp, const Mat& P, double beta,
                   double upsilon, double eps, double gimel, const DecayGrid& grid) {
  require(grid.u1 >= 16, Errc::InvalidInput, "u1 grid needs at least 16 points");
  require(grid.u2 >= 64, Errc::InvalidInput, "u2 quadrature needs at least 64 panels");
  const double T = beta + 1.0;
  const double h = T / grid.u2;
  const RMat W = weights(g, upsilon, eps);
  double best = 0;
  std::vector<double> x, w;
  for (int k = 0; k < grid.u1; ++k) {
    const double u1 = T * k / grid.u1;
    RMat I = RMat::Zero(P.rows(), P.cols());
    // u2 <= u1 uses the second branch, u2 > u1 the first; the panel at u1 is split
    for (int side = 0; side < 2; ++side) {
      if (side == 0)
        trapezoid(0.0, u1, h, x, w);
      else
        trapezoid(u1, T, h, x, w);
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double u2 = x[i];
        const double a = alpha_time(beta, u1, u2);
        RVec f(sp.values.size());
        for (Eigen::Index j = 0; j < f.size(); ++j) {
          const double e = sp.values(j);
          f(j) = side == 1 ? fermi_factor(a, beta, -e) : -fermi_factor(a, beta, e);
        }
        const Mat M = apply(sp, f);
        const Mat Q = Mat::Identity(P.rows(), P.cols()) - P;
        const Mat F = P * M * P + Q * M * Q;
        const double at = std::min(a, beta - a);
        I += (w[i] * std::exp(gimel * at)) * F.cwiseAbs();
      }
    }
    best = std::max(best, max_weighted_row(W, I));
  }
  return best;
}

double time_factor(double beta, double gap, double gimel, int u1_points) {
  const double T = beta + 1.0;
  const int panels = 1 << 14;
  const double h = T / panels;
  std::vector<double> x, w;
  double best = 0;
  for (int k = 0; k < u1_points; ++k) {
    const double u1 = T * k / u1_points;
    double acc = 0;
    for (int side = 0; side < 2; ++side) {
      if (side == 0)
        trapezoid(0.0, u1, h, x, w);
      else
        trapezoid(u1, T, h, x, w);
      for (std::size_t i = 0; i < x.size(); ++i)
        acc += w[i] * std::exp((gimel - 0.5 * gap) * alpha_tilde(beta, u1, x[i]));
    }
    best = std::max(best, acc);
  }
  return best / (-std::expm1(-0.5 * beta * gap));
}

}  // namespace

int LatticeModel::sites() const {
  int n = 1;
  for (int i = 0; i < d; ++i) n *= 2 * L + 1;
  return n;
}

double LatticeModel::range() const {
  double r = 0;
  for (const auto* list : {&hopping, &pairing})
    for (const auto& a : *list) r = std::max(r, norm_of(a.dx));
  return r;
}

LatticeModel complete_model(LatticeModel m) {
  require(m.d >= 1, Errc::InvalidInput, "d must be at least 1");
  require(m.L >= 0, Errc::InvalidInput, "L must be non-negative");
  require(!m.spins.empty(), Errc::InvalidInput, "spin set is empty");
  m.hopping = complete_kernel(m.hopping, m.d, m.nspins(), true, "hopping");
  m.pairing = complete_kernel(m.pairing, m.d, m.nspins(), false, "pairing");
  return m;
}

LatticeModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::InvalidInput, std::string("model JSON: ") + e.what());
  }
  require(j.is_object(), Errc::InvalidInput, "model JSON must be an object");
  for (const auto& [k, v] : j.items())
    require(k == "d" || k == "L" || k == "spins" || k == "hopping" || k == "pairing" ||
                k == "description" || k == "interaction" || k == "observable",
            Errc::InvalidInput, "model JSON: unknown field '" + k + "'");
  LatticeModel m;
  require(j.contains("d") && j["d"].is_number_integer(), Errc::InvalidInput,
          "model JSON: field 'd' missing or not an integer");
  require(j.contains("L") && j["L"].is_number_integer(), Errc::InvalidInput,
          "model JSON: field 'L' missing or not an integer");
  m.d = j["d"].get<int>();
  m.L = j["L"].get<int>();
  m.spins.clear();
  if (!j.contains("spins")) {
    m.spins = {"0"};
  } else if (j["spins"].is_number_integer()) {
    for (int i = 0; i < j["spins"].get<int>(); ++i) m.spins.push_back(std::to_string(i));
  } else {
    require(j["spins"].is_array(), Errc::InvalidInput,
            "model JSON: 'spins' must be a count or a list of labels");
    for (const auto& s : j["spins"]) {
      require(s.is_string(), Errc::InvalidInput, "model JSON: spin labels must be strings");
      m.spins.push_back(s.get<std::string>());
    }
  }
  m.hopping = kernel_from_json(j.value("hopping", nlohmann::json()), m.spins, "hopping");
  m.pairing = kernel_from_json(j.value("pairing", nlohmann::json()), m.spins, "pairing");
  m.interaction =
      observable_from_json(j.value("interaction", nlohmann::json()), m.d, m.spins, "interaction");
  m.observable =
      observable_from_json(j.value("observable", nlohmann::json()), m.d, m.spins, "observable");
  return complete_model(std::move(m));
}

LatticeModel load_model(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::InvalidInput, "cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return model_from_json(ss.str());
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

std::string model_summary(const LatticeModel& m) {
  std::ostringstream os;
  os << "d=" << m.d << " L=" << m.L << " spins=" << m.nspins() << " hopping=" << m.hopping.size()
     << " pairing=" << m.pairing.size();
  return os.str();
}

LatticeModel with_box(LatticeModel m, int L) {
  require(L >= 0, Errc::InvalidInput, "box size must be non-negative");
  m.L = L;
  return m;
}

std::vector<std::vector<int>> box_sites(int d, int L) {
  std::vector<std::vector<int>> out;
  std::vector<int> x(d, -L);
  while (true) {
    out.push_back(x);
    int i = d - 1;
    while (i >= 0 && x[i] == L) x[i--] = -L;
    if (i < 0) break;
    ++x[i];
  }
  return out;
}

int site_index(const std::vector<int>& x, int L) {
  int idx = 0;
  for (int v : x) idx = idx * (2 * L + 1) + (v + L);
  return idx;
}

bool in_box(const std::vector<int>& x, int L) {
  return std::all_of(x.begin(), x.end(), [L](int v) { return std::abs(v) <= L; });
}

namespace {

Mat kernel_matrix(const LatticeModel& m, const std::vector<Amplitude>& list) {
  const int S = m.nspins(), M = m.modes();
  Mat X = Mat::Zero(M, M);
  const auto sites = box_sites(m.d, m.L);
  for (std::size_t i = 0; i < sites.size(); ++i)
    for (const auto& a : list) {
      std::vector<int> y = sites[i];
      for (int c = 0; c < m.d; ++c) y[c] -= a.dx[c];
      if (!in_box(y, m.L)) continue;
      X(static_cast<Eigen::Index>(i) * S + a.s, site_index(y, m.L) * S + a.t) += a.value;
    }
  return X;
}

}  // namespace

Mat hopping_matrix(const LatticeModel& m) { return kernel_matrix(m, m.hopping); }
Mat pairing_matrix(const LatticeModel& m) { return kernel_matrix(m, m.pairing); }

SelfDualOperator build_hamiltonian(const LatticeModel& m) {
  const Mat h = hopping_matrix(m), G = pairing_matrix(m);
  const Eigen::Index M = h.rows();
  Mat X(2 * M, 2 * M);
  X << h, G, -G.conjugate(), -h.conjugate();
  return SelfDualOperator(SelfDualSpace::canonical(static_cast<int>(M)), X);
}

BasisProjection canonical_lattice_projection(const LatticeModel& m) {
  return BasisProjection::canonical(SelfDualSpace::canonical(m.modes()));
}

Geometry lattice_geometry(const LatticeModel& m) {
  Geometry g{m.d, m.L, m.nspins(), {}};
  const auto sites = box_sites(m.d, m.L);
  const int S = m.nspins(), M = m.modes();
  g.dist.resize(2 * M, 2 * M);
  for (int a = 0; a < 2 * M; ++a)
    for (int b = 0; b < 2 * M; ++b) {
      const auto& x = sites[(a % M) / S];
      const auto& y = sites[(b % M) / S];
      double r = 0;
      for (int c = 0; c < m.d; ++c) r += double(x[c] - y[c]) * (x[c] - y[c]);
      g.dist(a, b) = std::sqrt(r);
    }
  return g;
}

double combes_thomas_S(const Geometry& g, const Mat& H, double mu, double eps) {
  require(mu >= 0 && eps > 0 && eps <= 1, Errc::InvalidInput, "need mu >= 0, eps in (0,1]");
  require(H.rows() == g.dist.rows(), Errc::ShapeMismatch, "H does not match the geometry");
  const RMat E = g.dist.unaryExpr([&](double r) { return std::expm1(mu * std::pow(r, eps)); });
  return (E.cwiseProduct(H.cwiseAbs())).rowwise().sum().maxCoeff();
}

double spectral_distance(const Mat& H, cplx z) {
  const auto e = numkernel::hermitian_eig(H);
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < e.values.size(); ++i) best = std::min(best, std::abs(z - e.values(i)));
  return best;
}

CombesThomasResult combes_thomas_check(const Geometry& g, const Mat& H, cplx z, double mu,
                                       double eps) {
  const Spectral sp = spectral(H);
  CombesThomasResult r{};
  r.delta = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < sp.values.size(); ++i)
    r.delta = std::min(r.delta, std::abs(z - sp.values(i)));
  r.S = combes_thomas_S(g, H, mu, eps);
  require(r.delta > r.S, Errc::NotApplicable, "distance to the spectrum does not exceed S(H,mu)");
  Vec f(sp.values.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = 1.0 / (z - sp.values(i));
  const Mat R = sp.vectors * f.asDiagonal() * sp.vectors.adjoint();
  const RMat E = g.dist.unaryExpr([&](double d) { return std::exp(mu * std::pow(d, eps)); });
  r.max_ratio = (R.cwiseAbs().cwiseProduct(E)).maxCoeff() * (r.delta - r.S);
  return r;
}

double resolvent_difference_check(const Geometry& g, const Mat& H, double u, double mu,
                                  double eps) {
  const double S = combes_thomas_S(g, H, mu, eps);
  require(S > 0, Errc::NotApplicable, "S(H,mu) vanishes; no admissible eta = 2S");
  const double eta = 2 * S;
  const Spectral sp = spectral(H);
  RVec f(sp.values.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const double t = sp.values(i) - u;
    f(i) = 1.0 / (t * t + eta * eta);
  }
  const Mat K = apply(sp, f);
  double worst = 0;
  for (Eigen::Index x = 0; x < K.rows(); ++x)
    for (Eigen::Index y = 0; y < K.cols(); ++y) {
      const double rhs = 12.0 * std::exp(-mu * std::pow(g.dist(x, y), eps)) *
                         std::sqrt(K(x, x).real() * K(y, y).real());
      worst = std::max(worst, std::abs(K(x, y)) / rhs);
    }
  return worst;
}

double fermi_summability(const Geometry& g, const Mat& H, double beta, double upsilon, double eps,
                         int alpha_grid) {
  require(alpha_grid >= 16, Errc::InvalidInput, "alpha grid needs at least 16 points");
  require(beta > 0, Errc::InvalidInput, "beta must be positive");
  const Spectral sp = spectral(H);
  const RMat W = weights(g, upsilon, eps);
  double best = 0;
  for (int j = 0; j < alpha_grid; ++j) {
    const double a = beta * j / (alpha_grid - 1);
    RVec f(sp.values.size());
    for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = fermi_factor(a, beta, sp.values(i));
    best = std::max(best, max_weighted_row(W, apply(sp, f).cwiseAbs()));
  }
  return best;
}

double lattice_sum(int d, double c, double eps) {
  if (c <= 0) return std::numeric_limits<double>::infinity();
  const auto term = [&](double r2) { return std::exp(-c * std::pow(std::sqrt(r2), eps)); };
  constexpr double rel = 1e-17;
  double sum = 1.0;
  if (d == 1) {
    for (long k = 1; k <= 1000000; ++k) {
      const double t = 2 * term(double(k) * k);
      sum += t;
      if (t < rel * sum) break;
    }
    return sum;
  }
  if (d == 2) {
    for (long r = 1; r <= 1000; ++r) {
      double shell = 0;
      for (long j = 0; j <= r; ++j) {
        const double mult = (j == 0 || j == r) ? 4.0 : 8.0;
        shell += mult * term(double(r) * r + double(j) * j);
      }
      sum += shell;
      if (shell < rel * sum) break;
    }
    return sum;
  }
  // generic d: Chebyshev shells by enumeration
  const int cap = d == 3 ? 100 : 20;
  for (int r = 1; r <= cap; ++r) {
    double shell = 0;
    std::vector<int> x(d, -r);
    while (true) {
      int mx = 0;
      double r2 = 0;
      for (int v : x) {
        mx = std::max(mx, std::abs(v));
        r2 += double(v) * v;
      }
      if (mx == r) shell += term(r2);
      int i = d - 1;
      while (i >= 0 && x[i] == r) x[i--] = -r;
      if (i < 0) break;
      ++x[i];
    }
    sum += shell;
    if (shell < rel * sum) break;
  }
  return sum;
}

double fermi_summability_bound(const Geometry& g, const Mat& H, double beta, double upsilon,
                               double eps) {
  double best = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= kMuSteps; ++k) {
    const double mu = kMuStep * k;
    const double S = combes_thomas_S(g, H, mu, eps);
    const double rate = S > 0 ? std::min(1.0, std::numbers::pi / (4 * beta * S)) : 1.0;
    best = std::min(best, lattice_sum(g.d, mu * rate - upsilon, eps));
  }
  return 96.0 * g.nspins * best;
}

double projection_summability(const Geometry& g, const Mat& P, double upsilon, double eps) {
  return max_weighted_row(weights(g, upsilon, eps), P.cwiseAbs());
}

double alpha_time(double beta, double u1, double u2) {
  const double lo = std::min(u1, u2), hi = std::max(u1, u2);
  return std::max(0.0, std::min(beta - lo, hi - lo));
}

double alpha_tilde(double beta, double u1, double u2) {
  const double a = alpha_time(beta, u1, u2);
  return std::min(a, beta - a);
}

Mat decay_kernel(const Mat& H, const Mat& P, double beta, double u1, double u2) {
  return decay_kernel_spectral(spectral(H), P, beta, u1, u2);
}

DecayEstimate decay_parameter(const Geometry& g, const Mat& H, const Mat& P, double beta,
                              double upsilon, double eps, double gimel, const DecayGrid& grid) {
  require(beta > 0, Errc::InvalidInput, "beta must be positive");
  require(eps > 0 && eps <= 1, Errc::InvalidInput, "eps must lie in (0,1]");
  require(upsilon >= 0 && gimel >= 0, Errc::InvalidInput, "upsilon and gimel must be >= 0");
  DecayEstimate d;
  d.beta = beta;
  d.upsilon = upsilon;
  d.epsilon = eps;
  d.gimel = gimel;
  d.L = g.L;
  d.grid = grid;
  d.value = omega_value(g, spectral(H), P, beta, upsilon, eps, gimel, grid);
  d.d_projection = projection_summability(g, P, upsilon, eps);
  d.d_fermi = fermi_summability(g, H, beta, upsilon, eps, grid.alpha);
  d.gap = spectral_gap(H);
  d.bound = gimel == 0.0
                ? 2.0 * (d.d_projection + 1) * (d.d_projection + 1) * d.d_fermi * (beta + 1)
                : std::numeric_limits<double>::infinity();
  d.satisfied = d.value <= d.bound * (1 + kDecayRelSlack);
  return d;
}

double spectral_gap(const Mat& H) {
  const auto e = numkernel::hermitian_eig(H);
  const double g = e.values.cwiseAbs().minCoeff();
  return g < 1e-10 ? 0.0 : g;
}

double gapped_bound(const Geometry& g, const Mat& H, double beta, double upsilon, double eps,
                    double gimel, const DecayGrid& grid) {
  const double gap = spectral_gap(H);
  require(gap > 2 * gimel, Errc::GapTooSmall, "gap must exceed 2 gimel");
  double best = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= kMuSteps; ++k) {
    const double mu = kMuStep * k;
    const double S = combes_thomas_S(g, H, mu, eps);
    const double rate = S > 0 ? std::min(1.0, gap / (4 * S)) : 1.0;
    best = std::min(best, lattice_sum(g.d, mu * rate - upsilon, eps));
  }
  return 152.0 * g.nspins * best * time_factor(beta, gap, gimel, grid.u1);
}

GappedReport gapped_summability_check(const Geometry& g, const SelfDualOperator& H,
                                      const std::vector<double>& betas, double upsilon,
                                      double eps, double gimel, const DecayGrid& grid) {
  const double gap = spectral_gap(H.H());
  require(gap > 2 * gimel, Errc::GapTooSmall,
          "gap " + std::to_string(gap) + " does not exceed 2 gimel = " + std::to_string(2 * gimel));
  const Mat P = diagonalizing_projection(H).P();
  const Spectral sp = spectral(H.H());
  GappedReport rep;
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (double beta : betas) {
    DecayEstimate d;
    d.beta = beta;
    d.upsilon = upsilon;
    d.epsilon = eps;
    d.gimel = gimel;
    d.L = g.L;
    d.grid = grid;
    d.gap = gap;
    d.value = omega_value(g, sp, P, beta, upsilon, eps, gimel, grid);
    d.d_projection = projection_summability(g, P, upsilon, eps);
    d.bound = gapped_bound(g, H.H(), beta, upsilon, eps, gimel, grid);
    d.satisfied = d.value <= d.bound * (1 + kDecayRelSlack);
    lo = std::min(lo, d.value);
    hi = std::max(hi, d.value);
    rep.estimates.push_back(d);
  }
  rep.uniformity = betas.empty() ? 1.0 : hi / lo;
  return rep;
}

double projection_drift(const LatticeModel& m) {
  const auto proj = [&](const LatticeModel& mm) {
    if (mm.gauge_invariant()) return canonical_lattice_projection(mm).P();
    return diagonalizing_projection(build_hamiltonian(mm)).P();
  };
  const LatticeModel big = with_box(m, m.L + 2);
  const Mat P = proj(m), Q = proj(big);
  const int S = m.nspins(), M = m.modes(), Mb = big.modes();
  const auto sites = box_sites(m.d, m.L);
  std::vector<int> map(2 * M);
  for (int a = 0; a < M; ++a) {
    const int b = site_index(sites[a / S], big.L) * S + a % S;
    map[a] = b;
    map[M + a] = Mb + b;
  }
  double worst = 0;
  for (int a = 0; a < 2 * M; ++a)
    for (int b = 0; b < 2 * M; ++b) worst = std::max(worst, std::abs(P(a, b) - Q(map[a], map[b])));
  return worst;
}

}  // namespace fermi
