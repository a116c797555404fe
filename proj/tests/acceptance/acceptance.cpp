// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "calibration.hpp"
#include "fermi/covariance.hpp"
#include "fermi/genfunc.hpp"
#include "fermi/lattice.hpp"
#include "fermi/numkernel.hpp"
#include "fermi/random.hpp"
#include "oracles.hpp"

using namespace fermi;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[violated: " << what << "] ";
    }
  }
};

int failures = 0;

void criterion(int id, double limit_s, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << "[exception: " << e.what() << "] ";
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (dt > limit_s) {
    o.pass = false;
    o.detail << "[runtime over " << limit_s << " s] ";
  }
  if (!o.pass) ++failures;
  std::printf("criterion %2d: %s  %s(%.2f s)\n", id, o.pass ? "PASS" : "FAIL", o.detail.str().c_str(),
              dt);
  std::fflush(stdout);
}

Mat random_skew(Rng& rng, int n) {
  const Mat X = random_matrix(rng, n, n);
  return X - X.transpose();
}

// random even operator on the Fock space of rep
Mat random_even(Rng& rng, const FockRep& rep) {
  Mat X = random_matrix(rng, rep.fock_dim(), rep.fock_dim());
  const RVec& p = rep.parity_diagonal();
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      if (p(i) != p(j)) X(i, j) = 0;
  return X;
}

Mat number_op(const FockRep& rep, int i) { return Mat(rep.adag(i) * rep.a(i)); }

double fitted_exponent(const std::vector<double>& betas, const std::vector<double>& vals) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(betas.size());
  for (std::size_t i = 0; i < betas.size(); ++i) {
    const double x = std::log(betas[i] + 1), y = std::log(vals[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

LatticeModel square_patch(int L) {
  LatticeModel m;
  m.d = 2;
  m.L = L;
  m.hopping = {{{1, 0}, 0, 0, 1.0}, {{0, 1}, 0, 0, 1.0}};
  return complete_model(m);
}

std::string model_path(const char* name) { return std::string(FERMI_MODEL_DIR) + "/" + name; }

// largest mu with 8 S(H, mu) <= pi, by bisection
double mu_zero(const Geometry& g, const Mat& H, double eps) {
  double lo = 0, hi = 4;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (8 * combes_thomas_S(g, H, mid, eps) <= M_PI ? lo : hi) = mid;
  }
  return lo;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  std::cout.precision(3);

  criterion(1, 5, [](Outcome& o) {
    Rng rng(101);
    double worst_det = 0, worst_brute = 0;
    for (int i = 0; i < 200; ++i) {
      const int n = 2 + 2 * (i % 5);  // odd orders are rejected by contract
      const Mat M = random_skew(rng, n);
      const cplx pf = numkernel::pfaffian(M), det = numkernel::determinant(M);
      worst_det = std::max(worst_det, std::abs(pf * pf - det) / (1 + std::abs(det)));
      if (n <= 8) worst_brute = std::max(worst_brute, std::abs(pf - oracle::pfaffian_permutation_sum(M)));
    }
    o.detail << "max |Pf^2-det|/(1+|det|)=" << worst_det << " max |Pf-brute|=" << worst_brute << " ";
    o.require(worst_det <= 1e-9, "Pf^2 = det");
    o.require(worst_brute <= 1e-10, "permutation sum");
  });

  criterion(2, 10, [](Outcome& o) {
    Rng rng(202);
    const SelfDualSpace sp = SelfDualSpace::canonical(2);
    const FockRep rep(random_basis_projection(rng, sp));
    double car = 0, circle = 0;
    for (int i = 0; i < 50; ++i) {
      const Vec f1 = random_vector(rng, 4), f2 = random_vector(rng, 4);
      const Mat B1 = rep.generator(f1), B2 = rep.generator(f2);
      const cplx expect = f1.dot(sp.involve(f2));
      car = std::max(car, numkernel::max_abs(Mat(B1 * B2 + B2 * B1 - expect * rep.identity())));
      car = std::max(car, numkernel::max_abs(Mat(B1.adjoint() - rep.generator(sp.involve(f1)))));
      const GrassmannElement k1 = kappa(rep, B1), k2 = kappa(rep, B2);
      const GrassmannElement ac = circle_product_literal(rep.projection(), k1, k2) +
                                  circle_product_literal(rep.projection(), k2, k1);
      circle = std::max(circle, max_abs_diff(ac, GrassmannElement::scalar(k1.space(), expect)));
    }
    o.detail << "CAR residual=" << car << " circle CAR residual=" << circle << " ";
    o.require(car <= 1e-13, "Fock CAR");
    o.require(circle <= 1e-11, "circle-product CAR");
  });

  criterion(3, 30, [](Outcome& o) {
    Rng rng(303);
    const SelfDualSpace sp = SelfDualSpace::canonical(2);
    double worst = 0;
    for (int i = 0; i < 50; ++i) {
      const BasisProjection P = random_basis_projection(rng, sp);
      const int copies = 1 + i % 2;
      const Mat Ph = extend_blockwise(P.P(), copies);
      const Mat Z = Ph * random_matrix(rng, 4 * copies, 4 * copies) * Ph;
      const Mat C = Z - extended_flip(sp, copies, Z).adjoint();
      const GrassmannSpace gs(P, copies);
      for (int N = 1; N <= 2; ++N) {
        GrassmannElement xi = GrassmannElement::scalar(gs, 1.0);
        Mat V = Mat::Zero(4 * copies, 2 * N), AV = V;
        for (int q = 0; q < 2 * N; ++q) {
          const int k = q % copies;
          const Vec phi = random_vector(rng, 4);
          V.block(4 * k, q, 4, 1) = phi;
          AV.block(4 * k, q, 4, 1) = sp.involve(phi);
          xi = wedge(xi, GrassmannElement::vector(gs, k, phi));
        }
        const cplx pf = oracle::pfaffian_matchings(Mat(AV.adjoint() * C * V));
        worst = std::max(worst, std::abs(gaussian_integral(C, xi) - pf) / std::max(1.0, std::abs(pf)));
      }
    }
    o.detail << "max rel diff literal vs Pfaffian=" << worst << " ";
    o.require(worst <= 1e-10, "Gaussian moments");
  });

  criterion(4, 60, [](Outcome& o) {
    Rng rng(404);
    double worst = 0;
    for (int m : {1, 2})
      for (int n : {1, 2, 3})
        for (int rep_i = 0; rep_i < 3; ++rep_i) {
          const FockRep rep(random_basis_projection(rng, SelfDualSpace::canonical(m)));
          std::vector<Mat> ops;
          Mat prod = rep.identity();
          for (int k = 0; k < n; ++k) {
            ops.push_back(random_even(rng, rep));
            prod = (prod * ops.back()).eval();
          }
          const cplx exact = oracle::fock_trace(prod);
          worst = std::max(worst, std::abs(trace_formula(rep, ops) - exact) / std::max(1.0, std::abs(exact)));
        }
    o.detail << "max diff vs Fock trace=" << worst << " ";
    o.require(worst <= 1e-10, "trace formula");
  });

  criterion(5, 60, [](Outcome& o) {
    Rng rng(505);
    double worst = 0;
    for (int m : {1, 2})
      for (double beta : {0.5, 1.0, 2.0})
        for (int n : {8, 16}) {
          const SelfDualSpace sp = SelfDualSpace::canonical(m);
          const SelfDualOperator H(sp, random_selfdual_hamiltonian(rng, sp, 1.0));
          const BasisProjection P = diagonalizing_projection(H);
          const TimeGrid grid = TimeGrid::make(n, beta);
          const Mat direct = covariance_direct(H, P, grid).matrix();
          for (int k1 = 0; k1 < grid.n_beta; ++k1)
            for (int k2 = 0; k2 < grid.n_beta; ++k2)
              worst = std::max(worst, numkernel::max_abs(Mat(
                                          covariance_closed_form(H, P, grid, k1, k2) -
                                          direct.block(k1 * 2 * m, k2 * 2 * m, 2 * m, 2 * m))));
        }
    o.detail << "max block diff=" << worst << " ";
    o.require(worst <= 1e-9, "closed form = direct inverse");
  });

  criterion(6, 300, [](Outcome& o) {
    const std::vector<int> ns{4, 8, 16, 24};
    const auto study = [&](const std::string& label, const SelfDualOperator& H, const FockRep& rep,
                           const Mat& W, const Mat& K) {
      const ConvergenceReport r = convergence_study(H, rep, W, K, 1.0, 0.3, ns);
      // independent LHS from eigendecompositions of the exact generators
      const Mat hb = 0.5 * bilinear_element(rep, H.H());
      const Mat num = oracle::hermitian_exp(hb - W) * oracle::hermitian_exp(0.3 * K);
      const cplx lhs = oracle::fock_trace(num) / oracle::fock_trace(oracle::hermitian_exp(hb));
      const double rel = r.rows.back().abs_err / std::abs(lhs);
      o.detail << label << ": order=" << r.empirical_order << " rel err(24)=" << rel << " ";
      o.require(std::abs(r.rows.front().lhs - lhs) <= 1e-10 * std::abs(lhs), label + " LHS oracle");
      o.require(r.empirical_order >= calibration::kFkMinOrder, label + " order");
      o.require(rel < calibration::kFkRelErr, label + " relative error");
      o.require(r.monotone, label + " monotone decrease");
    };
    {
      const LatticeModel m = load_model(model_path("single_mode.json"));
      const SelfDualOperator H = build_hamiltonian(m);
      const FockRep rep(canonical_lattice_projection(m));
      study("dim 2", H, rep, box_observable(rep, m, m.interaction, 0),
            box_observable(rep, m, m.observable, 0));
    }
    {
      Rng rng(606);
      const SelfDualSpace sp = SelfDualSpace::canonical(2);
      const SelfDualOperator H(sp, random_selfdual_hamiltonian(rng, sp, 1.0));
      const FockRep rep(diagonalizing_projection(H));
      const Mat n0 = number_op(rep, 0), n1 = number_op(rep, 1);
      study("dim 4", H, rep, Mat(n0 * n1 + 0.3 * n0), Mat(n0 + n1));
    }
  });

  criterion(7, 120, [](Outcome& o) {
    Rng rng(707);
    const SelfDualSpace sp = SelfDualSpace::canonical(2);
    const SelfDualOperator H(sp, random_selfdual_hamiltonian(rng, sp, 1.0));
    const BasisProjection P = diagonalizing_projection(H);
    const CovarianceOperator C = covariance_direct(H, P, TimeGrid::make(8, 1.0));
    PfaffianSweep sw;
    sw.samples = 1000;
    sw.seed = 71;
    const BoundStats det = det_bound_ratio(C, P, 1000, 72);
    const BoundStats pf = pfaffian_bound_ratio(C, P, sw);
    PfaffianSweep weighted = sw;
    weighted.seed = 73;
    const Eigen::MatrixXd R = Eigen::MatrixXd::NullaryExpr(
        4, 4, [&] { return std::normal_distribution<double>(0.0, 1.0)(rng); });
    weighted.weight = R.transpose() * R;
    const BoundStats pfw = pfaffian_bound_ratio(C, P, weighted);
    PfaffianSweep sharp = sw;
    sharp.seed = 74;
    sharp.paired_subspaces = true;
    const BoundStats pfs = pfaffian_bound_ratio(C, P, sharp);
    o.detail << "max ratios: det=" << det.max_ratio << " pf=" << pf.max_ratio
             << " weighted=" << pfw.max_ratio << " sharpness probe=" << pfs.max_ratio << " ";
    for (const auto* s : {&det, &pf, &pfw, &pfs}) {
      o.require(s->samples >= 1000, "sample count");
      o.require(s->max_ratio <= 1 + 1e-9, "bound ratio <= 1");
    }
    o.require(pfs.max_ratio >= 0.5, "sharpness probe >= 0.5");
  });

  criterion(8, 5, [](Outcome& o) {
    Rng rng(808);
    const SelfDualSpace sp = SelfDualSpace::canonical(2);
    const SelfDualOperator H(sp, random_selfdual_hamiltonian(rng, sp, 1.0));
    const auto err = [&](int n) {
      return numkernel::op_norm(Mat(h_n_approximant(H, 1.0, n).H() - H.H()));
    };
    const double r1 = err(32) / err(16), r2 = err(64) / err(32);
    o.detail << "doubling ratios " << r1 << ", " << r2 << " ";
    o.require(r1 >= 0.2 && r1 <= 0.3 && r2 >= 0.2 && r2 <= 0.3, "n^-2 scaling");
  });

  criterion(9, 120, [](Outcome& o) {
    const LatticeModel chain = with_box(load_model(model_path("chain.json")), 6);
    int applicable = 0, skipped = 0;
    double worst = 0, worst_diff = 0;
    for (const LatticeModel& m : {chain, square_patch(2)}) {
      const Geometry g = lattice_geometry(m);
      const Mat H = build_hamiltonian(m).H();
      const RVec ev = numkernel::hermitian_eig(H).values;
      std::vector<cplx> zs{cplx(0, 3)};
      for (Eigen::Index j = 0; j < ev.size(); j += 3)
        for (double r : {0.5, 1.0, 2.0})
          for (int a = 0; a < 8; ++a) zs.push_back(ev(j) + std::polar(r, (a + 0.5) * M_PI / 4));
      for (const cplx z : zs)
        for (double mu : {0.05, 0.1, 0.2, 0.4})
          for (double eps : {0.25, 0.5, 1.0}) {
            try {
              worst = std::max(worst, combes_thomas_check(g, H, z, mu, eps).max_ratio);
              ++applicable;
            } catch (const Error& e) {
              if (e.code() != Errc::NotApplicable) throw;
              ++skipped;
            }
          }
      for (int k = 0; k <= 8; ++k)
        for (double mu : {0.05, 0.1, 0.2})
          for (double eps : {0.5, 1.0})
            worst_diff = std::max(worst_diff, resolvent_difference_check(g, H, -3.0 + 0.75 * k, mu, eps));
    }
    o.detail << "applicable=" << applicable << " not applicable=" << skipped
             << " max CT ratio=" << worst << " max resolvent-difference ratio=" << worst_diff << " ";
    o.require(applicable > 0, "some grid points applicable");
    o.require(worst <= 1 + 1e-9, "Combes-Thomas bound");
    o.require(worst_diff <= 1 + 1e-9, "factor-12 inequality");
  });

  criterion(10, 300, [](Outcome& o) {
    const LatticeModel m = with_box(load_model(model_path("chain.json")), 6);
    const Geometry g = lattice_geometry(m);
    const Mat H = build_hamiltonian(m).H();
    const Mat P = canonical_lattice_projection(m).P();
    const std::vector<double> betas{1, 2, 4, 8};
    for (double eps : {0.5, 1.0}) {
      const double mu0 = mu_zero(g, H, eps);
      std::vector<double> ds, omegas;
      for (double beta : betas) {
        const double ups = mu0 / beta;
        const double D = fermi_summability(g, H, beta, ups, eps);
        const DecayEstimate e = decay_parameter(g, H, P, beta, ups, eps, 0.0);
        ds.push_back(D);
        omegas.push_back(e.value);
        o.require(D <= fermi_summability_bound(g, H, beta, ups, eps), "Fermi summability bound");
        o.require(e.satisfied, "omega <= 2 (D_P + 1)^2 D (beta + 1)");
      }
      const double xd = fitted_exponent(betas, ds), xw = fitted_exponent(betas, omegas);
      o.detail << "eps=" << eps << ": D exponent=" << xd << " omega exponent=" << xw << " ";
      o.require(xd <= 1 / eps + 0.5, "D exponent");
      o.require(xw <= 1 / eps + 1.5, "omega exponent");
    }
  });

  criterion(11, 300, [](Outcome& o) {
    const LatticeModel m = load_model(model_path("pairing_chain.json"));
    const Geometry g = lattice_geometry(m);
    const SelfDualOperator H = build_hamiltonian(m);
    const double gap = spectral_gap(H.H());
    o.detail << "gap=" << gap << " ";
    for (double eps : {0.5, 1.0})
      for (double gimel : {0.0, gap / 4}) {
        const GappedReport r =
            gapped_summability_check(g, H, {1, 2, 4, 8, 16}, 0.02, eps, gimel);
        double worst = 0;
        for (const auto& e : r.estimates) {
          o.require(e.satisfied, "omega <= gapped bound");
          worst = std::max(worst, e.value / e.bound);
        }
        o.detail << "(eps=" << eps << ", gimel=" << gimel << "): uniformity=" << r.uniformity
                 << " max omega/bound=" << worst << " ";
        o.require(r.uniformity <= calibration::kGappedUniformity, "uniformity factor");
      }
  });

  criterion(12, 120, [](Outcome& o) {
    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path() / "fermi_acceptance_determinism";
    fs::remove_all(base);
    bool identical = true;
    for (const char* model : {"single_mode.json", "chain.json"}) {
      std::string outs[2];
      for (int run = 0; run < 2; ++run) {
        const fs::path dir = base / (std::string(model) + std::to_string(run));
        const std::string cmd = std::string(FERMI_CLI_PATH) + " verify --model " +
                                model_path(model) + " --seed 11 --format json --out " +
                                dir.string() + " > /dev/null 2>&1";
        const int rc = std::system(cmd.c_str());
        o.require(rc == 0, std::string("verify exit status on ") + model);
        outs[run] = slurp(dir / "verify.json");
      }
      identical = identical && !outs[0].empty() && outs[0] == outs[1];
    }
    fs::remove_all(base);
    o.detail << (identical ? "reports byte-identical " : "reports differ ");
    o.require(identical, "byte-identical reports");
  });

  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
