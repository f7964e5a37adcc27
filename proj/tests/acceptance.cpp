// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit code 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "maxlab/maxlab.hpp"

using namespace maxlab;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;
constexpr double pi2 = pi * pi;

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s  criterion %2d: %s — %s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

void run_criterion(int id, const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
  try {
    auto [pass, detail] = body();
    report(id, name, pass, detail);
  } catch (const std::exception& e) {
    report(id, name, false, std::string("exception: ") + e.what());
  }
}

double rel_err(double value, double target) { return std::abs(value - target) / std::abs(target); }

DomainSpec box_domain(std::vector<double> dims) {
  DomainSpec d;
  d.kind = DomainSpec::Kind::Box3d;
  d.dimensions = std::move(dims);
  return d;
}

DomainSpec rect_domain(std::vector<double> dims) {
  DomainSpec d;
  d.kind = DomainSpec::Kind::Rect2d;
  d.dimensions = std::move(dims);
  return d;
}

DomainSpec hole_domain() {
  DomainSpec d;
  d.kind = DomainSpec::Kind::SquareWithHole2d;
  d.dimensions = {3, 1};
  d.convex = false;
  return d;
}

EpsilonSpec identity_eps() { return {}; }

EpsilonSpec scalar_eps(double s) {
  EpsilonSpec e;
  e.kind = EpsilonSpec::Kind::Scalar;
  e.value = s;
  return e;
}

fs::path work_dir() {
  fs::path dir = fs::temp_directory_path() / "maxlab_acceptance";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 1. Unit cube, identity eps, levels {2,3,4}: extrapolated eigenvalues near
//    the analytic spectra, the constants chain with positive margins,
//    c_mn = c_p within 2%, under the two-minute budget.
std::pair<bool, std::string> criterion1() {
  auto t0 = std::chrono::steady_clock::now();
  ConstantsReport rep = constants_report(box_domain({1, 1, 1}), identity_eps(), {2, 3, 4});
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::ostringstream d;
  bool ok = true;
  auto need = [&](bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      d << " VIOLATED:" << what;
    }
  };
  need(rel_err(rep.extrapolated.lambda1.value, 3 * pi2) <= 0.03, "lambda1 within 3%");
  need(rel_err(rep.extrapolated.mu2.value, pi2) <= 0.03, "mu2 within 3%");
  need(rel_err(rep.extrapolated.lambda_max_t.value, 2 * pi2) <= 0.05, "lambda_max_t within 5%");
  const auto& c = rep.constants;
  need(c.c_p0 < c.c_mt, "c_p0 < c_mt");
  need(c.c_mt < c.c_mn, "c_mt < c_mn");
  need(c.c_mn < c.diam_over_pi, "c_mn < diam/pi");
  need(std::abs(c.c_mn - c.c_p) <= 0.02 * c.c_p, "|c_mn - c_p| <= 2%");
  need(seconds <= 120.0, "runtime <= 2 min");
  d << " lambda1*=" << rep.extrapolated.lambda1.value << " mu2*=" << rep.extrapolated.mu2.value
    << " lambda_max_t*=" << rep.extrapolated.lambda_max_t.value << " chain=(" << c.c_p0 << ", "
    << c.c_mt << ", " << c.c_mn << ", " << c.diam_over_pi << ") runtime=" << seconds << "s";
  return {ok, d.str()};
}

// 2. Box (1,2,3), identity eps: mu2 within 5% of pi^2/9, lambda_max_t within
//    5% of 13 pi^2/36, chain checks pass.
std::pair<bool, std::string> criterion2() {
  ConstantsReport rep = constants_report(box_domain({1, 2, 3}), identity_eps(), {2, 3, 4});
  std::ostringstream d;
  bool ok = true;
  if (rel_err(rep.extrapolated.mu2.value, pi2 / 9) > 0.05) {
    ok = false;
    d << " VIOLATED:mu2 within 5%";
  }
  if (rel_err(rep.extrapolated.lambda_max_t.value, 13 * pi2 / 36) > 0.05) {
    ok = false;
    d << " VIOLATED:lambda_max_t within 5%";
  }
  if (!rep.all_checks_satisfied()) {
    ok = false;
    d << " VIOLATED:chain checks";
  }
  d << " mu2*=" << rep.extrapolated.mu2.value << " (target " << pi2 / 9
    << ") lambda_max_t*=" << rep.extrapolated.lambda_max_t.value << " (target " << 13 * pi2 / 36
    << ")";
  return {ok, d.str()};
}

// 3. Unit square, levels {8,16}: per-level duality of the tangential edge
//    spectrum with the Neumann spectrum (first three nonzero, 5% each),
//    c_mn = c_p within 2%, c_p <= diam/pi = sqrt(2)/pi.
std::pair<bool, std::string> criterion3() {
  bool ok = true;
  std::ostringstream d;
  double worst = 0;
  for (int n : {8, 16}) {
    Mesh m = build_rect_mesh({1, 1}, n);
    MaterialField id = MaterialField::identity(m);
    SpectralResult edge = eig_gsym(assemble_nedelec(m, id, BC::Essential));
    KernelSplit es = split_kernel(edge, m.n_interior_vertices());
    SpectralResult neum = eig_gsym(assemble_p1(m, id, BC::None));
    KernelSplit ns = split_kernel(neum, 1);
    for (int i = 0; i < 3; ++i) {
      double e = rel_err(edge.eigenvalues[es.detected + i], neum.eigenvalues[ns.detected + i]);
      worst = std::max(worst, e);
      if (e > 0.05) ok = false;
    }
  }
  ConstantsReport rep = constants_report(rect_domain({1, 1}), identity_eps(), {8, 16});
  const auto& c = rep.constants;
  if (std::abs(c.c_mn - c.c_p) > 0.02 * c.c_p) ok = false;
  if (!(c.c_p <= std::sqrt(2.0) / pi + 1e-12)) ok = false;
  if (rel_err(c.diam_over_pi, std::sqrt(2.0) / pi) > 1e-12) ok = false;
  d << " worst duality mismatch=" << worst * 100 << "% |c_mn-c_p|/c_p="
    << std::abs(c.c_mn - c.c_p) / c.c_p << " c_p=" << c.c_p << " diam/pi=" << c.diam_over_pi;
  return {ok, d.str()};
}

// 4. The grad:grad and rot-div vector-P1 stiffness matrices agree entrywise
//    to 1e-12 relative on every catalogue mesh.
std::pair<bool, std::string> criterion4() {
  bool ok = true;
  std::ostringstream d;
  double worst = 0;
  auto meshes = std::vector<Mesh>{};
  meshes.push_back(build_box_mesh({1, 1, 1}, 2));
  meshes.push_back(build_box_mesh({1, 2, 3}, 2));
  meshes.push_back(build_rect_mesh({1, 1}, 4));
  meshes.push_back(build_rect_mesh({2, 1}, 4));
  meshes.push_back(build_square_with_hole(3, 1, 6));
  for (const Mesh& m : meshes) {
    auto [grad, rotdiv] = assemble_vector_p1_forms(m, BC::Essential);
    Eigen::MatrixXd ga = grad.A.dense(), ra = rotdiv.A.dense();
    double scale = ga.cwiseAbs().maxCoeff();
    double err = (ga - ra).cwiseAbs().maxCoeff() / scale;
    worst = std::max(worst, err);
    if (err > 1e-12) ok = false;
  }
  d << " worst entrywise mismatch=" << worst << " over " << meshes.size() << " meshes";
  return {ok, d.str()};
}

// 5. Doubling eps scales P1 eigenvalues by exactly 2 and edge eigenvalues by
//    exactly 1/2 (1e-12 relative); the upper-bound check passes with
//    eps_lower = 2^{-1/2}, eps_upper = sqrt(2) on the unit cube.
std::pair<bool, std::string> criterion5() {
  bool ok = true;
  std::ostringstream d;
  Mesh m = build_box_mesh({1, 1, 1}, 2);
  MaterialField one = MaterialField::identity(m);
  MaterialField two = MaterialField::scalar(m, 2.0);

  Eigen::VectorXd p1 = eig_gsym(assemble_p1(m, one, BC::Essential)).eigenvalues;
  Eigen::VectorXd p2 = eig_gsym(assemble_p1(m, two, BC::Essential)).eigenvalues;
  double worst = 0;
  for (int i = 0; i < p1.size(); ++i) worst = std::max(worst, rel_err(p2[i], 2.0 * p1[i]));
  Eigen::VectorXd e1 = eig_gsym(assemble_nedelec(m, one, BC::None)).eigenvalues;
  Eigen::VectorXd e2 = eig_gsym(assemble_nedelec(m, two, BC::None)).eigenvalues;
  for (int i = 0; i < e1.size(); ++i)
    if (std::abs(e1[i]) > 1e-8) worst = std::max(worst, rel_err(e2[i], 0.5 * e1[i]));
  if (worst > 1e-12) {
    ok = false;
    d << " VIOLATED:scaling";
  }

  ConstantsReport rep = constants_report(box_domain({1, 1, 1}), scalar_eps(2.0), {2, 3, 4});
  bool bounds_ok = rel_err(rep.constants.eps_lower, 1 / std::sqrt(2.0)) < 1e-14 &&
                   rel_err(rep.constants.eps_upper, std::sqrt(2.0)) < 1e-14;
  bool upper_ok = false;
  for (const auto& chk : rep.checks)
    if (chk.name.starts_with("maxwell upper bounds")) upper_ok = chk.status == "pass";
  if (!bounds_ok || !upper_ok) {
    ok = false;
    d << " VIOLATED:upper-bound check";
  }
  d << " worst scaling error=" << worst << " eps_lower=" << rep.constants.eps_lower
    << " eps_upper=" << rep.constants.eps_upper;
  return {ok, d.str()};
}

// 6. The square-with-hole detects d_D = d_N = 1 stably across two levels and
//    skips (rather than fails) the convex-only checks.
std::pair<bool, std::string> criterion6() {
  ConstantsReport rep = constants_report(hole_domain(), identity_eps(), {6, 12});
  bool ok = rep.d_D == 1 && rep.d_N == 1;
  for (const auto& lvl : rep.levels) ok = ok && lvl.d_D == 1 && lvl.d_N == 1;
  int skipped = 0;
  for (const auto& chk : rep.checks) {
    if (chk.status == "fail") ok = false;
    if (chk.skipped()) ++skipped;
  }
  if (skipped == 0) ok = false;
  std::ostringstream d;
  d << " d_D=" << rep.d_D << " d_N=" << rep.d_N << " skipped_checks=" << skipped;
  return {ok, d.str()};
}

// 7. Helmholtz property suite: 100 seeded random fields per (domain, bc),
//    reconstruction to 1e-12 relative, pairwise orthogonality to 1e-10.
std::pair<bool, std::string> criterion7() {
  bool ok = true;
  double worst_recon = 0, worst_ortho = 0;
  std::mt19937 rng(424242);
  std::uniform_real_distribution<double> dist(-1, 1);
  std::vector<Mesh> meshes;
  meshes.push_back(build_box_mesh({1, 1, 1}, 2));
  meshes.push_back(build_box_mesh({1, 2, 3}, 2));
  meshes.push_back(build_rect_mesh({1, 1}, 8));
  meshes.push_back(build_square_with_hole(3, 1, 6));
  for (const Mesh& m : meshes) {
    MaterialField id = MaterialField::identity(m);
    for (FieldBC bc : {FieldBC::Tangential, FieldBC::Normal}) {
      HelmholtzContext ctx(m, id, bc);
      for (int f = 0; f < 100; ++f) {
        Eigen::VectorXd field(ctx.pencil().n());
        for (int i = 0; i < field.size(); ++i) field[i] = dist(rng);
        Decomposition dc = ctx.decompose(field);
        worst_recon = std::max(worst_recon, dc.reconstruction_residual);
        worst_ortho = std::max({worst_ortho, dc.ortho_grad_harmonic, dc.ortho_grad_solenoidal,
                                dc.ortho_harmonic_solenoidal});
      }
    }
  }
  if (worst_recon > 1e-12 || worst_ortho > 1e-10) ok = false;
  std::ostringstream d;
  d << " worst reconstruction=" << worst_recon << " worst orthogonality=" << worst_ortho
    << " (4 domains x 2 bcs x 100 fields)";
  return {ok, d.str()};
}

// 8. Lower bounds at extrapolated values on cube and square for identity and
//    doubled eps: c_p0/eps_hat^3 <= c_mt and c_p/eps_hat^3 <= c_mn.
std::pair<bool, std::string> criterion8() {
  bool ok = true;
  std::ostringstream d;
  double worst = 1e300;
  for (const DomainSpec& dom : {box_domain({1, 1, 1}), rect_domain({1, 1})}) {
    std::vector<int> levels = dom.kind == DomainSpec::Kind::Box3d ? std::vector<int>{2, 3, 4}
                                                                  : std::vector<int>{8, 16};
    for (double s : {1.0, 2.0}) {
      ConstantsReport rep =
          constants_report(dom, s == 1.0 ? identity_eps() : scalar_eps(s), levels);
      const auto& c = rep.constants;
      double h3 = std::pow(c.eps_hat, 3);
      worst = std::min({worst, c.c_mt - c.c_p0 / h3, c.c_mn - c.c_p / h3});
      if (!(c.c_p0 / h3 <= c.c_mt + 1e-12) || !(c.c_p / h3 <= c.c_mn + 1e-12)) ok = false;
    }
  }
  d << " smallest margin=" << worst;
  return {ok, d.str()};
}

// 9. Interlacing table with k = 3 on the unit square and cube: at the
//    extrapolated level mu_{n+1} <= lambda_n for all n <= 3.
std::pair<bool, std::string> criterion9() {
  bool ok = true;
  std::ostringstream d;
  auto sq = interlacing_table(rect_domain({1, 1}), 3, {8, 16});
  auto cu = interlacing_table(box_domain({1, 1, 1}), 3, {3, 4});
  for (const auto& table : {sq, cu}) {
    if (table.size() != 3) ok = false;
    for (const auto& p : table) {
      if (!p.satisfied) ok = false;
      d << " (l" << p.index << "=" << p.lambda_n << ",m" << p.index + 1 << "=" << p.mu_np1 << ")";
    }
  }
  return {ok, d.str()};
}

// 10. Determinism: two CLI runs of the cube config produce byte-identical
//     JSON reports.
std::pair<bool, std::string> criterion10() {
  fs::path dir = work_dir();
  fs::path cfg = dir / "cube_config.json";
  {
    std::ofstream out(cfg);
    out << R"({
  "domain": {"kind": "box3d", "dims": [1, 1, 1]},
  "epsilon": {"kind": "identity"},
  "levels": [2, 3],
  "tasks": ["constants", "helmholtz"],
  "helmholtz_fields": 25
})";
  }
  fs::path ja = dir / "a.json", jb = dir / "b.json";
  std::string base = std::string(MAXLAB_CLI_PATH) + " --config " + cfg.string();
  int rc1 = std::system((base + " --out-json " + ja.string()).c_str());
  int rc2 = std::system((base + " --out-json " + jb.string()).c_str());
  bool ok = rc1 == 0 && rc2 == 0;
  std::string a = slurp(ja), b = slurp(jb);
  if (a.empty() || a != b) ok = false;
  std::ostringstream d;
  d << " exit codes " << rc1 << "/" << rc2 << ", " << a.size() << " bytes, byte-identical="
    << (a == b && !a.empty() ? "yes" : "no");
  return {ok, d.str()};
}

} // namespace

int main() {
  std::printf("acceptance suite\n");
  run_criterion(1, "unit cube chain and spectra", criterion1);
  run_criterion(2, "box (1,2,3) spectra", criterion2);
  run_criterion(3, "unit square 2D duality", criterion3);
  run_criterion(4, "vector-P1 matrix identity", criterion4);
  run_criterion(5, "eps scaling and upper bounds", criterion5);
  run_criterion(6, "square-with-hole topology", criterion6);
  run_criterion(7, "Helmholtz property suite", criterion7);
  run_criterion(8, "lower-bound checks", criterion8);
  run_criterion(9, "interlacing table", criterion9);
  run_criterion(10, "byte-identical reports", criterion10);
  if (failures == 0) {
    std::printf("all 10 criteria passed\n");
    return 0;
  }
  std::printf("%d criteria FAILED\n", failures);
  return 1;
}
