#pragma once

#include <cmath>
#include <future>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "maxlab/assembly.hpp"
#include "maxlab/errors.hpp"
#include "maxlab/helmholtz.hpp"
#include "maxlab/material.hpp"
#include "maxlab/mesh.hpp"
#include "maxlab/spectral.hpp"

namespace maxlab {

/// Instantiates one refinement level of a domain/material pair: generated
/// domains rebuild with n subdivisions per axis, imported meshes refine the
/// file mesh n times (file-backed materials descend with the refinement).
inline std::pair<Mesh, MaterialField> make_level(const DomainSpec& domain,
                                                 const EpsilonSpec& eps, int n) {
  if (domain.kind == DomainSpec::Kind::Imported) {
    Mesh mesh = import_mesh(domain.mesh_path);
    std::optional<MaterialField> mat;
    if (eps.kind == EpsilonSpec::Kind::File) mat = read_material_field(mesh, eps.path);
    for (int r = 0; r < n; ++r) {
      mesh = refine_uniform(mesh);
      if (mat) mat = mat->refined(mesh);
    }
    MaterialField m = mat ? std::move(*mat) : eps.instantiate(mesh);
    return {std::move(mesh), std::move(m)};
  }
  Mesh mesh = build_domain_mesh(domain, n);
  MaterialField m = eps.instantiate(mesh);
  return {std::move(mesh), std::move(m)};
}

/// Eigenvalue samples (h, value) across refinement levels plus their
/// Richardson limit.
struct EigenvalueSeries {
  std::vector<std::pair<double, double>> samples;
  Extrapolation extrapolated;
};

namespace detail {

inline double first_dirichlet(const Mesh& mesh, const MaterialField& eps) {
  Pencil p = assemble_p1(mesh, eps, BC::Essential);
  return eig_gsym(p).eigenvalues[0];
}

inline double first_nonzero_neumann(const Mesh& mesh, const MaterialField& eps) {
  Pencil p = assemble_p1(mesh, eps, BC::None);
  SpectralResult r = eig_gsym(p);
  KernelSplit s = split_kernel(r, 1);
  if (!s.matches())
    throw ComputationError("constants", "neumann_mu2",
                           "Neumann scalar kernel has dimension " + std::to_string(s.detected) +
                               ", expected 1 (constants); mesh or assembly is inconsistent");
  return s.smallest_nonzero;
}

struct MaxwellLevel {
  double smallest_nonzero;
  int harmonic_dim;
};

inline MaxwellLevel maxwell_level(const Mesh& mesh, const MaterialField& eps, FieldBC bc) {
  Pencil p = assemble_nedelec(mesh, eps, edge_bc(bc));
  SpectralResult r = eig_gsym(p);
  const int rank_g = (bc == FieldBC::Tangential) ? mesh.n_interior_vertices()
                                                 : mesh.n_vertices() - 1;
  KernelSplit s = split_kernel(r, rank_g);
  if (s.detected < rank_g)
    throw ComputationError("constants", "maxwell_lambda",
                           "edge kernel (" + std::to_string(s.detected) +
                               ") smaller than the gradient rank (" + std::to_string(rank_g) + ")");
  return {s.smallest_nonzero, s.surplus()};
}

inline Extrapolation extrapolate_or_value(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() == 1) {
    Extrapolation e;
    e.value = samples[0].second;
    return e;
  }
  return richardson_extrapolate(samples);
}

} // namespace detail

/// First eigenvalue of the weighted Dirichlet scalar pencil per level,
/// extrapolated. Its inverse square root is the zero-trace Poincare
/// (Friedrichs) constant when eps is the identity.
inline EigenvalueSeries dirichlet_lambda1(const DomainSpec& domain, const EpsilonSpec& eps,
                                          const std::vector<int>& levels) {
  if (levels.empty()) throw ConfigError("constants", "dirichlet_lambda1", "need at least one level");
  EigenvalueSeries s;
  for (int n : levels) {
    auto [mesh, mat] = make_level(domain, eps, n);
    s.samples.emplace_back(mesh.mesh_size(), detail::first_dirichlet(mesh, mat));
  }
  s.extrapolated = detail::extrapolate_or_value(s.samples);
  return s;
}

/// First nonzero eigenvalue of the weighted Neumann scalar pencil per level
/// (the kernel must be exactly the constants), extrapolated.
inline EigenvalueSeries neumann_mu2(const DomainSpec& domain, const EpsilonSpec& eps,
                                    const std::vector<int>& levels) {
  if (levels.empty()) throw ConfigError("constants", "neumann_mu2", "need at least one level");
  EigenvalueSeries s;
  for (int n : levels) {
    auto [mesh, mat] = make_level(domain, eps, n);
    s.samples.emplace_back(mesh.mesh_size(), detail::first_nonzero_neumann(mesh, mat));
  }
  s.extrapolated = detail::extrapolate_or_value(s.samples);
  return s;
}

/// Smallest nonzero eigenvalue of the edge pencil with the given boundary
/// condition per level, extrapolated, together with the detected harmonic
/// dimension (kernel surplus over the gradient rank). The harmonic dimension
/// is a topological invariant and must not change across levels.
inline std::pair<EigenvalueSeries, int> maxwell_lambda(const DomainSpec& domain,
                                                       const EpsilonSpec& eps, FieldBC bc,
                                                       const std::vector<int>& levels) {
  if (levels.empty()) throw ConfigError("constants", "maxwell_lambda", "need at least one level");
  EigenvalueSeries s;
  int dim_h = -1;
  for (int n : levels) {
    auto [mesh, mat] = make_level(domain, eps, n);
    auto lvl = detail::maxwell_level(mesh, mat, bc);
    if (dim_h >= 0 && lvl.harmonic_dim != dim_h)
      throw ComputationError("constants", "maxwell_lambda",
                             "harmonic dimension changed across levels (" + std::to_string(dim_h) +
                                 " -> " + std::to_string(lvl.harmonic_dim) + ")");
    dim_h = lvl.harmonic_dim;
    s.samples.emplace_back(mesh.mesh_size(), lvl.smallest_nonzero);
  }
  s.extrapolated = detail::extrapolate_or_value(s.samples);
  return {std::move(s), dim_h};
}

/// Raw per-level eigenvalues entering a constants report. lambda1/mu2 are the
/// unweighted scalar eigenvalues; the _eps variants use the weighted pencil
/// (identical when eps is the identity). lambda_max_t/lambda_max_n are the
/// smallest nonzero eigenvalues of the weighted edge pencils.
struct LevelData {
  int n = 0;
  double h = 0;
  double lambda1 = 0, mu2 = 0;
  double lambda1_eps = 0, mu2_eps = 0;
  double lambda_max_t = 0, lambda_max_n = 0;
  int d_D = 0, d_N = 0;
};

struct ExtrapolatedValues {
  Extrapolation lambda1, mu2, lambda1_eps, mu2_eps, lambda_max_t, lambda_max_n;
};

struct ConstantsValues {
  double c_p0 = 0, c_p = 0, c_mt = 0, c_mn = 0;
  double eps_lower = 1, eps_upper = 1, eps_hat = 1;
  double diam_over_pi = 0;
  double inv_op_norm = 0; // sqrt(c_mt^2 + 1)
};

/// One reported inequality: satisfied iff lhs <= rhs + 1e-12 |rhs|. Checks
/// whose hypotheses the domain/material do not meet are skipped, not failed;
/// status is "pass", "fail", or "skipped: <reason>".
struct InequalityCheck {
  std::string name;
  double lhs = 0;
  double rhs = 0;
  bool satisfied = true;
  double margin = 0;
  std::string status = "pass";

  bool skipped() const { return status.rfind("skipped", 0) == 0; }
};

struct ConstantsReport {
  std::vector<LevelData> levels;
  ExtrapolatedValues extrapolated;
  ConstantsValues constants;
  int d_D = 0, d_N = 0;
  std::vector<InequalityCheck> checks;

  bool all_checks_satisfied() const {
    for (const auto& c : checks)
      if (!c.skipped() && !c.satisfied) return false;
    return true;
  }
};

namespace detail {

inline LevelData compute_level(const DomainSpec& domain, const EpsilonSpec& eps, int n) {
  auto [mesh, mat] = make_level(domain, eps, n);
  LevelData lvl;
  lvl.n = n;
  lvl.h = mesh.mesh_size();
  lvl.lambda1_eps = first_dirichlet(mesh, mat);
  lvl.mu2_eps = first_nonzero_neumann(mesh, mat);
  if (eps.is_identity()) {
    lvl.lambda1 = lvl.lambda1_eps;
    lvl.mu2 = lvl.mu2_eps;
  } else {
    MaterialField id = MaterialField::identity(mesh);
    lvl.lambda1 = first_dirichlet(mesh, id);
    lvl.mu2 = first_nonzero_neumann(mesh, id);
  }
  auto t = maxwell_level(mesh, mat, FieldBC::Tangential);
  auto nn = maxwell_level(mesh, mat, FieldBC::Normal);
  lvl.lambda_max_t = t.smallest_nonzero;
  lvl.lambda_max_n = nn.smallest_nonzero;
  lvl.d_D = t.harmonic_dim;
  lvl.d_N = nn.harmonic_dim;
  return lvl;
}

} // namespace detail

/// Computes the full constants report for a domain/material pair across
/// refinement levels:
///  - raw and extrapolated eigenvalues of the four pencils,
///  - the Poincare constants c_p0 = 1/sqrt(lambda1), c_p = 1/sqrt(mu2),
///  - the Maxwell constants through the eps-orthogonal splitting,
///      c_mt = 1/sqrt(min(lambda1_eps, lambda_max_t)),
///      c_mn = 1/sqrt(min(mu2_eps, lambda_max_n)),
///    (the gradient-part quotient over discrete gradients reduces exactly to
///    the weighted scalar pencil, so no separate quotient pencil is solved),
///  - the inequality checks with the skip policy for hypotheses the
///    domain/material do not meet.
/// Levels may be computed concurrently (jobs > 1); the merge is ordered, so
/// reports are reproducible bit for bit.
inline ConstantsReport constants_report(const DomainSpec& domain, const EpsilonSpec& eps,
                                        const std::vector<int>& levels, int jobs = 1) {
  const char* op = "constants_report";
  if (levels.empty()) throw ConfigError("constants", op, "need at least one level");

  ConstantsReport rep;
  rep.levels.resize(levels.size());
  if (jobs <= 1 || levels.size() == 1) {
    for (std::size_t i = 0; i < levels.size(); ++i)
      rep.levels[i] = detail::compute_level(domain, eps, levels[i]);
  } else {
    for (std::size_t base = 0; base < levels.size(); base += jobs) {
      std::vector<std::future<LevelData>> batch;
      for (std::size_t i = base; i < std::min(levels.size(), base + jobs); ++i)
        batch.push_back(std::async(std::launch::async,
                                   [&domain, &eps, n = levels[i]] { return detail::compute_level(domain, eps, n); }));
      for (std::size_t i = 0; i < batch.size(); ++i) rep.levels[base + i] = batch[i].get();
    }
  }

  for (std::size_t i = 1; i < rep.levels.size(); ++i)
    if (rep.levels[i].d_D != rep.levels[0].d_D || rep.levels[i].d_N != rep.levels[0].d_N)
      throw ComputationError("constants", op, "harmonic dimension changed across levels");
  rep.d_D = rep.levels[0].d_D;
  rep.d_N = rep.levels[0].d_N;

  auto series = [&](auto member) {
    std::vector<std::pair<double, double>> s;
    for (const auto& lvl : rep.levels) s.emplace_back(lvl.h, lvl.*member);
    return detail::extrapolate_or_value(s);
  };
  rep.extrapolated.lambda1 = series(&LevelData::lambda1);
  rep.extrapolated.mu2 = series(&LevelData::mu2);
  rep.extrapolated.lambda1_eps = series(&LevelData::lambda1_eps);
  rep.extrapolated.mu2_eps = series(&LevelData::mu2_eps);
  rep.extrapolated.lambda_max_t = series(&LevelData::lambda_max_t);
  rep.extrapolated.lambda_max_n = series(&LevelData::lambda_max_n);

  // Material bounds and diameter from the finest level.
  auto [fine_mesh, fine_mat] = make_level(domain, eps, levels.back());
  EpsBounds bounds = eps_bounds(fine_mat);

  auto& c = rep.constants;
  c.eps_lower = bounds.eps_lower;
  c.eps_upper = bounds.eps_upper;
  c.eps_hat = bounds.eps_hat;
  c.c_p0 = 1.0 / std::sqrt(rep.extrapolated.lambda1.value);
  c.c_p = 1.0 / std::sqrt(rep.extrapolated.mu2.value);
  c.c_mt = 1.0 / std::sqrt(std::min(rep.extrapolated.lambda1_eps.value,
                                    rep.extrapolated.lambda_max_t.value));
  c.c_mn = 1.0 / std::sqrt(std::min(rep.extrapolated.mu2_eps.value,
                                    rep.extrapolated.lambda_max_n.value));
  c.diam_over_pi = fine_mesh.diameter() / std::numbers::pi;
  c.inv_op_norm = std::sqrt(c.c_mt * c.c_mt + 1.0);

  if (!(c.c_p0 > 0 && c.c_p > 0 && c.c_mt > 0 && c.c_mn > 0))
    throw ComputationError("constants", op, "constants must be positive");
  if (!(c.c_p0 < c.c_p))
    throw ComputationError("constants", op, "c_p0 < c_p violated at the extrapolated level");

  const bool convex = domain.convex;
  const bool ident = eps.is_identity();
  auto add = [&](const std::string& name, double lhs, double rhs, bool applicable,
                 const std::string& skip_reason) {
    InequalityCheck chk;
    chk.name = name;
    chk.lhs = lhs;
    chk.rhs = rhs;
    chk.margin = rhs - lhs;
    chk.satisfied = lhs <= rhs + 1e-12 * std::abs(rhs);
    chk.status = applicable ? (chk.satisfied ? "pass" : "fail") : "skipped: " + skip_reason;
    if (!applicable) chk.satisfied = true;
    rep.checks.push_back(std::move(chk));
  };
  const std::string nonconv = "nonconvex domain";
  const std::string nonident = ident ? nonconv : "requires identity epsilon";

  // Comparisons that collapse to attained equalities in exact arithmetic
  // (c_mt = c_mn = c_p in 2D, c_mn = c_p for identity eps on convex domains)
  // get a 2% slack at the extrapolated level; the sign of a sharp comparison
  // of two independently discretized equal quantities is noise.
  add("c_p0 <= c_mt", c.c_p0, c.c_mt, convex && ident, nonident);
  add("c_mt <= c_mn (2% tol)", c.c_mt, 1.02 * c.c_mn, true, "");
  add("|c_mn - c_p| <= 2% c_p", std::abs(c.c_mn - c.c_p), 0.02 * c.c_p, convex && ident, nonident);
  add("maxwell upper bounds (2% tol)",
      std::max(c.c_mn - 1.02 * c.eps_hat * c.c_p,
               c.c_mt - 1.02 * std::max(c.eps_lower * c.c_p0, c.eps_upper * c.c_p)),
      0.0, convex, nonconv);
  add("maxwell lower bounds",
      std::max(c.c_p0 / std::pow(c.eps_hat, 3) - c.c_mt,
               c.c_p / std::pow(c.eps_hat, 3) - c.c_mn),
      0.0, true, "");
  add("c_p <= diam/pi", c.c_p, c.diam_over_pi, convex, nonconv);

  return rep;
}

/// One row of the Dirichlet/Neumann interlacing table: the n-th Dirichlet
/// eigenvalue against the (n+1)-th Neumann eigenvalue (zero included), both
/// at extrapolated values, with the comparison mu_{n+1} <= lambda_n.
struct InterlacingPair {
  int index = 0; // n
  double lambda_n = 0;
  double mu_np1 = 0;
  bool satisfied = false;
};

/// Extrapolated interlacing table for the unweighted Laplace pencils.
inline std::vector<InterlacingPair> interlacing_table(const DomainSpec& domain, int k,
                                                      const std::vector<int>& levels) {
  const char* op = "interlacing_table";
  if (k < 0) throw ConfigError("constants", op, "k must be >= 0");
  if (k == 0) return {};
  if (levels.empty()) throw ConfigError("constants", op, "need at least one level");

  EpsilonSpec ident;
  std::vector<std::vector<std::pair<double, double>>> dir(k), neu(k);
  for (int n : levels) {
    auto [mesh, mat] = make_level(domain, ident, n);
    Pencil pd = assemble_p1(mesh, mat, BC::Essential);
    SpectralResult rd = eig_gsym(pd);
    if (rd.n() < k)
      throw ComputationError("constants", op,
                             "level " + std::to_string(n) + " has only " + std::to_string(rd.n()) +
                                 " Dirichlet dofs, need " + std::to_string(k));
    Pencil pn = assemble_p1(mesh, mat, BC::None);
    SpectralResult rn = eig_gsym(pn);
    KernelSplit s = split_kernel(rn, 1);
    if (!s.matches() || rn.n() < s.detected + k)
      throw ComputationError("constants", op, "Neumann spectrum too short for the requested k");
    const double h = mesh.mesh_size();
    for (int i = 0; i < k; ++i) {
      dir[i].emplace_back(h, rd.eigenvalues[i]);
      neu[i].emplace_back(h, rn.eigenvalues[s.detected + i]);
    }
  }
  std::vector<InterlacingPair> table(k);
  for (int i = 0; i < k; ++i) {
    table[i].index = i + 1;
    table[i].lambda_n = detail::extrapolate_or_value(dir[i]).value;
    table[i].mu_np1 = detail::extrapolate_or_value(neu[i]).value;
    table[i].satisfied = table[i].mu_np1 <= table[i].lambda_n * (1.0 + 1e-12);
  }
  return table;
}

} // namespace maxlab
