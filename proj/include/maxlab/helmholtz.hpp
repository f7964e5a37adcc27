#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "maxlab/assembly.hpp"
#include "maxlab/errors.hpp"
#include "maxlab/spectral.hpp"

namespace maxlab {

/// Boundary condition of a vector field problem: Tangential constrains the
/// tangential trace (essential edge bc, paired with the Dirichlet scalar
/// space), Normal leaves the edge space unconstrained (paired with the
/// Neumann scalar space).
enum class FieldBC { Tangential, Normal };

inline BC edge_bc(FieldBC bc) { return bc == FieldBC::Tangential ? BC::Essential : BC::None; }
inline BC scalar_bc(FieldBC bc) { return bc == FieldBC::Tangential ? BC::Essential : BC::None; }

/// eps-orthogonal splitting of an edge-element field into a discrete
/// gradient, a discrete harmonic field, and the solenoidal remainder.
/// All vectors live in the free-dof coefficients of the edge space.
struct Decomposition {
  Eigen::VectorXd input;
  Eigen::VectorXd gradient;
  Eigen::VectorXd harmonic;
  Eigen::VectorXd solenoidal;

  double reconstruction_residual = 0; // ||input - sum|| / ||input||
  double ortho_grad_harmonic = 0;     // relative eps-inner products
  double ortho_grad_solenoidal = 0;
  double ortho_harmonic_solenoidal = 0;
};

/// Precomputed machinery for decompositions on one (mesh, eps, bc) triple:
/// the edge pencil, the discrete gradient, the factorized weighted scalar
/// stiffness, and the harmonic basis. Decompositions of distinct fields may
/// run concurrently; the context is read-only after construction.
class HelmholtzContext {
public:
  HelmholtzContext(const Mesh& mesh, const MaterialField& eps, FieldBC bc)
      : bc_(bc), pencil_(assemble_nedelec(mesh, eps, edge_bc(bc))) {
    const char* op = "helmholtz_context";
    gradient_ = discrete_gradient(mesh, edge_bc(bc));
    // rank(G): the Dirichlet scalar space has no constants (the boundary is
    // nonempty), so G has full column rank; the Neumann space loses one
    // dimension to the constants.
    gradient_rank_ = (bc == FieldBC::Tangential)
                         ? static_cast<int>(gradient_.cols())
                         : static_cast<int>(gradient_.cols()) - 1;

    Pencil scalar = assemble_p1(mesh, eps, scalar_bc(bc));
    const int m = scalar.n();
    pinned_ = (bc == FieldBC::Normal); // remove one dof to fix the constant
    const int red = pinned_ ? m - 1 : m;
    if (red <= 0) throw ComputationError("helmholtz", op, "scalar space is empty (mesh too coarse)");
    Eigen::SparseMatrix<double> a = scalar.A.full();
    if (pinned_) {
      std::vector<Eigen::Triplet<double>> trips;
      for (int k = 0; k < a.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it)
          if (it.row() < red && it.col() < red)
            trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
      a.resize(red, red);
      a.setFromTriplets(trips.begin(), trips.end());
    }
    solver_.compute(a);
    if (solver_.info() != Eigen::Success)
      throw ComputationError("helmholtz", op, "weighted scalar stiffness factorization failed");

    build_harmonic_basis(op);
  }

  const Pencil& pencil() const { return pencil_; }
  const Eigen::SparseMatrix<double>& gradient() const { return gradient_; }
  int gradient_rank() const { return gradient_rank_; }
  int harmonic_dim() const { return static_cast<int>(harmonic_basis_.size()); }
  const std::vector<Eigen::VectorXd>& harmonic_basis() const { return harmonic_basis_; }
  const SpectralResult& edge_spectrum() const { return spectrum_; }

  /// Scalar potential of the eps-orthogonal gradient projection: solves
  /// (eps grad phi, grad psi) = (eps field, grad psi) over the bc-matching
  /// scalar space (constant fixed by pinning in the Neumann case).
  Eigen::VectorXd gradient_potential(const Eigen::VectorXd& field) const {
    Eigen::VectorXd rhs = gradient_.transpose() * pencil_.B.apply(field);
    if (!pinned_) return solver_.solve(rhs);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(rhs.size());
    x.head(rhs.size() - 1) = solver_.solve(rhs.head(rhs.size() - 1).eval());
    return x;
  }

  Decomposition decompose(const Eigen::VectorXd& field) const {
    if (field.size() != pencil_.n())
      throw ConfigError("helmholtz", "decompose",
                        "field has " + std::to_string(field.size()) + " entries, edge space has " +
                            std::to_string(pencil_.n()));
    Decomposition d;
    d.input = field;
    d.gradient = gradient_ * gradient_potential(field);
    d.harmonic = Eigen::VectorXd::Zero(field.size());
    for (const auto& h : harmonic_basis_) d.harmonic += h.dot(pencil_.B.apply(field)) * h;
    d.solenoidal = field - d.gradient - d.harmonic;

    auto enorm = [&](const Eigen::VectorXd& v) { return std::sqrt(v.dot(pencil_.B.apply(v))); };
    auto rel_inner = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
      double na = enorm(a), nb = enorm(b);
      if (na == 0 || nb == 0) return 0.0;
      return std::abs(a.dot(pencil_.B.apply(b))) / (na * nb);
    };
    double in_norm = field.norm();
    d.reconstruction_residual =
        in_norm == 0 ? 0 : (field - d.gradient - d.harmonic - d.solenoidal).norm() / in_norm;
    d.ortho_grad_harmonic = rel_inner(d.gradient, d.harmonic);
    d.ortho_grad_solenoidal = rel_inner(d.gradient, d.solenoidal);
    d.ortho_harmonic_solenoidal = rel_inner(d.harmonic, d.solenoidal);
    return d;
  }

private:
  void build_harmonic_basis(const char* op) {
    spectrum_ = eig_gsym(pencil_);
    KernelSplit split = split_kernel(spectrum_, gradient_rank_);
    if (split.detected < gradient_rank_)
      throw ComputationError("helmholtz", op,
                             "edge kernel smaller than the gradient rank (" +
                                 std::to_string(split.detected) + " < " +
                                 std::to_string(gradient_rank_) + ")");
    const int d = split.surplus();
    if (d == 0) return;

    // The kernel eigenvectors mix gradients and harmonic fields; one weighted
    // scalar solve per vector projects the gradients out, then the Gram
    // eigendecomposition yields a B-orthonormal basis of the surplus.
    Eigen::MatrixXd q(pencil_.n(), split.detected);
    for (int k = 0; k < split.detected; ++k) {
      Eigen::VectorXd v = spectrum_.eigenvectors.col(k);
      q.col(k) = v - gradient_ * gradient_potential(v);
    }
    Eigen::MatrixXd bm(pencil_.n(), split.detected);
    for (int k = 0; k < split.detected; ++k) bm.col(k) = pencil_.B.apply(q.col(k));
    Eigen::MatrixXd gram = q.transpose() * bm;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    if (es.info() != Eigen::Success)
      throw ComputationError("helmholtz", op, "harmonic Gram eigendecomposition failed");
    const auto& sigma = es.eigenvalues(); // ascending
    double top = sigma[split.detected - 1];
    for (int j = split.detected - d; j < split.detected; ++j) {
      if (!(sigma[j] > 1e-10 * top))
        throw ComputationError("helmholtz", op, "harmonic basis is rank deficient");
      harmonic_basis_.push_back(q * (es.eigenvectors().col(j) / std::sqrt(sigma[j])));
    }
    if (split.detected - d - 1 >= 0 && sigma[split.detected - d - 1] > 1e-6 * top)
      throw ComputationError("helmholtz", op,
                             "harmonic dimension is ambiguous (no clear Gram gap)");
  }

  FieldBC bc_;
  Pencil pencil_;
  Eigen::SparseMatrix<double> gradient_;
  int gradient_rank_ = 0;
  bool pinned_ = false;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
  std::vector<Eigen::VectorXd> harmonic_basis_;
  SpectralResult spectrum_;
};

/// One-shot decomposition; prefer a HelmholtzContext when decomposing many
/// fields on the same (mesh, eps, bc).
inline Decomposition decompose(const Mesh& mesh, const MaterialField& eps, FieldBC bc,
                               const Eigen::VectorXd& field) {
  return HelmholtzContext(mesh, eps, bc).decompose(field);
}

/// B-orthonormal basis of the discrete harmonic space: edge-pencil kernel
/// vectors eps-orthogonal to the gradients. Empty on domains with trivial
/// topology (relative to the bc).
inline std::vector<Eigen::VectorXd> harmonic_basis(const Mesh& mesh, const MaterialField& eps,
                                                   FieldBC bc) {
  return HelmholtzContext(mesh, eps, bc).harmonic_basis();
}

/// Outcome of the irrotational-field estimate check: for the first eigenpair
/// (lambda, u) of the weighted scalar pencil and E = G u, the ratio
/// ||E||_eps / ||div_w(eps E)|| equals 1/sqrt(lambda) and is compared against
/// eps_lower times the matching unweighted Poincare constant.
struct IrrotationalCheck {
  double lambda = 0;     // weighted scalar eigenvalue used
  double field_norm = 0; // ||E||_eps
  double div_norm = 0;   // weak divergence norm of eps E
  double ratio = 0;      // field_norm / div_norm
  double bound = 0;      // eps_lower * (unweighted Poincare constant)
  double margin = 0;     // bound - ratio
};

inline IrrotationalCheck verify_irrotational_estimate(const Mesh& mesh, const MaterialField& eps,
                                                      FieldBC bc) {
  const char* op = "verify_irrotational_estimate";
  const BC sbc = scalar_bc(bc);

  Pencil weighted = assemble_p1(mesh, eps, sbc);
  SpectralResult wr = eig_gsym(weighted);
  int idx = 0;
  if (bc == FieldBC::Normal) {
    KernelSplit s = split_kernel(wr, 1);
    if (!s.matches())
      throw ComputationError("helmholtz", op,
                             "Neumann scalar pencil kernel has dimension " +
                                 std::to_string(s.detected) + ", expected 1");
    idx = s.detected;
  }
  const double lambda = wr.eigenvalues[idx];
  Eigen::VectorXd u = wr.eigenvectors.col(idx);

  Pencil edge = assemble_nedelec(mesh, eps, edge_bc(bc));
  Eigen::SparseMatrix<double> g = discrete_gradient(mesh, edge_bc(bc));
  Eigen::VectorXd e = g * u;
  Eigen::VectorXd me = edge.B.apply(e);
  const double field_norm2 = e.dot(me);

  // Identity check: ||G u||_eps^2 equals lambda ||u||_B^2 for the eigenpair.
  if (std::abs(field_norm2 - lambda) > 1e-9 * std::max(1.0, lambda))
    throw ComputationError("helmholtz", op, "||G u||_eps^2 != lambda for the scalar eigenpair");

  // Weak divergence of eps E against the scalar space, measured in the
  // mass-inverted dual norm.
  Eigen::VectorXd ell = g.transpose() * me;
  Eigen::LLT<Eigen::MatrixXd> mass(weighted.B.dense());
  if (mass.info() != Eigen::Success)
    throw ComputationError("helmholtz", op, "scalar mass factorization failed");
  const double div_norm2 = ell.dot(mass.solve(ell));

  IrrotationalCheck chk;
  chk.lambda = lambda;
  chk.field_norm = std::sqrt(field_norm2);
  chk.div_norm = std::sqrt(div_norm2);
  chk.ratio = chk.field_norm / chk.div_norm;

  Pencil plain = assemble_p1(mesh, MaterialField::identity(mesh), sbc);
  SpectralResult pr = eig_gsym(plain);
  int pidx = 0;
  if (bc == FieldBC::Normal) pidx = split_kernel(pr, 1).detected;
  const double poincare = 1.0 / std::sqrt(pr.eigenvalues[pidx]);
  chk.bound = eps_bounds(eps).eps_lower * poincare;
  chk.margin = chk.bound - chk.ratio;

  if (eps.is_identity() && !(chk.ratio <= chk.bound * (1.0 + 1e-9)))
    throw ComputationError("helmholtz", op, "irrotational estimate violated for identity eps");
  return chk;
}

} // namespace maxlab
