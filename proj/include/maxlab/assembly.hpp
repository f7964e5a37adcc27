#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "maxlab/errors.hpp"
#include "maxlab/material.hpp"
#include "maxlab/mesh.hpp"

namespace maxlab {

enum class Space { ScalarP1, Edge, VectorP1 };
enum class BC { None, Essential };

/// Maps a finite element space with a boundary condition to its free dofs.
/// Essential conditions remove boundary vertices (ScalarP1, VectorP1: all
/// components) or boundary edges (Edge: zero tangential trace).
struct DofMap {
  Space space = Space::ScalarP1;
  BC bc = BC::None;
  int total = 0;                 // dofs before restriction
  std::vector<int> free;         // strictly increasing free dof ids
  std::vector<int> full_to_free; // -1 for constrained dofs

  int n_free() const { return static_cast<int>(free.size()); }
};

inline DofMap make_dofmap(const Mesh& mesh, Space space, BC bc) {
  DofMap dm;
  dm.space = space;
  dm.bc = bc;
  const int comp = (space == Space::VectorP1) ? mesh.dim : 1;
  const int base = (space == Space::Edge) ? mesh.n_edges() : mesh.n_vertices();
  dm.total = base * comp;
  dm.full_to_free.assign(dm.total, -1);
  for (int i = 0; i < base; ++i) {
    bool constrained = false;
    if (bc == BC::Essential)
      constrained = (space == Space::Edge) ? mesh.edge_on_boundary[i] != 0
                                           : mesh.vertex_on_boundary[i] != 0;
    if (constrained) continue;
    for (int c = 0; c < comp; ++c) {
      int dof = i * comp + c;
      dm.full_to_free[dof] = static_cast<int>(dm.free.size());
      dm.free.push_back(dof);
    }
  }
  return dm;
}

/// Symmetric sparse matrix; only the upper triangle (i <= j) is stored, so
/// symmetry is exact by construction.
class SparseSymMatrix {
public:
  SparseSymMatrix() = default;
  explicit SparseSymMatrix(int n) : n_(n), upper_(n, n) {}

  static SparseSymMatrix from_triplets(int n, std::vector<Eigen::Triplet<double>> trips) {
    // Fold lower-triangle contributions onto the upper triangle.
    for (auto& t : trips)
      if (t.row() > t.col()) t = {t.col(), t.row(), t.value()};
    SparseSymMatrix m(n);
    m.upper_.setFromTriplets(trips.begin(), trips.end());
    m.upper_.makeCompressed();
    return m;
  }

  int rows() const { return n_; }

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd d = Eigen::MatrixXd(upper_);
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j) d(j, i) = d(i, j);
    return d;
  }

  /// Full (mirrored) sparse view for sparse factorizations.
  Eigen::SparseMatrix<double> full() const {
    Eigen::SparseMatrix<double> f = upper_.selfadjointView<Eigen::Upper>();
    f.makeCompressed();
    return f;
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    return upper_.selfadjointView<Eigen::Upper>() * x;
  }

  const Eigen::SparseMatrix<double>& upper() const { return upper_; }

private:
  int n_ = 0;
  Eigen::SparseMatrix<double> upper_;
};

/// Generalized eigenvalue pencil A v = lambda B v on the free dofs of a
/// DofMap; A is stiffness-like, B mass-like (positive definite).
struct Pencil {
  SparseSymMatrix A;
  SparseSymMatrix B;
  DofMap dofmap;
  std::string label;

  int n() const { return A.rows(); }
};

namespace detail {

// Exact integrals of products of barycentric coordinates on a simplex:
// int l_p l_q = vol (1 + delta_pq) / ((d+1)(d+2)).
inline double bary_pair_integral(double vol, int d, int p, int q) {
  return vol * (p == q ? 2.0 : 1.0) / ((d + 1) * (d + 2));
}

struct EdgeGeometry {
  int n_local;
  std::array<int, 6> edge_ids;
  std::array<double, 6> signs;
  std::array<Eigen::Vector3d, 6> curls; // 2 grad(l_i) x grad(l_j); z holds the 2D scalar curl
};

inline EdgeGeometry edge_geometry(const Mesh& mesh, int c,
                                  const std::array<Eigen::Vector3d, 4>& g) {
  EdgeGeometry eg{};
  eg.n_local = mesh.edges_per_cell();
  for (int le = 0; le < eg.n_local; ++le) {
    auto [a, b] = local_edges(mesh.dim)[le];
    eg.edge_ids[le] = mesh.cell_edges[c][le];
    eg.signs[le] = mesh.cell_edge_signs[c][le];
    eg.curls[le] = 2.0 * g[a].cross(g[b]);
  }
  return eg;
}

} // namespace detail

/// Weighted scalar Laplace pencil on P1 hat functions:
/// A = int eps grad(u) . grad(v), B = int u v, both exact for cellwise-
/// constant eps on affine simplices. Essential bc keeps interior vertices.
inline Pencil assemble_p1(const Mesh& mesh, const MaterialField& eps, BC bc) {
  if (eps.dim() != mesh.dim || eps.n_cells() != mesh.n_cells())
    throw ConfigError("assembly", "assemble_p1", "material field does not match the mesh");
  DofMap dm = make_dofmap(mesh, Space::ScalarP1, bc);
  const int d = mesh.dim;
  std::vector<Eigen::Triplet<double>> ta, tb;
  ta.reserve(mesh.n_cells() * (d + 1) * (d + 1));
  tb.reserve(ta.capacity());
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const double vol = mesh.cell_volume(c);
    const auto g = mesh.barycentric_gradients(c);
    const Eigen::MatrixXd& e = eps.cell(c);
    for (int p = 0; p <= d; ++p) {
      int ip = dm.full_to_free[mesh.cells[c][p]];
      if (ip < 0) continue;
      for (int q = 0; q <= d; ++q) {
        int iq = dm.full_to_free[mesh.cells[c][q]];
        if (iq < 0 || iq < ip) continue;
        double a = vol * g[p].head(d).dot(e * g[q].head(d));
        ta.emplace_back(ip, iq, a);
        tb.emplace_back(ip, iq, detail::bary_pair_integral(vol, d, p, q));
      }
    }
  }
  Pencil p;
  p.A = SparseSymMatrix::from_triplets(dm.n_free(), std::move(ta));
  p.B = SparseSymMatrix::from_triplets(dm.n_free(), std::move(tb));
  p.dofmap = std::move(dm);
  p.label = std::string("p1_") + (bc == BC::Essential ? "dirichlet" : "neumann");
  return p;
}

/// Curl-curl / weighted-mass pencil on lowest-order edge elements
/// (Whitney 1-forms W_ij = l_i grad(l_j) - l_j grad(l_i), one dof per
/// oriented edge): A = int rot(u).rot(v) (scalar rot in 2D),
/// B = int eps u . v. Essential bc removes boundary edges (zero tangential
/// trace); the natural pencil keeps every edge.
inline Pencil assemble_nedelec(const Mesh& mesh, const MaterialField& eps, BC bc) {
  if (eps.dim() != mesh.dim || eps.n_cells() != mesh.n_cells())
    throw ConfigError("assembly", "assemble_nedelec", "material field does not match the mesh");
  DofMap dm = make_dofmap(mesh, Space::Edge, bc);
  const int d = mesh.dim;
  std::vector<Eigen::Triplet<double>> ta, tb;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const double vol = mesh.cell_volume(c);
    const auto g = mesh.barycentric_gradients(c);
    const auto eg = detail::edge_geometry(mesh, c, g);
    const Eigen::MatrixXd& e = eps.cell(c);

    // Pairwise eps-weighted gradient products, needed by the mass matrix:
    // (eps W_ij) . W_kl integrates to four barycentric pair terms.
    Eigen::MatrixXd ge(d + 1, d + 1);
    for (int p = 0; p <= d; ++p)
      for (int q = 0; q <= d; ++q) ge(p, q) = g[p].head(d).dot(e * g[q].head(d));

    for (int x = 0; x < eg.n_local; ++x) {
      int ix = dm.full_to_free[eg.edge_ids[x]];
      if (ix < 0) continue;
      auto [i, j] = detail::local_edges(d)[x];
      for (int y = 0; y < eg.n_local; ++y) {
        int iy = dm.full_to_free[eg.edge_ids[y]];
        if (iy < 0 || iy < ix) continue;
        auto [k, l] = detail::local_edges(d)[y];
        const double ss = eg.signs[x] * eg.signs[y];
        double ka = (d == 3) ? eg.curls[x].dot(eg.curls[y]) : eg.curls[x][2] * eg.curls[y][2];
        ta.emplace_back(ix, iy, vol * ss * ka);
        double mass = ge(j, l) * detail::bary_pair_integral(vol, d, i, k) -
                      ge(j, k) * detail::bary_pair_integral(vol, d, i, l) -
                      ge(i, l) * detail::bary_pair_integral(vol, d, j, k) +
                      ge(i, k) * detail::bary_pair_integral(vol, d, j, l);
        tb.emplace_back(ix, iy, ss * mass);
      }
    }
  }
  Pencil p;
  p.A = SparseSymMatrix::from_triplets(dm.n_free(), std::move(ta));
  p.B = SparseSymMatrix::from_triplets(dm.n_free(), std::move(tb));
  p.dofmap = std::move(dm);
  p.label = std::string("edge_") + (bc == BC::Essential ? "tangential" : "natural");
  return p;
}

/// The two vector-P1 stiffness assemblies whose equality expresses the
/// integration-by-parts identity for zero-trace fields:
///   first.A  = int grad(E) : grad(F),
///   second.A = int rot(E).rot(F) + div(E) div(F),
/// with a shared vector mass. Only the essential bc is admissible; with free
/// boundary values the two forms differ by boundary terms.
inline std::pair<Pencil, Pencil> assemble_vector_p1_forms(const Mesh& mesh, BC bc) {
  if (bc != BC::Essential)
    throw ConfigError("assembly", "assemble_vector_p1_forms",
                      "the grad/rot-div identity requires the essential bc");
  DofMap dm = make_dofmap(mesh, Space::VectorP1, bc);
  const int d = mesh.dim;
  std::vector<Eigen::Triplet<double>> tg, tr, tb;
  auto rot2d = [](const Eigen::Vector3d& g, int c) {
    // rot(phi e_x) = -d_y phi, rot(phi e_y) = d_x phi
    return c == 0 ? -g[1] : g[0];
  };
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const double vol = mesh.cell_volume(c);
    const auto g = mesh.barycentric_gradients(c);
    for (int p = 0; p <= d; ++p)
      for (int cp = 0; cp < d; ++cp) {
        int ip = dm.full_to_free[mesh.cells[c][p] * d + cp];
        if (ip < 0) continue;
        for (int q = 0; q <= d; ++q)
          for (int cq = 0; cq < d; ++cq) {
            int iq = dm.full_to_free[mesh.cells[c][q] * d + cq];
            if (iq < 0 || iq < ip) continue;
            if (cp == cq) {
              tg.emplace_back(ip, iq, vol * g[p].dot(g[q]));
              tb.emplace_back(ip, iq, detail::bary_pair_integral(vol, d, p, q));
            }
            double rot;
            if (d == 3)
              rot = vol * (g[p].cross(Eigen::Vector3d::Unit(cp)))
                              .dot(g[q].cross(Eigen::Vector3d::Unit(cq)));
            else
              rot = vol * rot2d(g[p], cp) * rot2d(g[q], cq);
            double div = vol * g[p][cp] * g[q][cq];
            tr.emplace_back(ip, iq, rot + div);
          }
      }
  }
  Pencil grad, rotdiv;
  grad.A = SparseSymMatrix::from_triplets(dm.n_free(), std::move(tg));
  grad.B = SparseSymMatrix::from_triplets(dm.n_free(), std::move(tb));
  grad.dofmap = dm;
  grad.label = "vp1_grad";
  rotdiv.A = SparseSymMatrix::from_triplets(dm.n_free(), std::move(tr));
  rotdiv.B = grad.B;
  rotdiv.dofmap = std::move(dm);
  rotdiv.label = "vp1_rotdiv";
  return {std::move(grad), std::move(rotdiv)};
}

/// Discrete gradient: the signed edge-vertex incidence (+1 at the high end,
/// -1 at the low end of each oriented edge). Columns span the bc-matching
/// scalar space, rows its edge space; the interpolation of grad(u) onto the
/// edge space is exact for P1 u, so rot G = 0 holds exactly.
inline Eigen::SparseMatrix<double> discrete_gradient(const Mesh& mesh, BC bc) {
  DofMap ed = make_dofmap(mesh, Space::Edge, bc);
  DofMap vd = make_dofmap(mesh, Space::ScalarP1, bc);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(2 * ed.n_free());
  for (int r = 0; r < ed.n_free(); ++r) {
    const auto& e = mesh.edges[ed.free[r]];
    int lo = vd.full_to_free[e[0]], hi = vd.full_to_free[e[1]];
    if (lo >= 0) trips.emplace_back(r, lo, -1.0);
    if (hi >= 0) trips.emplace_back(r, hi, 1.0);
  }
  Eigen::SparseMatrix<double> g(ed.n_free(), vd.n_free());
  g.setFromTriplets(trips.begin(), trips.end());
  g.makeCompressed();
  return g;
}

/// Per-cell scalar curl of a 2D edge-element field given by its full edge
/// coefficient vector (rot of a Whitney 1-form is constant per cell).
inline Eigen::VectorXd cell_rot_2d(const Mesh& mesh, const Eigen::VectorXd& edge_coeffs) {
  if (mesh.dim != 2) throw ConfigError("assembly", "cell_rot_2d", "2D only");
  if (edge_coeffs.size() != mesh.n_edges())
    throw ConfigError("assembly", "cell_rot_2d", "coefficient vector must cover all edges");
  Eigen::VectorXd out(mesh.n_cells());
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto g = mesh.barycentric_gradients(c);
    const auto eg = detail::edge_geometry(mesh, c, g);
    double r = 0;
    for (int le = 0; le < 3; ++le)
      r += eg.signs[le] * edge_coeffs[eg.edge_ids[le]] * eg.curls[le][2];
    out[c] = r;
  }
  return out;
}

/// Per-cell divergence of the quarter-turned field R u, where u is a 2D
/// edge-element field. Computed from div(R W_ij) = 2 grad(l_i)^T R grad(l_j);
/// by the rot/div duality this equals cell_rot_2d(u) identically.
inline Eigen::VectorXd cell_div_rotated_2d(const Mesh& mesh, const Eigen::VectorXd& edge_coeffs) {
  if (mesh.dim != 2) throw ConfigError("assembly", "cell_div_rotated_2d", "2D only");
  if (edge_coeffs.size() != mesh.n_edges())
    throw ConfigError("assembly", "cell_div_rotated_2d", "coefficient vector must cover all edges");
  const Eigen::Matrix2d r = rotation_2d();
  Eigen::VectorXd out(mesh.n_cells());
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto g = mesh.barycentric_gradients(c);
    double dv = 0;
    for (int le = 0; le < 3; ++le) {
      auto [a, b] = detail::local_edges(2)[le];
      double s = mesh.cell_edge_signs[c][le];
      double coeff = edge_coeffs[mesh.cell_edges[c][le]];
      dv += s * coeff * 2.0 * g[a].head<2>().dot(r * g[b].head<2>());
    }
    out[c] = dv;
  }
  return out;
}

/// Rotates a 2D edge-element field by the quarter turn. The rotated field
/// leaves the edge space (it is normal-flux conforming with the same
/// coefficients), so it is returned as per-cell centroid samples; its
/// per-cell divergence is cell_div_rotated_2d and equals the curl of the
/// input field.
inline std::vector<Eigen::Vector2d> rotate_2d(const Mesh& mesh,
                                              const Eigen::VectorXd& edge_coeffs);

/// Evaluates an edge-element field (full coefficient vector) at cell
/// centroids. At the centroid all barycentric coordinates equal 1/(d+1).
inline std::vector<Eigen::Vector3d> edge_field_at_centroids(const Mesh& mesh,
                                                            const Eigen::VectorXd& edge_coeffs) {
  if (edge_coeffs.size() != mesh.n_edges())
    throw ConfigError("assembly", "edge_field_at_centroids", "coefficient vector must cover all edges");
  std::vector<Eigen::Vector3d> out(mesh.n_cells());
  const double bary = 1.0 / (mesh.dim + 1);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto g = mesh.barycentric_gradients(c);
    Eigen::Vector3d v = Eigen::Vector3d::Zero();
    for (int le = 0; le < mesh.edges_per_cell(); ++le) {
      auto [a, b] = detail::local_edges(mesh.dim)[le];
      double s = mesh.cell_edge_signs[c][le];
      v += s * edge_coeffs[mesh.cell_edges[c][le]] * bary * (g[b] - g[a]);
    }
    out[c] = v;
  }
  return out;
}

inline std::vector<Eigen::Vector2d> rotate_2d(const Mesh& mesh,
                                              const Eigen::VectorXd& edge_coeffs) {
  if (mesh.dim != 2) throw ConfigError("assembly", "rotate_2d", "2D only");
  std::vector<Eigen::Vector2d> flat;
  flat.reserve(mesh.n_cells());
  for (const auto& v : edge_field_at_centroids(mesh, edge_coeffs)) flat.push_back(v.head<2>());
  return rotate_2d(flat);
}

} // namespace maxlab
