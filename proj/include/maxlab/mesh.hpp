#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "maxlab/errors.hpp"

namespace maxlab {

/// Conforming simplicial mesh (triangles in 2D, tetrahedra in 3D) with
/// globally oriented edges and boundary classification.
///
/// Conventions fixed at construction:
///  - every cell is permuted to positive signed volume;
///  - edges are stored as (low vertex, high vertex) pairs in lexicographic
///    order; the orientation of every edge runs low index -> high index;
///  - the incidence sign of a cell-local edge is +1 iff the local traversal
///    agrees with the global low->high orientation;
///  - a vertex/edge is boundary iff it lies in a facet owned by exactly one
///    cell.
///
/// A Mesh is immutable after construction and safe for concurrent reads.
struct Mesh {
  enum class Provenance { Generated, Imported };

  int dim = 0; // 2 or 3
  std::vector<Eigen::Vector3d> vertices; // z = 0 in 2D
  std::vector<std::array<int, 4>> cells; // [3] = -1 for triangles
  std::vector<std::array<int, 2>> edges; // (low, high), lexicographically sorted

  // Per-cell incidence: edge ids and signs, in the local edge order
  // (0,1),(0,2),(1,2)[,(0,3),(1,3),(2,3)]; unused slots hold -1 / 0.
  std::vector<std::array<int, 6>> cell_edges;
  std::vector<std::array<std::int8_t, 6>> cell_edge_signs;

  std::vector<double> cell_volumes;

  std::vector<std::uint8_t> vertex_on_boundary;
  std::vector<std::uint8_t> edge_on_boundary;
  std::vector<int> boundary_vertices; // sorted
  std::vector<int> boundary_edges;    // sorted

  std::int64_t facet_count = 0; // edges in 2D, triangular faces in 3D
  Provenance provenance = Provenance::Generated;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_cells() const { return static_cast<int>(cells.size()); }
  int n_edges() const { return static_cast<int>(edges.size()); }
  int nodes_per_cell() const { return dim + 1; }
  int edges_per_cell() const { return dim == 2 ? 3 : 6; }

  int n_interior_vertices() const {
    return n_vertices() - static_cast<int>(boundary_vertices.size());
  }
  int n_interior_edges() const {
    return n_edges() - static_cast<int>(boundary_edges.size());
  }

  double cell_volume(int c) const { return cell_volumes[c]; }

  double total_volume() const {
    double s = 0;
    for (double v : cell_volumes) s += v;
    return s;
  }

  Eigen::Vector3d cell_centroid(int c) const {
    Eigen::Vector3d m = Eigen::Vector3d::Zero();
    for (int k = 0; k < nodes_per_cell(); ++k) m += vertices[cells[c][k]];
    return m / nodes_per_cell();
  }

  /// Gradients of the barycentric coordinates of cell c (constant on the
  /// cell). Entry k matches local vertex k; z components are 0 in 2D.
  std::array<Eigen::Vector3d, 4> barycentric_gradients(int c) const {
    Eigen::MatrixXd M(dim, dim);
    const auto& cell = cells[c];
    for (int k = 1; k <= dim; ++k)
      M.col(k - 1) = (vertices[cell[k]] - vertices[cell[0]]).head(dim);
    Eigen::MatrixXd Minv = M.inverse();
    std::array<Eigen::Vector3d, 4> g{};
    for (auto& v : g) v.setZero();
    for (int k = 1; k <= dim; ++k) g[k].head(dim) = Minv.row(k - 1).transpose();
    for (int k = 1; k <= dim; ++k) g[0] -= g[k];
    return g;
  }

  /// Maximum pairwise vertex distance. Exact for polytopal domains, where the
  /// diameter is attained at vertices. O(V^2).
  double diameter() const {
    double d2 = 0;
    for (std::size_t i = 0; i < vertices.size(); ++i)
      for (std::size_t j = i + 1; j < vertices.size(); ++j)
        d2 = std::max(d2, (vertices[i] - vertices[j]).squaredNorm());
    return std::sqrt(d2);
  }

  /// Largest cell diameter (longest edge), the mesh size h.
  double mesh_size() const {
    double h2 = 0;
    for (const auto& e : edges)
      h2 = std::max(h2, (vertices[e[0]] - vertices[e[1]]).squaredNorm());
    return std::sqrt(h2);
  }

  /// V - E + F in 2D, V - E + F - C in 3D.
  std::int64_t euler_characteristic() const {
    std::int64_t v = n_vertices(), e = n_edges(), c = n_cells();
    if (dim == 2) return v - e + c;
    return v - e + facet_count - c;
  }

  /// Number of connected components of the boundary edge graph.
  int boundary_component_count() const;

  int edge_index(int a, int b) const {
    std::array<int, 2> key{std::min(a, b), std::max(a, b)};
    auto it = std::lower_bound(edges.begin(), edges.end(), key);
    if (it == edges.end() || *it != key) return -1;
    return static_cast<int>(it - edges.begin());
  }
};

/// Test-domain description. Boxes and rectangles are convex by construction;
/// the square-with-hole is not; imported meshes carry a user-declared flag.
struct DomainSpec {
  enum class Kind { Box3d, Rect2d, SquareWithHole2d, Imported };

  Kind kind = Kind::Box3d;
  std::vector<double> dimensions; // box: 3 lengths; rect: 2; hole: outer, inner
  int subdivisions = 1;           // default n per axis (levels override it)
  std::string mesh_path;          // imported only
  bool convex = true;

  /// Ambient dimension of a generated kind; imported meshes carry their
  /// dimension in the file header.
  int dim() const {
    if (kind == Kind::Imported)
      throw ConfigError("mesh", "domain_spec", "imported domains read their dimension from the file");
    return kind == Kind::Box3d ? 3 : 2;
  }

  void validate() const {
    const char* mod = "mesh";
    switch (kind) {
      case Kind::Box3d:
        if (dimensions.size() != 3)
          throw ConfigError(mod, "domain_spec", "box3d needs 3 dimensions");
        break;
      case Kind::Rect2d:
        if (dimensions.size() != 2)
          throw ConfigError(mod, "domain_spec", "rect2d needs 2 dimensions");
        break;
      case Kind::SquareWithHole2d:
        if (dimensions.size() != 2)
          throw ConfigError(mod, "domain_spec", "square_with_hole2d needs outer and inner lengths");
        if (!(dimensions[1] > 0 && dimensions[1] < dimensions[0]))
          throw ConfigError(mod, "domain_spec", "hole must be strictly inside the outer square");
        break;
      case Kind::Imported:
        if (mesh_path.empty())
          throw ConfigError(mod, "domain_spec", "imported domain needs a mesh file path");
        return;
    }
    for (double d : dimensions)
      if (!(d > 0)) throw ConfigError(mod, "domain_spec", "dimensions must be positive");
    if (subdivisions < 1) throw ConfigError(mod, "domain_spec", "subdivision count must be >= 1");
  }
};

namespace detail {

inline const std::array<std::array<int, 2>, 6>& local_edges(int dim) {
  static const std::array<std::array<int, 2>, 6> e3d{{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
  static const std::array<std::array<int, 2>, 6> e2d{{{0, 1}, {0, 2}, {1, 2}, {-1, -1}, {-1, -1}, {-1, -1}}};
  return dim == 2 ? e2d : e3d;
}

inline double signed_volume(const std::vector<Eigen::Vector3d>& verts,
                            const std::array<int, 4>& cell, int dim) {
  Eigen::MatrixXd M(dim, dim);
  for (int k = 1; k <= dim; ++k)
    M.col(k - 1) = (verts[cell[k]] - verts[cell[0]]).head(dim);
  double fact = (dim == 2) ? 2.0 : 6.0;
  return M.determinant() / fact;
}

} // namespace detail

/// Builds a validated Mesh from raw vertices and cells: fixes orientation,
/// derives edges/incidence/boundary data, and checks the structural
/// invariants (positive volumes, manifold facets, connectivity).
inline Mesh make_mesh(int dim, std::vector<Eigen::Vector3d> vertices,
                      std::vector<std::array<int, 4>> cells,
                      Mesh::Provenance provenance, const std::string& op) {
  const char* mod = "mesh";
  if (dim != 2 && dim != 3) throw MeshError(mod, op, "dim must be 2 or 3");
  if (vertices.empty() || cells.empty()) throw MeshError(mod, op, "empty mesh");

  Mesh m;
  m.dim = dim;
  m.vertices = std::move(vertices);
  m.cells = std::move(cells);
  m.provenance = provenance;

  const int npc = m.nodes_per_cell();
  for (auto& cell : m.cells) {
    for (int k = 0; k < npc; ++k)
      if (cell[k] < 0 || cell[k] >= m.n_vertices())
        throw MeshError(mod, op, "cell references vertex " + std::to_string(cell[k]) +
                                     " out of range");
    if (dim == 2) cell[3] = -1;
  }

  // Orientation: permute the last two vertices if the signed volume is
  // negative; reject degenerate cells relative to their own edge lengths.
  m.cell_volumes.resize(m.cells.size());
  for (std::size_t c = 0; c < m.cells.size(); ++c) {
    auto& cell = m.cells[c];
    double vol = detail::signed_volume(m.vertices, cell, dim);
    if (vol < 0) {
      std::swap(cell[dim - 1], cell[dim]);
      vol = -vol;
    }
    double scale = 0;
    for (int a = 0; a < npc; ++a)
      for (int b = a + 1; b < npc; ++b)
        scale = std::max(scale, (m.vertices[cell[a]] - m.vertices[cell[b]]).norm());
    if (!(vol > 1e-13 * std::pow(scale, dim)))
      throw MeshError(mod, op, "degenerate cell " + std::to_string(c) + " (zero volume)");
    m.cell_volumes[c] = vol;
  }

  // Edge table, lexicographically sorted; orientation low -> high.
  {
    std::vector<std::array<int, 2>> all;
    all.reserve(m.cells.size() * m.edges_per_cell());
    for (const auto& cell : m.cells)
      for (int le = 0; le < m.edges_per_cell(); ++le) {
        auto [a, b] = detail::local_edges(dim)[le];
        int ga = cell[a], gb = cell[b];
        all.push_back({std::min(ga, gb), std::max(ga, gb)});
      }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    m.edges = std::move(all);
  }

  m.cell_edges.assign(m.cells.size(), {-1, -1, -1, -1, -1, -1});
  m.cell_edge_signs.assign(m.cells.size(), {0, 0, 0, 0, 0, 0});
  for (std::size_t c = 0; c < m.cells.size(); ++c)
    for (int le = 0; le < m.edges_per_cell(); ++le) {
      auto [a, b] = detail::local_edges(dim)[le];
      int ga = m.cells[c][a], gb = m.cells[c][b];
      m.cell_edges[c][le] = m.edge_index(ga, gb);
      m.cell_edge_signs[c][le] = static_cast<std::int8_t>(ga < gb ? 1 : -1);
    }

  // Facets: boundary classification and manifold check, plus cell adjacency
  // for the connectivity test.
  std::vector<int> cell_component(m.cells.size(), -1);
  if (dim == 2) {
    std::vector<std::array<int, 2>> owner(m.edges.size(), {-1, -1});
    for (std::size_t c = 0; c < m.cells.size(); ++c)
      for (int le = 0; le < 3; ++le) {
        int e = m.cell_edges[c][le];
        if (owner[e][0] < 0) owner[e][0] = static_cast<int>(c);
        else if (owner[e][1] < 0) owner[e][1] = static_cast<int>(c);
        else throw MeshError(mod, op, "facet shared by more than two cells");
      }
    m.facet_count = static_cast<std::int64_t>(m.edges.size());
    m.edge_on_boundary.assign(m.edges.size(), 0);
    for (std::size_t e = 0; e < m.edges.size(); ++e)
      if (owner[e][1] < 0) m.edge_on_boundary[e] = 1;
    // BFS over cells sharing an edge.
    std::vector<int> stack{0};
    cell_component[0] = 0;
    while (!stack.empty()) {
      int c = stack.back();
      stack.pop_back();
      for (int le = 0; le < 3; ++le)
        for (int nb : owner[m.cell_edges[c][le]])
          if (nb >= 0 && cell_component[nb] < 0) {
            cell_component[nb] = 0;
            stack.push_back(nb);
          }
    }
  } else {
    std::map<std::array<int, 3>, std::array<int, 2>> faces;
    static const int face_local[4][3] = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};
    for (std::size_t c = 0; c < m.cells.size(); ++c)
      for (const auto& fl : face_local) {
        std::array<int, 3> f{m.cells[c][fl[0]], m.cells[c][fl[1]], m.cells[c][fl[2]]};
        std::sort(f.begin(), f.end());
        auto [it, fresh] = faces.try_emplace(f, std::array<int, 2>{-1, -1});
        (void)fresh;
        if (it->second[0] < 0) it->second[0] = static_cast<int>(c);
        else if (it->second[1] < 0) it->second[1] = static_cast<int>(c);
        else throw MeshError(mod, op, "facet shared by more than two cells");
      }
    m.facet_count = static_cast<std::int64_t>(faces.size());
    m.edge_on_boundary.assign(m.edges.size(), 0);
    for (const auto& [f, own] : faces)
      if (own[1] < 0) {
        m.edge_on_boundary[m.edge_index(f[0], f[1])] = 1;
        m.edge_on_boundary[m.edge_index(f[0], f[2])] = 1;
        m.edge_on_boundary[m.edge_index(f[1], f[2])] = 1;
      }
    std::vector<int> stack{0};
    cell_component[0] = 0;
    while (!stack.empty()) {
      int c = stack.back();
      stack.pop_back();
      for (const auto& fl : face_local) {
        std::array<int, 3> f{m.cells[c][fl[0]], m.cells[c][fl[1]], m.cells[c][fl[2]]};
        std::sort(f.begin(), f.end());
        for (int nb : faces.at(f))
          if (nb >= 0 && cell_component[nb] < 0) {
            cell_component[nb] = 0;
            stack.push_back(nb);
          }
      }
    }
  }
  if (std::count(cell_component.begin(), cell_component.end(), -1) > 0)
    throw MeshError(mod, op, "mesh is disconnected");

  m.vertex_on_boundary.assign(m.vertices.size(), 0);
  for (std::size_t e = 0; e < m.edges.size(); ++e)
    if (m.edge_on_boundary[e]) {
      m.vertex_on_boundary[m.edges[e][0]] = 1;
      m.vertex_on_boundary[m.edges[e][1]] = 1;
      m.boundary_edges.push_back(static_cast<int>(e));
    }
  for (int v = 0; v < m.n_vertices(); ++v)
    if (m.vertex_on_boundary[v]) m.boundary_vertices.push_back(v);

  return m;
}

inline int Mesh::boundary_component_count() const {
  std::vector<int> comp(n_vertices(), -1);
  std::vector<std::vector<int>> adj(n_vertices());
  for (int e : boundary_edges) {
    adj[edges[e][0]].push_back(edges[e][1]);
    adj[edges[e][1]].push_back(edges[e][0]);
  }
  int n_comp = 0;
  for (int v : boundary_vertices) {
    if (comp[v] >= 0) continue;
    std::vector<int> stack{v};
    comp[v] = n_comp;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int w : adj[u])
        if (comp[w] < 0) {
          comp[w] = n_comp;
          stack.push_back(w);
        }
    }
    ++n_comp;
  }
  return n_comp;
}

/// Tetrahedral mesh of the box [0,dx]x[0,dy]x[0,dz], n subdivisions per axis.
/// Each grid hexahedron is split into the six tetrahedra sharing its main
/// diagonal (Kuhn subdivision), so the pattern is refinement-stable and the
/// vertex count is (n+1)^3, the cell count 6 n^3.
inline Mesh build_box_mesh(const std::array<double, 3>& dims, int n) {
  const char* op = "build_box_mesh";
  if (n < 1) throw MeshError("mesh", op, "subdivision count must be >= 1");
  for (double d : dims)
    if (!(d > 0)) throw MeshError("mesh", op, "dimensions must be positive");

  const int nv = n + 1;
  std::vector<Eigen::Vector3d> verts;
  verts.reserve(static_cast<std::size_t>(nv) * nv * nv);
  for (int k = 0; k < nv; ++k)
    for (int j = 0; j < nv; ++j)
      for (int i = 0; i < nv; ++i)
        verts.emplace_back(dims[0] * i / n, dims[1] * j / n, dims[2] * k / n);
  auto vid = [nv](int i, int j, int k) { return i + nv * (j + nv * k); };

  static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                  {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  std::vector<std::array<int, 4>> cells;
  cells.reserve(static_cast<std::size_t>(6) * n * n * n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        for (const auto& p : perms) {
          std::array<int, 3> cur{i, j, k};
          std::array<int, 4> cell{};
          cell[0] = vid(cur[0], cur[1], cur[2]);
          for (int s = 0; s < 3; ++s) {
            ++cur[p[s]];
            cell[s + 1] = vid(cur[0], cur[1], cur[2]);
          }
          cells.push_back(cell);
        }
  return make_mesh(3, std::move(verts), std::move(cells), Mesh::Provenance::Generated, op);
}

/// Triangular mesh of [0,dx]x[0,dy], n subdivisions per axis; each grid
/// square is split along the (i,j)->(i+1,j+1) diagonal (2D Kuhn pattern),
/// giving (n+1)^2 vertices and 2 n^2 triangles.
inline Mesh build_rect_mesh(const std::array<double, 2>& dims, int n) {
  const char* op = "build_rect_mesh";
  if (n < 1) throw MeshError("mesh", op, "subdivision count must be >= 1");
  for (double d : dims)
    if (!(d > 0)) throw MeshError("mesh", op, "dimensions must be positive");

  const int nv = n + 1;
  std::vector<Eigen::Vector3d> verts;
  verts.reserve(static_cast<std::size_t>(nv) * nv);
  for (int j = 0; j < nv; ++j)
    for (int i = 0; i < nv; ++i)
      verts.emplace_back(dims[0] * i / n, dims[1] * j / n, 0.0);
  auto vid = [nv](int i, int j) { return i + nv * j; };

  std::vector<std::array<int, 4>> cells;
  cells.reserve(static_cast<std::size_t>(2) * n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), -1});
      cells.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1), -1});
    }
  return make_mesh(2, std::move(verts), std::move(cells), Mesh::Provenance::Generated, op);
}

/// Square annulus: outer square of side `outer` with a centered square hole
/// of side `inner` removed. The hole must align with the n x n grid, i.e.
/// (outer - inner)/2 and inner must be multiples of outer/n, and the hole
/// must be strictly inside. The boundary has two connected components.
inline Mesh build_square_with_hole(double outer, double inner, int n) {
  const char* op = "build_square_with_hole";
  if (n < 1) throw MeshError("mesh", op, "subdivision count must be >= 1");
  if (!(outer > 0 && inner > 0 && inner < outer))
    throw MeshError("mesh", op, "need 0 < inner < outer");

  const double cellsz = outer / n;
  const double offset = (outer - inner) / 2;
  const double k0d = offset / cellsz, k1d = (offset + inner) / cellsz;
  const int k0 = static_cast<int>(std::lround(k0d));
  const int k1 = static_cast<int>(std::lround(k1d));
  if (std::abs(k0d - k0) > 1e-9 * n || std::abs(k1d - k1) > 1e-9 * n)
    throw MeshError("mesh", op, "hole boundary does not align with the grid; choose n so that outer/n divides both inner and (outer-inner)/2");
  if (!(k0 >= 1 && k1 <= n - 1 && k1 > k0))
    throw MeshError("mesh", op, "hole must be strictly inside the outer square");

  const int nv = n + 1;
  auto vid = [nv](int i, int j) { return i + nv * j; };
  std::vector<std::array<int, 4>> cells;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      if (i >= k0 && i < k1 && j >= k0 && j < k1) continue;
      cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), -1});
      cells.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1), -1});
    }

  // Drop unused grid vertices and renumber in grid order.
  std::vector<int> remap(static_cast<std::size_t>(nv) * nv, -1);
  for (const auto& c : cells)
    for (int k = 0; k < 3; ++k) remap[c[k]] = 0;
  std::vector<Eigen::Vector3d> verts;
  for (int u = 0; u < nv * nv; ++u)
    if (remap[u] == 0) {
      remap[u] = static_cast<int>(verts.size());
      verts.emplace_back(cellsz * (u % nv), cellsz * (u / nv), 0.0);
    }
  for (auto& c : cells)
    for (int k = 0; k < 3; ++k) c[k] = remap[c[k]];

  return make_mesh(2, std::move(verts), std::move(cells), Mesh::Provenance::Generated, op);
}

/// Uniform (red) refinement: every edge is bisected; each triangle splits
/// into 4 children, each tetrahedron into 8 (4 corner children plus the
/// interior octahedron cut along its shortest diagonal; ties pick the first
/// of (m01,m23), (m02,m13), (m03,m12), so results are reproducible).
///
/// Children of cell c occupy output slots [K*c, K*(c+1)) with K = 4 or 8,
/// which lets cellwise data descend to the refined mesh by index arithmetic.
inline Mesh refine_uniform(const Mesh& m) {
  const char* op = "refine_uniform";
  std::vector<Eigen::Vector3d> verts = m.vertices;
  verts.reserve(m.vertices.size() + m.edges.size());
  for (const auto& e : m.edges)
    verts.push_back(0.5 * (m.vertices[e[0]] + m.vertices[e[1]]));
  auto mid = [&](int a, int b) { return m.n_vertices() + m.edge_index(a, b); };

  std::vector<std::array<int, 4>> cells;
  if (m.dim == 2) {
    cells.reserve(m.cells.size() * 4);
    for (const auto& c : m.cells) {
      int a = c[0], b = c[1], d = c[2];
      int ab = mid(a, b), ad = mid(a, d), bd = mid(b, d);
      cells.push_back({a, ab, ad, -1});
      cells.push_back({ab, b, bd, -1});
      cells.push_back({ad, bd, d, -1});
      cells.push_back({ab, bd, ad, -1});
    }
  } else {
    cells.reserve(m.cells.size() * 8);
    for (const auto& c : m.cells) {
      int a = c[0], b = c[1], cc = c[2], d = c[3];
      int ab = mid(a, b), ac = mid(a, cc), ad = mid(a, d);
      int bc = mid(b, cc), bd = mid(b, d), cd = mid(cc, d);
      cells.push_back({a, ab, ac, ad});
      cells.push_back({ab, b, bc, bd});
      cells.push_back({ac, bc, cc, cd});
      cells.push_back({ad, bd, cd, d});
      // Octahedron diagonals pair opposite-edge midpoints.
      const std::array<std::array<int, 2>, 3> diag{{{ab, cd}, {ac, bd}, {ad, bc}}};
      const std::array<std::array<int, 4>, 3> ring{{{ac, ad, bd, bc}, {ab, ad, cd, bc}, {ab, ac, cd, bd}}};
      int best = 0;
      double best_len = (verts[diag[0][0]] - verts[diag[0][1]]).squaredNorm();
      for (int t = 1; t < 3; ++t) {
        double len = (verts[diag[t][0]] - verts[diag[t][1]]).squaredNorm();
        if (len < best_len * (1.0 - 1e-12)) {
          best = t;
          best_len = len;
        }
      }
      int p = diag[best][0], q = diag[best][1];
      const auto& r = ring[best];
      for (int t = 0; t < 4; ++t)
        cells.push_back({p, r[t], r[(t + 1) % 4], q});
    }
  }
  return make_mesh(m.dim, std::move(verts), std::move(cells), m.provenance, op);
}

/// Writes the ASCII mesh format: `dim n_vertices n_cells`, vertex coordinate
/// lines, then 0-based cell vertex indices. `#` starts a comment.
inline void export_mesh(const Mesh& m, std::ostream& out) {
  out << m.dim << ' ' << m.n_vertices() << ' ' << m.n_cells() << '\n';
  out.precision(17);
  for (const auto& v : m.vertices) {
    out << v[0] << ' ' << v[1];
    if (m.dim == 3) out << ' ' << v[2];
    out << '\n';
  }
  for (const auto& c : m.cells) {
    out << c[0] << ' ' << c[1] << ' ' << c[2];
    if (m.dim == 3) out << ' ' << c[3];
    out << '\n';
  }
}

inline void export_mesh(const Mesh& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MeshError("mesh", "export_mesh", "cannot open " + path);
  export_mesh(m, out);
}

/// Reads the ASCII mesh format. Cells are re-oriented to positive volume;
/// degenerate cells and disconnected meshes are rejected.
inline Mesh import_mesh(std::istream& in) {
  const char* op = "import_mesh";
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
  }
  std::size_t pos = 0;
  auto next_int = [&](const char* what) {
    if (pos >= tokens.size()) throw MeshError("mesh", op, std::string("unexpected end of file reading ") + what);
    try {
      std::size_t used = 0;
      int v = std::stoi(tokens[pos], &used);
      if (used != tokens[pos].size()) throw std::invalid_argument("");
      ++pos;
      return v;
    } catch (const std::exception&) {
      throw MeshError("mesh", op, "cannot parse '" + tokens[pos] + "' as integer (" + what + ")");
    }
  };
  auto next_double = [&](const char* what) {
    if (pos >= tokens.size()) throw MeshError("mesh", op, std::string("unexpected end of file reading ") + what);
    try {
      std::size_t used = 0;
      double v = std::stod(tokens[pos], &used);
      if (used != tokens[pos].size()) throw std::invalid_argument("");
      ++pos;
      return v;
    } catch (const std::exception&) {
      throw MeshError("mesh", op, "cannot parse '" + tokens[pos] + "' as number (" + what + ")");
    }
  };

  int dim = next_int("dim");
  if (dim != 2 && dim != 3) throw MeshError("mesh", op, "dim must be 2 or 3");
  int nverts = next_int("vertex count");
  int ncells = next_int("cell count");
  if (nverts <= 0 || ncells <= 0) throw MeshError("mesh", op, "counts must be positive");

  std::vector<Eigen::Vector3d> verts(nverts, Eigen::Vector3d::Zero());
  for (int v = 0; v < nverts; ++v)
    for (int k = 0; k < dim; ++k) verts[v][k] = next_double("coordinate");
  std::vector<std::array<int, 4>> cells(ncells, {-1, -1, -1, -1});
  for (int c = 0; c < ncells; ++c)
    for (int k = 0; k <= dim; ++k) cells[c][k] = next_int("cell vertex index");
  if (pos != tokens.size()) throw MeshError("mesh", op, "trailing data after cells");

  return make_mesh(dim, std::move(verts), std::move(cells), Mesh::Provenance::Imported, op);
}

inline Mesh import_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("mesh", "import_mesh", "cannot open " + path);
  return import_mesh(in);
}

/// Instantiates the mesh of a DomainSpec with n subdivisions per axis
/// (generated kinds) or n uniform refinements (imported meshes).
inline Mesh build_domain_mesh(const DomainSpec& spec, int n) {
  spec.validate();
  switch (spec.kind) {
    case DomainSpec::Kind::Box3d:
      return build_box_mesh({spec.dimensions[0], spec.dimensions[1], spec.dimensions[2]}, n);
    case DomainSpec::Kind::Rect2d:
      return build_rect_mesh({spec.dimensions[0], spec.dimensions[1]}, n);
    case DomainSpec::Kind::SquareWithHole2d:
      return build_square_with_hole(spec.dimensions[0], spec.dimensions[1], n);
    case DomainSpec::Kind::Imported: {
      Mesh m = import_mesh(spec.mesh_path);
      for (int r = 0; r < n; ++r) m = refine_uniform(m);
      return m;
    }
  }
  throw MeshError("mesh", "build_domain_mesh", "unknown domain kind");
}

inline Mesh build_domain_mesh(const DomainSpec& spec) {
  return build_domain_mesh(spec, spec.kind == DomainSpec::Kind::Imported ? 0 : spec.subdivisions);
}

} // namespace maxlab
