#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "maxlab/errors.hpp"
#include "maxlab/mesh.hpp"

namespace maxlab {

/// Uniform spectral bounds of a material field in the normalization
/// eps_lower^{-2} <= spec(eps) <= eps_upper^2, with eps_hat their maximum.
/// Note eps_hat >= 1 always.
struct EpsBounds {
  double eps_lower = 1; // underline
  double eps_upper = 1; // overline
  double eps_hat = 1;   // max of the two
};

/// Cellwise-constant symmetric positive definite matrix field on a mesh.
/// All element integrals against it are exact with one-point quadrature.
class MaterialField {
public:
  MaterialField(int dim, std::vector<Eigen::MatrixXd> cell_matrices)
      : dim_(dim), cells_(std::move(cell_matrices)) {
    validate();
  }

  static MaterialField identity(const Mesh& mesh) {
    return MaterialField(mesh.dim, std::vector<Eigen::MatrixXd>(
                                       mesh.n_cells(), Eigen::MatrixXd::Identity(mesh.dim, mesh.dim)));
  }

  static MaterialField scalar(const Mesh& mesh, double s) {
    return MaterialField(mesh.dim, std::vector<Eigen::MatrixXd>(
                                       mesh.n_cells(), s * Eigen::MatrixXd::Identity(mesh.dim, mesh.dim)));
  }

  static MaterialField diagonal(const Mesh& mesh, const std::vector<double>& entries) {
    if (static_cast<int>(entries.size()) != mesh.dim)
      throw ConfigError("assembly", "material_field", "diagonal entry count must equal mesh dim");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(mesh.dim, mesh.dim);
    for (int k = 0; k < mesh.dim; ++k) m(k, k) = entries[k];
    return MaterialField(mesh.dim, std::vector<Eigen::MatrixXd>(mesh.n_cells(), m));
  }

  static MaterialField constant(const Mesh& mesh, const Eigen::MatrixXd& m) {
    return MaterialField(mesh.dim, std::vector<Eigen::MatrixXd>(mesh.n_cells(), m));
  }

  static MaterialField per_cell(const Mesh& mesh, std::vector<Eigen::MatrixXd> table) {
    if (static_cast<int>(table.size()) != mesh.n_cells())
      throw ConfigError("assembly", "material_field", "per-cell table size must equal cell count");
    return MaterialField(mesh.dim, std::move(table));
  }

  int dim() const { return dim_; }
  int n_cells() const { return static_cast<int>(cells_.size()); }
  const Eigen::MatrixXd& cell(int c) const { return cells_[c]; }

  bool is_identity() const {
    for (const auto& m : cells_)
      if (!m.isIdentity(1e-14)) return false;
    return true;
  }

  /// Descends the field to a uniformly refined mesh: every child inherits
  /// the matrix of its parent (children of cell c sit at K*c..K*(c+1)-1).
  MaterialField refined(const Mesh& fine_mesh) const {
    int k = fine_mesh.n_cells() / n_cells();
    if ((dim_ == 2 && k != 4) || (dim_ == 3 && k != 8) || fine_mesh.n_cells() != k * n_cells())
      throw ConfigError("assembly", "material_field", "mesh is not a uniform refinement of the field's mesh");
    std::vector<Eigen::MatrixXd> table;
    table.reserve(fine_mesh.n_cells());
    for (const auto& m : cells_)
      for (int t = 0; t < k; ++t) table.push_back(m);
    return MaterialField(dim_, std::move(table));
  }

private:
  void validate() const {
    if (dim_ != 2 && dim_ != 3)
      throw ConfigError("assembly", "material_field", "dim must be 2 or 3");
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      const auto& m = cells_[c];
      if (m.rows() != dim_ || m.cols() != dim_)
        throw ConfigError("assembly", "material_field",
                          "cell " + std::to_string(c) + " matrix has wrong dimensions");
      double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
      if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-14 * scale)
        throw ConfigError("assembly", "material_field",
                          "cell " + std::to_string(c) + " matrix is not symmetric");
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
      if (!(es.eigenvalues().minCoeff() > 0))
        throw ConfigError("assembly", "material_field",
                          "cell " + std::to_string(c) + " matrix is not positive definite");
    }
  }

  int dim_;
  std::vector<Eigen::MatrixXd> cells_;
};

/// Spectral bounds over all cells: eps_lower = (min eigenvalue)^{-1/2},
/// eps_upper = (max eigenvalue)^{1/2}, eps_hat = max of the two.
inline EpsBounds eps_bounds(const MaterialField& eps) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0;
  for (int c = 0; c < eps.n_cells(); ++c) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(eps.cell(c), Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues().minCoeff());
    hi = std::max(hi, es.eigenvalues().maxCoeff());
  }
  EpsBounds b;
  b.eps_lower = 1.0 / std::sqrt(lo);
  b.eps_upper = std::sqrt(hi);
  b.eps_hat = std::max(b.eps_lower, b.eps_upper);
  return b;
}

/// The 2D quarter-turn [[0,1],[-1,0]]; R^2 = -id, R^T = -R = R^{-1}.
inline Eigen::Matrix2d rotation_2d() {
  Eigen::Matrix2d r;
  r << 0, 1, -1, 0;
  return r;
}

/// Applies the quarter-turn to per-cell vector data.
inline std::vector<Eigen::Vector2d> rotate_2d(const std::vector<Eigen::Vector2d>& cell_vectors) {
  const Eigen::Matrix2d r = rotation_2d();
  std::vector<Eigen::Vector2d> out;
  out.reserve(cell_vectors.size());
  for (const auto& v : cell_vectors) out.push_back(r * v);
  return out;
}

/// The rotated companion field -R eps R (2D only). It is similar to eps, so
/// it satisfies the same spectral bounds; its inverse swaps the roles of
/// eps_lower and eps_upper.
inline MaterialField eps_R(const MaterialField& eps) {
  if (eps.dim() != 2)
    throw ConfigError("assembly", "eps_R", "rotated material field is 2D only");
  const Eigen::Matrix2d r = rotation_2d();
  std::vector<Eigen::MatrixXd> table;
  table.reserve(eps.n_cells());
  for (int c = 0; c < eps.n_cells(); ++c)
    table.emplace_back(-(r * eps.cell(c) * r));
  return MaterialField(2, std::move(table));
}

/// Material file: one line per cell holding the d(d+1)/2 upper-triangle
/// entries in row-major order (2D: a11 a12 a22; 3D: a11 a12 a13 a22 a23 a33).
/// `#` starts a comment.
inline MaterialField read_material_field(const Mesh& mesh, std::istream& in) {
  const char* op = "read_material_field";
  std::vector<double> nums;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double v;
    while (ls >> v) nums.push_back(v);
    if (!ls.eof() && ls.fail()) throw ConfigError("assembly", op, "cannot parse material entry");
  }
  const int d = mesh.dim;
  const std::size_t per_cell = static_cast<std::size_t>(d) * (d + 1) / 2;
  if (nums.size() != per_cell * mesh.n_cells())
    throw ConfigError("assembly", op,
                      "expected " + std::to_string(per_cell * mesh.n_cells()) +
                          " entries (" + std::to_string(per_cell) + " per cell), got " +
                          std::to_string(nums.size()));
  std::vector<Eigen::MatrixXd> table(mesh.n_cells(), Eigen::MatrixXd::Zero(d, d));
  std::size_t pos = 0;
  for (auto& m : table)
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        m(i, j) = nums[pos++];
        m(j, i) = m(i, j);
      }
  return MaterialField::per_cell(mesh, std::move(table));
}

inline MaterialField read_material_field(const Mesh& mesh, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("assembly", "read_material_field", "cannot open " + path);
  return read_material_field(mesh, in);
}

inline void write_material_field(const MaterialField& eps, std::ostream& out) {
  out.precision(17);
  for (int c = 0; c < eps.n_cells(); ++c) {
    const auto& m = eps.cell(c);
    bool first = true;
    for (int i = 0; i < eps.dim(); ++i)
      for (int j = i; j < eps.dim(); ++j) {
        if (!first) out << ' ';
        out << m(i, j);
        first = false;
      }
    out << '\n';
  }
}

/// Mesh-independent description of a material field; instantiated per
/// refinement level. File-backed fields bind to the cell count of the mesh
/// they are first instantiated on and descend only by uniform refinement.
struct EpsilonSpec {
  enum class Kind { Identity, Scalar, Diagonal, Matrix, File };

  Kind kind = Kind::Identity;
  double value = 1.0;                 // Scalar
  std::vector<double> diag;           // Diagonal
  Eigen::MatrixXd matrix;             // Matrix
  std::string path;                   // File

  bool is_identity() const { return kind == Kind::Identity; }

  int required_dim() const {
    switch (kind) {
      case Kind::Diagonal: return static_cast<int>(diag.size());
      case Kind::Matrix: return static_cast<int>(matrix.rows());
      default: return 0; // any
    }
  }

  MaterialField instantiate(const Mesh& mesh) const {
    switch (kind) {
      case Kind::Identity: return MaterialField::identity(mesh);
      case Kind::Scalar: return MaterialField::scalar(mesh, value);
      case Kind::Diagonal: return MaterialField::diagonal(mesh, diag);
      case Kind::Matrix: return MaterialField::constant(mesh, matrix);
      case Kind::File: return read_material_field(mesh, path);
    }
    throw ConfigError("assembly", "epsilon_spec", "unknown epsilon kind");
  }
};

} // namespace maxlab
