#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace twg {

using Vec2 = Eigen::Vector2d;
using SparseMatrixR = Eigen::SparseMatrix<double>;

struct Rectangle
{
  double width = 1.0;
  double height = 1.0;
};

struct Ellipse
{
  double a = 1.0; // semi-axis along x1
  double b = 1.0; // semi-axis along x2
};

struct Polygon
{
  std::vector<Vec2> vertices; // closed implicitly, last -> first
};

/// Cross-section of the tube. Coordinates are measured from the rotation
/// axis; `offset` moves the reference point of the shape (the centre for
/// rectangles and ellipses, the vertex origin for polygons).
struct CrossSectionShape
{
  std::variant<Rectangle, Ellipse, Polygon> kind = Rectangle{};
  Vec2 offset = Vec2::Zero();

  static CrossSectionShape rectangle(double width, double height, Vec2 offset = Vec2::Zero());
  static CrossSectionShape ellipse(double a, double b, Vec2 offset = Vec2::Zero());
  static CrossSectionShape polygon(std::vector<Vec2> vertices, Vec2 offset = Vec2::Zero());

  /// Throws DegenerateShape for empty interiors and self-intersecting polygons.
  void validate() const;
  /// Strict interior membership.
  bool contains(const Vec2& p) const;
  std::pair<Vec2, Vec2> bounding_box() const;
  bool is_centered_disk(double tol = 1e-12) const;
  std::string describe() const;
};

enum class GridLayout
{
  cartesian,
  polar
};

/// Interior nodes of a structured discretization of the cross-section.
///
/// Cartesian grids sit on the lattice `origin + (i, j) * spacing` and keep
/// only nodes strictly inside the shape; nodes are ordered
/// lexicographically by (x2, x1). Polar grids (centred disks only) use
/// cell-centred rings, ordered ring-major.
struct CrossSectionGrid
{
  GridLayout layout = GridLayout::cartesian;
  double spacing = 0.0;
  std::vector<Vec2> nodes;
  std::vector<double> weights; // quadrature weight of each node

  // cartesian lattice bookkeeping
  Vec2 origin = Vec2::Zero();
  int nx = 0;
  int ny = 0;
  std::vector<int> lattice_to_node; // (j * nx + i) -> node index or -1
  std::vector<std::pair<int, int>> node_to_lattice;

  // polar bookkeeping
  double radius = 0.0;
  int n_r = 0;
  int n_phi = 0;

  int size() const { return static_cast<int>(nodes.size()); }
  /// Node index of lattice point (i, j); -1 when outside the domain.
  int node_at(int i, int j) const;
};

CrossSectionGrid build_grid(const CrossSectionShape& shape, double h);

/// Polar grid for a disk centred on the rotation axis: `n_r` rings of
/// width R/n_r with nodes at mid-radius, `n_phi` equally spaced angles.
CrossSectionGrid build_polar_grid(const CrossSectionShape& disk, int n_r, int n_phi);

/// Transverse operators expressed in the weight-normalized node basis
/// (coefficient c_i = sqrt(w_i) * u(x_i)), so that the discrete L2(omega)
/// inner product is the Euclidean one.
struct TransverseOperators
{
  CrossSectionGrid grid;
  SparseMatrixR laplacian_t; // -Delta_t, Dirichlet
  SparseMatrixR dphi;        // x1 d2 - x2 d1
  double moment_bound = 0.0; // max |x_t|^2 over the nodes

  int size() const { return grid.size(); }
};

TransverseOperators assemble_transverse(const CrossSectionGrid& grid);

/// Lowest `count` eigenvalues of laplacian_t (dense, for small grids and tests).
std::vector<double> transverse_eigenvalues(const TransverseOperators& ops, int count);

/// Text dump: node coordinates followed by triplets of both matrices.
std::string dump_transverse(const TransverseOperators& ops);

} // namespace twg
