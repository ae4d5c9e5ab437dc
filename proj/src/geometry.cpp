#include "twistguide/geometry.hpp"

#include "twistguide/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace twg {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

int orientation(const Vec2& p, const Vec2& q, const Vec2& r, double eps)
{
  const double v = cross(q - p, r - p);
  if (std::abs(v) <= eps) {
    return 0;
  }
  return v > 0 ? 1 : -1;
}

bool on_segment(const Vec2& p, const Vec2& q, const Vec2& r, double eps)
{
  return std::min(p.x(), r.x()) - eps <= q.x() && q.x() <= std::max(p.x(), r.x()) + eps &&
         std::min(p.y(), r.y()) - eps <= q.y() && q.y() <= std::max(p.y(), r.y()) + eps;
}

bool segments_touch(const Vec2& p1, const Vec2& q1, const Vec2& p2, const Vec2& q2, double eps)
{
  const int o1 = orientation(p1, q1, p2, eps);
  const int o2 = orientation(p1, q1, q2, eps);
  const int o3 = orientation(p2, q2, p1, eps);
  const int o4 = orientation(p2, q2, q1, eps);
  if (o1 != o2 && o3 != o4) {
    return true;
  }
  return (o1 == 0 && on_segment(p1, p2, q1, eps)) || (o2 == 0 && on_segment(p1, q2, q1, eps)) ||
         (o3 == 0 && on_segment(p2, p1, q2, eps)) || (o4 == 0 && on_segment(p2, q1, q2, eps));
}

double distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b)
{
  const Vec2 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (a + t * ab - p).norm();
}

std::vector<Vec2> placed_vertices(const Polygon& poly, const Vec2& offset)
{
  std::vector<Vec2> v;
  v.reserve(poly.vertices.size());
  for (const auto& p : poly.vertices) {
    v.push_back(p + offset);
  }
  return v;
}

double shape_scale(const CrossSectionShape& shape)
{
  const auto [lo, hi] = shape.bounding_box();
  return std::max((hi - lo).maxCoeff(), 1e-300);
}

} // namespace

CrossSectionShape CrossSectionShape::rectangle(double width, double height, Vec2 offset)
{
  return {Rectangle{width, height}, offset};
}

CrossSectionShape CrossSectionShape::ellipse(double a, double b, Vec2 offset)
{
  return {Ellipse{a, b}, offset};
}

CrossSectionShape CrossSectionShape::polygon(std::vector<Vec2> vertices, Vec2 offset)
{
  return {Polygon{std::move(vertices)}, offset};
}

void CrossSectionShape::validate() const
{
  if (const auto* r = std::get_if<Rectangle>(&kind)) {
    if (!(r->width > 0.0) || !(r->height > 0.0)) {
      throw DegenerateShape("rectangle needs positive width and height");
    }
  } else if (const auto* e = std::get_if<Ellipse>(&kind)) {
    if (!(e->a > 0.0) || !(e->b > 0.0)) {
      throw DegenerateShape("ellipse needs positive semi-axes");
    }
  } else {
    const auto& poly = std::get<Polygon>(kind);
    const auto& v = poly.vertices;
    const std::size_t n = v.size();
    if (n < 3) {
      throw DegenerateShape("polygon needs at least three vertices");
    }
    double area = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      area += cross(v[i], v[(i + 1) % n]);
      scale = std::max(scale, (v[(i + 1) % n] - v[i]).norm());
    }
    const double eps = 1e-12 * scale * scale;
    if (std::abs(area) <= eps) {
      throw DegenerateShape("polygon has zero area");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if ((v[(i + 1) % n] - v[i]).norm() <= 1e-12 * scale) {
        throw DegenerateShape("polygon has a repeated vertex");
      }
      for (std::size_t j = i + 1; j < n; ++j) {
        const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
        if (adjacent) {
          continue;
        }
        if (segments_touch(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n], eps)) {
          std::ostringstream msg;
          msg << "polygon edges " << i << " and " << j << " intersect";
          throw DegenerateShape(msg.str());
        }
      }
    }
  }
}

bool CrossSectionShape::contains(const Vec2& p) const
{
  const double eps = 1e-12 * shape_scale(*this);
  const Vec2 q = p - offset;
  if (const auto* r = std::get_if<Rectangle>(&kind)) {
    return std::abs(q.x()) < 0.5 * r->width - eps && std::abs(q.y()) < 0.5 * r->height - eps;
  }
  if (const auto* e = std::get_if<Ellipse>(&kind)) {
    const double s = (q.x() / e->a) * (q.x() / e->a) + (q.y() / e->b) * (q.y() / e->b);
    return s < 1.0 - 1e-12;
  }
  const auto v = placed_vertices(std::get<Polygon>(kind), offset);
  const std::size_t n = v.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    if (distance_to_segment(p, v[j], v[i]) <= eps) {
      return false;
    }
    if ((v[i].y() > p.y()) != (v[j].y() > p.y())) {
      const double x = v[j].x() + (p.y() - v[j].y()) * (v[i].x() - v[j].x()) / (v[i].y() - v[j].y());
      if (p.x() < x) {
        inside = !inside;
      }
    }
  }
  return inside;
}

std::pair<Vec2, Vec2> CrossSectionShape::bounding_box() const
{
  if (const auto* r = std::get_if<Rectangle>(&kind)) {
    const Vec2 half(0.5 * r->width, 0.5 * r->height);
    return {offset - half, offset + half};
  }
  if (const auto* e = std::get_if<Ellipse>(&kind)) {
    const Vec2 half(e->a, e->b);
    return {offset - half, offset + half};
  }
  const auto v = placed_vertices(std::get<Polygon>(kind), offset);
  Vec2 lo = v.front();
  Vec2 hi = v.front();
  for (const auto& p : v) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return {lo, hi};
}

bool CrossSectionShape::is_centered_disk(double tol) const
{
  const auto* e = std::get_if<Ellipse>(&kind);
  return e != nullptr && std::abs(e->a - e->b) <= tol * e->a && offset.norm() <= tol * e->a;
}

std::string CrossSectionShape::describe() const
{
  std::ostringstream os;
  if (const auto* r = std::get_if<Rectangle>(&kind)) {
    os << "rectangle(" << r->width << ", " << r->height << ")";
  } else if (const auto* e = std::get_if<Ellipse>(&kind)) {
    os << "ellipse(" << e->a << ", " << e->b << ")";
  } else {
    os << "polygon(" << std::get<Polygon>(kind).vertices.size() << " vertices)";
  }
  os << " offset (" << offset.x() << ", " << offset.y() << ")";
  return os.str();
}

int CrossSectionGrid::node_at(int i, int j) const
{
  if (layout != GridLayout::cartesian || i < 0 || j < 0 || i >= nx || j >= ny) {
    return -1;
  }
  return lattice_to_node[static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i)];
}

CrossSectionGrid build_grid(const CrossSectionShape& shape, double h)
{
  shape.validate();
  if (!(h > 0.0)) {
    throw std::invalid_argument("build_grid: spacing must be positive");
  }
  const auto [lo, hi] = shape.bounding_box();
  CrossSectionGrid grid;
  grid.layout = GridLayout::cartesian;
  grid.spacing = h;
  grid.origin = lo;
  grid.nx = static_cast<int>(std::floor((hi.x() - lo.x()) / h + 1e-9)) + 1;
  grid.ny = static_cast<int>(std::floor((hi.y() - lo.y()) / h + 1e-9)) + 1;
  grid.lattice_to_node.assign(static_cast<std::size_t>(grid.nx) * static_cast<std::size_t>(grid.ny), -1);
  // (x2, x1) lexicographic: rows of constant x2, increasing x1 within a row
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const Vec2 p = lo + Vec2(i * h, j * h);
      if (shape.contains(p)) {
        grid.lattice_to_node[static_cast<std::size_t>(j) * static_cast<std::size_t>(grid.nx) + static_cast<std::size_t>(i)] =
          grid.size();
        grid.nodes.push_back(p);
        grid.node_to_lattice.emplace_back(i, j);
        grid.weights.push_back(h * h);
      }
    }
  }
  if (grid.nodes.empty()) {
    throw EmptyGrid("no lattice node lies inside " + shape.describe());
  }
  if (grid.size() < 9) {
    std::ostringstream msg;
    msg << "only " << grid.size() << " interior nodes (need >= 9); reduce h";
    throw EmptyGrid(msg.str());
  }
  return grid;
}

CrossSectionGrid build_polar_grid(const CrossSectionShape& disk, int n_r, int n_phi)
{
  disk.validate();
  if (!disk.is_centered_disk()) {
    throw DegenerateShape("polar grids are only defined for disks centred on the rotation axis");
  }
  if (n_r < 2 || n_phi < 4 || n_r * n_phi < 9) {
    throw EmptyGrid("polar grid needs n_r >= 2 and n_phi >= 4");
  }
  const double radius = std::get<Ellipse>(disk.kind).a;
  CrossSectionGrid grid;
  grid.layout = GridLayout::polar;
  grid.radius = radius;
  grid.n_r = n_r;
  grid.n_phi = n_phi;
  const double dr = radius / n_r;
  const double dphi = 2.0 * std::numbers::pi / n_phi;
  grid.spacing = dr;
  for (int i = 0; i < n_r; ++i) {
    const double r = (i + 0.5) * dr;
    for (int j = 0; j < n_phi; ++j) {
      const double phi = j * dphi;
      grid.nodes.emplace_back(r * std::cos(phi), r * std::sin(phi));
      grid.weights.push_back(r * dr * dphi);
    }
  }
  return grid;
}

namespace {

TransverseOperators assemble_cartesian(const CrossSectionGrid& grid)
{
  using T = Eigen::Triplet<double>;
  const int n = grid.size();
  const double h = grid.spacing;
  const double inv_h2 = 1.0 / (h * h);
  const double inv_2h = 0.5 / h;
  std::vector<T> lap;
  std::vector<T> phi;
  lap.reserve(static_cast<std::size_t>(5 * n));
  phi.reserve(static_cast<std::size_t>(4 * n));
  for (int row = 0; row < n; ++row) {
    const auto [i, j] = grid.node_to_lattice[static_cast<std::size_t>(row)];
    const double x1 = grid.nodes[static_cast<std::size_t>(row)].x();
    const double x2 = grid.nodes[static_cast<std::size_t>(row)].y();
    lap.emplace_back(row, row, 4.0 * inv_h2);
    const int east = grid.node_at(i + 1, j);
    const int west = grid.node_at(i - 1, j);
    const int north = grid.node_at(i, j + 1);
    const int south = grid.node_at(i, j - 1);
    for (int nb : {east, west, north, south}) {
      if (nb >= 0) {
        lap.emplace_back(row, nb, -inv_h2);
      }
    }
    // centred differences, exterior neighbours carry the Dirichlet value 0
    if (north >= 0) {
      phi.emplace_back(row, north, x1 * inv_2h);
    }
    if (south >= 0) {
      phi.emplace_back(row, south, -x1 * inv_2h);
    }
    if (east >= 0) {
      phi.emplace_back(row, east, -x2 * inv_2h);
    }
    if (west >= 0) {
      phi.emplace_back(row, west, x2 * inv_2h);
    }
  }
  TransverseOperators ops;
  ops.grid = grid;
  ops.laplacian_t.resize(n, n);
  ops.laplacian_t.setFromTriplets(lap.begin(), lap.end());
  ops.dphi.resize(n, n);
  ops.dphi.setFromTriplets(phi.begin(), phi.end());
  return ops;
}

// Finite-volume polar discretization of |grad u|^2 r dr dphi, symmetrized
// with the node weights r dr dphi.
TransverseOperators assemble_polar(const CrossSectionGrid& grid)
{
  using T = Eigen::Triplet<double>;
  const int n_r = grid.n_r;
  const int n_phi = grid.n_phi;
  const int n = grid.size();
  const double dr = grid.radius / n_r;
  const double dphi = 2.0 * std::numbers::pi / n_phi;
  auto idx = [n_phi](int i, int j) { return i * n_phi + ((j % n_phi) + n_phi) % n_phi; };
  auto radius_of = [dr](int i) { return (i + 0.5) * dr; };

  std::vector<T> stiff;
  auto add_edge = [&stiff](int a, int b, double c) {
    stiff.emplace_back(a, a, c);
    stiff.emplace_back(b, b, c);
    stiff.emplace_back(a, b, -c);
    stiff.emplace_back(b, a, -c);
  };
  for (int i = 0; i < n_r; ++i) {
    for (int j = 0; j < n_phi; ++j) {
      const int a = idx(i, j);
      if (i + 1 < n_r) {
        add_edge(a, idx(i + 1, j), (i + 1) * dr * dphi / dr);
      } else {
        stiff.emplace_back(a, a, grid.radius * dphi / (0.5 * dr));
      }
      add_edge(a, idx(i, j + 1), dr / (radius_of(i) * dphi));
    }
  }
  SparseMatrixR K(n, n);
  K.setFromTriplets(stiff.begin(), stiff.end());
  Eigen::VectorXd inv_sqrt_w(n);
  for (int k = 0; k < n; ++k) {
    inv_sqrt_w[k] = 1.0 / std::sqrt(grid.weights[static_cast<std::size_t>(k)]);
  }
  TransverseOperators ops;
  ops.grid = grid;
  ops.laplacian_t = inv_sqrt_w.asDiagonal() * K * inv_sqrt_w.asDiagonal();

  std::vector<T> phi;
  const double c = 0.5 / dphi;
  for (int i = 0; i < n_r; ++i) {
    for (int j = 0; j < n_phi; ++j) {
      phi.emplace_back(idx(i, j), idx(i, j + 1), c);
      phi.emplace_back(idx(i, j), idx(i, j - 1), -c);
    }
  }
  ops.dphi.resize(n, n);
  ops.dphi.setFromTriplets(phi.begin(), phi.end());
  return ops;
}

} // namespace

TransverseOperators assemble_transverse(const CrossSectionGrid& grid)
{
  TransverseOperators ops =
    grid.layout == GridLayout::cartesian ? assemble_cartesian(grid) : assemble_polar(grid);
  ops.laplacian_t.makeCompressed();
  ops.dphi.makeCompressed();
  for (const auto& p : grid.nodes) {
    ops.moment_bound = std::max(ops.moment_bound, p.squaredNorm());
  }
  return ops;
}

std::vector<double> transverse_eigenvalues(const TransverseOperators& ops, int count)
{
  const Eigen::MatrixXd dense = Eigen::MatrixXd(ops.laplacian_t);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense, Eigen::EigenvaluesOnly);
  const int m = std::min<int>(count, static_cast<int>(dense.rows()));
  return {es.eigenvalues().data(), es.eigenvalues().data() + m};
}

std::string dump_transverse(const TransverseOperators& ops)
{
  std::ostringstream os;
  os.precision(17);
  os << "# nodes " << ops.size() << " layout " << (ops.grid.layout == GridLayout::cartesian ? "cartesian" : "polar")
     << " spacing " << ops.grid.spacing << "\n";
  for (int i = 0; i < ops.size(); ++i) {
    const auto& p = ops.grid.nodes[static_cast<std::size_t>(i)];
    os << i << " " << p.x() << " " << p.y() << " " << ops.grid.weights[static_cast<std::size_t>(i)] << "\n";
  }
  auto dump = [&os](const char* name, const SparseMatrixR& m) {
    os << "# " << name << " " << m.rows() << " " << m.cols() << " " << m.nonZeros() << "\n";
    for (int k = 0; k < m.outerSize(); ++k) {
      for (SparseMatrixR::InnerIterator it(m, k); it; ++it) {
        os << it.row() << " " << it.col() << " " << it.value() << "\n";
      }
    }
  };
  dump("laplacian_t", ops.laplacian_t);
  dump("dphi", ops.dphi);
  return os.str();
}

} // namespace twg
