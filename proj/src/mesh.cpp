#include "crackfield/mesh.hpp"

#include "crackfield/triangulate.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace crackfield {

namespace {

constexpr double kPi = 3.14159265358979323846;

double tri_area(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                const Eigen::Vector2d& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

}  // namespace

Eigen::Vector2d FlawSpec::axis() const {
  const double a = angle_deg * kPi / 180.0;
  return {std::cos(a), std::sin(a)};
}

Eigen::Vector2d FlawSpec::normal() const {
  const double a = angle_deg * kPi / 180.0;
  return {-std::sin(a), std::cos(a)};
}

std::array<Eigen::Vector2d, 4> FlawSpec::corners() const {
  const Eigen::Vector2d da = axis() * (0.5 * length);
  const Eigen::Vector2d dn = normal() * (0.5 * width);
  return {center - da - dn, center + da - dn, center + da + dn, center - da + dn};
}

std::array<Eigen::Vector2d, 2> FlawSpec::tips() const {
  const Eigen::Vector2d da = axis() * (0.5 * length);
  return {center - da, center + da};
}

bool FlawSpec::contains(const Eigen::Vector2d& p, double margin) const {
  const Eigen::Vector2d d = p - center;
  return std::abs(d.dot(axis())) <= 0.5 * length + margin &&
         std::abs(d.dot(normal())) <= 0.5 * width + margin;
}

double FlawSpec::boundary_distance(const Eigen::Vector2d& p) const {
  const Eigen::Vector2d d = p - center;
  const double lx = std::abs(d.dot(axis())) - 0.5 * length;
  const double ly = std::abs(d.dot(normal())) - 0.5 * width;
  if (lx > 0.0 || ly > 0.0)
    return std::hypot(std::max(lx, 0.0), std::max(ly, 0.0));
  return -std::max(lx, ly);
}

void FlawSpec::validate() const {
  if (!(length > width && width > 0.0))
    throw MeshError("flaw must satisfy length > width > 0");
  if (!(angle_deg >= 0.0 && angle_deg <= 90.0))
    throw MeshError("flaw angle must lie in [0, 90] degrees");
}

double Mesh::elem_area(int e) const {
  const auto c = elem(e);
  if (kind == ElemKind::T3) return tri_area(nodes[c[0]], nodes[c[1]], nodes[c[2]]);
  return tri_area(nodes[c[0]], nodes[c[1]], nodes[c[2]]) +
         tri_area(nodes[c[0]], nodes[c[2]], nodes[c[3]]);
}

double Mesh::total_area() const {
  double a = 0.0;
  for (int e = 0; e < num_elems(); ++e) a += elem_area(e);
  return a;
}

double Mesh::max_edge_length() const {
  const int nen = nodes_per_elem();
  double h = 0.0;
  for (int e = 0; e < num_elems(); ++e) {
    const auto c = elem(e);
    for (int i = 0; i < nen; ++i)
      h = std::max(h, (nodes[c[i]] - nodes[c[(i + 1) % nen]]).norm());
  }
  return h;
}

void Mesh::validate() const {
  const int n = num_nodes();
  for (int idx : conn)
    if (idx < 0 || idx >= n) throw MeshError("element references invalid node");
  for (int e = 0; e < num_elems(); ++e)
    if (!(elem_area(e) > 0.0)) throw MeshError("degenerate or inverted element");
  if (!elem_modulus.empty()) {
    if (static_cast<int>(elem_modulus.size()) != num_elems())
      throw MeshError("elem_modulus length must equal element count");
    for (double e : elem_modulus)
      if (!(e > 0.0)) throw MeshError("elem_modulus entries must be positive");
  }
  for (const auto& [name, set] : boundary_sets)
    for (int idx : set)
      if (idx < 0 || idx >= n) throw MeshError("boundary set references invalid node");
}

namespace {

void assign_boundary_sets(Mesh& mesh) {
  const double tx = 1e-12 * mesh.width;
  const double ty = 1e-12 * mesh.height;
  auto& sets = mesh.boundary_sets;
  sets["left"].clear();
  sets["right"].clear();
  sets["bottom"].clear();
  sets["top"].clear();
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const auto& p = mesh.nodes[i];
    if (std::abs(p.x()) <= tx) sets["left"].push_back(i);
    if (std::abs(p.x() - mesh.width) <= tx) sets["right"].push_back(i);
    if (std::abs(p.y()) <= ty) sets["bottom"].push_back(i);
    if (std::abs(p.y() - mesh.height) <= ty) sets["top"].push_back(i);
  }
}

}  // namespace

Mesh generate_structured_quad(double width, double height, int nx, int ny) {
  if (!(width > 0.0 && height > 0.0))
    throw MeshError("specimen dimensions must be positive");
  if (nx < 1 || ny < 1) throw MeshError("element counts must be at least 1");

  Mesh mesh;
  mesh.kind = ElemKind::Q4;
  mesh.width = width;
  mesh.height = height;
  mesh.nodes.reserve(static_cast<size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j) {
    const double y = height * (static_cast<double>(j) / ny);
    for (int i = 0; i <= nx; ++i) {
      const double x = width * (static_cast<double>(i) / nx);
      mesh.nodes.emplace_back(x, y);
    }
  }
  mesh.conn.reserve(static_cast<size_t>(nx) * ny * 4);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int n0 = j * (nx + 1) + i;
      mesh.conn.insert(mesh.conn.end(),
                       {n0, n0 + 1, n0 + nx + 2, n0 + nx + 1});
    }
  mesh.h_max = std::max(width / nx, height / ny);
  assign_boundary_sets(mesh);
  mesh.validate();
  return mesh;
}

namespace {

struct FlawGeometry {
  std::vector<Eigen::Vector2d> samples;           // polygon boundary points
  std::vector<std::pair<int, int>> edges;         // index pairs into samples
};

// Boundary samples for one slit polygon, spacing at most `spacing`.
FlawGeometry sample_flaw(const FlawSpec& flaw, double spacing, int base_index) {
  FlawGeometry g;
  const auto corners = flaw.corners();
  std::vector<int> corner_ids;
  for (int e = 0; e < 4; ++e) {
    const Eigen::Vector2d& p0 = corners[e];
    const Eigen::Vector2d& p1 = corners[(e + 1) % 4];
    corner_ids.push_back(static_cast<int>(g.samples.size()));
    g.samples.push_back(p0);
    const int m = std::max(1, static_cast<int>(std::ceil((p1 - p0).norm() / spacing)));
    for (int k = 1; k < m; ++k)
      g.samples.push_back(p0 + (p1 - p0) * (static_cast<double>(k) / m));
  }
  const int n = static_cast<int>(g.samples.size());
  for (int i = 0; i < n; ++i)
    g.edges.emplace_back(base_index + i, base_index + (i + 1) % n);
  return g;
}

Mesh build_flawed_mesh_attempt(double width, double height,
                               std::span<const FlawSpec> flaws, double grid_h,
                               double sample_h, double clearance) {
  std::vector<Eigen::Vector2d> points;

  // Staggered lattice; every row keeps the exact boundary abscissae so the
  // rectangle sides stay resolved.
  const int nx = std::max(2, static_cast<int>(std::ceil(width / grid_h)));
  const int ny = std::max(2, static_cast<int>(std::ceil(height / grid_h)));
  const auto keep = [&](const Eigen::Vector2d& p) {
    for (const auto& f : flaws) {
      if (f.contains(p)) return false;
      if (f.boundary_distance(p) < clearance) return false;
    }
    return true;
  };
  for (int j = 0; j <= ny; ++j) {
    const double y = height * (static_cast<double>(j) / ny);
    if (j % 2 == 0) {
      for (int i = 0; i <= nx; ++i) {
        const Eigen::Vector2d p(width * (static_cast<double>(i) / nx), y);
        if (keep(p)) points.push_back(p);
      }
    } else {
      Eigen::Vector2d left(0.0, y);
      if (keep(left)) points.push_back(left);
      for (int i = 0; i < nx; ++i) {
        const Eigen::Vector2d p(width * ((i + 0.5) / nx), y);
        if (keep(p)) points.push_back(p);
      }
      Eigen::Vector2d right(width, y);
      if (keep(right)) points.push_back(right);
    }
  }

  std::vector<std::pair<int, int>> constraints;
  for (const auto& f : flaws) {
    FlawGeometry g = sample_flaw(f, sample_h, static_cast<int>(points.size()));
    points.insert(points.end(), g.samples.begin(), g.samples.end());
    constraints.insert(constraints.end(), g.edges.begin(), g.edges.end());
  }

  auto tris = detail::triangulate_constrained(points, constraints);

  // Drop triangles inside the slits.
  std::vector<std::array<int, 3>> kept;
  kept.reserve(tris.size());
  for (const auto& t : tris) {
    const Eigen::Vector2d c =
        (points[t[0]] + points[t[1]] + points[t[2]]) / 3.0;
    bool inside = false;
    for (const auto& f : flaws) inside = inside || f.contains(c);
    if (!inside) kept.push_back(t);
  }

  // Compact node numbering in first-use order.
  std::vector<int> remap(points.size(), -1);
  Mesh mesh;
  mesh.kind = ElemKind::T3;
  mesh.width = width;
  mesh.height = height;
  for (const auto& t : kept)
    for (int v : t) {
      if (remap[v] < 0) {
        remap[v] = mesh.num_nodes();
        mesh.nodes.push_back(points[v]);
      }
    }
  mesh.conn.reserve(kept.size() * 3);
  for (const auto& t : kept)
    mesh.conn.insert(mesh.conn.end(), {remap[t[0]], remap[t[1]], remap[t[2]]});

  mesh.h_max = mesh.max_edge_length();
  assign_boundary_sets(mesh);
  return mesh;
}

}  // namespace

Mesh generate_flawed_mesh(double width, double height, std::span<const FlawSpec> flaws,
                          double target_h) {
  if (!(width > 0.0 && height > 0.0))
    throw MeshError("specimen dimensions must be positive");
  if (!(target_h > 0.0)) throw MeshError("target element size must be positive");
  if (flaws.empty()) throw MeshError("flawed mesh requires at least one flaw");

  for (const auto& f : flaws) {
    f.validate();
    if (target_h > f.width + 1e-15)
      throw MeshError("target element size must not exceed the flaw width");
    const double margin = 2.0 * target_h;
    for (const auto& c : f.corners()) {
      if (c.x() < margin || c.x() > width - margin || c.y() < margin ||
          c.y() > height - margin)
        throw MeshError("flaw touches or lies too close to the specimen boundary");
    }
  }
  const auto segments_cross = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                                 const Eigen::Vector2d& c, const Eigen::Vector2d& d) {
    const auto side = [](const Eigen::Vector2d& p, const Eigen::Vector2d& q,
                         const Eigen::Vector2d& r) {
      return (q.x() - p.x()) * (r.y() - p.y()) - (q.y() - p.y()) * (r.x() - p.x());
    };
    return side(a, b, c) * side(a, b, d) < 0.0 && side(c, d, a) * side(c, d, b) < 0.0;
  };
  for (size_t i = 0; i < flaws.size(); ++i)
    for (size_t j = i + 1; j < flaws.size(); ++j) {
      // Inflated-corner proximity plus edge crossings; slits must stay
      // meshably separated.
      const double gap = 2.0 * target_h;
      bool close = false;
      const auto ci = flaws[i].corners();
      const auto cj = flaws[j].corners();
      for (const auto& c : ci) close = close || flaws[j].contains(c, gap);
      for (const auto& c : cj) close = close || flaws[i].contains(c, gap);
      for (int a = 0; a < 4 && !close; ++a)
        for (int b = 0; b < 4 && !close; ++b)
          close = segments_cross(ci[a], ci[(a + 1) % 4], cj[b], cj[(b + 1) % 4]);
      if (close) throw MeshError("flaws overlap or are too close to mesh");
    }

  double shrink = 1.0;
  for (int attempt = 0; attempt < 3; ++attempt, shrink *= 0.8) {
    const double grid_h = 0.8 * target_h * shrink;
    const double sample_h = 0.8 * grid_h;
    const double clearance = 0.55 * sample_h;
    Mesh mesh = build_flawed_mesh_attempt(width, height, flaws, grid_h, sample_h,
                                          clearance);
    if (mesh.h_max <= 1.5 * target_h) {
      mesh.validate();
      return mesh;
    }
  }
  throw MeshError("could not mesh the flawed specimen at the requested size");
}

void write_mesh(std::ostream& os, const Mesh& mesh) {
  char buf[64];
  os << "nodes " << mesh.num_nodes() << " elements " << mesh.num_elems() << " kind "
     << (mesh.kind == ElemKind::Q4 ? "Q4" : "T3") << "\n";
  for (const auto& p : mesh.nodes) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", p.x(), p.y());
    os << buf;
  }
  const int nen = mesh.nodes_per_elem();
  for (int e = 0; e < mesh.num_elems(); ++e) {
    const auto c = mesh.elem(e);
    for (int i = 0; i < nen; ++i) os << c[i] << (i + 1 == nen ? "\n" : " ");
  }
  for (const auto& [name, set] : mesh.boundary_sets) {
    os << "set " << name << " " << set.size();
    for (int i : set) os << " " << i;
    os << "\n";
  }
}

Mesh read_mesh(std::istream& is) {
  std::string tok, kind;
  int n_nodes = 0, n_elems = 0;
  is >> tok >> n_nodes;
  if (tok != "nodes" || n_nodes <= 0) throw MeshError("bad mesh header");
  is >> tok >> n_elems;
  if (tok != "elements" || n_elems < 0) throw MeshError("bad mesh header");
  is >> tok >> kind;
  if (tok != "kind" || (kind != "Q4" && kind != "T3"))
    throw MeshError("bad mesh header");

  Mesh mesh;
  mesh.kind = kind == "Q4" ? ElemKind::Q4 : ElemKind::T3;
  mesh.nodes.resize(n_nodes);
  for (auto& p : mesh.nodes) {
    if (!(is >> p.x() >> p.y())) throw MeshError("truncated node list");
  }
  const int nen = mesh.nodes_per_elem();
  mesh.conn.resize(static_cast<size_t>(n_elems) * nen);
  for (int& v : mesh.conn)
    if (!(is >> v)) throw MeshError("truncated element list");
  while (is >> tok) {
    if (tok != "set") throw MeshError("unexpected token in mesh file");
    std::string name;
    size_t count = 0;
    is >> name >> count;
    auto& set = mesh.boundary_sets[name];
    set.resize(count);
    for (int& v : set)
      if (!(is >> v)) throw MeshError("truncated boundary set");
  }

  Eigen::Vector2d lo = mesh.nodes[0], hi = mesh.nodes[0];
  for (const auto& p : mesh.nodes) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  mesh.width = hi.x() - lo.x();
  mesh.height = hi.y() - lo.y();
  mesh.h_max = mesh.max_edge_length();
  mesh.validate();
  return mesh;
}

}  // namespace crackfield
