#pragma once

#include <Eigen/Dense>

#include <array>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace crackfield {

enum class ElemKind { Q4, T3 };

struct MeshError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Inclined rectangular slit cut out of a specimen.
struct FlawSpec {
  Eigen::Vector2d center = {0.0, 0.0};  // [m]
  double length = 0.0;                  // [m], along the inclined axis
  double width = 0.0;                   // [m], across the slit
  double angle_deg = 0.0;               // inclination from horizontal
  double eccentricity = 0.0;            // [m], vertical offset of center

  Eigen::Vector2d axis() const;    // unit vector along length
  Eigen::Vector2d normal() const;  // unit vector across width
  std::array<Eigen::Vector2d, 4> corners() const;  // CCW
  std::array<Eigen::Vector2d, 2> tips() const;     // end-cap centers
  bool contains(const Eigen::Vector2d& p, double margin = 0.0) const;
  /// Unsigned distance from p to the slit boundary polygon.
  double boundary_distance(const Eigen::Vector2d& p) const;

  void validate() const;
};

struct Mesh {
  ElemKind kind = ElemKind::Q4;
  std::vector<Eigen::Vector2d> nodes;
  std::vector<int> conn;  // element connectivity, stride nodes_per_elem()
  std::map<std::string, std::vector<int>> boundary_sets;
  std::vector<double> elem_modulus;  // optional, one entry per element
  double h_max = 0.0;                // characteristic element size [m]
  double width = 0.0;                // specimen bounding rectangle
  double height = 0.0;

  int nodes_per_elem() const { return kind == ElemKind::Q4 ? 4 : 3; }
  int num_elems() const { return static_cast<int>(conn.size()) / nodes_per_elem(); }
  int num_nodes() const { return static_cast<int>(nodes.size()); }
  std::span<const int> elem(int e) const {
    return {conn.data() + static_cast<size_t>(e) * nodes_per_elem(),
            static_cast<size_t>(nodes_per_elem())};
  }
  double elem_area(int e) const;
  double total_area() const;
  /// Longest element edge.
  double max_edge_length() const;

  void validate() const;
};

/// Regular Q4 grid over [0,width]x[0,height] with boundary node sets
/// "left", "right", "bottom", "top".
Mesh generate_structured_quad(double width, double height, int nx, int ny);

/// Conforming T3 mesh of the rectangle minus the slit cut-outs. Slit faces
/// carry no boundary-set membership (traction free). Deterministic for a
/// fixed input.
Mesh generate_flawed_mesh(double width, double height, std::span<const FlawSpec> flaws,
                          double target_h);

/// Plain-text mesh format: header `nodes N elements M kind Q4|T3`, node
/// coordinates, connectivity, then `set <name> k i1 ... ik` lines.
void write_mesh(std::ostream& os, const Mesh& mesh);
Mesh read_mesh(std::istream& is);

}  // namespace crackfield
