#pragma once

#include <Eigen/Dense>

#include <array>
#include <span>
#include <utility>
#include <vector>

namespace crackfield::detail {

/// Delaunay triangulation with enforced constraint edges (Bowyer-Watson
/// insertion followed by flip-based segment recovery). Point order is the
/// insertion order, so the result is deterministic for a fixed input.
/// Returns CCW triangles over point indices. Throws MeshError when a
/// constraint segment cannot be recovered.
std::vector<std::array<int, 3>> triangulate_constrained(
    std::span<const Eigen::Vector2d> points,
    std::span<const std::pair<int, int>> constraints);

}  // namespace crackfield::detail
