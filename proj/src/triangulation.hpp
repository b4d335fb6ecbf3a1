#pragma once

// Internal constrained-Delaunay / Ruppert refinement engine behind
// snowwave::triangulate(). Not part of the public API.

#include <array>
#include <cstdint>
#include <vector>

#include "snowwave/geometry.hpp"

namespace snowwave::detail {

struct TriangulationResult {
    std::vector<Vec2> points;
    std::vector<std::array<int, 3>> triangles; // CCW
    std::vector<std::uint8_t> on_boundary;
};

/// Triangulate the interior of a simple CCW polygon. All polygon vertices are
/// kept; polygon edges are covered by mesh boundary edges; every triangle has
/// min angle >= min_angle_deg and max edge <= h_target.
/// Throws NumericalError if the refinement budget is exhausted.
TriangulationResult triangulate_polygon(const Polygon& poly, double h_target,
                                        double min_angle_deg);

} // namespace snowwave::detail
