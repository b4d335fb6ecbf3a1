#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "snowwave/geometry.hpp"

namespace snowwave {

/// Conforming P1 triangulation. Immutable after construction; queries are
/// thread-safe.
class Mesh {
public:
    Mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
         std::vector<std::uint8_t> boundary_flags);

    const std::vector<Vec2>& vertices() const { return vertices_; }
    const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
    const std::vector<std::uint8_t>& boundary_flags() const { return boundary_flags_; }
    std::size_t n_vertices() const { return vertices_.size(); }
    std::size_t n_triangles() const { return triangles_.size(); }
    double h() const { return h_; }

    double triangle_area(std::size_t t) const;
    double total_area() const;
    double min_angle_deg() const;

    struct Location {
        int triangle;
        std::array<double, 3> barycentric;
    };
    /// Point location via a uniform candidate grid; nullopt when outside.
    std::optional<Location> locate(Vec2 p) const;

    /// Interpolate nodal values at p; 0 outside (extension by zero).
    double interpolate_or_zero(const std::vector<double>& nodal, Vec2 p) const;

    /// Edges incident to exactly one triangle, each (a, b).
    std::vector<std::array<int, 2>> boundary_edges() const;

private:
    void build_grid();

    std::vector<Vec2> vertices_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<std::uint8_t> boundary_flags_;
    double h_ = 0.0;
    // locate acceleration
    Vec2 grid_lo_{}, grid_hi_{};
    double cell_ = 1.0;
    int nx_ = 1, ny_ = 1;
    std::vector<std::vector<int>> cells_;
};

/// Conforming triangulation with max edge <= h_target and min angle >= 20
/// degrees. Every polygon vertex is a mesh vertex and every polygon edge is a
/// union of mesh boundary edges.
Mesh triangulate(const Polygon& p, double h_target);

/// Red refinement: each triangle split into 4 by edge midpoints.
Mesh refine_uniform(const Mesh& m);

/// Text format: header "V T", V lines "x y flag", T lines "i j k" (0-based).
void write_mesh(std::ostream& os, const Mesh& m);
Mesh read_mesh(std::istream& is);

} // namespace snowwave
