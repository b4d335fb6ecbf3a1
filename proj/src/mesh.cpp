#include "snowwave/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "snowwave/errors.hpp"
#include "snowwave/textio.hpp"
#include "triangulation.hpp"

namespace snowwave {

namespace {

double tri_area(Vec2 a, Vec2 b, Vec2 c) { return 0.5 * cross(b - a, c - a); }

} // namespace

Mesh::Mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
           std::vector<std::uint8_t> boundary_flags)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      boundary_flags_(std::move(boundary_flags)) {
    if (boundary_flags_.size() != vertices_.size())
        throw ValidationError("mesh: boundary flag count != vertex count");
    if (triangles_.empty()) throw ValidationError("mesh: no triangles");
    h_ = 0.0;
    for (const auto& t : triangles_) {
        for (int s = 0; s < 3; ++s) {
            const int a = t[static_cast<std::size_t>(s)];
            const int b = t[static_cast<std::size_t>((s + 1) % 3)];
            if (a < 0 || a >= static_cast<int>(vertices_.size()))
                throw ValidationError("mesh: vertex index out of range");
            h_ = std::max(h_, norm(vertices_[static_cast<std::size_t>(b)] -
                                   vertices_[static_cast<std::size_t>(a)]));
        }
        const double area = tri_area(vertices_[static_cast<std::size_t>(t[0])],
                                     vertices_[static_cast<std::size_t>(t[1])],
                                     vertices_[static_cast<std::size_t>(t[2])]);
        if (!(area > 1e-10 * h_ * h_))
            throw ValidationError("mesh: non-positive or degenerate triangle");
    }
    build_grid();
}

void Mesh::build_grid() {
    grid_lo_ = {std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
    grid_hi_ = {std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
    for (const Vec2& v : vertices_) {
        grid_lo_.x = std::min(grid_lo_.x, v.x);
        grid_lo_.y = std::min(grid_lo_.y, v.y);
        grid_hi_.x = std::max(grid_hi_.x, v.x);
        grid_hi_.y = std::max(grid_hi_.y, v.y);
    }
    const double w = std::max(grid_hi_.x - grid_lo_.x, 1e-300);
    const double hgt = std::max(grid_hi_.y - grid_lo_.y, 1e-300);
    const int target = static_cast<int>(std::sqrt(static_cast<double>(triangles_.size()))) + 1;
    cell_ = std::max(w, hgt) / target;
    nx_ = std::max(1, static_cast<int>(std::ceil(w / cell_)));
    ny_ = std::max(1, static_cast<int>(std::ceil(hgt / cell_)));
    cells_.assign(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_), {});
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
        Vec2 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
        Vec2 hi{std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
        for (int s = 0; s < 3; ++s) {
            const Vec2 v = vertices_[static_cast<std::size_t>(triangles_[t][static_cast<std::size_t>(s)])];
            lo.x = std::min(lo.x, v.x);
            lo.y = std::min(lo.y, v.y);
            hi.x = std::max(hi.x, v.x);
            hi.y = std::max(hi.y, v.y);
        }
        const int x0 = std::clamp(static_cast<int>((lo.x - grid_lo_.x) / cell_), 0, nx_ - 1);
        const int x1 = std::clamp(static_cast<int>((hi.x - grid_lo_.x) / cell_), 0, nx_ - 1);
        const int y0 = std::clamp(static_cast<int>((lo.y - grid_lo_.y) / cell_), 0, ny_ - 1);
        const int y1 = std::clamp(static_cast<int>((hi.y - grid_lo_.y) / cell_), 0, ny_ - 1);
        for (int x = x0; x <= x1; ++x)
            for (int y = y0; y <= y1; ++y)
                cells_[static_cast<std::size_t>(y) * nx_ + x].push_back(static_cast<int>(t));
    }
}

double Mesh::triangle_area(std::size_t t) const {
    const auto& tr = triangles_[t];
    return tri_area(vertices_[static_cast<std::size_t>(tr[0])],
                    vertices_[static_cast<std::size_t>(tr[1])],
                    vertices_[static_cast<std::size_t>(tr[2])]);
}

double Mesh::total_area() const {
    double sum = 0.0;
    for (std::size_t t = 0; t < triangles_.size(); ++t) sum += triangle_area(t);
    return sum;
}

double Mesh::min_angle_deg() const {
    double worst = 180.0;
    for (const auto& t : triangles_) {
        const Vec2 a = vertices_[static_cast<std::size_t>(t[0])];
        const Vec2 b = vertices_[static_cast<std::size_t>(t[1])];
        const Vec2 c = vertices_[static_cast<std::size_t>(t[2])];
        const Vec2 p[3] = {a, b, c};
        for (int i = 0; i < 3; ++i) {
            const Vec2 u = p[(i + 1) % 3] - p[i];
            const Vec2 v = p[(i + 2) % 3] - p[i];
            const double ang = std::atan2(std::abs(cross(u, v)), dot(u, v)) * 180.0 / M_PI;
            worst = std::min(worst, ang);
        }
    }
    return worst;
}

std::optional<Mesh::Location> Mesh::locate(Vec2 p) const {
    const double eps = 1e-12 * std::max(1.0, norm(grid_hi_ - grid_lo_));
    if (p.x < grid_lo_.x - eps || p.x > grid_hi_.x + eps || p.y < grid_lo_.y - eps ||
        p.y > grid_hi_.y + eps)
        return std::nullopt;
    const int cx = std::clamp(static_cast<int>((p.x - grid_lo_.x) / cell_), 0, nx_ - 1);
    const int cy = std::clamp(static_cast<int>((p.y - grid_lo_.y) / cell_), 0, ny_ - 1);
    // search the point's cell first, then the ring around it (numerical edge
    // cases on cell borders)
    for (int ring = 0; ring <= 1; ++ring) {
        for (int dx = -ring; dx <= ring; ++dx) {
            for (int dy = -ring; dy <= ring; ++dy) {
                if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
                const int x = cx + dx, y = cy + dy;
                if (x < 0 || x >= nx_ || y < 0 || y >= ny_) continue;
                for (int t : cells_[static_cast<std::size_t>(y) * nx_ + x]) {
                    const auto& tr = triangles_[static_cast<std::size_t>(t)];
                    const Vec2 a = vertices_[static_cast<std::size_t>(tr[0])];
                    const Vec2 b = vertices_[static_cast<std::size_t>(tr[1])];
                    const Vec2 c = vertices_[static_cast<std::size_t>(tr[2])];
                    const double area2 = cross(b - a, c - a);
                    const double w0 = cross(b - p, c - p) / area2;
                    const double w1 = cross(c - p, a - p) / area2;
                    const double w2 = 1.0 - w0 - w1;
                    const double tol = 1e-12;
                    if (w0 >= -tol && w1 >= -tol && w2 >= -tol) {
                        std::array<double, 3> bary{std::clamp(w0, 0.0, 1.0),
                                                   std::clamp(w1, 0.0, 1.0),
                                                   std::clamp(w2, 0.0, 1.0)};
                        const double s = bary[0] + bary[1] + bary[2];
                        bary[0] /= s;
                        bary[1] /= s;
                        bary[2] /= s;
                        return Location{t, bary};
                    }
                }
            }
        }
    }
    return std::nullopt;
}

double Mesh::interpolate_or_zero(const std::vector<double>& nodal, Vec2 p) const {
    if (nodal.size() != vertices_.size())
        throw ValidationError("interpolate: coefficient count != vertex count");
    const auto loc = locate(p);
    if (!loc) return 0.0;
    const auto& tr = triangles_[static_cast<std::size_t>(loc->triangle)];
    return loc->barycentric[0] * nodal[static_cast<std::size_t>(tr[0])] +
           loc->barycentric[1] * nodal[static_cast<std::size_t>(tr[1])] +
           loc->barycentric[2] * nodal[static_cast<std::size_t>(tr[2])];
}

std::vector<std::array<int, 2>> Mesh::boundary_edges() const {
    std::map<std::pair<int, int>, int> count;
    for (const auto& t : triangles_) {
        for (int s = 0; s < 3; ++s) {
            int a = t[static_cast<std::size_t>(s)], b = t[static_cast<std::size_t>((s + 1) % 3)];
            if (a > b) std::swap(a, b);
            ++count[{a, b}];
        }
    }
    std::vector<std::array<int, 2>> out;
    for (const auto& [edge, c] : count)
        if (c == 1) out.push_back({edge.first, edge.second});
    return out;
}

Mesh triangulate(const Polygon& p, double h_target) {
    if (!(h_target > 0.0)) throw ValidationError("triangulate: h_target must be positive");
    if (h_target > p.diameter())
        throw ValidationError("triangulate: h_target exceeds polygon diameter");
    auto result = detail::triangulate_polygon(p, h_target, 20.0);
    Mesh mesh(std::move(result.points), std::move(result.triangles), std::move(result.on_boundary));
    if (mesh.h() > h_target * (1.0 + 1e-9))
        throw NumericalError("triangulate: h bound missed (h=" + format_double(mesh.h()) + ")");
    const double ang = mesh.min_angle_deg();
    if (ang < 20.0 - 1e-9)
        throw NumericalError("triangulate: angle bound missed (min angle " + format_double(ang) +
                             " deg)");
    return mesh;
}

Mesh refine_uniform(const Mesh& m) {
    std::vector<Vec2> verts = m.vertices();
    std::vector<std::uint8_t> flags = m.boundary_flags();

    // midpoint per undirected edge; boundary iff the edge borders one triangle
    std::map<std::pair<int, int>, int> edge_mid;
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& t : m.triangles())
        for (int s = 0; s < 3; ++s) {
            int a = t[static_cast<std::size_t>(s)], b = t[static_cast<std::size_t>((s + 1) % 3)];
            if (a > b) std::swap(a, b);
            ++edge_count[{a, b}];
        }
    for (const auto& [edge, cnt] : edge_count) {
        const Vec2 mid = 0.5 * (verts[static_cast<std::size_t>(edge.first)] +
                                verts[static_cast<std::size_t>(edge.second)]);
        edge_mid[edge] = static_cast<int>(verts.size());
        verts.push_back(mid);
        flags.push_back(cnt == 1 ? 1 : 0);
    }

    std::vector<std::array<int, 3>> tris;
    tris.reserve(m.n_triangles() * 4);
    for (const auto& t : m.triangles()) {
        const int a = t[0], b = t[1], c = t[2];
        const auto mid = [&](int u, int v) {
            return edge_mid.at({std::min(u, v), std::max(u, v)});
        };
        const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
        tris.push_back({a, ab, ca});
        tris.push_back({ab, b, bc});
        tris.push_back({ca, bc, c});
        tris.push_back({ab, bc, ca});
    }
    return Mesh(std::move(verts), std::move(tris), std::move(flags));
}

void write_mesh(std::ostream& os, const Mesh& m) {
    os << m.n_vertices() << ' ' << m.n_triangles() << '\n';
    for (std::size_t i = 0; i < m.n_vertices(); ++i) {
        const Vec2& v = m.vertices()[i];
        os << format_double(v.x) << ' ' << format_double(v.y) << ' '
           << static_cast<int>(m.boundary_flags()[i]) << '\n';
    }
    for (const auto& t : m.triangles()) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

Mesh read_mesh(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ValidationError("mesh file: missing header");
    std::istringstream hs(line);
    long nv = 0, nt = 0;
    if (!(hs >> nv >> nt) || nv < 3 || nt < 1) throw ValidationError("mesh file: bad header");
    std::vector<Vec2> verts;
    std::vector<std::uint8_t> flags;
    verts.reserve(static_cast<std::size_t>(nv));
    for (long i = 0; i < nv; ++i) {
        if (!std::getline(is, line)) throw ValidationError("mesh file: truncated vertices");
        std::istringstream ls(line);
        std::string sx, sy, sf;
        if (!(ls >> sx >> sy >> sf)) throw ValidationError("mesh file: bad vertex line");
        verts.push_back({parse_double(sx), parse_double(sy)});
        flags.push_back(static_cast<std::uint8_t>(parse_long(sf)));
    }
    std::vector<std::array<int, 3>> tris;
    tris.reserve(static_cast<std::size_t>(nt));
    for (long i = 0; i < nt; ++i) {
        if (!std::getline(is, line)) throw ValidationError("mesh file: truncated triangles");
        std::istringstream ls(line);
        long a = 0, b = 0, c = 0;
        if (!(ls >> a >> b >> c)) throw ValidationError("mesh file: bad triangle line");
        tris.push_back({static_cast<int>(a), static_cast<int>(b), static_cast<int>(c)});
    }
    return Mesh(std::move(verts), std::move(tris), std::move(flags));
}

} // namespace snowwave
