#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "snowwave/errors.hpp"
#include "snowwave/geometry.hpp"
#include "snowwave/mesh.hpp"
#include "snowwave/rng.hpp"

using namespace snowwave;

namespace {

// conformity: every interior edge shared by exactly 2 triangles
void check_conforming(const Mesh& m) {
    std::map<std::pair<int, int>, int> count;
    for (const auto& t : m.triangles())
        for (int s = 0; s < 3; ++s) {
            int a = t[static_cast<std::size_t>(s)], b = t[static_cast<std::size_t>((s + 1) % 3)];
            if (a > b) std::swap(a, b);
            ++count[{a, b}];
        }
    for (const auto& [e, c] : count) {
        CHECK(c >= 1);
        CHECK(c <= 2);
        if (c == 1) {
            CHECK(m.boundary_flags()[static_cast<std::size_t>(e.first)] == 1);
            CHECK(m.boundary_flags()[static_cast<std::size_t>(e.second)] == 1);
        }
    }
}

long euler_v_minus_e_plus_f(const Mesh& m) {
    std::set<std::pair<int, int>> edges;
    for (const auto& t : m.triangles())
        for (int s = 0; s < 3; ++s) {
            int a = t[static_cast<std::size_t>(s)], b = t[static_cast<std::size_t>((s + 1) % 3)];
            if (a > b) std::swap(a, b);
            edges.insert({a, b});
        }
    return static_cast<long>(m.n_vertices()) - static_cast<long>(edges.size()) +
           static_cast<long>(m.n_triangles());
}

} // namespace

TEST_CASE("unit square mesh satisfies the contract") {
    const Polygon sq = Polygon::rectangle({0, 0}, {1, 1});
    const Mesh m = triangulate(sq, 0.5);
    CHECK(m.h() <= 0.5 * (1.0 + 1e-12));
    CHECK(m.min_angle_deg() >= 20.0 - 1e-9);
    CHECK(euler_v_minus_e_plus_f(m) == 1); // one boundary loop
    check_conforming(m);
    CHECK(m.total_area() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("finer square mesh") {
    const Polygon sq = Polygon::rectangle({0, 0}, {1, 1});
    const Mesh m = triangulate(sq, 0.07);
    CHECK(m.h() <= 0.07 * (1.0 + 1e-12));
    CHECK(m.min_angle_deg() >= 20.0 - 1e-9);
    check_conforming(m);
    CHECK(m.total_area() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(euler_v_minus_e_plus_f(m) == 1);
}

TEST_CASE("level-2 snowflake mesh covers all 48 polygon edges") {
    const Polygon flake = koch_prefractal({1.0, 2, {0, 0}});
    REQUIRE(flake.size() == 48);
    const Mesh m = triangulate(flake, 0.05);
    CHECK(m.min_angle_deg() >= 20.0 - 1e-9);
    CHECK(m.h() <= 0.05 * (1.0 + 1e-12));
    CHECK(m.total_area() == doctest::Approx(flake.area()).epsilon(1e-10));
    check_conforming(m);

    // every polygon vertex is a mesh vertex
    std::set<std::pair<double, double>> mesh_pts;
    for (const Vec2& v : m.vertices()) mesh_pts.insert({v.x, v.y});
    for (const Vec2& v : flake.vertices()) CHECK(mesh_pts.count({v.x, v.y}) == 1);

    // every boundary edge of the mesh lies on some polygon edge
    const auto bedges = m.boundary_edges();
    const double eps = 1e-10;
    for (const auto& e : bedges) {
        const Vec2 a = m.vertices()[static_cast<std::size_t>(e[0])];
        const Vec2 b = m.vertices()[static_cast<std::size_t>(e[1])];
        bool covered = false;
        const auto& pv = flake.vertices();
        for (std::size_t i = 0; i < pv.size() && !covered; ++i) {
            const Vec2 p = pv[i], q = pv[(i + 1) % pv.size()];
            const double lpq = norm(q - p);
            const double da = std::abs(cross(q - p, a - p)) / lpq;
            const double db = std::abs(cross(q - p, b - p)) / lpq;
            const double ta = dot(a - p, q - p) / (lpq * lpq);
            const double tb = dot(b - p, q - p) / (lpq * lpq);
            if (da < eps && db < eps && ta > -eps && ta < 1 + eps && tb > -eps && tb < 1 + eps)
                covered = true;
        }
        CHECK(covered);
    }
}

TEST_CASE("triangulate rejects oversized h") {
    const Polygon sq = Polygon::rectangle({0, 0}, {1, 1});
    CHECK_THROWS_AS(triangulate(sq, 10.0), ValidationError);
}

TEST_CASE("red refinement quadruples triangles, halves h, preserves area") {
    const Polygon flake = koch_prefractal({1.0, 1, {0, 0}});
    const Mesh m = triangulate(flake, 0.2);
    const Mesh r = refine_uniform(m);
    CHECK(r.n_triangles() == 4 * m.n_triangles());
    CHECK(r.total_area() == doctest::Approx(m.total_area()).epsilon(1e-12));
    CHECK(r.h() == doctest::Approx(m.h() / 2.0).epsilon(1e-12));
    check_conforming(r);

    // boundary vertex set of parent is a subset of child's
    std::set<std::pair<double, double>> child_bnd;
    for (std::size_t i = 0; i < r.n_vertices(); ++i)
        if (r.boundary_flags()[i]) child_bnd.insert({r.vertices()[i].x, r.vertices()[i].y});
    for (std::size_t i = 0; i < m.n_vertices(); ++i)
        if (m.boundary_flags()[i]) CHECK(child_bnd.count({m.vertices()[i].x, m.vertices()[i].y}) == 1);

    const Mesh rr = refine_uniform(r);
    CHECK(rr.n_triangles() == 16 * m.n_triangles());
    CHECK(rr.h() == doctest::Approx(m.h() / 4.0).epsilon(1e-12));
}

TEST_CASE("locate_point: centroids, outside points, random round trip") {
    const Polygon flake = koch_prefractal({1.0, 2, {0, 0}});
    const Mesh m = triangulate(flake, 0.1);

    for (std::size_t t = 0; t < m.n_triangles(); t += 7) {
        const auto& tr = m.triangles()[t];
        const Vec2 a = m.vertices()[static_cast<std::size_t>(tr[0])];
        const Vec2 b = m.vertices()[static_cast<std::size_t>(tr[1])];
        const Vec2 c = m.vertices()[static_cast<std::size_t>(tr[2])];
        const Vec2 centroid = (1.0 / 3.0) * (a + b + c);
        const auto loc = m.locate(centroid);
        REQUIRE(loc.has_value());
        CHECK(loc->triangle == static_cast<int>(t));
        for (int k = 0; k < 3; ++k)
            CHECK(loc->barycentric[static_cast<std::size_t>(k)] ==
                  doctest::Approx(1.0 / 3.0).epsilon(1e-10));
    }

    CHECK_FALSE(m.locate({10.0, 10.0}).has_value());
    CHECK_FALSE(m.locate({-5.0, 0.0}).has_value());

    Rng rng(123);
    int found = 0;
    for (int i = 0; i < 500; ++i) {
        const Vec2 p{rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.8)};
        const auto loc = m.locate(p);
        if (!loc) continue;
        ++found;
        const auto& tr = m.triangles()[static_cast<std::size_t>(loc->triangle)];
        Vec2 rec{0, 0};
        for (int k = 0; k < 3; ++k)
            rec = rec + loc->barycentric[static_cast<std::size_t>(k)] *
                            m.vertices()[static_cast<std::size_t>(tr[static_cast<std::size_t>(k)])];
        CHECK(norm(rec - p) < 1e-12);
        double s = 0.0;
        for (int k = 0; k < 3; ++k) {
            s += loc->barycentric[static_cast<std::size_t>(k)];
            CHECK(loc->barycentric[static_cast<std::size_t>(k)] >= 0.0);
            CHECK(loc->barycentric[static_cast<std::size_t>(k)] <= 1.0);
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(found > 100);
}

TEST_CASE("mesh file round-trip is bit-exact") {
    const Polygon flake = koch_prefractal({1.0, 1, {0.1, 0.2}});
    const Mesh m = triangulate(flake, 0.15);
    std::ostringstream os;
    write_mesh(os, m);
    std::istringstream is(os.str());
    const Mesh q = read_mesh(is);
    std::ostringstream os2;
    write_mesh(os2, q);
    CHECK(os.str() == os2.str());
    CHECK(q.n_vertices() == m.n_vertices());
    CHECK(q.h() == m.h());
}

TEST_CASE("triangulate is deterministic") {
    const Polygon flake = koch_prefractal({1.0, 2, {0, 0}});
    std::ostringstream a, b;
    write_mesh(a, triangulate(flake, 0.08));
    write_mesh(b, triangulate(flake, 0.08));
    CHECK(a.str() == b.str());
}
