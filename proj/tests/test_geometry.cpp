#include <doctest.h>

#include <cmath>
#include <sstream>

#include "snowwave/errors.hpp"
#include "snowwave/geometry.hpp"
#include "snowwave/rng.hpp"

using namespace snowwave;

namespace {
Polygon unit_square() { return Polygon::rectangle({0.0, 0.0}, {1.0, 1.0}); }

Polygon scaled_copy(const Polygon& p, double s, Vec2 shift = {0.0, 0.0}) {
    std::vector<Vec2> v;
    Vec2 c{0.0, 0.0};
    for (const Vec2& q : p.vertices()) c = c + q;
    c = (1.0 / static_cast<double>(p.size())) * c;
    for (const Vec2& q : p.vertices()) v.push_back(c + s * (q - c) + shift);
    return Polygon(std::move(v));
}
} // namespace

TEST_CASE("koch level 0 is an equilateral triangle") {
    const Polygon tri = koch_prefractal({1.0, 0, {0.0, 0.0}});
    CHECK(tri.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        const Vec2 a = tri.vertices()[i];
        const Vec2 b = tri.vertices()[(i + 1) % 3];
        CHECK(norm(b - a) == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(tri.area() == doctest::Approx(std::sqrt(3.0) / 4.0).epsilon(1e-12));
}

TEST_CASE("koch vertex counts follow 3*4^m") {
    for (int m = 0; m <= 4; ++m) {
        const Polygon p = koch_prefractal({1.0, m, {0.25, -0.3}});
        CHECK(p.size() == 3u * (1u << (2 * m)));
    }
    CHECK(koch_prefractal({1.0, 3, {0, 0}}).size() == 192);
}

TEST_CASE("koch areas match the geometric-series recurrence") {
    // shoelace vs A_m = A0 (1 + (1/3) sum_{k<m} (4/9)^k)
    for (int m = 0; m <= 6; ++m) {
        const Polygon p = koch_prefractal({1.0, m, {0, 0}});
        CHECK(p.area() == doctest::Approx(koch_area_formula(1.0, m)).epsilon(1e-12));
    }
    CHECK(koch_area_formula(1.0, 2) ==
          doctest::Approx(std::sqrt(3.0) / 4.0 * (1.0 + 1.0 / 3.0 + 4.0 / 27.0)).epsilon(1e-15));
    CHECK(koch_prefractal({1.0, 2, {0, 0}}).area() == doctest::Approx(0.641500299).epsilon(1e-9));
    CHECK(koch_prefractal({1.0, 1, {0, 0}}).area() == doctest::Approx(0.5773503).epsilon(1e-7));
}

TEST_CASE("koch prefractals are simple and CCW at every level") {
    for (int m = 0; m <= 5; ++m) {
        const Polygon p = koch_prefractal({1.0, m, {0, 0}});
        CHECK(polygon_is_simple(p.vertices()));
        CHECK(p.area() > 0.0);
    }
}

TEST_CASE("koch level cap raises a resource error") {
    PrefractalSpec spec{1.0, 7, {0, 0}};
    spec.max_level = 6;
    CHECK_THROWS_AS(koch_prefractal(spec), ValidationError);
}

TEST_CASE("polygon_area basics") {
    CHECK(polygon_area(unit_square()) == doctest::Approx(1.0).epsilon(1e-15));
    const Polygon tri({{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2.0}});
    CHECK(polygon_area(tri) == doctest::Approx(std::sqrt(3.0) / 4.0).epsilon(1e-12));
    CHECK_THROWS_AS(Polygon({{0, 0}, {1, 0}, {2, 0}}), ValidationError); // collinear
    CHECK_THROWS_AS(Polygon({{0, 0}, {0, 1}, {1, 1}, {1, 0}}), ValidationError); // CW
}

TEST_CASE("containment: nested koch levels and probes") {
    const Polygon l0 = koch_prefractal({1.0, 0, {0, 0}});
    const Polygon l1 = koch_prefractal({1.0, 1, {0, 0}});
    const Polygon l3 = koch_prefractal({1.0, 3, {0, 0}});
    CHECK(contains_polygon(l1, l0));
    CHECK(contains_polygon(l3, l0));
    CHECK(contains_polygon(l3, l1));
    CHECK_FALSE(contains_polygon(l0, l3));
    // point-in-polygon oracle over all vertices
    for (const Vec2& v : l0.vertices()) CHECK(l3.contains(v));

    const Polygon sq = unit_square();
    CHECK(contains_polygon(sq, scaled_copy(sq, 0.9)));
    CHECK(contains_polygon(sq, sq)); // vertices on edges count as inside
    CHECK_FALSE(contains_polygon(sq, scaled_copy(sq, 1.0, {5.0, 0.0})));
}

TEST_CASE("nesting of consecutive koch levels") {
    for (int m = 0; m <= 4; ++m) {
        const Polygon a = koch_prefractal({1.0, m, {0, 0}});
        const Polygon b = koch_prefractal({1.0, m + 1, {0, 0}});
        CHECK(contains_polygon(b, a));
        CHECK(b.area() > a.area());
    }
}

TEST_CASE("symmetric difference of nested polygons") {
    const Polygon sq = unit_square();
    CHECK(symmetric_difference_area(sq, sq) == doctest::Approx(0.0));
    const Polygon l0 = koch_prefractal({1.0, 0, {0, 0}});
    const Polygon l1 = koch_prefractal({1.0, 1, {0, 0}});
    CHECK(symmetric_difference_area(l0, l1) ==
          doctest::Approx(koch_area_formula(1.0, 1) - koch_area_formula(1.0, 0)).epsilon(1e-12));
    CHECK(symmetric_difference_area(l0, l1) == doctest::Approx(0.1443376).epsilon(1e-6));
    // level-m vs reference: A0 (1/3) sum_{k=m}^{ref-1} (4/9)^k
    const Polygon l2 = koch_prefractal({1.0, 2, {0, 0}});
    const Polygon l5 = koch_prefractal({1.0, 5, {0, 0}});
    CHECK(symmetric_difference_area(l2, l5) ==
          doctest::Approx(koch_area_formula(1.0, 5) - koch_area_formula(1.0, 2)).epsilon(1e-12));
    const Polygon off = scaled_copy(sq, 1.0, {0.5, 0.0});
    CHECK_THROWS_AS(symmetric_difference_area(sq, off), ValidationError);
}

TEST_CASE("area deficit matches the closed form to 1e-12") {
    // area(inf) - area(m) = A0 (1/3) (4/9)^m / (1 - 4/9)
    const double a0 = std::sqrt(3.0) / 4.0;
    const double a_inf = a0 * (1.0 + (1.0 / 3.0) / (1.0 - 4.0 / 9.0));
    for (int m = 0; m <= 6; ++m) {
        const Polygon p = koch_prefractal({1.0, m, {0, 0}});
        const double deficit = a0 / 3.0 * std::pow(4.0 / 9.0, m) / (1.0 - 4.0 / 9.0);
        CHECK(a_inf - p.area() == doctest::Approx(deficit).epsilon(1e-12));
    }
}

TEST_CASE("domain sequence report") {
    const DomainSequence seq = koch_domain_sequence(1.0, 0, 4, 5);
    const Polygon probe = koch_prefractal({1.0, 0, {0, 0}});
    const auto rep = sequence_convergence_report(seq, {probe});
    REQUIRE(rep.sym_diff_area.size() == 5);
    CHECK(rep.strictly_decreasing);
    // tail bound: last difference below (4/9)^4 * (A0/3)/(1-4/9)
    const double a0 = std::sqrt(3.0) / 4.0;
    CHECK(rep.sym_diff_area.back() <= std::pow(4.0 / 9.0, 4) * (a0 / 3.0) / (1.0 - 4.0 / 9.0));
    REQUIRE(rep.probe_first_member.size() == 1);
    REQUIRE(rep.probe_first_member[0].has_value());
    CHECK(*rep.probe_first_member[0] == 0); // m(K) = 0 for the base triangle
    for (std::size_t i = 0; i < rep.sym_diff_area.size(); ++i) {
        const double expect = koch_area_formula(1.0, 5) - koch_area_formula(1.0, static_cast<int>(i));
        CHECK(rep.sym_diff_area[i] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("single-member sequence equal to proxy has zero differences") {
    const Polygon l2 = koch_prefractal({1.0, 2, {0, 0}});
    const Polygon ambient = Polygon::rectangle({-2, -2}, {2, 2});
    const DomainSequence seq({l2}, l2, ambient, {});
    const auto rep = sequence_convergence_report(seq, {});
    CHECK(rep.sym_diff_area[0] == doctest::Approx(0.0));
}

TEST_CASE("polygon serialization round-trips bit-exactly") {
    Rng rng(77);
    const Polygon p = koch_prefractal({1.0 + rng.uniform(), 3, {rng.normal(), rng.normal()}});
    std::ostringstream os;
    write_polygon(os, p);
    std::istringstream is(os.str());
    const Polygon q = read_polygon(is);
    REQUIRE(q.size() == p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(q.vertices()[i].x == p.vertices()[i].x);
        CHECK(q.vertices()[i].y == p.vertices()[i].y);
    }
    std::ostringstream os2;
    write_polygon(os2, q);
    CHECK(os.str() == os2.str());
}
