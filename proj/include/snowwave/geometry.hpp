#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

namespace snowwave {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double norm(Vec2 a);

/// Simple planar polygon, counter-clockwise, signed area > 0.
/// Validated on construction (>= 3 vertices, orientation, no self-intersection).
class Polygon {
public:
    explicit Polygon(std::vector<Vec2> vertices);
    static Polygon rectangle(Vec2 lo, Vec2 hi);

    const std::vector<Vec2>& vertices() const { return verts_; }
    std::size_t size() const { return verts_.size(); }
    double area() const { return area_; }
    Vec2 bbox_lo() const { return lo_; }
    Vec2 bbox_hi() const { return hi_; }
    double diameter() const;

    /// Point test with an epsilon band of 1e-12 * diameter; points on edges
    /// count as inside.
    bool contains(Vec2 p) const;

private:
    std::vector<Vec2> verts_;
    double area_ = 0.0;
    Vec2 lo_, hi_;
};

struct PrefractalSpec {
    double base_side = 1.0;
    int level = 0;
    Vec2 center{0.0, 0.0};
    int max_level = 10; // 3*4^10 vertices is the largest we agree to build
};

/// Level-m Koch snowflake prefractal: every edge of level m-1 is replaced by
/// the 4-edge generator pointing outward. 3*4^m vertices, CCW.
Polygon koch_prefractal(const PrefractalSpec& spec);

/// Shoelace area of the first m terms of the snowflake series,
/// A_m = A0 * (1 + (1/3) * sum_{k<m} (4/9)^k). Used as the analytic oracle.
double koch_area_formula(double base_side, int level);

double polygon_area(const Polygon& p);

/// Area of the symmetric difference of two *nested* polygons. Throws
/// ValidationError if neither contains the other (general clipping is out of
/// scope).
double symmetric_difference_area(const Polygon& a, const Polygon& b);

/// True iff every vertex of `inner` lies inside `outer` (on-edge counts as
/// inside) and no edges properly cross.
bool contains_polygon(const Polygon& outer, const Polygon& inner);

/// Exposed for property tests: no two non-adjacent edges intersect.
bool polygon_is_simple(const std::vector<Vec2>& verts);

struct NtaConstants {
    // Carried as metadata; the prefractal family is uniformly NTA but the
    // predicates are not computed here.
    double m_nta = 1.0;
    double r0 = 1.0;
};

struct DomainSequence {
    std::vector<Polygon> members;  // Omega_1 .. Omega_M, nested increasing
    Polygon limit_proxy;           // Omega at the highest resolved level
    Polygon ambient;               // Omega*, a bounding box
    NtaConstants nta;

    DomainSequence(std::vector<Polygon> members, Polygon limit_proxy,
                   Polygon ambient, NtaConstants nta);
};

/// Koch family Omega_{first..last} with limit proxy at ref_level and an
/// ambient box grown by `margin` times the proxy bbox diagonal.
DomainSequence koch_domain_sequence(double base_side, int first_level, int last_level,
                                    int ref_level, double margin = 0.125,
                                    Vec2 center = {0.0, 0.0}, NtaConstants nta = {});

struct SequenceConvergenceReport {
    std::vector<double> sym_diff_area; // per member, vs limit_proxy
    bool strictly_decreasing = false;
    // first member index (0-based) containing each probe, or nullopt
    std::vector<std::optional<std::size_t>> probe_first_member;
};

SequenceConvergenceReport sequence_convergence_report(const DomainSequence& seq,
                                                      const std::vector<Polygon>& probes);

/// Plain-text "x y" lines, CCW, no header. Shortest round-trip decimals, so
/// write/read is bit-exact.
void write_polygon(std::ostream& os, const Polygon& p);
Polygon read_polygon(std::istream& is);

} // namespace snowwave
