#include "snowwave/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "snowwave/errors.hpp"
#include "snowwave/textio.hpp"

namespace snowwave {

double norm(Vec2 a) { return std::sqrt(a.x * a.x + a.y * a.y); }

namespace {

double shoelace(const std::vector<Vec2>& v) {
    double twice = 0.0;
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = v[i];
        const Vec2& b = v[(i + 1) % n];
        twice += cross(a, b);
    }
    return 0.5 * twice;
}

// Squared distance from p to segment [a, b].
double segment_dist_sq(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 ab = b - a;
    const double len_sq = dot(ab, ab);
    double t = len_sq > 0.0 ? dot(p - a, ab) / len_sq : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const Vec2 q = a + t * ab;
    return dot(p - q, p - q);
}

// Strict proper crossing: interiors intersect transversally. Touching within
// eps (shared endpoints, vertex on edge) does not count.
bool segments_cross_properly(Vec2 a, Vec2 b, Vec2 c, Vec2 d, double eps) {
    const double d1 = cross(b - a, c - a);
    const double d2 = cross(b - a, d - a);
    const double d3 = cross(d - c, a - c);
    const double d4 = cross(d - c, b - c);
    return (d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps)
               ? ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps))
               : false;
}

// Any contact at all (used by the simplicity check for non-adjacent edges).
bool segments_touch(Vec2 a, Vec2 b, Vec2 c, Vec2 d, double eps) {
    if (segments_cross_properly(a, b, c, d, eps)) return true;
    const double eps_sq = eps * eps;
    return segment_dist_sq(c, a, b) <= eps_sq || segment_dist_sq(d, a, b) <= eps_sq ||
           segment_dist_sq(a, c, d) <= eps_sq || segment_dist_sq(b, c, d) <= eps_sq;
}

// Uniform grid over segments of a vertex loop, for near-linear pair queries.
class SegmentGrid {
public:
    SegmentGrid(const std::vector<Vec2>& verts, Vec2 lo, Vec2 hi) : verts_(verts) {
        const std::size_t n = verts.size();
        const double span = std::max({hi.x - lo.x, hi.y - lo.y, 1e-300});
        nx_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::sqrt(static_cast<double>(n))));
        cell_ = span / static_cast<double>(nx_);
        lo_ = lo;
        for (std::size_t i = 0; i < n; ++i) {
            Vec2 a = verts[i], b = verts[(i + 1) % n];
            visit_cells(a, b, [&](std::int64_t key) { cells_[key].push_back(i); });
        }
    }

    template <class F>
    void for_candidates(Vec2 a, Vec2 b, F&& f) const {
        visit_cells(a, b, [&](std::int64_t key) {
            auto it = cells_.find(key);
            if (it == cells_.end()) return;
            for (std::size_t j : it->second) f(j);
        });
    }

private:
    template <class F>
    void visit_cells(Vec2 a, Vec2 b, F&& f) const {
        const auto cx = [&](double x) { return static_cast<std::int64_t>(std::floor((x - lo_.x) / cell_)); };
        const auto cy = [&](double y) { return static_cast<std::int64_t>(std::floor((y - lo_.y) / cell_)); };
        std::int64_t x0 = cx(std::min(a.x, b.x)) - 1, x1 = cx(std::max(a.x, b.x)) + 1;
        std::int64_t y0 = cy(std::min(a.y, b.y)) - 1, y1 = cy(std::max(a.y, b.y)) + 1;
        for (std::int64_t x = x0; x <= x1; ++x)
            for (std::int64_t y = y0; y <= y1; ++y) f(x * 73856093LL ^ y * 19349663LL);
    }

    const std::vector<Vec2>& verts_;
    std::unordered_map<std::int64_t, std::vector<std::size_t>> cells_;
    Vec2 lo_;
    double cell_ = 1.0;
    std::int64_t nx_ = 1;
};

} // namespace

bool polygon_is_simple(const std::vector<Vec2>& verts) {
    const std::size_t n = verts.size();
    if (n < 3) return false;
    Vec2 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
    Vec2 hi{std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
    for (const Vec2& v : verts) {
        lo.x = std::min(lo.x, v.x); lo.y = std::min(lo.y, v.y);
        hi.x = std::max(hi.x, v.x); hi.y = std::max(hi.y, v.y);
    }
    const double eps = 1e-12 * norm(hi - lo);
    SegmentGrid grid(verts, lo, hi);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = verts[i], b = verts[(i + 1) % n];
        bool bad = false;
        grid.for_candidates(a, b, [&](std::size_t j) {
            if (bad || j <= i) return;
            // adjacent edges share exactly one endpoint
            if (j == i + 1 || (i == 0 && j == n - 1)) return;
            const Vec2 c = verts[j], d = verts[(j + 1) % n];
            if (segments_touch(a, b, c, d, eps)) bad = true;
        });
        if (bad) return false;
    }
    return true;
}

Polygon::Polygon(std::vector<Vec2> vertices) : verts_(std::move(vertices)) {
    if (verts_.size() < 3) throw ValidationError("polygon needs at least 3 vertices");
    area_ = shoelace(verts_);
    if (!(area_ > 0.0))
        throw ValidationError("polygon must be counter-clockwise with positive area");
    lo_ = {std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
    hi_ = {std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
    for (const Vec2& v : verts_) {
        lo_.x = std::min(lo_.x, v.x); lo_.y = std::min(lo_.y, v.y);
        hi_.x = std::max(hi_.x, v.x); hi_.y = std::max(hi_.y, v.y);
    }
    if (!polygon_is_simple(verts_)) throw ValidationError("polygon is self-intersecting");
}

Polygon Polygon::rectangle(Vec2 lo, Vec2 hi) {
    if (!(hi.x > lo.x) || !(hi.y > lo.y)) throw ValidationError("degenerate rectangle");
    return Polygon({{lo.x, lo.y}, {hi.x, lo.y}, {hi.x, hi.y}, {lo.x, hi.y}});
}

double Polygon::diameter() const { return norm(hi_ - lo_); }

bool Polygon::contains(Vec2 p) const {
    const double eps = 1e-12 * diameter();
    if (p.x < lo_.x - eps || p.x > hi_.x + eps || p.y < lo_.y - eps || p.y > hi_.y + eps)
        return false;
    const std::size_t n = verts_.size();
    const double eps_sq = eps * eps;
    // on-edge points count as inside
    for (std::size_t i = 0; i < n; ++i)
        if (segment_dist_sq(p, verts_[i], verts_[(i + 1) % n]) <= eps_sq) return true;
    // crossing count, half-open rule
    bool inside = false;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = verts_[i], b = verts_[(i + 1) % n];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if (x_cross > p.x) inside = !inside;
        }
    }
    return inside;
}

Polygon koch_prefractal(const PrefractalSpec& spec) {
    if (!(spec.base_side > 0.0)) throw ValidationError("koch: base_side must be positive");
    if (spec.level < 0) throw ValidationError("koch: level must be non-negative");
    if (spec.level > spec.max_level)
        throw ValidationError("koch: level " + std::to_string(spec.level) +
                              " exceeds configured maximum " + std::to_string(spec.max_level));

    // level 0: equilateral triangle, CCW, circumradius side/sqrt(3)
    const double r = spec.base_side / std::sqrt(3.0);
    std::vector<Vec2> verts;
    verts.reserve(static_cast<std::size_t>(3) << (2 * spec.level));
    for (int k = 0; k < 3; ++k) {
        const double angle = 0.5 * M_PI + 2.0 * M_PI * k / 3.0;
        verts.push_back({spec.center.x + r * std::cos(angle), spec.center.y + r * std::sin(angle)});
    }

    const double h = std::sqrt(3.0) / 6.0; // spike height / edge length
    for (int lvl = 0; lvl < spec.level; ++lvl) {
        std::vector<Vec2> next;
        next.reserve(verts.size() * 4);
        const std::size_t n = verts.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 p = verts[i], q = verts[(i + 1) % n];
            const Vec2 d = q - p;
            // outward normal of a CCW polygon is to the right of travel
            const Vec2 tip{p.x + 0.5 * d.x + h * d.y, p.y + 0.5 * d.y - h * d.x};
            next.push_back(p);
            next.push_back(p + (1.0 / 3.0) * d);
            next.push_back(tip);
            next.push_back(p + (2.0 / 3.0) * d);
        }
        verts = std::move(next);
    }
    return Polygon(std::move(verts));
}

double koch_area_formula(double base_side, int level) {
    const double a0 = std::sqrt(3.0) / 4.0 * base_side * base_side;
    double series = 0.0;
    double term = 1.0;
    for (int k = 0; k < level; ++k) {
        series += term;
        term *= 4.0 / 9.0;
    }
    return a0 * (1.0 + series / 3.0);
}

double polygon_area(const Polygon& p) { return p.area(); }

bool contains_polygon(const Polygon& outer, const Polygon& inner) {
    for (const Vec2& v : inner.vertices())
        if (!outer.contains(v)) return false;
    const double eps = 1e-12 * std::max(outer.diameter(), inner.diameter());
    const auto& ov = outer.vertices();
    const auto& iv = inner.vertices();
    SegmentGrid grid(ov, outer.bbox_lo(), outer.bbox_hi());
    const std::size_t ni = iv.size(), no = ov.size();
    for (std::size_t i = 0; i < ni; ++i) {
        const Vec2 a = iv[i], b = iv[(i + 1) % ni];
        bool crossed = false;
        grid.for_candidates(a, b, [&](std::size_t j) {
            if (crossed) return;
            if (segments_cross_properly(a, b, ov[j], ov[(j + 1) % no], eps)) crossed = true;
        });
        if (crossed) return false;
    }
    return true;
}

double symmetric_difference_area(const Polygon& a, const Polygon& b) {
    const bool a_in_b = contains_polygon(b, a);
    const bool b_in_a = contains_polygon(a, b);
    if (!a_in_b && !b_in_a)
        throw ValidationError("symmetric_difference_area: polygons are not nested");
    return std::abs(a.area() - b.area());
}

DomainSequence::DomainSequence(std::vector<Polygon> members_in, Polygon limit_proxy_in,
                               Polygon ambient_in, NtaConstants nta_in)
    : members(std::move(members_in)),
      limit_proxy(std::move(limit_proxy_in)),
      ambient(std::move(ambient_in)),
      nta(nta_in) {
    if (members.empty()) throw ValidationError("domain sequence needs at least one member");
    for (const Polygon& m : members)
        if (!contains_polygon(ambient, m))
            throw ValidationError("domain sequence member not inside ambient");
    if (!contains_polygon(ambient, limit_proxy))
        throw ValidationError("limit proxy not inside ambient");
}

DomainSequence koch_domain_sequence(double base_side, int first_level, int last_level,
                                    int ref_level, double margin, Vec2 center,
                                    NtaConstants nta) {
    if (first_level < 0 || last_level < first_level || ref_level < last_level)
        throw ValidationError("koch_domain_sequence: need 0 <= first <= last <= ref");
    std::vector<Polygon> members;
    for (int lvl = first_level; lvl <= last_level; ++lvl)
        members.push_back(koch_prefractal({base_side, lvl, center}));
    Polygon proxy = koch_prefractal({base_side, ref_level, center});
    const double pad = margin * proxy.diameter();
    Polygon ambient = Polygon::rectangle(proxy.bbox_lo() - Vec2{pad, pad},
                                         proxy.bbox_hi() + Vec2{pad, pad});
    return DomainSequence(std::move(members), std::move(proxy), std::move(ambient), nta);
}

SequenceConvergenceReport sequence_convergence_report(const DomainSequence& seq,
                                                      const std::vector<Polygon>& probes) {
    SequenceConvergenceReport rep;
    rep.sym_diff_area.reserve(seq.members.size());
    for (const Polygon& m : seq.members)
        rep.sym_diff_area.push_back(symmetric_difference_area(m, seq.limit_proxy));
    rep.strictly_decreasing = true;
    for (std::size_t i = 1; i < rep.sym_diff_area.size(); ++i)
        if (!(rep.sym_diff_area[i] < rep.sym_diff_area[i - 1])) rep.strictly_decreasing = false;
    for (const Polygon& probe : probes) {
        std::optional<std::size_t> first;
        for (std::size_t i = 0; i < seq.members.size(); ++i) {
            if (contains_polygon(seq.members[i], probe)) {
                first = i;
                break;
            }
        }
        rep.probe_first_member.push_back(first);
    }
    return rep;
}

void write_polygon(std::ostream& os, const Polygon& p) {
    for (const Vec2& v : p.vertices())
        os << format_double(v.x) << ' ' << format_double(v.y) << '\n';
}

Polygon read_polygon(std::istream& is) {
    std::vector<Vec2> verts;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string sx, sy;
        if (!(ls >> sx >> sy)) throw ValidationError("polygon file: bad line '" + line + "'");
        verts.push_back({parse_double(sx), parse_double(sy)});
    }
    return Polygon(std::move(verts));
}

} // namespace snowwave
