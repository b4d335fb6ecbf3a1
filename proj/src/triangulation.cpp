#include "triangulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "snowwave/errors.hpp"

namespace snowwave::detail {

namespace {

// ---------------------------------------------------------------------------
// predicates: double fast path, long-double fallback near ties
// ---------------------------------------------------------------------------

int orient_sign(Vec2 a, Vec2 b, Vec2 c) {
    const double detl = (b.x - a.x) * (c.y - a.y);
    const double detr = (b.y - a.y) * (c.x - a.x);
    const double det = detl - detr;
    const double bound = 3.33e-16 * (std::abs(detl) + std::abs(detr));
    if (det > bound) return 1;
    if (det < -bound) return -1;
    const long double dl =
        (static_cast<long double>(b.x) - a.x) * (static_cast<long double>(c.y) - a.y) -
        (static_cast<long double>(b.y) - a.y) * (static_cast<long double>(c.x) - a.x);
    const long double lbound =
        1.1e-18L * (static_cast<long double>(std::abs(detl)) + std::abs(detr));
    if (dl > lbound) return 1;
    if (dl < -lbound) return -1;
    return 0;
}

// > 0 iff d is strictly inside the circumcircle of CCW triangle (a, b, c)
int incircle_sign(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    const long double adx = static_cast<long double>(a.x) - d.x;
    const long double ady = static_cast<long double>(a.y) - d.y;
    const long double bdx = static_cast<long double>(b.x) - d.x;
    const long double bdy = static_cast<long double>(b.y) - d.y;
    const long double cdx = static_cast<long double>(c.x) - d.x;
    const long double cdy = static_cast<long double>(c.y) - d.y;
    const long double alift = adx * adx + ady * ady;
    const long double blift = bdx * bdx + bdy * bdy;
    const long double clift = cdx * cdx + cdy * cdy;
    const long double det = alift * (bdx * cdy - bdy * cdx) +
                            blift * (cdx * ady - cdy * adx) +
                            clift * (adx * bdy - ady * bdx);
    const long double perm = alift * (fabsl(bdx * cdy) + fabsl(bdy * cdx)) +
                             blift * (fabsl(cdx * ady) + fabsl(cdy * adx)) +
                             clift * (fabsl(adx * bdy) + fabsl(ady * bdx));
    const long double bound = 1.2e-18L * perm;
    if (det > bound) return 1;
    if (det < -bound) return -1;
    return 0;
}

std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

// Triangle (v0,v1,v2) CCW; edge i joins v[(i+1)%3], v[(i+2)%3] and lies
// opposite v[i]; adj[i] is the neighbor across edge i (-1 = none).
struct Tri {
    int v[3];
    int adj[3];
    bool alive = true;
    bool inside = false;
};

class Mesher {
public:
    Mesher(const Polygon& poly, double h_target, double min_angle_deg)
        : poly_(poly), h_target_(h_target) {
        quality_bound_ = 1.0 / (2.0 * std::sin(min_angle_deg * M_PI / 180.0));
        scale_ = poly.diameter();
        seg_grid_cell_ = h_target_;
    }

    TriangulationResult run() {
        seed_boundary();
        build_super_triangle();
        for (int i = 3; i < static_cast<int>(pts_.size()); ++i) insert_existing(i);
        recover_all_segments();
        classify_inside();
        refine();
        return extract();
    }

private:
    // ---- seeding -----------------------------------------------------------

    void seed_boundary() {
        const auto& verts = poly_.vertices();
        const std::size_t n = verts.size();
        pts_.resize(3); // super-triangle slots filled later
        on_boundary_.assign(3, false);
        std::vector<int> corner(n);
        for (std::size_t i = 0; i < n; ++i) {
            corner[i] = static_cast<int>(pts_.size());
            pts_.push_back(verts[i]);
            on_boundary_.push_back(true);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 a = verts[i], b = verts[(i + 1) % n];
            const double len = norm(b - a);
            const int pieces = std::max(1, static_cast<int>(std::ceil(len / h_target_ - 1e-12)));
            int prev = corner[i];
            for (int k = 1; k < pieces; ++k) {
                const int id = static_cast<int>(pts_.size());
                pts_.push_back(a + (static_cast<double>(k) / pieces) * (b - a));
                on_boundary_.push_back(true);
                add_segment(prev, id);
                prev = id;
            }
            add_segment(prev, corner[(i + 1) % n]);
        }
    }

    void build_super_triangle() {
        const Vec2 lo = poly_.bbox_lo(), hi = poly_.bbox_hi();
        const Vec2 mid = 0.5 * (lo + hi);
        const double r = 8.0 * std::max({hi.x - lo.x, hi.y - lo.y, 1e-12});
        pts_[0] = {mid.x - 2.0 * r, mid.y - r};
        pts_[1] = {mid.x + 2.0 * r, mid.y - r};
        pts_[2] = {mid.x, mid.y + 2.0 * r};
        vert_tri_.assign(pts_.size(), -1);
        (void)new_tri(0, 1, 2, false);
        last_tri_ = 0;
    }

    // ---- segment store -------------------------------------------------------

    void add_segment(int a, int b) {
        const int id = static_cast<int>(seg_a_.size());
        seg_a_.push_back(a);
        seg_b_.push_back(b);
        seg_alive_.push_back(1);
        constrained_.insert(edge_key(a, b));
        seg_by_key_[edge_key(a, b)] = id;
        register_segment(id);
    }

    void kill_segment(int id) {
        seg_alive_[static_cast<std::size_t>(id)] = 0;
        const auto key = edge_key(seg_a_[static_cast<std::size_t>(id)],
                                  seg_b_[static_cast<std::size_t>(id)]);
        constrained_.erase(key);
        seg_by_key_.erase(key);
    }

    std::int64_t cell_key(double x, double y) const {
        const auto ix = static_cast<std::int64_t>(std::floor(x / seg_grid_cell_));
        const auto iy = static_cast<std::int64_t>(std::floor(y / seg_grid_cell_));
        return ix * 73856093LL ^ iy * 19349663LL;
    }

    void register_segment(int id) {
        const Vec2 a = pts_[static_cast<std::size_t>(seg_a_[static_cast<std::size_t>(id)])];
        const Vec2 b = pts_[static_cast<std::size_t>(seg_b_[static_cast<std::size_t>(id)])];
        const Vec2 c = 0.5 * (a + b);
        const double r = 0.5 * norm(b - a);
        const auto x0 = static_cast<std::int64_t>(std::floor((c.x - r) / seg_grid_cell_));
        const auto x1 = static_cast<std::int64_t>(std::floor((c.x + r) / seg_grid_cell_));
        const auto y0 = static_cast<std::int64_t>(std::floor((c.y - r) / seg_grid_cell_));
        const auto y1 = static_cast<std::int64_t>(std::floor((c.y + r) / seg_grid_cell_));
        for (std::int64_t x = x0; x <= x1; ++x)
            for (std::int64_t y = y0; y <= y1; ++y)
                seg_grid_[x * 73856093LL ^ y * 19349663LL].push_back(id);
    }

    bool in_diametral_disk(int id, Vec2 p) const {
        const Vec2 a = pts_[static_cast<std::size_t>(seg_a_[static_cast<std::size_t>(id)])];
        const Vec2 b = pts_[static_cast<std::size_t>(seg_b_[static_cast<std::size_t>(id)])];
        return dot(a - p, b - p) < 0.0;
    }

    // All live segments whose diametral disk strictly contains p. Complete:
    // a disk containing p is registered in p's cell.
    void find_all_encroached_by(Vec2 p, int exclude_vertex, std::vector<int>& out) const {
        auto it = seg_grid_.find(cell_key(p.x, p.y));
        if (it == seg_grid_.end()) return;
        for (int id : it->second) {
            if (!seg_alive_[static_cast<std::size_t>(id)]) continue;
            if (seg_a_[static_cast<std::size_t>(id)] == exclude_vertex ||
                seg_b_[static_cast<std::size_t>(id)] == exclude_vertex)
                continue;
            if (in_diametral_disk(id, p)) out.push_back(id);
        }
    }

    // ---- triangle store --------------------------------------------------------

    int new_tri(int a, int b, int c, bool inside) {
        int id;
        const Tri t{{a, b, c}, {-1, -1, -1}, true, inside};
        if (!free_.empty()) {
            id = free_.back();
            free_.pop_back();
            tris_[static_cast<std::size_t>(id)] = t;
        } else {
            id = static_cast<int>(tris_.size());
            tris_.push_back(t);
        }
        vert_tri_[static_cast<std::size_t>(a)] = id;
        vert_tri_[static_cast<std::size_t>(b)] = id;
        vert_tri_[static_cast<std::size_t>(c)] = id;
        if (refining_) maybe_queue_bad(id);
        return id;
    }

    void kill_tri(int id) {
        tris_[static_cast<std::size_t>(id)].alive = false;
        free_.push_back(id);
    }

    Tri& tri(int id) { return tris_[static_cast<std::size_t>(id)]; }
    const Tri& tri(int id) const { return tris_[static_cast<std::size_t>(id)]; }
    Vec2 pt(int id) const { return pts_[static_cast<std::size_t>(id)]; }

    // slot in t whose opposite edge is (a, b)
    int slot_of_edge(const Tri& t, int a, int b) const {
        for (int i = 0; i < 3; ++i) {
            const int x = t.v[(i + 1) % 3], y = t.v[(i + 2) % 3];
            if ((x == a && y == b) || (x == b && y == a)) return i;
        }
        throw NumericalError("mesher: edge not in triangle");
    }

    // set t.adj[slot] = n and the reciprocal link in n
    void bind(int t_id, int slot, int n_id) {
        tri(t_id).adj[slot] = n_id;
        if (n_id >= 0) {
            const int a = tri(t_id).v[(slot + 1) % 3];
            const int b = tri(t_id).v[(slot + 2) % 3];
            Tri& n = tri(n_id);
            n.adj[slot_of_edge(n, a, b)] = t_id;
        }
    }

    // ---- point location -----------------------------------------------------------

    int first_alive() const {
        for (std::size_t i = 0; i < tris_.size(); ++i)
            if (tris_[i].alive) return static_cast<int>(i);
        throw NumericalError("mesher: no triangles");
    }

    // Walk to the triangle containing p. on_edge: slot of the edge p lies on
    // exactly, or -1 when strictly interior.
    int locate(Vec2 p, int hint, int& on_edge) {
        int cur = (hint >= 0 && hint < static_cast<int>(tris_.size()) && tri(hint).alive)
                      ? hint
                      : first_alive();
        int prev = -1;
        int steps = 0;
        const int max_steps = static_cast<int>(tris_.size()) * 4 + 64;
        while (true) {
            if (++steps > max_steps)
                throw NumericalError("mesher: point location did not terminate");
            const Tri& t = tri(cur);
            int zero_slot = -1;
            int exit_slot = -1;
            int fallback_slot = -1;
            for (int i = 0; i < 3; ++i) {
                const Vec2 a = pt(t.v[(i + 1) % 3]);
                const Vec2 b = pt(t.v[(i + 2) % 3]);
                const int s = orient_sign(a, b, p);
                if (s < 0) {
                    if (t.adj[i] != prev) {
                        exit_slot = i;
                        break;
                    }
                    fallback_slot = i;
                }
                if (s == 0) zero_slot = i;
            }
            if (exit_slot < 0 && fallback_slot >= 0) exit_slot = fallback_slot;
            if (exit_slot >= 0) {
                const int next = t.adj[exit_slot];
                if (next < 0) throw NumericalError("mesher: walked off the triangulation");
                prev = cur;
                cur = next;
                continue;
            }
            on_edge = zero_slot;
            last_tri_ = cur;
            return cur;
        }
    }

    // ---- insertion + legalization -------------------------------------------------

    struct FlipJob {
        int tri;  // triangle with the new vertex at slot `slot`
        int slot; // edge opposite the new vertex
    };

    void insert_existing(int vid) {
        const Vec2 p = pt(vid);
        int on_edge = -1;
        const int t = locate(p, last_tri_, on_edge);
        std::vector<FlipJob> stack;
        if (on_edge < 0)
            split_interior(t, vid, stack);
        else
            split_on_edge(t, on_edge, vid, stack);
        legalize(stack);
    }

    // old t=(a,b,c): adj[0]=A across (b,c), adj[1]=B across (c,a), adj[2]=C across (a,b)
    void split_interior(int t_id, int vid, std::vector<FlipJob>& stack) {
        const Tri old = tri(t_id);
        const int a = old.v[0], b = old.v[1], c = old.v[2];
        const int A = old.adj[0], B = old.adj[1], C = old.adj[2];
        kill_tri(t_id);
        const int t0 = new_tri(vid, a, b, old.inside);
        const int t1 = new_tri(vid, b, c, old.inside);
        const int t2 = new_tri(vid, c, a, old.inside);
        bind(t0, 0, C);
        bind(t1, 0, A);
        bind(t2, 0, B);
        tri(t0).adj[1] = t1; // edge (b, vid)
        tri(t0).adj[2] = t2; // edge (vid, a)
        tri(t1).adj[1] = t2;
        tri(t1).adj[2] = t0;
        tri(t2).adj[1] = t0;
        tri(t2).adj[2] = t1;
        stack.push_back({t0, 0});
        stack.push_back({t1, 0});
        stack.push_back({t2, 0});
        last_tri_ = t0;
    }

    // p lies on edge `slot` of t, i.e. on (a, b) with apex c = t.v[slot].
    void split_on_edge(int t_id, int slot, int vid, std::vector<FlipJob>& stack) {
        const Tri told = tri(t_id);
        const int c = told.v[slot];
        const int a = told.v[(slot + 1) % 3];
        const int b = told.v[(slot + 2) % 3];
        const int o_id = told.adj[slot];
        const int T_bc = told.adj[(slot + 1) % 3]; // across (b, c)
        const int T_ca = told.adj[(slot + 2) % 3]; // across (c, a)

        if (constrained_.count(edge_key(a, b))) {
            const int parent = seg_by_key_.at(edge_key(a, b));
            kill_segment(parent);
            add_segment(a, vid);
            pending_child_segments_.push_back(static_cast<int>(seg_a_.size()) - 1);
            add_segment(vid, b);
            pending_child_segments_.push_back(static_cast<int>(seg_a_.size()) - 1);
            on_boundary_[static_cast<std::size_t>(vid)] = true;
        }

        kill_tri(t_id);
        const int t0 = new_tri(vid, b, c, told.inside); // edges: (b,c)->T_bc, (c,vid)->t1, (vid,b)->o side
        const int t1 = new_tri(vid, c, a, told.inside); // edges: (c,a)->T_ca, (a,vid)->o side, (vid,c)->t0
        bind(t0, 0, T_bc);
        bind(t1, 0, T_ca);
        tri(t0).adj[1] = t1;
        tri(t1).adj[2] = t0;
        stack.push_back({t0, 0});
        stack.push_back({t1, 0});

        if (o_id >= 0) {
            const Tri oold = tri(o_id);
            const int oslot = slot_of_edge(oold, a, b); // o's shared edge runs (b, a)
            const int d = oold.v[oslot];
            const int O_ad = oold.adj[(oslot + 1) % 3]; // across (a, d)
            const int O_db = oold.adj[(oslot + 2) % 3]; // across (d, b)
            kill_tri(o_id);
            const int o0 = new_tri(vid, a, d, oold.inside);
            const int o1 = new_tri(vid, d, b, oold.inside);
            bind(o0, 0, O_ad);
            bind(o1, 0, O_db);
            tri(o0).adj[1] = o1; // edge (d, vid)
            tri(o1).adj[2] = o0;
            tri(o0).adj[2] = t1; // edge (vid, a)
            tri(t1).adj[1] = o0;
            tri(o1).adj[1] = t0; // edge (b, vid)
            tri(t0).adj[2] = o1;
            stack.push_back({o0, 0});
            stack.push_back({o1, 0});
        } else {
            tri(t0).adj[2] = -1;
            tri(t1).adj[1] = -1;
        }
        last_tri_ = t0;
    }

    // Lawson flips. Each job: triangle whose v[slot] is the inserted vertex p,
    // testing the edge opposite p.
    void legalize(std::vector<FlipJob>& stack) {
        while (!stack.empty()) {
            const FlipJob job = stack.back();
            stack.pop_back();
            if (!tri(job.tri).alive) continue;
            const Tri& t = tri(job.tri);
            const int p = t.v[job.slot];
            const int a = t.v[(job.slot + 1) % 3];
            const int b = t.v[(job.slot + 2) % 3];
            const int o_id = t.adj[job.slot];
            if (o_id < 0) continue;
            if (constrained_.count(edge_key(a, b))) continue;
            const Tri& o = tri(o_id);
            const int oslot = slot_of_edge(o, a, b);
            const int d = o.v[oslot];
            if (incircle_sign(pt(p), pt(a), pt(b), pt(d)) <= 0) continue;
            // flip diagonal (a,b) -> (p,d): neighbors of the quad p-a-d-b
            const int T_bp = t.adj[(job.slot + 1) % 3];
            const int T_pa = t.adj[(job.slot + 2) % 3];
            const int O_ad = o.adj[(oslot + 1) % 3];
            const int O_db = o.adj[(oslot + 2) % 3];
            const bool inside = t.inside;
            kill_tri(job.tri);
            kill_tri(o_id);
            const int n1 = new_tri(p, a, d, inside);
            const int n2 = new_tri(p, d, b, inside);
            bind(n1, 0, O_ad);
            bind(n1, 2, T_pa);
            bind(n2, 0, O_db);
            bind(n2, 1, T_bp);
            tri(n1).adj[1] = n2; // edge (d, p)
            tri(n2).adj[2] = n1;
            stack.push_back({n1, 0});
            stack.push_back({n2, 0});
            last_tri_ = n1;
        }
    }

    // ---- star traversal ----------------------------------------------------------

    // Alive triangle having directed or undirected edge (a, b); -1 if absent.
    int find_tri_with_edge(int a, int b) const {
        int cur = vert_tri_[static_cast<std::size_t>(a)];
        if (cur < 0 || !tri(cur).alive) return scan_for_edge(a, b);
        const int start = cur;
        int guard = 0;
        while (true) {
            if (++guard > 100000) return scan_for_edge(a, b);
            const Tri& t = tri(cur);
            int s = -1;
            for (int i = 0; i < 3; ++i)
                if (t.v[i] == a) s = i;
            if (s < 0) return scan_for_edge(a, b);
            if (t.v[(s + 1) % 3] == b || t.v[(s + 2) % 3] == b) return cur;
            // rotate around a: cross the edge (a, v[(s+1)%3]) = edge slot (s+2)
            const int next = t.adj[(s + 2) % 3];
            if (next < 0 || next == start) return scan_for_edge(a, b);
            cur = next;
            if (cur == start) return -1;
        }
    }

    int scan_for_edge(int a, int b) const {
        for (std::size_t i = 0; i < tris_.size(); ++i) {
            if (!tris_[i].alive) continue;
            for (int s = 0; s < 3; ++s)
                if ((tris_[i].v[(s + 1) % 3] == a && tris_[i].v[(s + 2) % 3] == b) ||
                    (tris_[i].v[(s + 1) % 3] == b && tris_[i].v[(s + 2) % 3] == a))
                    return static_cast<int>(i);
        }
        return -1;
    }

    // ---- segment recovery -----------------------------------------------------------

    void recover_all_segments() {
        for (std::size_t s = 0; s < seg_a_.size(); ++s) {
            if (!seg_alive_[s]) continue;
            if (find_tri_with_edge(seg_a_[s], seg_b_[s]) >= 0) continue;
            recover_segment(seg_a_[s], seg_b_[s]);
        }
    }

    // Flip edges crossing (va, vb) until the segment appears. No input vertex
    // lies on the open segment, so Sloan's procedure terminates.
    void recover_segment(int va, int vb) {
        const Vec2 pa = pt(va), pb = pt(vb);
        int guard = 0;
        while (find_tri_with_edge(va, vb) < 0) {
            if (++guard > 200000) throw NumericalError("mesher: segment recovery stalled");
            bool flipped = false;
            for (std::size_t i = 0; i < tris_.size() && !flipped; ++i) {
                const Tri& t = tris_[i];
                if (!t.alive) continue;
                for (int s = 0; s < 3; ++s) {
                    const int x = t.v[(s + 1) % 3], y = t.v[(s + 2) % 3];
                    if (x == va || y == va || x == vb || y == vb) continue;
                    const Vec2 px = pt(x), py = pt(y);
                    if (orient_sign(pa, pb, px) * orient_sign(pa, pb, py) < 0 &&
                        orient_sign(px, py, pa) * orient_sign(px, py, pb) < 0) {
                        if (try_flip(static_cast<int>(i), s)) {
                            flipped = true;
                            break;
                        }
                    }
                }
            }
            if (!flipped) throw NumericalError("mesher: segment recovery blocked");
        }
    }

    // Flip the edge opposite tri(t).v[slot] if the surrounding quad is
    // strictly convex and the edge is not constrained.
    bool try_flip(int t_id, int slot) {
        const Tri& t = tri(t_id);
        const int o_id = t.adj[slot];
        if (o_id < 0) return false;
        const int p = t.v[slot];
        const int a = t.v[(slot + 1) % 3];
        const int b = t.v[(slot + 2) % 3];
        if (constrained_.count(edge_key(a, b))) return false;
        const Tri& o = tri(o_id);
        const int oslot = slot_of_edge(o, a, b);
        const int d = o.v[oslot];
        // quad p-a-d-b around new diagonal (p, d): strict convexity
        if (orient_sign(pt(p), pt(d), pt(a)) >= 0) return false;
        if (orient_sign(pt(p), pt(d), pt(b)) <= 0) return false;
        const int T_bp = t.adj[(slot + 1) % 3];
        const int T_pa = t.adj[(slot + 2) % 3];
        const int O_ad = o.adj[(oslot + 1) % 3];
        const int O_db = o.adj[(oslot + 2) % 3];
        const bool inside = t.inside;
        kill_tri(t_id);
        kill_tri(o_id);
        const int n1 = new_tri(p, a, d, inside);
        const int n2 = new_tri(p, d, b, inside);
        bind(n1, 0, O_ad);
        bind(n1, 2, T_pa);
        bind(n2, 0, O_db);
        bind(n2, 1, T_bp);
        tri(n1).adj[1] = n2;
        tri(n2).adj[2] = n1;
        last_tri_ = n1;
        return true;
    }

    // ---- inside/outside ---------------------------------------------------------------

    void classify_inside() {
        std::vector<char> outside(tris_.size(), 0);
        std::deque<int> queue;
        for (std::size_t i = 0; i < tris_.size(); ++i) {
            if (!tris_[i].alive) continue;
            for (int s = 0; s < 3; ++s) {
                if (tris_[i].v[s] < 3) {
                    outside[i] = 1;
                    queue.push_back(static_cast<int>(i));
                    break;
                }
            }
        }
        while (!queue.empty()) {
            const int t_id = queue.front();
            queue.pop_front();
            const Tri& t = tri(t_id);
            for (int s = 0; s < 3; ++s) {
                const int o = t.adj[s];
                if (o < 0 || outside[static_cast<std::size_t>(o)] || !tri(o).alive) continue;
                if (constrained_.count(edge_key(t.v[(s + 1) % 3], t.v[(s + 2) % 3]))) continue;
                outside[static_cast<std::size_t>(o)] = 1;
                queue.push_back(o);
            }
        }
        for (std::size_t i = 0; i < tris_.size(); ++i)
            if (tris_[i].alive) tris_[i].inside = !outside[i];
    }

    // ---- refinement ----------------------------------------------------------------------

    bool is_bad(const Tri& t) const {
        if (!t.inside) return false;
        const Vec2 a = pt(t.v[0]), b = pt(t.v[1]), c = pt(t.v[2]);
        const double la = norm(c - b), lb = norm(a - c), lc = norm(b - a);
        const double lmax = std::max({la, lb, lc});
        if (lmax > h_target_ * (1.0 + 1e-12)) return true;
        const double area2 = cross(b - a, c - a);
        if (!(area2 > 0.0)) return true;
        const double lmin = std::min({la, lb, lc});
        const double circumradius = la * lb * lc / (2.0 * area2);
        return circumradius > quality_bound_ * lmin * (1.0 + 1e-12);
    }

    void maybe_queue_bad(int t_id) {
        if (tri(t_id).alive && is_bad(tri(t_id))) bad_queue_.push_back(t_id);
    }

    Vec2 circumcenter(const Tri& t) const {
        const Vec2 a = pt(t.v[0]), b = pt(t.v[1]), c = pt(t.v[2]);
        const Vec2 ab = b - a, ac = c - a;
        const double d = 2.0 * cross(ab, ac);
        const double ab2 = dot(ab, ab), ac2 = dot(ac, ac);
        return {a.x + (ac.y * ab2 - ab.y * ac2) / d, a.y + (ab.x * ac2 - ac.x * ab2) / d};
    }

    Vec2 centroid(const Tri& t) const {
        const Vec2 a = pt(t.v[0]), b = pt(t.v[1]), c = pt(t.v[2]);
        return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
    }

    // Can `target` be reached from t_start without crossing a constrained
    // edge? If not, reports the first blocking segment.
    bool visible(int t_start, Vec2 target, int& seg_id_out) {
        seg_id_out = -1;
        int cur = t_start;
        int prev = -1;
        const Vec2 from = centroid(tri(t_start));
        int guard = 0;
        while (true) {
            if (++guard > static_cast<int>(tris_.size()) + 64) return false;
            const Tri& t = tri(cur);
            bool in = true;
            for (int s = 0; s < 3 && in; ++s)
                if (orient_sign(pt(t.v[(s + 1) % 3]), pt(t.v[(s + 2) % 3]), target) < 0) in = false;
            if (in) return true;
            int exit_slot = -1;
            for (int s = 0; s < 3; ++s) {
                if (t.adj[s] == prev && prev >= 0) continue;
                const int x = t.v[(s + 1) % 3], y = t.v[(s + 2) % 3];
                const Vec2 px = pt(x), py = pt(y);
                if (orient_sign(from, target, px) * orient_sign(from, target, py) <= 0 &&
                    orient_sign(px, py, from) * orient_sign(px, py, target) < 0) {
                    if (constrained_.count(edge_key(x, y))) {
                        auto it = seg_by_key_.find(edge_key(x, y));
                        seg_id_out = it == seg_by_key_.end() ? -1 : it->second;
                        return false;
                    }
                    exit_slot = s;
                    break;
                }
            }
            if (exit_slot < 0) return true; // grazing pass; accept
            prev = cur;
            cur = t.adj[exit_slot];
            if (cur < 0) return false;
        }
    }

    // apex-based encroachment test for a (child) segment
    void check_segment_by_apexes(int id) {
        if (!seg_alive_[static_cast<std::size_t>(id)]) return;
        const int a = seg_a_[static_cast<std::size_t>(id)];
        const int b = seg_b_[static_cast<std::size_t>(id)];
        const int t_id = find_tri_with_edge(a, b);
        if (t_id < 0) return;
        const Tri& t = tri(t_id);
        const int slot = slot_of_edge(t, a, b);
        const int apex = t.v[slot];
        bool encroached = apex >= 3 && in_diametral_disk(id, pt(apex));
        const int o_id = t.adj[slot];
        if (!encroached && o_id >= 0) {
            const Tri& o = tri(o_id);
            const int apex2 = o.v[slot_of_edge(o, a, b)];
            encroached = apex2 >= 3 && in_diametral_disk(id, pt(apex2));
        }
        if (encroached) encroached_queue_.push_back(id);
    }

    void after_insert_checks(int vid) {
        std::vector<int> hits;
        find_all_encroached_by(pt(vid), vid, hits);
        for (int id : hits) encroached_queue_.push_back(id);
        for (int id : pending_child_segments_) check_segment_by_apexes(id);
        pending_child_segments_.clear();
    }

    void split_segment(int id) {
        if (!seg_alive_[static_cast<std::size_t>(id)]) return;
        const int a = seg_a_[static_cast<std::size_t>(id)];
        const int b = seg_b_[static_cast<std::size_t>(id)];
        const Vec2 pa = pt(a), pb = pt(b);
        if (norm(pb - pa) < 1e-9 * scale_)
            throw NumericalError("mesher: segment split below resolution");
        const Vec2 mid = 0.5 * (pa + pb);
        const int vid = add_point(mid, true);
        const int t_id = find_tri_with_edge(a, b);
        if (t_id < 0) throw NumericalError("mesher: lost constrained edge");
        const int slot = slot_of_edge(tri(t_id), a, b);
        std::vector<FlipJob> stack;
        split_on_edge(t_id, slot, vid, stack);
        legalize(stack);
        after_insert_checks(vid);
    }

    int add_point(Vec2 p, bool boundary) {
        const int vid = static_cast<int>(pts_.size());
        pts_.push_back(p);
        on_boundary_.push_back(boundary);
        vert_tri_.push_back(-1);
        return vid;
    }

    void refine() {
        refining_ = true;
        for (std::size_t i = 3; i < pts_.size(); ++i) {
            std::vector<int> hits;
            find_all_encroached_by(pts_[i], static_cast<int>(i), hits);
            for (int id : hits) encroached_queue_.push_back(id);
        }
        for (std::size_t i = 0; i < tris_.size(); ++i)
            if (tris_[i].alive) maybe_queue_bad(static_cast<int>(i));

        const std::size_t max_points = 4u << 20;
        long guard = 0;
        while (!encroached_queue_.empty() || !bad_queue_.empty()) {
            if (pts_.size() > max_points)
                throw NumericalError("mesher: refinement exceeded the point budget");
            if (++guard > 100'000'000L) throw NumericalError("mesher: refinement stalled");

            if (!encroached_queue_.empty()) {
                const int id = encroached_queue_.front();
                encroached_queue_.pop_front();
                if (seg_alive_[static_cast<std::size_t>(id)]) split_segment(id);
                continue;
            }

            const int t_id = bad_queue_.front();
            bad_queue_.pop_front();
            if (!tri(t_id).alive || !tri(t_id).inside || !is_bad(tri(t_id))) continue;
            const Vec2 cc = circumcenter(tri(t_id));
            if (!std::isfinite(cc.x) || !std::isfinite(cc.y))
                throw NumericalError("mesher: degenerate circumcenter");

            int blocking = -1;
            if (!visible(t_id, cc, blocking)) {
                if (blocking >= 0) {
                    encroached_queue_.push_back(blocking);
                    bad_queue_.push_back(t_id);
                } else {
                    split_longest_edge_fallback(t_id);
                }
                continue;
            }
            std::vector<int> hits;
            find_all_encroached_by(cc, -1, hits);
            if (!hits.empty()) {
                for (int id : hits) encroached_queue_.push_back(id);
                bad_queue_.push_back(t_id);
                continue;
            }

            int on_edge = -1;
            const int tc = locate(cc, t_id, on_edge);
            // refuse to duplicate an existing vertex (symmetric inputs)
            bool duplicate = false;
            for (int s = 0; s < 3; ++s)
                if (norm(pt(tri(tc).v[s]) - cc) < 1e-12 * scale_) duplicate = true;
            if (duplicate) {
                split_longest_edge_fallback(t_id);
                continue;
            }
            const int vid = add_point(cc, false);
            std::vector<FlipJob> stack;
            if (on_edge >= 0)
                split_on_edge(tc, on_edge, vid, stack);
            else
                split_interior(tc, vid, stack);
            legalize(stack);
            after_insert_checks(vid);
        }
        refining_ = false;
    }

    // Deterministic fallback when the circumcenter is unusable: split the
    // longest edge of the triangle at its midpoint.
    void split_longest_edge_fallback(int t_id) {
        const Tri t = tri(t_id);
        int slot = 0;
        double best = -1.0;
        for (int s = 0; s < 3; ++s) {
            const double len = norm(pt(t.v[(s + 2) % 3]) - pt(t.v[(s + 1) % 3]));
            if (len > best) {
                best = len;
                slot = s;
            }
        }
        const int a = t.v[(slot + 1) % 3], b = t.v[(slot + 2) % 3];
        if (constrained_.count(edge_key(a, b))) {
            auto it = seg_by_key_.find(edge_key(a, b));
            if (it != seg_by_key_.end()) encroached_queue_.push_back(it->second);
            return;
        }
        const Vec2 mid = 0.5 * (pt(a) + pt(b));
        if (best < 1e-9 * scale_) throw NumericalError("mesher: refinement below resolution");
        const int vid = add_point(mid, false);
        std::vector<FlipJob> stack;
        split_on_edge(t_id, slot, vid, stack);
        legalize(stack);
        after_insert_checks(vid);
    }

    // ---- output ---------------------------------------------------------------------------

    TriangulationResult extract() {
        TriangulationResult out;
        std::vector<int> remap(pts_.size(), -1);
        for (const Tri& t : tris_) {
            if (!t.alive || !t.inside) continue;
            std::array<int, 3> mapped{};
            for (int s = 0; s < 3; ++s) {
                const int v = t.v[s];
                int& m = remap[static_cast<std::size_t>(v)];
                if (m < 0) {
                    m = static_cast<int>(out.points.size());
                    out.points.push_back(pt(v));
                    out.on_boundary.push_back(on_boundary_[static_cast<std::size_t>(v)] ? 1 : 0);
                }
                mapped[static_cast<std::size_t>(s)] = m;
            }
            out.triangles.push_back(mapped);
        }
        if (out.triangles.empty()) throw NumericalError("mesher: produced no triangles");
        return out;
    }

    const Polygon& poly_;
    double h_target_;
    double quality_bound_;
    double scale_;
    double seg_grid_cell_;

    std::vector<Vec2> pts_;
    std::vector<bool> on_boundary_;
    std::vector<Tri> tris_;
    std::vector<int> free_;
    std::vector<int> vert_tri_;
    std::unordered_set<std::uint64_t> constrained_;
    std::unordered_map<std::uint64_t, int> seg_by_key_;
    std::vector<int> seg_a_, seg_b_;
    std::vector<char> seg_alive_;
    std::unordered_map<std::int64_t, std::vector<int>> seg_grid_;
    std::deque<int> encroached_queue_;
    std::deque<int> bad_queue_;
    std::vector<int> pending_child_segments_;
    int last_tri_ = 0;
    bool refining_ = false;
};

} // namespace

TriangulationResult triangulate_polygon(const Polygon& poly, double h_target,
                                        double min_angle_deg) {
    Mesher mesher(poly, h_target, min_angle_deg);
    return mesher.run();
}

} // namespace snowwave::detail
