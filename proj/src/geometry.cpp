#include "graspforge/geometry.hpp"

#include <algorithm>
#include <limits>

namespace gf {

double reduce_angle_180(double deg) {
    double r = std::fmod(deg, 180.0);
    if (r < 0.0) r += 180.0;
    if (r >= 180.0) r = 0.0;
    return r;
}

double angle_diff_180(double a_deg, double b_deg) {
    double d = std::fabs(reduce_angle_180(a_deg) - reduce_angle_180(b_deg));
    return std::min(d, 180.0 - d);
}

double Polygon::signed_area() const {
    double s = 0.0;
    const std::size_t n = v.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        s += cross(v[j], v[i]);
    }
    return 0.5 * s;
}

Vec2 Polygon::centroid() const {
    // area-weighted centroid
    double a = 0.0, cx = 0.0, cy = 0.0;
    const std::size_t n = v.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const double w = cross(v[j], v[i]);
        a += w;
        cx += (v[j].x + v[i].x) * w;
        cy += (v[j].y + v[i].y) * w;
    }
    if (std::fabs(a) < 1e-300) return v.empty() ? Vec2{} : v[0];
    return {cx / (3.0 * a), cy / (3.0 * a)};
}

Aabb Polygon::aabb() const {
    Aabb b{{std::numeric_limits<double>::max(), std::numeric_limits<double>::max()},
           {std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()}};
    for (const Vec2& p : v) {
        b.lo.x = std::min(b.lo.x, p.x);
        b.lo.y = std::min(b.lo.y, p.y);
        b.hi.x = std::max(b.hi.x, p.x);
        b.hi.y = std::max(b.hi.y, p.y);
    }
    return b;
}

bool Polygon::contains(Vec2 p) const {
    // pnpoly crossing test with half-open edges
    bool in = false;
    const std::size_t n = v.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        if ((v[i].y > p.y) != (v[j].y > p.y)) {
            const double xint =
                v[j].x + (p.y - v[j].y) * (v[i].x - v[j].x) / (v[i].y - v[j].y);
            if (p.x < xint) in = !in;
        }
    }
    return in;
}

Polygon Polygon::transformed(double rot_deg, Vec2 translation) const {
    const double r = deg2rad(rot_deg);
    const double c = std::cos(r), s = std::sin(r);
    Polygon out;
    out.v.reserve(v.size());
    for (const Vec2& p : v) {
        out.v.push_back({c * p.x - s * p.y + translation.x,
                         s * p.x + c * p.y + translation.y});
    }
    return out;
}

void Polygon::ensure_ccw() {
    if (signed_area() < 0.0) std::reverse(v.begin(), v.end());
}

namespace {

double orient(Vec2 a, Vec2 b, Vec2 c) { return cross(b - a, c - a); }

bool on_segment(Vec2 p, Vec2 q, Vec2 r) {
    return q.x <= std::max(p.x, r.x) && q.x >= std::min(p.x, r.x) &&
           q.y <= std::max(p.y, r.y) && q.y >= std::min(p.y, r.y);
}

// intersection allowing endpoint touches; used only for simplicity checks
bool segments_intersect(Vec2 p1, Vec2 q1, Vec2 p2, Vec2 q2) {
    const double o1 = orient(p1, q1, p2);
    const double o2 = orient(p1, q1, q2);
    const double o3 = orient(p2, q2, p1);
    const double o4 = orient(p2, q2, q1);
    if (((o1 > 0) != (o2 > 0)) && o1 != 0 && o2 != 0 &&
        ((o3 > 0) != (o4 > 0)) && o3 != 0 && o4 != 0)
        return true;
    if (o1 == 0 && on_segment(p1, p2, q1)) return true;
    if (o2 == 0 && on_segment(p1, q2, q1)) return true;
    if (o3 == 0 && on_segment(p2, p1, q2)) return true;
    if (o4 == 0 && on_segment(p2, q1, q2)) return true;
    return false;
}

}  // namespace

bool segments_properly_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    const double o1 = orient(a, b, c);
    const double o2 = orient(a, b, d);
    const double o3 = orient(c, d, a);
    const double o4 = orient(c, d, b);
    return ((o1 > 0) != (o2 > 0)) && o1 != 0 && o2 != 0 &&
           ((o3 > 0) != (o4 > 0)) && o3 != 0 && o4 != 0;
}

bool Polygon::is_simple() const {
    const std::size_t n = v.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = v[i], b = v[(i + 1) % n];
        if (a.x == b.x && a.y == b.y) return false;  // degenerate edge
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
            if (adjacent) continue;
            if (segments_intersect(a, b, v[j], v[(j + 1) % n])) return false;
        }
    }
    return true;
}

bool interiors_overlap(const Polygon& p, const Polygon& q) {
    const Aabb pb = p.aabb(), qb = q.aabb();
    if (pb.hi.x < qb.lo.x || qb.hi.x < pb.lo.x ||
        pb.hi.y < qb.lo.y || qb.hi.y < pb.lo.y)
        return false;
    const std::size_t np = p.size(), nq = q.size();
    for (std::size_t i = 0; i < np; ++i) {
        const Vec2 a = p.v[i], b = p.v[(i + 1) % np];
        for (std::size_t j = 0; j < nq; ++j) {
            if (segments_properly_cross(a, b, q.v[j], q.v[(j + 1) % nq])) return true;
        }
    }
    if (q.contains(p.v[0])) return true;
    if (p.contains(q.v[0])) return true;
    return false;
}

std::vector<BoundaryHit> line_polygon_hits(Vec2 origin, Vec2 dir, const Polygon& poly) {
    std::vector<BoundaryHit> hits;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 e0 = poly.v[i];
        const Vec2 e1 = poly.v[(i + 1) % n];
        const Vec2 g = e1 - e0;
        const double denom = cross(dir, g);
        if (std::fabs(denom) < 1e-14) continue;  // parallel edge
        const Vec2 w = e0 - origin;
        const double t = cross(w, g) / denom;
        const double u = cross(w, dir) / denom;
        if (u >= 0.0 && u < 1.0) {
            hits.push_back({t, static_cast<int>(i), u});
        }
    }
    return hits;
}

Vec2 boundary_normal(const Polygon& poly, int edge, double u, double vertex_snap) {
    const std::size_t n = poly.size();
    const Vec2 a = poly.v[edge];
    const Vec2 b = poly.v[(edge + 1) % n];
    const double len = norm(b - a);
    auto edge_normal = [&](int e) {
        const Vec2 p = poly.v[e];
        const Vec2 q = poly.v[(e + 1) % n];
        // CCW polygon: interior is to the left, outward normal to the right
        return normalized(Vec2{(q - p).y, -(q - p).x});
    };
    const double d0 = u * len;        // distance to edge start
    const double d1 = (1.0 - u) * len;
    if (d0 <= vertex_snap) {
        const int prev = (edge + static_cast<int>(n) - 1) % static_cast<int>(n);
        const Vec2 bis = edge_normal(prev) + edge_normal(edge);
        if (norm(bis) > 1e-12) return normalized(bis);
        return edge_normal(edge);
    }
    if (d1 <= vertex_snap) {
        const int next = (edge + 1) % static_cast<int>(n);
        const Vec2 bis = edge_normal(edge) + edge_normal(next);
        if (norm(bis) > 1e-12) return normalized(bis);
        return edge_normal(edge);
    }
    return edge_normal(edge);
}

EigenSym2 eigen_sym2(double a, double b, double c) {
    EigenSym2 e;
    const double tr = a + c;
    const double disc = std::sqrt(std::max(0.0, (a - c) * (a - c) + 4.0 * b * b));
    e.l1 = 0.5 * (tr + disc);
    e.l2 = 0.5 * (tr - disc);
    if (std::fabs(b) > 1e-300) {
        e.v1 = normalized(Vec2{b, e.l1 - a});
    } else {
        e.v1 = (a >= c) ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
    }
    e.v2 = perp(e.v1);
    return e;
}

}  // namespace gf
