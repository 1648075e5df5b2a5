#pragma once

#include <cmath>
#include <vector>

namespace gf {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(a.x * a.x + a.y * a.y); }
inline Vec2 normalized(Vec2 a) {
    const double n = norm(a);
    return n > 0.0 ? Vec2{a.x / n, a.y / n} : Vec2{0.0, 0.0};
}
inline Vec2 perp(Vec2 a) { return {-a.y, a.x}; }

inline double deg2rad(double d) { return d * (3.141592653589793238462643383279502884 / 180.0); }
inline double rad2deg(double r) { return r * (180.0 / 3.141592653589793238462643383279502884); }

// reduce an angle to [0, 180)
double reduce_angle_180(double deg);

// absolute angular distance between two closing-axis angles, folded to [0, 90]
double angle_diff_180(double a_deg, double b_deg);

struct Aabb {
    Vec2 lo{}, hi{};
    bool contains(Vec2 p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
    }
};

// Simple planar polygon. Vertices are stored CCW (positive signed area) once
// normalized; scene code normalizes at shape construction.
struct Polygon {
    std::vector<Vec2> v;

    Polygon() = default;
    explicit Polygon(std::vector<Vec2> verts) : v(std::move(verts)) {}

    std::size_t size() const { return v.size(); }
    double signed_area() const;
    double area() const { return std::abs(signed_area()); }
    Vec2 centroid() const;
    Aabb aabb() const;
    bool is_simple() const;
    // strict interior test (crossing number); boundary points unspecified
    bool contains(Vec2 p) const;
    // rotate CCW by rot_deg about the local origin, then translate
    Polygon transformed(double rot_deg, Vec2 translation) const;
    void ensure_ccw();
};

// strict segment crossing (shared endpoints / touching do not count)
bool segments_properly_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d);

// do the polygon interiors share positive area (touching boundaries allowed)
bool interiors_overlap(const Polygon& p, const Polygon& q);

// Crossing of the unbounded line origin+t*dir with a polygon boundary.
struct BoundaryHit {
    double t;    // line parameter
    int edge;    // edge index (v[edge] -> v[edge+1 mod n])
    double u;    // position along that edge in [0,1)
};

// all boundary crossings, unsorted; edges hit in [0,1) to count shared
// vertices once
std::vector<BoundaryHit> line_polygon_hits(Vec2 origin, Vec2 dir, const Polygon& poly);

// outward normal at a boundary point of a CCW polygon; points within
// vertex_snap (same units as coordinates) of an endpoint use the
// angular-bisector normal of the two adjacent edges
Vec2 boundary_normal(const Polygon& poly, int edge, double u, double vertex_snap);

// Eigen-decomposition of a symmetric 2x2 matrix [[a, b], [b, c]].
struct EigenSym2 {
    double l1 = 0.0, l2 = 0.0;  // l1 >= l2
    Vec2 v1{}, v2{};            // unit eigenvectors for l1, l2
};
EigenSym2 eigen_sym2(double a, double b, double c);

}  // namespace gf
