#include <doctest.h>

#include <cmath>

#include "graspforge/geometry.hpp"
#include "graspforge/rng.hpp"
#include "oracles.hpp"

using namespace gf;

namespace {

Polygon square(double side, Vec2 center = {}) {
    const double h = side / 2;
    return Polygon{{{center.x - h, center.y - h},
                    {center.x + h, center.y - h},
                    {center.x + h, center.y + h},
                    {center.x - h, center.y + h}}};
}

}  // namespace

TEST_CASE("angle reduction") {
    CHECK(reduce_angle_180(0.0) == 0.0);
    CHECK(reduce_angle_180(180.0) == 0.0);
    CHECK(reduce_angle_180(190.0) == doctest::Approx(10.0));
    CHECK(reduce_angle_180(-10.0) == doctest::Approx(170.0));
    CHECK(angle_diff_180(5.0, 175.0) == doctest::Approx(10.0));
    CHECK(angle_diff_180(90.0, 90.0) == 0.0);
}

TEST_CASE("polygon area, centroid, containment") {
    const Polygon sq = square(10.0, {5, 5});
    CHECK(sq.area() == doctest::Approx(100.0));
    CHECK(sq.centroid().x == doctest::Approx(5.0));
    CHECK(sq.centroid().y == doctest::Approx(5.0));
    CHECK(sq.contains({5, 5}));
    CHECK(!sq.contains({50, 50}));
    CHECK(sq.is_simple());

    // bow-tie is not simple
    const Polygon bow{{{0, 0}, {10, 10}, {10, 0}, {0, 10}}};
    CHECK(!bow.is_simple());
}

TEST_CASE("containment agrees with the winding-number oracle") {
    Rng rng(42);
    // random simple star-ish polygons
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Vec2> v;
        const int n = 5 + rng.uniform_int(6);
        for (int i = 0; i < n; ++i) {
            const double a = 2.0 * kPi * i / n;
            const double r = 5.0 + 10.0 * rng.uniform();
            v.push_back({r * std::cos(a), r * std::sin(a)});
        }
        const Polygon poly(v);
        for (int probe = 0; probe < 200; ++probe) {
            const Vec2 p{rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0)};
            CHECK(poly.contains(p) == gf::testing::winding_inside(poly, p));
        }
    }
}

TEST_CASE("interiors_overlap") {
    const Polygon a = square(10, {0, 0});
    CHECK(interiors_overlap(a, square(10, {5, 5})));
    CHECK(!interiors_overlap(a, square(10, {20, 0})));
    // containment without edge crossings
    CHECK(interiors_overlap(a, square(2, {0, 0})));
    // grid-sampled area oracle agrees on the disjoint case
    CHECK(gf::testing::grid_intersection_area(a, square(10, {20, 0}), 0.25) == 0.0);
    CHECK(gf::testing::grid_intersection_area(a, square(10, {5, 5}), 0.25) ==
          doctest::Approx(25.0).epsilon(0.05));
}

TEST_CASE("line-polygon hits") {
    const Polygon sq = square(10, {0, 0});
    const auto hits = line_polygon_hits({0, 0}, {1, 0}, sq);
    REQUIRE(hits.size() == 2);
    double lo = hits[0].t, hi = hits[1].t;
    if (lo > hi) std::swap(lo, hi);
    CHECK(lo == doctest::Approx(-5.0));
    CHECK(hi == doctest::Approx(5.0));
}

TEST_CASE("boundary normals point outward, vertex uses bisector") {
    Polygon sq = square(10, {0, 0});
    sq.ensure_ccw();
    // hit the right edge at its middle
    const auto hits = line_polygon_hits({0, 0}, {1, 0}, sq);
    for (const auto& h : hits) {
        if (h.t > 0) {
            const Vec2 n = boundary_normal(sq, h.edge, h.u, 1e-6);
            CHECK(n.x == doctest::Approx(1.0));
            CHECK(n.y == doctest::Approx(0.0).epsilon(1e-9));
        }
    }
    // exact corner: bisector at 45 degrees
    int corner_edge = -1;
    for (std::size_t i = 0; i < sq.size(); ++i) {
        if (sq.v[i].x == 5.0 && sq.v[i].y == -5.0) corner_edge = static_cast<int>(i);
    }
    REQUIRE(corner_edge >= 0);
    const Vec2 nb = boundary_normal(sq, corner_edge, 0.0, 1e-6);
    CHECK(std::fabs(nb.x) == doctest::Approx(std::sqrt(0.5)));
    CHECK(std::fabs(nb.y) == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("eigen_sym2 solves random symmetric matrices") {
    Rng rng(7);
    for (int i = 0; i < 500; ++i) {
        const double a = rng.uniform(-10, 10);
        const double b = rng.uniform(-10, 10);
        const double c = rng.uniform(-10, 10);
        const EigenSym2 e = eigen_sym2(a, b, c);
        CHECK(e.l1 >= e.l2);
        // A v = lambda v for both pairs
        auto check_pair = [&](Vec2 v, double l) {
            const Vec2 av{a * v.x + b * v.y, b * v.x + c * v.y};
            CHECK(std::fabs(av.x - l * v.x) < 1e-10 * std::max(1.0, std::fabs(l)));
            CHECK(std::fabs(av.y - l * v.y) < 1e-10 * std::max(1.0, std::fabs(l)));
        };
        check_pair(e.v1, e.l1);
        check_pair(e.v2, e.l2);
        CHECK(norm(e.v1) == doctest::Approx(1.0));
        CHECK(std::fabs(dot(e.v1, e.v2)) < 1e-12);
    }
}

TEST_CASE("isotropic covariance tie-breaks to angle zero") {
    const EigenSym2 e = eigen_sym2(4.0, 0.0, 4.0);
    CHECK(e.v1.x == 1.0);
    CHECK(e.v1.y == 0.0);
}
