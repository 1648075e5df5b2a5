#include "graspforge/shapes.hpp"

#include <cmath>
#include <stdexcept>

namespace gf {

namespace {

std::vector<Vec2> centered(std::vector<Vec2> v) {
    Polygon p(v);
    const Vec2 c = p.centroid();
    for (Vec2& q : v) q = q - c;
    return v;
}

}  // namespace

ObjectShape shape_rect(const std::string& name, double w, double h, double shade) {
    return make_shape(name,
                      {{-w / 2, -h / 2}, {w / 2, -h / 2}, {w / 2, h / 2}, {-w / 2, h / 2}},
                      15.0, shade);
}

ObjectShape shape_ngon(const std::string& name, int n, double diameter, double shade) {
    if (n < 3) throw std::invalid_argument("shape_ngon: n < 3");
    std::vector<Vec2> v;
    v.reserve(n);
    const double r = diameter / 2.0;
    for (int i = 0; i < n; ++i) {
        const double a = 2.0 * kPi * i / n;
        v.push_back({r * std::cos(a), r * std::sin(a)});
    }
    return make_shape(name, std::move(v), 15.0, shade);
}

ObjectShape shape_lshape(const std::string& name, double leg, double arm_w, double shade) {
    // two perpendicular arms of width arm_w, outer extent leg x leg
    std::vector<Vec2> v = {{0, 0},      {leg, 0},    {leg, arm_w}, {arm_w, arm_w},
                           {arm_w, leg}, {0, leg}};
    return make_shape(name, centered(std::move(v)), 15.0, shade);
}

ObjectShape shape_tshape(const std::string& name, double bar, double arm_w, double shade) {
    const double stem = bar * 0.75;
    std::vector<Vec2> v = {{-bar / 2, 0},          {bar / 2, 0},
                           {bar / 2, arm_w},       {arm_w / 2, arm_w},
                           {arm_w / 2, arm_w + stem}, {-arm_w / 2, arm_w + stem},
                           {-arm_w / 2, arm_w},    {-bar / 2, arm_w}};
    return make_shape(name, centered(std::move(v)), 15.0, shade);
}

ObjectShape shape_ushape(const std::string& name, double outer, double arm_w, double shade) {
    const double inner = outer - 2.0 * arm_w;
    if (inner <= 0.0) throw std::invalid_argument("shape_ushape: arms too wide");
    std::vector<Vec2> v = {{-outer / 2, 0},
                           {outer / 2, 0},
                           {outer / 2, outer},
                           {outer / 2 - arm_w, outer},
                           {outer / 2 - arm_w, arm_w},
                           {-outer / 2 + arm_w, arm_w},
                           {-outer / 2 + arm_w, outer},
                           {-outer / 2, outer}};
    return make_shape(name, centered(std::move(v)), 15.0, shade);
}

ObjectShape shape_cross(const std::string& name, double arm_w, double span, double shade) {
    const double a = arm_w / 2.0, s = span / 2.0;
    std::vector<Vec2> v = {{-a, -s}, {a, -s}, {a, -a}, {s, -a}, {s, a},  {a, a},
                           {a, s},   {-a, s}, {-a, a}, {-s, a}, {-s, -a}, {-a, -a}};
    return make_shape(name, std::move(v), 15.0, shade);
}

ObjectShape shape_trapezoid(const std::string& name, double base, double top,
                            double height, double shade) {
    std::vector<Vec2> v = {{-base / 2, 0}, {base / 2, 0}, {top / 2, height}, {-top / 2, height}};
    return make_shape(name, centered(std::move(v)), 15.0, shade);
}

ObjectShape shape_triangle(const std::string& name, double side, double shade) {
    const double h = side * std::sqrt(3.0) / 2.0;
    std::vector<Vec2> v = {{-side / 2, 0}, {side / 2, 0}, {0, h}};
    return make_shape(name, centered(std::move(v)), 15.0, shade);
}

ObjectShape shape_rhombus(const std::string& name, double side, double acute_deg, double shade) {
    const double a = deg2rad(acute_deg);
    const Vec2 e1{side, 0.0};
    const Vec2 e2{side * std::cos(a), side * std::sin(a)};
    std::vector<Vec2> v = {{0, 0}, e1, e1 + e2, e2};
    return make_shape(name, centered(std::move(v)), 15.0, shade);
}

std::vector<ObjectShape> seen_library() {
    return {
        shape_rect("bar_40x110", 40, 110, 0.20),
        shape_rect("bar_50x120", 50, 120, 0.30),
        shape_rect("bar_60x100", 60, 100, 0.40),
        shape_rect("bar_70x140", 70, 140, 0.25),
        shape_rect("square_48", 48, 48, 0.35),
        shape_rect("square_62", 62, 62, 0.45),
        shape_rect("square_52", 52, 52, 0.44),
        shape_ngon("hex_55", 6, 55.0 / std::cos(kPi / 6.0), 0.22),       // flat-to-flat 55
        shape_ngon("oct_60", 8, 60.0 / std::cos(kPi / 8.0), 0.50),       // flat-to-flat 60
        shape_lshape("lshape_90x45", 90, 45, 0.28),
        shape_tshape("tshape_100x40", 100, 40, 0.38),
        shape_trapezoid("trap_55", 70, 52, 55, 0.32),
        shape_ngon("disc_30", 32, 30, 0.42),
        shape_ngon("disc_90", 32, 90, 0.18),
        shape_rect("stick_12x90", 12, 90, 0.48),
        shape_triangle("tri_80", 80, 0.26),
    };
}

std::vector<ObjectShape> novel_library() {
    return {
        shape_rect("bar_45x95", 45, 95, 0.21),
        shape_rect("bar_65x130", 65, 130, 0.41),
        shape_rect("square_55", 55, 55, 0.31),
        shape_ngon("hex_48", 6, 48.0 / std::cos(kPi / 6.0), 0.51),
        shape_cross("cross_40x110", 40, 110, 0.23),
        shape_lshape("lshape_80x40", 80, 40, 0.33),
        shape_rhombus("rhombus_50", 60, 56.44, 0.43),  // opposite-face width ~50
        shape_ngon("disc_26", 32, 26, 0.19),
    };
}

std::vector<ObjectShape> test_library() {
    return {
        shape_rect("bar_55x105", 55, 105, 0.24),
        shape_rect("bar_42x125", 42, 125, 0.34),
        shape_rect("square_58", 58, 58, 0.44),
        shape_ngon("hex_62", 6, 62.0 / std::cos(kPi / 6.0), 0.27),
        shape_ngon("oct_66", 8, 66.0 / std::cos(kPi / 8.0), 0.29),
        shape_ushape("ushape_95x42", 95, 42, 0.37),
        shape_trapezoid("trap_58", 72, 56, 58, 0.47),
        shape_ngon("disc_85", 32, 85, 0.17),
        shape_rect("stick_14x100", 14, 100, 0.39),
        shape_triangle("tri_75", 75, 0.49),
    };
}

ObjectShape shape_by_name(const std::string& name) {
    for (const auto& lib : {seen_library(), novel_library(), test_library()}) {
        for (const ObjectShape& s : lib) {
            if (s.name == name) return s;
        }
    }
    throw std::invalid_argument("unknown shape name: " + name);
}

std::vector<ObjectShape> shapes_by_names(const std::vector<std::string>& names) {
    std::vector<ObjectShape> out;
    out.reserve(names.size());
    for (const std::string& n : names) out.push_back(shape_by_name(n));
    return out;
}

}  // namespace gf
