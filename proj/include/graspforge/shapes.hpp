#pragma once

#include <string>
#include <vector>

#include "graspforge/scene.hpp"

namespace gf {

// Parametric shape builders; outlines are centered on the local origin.
ObjectShape shape_rect(const std::string& name, double w_mm, double h_mm, double shade);
ObjectShape shape_ngon(const std::string& name, int n, double diameter_mm, double shade);
ObjectShape shape_lshape(const std::string& name, double leg_mm, double arm_w_mm, double shade);
ObjectShape shape_tshape(const std::string& name, double bar_mm, double arm_w_mm, double shade);
ObjectShape shape_ushape(const std::string& name, double outer_mm, double arm_w_mm, double shade);
ObjectShape shape_cross(const std::string& name, double arm_w_mm, double span_mm, double shade);
ObjectShape shape_trapezoid(const std::string& name, double base_mm, double top_mm,
                            double height_mm, double shade);
ObjectShape shape_triangle(const std::string& name, double side_mm, double shade);
ObjectShape shape_rhombus(const std::string& name, double side_mm, double acute_deg, double shade);

// Built-in object groups. The three groups are pairwise disjoint by name;
// "seen" drives stage-0 collection, "novel" mixes into staged collection,
// "test" is reserved for held-out evaluation.
std::vector<ObjectShape> seen_library();
std::vector<ObjectShape> novel_library();
std::vector<ObjectShape> test_library();

// Lookup across all built-in groups; throws on unknown name.
ObjectShape shape_by_name(const std::string& name);
std::vector<ObjectShape> shapes_by_names(const std::vector<std::string>& names);

}  // namespace gf
