#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "graspforge/geometry.hpp"
#include "graspforge/raster.hpp"
#include "graspforge/rng.hpp"

namespace gf {

struct Workspace {
    double width_mm = 600.0;
    double height_mm = 600.0;
    double px_per_mm = 1.0;

    int raster_w() const { return static_cast<int>(std::lround(width_mm * px_per_mm)); }
    int raster_h() const { return static_cast<int>(std::lround(height_mm * px_per_mm)); }
    bool contains(Vec2 p) const {
        return p.x >= 0.0 && p.x <= width_mm && p.y >= 0.0 && p.y <= height_mm;
    }
};

// Rigid polygonal object in its local frame. Vertices are normalized CCW on
// construction via make_shape().
struct ObjectShape {
    std::string name;
    Polygon outline;                       // local frame, mm
    double friction_half_angle_deg = 15.0;
    double shade = 0.5;                    // rendered gray level
};

// Validates invariants (>=3 vertices, simple, positive area, friction in
// (0,90), shade in [0,1]) and normalizes winding. Throws std::invalid_argument.
ObjectShape make_shape(std::string name, std::vector<Vec2> vertices,
                       double friction_half_angle_deg = 15.0, double shade = 0.5);

struct Placement {
    int object_id = 0;
    ObjectShape shape;
    double x_mm = 0.0, y_mm = 0.0, rot_deg = 0.0;

    Polygon world_polygon() const { return shape.outline.transformed(rot_deg, {x_mm, y_mm}); }
};

struct Scene {
    Workspace workspace;
    std::vector<Placement> placements;
    std::uint64_t rng_seed = 0;
};

struct GraspConfig {
    double x_mm = 0.0;
    double y_mm = 0.0;
    double theta_deg = 0.0;  // closing-axis angle, CCW from +x, in [0,180)
};

struct GripperSpec {
    double max_open_mm = 75.0;
    double min_close_mm = 37.0;
    double jaw_len_mm = 20.0;
    double jaw_thick_mm = 8.0;
    double jaw_standoff_mm = 0.1;
};

enum class FailureReason {
    no_contact,
    width_exceeds_max,
    width_below_min,
    antipodal_violation,
    jaw_collision,
};

const char* to_string(FailureReason r);

struct GraspOutcome {
    bool success = false;
    std::optional<double> contact_width_mm;
    std::optional<FailureReason> failure_reason;
    std::optional<int> object_id;  // contacted object, when contacts exist
    // contact diagnostics, valid when contact_width_mm is set
    Vec2 contact_plus{}, contact_minus{};
    Vec2 normal_plus{}, normal_minus{};
};

struct SceneGenConfig {
    int max_attempts_per_object = 2000;
};

// Rejection-samples non-overlapping poses. Deterministic in (seed, inputs).
// Throws std::runtime_error when an object cannot be placed within the bound.
Scene generate_scene(std::uint64_t seed, int n_objects,
                     const std::vector<ObjectShape>& library,
                     const Workspace& workspace,
                     const SceneGenConfig& cfg = {});

struct RenderResult {
    Image image;
    Mask occupancy;
};

// Rasterizes the scene: pixel (r,c) center is ((c+0.5)/ppm, (r+0.5)/ppm) mm;
// a pixel is occupied iff its center lies strictly inside some polygon.
RenderResult render(const Scene& scene, double background_shade = 0.95);

// Geometric grasp adjudication. See GraspOutcome / FailureReason.
GraspOutcome grasp_oracle(const Scene& scene, const GraspConfig& grasp,
                          const GripperSpec& gripper);

// Returns the scene without the given placement. Throws on unknown id.
Scene remove_object(const Scene& scene, int object_id);

// Line-oriented text serialization (see README for the format).
void write_scene(std::ostream& out, const Scene& scene);
void write_scene_file(const std::string& path, const Scene& scene);
Scene read_scene(std::istream& in);
Scene read_scene_file(const std::string& path);

}  // namespace gf
