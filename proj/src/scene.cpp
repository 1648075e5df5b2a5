#include "graspforge/scene.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace gf {

namespace {

constexpr double kVertexSnapMm = 1e-6;

std::string fmt_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw std::runtime_error("bad number in scene file: '" + s + "'");
    return v;
}

}  // namespace

const char* to_string(FailureReason r) {
    switch (r) {
        case FailureReason::no_contact: return "no_contact";
        case FailureReason::width_exceeds_max: return "width_exceeds_max";
        case FailureReason::width_below_min: return "width_below_min";
        case FailureReason::antipodal_violation: return "antipodal_violation";
        case FailureReason::jaw_collision: return "jaw_collision";
    }
    return "unknown";
}

ObjectShape make_shape(std::string name, std::vector<Vec2> vertices,
                       double friction_half_angle_deg, double shade) {
    if (vertices.size() < 3)
        throw std::invalid_argument("shape '" + name + "': needs >= 3 vertices");
    ObjectShape s;
    s.name = std::move(name);
    s.outline = Polygon(std::move(vertices));
    s.outline.ensure_ccw();
    if (!s.outline.is_simple())
        throw std::invalid_argument("shape '" + s.name + "': polygon is not simple");
    if (s.outline.area() <= 0.0)
        throw std::invalid_argument("shape '" + s.name + "': zero area");
    if (!(friction_half_angle_deg > 0.0 && friction_half_angle_deg < 90.0))
        throw std::invalid_argument("shape '" + s.name + "': friction half-angle out of (0,90)");
    if (!(shade >= 0.0 && shade <= 1.0))
        throw std::invalid_argument("shape '" + s.name + "': shade out of [0,1]");
    s.friction_half_angle_deg = friction_half_angle_deg;
    s.shade = shade;
    return s;
}

Scene generate_scene(std::uint64_t seed, int n_objects,
                     const std::vector<ObjectShape>& library,
                     const Workspace& workspace, const SceneGenConfig& cfg) {
    if (n_objects < 1) throw std::invalid_argument("generate_scene: n_objects < 1");
    if (library.empty()) throw std::invalid_argument("generate_scene: empty library");

    Rng rng = Rng::derive(seed, rng_tag::kSceneGen);
    Scene scene;
    scene.workspace = workspace;
    scene.rng_seed = seed;

    std::vector<Polygon> placed;
    for (int i = 0; i < n_objects; ++i) {
        const ObjectShape& shape = library[rng.uniform_int(static_cast<int>(library.size()))];
        bool ok = false;
        for (int attempt = 0; attempt < cfg.max_attempts_per_object; ++attempt) {
            const double x = rng.uniform(0.0, workspace.width_mm);
            const double y = rng.uniform(0.0, workspace.height_mm);
            const double rot = rng.uniform(0.0, 360.0);
            Polygon world = shape.outline.transformed(rot, {x, y});
            const Aabb bb = world.aabb();
            if (bb.lo.x < 0.0 || bb.lo.y < 0.0 || bb.hi.x > workspace.width_mm ||
                bb.hi.y > workspace.height_mm)
                continue;
            bool overlap = false;
            for (const Polygon& other : placed) {
                if (interiors_overlap(world, other)) {
                    overlap = true;
                    break;
                }
            }
            if (overlap) continue;
            Placement p;
            p.object_id = i;
            p.shape = shape;
            p.x_mm = x;
            p.y_mm = y;
            p.rot_deg = rot;
            scene.placements.push_back(std::move(p));
            placed.push_back(std::move(world));
            ok = true;
            break;
        }
        if (!ok)
            throw std::runtime_error("generate_scene: placement failure for object " +
                                     std::to_string(i) + " after " +
                                     std::to_string(cfg.max_attempts_per_object) + " attempts");
    }
    return scene;
}

RenderResult render(const Scene& scene, double background_shade) {
    const int w = scene.workspace.raster_w();
    const int h = scene.workspace.raster_h();
    const double ppm = scene.workspace.px_per_mm;
    RenderResult out;
    out.image = Image(w, h, background_shade);
    out.occupancy = Mask(w, h, false);

    // scanline fill; crossings use the same predicate as Polygon::contains so
    // filled pixels are exactly the pixels whose centers are inside
    std::vector<double> xs;
    for (const Placement& pl : scene.placements) {
        const Polygon poly = pl.world_polygon();
        const Aabb bb = poly.aabb();
        const int r0 = std::max(0, static_cast<int>(std::floor(bb.lo.y * ppm - 0.5)));
        const int r1 = std::min(h - 1, static_cast<int>(std::ceil(bb.hi.y * ppm)));
        const std::size_t n = poly.size();
        for (int r = r0; r <= r1; ++r) {
            const double y = (r + 0.5) / ppm;
            xs.clear();
            for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
                if ((poly.v[i].y > y) != (poly.v[j].y > y)) {
                    xs.push_back(poly.v[j].x + (y - poly.v[j].y) * (poly.v[i].x - poly.v[j].x) /
                                                   (poly.v[i].y - poly.v[j].y));
                }
            }
            std::sort(xs.begin(), xs.end());
            for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
                // centers x with odd crossing count to the right: [xs[k], xs[k+1])
                int c0 = static_cast<int>(std::ceil(xs[k] * ppm - 0.5));
                int c1 = static_cast<int>(std::ceil(xs[k + 1] * ppm - 0.5)) - 1;
                c0 = std::max(c0, 0);
                c1 = std::min(c1, w - 1);
                for (int c = c0; c <= c1; ++c) {
                    out.image.at(r, c) = pl.shape.shade;
                    out.occupancy.at(r, c) = 1;
                }
            }
        }
    }
    return out;
}

namespace {

// rectangle spanning [0,len]x[0,thick] in the (tangent, normal) frame anchored
// at `contact`, pushed `standoff` outward along the unit normal
Polygon jaw_rectangle(Vec2 contact, Vec2 outward_normal, double len, double thick,
                      double standoff) {
    const Vec2 n = outward_normal;
    const Vec2 e = perp(n);
    const Vec2 base = contact + standoff * n;
    Polygon rect;
    rect.v = {
        base + (-0.5 * len) * e,
        base + (0.5 * len) * e,
        base + (0.5 * len) * e + thick * n,
        base + (-0.5 * len) * e + thick * n,
    };
    rect.ensure_ccw();
    return rect;
}

GraspOutcome fail(FailureReason r) {
    GraspOutcome o;
    o.success = false;
    o.failure_reason = r;
    return o;
}

}  // namespace

GraspOutcome grasp_oracle(const Scene& scene, const GraspConfig& grasp,
                          const GripperSpec& gripper) {
    const Vec2 p{grasp.x_mm, grasp.y_mm};
    const double th = deg2rad(grasp.theta_deg);
    const Vec2 d{std::cos(th), std::sin(th)};

    std::vector<Polygon> world;
    world.reserve(scene.placements.size());
    for (const Placement& pl : scene.placements) world.push_back(pl.world_polygon());

    // (a) material at the grasp center
    int center_idx = -1;
    for (std::size_t i = 0; i < world.size(); ++i) {
        if (world[i].contains(p)) {
            center_idx = static_cast<int>(i);
            break;
        }
    }
    if (center_idx < 0) return fail(FailureReason::no_contact);
    const Polygon& obj = world[center_idx];

    // contacts: nearest boundary crossings of the center object on each side
    const std::vector<BoundaryHit> hits = line_polygon_hits(p, d, obj);
    BoundaryHit plus{std::numeric_limits<double>::max(), -1, 0.0};
    BoundaryHit minus{std::numeric_limits<double>::lowest(), -1, 0.0};
    for (const BoundaryHit& h : hits) {
        if (h.t > 0.0 && h.t < plus.t) plus = h;
        if (h.t < 0.0 && h.t > minus.t) minus = h;
    }
    if (plus.edge < 0 || minus.edge < 0) return fail(FailureReason::no_contact);

    GraspOutcome out;
    out.object_id = scene.placements[center_idx].object_id;
    out.contact_width_mm = plus.t - minus.t;
    out.contact_plus = p + plus.t * d;
    out.contact_minus = p + minus.t * d;
    out.normal_plus = boundary_normal(obj, plus.edge, plus.u, kVertexSnapMm);
    out.normal_minus = boundary_normal(obj, minus.edge, minus.u, kVertexSnapMm);

    // (b) width limits
    const double w = *out.contact_width_mm;
    if (w > gripper.max_open_mm) {
        out.failure_reason = FailureReason::width_exceeds_max;
        return out;
    }
    if (w < gripper.min_close_mm) {
        out.failure_reason = FailureReason::width_below_min;
        return out;
    }

    // (c) antipodal within the friction cone
    const double fric = deg2rad(scene.placements[center_idx].shape.friction_half_angle_deg);
    const double ang_plus = std::acos(std::clamp(dot(out.normal_plus, d), -1.0, 1.0));
    const double ang_minus = std::acos(std::clamp(dot(out.normal_minus, -1.0 * d), -1.0, 1.0));
    if (ang_plus > fric || ang_minus > fric) {
        out.failure_reason = FailureReason::antipodal_violation;
        return out;
    }

    // (d) jaw footprints clear of all objects
    const Polygon jaw_p = jaw_rectangle(out.contact_plus, out.normal_plus,
                                        gripper.jaw_len_mm, gripper.jaw_thick_mm,
                                        gripper.jaw_standoff_mm);
    const Polygon jaw_m = jaw_rectangle(out.contact_minus, out.normal_minus,
                                        gripper.jaw_len_mm, gripper.jaw_thick_mm,
                                        gripper.jaw_standoff_mm);
    for (const Polygon& poly : world) {
        if (interiors_overlap(jaw_p, poly) || interiors_overlap(jaw_m, poly)) {
            out.failure_reason = FailureReason::jaw_collision;
            return out;
        }
    }

    out.success = true;
    return out;
}

Scene remove_object(const Scene& scene, int object_id) {
    Scene out = scene;
    const auto it = std::find_if(out.placements.begin(), out.placements.end(),
                                 [&](const Placement& p) { return p.object_id == object_id; });
    if (it == out.placements.end())
        throw std::invalid_argument("remove_object: unknown id " + std::to_string(object_id));
    out.placements.erase(it);
    return out;
}

void write_scene(std::ostream& out, const Scene& scene) {
    out << "workspace " << fmt_double(scene.workspace.width_mm) << " "
        << fmt_double(scene.workspace.height_mm) << " "
        << fmt_double(scene.workspace.px_per_mm) << "\n";
    for (const Placement& pl : scene.placements) {
        out << "obj " << pl.object_id << " " << fmt_double(pl.shape.shade) << " "
            << fmt_double(pl.shape.friction_half_angle_deg) << " " << fmt_double(pl.x_mm)
            << " " << fmt_double(pl.y_mm) << " " << fmt_double(pl.rot_deg) << " "
            << pl.shape.outline.size();
        for (const Vec2& v : pl.shape.outline.v) {
            out << " " << fmt_double(v.x) << " " << fmt_double(v.y);
        }
        out << "\n";
    }
}

void write_scene_file(const std::string& path, const Scene& scene) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    write_scene(f, scene);
}

Scene read_scene(std::istream& in) {
    Scene scene;
    std::string line;
    bool have_ws = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string kind;
        ls >> kind;
        if (kind == "workspace") {
            std::string a, b, c;
            ls >> a >> b >> c;
            scene.workspace.width_mm = parse_double(a);
            scene.workspace.height_mm = parse_double(b);
            scene.workspace.px_per_mm = parse_double(c);
            have_ws = true;
        } else if (kind == "obj") {
            Placement pl;
            std::string shade, fric, x, y, rot;
            int n = 0;
            ls >> pl.object_id >> shade >> fric >> x >> y >> rot >> n;
            if (!ls || n < 3) throw std::runtime_error("bad obj line in scene file");
            std::vector<Vec2> verts;
            verts.reserve(n);
            for (int i = 0; i < n; ++i) {
                std::string vx, vy;
                ls >> vx >> vy;
                if (!ls) throw std::runtime_error("truncated obj line in scene file");
                verts.push_back({parse_double(vx), parse_double(vy)});
            }
            pl.shape = make_shape("", std::move(verts), parse_double(fric), parse_double(shade));
            pl.x_mm = parse_double(x);
            pl.y_mm = parse_double(y);
            pl.rot_deg = parse_double(rot);
            scene.placements.push_back(std::move(pl));
        } else {
            throw std::runtime_error("unknown scene line kind: " + kind);
        }
    }
    if (!have_ws) throw std::runtime_error("scene file missing workspace header");
    return scene;
}

Scene read_scene_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for read: " + path);
    return read_scene(f);
}

}  // namespace gf
