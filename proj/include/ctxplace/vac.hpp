#pragma once

// Visual assistive cues: annotated top view, four side views and text cues
// describing a scene to a judge.

#include <algorithm>

#include "drawing.hpp"

namespace ctxplace {

struct VacOptions {
    bool front_marker_single = false;
    bool front_marker_triple = false;
    bool front_shader = false;
    bool wireframe = false;
    bool clearance_circles = false;
    bool indices = false;
    bool top_view = false;
    bool four_views = true;
    bool bounding_box_text = false;
    bool relation_angle_text = false;
    std::string preset = "custom";

    friend bool operator==(const VacOptions&, const VacOptions&) = default;

    void validate() const {
        if (front_marker_single && front_marker_triple)
            throw ConfigError("front_marker_single and front_marker_triple are mutually exclusive");
    }
};

inline constexpr std::string_view kPresetNames[] = {
    "none", "bb", "triple+ra+bb", "single+ra+bb", "wf+ra+bb", "sd+ra+bb", "triple+ra+bb+top",
};
inline constexpr std::string_view kDefaultPreset = "triple+ra+bb+top";

inline VacOptions vac_preset(std::string_view name) {
    VacOptions o;
    o.preset = std::string(name);
    const bool ra_bb = name != "none" && name != "bb";
    o.bounding_box_text = name != "none";
    o.relation_angle_text = ra_bb;
    if (name == "none" || name == "bb") {
    } else if (name == "triple+ra+bb") {
        o.front_marker_triple = true;
    } else if (name == "single+ra+bb") {
        o.front_marker_single = true;
    } else if (name == "wf+ra+bb") {
        o.wireframe = true;
    } else if (name == "sd+ra+bb") {
        o.front_shader = true;
    } else if (name == "triple+ra+bb+top") {
        o.front_marker_triple = true;
        o.top_view = true;
        o.clearance_circles = true;
        o.indices = true;
    } else {
        std::string known;
        for (auto n : kPresetNames) known += (known.empty() ? "" : ", ") + std::string(n);
        throw ConfigError("unknown VAC preset '" + std::string(name) + "' (known: " + known + ")");
    }
    return o;
}

inline VacOptions default_vac_options() { return vac_preset(kDefaultPreset); }

// Objects whose asset carries this tag (floors, ground planes) are drawn as
// plain background: no circle, marker or index.
inline constexpr std::string_view kGroundTag = "ground";

inline bool is_ground(const Scene& scene, const ObjectInstance& o) {
    const auto* a = scene.find_asset(o.asset_id);
    return a && std::find(a->tags.begin(), a->tags.end(), kGroundTag) != a->tags.end();
}

// ---------------------------------------------------------------- circles

inline constexpr double kClearanceCircleScale = 4.0 / 3.0;

struct ClearanceCircle {
    std::string id;
    int index = 0;
    Point2 center;
    double radius = 0.0;
    bool colliding = false;
};

inline bool circles_intersect(const ClearanceCircle& a, const ClearanceCircle& b) {
    return length(a.center - b.center) < a.radius + b.radius;
}

// One circle per non-ground object, indexed in scene insertion order.
inline std::vector<ClearanceCircle> clearance_circles(const Scene& scene) {
    std::vector<ClearanceCircle> out;
    for (const auto& o : scene.objects) {
        if (is_ground(scene, o)) continue;
        const auto fp = footprint(o);
        ClearanceCircle c;
        c.id = o.id;
        c.index = static_cast<int>(out.size());
        c.center = footprint_center(fp);
        c.radius = std::max(bounding_radius(fp), kGeomEps) * kClearanceCircleScale;
        out.push_back(std::move(c));
    }
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t j = i + 1; j < out.size(); ++j)
            if (circles_intersect(out[i], out[j])) out[i].colliding = out[j].colliding = true;
    return out;
}

// ---------------------------------------------------------- text cues

struct RelationAngle {
    double offset_deg = 0.0;  // in [-180, 180)
    double bearing_deg = 0.0;
    double front_yaw_deg = 0.0;
    bool coincident = false;  // centers coincide on the ground; offset is 0
};

// Positive offsets mean the related object lies clockwise from the target's
// front seen from above (toward its right): facing +z, a related object at +x
// gives +90.
inline RelationAngle relation_angle_detail(const Scene& scene, std::string_view target_id, std::string_view related_id) {
    const auto& t = scene.at(target_id);
    const auto& r = scene.at(related_id);
    const Vec3 d = world_aabb(r).center() - world_aabb(t).center();
    RelationAngle ra;
    ra.front_yaw_deg = front_yaw(t);
    if (std::hypot(d.x, d.z) < kGeomEps) {
        ra.coincident = true;
        return ra;
    }
    ra.bearing_deg = bearing_deg(d.x, d.z);
    ra.offset_deg = wrap180(ra.bearing_deg - ra.front_yaw_deg);
    return ra;
}

inline double relation_angle(const Scene& scene, std::string_view target_id, std::string_view related_id) {
    return relation_angle_detail(scene, target_id, related_id).offset_deg;
}

inline std::string relation_angle_text(const Scene& scene, std::string_view target_id,
                                       const std::vector<std::string>& related_ids) {
    std::string out = "# relation angles (degrees; + = toward the target's right)\n";
    for (const auto& id : related_ids) {
        const auto ra = relation_angle_detail(scene, target_id, id);
        out += "target=" + std::string(target_id) + " related=" + id + " offset=" + fixed(ra.offset_deg, 3) +
               " bearing=" + fixed(ra.bearing_deg, 3) + " front_yaw=" + fixed(ra.front_yaw_deg, 3);
        if (ra.coincident) out += " warning=coincident_centers";
        out += "\n";
    }
    return out;
}

inline std::string bounding_box_text(const Scene& scene, const std::vector<std::string>& ids) {
    std::string out = "# bounding boxes (world axis-aligned, y up)\n";
    for (const auto& id : ids) {
        const auto& o = scene.at(id);
        const Aabb b = world_aabb(o);
        out += "id=" + o.id + " asset=" + o.asset_id + " min=" + fmt_vec(b.min) + " max=" + fmt_vec(b.max) +
               " center=" + fmt_vec(b.center()) + " yaw=" + fixed(o.orientation.yaw, 9) + "\n";
    }
    return out;
}

// -------------------------------------------------------------- markers

enum class MarkerKind { single, triple };

struct MarkerGlyph {
    std::string axis;  // "front", "top" or "right"
    Rgb color;
    Vec3 from, to;     // world space
};

namespace detail {

// Distance from the box center to its surface along a local direction.
inline double reach_along(const ObjectInstance& o, Vec3 local_dir) {
    const Vec3 h = o.scaled_half_extents();
    const Vec3 d = hadamard(local_dir, o.scale.as_vec());
    double t = std::numeric_limits<double>::infinity();
    if (std::abs(d.x) > kGeomEps) t = std::min(t, h.x / std::abs(d.x));
    if (std::abs(d.y) > kGeomEps) t = std::min(t, h.y / std::abs(d.y));
    if (std::abs(d.z) > kGeomEps) t = std::min(t, h.z / std::abs(d.z));
    return std::isfinite(t) ? t * norm(d) : 0.0;
}

inline Vec3 world_dir(const ObjectInstance& o, Vec3 local) {
    const Vec3 w = o.rotation() * hadamard(local, o.scale.as_vec());
    const double n = norm(w);
    return n > 0 ? (1.0 / n) * w : Vec3{};
}

}  // namespace detail

// Marker sizes: the single arrow runs from the footprint edge to 1.5x the
// edge distance; triple axes reach 1.25x past the box face.
inline std::vector<MarkerGlyph> marker_overlay(const ObjectInstance& obj, MarkerKind kind) {
    const Vec3 fwd_local = obj.front_axis;
    const Vec3 up_local{0, 1, 0};
    // right = up x front in this left-handed frame, so front +z gives right +x
    const Vec3 right_local{fwd_local.z, 0, -fwd_local.x};
    const Vec3 c = obj.position;
    std::vector<MarkerGlyph> out;
    const auto along = [&](Vec3 local, double from, double to) {
        const Vec3 w = detail::world_dir(obj, local);
        return std::pair{c + from * w, c + to * w};
    };
    if (kind == MarkerKind::single) {
        const double edge = detail::reach_along(obj, fwd_local);
        const auto [a, b] = along(fwd_local, edge, 1.5 * edge);
        out.push_back({"front", colors::front_axis, a, b});
        return out;
    }
    const auto [fa, fb] = along(fwd_local, 0, 1.25 * detail::reach_along(obj, fwd_local));
    const auto [ua, ub] = along(up_local, 0, 1.25 * detail::reach_along(obj, up_local));
    const double rr = norm(right_local) > 0 ? 1.25 * detail::reach_along(obj, right_local) : 0.0;
    const auto [ra, rb] = along(right_local, 0, rr);
    out.push_back({"front", colors::front_axis, fa, fb});
    out.push_back({"top", colors::top_axis, ua, ub});
    out.push_back({"right", colors::right_axis, ra, rb});
    return out;
}

// ---------------------------------------------------------------- views

struct ViewAxes {
    std::string name;
    std::string u_label, v_label;
    Vec3 u, v;  // world directions mapped to screen right and up
    Vec3 depth; // direction toward the viewer
};

inline ViewAxes top_axes() { return {"top", "+x", "+z", {1, 0, 0}, {0, 0, 1}, {0, 1, 0}}; }

// Side cameras sit on the named side looking back at the target.
inline std::array<ViewAxes, 4> side_axes() {
    return {{
        {"side_px", "+z", "+y", {0, 0, 1}, {0, 1, 0}, {1, 0, 0}},
        {"side_nx", "-z", "+y", {0, 0, -1}, {0, 1, 0}, {-1, 0, 0}},
        {"side_pz", "-x", "+y", {-1, 0, 0}, {0, 1, 0}, {0, 0, 1}},
        {"side_nz", "+x", "+y", {1, 0, 0}, {0, 1, 0}, {0, 0, -1}},
    }};
}

namespace detail {

inline Point2 project(const ViewAxes& ax, Vec3 p) { return {dot(p, ax.u), dot(p, ax.v)}; }

inline std::vector<Point2> silhouette(const ViewAxes& ax, const ObjectInstance& o) {
    const auto corners = world_corners(o);
    std::vector<Point2> pts;
    for (const auto& c : corners) pts.push_back(project(ax, c));
    const auto hull = convex_hull(pts);
    return hull.vertices();
}

inline constexpr int kBoxEdges[12][2] = {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {0, 2}, {1, 3},
                                         {4, 6}, {5, 7}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

inline void add_wireframe(Drawing& d, const ViewAxes& ax, const ObjectInstance& o, Rgb color) {
    const auto c = world_corners(o);
    for (const auto& e : kBoxEdges)
        d.prims.push_back(PolyPrim{{project(ax, c[static_cast<std::size_t>(e[0])]), project(ax, c[static_cast<std::size_t>(e[1])])},
                                   std::nullopt, color, 1.5, false});
}

// Front half red, back half blue, split by the lateral axis through the center.
inline void add_shader(Drawing& d, const ObjectInstance& o) {
    const auto fp = footprint(o).vertices();
    if (fp.size() < 3) return;
    const auto f = ground_front(o);
    const Point2 c = ground(o.position);
    const Point2 fw{f[0], f[1]}, lat{f[1], -f[0]};
    const double big = 4 * (bounding_radius(footprint(o)) + length(c - footprint_center(footprint(o)))) + 1;
    auto half = [&](double sign) {
        const Point2 n = sign * fw;
        // ccw half-plane box on the n side of the lateral line
        std::vector<Point2> box = {c - big * lat, c - big * lat + big * n, c + big * lat + big * n, c + big * lat};
        if (cross(box[0], box[1], box[2]) < 0) std::reverse(box.begin(), box.end());
        return clip_convex(fp, box);
    };
    const auto front = half(1.0), back = half(-1.0);
    if (front.size() >= 3) d.prims.push_back(PolyPrim{front, colors::shade_front, std::nullopt, 1, true});
    if (back.size() >= 3) d.prims.push_back(PolyPrim{back, colors::shade_back, std::nullopt, 1, true});
}

inline void add_marker(Drawing& d, const ViewAxes& ax, const MarkerGlyph& g) {
    const Point2 a = project(ax, g.from), b = project(ax, g.to);
    const Point2 v = b - a;
    const double len = length(v);
    if (len < 1e-6) {
        d.prims.push_back(DotPrim{a, 5.0, g.color});
        return;
    }
    d.prims.push_back(PolyPrim{{a, b}, std::nullopt, g.color, 3.0, false});
    const Point2 u = (1.0 / len) * v, n{-u.z, u.x};
    const double head = 0.25 * len;
    d.prims.push_back(PolyPrim{{b, b - head * u + 0.5 * head * n, b - head * u - 0.5 * head * n}, g.color, std::nullopt, 1, true});
}

inline void add_object_layers(Drawing& d, const ViewAxes& ax, const Scene& scene, const ObjectInstance& o,
                              bool is_target, const VacOptions& opt) {
    const bool ground_obj = is_ground(scene, o);
    const Rgb fill = ground_obj ? colors::ground_fill : is_target ? colors::target_fill : colors::object_fill;
    const double w = is_target ? 2.5 : 1.5;
    if (opt.wireframe && !ground_obj) {
        add_wireframe(d, ax, o, colors::outline);
    } else {
        d.prims.push_back(PolyPrim{silhouette(ax, o), fill, colors::outline, w, true});
        if (opt.front_shader && !ground_obj && ax.name == "top") add_shader(d, o);
    }
}

inline void add_markers(Drawing& d, const ViewAxes& ax, const ObjectInstance& o, const VacOptions& opt) {
    if (opt.front_marker_single)
        for (const auto& g : marker_overlay(o, MarkerKind::single)) add_marker(d, ax, g);
    if (opt.front_marker_triple)
        for (const auto& g : marker_overlay(o, MarkerKind::triple)) add_marker(d, ax, g);
}

}  // namespace detail

// Orthographic (x, z) projection of the whole scene.
inline Drawing render_top_view(const Scene& scene, std::string_view target_id, const VacOptions& opt) {
    opt.validate();
    const ViewAxes ax = top_axes();
    Drawing d{ax.name, ax.u_label, ax.v_label, {}};
    // ground first, then the rest in insertion order so later objects paint over
    for (const auto& o : scene.objects)
        if (is_ground(scene, o)) detail::add_object_layers(d, ax, scene, o, false, opt);
    for (const auto& o : scene.objects)
        if (!is_ground(scene, o)) detail::add_object_layers(d, ax, scene, o, o.id == target_id, opt);
    for (const auto& o : scene.objects)
        if (!is_ground(scene, o)) detail::add_markers(d, ax, o, opt);
    if (opt.clearance_circles || opt.indices) {
        for (const auto& c : clearance_circles(scene)) {
            if (opt.clearance_circles)
                d.prims.push_back(CirclePrim{c.center, c.radius, c.colliding ? colors::circle_hit : colors::circle_free, 2.0});
            if (opt.indices) d.prims.push_back(TextPrim{c.center, std::to_string(c.index), colors::black, 14.0});
        }
    }
    return d;
}

// Views from +x, -x, +z and -z showing the target and its related objects.
inline std::array<Drawing, 4> render_four_views(const Scene& scene, std::string_view target_id, const VacOptions& opt,
                                                const std::vector<std::string>& related_ids = {}) {
    opt.validate();
    const auto& target = scene.at(target_id);
    std::vector<const ObjectInstance*> shown;
    for (const auto& o : scene.objects)
        if (o.id == target_id || std::find(related_ids.begin(), related_ids.end(), o.id) != related_ids.end())
            shown.push_back(&o);
    for (const auto& id : related_ids) scene.at(id);
    const auto axes = side_axes();
    std::array<Drawing, 4> out;
    for (std::size_t k = 0; k < 4; ++k) {
        const ViewAxes& ax = axes[k];
        Drawing d{ax.name, ax.u_label, ax.v_label, {}};
        // far objects first
        auto order = shown;
        std::stable_sort(order.begin(), order.end(), [&](const ObjectInstance* a, const ObjectInstance* b) {
            return dot(world_aabb(*a).center(), ax.depth) < dot(world_aabb(*b).center(), ax.depth);
        });
        for (const auto* o : order) detail::add_object_layers(d, ax, scene, *o, o->id == target.id, opt);
        for (const auto* o : order)
            if (!is_ground(scene, *o)) detail::add_markers(d, ax, *o, opt);
        out[k] = std::move(d);
    }
    return out;
}

// Everything a judge sees for one target under one option set.
struct VacBundle {
    std::optional<Drawing> top;
    std::vector<Drawing> sides;
    std::string bounding_box;    // empty unless enabled
    std::string relation_angles; // empty unless enabled

    std::vector<const Drawing*> drawings() const {
        std::vector<const Drawing*> v;
        if (top) v.push_back(&*top);
        for (const auto& s : sides) v.push_back(&s);
        return v;
    }
};

inline VacBundle render_vac(const Scene& scene, std::string_view target_id, const std::vector<std::string>& related_ids,
                            const VacOptions& opt) {
    opt.validate();
    scene.at(target_id);
    VacBundle b;
    if (opt.top_view) b.top = render_top_view(scene, target_id, opt);
    if (opt.four_views) {
        auto views = render_four_views(scene, target_id, opt, related_ids);
        b.sides.assign(views.begin(), views.end());
    }
    std::vector<std::string> ids{std::string(target_id)};
    for (const auto& r : related_ids)
        if (r != target_id) ids.push_back(r);
    if (opt.bounding_box_text) b.bounding_box = bounding_box_text(scene, ids);
    if (opt.relation_angle_text) b.relation_angles = relation_angle_text(scene, target_id, {ids.begin() + 1, ids.end()});
    return b;
}

}  // namespace ctxplace
