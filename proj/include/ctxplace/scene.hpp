#pragma once

// Scene representation: oriented boxes with named anchors.
//
// Conventions (used everywhere in the library):
//   * y is up; the ground plane is (x, z).
//   * Left-handed like the engine the task scenes come from: yaw rotates the
//     local +z axis toward +x, so an object with yaw 90 and the default front
//     axis faces +x. Local +x is the object's right.
//   * R = Ry(yaw) * Rx(pitch) * Rz(roll); angles in degrees.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"

namespace ctxplace {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
    friend Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }
    friend bool operator==(const Vec3&, const Vec3&) = default;

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 hadamard(Vec3 a, Vec3 b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }

struct Orientation {
    double yaw = 0.0, pitch = 0.0, roll = 0.0;

    friend bool operator==(const Orientation&, const Orientation&) = default;

    Orientation normalized() const { return {wrap360(yaw), wrap180(pitch), wrap180(roll)}; }
};

struct ScaleVec {
    double sx = 1.0, sy = 1.0, sz = 1.0;

    friend bool operator==(const ScaleVec&, const ScaleVec&) = default;

    Vec3 as_vec() const { return {sx, sy, sz}; }
};

struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    double operator()(int r, int c) const { return m[static_cast<std::size_t>(r * 3 + c)]; }
    double& operator()(int r, int c) { return m[static_cast<std::size_t>(r * 3 + c)]; }

    Vec3 operator*(Vec3 v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
                r(i, j) = s;
            }
        return r;
    }
    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
        return r;
    }
};

// cos/sin of an angle in degrees; exact at multiples of 90.
inline std::pair<double, double> cos_sin_deg(double deg) {
    const double w = wrap360(deg);
    if (w == 0.0) return {1.0, 0.0};
    if (w == 90.0) return {0.0, 1.0};
    if (w == 180.0) return {-1.0, 0.0};
    if (w == 270.0) return {0.0, -1.0};
    return {std::cos(deg2rad(deg)), std::sin(deg2rad(deg))};
}

inline Mat3 yaw_matrix(double yaw_deg) {
    const auto [c, s] = cos_sin_deg(yaw_deg);
    Mat3 r;
    r.m = {c, 0, s, 0, 1, 0, -s, 0, c};
    return r;
}

inline Mat3 rotation_matrix(const Orientation& o) {
    const auto [cp, sp] = cos_sin_deg(o.pitch);
    const auto [cr, sr] = cos_sin_deg(o.roll);
    Mat3 rx, rz;
    rx.m = {1, 0, 0, 0, cp, -sp, 0, sp, cp};
    rz.m = {cr, -sr, 0, sr, cr, 0, 0, 0, 1};
    if (o.pitch == 0.0 && o.roll == 0.0) return yaw_matrix(o.yaw);
    return yaw_matrix(o.yaw) * rx * rz;
}

// Bearing of a ground-plane direction, in degrees, measured like yaw:
// +z is 0, +x is 90.
inline double bearing_deg(double dx, double dz) { return wrap360(rad2deg(std::atan2(dx, dz))); }

struct AssetRecord {
    std::string asset_id;
    Vec3 half_extents{0.5, 0.5, 0.5};
    Vec3 front_axis{0, 0, 1};
    std::map<std::string, Vec3> anchors;
    std::vector<std::string> tags;

    friend bool operator==(const AssetRecord&, const AssetRecord&) = default;
};

struct ObjectInstance {
    std::string id;
    std::string asset_id;
    Vec3 position;
    Orientation orientation;
    ScaleVec scale;
    Vec3 half_extents{0.5, 0.5, 0.5};
    Vec3 front_axis{0, 0, 1};
    std::map<std::string, Vec3> anchors;

    friend bool operator==(const ObjectInstance&, const ObjectInstance&) = default;

    Mat3 rotation() const { return rotation_matrix(orientation); }

    // Box half sizes after scale, in the local frame.
    Vec3 scaled_half_extents() const { return hadamard(half_extents, scale.as_vec()); }

    Vec3 to_world(Vec3 local) const { return position + rotation() * hadamard(local, scale.as_vec()); }
};

struct Aabb {
    Vec3 min, max;

    friend bool operator==(const Aabb&, const Aabb&) = default;

    Vec3 center() const { return 0.5 * (min + max); }
    Vec3 size() const { return max - min; }
    Aabb translated(Vec3 t) const { return {min + t, max + t}; }
};

struct Transform {
    Vec3 position;
    Orientation orientation;

    friend bool operator==(const Transform&, const Transform&) = default;
};

struct Scene {
    std::vector<ObjectInstance> objects;
    std::vector<AssetRecord> catalog;

    friend bool operator==(const Scene&, const Scene&) = default;

    const ObjectInstance* find(std::string_view id) const {
        for (const auto& o : objects)
            if (o.id == id) return &o;
        return nullptr;
    }
    const ObjectInstance& at(std::string_view id) const {
        if (const auto* o = find(id)) return *o;
        throw UnknownIdError(std::string(id));
    }
    ObjectInstance& at_mut(std::string_view id) {
        for (auto& o : objects)
            if (o.id == id) return o;
        throw UnknownIdError(std::string(id));
    }
    const AssetRecord* find_asset(std::string_view asset_id) const {
        for (const auto& a : catalog)
            if (a.asset_id == asset_id) return &a;
        return nullptr;
    }
    const AssetRecord& asset(std::string_view asset_id) const {
        if (const auto* a = find_asset(asset_id)) return *a;
        throw UnknownIdError(std::string(asset_id));
    }

    Scene with_transform(std::string_view id, const Transform& t) const {
        Scene s = *this;
        auto& o = s.at_mut(id);
        o.position = t.position;
        o.orientation = t.orientation.normalized();
        return s;
    }
    Scene with_object(ObjectInstance obj) const {
        if (find(obj.id)) throw SceneError("duplicate object id '" + obj.id + "'");
        Scene s = *this;
        s.objects.push_back(std::move(obj));
        return s;
    }
};

inline Transform transform_of(const ObjectInstance& o) { return {o.position, o.orientation}; }

inline ObjectInstance instantiate(const AssetRecord& asset, std::string id, const Transform& t = {}) {
    ObjectInstance o;
    o.id = std::move(id);
    o.asset_id = asset.asset_id;
    o.position = t.position;
    o.orientation = t.orientation.normalized();
    o.half_extents = asset.half_extents;
    o.front_axis = asset.front_axis;
    o.anchors = asset.anchors;
    return o;
}

// Throws SceneError describing the first broken invariant.
inline void validate(const ObjectInstance& o) {
    auto fail = [&](const std::string& what) { throw SceneError("object '" + o.id + "': " + what); };
    if (o.id.empty()) throw SceneError("object with empty id");
    if (!o.position.finite()) fail("non-finite position");
    if (!std::isfinite(o.orientation.yaw) || !std::isfinite(o.orientation.pitch) ||
        !std::isfinite(o.orientation.roll))
        fail("non-finite orientation");
    if (!(o.scale.sx > 0 && o.scale.sy > 0 && o.scale.sz > 0)) fail("scale must be positive");
    if (!(o.half_extents.x > 0 && o.half_extents.y > 0 && o.half_extents.z > 0))
        fail("half_extents must be positive");
    if (std::abs(norm(o.front_axis) - 1.0) > 1e-6) fail("front_axis must be unit length");
    for (const auto& [name, p] : o.anchors)
        if (!p.finite()) fail("anchor '" + name + "' is not finite");
}

inline void validate(const Scene& s) {
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
        const auto& o = s.objects[i];
        validate(o);
        for (std::size_t j = 0; j < i; ++j)
            if (s.objects[j].id == o.id) throw SceneError("duplicate object id '" + o.id + "'");
        if (!s.find_asset(o.asset_id))
            throw SceneError("object '" + o.id + "' references unknown asset '" + o.asset_id + "'");
    }
}

// Corner k has local sign (bit0 -> x, bit1 -> y, bit2 -> z); a clear bit is -.
inline std::array<Vec3, 8> world_corners(const ObjectInstance& o) {
    const Mat3 r = o.rotation();
    const Vec3 h = o.scaled_half_extents();
    std::array<Vec3, 8> out;
    for (int k = 0; k < 8; ++k) {
        const Vec3 local{(k & 1) ? h.x : -h.x, (k & 2) ? h.y : -h.y, (k & 4) ? h.z : -h.z};
        out[static_cast<std::size_t>(k)] = o.position + r * local;
    }
    return out;
}

inline Aabb world_aabb(const ObjectInstance& o) {
    const auto c = world_corners(o);
    Aabb b{c[0], c[0]};
    for (const auto& p : c) {
        b.min = {std::min(b.min.x, p.x), std::min(b.min.y, p.y), std::min(b.min.z, p.z)};
        b.max = {std::max(b.max.x, p.x), std::max(b.max.y, p.y), std::max(b.max.z, p.z)};
    }
    return b;
}

// World position of a named anchor. "" and "center" mean the object origin;
// "top"/"bottom" default to the box faces when the asset does not declare them.
inline Vec3 world_anchor(const ObjectInstance& o, std::string_view name) {
    if (name.empty() || name == "center") return o.position;
    if (auto it = o.anchors.find(std::string(name)); it != o.anchors.end()) return o.to_world(it->second);
    if (name == "top") return o.to_world({0, o.half_extents.y, 0});
    if (name == "bottom") return o.to_world({0, -o.half_extents.y, 0});
    throw UnknownIdError(o.id + "." + std::string(name));
}

inline Vec3 world_front(const ObjectInstance& o) { return o.rotation() * o.front_axis; }

// Unit ground-plane front direction (x, z). Falls back to the yaw direction if
// the front axis is vertical.
inline std::array<double, 2> ground_front(const ObjectInstance& o) {
    const Vec3 f = world_front(o);
    const double len = std::hypot(f.x, f.z);
    if (len < kGeomEps) {
        const auto [c, s] = cos_sin_deg(o.orientation.yaw);
        return {s, c};
    }
    return {f.x / len, f.z / len};
}

// Unit ground-plane right direction: front rotated by +90 degrees of yaw.
inline std::array<double, 2> ground_right(const ObjectInstance& o) {
    const auto f = ground_front(o);
    return {f[1], -f[0]};
}

inline double front_yaw(const ObjectInstance& o) {
    const auto f = ground_front(o);
    return bearing_deg(f[0], f[1]);
}

inline std::string fmt_vec(Vec3 v, int precision = 9) {
    return "(" + fixed(v.x, precision) + "," + fixed(v.y, precision) + "," + fixed(v.z, precision) + ")";
}

// Line-oriented listing fed to judges; byte-identical for equal scenes.
inline std::string scene_snapshot_text(const Scene& scene) {
    std::string out = "# scene snapshot\n";
    out += "objects: " + std::to_string(scene.objects.size()) + "\n";
    out += "assets:";
    for (const auto& a : scene.catalog) out += " " + a.asset_id;
    out += "\n";
    for (const auto& o : scene.objects) {
        const Aabb b = world_aabb(o);
        out += "object id=" + o.id + " asset=" + o.asset_id + " position=" + fmt_vec(o.position) +
               " yaw=" + fixed(o.orientation.yaw, 9) + " aabb_min=" + fmt_vec(b.min) +
               " aabb_max=" + fmt_vec(b.max) + "\n";
    }
    return out;
}

}  // namespace ctxplace
