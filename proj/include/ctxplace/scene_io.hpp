#pragma once

// Scene and catalog files.
//
// A scene file is a JSON document:
//
//   {
//     "format": "ctxplace-scene/1",
//     "catalog": [ asset, ... ]   or   "catalog": "relative/path/catalog.json",
//     "objects": [ object, ... ]
//   }
//
//   asset  = { "asset_id": "table", "half_extents": [x,y,z], "front_axis": [x,y,z],
//              "anchors": { "top_surface": [x,y,z] }, "tags": ["furniture"] }
//   object = { "id": "table", "asset_id": "table", "position": [x,y,z],
//              "orientation": [yaw, pitch, roll], "scale": [sx,sy,sz],
//              "half_extents": ..., "front_axis": ..., "anchors": ... }
//
// On objects, everything except id/asset_id/position is optional; missing
// geometry fields are copied from the asset. A catalog file is either a bare
// array of assets or an object with a "catalog" array. Reals are written in
// shortest round-trip form, so save -> load reproduces every field exactly.

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "scene.hpp"

namespace ctxplace {

using json = nlohmann::ordered_json;

inline json to_json(Vec3 v) { return json::array({v.x, v.y, v.z}); }

inline Vec3 vec3_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3) throw SceneError(what + ": expected [x, y, z]");
    for (const auto& e : j)
        if (!e.is_number()) throw SceneError(what + ": expected numbers");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json anchors_to_json(const std::map<std::string, Vec3>& anchors) {
    json j = json::object();
    for (const auto& [k, v] : anchors) j[k] = to_json(v);
    return j;
}

inline std::map<std::string, Vec3> anchors_from_json(const json& j, const std::string& what) {
    std::map<std::string, Vec3> out;
    if (!j.is_object()) throw SceneError(what + ": anchors must be an object");
    for (const auto& [k, v] : j.items()) out[k] = vec3_from_json(v, what + ".anchors." + k);
    return out;
}

inline json to_json(const AssetRecord& a) {
    json j;
    j["asset_id"] = a.asset_id;
    j["half_extents"] = to_json(a.half_extents);
    j["front_axis"] = to_json(a.front_axis);
    j["anchors"] = anchors_to_json(a.anchors);
    j["tags"] = a.tags;
    return j;
}

inline AssetRecord asset_from_json(const json& j) {
    AssetRecord a;
    if (!j.contains("asset_id")) throw SceneError("asset without asset_id");
    a.asset_id = j.at("asset_id").get<std::string>();
    const std::string what = "asset '" + a.asset_id + "'";
    if (j.contains("half_extents")) a.half_extents = vec3_from_json(j["half_extents"], what + ".half_extents");
    if (j.contains("front_axis")) a.front_axis = vec3_from_json(j["front_axis"], what + ".front_axis");
    if (j.contains("anchors")) a.anchors = anchors_from_json(j["anchors"], what);
    if (j.contains("tags")) a.tags = j["tags"].get<std::vector<std::string>>();
    return a;
}

inline json to_json(const Orientation& o) { return json::array({o.yaw, o.pitch, o.roll}); }

inline Orientation orientation_from_json(const json& j, const std::string& what) {
    if (j.is_number()) return Orientation{j.get<double>(), 0, 0}.normalized();
    if (j.is_object())
        return Orientation{j.value("yaw", 0.0), j.value("pitch", 0.0), j.value("roll", 0.0)}.normalized();
    if (j.is_array() && j.size() == 3)
        return Orientation{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()}.normalized();
    throw SceneError(what + ": orientation must be [yaw, pitch, roll], {yaw,...} or a yaw number");
}

inline json to_json(const ObjectInstance& o) {
    json j;
    j["id"] = o.id;
    j["asset_id"] = o.asset_id;
    j["position"] = to_json(o.position);
    j["orientation"] = to_json(o.orientation);
    j["scale"] = json::array({o.scale.sx, o.scale.sy, o.scale.sz});
    j["half_extents"] = to_json(o.half_extents);
    j["front_axis"] = to_json(o.front_axis);
    j["anchors"] = anchors_to_json(o.anchors);
    return j;
}

inline Transform transform_from_json(const json& j, const std::string& what) {
    Transform t;
    if (j.contains("position")) t.position = vec3_from_json(j["position"], what + ".position");
    if (j.contains("orientation")) t.orientation = orientation_from_json(j["orientation"], what);
    else if (j.contains("yaw")) t.orientation = Orientation{j["yaw"].get<double>(), 0, 0}.normalized();
    return t;
}

inline json to_json(const Transform& t) {
    return json{{"position", to_json(t.position)}, {"orientation", to_json(t.orientation)}};
}

inline ObjectInstance object_from_json(const json& j, const std::vector<AssetRecord>& catalog) {
    if (!j.contains("id") || !j.contains("asset_id")) throw SceneError("object needs id and asset_id");
    const std::string id = j["id"].get<std::string>();
    const std::string asset_id = j["asset_id"].get<std::string>();
    const std::string what = "object '" + id + "'";
    const AssetRecord* asset = nullptr;
    for (const auto& a : catalog)
        if (a.asset_id == asset_id) asset = &a;
    if (!asset) throw SceneError(what + " references unknown asset '" + asset_id + "'");

    ObjectInstance o = instantiate(*asset, id, transform_from_json(j, what));
    if (j.contains("scale")) {
        const Vec3 s = vec3_from_json(j["scale"], what + ".scale");
        o.scale = {s.x, s.y, s.z};
    }
    if (j.contains("half_extents")) o.half_extents = vec3_from_json(j["half_extents"], what + ".half_extents");
    if (j.contains("front_axis")) o.front_axis = vec3_from_json(j["front_axis"], what + ".front_axis");
    if (j.contains("anchors")) o.anchors = anchors_from_json(j["anchors"], what);
    return o;
}

inline json to_json(const Scene& s) {
    json j;
    j["format"] = "ctxplace-scene/1";
    j["catalog"] = json::array();
    for (const auto& a : s.catalog) j["catalog"].push_back(to_json(a));
    j["objects"] = json::array();
    for (const auto& o : s.objects) j["objects"].push_back(to_json(o));
    return j;
}

inline std::string read_text_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot open '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::filesystem::path& p, std::string_view text) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + p.string() + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

inline json parse_json_text(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw SceneError(what + ": " + e.what());
    }
}

inline std::vector<AssetRecord> catalog_from_json(const json& j) {
    const json& arr = j.is_object() && j.contains("catalog") ? j["catalog"] : j;
    if (!arr.is_array()) throw SceneError("catalog must be an array of assets");
    std::vector<AssetRecord> out;
    for (const auto& a : arr) out.push_back(asset_from_json(a));
    return out;
}

// base_dir resolves a catalog given by path.
inline Scene scene_from_json(const json& j, const std::filesystem::path& base_dir = {}) {
    Scene s;
    if (!j.is_object()) throw SceneError("scene document must be an object");
    if (j.contains("catalog")) {
        const json& c = j["catalog"];
        if (c.is_string()) {
            const auto path = base_dir / c.get<std::string>();
            s.catalog = catalog_from_json(parse_json_text(read_text_file(path), path.string()));
        } else {
            s.catalog = catalog_from_json(c);
        }
    }
    if (j.contains("objects"))
        for (const auto& o : j["objects"]) s.objects.push_back(object_from_json(o, s.catalog));
    validate(s);
    return s;
}

inline std::string scene_to_text(const Scene& s) { return to_json(s).dump(2) + "\n"; }

inline Scene load_scene_file(const std::filesystem::path& p) {
    return scene_from_json(parse_json_text(read_text_file(p), p.string()), p.parent_path());
}

inline void save_scene_file(const std::filesystem::path& p, const Scene& s) { write_text_file(p, scene_to_text(s)); }

}  // namespace ctxplace
