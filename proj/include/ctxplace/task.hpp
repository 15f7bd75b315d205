#pragma once

// Task definitions: declarative constraints, their compilation into energy
// specs, and the geometric success predicates checked independently of the
// energies.
//
// Task file (JSON):
//
//   {
//     "format": "ctxplace-task/1",
//     "id": "L1T1", "level": 1, "title": "Put a cup on the table.",
//     "scene": "scenes/L1T1.scene.json",
//     "instruction": { "verb": "put", "relation": "on", "related": ["table"],
//                      "text": "...",
//                      "targets": [ { "id": "cup", "asset": "cup",
//                                     "spawn": { "position": [..], "yaw": 0 } } ] },
//     "epsilon": 1e-6, "lambda_dist": 1, "clearance": 0,
//     "solve": { "restarts": 8, ... },
//     "spawn_jitter": { "position": 0.5, "yaw": 45 },
//     "constraints": [ { "kind": "rests_on", "subject": "cup", "related": "table",
//                        "anchor": "top_surface" }, ... ]
//   }
//
// Constraint kinds and their fields:
//   rests_on        subject, related (supporter), anchor, inset?, eps_z?
//   within          subject, related (container), anchor, region_half [x,y,z], inset?
//   near            subject, related, anchor?, max_distance?
//   facing          subject, related, anchor?, mode toward|away|same, tolerance, alpha
//   same_direction  participants (all face like the first), tolerance, alpha
//   side_of         subject, related, side left|right, margin
//   in_front_of     subject, related, anchor, min_distance, max_distance, max_lateral
//   ordered_row     participants, tolerance, margin
//   equal_spacing   participants, tolerance
//   mutual_facing   participants (focal first), tolerance
//   stack_order     participants (bottom first), tolerance
//   symmetric_pair  participants [a, b], related (axis object), tolerance
//   region          subject, related, rect [x0, x1, z0, z1]
//   no_overlap      participants
// Optional on every kind: "weight", and "term": "social"|"culture" for
// context kinds.

#include <set>

#include "optimizer.hpp"
#include "scene_io.hpp"

namespace ctxplace {

enum class ConstraintKind {
    rests_on,
    within,
    near,
    facing,
    same_direction,
    side_of,
    in_front_of,
    ordered_row,
    equal_spacing,
    mutual_facing,
    stack_order,
    symmetric_pair,
    region,
    no_overlap,
};

inline constexpr std::pair<ConstraintKind, const char*> kConstraintNames[] = {
    {ConstraintKind::rests_on, "rests_on"},
    {ConstraintKind::within, "within"},
    {ConstraintKind::near, "near"},
    {ConstraintKind::facing, "facing"},
    {ConstraintKind::same_direction, "same_direction"},
    {ConstraintKind::side_of, "side_of"},
    {ConstraintKind::in_front_of, "in_front_of"},
    {ConstraintKind::ordered_row, "ordered_row"},
    {ConstraintKind::equal_spacing, "equal_spacing"},
    {ConstraintKind::mutual_facing, "mutual_facing"},
    {ConstraintKind::stack_order, "stack_order"},
    {ConstraintKind::symmetric_pair, "symmetric_pair"},
    {ConstraintKind::region, "region"},
    {ConstraintKind::no_overlap, "no_overlap"},
};

inline const char* to_string(ConstraintKind k) {
    for (const auto& [kind, name] : kConstraintNames)
        if (kind == k) return name;
    return "?";
}

inline ConstraintKind constraint_kind_from_string(std::string_view s) {
    for (const auto& [kind, name] : kConstraintNames)
        if (s == name) return kind;
    throw SpecError("unknown constraint kind '" + std::string(s) + "'");
}

struct ConstraintSpec {
    ConstraintKind kind = ConstraintKind::rests_on;
    std::string subject;
    std::string related;
    std::vector<std::string> participants;
    std::string anchor;
    std::optional<double> inset;         // rests_on/within; unset = subject's footprint radius
    std::optional<double> eps_z;         // rests_on; unset = 1% of supporter height
    Vec3 region_half;                    // within
    std::optional<double> max_distance;  // near: unset = 1.5 x (sum of footprint radii); in_front_of: inf
    AffordanceMode mode = AffordanceMode::face_toward;
    double tolerance = -1.0;  // < 0: kind default
    double alpha = 1.0;
    Side side = Side::right;
    double margin = 0.0;
    double min_distance = 0.0;
    double max_lateral = kInf;
    std::array<double, 4> rect{0, 0, 0, 0};
    double weight = 1.0;
    std::optional<bool> culture_term;

    std::string label() const {
        std::string s = to_string(kind);
        s += "(";
        bool first = true;
        auto add = [&](const std::string& id) {
            if (id.empty()) return;
            if (!first) s += ",";
            s += id;
            first = false;
        };
        add(subject);
        for (const auto& p : participants) add(p);
        add(related);
        return s + ")";
    }
};

inline double default_tolerance(ConstraintKind k) {
    switch (k) {
        case ConstraintKind::facing:
        case ConstraintKind::same_direction:
        case ConstraintKind::mutual_facing: return 15.0;
        case ConstraintKind::equal_spacing:
        case ConstraintKind::ordered_row: return 1e-4;
        case ConstraintKind::stack_order: return 0.02;
        case ConstraintKind::symmetric_pair: return 0.05;
        default: return 0.0;
    }
}

// Every id a constraint touches; subject/mover first.
inline std::vector<std::string> constraint_ids(const ConstraintSpec& c) {
    std::vector<std::string> ids;
    if (!c.subject.empty()) ids.push_back(c.subject);
    for (const auto& p : c.participants) ids.push_back(p);
    if (!c.related.empty()) ids.push_back(c.related);
    return ids;
}

enum class Verb { put, move, arrange };

inline const char* to_string(Verb v) {
    switch (v) {
        case Verb::put: return "put";
        case Verb::move: return "move";
        case Verb::arrange: return "arrange";
    }
    return "?";
}

inline Verb verb_from_string(std::string_view s) {
    if (s == "put") return Verb::put;
    if (s == "move") return Verb::move;
    if (s == "arrange") return Verb::arrange;
    throw SpecError("unknown verb '" + std::string(s) + "'");
}

struct TargetSpec {
    std::string id;
    std::string asset;              // empty: object already in the scene
    std::optional<Transform> spawn;  // where a new object appears before solving
};

struct Instruction {
    Verb verb = Verb::put;
    std::vector<TargetSpec> targets;  // solve order
    std::string relation;
    std::vector<std::string> related;
    int level = 1;
    std::string text;
};

struct TaskDef {
    std::string id;
    int level = 1;
    std::string title;
    std::filesystem::path scene_path;
    Scene scene;
    Instruction instruction;
    std::vector<ConstraintSpec> constraints;
    double epsilon = 1e-6;
    double lambda_dist = 1.0;
    double clearance = 0.0;
    SolveConfig solve;
    double spawn_jitter = 0.5;      // per-trial spawn offset bound on x and z, meters
    double spawn_jitter_yaw = 45.0; // per-trial spawn yaw offset bound, degrees
};

struct CatalogEntry {
    std::string_view id;
    int level;
    std::string_view title;
};

inline constexpr CatalogEntry kTaskCatalog[] = {
    {"L1T1", 1, "Put a cup on the table."},
    {"L1T2", 1, "Put a person next to the desk."},
    {"L1T3", 1, "Put a pillow on the bed."},
    {"L2T1", 2, "Place a goldfish in a fishbowl."},
    {"L2T2", 2, "Place a chair next to the desk."},
    {"L2T3", 2, "Line up a group of people."},
    {"L3T1", 3, "Place a soccer goal and a goalkeeper on the field."},
    {"L3T2", 3, "Arrange tableware according to table manners."},
    {"L3T3", 3, "Arrange a classroom layout"},
    {"L4T1", 4, "Place a pair of KOMAINU statues at a Shinto shrine."},
    {"L4T2", 4, "Assemble a KAGAMI-MOCHI."},
    {"L4T3", 4, "Set up a HINA-MATSURI display."},
};

inline const CatalogEntry* find_catalog_entry(std::string_view id) {
    for (const auto& e : kTaskCatalog)
        if (e.id == id) return &e;
    return nullptr;
}

// ------------------------------------------------------------------ parsing

inline ConstraintSpec constraint_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind")) throw SpecError("constraint needs a kind");
    ConstraintSpec c;
    c.kind = constraint_kind_from_string(j["kind"].get<std::string>());
    const std::string what = std::string("constraint ") + to_string(c.kind);
    auto str = [&](const char* key) { return j.contains(key) ? j[key].get<std::string>() : std::string(); };
    c.subject = str("subject");
    c.related = str("related");
    if (c.related.empty()) c.related = str("supporter");
    if (c.related.empty()) c.related = str("container");
    if (c.related.empty()) c.related = str("axis");
    c.anchor = str("anchor");
    if (j.contains("participants")) c.participants = j["participants"].get<std::vector<std::string>>();
    if (j.contains("inset")) c.inset = j["inset"].get<double>();
    if (j.contains("eps_z")) c.eps_z = j["eps_z"].get<double>();
    if (j.contains("region_half")) c.region_half = vec3_from_json(j["region_half"], what + ".region_half");
    if (j.contains("max_distance")) c.max_distance = j["max_distance"].get<double>();
    if (j.contains("mode")) {
        const auto m = j["mode"].get<std::string>();
        if (m == "toward") c.mode = AffordanceMode::face_toward;
        else if (m == "away") c.mode = AffordanceMode::face_away;
        else if (m == "same") c.mode = AffordanceMode::face_same_direction;
        else throw SpecError(what + ": unknown facing mode '" + m + "'");
    }
    c.tolerance = j.value("tolerance", default_tolerance(c.kind));
    c.alpha = j.value("alpha", 1.0);
    if (j.contains("side")) {
        const auto s = j["side"].get<std::string>();
        if (s == "left") c.side = Side::left;
        else if (s == "right") c.side = Side::right;
        else throw SpecError(what + ": side must be left or right");
    }
    c.margin = j.value("margin", 0.0);
    c.min_distance = j.value("min_distance", 0.0);
    c.max_lateral = j.value("max_lateral", kInf);
    if (j.contains("rect")) {
        const auto r = j["rect"].get<std::vector<double>>();
        if (r.size() != 4 || r[0] > r[1] || r[2] > r[3]) throw SpecError(what + ": rect must be [x0, x1, z0, z1]");
        std::copy(r.begin(), r.end(), c.rect.begin());
    }
    c.weight = j.value("weight", 1.0);
    if (j.contains("term")) {
        const auto t = j["term"].get<std::string>();
        if (t != "social" && t != "culture") throw SpecError(what + ": term must be social or culture");
        c.culture_term = t == "culture";
    }
    if (!(c.weight > 0)) throw SpecError(what + ": weight must be positive");
    if (!(c.alpha > 0)) throw SpecError(what + ": alpha must be positive");
    return c;
}

inline json constraint_to_json(const ConstraintSpec& c) {
    json j;
    j["kind"] = to_string(c.kind);
    if (!c.subject.empty()) j["subject"] = c.subject;
    if (!c.participants.empty()) j["participants"] = c.participants;
    if (!c.related.empty()) j["related"] = c.related;
    if (!c.anchor.empty()) j["anchor"] = c.anchor;
    return j;
}

inline SolveConfig solve_config_from_json(const json& j, SolveConfig cfg = {}) {
    cfg.max_iterations = j.value("max_iterations", cfg.max_iterations);
    cfg.restarts = j.value("restarts", cfg.restarts);
    cfg.initial_step = j.value("initial_step", cfg.initial_step);
    cfg.step_decay = j.value("step_decay", cfg.step_decay);
    cfg.yaw_step_deg = j.value("yaw_step_deg", cfg.yaw_step_deg);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.target_epsilon = j.value("target_epsilon", cfg.target_epsilon);
    cfg.min_step = j.value("min_step", cfg.min_step);
    cfg.validate();
    return cfg;
}

inline Instruction instruction_from_json(const json& j) {
    Instruction in;
    in.verb = verb_from_string(j.value("verb", std::string("put")));
    in.relation = j.value("relation", std::string());
    if (j.contains("related")) in.related = j["related"].get<std::vector<std::string>>();
    in.text = j.value("text", std::string());
    in.level = j.value("level", 1);
    if (!j.contains("targets") || !j["targets"].is_array() || j["targets"].empty())
        throw SpecError("instruction needs at least one target");
    for (const auto& t : j["targets"]) {
        TargetSpec ts;
        ts.id = t.at("id").get<std::string>();
        ts.asset = t.value("asset", std::string());
        if (t.contains("spawn")) ts.spawn = transform_from_json(t["spawn"], "target '" + ts.id + "' spawn");
        in.targets.push_back(std::move(ts));
    }
    return in;
}

inline TaskDef task_from_json(const json& j, const std::filesystem::path& base_dir) {
    TaskDef t;
    if (!j.is_object()) throw SpecError("task document must be an object");
    t.id = j.at("id").get<std::string>();
    t.level = j.at("level").get<int>();
    t.title = j.at("title").get<std::string>();
    if (t.level < 1 || t.level > 4) throw SpecError(t.id + ": level must be 1-4");
    if (const auto* e = find_catalog_entry(t.id)) {
        if (e->level != t.level || e->title != t.title)
            throw SpecError(t.id + ": level/title do not match the task catalog");
    }
    if (j.contains("scene")) {
        t.scene_path = base_dir / j["scene"].get<std::string>();
        t.scene = load_scene_file(t.scene_path);
    } else {
        throw SpecError(t.id + ": task has no scene");
    }
    t.instruction = instruction_from_json(j.at("instruction"));
    t.instruction.level = t.level;
    if (t.instruction.text.empty()) t.instruction.text = t.title;
    t.epsilon = j.value("epsilon", t.epsilon);
    t.lambda_dist = j.value("lambda_dist", t.lambda_dist);
    t.clearance = j.value("clearance", t.clearance);
    if (!(t.epsilon > 0) || !(t.lambda_dist > 0) || !(t.clearance >= 0))
        throw SpecError(t.id + ": epsilon and lambda_dist must be positive, clearance non-negative");
    t.solve.target_epsilon = t.epsilon;
    if (j.contains("solve")) t.solve = solve_config_from_json(j["solve"], t.solve);
    if (j.contains("spawn_jitter")) {
        t.spawn_jitter = j["spawn_jitter"].value("position", t.spawn_jitter);
        t.spawn_jitter_yaw = j["spawn_jitter"].value("yaw", t.spawn_jitter_yaw);
        if (t.spawn_jitter < 0 || t.spawn_jitter_yaw < 0) throw SpecError(t.id + ": spawn_jitter must be non-negative");
    }
    for (const auto& c : j.at("constraints")) t.constraints.push_back(constraint_from_json(c));
    return t;
}

inline TaskDef load_task_file(const std::filesystem::path& p) {
    try {
        return task_from_json(parse_json_text(read_text_file(p), p.string()), p.parent_path());
    } catch (const json::exception& e) {
        throw SpecError(p.string() + ": " + e.what());
    }
}

inline std::filesystem::path task_file_path(const std::filesystem::path& tasks_dir, std::string_view id) {
    return tasks_dir / (std::string(id) + ".task.json");
}

inline TaskDef load_task(const std::filesystem::path& tasks_dir, std::string_view id) {
    if (!find_catalog_entry(id)) throw UnknownIdError(std::string(id));
    return load_task_file(task_file_path(tasks_dir, id));
}

inline std::vector<std::string> target_ids(const TaskDef& task) {
    std::vector<std::string> ids;
    for (const auto& t : task.instruction.targets) ids.push_back(t.id);
    return ids;
}

// Scene with every new target instantiated at its spawn transform.
inline Scene prepare_scene(const TaskDef& task) {
    Scene s = task.scene;
    for (const auto& t : task.instruction.targets) {
        if (s.find(t.id)) {
            if (t.spawn) s = s.with_transform(t.id, *t.spawn);
            continue;
        }
        if (t.asset.empty()) throw SpecError(task.id + ": target '" + t.id + "' is not in the scene and has no asset");
        s = s.with_object(instantiate(s.asset(t.asset), t.id, t.spawn.value_or(Transform{})));
    }
    return s;
}

// ---------------------------------------------------------------- compiling

struct CompiledConstraint {
    ConstraintSpec spec;  // with defaults resolved against the scene
    Problem part;         // this constraint's share of the task problem
};

struct CompiledTask {
    Problem problem;
    std::vector<CompiledConstraint> constraints;
};

namespace detail {

inline double world_half_height(const ObjectInstance& o) {
    const Aabb b = world_aabb(o);
    return 0.5 * (b.max.y - b.min.y);
}

inline double footprint_radius(const ObjectInstance& o) { return bounding_radius(footprint(o)); }

inline bool is_support(ConstraintKind k) { return k == ConstraintKind::rests_on || k == ConstraintKind::within; }

// Pairs linked by a chain of support constraints never collide with each other.
inline std::set<std::pair<std::string, std::string>> support_closure(const std::vector<ConstraintSpec>& cs) {
    std::map<std::string, std::string> parent;
    for (const auto& c : cs)
        if (is_support(c.kind)) parent[c.subject] = c.related;
    std::set<std::pair<std::string, std::string>> out;
    for (const auto& [child, _] : parent) {
        std::string cur = child;
        std::set<std::string> seen{child};
        while (parent.count(cur)) {
            cur = parent[cur];
            if (!seen.insert(cur).second) break;
            out.insert({child, cur});
            out.insert({cur, child});
        }
    }
    return out;
}

}  // namespace detail

inline CompiledConstraint compile_constraint(const Scene& scene, ConstraintSpec c) {
    const std::string what = c.label();
    auto need = [&](const std::string& id) -> const ObjectInstance& {
        if (id.empty()) throw SpecError(what + ": missing object id");
        return scene.at(id);
    };
    CompiledConstraint out;
    auto context = [&](ContextKind kind, std::vector<std::string> ids) {
        ContextSpec s;
        s.kind = kind;
        s.participants = std::move(ids);
        s.side = c.side;
        s.anchor = c.anchor;
        s.margin = c.margin;
        s.min_distance = c.min_distance;
        s.max_distance = c.max_distance.value_or(kInf);
        s.max_lateral = c.max_lateral;
        s.tolerance = c.tolerance;
        s.region = c.rect;
        s.weight = c.weight;
        for (const auto& id : s.participants) need(id);
        const bool culture = c.culture_term.value_or(is_culture_only(kind));
        if (!culture && is_culture_only(kind)) throw SpecError(what + ": cultural kind cannot be a social term");
        (culture ? out.part.culture : out.part.social).push_back(std::move(s));
    };

    switch (c.kind) {
        case ConstraintKind::rests_on: {
            const auto& sub = need(c.subject);
            const auto& sup = need(c.related);
            if (c.anchor.empty()) c.anchor = "top";
            world_anchor(sup, c.anchor);
            if (!c.inset) c.inset = detail::footprint_radius(sub);
            const Vec3 he = sup.scaled_half_extents();
            if (!c.eps_z) c.eps_z = 0.01 * 2.0 * he.y;
            const double sx = he.x - *c.inset, sz = he.z - *c.inset;
            if (sx < 0 || sz < 0) throw SpecError(what + ": '" + c.subject + "' does not fit on '" + c.related + "'");
            PairRelation r;
            r.subject_id = c.subject;
            r.related_id = c.related;
            r.related_anchor = c.anchor;
            r.frame = Frame::related;
            r.d_star = {0, detail::world_half_height(sub), 0};
            r.slack = {sx, *c.eps_z, sz};
            out.part.relations.push_back(r);
            break;
        }
        case ConstraintKind::within: {
            const auto& sub = need(c.subject);
            const auto& con = need(c.related);
            world_anchor(con, c.anchor);
            if (!c.inset) c.inset = detail::footprint_radius(sub);
            const Vec3 inset{*c.inset, detail::world_half_height(sub), *c.inset};
            const Vec3 slack = c.region_half - inset;
            if (slack.x < 0 || slack.y < 0 || slack.z < 0)
                throw SpecError(what + ": '" + c.subject + "' does not fit in '" + c.related + "'");
            PairRelation r;
            r.subject_id = c.subject;
            r.related_id = c.related;
            r.related_anchor = c.anchor;
            r.frame = Frame::related;
            r.slack = slack;
            out.part.relations.push_back(r);
            break;
        }
        case ConstraintKind::near: {
            const auto& sub = need(c.subject);
            const auto& rel = need(c.related);
            world_anchor(rel, c.anchor);
            if (!c.max_distance) c.max_distance = 1.5 * (detail::footprint_radius(sub) + detail::footprint_radius(rel));
            if (!(*c.max_distance > 0)) throw SpecError(what + ": max_distance must be positive");
            PairRelation r;
            r.subject_id = c.subject;
            r.related_id = c.related;
            r.related_anchor = c.anchor;
            r.free = {false, true, false};
            r.slack = {*c.max_distance, 0, *c.max_distance};
            r.radial = true;
            out.part.relations.push_back(r);
            break;
        }
        case ConstraintKind::facing: {
            need(c.subject);
            world_anchor(need(c.related), c.anchor);
            out.part.affordances.push_back({c.subject, c.related, c.anchor, c.mode, c.tolerance, c.alpha});
            break;
        }
        case ConstraintKind::same_direction: {
            if (c.participants.size() < 2) throw SpecError(what + ": needs at least 2 participants");
            for (std::size_t i = 1; i < c.participants.size(); ++i) {
                need(c.participants[i]);
                out.part.affordances.push_back({c.participants[i], c.participants[0], "",
                                                AffordanceMode::face_same_direction, c.tolerance, c.alpha});
            }
            need(c.participants[0]);
            break;
        }
        case ConstraintKind::side_of: context(ContextKind::side_of, {c.subject, c.related}); break;
        case ConstraintKind::in_front_of:
            world_anchor(need(c.related), c.anchor);
            context(ContextKind::in_front_of, {c.subject, c.related});
            break;
        case ConstraintKind::ordered_row: context(ContextKind::ordered_row, c.participants); break;
        case ConstraintKind::equal_spacing: context(ContextKind::equal_spacing, c.participants); break;
        case ConstraintKind::mutual_facing: context(ContextKind::mutual_facing, c.participants); break;
        case ConstraintKind::stack_order: context(ContextKind::stack_order, c.participants); break;
        case ConstraintKind::symmetric_pair: {
            if (c.participants.size() != 2) throw SpecError(what + ": needs participants [a, b]");
            context(ContextKind::symmetric_pair, {c.participants[0], c.participants[1], c.related});
            break;
        }
        case ConstraintKind::region: context(ContextKind::region_placement, {c.subject, c.related}); break;
        case ConstraintKind::no_overlap:
            for (const auto& id : c.participants) need(id);
            break;  // pairs are filled in by compile_task, which knows the support graph
    }
    out.spec = std::move(c);
    return out;
}

inline CompiledTask compile_task(const TaskDef& task, const Scene& scene) {
    CompiledTask ct;
    ct.problem.lambda_dist = task.lambda_dist;
    ct.problem.clearance = task.clearance;
    const auto supported = detail::support_closure(task.constraints);
    std::set<std::pair<std::string, std::string>> used;
    for (const auto& c : task.constraints) {
        CompiledConstraint cc = compile_constraint(scene, c);
        cc.part.lambda_dist = task.lambda_dist;
        cc.part.clearance = task.clearance;
        if (c.kind == ConstraintKind::no_overlap) {
            const auto& ids = c.participants;
            for (std::size_t i = 0; i < ids.size(); ++i)
                for (std::size_t j = i + 1; j < ids.size(); ++j) {
                    if (ids[i] == ids[j]) throw SpecError(c.label() + ": duplicate participant '" + ids[i] + "'");
                    const auto key = std::minmax(ids[i], ids[j]);
                    if (supported.count({ids[i], ids[j]}) || !used.insert({key.first, key.second}).second) continue;
                    cc.part.collision_pairs.emplace_back(ids[i], ids[j]);
                }
        }
        auto append = [](auto& dst, const auto& src) { dst.insert(dst.end(), src.begin(), src.end()); };
        append(ct.problem.collision_pairs, cc.part.collision_pairs);
        append(ct.problem.relations, cc.part.relations);
        append(ct.problem.affordances, cc.part.affordances);
        append(ct.problem.social, cc.part.social);
        append(ct.problem.culture, cc.part.culture);
        ct.constraints.push_back(std::move(cc));
    }
    validate_problem(scene, ct.problem);
    return ct;
}

// Keeps only the specs whose objects are all in `placed`.
inline Problem restrict_problem(const Problem& p, const std::set<std::string>& placed) {
    auto in = [&](const std::string& id) { return placed.count(id) > 0; };
    Problem out;
    out.lambda_dist = p.lambda_dist;
    out.clearance = p.clearance;
    for (const auto& c : p.collision_pairs)
        if (in(c.first) && in(c.second)) out.collision_pairs.push_back(c);
    for (const auto& r : p.relations)
        if (in(r.subject_id) && in(r.related_id)) out.relations.push_back(r);
    for (const auto& a : p.affordances)
        if (in(a.subject_id) && in(a.related_id)) out.affordances.push_back(a);
    auto all_in = [&](const ContextSpec& s) { return std::all_of(s.participants.begin(), s.participants.end(), in); };
    for (const auto& s : p.social)
        if (all_in(s)) out.social.push_back(s);
    for (const auto& s : p.culture)
        if (all_in(s)) out.culture.push_back(s);
    return out;
}

// --------------------------------------------------------------- predicates

// Geometric checks computed directly from object poses (no energy code), so
// agreement between these and the energies is a meaningful test.

inline constexpr double kPredicateTol = 1e-9;

struct ConstraintCheck {
    std::size_t index = 0;
    ConstraintKind kind = ConstraintKind::rests_on;
    bool ok = true;
    double excess = 0.0;  // how far outside the allowed set, in the check's units
    std::string detail;
};

struct SuccessReport {
    bool ok = false;
    std::vector<ConstraintCheck> checks;
    std::string reason;
};

namespace detail {

// Object axes recovered from its world corners.
struct BoxFrame {
    Vec3 origin, ax, ay, az;
    Vec3 local(Vec3 p) const {
        const Vec3 d = p - origin;
        return {dot(d, ax), dot(d, ay), dot(d, az)};
    }
};

inline Vec3 unit(Vec3 v) { return (1.0 / norm(v)) * v; }

inline BoxFrame box_frame(const ObjectInstance& o, Vec3 origin) {
    const auto c = world_corners(o);
    return {origin, unit(c[1] - c[0]), unit(c[2] - c[0]), unit(c[4] - c[0])};
}

inline double heading(const ObjectInstance& o) {
    const Vec3 f = world_front(o);
    return bearing_deg(f.x, f.z);
}

// Signed lateral (right) and forward offsets of p from origin, in o's heading.
inline std::pair<double, double> lateral_forward(const ObjectInstance& o, Vec3 p, Vec3 origin) {
    const double h = deg2rad(heading(o));
    const double dx = p.x - origin.x, dz = p.z - origin.z;
    return {dx * std::cos(h) - dz * std::sin(h), dx * std::sin(h) + dz * std::cos(h)};
}

inline double facing_error(const ObjectInstance& o, double dx, double dz) {
    if (std::hypot(dx, dz) < kGeomEps) return 0.0;
    return std::abs(wrap180(bearing_deg(dx, dz) - heading(o)));
}

inline double band_excess(double v, double lo, double hi) { return std::max({0.0, lo - v, v - hi}); }

inline double gap_variance(const Scene& scene, const std::vector<std::string>& ids) {
    double s = 0, s2 = 0;
    const auto n = static_cast<double>(ids.size() - 1);
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
        const Vec3 a = scene.at(ids[i]).position, b = scene.at(ids[i + 1]).position;
        const double g = std::hypot(b.x - a.x, b.z - a.z);
        s += g;
        s2 += g * g;
    }
    return std::max(0.0, s2 / n - (s / n) * (s / n));
}

}  // namespace detail

inline ConstraintCheck check_constraint(const Scene& scene, const ConstraintSpec& c, double clearance) {
    using namespace detail;
    ConstraintCheck out;
    out.kind = c.kind;
    auto fail_if = [&](double excess, std::string detail_text) {
        if (excess > kPredicateTol && excess > out.excess) {
            out.ok = false;
            out.excess = excess;
            out.detail = std::move(detail_text);
        }
    };
    switch (c.kind) {
        case ConstraintKind::rests_on: {
            const auto& sub = scene.at(c.subject);
            const auto& sup = scene.at(c.related);
            const Vec3 anchor = world_anchor(sup, c.anchor);
            const Vec3 he = sup.scaled_half_extents();
            const Vec3 l = box_frame(sup, anchor).local(sub.position);
            fail_if(std::abs(l.x) - (he.x - *c.inset), "outside support surface (x)");
            fail_if(std::abs(l.z) - (he.z - *c.inset), "outside support surface (z)");
            const double gap = world_aabb(sub).min.y - anchor.y;
            fail_if(gap - *c.eps_z, "floating " + fixed(gap, 6) + " above surface");
            fail_if(-gap - *c.eps_z, "sunk " + fixed(-gap, 6) + " into surface");
            break;
        }
        case ConstraintKind::within: {
            const auto& sub = scene.at(c.subject);
            const auto& con = scene.at(c.related);
            const Vec3 l = box_frame(con, world_anchor(con, c.anchor)).local(sub.position);
            const double hh = world_half_height(sub);
            fail_if(std::abs(l.x) - (c.region_half.x - *c.inset), "outside container (x)");
            fail_if(std::abs(l.y) - (c.region_half.y - hh), "outside container (y)");
            fail_if(std::abs(l.z) - (c.region_half.z - *c.inset), "outside container (z)");
            break;
        }
        case ConstraintKind::near: {
            const Vec3 a = scene.at(c.subject).position;
            const Vec3 b = world_anchor(scene.at(c.related), c.anchor);
            const double d = std::hypot(a.x - b.x, a.z - b.z);
            fail_if(d - *c.max_distance, "too far: " + fixed(d, 6) + " m");
            break;
        }
        case ConstraintKind::facing: {
            const auto& sub = scene.at(c.subject);
            const auto& rel = scene.at(c.related);
            double err = 0;
            if (c.mode == AffordanceMode::face_same_direction) {
                err = std::abs(wrap180(heading(rel) - heading(sub)));
            } else {
                const Vec3 t = world_anchor(rel, c.anchor);
                const double sgn = c.mode == AffordanceMode::face_toward ? 1.0 : -1.0;
                err = facing_error(sub, sgn * (t.x - sub.position.x), sgn * (t.z - sub.position.z));
            }
            fail_if(err - c.tolerance, "misaligned by " + fixed(err, 3) + " deg");
            break;
        }
        case ConstraintKind::same_direction: {
            const double h0 = heading(scene.at(c.participants[0]));
            for (std::size_t i = 1; i < c.participants.size(); ++i) {
                const double err = std::abs(wrap180(h0 - heading(scene.at(c.participants[i]))));
                fail_if(err - c.tolerance, c.participants[i] + " misaligned by " + fixed(err, 3) + " deg");
            }
            break;
        }
        case ConstraintKind::side_of: {
            const auto& rel = scene.at(c.related);
            const double lat = lateral_forward(rel, scene.at(c.subject).position, rel.position).first;
            const double sgn = c.side == Side::right ? 1.0 : -1.0;
            fail_if(c.margin - sgn * lat, std::string("not on the ") + (c.side == Side::right ? "right" : "left"));
            break;
        }
        case ConstraintKind::in_front_of: {
            const auto& rel = scene.at(c.related);
            const auto [lat, fwd] = lateral_forward(rel, scene.at(c.subject).position, world_anchor(rel, c.anchor));
            fail_if(band_excess(fwd, c.min_distance, c.max_distance.value_or(kInf)), "not in front");
            fail_if(std::abs(lat) - c.max_lateral, "too far to the side");
            break;
        }
        case ConstraintKind::ordered_row:
        case ConstraintKind::equal_spacing: {
            fail_if(gap_variance(scene, c.participants) - c.tolerance, "uneven spacing");
            if (c.kind == ConstraintKind::ordered_row) {
                const Vec3 a = scene.at(c.participants.front()).position;
                const Vec3 b = scene.at(c.participants.back()).position;
                const double len = std::hypot(b.x - a.x, b.z - a.z);
                for (std::size_t i = 1; i + 1 < c.participants.size(); ++i) {
                    const Vec3 p = scene.at(c.participants[i]).position;
                    const double off = len < kGeomEps ? std::hypot(p.x - a.x, p.z - a.z)
                                                      : std::abs((b.x - a.x) * (p.z - a.z) - (b.z - a.z) * (p.x - a.x)) / len;
                    fail_if(off - c.margin, c.participants[i] + " off the row line");
                }
            }
            break;
        }
        case ConstraintKind::mutual_facing: {
            const auto& focal = scene.at(c.participants[0]);
            double cx = 0, cz = 0;
            for (std::size_t i = 1; i < c.participants.size(); ++i) {
                cx += scene.at(c.participants[i]).position.x;
                cz += scene.at(c.participants[i]).position.z;
            }
            const double n = static_cast<double>(c.participants.size() - 1);
            fail_if(facing_error(focal, cx / n - focal.position.x, cz / n - focal.position.z) - c.tolerance,
                    focal.id + " does not face the group");
            for (std::size_t i = 1; i < c.participants.size(); ++i) {
                const auto& o = scene.at(c.participants[i]);
                fail_if(facing_error(o, focal.position.x - o.position.x, focal.position.z - o.position.z) - c.tolerance,
                        o.id + " does not face " + focal.id);
            }
            break;
        }
        case ConstraintKind::stack_order: {
            for (std::size_t i = 0; i + 1 < c.participants.size(); ++i) {
                const Vec3 lo = scene.at(c.participants[i]).position;
                const Vec3 hi = scene.at(c.participants[i + 1]).position;
                if (!(hi.y > lo.y)) fail_if(1.0, c.participants[i + 1] + " is not above " + c.participants[i]);
                fail_if(std::hypot(hi.x - lo.x, hi.z - lo.z) - c.tolerance, c.participants[i + 1] + " off-center");
            }
            break;
        }
        case ConstraintKind::symmetric_pair: {
            const Vec3 a = scene.at(c.participants[0]).position;
            const Vec3 b = scene.at(c.participants[1]).position;
            const auto& axis = scene.at(c.related);
            const double h = deg2rad(heading(axis));
            const double fx = std::sin(h), fz = std::cos(h);
            const double dx = a.x - axis.position.x, dz = a.z - axis.position.z;
            const double along = dx * fx + dz * fz;
            const double mx = axis.position.x + 2 * along * fx - dx, mz = axis.position.z + 2 * along * fz - dz;
            const double res = std::sqrt((mx - b.x) * (mx - b.x) + (mz - b.z) * (mz - b.z) + (a.y - b.y) * (a.y - b.y));
            fail_if(res - c.tolerance, "asymmetric by " + fixed(res, 6) + " m");
            break;
        }
        case ConstraintKind::region: {
            const auto& rel = scene.at(c.related);
            const auto [lat, fwd] = lateral_forward(rel, scene.at(c.subject).position, rel.position);
            const double ex = band_excess(lat, c.rect[0], c.rect[1]), ez = band_excess(fwd, c.rect[2], c.rect[3]);
            fail_if(std::hypot(ex, ez), "outside its region");
            break;
        }
        case ConstraintKind::no_overlap: {
            const auto& ids = c.participants;
            for (std::size_t i = 0; i < ids.size(); ++i)
                for (std::size_t j = i + 1; j < ids.size(); ++j) {
                    const auto pa = dilate(footprint(scene.at(ids[i])), clearance);
                    const auto pb = dilate(footprint(scene.at(ids[j])), clearance);
                    if (!separated(pa, pb)) fail_if(1.0, ids[i] + " overlaps " + ids[j]);
                }
            break;
        }
    }
    return out;
}

// The task's success predicate: every constraint's check holds.
inline SuccessReport success_report(const Scene& scene, const TaskDef& task) {
    SuccessReport rep;
    for (const auto& t : task.instruction.targets)
        if (!scene.find(t.id)) {
            rep.reason = "missing object '" + t.id + "'";
            return rep;
        }
    CompiledTask ct;
    try {
        ct = compile_task(task, scene);
    } catch (const UnknownIdError& e) {
        rep.reason = std::string("missing object: ") + e.what();
        return rep;
    }
    const auto supported = detail::support_closure(task.constraints);
    rep.ok = true;
    for (std::size_t i = 0; i < ct.constraints.size(); ++i) {
        ConstraintSpec spec = ct.constraints[i].spec;
        ConstraintCheck chk;
        if (spec.kind == ConstraintKind::no_overlap) {
            // support-linked pairs are allowed to overlap in plan view
            chk.kind = spec.kind;
            const auto ids = spec.participants;
            for (std::size_t a = 0; a < ids.size() && chk.ok; ++a)
                for (std::size_t b = a + 1; b < ids.size() && chk.ok; ++b) {
                    if (supported.count({ids[a], ids[b]})) continue;
                    spec.participants = {ids[a], ids[b]};
                    chk = check_constraint(scene, spec, task.clearance);
                }
        } else {
            chk = check_constraint(scene, spec, task.clearance);
        }
        chk.index = i;
        if (!chk.ok && rep.ok) {
            rep.ok = false;
            rep.reason = ct.constraints[i].spec.label() + ": " + chk.detail;
        }
        rep.checks.push_back(std::move(chk));
    }
    return rep;
}

inline bool success(const Scene& scene, const TaskDef& task) { return success_report(scene, task).ok; }

}  // namespace ctxplace
