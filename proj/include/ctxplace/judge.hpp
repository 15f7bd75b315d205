#pragma once

// Judges decide whether a placement is acceptable and say how to fix it.
// RuleJudge does this from the task's constraints alone.

#include "task.hpp"

namespace ctxplace {

enum class ViolationCode { collision, distance, orientation, side, order, stacking, floating, region };

inline constexpr std::pair<ViolationCode, const char*> kViolationNames[] = {
    {ViolationCode::collision, "collision"}, {ViolationCode::distance, "distance"},
    {ViolationCode::orientation, "orientation"}, {ViolationCode::side, "side"},
    {ViolationCode::order, "order"}, {ViolationCode::stacking, "stacking"},
    {ViolationCode::floating, "floating"}, {ViolationCode::region, "region"},
};

inline const char* to_string(ViolationCode c) {
    for (const auto& [code, name] : kViolationNames)
        if (code == c) return name;
    return "?";
}

inline std::optional<ViolationCode> violation_code_from_string(std::string_view s) {
    for (const auto& [code, name] : kViolationNames)
        if (s == name) return code;
    return std::nullopt;
}

struct Violation {
    ViolationCode code = ViolationCode::distance;
    std::vector<std::string> subjects;  // subjects[0] is the object the correction moves
    double magnitude = 0.0;
    std::optional<Correction> suggested_delta;

    friend bool operator==(const Violation&, const Violation&) = default;
};

struct Verdict {
    bool pass = false;
    std::vector<Violation> violations;
    EnergyBreakdown energy;

    friend bool operator==(const Verdict&, const Verdict&) = default;
};

inline json to_json(const Correction& c) {
    return json{{"translation", to_json(c.translation)}, {"yaw", c.yaw_delta}};
}

inline json to_json(const Violation& v) {
    json j;
    j["code"] = to_string(v.code);
    j["subjects"] = v.subjects;
    j["magnitude"] = v.magnitude;
    if (v.suggested_delta) j["suggested_delta"] = to_json(*v.suggested_delta);
    return j;
}

inline json to_json(const EnergyBreakdown& e) {
    return json{{"collision", e.e_collision}, {"distance", e.e_distance}, {"affordance", e.e_affordance},
                {"social", e.e_social},       {"culture", e.e_culture},   {"total", e.total}};
}

inline json to_json(const Verdict& v) {
    json j;
    j["pass"] = v.pass;
    j["violations"] = json::array();
    for (const auto& x : v.violations) j["violations"].push_back(to_json(x));
    j["energy"] = to_json(v.energy);
    return j;
}

class Judge {
public:
    virtual ~Judge() = default;
    virtual Verdict judge(const Scene& scene, const TaskDef& task, const std::string& target_id) = 0;
};

namespace detail {

inline Vec3 ground_vec(double x, double z) { return {x, 0, z}; }

// Pull the non-free components of a relation residual halfway into the slack
// band (radial relations: onto half the allowed radius). Vertical components
// go to exact contact.
inline Vec3 relation_fix(const PairRelation& rel, Vec3 r) {
    Vec3 target = r;
    for (int k = 0; k < 3; ++k) {
        if (rel.free[static_cast<std::size_t>(k)]) continue;
        const double lim = k == 1 ? 0.0 : 0.5 * rel.slack[k];
        if (std::abs(r[k]) > rel.slack[k]) target[k] = std::clamp(r[k], -lim, lim);
    }
    if (rel.radial && !rel.free[0] && !rel.free[2]) {
        const double h = std::hypot(r.x, r.z);
        target.x = r.x, target.z = r.z;
        if (h > rel.slack.x) {
            target.x = r.x * 0.5 * rel.slack.x / h;
            target.z = r.z * 0.5 * rel.slack.x / h;
        }
    }
    return target - r;
}

// Smallest push of `mover` directly away from `other` that clears the pair.
inline Vec3 separation_push(const Scene& scene, const std::string& mover, const std::string& other, double clearance) {
    const auto& m = scene.at(mover);
    const auto& o = scene.at(other);
    const auto pm = dilate(footprint(m), clearance);
    const auto po = dilate(footprint(o), clearance);
    Point2 dir = footprint_center(pm) - footprint_center(po);
    if (length(dir) < kGeomEps) dir = {1, 0};
    dir = (1.0 / length(dir)) * dir;
    double lo = 0, hi = bounding_radius(pm) + bounding_radius(po) + length(footprint_center(pm) - footprint_center(po));
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (intersection_area(pm.translated(mid * dir), po) > 0) lo = mid;
        else hi = mid;
    }
    // a little past contact so the footprints are strictly apart
    const double d = hi * 1.02 + 1e-4;
    return ground_vec(d * dir.x, d * dir.z);
}

inline double signed_turn(double from_heading, Point2 dir) {
    if (length(dir) < kGeomEps) return 0.0;
    return wrap180(bearing_deg(dir.x, dir.z) - from_heading);
}

inline std::string pick_mover(const std::vector<std::string>& ids, const std::string& target) {
    for (const auto& id : ids)
        if (id == target) return id;
    return ids.empty() ? target : ids.front();
}

inline std::vector<std::string> mover_first(std::vector<std::string> ids, const std::string& mover) {
    auto it = std::find(ids.begin(), ids.end(), mover);
    if (it != ids.end()) std::rotate(ids.begin(), it, it + 1);
    return ids;
}

inline void violations_for(const Scene& scene, const CompiledConstraint& cc, const std::string& target,
                              double clearance, std::vector<Violation>& out) {
    const auto& c = cc.spec;
    const EnergyBreakdown e = total_energy(scene, cc.part);
    if (!(e.total > 0.0)) return;
    const auto ids = constraint_ids(c);
    const std::string mover = pick_mover(ids, target);

    Violation v;
    v.subjects = mover_first(ids, mover);
    v.magnitude = e.total;

    switch (c.kind) {
        case ConstraintKind::rests_on:
        case ConstraintKind::within:
        case ConstraintKind::near: {
            const auto& rel = cc.part.relations.front();
            const Vec3 r = relation_residual(scene, rel);
            const Vec3 ex = relation_excess(rel, r);
            const double horiz = std::hypot(ex.x, ex.z);
            const Mat3 rot = rel.frame == Frame::world ? Mat3{} : yaw_matrix(scene.at(rel.related_id).orientation.yaw);
            if (std::abs(ex.y) > 0 && std::abs(ex.y) >= horiz) {
                v.code = ex.y > 0 ? ViolationCode::floating : ViolationCode::stacking;
                v.magnitude = std::abs(r.y);
            } else {
                v.code = ViolationCode::distance;
                v.magnitude = horiz;
            }
            Vec3 fix = rot * relation_fix(rel, r);
            if (mover != rel.subject_id) fix = -1.0 * fix;
            v.suggested_delta = Correction{fix, 0.0};
            break;
        }
        case ConstraintKind::facing:
        case ConstraintKind::same_direction:
        case ConstraintKind::mutual_facing: {
            v.code = ViolationCode::orientation;
            double best = -1;
            bool best_moves = false;
            // worst-aligned requirement, preferring ones the mover can fix by turning
            for (const auto& a : cc.part.affordances) {
                const double ex = affordance_misalignment(scene, a) - a.tolerance_deg;
                const bool moves = a.subject_id == mover;
                if (ex <= 0 || (best_moves && !moves) || (best_moves == moves && ex <= best)) continue;
                best = ex;
                best_moves = moves;
                v.subjects = mover_first({a.subject_id, a.related_id}, a.subject_id);
                const auto& s = scene.at(a.subject_id);
                v.suggested_delta = Correction{{}, signed_turn(front_yaw(s), affordance_direction(scene, a))};
            }
            if (c.kind == ConstraintKind::mutual_facing) {
                const auto& ids_ = c.participants;
                const auto& focal = scene.at(ids_[0]);
                const auto& s = scene.at(mover);
                if (mover == focal.id) {
                    Point2 centroid;
                    for (std::size_t i = 1; i < ids_.size(); ++i) centroid = centroid + ground(scene.at(ids_[i]).position);
                    centroid = (1.0 / static_cast<double>(ids_.size() - 1)) * centroid;
                    v.suggested_delta = Correction{{}, signed_turn(front_yaw(s), centroid - ground(s.position))};
                } else {
                    // the focal object is fixed here: slide this participant so the
                    // group centroid lands on the focal's front ray, then face it
                    const double n = static_cast<double>(ids_.size() - 1);
                    Point2 centroid;
                    for (std::size_t i = 1; i < ids_.size(); ++i) centroid = centroid + ground(scene.at(ids_[i]).position);
                    centroid = (1.0 / n) * centroid;
                    const Point2 fp = ground(focal.position);
                    const auto f = ground_front(focal);
                    const Point2 g{f[0], f[1]};
                    Point2 shift;
                    if (std::abs(signed_turn(front_yaw(focal), centroid - fp)) > c.tolerance) {
                        const double along = std::max(dot(centroid - fp, g), 1e-3);
                        shift = n * (fp + along * g - centroid);
                    }
                    const Point2 moved = ground(s.position) + shift;
                    v.suggested_delta = Correction{ground_vec(shift.x, shift.z), signed_turn(front_yaw(s), fp - moved)};
                }
                best = context_violation(scene, cc.part.social.empty() ? cc.part.culture.front() : cc.part.social.front());
            }
            v.magnitude = best > 0 ? best : e.total;
            break;
        }
        case ConstraintKind::side_of: {
            v.code = ViolationCode::side;
            const auto& rel = scene.at(c.related);
            const auto& sub = scene.at(c.subject);
            const Point2 off = local_ground_offset(rel, ground(sub.position), ground(rel.position));
            const double sgn = c.side == Side::right ? 1.0 : -1.0;
            const double want = sgn * std::max({std::abs(off.x), c.margin * 1.25, 1e-3});
            const auto r = ground_right(rel);
            Vec3 fix = ground_vec((want - off.x) * r[0], (want - off.x) * r[1]);
            if (mover != c.subject) fix = -1.0 * fix;
            v.magnitude = std::max(0.0, c.margin - sgn * off.x);
            v.suggested_delta = Correction{fix, 0.0};
            break;
        }
        case ConstraintKind::in_front_of:
        case ConstraintKind::region: {
            v.code = ViolationCode::region;
            const auto& rel = scene.at(c.related);
            const auto& sub = scene.at(c.subject);
            const Vec3 origin = c.kind == ConstraintKind::region ? rel.position : world_anchor(rel, c.anchor);
            const Point2 off = local_ground_offset(rel, ground(sub.position), ground(origin));
            Point2 want = off;
            if (c.kind == ConstraintKind::region) {
                const double cx = 0.5 * (c.rect[0] + c.rect[1]), cz = 0.5 * (c.rect[2] + c.rect[3]);
                want = {std::clamp(off.x, 0.5 * (c.rect[0] + cx), 0.5 * (c.rect[1] + cx)),
                        std::clamp(off.z, 0.5 * (c.rect[2] + cz), 0.5 * (c.rect[3] + cz))};
            } else {
                const double hi = std::isfinite(c.max_distance.value_or(kInf)) ? *c.max_distance : c.min_distance + 1.0;
                want.z = std::clamp(off.z, c.min_distance, hi);
                if (off.z < c.min_distance || off.z > hi) want.z = 0.5 * (c.min_distance + hi);
                if (std::isfinite(c.max_lateral)) want.x = std::clamp(off.x, -0.5 * c.max_lateral, 0.5 * c.max_lateral);
            }
            const auto f = ground_front(rel);
            const auto r = ground_right(rel);
            const Point2 d = want - off;
            Vec3 fix = ground_vec(d.x * r[0] + d.z * f[0], d.x * r[1] + d.z * f[1]);
            if (mover != c.subject) fix = -1.0 * fix;
            v.suggested_delta = Correction{fix, 0.0};
            break;
        }
        case ConstraintKind::ordered_row:
        case ConstraintKind::equal_spacing: v.code = ViolationCode::distance; break;
        case ConstraintKind::stack_order: {
            const auto& p = c.participants;
            bool inverted = false;
            for (std::size_t i = 0; i + 1 < p.size(); ++i)
                if (!(scene.at(p[i + 1]).position.y > scene.at(p[i]).position.y)) inverted = true;
            v.code = inverted ? ViolationCode::order : ViolationCode::stacking;
            const auto it = std::find(p.begin(), p.end(), mover);
            if (!inverted && it != p.end() && it != p.begin()) {
                const Vec3 below = scene.at(*(it - 1)).position, here = scene.at(mover).position;
                v.suggested_delta = Correction{ground_vec(below.x - here.x, below.z - here.z), 0.0};
            }
            break;
        }
        case ConstraintKind::symmetric_pair: {
            v.code = ViolationCode::distance;
            const std::string& a = mover == c.participants[1] ? c.participants[0] : c.participants[1];
            const auto& axis = scene.at(c.related);
            const auto f = ground_front(axis);
            const Point2 m = mirror_across(ground(scene.at(a).position), ground(axis.position), {f[0], f[1]});
            const Vec3 here = scene.at(mover).position;
            v.suggested_delta = Correction{{m.x - here.x, scene.at(a).position.y - here.y, m.z - here.z}, 0.0};
            break;
        }
        case ConstraintKind::no_overlap: {
            for (const auto& [a, b] : cc.part.collision_pairs) {
                const double area = pair_overlap(scene, a, b, clearance);
                if (!(area > 0)) continue;
                Violation cv;
                cv.code = ViolationCode::collision;
                const std::string m = b == target ? b : a;
                const std::string other = m == a ? b : a;
                cv.subjects = {m, other};
                cv.magnitude = area;
                cv.suggested_delta = Correction{separation_push(scene, m, other, clearance), 0.0};
                out.push_back(std::move(cv));
            }
            return;
        }
    }
    if (!(v.magnitude > 0)) v.magnitude = e.total;
    out.push_back(std::move(v));
    return;
}

inline ViolationCode code_for_check(const ConstraintCheck& chk) {
    switch (chk.kind) {
        case ConstraintKind::rests_on:
            return chk.detail.rfind("floating", 0) == 0 ? ViolationCode::floating
                   : chk.detail.rfind("sunk", 0) == 0   ? ViolationCode::stacking
                                                        : ViolationCode::distance;
        case ConstraintKind::facing:
        case ConstraintKind::same_direction:
        case ConstraintKind::mutual_facing: return ViolationCode::orientation;
        case ConstraintKind::side_of: return ViolationCode::side;
        case ConstraintKind::in_front_of:
        case ConstraintKind::region: return ViolationCode::region;
        case ConstraintKind::stack_order: return ViolationCode::order;
        case ConstraintKind::no_overlap: return ViolationCode::collision;
        default: return ViolationCode::distance;
    }
}

}  // namespace detail

class RuleJudge : public Judge {
public:
    Verdict judge(const Scene& scene, const TaskDef& task, const std::string& target_id) override {
        const CompiledTask ct = compile_task(task, scene);
        Verdict v;
        v.energy = total_energy(scene, ct.problem);
        const SuccessReport rep = success_report(scene, task);
        if (v.energy.total <= task.epsilon && rep.ok) {
            v.pass = true;
            return v;
        }
        if (v.energy.total > task.epsilon)
            for (const auto& cc : ct.constraints) detail::violations_for(scene, cc, target_id, task.clearance, v.violations);
        if (v.violations.empty()) {
            // energy is (near) zero but a geometric check failed
            for (const auto& chk : rep.checks) {
                if (chk.ok) continue;
                Violation x;
                x.code = detail::code_for_check(chk);
                x.subjects = constraint_ids(ct.constraints[chk.index].spec);
                x.magnitude = chk.excess;
                v.violations.push_back(std::move(x));
                break;
            }
            if (v.violations.empty()) {
                Violation x;
                x.subjects = {target_id};
                x.magnitude = std::max(v.energy.total, kPredicateTol);
                if (!rep.reason.empty()) x.code = ViolationCode::distance;
                v.violations.push_back(std::move(x));
            }
        }
        return v;
    }
};

}  // namespace ctxplace
