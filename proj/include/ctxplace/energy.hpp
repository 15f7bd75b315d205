#pragma once

// Layered placement energy: collision, distance, affordance, social, culture.
//
// Every term is a sum of non-negative per-spec contributions and is exactly
// zero when the spec is satisfied, so "total <= epsilon" is a usable success
// test for the optimizer and the rule judge.

#include <limits>
#include <optional>
#include <utility>

#include "geometry.hpp"

namespace ctxplace {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Frame { world, related };

// Target displacement of subject relative to (an anchor of) the related object.
// Residual r = p_subject - anchor - d_star, expressed in world axes or in the
// related object's yaw frame. Component k contributes max(0, |r_k| - slack_k)^2
// unless free. With `radial`, x and z are measured together as a horizontal
// distance against slack.x.
struct PairRelation {
    std::string subject_id;
    std::string related_id;
    std::string related_anchor;
    Frame frame = Frame::world;
    Vec3 d_star;
    std::array<bool, 3> free{false, false, false};
    Vec3 slack;
    bool radial = false;
};

enum class AffordanceMode { face_toward, face_away, face_same_direction };

struct AffordanceSpec {
    std::string subject_id;
    std::string related_id;
    std::string related_anchor;
    AffordanceMode mode = AffordanceMode::face_toward;
    double tolerance_deg = 15.0;
    double alpha = 1.0;
};

enum class ContextKind {
    side_of,
    in_front_of,
    ordered_row,
    equal_spacing,
    mutual_facing,
    stack_order,
    symmetric_pair,
    region_placement,
};

enum class Side { left, right };

// Social and cultural constraints share one shape. Which fields matter
// depends on the kind:
//   side_of          [subject, related]  side, margin
//   in_front_of      [subject, related]  anchor, min_distance, max_distance, max_lateral
//   ordered_row      [p0..pn]            tolerance (gap variance), margin (off-line distance)
//   equal_spacing    [p0..pn]            tolerance (gap variance, m^2)
//   mutual_facing    [focal, others..]   tolerance (deg)
//   stack_order      [bottom..top]       tolerance (horizontal offset, m)
//   symmetric_pair   [a, b, axis_ref]    tolerance (m)
//   region_placement [subject, related]  region (x0, x1, z0, z1) in related's yaw frame
struct ContextSpec {
    ContextKind kind = ContextKind::side_of;
    std::vector<std::string> participants;
    Side side = Side::right;
    std::string anchor;
    double margin = 0.0;
    double min_distance = 0.0;
    double max_distance = kInf;
    double max_lateral = kInf;
    double tolerance = 0.0;
    std::array<double, 4> region{0, 0, 0, 0};
    double weight = 1.0;
};

using SocialSpec = ContextSpec;
using CultureSpec = ContextSpec;

struct Problem {
    double lambda_dist = 1.0;
    double clearance = 0.0;
    std::vector<std::pair<std::string, std::string>> collision_pairs;
    std::vector<PairRelation> relations;
    std::vector<AffordanceSpec> affordances;
    std::vector<SocialSpec> social;
    std::vector<CultureSpec> culture;
};

struct EnergyBreakdown {
    double e_collision = 0.0;
    double e_distance = 0.0;
    double e_affordance = 0.0;
    double e_social = 0.0;
    double e_culture = 0.0;
    double total = 0.0;

    friend bool operator==(const EnergyBreakdown&, const EnergyBreakdown&) = default;
};

inline const char* to_string(ContextKind k) {
    switch (k) {
        case ContextKind::side_of: return "side_of";
        case ContextKind::in_front_of: return "in_front_of";
        case ContextKind::ordered_row: return "ordered_row";
        case ContextKind::equal_spacing: return "equal_spacing";
        case ContextKind::mutual_facing: return "mutual_facing";
        case ContextKind::stack_order: return "stack_order";
        case ContextKind::symmetric_pair: return "symmetric_pair";
        case ContextKind::region_placement: return "region_placement";
    }
    return "?";
}

inline bool is_culture_only(ContextKind k) {
    return k == ContextKind::stack_order || k == ContextKind::symmetric_pair || k == ContextKind::region_placement;
}

// ---------------------------------------------------------------- collision

inline double pair_overlap(const Scene& scene, const std::string& a, const std::string& b, double clearance) {
    const auto pa = dilate(footprint(scene.at(a)), clearance);
    const auto pb = dilate(footprint(scene.at(b)), clearance);
    return intersection_area(pa, pb);
}

inline double e_collision(const Scene& scene, std::span<const std::pair<std::string, std::string>> pairs,
                          double clearance) {
    double s = 0.0;
    for (const auto& [a, b] : pairs) s += pair_overlap(scene, a, b, clearance);
    return s;
}

// ----------------------------------------------------------------- distance

// Raw residual of a relation in its frame (before slack and masking).
inline Vec3 relation_residual(const Scene& scene, const PairRelation& rel) {
    const auto& subject = scene.at(rel.subject_id);
    const auto& related = scene.at(rel.related_id);
    const Vec3 offset = subject.position - world_anchor(related, rel.related_anchor);
    const Vec3 local = rel.frame == Frame::world ? offset : yaw_matrix(related.orientation.yaw).transposed() * offset;
    return local - rel.d_star;
}

// Per-component excess beyond slack (0 for free components). With radial
// relations the horizontal excess is reported in x and z proportionally.
inline Vec3 relation_excess(const PairRelation& rel, Vec3 r) {
    Vec3 e;
    for (int k = 0; k < 3; ++k) {
        if (rel.free[static_cast<std::size_t>(k)]) continue;
        e[k] = std::max(0.0, std::abs(r[k]) - rel.slack[k]);
        if (r[k] < 0) e[k] = -e[k];
    }
    if (rel.radial && !rel.free[0] && !rel.free[2]) {
        const double h = std::hypot(r.x, r.z);
        const double ex = std::max(0.0, h - rel.slack.x);
        e.x = h > 0 ? ex * r.x / h : 0.0;
        e.z = h > 0 ? ex * r.z / h : 0.0;
    }
    return e;
}

inline double relation_energy(const Scene& scene, const PairRelation& rel, double lambda_dist) {
    const Vec3 e = relation_excess(rel, relation_residual(scene, rel));
    return lambda_dist * dot(e, e);
}

inline double e_distance(const Scene& scene, std::span<const PairRelation> relations, double lambda_dist) {
    if (!(lambda_dist > 0.0)) throw SpecError("lambda_dist must be positive");
    double s = 0.0;
    for (const auto& r : relations) s += relation_energy(scene, r, lambda_dist);
    return s;
}

// --------------------------------------------------------------- affordance

// Unsigned angle in degrees between the object's ground front and a ground
// direction. Directions shorter than kGeomEps give 0 (nothing to face).
inline double misalignment_deg(const ObjectInstance& o, Point2 dir) {
    const double len = length(dir);
    if (len < kGeomEps) return 0.0;
    const auto f = ground_front(o);
    const double c = std::clamp((f[0] * dir.x + f[1] * dir.z) / len, -1.0, 1.0);
    return rad2deg(std::acos(c));
}

inline Point2 affordance_direction(const Scene& scene, const AffordanceSpec& spec) {
    const auto& subject = scene.at(spec.subject_id);
    const auto& related = scene.at(spec.related_id);
    const Point2 toward = ground(world_anchor(related, spec.related_anchor)) - ground(subject.position);
    switch (spec.mode) {
        case AffordanceMode::face_toward: return toward;
        case AffordanceMode::face_away: return -1.0 * toward;
        case AffordanceMode::face_same_direction: {
            const auto f = ground_front(related);
            return {f[0], f[1]};
        }
    }
    return toward;
}

inline double affordance_misalignment(const Scene& scene, const AffordanceSpec& spec) {
    return misalignment_deg(scene.at(spec.subject_id), affordance_direction(scene, spec));
}

inline double affordance_energy(const Scene& scene, const AffordanceSpec& spec) {
    if (!(spec.tolerance_deg > 0.0 && spec.tolerance_deg <= 180.0))
        throw SpecError("affordance tolerance must be in (0, 180]");
    const double d = affordance_misalignment(scene, spec) - spec.tolerance_deg;
    return std::max(0.0, spec.alpha * d);
}

inline double e_affordance(const Scene& scene, std::span<const AffordanceSpec> specs) {
    double s = 0.0;
    for (const auto& a : specs) s += affordance_energy(scene, a);
    return s;
}

// ------------------------------------------------------------ social/culture

namespace detail {

inline void require_participants(const ContextSpec& spec, std::size_t min, std::size_t max) {
    const auto n = spec.participants.size();
    if (n < min || n > max)
        throw SpecError(std::string(to_string(spec.kind)) + ": expected " + std::to_string(min) +
                        (max == min ? "" : "+") + " participants, got " + std::to_string(n));
}

inline std::vector<double> adjacent_gaps(const Scene& scene, const std::vector<std::string>& ids) {
    std::vector<double> gaps;
    for (std::size_t i = 0; i + 1 < ids.size(); ++i)
        gaps.push_back(length(ground(scene.at(ids[i + 1]).position) - ground(scene.at(ids[i]).position)));
    return gaps;
}

inline double population_variance(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return s / static_cast<double>(v.size());
}

// Offset of `p` in the ground frame of `o` (x = right, z = front).
inline Point2 local_ground_offset(const ObjectInstance& o, Point2 p, Point2 origin) {
    const auto f = ground_front(o);
    const auto r = ground_right(o);
    const Point2 d = p - origin;
    return {d.x * r[0] + d.z * r[1], d.x * f[0] + d.z * f[1]};
}

inline Point2 mirror_across(Point2 p, Point2 origin, Point2 axis_dir) {
    const Point2 d = p - origin;
    const double t = dot(d, axis_dir);
    const Point2 foot = origin + t * axis_dir;
    return foot + -1.0 * (p - foot);
}

inline double distance_to_rect(Point2 p, const std::array<double, 4>& rect) {
    const double dx = std::max({rect[0] - p.x, 0.0, p.x - rect[1]});
    const double dz = std::max({rect[2] - p.z, 0.0, p.z - rect[3]});
    return std::hypot(dx, dz);
}

}  // namespace detail

// Unweighted violation of one context spec; 0 when satisfied.
inline double context_violation(const Scene& scene, const ContextSpec& spec) {
    using detail::require_participants;
    const auto& ids = spec.participants;
    switch (spec.kind) {
        case ContextKind::side_of: {
            require_participants(spec, 2, 2);
            const auto& related = scene.at(ids[1]);
            const Point2 off = detail::local_ground_offset(related, ground(scene.at(ids[0]).position),
                                                           ground(related.position));
            const double sign = spec.side == Side::right ? 1.0 : -1.0;
            return std::max(0.0, spec.margin - sign * off.x);
        }
        case ContextKind::in_front_of: {
            require_participants(spec, 2, 2);
            const auto& related = scene.at(ids[1]);
            const Point2 off = detail::local_ground_offset(related, ground(scene.at(ids[0]).position),
                                                           ground(world_anchor(related, spec.anchor)));
            return std::max(0.0, spec.min_distance - off.z) + std::max(0.0, off.z - spec.max_distance) +
                   std::max(0.0, std::abs(off.x) - spec.max_lateral);
        }
        case ContextKind::ordered_row: {
            require_participants(spec, 3, ~std::size_t{0});
            double v = std::max(0.0, detail::population_variance(detail::adjacent_gaps(scene, ids)) - spec.tolerance);
            const Point2 a = ground(scene.at(ids.front()).position), b = ground(scene.at(ids.back()).position);
            const double len = length(b - a);
            for (std::size_t i = 1; i + 1 < ids.size(); ++i) {
                const Point2 p = ground(scene.at(ids[i]).position);
                const double off = len < kGeomEps ? length(p - a) : std::abs(cross(a, b, p)) / len;
                v += std::max(0.0, off - spec.margin);
            }
            return v;
        }
        case ContextKind::equal_spacing:
            require_participants(spec, 3, ~std::size_t{0});
            return std::max(0.0, detail::population_variance(detail::adjacent_gaps(scene, ids)) - spec.tolerance);
        case ContextKind::mutual_facing: {
            require_participants(spec, 2, ~std::size_t{0});
            const auto& focal = scene.at(ids[0]);
            Point2 centroid;
            for (std::size_t i = 1; i < ids.size(); ++i) centroid = centroid + ground(scene.at(ids[i]).position);
            centroid = (1.0 / static_cast<double>(ids.size() - 1)) * centroid;
            double v = std::max(0.0, misalignment_deg(focal, centroid - ground(focal.position)) - spec.tolerance);
            for (std::size_t i = 1; i < ids.size(); ++i) {
                const auto& o = scene.at(ids[i]);
                v += std::max(0.0, misalignment_deg(o, ground(focal.position) - ground(o.position)) - spec.tolerance);
            }
            return v;
        }
        case ContextKind::stack_order: {
            require_participants(spec, 2, ~std::size_t{0});
            double inversions = 0.0;
            for (std::size_t i = 0; i < ids.size(); ++i)
                for (std::size_t j = i + 1; j < ids.size(); ++j)
                    if (scene.at(ids[j]).position.y <= scene.at(ids[i]).position.y) inversions += 1.0;
            double offsets = 0.0;
            for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
                const double d = length(ground(scene.at(ids[i + 1]).position) - ground(scene.at(ids[i]).position));
                offsets += std::max(0.0, d - spec.tolerance);
            }
            return inversions + offsets;
        }
        case ContextKind::symmetric_pair: {
            require_participants(spec, 3, 3);
            const auto& a = scene.at(ids[0]);
            const auto& b = scene.at(ids[1]);
            const auto& axis = scene.at(ids[2]);
            const auto f = ground_front(axis);
            const Point2 m = detail::mirror_across(ground(a.position), ground(axis.position), {f[0], f[1]});
            const Point2 d = m - ground(b.position);
            const double res = std::sqrt(d.x * d.x + d.z * d.z + (a.position.y - b.position.y) * (a.position.y - b.position.y));
            return std::max(0.0, res - spec.tolerance);
        }
        case ContextKind::region_placement: {
            require_participants(spec, 2, 2);
            const auto& related = scene.at(ids[1]);
            const Point2 off = detail::local_ground_offset(related, ground(scene.at(ids[0]).position),
                                                           ground(related.position));
            return detail::distance_to_rect(off, spec.region);
        }
    }
    return 0.0;
}

inline double context_energy(const Scene& scene, const ContextSpec& spec) {
    if (!(spec.weight > 0.0)) throw SpecError(std::string(to_string(spec.kind)) + ": weight must be positive");
    return spec.weight * context_violation(scene, spec);
}

inline double e_social(const Scene& scene, std::span<const SocialSpec> specs) {
    double s = 0.0;
    for (const auto& spec : specs) {
        if (is_culture_only(spec.kind))
            throw SpecError(std::string(to_string(spec.kind)) + " is a cultural constraint, not a social one");
        s += context_energy(scene, spec);
    }
    return s;
}

inline double e_culture(const Scene& scene, std::span<const CultureSpec> specs) {
    double s = 0.0;
    for (const auto& spec : specs) s += context_energy(scene, spec);
    return s;
}

// Terms are summed in a fixed order: collision, distance, affordance, social, culture.
inline EnergyBreakdown total_energy(const Scene& scene, const Problem& problem) {
    EnergyBreakdown b;
    b.e_collision = e_collision(scene, problem.collision_pairs, problem.clearance);
    b.e_distance = problem.relations.empty() ? 0.0 : e_distance(scene, problem.relations, problem.lambda_dist);
    b.e_affordance = e_affordance(scene, problem.affordances);
    b.e_social = e_social(scene, problem.social);
    b.e_culture = e_culture(scene, problem.culture);
    b.total = b.e_collision;
    b.total += b.e_distance;
    b.total += b.e_affordance;
    b.total += b.e_social;
    b.total += b.e_culture;
    return b;
}

// Every id the problem references must exist in the scene.
inline void validate_problem(const Scene& scene, const Problem& p) {
    auto need = [&](const std::string& id) {
        if (!scene.find(id)) throw UnknownIdError(id);
    };
    for (const auto& [a, b] : p.collision_pairs) {
        need(a), need(b);
        if (a == b) throw SpecError("collision pair with itself: '" + a + "'");
    }
    for (const auto& r : p.relations) {
        need(r.subject_id), need(r.related_id);
        if (r.subject_id == r.related_id) throw SpecError("relation of '" + r.subject_id + "' with itself");
        world_anchor(scene.at(r.related_id), r.related_anchor);
    }
    for (const auto& a : p.affordances) need(a.subject_id), need(a.related_id);
    for (const auto& c : p.social)
        for (const auto& id : c.participants) need(id);
    for (const auto& c : p.culture)
        for (const auto& id : c.participants) need(id);
}

}  // namespace ctxplace
