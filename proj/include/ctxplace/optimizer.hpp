#pragma once

// Derivative-free placement of one target object: multi-restart coordinate
// descent over (x, y, z, yaw) with shrinking steps. Scale, pitch and roll are
// left untouched.

#include "energy.hpp"

namespace ctxplace {

struct SolveConfig {
    int max_iterations = 500;  // sweeps per restart
    int restarts = 8;
    double initial_step = 0.5;  // meters
    double step_decay = 0.7;
    double yaw_step_deg = 15.0;
    std::uint64_t seed = 0;
    double target_epsilon = 1e-6;
    double min_step = 1e-7;  // meters; restart ends when the step falls below

    void validate() const {
        if (max_iterations <= 0 || restarts <= 0) throw ConfigError("solve: iterations and restarts must be positive");
        if (!(initial_step > 0) || !(yaw_step_deg > 0) || !(target_epsilon > 0) || !(min_step > 0))
            throw ConfigError("solve: steps and epsilon must be positive");
        if (!(step_decay > 0 && step_decay < 1)) throw ConfigError("solve: step_decay must be in (0, 1)");
    }
};

struct SolveResult {
    Transform final_transform;
    EnergyBreakdown breakdown;
    int iterations_used = 0;
    bool converged = false;
    int best_restart = 0;
    double initial_total = 0.0;
    // Accepted totals per restart, starting with the restart's initial energy.
    std::vector<std::vector<double>> trajectories;
    std::string diagnostic;
};

struct Correction {
    Vec3 translation;
    double yaw_delta = 0.0;

    friend bool operator==(const Correction&, const Correction&) = default;
};

// New scene with only the target's transform changed; yaw renormalized.
inline Scene apply_correction(const Scene& scene, std::string_view target_id, const Correction& delta) {
    const auto& obj = scene.at(target_id);
    Transform t = transform_of(obj);
    t.position = t.position + delta.translation;
    const double turn = std::fmod(delta.yaw_delta, 360.0);
    if (turn != 0.0) t.orientation.yaw = t.orientation.yaw + turn;
    return scene.with_transform(target_id, t);
}

// Moves the target into the feasible set of each of its pair relations in
// turn: a constrained component outside its slack band is pulled to half the
// band (radial relations: to half the radius), so later objects stacked on or
// placed against the target are not pinned at an edge. This is the "place it
// at the related anchor + d_star" starting guess.
inline Transform anchor_informed_start(const Scene& scene, std::string_view target_id, const Problem& problem) {
    Scene s = scene;
    auto& obj = s.at_mut(target_id);
    for (const auto& rel : problem.relations) {
        if (rel.subject_id != target_id) continue;
        const auto& related = s.at(rel.related_id);
        const Vec3 anchor = world_anchor(related, rel.related_anchor);
        const Mat3 rot = rel.frame == Frame::world ? Mat3{} : yaw_matrix(related.orientation.yaw);
        const Vec3 local = rot.transposed() * (obj.position - anchor) - rel.d_star;
        Vec3 clamped = local;
        for (int k = 0; k < 3; ++k) {
            if (rel.free[static_cast<std::size_t>(k)]) continue;
            if (std::abs(local[k]) > rel.slack[k])
                clamped[k] = std::clamp(local[k], -0.5 * rel.slack[k], 0.5 * rel.slack[k]);
        }
        if (rel.radial && !rel.free[0] && !rel.free[2]) {
            const double h = std::hypot(local.x, local.z);
            const double f = h > rel.slack.x ? 0.5 * rel.slack.x / h : 1.0;
            clamped.x = local.x * f;
            clamped.z = local.z * f;
        }
        if (clamped == local) continue;
        obj.position = anchor + rot * (rel.d_star + clamped);
    }
    return transform_of(obj);
}

namespace detail {

struct RestartOutcome {
    Transform transform;
    EnergyBreakdown energy;
    int iterations = 0;
    std::vector<double> trajectory;
};

inline RestartOutcome descend(Scene& work, std::string_view target_id, const Problem& problem, const SolveConfig& cfg,
                              Transform start) {
    auto& obj = work.at_mut(target_id);
    obj.position = start.position;
    obj.orientation = start.orientation.normalized();

    auto evaluate = [&](const Vec3& pos, double yaw) {
        obj.position = pos;
        obj.orientation.yaw = wrap360(yaw);
        return total_energy(work, problem);
    };

    Vec3 pos = obj.position;
    double yaw = obj.orientation.yaw;
    EnergyBreakdown best = evaluate(pos, yaw);
    RestartOutcome out;
    out.trajectory.push_back(best.total);

    double step = cfg.initial_step;
    double yaw_step = cfg.yaw_step_deg;
    int it = 0;
    while (it < cfg.max_iterations && best.total > 0.0 && step >= cfg.min_step) {
        ++it;
        bool improved = false;
        for (int coord = 0; coord < 4; ++coord) {
            const double delta = coord < 3 ? step : yaw_step;
            Vec3 cand_pos[2] = {pos, pos};
            double cand_yaw[2] = {yaw, yaw};
            if (coord < 3) {
                cand_pos[0][coord] += delta;
                cand_pos[1][coord] -= delta;
            } else {
                cand_yaw[0] = wrap360(yaw + delta);
                cand_yaw[1] = wrap360(yaw - delta);
            }
            const EnergyBreakdown e0 = evaluate(cand_pos[0], cand_yaw[0]);
            const EnergyBreakdown e1 = evaluate(cand_pos[1], cand_yaw[1]);
            const int pick = e1.total < e0.total ? 1 : 0;
            const EnergyBreakdown& e = pick ? e1 : e0;
            if (e.total < best.total) {
                best = e;
                pos = cand_pos[pick];
                yaw = cand_yaw[pick];
                improved = true;
                out.trajectory.push_back(best.total);
                if (best.total == 0.0) break;
            }
        }
        if (!improved) {
            step *= cfg.step_decay;
            yaw_step *= cfg.step_decay;
        }
    }
    obj.position = pos;
    obj.orientation.yaw = wrap360(yaw);
    out.transform = transform_of(obj);
    out.energy = best;
    out.iterations = it;
    return out;
}

}  // namespace detail

inline SolveResult solve(const Scene& scene, std::string_view target_id, const Problem& problem,
                         const SolveConfig& config = {}) {
    config.validate();
    scene.at(target_id);
    validate_problem(scene, problem);

    SolveResult result;
    result.initial_total = total_energy(scene, problem).total;
    const Transform origin = transform_of(scene.at(target_id));
    const Transform informed = anchor_informed_start(scene, target_id, problem);

    Scene work = scene;
    bool have_best = false;
    detail::RestartOutcome best;
    SplitMix64 rng(mix_seed(config.seed, 0x5eed));
    for (int k = 0; k < config.restarts; ++k) {
        Transform start = informed;
        if (k > 0) {
            start.position.x += rng.uniform(-2.0, 2.0) * config.initial_step;
            start.position.z += rng.uniform(-2.0, 2.0) * config.initial_step;
            start.orientation.yaw = wrap360(start.orientation.yaw + rng.uniform(0.0, 360.0));
        }
        auto outcome = detail::descend(work, target_id, problem, config, start);
        result.trajectories.push_back(outcome.trajectory);
        if (!have_best || outcome.energy.total < best.energy.total) {
            best = std::move(outcome);
            result.best_restart = k;
            have_best = true;
        }
        if (best.energy.total == 0.0) break;
    }

    // Never return something worse than where the target already was.
    if (result.initial_total < best.energy.total) {
        best.transform = origin;
        best.energy = total_energy(scene, problem);
        best.iterations = 0;
        result.best_restart = -1;
    }
    result.final_transform = best.transform;
    result.breakdown = best.energy;
    result.iterations_used = best.iterations;
    result.converged = best.energy.total <= config.target_epsilon;
    if (!result.converged)
        result.diagnostic = "residual energy " + fixed(best.energy.total, 9) + " after " +
                            std::to_string(result.trajectories.size()) + " restarts";
    return result;
}

}  // namespace ctxplace
