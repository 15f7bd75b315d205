#pragma once

// The placement loop: resolve the instruction into targets, place each
// target, then judge and correct until the judge passes or the loop cap is
// reached.

#include <chrono>

#include "vlm.hpp"

namespace ctxplace {

enum class Mode { deterministic, vlm };

inline const char* to_string(Mode m) { return m == Mode::deterministic ? "deterministic" : "vlm"; }

inline Mode mode_from_string(std::string_view s) {
    if (s == "deterministic") return Mode::deterministic;
    if (s == "vlm") return Mode::vlm;
    throw ConfigError("unknown mode '" + std::string(s) + "' (deterministic or vlm)");
}

inline constexpr int kDefaultMaxLoops = 8;

struct RunOptions {
    Mode mode = Mode::deterministic;
    int max_loops = kDefaultMaxLoops;
    std::uint64_t seed = 0;
    VacOptions vac = default_vac_options();

    void validate() const {
        if (max_loops < 1) throw ConfigError("max_loops must be >= 1");
        vac.validate();
    }
};

// One resolved target: what the generate step decided.
struct PlacementStep {
    GenerateResult decision;
    Transform placed;  // pose right after the worker step
};

struct RunRecord {
    std::string task_id;
    bool success = false;       // last verdict passed and the task predicate holds
    bool judge_passed = false;  // last verdict passed
    double wall_seconds = 0.0;
    int judge_loops = 0;
    std::vector<PlacementStep> steps;
    std::vector<Verdict> verdicts;  // one per judge call, in order
    Scene final_scene;
    std::string reason;  // why the run failed, empty on success
};

// Everything except wall time, so records compare byte-for-byte across runs.
inline json to_json(const RunRecord& r, const std::vector<std::string>& final_ids) {
    json j;
    j["task"] = r.task_id;
    j["success"] = r.success;
    j["judge_passed"] = r.judge_passed;
    j["judge_loops"] = r.judge_loops;
    j["steps"] = json::array();
    for (const auto& s : r.steps)
        j["steps"].push_back({{"action", s.decision.action == GenerateResult::Action::create ? "new" : "move"},
                              {"target", s.decision.target},
                              {"asset", s.decision.asset},
                              {"related", s.decision.related},
                              {"placed", to_json(s.placed)}});
    j["verdicts"] = json::array();
    for (const auto& v : r.verdicts) j["verdicts"].push_back(to_json(v));
    j["final"] = json::object();
    for (const auto& id : final_ids)
        if (const auto* o = r.final_scene.find(id)) j["final"][id] = to_json(transform_of(*o));
    if (!r.reason.empty()) j["reason"] = r.reason;
    return j;
}

// Related objects of a target: every other id that shares a constraint with it.
inline std::vector<std::string> related_ids(const TaskDef& task, const std::string& target) {
    std::vector<std::string> out;
    for (const auto& c : task.constraints) {
        const auto ids = constraint_ids(c);
        if (std::find(ids.begin(), ids.end(), target) == ids.end()) continue;
        for (const auto& id : ids)
            if (id != target && std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
    }
    return out;
}

namespace detail {

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

// Applies each violation's delta to its first subject, at most once per object
// and only to the task's targets.
inline Scene apply_suggestions(Scene scene, const Verdict& v, const std::vector<std::string>& targets) {
    std::set<std::string> moved;
    for (const auto& x : v.violations) {
        if (!x.suggested_delta || x.subjects.empty()) continue;
        const auto& mover = x.subjects[0];
        if (std::find(targets.begin(), targets.end(), mover) == targets.end() || !moved.insert(mover).second) continue;
        scene = apply_correction(scene, mover, *x.suggested_delta);
    }
    return scene;
}

inline void finish(RunRecord& rec, const TaskDef& task, const Scene& scene, const Stopwatch& sw) {
    rec.final_scene = scene;
    rec.judge_passed = !rec.verdicts.empty() && rec.verdicts.back().pass;
    const auto rep = success_report(scene, task);
    rec.success = rec.judge_passed && rep.ok;
    if (!rec.success && rec.reason.empty())
        rec.reason = !rec.judge_passed ? "judge did not pass within " + std::to_string(rec.judge_loops) + " loops"
                                       : "task check failed: " + rep.reason;
    rec.wall_seconds = sw.seconds();
}

}  // namespace detail

// Deterministic mode: table-driven resolution, the solver as worker and the
// rule judge. `scene` must already contain the targets (see prepare_scene).
inline RunRecord run_deterministic(const TaskDef& task, Scene scene, const RunOptions& opt) {
    opt.validate();
    detail::Stopwatch sw;
    RunRecord rec;
    rec.task_id = task.id;
    const auto targets = target_ids(task);
    const CompiledTask ct = compile_task(task, scene);

    std::set<std::string> placed;
    for (const auto& o : scene.objects) placed.insert(o.id);
    for (const auto& t : targets) placed.erase(t);

    for (std::size_t i = 0; i < targets.size(); ++i) {
        const auto& t = targets[i];
        PlacementStep step;
        step.decision.action = task.scene.find(t) ? GenerateResult::Action::move : GenerateResult::Action::create;
        step.decision.target = t;
        step.decision.asset = scene.at(t).asset_id;
        step.decision.related = related_ids(task, t);
        placed.insert(t);
        SolveConfig cfg = task.solve;
        cfg.seed = mix_seed(opt.seed, i);
        const auto r = solve(scene, t, restrict_problem(ct.problem, placed), cfg);
        scene = scene.with_transform(t, r.final_transform);
        step.placed = r.final_transform;
        rec.steps.push_back(std::move(step));
    }

    RuleJudge judge;
    for (int loop = 1; loop <= opt.max_loops; ++loop) {
        rec.verdicts.push_back(judge.judge(scene, task, targets.back()));
        rec.judge_loops = loop;
        const Verdict& v = rec.verdicts.back();
        if (v.pass || loop == opt.max_loops) break;
        // correct, then let the solver polish every target against the full
        // problem; keep the result only if the energy did not go up
        Scene candidate = detail::apply_suggestions(scene, v, targets);
        for (std::size_t i = 0; i < targets.size(); ++i) {
            SolveConfig cfg = task.solve;
            cfg.seed = mix_seed(opt.seed, 1000 * static_cast<std::uint64_t>(loop) + i);
            const auto r = solve(candidate, targets[i], ct.problem, cfg);
            candidate = candidate.with_transform(targets[i], r.final_transform);
        }
        // same computation as the judge's, so the accepted energies never tick up by rounding
        if (total_energy(candidate, compile_task(task, candidate).problem).total <= v.energy.total)
            scene = std::move(candidate);
    }
    detail::finish(rec, task, scene, sw);
    return rec;
}

// VLM mode: the three roles go to `client`. Cues follow opt.vac.
inline RunRecord run_vlm(const TaskDef& task, Scene scene, const RunOptions& opt, VlmClient& client) {
    opt.validate();
    detail::Stopwatch sw;
    RunRecord rec;
    rec.task_id = task.id;
    const std::string& instruction = task.instruction.text;
    const int width = client.config().image_width;
    std::vector<std::string> done;
    std::map<std::string, std::vector<std::string>> related_of;

    auto all_related = [&] {
        std::vector<std::string> out;
        for (const auto& t : done)
            for (const auto& r : related_of[t])
                if (std::find(out.begin(), out.end(), r) == out.end() &&
                    std::find(done.begin(), done.end(), r) == done.end())
                    out.push_back(r);
        return out;
    };

    for (std::size_t k = 0; k < task.instruction.targets.size(); ++k) {
        std::vector<NamedImage> images;
        if (opt.vac.top_view) {
            const auto d = render_top_view(scene, done.empty() ? std::string() : done.back(), opt.vac);
            images.push_back({"top.png", encode_png(rasterize(d, width))});
        }
        GenerateResult g = client.generate_step(instruction, scene, done, std::move(images));
        if (std::find(done.begin(), done.end(), g.target) != done.end()) {
            rec.reason = "generate step chose '" + g.target + "' twice";
            detail::finish(rec, task, scene, sw);
            return rec;
        }
        if (!scene.find(g.target)) {
            if (g.action == GenerateResult::Action::move || g.asset.empty() || !scene.find_asset(g.asset)) {
                rec.reason = "generate step named unknown object '" + g.target + "' / asset '" + g.asset + "'";
                detail::finish(rec, task, scene, sw);
                return rec;
            }
            scene = scene.with_object(instantiate(scene.asset(g.asset), g.target));
        }
        std::vector<std::string> rel;
        for (const auto& r : g.related)
            if (scene.find(r) && r != g.target) rel.push_back(r);
        g.related = rel;
        std::vector<std::string> ids{g.target};
        ids.insert(ids.end(), rel.begin(), rel.end());
        const Transform t = client.worker_step(instruction, scene, g.target, rel, bounding_box_text(scene, ids));
        scene = scene.with_transform(g.target, t);
        done.push_back(g.target);
        related_of[g.target] = rel;
        rec.steps.push_back({g, t});
    }

    // energies are reported alongside the model's verdicts when the scene
    // holds every object the task names
    std::optional<CompiledTask> ct;
    try {
        ct = compile_task(task, scene);
    } catch (const Error&) {
    }

    for (int loop = 1; loop <= opt.max_loops; ++loop) {
        JudgeCues cues;
        std::vector<std::string> ids = done;
        for (const auto& r : all_related()) ids.push_back(r);
        if (opt.vac.bounding_box_text) cues.bounding_boxes = bounding_box_text(scene, ids);
        if (opt.vac.relation_angle_text)
            for (const auto& t : done) cues.relation_angles += relation_angle_text(scene, t, related_of[t]);
        if (opt.vac.top_view)
            cues.images.push_back({"top.png", encode_png(rasterize(render_top_view(scene, done.back(), opt.vac), width))});
        if (opt.vac.four_views)
            for (const auto& t : done)
                for (const auto& d : render_four_views(scene, t, opt.vac, related_of[t]))
                    cues.images.push_back({t + "_" + d.name + ".png", encode_png(rasterize(d, width))});

        Verdict v = client.judge_step(instruction, scene, done, all_related(), cues);
        if (ct) v.energy = total_energy(scene, ct->problem);
        rec.verdicts.push_back(v);
        rec.judge_loops = loop;
        if (v.pass || loop == opt.max_loops) break;

        scene = detail::apply_suggestions(scene, v, done);
        // a violation without a delta sends its object back to the worker
        std::set<std::string> redo;
        for (const auto& x : v.violations)
            if (!x.suggested_delta && !x.subjects.empty() &&
                std::find(done.begin(), done.end(), x.subjects[0]) != done.end())
                redo.insert(x.subjects[0]);
        for (const auto& t : done) {
            if (!redo.count(t)) continue;
            std::string feedback;
            for (const auto& x : v.violations)
                if (!x.subjects.empty() && x.subjects[0] == t) feedback += to_json(x).dump() + "\n";
            std::vector<std::string> bb_ids{t};
            bb_ids.insert(bb_ids.end(), related_of[t].begin(), related_of[t].end());
            scene = scene.with_transform(
                t, client.worker_step(instruction, scene, t, related_of[t], bounding_box_text(scene, bb_ids), feedback));
        }
    }
    detail::finish(rec, task, scene, sw);
    return rec;
}

}  // namespace ctxplace
