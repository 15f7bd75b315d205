#pragma once

// Handcrafted pass/fail scenes per task (tests/fixtures/<ID>.fixtures.json).
// Each fixture sets poses on top of the task's prepared scene.

#include <ctxplace/judge.hpp>

namespace fixtures {

using namespace ctxplace;

inline std::filesystem::path source_dir() { return CTXPLACE_SOURCE_DIR; }
inline std::filesystem::path tasks_dir() { return source_dir() / "tasks"; }

struct Fixture {
    std::string name;
    bool expect_pass = false;
    std::optional<ViolationCode> code;
    std::map<std::string, Transform> poses;
};

inline std::vector<Fixture> load(const std::string& task_id) {
    const auto path = source_dir() / "tests" / "fixtures" / (task_id + ".fixtures.json");
    const json j = parse_json_text(read_text_file(path), path.string());
    std::vector<Fixture> out;
    for (const auto& f : j.at("fixtures")) {
        Fixture x;
        x.name = f.at("name").get<std::string>();
        x.expect_pass = f.at("expect").get<std::string>() == "pass";
        if (f.contains("code")) {
            x.code = violation_code_from_string(f["code"].get<std::string>());
            if (!x.code) throw SpecError(path.string() + ": unknown code in '" + x.name + "'");
        }
        for (const auto& [id, pose] : f.at("poses").items()) x.poses[id] = transform_from_json(pose, x.name);
        out.push_back(std::move(x));
    }
    return out;
}

inline Scene apply(const TaskDef& task, const Fixture& f) {
    Scene s = prepare_scene(task);
    for (const auto& [id, t] : f.poses) s = s.with_transform(id, t);
    return s;
}

struct Outcome {
    bool predicate = false;
    bool energy_ok = false;
    Verdict verdict;
    bool has_code = false;
    std::string reason;
};

inline Outcome evaluate(const TaskDef& task, const Fixture& f) {
    const Scene s = apply(task, f);
    Outcome o;
    const auto rep = success_report(s, task);
    o.predicate = rep.ok;
    o.reason = rep.reason;
    o.energy_ok = total_energy(s, compile_task(task, s).problem).total <= task.epsilon;
    RuleJudge judge;
    o.verdict = judge.judge(s, task, target_ids(task).back());
    for (const auto& v : o.verdict.violations)
        if (f.code && v.code == *f.code) o.has_code = true;
    return o;
}

}  // namespace fixtures
