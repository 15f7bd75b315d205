#pragma once

// Runs tasks for a number of seeded trials and aggregates accuracy, loops and
// (optionally) wall time into a fixed-layout table and a CSV file.

#include <thread>

#include "pipeline.hpp"

namespace ctxplace {

struct EvalOptions {
    Mode mode = Mode::deterministic;
    int trials = 10;
    std::uint64_t seed = 0;
    int jobs = 0;  // 0: hardware concurrency
    int max_loops = kDefaultMaxLoops;
    VacOptions vac = default_vac_options();
    bool timing = false;  // wall time in the report makes it non-reproducible

    void validate() const {
        if (trials < 1) throw ConfigError("trials must be >= 1");
        if (jobs < 0) throw ConfigError("jobs must be >= 0");
        if (max_loops < 1) throw ConfigError("max_loops must be >= 1");
        vac.validate();
    }
    int worker_count() const {
        const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
        return jobs > 0 ? jobs : hw;
    }
};

struct TaskResult {
    std::string id;
    int level = 0;
    std::string title;
    int trials = 0;
    int successes = 0;
    double mean_loops = 0.0;
    double mean_seconds = 0.0;
    std::string error;  // non-empty: the task could not be loaded or run
    std::vector<RunRecord> runs;

    double accuracy() const { return trials == 0 ? 0.0 : 100.0 * successes / trials; }
};

struct EvalReport {
    Mode mode = Mode::deterministic;
    int trials = 0;
    std::uint64_t seed = 0;
    bool timing = false;
    std::vector<TaskResult> tasks;
};

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
    return h;
}

inline std::uint64_t trial_seed(std::uint64_t seed, std::string_view task_id, int trial) {
    return mix_seed(mix_seed(seed, fnv1a(task_id)), static_cast<std::uint64_t>(trial));
}

// The task's scene with each spawned target nudged by the trial's seed.
inline Scene trial_scene(const TaskDef& task, std::uint64_t seed) {
    TaskDef jittered = task;
    SplitMix64 rng(seed);
    for (auto& t : jittered.instruction.targets) {
        if (!t.spawn) continue;
        t.spawn->position.x += rng.uniform(-task.spawn_jitter, task.spawn_jitter);
        t.spawn->position.z += rng.uniform(-task.spawn_jitter, task.spawn_jitter);
        t.spawn->orientation.yaw += rng.uniform(-task.spawn_jitter_yaw, task.spawn_jitter_yaw);
        t.spawn->orientation = t.spawn->orientation.normalized();
    }
    return prepare_scene(jittered);
}

// Supplies a fresh client per VLM trial; unused in deterministic mode.
using ClientFactory = std::function<RunRecord(const TaskDef&, Scene, const RunOptions&)>;

inline RunRecord run_trial(const TaskDef& task, int trial, const EvalOptions& opt, const ClientFactory& vlm_runner) {
    RunOptions ro;
    ro.mode = opt.mode;
    ro.max_loops = opt.max_loops;
    ro.seed = trial_seed(opt.seed, task.id, trial);
    ro.vac = opt.vac;
    Scene scene = trial_scene(task, ro.seed);
    if (opt.mode == Mode::deterministic) return run_deterministic(task, std::move(scene), ro);
    if (!vlm_runner) throw ConfigError("vlm mode needs a client");
    return vlm_runner(task, std::move(scene), ro);
}

// Loads each id from tasks_dir and runs `trials` trials of it on up to
// opt.worker_count() threads. Results are ordered by the input ids whatever
// the scheduling.
inline EvalReport evaluate(const std::filesystem::path& tasks_dir, const std::vector<std::string>& ids,
                           const EvalOptions& opt, const ClientFactory& vlm_runner = {}) {
    opt.validate();
    EvalReport rep;
    rep.mode = opt.mode;
    rep.trials = opt.trials;
    rep.seed = opt.seed;
    rep.timing = opt.timing;

    std::vector<std::optional<TaskDef>> defs(ids.size());
    rep.tasks.resize(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto& tr = rep.tasks[i];
        tr.id = ids[i];
        if (const auto* e = find_catalog_entry(ids[i])) tr.level = e->level, tr.title = std::string(e->title);
        try {
            defs[i] = load_task(tasks_dir, ids[i]);
            tr.level = defs[i]->level;
            tr.title = defs[i]->title;
        } catch (const std::exception& e) {
            tr.error = e.what();
        }
        tr.runs.resize(static_cast<std::size_t>(opt.trials));
    }

    struct Job {
        std::size_t task;
        int trial;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (defs[i])
            for (int t = 0; t < opt.trials; ++t) jobs.push_back({i, t});

    std::vector<std::string> errors(ids.size());
    std::mutex err_mu;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < jobs.size(); k = next++) {
            const auto [ti, trial] = jobs[k];
            try {
                rep.tasks[ti].runs[static_cast<std::size_t>(trial)] = run_trial(*defs[ti], trial, opt, vlm_runner);
            } catch (const std::exception& e) {
                std::lock_guard lock(err_mu);
                if (errors[ti].empty()) errors[ti] = "trial " + std::to_string(trial) + ": " + e.what();
            }
        }
    };
    const int n = std::min<int>(opt.worker_count(), static_cast<int>(std::max<std::size_t>(jobs.size(), 1)));
    if (n <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto& tr = rep.tasks[i];
        if (!errors[i].empty()) tr.error = errors[i];
        if (!tr.error.empty()) {
            tr.runs.clear();
            continue;
        }
        tr.trials = opt.trials;
        double loops = 0, secs = 0;
        for (const auto& r : tr.runs) {
            tr.successes += r.success ? 1 : 0;
            loops += r.judge_loops;
            secs += r.wall_seconds;
        }
        tr.mean_loops = loops / opt.trials;
        tr.mean_seconds = secs / opt.trials;
    }
    return rep;
}

inline std::vector<std::string> all_task_ids() {
    std::vector<std::string> ids;
    for (const auto& e : kTaskCatalog) ids.emplace_back(e.id);
    return ids;
}

// ------------------------------------------------------------- reports

namespace detail {

inline std::string pad_left(const std::string& s, std::size_t w) {
    return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
}
inline std::string pad_right(const std::string& s, std::size_t w) {
    return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

}  // namespace detail

// Levels across the top, three tasks per level, one row per metric. Tasks
// not in the report (or errored) show "n/a"; speed shows "-" unless timing
// was requested.
inline std::string report_text(const EvalReport& rep) {
    using detail::pad_left;
    using detail::pad_right;
    const std::size_t label_w = 14, cell_w = 7;
    std::map<std::string, const TaskResult*> by_id;
    for (const auto& t : rep.tasks) by_id[t.id] = &t;

    std::string out = "# evaluation mode=" + std::string(to_string(rep.mode)) + " trials=" + std::to_string(rep.trials) +
                      " seed=" + std::to_string(rep.seed) + "\n";
    std::string l1 = pad_right("level", label_w), l2 = pad_right("task", label_w);
    for (int level = 1; level <= 4; ++level) {
        l1 += "|" + pad_left(std::to_string(level), cell_w * 3 / 2 + 1) + std::string(cell_w * 3 - cell_w * 3 / 2 - 1, ' ');
        l2 += "|";
        for (int k = 1; k <= 3; ++k) l2 += pad_left("task" + std::to_string(k), cell_w);
    }
    out += l1 + "\n" + l2 + "\n";
    out += std::string(label_w, '-');
    for (int level = 1; level <= 4; ++level) out += "+" + std::string(cell_w * 3, '-');
    out += "\n";

    auto row = [&](const std::string& label, auto cell) {
        std::string line = pad_right(label, label_w);
        for (int level = 1; level <= 4; ++level) {
            line += "|";
            for (int k = 1; k <= 3; ++k) {
                const std::string id = "L" + std::to_string(level) + "T" + std::to_string(k);
                auto it = by_id.find(id);
                const bool ok = it != by_id.end() && it->second->error.empty();
                line += pad_left(ok ? cell(*it->second) : std::string("n/a"), cell_w);
            }
        }
        out += line + "\n";
    };
    row("accuracy (%)", [](const TaskResult& t) { return fixed(t.accuracy(), 0); });
    row("speed (s)", [&](const TaskResult& t) { return rep.timing ? fixed(t.mean_seconds, 2) : std::string("-"); });
    row("loops", [](const TaskResult& t) { return fixed(t.mean_loops, 1); });

    bool any_error = false;
    for (const auto& t : rep.tasks)
        if (!t.error.empty()) {
            if (!any_error) out += "\nerrors:\n";
            any_error = true;
            out += "  " + t.id + ": " + t.error + "\n";
        }
    return out;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

inline std::string report_csv(const EvalReport& rep) {
    std::string out = "task,level,title,trials,successes,accuracy,mean_loops,mean_seconds,status\n";
    for (const auto& t : rep.tasks) {
        out += t.id + "," + std::to_string(t.level) + "," + csv_field(t.title) + ",";
        if (!t.error.empty()) {
            out += ",,,,," + csv_field("error: " + t.error) + "\n";
            continue;
        }
        out += std::to_string(t.trials) + "," + std::to_string(t.successes) + "," + fixed(t.accuracy(), 1) + "," +
               fixed(t.mean_loops, 2) + "," + (rep.timing ? fixed(t.mean_seconds, 3) : std::string()) + ",ok\n";
    }
    return out;
}

}  // namespace ctxplace
