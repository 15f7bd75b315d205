#pragma once

// Command-line front end. Kept in a header so tests can drive it in-process.
//
// Exit codes: 0 success, 1 the task or placement failed, 2 usage or
// configuration error.
//
// Output layout under --out:
//   render  top.svg, <target>_side_{px,nx,pz,nz}.svg, bounding_boxes.txt,
//           relation_angles.txt (+ .png copies with --png)
//   solve   scene.json, solve.json
//   run     run.json, scene.json, transcript.jsonl (vlm mode)
//   eval    report.txt, report.csv, runs/<task>.json,
//           transcripts/<task>_<trial>.jsonl (vlm mode)
//   judge   verdict.json

#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ctxplace/ctxplace.hpp"

namespace ctxplace::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;
inline constexpr int kExitUsage = 2;

inline std::filesystem::path default_tasks_dir() {
    if (std::filesystem::is_directory("tasks")) return "tasks";
#ifdef CTXPLACE_DEFAULT_TASKS_DIR
    return CTXPLACE_DEFAULT_TASKS_DIR;
#else
    return "tasks";
#endif
}

inline std::size_t edit_distance(std::string_view a, std::string_view b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

// Closest long flag of `app` to `arg`, if reasonably close.
inline std::optional<std::string> suggest_flag(const CLI::App& app, std::string arg) {
    if (auto eq = arg.find('='); eq != std::string::npos) arg.resize(eq);
    std::optional<std::string> best;
    std::size_t best_d = 3;
    for (const auto* opt : app.get_options()) {
        for (const auto& name : opt->get_lnames()) {
            const std::string flag = "--" + name;
            const std::size_t d = edit_distance(arg, flag);
            if (d < best_d) best_d = d, best = flag;
        }
    }
    return best;
}

inline std::vector<std::string> split_ids(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

struct VlmFlags {
    std::string endpoint;
    std::string model;
    std::string api_key_env;
    double timeout = 0;
    int retries = -1;
    std::string prompts_dir;
    std::string script;  // replay a scripted transcript instead of calling an endpoint

    VlmConfig config() const {
        VlmConfig c;
        if (!endpoint.empty()) c.endpoint = endpoint;
        if (!model.empty()) c.model = model;
        if (!api_key_env.empty()) c.api_key_env = api_key_env;
        if (timeout > 0) c.timeout_seconds = timeout;
        if (retries >= 0) c.max_retries = retries;
        c.validate();
        return c;
    }
    PromptLibrary prompts() const { return prompts_dir.empty() ? PromptLibrary::embedded() : PromptLibrary::from_dir(prompts_dir); }

    void add_to(CLI::App* app) {
        app->add_option("--endpoint", endpoint, "Chat-completions URL for vlm mode");
        app->add_option("--model", model, "Model name for vlm mode");
        app->add_option("--api-key-env", api_key_env, "Environment variable holding the API key");
        app->add_option("--timeout", timeout, "Request timeout, seconds");
        app->add_option("--retries", retries, "Repair retries per request");
        app->add_option("--prompts", prompts_dir, "Directory of prompt templates (default: built in)")
            ->check(CLI::ExistingDirectory);
        app->add_option("--script", script, "Replay scripted replies from this JSON file instead of a live endpoint")
            ->check(CLI::ExistingFile);
    }
};

inline std::vector<ScriptedReply> load_script(const std::filesystem::path& p) {
    const json j = parse_json_text(read_text_file(p), p.string());
    return scripted_replies_from_json(j.is_object() && j.contains("replies") ? j["replies"] : j);
}

// One pipeline run in vlm mode with its own transport and client.
inline RunRecord run_vlm_once(const TaskDef& task, Scene scene, const RunOptions& ro, const VlmFlags& flags,
                              const std::filesystem::path& transcript) {
    const VlmConfig cfg = flags.config();
    std::unique_ptr<Transport> transport;
    if (!flags.script.empty()) transport = std::make_unique<ScriptedTransport>(load_script(flags.script));
    else transport = std::make_unique<HttpTransport>(cfg, cfg.api_key());
    if (!transcript.empty()) std::filesystem::remove(transcript);
    TranscriptLog log(transcript);
    VlmClient client(*transport, cfg, flags.prompts(), &log);
    return run_vlm(task, std::move(scene), ro, client);
}

class Cli {
public:
    Cli(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

    int main(int argc, const char* const* argv) {
        CLI::App app{"Context-aware object placement: solve, render, run and evaluate placement tasks"};
        app.require_subcommand(1);
        app.add_flag("--porcelain", porcelain_, "Machine-readable output on stdout");
        app.add_option("--tasks-dir", tasks_dir_, "Directory holding <ID>.task.json files");
        app.set_help_all_flag("--help-all", "Help for every subcommand");

        auto* render = setup_render(app);
        auto* solve_cmd = setup_solve(app);
        auto* run = setup_run(app);
        auto* eval = setup_eval(app);
        auto* judge = setup_judge(app);
        auto* stub = setup_stub(app);

        try {
            app.parse(argc, argv);
        } catch (const CLI::CallForHelp& e) {
            app.exit(e, out_, err_);
            return kExitOk;
        } catch (const CLI::CallForAllHelp& e) {
            app.exit(e, out_, err_);
            return kExitOk;
        } catch (const CLI::ExtrasError& e) {
            report_extras(app, e);
            return kExitUsage;
        } catch (const CLI::ParseError& e) {
            err_ << "error: " << e.what() << "\n";
            err_ << "run with --help for usage\n";
            return kExitUsage;
        }

        try {
            if (tasks_dir_.empty()) tasks_dir_ = default_tasks_dir().string();
            if (render->parsed()) return do_render();
            if (solve_cmd->parsed()) return do_solve();
            if (run->parsed()) return do_run();
            if (eval->parsed()) return do_eval();
            if (judge->parsed()) return do_judge();
            if (stub->parsed()) return do_stub();
        } catch (const ConfigError& e) {
            err_ << "config error: " << e.what() << "\n";
            return kExitUsage;
        } catch (const UnknownIdError& e) {
            err_ << "error: unknown id " << e.what() << "\n";
            return kExitUsage;
        } catch (const SpecError& e) {
            err_ << "task error: " << e.what() << "\n";
            return kExitUsage;
        } catch (const SceneError& e) {
            err_ << "scene error: " << e.what() << "\n";
            return kExitUsage;
        } catch (const std::exception& e) {
            err_ << "error: " << e.what() << "\n";
            return kExitFailed;
        }
        return kExitUsage;
    }

private:
    std::ostream& out_;
    std::ostream& err_;
    bool porcelain_ = false;
    std::string tasks_dir_;

    // shared flag storage
    std::string scene_path_, task_id_, task_file_, out_dir_, preset_ = std::string(kDefaultPreset), target_;
    std::string related_, mode_ = "deterministic", tasks_list_;
    std::uint64_t seed_ = 0;
    int max_loops_ = kDefaultMaxLoops, trials_ = 10, jobs_ = 0;
    double require_accuracy_ = -1;
    bool timing_ = false, png_ = false;
    VlmFlags vlm_;
    std::string stub_host_ = "127.0.0.1", port_file_;
    int stub_port_ = 0;

    void report_extras(const CLI::App& app, const CLI::ExtrasError& e) {
        err_ << "error: " << e.what() << "\n";
        // suggest against the deepest subcommand that was selected
        const CLI::App* scope = &app;
        for (const auto* sub : app.get_subcommands()) scope = sub;
        for (const auto& extra : scope->remaining()) {
            if (extra.rfind("--", 0) != 0) continue;
            if (auto s = suggest_flag(*scope, extra)) err_ << "did you mean '" << *s << "' instead of '" << extra << "'?\n";
            else if (auto g = suggest_flag(app, extra)) err_ << "did you mean '" << *g << "' instead of '" << extra << "'?\n";
        }
        err_ << "run with --help for usage\n";
    }

    void add_task_options(CLI::App* c, bool required) {
        auto* g = c->add_option_group("task");
        g->add_option("--task", task_id_, "Task id, e.g. L1T1");
        g->add_option("--task-file", task_file_, "Path to a task file")->check(CLI::ExistingFile);
        if (required) g->require_option(1);
        else g->require_option(0, 1);
    }

    TaskDef load_selected_task() const {
        if (!task_file_.empty()) return load_task_file(task_file_);
        return load_task(tasks_dir_, task_id_);
    }

    CLI::App* setup_render(CLI::App& app) {
        auto* c = app.add_subcommand("render", "Render the visual cues of a scene");
        c->add_option("--scene", scene_path_, "Scene file")->required()->check(CLI::ExistingFile);
        c->add_option("--target", target_, "Target object (default: last object in the scene)");
        c->add_option("--related", related_, "Comma-separated related ids for the side views and angles");
        c->add_option("--preset", preset_, "Cue preset")->check(CLI::IsMember(std::vector<std::string>(
                                                           std::begin(kPresetNames), std::end(kPresetNames))));
        c->add_option("--out", out_dir_, "Output directory")->required();
        c->add_flag("--png", png_, "Also write PNG rasters");
        return c;
    }

    CLI::App* setup_solve(CLI::App& app) {
        auto* c = app.add_subcommand("solve", "Place a task's targets with the solver alone");
        add_task_options(c, true);
        c->add_option("--seed", seed_, "Seed");
        c->add_option("--out", out_dir_, "Output directory");
        return c;
    }

    CLI::App* setup_run(CLI::App& app) {
        auto* c = app.add_subcommand("run", "Run the placement loop on one task");
        add_task_options(c, true);
        c->add_option("--mode", mode_, "deterministic or vlm")->check(CLI::IsMember({"deterministic", "vlm"}));
        c->add_option("--seed", seed_, "Seed");
        c->add_option("--max-loops", max_loops_, "Judge loop cap")->check(CLI::PositiveNumber);
        c->add_option("--preset", preset_, "Cue preset for vlm mode")
            ->check(CLI::IsMember(std::vector<std::string>(std::begin(kPresetNames), std::end(kPresetNames))));
        c->add_option("--out", out_dir_, "Output directory");
        vlm_.add_to(c);
        return c;
    }

    CLI::App* setup_eval(CLI::App& app) {
        auto* c = app.add_subcommand("eval", "Evaluate the task suite");
        c->add_option("--mode", mode_, "deterministic or vlm")->check(CLI::IsMember({"deterministic", "vlm"}));
        c->add_option("--trials", trials_, "Trials per task")->check(CLI::PositiveNumber);
        c->add_option("--seed", seed_, "Seed");
        c->add_option("--jobs", jobs_, "Parallel trials (default: logical CPUs)")->check(CLI::NonNegativeNumber);
        c->add_option("--max-loops", max_loops_, "Judge loop cap")->check(CLI::PositiveNumber);
        c->add_option("--tasks", tasks_list_, "Comma-separated task ids (default: all 12)");
        c->add_option("--preset", preset_, "Cue preset for vlm mode")
            ->check(CLI::IsMember(std::vector<std::string>(std::begin(kPresetNames), std::end(kPresetNames))));
        c->add_option("--require-accuracy", require_accuracy_, "Exit 1 if any task scores below this percentage");
        c->add_flag("--timing", timing_, "Report mean wall time (makes the report non-reproducible)");
        c->add_option("--out", out_dir_, "Output directory");
        vlm_.add_to(c);
        return c;
    }

    CLI::App* setup_judge(CLI::App& app) {
        auto* c = app.add_subcommand("judge", "Judge a scene against a task with the rule judge");
        add_task_options(c, true);
        c->add_option("--scene", scene_path_, "Scene to judge (default: the task's prepared scene)")
            ->check(CLI::ExistingFile);
        c->add_option("--target", target_, "Target the corrections should move (default: last task target)");
        c->add_option("--out", out_dir_, "Output directory");
        return c;
    }

    CLI::App* setup_stub(CLI::App& app) {
        auto* c = app.add_subcommand("stub-serve", "Serve scripted replies on a local chat-completions endpoint");
        c->add_option("--script", vlm_.script, "Scripted replies (JSON)")->required()->check(CLI::ExistingFile);
        c->add_option("--host", stub_host_, "Bind address");
        c->add_option("--port", stub_port_, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
        c->add_option("--port-file", port_file_, "Write the bound port to this file");
        return c;
    }

    std::filesystem::path out_path() const { return out_dir_.empty() ? std::filesystem::path(".") : std::filesystem::path(out_dir_); }

    void wrote(const std::filesystem::path& p) {
        if (porcelain_) err_ << "wrote\t" << p.generic_string() << "\n";
    }

    void write_file(const std::filesystem::path& p, std::string_view text) {
        write_text_file(p, text);
        wrote(p);
    }

    void write_binary(const std::filesystem::path& p, const std::string& bytes) {
        write_text_file(p, bytes);
        wrote(p);
    }

    int do_render() {
        const Scene scene = load_scene_file(scene_path_);
        if (scene.objects.empty()) throw SceneError("scene has no objects");
        const std::string target = target_.empty() ? scene.objects.back().id : target_;
        scene.at(target);
        const auto related = split_ids(related_);
        for (const auto& r : related) scene.at(r);
        const VacOptions opt = vac_preset(preset_);
        const VacBundle b = render_vac(scene, target, related, opt);
        const auto dir = out_path();
        for (const Drawing* dp : b.drawings()) {
            const Drawing& d = *dp;
            const std::string stem = d.name == "top" ? "top" : target + "_" + d.name;
            write_file(dir / (stem + ".svg"), to_svg(d));
            if (png_) write_binary(dir / (stem + ".png"), encode_png(rasterize(d)));
        }
        if (opt.bounding_box_text) write_file(dir / "bounding_boxes.txt", b.bounding_box);
        if (opt.relation_angle_text) write_file(dir / "relation_angles.txt", b.relation_angles);
        if (!porcelain_) out_ << "rendered " << target << " with preset " << preset_ << " into " << dir.string() << "\n";
        return kExitOk;
    }

    int do_solve() {
        const TaskDef task = load_selected_task();
        Scene scene = prepare_scene(task);
        const CompiledTask ct = compile_task(task, scene);
        std::set<std::string> placed;
        for (const auto& o : scene.objects) placed.insert(o.id);
        const auto targets = target_ids(task);
        for (const auto& t : targets) placed.erase(t);
        json report = json::object();
        report["task"] = task.id;
        report["targets"] = json::array();
        for (std::size_t i = 0; i < targets.size(); ++i) {
            placed.insert(targets[i]);
            SolveConfig cfg = task.solve;
            cfg.seed = mix_seed(seed_, i);
            const auto r = solve(scene, targets[i], restrict_problem(ct.problem, placed), cfg);
            scene = scene.with_transform(targets[i], r.final_transform);
            report["targets"].push_back({{"id", targets[i]},
                                         {"transform", to_json(r.final_transform)},
                                         {"energy", to_json(r.breakdown)},
                                         {"converged", r.converged}});
        }
        const auto e = total_energy(scene, ct.problem);
        const bool ok = e.total <= task.epsilon && success(scene, task);
        report["energy"] = to_json(e);
        report["success"] = ok;
        if (!out_dir_.empty()) {
            write_file(out_path() / "scene.json", scene_to_text(scene));
            write_file(out_path() / "solve.json", report.dump(2) + "\n");
        }
        if (porcelain_) out_ << report.dump() << "\n";
        else out_ << task.id << ": " << (ok ? "solved" : "not solved") << ", energy " << fixed(e.total, 9) << "\n";
        return ok ? kExitOk : kExitFailed;
    }

    RunOptions run_options() const {
        RunOptions ro;
        ro.mode = mode_from_string(mode_);
        ro.seed = seed_;
        ro.max_loops = max_loops_;
        ro.vac = vac_preset(preset_);
        ro.validate();
        return ro;
    }

    int do_run() {
        const TaskDef task = load_selected_task();
        const RunOptions ro = run_options();
        if (ro.mode == Mode::vlm) {
            const VlmConfig cfg = vlm_.config();
            if (vlm_.script.empty()) cfg.api_key();  // fail fast, before any work
        }
        Scene scene = prepare_scene(task);
        const RunRecord rec = ro.mode == Mode::deterministic
                                  ? run_deterministic(task, std::move(scene), ro)
                                  : run_vlm_once(task, std::move(scene), ro, vlm_,
                                                 out_dir_.empty() ? std::filesystem::path() : out_path() / "transcript.jsonl");
        const auto ids = final_ids(task, rec);
        const json j = to_json(rec, ids);
        if (!out_dir_.empty()) {
            if (ro.mode == Mode::vlm) wrote(out_path() / "transcript.jsonl");
            write_file(out_path() / "run.json", j.dump(2) + "\n");
            write_file(out_path() / "scene.json", scene_to_text(rec.final_scene));
        }
        if (porcelain_) out_ << j.dump() << "\n";
        else
            out_ << task.id << ": " << (rec.success ? "success" : "failure") << " after " << rec.judge_loops
                 << " judge loop(s)" << (rec.reason.empty() ? "" : " (" + rec.reason + ")") << "\n";
        return rec.success ? kExitOk : kExitFailed;
    }

    static std::vector<std::string> final_ids(const TaskDef& task, const RunRecord& rec) {
        auto ids = target_ids(task);
        for (const auto& s : rec.steps)
            if (std::find(ids.begin(), ids.end(), s.decision.target) == ids.end()) ids.push_back(s.decision.target);
        return ids;
    }

    int do_eval() {
        EvalOptions opt;
        opt.mode = mode_from_string(mode_);
        opt.trials = trials_;
        opt.seed = seed_;
        opt.jobs = jobs_;
        opt.max_loops = max_loops_;
        opt.vac = vac_preset(preset_);
        opt.timing = timing_;
        opt.validate();
        auto ids = tasks_list_.empty() ? all_task_ids() : split_ids(tasks_list_);
        for (const auto& id : ids)
            if (!find_catalog_entry(id)) throw UnknownIdError(id);

        ClientFactory factory;
        if (opt.mode == Mode::vlm) {
            const VlmConfig cfg = vlm_.config();
            if (vlm_.script.empty()) cfg.api_key();
            const auto tdir = out_dir_.empty() ? std::filesystem::path() : out_path() / "transcripts";
            factory = [this, tdir](const TaskDef& task, Scene scene, const RunOptions& ro) {
                std::filesystem::path log;
                if (!tdir.empty()) log = tdir / (task.id + "_" + std::to_string(ro.seed) + ".jsonl");
                return run_vlm_once(task, std::move(scene), ro, vlm_, log);
            };
        }
        const EvalReport rep = evaluate(tasks_dir_, ids, opt, factory);
        const std::string text = report_text(rep), csv = report_csv(rep);
        if (!out_dir_.empty()) {
            write_file(out_path() / "report.txt", text);
            write_file(out_path() / "report.csv", csv);
            for (const auto& t : rep.tasks) {
                if (!t.error.empty()) continue;
                TaskDef task = load_task(tasks_dir_, t.id);
                json runs = json::array();
                for (const auto& r : t.runs) runs.push_back(to_json(r, final_ids(task, r)));
                write_file(out_path() / "runs" / (t.id + ".json"), runs.dump(2) + "\n");
            }
        }
        out_ << (porcelain_ ? csv : text);
        bool failed = false;
        for (const auto& t : rep.tasks) {
            if (!t.error.empty()) failed = true;
            if (require_accuracy_ >= 0 && t.accuracy() < require_accuracy_) failed = true;
        }
        return failed ? kExitFailed : kExitOk;
    }

    int do_judge() {
        const TaskDef task = load_selected_task();
        Scene scene = scene_path_.empty() ? prepare_scene(task) : load_scene_file(scene_path_);
        const auto targets = target_ids(task);
        const std::string target = target_.empty() ? targets.back() : target_;
        RuleJudge judge;
        const Verdict v = judge.judge(scene, task, target);
        const json j = to_json(v);
        if (!out_dir_.empty()) write_file(out_path() / "verdict.json", j.dump(2) + "\n");
        if (porcelain_) {
            out_ << j.dump() << "\n";
        } else {
            out_ << task.id << ": " << (v.pass ? "pass" : "fail") << ", energy " << fixed(v.energy.total, 9) << "\n";
            for (const auto& x : v.violations) {
                out_ << "  " << to_string(x.code) << " [" << join_ids(x.subjects) << "] magnitude "
                     << fixed(x.magnitude, 6) << "\n";
            }
        }
        return v.pass ? kExitOk : kExitFailed;
    }

    int do_stub() {
        StubServer server(load_script(vlm_.script));
        const int port = server.bind(stub_host_, stub_port_);
        if (!port_file_.empty()) write_text_file(port_file_, std::to_string(port) + "\n");
        out_ << (porcelain_ ? std::to_string(port) : "serving on http://" + stub_host_ + ":" + std::to_string(port) + "/v1/chat/completions") << "\n";
        out_.flush();
        server.listen();
        return kExitOk;
    }
};

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return Cli(out, err).main(argc, argv);
}

}  // namespace ctxplace::cli
