#include <gtest/gtest.h>

#include <ctxplace/evaluation.hpp>

#include "transcripts.hpp"

using namespace ctxplace;
using fixtures::tasks_dir;

namespace {

EvalOptions opts(int trials, int jobs = 1) {
    EvalOptions o;
    o.trials = trials;
    o.jobs = jobs;
    return o;
}

ClientFactory replaying(const std::string& name) {
    const auto tr = transcripts::load(name);
    return [tr](const TaskDef& task, Scene scene, const RunOptions& ro) {
        ScriptedTransport transport(tr.replies);
        VlmClient client(transport, VlmConfig{}, PromptLibrary::embedded());
        return run_vlm(task, std::move(scene), ro, client);
    };
}

TaskResult result(const std::string& id, int level, int trials, int successes, double loops) {
    TaskResult t;
    t.id = id;
    t.level = level;
    t.title = "t " + id;
    t.trials = trials;
    t.successes = successes;
    t.mean_loops = loops;
    return t;
}

}  // namespace

TEST(ReportArithmetic, AccuracyIsExactRatio) {
    for (int trials = 1; trials <= 12; ++trials)
        for (int s = 0; s <= trials; ++s) {
            const TaskResult t = result("L1T1", 1, trials, s, 1.0);
            EXPECT_EQ(t.accuracy(), 100.0 * s / trials);
            EXPECT_GE(t.accuracy(), 0.0);
            EXPECT_LE(t.accuracy(), 100.0);
        }
}

TEST(ReportText, FixedLayout) {
    EvalReport rep;
    rep.trials = 10;
    rep.tasks = {result("L1T1", 1, 10, 10, 1.0), result("L3T2", 3, 10, 7, 2.35)};
    TaskResult broken;
    broken.id = "L4T3";
    broken.level = 4;
    broken.error = "cannot read file";
    rep.tasks.push_back(broken);
    const std::string expected =
        "# evaluation mode=deterministic trials=10 seed=0\n"
        "level         |          1          |          2          |          3          |          4          \n"
        "task          |  task1  task2  task3|  task1  task2  task3|  task1  task2  task3|  task1  task2  task3\n"
        "--------------+---------------------+---------------------+---------------------+---------------------\n"
        "accuracy (%)  |    100    n/a    n/a|    n/a    n/a    n/a|    n/a     70    n/a|    n/a    n/a    n/a\n"
        "speed (s)     |      -    n/a    n/a|    n/a    n/a    n/a|    n/a      -    n/a|    n/a    n/a    n/a\n"
        "loops         |    1.0    n/a    n/a|    n/a    n/a    n/a|    n/a    2.4    n/a|    n/a    n/a    n/a\n"
        "\n"
        "errors:\n"
        "  L4T3: cannot read file\n";
    EXPECT_EQ(report_text(rep), expected);
}

TEST(ReportText, TimingShowsSeconds) {
    EvalReport rep;
    rep.timing = true;
    TaskResult t = result("L2T1", 2, 4, 4, 1.0);
    t.mean_seconds = 0.126;
    rep.tasks = {t};
    EXPECT_NE(report_text(rep).find("   0.13"), std::string::npos);
    EXPECT_NE(report_csv(rep).find(",0.126,ok"), std::string::npos);
}

TEST(ReportCsv, QuotesAndErrors) {
    EvalReport rep;
    TaskResult t = result("L1T1", 1, 4, 3, 1.5);
    t.title = "Put a cup, \"nicely\"";
    TaskResult bad;
    bad.id = "L2T1";
    bad.level = 2;
    bad.title = "x";
    bad.error = "boom";
    rep.tasks = {t, bad};
    EXPECT_EQ(report_csv(rep),
              "task,level,title,trials,successes,accuracy,mean_loops,mean_seconds,status\n"
              "L1T1,1,\"Put a cup, \"\"nicely\"\"\",4,3,75.0,1.50,,ok\n"
              "L2T1,2,x,,,,,,error: boom\n");
}

TEST(Seeds, TrialSeedsAreDistinct) {
    std::set<std::uint64_t> seen;
    for (const auto& id : all_task_ids())
        for (int t = 0; t < 10; ++t) seen.insert(trial_seed(0, id, t));
    EXPECT_EQ(seen.size(), 120u);
    EXPECT_NE(trial_seed(0, "L1T1", 0), trial_seed(1, "L1T1", 0));
}

TEST(Seeds, TrialSceneJitterStaysInBounds) {
    const TaskDef t = load_task(tasks_dir(), "L3T1");
    const Scene base = prepare_scene(t);
    bool moved = false;
    for (int k = 0; k < 50; ++k) {
        const Scene s = trial_scene(t, trial_seed(3, t.id, k));
        for (const auto& id : target_ids(t)) {
            const auto& a = s.at(id);
            const auto& b = base.at(id);
            EXPECT_LE(std::abs(a.position.x - b.position.x), t.spawn_jitter + 1e-12);
            EXPECT_LE(std::abs(a.position.z - b.position.z), t.spawn_jitter + 1e-12);
            EXPECT_EQ(a.position.y, b.position.y);
            EXPECT_LE(std::abs(wrap180(a.orientation.yaw - b.orientation.yaw)), t.spawn_jitter_yaw + 1e-9);
            moved = moved || a.position.x != b.position.x;
        }
    }
    EXPECT_TRUE(moved);
}

TEST(Evaluate, SingleTrivialTrialTakesOneLoop) {
    const EvalReport rep = evaluate(tasks_dir(), {"L1T1"}, opts(1));
    ASSERT_EQ(rep.tasks.size(), 1u);
    EXPECT_EQ(rep.tasks[0].trials, 1);
    EXPECT_EQ(rep.tasks[0].accuracy(), 100.0);
    EXPECT_EQ(rep.tasks[0].mean_loops, 1.0);
}

TEST(Evaluate, ReportsAreByteIdenticalAndJobIndependent) {
    const auto ids = all_task_ids();
    const EvalReport a = evaluate(tasks_dir(), ids, opts(2, 1));
    const EvalReport b = evaluate(tasks_dir(), ids, opts(2, 3));
    const EvalReport c = evaluate(tasks_dir(), ids, opts(2, 1));
    EXPECT_EQ(report_text(a), report_text(b));
    EXPECT_EQ(report_text(a), report_text(c));
    EXPECT_EQ(report_csv(a), report_csv(b));
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto targets = target_ids(load_task(tasks_dir(), ids[i]));
        for (int t = 0; t < 2; ++t)
            EXPECT_EQ(to_json(a.tasks[i].runs[t], targets).dump(), to_json(b.tasks[i].runs[t], targets).dump());
        EXPECT_EQ(a.tasks[i].accuracy(), 100.0) << ids[i];
    }
}

TEST(Evaluate, BrokenTaskIsMarkedAndOthersRun) {
    const auto dir = std::filesystem::temp_directory_path() / "ctxplace_eval_broken";
    std::filesystem::remove_all(dir);
    std::filesystem::copy(tasks_dir(), dir, std::filesystem::copy_options::recursive);
    write_text_file(dir / "L2T1.task.json", "{ not json");
    const EvalReport rep = evaluate(dir, {"L1T1", "L2T1", "L1T2"}, opts(1));
    std::filesystem::remove_all(dir);
    ASSERT_EQ(rep.tasks.size(), 3u);
    EXPECT_FALSE(rep.tasks[1].error.empty());
    EXPECT_EQ(rep.tasks[1].level, 2);
    EXPECT_TRUE(rep.tasks[0].error.empty());
    EXPECT_EQ(rep.tasks[2].accuracy(), 100.0);
    const std::string text = report_text(rep);
    EXPECT_NE(text.find("errors:\n  L2T1: "), std::string::npos) << text;
    EXPECT_NE(report_csv(rep).find("L2T1,2,"), std::string::npos);
}

TEST(Evaluate, ReplayedFailingTranscriptScoresZero) {
    EvalOptions o = opts(3);
    o.mode = Mode::vlm;
    const EvalReport bad = evaluate(tasks_dir(), {"L1T3"}, o, replaying("pillow_missed_float"));
    EXPECT_EQ(bad.tasks[0].accuracy(), 0.0);
    EXPECT_EQ(bad.tasks[0].mean_loops, 1.0);
    const EvalReport good = evaluate(tasks_dir(), {"L2T2"}, o, replaying("chair_three_loops"));
    EXPECT_EQ(good.tasks[0].accuracy(), 100.0);
    EXPECT_EQ(good.tasks[0].mean_loops, 3.0);
}

TEST(Evaluate, VlmWithoutClientIsAnError) {
    EvalOptions o = opts(1);
    o.mode = Mode::vlm;
    const EvalReport rep = evaluate(tasks_dir(), {"L1T1"}, o);
    EXPECT_NE(rep.tasks[0].error.find("client"), std::string::npos);
}

TEST(Evaluate, RejectsBadOptions) {
    EXPECT_THROW(evaluate(tasks_dir(), {"L1T1"}, opts(0)), ConfigError);
    EXPECT_THROW(evaluate(tasks_dir(), {"L1T1"}, opts(1, -1)), ConfigError);
}
