#include <gtest/gtest.h>

#include <ctxplace/judge.hpp>

#include "fixtures.hpp"

using namespace ctxplace;
using fixtures::tasks_dir;

namespace {

TaskDef task(const std::string& id) { return load_task(tasks_dir(), id); }

Scene posed(const TaskDef& t, std::initializer_list<std::pair<const char*, Transform>> poses) {
    Scene s = prepare_scene(t);
    for (const auto& [id, tr] : poses) s = s.with_transform(id, tr);
    return s;
}

Transform at(double x, double y, double z, double yaw = 0) { return Transform{{x, y, z}, {yaw, 0, 0}}; }

}  // namespace

TEST(Catalog, TwelveTasksThreePerLevel) {
    ASSERT_EQ(std::size(kTaskCatalog), 12u);
    int per_level[5] = {0, 0, 0, 0, 0};
    for (const auto& e : kTaskCatalog) {
        ++per_level[e.level];
        const std::string expected_id = "L" + std::to_string(e.level) + "T" + std::to_string(per_level[e.level]);
        EXPECT_EQ(e.id, expected_id);
    }
    for (int l = 1; l <= 4; ++l) EXPECT_EQ(per_level[l], 3);
}

TEST(Catalog, TitlesVerbatim) {
    EXPECT_EQ(find_catalog_entry("L1T1")->title, "Put a cup on the table.");
    EXPECT_EQ(find_catalog_entry("L2T3")->title, "Line up a group of people.");
    EXPECT_EQ(find_catalog_entry("L3T3")->title, "Arrange a classroom layout");
    EXPECT_EQ(find_catalog_entry("L4T1")->title, "Place a pair of KOMAINU statues at a Shinto shrine.");
    EXPECT_EQ(find_catalog_entry("L4T2")->title, "Assemble a KAGAMI-MOCHI.");
    EXPECT_EQ(find_catalog_entry("L4T3")->title, "Set up a HINA-MATSURI display.");
    EXPECT_EQ(find_catalog_entry("L9T9"), nullptr);
}

TEST(TaskFiles, AllLoadAndCompile) {
    for (const auto& e : kTaskCatalog) {
        SCOPED_TRACE(std::string(e.id));
        const TaskDef t = task(std::string(e.id));
        EXPECT_EQ(t.level, e.level);
        EXPECT_EQ(t.title, e.title);
        EXPECT_FALSE(t.instruction.targets.empty());
        const Scene s = prepare_scene(t);
        for (const auto& id : target_ids(t)) EXPECT_NE(s.find(id), nullptr);
        const CompiledTask ct = compile_task(t, s);
        EXPECT_EQ(ct.constraints.size(), t.constraints.size());
        EXPECT_GT(t.epsilon, 0);
    }
}

TEST(TaskFiles, EveryLevelHasAPersonOrDoll) {
    for (int level = 1; level <= 4; ++level) {
        bool found = false;
        for (const auto& e : kTaskCatalog) {
            if (e.level != level) continue;
            const Scene s = prepare_scene(task(std::string(e.id)));
            for (const auto& o : s.objects) {
                const auto& tags = s.asset(o.asset_id).tags;
                if (std::find(tags.begin(), tags.end(), "human") != tags.end() ||
                    std::find(tags.begin(), tags.end(), "doll") != tags.end())
                    found = true;
            }
        }
        EXPECT_TRUE(found) << "level " << level;
    }
}

TEST(TaskFiles, CulturalFactsAreEncodedAsData) {
    const TaskDef komainu = task("L4T1");
    int regions = 0;
    for (const auto& c : komainu.constraints)
        if (c.kind == ConstraintKind::region) ++regions;
    EXPECT_EQ(regions, 2);
    const TaskDef mochi = task("L4T2");
    const auto it = std::find_if(mochi.constraints.begin(), mochi.constraints.end(),
                                 [](const ConstraintSpec& c) { return c.kind == ConstraintKind::stack_order; });
    ASSERT_NE(it, mochi.constraints.end());
    EXPECT_EQ(it->participants, (std::vector<std::string>{"mochi_large", "mochi_small", "mandarin"}));
    const TaskDef line = task("L2T3");
    EXPECT_EQ(line.instruction.targets.size(), 3u);
}

TEST(Success, CupCenteredOnTable) {
    const TaskDef t = task("L1T1");
    EXPECT_TRUE(success(posed(t, {{"cup", at(0, 0.8, 0)}}), t));
}

TEST(Success, FloatingPillowFails) {
    const TaskDef t = task("L1T3");
    const auto rep = success_report(posed(t, {{"pillow", at(0, 0.98, -0.7)}}), t);
    EXPECT_FALSE(rep.ok);
    EXPECT_NE(rep.reason.find("floating"), std::string::npos) << rep.reason;
}

TEST(Success, KnifeOnThePlatesLeftFails) {
    const TaskDef t = task("L3T2");
    // the diner faces -z, so their right is world -x
    const Scene good = posed(t, {{"plate", at(0, 0.76, 0.15, 180)},
                                 {"knife", at(-0.2, 0.755, 0.15, 180)},
                                 {"fork", at(0.2, 0.755, 0.15, 180)}});
    EXPECT_TRUE(success(good, t)) << success_report(good, t).reason;
    const Scene swapped = posed(t, {{"plate", at(0, 0.76, 0.15, 180)},
                                    {"knife", at(0.2, 0.755, 0.15, 180)},
                                    {"fork", at(-0.2, 0.755, 0.15, 180)}});
    const auto rep = success_report(swapped, t);
    EXPECT_FALSE(rep.ok);
    EXPECT_NE(rep.reason.find("side_of"), std::string::npos) << rep.reason;
}

TEST(Success, MissingObjectIsFalseWithReason) {
    const TaskDef t = task("L1T1");
    const auto rep = success_report(t.scene, t);  // the cup has not been created
    EXPECT_FALSE(rep.ok);
    EXPECT_NE(rep.reason.find("cup"), std::string::npos);
}

TEST(Fixtures, AtLeastThreePassAndThreeFailPerTask) {
    for (const auto& e : kTaskCatalog) {
        const auto fx = fixtures::load(std::string(e.id));
        const auto passes = std::count_if(fx.begin(), fx.end(), [](const auto& f) { return f.expect_pass; });
        EXPECT_GE(passes, 3) << e.id;
        EXPECT_GE(static_cast<long>(fx.size()) - passes, 3) << e.id;
    }
}

// Success and zero energy agree on every handcrafted scene; failing scenes
// produce the expected violation code.
TEST(Fixtures, PredicateEnergyAndJudgeAgree) {
    for (const auto& e : kTaskCatalog) {
        const TaskDef t = task(std::string(e.id));
        for (const auto& f : fixtures::load(t.id)) {
            SCOPED_TRACE(t.id + ": " + f.name);
            const auto o = fixtures::evaluate(t, f);
            EXPECT_EQ(o.predicate, o.energy_ok) << o.reason;
            EXPECT_EQ(o.predicate, f.expect_pass) << o.reason;
            EXPECT_EQ(o.verdict.pass, f.expect_pass);
            EXPECT_EQ(o.verdict.pass, o.verdict.violations.empty());
            if (!f.expect_pass) {
                ASSERT_TRUE(f.code.has_value());
                EXPECT_TRUE(o.has_code) << "expected " << to_string(*f.code) << ", got "
                                        << to_json(o.verdict).dump();
            }
        }
    }
}

TEST(Fixtures, NamedFailureScenariosPresent) {
    const std::pair<const char*, const char*> scenarios[] = {{"L1T3", "floating pillow"},
                                                             {"L4T3", "midair hina doll"},
                                                             {"L3T1", "reversed keeper"},
                                                             {"L3T2", "knife and fork swapped"},
                                                             {"L4T1", "swapped komainu"}};
    for (const auto& [id, name] : scenarios) {
        const auto fx = fixtures::load(id);
        EXPECT_TRUE(std::any_of(fx.begin(), fx.end(), [&](const auto& f) { return f.name == name && !f.expect_pass; }))
            << id << " " << name;
    }
}

// Random poses around each task's fixtures. Energies are squared excesses, so
// the exact statement is: the predicate holds iff the energy is zero up to
// rounding. (Against epsilon instead, a band of excess below sqrt(epsilon)
// would count as satisfied by the energy but not by the predicate.)
TEST(Agreement, RandomPerturbationsAroundFixtures) {
    SplitMix64 rng(77);
    int passes = 0, fails = 0;
    for (const auto& e : kTaskCatalog) {
        const TaskDef t = task(std::string(e.id));
        const auto fx = fixtures::load(t.id);
        for (int trial = 0; trial < 60; ++trial) {
            Scene s = fixtures::apply(t, fx[static_cast<std::size_t>(trial) % fx.size()]);
            for (const auto& id : target_ids(t)) {
                Transform tr = transform_of(s.at(id));
                const double scale = rng.uniform() < 0.5 ? 0.01 : 0.2;
                tr.position.x += rng.uniform(-scale, scale);
                tr.position.y += rng.uniform(-scale, scale) * 0.2;
                tr.position.z += rng.uniform(-scale, scale);
                tr.orientation.yaw += rng.uniform(-30, 30) * scale;
                s = s.with_transform(id, tr);
            }
            const bool pred = success(s, t);
            const double total = total_energy(s, compile_task(t, s).problem).total;
            EXPECT_EQ(pred, total <= 1e-15) << t.id << " trial " << trial << " energy " << total << " "
                                             << success_report(s, t).reason;
            (pred ? passes : fails)++;
        }
    }
    EXPECT_GT(passes, 20);
    EXPECT_GT(fails, 20);
}

TEST(TaskParsing, RejectsBadDocuments) {
    const auto base = tasks_dir();
    json j = parse_json_text(read_text_file(base / "L1T1.task.json"), "L1T1");
    {
        json bad = j;
        bad["title"] = "Put a mug on the table.";
        EXPECT_THROW(task_from_json(bad, base), SpecError);
    }
    {
        json bad = j;
        bad["constraints"][0]["kind"] = "levitates";
        EXPECT_THROW(task_from_json(bad, base), SpecError);
    }
    {
        json bad = j;
        bad["level"] = 7;
        EXPECT_THROW(task_from_json(bad, base), SpecError);
    }
    {
        json bad = j;
        bad["spawn_jitter"] = {{"position", -1}};
        EXPECT_THROW(task_from_json(bad, base), SpecError);
    }
    {
        json bad = j;
        bad["instruction"]["targets"] = json::array();
        EXPECT_THROW(task_from_json(bad, base), SpecError);
    }
    EXPECT_THROW(load_task(base, "L5T1"), UnknownIdError);
}

TEST(TaskParsing, CulturalKindCannotBeSocial) {
    const auto base = tasks_dir();
    json j = parse_json_text(read_text_file(base / "L4T2.task.json"), "L4T2");
    for (auto& c : j["constraints"])
        if (c["kind"] == "stack_order") c["term"] = "social";
    const TaskDef t = task_from_json(j, base);
    EXPECT_THROW(compile_task(t, prepare_scene(t)), SpecError);
}

TEST(Restrict, KeepsOnlyPlacedObjects) {
    const TaskDef t = task("L3T2");
    const Scene s = prepare_scene(t);
    const auto ct = compile_task(t, s);
    const Problem p = restrict_problem(ct.problem, {"floor", "table", "diner", "plate"});
    for (const auto& r : p.relations) {
        EXPECT_NE(r.subject_id, "knife");
        EXPECT_NE(r.subject_id, "fork");
    }
    EXPECT_TRUE(p.collision_pairs.empty());
    EXPECT_FALSE(p.relations.empty());
    EXPECT_FALSE(p.affordances.empty());
}
