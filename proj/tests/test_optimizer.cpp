#include <gtest/gtest.h>

#include <ctxplace/optimizer.hpp>

using namespace ctxplace;

namespace {

Scene desk_scene(Vec3 chair_pos, double chair_yaw) {
    Scene s;
    s.catalog.push_back(AssetRecord{"desk", {0.6, 0.375, 0.35}, {0, 0, 1}, {{"top_surface", {0, 0.375, 0}}}, {}});
    s.catalog.push_back(AssetRecord{"chair", {0.22, 0.45, 0.22}, {0, 0, 1}, {}, {}});
    s.objects.push_back(instantiate(s.catalog[0], "desk", {{0, 0.375, 0}, {}}));
    s.objects.push_back(instantiate(s.catalog[1], "chair", {chair_pos, {chair_yaw, 0, 0}}));
    return s;
}

Problem chair_problem() {
    Problem p;
    p.collision_pairs = {{"chair", "desk"}};
    PairRelation near{"chair", "desk", "", Frame::world, {}, {false, true, false}, {1.2, 0, 1.2}, true};
    p.relations.push_back(near);
    p.affordances.push_back({"chair", "desk", "", AffordanceMode::face_toward, 15, 1});
    return p;
}

}  // namespace

TEST(Solve, StartAtOptimumConvergesImmediately) {
    Scene s;
    s.catalog.push_back(AssetRecord{"table", {0.6, 0.4, 0.4}, {0, 0, 1}, {{"top_surface", {0, 0.4, 0}}}, {}});
    s.catalog.push_back(AssetRecord{"cup", {0.04, 0.05, 0.04}, {0, 0, 1}, {}, {}});
    s.objects.push_back(instantiate(s.catalog[0], "table", {{0, 0.4, 0}, {}}));
    s.objects.push_back(instantiate(s.catalog[1], "cup", {{0.1, 0.85, 0}, {}}));
    Problem p;
    p.relations.push_back({"cup", "table", "top_surface", Frame::related, {0, 0.05, 0}, {}, {0.5, 0.008, 0.3}, false});
    const auto r = solve(s, "cup", p);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.breakdown.total, 0.0);
    EXPECT_LE(r.iterations_used, 1);
    EXPECT_EQ(r.final_transform.position, (Vec3{0.1, 0.85, 0}));
}

TEST(Solve, ChairTurnsAndApproachesDesk) {
    const Scene s = desk_scene({0, 0.45, -3}, 180);
    const Problem p = chair_problem();
    const auto r = solve(s, "chair", p);
    ASSERT_TRUE(r.converged) << r.diagnostic;
    const Scene out = s.with_transform("chair", r.final_transform);
    const auto& chair = out.at("chair");
    const double bearing = bearing_deg(-chair.position.x, -chair.position.z);
    EXPECT_LE(std::abs(wrap180(bearing - front_yaw(chair))), 15.0 + 1e-9);
    const Vec3 res = relation_residual(out, p.relations[0]);
    EXPECT_LE(std::hypot(res.x, res.z), 1.2 + 1e-3);
    EXPECT_EQ(pair_overlap(out, "chair", "desk", 0.0), 0.0);
}

TEST(Solve, ContradictoryProblemReportsFailure) {
    const Scene s = desk_scene({2, 0.45, 0}, 0);
    Problem p;
    p.collision_pairs = {{"chair", "desk"}};
    // demand the chair sit at the desk center while forbidding overlap
    p.relations.push_back({"chair", "desk", "", Frame::world, {0, 0.075, 0}, {}, {}, false});
    const auto r = solve(s, "chair", p);
    EXPECT_FALSE(r.converged);
    EXPECT_GT(r.breakdown.total, 0.0);
    EXPECT_FALSE(r.diagnostic.empty());
}

TEST(Solve, TrajectoriesStrictlyDecreaseAndNeverEndWorse) {
    SplitMix64 rng(77);
    for (int t = 0; t < 10; ++t) {
        const Scene s = desk_scene({rng.uniform(-4, 4), rng.uniform(0, 2), rng.uniform(-4, 4)}, rng.uniform(0, 360));
        SolveConfig cfg;
        cfg.seed = rng.next();
        cfg.restarts = 3;
        const auto r = solve(s, "chair", chair_problem(), cfg);
        for (const auto& traj : r.trajectories)
            for (std::size_t i = 1; i < traj.size(); ++i) EXPECT_LT(traj[i], traj[i - 1]);
        EXPECT_LE(r.breakdown.total, r.initial_total);
        if (r.converged) {
            EXPECT_LE(r.breakdown.total, cfg.target_epsilon);
        }
    }
}

TEST(Solve, IdenticalInputsGiveIdenticalResults) {
    const Scene s = desk_scene({1.7, 0.2, -2.3}, 77);
    SolveConfig cfg;
    cfg.seed = 12345;
    const auto a = solve(s, "chair", chair_problem(), cfg);
    const auto b = solve(s, "chair", chair_problem(), cfg);
    EXPECT_EQ(a.final_transform, b.final_transform);
    EXPECT_EQ(a.breakdown, b.breakdown);
    EXPECT_EQ(a.trajectories, b.trajectories);
    EXPECT_EQ(a.iterations_used, b.iterations_used);
}

TEST(Solve, DistanceOnlyMatchesClosedForm) {
    SplitMix64 rng(4242);
    for (int t = 0; t < 10; ++t) {
        Scene s = desk_scene({rng.uniform(-3, 3), rng.uniform(0, 2), rng.uniform(-3, 3)}, rng.uniform(0, 360));
        Problem p;
        const Vec3 d{rng.uniform(-2, 2), rng.uniform(-1, 1), rng.uniform(-2, 2)};
        PairRelation rel{"chair", "desk", "", Frame::world, d, {false, rng.uniform() < 0.5, false}, {}, false};
        p.relations.push_back(rel);
        const auto r = solve(s, "chair", p);
        const Vec3 want = s.at("desk").position + d;
        EXPECT_NEAR(r.final_transform.position.x, want.x, 1e-3);
        EXPECT_NEAR(r.final_transform.position.z, want.z, 1e-3);
        if (!rel.free[1]) {
            EXPECT_NEAR(r.final_transform.position.y, want.y, 1e-3);
        }
    }
}

TEST(Solve, RejectsBadInput) {
    const Scene s = desk_scene({1, 0, 1}, 0);
    EXPECT_THROW(solve(s, "ghost", Problem{}), UnknownIdError);
    SolveConfig bad;
    bad.step_decay = 1.0;
    EXPECT_THROW(solve(s, "chair", Problem{}, bad), ConfigError);
    Problem p;
    p.relations.push_back({"chair", "nothing", "", Frame::world, {}, {}, {}, false});
    EXPECT_THROW(solve(s, "chair", p), UnknownIdError);
}

TEST(ApplyCorrection, ZeroAndFullTurnAreIdentity) {
    const Scene s = desk_scene({1, 0.45, 1}, 33);
    EXPECT_EQ(apply_correction(s, "chair", {}), s);
    EXPECT_EQ(apply_correction(s, "chair", {{}, 360}), s);
    EXPECT_EQ(apply_correction(s, "chair", {{}, -720}), s);
}

TEST(ApplyCorrection, TranslationShiftsAabb) {
    const Scene s = desk_scene({1, 0.45, 1}, 33);
    const Scene t = apply_correction(s, "chair", {{1, 0, 0}, 0});
    const Aabb a = world_aabb(s.at("chair")), b = world_aabb(t.at("chair"));
    EXPECT_NEAR(b.min.x - a.min.x, 1.0, 1e-12);
    EXPECT_NEAR(b.max.x - a.max.x, 1.0, 1e-12);
    EXPECT_EQ(t.at("desk"), s.at("desk"));
    const Scene u = apply_correction(s, "chair", {{}, 350});
    EXPECT_DOUBLE_EQ(u.at("chair").orientation.yaw, 23);
    EXPECT_THROW(apply_correction(s, "ghost", {}), UnknownIdError);
}
