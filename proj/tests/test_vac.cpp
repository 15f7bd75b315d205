#include <gtest/gtest.h>

#include <ctxplace/optimizer.hpp>
#include <ctxplace/vac.hpp>

using namespace ctxplace;

namespace {

AssetRecord asset(std::string id, Vec3 half, std::vector<std::string> tags = {}) {
    return AssetRecord{std::move(id), half, {0, 0, 1}, {}, std::move(tags)};
}

Scene two_chairs(double gap_x) {
    Scene s;
    s.catalog.push_back(asset("chair", {0.25, 0.45, 0.25}));
    s.objects.push_back(instantiate(s.catalog[0], "c1", {{0, 0.45, 0}, {}}));
    s.objects.push_back(instantiate(s.catalog[0], "c2", {{gap_x, 0.45, 0}, {}}));
    return s;
}

std::vector<const CirclePrim*> circles_of(const Drawing& d) {
    std::vector<const CirclePrim*> v;
    for (const auto& p : d.prims)
        if (const auto* c = std::get_if<CirclePrim>(&p)) v.push_back(c);
    return v;
}

std::vector<std::string> labels_of(const Drawing& d) {
    std::vector<std::string> v;
    for (const auto& p : d.prims)
        if (const auto* t = std::get_if<TextPrim>(&p)) v.push_back(t->text);
    return v;
}

// Bounding box of the first filled polygon drawn (the object's silhouette).
std::array<double, 4> first_outline_bounds(const Drawing& d, std::size_t which = 0) {
    std::size_t seen = 0;
    for (const auto& p : d.prims)
        if (const auto* poly = std::get_if<PolyPrim>(&p); poly && poly->fill && poly->closed && seen++ == which) {
            std::array<double, 4> b{1e300, -1e300, 1e300, -1e300};
            for (const auto& q : poly->pts) {
                b[0] = std::min(b[0], q.x), b[1] = std::max(b[1], q.x);
                b[2] = std::min(b[2], q.z), b[3] = std::max(b[3], q.z);
            }
            return b;
        }
    ADD_FAILURE() << "no outline";
    return {};
}

}  // namespace

TEST(VacPresets, SevenNamedPresetsAndDefault) {
    for (auto name : kPresetNames) {
        const auto o = vac_preset(name);
        EXPECT_NO_THROW(o.validate());
        EXPECT_EQ(o.preset, name);
        EXPECT_TRUE(o.four_views);
    }
    const auto d = default_vac_options();
    EXPECT_EQ(d.preset, "triple+ra+bb+top");
    EXPECT_TRUE(d.front_marker_triple && d.relation_angle_text && d.bounding_box_text && d.top_view);
    EXPECT_FALSE(vac_preset("none").bounding_box_text);
    EXPECT_TRUE(vac_preset("bb").bounding_box_text);
    EXPECT_FALSE(vac_preset("bb").relation_angle_text);
    EXPECT_TRUE(vac_preset("wf+ra+bb").wireframe);
    EXPECT_TRUE(vac_preset("sd+ra+bb").front_shader);
    EXPECT_TRUE(vac_preset("single+ra+bb").front_marker_single);
    EXPECT_THROW(vac_preset("fancy"), ConfigError);
    VacOptions both;
    both.front_marker_single = both.front_marker_triple = true;
    EXPECT_THROW(both.validate(), ConfigError);
    EXPECT_THROW(render_top_view(two_chairs(5), "c1", both), ConfigError);
}

TEST(ClearanceCircles, FarChairsAreGreen) {
    const auto d = render_top_view(two_chairs(5), "c1", default_vac_options());
    const auto cs = circles_of(d);
    ASSERT_EQ(cs.size(), 2u);
    for (const auto* c : cs) EXPECT_EQ(c->stroke, colors::circle_free);
}

TEST(ClearanceCircles, CloseChairsAreRed) {
    // r = 0.25*sqrt(2) each; red once the gap is below (4/3)(r1 + r2)
    const double limit = 4.0 / 3.0 * 2 * 0.25 * std::sqrt(2.0);
    const auto near = render_top_view(two_chairs(limit - 1e-6), "c1", default_vac_options());
    for (const auto* c : circles_of(near)) EXPECT_EQ(c->stroke, colors::circle_hit);
    const auto far = render_top_view(two_chairs(limit + 1e-6), "c1", default_vac_options());
    for (const auto* c : circles_of(far)) EXPECT_EQ(c->stroke, colors::circle_free);
}

TEST(ClearanceCircles, ColorMatchesIndependentPredicateOnRandomScenes) {
    SplitMix64 rng(314);
    for (int t = 0; t < 100; ++t) {
        Scene s;
        const int n = 2 + static_cast<int>(rng.next() % 4);
        std::vector<std::array<double, 3>> disk;  // x, z, radius
        for (int i = 0; i < n; ++i) {
            const Vec3 h{rng.uniform(0.05, 0.8), rng.uniform(0.05, 1), rng.uniform(0.05, 0.8)};
            s.catalog.push_back(asset("a" + std::to_string(i), h));
            const Vec3 pos{rng.uniform(-3, 3), h.y, rng.uniform(-3, 3)};
            s.objects.push_back(instantiate(s.catalog.back(), "o" + std::to_string(i), {pos, {rng.uniform(0, 360), 0, 0}}));
            disk.push_back({pos.x, pos.z, 4.0 / 3.0 * std::hypot(h.x, h.z)});
        }
        const auto circles = clearance_circles(s);
        ASSERT_EQ(circles.size(), static_cast<std::size_t>(n));
        const auto drawn = circles_of(render_top_view(s, "o0", default_vac_options()));
        ASSERT_EQ(drawn.size(), static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            bool hit = false, boundary = false;
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                const double gap = std::hypot(disk[i][0] - disk[j][0], disk[i][1] - disk[j][1]) - disk[i][2] - disk[j][2];
                hit = hit || gap < 0;
                boundary = boundary || std::abs(gap) < 1e-9;
            }
            if (boundary) continue;
            EXPECT_NEAR(circles[static_cast<std::size_t>(i)].radius, disk[static_cast<std::size_t>(i)][2], 1e-9);
            EXPECT_EQ(circles[static_cast<std::size_t>(i)].colliding, hit) << "scene " << t << " obj " << i;
            EXPECT_EQ(drawn[static_cast<std::size_t>(i)]->stroke, hit ? colors::circle_hit : colors::circle_free);
        }
    }
}

TEST(ClearanceCircles, IndicesFollowInsertionOrderAndSkipGround) {
    Scene s;
    s.catalog.push_back(asset("floor", {5, 0.01, 5}, {"ground"}));
    s.catalog.push_back(asset("stool", {0.2, 0.3, 0.2}));
    s.objects.push_back(instantiate(s.catalog[1], "zed", {{2, 0.3, 0}, {}}));
    s.objects.push_back(instantiate(s.catalog[0], "floor", {{0, -0.01, 0}, {}}));
    s.objects.push_back(instantiate(s.catalog[1], "alpha", {{-2, 0.3, 0}, {}}));
    s.objects.push_back(instantiate(s.catalog[1], "mid", {{0, 0.3, 2}, {}}));
    const auto d = render_top_view(s, "zed", default_vac_options());
    EXPECT_EQ(labels_of(d), (std::vector<std::string>{"0", "1", "2"}));
    const auto cs = clearance_circles(s);
    ASSERT_EQ(cs.size(), 3u);
    EXPECT_EQ(cs[0].id, "zed");
    EXPECT_EQ(cs[1].id, "alpha");
    EXPECT_EQ(cs[2].id, "mid");
    for (const auto& c : cs) EXPECT_FALSE(c.colliding);
}

TEST(TopView, DeterministicAndContainsEveryOutline) {
    SplitMix64 rng(8);
    for (int t = 0; t < 20; ++t) {
        Scene s;
        s.catalog.push_back(asset("box", {rng.uniform(0.1, 1), 0.5, rng.uniform(0.1, 1)}));
        for (int i = 0; i < 4; ++i)
            s.objects.push_back(instantiate(s.catalog[0], "b" + std::to_string(i),
                                            {{rng.uniform(-20, 20), 0.5, rng.uniform(-20, 20)}, {rng.uniform(0, 360), 0, 0}}));
        for (auto name : kPresetNames) {
            auto opt = vac_preset(name);
            opt.top_view = true;
            const auto d = render_top_view(s, "b0", opt);
            EXPECT_EQ(to_svg(d), to_svg(render_top_view(s, "b0", opt)));
            const Viewport vp = fit_viewport(d, 640);
            for (const auto& o : s.objects) {
                const auto fp = footprint(o);
                for (const auto& q : fp.vertices()) {
                    EXPECT_GE(vp.px(q.x), 0.0);
                    EXPECT_LE(vp.px(q.x), vp.width);
                    EXPECT_GE(vp.py(q.z), 0.0);
                    EXPECT_LE(vp.py(q.z), vp.height + 1.0);
                }
            }
        }
    }
}

TEST(TopView, FrontShaderSplitsFootprintInHalves) {
    Scene s = two_chairs(5);
    s.at_mut("c1").orientation.yaw = 90;
    auto opt = vac_preset("sd+ra+bb");
    opt.top_view = true;
    const auto d = render_top_view(s, "c1", opt);
    double front = 0, back = 0;
    for (const auto& p : d.prims)
        if (const auto* poly = std::get_if<PolyPrim>(&p); poly && poly->fill) {
            const auto hull = convex_hull(poly->pts);
            const Point2 c = footprint_center(hull);
            if (*poly->fill == colors::shade_front && c.x < 2) {
                front += polygon_area(hull);
                EXPECT_GT(c.x, 0.0);  // yaw 90 faces +x
            }
            if (*poly->fill == colors::shade_back && c.x < 2) {
                back += polygon_area(hull);
                EXPECT_LT(c.x, 0.0);
            }
        }
    EXPECT_NEAR(front, 0.125, 1e-12);
    EXPECT_NEAR(back, 0.125, 1e-12);
}

TEST(FourViews, SingleCubeGivesFourEqualSquares) {
    Scene s;
    s.catalog.push_back(asset("cube", {0.5, 0.5, 0.5}));
    s.objects.push_back(instantiate(s.catalog[0], "cube", {{0, 0.5, 0}, {}}));
    const auto views = render_four_views(s, "cube", vac_preset("none"));
    for (const auto& v : views) {
        const auto b = first_outline_bounds(v);
        EXPECT_NEAR(b[1] - b[0], 1.0, 1e-12);
        EXPECT_NEAR(b[3] - b[2], 1.0, 1e-12);
        EXPECT_NEAR(b[2], 0.0, 1e-12);
    }
    EXPECT_EQ(views[0].name, "side_px");
    EXPECT_EQ(views[3].name, "side_nz");
    EXPECT_THROW(render_four_views(s, "ghost", vac_preset("none")), UnknownIdError);
}

TEST(FourViews, CupSitsOnTableAndPillowGapIsVisible) {
    Scene s;
    s.catalog.push_back(asset("table", {0.6, 0.375, 0.4}));
    s.catalog.push_back(asset("cup", {0.04, 0.05, 0.04}));
    s.objects.push_back(instantiate(s.catalog[0], "table", {{0, 0.375, 0}, {}}));
    s.objects.push_back(instantiate(s.catalog[1], "cup", {{0, 0.8, 0}, {}}));
    const auto views = render_four_views(s, "cup", vac_preset("none"), {"table"});
    for (const auto& v : views) {
        // both sit at the same depth, so insertion order is kept: table, cup
        const auto table = first_outline_bounds(v, 0), cup = first_outline_bounds(v, 1);
        EXPECT_NEAR(cup[2], table[3], 1e-12) << v.name;
    }
    Scene bed;
    bed.catalog.push_back(asset("bed", {1, 0.25, 1}));
    bed.catalog.push_back(asset("pillow", {0.3, 0.08, 0.2}));
    bed.objects.push_back(instantiate(bed.catalog[0], "bed", {{0, 0.25, 0}, {}}));
    bed.objects.push_back(instantiate(bed.catalog[1], "pillow", {{0, 0.5 + 0.08 + 0.3, 0.6}, {}}));
    for (const auto& v : render_four_views(bed, "pillow", vac_preset("none"), {"bed"})) {
        std::array<double, 4> b_bed{}, b_pillow{};
        const auto a = first_outline_bounds(v, 0), b = first_outline_bounds(v, 1);
        (a[3] < b[3] ? b_bed : b_pillow) = a;
        (a[3] < b[3] ? b_pillow : b_bed) = b;
        EXPECT_NEAR(b_pillow[2] - b_bed[3], 0.3, 1e-12) << v.name;
    }
}

TEST(RelationAngle, ExamplesAndConvention) {
    Scene s;
    s.catalog.push_back(asset("box", {0.1, 0.1, 0.1}));
    s.objects.push_back(instantiate(s.catalog[0], "t", {}));
    s.objects.push_back(instantiate(s.catalog[0], "ahead", {{0, 0, 1}, {}}));
    s.objects.push_back(instantiate(s.catalog[0], "right", {{1, 0, 0}, {}}));
    s.objects.push_back(instantiate(s.catalog[0], "behind", {{0, 0, -1}, {}}));
    s.objects.push_back(instantiate(s.catalog[0], "on_top", {{0, 1, 0}, {}}));
    EXPECT_DOUBLE_EQ(relation_angle(s, "t", "ahead"), 0.0);
    EXPECT_NEAR(relation_angle(s, "t", "right"), 90.0, 1e-12);
    EXPECT_DOUBLE_EQ(relation_angle(s, "t", "behind"), -180.0);
    const auto co = relation_angle_detail(s, "t", "on_top");
    EXPECT_TRUE(co.coincident);
    EXPECT_EQ(co.offset_deg, 0.0);
    EXPECT_NE(relation_angle_text(s, "t", {"on_top"}).find("warning=coincident_centers"), std::string::npos);
    EXPECT_THROW(relation_angle(s, "t", "ghost"), UnknownIdError);

    const Scene turned = apply_correction(s, "t", {{}, 30});
    EXPECT_NEAR(relation_angle(turned, "t", "ahead"), -30.0, 1e-12);
}

TEST(RelationAngle, EquivariantUnderYawCorrection) {
    SplitMix64 rng(99);
    Scene base;
    base.catalog.push_back(asset("box", {0.3, 0.2, 0.5}));
    for (int t = 0; t < 1000; ++t) {
        Scene s = base;
        s.objects.push_back(instantiate(s.catalog[0], "t", {{rng.uniform(-5, 5), 0, rng.uniform(-5, 5)}, {rng.uniform(0, 360), 0, 0}}));
        s.objects.push_back(instantiate(s.catalog[0], "r", {{rng.uniform(-5, 5), 0, rng.uniform(-5, 5)}, {rng.uniform(0, 360), 0, 0}}));
        const double delta = rng.uniform(-720, 720);
        const double before = relation_angle(s, "t", "r");
        const double after = relation_angle(apply_correction(s, "t", {{}, delta}), "t", "r");
        EXPECT_GE(after, -180.0);
        EXPECT_LT(after, 180.0);
        EXPECT_NEAR(std::abs(wrap180(after - wrap180(before - delta))), 0.0, 1e-6) << "sample " << t;
    }
}

TEST(BoundingBoxText, Lines) {
    Scene s;
    s.catalog.push_back(asset("cube", {0.5, 0.5, 0.5}));
    s.catalog.push_back(asset("cup", {0.04, 0.05, 0.04}));
    s.objects.push_back(instantiate(s.catalog[0], "table", {}));
    s.objects.push_back(instantiate(s.catalog[1], "cup", {{0, 0.55, 0}, {}}));
    EXPECT_EQ(bounding_box_text(s, {}), "# bounding boxes (world axis-aligned, y up)\n");
    const std::string one = bounding_box_text(s, {"table"});
    EXPECT_NE(one.find("min=(-0.500000000,-0.500000000,-0.500000000)"), std::string::npos);
    EXPECT_NE(one.find("id=table asset=cube"), std::string::npos);
    const std::string two = bounding_box_text(s, {"table", "cup"});
    EXPECT_EQ(std::count(two.begin(), two.end(), '\n'), 3);
    EXPECT_LT(two.find("id=table"), two.find("id=cup"));
    EXPECT_THROW(bounding_box_text(s, {"ghost"}), UnknownIdError);
}

TEST(Markers, SingleArrowFollowsFront) {
    Scene s;
    s.catalog.push_back(asset("cube", {0.5, 0.5, 0.5}));
    auto o = instantiate(s.catalog[0], "c", {});
    auto m = marker_overlay(o, MarkerKind::single);
    ASSERT_EQ(m.size(), 1u);
    EXPECT_NEAR(m[0].from.z, 0.5, 1e-12);
    EXPECT_GT(m[0].to.z, m[0].from.z);
    EXPECT_NEAR(m[0].to.x, 0.0, 1e-12);
    o.orientation.yaw = 90;
    m = marker_overlay(o, MarkerKind::single);
    EXPECT_NEAR(m[0].from.x, 0.5, 1e-12);
    EXPECT_GT(m[0].to.x, m[0].from.x);
    EXPECT_NEAR(m[0].to.z, 0.0, 1e-12);
}

TEST(Markers, TripleHasThreeDistinctColors) {
    Scene s;
    s.catalog.push_back(asset("cube", {0.5, 0.5, 0.5}));
    const auto o = instantiate(s.catalog[0], "c", {});
    const auto m = marker_overlay(o, MarkerKind::triple);
    ASSERT_EQ(m.size(), 3u);
    EXPECT_EQ(m[0].axis, "front");
    EXPECT_EQ(m[1].axis, "top");
    EXPECT_EQ(m[2].axis, "right");
    EXPECT_NE(m[0].color, m[1].color);
    EXPECT_NE(m[1].color, m[2].color);
    EXPECT_NE(m[0].color, m[2].color);
    EXPECT_GT(m[2].to.x, 0.0);  // right is local +x
    EXPECT_GT(m[1].to.y, 0.0);
    // top axis projects to a dot in the top view
    std::size_t dots = 0;
    for (const auto& p : render_top_view(s.with_object(o), "c", default_vac_options()).prims)
        dots += std::holds_alternative<DotPrim>(p);
    EXPECT_EQ(dots, 1u);
}

TEST(RenderVac, BundleFollowsPreset) {
    const Scene s = two_chairs(3);
    const auto none = render_vac(s, "c1", {"c2"}, vac_preset("none"));
    EXPECT_FALSE(none.top);
    EXPECT_EQ(none.sides.size(), 4u);
    EXPECT_TRUE(none.bounding_box.empty());
    EXPECT_TRUE(none.relation_angles.empty());
    const auto full = render_vac(s, "c1", {"c2"}, default_vac_options());
    EXPECT_TRUE(full.top);
    EXPECT_EQ(full.drawings().size(), 5u);
    EXPECT_NE(full.relation_angles.find("related=c2 offset=90.000"), std::string::npos);
}

TEST(Raster, PngHasSignatureAndDrawsCircles) {
    const auto d = render_top_view(two_chairs(0.5), "c1", default_vac_options());
    const Image img = rasterize(d, 256);
    EXPECT_EQ(img.width, 256);
    bool red = false;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) red = red || img.at(x, y) == colors::circle_hit;
    EXPECT_TRUE(red);
    const std::string png = encode_png(img);
    ASSERT_GT(png.size(), 33u);
    EXPECT_EQ(png.substr(0, 8), std::string("\x89PNG\r\n\x1a\n", 8));
    EXPECT_EQ(png.substr(12, 4), "IHDR");
    EXPECT_EQ(png.substr(png.size() - 8, 4), "IEND");
    EXPECT_EQ(png, encode_png(rasterize(d, 256)));
}
