#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mmvr/scene.hpp"

using namespace mmvr;
using namespace mmvr::scene;

namespace {

double mean_speed(const MotionScript& ms, const std::string& track, double t0, double t1) {
    const Track& tr = ms.tracks.at(track);
    double s = 0.0;
    int n = 0;
    for (double t = t0; t <= t1; t += 0.01) {
        s += tr.vel(t).norm();
        ++n;
    }
    return s / double(n);
}

}  // namespace

TEST_CASE("track primitives") {
    Track tr({0.0, 0.0, 0.0});
    tr.move_to({1.0, 0.0, 0.0}, 0.0, 1.0);
    CHECK(tr.pos(-0.5).x == 0.0);
    CHECK(tr.pos(0.5).x == doctest::Approx(0.5));  // smoothstep midpoint
    CHECK(tr.pos(2.0).x == 1.0);
    CHECK(tr.vel(0.0).norm() == doctest::Approx(0.0));  // eases in and out
    CHECK(tr.vel(1.0).norm() == doctest::Approx(0.0));
    // continuity at segment boundaries
    CHECK((tr.pos(1.0 + 1e-9) - tr.pos(1.0 - 1e-9)).norm() < 1e-6);
    CHECK_THROWS(tr.move_to({2.0, 0.0, 0.0}, 0.5, 1.5));  // overlapping move
    Track bad;
    CHECK_THROWS(bad.move_to({1.0, 0.0, 0.0}, 1.0, 1.0));  // zero duration

    Track bump;
    bump.add_bump({{0.0, -0.02, 0.0}, 1.0, 0.2});
    CHECK(bump.pos(1.1).y == doctest::Approx(-0.02));  // sin^2 peak
    CHECK(bump.pos(0.99).y == 0.0);
    CHECK(bump.pos(1.21).y == 0.0);
}

TEST_CASE("analytic velocity matches finite differences at 1 kHz") {
    MotionScript ms = activity_script("Chatting", 42);
    double dt = 1e-3;
    for (const auto& [name, tr] : ms.tracks)
        for (double t = 0.1; t < ms.duration_s - 0.1; t += 0.07) {
            Vec3 fd = (tr.pos(t + dt) - tr.pos(t - dt)) * (1.0 / (2.0 * dt));
            CHECK((fd - tr.vel(t)).norm() < 1e-3);
        }
    // interior of a press bump, away from its endpoints
    Track tr;
    tr.add_bump({{0.0, -0.02, 0.0}, 1.0, 0.2});
    for (double t : {1.05, 1.10, 1.15}) {
        Vec3 fd = (tr.pos(t + dt) - tr.pos(t - dt)) * (1.0 / (2.0 * dt));
        CHECK((fd - tr.vel(t)).norm() < 1e-3);
    }
}

TEST_CASE("activity scripts are deterministic and class-separable") {
    MotionScript a = activity_script("Gaming", 7);
    MotionScript b = activity_script("Gaming", 7);
    for (double t : {0.2, 1.1, 2.7})
        CHECK((a.tracks.at("user_body.torso").pos(t) - b.tracks.at("user_body.torso").pos(t)).norm() ==
              0.0);
    MotionScript c = activity_script("Gaming", 8);
    bool differs = false;
    for (double t : {0.2, 1.1, 2.7})
        if ((a.tracks.at("user_body.torso").pos(t) - c.tracks.at("user_body.torso").pos(t)).norm() >
            1e-6)
            differs = true;
    CHECK(differs);

    // gaming moves the body far more than chatting
    double g = mean_speed(activity_script("Gaming", 3), "user_body.torso", 0.0, 3.0);
    double ch = mean_speed(activity_script("Chatting", 3), "user_body.torso", 0.0, 3.0);
    CHECK(g > 3.0 * ch);
}

TEST_CASE("system setting is clicks over a near-static body") {
    MotionScript ms = activity_script("SystemSetting", 5);
    const Track& torso = ms.tracks.at("user_body.torso");
    Vec3 rest{0.0, 0.0, 1.10};
    for (double t = 0.0; t <= ms.duration_s; t += 0.05)
        CHECK((torso.pos(t) - rest).norm() < 0.02);
    // the clicking hand reaches clearly higher peak speed than the torso
    const Track& hand = ms.tracks.at("controller_r");
    CHECK(hand.max_speed(ms.duration_s) > 3.0 * torso.max_speed(ms.duration_s));
}

TEST_CASE("unknown activity label raises an error") {
    CHECK_THROWS_WITH_AS(activity_script("Dancing", 1), doctest::Contains("Dancing"),
                         std::invalid_argument);
}

TEST_CASE("registering activity params") {
    CHECK_THROWS(register_activity_params("Gaming", ActivityParams{}));
    std::string label = "UnitTestActivity";
    if (!activity_registry().count(label)) {
        ActivityParams p = activity_registry().at("Chatting");
        register_activity_params(label, p);
    }
    MotionScript ms = activity_script(label, 2);
    CHECK(ms.label == "activity:" + label);
    activity_registry().erase(label);
}

TEST_CASE("keyboard layouts") {
    KeyboardLayout l36 = layout_36();
    CHECK(l36.key_positions.size() == 37);  // 36 keys + confirmation
    CHECK(l36.confirm_key == "enter");
    KeyboardLayout l9 = layout_9();
    CHECK(l9.key_positions.size() == 11);  // 10 digits + confirmation
    KeyboardLayout l15 = layout_15();
    CHECK(l15.key_positions.size() == 15);
    CHECK(l15.confirm_key == "=");
    CHECK_THROWS(layout_by_name("layout_7"));
    CHECK_THROWS(l36.key_pos("#"));

    // neighboring keys sit one pitch apart
    CHECK((l36.key_pos("q") - l36.key_pos("w")).norm() == doctest::Approx(l36.pitch_m));

    KeyboardLayout tight;
    tight.name = "tight";
    tight.key_positions["a"] = {0.0, -0.4, 1.25};
    tight.key_positions["b"] = {0.01, -0.4, 1.25};
    CHECK_THROWS(tight.validate(0.075));
}

TEST_CASE("keystroke scripts place presses on the layout") {
    KeyboardLayout l36 = layout_36();
    KeystrokeTiming timing;
    SUBCASE("single key without confirmation") {
        timing.include_confirm = false;
        MotionScript ms = keystroke_script(l36, "a", timing, 3);
        REQUIRE(ms.press_events.size() == 1);
        CHECK(ms.press_events[0].key == "a");
        CHECK((ms.press_events[0].position_user_frame - l36.key_pos("a")).norm() == 0.0);
        // the fingertip actually visits the key
        const Track& tip = ms.tracks.at("controller_r");
        Vec3 at_press = tip.pos(ms.press_events[0].time_s);
        CHECK((at_press - l36.key_pos("a")).norm() < 0.03);
    }
    SUBCASE("confirmation key appended by default") {
        MotionScript ms = keystroke_script(l36, "ab", timing, 3);
        REQUIRE(ms.press_events.size() == 3);
        CHECK(ms.press_events[2].key == "enter");
        double gap = ms.press_events[1].time_s - ms.press_events[0].time_s;
        CHECK(std::abs(gap - 0.52) <= 0.032);  // scripted cadence +- jitter
    }
    SUBCASE("six characters give seven press events") {
        MotionScript ms = keystroke_script(l36, "qwerty", timing, 9);
        CHECK(ms.press_events.size() == 7);
    }
    SUBCASE("digits on the numeric grid") {
        KeyboardLayout l9 = layout_9();
        MotionScript ms = keystroke_script(l9, "12", timing, 4);
        CHECK((ms.press_events[0].position_user_frame - l9.key_pos("1")).norm() == 0.0);
        CHECK((ms.press_events[1].position_user_frame - l9.key_pos("2")).norm() == 0.0);
    }
    SUBCASE("character not on the layout names the offender") {
        CHECK_THROWS_WITH_AS(keystroke_script(l36, "a#b", timing, 1), doctest::Contains("#"),
                             std::invalid_argument);
    }
    SUBCASE("same seed reproduces the script") {
        MotionScript a = keystroke_script(l36, "pass", timing, 11);
        MotionScript b = keystroke_script(l36, "pass", timing, 11);
        REQUIRE(a.press_events.size() == b.press_events.size());
        for (std::size_t i = 0; i < a.press_events.size(); ++i)
            CHECK(a.press_events[i].time_s == b.press_events[i].time_s);
    }
}

TEST_CASE("scene assembly") {
    ScenarioConfig cfg;
    Scene s = build_scene(cfg);
    CHECK(s.objects.size() == 10);  // 5 body clusters + 2 controllers + headset + table + tv
    cfg.clutter = false;
    CHECK(build_scene(cfg).objects.size() == 8);

    cfg.distance_m = 9.0;
    CHECK_THROWS_AS(build_scene(cfg), std::invalid_argument);
    cfg.distance_m = 1.0;
    CHECK_THROWS_AS(build_scene(cfg), std::invalid_argument);
}

TEST_CASE("snapshot geometry, velocities, and aspect-dependent rcs") {
    ScenarioConfig cfg;
    cfg.clutter = false;
    Scene s = build_scene(cfg);
    MotionScript still;  // no tracks: everything rests
    still.duration_s = 1.0;

    SceneSnapshot snap = snapshot(s, still, 0.0);
    REQUIRE(snap.tagged.size() == 8);
    for (const auto& t : snap.tagged) {
        CHECK(t.s.velocity.norm() == 0.0);
        CHECK(t.s.obstacle_crossings == 0);
        if (t.kind == ObjectKind::user_body) {
            CHECK(t.s.rcs_m2 >= 1.6 - 1e-9);
            CHECK(t.s.rcs_m2 <= 4.0 + 1e-9);
        }
        if (t.kind == ObjectKind::controller) {
            CHECK(t.s.rcs_m2 >= 7.5 - 1e-9);
            CHECK(t.s.rcs_m2 <= 10.0 + 1e-9);
        }
        if (t.kind == ObjectKind::headset) CHECK(t.s.rcs_m2 == doctest::Approx(8.0).epsilon(1e-12));
    }
    // headset ends up near (0, d - 0.1, 1.62) when facing the radar
    for (const auto& t : snap.tagged)
        if (t.kind == ObjectKind::headset) {
            CHECK(t.s.position.x == doctest::Approx(0.0));
            CHECK(t.s.position.y == doctest::Approx(cfg.distance_m - 0.10));
            CHECK(t.s.position.z == doctest::Approx(1.62));
        }

    auto controller_rcs = [&cfg](const std::string& orient) {
        ScenarioConfig c = cfg;
        c.orientation = orient;
        Scene sc = build_scene(c);
        MotionScript ms;
        ms.duration_s = 1.0;
        SceneSnapshot sn = snapshot(sc, ms, 0.5);
        for (const auto& t : sn.tagged)
            if (t.object_name == "controller_r") return t.s.rcs_m2;
        return -1.0;
    };
    double front = controller_rcs("0");
    double side = controller_rcs("90");
    CHECK(front > side);  // facing the radar reflects at the high end
    CHECK(side == doctest::Approx(7.5).epsilon(0.01));
    CHECK(front == doctest::Approx(10.0).epsilon(0.01));

    CHECK_THROWS(snapshot(s, still, 2.0));  // beyond script duration
    CHECK_THROWS(snapshot(s, still, -0.1));
}

TEST_CASE("snapshot rotates analytic velocities into the world frame") {
    ScenarioConfig cfg;
    cfg.clutter = false;
    Scene s = build_scene(cfg);
    MotionScript ms = activity_script("Gaming", 17);
    double t = 1.3;
    SceneSnapshot snap = snapshot(s, ms, t);
    for (const auto& tg : snap.tagged) {
        auto it = ms.tracks.find(tg.object_name);
        REQUIRE(it != ms.tracks.end());
        CHECK((tg.s.velocity - it->second.vel(t)).norm() < 1e-12);  // orientation 0: identity
    }
}

TEST_CASE("obstacles accumulate attenuation along the path") {
    ScenarioConfig cfg;
    SUBCASE("wooden door") {
        cfg.obstacles = {ObstacleKind::wooden_door};
        SceneSnapshot snap = snapshot(build_scene(cfg), MotionScript{.duration_s = 1.0}, 0.0);
        for (const auto& t : snap.tagged) {
            CHECK(t.s.obstacle_crossings == 1);
            CHECK(t.s.attenuation_db_oneway == doctest::Approx(4.0));
        }
    }
    SUBCASE("brick wall") {
        cfg.obstacles = {ObstacleKind::brick_wall};
        SceneSnapshot snap = snapshot(build_scene(cfg), MotionScript{.duration_s = 1.0}, 0.0);
        for (const auto& t : snap.tagged) {
            CHECK(t.s.obstacle_crossings == 1);
            CHECK(t.s.attenuation_db_oneway == doctest::Approx(10.0));
        }
    }
    SUBCASE("both stacked") {
        cfg.obstacles = {ObstacleKind::wooden_door, ObstacleKind::brick_wall};
        SceneSnapshot snap = snapshot(build_scene(cfg), MotionScript{.duration_s = 1.0}, 0.0);
        for (const auto& t : snap.tagged) {
            CHECK(t.s.obstacle_crossings == 2);
            CHECK(t.s.attenuation_db_oneway == doctest::Approx(14.0));
        }
    }
    SUBCASE("path missing the panel does not cross") {
        Obstacle o = make_obstacle(ObstacleKind::wooden_door, 3.0);
        CHECK(o.crossed_by({0.0, 0.0, 1.0}, {0.0, 3.0, 1.0}));
        CHECK(!o.crossed_by({4.0, 0.0, 1.0}, {4.0, 3.0, 1.0}));   // beyond half_u
        CHECK(!o.crossed_by({0.0, 2.0, 1.0}, {0.0, 3.0, 1.0}));   // starts behind the plane
    }
}

TEST_CASE("speed validation rejects implausible tracks") {
    MotionScript ms;
    ms.duration_s = 1.0;
    Track fast;
    fast.move_to({20.0, 0.0, 0.0}, 0.0, 1.0);  // peak 30 m/s
    ms.tracks.emplace("rogue", std::move(fast));
    CHECK_THROWS_WITH_AS(ms.validate_speeds(), doctest::Contains("rogue"), std::invalid_argument);
}

TEST_CASE("calibration scene holds one reflector of the requested rcs") {
    Scene s = calibration_scene(4.0, 1.0);
    REQUIRE(s.objects.size() == 1);
    CHECK(s.objects[0].base_rcs_m2 == 1.0);
    SceneSnapshot snap = snapshot(s, MotionScript{.duration_s = 1.0}, 0.0);
    REQUIRE(snap.tagged.size() == 1);
    CHECK(snap.tagged[0].s.position.y == doctest::Approx(4.0));
    CHECK(snap.tagged[0].s.rcs_m2 == doctest::Approx(1.0));  // flat profile
}
