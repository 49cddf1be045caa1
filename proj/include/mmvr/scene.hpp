#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "mmvr/core.hpp"
#include "mmvr/radar.hpp"

namespace mmvr::scene {

enum class ObjectKind { controller, headset, user_body, table, television, corner_reflector };

inline const char* kind_name(ObjectKind k) {
    switch (k) {
        case ObjectKind::controller: return "controller";
        case ObjectKind::headset: return "headset";
        case ObjectKind::user_body: return "user_body";
        case ObjectKind::table: return "table";
        case ObjectKind::television: return "television";
        case ObjectKind::corner_reflector: return "corner_reflector";
    }
    return "?";
}

// Aspect-angle RCS multiplier, cosine-shaped between the band endpoints.
// Aspect 0 (facing the radar) gives the high end of the band.
struct AngleProfile {
    double lo_mult = 1.0;
    double hi_mult = 1.0;
    double operator()(double aspect_rad) const {
        return lo_mult + (hi_mult - lo_mult) * 0.5 * (1.0 + std::cos(2.0 * aspect_rad));
    }
};

struct SceneObject {
    ObjectKind kind = ObjectKind::corner_reflector;
    std::string name;
    std::vector<Vec3> scatterer_offsets{{0.0, 0.0, 0.0}};
    double base_rcs_m2 = 1.0;
    AngleProfile rcs_angle_profile;
    Vec3 base_position;   // user-frame for VR objects, world frame for clutter
    bool user_attached = false;
    double radius_m = 0.3;  // coarse volume for overlap checks
};

// Catalog defaults: base RCS exactly the theoretical values; the measured
// angle bands bound the controller and body multipliers.
inline SceneObject make_object(ObjectKind kind, const std::string& name) {
    SceneObject o;
    o.kind = kind;
    o.name = name;
    switch (kind) {
        case ObjectKind::controller:
            o.base_rcs_m2 = 5.0;
            o.rcs_angle_profile = {7.5 / 5.0, 10.0 / 5.0};
            o.radius_m = 0.12;
            break;
        case ObjectKind::headset:
            o.base_rcs_m2 = 8.0;
            o.radius_m = 0.15;
            break;
        case ObjectKind::user_body:
            o.base_rcs_m2 = 3.5;
            o.rcs_angle_profile = {1.6 / 3.5, 4.0 / 3.5};
            o.radius_m = 0.45;
            break;
        case ObjectKind::table:
            o.base_rcs_m2 = 60.0;
            o.radius_m = 0.8;
            break;
        case ObjectKind::television:
            o.base_rcs_m2 = 100.0;
            o.radius_m = 0.6;
            break;
        case ObjectKind::corner_reflector:
            o.base_rcs_m2 = 1.0;
            o.radius_m = 0.1;
            break;
    }
    return o;
}

enum class ObstacleKind { wooden_door, brick_wall };

// Rectangular planar obstruction between radar and scene.
struct Obstacle {
    ObstacleKind kind = ObstacleKind::wooden_door;
    double one_way_attenuation_db = 4.0;
    Vec3 center;
    Vec3 normal{0.0, 1.0, 0.0};
    Vec3 u_axis{1.0, 0.0, 0.0};  // in-plane axes
    Vec3 v_axis{0.0, 0.0, 1.0};
    double half_u = 2.5;
    double half_v = 1.5;

    bool crossed_by(const Vec3& a, const Vec3& b) const {
        Vec3 d = b - a;
        double dn = d.dot(normal);
        if (std::abs(dn) < 1e-12) return false;
        double t = (center - a).dot(normal) / dn;
        if (t <= 0.0 || t >= 1.0) return false;
        Vec3 hit = a + d * t - center;
        return std::abs(hit.dot(u_axis)) <= half_u && std::abs(hit.dot(v_axis)) <= half_v;
    }
};

// Defaults reproduce the qualitative ordering unobstructed > wood > brick >
// combined while keeping the combined case above the detection floor at
// short range. Not measured values.
inline Obstacle make_obstacle(ObstacleKind kind, double distance_to_user_m) {
    Obstacle o;
    o.kind = kind;
    o.one_way_attenuation_db = (kind == ObstacleKind::wooden_door) ? 4.0 : 10.0;
    double frac = (kind == ObstacleKind::wooden_door) ? 0.4 : 0.6;
    o.center = {0.0, frac * distance_to_user_m, 1.2};
    return o;
}

// ---- keyboard layouts ----

struct KeyboardLayout {
    std::string name;                       // layout_36 | layout_9 | layout_15 | custom
    std::map<std::string, Vec3> key_positions;  // user-frame, on a virtual plane
    std::string confirm_key;
    double pitch_m = 0.08;

    const Vec3& key_pos(const std::string& k) const {
        auto it = key_positions.find(k);
        if (it == key_positions.end())
            throw std::invalid_argument("key not on layout " + name + ": '" + k + "'");
        return it->second;
    }
    bool has_key(const std::string& k) const { return key_positions.count(k) != 0; }

    void validate(double min_pitch_m) const {
        if (key_positions.empty()) throw std::invalid_argument("layout has no keys");
        std::vector<const Vec3*> ps;
        for (const auto& [k, p] : key_positions) ps.push_back(&p);
        for (std::size_t i = 0; i < ps.size(); ++i)
            for (std::size_t j = i + 1; j < ps.size(); ++j)
                if ((*ps[i] - *ps[j]).norm() < min_pitch_m)
                    throw std::invalid_argument("layout " + name + " key pitch below minimum");
    }
};

namespace detail {
// Keyboard plane floats in front of the user at chest height; columns along
// x, rows along z, press direction toward the radar (-y in the user frame).
inline Vec3 grid_pos(int col, int row, int ncols, int nrows, double pitch) {
    double x = (double(col) - double(ncols - 1) / 2.0) * pitch;
    double z = 1.25 + (double(nrows - 1) / 2.0 - double(row)) * pitch;
    return {x, -0.40, z};
}
}  // namespace detail

// Full alphanumeric layout: 26 letters + 10 digits in 4 rows, plus a
// confirmation key below the last row.
inline KeyboardLayout layout_36() {
    KeyboardLayout l;
    l.name = "layout_36";
    const char* rows[4] = {"1234567890", "qwertyuiop", "asdfghjkl", "zxcvbnm"};
    for (int r = 0; r < 4; ++r)
        for (int c = 0; rows[r][c]; ++c)
            l.key_positions[std::string(1, rows[r][c])] = detail::grid_pos(c, r, 10, 4, l.pitch_m);
    l.key_positions["enter"] = detail::grid_pos(8, 4, 10, 4, l.pitch_m);
    l.confirm_key = "enter";
    l.validate(0.075);
    return l;
}

// 3x3 digit grid with an additional 0 below, plus a confirmation key.
inline KeyboardLayout layout_9() {
    KeyboardLayout l;
    l.name = "layout_9";
    for (int i = 0; i < 9; ++i)
        l.key_positions[std::string(1, char('1' + i))] = detail::grid_pos(i % 3, i / 3, 3, 3, l.pitch_m);
    l.key_positions["0"] = detail::grid_pos(1, 3, 3, 3, l.pitch_m);
    l.key_positions["enter"] = detail::grid_pos(2, 3, 3, 3, l.pitch_m);
    l.confirm_key = "enter";
    l.validate(0.075);
    return l;
}

// 3x3 digit grid with operator keys along the bottom and right.
inline KeyboardLayout layout_15() {
    KeyboardLayout l;
    l.name = "layout_15";
    for (int i = 0; i < 9; ++i)
        l.key_positions[std::string(1, char('1' + i))] = detail::grid_pos(i % 3, i / 3, 4, 4, l.pitch_m);
    const char* right[3] = {"+", "-", "*"};
    for (int r = 0; r < 3; ++r) l.key_positions[right[r]] = detail::grid_pos(3, r, 4, 4, l.pitch_m);
    l.key_positions["/"] = detail::grid_pos(0, 3, 4, 4, l.pitch_m);
    l.key_positions["."] = detail::grid_pos(1, 3, 4, 4, l.pitch_m);
    l.key_positions["="] = detail::grid_pos(2, 3, 4, 4, l.pitch_m);
    l.confirm_key = "=";
    l.validate(0.075);
    return l;
}

inline KeyboardLayout layout_by_name(const std::string& name) {
    if (name == "layout_36") return layout_36();
    if (name == "layout_9") return layout_9();
    if (name == "layout_15") return layout_15();
    throw std::invalid_argument("unknown layout: " + name);
}

// ---- motion tracks (analytic position and velocity) ----

struct Sinusoid {
    Vec3 amplitude;
    double freq_hz = 1.0;
    double phase = 0.0;
};

// Smooth dip: amplitude * sin^2(pi (t - t0) / width) on [t0, t0 + width].
struct Bump {
    Vec3 amplitude;
    double t0 = 0.0;
    double width = 0.1;
};

struct Waypoint {
    double t0 = 0.0, t1 = 0.0;
    Vec3 from, to;
};

class Track {
public:
    explicit Track(Vec3 origin = {}) : origin_(origin), last_(origin) {}

    void move_to(const Vec3& p, double t_start, double t_arrive) {
        if (t_arrive <= t_start) throw std::invalid_argument("move_to needs t_arrive > t_start");
        if (!moves_.empty() && t_start < moves_.back().t1 - 1e-12)
            throw std::invalid_argument("overlapping moves on track");
        moves_.push_back({t_start, t_arrive, last_, p});
        last_ = p;
    }
    void add_sinusoid(const Sinusoid& s) { sins_.push_back(s); }
    void add_bump(const Bump& b) { bumps_.push_back(b); }

    Vec3 pos(double t) const {
        Vec3 p = base_pos(t);
        for (const auto& s : sins_)
            p += s.amplitude * std::sin(2.0 * kPi * s.freq_hz * t + s.phase);
        for (const auto& b : bumps_)
            if (t > b.t0 && t < b.t0 + b.width) {
                double u = std::sin(kPi * (t - b.t0) / b.width);
                p += b.amplitude * (u * u);
            }
        return p;
    }

    Vec3 vel(double t) const {
        Vec3 v = base_vel(t);
        for (const auto& s : sins_) {
            double w = 2.0 * kPi * s.freq_hz;
            v += s.amplitude * (w * std::cos(w * t + s.phase));
        }
        for (const auto& b : bumps_)
            if (t > b.t0 && t < b.t0 + b.width) {
                double a = kPi / b.width;
                v += b.amplitude * (a * std::sin(2.0 * a * (t - b.t0)));
            }
        return v;
    }

    double max_speed(double duration, double dt = 0.005) const {
        double m = 0.0;
        for (double t = 0.0; t <= duration; t += dt) m = std::max(m, vel(t).norm());
        return m;
    }

private:
    Vec3 origin_, last_;
    std::vector<Waypoint> moves_;
    std::vector<Sinusoid> sins_;
    std::vector<Bump> bumps_;

    Vec3 base_pos(double t) const {
        Vec3 p = origin_;
        for (const auto& m : moves_) {
            if (t <= m.t0) break;
            if (t >= m.t1) {
                p = m.to;
            } else {
                double u = (t - m.t0) / (m.t1 - m.t0);
                double h = u * u * (3.0 - 2.0 * u);
                p = m.from + (m.to - m.from) * h;
            }
        }
        return p;
    }
    Vec3 base_vel(double t) const {
        for (const auto& m : moves_)
            if (t > m.t0 && t < m.t1) {
                double u = (t - m.t0) / (m.t1 - m.t0);
                double dh = 6.0 * u * (1.0 - u) / (m.t1 - m.t0);
                return (m.to - m.from) * dh;
            }
        return {};
    }
};

// ---- motion scripts ----

inline const std::vector<std::string>& activity_classes() {
    static const std::vector<std::string> v = {"Gaming", "Chatting", "Shopping", "Browsing",
                                               "SystemSetting"};
    return v;
}

struct ActivityParams {
    Vec3 torso_amp;
    double torso_freq = 0.4;
    Vec3 arm_amp;
    double arm_freq = 1.0;
    double jump_amp = 0.0;     // periodic vertical bumps
    double jump_period = 0.0;
    double click_amp = 0.0;    // periodic hand-press bumps toward the radar
    double click_period = 0.0;
};

// Per-class motion statistics chosen to be mutually separable: gaming moves
// the whole body the most, chatting moves the hands the least, system
// setting is clicks with a near-static body.
inline std::map<std::string, ActivityParams>& activity_registry() {
    static std::map<std::string, ActivityParams> reg = {
        {"Gaming", {{0.12, 0.06, 0.04}, 0.55, {0.25, 0.12, 0.20}, 1.3, 0.15, 1.2, 0.0, 0.0}},
        {"Chatting", {{0.015, 0.010, 0.005}, 0.30, {0.06, 0.10, 0.01}, 1.1, 0.0, 0.0, 0.0, 0.0}},
        {"Shopping", {{0.040, 0.020, 0.010}, 0.40, {0.10, 0.30, 0.03}, 0.6, 0.0, 0.0, 0.0, 0.0}},
        {"Browsing", {{0.030, 0.015, 0.010}, 0.35, {0.02, 0.02, 0.18}, 0.6, 0.0, 0.0, 0.0, 0.0}},
        {"SystemSetting", {{0.004, 0.003, 0.002}, 0.25, {0.015, 0.010, 0.008}, 0.6, 0.0, 0.0, 0.10, 0.8}},
    };
    return reg;
}

inline void register_activity_params(const std::string& label, const ActivityParams& p) {
    if (activity_registry().count(label))
        throw std::invalid_argument("activity already registered: " + label);
    activity_registry()[label] = p;
}

struct PressGroundTruth {
    double time_s = 0.0;
    std::string key;
    Vec3 position_user_frame;
};

// Tracks are expressed in the user frame: origin at the user's floor center,
// z up, the user facing -y (toward the radar at orientation 0).
struct MotionScript {
    std::string label;  // "activity:<class>" or "keys:<text>"
    std::map<std::string, Track> tracks;
    double duration_s = 3.0;
    std::string orientation = "0";  // 0 | 90 | 180 | 270 | top
    double radar_distance_m = 3.0;
    std::vector<PressGroundTruth> press_events;
    std::string layout_name;

    void validate_speeds() const {
        for (const auto& [name, tr] : tracks)
            if (tr.max_speed(duration_s) > 10.0)
                throw std::invalid_argument("track " + name + " exceeds 10 m/s");
    }
};

namespace detail {
inline Vec3 jitter_amp(const Vec3& a, Rng& rng) {
    return {a.x * rng.uniform(0.8, 1.2), a.y * rng.uniform(0.8, 1.2), a.z * rng.uniform(0.8, 1.2)};
}

// Rest poses of the body clusters in the user frame.
inline const std::map<std::string, Vec3>& body_rest() {
    static const std::map<std::string, Vec3> rest = {
        {"user_body.torso", {0.0, 0.0, 1.10}},  {"user_body.head", {0.0, 0.0, 1.62}},
        {"user_body.arm_l", {-0.28, -0.12, 1.15}}, {"user_body.arm_r", {0.28, -0.12, 1.15}},
        {"user_body.lower", {0.0, 0.0, 0.55}},  {"headset", {0.0, -0.10, 1.62}},
        {"controller_l", {-0.30, -0.35, 1.15}}, {"controller_r", {0.30, -0.35, 1.15}},
    };
    return rest;
}
}  // namespace detail

inline MotionScript activity_script(const std::string& activity, std::uint64_t seed,
                                    double duration_s = 3.0, double distance_m = 3.0,
                                    const std::string& orientation = "0") {
    auto it = activity_registry().find(activity);
    if (it == activity_registry().end())
        throw std::invalid_argument("unknown activity label: " + activity);
    const ActivityParams& ap = it->second;
    Rng rng(seed ^ fnv1a(activity));

    MotionScript ms;
    ms.label = "activity:" + activity;
    ms.duration_s = duration_s;
    ms.orientation = orientation;
    ms.radar_distance_m = distance_m;

    Sinusoid torso{detail::jitter_amp(ap.torso_amp, rng), ap.torso_freq * rng.uniform(0.85, 1.15),
                   rng.uniform(0.0, 2.0 * kPi)};
    for (const auto& [name, rest] : detail::body_rest()) {
        Track tr(rest);
        tr.add_sinusoid(torso);  // whole body rides the torso sway
        bool hand = name.rfind("controller", 0) == 0 || name.find("arm") != std::string::npos;
        if (hand) {
            Sinusoid arm{detail::jitter_amp(ap.arm_amp, rng), ap.arm_freq * rng.uniform(0.85, 1.15),
                         rng.uniform(0.0, 2.0 * kPi)};
            tr.add_sinusoid(arm);
            if (ap.click_amp > 0.0 && name == "controller_r") {
                for (double t = 0.5; t + 0.2 < duration_s; t += ap.click_period * rng.uniform(0.9, 1.1))
                    tr.add_bump({{0.0, -ap.click_amp, -ap.click_amp * 0.3}, t, 0.18});
            }
        }
        if (ap.jump_amp > 0.0) {
            for (double t = 0.8; t + 0.4 < duration_s; t += ap.jump_period * rng.uniform(0.9, 1.1))
                tr.add_bump({{0.0, 0.0, ap.jump_amp}, t, 0.35});
        }
        ms.tracks.emplace(name, std::move(tr));
    }
    ms.validate_speeds();
    return ms;
}

struct KeystrokeTiming {
    double gap_s = 0.45;            // inter-press interval
    double press_depth_m = 0.02;
    double press_duration_s = 0.15;
    double jitter_s = 0.03;
    double lead_in_s = 0.5;
    bool include_confirm = true;
};

inline MotionScript keystroke_script(const KeyboardLayout& layout, const std::string& text,
                                     const KeystrokeTiming& timing, std::uint64_t seed,
                                     double distance_m = 2.0, const std::string& orientation = "0") {
    std::vector<std::string> keys;
    for (char ch : text) {
        std::string k(1, ch);
        if (!layout.has_key(k))
            throw std::invalid_argument("character not on layout " + layout.name + ": '" + k + "'");
        keys.push_back(k);
    }
    if (timing.include_confirm && !layout.confirm_key.empty()) keys.push_back(layout.confirm_key);

    Rng rng(seed ^ fnv1a("keys:" + text));
    MotionScript ms;
    ms.label = "keys:" + text;
    ms.orientation = orientation;
    ms.radar_distance_m = distance_m;
    ms.layout_name = layout.name;

    // Body, headset, and the left controller idle gently.
    Sinusoid idle{{0.006, 0.004, 0.003}, 0.3, rng.uniform(0.0, 2.0 * kPi)};
    for (const auto& [name, rest] : detail::body_rest()) {
        Track tr(rest);
        if (name != "controller_r") tr.add_sinusoid(idle);
        ms.tracks.emplace(name, std::move(tr));
    }

    // The typing hand hops key to key and dips along the press direction.
    // The right arm travels with the controller it is holding.
    Track tip(detail::body_rest().at("controller_r"));
    Vec3 arm_off{0.02, 0.12, -0.04};  // wrist sits behind and below the tip
    Track arm(detail::body_rest().at("controller_r") + arm_off);
    double t = timing.lead_in_s;
    Vec3 press_dir{0.0, -1.0, 0.0};  // toward the radar at orientation 0
    for (const auto& k : keys) {
        double gap = timing.gap_s + rng.uniform(-timing.jitter_s, timing.jitter_s);
        double arrive = t + std::max(0.12, gap - timing.press_duration_s);
        Vec3 kp = layout.key_pos(k);
        tip.move_to(kp, t, arrive);
        arm.move_to(kp + arm_off, t, arrive);
        double press_t = arrive + 0.02;
        tip.add_bump({press_dir * timing.press_depth_m, press_t, timing.press_duration_s});
        arm.add_bump({press_dir * (0.5 * timing.press_depth_m), press_t, timing.press_duration_s});
        ms.press_events.push_back({press_t + timing.press_duration_s / 2.0, k, kp});
        t = press_t + timing.press_duration_s + 0.05;
    }
    ms.duration_s = t + 0.4;
    ms.tracks.erase("controller_r");
    ms.tracks.emplace("controller_r", std::move(tip));
    ms.tracks.erase("user_body.arm_r");
    ms.tracks.emplace("user_body.arm_r", std::move(arm));
    ms.validate_speeds();
    return ms;
}

// ---- scene assembly ----

struct ScenarioConfig {
    double room_m = 10.0;
    double distance_m = 3.0;
    std::string orientation = "0";
    bool clutter = true;
    std::vector<ObstacleKind> obstacles;
};

struct Placement {
    double distance_m = 3.0;
    std::string orientation = "0";

    Vec3 to_world(const Vec3& local) const {
        if (orientation == "top") {
            // Radar overhead: the user's up axis points back along boresight.
            Vec3 centered = local - Vec3{0.0, 0.0, 1.1};
            Vec3 r = rotate_x(centered, kPi / 2.0);
            return r + Vec3{0.0, distance_m, 0.0};
        }
        double a = std::stod(orientation) * kPi / 180.0;
        return rotate_z(local, a) + Vec3{0.0, distance_m, 0.0};
    }
    Vec3 rot_world(const Vec3& local_dir) const {
        if (orientation == "top") return rotate_x(local_dir, kPi / 2.0);
        double a = std::stod(orientation) * kPi / 180.0;
        return rotate_z(local_dir, a);
    }
    // User facing in world coordinates (faces -y in the user frame).
    Vec3 facing_world() const { return rot_world({0.0, -1.0, 0.0}); }
};

struct Scene {
    double room_m = 10.0;
    Placement placement;
    std::vector<SceneObject> objects;
    std::vector<Obstacle> obstacles;
};

inline Scene build_scene(const ScenarioConfig& cfg) {
    if (cfg.distance_m < 2.0 || cfg.distance_m > 8.0)
        throw std::invalid_argument("radar distance must be within [2, 8] m (device operational range)");
    Scene s;
    s.room_m = cfg.room_m;
    s.placement = {cfg.distance_m, cfg.orientation};

    auto add = [&s](SceneObject o, Vec3 pos, bool attached) {
        o.base_position = pos;
        o.user_attached = attached;
        s.objects.push_back(std::move(o));
    };
    // VR rig: body clusters + two controllers + headset, all user-attached.
    SceneObject body = make_object(ObjectKind::user_body, "user_body");
    body.scatterer_offsets = {{0, 0, 0}};
    for (const char* part : {"torso", "head", "arm_l", "arm_r", "lower"}) {
        SceneObject b = body;
        b.name = std::string("user_body.") + part;
        add(b, detail::body_rest().at(b.name), true);
    }
    add(make_object(ObjectKind::controller, "controller_l"), detail::body_rest().at("controller_l"), true);
    add(make_object(ObjectKind::controller, "controller_r"), detail::body_rest().at("controller_r"), true);
    add(make_object(ObjectKind::headset, "headset"), detail::body_rest().at("headset"), true);
    if (cfg.clutter) {
        add(make_object(ObjectKind::table, "table"), {2.4, 4.5, 0.75}, false);
        add(make_object(ObjectKind::television, "television"), {-2.2, 5.5, 1.1}, false);
    }
    double half = cfg.room_m / 2.0;
    for (const auto& o : s.objects) {
        Vec3 w = o.user_attached ? s.placement.to_world(o.base_position) : o.base_position;
        if (std::abs(w.x) > half || w.y < 0.0 || w.y > cfg.room_m)
            throw std::invalid_argument("object " + o.name + " outside room bounds");
    }
    // Coarse overlap rejection between distinct object groups.
    for (std::size_t i = 0; i < s.objects.size(); ++i)
        for (std::size_t j = i + 1; j < s.objects.size(); ++j) {
            const auto& a = s.objects[i];
            const auto& b = s.objects[j];
            if (a.user_attached && b.user_attached) continue;
            Vec3 pa = a.user_attached ? s.placement.to_world(a.base_position) : a.base_position;
            Vec3 pb = b.user_attached ? s.placement.to_world(b.base_position) : b.base_position;
            if ((pa - pb).norm() < a.radius_m + b.radius_m)
                throw std::invalid_argument("objects overlap: " + a.name + " / " + b.name);
        }
    for (ObstacleKind k : cfg.obstacles) s.obstacles.push_back(make_obstacle(k, cfg.distance_m));
    return s;
}

// Single reference reflector at a given distance, used for calibration runs.
inline Scene calibration_scene(double distance_m, double sigma_r_m2) {
    Scene s;
    s.placement = {distance_m, "0"};
    SceneObject cr = make_object(ObjectKind::corner_reflector, "corner_reflector");
    cr.base_rcs_m2 = sigma_r_m2;
    cr.base_position = {0.0, distance_m, 1.1};
    cr.user_attached = false;
    s.objects.push_back(cr);
    return s;
}

struct TaggedScatterer {
    radar::Scatterer s;
    ObjectKind kind = ObjectKind::corner_reflector;
    std::string object_name;
};

struct SceneSnapshot {
    std::vector<TaggedScatterer> tagged;
    double timestamp_s = 0.0;

    std::vector<radar::Scatterer> scatterers() const {
        std::vector<radar::Scatterer> out;
        out.reserve(tagged.size());
        for (const auto& t : tagged) out.push_back(t.s);
        return out;
    }
};

inline SceneSnapshot snapshot(const Scene& scene, const MotionScript& script, double t) {
    if (t < 0.0 || t > script.duration_s)
        throw std::invalid_argument("snapshot time outside script duration");
    SceneSnapshot snap;
    snap.timestamp_s = t;
    Vec3 radar_pos{0.0, 0.0, 0.0};
    Vec3 facing = scene.placement.facing_world();
    for (const auto& obj : scene.objects) {
        Vec3 local_pos = obj.base_position;
        Vec3 local_vel{};
        auto it = script.tracks.find(obj.name);
        if (it != script.tracks.end()) {
            local_pos = it->second.pos(t);
            local_vel = it->second.vel(t);
        }
        Vec3 world_pos, world_vel;
        if (obj.user_attached) {
            world_pos = scene.placement.to_world(local_pos);
            world_vel = scene.placement.rot_world(local_vel);
        } else {
            world_pos = local_pos;
            world_vel = local_vel;
        }
        for (const Vec3& off : obj.scatterer_offsets) {
            Vec3 p = world_pos + (obj.user_attached ? scene.placement.rot_world(off) : off);
            TaggedScatterer ts;
            ts.kind = obj.kind;
            ts.object_name = obj.name;
            ts.s.position = p;
            ts.s.velocity = world_vel;
            // Aspect in the horizontal plane between the object's facing
            // direction and the bearing back toward the radar.
            Vec3 to_radar = radar_pos - p;
            double aspect = 0.0;
            if (obj.user_attached) {
                double fx = facing.x, fy = facing.y;
                double tx = to_radar.x, ty = to_radar.y;
                double fn = std::hypot(fx, fy), tn = std::hypot(tx, ty);
                if (fn > 1e-9 && tn > 1e-9) {
                    double c = std::clamp((fx * tx + fy * ty) / (fn * tn), -1.0, 1.0);
                    aspect = std::acos(c);
                }
            }
            ts.s.rcs_m2 = obj.base_rcs_m2 * obj.rcs_angle_profile(aspect);
            for (const auto& ob : scene.obstacles)
                if (ob.crossed_by(radar_pos, p)) {
                    ts.s.attenuation_db_oneway += ob.one_way_attenuation_db;
                    ts.s.obstacle_crossings += 1;
                }
            snap.tagged.push_back(std::move(ts));
        }
    }
    return snap;
}

}  // namespace mmvr::scene
