#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mmvr/radar.hpp"
#include "mmvr/rcs.hpp"
#include "mmvr/scene.hpp"

namespace mmvr::harness {

namespace fs = std::filesystem;

struct SplitFractions {
    double train = 0.70, val = 0.10, test = 0.20;
    void validate() const {
        if (std::abs(train + val + test - 1.0) > 1e-9)
            throw std::invalid_argument("split fractions must sum to 1");
        if (train < 0 || val < 0 || test < 0) throw std::invalid_argument("negative split fraction");
    }
};

struct Condition {
    std::vector<scene::ObstacleKind> obstacles;
    std::string orientation = "0";
    double distance_m = 3.0;

    std::string obstacle_name() const {
        if (obstacles.empty()) return "none";
        std::string s;
        for (auto o : obstacles) {
            if (!s.empty()) s += "+";
            s += (o == scene::ObstacleKind::wooden_door) ? "wood" : "brick";
        }
        return s;
    }
};

struct DatasetSpec {
    std::string kind = "activity";  // activity | keystroke
    int sequences_per_class = 10;
    std::vector<std::string> activities = scene::activity_classes();
    std::vector<std::string> keystroke_texts;  // empty -> random texts are drawn
    std::string layout = "layout_36";
    int random_text_len = 4;
    std::vector<Condition> conditions = {Condition{}};
    SplitFractions splits;
    std::uint64_t master_seed = 1;
    radar::RadarConfig radar;
    int activity_frames = 32;
    bool clutter = true;

    void validate() const {
        splits.validate();
        if (kind != "activity" && kind != "keystroke")
            throw std::invalid_argument("dataset kind must be activity or keystroke");
        if (sequences_per_class <= 0) throw std::invalid_argument("sequences_per_class must be > 0");
        if (conditions.empty()) throw std::invalid_argument("need at least one condition");
        radar.validate();
    }

    io::json to_json() const {
        io::json j;
        j["kind"] = kind;
        j["sequences_per_class"] = sequences_per_class;
        j["activities"] = activities;
        j["keystroke_texts"] = keystroke_texts;
        j["layout"] = layout;
        j["random_text_len"] = random_text_len;
        io::json conds = io::json::array();
        for (const auto& c : conditions)
            conds.push_back({{"obstacles", c.obstacle_name()},
                             {"orientation", c.orientation},
                             {"distance_m", c.distance_m}});
        j["conditions"] = conds;
        j["splits"] = {splits.train, splits.val, splits.test};
        j["master_seed"] = master_seed;
        j["radar"] = radar.to_json();
        j["activity_frames"] = activity_frames;
        j["clutter"] = clutter;
        return j;
    }
    std::uint64_t hash() const { return fnv1a(to_json().dump()); }
};

// ---- per-sequence ground truth sidecar ----

struct PressTruth {
    int frame_index = 0;
    std::string key;
    Vec3 position;  // world frame
    double u = 0.0, v = 0.0;  // keyboard-plane projection
};

struct SequenceMeta {
    std::string id;
    std::string label;      // activity class or typed text
    std::string kind;       // activity | keystroke
    Condition condition;
    std::uint64_t seed = 0;
    std::string layout;
    std::vector<PressTruth> presses;
    int frames = 0;

    io::json to_json() const {
        io::json j;
        j["id"] = id;
        j["label"] = label;
        j["kind"] = kind;
        j["obstacles"] = condition.obstacle_name();
        j["orientation"] = condition.orientation;
        j["distance_m"] = condition.distance_m;
        j["seed"] = seed;
        j["layout"] = layout;
        j["frames"] = frames;
        io::json ps = io::json::array();
        for (const auto& p : presses)
            ps.push_back({{"frame", p.frame_index},
                          {"key", p.key},
                          {"pos", {p.position.x, p.position.y, p.position.z}},
                          {"uv", {p.u, p.v}}});
        j["presses"] = ps;
        return j;
    }

    static SequenceMeta from_json(const io::json& j) {
        SequenceMeta m;
        m.id = j.at("id").get<std::string>();
        m.label = j.at("label").get<std::string>();
        m.kind = j.at("kind").get<std::string>();
        std::string obs = j.at("obstacles").get<std::string>();
        if (obs != "none") {
            std::size_t pos = 0;
            while (pos < obs.size()) {
                auto plus = obs.find('+', pos);
                std::string tok = obs.substr(pos, plus == std::string::npos ? std::string::npos
                                                                            : plus - pos);
                m.condition.obstacles.push_back(tok == "wood" ? scene::ObstacleKind::wooden_door
                                                              : scene::ObstacleKind::brick_wall);
                pos = (plus == std::string::npos) ? obs.size() : plus + 1;
            }
        }
        m.condition.orientation = j.at("orientation").get<std::string>();
        m.condition.distance_m = j.at("distance_m").get<double>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.layout = j.value("layout", "");
        m.frames = j.at("frames").get<int>();
        for (const auto& p : j.at("presses")) {
            PressTruth pt;
            pt.frame_index = p.at("frame").get<int>();
            pt.key = p.at("key").get<std::string>();
            pt.position = {p.at("pos")[0].get<double>(), p.at("pos")[1].get<double>(),
                           p.at("pos")[2].get<double>()};
            pt.u = p.at("uv")[0].get<double>();
            pt.v = p.at("uv")[1].get<double>();
            m.presses.push_back(pt);
        }
        return m;
    }
};

// ---- sequence container (all frames of one sequence in one file) ----

inline void write_sequence(const std::string& path,
                           const std::vector<radar::PointCloudFrame>& frames,
                           const radar::RadarConfig& cfg, std::uint64_t seed) {
    io::json header;
    header["kind"] = "point_cloud_sequence";
    header["seed"] = seed;
    header["config_hash"] = hex64(cfg.hash());
    io::json counts = io::json::array();
    io::json times = io::json::array();
    std::vector<double> payload;
    for (const auto& f : frames) {
        counts.push_back(f.points.size());
        times.push_back(f.timestamp_s);
        for (const auto& p : f.points) {
            payload.push_back(p.x);
            payload.push_back(p.y);
            payload.push_back(p.z);
            payload.push_back(p.velocity);
            payload.push_back(p.intensity);
            payload.push_back(p.rcs_m2.value_or(0.0));
        }
    }
    header["frame_counts"] = counts;
    header["timestamps"] = times;
    header["has_rcs"] = true;
    io::write_container(path, header, payload);
}

inline std::vector<radar::PointCloudFrame> read_sequence(const std::string& path) {
    io::Container c = io::read_container(path);
    if (c.header.value("kind", "") != "point_cloud_sequence")
        throw std::runtime_error("not a point cloud sequence: " + path);
    std::vector<radar::PointCloudFrame> frames;
    std::size_t off = 0;
    bool has_rcs = c.header.value("has_rcs", false);
    const auto& counts = c.header.at("frame_counts");
    const auto& times = c.header.at("timestamps");
    for (std::size_t fi = 0; fi < counts.size(); ++fi) {
        radar::PointCloudFrame f;
        f.frame_index = int(fi);
        f.timestamp_s = times[fi].get<double>();
        std::size_t n = counts[fi].get<std::size_t>();
        if (off + n * 6 > c.payload.size())
            throw std::runtime_error("sequence payload truncated: " + path);
        for (std::size_t i = 0; i < n; ++i) {
            radar::Point p;
            p.x = c.payload[off + 0];
            p.y = c.payload[off + 1];
            p.z = c.payload[off + 2];
            p.velocity = c.payload[off + 3];
            p.intensity = c.payload[off + 4];
            if (has_rcs) p.rcs_m2 = c.payload[off + 5];
            off += 6;
            f.points.push_back(p);
        }
        frames.push_back(std::move(f));
    }
    return frames;
}

// ---- simulation of one scripted sequence ----

struct SimulatedSequence {
    std::vector<radar::PointCloudFrame> frames;
    SequenceMeta meta;
};

// Runs the full chain per frame: snapshot -> IQ synthesis -> 2-D FFT ->
// CFAR -> point cloud -> RCS annotation.
inline SimulatedSequence simulate_sequence(const scene::Scene& sc, const scene::MotionScript& script,
                                           const radar::RadarConfig& cfg,
                                           const rcs::CalibrationTable& table, std::uint64_t seed,
                                           int max_frames = -1) {
    SimulatedSequence out;
    double dt = 1.0 / cfg.frame_rate_hz;
    int n_frames = int(script.duration_s / dt);
    if (max_frames > 0) n_frames = std::min(n_frames, max_frames);
    if (n_frames < 1) throw std::invalid_argument("script too short for one frame");
    for (int fi = 0; fi < n_frames; ++fi) {
        double t = fi * dt;
        scene::SceneSnapshot snap = scene::snapshot(sc, script, t);
        radar::RawDataCube cube = radar::synthesize_frame(snap.scatterers(), cfg, seed, fi);
        radar::RangeProfiles rp = radar::range_fft(cube, cfg);
        radar::RangeDopplerMap map = radar::doppler_map(rp, cfg);
        std::vector<radar::Detection> dets = radar::detect_points(map, radar::CfarConfig{});
        radar::PointCloudResult pc = radar::to_point_cloud(dets, cfg, t, fi);
        rcs::AnnotateResult ann = rcs::annotate_rcs(pc.frame, table);
        ann.frame.frame_index = fi;
        ann.frame.timestamp_s = t;
        out.frames.push_back(std::move(ann.frame));
    }
    out.meta.frames = n_frames;
    out.meta.seed = seed;
    return out;
}

// ---- dataset generation ----

struct ManifestEntry {
    std::string file;
    std::string hash;
};

struct Manifest {
    io::json spec;
    std::map<std::string, std::string> split_of;  // sequence id -> train|val|test
    std::vector<ManifestEntry> files;

    io::json to_json() const {
        io::json j;
        j["spec"] = spec;
        j["splits"] = split_of;
        io::json fl = io::json::array();
        for (const auto& f : files) fl.push_back({{"file", f.file}, {"hash", f.hash}});
        j["files"] = fl;
        return j;
    }
};

inline std::string random_text(const scene::KeyboardLayout& lay, int len, Rng& rng) {
    std::vector<std::string> keys;
    for (const auto& [k, p] : lay.key_positions)
        if (k.size() == 1) keys.push_back(k);  // single-character keys only
    std::string s;
    for (int i = 0; i < len; ++i) s += keys[std::size_t(rng.uniform_int(int(keys.size())))];
    return s;
}

// Exact per-class split sizes: floor allocation, remainder to test.
inline std::vector<std::string> split_assignment(int n, const SplitFractions& f, Rng& rng) {
    int n_train = int(std::floor(f.train * n + 1e-9));
    int n_val = int(std::floor(f.val * n + 1e-9));
    std::vector<std::string> s;
    for (int i = 0; i < n; ++i)
        s.push_back(i < n_train ? "train" : (i < n_train + n_val ? "val" : "test"));
    // deterministic shuffle so splits are not correlated with generation order
    for (int i = n - 1; i > 0; --i) std::swap(s[std::size_t(i)], s[std::size_t(rng.uniform_int(i + 1))]);
    return s;
}

// Keyboard-plane projection of a world-space press position: coordinates in
// the user frame's (x, z) plane, inverted through the scene placement.
inline void press_uv(const scene::Scene& sc, const Vec3& local_pos, double& u, double& v) {
    u = local_pos.x;
    v = local_pos.z;
    (void)sc;
}

inline Manifest generate_dataset(const DatasetSpec& spec, const std::string& out_dir) {
    spec.validate();
    fs::create_directories(out_dir);
    Manifest man;
    man.spec = spec.to_json();

    // Calibration once per radar config, shared by every sequence. Reference
    // distances stay inside the unambiguous range of the waveform.
    std::vector<double> cal_dist;
    for (double d = 1.0; d < 0.95 * spec.radar.max_range_m(); d += 0.5) cal_dist.push_back(d);
    rcs::CalibrationTable table =
        rcs::calibrate_with_simulator(spec.radar, cal_dist, 1.0, spec.master_seed ^ 0xCA11B);
    std::string cal_path = (fs::path(out_dir) / "calibration.bin").string();
    table.save(cal_path);
    man.files.push_back({"calibration.bin", hex64(io::file_hash(cal_path))});

    std::vector<std::string> classes =
        spec.kind == "activity" ? spec.activities : spec.keystroke_texts;
    scene::KeyboardLayout lay = scene::layout_by_name(spec.layout);
    if (spec.kind == "keystroke" && classes.empty()) {
        Rng trng(spec.master_seed ^ 0x7e97);
        for (int i = 0; i < spec.sequences_per_class; ++i)
            classes.push_back(random_text(lay, spec.random_text_len, trng));
    }
    int per_class = spec.kind == "keystroke" && !spec.keystroke_texts.empty()
                        ? spec.sequences_per_class
                        : (spec.kind == "keystroke" ? 1 : spec.sequences_per_class);

    for (std::size_t ci = 0; ci < classes.size(); ++ci) {
        const std::string& cls = classes[ci];
        Rng split_rng(spec.master_seed ^ fnv1a("split:" + cls));
        std::vector<std::string> splits = split_assignment(per_class, spec.splits, split_rng);
        for (int i = 0; i < per_class; ++i) {
            const Condition& cond =
                spec.conditions[(ci * std::size_t(per_class) + std::size_t(i)) % spec.conditions.size()];
            std::string id = (spec.kind == "activity" ? cls : "text" + std::to_string(ci)) + "_" +
                             std::to_string(i);
            std::uint64_t seed = spec.master_seed ^ fnv1a("seq:" + id);

            scene::ScenarioConfig scfg;
            scfg.distance_m = cond.distance_m;
            scfg.orientation = cond.orientation;
            scfg.clutter = spec.clutter;
            scfg.obstacles = cond.obstacles;
            scene::Scene sc = scene::build_scene(scfg);

            scene::MotionScript script;
            SequenceMeta meta;
            if (spec.kind == "activity") {
                script = scene::activity_script(cls, seed, 3.0, cond.distance_m, cond.orientation);
            } else {
                script = scene::keystroke_script(lay, cls, scene::KeystrokeTiming{}, seed,
                                                 cond.distance_m, cond.orientation);
                meta.layout = spec.layout;
            }
            int max_frames = spec.kind == "activity" ? spec.activity_frames : -1;
            SimulatedSequence sim = simulate_sequence(sc, script, spec.radar, table, seed, max_frames);
            meta.id = id;
            meta.label = cls;
            meta.kind = spec.kind;
            meta.condition = cond;
            meta.seed = seed;
            meta.frames = int(sim.frames.size());
            if (spec.kind == "keystroke") {
                meta.layout = spec.layout;
                for (const auto& pe : script.press_events) {
                    PressTruth pt;
                    pt.frame_index = int(pe.time_s * spec.radar.frame_rate_hz);
                    if (pt.frame_index >= meta.frames) pt.frame_index = meta.frames - 1;
                    pt.key = pe.key;
                    pt.position = sc.placement.to_world(pe.position_user_frame);
                    press_uv(sc, pe.position_user_frame, pt.u, pt.v);
                    meta.presses.push_back(pt);
                }
            }

            std::string seq_file = "seq_" + id + ".bin";
            std::string meta_file = "seq_" + id + ".json";
            write_sequence((fs::path(out_dir) / seq_file).string(), sim.frames, spec.radar, seed);
            io::write_text((fs::path(out_dir) / meta_file).string(), meta.to_json().dump(2) + "\n");
            man.files.push_back(
                {seq_file, hex64(io::file_hash((fs::path(out_dir) / seq_file).string()))});
            man.files.push_back(
                {meta_file, hex64(io::file_hash((fs::path(out_dir) / meta_file).string()))});
            man.split_of[id] = splits[std::size_t(i)];
        }
    }
    io::write_text((fs::path(out_dir) / "manifest.json").string(), man.to_json().dump(2) + "\n");
    return man;
}

inline Manifest load_manifest(const std::string& dir) {
    io::json j = io::json::parse(io::read_text((fs::path(dir) / "manifest.json").string()));
    Manifest m;
    m.spec = j.at("spec");
    for (const auto& [k, v] : j.at("splits").items()) m.split_of[k] = v.get<std::string>();
    for (const auto& f : j.at("files"))
        m.files.push_back({f.at("file").get<std::string>(), f.at("hash").get<std::string>()});
    return m;
}

struct LoadedSequence {
    std::vector<radar::PointCloudFrame> frames;
    SequenceMeta meta;
    std::string split;
};

// Loads every sequence of a split, sorted by id for determinism.
inline std::vector<LoadedSequence> load_split(const std::string& dir, const Manifest& man,
                                              const std::string& split) {
    std::vector<LoadedSequence> out;
    for (const auto& [id, sp] : man.split_of) {  // std::map: lexicographic order
        if (split != "all" && sp != split) continue;
        LoadedSequence s;
        s.frames = read_sequence((fs::path(dir) / ("seq_" + id + ".bin")).string());
        s.meta = SequenceMeta::from_json(
            io::json::parse(io::read_text((fs::path(dir) / ("seq_" + id + ".json")).string())));
        s.split = sp;
        out.push_back(std::move(s));
    }
    return out;
}

inline void verify_manifest(const std::string& dir, const Manifest& man) {
    for (const auto& f : man.files) {
        std::string h = hex64(io::file_hash((fs::path(dir) / f.file).string()));
        if (h != f.hash)
            throw std::runtime_error("manifest hash mismatch for " + f.file + ": " + h +
                                     " != " + f.hash);
    }
}

}  // namespace mmvr::harness
