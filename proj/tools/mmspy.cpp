// mmspy: end-to-end driver for the radar simulator and the inference stack.
//
// Subcommands: simulate, extract, train, eval, recover, report. All take
// --config (key = value file), --seed, and --out. Failures exit nonzero with
// a one-line JSON error object on stderr.

#include <CLI11.hpp>

#include <cstdio>
#include <map>
#include <string>

#include "mmvr/harness/dataset.hpp"
#include "mmvr/harness/evaluate.hpp"
#include "mmvr/harness/recover.hpp"
#include "mmvr/harness/report.hpp"
#include "mmvr/harness/train.hpp"
#include "mmvr/vr_extract.hpp"

using namespace mmvr;
namespace hn = mmvr::harness;

namespace {

using Config = std::map<std::string, std::string>;

Config load_config(const std::string& path) {
    Config cfg;
    if (path.empty()) return cfg;
    for (const auto& [k, v] : io::parse_kv(io::read_text(path))) cfg[k] = v;
    return cfg;
}

std::string get(const Config& c, const std::string& key, const std::string& def) {
    auto it = c.find(key);
    return it == c.end() ? def : it->second;
}

int get_int(const Config& c, const std::string& key, int def) {
    auto it = c.find(key);
    return it == c.end() ? def : std::stoi(it->second);
}

double get_double(const Config& c, const std::string& key, double def) {
    auto it = c.find(key);
    return it == c.end() ? def : std::stod(it->second);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        auto comma = s.find(',', pos);
        std::string tok = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        while (!tok.empty() && tok.front() == ' ') tok.erase(tok.begin());
        while (!tok.empty() && tok.back() == ' ') tok.pop_back();
        if (!tok.empty()) out.push_back(tok);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

radar::RadarConfig radar_from_config(const Config& c) {
    radar::RadarConfig r;
    r.samples_per_chirp = get_int(c, "radar.samples_per_chirp", r.samples_per_chirp);
    r.chirps_per_frame = get_int(c, "radar.chirps_per_frame", r.chirps_per_frame);
    r.tx_power_dbm = get_double(c, "radar.tx_power_dbm", r.tx_power_dbm);
    r.validate();
    return r;
}

std::vector<hn::Condition> conditions_from_config(const Config& c) {
    std::vector<hn::Condition> conds;
    std::vector<std::string> obstacles = split_list(get(c, "obstacles", "none"));
    std::vector<std::string> orientations = split_list(get(c, "orientations", "0"));
    std::vector<std::string> distances = split_list(get(c, "distances", "3"));
    for (const auto& ob : obstacles)
        for (const auto& ori : orientations)
            for (const auto& d : distances) {
                hn::Condition cond;
                cond.orientation = ori;
                cond.distance_m = std::stod(d);
                if (ob != "none")
                    for (const auto& tok : split_list(ob == "wood+brick" ? "wood,brick" : ob))
                        cond.obstacles.push_back(tok == "wood" ? scene::ObstacleKind::wooden_door
                                                               : scene::ObstacleKind::brick_wall);
                conds.push_back(cond);
            }
    return conds;
}

hn::EvalFilter filter_from_config(const Config& c) {
    hn::EvalFilter f;
    if (c.count("filter.obstacles")) f.obstacles = c.at("filter.obstacles");
    if (c.count("filter.orientation")) f.orientation = c.at("filter.orientation");
    if (c.count("filter.distance_min") || c.count("filter.distance_max"))
        f.distance_m = {get_double(c, "filter.distance_min", 0.0),
                        get_double(c, "filter.distance_max", 100.0)};
    return f;
}

int cmd_simulate(const Config& cfg, std::uint64_t seed, const std::string& out) {
    hn::DatasetSpec spec;
    spec.kind = get(cfg, "kind", "activity");
    spec.sequences_per_class = get_int(cfg, "sequences_per_class", 10);
    if (cfg.count("activities")) spec.activities = split_list(cfg.at("activities"));
    if (cfg.count("texts")) spec.keystroke_texts = split_list(cfg.at("texts"));
    spec.layout = get(cfg, "layout", "layout_36");
    spec.random_text_len = get_int(cfg, "text_len", 4);
    spec.conditions = conditions_from_config(cfg);
    spec.master_seed = seed;
    spec.radar = radar_from_config(cfg);
    spec.activity_frames = get_int(cfg, "frames", 32);
    spec.clutter = get(cfg, "clutter", "true") == "true";
    hn::Manifest man = hn::generate_dataset(spec, out);
    std::printf("{\"sequences\": %zu, \"out\": \"%s\"}\n", man.split_of.size(), out.c_str());
    return 0;
}

int cmd_extract(const Config& cfg, const std::string& out) {
    std::string input = get(cfg, "input", "");
    if (input.empty()) throw std::runtime_error("extract requires input = <sequence.bin>");
    vr::RcsBand band{get_double(cfg, "band_lo", 3.0), get_double(cfg, "band_hi", 10.0)};
    std::vector<radar::PointCloudFrame> frames = hn::read_sequence(input);
    hn::fs::create_directories(out);
    io::json summary = io::json::array();
    std::vector<radar::PointCloudFrame> extracted;
    for (const auto& f : frames) {
        vr::VrExtraction ex = vr::extract_vr_points(f, band, vr::DbscanConfig{});
        summary.push_back({{"frame", f.frame_index},
                           {"points", ex.frame.points.size()},
                           {"groups", ex.groups.size()},
                           {"no_vr_activity", ex.no_vr_activity}});
        extracted.push_back(std::move(ex.frame));
    }
    radar::RadarConfig rc;
    hn::write_sequence((hn::fs::path(out) / "extracted.bin").string(), extracted, rc, 0);
    io::write_text((hn::fs::path(out) / "extract_summary.json").string(), summary.dump(2) + "\n");
    std::printf("{\"frames\": %zu, \"out\": \"%s\"}\n", extracted.size(), out.c_str());
    return 0;
}

int cmd_train(const Config& cfg, std::uint64_t seed, const std::string& out) {
    std::string model = get(cfg, "model", "actnet");
    std::string dataset = get(cfg, "dataset", "");
    if (dataset.empty()) throw std::runtime_error("train requires dataset = <dir>");
    hn::Manifest man = hn::load_manifest(dataset);
    hn::TrainOptions opts;
    opts.epochs = get_int(cfg, "epochs", 100);
    opts.patience = get_int(cfg, "patience", 200);
    opts.lr = get_double(cfg, "lr", 3e-3);
    opts.seed = seed;
    hn::fs::create_directories(out);
    std::string ckpt = (hn::fs::path(out) / (model + ".ckpt")).string();
    std::string log_path = (hn::fs::path(out) / (model + "_train_log.json")).string();
    hn::TrainLog log;
    if (model == "actnet") {
        act::ActNetConfig nc;
        hn::ActTrainResult res = hn::train_actnet(dataset, man, opts, nc);
        res.net.save(ckpt, fnv1a(man.spec.dump()), opts.seed);
        log = res.log;
    } else if (model == "keynet") {
        key::KeyNetConfig nc;
        hn::KeyTrainResult res = hn::train_keynet(dataset, man, opts, nc);
        res.net.save(ckpt, fnv1a(man.spec.dump()), opts.seed);
        log = res.log;
    } else if (model == "augment") {
        aug::AugmentConfig nc;
        hn::AugTrainResult res = hn::train_augment(dataset, man, opts, nc);
        hn::save_augment(ckpt, res.model, opts.seed);
        log = res.log;
    } else {
        throw std::runtime_error("unknown model kind: " + model);
    }
    io::write_text(log_path, log.to_json().dump(2) + "\n");
    if (log.nan_abort)
        throw std::runtime_error("training diverged (NaN) at step " + std::to_string(log.nan_step));
    std::printf("{\"checkpoint\": \"%s\", \"best_val\": %g}\n", ckpt.c_str(), log.best_val);
    return 0;
}

int cmd_eval(const Config& cfg, const std::string& out) {
    std::string model = get(cfg, "model", "actnet");
    std::string dataset = get(cfg, "dataset", "");
    std::string ckpt = get(cfg, "checkpoint", "");
    std::string split = get(cfg, "split", "test");
    if (dataset.empty() || ckpt.empty())
        throw std::runtime_error("eval requires dataset = <dir> and checkpoint = <file>");
    hn::Manifest man = hn::load_manifest(dataset);
    hn::EvalFilter filter = filter_from_config(cfg);
    hn::fs::create_directories(out);
    std::string preds = (hn::fs::path(out) / (model + "_predictions.json")).string();
    io::json metrics;
    if (model == "actnet") {
        act::ActNet net = act::ActNet::load(ckpt);
        metrics = hn::evaluate_actnet(net, dataset, man, split, filter, preds).to_json();
    } else if (model == "keynet") {
        key::KeyNet net = key::KeyNet::load(ckpt);
        hn::KeyEvalResult res = hn::evaluate_keynet(net, dataset, man, split, filter, preds);
        metrics = res.metrics.to_json();
        metrics["press_precision"] = res.press_precision;
        metrics["press_recall"] = res.press_recall;
        io::json pk = io::json::object();
        for (const auto& [k, v] : res.per_key_top1) pk[k] = v;
        metrics["per_key_top1"] = pk;
    } else {
        throw std::runtime_error("unknown model kind: " + model);
    }
    std::string mpath = (hn::fs::path(out) / (model + "_metrics.json")).string();
    io::write_text(mpath, metrics.dump(2) + "\n");
    std::printf("%s\n", metrics.dump().c_str());
    return 0;
}

int cmd_recover(const Config& cfg, const std::string& out) {
    std::string dataset = get(cfg, "dataset", "");
    std::string ckpt = get(cfg, "checkpoint", "");
    if (dataset.empty() || ckpt.empty())
        throw std::runtime_error("recover requires dataset = <dir> and checkpoint = <file>");
    hn::Manifest man = hn::load_manifest(dataset);
    key::KeyNet net = key::KeyNet::load(ckpt);
    hn::RecoveryCurve curve = hn::recover_passwords(
        net, dataset, man, get_int(cfg, "beam", 64), get_int(cfg, "min_len", 2),
        get_int(cfg, "max_len", 12), get(cfg, "split", "all"));
    hn::fs::create_directories(out);
    io::write_text((hn::fs::path(out) / "password_curves.json").string(),
                   curve.to_json().dump(2) + "\n");
    io::write_text((hn::fs::path(out) / "password_curves.csv").string(),
                   hn::csv_password_curve(curve));
    std::printf("%s\n", curve.to_json().dump().c_str());
    return 0;
}

int cmd_report(const Config& cfg, const std::string& out) {
    hn::ReportInputs in;
    if (cfg.count("activity_predictions")) {
        auto [labels, recs] = hn::read_predictions(cfg.at("activity_predictions"));
        in.activity = hn::compute_metrics(labels, recs);
    }
    if (cfg.count("keystroke_predictions")) {
        auto [labels, recs] = hn::read_predictions(cfg.at("keystroke_predictions"));
        hn::KeyEvalResult ker;
        ker.metrics = hn::compute_metrics(labels, recs);
        for (std::size_t c = 0; c < labels.size(); ++c)
            if (ker.metrics.per_class[c].support > 0)
                ker.per_key_top1[labels[c]] = double(ker.metrics.confusion[c][c]) /
                                              double(ker.metrics.per_class[c].support);
        in.keystroke = ker;
    }
    if (cfg.count("password_curves")) {
        io::json j = io::json::parse(io::read_text(cfg.at("password_curves")));
        hn::RecoveryCurve curve;
        for (const auto& [k, v] : j.at("top1").items()) curve.top1[std::stoi(k)] = v.get<double>();
        for (const auto& [k, v] : j.at("top5").items()) curve.top5[std::stoi(k)] = v.get<double>();
        for (const auto& [k, v] : j.at("trials").items()) curve.trials[std::stoi(k)] = v.get<long>();
        in.passwords = curve;
    }
    auto written = hn::emit_report(in, out);
    io::json j = io::json::array();
    for (const auto& w : written) j.push_back(w);
    std::printf("%s\n", j.dump().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mmWave VR sensing simulator and inference pipeline"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".";
    std::uint64_t seed = 1;
    app.add_option("--config", config_path, "key = value configuration file")->capture_default_str();
    app.add_option("--seed", seed, "master seed")->capture_default_str();
    app.add_option("--out", out_dir, "output directory")->capture_default_str();

    auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
    auto* ext = app.add_subcommand("extract", "VR point extraction over a stored sequence");
    auto* trn = app.add_subcommand("train", "train actnet | keynet | augment");
    auto* evl = app.add_subcommand("eval", "evaluate a checkpoint on a split");
    auto* rec = app.add_subcommand("recover", "password recovery curves");
    auto* rep = app.add_subcommand("report", "emit CSV/SVG artifacts");
    for (auto* sc : {sim, ext, trn, evl, rec, rep}) sc->fallthrough();

    CLI11_PARSE(app, argc, argv);

    std::string cmd;
    try {
        Config cfg = load_config(config_path);
        if (sim->parsed()) { cmd = "simulate"; return cmd_simulate(cfg, seed, out_dir); }
        if (ext->parsed()) { cmd = "extract"; return cmd_extract(cfg, out_dir); }
        if (trn->parsed()) { cmd = "train"; return cmd_train(cfg, seed, out_dir); }
        if (evl->parsed()) { cmd = "eval"; return cmd_eval(cfg, out_dir); }
        if (rec->parsed()) { cmd = "recover"; return cmd_recover(cfg, out_dir); }
        if (rep->parsed()) { cmd = "report"; return cmd_report(cfg, out_dir); }
    } catch (const std::exception& e) {
        io::json err{{"error", e.what()}, {"command", cmd}};
        std::fprintf(stderr, "%s\n", err.dump().c_str());
        return 1;
    }
    return 2;  // unreachable: require_subcommand guarantees one branch
}
