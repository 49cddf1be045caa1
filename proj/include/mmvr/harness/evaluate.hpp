#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mmvr/actnet.hpp"
#include "mmvr/harness/pipeline.hpp"

namespace mmvr::harness {

// ---- metrics ----

struct ClassMetrics {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
    long support = 0;
};

struct PredictionRecord {
    std::string id;
    int truth = 0;
    std::vector<double> probs;
};

struct MetricsReport {
    std::vector<std::string> labels;
    std::vector<std::vector<long>> confusion;  // [truth][pred]
    double top1 = 0.0, top5 = 0.0, map_score = 0.0;
    std::vector<ClassMetrics> per_class;
    long samples = 0;

    io::json to_json() const {
        io::json j;
        j["labels"] = labels;
        j["confusion"] = confusion;
        j["top1"] = top1;
        j["top5"] = top5;
        j["mAP"] = map_score;
        j["samples"] = samples;
        io::json pc = io::json::array();
        for (const auto& c : per_class)
            pc.push_back({{"precision", c.precision},
                          {"recall", c.recall},
                          {"f1", c.f1},
                          {"support", c.support}});
        j["per_class"] = pc;
        return j;
    }
};

// Deterministic ranking: descending probability, ties to the lower index.
inline std::vector<int> rank_classes(const std::vector<double>& probs) {
    std::vector<int> order(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) order[i] = int(i);
    std::stable_sort(order.begin(), order.end(), [&probs](int a, int b) {
        return probs[std::size_t(a)] > probs[std::size_t(b)];
    });
    return order;
}

inline MetricsReport compute_metrics(const std::vector<std::string>& labels,
                                     const std::vector<PredictionRecord>& records) {
    int C = int(labels.size());
    MetricsReport rep;
    rep.labels = labels;
    rep.confusion.assign(std::size_t(C), std::vector<long>(std::size_t(C), 0));
    rep.per_class.assign(std::size_t(C), {});
    rep.samples = long(records.size());
    if (records.empty()) return rep;

    long hit1 = 0, hit5 = 0;
    for (const auto& r : records) {
        if (int(r.probs.size()) != C) throw std::invalid_argument("prediction width mismatch");
        if (r.truth < 0 || r.truth >= C) throw std::invalid_argument("truth index out of range");
        std::vector<int> order = rank_classes(r.probs);
        int pred = order[0];
        rep.confusion[std::size_t(r.truth)][std::size_t(pred)] += 1;
        if (pred == r.truth) ++hit1;
        for (int k = 0; k < std::min(5, C); ++k)
            if (order[std::size_t(k)] == r.truth) {
                ++hit5;
                break;
            }
    }
    rep.top1 = double(hit1) / double(records.size());
    rep.top5 = double(hit5) / double(records.size());

    for (int c = 0; c < C; ++c) {
        long tp = rep.confusion[std::size_t(c)][std::size_t(c)];
        long support = 0, predicted = 0;
        for (int j = 0; j < C; ++j) {
            support += rep.confusion[std::size_t(c)][std::size_t(j)];
            predicted += rep.confusion[std::size_t(j)][std::size_t(c)];
        }
        ClassMetrics& m = rep.per_class[std::size_t(c)];
        m.support = support;
        m.precision = predicted > 0 ? double(tp) / double(predicted) : 0.0;
        m.recall = support > 0 ? double(tp) / double(support) : 0.0;
        m.f1 = (m.precision + m.recall) > 0.0
                   ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                   : 0.0;
    }

    // mAP: per-class average precision over the ranked record list.
    double ap_sum = 0.0;
    int ap_classes = 0;
    for (int c = 0; c < C; ++c) {
        std::vector<int> order(records.size());
        for (std::size_t i = 0; i < records.size(); ++i) order[i] = int(i);
        std::stable_sort(order.begin(), order.end(), [&records, c](int a, int b) {
            return records[std::size_t(a)].probs[std::size_t(c)] >
                   records[std::size_t(b)].probs[std::size_t(c)];
        });
        long pos_seen = 0, n_pos = 0;
        double ap = 0.0;
        for (std::size_t rank = 0; rank < order.size(); ++rank) {
            if (records[std::size_t(order[rank])].truth == c) {
                ++pos_seen;
                ap += double(pos_seen) / double(rank + 1);
            }
        }
        for (const auto& r : records) n_pos += (r.truth == c) ? 1 : 0;
        if (n_pos > 0) {
            ap_sum += ap / double(n_pos);
            ++ap_classes;
        }
    }
    rep.map_score = ap_classes > 0 ? ap_sum / double(ap_classes) : 0.0;
    return rep;
}

// ---- condition filters ----

struct EvalFilter {
    std::optional<std::string> obstacles;    // "none", "wood", "brick", "wood+brick"
    std::optional<std::string> orientation;  // "0" | "90" | "180" | "270" | "top"
    std::optional<std::pair<double, double>> distance_m;

    bool keeps(const SequenceMeta& m) const {
        if (obstacles && m.condition.obstacle_name() != *obstacles) return false;
        if (orientation && m.condition.orientation != *orientation) return false;
        if (distance_m &&
            (m.condition.distance_m < distance_m->first || m.condition.distance_m > distance_m->second))
            return false;
        return true;
    }
};

// ---- prediction persistence ----

inline void write_predictions(const std::string& path, const std::vector<std::string>& labels,
                              const std::vector<PredictionRecord>& records) {
    io::json j;
    j["labels"] = labels;
    io::json rs = io::json::array();
    for (const auto& r : records) rs.push_back({{"id", r.id}, {"truth", r.truth}, {"probs", r.probs}});
    j["records"] = rs;
    io::write_text(path, j.dump(2) + "\n");
}

inline std::pair<std::vector<std::string>, std::vector<PredictionRecord>> read_predictions(
    const std::string& path) {
    io::json j = io::json::parse(io::read_text(path));
    std::vector<std::string> labels = j.at("labels").get<std::vector<std::string>>();
    std::vector<PredictionRecord> records;
    for (const auto& r : j.at("records")) {
        PredictionRecord pr;
        pr.id = r.at("id").get<std::string>();
        pr.truth = r.at("truth").get<int>();
        pr.probs = r.at("probs").get<std::vector<double>>();
        records.push_back(std::move(pr));
    }
    return {labels, records};
}

// Metrics recomputed from a persisted prediction file alone.
inline MetricsReport metrics_from_prediction_file(const std::string& path) {
    auto [labels, records] = read_predictions(path);
    return compute_metrics(labels, records);
}

// ---- ActNet evaluation ----

inline std::vector<PredictionRecord> predict_actnet(const act::ActNet& net,
                                                    const std::vector<LoadedSequence>& seqs) {
    Featurizer feat;
    feat.frame_stride = 2;  // must match train_actnet
    std::vector<PredictionRecord> records;
    for (const auto& s : seqs) {
        PredictionRecord r;
        r.id = s.meta.id;
        r.truth = net.label_index(s.meta.label);
        r.probs = net.classify_sequence(feat.sequence_tensors(s.frames));
        records.push_back(std::move(r));
    }
    return records;
}

inline MetricsReport evaluate_actnet(const act::ActNet& net, const std::string& dir,
                                     const Manifest& man, const std::string& split,
                                     const EvalFilter& filter,
                                     const std::string& predictions_out = "") {
    std::vector<LoadedSequence> seqs = load_split(dir, man, split);
    std::vector<LoadedSequence> kept;
    for (auto& s : seqs)
        if (filter.keeps(s.meta)) kept.push_back(std::move(s));
    if (kept.empty()) throw std::runtime_error("condition filter selected no sequences");
    std::vector<PredictionRecord> records = predict_actnet(net, kept);
    if (!predictions_out.empty()) write_predictions(predictions_out, net.labels(), records);
    return compute_metrics(net.labels(), records);
}

// ---- KeyNet evaluation ----

struct KeyEvalResult {
    MetricsReport metrics;                    // label space: active layout's keys
    std::map<std::string, double> per_key_top1;
    std::map<std::string, long> per_key_support;
    double press_precision = 0.0, press_recall = 0.0;
    long presses = 0;
};

// Motion feature at one frame, computed over a window of the configured
// length centered on it — the same context length the model was trained with.
inline nn::Tensor keynet_motion_at(const key::KeyNet& net, const std::vector<nn::Tensor>& frames,
                                   int frame_index) {
    int w = net.config().window;
    int n = int(frames.size());
    int start = std::clamp(frame_index - w / 2, 0, std::max(0, n - w));
    int end = std::min(n, start + w);
    std::vector<nn::Tensor> sub(frames.begin() + start, frames.begin() + end);
    nn::Tape t;
    nn::ParamUse P(t, net.params());
    std::vector<int> fs;
    for (const auto& X : sub) fs.push_back(net.encode_vr(t, P, X));
    std::vector<int> ms = net.bimotion(t, P, fs);
    return t.value(ms[std::size_t(frame_index - start)]);
}

// Per-frame motion features of a whole sequence, evaluated numerically.
inline std::vector<nn::Tensor> keynet_motion_values(const key::KeyNet& net,
                                                    const std::vector<nn::Tensor>& frames,
                                                    std::vector<double>* press_scores = nullptr) {
    nn::Tape t;
    nn::ParamUse P(t, net.params());
    std::vector<int> fs;
    for (const auto& X : frames) fs.push_back(net.encode_vr(t, P, X));
    std::vector<int> ms = net.bimotion(t, P, fs);
    std::vector<nn::Tensor> out;
    for (int m : ms) {
        if (press_scores) press_scores->push_back(t.value(net.press_score(t, P, m)).v[0]);
        out.push_back(t.value(m));
    }
    return out;
}

inline KeyEvalResult evaluate_keynet(const key::KeyNet& net, const std::string& dir,
                                     const Manifest& man, const std::string& split,
                                     const EvalFilter& filter,
                                     const std::string& predictions_out = "",
                                     const aug::ActionFeatureModel* augmenter = nullptr) {
    std::vector<LoadedSequence> seqs = load_split(dir, man, split);
    std::vector<LoadedSequence> kept;
    for (auto& s : seqs)
        if (filter.keeps(s.meta)) kept.push_back(std::move(s));
    if (kept.empty()) throw std::runtime_error("condition filter selected no sequences");

    Featurizer feat;
    feat.center = false;

    std::vector<std::string> key_labels;  // fixed label space from the first press's layout
    std::vector<PredictionRecord> records;
    long gt_total = 0, det_total = 0, det_matched = 0;

    for (const auto& s : kept) {
        std::vector<radar::PointCloudFrame> vr_frames = extract_device_frames(s.frames, augmenter);
        std::vector<nn::Tensor> tensors;
        for (const auto& f : vr_frames) tensors.push_back(feat.frame_tensor(f, Vec3{}));
        std::vector<double> scores;
        std::vector<nn::Tensor> ms = keynet_motion_values(net, tensors, &scores);

        // press detection quality against ground truth (±2 frame tolerance)
        std::vector<int> detected = net.detect_press(scores);
        det_total += long(detected.size());
        gt_total += long(s.meta.presses.size());
        for (const auto& p : s.meta.presses)
            for (int d : detected)
                if (std::abs(d - p.frame_index) <= 2) {
                    ++det_matched;
                    break;
                }

        // layout confidence from the sequence's press geometry
        std::vector<key::Press2D> presses_2d;
        std::optional<key::Press2D> confirm_2d;
        const scene::KeyboardLayout* lay = nullptr;
        for (const auto& l : net.layouts())
            if (l.name == s.meta.layout) lay = &l;
        for (const auto& p : s.meta.presses) {
            presses_2d.push_back({p.u, p.v});
            if (lay && p.key == lay->confirm_key) confirm_2d = key::Press2D{p.u, p.v};
        }
        if (presses_2d.empty()) continue;
        key::LayoutConfidence conf = net.layout_confidence(presses_2d, confirm_2d);

        // key decoding at ground-truth press frames
        for (const auto& p : s.meta.presses) {
            if (p.frame_index < 0 || p.frame_index >= int(ms.size())) continue;
            key::PressEvent ev =
                net.decode_key(keynet_motion_at(net, tensors, p.frame_index), conf, p.frame_index);
            if (key_labels.empty()) key_labels = ev.keys;
            if (ev.keys != key_labels) continue;  // cross-layout presses are not comparable
            auto it = std::find(key_labels.begin(), key_labels.end(), p.key);
            if (it == key_labels.end()) continue;
            PredictionRecord r;
            r.id = s.meta.id + ":" + std::to_string(p.frame_index);
            r.truth = int(it - key_labels.begin());
            r.probs = ev.distribution;
            records.push_back(std::move(r));
        }
    }
    if (records.empty()) throw std::runtime_error("no decodable presses in the filtered split");

    KeyEvalResult out;
    out.metrics = compute_metrics(key_labels, records);
    out.presses = long(records.size());
    out.press_precision = det_total > 0 ? double(det_matched) / double(det_total) : 0.0;
    out.press_recall = gt_total > 0 ? double(det_matched) / double(gt_total) : 0.0;
    for (std::size_t c = 0; c < key_labels.size(); ++c) {
        const ClassMetrics& m = out.metrics.per_class[c];
        if (m.support > 0) {
            out.per_key_top1[key_labels[c]] =
                double(out.metrics.confusion[c][c]) / double(m.support);
            out.per_key_support[key_labels[c]] = m.support;
        }
    }
    if (!predictions_out.empty()) write_predictions(predictions_out, key_labels, records);
    return out;
}

}  // namespace mmvr::harness
