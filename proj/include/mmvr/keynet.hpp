#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "mmvr/nn/checkpoint.hpp"
#include "mmvr/nn/layers.hpp"
#include "mmvr/nn/optim.hpp"
#include "mmvr/scene.hpp"

namespace mmvr::key {

struct KeyNetConfig {
    int feat_dim = 32;
    int motion_hidden = 32;
    int window = 25;            // frames per input sequence
    double press_threshold = 0.5;
    int refractory_frames = 5;  // ~150 ms press at the default frame rate
    double lambda = 0.5;        // auxiliary loss weight
    double tau_confidence = 0.5;
};

struct LayoutConfidence {
    std::vector<double> c;  // simplex over layouts
    std::vector<double> d;  // standardized spatial alignment feature per layout
    std::vector<double> f;  // standardized confirmation-key feature per layout
    int argmax() const {
        int best = 0;
        for (std::size_t i = 1; i < c.size(); ++i)
            if (c[i] > c[std::size_t(best)]) best = int(i);
        return best;
    }
};

struct PressEvent {
    int frame_index = 0;
    std::string decoded_key;
    std::vector<double> distribution;  // over the active layout's keys
    std::vector<std::string> keys;     // matching key names
    int layout_index = 0;
};

struct MultiTaskLoss {
    double l_key = 0.0, l_pos = 0.0, l_type = 0.0, l_conf = 0.0, l_new = 0.0;
    double lambda = 0.5;
    double total = 0.0;
    std::vector<std::string> skipped;  // label components that were absent
};

// Supervision for one window.
struct WindowLabels {
    std::vector<int> press_frames;            // frame indices of presses
    std::vector<std::string> keys;            // one per press
    std::vector<Vec3> press_positions;        // one per press (world frame)
    std::optional<int> layout_index;
};

// 2-D press projection used for layout geometry features.
struct Press2D {
    double u = 0.0, v = 0.0;
};

class KeyNet {
public:
    KeyNet(std::vector<scene::KeyboardLayout> layouts, const KeyNetConfig& cfg, std::uint64_t seed)
        : cfg_(cfg), layouts_(std::move(layouts)) {
        if (layouts_.empty()) throw std::invalid_argument("KeyNet needs at least one layout");
        for (const auto& l : layouts_)
            for (const auto& [k, p] : l.key_positions)
                if (std::find(vocab_.begin(), vocab_.end(), k) == vocab_.end()) vocab_.push_back(k);
        std::sort(vocab_.begin(), vocab_.end());
        Rng rng(seed);
        nn::init_dense(params_, "key.enc", 6, cfg_.feat_dim, rng);
        nn::init_dense(params_, "key.attn", cfg_.feat_dim, 1, rng);
        nn::init_lstm(params_, "key.lstm_f", cfg_.feat_dim, cfg_.motion_hidden, rng);
        nn::init_lstm(params_, "key.lstm_b", cfg_.feat_dim, cfg_.motion_hidden, rng);
        nn::init_dense(params_, "key.motion", cfg_.feat_dim + 2 * cfg_.motion_hidden,
                       cfg_.motion_hidden, rng);
        nn::init_dense(params_, "key.press", cfg_.motion_hidden, 1, rng);
        nn::init_dense(params_, "key.key", cfg_.motion_hidden, int(vocab_.size()), rng);
        nn::init_dense(params_, "key.pos", cfg_.motion_hidden, 3, rng);
        params_.define("key.conf.Wc", nn::Tensor({1, 1}, {1.0}));
        params_.define("key.conf.Wf", nn::Tensor({1, 1}, {1.0}));
        params_.define("key.conf.b", nn::Tensor({1, int(layouts_.size())}));
    }

    const KeyNetConfig& config() const { return cfg_; }
    const std::vector<scene::KeyboardLayout>& layouts() const { return layouts_; }
    const std::vector<std::string>& vocab() const { return vocab_; }
    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }

    int vocab_index(const std::string& k) const {
        auto it = std::find(vocab_.begin(), vocab_.end(), k);
        if (it == vocab_.end()) throw std::invalid_argument("key not in vocabulary: " + k);
        return int(it - vocab_.begin());
    }

    // f = attention-weighted mean of the per-point features psi(P).
    int encode_vr(nn::Tape& t, nn::ParamUse& P, const nn::Tensor& X) const {
        if (X.rows() == 0)
            throw std::invalid_argument("encode_vr: empty frame (augmentation contract violated)");
        int psi = t.relu_(t.add(t.matmul(t.input(X), P("key.enc.W")), P("key.enc.b")));
        int scores = t.add(t.matmul(psi, P("key.attn.W")), P("key.attn.b"));  // (n, 1)
        int w = t.softmax_rows(t.transpose(scores));                          // (1, n)
        return t.matmul(w, psi);                                              // (1, feat)
    }

    // m_t = tanh(W_m [f_t, h_fwd(t-1), h_bwd(t+1)] + b_m); at the sequence
    // edges the directional states are the initial (zero) states.
    std::vector<int> bimotion(nn::Tape& t, nn::ParamUse& P, const std::vector<int>& fs) const {
        if (fs.empty()) throw std::invalid_argument("bimotion: empty sequence");
        int n = int(fs.size());
        int h0 = t.input(nn::Tensor({1, cfg_.motion_hidden}));
        std::vector<int> hf(static_cast<std::size_t>(n)), hb(static_cast<std::size_t>(n));
        nn::LstmState sf = nn::lstm_init_state(t, cfg_.motion_hidden);
        for (int i = 0; i < n; ++i) {
            hf[std::size_t(i)] = (i == 0) ? h0 : sf.h;  // state before consuming f_i
            sf = nn::lstm_step(t, P, "key.lstm_f", fs[std::size_t(i)], sf, cfg_.motion_hidden);
        }
        nn::LstmState sb = nn::lstm_init_state(t, cfg_.motion_hidden);
        for (int i = n - 1; i >= 0; --i) {
            hb[std::size_t(i)] = (i == n - 1) ? h0 : sb.h;  // state after consuming f_{i+1}..
            sb = nn::lstm_step(t, P, "key.lstm_b", fs[std::size_t(i)], sb, cfg_.motion_hidden);
        }
        std::vector<int> ms;
        ms.reserve(std::size_t(n));
        for (int i = 0; i < n; ++i) {
            int cat = t.concat_cols({fs[std::size_t(i)], hf[std::size_t(i)], hb[std::size_t(i)]});
            ms.push_back(t.tanh_(t.add(t.matmul(cat, P("key.motion.W")), P("key.motion.b"))));
        }
        return ms;
    }

    int press_score(nn::Tape& t, nn::ParamUse& P, int m) const {
        return t.sigmoid_(t.add(t.matmul(m, P("key.press.W")), P("key.press.b")));
    }

    int key_logits(nn::Tape& t, nn::ParamUse& P, int m) const {
        return t.add(t.matmul(m, P("key.key.W")), P("key.key.b"));
    }

    // Threshold crossing with per-run peak selection and a refractory gap.
    std::vector<int> detect_press(const std::vector<double>& scores) const {
        std::vector<int> peaks;
        int i = 0, n = int(scores.size());
        while (i < n) {
            if (scores[std::size_t(i)] <= cfg_.press_threshold) {
                ++i;
                continue;
            }
            int j = i, best = i;
            while (j < n && scores[std::size_t(j)] > cfg_.press_threshold) {
                if (scores[std::size_t(j)] > scores[std::size_t(best)]) best = j;
                ++j;
            }
            if (peaks.empty() || best - peaks.back() >= cfg_.refractory_frames) peaks.push_back(best);
            i = j;
        }
        return peaks;
    }

    // Geometry features per layout. D_i: negative mean squared distance of
    // centered presses to the nearest centered key; F_i: same for the
    // confirmation press against the confirmation key. Both standardized
    // across layouts before entering the softmax.
    LayoutConfidence layout_confidence(const std::vector<Press2D>& presses,
                                       const std::optional<Press2D>& confirm) const {
        if (presses.empty()) throw std::invalid_argument("layout_confidence needs >= 1 press");
        int L = int(layouts_.size());
        LayoutConfidence out;
        out.d.resize(std::size_t(L));
        out.f.resize(std::size_t(L));
        double pu = 0.0, pv = 0.0;
        for (const auto& p : presses) {
            pu += p.u;
            pv += p.v;
        }
        pu /= double(presses.size());
        pv /= double(presses.size());
        for (int i = 0; i < L; ++i) {
            const auto& lay = layouts_[std::size_t(i)];
            double ku = 0.0, kv = 0.0;
            for (const auto& [k, pos] : lay.key_positions) {
                ku += pos.x;
                kv += pos.z;
            }
            ku /= double(lay.key_positions.size());
            kv /= double(lay.key_positions.size());
            double msd = 0.0;
            for (const auto& p : presses) {
                double best = 1e300;
                for (const auto& [k, pos] : lay.key_positions) {
                    double du = (p.u - pu) - (pos.x - ku);
                    double dv = (p.v - pv) - (pos.z - kv);
                    best = std::min(best, du * du + dv * dv);
                }
                msd += best;
            }
            out.d[std::size_t(i)] = -msd / double(presses.size());
            if (confirm && !lay.confirm_key.empty()) {
                const Vec3& ck = lay.key_pos(lay.confirm_key);
                double du = (confirm->u - pu) - (ck.x - ku);
                double dv = (confirm->v - pv) - (ck.z - kv);
                out.f[std::size_t(i)] = -(du * du + dv * dv);
            }
        }
        standardize(out.d);
        standardize(out.f);
        double wc = params_.at("key.conf.Wc").v[0];
        double wf = params_.at("key.conf.Wf").v[0];
        const nn::Tensor& b = params_.at("key.conf.b");
        std::vector<double> logits(static_cast<std::size_t>(L));
        for (int i = 0; i < L; ++i)
            logits[std::size_t(i)] = wc * out.d[std::size_t(i)] + wf * out.f[std::size_t(i)] +
                                     b.at(0, i);
        out.c = softmax(logits);
        return out;
    }

    // key = argmax over the argmax-confidence layout's key set of the masked
    // key distribution.
    PressEvent decode_key(const nn::Tensor& m, const LayoutConfidence& conf, int frame_index) const {
        nn::Tape t;
        nn::ParamUse P(t, params_);
        const nn::Tensor& logits = t.value(key_logits(t, P, t.input(m)));
        int li = conf.argmax();
        PressEvent ev;
        ev.frame_index = frame_index;
        ev.layout_index = li;
        std::vector<double> sub;
        for (const auto& [k, pos] : layouts_[std::size_t(li)].key_positions) {
            ev.keys.push_back(k);
            sub.push_back(logits.at(0, vocab_index(k)));
        }
        ev.distribution = softmax(sub);
        int best = 0;
        for (std::size_t i = 1; i < ev.distribution.size(); ++i)
            if (ev.distribution[i] > ev.distribution[std::size_t(best)]) best = int(i);
        ev.decoded_key = ev.keys[std::size_t(best)];
        return ev;
    }

    // L_total = L_key + lambda (L_pos + L_type + L_conf + L_new), built on
    // the tape; absent label components are skipped and flagged.
    int multitask_loss(nn::Tape& t, nn::ParamUse& P, const std::vector<nn::Tensor>& frames,
                       const WindowLabels& labels, MultiTaskLoss& report,
                       const std::vector<Press2D>* presses_2d = nullptr,
                       const std::optional<Press2D>& confirm_2d = std::nullopt) const {
        if (frames.empty()) throw std::invalid_argument("multitask_loss: empty window");
        report = MultiTaskLoss{};
        report.lambda = cfg_.lambda;
        std::vector<int> fs;
        for (const auto& X : frames) fs.push_back(encode_vr(t, P, X));
        std::vector<int> ms = bimotion(t, P, fs);

        // L_type: press / no-press binary cross-entropy over all frames.
        std::vector<bool> is_press(frames.size(), false);
        for (int pf : labels.press_frames) {
            if (pf < 0 || pf >= int(frames.size()))
                throw std::invalid_argument("press frame index outside window");
            is_press[std::size_t(pf)] = true;
        }
        int l_type = -1;
        for (std::size_t i = 0; i < frames.size(); ++i) {
            int p = press_score(t, P, ms[i]);
            int term = is_press[i]
                           ? t.scale(t.log_(p), -1.0)
                           : t.scale(t.log_(t.add_scalar(t.scale(p, -1.0), 1.0)), -1.0);
            l_type = (l_type < 0) ? term : t.add(l_type, term);
        }
        l_type = t.scale(l_type, 1.0 / double(frames.size()));

        int total = -1;
        if (!labels.press_frames.empty() && labels.keys.size() == labels.press_frames.size()) {
            // L_key: cross-entropy of the key head at press frames.
            std::vector<int> logit_rows;
            std::vector<int> targets;
            for (std::size_t i = 0; i < labels.press_frames.size(); ++i) {
                logit_rows.push_back(key_logits(t, P, ms[std::size_t(labels.press_frames[i])]));
                targets.push_back(vocab_index(labels.keys[i]));
            }
            int l_key = t.cross_entropy(t.concat_rows(logit_rows), targets);
            report.l_key = t.value(l_key).v[0];
            total = l_key;
        } else {
            report.skipped.push_back("key");
        }

        int aux = l_type;
        report.l_type = t.value(l_type).v[0];

        if (!labels.press_positions.empty() &&
            labels.press_positions.size() == labels.press_frames.size()) {
            // L_pos: squared error of the position head at press frames.
            int l_pos = -1;
            for (std::size_t i = 0; i < labels.press_frames.size(); ++i) {
                int pred = t.add(t.matmul(ms[std::size_t(labels.press_frames[i])], P("key.pos.W")),
                                 P("key.pos.b"));
                const Vec3& gt = labels.press_positions[i];
                int target = t.input(nn::Tensor({1, 3}, {gt.x, gt.y, gt.z}));
                int term = t.sum_all(t.square(t.sub(pred, target)));
                l_pos = (l_pos < 0) ? term : t.add(l_pos, term);
            }
            l_pos = t.scale(l_pos, 1.0 / double(labels.press_frames.size()));
            report.l_pos = t.value(l_pos).v[0];
            aux = t.add(aux, l_pos);
        } else {
            report.skipped.push_back("pos");
        }

        if (labels.layout_index && presses_2d && !presses_2d->empty()) {
            // L_conf: cross-entropy of the confidence head on the true layout.
            LayoutConfidence geom = layout_confidence(*presses_2d, confirm_2d);
            int L = int(layouts_.size());
            nn::Tensor D({1, L}), F({1, L});
            for (int i = 0; i < L; ++i) {
                D.at(0, i) = geom.d[std::size_t(i)];
                F.at(0, i) = geom.f[std::size_t(i)];
            }
            int dn = t.input(D), fn = t.input(F);
            int wc = P("key.conf.Wc"), wf = P("key.conf.Wf");
            // scalar weights broadcast over the layout axis
            int logits = t.add(t.add(scale_by_scalar(t, dn, wc), scale_by_scalar(t, fn, wf)),
                               P("key.conf.b"));
            int l_conf = t.cross_entropy(logits, {*labels.layout_index});
            report.l_conf = t.value(l_conf).v[0];
            aux = t.add(aux, l_conf);
        } else {
            report.skipped.push_back("conf");
        }

        // L_new: spread of recorded novel-layout presses around their learned
        // cluster centers; zero (skipped) when no layout learning is active.
        if (!pending_new_presses_.empty() && !pending_new_centers_.empty()) {
            double acc = 0.0;
            for (const auto& p : pending_new_presses_) {
                double best = 1e300;
                for (const auto& c : pending_new_centers_) {
                    double du = p.u - c.u, dv = p.v - c.v;
                    best = std::min(best, du * du + dv * dv);
                }
                acc += best;
            }
            report.l_new = acc / double(pending_new_presses_.size());
            aux = t.add_scalar(aux, report.l_new);
        } else {
            report.skipped.push_back("new");
        }

        int weighted_aux = t.scale(aux, cfg_.lambda);
        total = (total < 0) ? weighted_aux : t.add(total, weighted_aux);
        report.total = t.value(total).v[0];
        return total;
    }

    struct NewLayoutDecision {
        bool triggered = false;
        double max_confidence = 0.0;
        std::vector<Press2D> recorded;
        int new_layout_index = -1;
    };

    // Trigger iff max confidence < tau (strict). On trigger the observed
    // press distribution is recorded and a new layout is initialized from
    // k-means clusters of the press positions.
    NewLayoutDecision maybe_learn_new_layout(const LayoutConfidence& conf,
                                             const std::vector<Press2D>& presses) {
        NewLayoutDecision dec;
        for (double c : conf.c) dec.max_confidence = std::max(dec.max_confidence, c);
        if (!(dec.max_confidence < cfg_.tau_confidence)) return dec;
        dec.triggered = true;
        dec.recorded = presses;
        pending_new_presses_ = presses;
        auto centers = cluster_presses(presses);
        pending_new_centers_ = centers;
        if (centers.empty()) return dec;

        scene::KeyboardLayout lay;
        lay.name = "learned_" + std::to_string(layouts_.size());
        for (std::size_t i = 0; i < centers.size(); ++i) {
            std::string kname = lay.name + ":k" + std::to_string(i);
            lay.key_positions[kname] = {centers[i].u, -0.40, centers[i].v};
        }
        // The confirmation key is the cluster holding the final press.
        if (!presses.empty()) {
            const Press2D& last = presses.back();
            std::size_t best = 0;
            double bd = 1e300;
            for (std::size_t i = 0; i < centers.size(); ++i) {
                double du = last.u - centers[i].u, dv = last.v - centers[i].v;
                if (du * du + dv * dv < bd) {
                    bd = du * du + dv * dv;
                    best = i;
                }
            }
            lay.confirm_key = lay.name + ":k" + std::to_string(best);
        }
        dec.new_layout_index = int(layouts_.size());
        add_layout(lay);
        return dec;
    }

    // Extends the confidence bias and key vocabulary for a new layout.
    void add_layout(const scene::KeyboardLayout& lay) {
        layouts_.push_back(lay);
        nn::Tensor& b = params_.at("key.conf.b");
        nn::Tensor b2({1, int(layouts_.size())});
        for (int i = 0; i + 1 < int(layouts_.size()); ++i) b2.at(0, i) = b.at(0, i);
        b = std::move(b2);
        int added = 0;
        for (const auto& [k, pos] : lay.key_positions)
            if (std::find(vocab_.begin(), vocab_.end(), k) == vocab_.end()) {
                vocab_.push_back(k);
                ++added;
            }
        if (added > 0) {
            nn::Tensor& W = params_.at("key.key.W");
            nn::Tensor& bb = params_.at("key.key.b");
            nn::Tensor W2({W.rows(), int(vocab_.size())});
            nn::Tensor bb2({1, int(vocab_.size())});
            for (int r = 0; r < W.rows(); ++r)
                for (int c = 0; c < W.cols(); ++c) W2.at(r, c) = W.at(r, c);
            for (int c = 0; c < bb.cols(); ++c) bb2.at(0, c) = bb.at(0, c);
            W = std::move(W2);
            bb = std::move(bb2);
        }
    }

    void save(const std::string& path, std::uint64_t config_hash, std::uint64_t seed) const {
        io::json meta;
        meta["model"] = "keynet";
        meta["vocab"] = vocab_;
        meta["feat_dim"] = cfg_.feat_dim;
        meta["motion_hidden"] = cfg_.motion_hidden;
        meta["window"] = cfg_.window;
        meta["lambda"] = cfg_.lambda;
        io::json lays = io::json::array();
        for (const auto& l : layouts_) {
            io::json jl;
            jl["name"] = l.name;
            jl["confirm_key"] = l.confirm_key;
            jl["pitch_m"] = l.pitch_m;
            io::json keys = io::json::object();
            for (const auto& [k, p] : l.key_positions) keys[k] = {p.x, p.y, p.z};
            jl["keys"] = keys;
            lays.push_back(jl);
        }
        meta["layouts"] = lays;
        nn::save_checkpoint(path, params_, meta, config_hash, seed);
    }

    static KeyNet load(const std::string& path) {
        nn::Checkpoint ck = nn::load_checkpoint(path);
        if (ck.meta.value("model", "") != "keynet")
            throw std::runtime_error("checkpoint is not a keynet model: " + path);
        std::vector<scene::KeyboardLayout> lays;
        for (const auto& jl : ck.meta.at("layouts")) {
            scene::KeyboardLayout l;
            l.name = jl.at("name").get<std::string>();
            l.confirm_key = jl.at("confirm_key").get<std::string>();
            l.pitch_m = jl.at("pitch_m").get<double>();
            for (const auto& [k, v] : jl.at("keys").items())
                l.key_positions[k] = {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
            lays.push_back(std::move(l));
        }
        KeyNetConfig cfg;
        cfg.feat_dim = ck.meta.at("feat_dim").get<int>();
        cfg.motion_hidden = ck.meta.at("motion_hidden").get<int>();
        cfg.window = ck.meta.at("window").get<int>();
        cfg.lambda = ck.meta.at("lambda").get<double>();
        KeyNet net(std::move(lays), cfg, ck.seed);
        net.vocab_ = ck.meta.at("vocab").get<std::vector<std::string>>();
        net.params_ = std::move(ck.params);
        return net;
    }

private:
    KeyNetConfig cfg_;
    std::vector<scene::KeyboardLayout> layouts_;
    std::vector<std::string> vocab_;
    nn::ParamStore params_;
    std::vector<Press2D> pending_new_presses_;
    std::vector<Press2D> pending_new_centers_;

    static int scale_by_scalar(nn::Tape& t, int row, int scalar) {
        // multiply a (1, n) row by a (1, 1) learned scalar
        int n = t.value(row).cols();
        std::vector<int> reps(std::size_t(n), scalar);
        return t.mul(row, t.concat_cols(reps));
    }

    static void standardize(std::vector<double>& v) {
        if (v.empty()) return;
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= double(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        var /= double(v.size());
        double sd = std::sqrt(var);
        for (double& x : v) x = sd > 1e-12 ? (x - mean) / sd : 0.0;
    }

    static std::vector<double> softmax(const std::vector<double>& logits) {
        double mx = logits[0];
        for (double l : logits) mx = std::max(mx, l);
        std::vector<double> out(logits.size());
        double s = 0.0;
        for (std::size_t i = 0; i < logits.size(); ++i) {
            out[i] = std::exp(logits[i] - mx);
            s += out[i];
        }
        for (double& x : out) x /= s;
        return out;
    }

    // k-means with deterministic farthest-point seeding; k selected by the
    // best mean silhouette over 4..40 (bounded by the press count).
    static std::vector<Press2D> cluster_presses(const std::vector<Press2D>& ps) {
        int n = int(ps.size());
        if (n < 2) return std::vector<Press2D>(ps.begin(), ps.end());
        auto d2 = [&ps](int a, int b) {
            double du = ps[std::size_t(a)].u - ps[std::size_t(b)].u;
            double dv = ps[std::size_t(a)].v - ps[std::size_t(b)].v;
            return du * du + dv * dv;
        };
        int kmax = std::min(40, n);
        double best_sil = -2.0;
        std::vector<Press2D> best_centers;
        for (int k = std::min(4, n); k <= kmax; ++k) {
            // farthest-point init from the lowest-index press
            std::vector<int> seeds{0};
            while (int(seeds.size()) < k) {
                int far = -1;
                double fd = -1.0;
                for (int i = 0; i < n; ++i) {
                    double dmin = 1e300;
                    for (int s : seeds) dmin = std::min(dmin, d2(i, s));
                    if (dmin > fd) {
                        fd = dmin;
                        far = i;
                    }
                }
                seeds.push_back(far);
            }
            std::vector<Press2D> centers;
            for (int s : seeds) centers.push_back(ps[std::size_t(s)]);
            std::vector<int> assign(std::size_t(n), 0);
            for (int it = 0; it < 25; ++it) {
                for (int i = 0; i < n; ++i) {
                    double bd = 1e300;
                    for (int c = 0; c < k; ++c) {
                        double du = ps[std::size_t(i)].u - centers[std::size_t(c)].u;
                        double dv = ps[std::size_t(i)].v - centers[std::size_t(c)].v;
                        double d = du * du + dv * dv;
                        if (d < bd) {
                            bd = d;
                            assign[std::size_t(i)] = c;
                        }
                    }
                }
                std::vector<Press2D> nc(static_cast<std::size_t>(k));
                std::vector<int> cnt(static_cast<std::size_t>(k), 0);
                for (int i = 0; i < n; ++i) {
                    nc[std::size_t(assign[std::size_t(i)])].u += ps[std::size_t(i)].u;
                    nc[std::size_t(assign[std::size_t(i)])].v += ps[std::size_t(i)].v;
                    ++cnt[std::size_t(assign[std::size_t(i)])];
                }
                for (int c = 0; c < k; ++c)
                    if (cnt[std::size_t(c)] > 0) {
                        centers[std::size_t(c)].u = nc[std::size_t(c)].u / cnt[std::size_t(c)];
                        centers[std::size_t(c)].v = nc[std::size_t(c)].v / cnt[std::size_t(c)];
                    }
            }
            // mean silhouette
            double sil = 0.0;
            int counted = 0;
            for (int i = 0; i < n; ++i) {
                double a = 0.0, b = 1e300;
                int na = 0;
                for (int j = 0; j < n; ++j) {
                    if (j == i) continue;
                    if (assign[std::size_t(j)] == assign[std::size_t(i)]) {
                        a += std::sqrt(d2(i, j));
                        ++na;
                    }
                }
                if (na == 0) continue;
                a /= double(na);
                for (int c = 0; c < k; ++c) {
                    if (c == assign[std::size_t(i)]) continue;
                    double s = 0.0;
                    int ns = 0;
                    for (int j = 0; j < n; ++j)
                        if (assign[std::size_t(j)] == c) {
                            s += std::sqrt(d2(i, j));
                            ++ns;
                        }
                    if (ns > 0) b = std::min(b, s / double(ns));
                }
                if (b < 1e299) {
                    sil += (b - a) / std::max(a, b);
                    ++counted;
                }
            }
            if (counted == 0) continue;
            sil /= double(counted);
            if (sil > best_sil) {
                best_sil = sil;
                best_centers = centers;
            }
        }
        if (best_centers.empty()) best_centers.push_back(ps[0]);
        return best_centers;
    }
};

}  // namespace mmvr::key
