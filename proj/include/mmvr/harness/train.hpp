#pragma once

#include <limits>
#include <string>
#include <vector>

#include "mmvr/actnet.hpp"
#include "mmvr/harness/pipeline.hpp"
#include "mmvr/nn/optim.hpp"

namespace mmvr::harness {

struct TrainOptions {
    int epochs = 100;      // desk-scale default
    int patience = 200;    // early-stopping patience in epochs
    double lr = 3e-3;
    double mixture_eta = 0.005;  // online component step size during training
    std::uint64_t seed = 1;
};

struct TrainLog {
    std::vector<double> train_loss;  // one entry per epoch
    std::vector<double> val_loss;
    int best_epoch = -1;
    double best_val = std::numeric_limits<double>::infinity();
    bool nan_abort = false;
    long nan_step = -1;  // global optimization step at which the abort fired
    bool early_stopped = false;

    io::json to_json() const {
        io::json j;
        j["train_loss"] = train_loss;
        j["val_loss"] = val_loss;
        j["best_epoch"] = best_epoch;
        j["best_val"] = best_val;
        j["nan_abort"] = nan_abort;
        j["nan_step"] = nan_step;
        j["early_stopped"] = early_stopped;
        return j;
    }
};

namespace detail {

inline void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[std::size_t(rng.uniform_int(int(i)))]);
}

}  // namespace detail

// ---- ActNet ----

struct ActTrainResult {
    TrainLog log;
    act::ActNet net;
};

inline ActTrainResult train_actnet(const std::string& dir, const Manifest& man,
                                   const TrainOptions& opts,
                                   const act::ActNetConfig& net_cfg = {}) {
    std::vector<LoadedSequence> train = load_split(dir, man, "train");
    std::vector<LoadedSequence> val = load_split(dir, man, "val");
    if (train.empty()) throw std::runtime_error("train split is empty");

    std::vector<std::string> labels = man.spec.at("activities").get<std::vector<std::string>>();
    act::ActNetConfig cfg = net_cfg;
    cfg.mixture_eta = opts.mixture_eta;
    act::ActNet net(labels, cfg, opts.seed);

    Featurizer feat;
    feat.frame_stride = 2;  // halves the recurrent path length
    std::vector<std::vector<nn::Tensor>> train_x, val_x;
    std::vector<int> train_y, val_y;
    for (const auto& s : train) {
        train_x.push_back(feat.sequence_tensors(s.frames));
        train_y.push_back(net.label_index(s.meta.label));
    }
    for (const auto& s : val) {
        val_x.push_back(feat.sequence_tensors(s.frames));
        val_y.push_back(net.label_index(s.meta.label));
    }

    auto eval_val = [&]() {
        if (val_x.empty()) return 0.0;
        double acc = 0.0;
        for (std::size_t i = 0; i < val_x.size(); ++i) {
            nn::Tape t;
            nn::ParamUse P(t, net.params());
            acc += t.value(net.sequence_loss(t, P, val_x[i], val_y[i])).v[0];
        }
        return acc / double(val_x.size());
    };

    nn::Adam adam;
    adam.lr = opts.lr;
    Rng rng(opts.seed ^ 0x7a17);
    TrainLog log;
    nn::ParamStore best_params = net.params();
    std::vector<double> best_pi = net.mixture().pi;
    long step = 0;
    int bad_epochs = 0;

    std::vector<std::size_t> order(train_x.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        detail::shuffle_indices(order, rng);
        double epoch_loss = 0.0;
        for (std::size_t oi : order) {
            double loss_v;
            try {
                nn::Tape t;
                nn::ParamUse P(t, net.params());
                int m = net.motion_features(t, P, train_x[oi]);
                int loss = t.scale(
                    t.log_(t.gather(net.mixture_probs(t, P, m), {{0, train_y[oi]}})), -1.0);
                loss_v = t.value(loss).v[0];
                if (!std::isfinite(loss_v)) throw std::runtime_error("non-finite loss");
                t.backward(loss);
                adam.step(net.params(), P.grads());
                net.mixture_update(t.value(m), train_y[oi]);
            } catch (const std::exception&) {
                log.nan_abort = true;
                log.nan_step = step;
                goto done;
            }
            epoch_loss += loss_v;
            ++step;
        }
        log.train_loss.push_back(epoch_loss / double(train_x.size()));
        {
            // without a validation split, select on training loss
            double v = val_x.empty() ? log.train_loss.back() : eval_val();
            log.val_loss.push_back(v);
            if (v < log.best_val) {
                log.best_val = v;
                log.best_epoch = epoch;
                best_params = net.params();
                best_pi = net.mixture().pi;
                bad_epochs = 0;
            } else if (++bad_epochs > opts.patience) {
                log.early_stopped = true;
                break;
            }
        }
    }
done:
    net.params() = best_params;
    net.mixture().pi = best_pi;
    return ActTrainResult{std::move(log), std::move(net)};
}

// ---- KeyNet ----

struct KeyTrainResult {
    TrainLog log;
    key::KeyNet net;
};

inline KeyTrainResult train_keynet(const std::string& dir, const Manifest& man,
                                   const TrainOptions& opts, const key::KeyNetConfig& net_cfg = {},
                                   const aug::ActionFeatureModel* augmenter = nullptr) {
    std::vector<LoadedSequence> train = load_split(dir, man, "train");
    std::vector<LoadedSequence> val = load_split(dir, man, "val");
    if (train.empty()) throw std::runtime_error("train split is empty");

    std::string layout_name = man.spec.at("layout").get<std::string>();
    scene::KeyboardLayout layout = scene::layout_by_name(layout_name);
    std::vector<scene::KeyboardLayout> layouts = {scene::layout_36(), scene::layout_9(),
                                                  scene::layout_15()};
    int layout_index = 0;
    for (std::size_t i = 0; i < layouts.size(); ++i)
        if (layouts[i].name == layout_name) layout_index = int(i);
    key::KeyNet net(layouts, net_cfg, opts.seed);

    int stride = std::max(1, net_cfg.window / 2);
    std::vector<KeyWindow> train_w, val_w;
    for (const auto& s : train) {
        auto ws = build_key_windows(s, net_cfg.window, stride, layout, layout_index, augmenter);
        train_w.insert(train_w.end(), ws.begin(), ws.end());
    }
    for (const auto& s : val) {
        auto ws = build_key_windows(s, net_cfg.window, stride, layout, layout_index, augmenter);
        val_w.insert(val_w.end(), ws.begin(), ws.end());
    }
    if (train_w.empty()) throw std::runtime_error("no training windows could be built");

    // Point dropout plus small coordinate noise: the window is re-perturbed
    // every epoch, which stops the encoder from memorizing the exact noise
    // pattern of each training sequence.
    auto perturb = [](const std::vector<nn::Tensor>& frames, Rng& rng) {
        std::vector<nn::Tensor> out;
        out.reserve(frames.size());
        for (const auto& X : frames) {
            std::vector<int> keep;
            for (int r = 0; r < X.rows(); ++r)
                if (rng.uniform() > 0.25 || keep.empty()) keep.push_back(r);
            nn::Tensor Y({int(keep.size()), X.cols()});
            for (int r = 0; r < Y.rows(); ++r) {
                for (int c = 0; c < X.cols(); ++c) Y.at(r, c) = X.at(keep[std::size_t(r)], c);
                Y.at(r, 0) += 0.01 * rng.normal();
                Y.at(r, 1) += 0.01 * rng.normal();
                Y.at(r, 2) += 0.01 * rng.normal();
            }
            out.push_back(std::move(Y));
        }
        return out;
    };

    auto window_loss = [&](const KeyWindow& w, bool backward, nn::Adam* adam, Rng* prng) {
        nn::Tape t;
        nn::ParamUse P(t, net.params());
        key::MultiTaskLoss rep;
        std::vector<nn::Tensor> frames = prng ? perturb(w.frames, *prng) : w.frames;
        int loss = net.multitask_loss(t, P, frames, w.labels, rep, &w.presses_2d, w.confirm_2d);
        double v = rep.total;
        if (backward) {
            if (!std::isfinite(v)) throw std::runtime_error("non-finite loss");
            t.backward(loss);
            adam->step(net.params(), P.grads());
        }
        return v;
    };

    nn::Adam adam;
    adam.lr = opts.lr;
    Rng rng(opts.seed ^ 0x8b3d);
    TrainLog log;
    nn::ParamStore best_params = net.params();
    long step = 0;
    int bad_epochs = 0;

    std::vector<std::size_t> order(train_w.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        detail::shuffle_indices(order, rng);
        double epoch_loss = 0.0;
        for (std::size_t oi : order) {
            double v;
            try {
                v = window_loss(train_w[oi], true, &adam, &rng);
            } catch (const std::exception&) {
                log.nan_abort = true;
                log.nan_step = step;
                goto done;
            }
            epoch_loss += v;
            ++step;
        }
        log.train_loss.push_back(epoch_loss / double(train_w.size()));
        {
            double v = log.train_loss.back();  // fallback without a validation split
            if (!val_w.empty()) {
                v = 0.0;
                for (const auto& w : val_w) v += window_loss(w, false, nullptr, nullptr);
                v /= double(val_w.size());
            }
            log.val_loss.push_back(v);
            if (v < log.best_val) {
                log.best_val = v;
                log.best_epoch = epoch;
                best_params = net.params();
                bad_epochs = 0;
            } else if (++bad_epochs > opts.patience) {
                log.early_stopped = true;
                break;
            }
        }
    }
done:
    net.params() = best_params;
    return KeyTrainResult{std::move(log), std::move(net)};
}

// ---- feature-augmentation model ----

inline void save_augment(const std::string& path, const aug::ActionFeatureModel& model,
                         std::uint64_t seed) {
    nn::ParamStore merged;
    for (int b = 0; b < aug::ActionFeatureModel::kBanks; ++b)
        for (const auto& [name, t] : model.bank(b).blocks)
            merged.define("bank" + std::to_string(b) + "." + name, t);
    io::json meta;
    meta["model"] = "augment";
    meta["threshold_k"] = model.config().threshold_k;
    meta["history"] = model.config().history;
    meta["enc_hidden"] = model.config().enc_hidden;
    meta["dilation_m"] = model.config().dilation_m;
    nn::save_checkpoint(path, merged, meta, 0, seed);
}

inline aug::ActionFeatureModel load_augment(const std::string& path) {
    nn::Checkpoint ck = nn::load_checkpoint(path);
    if (ck.meta.value("model", "") != "augment")
        throw std::runtime_error("checkpoint is not an augment model: " + path);
    aug::AugmentConfig cfg;
    cfg.threshold_k = ck.meta.at("threshold_k").get<int>();
    cfg.history = ck.meta.at("history").get<int>();
    cfg.enc_hidden = ck.meta.at("enc_hidden").get<int>();
    cfg.dilation_m = ck.meta.at("dilation_m").get<double>();
    aug::ActionFeatureModel model(cfg, ck.seed);
    for (int b = 0; b < aug::ActionFeatureModel::kBanks; ++b) {
        std::string prefix = "bank" + std::to_string(b) + ".";
        for (auto& [name, t] : model.bank(b).blocks) t = ck.params.at(prefix + name);
    }
    return model;
}

struct AugTrainResult {
    TrainLog log;
    aug::ActionFeatureModel model;
};

inline AugTrainResult train_augment(const std::string& dir, const Manifest& man,
                                    const TrainOptions& opts, const aug::AugmentConfig& cfg = {}) {
    std::vector<LoadedSequence> train = load_split(dir, man, "train");
    if (train.empty()) throw std::runtime_error("train split is empty");
    std::vector<std::vector<radar::PointCloudFrame>> seqs;
    for (const auto& s : train) seqs.push_back(s.frames);
    aug::ActionFeatureModel model(cfg, opts.seed);
    int steps = std::max(1, opts.epochs) * 20;
    aug::TrainTrace trace = aug::self_supervised_train(model, seqs, steps, opts.lr, opts.seed);
    TrainLog log;
    log.train_loss = trace.losses;
    log.best_epoch = 0;
    log.best_val = trace.losses.empty() ? 0.0 : trace.losses.back();
    return AugTrainResult{std::move(log), std::move(model)};
}

}  // namespace mmvr::harness
