#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "mmvr/nn/checkpoint.hpp"
#include "mmvr/nn/layers.hpp"
#include "mmvr/nn/optim.hpp"

namespace mmvr::act {

struct ActNetConfig {
    int point_hidden = 32;   // per-point encoder width
    int motion_hidden = 32;  // recurrent motion feature width
    int mixture_k = 3;
    double mixture_alpha = 0.1;  // weight learning rate
    double mixture_eta = 0.05;   // component-parameter learning rate
};

struct MixtureState {
    std::vector<double> pi;
    double alpha = 0.1;
    double eta_lr = 0.05;
    int renormalization_events = 0;

    void validate() const {
        double s = 0.0;
        for (double p : pi) {
            if (p < 0.0) throw std::invalid_argument("mixture weight < 0");
            s += p;
        }
        if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("mixture weights must sum to 1");
    }
};

// Activity classifier: shared per-point encoder and recurrent motion module,
// with K decision heads combined by mixture weights.
class ActNet {
public:
    ActNet(std::vector<std::string> labels, const ActNetConfig& cfg, std::uint64_t seed)
        : cfg_(cfg), labels_(std::move(labels)) {
        if (labels_.empty()) throw std::invalid_argument("ActNet needs at least one label");
        Rng rng(seed);
        nn::init_dense(params_, "act.enc", 6, cfg_.point_hidden, rng);
        nn::init_dense(params_, "act.motion", cfg_.point_hidden + cfg_.motion_hidden,
                       cfg_.motion_hidden, rng);
        for (int k = 0; k < cfg_.mixture_k; ++k)
            nn::init_dense(params_, dec_prefix(k), cfg_.motion_hidden, int(labels_.size()), rng);
        mix_.pi.assign(std::size_t(cfg_.mixture_k), 1.0 / double(cfg_.mixture_k));
        mix_.alpha = cfg_.mixture_alpha;
        mix_.eta_lr = cfg_.mixture_eta;
    }

    const ActNetConfig& config() const { return cfg_; }
    const std::vector<std::string>& labels() const { return labels_; }
    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }
    MixtureState& mixture() { return mix_; }
    const MixtureState& mixture() const { return mix_; }

    int label_index(const std::string& l) const {
        auto it = std::find(labels_.begin(), labels_.end(), l);
        if (it == labels_.end()) throw std::invalid_argument("unknown activity label: " + l);
        return int(it - labels_.begin());
    }

    static std::string dec_prefix(int k) { return "act.dec" + std::to_string(k); }

    // f = relu(W_f P + b_f) per point, F = column-wise max over the frame.
    static int encode_body(nn::Tape& t, nn::ParamUse& P, const nn::Tensor& X) {
        if (X.rows() == 0) throw std::invalid_argument("encode_body: empty frame");
        int f = t.relu_(t.add(t.matmul(t.input(X), P("act.enc.W")), P("act.enc.b")));
        return t.max_rows(f);
    }

    // m_t = tanh(W_m [F_t, h_{t-1}] + b_m); the motion feature doubles as the
    // hidden state.
    int motion_step(nn::Tape& t, nn::ParamUse& P, int F, int h_prev) const {
        int xh = t.concat_cols({F, h_prev});
        return t.tanh_(t.add(t.matmul(xh, P("act.motion.W")), P("act.motion.b")));
    }

    // Runs the full sequence and returns the final motion feature node.
    int motion_features(nn::Tape& t, nn::ParamUse& P, const std::vector<nn::Tensor>& frames) const {
        if (frames.empty()) throw std::invalid_argument("empty frame sequence");
        int h = t.input(nn::Tensor({1, cfg_.motion_hidden}));
        for (const auto& X : frames) h = motion_step(t, P, encode_body(t, P, X), h);
        return h;
    }

    int component_probs(nn::Tape& t, nn::ParamUse& P, int m, int k) const {
        return t.softmax_rows(t.add(t.matmul(m, P(dec_prefix(k) + ".W")), P(dec_prefix(k) + ".b")));
    }

    // P(act|m) = sum_k pi_k P_k(act|m), built on the tape.
    int mixture_probs(nn::Tape& t, nn::ParamUse& P, int m) const {
        int acc = -1;
        for (int k = 0; k < cfg_.mixture_k; ++k) {
            int pk = t.scale(component_probs(t, P, m, k), mix_.pi[std::size_t(k)]);
            acc = (k == 0) ? pk : t.add(acc, pk);
        }
        return acc;
    }

    // Negative log mixture likelihood of one labeled sequence.
    int sequence_loss(nn::Tape& t, nn::ParamUse& P, const std::vector<nn::Tensor>& frames,
                      int label) const {
        int m = motion_features(t, P, frames);
        int probs = mixture_probs(t, P, m);
        if (label < 0 || label >= int(labels_.size()))
            throw std::invalid_argument("label index out of range");
        return t.scale(t.log_(t.gather(probs, {{0, label}})), -1.0);
    }

    std::vector<double> classify_sequence(const std::vector<nn::Tensor>& frames) const {
        nn::Tape t;
        nn::ParamUse P(t, params_);
        int m = motion_features(t, P, frames);
        return mixture_probs_value(t.value(m));
    }

    // Plain-number mixture prediction for a given motion feature.
    std::vector<double> mixture_probs_value(const nn::Tensor& m) const {
        std::vector<double> out(labels_.size(), 0.0);
        for (int k = 0; k < cfg_.mixture_k; ++k) {
            std::vector<double> pk = component_probs_value(m, k);
            for (std::size_t c = 0; c < out.size(); ++c) out[c] += mix_.pi[std::size_t(k)] * pk[c];
        }
        return out;
    }

    std::vector<double> component_probs_value(const nn::Tensor& m, int k) const {
        nn::Tape t;
        nn::ParamUse P(t, params_);
        const nn::Tensor& probs = t.value(component_probs(t, P, t.input(m), k));
        return probs.v;
    }

    // pi_i' = (1 - alpha) pi_i + alpha P_i(act|m), renormalized (and logged)
    // when the component probabilities do not sum to 1; each component then
    // takes one ascent step on log P_i(act|m).
    void mixture_update(const nn::Tensor& m, int observed_label) {
        if (observed_label < 0 || observed_label >= int(labels_.size()))
            throw std::invalid_argument("observed label out of range");
        std::vector<double> p(mix_.pi.size());
        for (int k = 0; k < cfg_.mixture_k; ++k)
            p[std::size_t(k)] = component_probs_value(m, k)[std::size_t(observed_label)];
        double sum = 0.0;
        for (std::size_t k = 0; k < mix_.pi.size(); ++k) {
            mix_.pi[k] = (1.0 - mix_.alpha) * mix_.pi[k] + mix_.alpha * p[k];
            sum += mix_.pi[k];
        }
        if (std::abs(sum - 1.0) > 1e-12) {
            for (double& w : mix_.pi) w /= sum;
            ++mix_.renormalization_events;
        }
        if (mix_.eta_lr != 0.0) {
            for (int k = 0; k < cfg_.mixture_k; ++k) {
                nn::Tape t;
                nn::ParamUse P(t, params_);
                int probs = component_probs(t, P, t.input(m), k);
                int nll = t.scale(t.log_(t.gather(probs, {{0, observed_label}})), -1.0);
                t.backward(nll);
                nn::GradMap g = P.grads();
                nn::GradMap dec_only;
                dec_only.emplace(dec_prefix(k) + ".W", g.at(dec_prefix(k) + ".W"));
                dec_only.emplace(dec_prefix(k) + ".b", g.at(dec_prefix(k) + ".b"));
                nn::sgd_step(params_, dec_only, mix_.eta_lr);
            }
        }
    }

    // Appends one decision column per component for the new class and trains
    // only those columns, so existing class logits are untouched.
    void register_novel_activity(const std::string& label,
                                 const std::vector<std::vector<nn::Tensor>>& exemplars, int steps,
                                 double lr) {
        if (std::find(labels_.begin(), labels_.end(), label) != labels_.end())
            throw std::invalid_argument("activity already registered: " + label);
        if (exemplars.empty()) throw std::invalid_argument("need at least one exemplar sequence");
        int old_c = int(labels_.size());
        labels_.push_back(label);
        for (int k = 0; k < cfg_.mixture_k; ++k) {
            nn::Tensor& W = params_.at(dec_prefix(k) + ".W");
            nn::Tensor& b = params_.at(dec_prefix(k) + ".b");
            nn::Tensor W2({cfg_.motion_hidden, old_c + 1});
            for (int r = 0; r < cfg_.motion_hidden; ++r)
                for (int c = 0; c < old_c; ++c) W2.at(r, c) = W.at(r, c);
            nn::Tensor b2({1, old_c + 1});
            for (int c = 0; c < old_c; ++c) b2.at(0, c) = b.at(0, c);
            W = std::move(W2);
            b = std::move(b2);
        }
        for (int s = 0; s < steps; ++s) {
            const auto& seq = exemplars[std::size_t(s) % exemplars.size()];
            nn::Tape t;
            nn::ParamUse P(t, params_);
            int loss = sequence_loss(t, P, seq, old_c);
            t.backward(loss);
            nn::GradMap g = P.grads();
            nn::GradMap masked;
            for (int k = 0; k < cfg_.mixture_k; ++k) {  // train the new column only
                nn::Tensor gW = g.at(dec_prefix(k) + ".W");
                nn::Tensor gb = g.at(dec_prefix(k) + ".b");
                for (int r = 0; r < gW.rows(); ++r)
                    for (int c = 0; c < old_c; ++c) gW.at(r, c) = 0.0;
                for (int c = 0; c < old_c; ++c) gb.at(0, c) = 0.0;
                masked.emplace(dec_prefix(k) + ".W", std::move(gW));
                masked.emplace(dec_prefix(k) + ".b", std::move(gb));
            }
            nn::sgd_step(params_, masked, lr);
        }
    }

    void save(const std::string& path, std::uint64_t config_hash, std::uint64_t seed) const {
        io::json meta;
        meta["model"] = "actnet";
        meta["labels"] = labels_;
        meta["mixture_pi"] = mix_.pi;
        meta["mixture_alpha"] = mix_.alpha;
        meta["mixture_eta"] = mix_.eta_lr;
        meta["renormalization_events"] = mix_.renormalization_events;
        meta["point_hidden"] = cfg_.point_hidden;
        meta["motion_hidden"] = cfg_.motion_hidden;
        meta["mixture_k"] = cfg_.mixture_k;
        nn::save_checkpoint(path, params_, meta, config_hash, seed);
    }

    static ActNet load(const std::string& path) {
        nn::Checkpoint ck = nn::load_checkpoint(path);
        if (ck.meta.value("model", "") != "actnet")
            throw std::runtime_error("checkpoint is not an actnet model: " + path);
        ActNetConfig cfg;
        cfg.point_hidden = ck.meta.at("point_hidden").get<int>();
        cfg.motion_hidden = ck.meta.at("motion_hidden").get<int>();
        cfg.mixture_k = ck.meta.at("mixture_k").get<int>();
        cfg.mixture_alpha = ck.meta.at("mixture_alpha").get<double>();
        cfg.mixture_eta = ck.meta.at("mixture_eta").get<double>();
        ActNet net(ck.meta.at("labels").get<std::vector<std::string>>(), cfg, ck.seed);
        net.params_ = std::move(ck.params);
        net.mix_.pi = ck.meta.at("mixture_pi").get<std::vector<double>>();
        net.mix_.alpha = cfg.mixture_alpha;
        net.mix_.eta_lr = cfg.mixture_eta;
        net.mix_.renormalization_events = ck.meta.value("renormalization_events", 0);
        net.mix_.validate();
        return net;
    }

private:
    ActNetConfig cfg_;
    std::vector<std::string> labels_;
    nn::ParamStore params_;
    MixtureState mix_;
};

}  // namespace mmvr::act
