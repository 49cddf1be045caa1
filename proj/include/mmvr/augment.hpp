#pragma once

#include <algorithm>
#include <array>
#include <vector>

#include "mmvr/nn/layers.hpp"
#include "mmvr/nn/optim.hpp"
#include "mmvr/radar.hpp"

namespace mmvr::aug {

struct DensityGauge {
    int level = 0;
    int threshold_k = 32;
    bool triggers() const { return level < threshold_k; }  // strictly below
};

inline DensityGauge density_level(const radar::PointCloudFrame& frame, int threshold_k = 32) {
    if (threshold_k <= 0) throw std::invalid_argument("density threshold must be > 0");
    return {int(frame.points.size()), threshold_k};
}

struct AugmentConfig {
    int threshold_k = 32;   // target density
    int history = 4;        // frames of history context
    int enc_hidden = 32;
    double dilation_m = 0.10;  // bounding-box margin for synthesized points
    double sparsify_keep = 0.5;
};

// Symmetric squared chamfer distance between predicted positions (on the
// tape) and a fixed target set; the nearest-neighbor assignment is treated
// as locally constant, which gives the exact gradient almost everywhere.
inline int chamfer_to_target(nn::Tape& t, int pred, const nn::Tensor& target) {
    const nn::Tensor& P = t.value(pred);
    if (P.cols() != 3 || target.cols() != 3)
        throw std::invalid_argument("chamfer expects (n,3) position sets");
    int M = P.rows(), T = target.rows();
    if (M == 0 || T == 0) throw std::invalid_argument("chamfer of empty set");
    std::vector<int> p2t(static_cast<std::size_t>(M)), t2p(static_cast<std::size_t>(T));
    auto d2 = [](const nn::Tensor& A, int i, const nn::Tensor& B, int j) {
        double s = 0.0;
        for (int c = 0; c < 3; ++c) {
            double d = A.at(i, c) - B.at(j, c);
            s += d * d;
        }
        return s;
    };
    double loss = 0.0;
    for (int i = 0; i < M; ++i) {
        int best = 0;
        double bd = d2(P, i, target, 0);
        for (int j = 1; j < T; ++j) {
            double d = d2(P, i, target, j);
            if (d < bd) { bd = d; best = j; }
        }
        p2t[std::size_t(i)] = best;
        loss += bd / double(M);
    }
    for (int j = 0; j < T; ++j) {
        int best = 0;
        double bd = d2(target, j, P, 0);
        for (int i = 1; i < M; ++i) {
            double d = d2(target, j, P, i);
            if (d < bd) { bd = d; best = i; }
        }
        t2p[std::size_t(j)] = best;
        loss += bd / double(T);
    }
    return t.custom(nn::Tensor({1, 1}, {loss}),
                    [pred, target, p2t = std::move(p2t), t2p = std::move(t2p), M, T](nn::Tape& tp,
                                                                                    int self) {
                        double g = tp.grad(self).v[0];
                        const nn::Tensor& P = tp.value(pred);
                        nn::Tensor& dP = tp.grad_mut(pred);
                        for (int i = 0; i < M; ++i) {
                            int j = p2t[std::size_t(i)];
                            for (int c = 0; c < 3; ++c)
                                dP.at(i, c) += g * 2.0 * (P.at(i, c) - target.at(j, c)) / double(M);
                        }
                        for (int j = 0; j < T; ++j) {
                            int i = t2p[std::size_t(j)];
                            for (int c = 0; c < 3; ++c)
                                dP.at(i, c) += g * 2.0 * (P.at(i, c) - target.at(j, c)) / double(T);
                        }
                    });
}

inline double chamfer_value(const nn::Tensor& a, const nn::Tensor& b) {
    nn::Tape t;
    return t.value(chamfer_to_target(t, t.input(a), b)).v[0];
}

// Coarse action key from history velocity statistics; selects which bank of
// the pre-trained model completes the frame.
inline int action_key(const std::vector<radar::PointCloudFrame>& history) {
    double s = 0.0;
    long n = 0;
    for (const auto& f : history)
        for (const auto& p : f.points) {
            s += std::abs(p.velocity);
            ++n;
        }
    double mean = n > 0 ? s / double(n) : 0.0;
    if (mean < 0.05) return 0;
    if (mean < 0.25) return 1;
    return 2;
}

// Frame completion network: shared per-point 1x1 convolutions, max pooling
// to a global feature per frame, then linear layers that predict a fixed
// block of candidate points. One parameter bank per coarse action class.
class ActionFeatureModel {
public:
    static constexpr int kBanks = 3;

    explicit ActionFeatureModel(const AugmentConfig& cfg = {}, std::uint64_t seed = 1)
        : cfg_(cfg) {
        Rng rng(seed);
        for (int b = 0; b < kBanks; ++b) {
            Rng r = rng.fork(std::uint64_t(b));
            nn::ParamStore& p = banks_[std::size_t(b)];
            nn::init_dense(p, "aug.conv1", 6, cfg_.enc_hidden, r);
            nn::init_dense(p, "aug.conv2", cfg_.enc_hidden, cfg_.enc_hidden, r);
            nn::init_dense(p, "aug.fc1", cfg_.enc_hidden * (cfg_.history + 1), cfg_.enc_hidden, r);
            nn::init_dense(p, "aug.fc2", cfg_.enc_hidden, cfg_.threshold_k * 4, r);
        }
    }

    const AugmentConfig& config() const { return cfg_; }
    nn::ParamStore& bank(int key) { return banks_[std::size_t(key)]; }
    const nn::ParamStore& bank(int key) const { return banks_[std::size_t(key)]; }

    // Per-frame global feature: relu conv stack then column-wise max.
    static int encode_frame(nn::Tape& t, nn::ParamUse& P, int x) {
        int h1 = t.relu_(t.add(t.matmul(x, P("aug.conv1.W")), P("aug.conv1.b")));
        int h2 = t.relu_(t.add(t.matmul(h1, P("aug.conv2.W")), P("aug.conv2.b")));
        return t.max_rows(h2);
    }

    // Raw (K, 4) prediction block: three position channels + one velocity.
    int predict_raw(nn::Tape& t, nn::ParamUse& P, const nn::Tensor& sparse,
                    const std::vector<nn::Tensor>& history) const {
        if (int(history.size()) != cfg_.history)
            throw std::invalid_argument("predict_raw needs exactly H history frames");
        std::vector<int> feats{encode_frame(t, P, t.input(sparse))};
        for (const auto& h : history) feats.push_back(encode_frame(t, P, t.input(h)));
        int g = t.concat_cols(feats);
        int h = t.relu_(t.add(t.matmul(g, P("aug.fc1.W")), P("aug.fc1.b")));
        int raw = t.add(t.matmul(h, P("aug.fc2.W")), P("aug.fc2.b"));  // (1, K*4)
        // reshape (1, K*4) -> (K, 4)
        std::vector<int> rows;
        for (int i = 0; i < cfg_.threshold_k; ++i) rows.push_back(t.slice_cols(raw, i * 4, i * 4 + 4));
        return t.concat_rows(rows);
    }

private:
    AugmentConfig cfg_;
    std::array<nn::ParamStore, kBanks> banks_;
};

struct Bbox {
    Vec3 lo, hi;
    Vec3 center() const { return (lo + hi) * 0.5; }
    Vec3 half() const { return (hi - lo) * 0.5; }
};

inline Bbox region_bbox(const std::vector<const radar::PointCloudFrame*>& frames, double dilation) {
    Bbox b{{1e30, 1e30, 1e30}, {-1e30, -1e30, -1e30}};
    bool any = false;
    for (const auto* f : frames)
        for (const auto& p : f->points) {
            any = true;
            b.lo.x = std::min(b.lo.x, p.x);
            b.lo.y = std::min(b.lo.y, p.y);
            b.lo.z = std::min(b.lo.z, p.z);
            b.hi.x = std::max(b.hi.x, p.x);
            b.hi.y = std::max(b.hi.y, p.y);
            b.hi.z = std::max(b.hi.z, p.z);
        }
    if (!any) throw std::invalid_argument("cannot form region bounding box from empty frames");
    b.lo = b.lo - Vec3{dilation, dilation, dilation};
    b.hi = b.hi + Vec3{dilation, dilation, dilation};
    return b;
}

namespace detail {
inline nn::Tensor frame_tensor(const radar::PointCloudFrame& f) {
    nn::Tensor X({int(f.points.size()), 6});
    for (int i = 0; i < X.rows(); ++i) {
        const auto& p = f.points[std::size_t(i)];
        X.at(i, 0) = p.x;
        X.at(i, 1) = p.y;
        X.at(i, 2) = p.z;
        X.at(i, 3) = p.velocity;
        X.at(i, 4) = p.intensity;
        X.at(i, 5) = p.rcs_m2.value_or(0.0);
    }
    return X;
}

// Maps the raw prediction block into the dilated bounding box; velocity is
// bounded around the region mean. Returns tape node (K, 3) of positions.
inline int positions_in_bbox(nn::Tape& t, int raw, const Bbox& box) {
    int bounded = t.tanh_(t.slice_cols(raw, 0, 3));
    Vec3 c = box.center(), h = box.half();
    int rows = t.value(bounded).rows();
    nn::Tensor scale({rows, 3}), shift({rows, 3});
    for (int i = 0; i < rows; ++i) {
        scale.at(i, 0) = h.x;
        scale.at(i, 1) = h.y;
        scale.at(i, 2) = h.z;
        shift.at(i, 0) = c.x;
        shift.at(i, 1) = c.y;
        shift.at(i, 2) = c.z;
    }
    return t.add(t.mul(bounded, t.input(scale)), t.input(shift));
}
}  // namespace detail

struct AugmentResult {
    radar::PointCloudFrame frame;
    bool triggered = false;
    bool degraded_mode = false;  // history was unusable; current points replicated
};

// Fills a sparse region frame up to the density threshold. Original points
// are preserved verbatim; synthesized points stay inside the dilated region
// bounding box and carry all six features.
inline AugmentResult augment_frame(const radar::PointCloudFrame& sparse,
                                   const std::vector<radar::PointCloudFrame>& history,
                                   const ActionFeatureModel& model) {
    const AugmentConfig& cfg = model.config();
    AugmentResult out;
    out.frame = sparse;
    DensityGauge gauge = density_level(sparse, cfg.threshold_k);
    if (!gauge.triggers()) return out;
    out.triggered = true;

    int need = cfg.threshold_k - gauge.level;
    std::vector<const radar::PointCloudFrame*> ctx{&sparse};
    long hist_points = 0;
    for (const auto& h : history) hist_points += long(h.points.size());

    if (int(history.size()) < cfg.history || hist_points == 0) {
        // Degraded mode: without usable history, replicate existing points.
        out.degraded_mode = true;
        if (sparse.points.empty())
            throw std::invalid_argument("augment_frame: empty frame with empty history");
        for (int i = 0; i < need; ++i)
            out.frame.points.push_back(sparse.points[std::size_t(i) % sparse.points.size()]);
        return out;
    }
    for (const auto& h : history) ctx.push_back(&h);
    Bbox box = region_bbox(ctx, cfg.dilation_m);

    // Region feature statistics for the non-spatial channels.
    double mean_v = 0.0, mean_int = 0.0, mean_rcs = 0.0;
    long n = 0;
    for (const auto* f : ctx)
        for (const auto& p : f->points) {
            mean_v += p.velocity;
            mean_int += p.intensity;
            mean_rcs += p.rcs_m2.value_or(0.0);
            ++n;
        }
    mean_v /= double(n);
    mean_int /= double(n);
    mean_rcs /= double(n);

    const radar::PointCloudFrame* sparse_src = &sparse;
    if (sparse.points.empty()) {  // fall back to the newest non-empty history frame
        for (auto it = history.rbegin(); it != history.rend(); ++it)
            if (!it->points.empty()) { sparse_src = &*it; break; }
    }
    nn::Tensor sparse_x = detail::frame_tensor(*sparse_src);
    std::vector<nn::Tensor> hist_x;  // most recent H frames
    for (std::size_t i = history.size() - std::size_t(cfg.history); i < history.size(); ++i) {
        const auto& h = history[i];
        hist_x.push_back(h.points.empty() ? sparse_x : detail::frame_tensor(h));
    }

    const nn::ParamStore& bankp = model.bank(action_key(history));
    nn::Tape t;
    nn::ParamUse P(t, bankp);
    int raw = model.predict_raw(t, P, sparse_x, hist_x);
    int pos = detail::positions_in_bbox(t, raw, box);
    const nn::Tensor& Pv = t.value(pos);
    const nn::Tensor& Rv = t.value(raw);
    for (int i = 0; i < need; ++i) {
        int r = i % cfg.threshold_k;
        radar::Point p;
        p.x = Pv.at(r, 0);
        p.y = Pv.at(r, 1);
        p.z = Pv.at(r, 2);
        p.velocity = mean_v + std::tanh(Rv.at(r, 3));
        p.intensity = mean_int;
        p.rcs_m2 = mean_rcs;
        out.frame.points.push_back(p);
    }
    return out;
}

// ---- self-supervised training ----

struct SparsifiedSample {
    radar::PointCloudFrame sparse;
    std::vector<nn::Tensor> history;
    nn::Tensor target_positions;  // (T, 3) of the dense frame
    Bbox box;
};

inline std::pair<double, nn::GradMap> chamfer_loss_grad(const ActionFeatureModel& model, int bank,
                                                        const SparsifiedSample& s) {
    nn::Tape t;
    nn::ParamUse P(t, model.bank(bank));
    int raw = model.predict_raw(t, P, detail::frame_tensor(s.sparse), s.history);
    int pos = detail::positions_in_bbox(t, raw, s.box);
    int loss = chamfer_to_target(t, pos, s.target_positions);
    t.backward(loss);
    return {t.value(loss).v[0], P.grads()};
}

// Builds one training sample from a dense sequence: the frame at `idx` is
// randomly thinned and becomes the input, the original is the target.
inline SparsifiedSample make_sample(const std::vector<radar::PointCloudFrame>& seq, int idx,
                                    const AugmentConfig& cfg, Rng& rng) {
    if (idx < cfg.history) throw std::invalid_argument("sample index needs H frames of history");
    SparsifiedSample s;
    const radar::PointCloudFrame& dense = seq[std::size_t(idx)];
    if (dense.points.empty()) throw std::invalid_argument("dense target frame is empty");
    for (const auto& p : dense.points)
        if (rng.uniform() < cfg.sparsify_keep || s.sparse.points.empty())
            s.sparse.points.push_back(p);
    for (int h = idx - cfg.history; h < idx; ++h)
        s.history.push_back(detail::frame_tensor(seq[std::size_t(h)]));
    s.target_positions = nn::Tensor({int(dense.points.size()), 3});
    for (int i = 0; i < s.target_positions.rows(); ++i) {
        s.target_positions.at(i, 0) = dense.points[std::size_t(i)].x;
        s.target_positions.at(i, 1) = dense.points[std::size_t(i)].y;
        s.target_positions.at(i, 2) = dense.points[std::size_t(i)].z;
    }
    std::vector<const radar::PointCloudFrame*> ctx{&dense};
    s.box = region_bbox(ctx, cfg.dilation_m);
    return s;
}

struct TrainTrace {
    std::vector<double> losses;  // one entry per step
};

// SGD on the chamfer objective over artificially sparsified dense frames.
inline TrainTrace self_supervised_train(ActionFeatureModel& model,
                                        const std::vector<std::vector<radar::PointCloudFrame>>& seqs,
                                        int steps, double lr, std::uint64_t seed) {
    const AugmentConfig& cfg = model.config();
    std::vector<std::pair<int, int>> usable;  // (sequence, frame index)
    for (std::size_t q = 0; q < seqs.size(); ++q)
        for (int i = cfg.history; i < int(seqs[q].size()); ++i)
            if (!seqs[q][std::size_t(i)].points.empty()) usable.emplace_back(int(q), i);
    if (usable.empty()) throw std::invalid_argument("no usable dense frames for training");

    Rng rng(seed);
    TrainTrace trace;
    for (int step = 0; step < steps; ++step) {
        auto [q, i] = usable[std::size_t(rng.uniform_int(int(usable.size())))];
        const auto& seq = seqs[std::size_t(q)];
        SparsifiedSample s = make_sample(seq, i, cfg, rng);
        std::vector<radar::PointCloudFrame> hist(seq.begin() + (i - cfg.history), seq.begin() + i);
        int bank = action_key(hist);
        auto [loss, grads] = chamfer_loss_grad(model, bank, s);
        nn::sgd_step(model.bank(bank), grads, lr);
        trace.losses.push_back(loss);
    }
    return trace;
}

// One bounded transfer step on recent frames (online adaptation).
inline void transfer_update(ActionFeatureModel& model,
                            const std::vector<radar::PointCloudFrame>& recent, double lr,
                            std::uint64_t seed) {
    if (recent.empty()) throw std::invalid_argument("transfer_update needs recent frames");
    if (lr == 0.0) return;
    const AugmentConfig& cfg = model.config();
    if (int(recent.size()) <= cfg.history) return;  // not enough context yet
    Rng rng(seed);
    int idx = int(recent.size()) - 1;
    if (recent[std::size_t(idx)].points.empty()) return;
    SparsifiedSample s = make_sample(recent, idx, cfg, rng);
    std::vector<radar::PointCloudFrame> hist(recent.begin() + (idx - cfg.history),
                                             recent.begin() + idx);
    int bank = action_key(hist);
    auto [loss, grads] = chamfer_loss_grad(model, bank, s);
    (void)loss;
    nn::sgd_step(model.bank(bank), grads, lr);
}

}  // namespace mmvr::aug
