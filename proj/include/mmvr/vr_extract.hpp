#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "mmvr/nn/layers.hpp"
#include "mmvr/radar.hpp"

namespace mmvr::vr {

struct RcsBand {
    double low_m2 = 3.0;
    double high_m2 = 10.0;
    void validate() const {
        if (!(0.0 < low_m2 && low_m2 < high_m2))
            throw std::invalid_argument("RCS band requires 0 < low < high");
    }
    bool contains(double r) const { return r >= low_m2 && r <= high_m2; }
};

struct DbscanConfig {
    double eps_m = 0.15;
    int min_pts = 3;
};

// DBSCAN over (x,y,z) with a deterministic border rule: a border point joins
// the cluster of its lowest-index core neighbor. Cluster ids are normalized
// to the order of their smallest member index, so the labeling is a pure
// function of the point set.
inline std::vector<int> dbscan(const std::vector<Vec3>& pts, const DbscanConfig& cfg) {
    int n = int(pts.size());
    double eps2 = cfg.eps_m * cfg.eps_m;
    std::vector<std::vector<int>> nbr(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Vec3 d = pts[std::size_t(i)] - pts[std::size_t(j)];
            if (d.dot(d) <= eps2) nbr[std::size_t(i)].push_back(j);
        }
    std::vector<bool> core(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) core[std::size_t(i)] = int(nbr[std::size_t(i)].size()) >= cfg.min_pts;

    std::vector<int> label(std::size_t(n), -1);
    int next = 0;
    for (int i = 0; i < n; ++i) {
        if (!core[std::size_t(i)] || label[std::size_t(i)] != -1) continue;
        // flood fill over density-connected cores
        label[std::size_t(i)] = next;
        std::vector<int> stack{i};
        while (!stack.empty()) {
            int p = stack.back();
            stack.pop_back();
            for (int q : nbr[std::size_t(p)])
                if (core[std::size_t(q)] && label[std::size_t(q)] == -1) {
                    label[std::size_t(q)] = next;
                    stack.push_back(q);
                }
        }
        ++next;
    }
    for (int i = 0; i < n; ++i) {
        if (core[std::size_t(i)] || label[std::size_t(i)] != -1) continue;
        for (int q : nbr[std::size_t(i)])  // neighbors are in ascending index order
            if (core[std::size_t(q)]) {
                label[std::size_t(i)] = label[std::size_t(q)];
                break;
            }
    }
    return label;
}

struct VrExtraction {
    radar::PointCloudFrame frame;            // band-passed, clustered points only
    std::vector<int> cluster_of;             // per retained point
    std::vector<std::vector<int>> groups;    // member indices into frame.points
    bool no_vr_activity = false;
};

// Band filter on annotated RCS, then density clustering; noise points are
// discarded. Output order preserves the input order of retained points.
inline VrExtraction extract_vr_points(const radar::PointCloudFrame& frame, const RcsBand& band,
                                      const DbscanConfig& cfg) {
    band.validate();
    VrExtraction out;
    out.frame.timestamp_s = frame.timestamp_s;
    out.frame.frame_index = frame.frame_index;
    std::vector<radar::Point> filtered;
    for (const auto& p : frame.points) {
        if (!p.rcs_m2) throw std::invalid_argument("extract_vr_points requires RCS-annotated frames");
        if (band.contains(*p.rcs_m2)) filtered.push_back(p);
    }
    std::vector<Vec3> pos;
    for (const auto& p : filtered) pos.push_back({p.x, p.y, p.z});
    std::vector<int> label = dbscan(pos, cfg);
    for (std::size_t i = 0; i < filtered.size(); ++i) {
        if (label[i] < 0) continue;
        out.cluster_of.push_back(label[i]);
        out.frame.points.push_back(filtered[i]);
    }
    int nclusters = 0;
    for (int l : out.cluster_of) nclusters = std::max(nclusters, l + 1);
    out.groups.assign(std::size_t(nclusters), {});
    for (std::size_t i = 0; i < out.cluster_of.size(); ++i)
        out.groups[std::size_t(out.cluster_of[i])].push_back(int(i));
    out.no_vr_activity = out.frame.points.empty();
    return out;
}

// ---- vector attention over point neighborhoods ----

struct AttentionConfig {
    int k = 8;         // neighborhood size (k nearest including self)
    int hidden = 16;
    int d_feature = 16;
};

inline void init_attention(nn::ParamStore& p, const AttentionConfig& cfg, Rng& rng) {
    nn::init_dense(p, "attn.phi", 6, cfg.hidden, rng);
    nn::init_dense(p, "attn.chi", 6, cfg.hidden, rng);
    nn::init_dense(p, "attn.eta1", cfg.hidden, cfg.hidden, rng);
    nn::init_dense(p, "attn.eta2", cfg.hidden, cfg.d_feature, rng);
    p.define("attn.xi", nn::Tensor({1, cfg.hidden}));
    nn::init_dense(p, "attn.sigma", 6, cfg.d_feature, rng);
    p.define("attn.w", nn::Tensor::glorot(cfg.d_feature, 1, rng));
    nn::init_dense(p, "attn.eta_rcs1", 2, cfg.hidden, rng);
    nn::init_dense(p, "attn.eta_rcs2", cfg.hidden, 1, rng);
    p.define("attn.zeta", nn::Tensor({1, 2}, {1.0, 0.0}));  // affine map on RCS
}

inline nn::Tensor points_to_tensor(const radar::PointCloudFrame& frame) {
    nn::Tensor X({int(frame.points.size()), 6});
    for (int i = 0; i < X.rows(); ++i) {
        const auto& p = frame.points[std::size_t(i)];
        if (!p.rcs_m2) throw std::invalid_argument("attention input requires RCS-annotated points");
        X.at(i, 0) = p.x;
        X.at(i, 1) = p.y;
        X.at(i, 2) = p.z;
        X.at(i, 3) = p.velocity;
        X.at(i, 4) = p.intensity;
        X.at(i, 5) = *p.rcs_m2;
    }
    return X;
}

// k nearest by Euclidean (x,y,z), self included, distance ties to lower index.
inline std::vector<std::vector<int>> knn_neighbors(const nn::Tensor& X, int k) {
    int n = X.rows();
    std::vector<std::vector<int>> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::vector<std::pair<double, int>> d;
        for (int j = 0; j < n; ++j) {
            double dx = X.at(i, 0) - X.at(j, 0);
            double dy = X.at(i, 1) - X.at(j, 1);
            double dz = X.at(i, 2) - X.at(j, 2);
            d.emplace_back(dx * dx + dy * dy + dz * dz, j);
        }
        std::sort(d.begin(), d.end());
        for (int j = 0; j < k && j < n; ++j) out[std::size_t(i)].push_back(d[std::size_t(j)].second);
    }
    return out;
}

struct AttentionResult {
    int y_node = -1;                           // (N, d_feature) on the tape
    nn::Tensor y;                              // value copy
    std::vector<nn::Tensor> a;                 // per point: (k_i, d_feature) softmax weights
    std::vector<std::vector<int>> neighbors;
    int k_used = 0;
    bool k_clamped = false;
};

// y_i = sum_j a_ij ⊙ sigma(x_j, RCS_j), with a_ij a per-channel softmax over
// the neighborhood of the transformed feature differences.
inline AttentionResult attention_forward(nn::Tape& t, nn::ParamUse& P, const nn::Tensor& X,
                                         const AttentionConfig& cfg) {
    int n = X.rows();
    if (n < 1) throw std::invalid_argument("attention_forward needs at least one point");
    AttentionResult res;
    res.k_used = std::min(cfg.k, n);
    res.k_clamped = res.k_used < cfg.k;
    res.neighbors = knn_neighbors(X, res.k_used);

    int x = t.input(X);
    int phi = t.add(t.matmul(x, P("attn.phi.W")), P("attn.phi.b"));
    int chi = t.add(t.matmul(x, P("attn.chi.W")), P("attn.chi.b"));
    int sig = t.add(t.matmul(x, P("attn.sigma.W")), P("attn.sigma.b"));

    std::vector<int> ys;
    for (int i = 0; i < n; ++i) {
        const auto& nb = res.neighbors[std::size_t(i)];
        int k = int(nb.size());
        std::vector<int> phi_rows(std::size_t(k), t.row_of(phi, i));
        std::vector<int> chi_rows, sig_rows;
        for (int j : nb) {
            chi_rows.push_back(t.row_of(chi, j));
            sig_rows.push_back(t.row_of(sig, j));
        }
        int theta = t.sub(t.concat_rows(phi_rows), t.concat_rows(chi_rows));  // (k, hidden)
        int pre = t.add(theta, P("attn.xi"));
        int h1 = t.relu_(t.add(t.matmul(pre, P("attn.eta1.W")), P("attn.eta1.b")));
        int logits = t.add(t.matmul(h1, P("attn.eta2.W")), P("attn.eta2.b"));  // (k, d_f)
        // softmax over neighbors, independently per feature channel
        int a = t.transpose(t.softmax_rows(t.transpose(logits)));
        res.a.push_back(t.value(a));
        int weighted = t.mul(a, t.concat_rows(sig_rows));
        ys.push_back(t.scale(t.mean_rows(weighted), double(k)));  // column sums
    }
    res.y_node = t.concat_rows(ys);
    res.y = t.value(res.y_node);
    return res;
}

struct GroupScore {
    int group_id = 0;
    std::vector<int> member_indices;
    double score_G = 0.0;  // pairwise neighborhood-attention score
    double score_g = 0.0;  // mean global attention score
};

namespace detail {
inline double eta_rcs(const nn::ParamStore& p, double ri, double rj) {
    const nn::Tensor& W1 = p.at("attn.eta_rcs1.W");
    const nn::Tensor& b1 = p.at("attn.eta_rcs1.b");
    const nn::Tensor& W2 = p.at("attn.eta_rcs2.W");
    const nn::Tensor& b2 = p.at("attn.eta_rcs2.b");
    double out = b2.at(0, 0);
    for (int h = 0; h < W1.cols(); ++h) {
        double a = ri * W1.at(0, h) + rj * W1.at(1, h) + b1.at(0, h);
        if (a > 0.0) out += a * W2.at(h, 0);
    }
    return out;
}
}  // namespace detail

// Group scores over the DBSCAN clusters:
//   score_G: sum over in-group neighbor pairs of mean_channel(a_ij) * eta(RCS_i, RCS_j)
//   score_g: (1/|G|) * sum_i (y_i . w) * zeta(RCS_i)
inline std::vector<GroupScore> group_and_score(const AttentionResult& attn, const nn::Tensor& X,
                                               const std::vector<std::vector<int>>& groups,
                                               const nn::ParamStore& params) {
    const nn::Tensor& w = params.at("attn.w");
    const nn::Tensor& zeta = params.at("attn.zeta");
    std::vector<GroupScore> out;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        GroupScore gs;
        gs.group_id = int(g);
        gs.member_indices = groups[g];
        std::vector<bool> in(std::size_t(X.rows()), false);
        for (int i : gs.member_indices) in[std::size_t(i)] = true;
        for (int i : gs.member_indices) {
            const auto& nb = attn.neighbors[std::size_t(i)];
            const nn::Tensor& a = attn.a[std::size_t(i)];
            for (int r = 0; r < int(nb.size()); ++r) {
                int j = nb[std::size_t(r)];
                if (!in[std::size_t(j)]) continue;
                double abar = 0.0;
                for (int c = 0; c < a.cols(); ++c) abar += a.at(r, c);
                abar /= double(a.cols());
                gs.score_G += abar * detail::eta_rcs(params, X.at(i, 5), X.at(j, 5));
            }
            double yw = 0.0;
            for (int c = 0; c < attn.y.cols(); ++c) yw += attn.y.at(i, c) * w.at(c, 0);
            gs.score_g += yw * (zeta.at(0, 0) * X.at(i, 5) + zeta.at(0, 1));
        }
        if (!gs.member_indices.empty()) gs.score_g /= double(gs.member_indices.size());
        out.push_back(std::move(gs));
    }
    return out;
}

// R_S = argmax_j g_j; ties resolve to the lowest group id.
inline int select_region(const std::vector<GroupScore>& scores) {
    if (scores.empty()) throw std::invalid_argument("select_region: no groups");
    int best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i].score_g > scores[best].score_g) best = int(i);
    return scores[std::size_t(best)].group_id;
}

}  // namespace mmvr::vr
