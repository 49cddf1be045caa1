#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <map>

#include "mmvr/vr_extract.hpp"

using namespace mmvr;
using namespace mmvr::vr;

namespace {

radar::Point mk(double x, double y, double z, double rcs) {
    radar::Point p;
    p.x = x;
    p.y = y;
    p.z = z;
    p.rcs_m2 = rcs;
    return p;
}

// Independent DBSCAN reference: union-find over core pairs within eps, then
// border points attach to their lowest-index core neighbor, labels normalized
// by smallest member index.
std::vector<int> dbscan_reference(const std::vector<Vec3>& pts, const DbscanConfig& cfg) {
    int n = int(pts.size());
    double eps2 = cfg.eps_m * cfg.eps_m;
    auto close = [&](int i, int j) {
        Vec3 d = pts[std::size_t(i)] - pts[std::size_t(j)];
        return d.dot(d) <= eps2;
    };
    std::vector<int> degree(std::size_t(n), 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (close(i, j)) ++degree[std::size_t(i)];  // counts self
    std::vector<bool> core(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) core[std::size_t(i)] = degree[std::size_t(i)] >= cfg.min_pts;

    std::vector<int> parent(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) parent[std::size_t(i)] = i;
    std::function<int(int)> find = [&](int x) {
        while (parent[std::size_t(x)] != x) x = parent[std::size_t(x)] = parent[std::size_t(parent[std::size_t(x)])];
        return x;
    };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (core[std::size_t(i)] && core[std::size_t(j)] && close(i, j)) {
                int a = find(i), b = find(j);
                if (a != b) parent[std::size_t(std::max(a, b))] = std::min(a, b);
            }
    std::vector<int> label(std::size_t(n), -1);
    for (int i = 0; i < n; ++i)
        if (core[std::size_t(i)]) label[std::size_t(i)] = find(i);
    for (int i = 0; i < n; ++i) {
        if (core[std::size_t(i)]) continue;
        for (int j = 0; j < n; ++j)
            if (core[std::size_t(j)] && close(i, j)) {
                label[std::size_t(i)] = find(j);
                break;
            }
    }
    // normalize: clusters numbered by their smallest core-point index
    std::map<int, int> remap;
    for (int i = 0; i < n; ++i)
        if (core[std::size_t(i)] && !remap.count(label[std::size_t(i)])) {
            int id = int(remap.size());
            remap[label[std::size_t(i)]] = id;
        }
    for (int i = 0; i < n; ++i)
        if (label[std::size_t(i)] >= 0) label[std::size_t(i)] = remap[label[std::size_t(i)]];
    return label;
}

nn::ParamStore make_params(const AttentionConfig& cfg, std::uint64_t seed) {
    nn::ParamStore p;
    Rng rng(seed);
    init_attention(p, cfg, rng);
    return p;
}

}  // namespace

TEST_CASE("band filter keeps only in-band rcs") {
    radar::PointCloudFrame f;
    f.points = {mk(0.0, 2.0, 1.0, 5.0), mk(2.4, 4.5, 0.7, 60.0), mk(0.05, 2.0, 1.05, 8.0)};
    DbscanConfig one{0.15, 1};  // min_pts 1: every retained point survives
    VrExtraction ex = extract_vr_points(f, RcsBand{3.0, 10.0}, one);
    REQUIRE(ex.frame.points.size() == 2);
    CHECK(*ex.frame.points[0].rcs_m2 == 5.0);
    CHECK(*ex.frame.points[1].rcs_m2 == 8.0);
    CHECK(!ex.no_vr_activity);

    VrExtraction none = extract_vr_points(f, RcsBand{200.0, 300.0}, one);
    CHECK(none.frame.points.empty());
    CHECK(none.no_vr_activity);
}

TEST_CASE("band validation and annotation requirements") {
    radar::PointCloudFrame f;
    radar::Point p;  // no rcs annotation
    f.points.push_back(p);
    CHECK_THROWS_AS(extract_vr_points(f, RcsBand{3.0, 10.0}, DbscanConfig{}),
                    std::invalid_argument);
    CHECK_THROWS_AS((RcsBand{10.0, 3.0}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((RcsBand{0.0, 3.0}.validate()), std::invalid_argument);
}

TEST_CASE("dbscan basics") {
    DbscanConfig cfg;  // eps 0.15, min_pts 3
    std::vector<Vec3> two_blobs;
    for (int i = 0; i < 4; ++i) two_blobs.push_back({0.02 * i, 0.0, 0.0});
    for (int i = 0; i < 4; ++i) two_blobs.push_back({2.0 + 0.02 * i, 0.0, 0.0});
    std::vector<int> l = dbscan(two_blobs, cfg);
    CHECK(l == std::vector<int>{0, 0, 0, 0, 1, 1, 1, 1});

    std::vector<Vec3> sparse{{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {2.0, 0.0, 0.0}};
    for (int x : dbscan(sparse, cfg)) CHECK(x == -1);  // all noise

    CHECK(dbscan({}, cfg).empty());
}

TEST_CASE("dbscan matches an independent reference on 100 seeded frames") {
    DbscanConfig cfg;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        Rng rng(seed);
        int n = 20 + rng.uniform_int(181);  // up to 200 points
        std::vector<Vec3> pts;
        int centers = 1 + rng.uniform_int(5);
        std::vector<Vec3> cs;
        for (int c = 0; c < centers; ++c)
            cs.push_back({rng.uniform(-2.0, 2.0), rng.uniform(1.0, 5.0), rng.uniform(0.0, 2.0)});
        for (int i = 0; i < n; ++i) {
            const Vec3& c = cs[std::size_t(rng.uniform_int(centers))];
            pts.push_back(c + Vec3{rng.normal() * 0.08, rng.normal() * 0.08, rng.normal() * 0.08});
        }
        CHECK(dbscan(pts, cfg) == dbscan_reference(pts, cfg));
    }
}

TEST_CASE("attention on a single point gives weight one") {
    AttentionConfig cfg;
    nn::ParamStore params = make_params(cfg, 3);
    radar::PointCloudFrame f;
    f.points = {mk(0.1, 2.0, 1.1, 6.0)};
    nn::Tensor X = points_to_tensor(f);
    nn::Tape t;
    nn::ParamUse P(t, params);
    AttentionResult r = attention_forward(t, P, X, cfg);
    CHECK(r.k_used == 1);
    CHECK(r.k_clamped);
    REQUIRE(r.a.size() == 1);
    for (int c = 0; c < r.a[0].cols(); ++c) CHECK(r.a[0].at(0, c) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("duplicated points share attention equally") {
    AttentionConfig cfg;
    cfg.k = 2;
    nn::ParamStore params = make_params(cfg, 5);
    radar::PointCloudFrame f;
    f.points = {mk(0.1, 2.0, 1.1, 6.0), mk(0.1, 2.0, 1.1, 6.0)};
    nn::Tape t;
    nn::ParamUse P(t, params);
    AttentionResult r = attention_forward(t, P, points_to_tensor(f), cfg);
    for (const nn::Tensor& a : r.a)
        for (int c = 0; c < a.cols(); ++c) {
            CHECK(a.at(0, c) == doctest::Approx(0.5).epsilon(1e-12));
            CHECK(a.at(1, c) == doctest::Approx(0.5).epsilon(1e-12));
        }
}

TEST_CASE("attention matches a naive double-loop oracle within 1e-6") {
    AttentionConfig cfg;
    cfg.k = 3;
    cfg.hidden = 8;
    cfg.d_feature = 5;
    nn::ParamStore params = make_params(cfg, 11);
    Rng rng(77);
    radar::PointCloudFrame f;
    for (int i = 0; i < 5; ++i)
        f.points.push_back(mk(rng.uniform(-1.0, 1.0), rng.uniform(1.0, 3.0), rng.uniform(0.0, 2.0),
                              rng.uniform(3.0, 10.0)));
    for (auto& p : f.points) {
        p.velocity = rng.uniform(-1.0, 1.0);
        p.intensity = rng.uniform(0.0, 1.0);
    }
    nn::Tensor X = points_to_tensor(f);
    nn::Tape t;
    nn::ParamUse P(t, params);
    AttentionResult r = attention_forward(t, P, X, cfg);

    // naive reference: explicit loops over points, neighbors, and channels
    auto dense_row = [&](const std::string& name, const nn::Tensor& xrow) {
        const nn::Tensor& W = params.at(name + ".W");
        const nn::Tensor& b = params.at(name + ".b");
        nn::Tensor out({1, W.cols()});
        for (int c = 0; c < W.cols(); ++c) {
            double s = b.at(0, c);
            for (int k = 0; k < W.rows(); ++k) s += xrow.at(0, k) * W.at(k, c);
            out.at(0, c) = s;
        }
        return out;
    };
    auto xrow = [&](int i) {
        nn::Tensor row({1, 6});
        for (int c = 0; c < 6; ++c) row.at(0, c) = X.at(i, c);
        return row;
    };
    auto nbrs = knn_neighbors(X, cfg.k);
    const nn::Tensor& xi = params.at("attn.xi");
    for (int i = 0; i < X.rows(); ++i) {
        const auto& nb = nbrs[std::size_t(i)];
        int k = int(nb.size());
        // per-neighbor logits
        std::vector<std::vector<double>> logits(std::size_t(k),
                                                std::vector<double>(std::size_t(cfg.d_feature)));
        for (int rix = 0; rix < k; ++rix) {
            nn::Tensor phi = dense_row("attn.phi", xrow(i));
            nn::Tensor chi = dense_row("attn.chi", xrow(nb[std::size_t(rix)]));
            nn::Tensor pre({1, cfg.hidden});
            for (int c = 0; c < cfg.hidden; ++c)
                pre.at(0, c) = phi.at(0, c) - chi.at(0, c) + xi.at(0, c);
            nn::Tensor h1 = dense_row("attn.eta1", pre);
            for (int c = 0; c < cfg.hidden; ++c) h1.at(0, c) = std::max(0.0, h1.at(0, c));
            nn::Tensor lg = dense_row("attn.eta2", h1);
            for (int c = 0; c < cfg.d_feature; ++c) logits[std::size_t(rix)][std::size_t(c)] = lg.at(0, c);
        }
        // per-channel softmax over the k neighbors, then weighted sum of sigma
        for (int c = 0; c < cfg.d_feature; ++c) {
            double mx = -1e300;
            for (int rix = 0; rix < k; ++rix) mx = std::max(mx, logits[std::size_t(rix)][std::size_t(c)]);
            double zsum = 0.0;
            std::vector<double> a(static_cast<std::size_t>(k));
            for (int rix = 0; rix < k; ++rix) {
                a[std::size_t(rix)] = std::exp(logits[std::size_t(rix)][std::size_t(c)] - mx);
                zsum += a[std::size_t(rix)];
            }
            double y = 0.0, asum = 0.0;
            for (int rix = 0; rix < k; ++rix) {
                double w = a[std::size_t(rix)] / zsum;
                asum += w;
                nn::Tensor sg = dense_row("attn.sigma", xrow(nb[std::size_t(rix)]));
                y += w * sg.at(0, c);
                CHECK(std::abs(w - r.a[std::size_t(i)].at(rix, c)) < 1e-6);
            }
            CHECK(asum == doctest::Approx(1.0).epsilon(1e-9));  // weights sum to one
            CHECK(std::abs(y - r.y.at(i, c)) < 1e-6);
        }
    }
}

TEST_CASE("attention rejects empty input and clamps k") {
    AttentionConfig cfg;
    cfg.k = 8;
    nn::ParamStore params = make_params(cfg, 2);
    nn::Tape t;
    nn::ParamUse P(t, params);
    CHECK_THROWS_AS(attention_forward(t, P, nn::Tensor({0, 6}), cfg), std::invalid_argument);
    radar::PointCloudFrame f;
    f.points = {mk(0.0, 2.0, 1.0, 5.0), mk(0.1, 2.0, 1.0, 5.0), mk(0.2, 2.0, 1.0, 5.0)};
    AttentionResult r = attention_forward(t, P, points_to_tensor(f), cfg);
    CHECK(r.k_used == 3);
    CHECK(r.k_clamped);
}

TEST_CASE("knn ties break to the lower index") {
    nn::Tensor X({3, 6});
    X.at(1, 0) = 1.0;   // point 1 at x=+1
    X.at(2, 0) = -1.0;  // point 2 at x=-1, same distance from point 0
    auto nb = knn_neighbors(X, 2);
    CHECK(nb[0] == std::vector<int>{0, 1});
}

TEST_CASE("group scores match a brute-force evaluation") {
    AttentionConfig cfg;
    cfg.k = 4;
    nn::ParamStore params = make_params(cfg, 9);
    Rng rng(123);
    radar::PointCloudFrame f;
    // three spatial groups
    std::vector<std::vector<int>> groups(3);
    for (int g = 0; g < 3; ++g)
        for (int i = 0; i < 3; ++i) {
            groups[std::size_t(g)].push_back(int(f.points.size()));
            f.points.push_back(mk(double(g) * 2.0 + rng.uniform(-0.05, 0.05),
                                  2.0 + rng.uniform(-0.05, 0.05), 1.0, rng.uniform(3.0, 10.0)));
        }
    nn::Tensor X = points_to_tensor(f);
    nn::Tape t;
    nn::ParamUse P(t, params);
    AttentionResult r = attention_forward(t, P, X, cfg);
    std::vector<GroupScore> scores = group_and_score(r, X, groups, params);
    REQUIRE(scores.size() == 3);

    const nn::Tensor& w = params.at("attn.w");
    const nn::Tensor& zeta = params.at("attn.zeta");
    const nn::Tensor& W1 = params.at("attn.eta_rcs1.W");
    const nn::Tensor& b1 = params.at("attn.eta_rcs1.b");
    const nn::Tensor& W2 = params.at("attn.eta_rcs2.W");
    const nn::Tensor& b2 = params.at("attn.eta_rcs2.b");
    auto eta = [&](double ri, double rj) {
        double out = b2.at(0, 0);
        for (int h = 0; h < W1.cols(); ++h) {
            double a = ri * W1.at(0, h) + rj * W1.at(1, h) + b1.at(0, h);
            if (a > 0.0) out += a * W2.at(h, 0);
        }
        return out;
    };
    for (int g = 0; g < 3; ++g) {
        double sG = 0.0, sg = 0.0;
        for (int i : groups[std::size_t(g)]) {
            const auto& nb = r.neighbors[std::size_t(i)];
            for (int rix = 0; rix < int(nb.size()); ++rix) {
                int j = nb[std::size_t(rix)];
                bool in = false;
                for (int m : groups[std::size_t(g)]) in |= (m == j);
                if (!in) continue;
                double abar = 0.0;
                for (int c = 0; c < r.a[std::size_t(i)].cols(); ++c)
                    abar += r.a[std::size_t(i)].at(rix, c);
                abar /= double(r.a[std::size_t(i)].cols());
                sG += abar * eta(X.at(i, 5), X.at(j, 5));
            }
            double yw = 0.0;
            for (int c = 0; c < r.y.cols(); ++c) yw += r.y.at(i, c) * w.at(c, 0);
            sg += yw * (zeta.at(0, 0) * X.at(i, 5) + zeta.at(0, 1));
        }
        sg /= double(groups[std::size_t(g)].size());
        CHECK(scores[std::size_t(g)].score_G == doctest::Approx(sG).epsilon(1e-9));
        CHECK(scores[std::size_t(g)].score_g == doctest::Approx(sg).epsilon(1e-9));
    }
}

TEST_CASE("select_region picks the arg max with deterministic ties") {
    std::vector<GroupScore> s(3);
    s[0].group_id = 0;
    s[0].score_g = 0.2;
    s[1].group_id = 1;
    s[1].score_g = 0.9;
    s[2].group_id = 2;
    s[2].score_g = 0.1;
    CHECK(select_region(s) == 1);
    for (auto& g : s) g.score_g = 0.5;
    CHECK(select_region(s) == 0);  // tie goes to the lowest group id
    CHECK_THROWS_AS(select_region({}), std::invalid_argument);
}

TEST_CASE("select_region agrees with exhaustive search on random scores") {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        Rng rng(seed);
        int n = 1 + rng.uniform_int(10);
        std::vector<GroupScore> s(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            s[std::size_t(i)].group_id = i;
            s[std::size_t(i)].score_g = rng.uniform(-1.0, 1.0);
        }
        int best = 0;
        for (int i = 0; i < n; ++i)
            if (s[std::size_t(i)].score_g > s[std::size_t(best)].score_g) best = i;
        CHECK(select_region(s) == best);
    }
}

TEST_CASE("scaling w rescales scores without changing the arg max sign structure") {
    AttentionConfig cfg;
    cfg.k = 3;
    nn::ParamStore params = make_params(cfg, 21);
    Rng rng(8);
    radar::PointCloudFrame f;
    std::vector<std::vector<int>> groups(2);
    for (int g = 0; g < 2; ++g)
        for (int i = 0; i < 3; ++i) {
            groups[std::size_t(g)].push_back(int(f.points.size()));
            f.points.push_back(mk(double(g) * 3.0 + rng.uniform(-0.05, 0.05), 2.0, 1.0,
                                  rng.uniform(3.0, 10.0)));
        }
    nn::Tensor X = points_to_tensor(f);
    nn::Tape t;
    nn::ParamUse P(t, params);
    AttentionResult r = attention_forward(t, P, X, cfg);
    std::vector<GroupScore> base = group_and_score(r, X, groups, params);
    nn::Tensor& w = params.at("attn.w");
    for (auto& v : w.v) v *= 2.0;
    std::vector<GroupScore> scaled = group_and_score(r, X, groups, params);
    for (std::size_t i = 0; i < base.size(); ++i)
        CHECK(scaled[i].score_g == doctest::Approx(2.0 * base[i].score_g).epsilon(1e-12));
}

TEST_CASE("attention output is permutation consistent") {
    AttentionConfig cfg;
    cfg.k = 3;
    nn::ParamStore params = make_params(cfg, 31);
    Rng rng(9);
    radar::PointCloudFrame f;
    for (int i = 0; i < 6; ++i)
        f.points.push_back(mk(rng.uniform(-1.0, 1.0), rng.uniform(1.0, 3.0), rng.uniform(0.0, 2.0),
                              rng.uniform(3.0, 10.0)));
    radar::PointCloudFrame g = f;
    std::reverse(g.points.begin(), g.points.end());

    nn::Tape t1, t2;
    nn::ParamUse P1(t1, params), P2(t2, params);
    AttentionResult r1 = attention_forward(t1, P1, points_to_tensor(f), cfg);
    AttentionResult r2 = attention_forward(t2, P2, points_to_tensor(g), cfg);
    int n = int(f.points.size());
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < r1.y.cols(); ++c)
            CHECK(r1.y.at(i, c) == doctest::Approx(r2.y.at(n - 1 - i, c)).epsilon(1e-9));
}
