#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mmvr/augment.hpp"

using namespace mmvr;
using namespace mmvr::aug;

namespace {

radar::Point mk(double x, double y, double z, double v = 0.0) {
    radar::Point p;
    p.x = x;
    p.y = y;
    p.z = z;
    p.velocity = v;
    p.intensity = 1e-6;
    p.rcs_m2 = 5.0;
    return p;
}

radar::PointCloudFrame cluster_frame(Rng& rng, int n, Vec3 c, double v = 0.0) {
    radar::PointCloudFrame f;
    for (int i = 0; i < n; ++i)
        f.points.push_back(mk(c.x + rng.normal() * 0.05, c.y + rng.normal() * 0.05,
                              c.z + rng.normal() * 0.05, v + rng.normal() * 0.01));
    return f;
}

// Two separated lobes (hand + controller); the region centroid falls in the
// gap, so centroid-replication is a poor completion of these frames.
radar::PointCloudFrame two_lobe_frame(Rng& rng, int n, Vec3 c) {
    radar::PointCloudFrame f;
    for (int i = 0; i < n; ++i) {
        double dx = (i % 2 == 0) ? -0.35 : 0.35;
        f.points.push_back(mk(c.x + dx + rng.normal() * 0.04, c.y + rng.normal() * 0.04,
                              c.z + rng.normal() * 0.04, rng.normal() * 0.01));
    }
    return f;
}

bool same_point(const radar::Point& a, const radar::Point& b) {
    return a.x == b.x && a.y == b.y && a.z == b.z && a.velocity == b.velocity &&
           a.intensity == b.intensity && a.rcs_m2 == b.rcs_m2;
}

}  // namespace

TEST_CASE("density gauge triggers strictly below the threshold") {
    radar::PointCloudFrame f;
    CHECK(density_level(f, 32).triggers());  // empty frame: level 0
    CHECK(density_level(f, 32).level == 0);
    for (int i = 0; i < 31; ++i) f.points.push_back(mk(0, 2, 1));
    CHECK(density_level(f, 32).level == 31);
    CHECK(density_level(f, 32).triggers());
    f.points.push_back(mk(0, 2, 1));
    CHECK(!density_level(f, 32).triggers());  // level == K: no trigger
    f.points.push_back(mk(0, 2, 1));
    CHECK(!density_level(f, 32).triggers());
    CHECK_THROWS_AS(density_level(f, 0), std::invalid_argument);
}

TEST_CASE("action key thresholds on mean absolute velocity") {
    Rng rng(1);
    std::vector<radar::PointCloudFrame> slow{cluster_frame(rng, 10, {0, 2, 1}, 0.0)};
    std::vector<radar::PointCloudFrame> mid{cluster_frame(rng, 10, {0, 2, 1}, 0.15)};
    std::vector<radar::PointCloudFrame> fast{cluster_frame(rng, 10, {0, 2, 1}, 0.8)};
    CHECK(action_key(slow) == 0);
    CHECK(action_key(mid) == 1);
    CHECK(action_key(fast) == 2);
    CHECK(action_key({}) == 0);  // no data: calmest bank
}

TEST_CASE("region bounding box and dilation") {
    radar::PointCloudFrame f;
    f.points = {mk(-0.2, 2.0, 0.9), mk(0.3, 2.4, 1.3)};
    Bbox b = region_bbox({&f}, 0.10);
    CHECK(b.lo.x == doctest::Approx(-0.3));
    CHECK(b.hi.x == doctest::Approx(0.4));
    CHECK(b.lo.y == doctest::Approx(1.9));
    CHECK(b.hi.z == doctest::Approx(1.4));
    radar::PointCloudFrame empty;
    CHECK_THROWS_AS(region_bbox({&empty}, 0.10), std::invalid_argument);
}

TEST_CASE("dense frames pass through augmentation untouched") {
    AugmentConfig cfg;
    cfg.threshold_k = 8;
    ActionFeatureModel model(cfg, 3);
    Rng rng(2);
    radar::PointCloudFrame dense = cluster_frame(rng, 8, {0, 2, 1});
    AugmentResult r = augment_frame(dense, {}, model);
    CHECK(!r.triggered);
    REQUIRE(r.frame.points.size() == dense.points.size());
    for (std::size_t i = 0; i < dense.points.size(); ++i)
        CHECK(same_point(r.frame.points[i], dense.points[i]));
}

TEST_CASE("sparse frames are completed to the threshold inside the dilated box") {
    AugmentConfig cfg;
    cfg.threshold_k = 16;
    cfg.history = 2;
    ActionFeatureModel model(cfg, 5);
    Rng rng(7);
    std::vector<radar::PointCloudFrame> history{cluster_frame(rng, 20, {0, 2, 1}),
                                                cluster_frame(rng, 20, {0, 2, 1})};
    radar::PointCloudFrame sparse = cluster_frame(rng, 5, {0, 2, 1});

    AugmentResult r = augment_frame(sparse, history, model);
    CHECK(r.triggered);
    CHECK(!r.degraded_mode);
    CHECK(int(r.frame.points.size()) == cfg.threshold_k);
    CHECK(!density_level(r.frame, cfg.threshold_k).triggers());
    // originals preserved verbatim at the front
    for (std::size_t i = 0; i < sparse.points.size(); ++i)
        CHECK(same_point(r.frame.points[i], sparse.points[i]));
    // synthesized points confined to the dilated context bounding box
    Bbox box = region_bbox({&sparse, &history[0], &history[1]}, cfg.dilation_m);
    for (std::size_t i = sparse.points.size(); i < r.frame.points.size(); ++i) {
        const auto& p = r.frame.points[i];
        CHECK(p.x >= box.lo.x);
        CHECK(p.x <= box.hi.x);
        CHECK(p.y >= box.lo.y);
        CHECK(p.y <= box.hi.y);
        CHECK(p.z >= box.lo.z);
        CHECK(p.z <= box.hi.z);
        CHECK(p.rcs_m2.has_value());
    }
}

TEST_CASE("degraded mode replicates when history is unusable") {
    AugmentConfig cfg;
    cfg.threshold_k = 8;
    cfg.history = 4;
    ActionFeatureModel model(cfg, 1);
    radar::PointCloudFrame sparse;
    sparse.points = {mk(0.1, 2.0, 1.0), mk(0.2, 2.1, 1.1)};

    AugmentResult r = augment_frame(sparse, {}, model);  // no history at all
    CHECK(r.triggered);
    CHECK(r.degraded_mode);
    REQUIRE(r.frame.points.size() == 8);
    for (std::size_t i = 0; i < r.frame.points.size(); ++i)
        CHECK(same_point(r.frame.points[i], sparse.points[i % 2]));

    radar::PointCloudFrame empty;
    CHECK_THROWS_AS(augment_frame(empty, {}, model), std::invalid_argument);
}

TEST_CASE("chamfer value and gradient") {
    SUBCASE("identical sets have zero distance") {
        nn::Tensor a({3, 3}, {0, 0, 0, 1, 0, 0, 0, 1, 0});
        CHECK(chamfer_value(a, a) == 0.0);
    }
    SUBCASE("known one-point offset") {
        nn::Tensor a({1, 3}, {0.0, 0.0, 0.0});
        nn::Tensor b({1, 3}, {0.3, 0.0, 0.4});
        CHECK(chamfer_value(a, b) == doctest::Approx(2.0 * 0.25).epsilon(1e-12));
    }
    SUBCASE("empty or misshapen sets are rejected") {
        nn::Tape t;
        nn::Tensor a({1, 3});
        CHECK_THROWS_AS(chamfer_to_target(t, t.input(a), nn::Tensor({0, 3})), std::invalid_argument);
        CHECK_THROWS_AS(chamfer_to_target(t, t.input(nn::Tensor({1, 2})), a), std::invalid_argument);
    }
    SUBCASE("analytic gradient matches finite differences") {
        Rng rng(13);
        nn::Tensor pred({4, 3}), target({5, 3});
        for (auto& v : pred.v) v = rng.uniform(-1.0, 1.0);
        for (auto& v : target.v) v = rng.uniform(-1.0, 1.0);
        nn::Tape t;
        int x = t.input(pred);
        int loss = chamfer_to_target(t, x, target);
        t.backward(loss);
        nn::Tensor g = t.grad(x);
        double h = 1e-6;
        for (std::size_t i = 0; i < pred.v.size(); ++i) {
            nn::Tensor p1 = pred, p2 = pred;
            p1.v[i] += h;
            p2.v[i] -= h;
            double fd = (chamfer_value(p1, target) - chamfer_value(p2, target)) / (2.0 * h);
            CHECK(std::abs(fd - g.v[i]) < 1e-4);
        }
    }
}

TEST_CASE("self-supervised training reduces the chamfer objective") {
    AugmentConfig cfg;
    cfg.threshold_k = 12;
    cfg.history = 2;
    cfg.enc_hidden = 16;
    ActionFeatureModel model(cfg, 11);
    Rng rng(19);
    std::vector<std::vector<radar::PointCloudFrame>> seqs;
    for (int s = 0; s < 4; ++s) {
        std::vector<radar::PointCloudFrame> seq;
        Vec3 c{rng.uniform(-0.3, 0.3), 2.0 + rng.uniform(-0.2, 0.2), 1.0};
        for (int f = 0; f < 10; ++f) seq.push_back(cluster_frame(rng, 24, c));
        seqs.push_back(std::move(seq));
    }
    TrainTrace trace = self_supervised_train(model, seqs, 200, 0.01, 5);
    REQUIRE(int(trace.losses.size()) == 200);
    double first = 0.0, last = 0.0;
    for (int i = 0; i < 40; ++i) {
        first += trace.losses[std::size_t(i)];
        last += trace.losses[std::size_t(160 + i)];
    }
    CHECK(last < first);  // block-averaged loss trend

    SUBCASE("training is deterministic per seed") {
        ActionFeatureModel m1(cfg, 11), m2(cfg, 11);
        TrainTrace t1 = self_supervised_train(m1, seqs, 20, 0.01, 5);
        TrainTrace t2 = self_supervised_train(m2, seqs, 20, 0.01, 5);
        CHECK(t1.losses == t2.losses);
    }
    SUBCASE("zero steps leave the model unchanged") {
        ActionFeatureModel m1(cfg, 11);
        nn::Tensor before = m1.bank(0).at("aug.fc2.W");
        self_supervised_train(m1, seqs, 0, 0.01, 5);
        CHECK(m1.bank(0).at("aug.fc2.W").v == before.v);
    }
    SUBCASE("no usable frames raises an error") {
        std::vector<std::vector<radar::PointCloudFrame>> empty_seqs{
            std::vector<radar::PointCloudFrame>(5)};
        CHECK_THROWS_AS(self_supervised_train(model, empty_seqs, 10, 0.01, 5),
                        std::invalid_argument);
    }
}

TEST_CASE("training improves completion quality on most seeds") {
    // Drop half the points of a dense frame; the trained model's completion
    // should be closer (chamfer) to the dense original than an untrained
    // model's completion of the same sparse remnant.
    AugmentConfig cfg;
    cfg.threshold_k = 24;
    cfg.history = 2;
    cfg.enc_hidden = 16;
    ActionFeatureModel model(cfg, 21);
    Rng gen(31);
    std::vector<std::vector<radar::PointCloudFrame>> seqs;
    for (int s = 0; s < 6; ++s) {
        std::vector<radar::PointCloudFrame> seq;
        Vec3 c{gen.uniform(-0.3, 0.3), 2.0 + gen.uniform(-0.2, 0.2), 1.0 + gen.uniform(-0.1, 0.1)};
        for (int f = 0; f < 12; ++f) seq.push_back(two_lobe_frame(gen, 24, c));
        seqs.push_back(std::move(seq));
    }
    ActionFeatureModel untrained(cfg, 21);  // same init, no training
    self_supervised_train(model, seqs, 400, 0.01, 7);

    auto positions = [](const radar::PointCloudFrame& f) {
        nn::Tensor t({int(f.points.size()), 3});
        for (int i = 0; i < t.rows(); ++i) {
            t.at(i, 0) = f.points[std::size_t(i)].x;
            t.at(i, 1) = f.points[std::size_t(i)].y;
            t.at(i, 2) = f.points[std::size_t(i)].z;
        }
        return t;
    };

    int wins = 0, trials = 50;
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng(1000 + std::uint64_t(trial));
        Vec3 c{rng.uniform(-0.3, 0.3), 2.0 + rng.uniform(-0.2, 0.2), 1.0};
        std::vector<radar::PointCloudFrame> hist{two_lobe_frame(rng, 24, c),
                                                 two_lobe_frame(rng, 24, c)};
        radar::PointCloudFrame dense = two_lobe_frame(rng, 24, c);
        radar::PointCloudFrame sparse;
        for (std::size_t i = 0; i < dense.points.size(); ++i)
            if (rng.uniform() < 0.5 || sparse.points.empty())
                sparse.points.push_back(dense.points[i]);

        AugmentResult trained_r = augment_frame(sparse, hist, model);
        AugmentResult raw_r = augment_frame(sparse, hist, untrained);
        double d_trained = chamfer_value(positions(trained_r.frame), positions(dense));
        double d_raw = chamfer_value(positions(raw_r.frame), positions(dense));
        if (d_trained <= d_raw) ++wins;
    }
    CHECK(wins >= 35);  // >= 70% of 50 seeded trials
}

TEST_CASE("transfer update is bounded and optional") {
    AugmentConfig cfg;
    cfg.threshold_k = 12;
    cfg.history = 2;
    cfg.enc_hidden = 16;
    ActionFeatureModel model(cfg, 9);
    Rng rng(3);
    std::vector<radar::PointCloudFrame> recent;
    for (int i = 0; i < 5; ++i) recent.push_back(cluster_frame(rng, 16, {0, 2, 1}));

    nn::Tensor before = model.bank(0).at("aug.fc2.W");
    transfer_update(model, recent, 0.0, 5);  // lr 0: no-op
    CHECK(model.bank(0).at("aug.fc2.W").v == before.v);

    transfer_update(model, recent, 0.01, 5);
    CHECK(model.bank(0).at("aug.fc2.W").v != before.v);

    CHECK_THROWS_AS(transfer_update(model, {}, 0.01, 5), std::invalid_argument);
}
