#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mmvr/nn/gradcheck.hpp"
#include "mmvr/nn/optim.hpp"
#include "mmvr/vr_extract.hpp"

using namespace mmvr;
using namespace mmvr::nn;

TEST_CASE("tensor basics") {
    Tensor t({2, 3});
    CHECK(t.rows() == 2);
    CHECK(t.cols() == 3);
    for (double v : t.v) CHECK(v == 0.0);
    Tensor u({1, 2}, {3.0, 4.0});
    CHECK(u.at(0, 1) == 4.0);
    Rng rng(1);
    Tensor g = Tensor::glorot(10, 20, rng);
    double lim = std::sqrt(6.0 / 30.0);
    for (double v : g.v) {
        CHECK(v <= lim);
        CHECK(v >= -lim);
    }
}

TEST_CASE("elementwise and structural ops") {
    Tape t;
    int x = t.input(Tensor({2, 2}, {1.0, -2.0, 3.0, -4.0}));
    SUBCASE("relu clips negatives") {
        const Tensor& y = t.value(t.relu_(x));
        CHECK(y.v == std::vector<double>{1.0, 0.0, 3.0, 0.0});
    }
    SUBCASE("identity of input") { CHECK(t.value(x).v == std::vector<double>{1.0, -2.0, 3.0, -4.0}); }
    SUBCASE("bias broadcast") {
        int b = t.input(Tensor({1, 2}, {10.0, 20.0}));
        const Tensor& y = t.value(t.add(x, b));
        CHECK(y.v == std::vector<double>{11.0, 18.0, 13.0, 16.0});
    }
    SUBCASE("matmul mismatch names the shapes") {
        int b = t.input(Tensor({3, 2}));
        CHECK_THROWS_WITH_AS(t.matmul(x, b), doctest::Contains("(2,2)"), std::invalid_argument);
    }
    SUBCASE("transpose round trip") {
        int y = t.transpose(t.transpose(x));
        CHECK(t.value(y).v == t.value(x).v);
    }
    SUBCASE("max_rows ties to the lowest row") {
        int m = t.input(Tensor({2, 1}, {5.0, 5.0}));
        int mx = t.max_rows(m);
        int s = t.sum_all(mx);
        t.backward(s);
        CHECK(t.grad(m).v == std::vector<double>{1.0, 0.0});
    }
    SUBCASE("non-finite values abort the tape") {
        CHECK_THROWS_AS(t.input(Tensor({1, 1}, {std::nan("")})), std::runtime_error);
        int big = t.input(Tensor({1, 1}, {1e308}));
        CHECK_THROWS_AS(t.add(big, big), std::runtime_error);  // overflow to inf
    }
}

TEST_CASE("softmax rows") {
    Tape t;
    SUBCASE("equal logits give the uniform distribution") {
        int y = t.softmax_rows(t.input(Tensor({1, 4}, {7.0, 7.0, 7.0, 7.0})));
        for (double v : t.value(y).v) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
    }
    SUBCASE("rows sum to one and stay positive") {
        Rng rng(3);
        Tensor L({5, 7});
        for (auto& v : L.v) v = rng.uniform(-30.0, 30.0);
        const Tensor& y = t.value(t.softmax_rows(t.input(L)));
        for (int i = 0; i < 5; ++i) {
            double s = 0.0;
            for (int j = 0; j < 7; ++j) {
                CHECK(y.at(i, j) > 0.0);
                s += y.at(i, j);
            }
            CHECK(std::abs(s - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("backward on simple analytic cases") {
    SUBCASE("y = w * x: dL/dw equals x") {
        Tape t;
        int w = t.input(Tensor({1, 1}, {2.0}));
        int x = t.input(Tensor({1, 1}, {3.0}));
        int y = t.mul(w, x);
        t.backward(y);
        CHECK(t.grad(w).v[0] == 3.0);
        CHECK(t.grad(x).v[0] == 2.0);
    }
    SUBCASE("constant loss leaves parameters with zero gradient") {
        Tape t;
        int w = t.input(Tensor({1, 3}, {1.0, 2.0, 3.0}));
        int loss = t.scale(t.sum_all(w), 0.0);
        t.backward(loss);
        for (double g : t.grad(w).v) CHECK(g == 0.0);
    }
    SUBCASE("backward requires a scalar") {
        Tape t;
        int x = t.input(Tensor({2, 2}));
        CHECK_THROWS_AS(t.backward(x), std::invalid_argument);
    }
    SUBCASE("cross entropy of a perfect one-hot tends to zero") {
        Tape t;
        int logits = t.input(Tensor({1, 3}, {100.0, 0.0, 0.0}));
        CHECK(t.value(t.cross_entropy(logits, {0})).v[0] == doctest::Approx(0.0).epsilon(1e-12));
        CHECK_THROWS_AS(t.cross_entropy(logits, {0, 1}), std::invalid_argument);
        CHECK_THROWS_AS(t.cross_entropy(logits, {5}), std::invalid_argument);
    }
}

TEST_CASE("gradient checks per op and layer") {
    Rng rng(5);
    double tol = 1e-4;
    SUBCASE("dense + tanh stack") {
        ParamStore p;
        init_dense(p, "l1", 4, 6, rng);
        init_dense(p, "l2", 6, 3, rng);
        Tensor X({3, 4});
        for (auto& v : X.v) v = rng.uniform(-1.0, 1.0);
        auto fn = tape_loss([&X](Tape& t, ParamUse& P) {
            int h = t.tanh_(dense(t, P, "l1", t.input(X)));
            return t.mean_all(t.square(dense(t, P, "l2", h)));
        });
        GradCheckReport r = grad_check(fn, p, tol);
        CHECK(r.pass);
        CHECK(r.max_rel_err <= tol);
    }
    SUBCASE("sigmoid, exp, log, softmax chain") {
        ParamStore p;
        init_dense(p, "l", 3, 3, rng);
        Tensor X({2, 3});
        for (auto& v : X.v) v = rng.uniform(0.2, 1.0);
        auto fn = tape_loss([&X](Tape& t, ParamUse& P) {
            int z = dense(t, P, "l", t.input(X));
            int a = t.sigmoid_(z);
            int b = t.log_(t.add_scalar(t.exp_(a), 1.0));
            return t.mean_all(t.softmax_rows(b));
        });
        CHECK(grad_check(fn, p, tol).pass);
    }
    SUBCASE("lstm step and run") {
        ParamStore p;
        init_lstm(p, "lstm", 3, 4, rng);
        std::vector<Tensor> xs(3, Tensor({1, 3}));
        for (auto& x : xs)
            for (auto& v : x.v) v = rng.uniform(-1.0, 1.0);
        auto fn = tape_loss([&xs](Tape& t, ParamUse& P) {
            std::vector<int> ids;
            for (const auto& x : xs) ids.push_back(t.input(x));
            std::vector<int> hs = lstm_run(t, P, "lstm", ids, 4);
            return t.mean_all(t.square(hs.back()));
        });
        CHECK(grad_check(fn, p, tol).pass);
    }
    SUBCASE("bidirectional lstm") {
        ParamStore p;
        init_lstm(p, "f", 2, 3, rng);
        init_lstm(p, "b", 2, 3, rng);
        std::vector<Tensor> xs(4, Tensor({1, 2}));
        for (auto& x : xs)
            for (auto& v : x.v) v = rng.uniform(-1.0, 1.0);
        auto fn = tape_loss([&xs](Tape& t, ParamUse& P) {
            std::vector<int> ids;
            for (const auto& x : xs) ids.push_back(t.input(x));
            BiStreams bi = bilstm_run(t, P, "f", "b", ids, 3);
            int sum = t.add(bi.fwd[1], bi.bwd[1]);
            return t.mean_all(t.square(sum));
        });
        CHECK(grad_check(fn, p, tol).pass);
    }
    SUBCASE("attention parameters") {
        vr::AttentionConfig cfg;
        cfg.k = 3;
        cfg.hidden = 6;
        cfg.d_feature = 4;
        ParamStore p;
        vr::init_attention(p, cfg, rng);
        Tensor X({4, 6});
        for (auto& v : X.v) v = rng.uniform(-1.0, 1.0);
        auto fn = tape_loss([&X, &cfg](Tape& t, ParamUse& P) {
            vr::AttentionResult r = vr::attention_forward(t, P, X, cfg);
            return t.mean_all(t.square(r.y_node));
        });
        GradCheckReport r = grad_check(fn, p, tol);
        CHECK(r.pass);
    }
    SUBCASE("a broken gradient is caught and the block named") {
        ParamStore p;
        init_dense(p, "l", 2, 2, rng);
        Tensor X({1, 2}, {0.3, -0.7});
        auto good = tape_loss([&X](Tape& t, ParamUse& P) {
            return t.mean_all(t.square(dense(t, P, "l", t.input(X))));
        });
        LossGradFn broken = [&good](const ParamStore& params) {
            auto [loss, grads] = good(params);
            grads.at("l.W").v[1] += 0.5;  // sabotage one element
            return std::make_pair(loss, grads);
        };
        GradCheckReport r = grad_check(broken, p, 1e-4);
        CHECK(!r.pass);
        CHECK(r.worst_block == "l.W");
    }
}

TEST_CASE("bidirectional reversal swaps the streams exactly") {
    Rng rng(9);
    ParamStore p;
    init_lstm(p, "f", 2, 3, rng);
    init_lstm(p, "b", 2, 3, rng);
    std::vector<Tensor> xs(5, Tensor({1, 2}));
    for (auto& x : xs)
        for (auto& v : x.v) v = rng.uniform(-1.0, 1.0);

    Tape t;
    ParamUse P(t, p);
    std::vector<int> ids, rev_ids;
    for (const auto& x : xs) ids.push_back(t.input(x));
    for (auto it = xs.rbegin(); it != xs.rend(); ++it) rev_ids.push_back(t.input(*it));
    BiStreams a = bilstm_run(t, P, "f", "b", ids, 3);
    BiStreams b = bilstm_run(t, P, "b", "f", rev_ids, 3);
    int n = int(xs.size());
    for (int i = 0; i < n; ++i) {
        CHECK(t.value(a.fwd[std::size_t(i)]).v == t.value(b.bwd[std::size_t(n - 1 - i)]).v);
        CHECK(t.value(a.bwd[std::size_t(i)]).v == t.value(b.fwd[std::size_t(n - 1 - i)]).v);
    }
}

TEST_CASE("sgd") {
    ParamStore p;
    p.define("w", Tensor({1, 1}, {1.0}));
    GradMap g;
    g.emplace("w", Tensor({1, 1}, {2.0}));
    SUBCASE("worked example: p=1, g=2, lr=0.5 lands on zero") {
        sgd_step(p, g, 0.5);
        CHECK(p.at("w").v[0] == 0.0);
    }
    SUBCASE("lr zero is a no-op") {
        sgd_step(p, g, 0.0);
        CHECK(p.at("w").v[0] == 1.0);
    }
    SUBCASE("monotone descent on a convex quadratic") {
        // L(w) = (w - 3)^2, dL/dw = 2 (w - 3), lr below 1/curvature
        double prev = 1e300;
        for (int i = 0; i < 50; ++i) {
            double w = p.at("w").v[0];
            double loss = (w - 3.0) * (w - 3.0);
            CHECK(loss <= prev);
            prev = loss;
            GradMap gr;
            gr.emplace("w", Tensor({1, 1}, {2.0 * (w - 3.0)}));
            sgd_step(p, gr, 0.1);
        }
        CHECK(p.at("w").v[0] == doctest::Approx(3.0).epsilon(1e-3));
    }
    SUBCASE("shape mismatch rejected") {
        GradMap bad;
        bad.emplace("w", Tensor({1, 2}));
        CHECK_THROWS_AS(sgd_step(p, bad, 0.1), std::invalid_argument);
    }
}

TEST_CASE("adam converges on a quadratic and is deterministic") {
    auto run = [](std::uint64_t seed) {
        ParamStore p;
        Rng rng(seed);
        p.define("w", Tensor({1, 4}, {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                                      rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)}));
        Adam opt(0.05);
        for (int i = 0; i < 300; ++i) {
            GradMap g;
            Tensor gw({1, 4});
            for (int j = 0; j < 4; ++j) gw.at(0, j) = 2.0 * (p.at("w").at(0, j) - double(j));
            g.emplace("w", gw);
            opt.step(p, g);
        }
        return p.at("w");
    };
    Tensor w1 = run(11), w2 = run(11);
    CHECK(w1.v == w2.v);  // bit-identical training
    for (int j = 0; j < 4; ++j) CHECK(w1.at(0, j) == doctest::Approx(double(j)).epsilon(1e-3));
}

TEST_CASE("param store semantics") {
    ParamStore p;
    p.define("a", Tensor({2, 2}));
    CHECK_THROWS_AS(p.define("a", Tensor({1, 1})), std::invalid_argument);
    CHECK_THROWS_WITH_AS(p.at("missing"), doctest::Contains("missing"), std::invalid_argument);
    CHECK(p.total_params() == 4);
    CHECK(p.has("a"));
}
