#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mmvr/nn/tape.hpp"

namespace mmvr::nn {

// Named parameter blocks. Iteration order is lexicographic (std::map), which
// keeps every pass and every checkpoint deterministic.
struct ParamStore {
    std::map<std::string, Tensor> blocks;

    bool has(const std::string& name) const { return blocks.count(name) != 0; }

    Tensor& at(const std::string& name) {
        auto it = blocks.find(name);
        if (it == blocks.end()) throw std::invalid_argument("unknown parameter block: " + name);
        return it->second;
    }
    const Tensor& at(const std::string& name) const {
        auto it = blocks.find(name);
        if (it == blocks.end()) throw std::invalid_argument("unknown parameter block: " + name);
        return it->second;
    }

    Tensor& define(const std::string& name, Tensor init) {
        auto [it, inserted] = blocks.emplace(name, std::move(init));
        if (!inserted) throw std::invalid_argument("duplicate parameter block: " + name);
        return it->second;
    }

    long total_params() const {
        long n = 0;
        for (const auto& [k, t] : blocks) n += t.numel();
        return n;
    }
};

// Tracks which tape leaves correspond to which parameter blocks within a
// single forward pass, so gradients can be collected by name afterwards.
class ParamUse {
public:
    ParamUse(Tape& tape, const ParamStore& store) : tape_(tape), store_(store) {}

    int operator()(const std::string& name) {
        auto it = ids_.find(name);
        if (it != ids_.end()) return it->second;
        int id = tape_.input(store_.at(name));
        ids_.emplace(name, id);
        return id;
    }

    std::map<std::string, Tensor> grads() const {
        std::map<std::string, Tensor> g;
        for (const auto& [name, id] : ids_) g.emplace(name, tape_.grad(id));
        return g;
    }

private:
    Tape& tape_;
    const ParamStore& store_;
    std::map<std::string, int> ids_;
};

using GradMap = std::map<std::string, Tensor>;

inline void accumulate_grads(GradMap& into, const GradMap& g) {
    for (const auto& [name, t] : g) {
        auto it = into.find(name);
        if (it == into.end())
            into.emplace(name, t);
        else
            for (std::size_t i = 0; i < t.v.size(); ++i) it->second.v[i] += t.v[i];
    }
}

// ---- layer builders ----

inline void init_dense(ParamStore& p, const std::string& prefix, int in, int out, Rng& rng) {
    p.define(prefix + ".W", Tensor::glorot(in, out, rng));
    p.define(prefix + ".b", Tensor({1, out}));
}

inline int dense(Tape& t, ParamUse& P, const std::string& prefix, int x) {
    return t.add(t.matmul(x, P(prefix + ".W")), P(prefix + ".b"));
}

// Gated LSTM cell, gate order [i, f, g, o]; forget-gate bias initialized to 1.
inline void init_lstm(ParamStore& p, const std::string& prefix, int in, int hidden, Rng& rng) {
    p.define(prefix + ".W", Tensor::glorot(in + hidden, 4 * hidden, rng));
    Tensor b({1, 4 * hidden});
    for (int j = hidden; j < 2 * hidden; ++j) b.at(0, j) = 1.0;
    p.define(prefix + ".b", std::move(b));
}

struct LstmState {
    int h;
    int c;
};

inline LstmState lstm_init_state(Tape& t, int hidden) {
    return {t.input(Tensor({1, hidden})), t.input(Tensor({1, hidden}))};
}

inline LstmState lstm_step(Tape& t, ParamUse& P, const std::string& prefix, int x, LstmState s,
                           int hidden) {
    int xh = t.concat_cols({x, s.h});
    int z = t.add(t.matmul(xh, P(prefix + ".W")), P(prefix + ".b"));
    int ig = t.sigmoid_(t.slice_cols(z, 0, hidden));
    int fg = t.sigmoid_(t.slice_cols(z, hidden, 2 * hidden));
    int gg = t.tanh_(t.slice_cols(z, 2 * hidden, 3 * hidden));
    int og = t.sigmoid_(t.slice_cols(z, 3 * hidden, 4 * hidden));
    int c = t.add(t.mul(fg, s.c), t.mul(ig, gg));
    int h = t.mul(og, t.tanh_(c));
    return {h, c};
}

inline std::vector<int> lstm_run(Tape& t, ParamUse& P, const std::string& prefix,
                                 const std::vector<int>& xs, int hidden) {
    LstmState s = lstm_init_state(t, hidden);
    std::vector<int> hs;
    hs.reserve(xs.size());
    for (int x : xs) {
        s = lstm_step(t, P, prefix, x, s, hidden);
        hs.push_back(s.h);
    }
    return hs;
}

struct BiStreams {
    std::vector<int> fwd;  // fwd[t]: forward state after consuming xs[0..t]
    std::vector<int> bwd;  // bwd[t]: backward state after consuming xs[t..end]
};

// Two independent unidirectional passes. Reversing the input while swapping
// the fwd/bwd parameter roles swaps the two streams exactly.
inline BiStreams bilstm_run(Tape& t, ParamUse& P, const std::string& fwd_prefix,
                            const std::string& bwd_prefix, const std::vector<int>& xs, int hidden) {
    BiStreams out;
    out.fwd = lstm_run(t, P, fwd_prefix, xs, hidden);
    std::vector<int> rev(xs.rbegin(), xs.rend());
    std::vector<int> hb = lstm_run(t, P, bwd_prefix, rev, hidden);
    out.bwd.assign(hb.rbegin(), hb.rend());
    return out;
}

}  // namespace mmvr::nn
