#pragma once

#include <cmath>

#include "mmvr/nn/layers.hpp"

namespace mmvr::nn {

// Plain gradient descent: p' = p - lr * g. Ascent objectives are expressed
// as descent on the negated objective by callers.
inline void sgd_step(ParamStore& params, const GradMap& grads, double lr) {
    for (const auto& [name, g] : grads) {
        Tensor& p = params.at(name);
        if (!same_shape(p, g)) throw std::invalid_argument("sgd_step shape mismatch for " + name);
        for (std::size_t i = 0; i < p.v.size(); ++i) p.v[i] -= lr * g.v[i];
    }
}

struct Adam {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long t = 0;
    std::map<std::string, Tensor> m, v;

    void step(ParamStore& params, const GradMap& grads) {
        ++t;
        for (const auto& [name, g] : grads) {
            Tensor& p = params.at(name);
            Tensor& mi = m.try_emplace(name, Tensor(p.shape)).first->second;
            Tensor& vi = v.try_emplace(name, Tensor(p.shape)).first->second;
            double bc1 = 1.0 - std::pow(beta1, double(t));
            double bc2 = 1.0 - std::pow(beta2, double(t));
            for (std::size_t i = 0; i < p.v.size(); ++i) {
                mi.v[i] = beta1 * mi.v[i] + (1.0 - beta1) * g.v[i];
                vi.v[i] = beta2 * vi.v[i] + (1.0 - beta2) * g.v[i] * g.v[i];
                p.v[i] -= lr * (mi.v[i] / bc1) / (std::sqrt(vi.v[i] / bc2) + eps);
            }
        }
    }
};

}  // namespace mmvr::nn
