#pragma once

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include "mmvr/nn/layers.hpp"

namespace mmvr::nn {

// A scalar loss as a function of the current parameter values. The builder
// is re-invoked for every perturbed evaluation, so it must be pure in the
// store contents.
using LossFn = std::function<double(const ParamStore&)>;
using LossGradFn = std::function<std::pair<double, GradMap>(const ParamStore&)>;

struct GradCheckBlock {
    std::string name;
    double max_rel_err = 0.0;
    bool pass = true;
};

struct GradCheckReport {
    std::vector<GradCheckBlock> blocks;
    double max_rel_err = 0.0;
    bool pass = true;
    std::string worst_block;
};

inline double rel_err(double analytic, double numeric) {
    double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / denom;
}

// Central finite differences at step h against the analytic gradients.
inline GradCheckReport grad_check(const LossGradFn& loss_grad, ParamStore& params, double tol,
                                  double h = 1e-5) {
    auto [loss0, grads] = loss_grad(params);
    (void)loss0;
    GradCheckReport report;
    for (auto& [name, block] : params.blocks) {
        GradCheckBlock r;
        r.name = name;
        const Tensor* g = grads.count(name) ? &grads.at(name) : nullptr;
        for (std::size_t i = 0; i < block.v.size(); ++i) {
            double saved = block.v[i];
            block.v[i] = saved + h;
            double lp = loss_grad(params).first;
            block.v[i] = saved - h;
            double lm = loss_grad(params).first;
            block.v[i] = saved;
            double numeric = (lp - lm) / (2.0 * h);
            double analytic = g ? g->v[i] : 0.0;
            r.max_rel_err = std::max(r.max_rel_err, rel_err(analytic, numeric));
        }
        r.pass = r.max_rel_err <= tol;
        if (r.max_rel_err > report.max_rel_err) {
            report.max_rel_err = r.max_rel_err;
            report.worst_block = name;
        }
        report.pass = report.pass && r.pass;
        report.blocks.push_back(std::move(r));
    }
    return report;
}

// Convenience wrapper for graphs built directly on a tape.
inline LossGradFn tape_loss(const std::function<int(Tape&, ParamUse&)>& build) {
    return [build](const ParamStore& params) {
        Tape tape;
        ParamUse use(tape, params);
        int loss = build(tape, use);
        tape.backward(loss);
        return std::make_pair(tape.value(loss).v[0], use.grads());
    };
}

}  // namespace mmvr::nn
