#pragma once

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmvr/core.hpp"

namespace mmvr::nn {

// Dense row-major tensor of 64-bit floats. Rank is 1 or 2 almost everywhere;
// higher-rank data is flattened before it reaches the tape.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        v.assign(std::size_t(numel_of(shape)), 0.0);
    }
    Tensor(std::vector<int> s, std::vector<double> vals) : shape(std::move(s)), v(std::move(vals)) {
        if (std::size_t(numel_of(shape)) != v.size())
            throw std::invalid_argument("tensor shape/value mismatch");
    }

    static long numel_of(const std::vector<int>& s) {
        long n = 1;
        for (int d : s) {
            if (d < 0) throw std::invalid_argument("negative dimension");
            n *= d;
        }
        return n;
    }

    long numel() const { return long(v.size()); }
    int rows() const { return shape.empty() ? 1 : shape[0]; }
    int cols() const { return shape.size() < 2 ? int(v.size()) / rows() : shape[1]; }

    double& at(int r, int c) { return v[std::size_t(r) * std::size_t(cols()) + std::size_t(c)]; }
    double at(int r, int c) const { return v[std::size_t(r) * std::size_t(cols()) + std::size_t(c)]; }

    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
    static Tensor full(std::vector<int> s, double x) {
        Tensor t(std::move(s));
        for (auto& e : t.v) e = x;
        return t;
    }
    static Tensor row(std::vector<double> vals) {
        int n = int(vals.size());
        return Tensor({1, n}, std::move(vals));
    }
    // Glorot-uniform init in +-sqrt(6/(fan_in+fan_out)), seeded.
    static Tensor glorot(int fan_in, int fan_out, Rng& rng) {
        Tensor t({fan_in, fan_out});
        double b = std::sqrt(6.0 / double(fan_in + fan_out));
        for (auto& e : t.v) e = rng.uniform(-b, b);
        return t;
    }

    bool finite() const {
        for (double e : v)
            if (!std::isfinite(e)) return false;
        return true;
    }
    std::string shape_str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < shape.size(); ++i)
            s += std::to_string(shape[i]) + (i + 1 < shape.size() ? "," : "");
        return s + ")";
    }
};

inline bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

}  // namespace mmvr::nn
