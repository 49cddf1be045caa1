#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmvr/nn/tensor.hpp"

namespace mmvr::nn {

// Reverse-mode tape. Ops append nodes in topological order; backward() walks
// the node list in reverse, so each recorded op is visited exactly once.
class Tape {
public:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void(Tape&, int)> back;  // empty for leaves
    };

    int input(Tensor t) { return push(std::move(t), {}); }

    const Tensor& value(int id) const { return nodes_[check(id)].value; }
    const Tensor& grad(int id) const { return nodes_[check(id)].grad; }
    Tensor& grad_mut(int id) { return nodes_[check(id)].grad; }
    int size() const { return int(nodes_.size()); }

    int custom(Tensor value, std::function<void(Tape&, int)> back) {
        return push(std::move(value), std::move(back));
    }

    // ---- arithmetic ----

    int matmul(int a, int b) {
        const Tensor& A = value(a);
        const Tensor& B = value(b);
        int m = A.rows(), k = A.cols(), n = B.cols();
        if (B.rows() != k)
            throw std::invalid_argument("matmul shape mismatch " + A.shape_str() + " x " + B.shape_str());
        Tensor C({m, n});
        for (int i = 0; i < m; ++i)
            for (int p = 0; p < k; ++p) {
                double av = A.at(i, p);
                if (av == 0.0) continue;
                for (int j = 0; j < n; ++j) C.at(i, j) += av * B.at(p, j);
            }
        return push(std::move(C), [a, b, m, k, n](Tape& t, int self) {
            const Tensor& G = t.grad(self);
            const Tensor& A = t.value(a);
            const Tensor& B = t.value(b);
            Tensor& dA = t.grad_mut(a);
            Tensor& dB = t.grad_mut(b);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) {
                    double g = G.at(i, j);
                    if (g == 0.0) continue;
                    for (int p = 0; p < k; ++p) {
                        dA.at(i, p) += g * B.at(p, j);
                        dB.at(p, j) += g * A.at(i, p);
                    }
                }
        });
    }

    // Same-shape add, or row-broadcast when b is (1, n).
    int add(int a, int b) {
        const Tensor& A = value(a);
        const Tensor& B = value(b);
        Tensor C = A;
        if (same_shape(A, B)) {
            for (std::size_t i = 0; i < C.v.size(); ++i) C.v[i] += B.v[i];
            return push(std::move(C), [a, b](Tape& t, int self) {
                const Tensor& G = t.grad(self);
                accumulate(t.grad_mut(a), G);
                accumulate(t.grad_mut(b), G);
            });
        }
        if (B.rows() == 1 && B.cols() == A.cols()) {
            for (int i = 0; i < A.rows(); ++i)
                for (int j = 0; j < A.cols(); ++j) C.at(i, j) += B.at(0, j);
            return push(std::move(C), [a, b](Tape& t, int self) {
                const Tensor& G = t.grad(self);
                accumulate(t.grad_mut(a), G);
                Tensor& dB = t.grad_mut(b);
                for (int i = 0; i < G.rows(); ++i)
                    for (int j = 0; j < G.cols(); ++j) dB.at(0, j) += G.at(i, j);
            });
        }
        throw std::invalid_argument("add shape mismatch " + A.shape_str() + " + " + B.shape_str());
    }

    int sub(int a, int b) { return add(a, scale(b, -1.0)); }

    int mul(int a, int b) {
        const Tensor& A = value(a);
        const Tensor& B = value(b);
        if (!same_shape(A, B))
            throw std::invalid_argument("mul shape mismatch " + A.shape_str() + " * " + B.shape_str());
        Tensor C = A;
        for (std::size_t i = 0; i < C.v.size(); ++i) C.v[i] *= B.v[i];
        return push(std::move(C), [a, b](Tape& t, int self) {
            const Tensor& G = t.grad(self);
            const Tensor& A = t.value(a);
            const Tensor& B = t.value(b);
            Tensor& dA = t.grad_mut(a);
            Tensor& dB = t.grad_mut(b);
            for (std::size_t i = 0; i < G.v.size(); ++i) {
                dA.v[i] += G.v[i] * B.v[i];
                dB.v[i] += G.v[i] * A.v[i];
            }
        });
    }

    int scale(int a, double s) {
        Tensor C = value(a);
        for (auto& e : C.v) e *= s;
        return push(std::move(C), [a, s](Tape& t, int self) {
            const Tensor& G = t.grad(self);
            Tensor& dA = t.grad_mut(a);
            for (std::size_t i = 0; i < G.v.size(); ++i) dA.v[i] += s * G.v[i];
        });
    }

    int add_scalar(int a, double s) {
        Tensor C = value(a);
        for (auto& e : C.v) e += s;
        return push(std::move(C), [a](Tape& t, int self) {
            accumulate(t.grad_mut(a), t.grad(self));
        });
    }

    // ---- elementwise nonlinearities ----

    int tanh_(int a) {
        Tensor C = value(a);
        for (auto& e : C.v) e = std::tanh(e);
        return push(std::move(C), [a](Tape& t, int self) {
            const Tensor& G = t.grad(self);
            const Tensor& Y = t.value(self);
            Tensor& dA = t.grad_mut(a);
            for (std::size_t i = 0; i < G.v.size(); ++i) dA.v[i] += G.v[i] * (1.0 - Y.v[i] * Y.v[i]);
        });
    }

    int sigmoid_(int a) {
        Tensor C = value(a);
        for (auto& e : C.v) e = 1.0 / (1.0 + std::exp(-e));
        return push(std::move(C), [a](Tape& t, int self) {
            const Tensor& G = t.grad(self);
            const Tensor& Y = t.value(self);
            Tensor& dA = t.grad_mut(a);
            for (std::size_t i = 0; i < G.v.size(); ++i) dA.v[i] += G.v[i] * Y.v[i] * (1.0 - Y.v[i]);
        });
    }

    int relu_(int a) {
        Tensor C = value(a);
        for (auto& e : C.v) e = e > 0.0 ? e : 0.0;
        return push(std::move(C), [a](Tape& t, int self) {
            const Tensor& G = t.grad(self);
            const Tensor& X = t.value(a);
            Tensor& dA = t.grad_mut(a);
            for (std::size_t i = 0; i < G.v.size(); ++i)
                if (X.v[i] > 0.0) dA.v[i] += G.v[i];
        });
    }

    int exp_(int a) {
        Tensor C = value(a);
        for (auto& e : C.v) e = std::exp(e);
        return push(std::move(C), [a](Tape& t, int self) {
            const Tensor& G = t.grad(self);
            const Tensor& Y = t.value(self);
            Tensor& dA = t.grad_mut(a);
            for (std::size_t i = 0; i < G.v.size(); ++i) dA.v[i] += G.v[i] * Y.v[i];
        });
    }

    int log_(int a) {
        Tensor C = value(a);
        for (auto& e : C.v) e = std::log(e);
        return push(std::move(C), [a](Tape& t, int self) {
            const Tensor& G = t.grad(self);
            const Tensor& X = t.value(a);
            Tensor& dA = t.grad_mut(a);
            for (std::size_t i = 0; i < G.v.size(); ++i) dA.v[i] += G.v[i] / X.v[i];
        });
    }

    int square(int a) { return mul(a, a); }

    // ---- row-structured ops ----

    int softmax_rows(int a) {
        Tensor C = value(a);
        int R = C.rows(), N = C.cols();
        for (int i = 0; i < R; ++i) {
            double mx = C.at(i, 0);
            for (int j = 1; j < N; ++j) mx = std::max(mx, C.at(i, j));
            double s = 0.0;
            for (int j = 0; j < N; ++j) {
                C.at(i, j) = std::exp(C.at(i, j) - mx);
                s += C.at(i, j);
            }
            for (int j = 0; j < N; ++j) C.at(i, j) /= s;
        }
        return push(std::move(C), [a, R, N](Tape& t, int self) {
            const Tensor& G = t.grad(self);
            const Tensor& Y = t.value(self);
            Tensor& dA = t.grad_mut(a);
            for (int i = 0; i < R; ++i) {
                double dot = 0.0;
                for (int j = 0; j < N; ++j) dot += G.at(i, j) * Y.at(i, j);
                for (int j = 0; j < N; ++j) dA.at(i, j) += Y.at(i, j) * (G.at(i, j) - dot);
            }
        });
    }

    int log_softmax_rows(int a) {
        Tensor C = value(a);
        int R = C.rows(), N = C.cols();
        for (int i = 0; i < R; ++i) {
            double mx = C.at(i, 0);
            for (int j = 1; j < N; ++j) mx = std::max(mx, C.at(i, j));
            double s = 0.0;
            for (int j = 0; j < N; ++j) s += std::exp(C.at(i, j) - mx);
            double lse = mx + std::log(s);
            for (int j = 0; j < N; ++j) C.at(i, j) -= lse;
        }
        return push(std::move(C), [a, R, N](Tape& t, int self) {
            const Tensor& G = t.grad(self);
            const Tensor& Y = t.value(self);
            Tensor& dA = t.grad_mut(a);
            for (int i = 0; i < R; ++i) {
                double gs = 0.0;
                for (int j = 0; j < N; ++j) gs += G.at(i, j);
                for (int j = 0; j < N; ++j) dA.at(i, j) += G.at(i, j) - std::exp(Y.at(i, j)) * gs;
            }
        });
    }

    // Column-wise max over rows -> (1, n). Ties route to the lowest row index.
    int max_rows(int a) {
        const Tensor& A = value(a);
        int R = A.rows(), N = A.cols();
        if (R == 0) throw std::invalid_argument("max_rows of empty tensor");
        Tensor C({1, N});
        std::vector<int> arg(std::size_t(N), 0);
        for (int j = 0; j < N; ++j) {
            double mx = A.at(0, j);
            for (int i = 1; i < R; ++i)
                if (A.at(i, j) > mx) { mx = A.at(i, j); arg[std::size_t(j)] = i; }
            C.at(0, j) = mx;
        }
        return push(std::move(C), [a, N, arg = std::move(arg)](Tape& t, int self) {
            const Tensor& G = t.grad(self);
            Tensor& dA = t.grad_mut(a);
            for (int j = 0; j < N; ++j) dA.at(arg[std::size_t(j)], j) += G.at(0, j);
        });
    }

    int mean_rows(int a) {
        const Tensor& A = value(a);
        int R = A.rows(), N = A.cols();
        if (R == 0) throw std::invalid_argument("mean_rows of empty tensor");
        Tensor C({1, N});
        for (int j = 0; j < N; ++j) {
            double s = 0.0;
            for (int i = 0; i < R; ++i) s += A.at(i, j);
            C.at(0, j) = s / double(R);
        }
        return push(std::move(C), [a, R, N](Tape& t, int self) {
            const Tensor& G = t.grad(self);
            Tensor& dA = t.grad_mut(a);
            for (int i = 0; i < R; ++i)
                for (int j = 0; j < N; ++j) dA.at(i, j) += G.at(0, j) / double(R);
        });
    }

    int sum_all(int a) {
        const Tensor& A = value(a);
        double s = 0.0;
        for (double e : A.v) s += e;
        return push(Tensor({1, 1}, {s}), [a](Tape& t, int self) {
            double g = t.grad(self).v[0];
            Tensor& dA = t.grad_mut(a);
            for (auto& e : dA.v) e += g;
        });
    }

    int mean_all(int a) {
        long n = value(a).numel();
        return scale(sum_all(a), 1.0 / double(n));
    }

    // ---- structural ops ----

    int concat_cols(const std::vector<int>& ids) {
        if (ids.empty()) throw std::invalid_argument("concat_cols of nothing");
        int R = value(ids[0]).rows();
        int N = 0;
        for (int id : ids) {
            if (value(id).rows() != R) throw std::invalid_argument("concat_cols row mismatch");
            N += value(id).cols();
        }
        Tensor C({R, N});
        int off = 0;
        for (int id : ids) {
            const Tensor& A = value(id);
            for (int i = 0; i < R; ++i)
                for (int j = 0; j < A.cols(); ++j) C.at(i, off + j) = A.at(i, j);
            off += A.cols();
        }
        return push(std::move(C), [ids, R](Tape& t, int self) {
            const Tensor& G = t.grad(self);
            int off = 0;
            for (int id : ids) {
                Tensor& dA = t.grad_mut(id);
                int c = dA.cols();
                for (int i = 0; i < R; ++i)
                    for (int j = 0; j < c; ++j) dA.at(i, j) += G.at(i, off + j);
                off += c;
            }
        });
    }

    int concat_rows(const std::vector<int>& ids) {
        if (ids.empty()) throw std::invalid_argument("concat_rows of nothing");
        int N = value(ids[0]).cols();
        int R = 0;
        for (int id : ids) {
            if (value(id).cols() != N) throw std::invalid_argument("concat_rows col mismatch");
            R += value(id).rows();
        }
        Tensor C({R, N});
        int off = 0;
        for (int id : ids) {
            const Tensor& A = value(id);
            for (int i = 0; i < A.rows(); ++i)
                for (int j = 0; j < N; ++j) C.at(off + i, j) = A.at(i, j);
            off += A.rows();
        }
        return push(std::move(C), [ids, N](Tape& t, int self) {
            const Tensor& G = t.grad(self);
            int off = 0;
            for (int id : ids) {
                Tensor& dA = t.grad_mut(id);
                int r = dA.rows();
                for (int i = 0; i < r; ++i)
                    for (int j = 0; j < N; ++j) dA.at(i, j) += G.at(off + i, j);
                off += r;
            }
        });
    }

    int slice_cols(int a, int c0, int c1) {
        const Tensor& A = value(a);
        int R = A.rows();
        if (c0 < 0 || c1 > A.cols() || c0 >= c1) throw std::invalid_argument("bad slice range");
        Tensor C({R, c1 - c0});
        for (int i = 0; i < R; ++i)
            for (int j = c0; j < c1; ++j) C.at(i, j - c0) = A.at(i, j);
        return push(std::move(C), [a, c0, c1, R](Tape& t, int self) {
            const Tensor& G = t.grad(self);
            Tensor& dA = t.grad_mut(a);
            for (int i = 0; i < R; ++i)
                for (int j = c0; j < c1; ++j) dA.at(i, j) += G.at(i, j - c0);
        });
    }

    int row_of(int a, int r) {
        const Tensor& A = value(a);
        if (r < 0 || r >= A.rows()) throw std::invalid_argument("row index out of range");
        int N = A.cols();
        Tensor C({1, N});
        for (int j = 0; j < N; ++j) C.at(0, j) = A.at(r, j);
        return push(std::move(C), [a, r, N](Tape& t, int self) {
            const Tensor& G = t.grad(self);
            Tensor& dA = t.grad_mut(a);
            for (int j = 0; j < N; ++j) dA.at(r, j) += G.at(0, j);
        });
    }

    // Picks one element per listed (row, col) -> column vector (n, 1).
    int gather(int a, const std::vector<std::pair<int, int>>& idx) {
        const Tensor& A = value(a);
        Tensor C({int(idx.size()), 1});
        for (std::size_t i = 0; i < idx.size(); ++i) C.v[i] = A.at(idx[i].first, idx[i].second);
        return push(std::move(C), [a, idx](Tape& t, int self) {
            const Tensor& G = t.grad(self);
            Tensor& dA = t.grad_mut(a);
            for (std::size_t i = 0; i < idx.size(); ++i)
                dA.at(idx[i].first, idx[i].second) += G.v[i];
        });
    }

    int transpose(int a) {
        const Tensor& A = value(a);
        int R = A.rows(), N = A.cols();
        Tensor C({N, R});
        for (int i = 0; i < R; ++i)
            for (int j = 0; j < N; ++j) C.at(j, i) = A.at(i, j);
        return push(std::move(C), [a, R, N](Tape& t, int self) {
            const Tensor& G = t.grad(self);
            Tensor& dA = t.grad_mut(a);
            for (int i = 0; i < R; ++i)
                for (int j = 0; j < N; ++j) dA.at(i, j) += G.at(j, i);
        });
    }

    // Mean cross-entropy of logits rows against integer labels.
    int cross_entropy(int logits, const std::vector<int>& labels) {
        // copy the shape up front: growing the tape below invalidates references
        const int rows = value(logits).rows();
        const int cols = value(logits).cols();
        if (int(labels.size()) != rows)
            throw std::invalid_argument("cross_entropy label count mismatch");
        int ls = log_softmax_rows(logits);
        std::vector<std::pair<int, int>> idx;
        idx.reserve(labels.size());
        for (int i = 0; i < int(labels.size()); ++i) {
            if (labels[i] < 0 || labels[i] >= cols)
                throw std::invalid_argument("cross_entropy label out of range");
            idx.emplace_back(i, labels[i]);
        }
        return scale(mean_all(gather(ls, idx)), -1.0);
    }

    // Seeds the scalar output with gradient 1 and replays the tape backwards.
    void backward(int loss) {
        if (value(loss).numel() != 1) throw std::invalid_argument("backward needs a scalar loss");
        for (auto& n : nodes_) {
            n.grad = Tensor(n.value.shape);
        }
        nodes_[std::size_t(loss)].grad.v[0] = 1.0;
        for (int i = loss; i >= 0; --i) {
            if (nodes_[std::size_t(i)].back) nodes_[std::size_t(i)].back(*this, i);
        }
    }

private:
    std::vector<Node> nodes_;

    int check(int id) const {
        if (id < 0 || id >= int(nodes_.size())) throw std::invalid_argument("stale tape node id");
        return id;
    }

    int push(Tensor value, std::function<void(Tape&, int)> back) {
        if (!value.finite()) throw std::runtime_error("non-finite value on tape");
        nodes_.push_back(Node{std::move(value), Tensor{}, std::move(back)});
        return int(nodes_.size()) - 1;
    }

    static void accumulate(Tensor& dst, const Tensor& src) {
        for (std::size_t i = 0; i < dst.v.size(); ++i) dst.v[i] += src.v[i];
    }
};

}  // namespace mmvr::nn
