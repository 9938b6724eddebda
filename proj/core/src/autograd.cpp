#include "flowlab/autograd.hpp"

#include <cmath>
#include <unordered_set>

#include "flowlab/error.hpp"

namespace flowlab::ad {

namespace detail {

Tensor& Node::ensure_grad() {
    if (grad.size() != value.size()) grad = Tensor::zeros(value.shape());
    return grad;
}

}  // namespace detail

using detail::Node;

Var Var::leaf(Tensor value, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    n->is_leaf = true;
    return Var(std::move(n));
}

const Tensor& Var::value() const {
    if (!node_) throw error("Var::value: empty handle");
    return node_->value;
}

Tensor& Var::mutable_value() {
    if (!node_) throw error("Var::mutable_value: empty handle");
    return node_->value;
}

const Tensor& Var::grad() const {
    if (!node_) throw error("Var::grad: empty handle");
    if (node_->grad.size() != node_->value.size()) {
        throw error("Var::grad: no gradient accumulated; run backward first");
    }
    return node_->grad;
}

bool Var::has_grad() const {
    return node_ && node_->grad.size() == node_->value.size();
}

bool Var::requires_grad() const {
    return node_ && node_->requires_grad;
}

void Var::zero_grad() {
    if (node_ && node_->grad.size() == node_->value.size()) node_->grad.set_zero();
}

Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backprop) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    bool any_grad = false;
    for (const Var& p : parents) {
        if (p.node() && p.node()->requires_grad) any_grad = true;
    }
    n->requires_grad = any_grad;
    if (any_grad) {
        n->parents.reserve(parents.size());
        for (const Var& p : parents) n->parents.push_back(p.node());
        n->backprop = std::move(backprop);
    }
    return Var(std::move(n));
}

namespace {

// Unary elementwise helper: value = f(a), backprop dA += dOut * dfda(a, out).
template <typename F, typename DF>
Var unary_op(const Var& a, F&& f, DF&& dfda) {
    const Tensor& av = a.value();
    Tensor out(av.shape());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
    auto an = a.node();
    return make_op(std::move(out), {a}, [an, dfda](Node& self) {
        if (!an->requires_grad) return;
        Tensor& ga = an->ensure_grad();
        const Tensor& g = self.grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] * dfda(an->value[i], self.value[i]);
        }
    });
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows()) {
        throw shape_error("matmul: incompatible shapes " + av.shape_str() + " x " +
                          bv.shape_str());
    }
    const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
    Tensor out({m, n});
    const double* A = av.data();
    const double* B = bv.data();
    double* C = out.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t l = 0; l < k; ++l) {
            const double ail = A[i * k + l];
            if (ail == 0.0) continue;
            const double* Bl = B + l * n;
            double* Ci = C + i * n;
            for (std::size_t j = 0; j < n; ++j) Ci[j] += ail * Bl[j];
        }
    }
    auto an = a.node(), bn = b.node();
    return make_op(std::move(out), {a, b}, [an, bn, m, k, n](Node& self) {
        const double* G = self.grad.data();
        if (an->requires_grad) {
            // dA = G * B^T
            Tensor& ga = an->ensure_grad();
            const double* B = bn->value.data();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t l = 0; l < k; ++l) {
                    const double* Gi = G + i * n;
                    const double* Bl = B + l * n;
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) acc += Gi[j] * Bl[j];
                    ga[i * k + l] += acc;
                }
            }
        }
        if (bn->requires_grad) {
            // dB = A^T * G
            Tensor& gb = bn->ensure_grad();
            const double* A = an->value.data();
            for (std::size_t i = 0; i < m; ++i) {
                const double* Gi = G + i * n;
                for (std::size_t l = 0; l < k; ++l) {
                    const double ail = A[i * k + l];
                    if (ail == 0.0) continue;
                    double* gbl = gb.data() + l * n;
                    for (std::size_t j = 0; j < n; ++j) gbl[j] += ail * Gi[j];
                }
            }
        }
    });
}

Var add(const Var& a, const Var& b) {
    check_same_shape(a.value(), b.value(), "add");
    Tensor out(a.value().shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
    auto an = a.node(), bn = b.node();
    return make_op(std::move(out), {a, b}, [an, bn](Node& self) {
        const Tensor& g = self.grad;
        if (an->requires_grad) {
            Tensor& ga = an->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (bn->requires_grad) {
            Tensor& gb = bn->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        }
    });
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a.value(), b.value(), "sub");
    Tensor out(a.value().shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
    auto an = a.node(), bn = b.node();
    return make_op(std::move(out), {a, b}, [an, bn](Node& self) {
        const Tensor& g = self.grad;
        if (an->requires_grad) {
            Tensor& ga = an->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (bn->requires_grad) {
            Tensor& gb = bn->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    check_same_shape(a.value(), b.value(), "mul");
    Tensor out(a.value().shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
    auto an = a.node(), bn = b.node();
    return make_op(std::move(out), {a, b}, [an, bn](Node& self) {
        const Tensor& g = self.grad;
        if (an->requires_grad) {
            Tensor& ga = an->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bn->value[i];
        }
        if (bn->requires_grad) {
            Tensor& gb = bn->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * an->value[i];
        }
    });
}

Var add_rowvec(const Var& a, const Var& bias) {
    const Tensor& av = a.value();
    const Tensor& bv = bias.value();
    if (av.rank() != 2 || bv.rank() != 1 || bv.size() != av.cols()) {
        throw shape_error("add_rowvec: shapes " + av.shape_str() + " + " + bv.shape_str());
    }
    const std::size_t m = av.rows(), n = av.cols();
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = av[i * n + j] + bv[j];
    }
    auto an = a.node(), bn = bias.node();
    return make_op(std::move(out), {a, bias}, [an, bn, m, n](Node& self) {
        const Tensor& g = self.grad;
        if (an->requires_grad) {
            Tensor& ga = an->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (bn->requires_grad) {
            Tensor& gb = bn->ensure_grad();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
            }
        }
    });
}

Var scale(const Var& a, double c) {
    return unary_op(
        a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var add_scalar(const Var& a, double c) {
    return unary_op(
        a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var neg(const Var& a) {
    return scale(a, -1.0);
}

Var square(const Var& a) {
    return unary_op(
        a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var sqrt_(const Var& a) {
    return unary_op(
        a, [](double x) { return std::sqrt(x); },
        [](double, double y) { return 0.5 / y; });
}

Var exp_(const Var& a) {
    return unary_op(
        a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log_(const Var& a) {
    return unary_op(
        a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var silu(const Var& a) {
    return unary_op(
        a,
        [](double x) { return x / (1.0 + std::exp(-x)); },
        [](double x, double) {
            const double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 + x * (1.0 - s));
        });
}

Var relu(const Var& a) {
    return unary_op(
        a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var tanh_(const Var& a) {
    return unary_op(
        a, [](double x) { return std::tanh(x); },
        [](double, double y) { return 1.0 - y * y; });
}

Var sum_rows(const Var& a) {
    const Tensor& av = a.value();
    if (av.rank() != 2) throw shape_error("sum_rows: expected rank 2, got " + av.shape_str());
    const std::size_t m = av.rows(), n = av.cols();
    Tensor out({m});
    for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += av[i * n + j];
        out[i] = acc;
    }
    auto an = a.node();
    return make_op(std::move(out), {a}, [an, m, n](Node& self) {
        if (!an->requires_grad) return;
        Tensor& ga = an->ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
            const double gi = self.grad[i];
            for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += gi;
        }
    });
}

Var sum_all(const Var& a) {
    const Tensor& av = a.value();
    double acc = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) acc += av[i];
    auto an = a.node();
    return make_op(Tensor::scalar(acc), {a}, [an](Node& self) {
        if (!an->requires_grad) return;
        Tensor& ga = an->ensure_grad();
        const double g = self.grad[0];
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
    });
}

Var mean_all(const Var& a) {
    const std::size_t n = a.value().size();
    if (n == 0) throw shape_error("mean_all: empty tensor");
    return scale(sum_all(a), 1.0 / static_cast<double>(n));
}

Var mul_const(const Var& a, const Tensor& c) {
    check_same_shape(a.value(), c, "mul_const");
    Tensor out(a.value().shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * c[i];
    auto an = a.node();
    Tensor ckeep = c;
    return make_op(std::move(out), {a}, [an, ckeep = std::move(ckeep)](Node& self) {
        if (!an->requires_grad) return;
        Tensor& ga = an->ensure_grad();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * ckeep[i];
    });
}

Var add_const(const Var& a, const Tensor& c) {
    check_same_shape(a.value(), c, "add_const");
    Tensor out(a.value().shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + c[i];
    auto an = a.node();
    return make_op(std::move(out), {a}, [an](Node& self) {
        if (!an->requires_grad) return;
        Tensor& ga = an->ensure_grad();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
    });
}

Var scale_rows(const Var& a, const Tensor& col) {
    const Tensor& av = a.value();
    if (col.rank() != 1) throw shape_error("scale_rows: col must be rank 1");
    if (av.rank() == 1) {
        check_same_shape(av, col, "scale_rows");
        return mul_const(a, col);
    }
    if (av.rank() != 2 || col.size() != av.rows()) {
        throw shape_error("scale_rows: shapes " + av.shape_str() + " vs " + col.shape_str());
    }
    const std::size_t m = av.rows(), n = av.cols();
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = av[i * n + j] * col[i];
    }
    auto an = a.node();
    Tensor ckeep = col;
    return make_op(std::move(out), {a}, [an, ckeep = std::move(ckeep), m, n](Node& self) {
        if (!an->requires_grad) return;
        Tensor& ga = an->ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
            const double ci = ckeep[i];
            for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += self.grad[i * n + j] * ci;
        }
    });
}

Var circular_conv(const Var& a, std::span<const double> kernel) {
    const Tensor& av = a.value();
    if (av.rank() != 2) throw shape_error("circular_conv: expected rank 2");
    if (kernel.size() % 2 == 0) throw shape_error("circular_conv: kernel length must be odd");
    const std::size_t m = av.rows(), n = av.cols();
    const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(kernel.size() / 2);
    const std::ptrdiff_t nn = static_cast<std::ptrdiff_t>(n);
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        const double* x = av.data() + i * n;
        double* y = out.data() + i * n;
        for (std::ptrdiff_t j = 0; j < nn; ++j) {
            double acc = 0.0;
            for (std::ptrdiff_t k = -r; k <= r; ++k) {
                const std::ptrdiff_t idx = ((j + k) % nn + nn) % nn;
                acc += kernel[static_cast<std::size_t>(k + r)] * x[idx];
            }
            y[j] = acc;
        }
    }
    auto an = a.node();
    std::vector<double> kv(kernel.begin(), kernel.end());
    return make_op(std::move(out), {a}, [an, kv = std::move(kv), m, n](Node& self) {
        if (!an->requires_grad) return;
        // Adjoint of circular convolution is correlation: flip the kernel.
        Tensor& ga = an->ensure_grad();
        const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(kv.size() / 2);
        const std::ptrdiff_t nn = static_cast<std::ptrdiff_t>(n);
        for (std::size_t i = 0; i < m; ++i) {
            const double* g = self.grad.data() + i * n;
            double* gx = ga.data() + i * n;
            for (std::ptrdiff_t j = 0; j < nn; ++j) {
                double acc = 0.0;
                for (std::ptrdiff_t k = -r; k <= r; ++k) {
                    const std::ptrdiff_t idx = ((j - k) % nn + nn) % nn;
                    acc += kv[static_cast<std::size_t>(k + r)] * g[idx];
                }
                gx[j] += acc;
            }
        }
    });
}

Var dropout(const Var& a, double p, Rng& rng) {
    if (p < 0.0 || p >= 1.0) throw error("dropout: p must be in [0, 1)");
    const Tensor& av = a.value();
    if (p == 0.0) {
        // Identity, but still a node so the call sites stay uniform.
        return add_scalar(a, 0.0);
    }
    const double keep = 1.0 - p;
    const double inv_keep = 1.0 / keep;
    Tensor mask(av.shape());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = rng.uniform() < p ? 0.0 : inv_keep;
    }
    return mul_const(a, mask);
}

void backward(const Var& loss) {
    auto root = loss.node();
    if (!root) throw error("backward: empty loss handle");
    if (loss.value().size() != 1) {
        throw error("backward: loss must be scalar, got shape " + loss.value().shape_str());
    }
    if (root->consumed) {
        throw error("backward: graph already consumed; run a forward pass first");
    }
    if (!root->requires_grad) {
        throw error("backward: loss does not depend on any trainable parameter");
    }

    // Depth-first topological order over the recorded parents.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    seen.insert(root.get());
    while (!stack.empty()) {
        Node* node = stack.back().first;
        const std::size_t next = stack.back().second;
        if (next < node->parents.size()) {
            stack.back().second = next + 1;
            Node* p = node->parents[next].get();
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root->ensure_grad();
    root->grad.fill(1.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        if (node->backprop && node->grad.size() == node->value.size()) {
            node->backprop(*node);
        }
    }
    // Consume the non-leaf graph: break edges, free closures and temps.
    for (Node* node : order) {
        if (!node->is_leaf) {
            node->backprop = nullptr;
            node->parents.clear();
            node->grad = Tensor();
            node->consumed = true;
        }
    }
    root->consumed = true;
}

}  // namespace flowlab::ad
