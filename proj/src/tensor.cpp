#include "aagc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "aagc/errors.hpp"

namespace aagc {

namespace {

std::string shape_str(const std::vector<std::size_t>& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        os << (i ? "," : "") << s[i];
    }
    os << "]";
    return os.str();
}

void require_same_shape(const TensorPtr& a, const TensorPtr& b, const char* op) {
    if (a->shape != b->shape) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a->shape) + " vs " +
                         shape_str(b->shape));
    }
}

bool is_bias_broadcast(const TensorPtr& a, const TensorPtr& b) {
    return b->shape.size() == 1 && a->shape.size() >= 2 && b->shape[0] == a->shape.back();
}

thread_local bool g_grad_enabled = true;

TensorPtr result_of(std::vector<std::size_t> shape, std::vector<double> values,
                    std::vector<TensorPtr> operands, Tensor::GradFn grad_fn) {
    auto out = std::make_shared<Tensor>();
    out->shape = std::move(shape);
    out->values = std::move(values);
    bool needs_grad = false;
    if (g_grad_enabled) {
        for (const auto& t : operands) {
            needs_grad = needs_grad || t->requires_grad;
        }
    }
    out->requires_grad = needs_grad;
    if (needs_grad) {
        out->parents = std::move(operands);
        out->grad_fn = std::move(grad_fn);
    }
    return out;
}

template <typename F>
TensorPtr unary_map(const TensorPtr& x, F f, Tensor::GradFn grad_fn) {
    std::vector<double> out(x->numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = f(x->values[i]);
    }
    return result_of(x->shape, std::move(out), {x}, std::move(grad_fn));
}

}  // namespace

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        n *= d;
    }
    return n;
}

void Tensor::zero_grad() {
    if (requires_grad) {
        grad.assign(values.size(), 0.0);
    }
}

NoGradGuard::NoGradGuard() : saved_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = saved_; }

bool grad_enabled() { return g_grad_enabled; }

TensorPtr make_tensor(std::vector<std::size_t> shape, std::vector<double> values,
                      bool requires_grad) {
    if (shape.empty()) {
        throw ShapeError("tensor shape must be nonempty");
    }
    for (std::size_t d : shape) {
        if (d == 0) {
            throw ShapeError("tensor dimensions must be positive");
        }
    }
    if (shape_numel(shape) != values.size()) {
        throw ShapeError("value count " + std::to_string(values.size()) +
                         " does not match shape " + shape_str(shape));
    }
    auto t = std::make_shared<Tensor>();
    t->shape = std::move(shape);
    t->values = std::move(values);
    t->requires_grad = requires_grad;
    if (requires_grad) {
        t->grad.assign(t->values.size(), 0.0);
    }
    return t;
}

TensorPtr zeros(std::vector<std::size_t> shape, bool requires_grad) {
    auto n = shape_numel(shape);
    return make_tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

TensorPtr full(std::vector<std::size_t> shape, double value, bool requires_grad) {
    auto n = shape_numel(shape);
    return make_tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
    if (a->shape.size() != 2 || b->shape.size() != 2) {
        throw ShapeError("matmul: operands must be rank-2, got " + shape_str(a->shape) + " and " +
                         shape_str(b->shape));
    }
    const std::size_t m = a->shape[0], k = a->shape[1], n = b->shape[1];
    if (b->shape[0] != k) {
        throw ShapeError("matmul: inner dimensions differ, " + shape_str(a->shape) + " x " +
                         shape_str(b->shape));
    }
    std::vector<double> out(m * n, 0.0);
    {
        const double* pa = a->values.data();
        const double* pb = b->values.data();
        double* pc = out.data();
        for (std::size_t i = 0; i < m; ++i) {
            const double* arow = pa + i * k;
            double* crow = pc + i * n;
            for (std::size_t l = 0; l < k; ++l) {
                const double av = arow[l];
                const double* brow = pb + l * n;
                for (std::size_t j = 0; j < n; ++j) {
                    crow[j] += av * brow[j];
                }
            }
        }
    }
    Tensor* pa = a.get();
    Tensor* pb = b.get();
    auto grad_fn = [pa, pb, m, k, n](const std::vector<double>& gout,
                                     const Tensor::GradBufferOf& grad_of) {
        if (pa->requires_grad) {
            auto& ga = grad_of(pa);
            const double* B = pb->values.data();
            for (std::size_t i = 0; i < m; ++i) {
                const double* grow = gout.data() + i * n;
                double* garow = ga.data() + i * k;
                for (std::size_t l = 0; l < k; ++l) {
                    const double* brow = B + l * n;
                    double s = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        s += grow[j] * brow[j];
                    }
                    garow[l] += s;
                }
            }
        }
        if (pb->requires_grad) {
            auto& gb = grad_of(pb);
            const double* A = pa->values.data();
            for (std::size_t i = 0; i < m; ++i) {
                const double* arow = A + i * k;
                const double* grow = gout.data() + i * n;
                for (std::size_t l = 0; l < k; ++l) {
                    const double av = arow[l];
                    double* gbrow = gb.data() + l * n;
                    for (std::size_t j = 0; j < n; ++j) {
                        gbrow[j] += av * grow[j];
                    }
                }
            }
        }
    };
    return result_of({m, n}, std::move(out), {a, b}, std::move(grad_fn));
}

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    if (is_bias_broadcast(a, b)) {
        const std::size_t f = b->shape[0];
        const std::size_t rows = a->numel() / f;
        std::vector<double> out(a->numel());
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < f; ++j) {
                out[r * f + j] = a->values[r * f + j] + b->values[j];
            }
        }
        Tensor* pa = a.get();
        Tensor* pb = b.get();
        auto grad_fn = [pa, pb, rows, f](const std::vector<double>& gout,
                                         const Tensor::GradBufferOf& grad_of) {
            if (pa->requires_grad) {
                auto& ga = grad_of(pa);
                for (std::size_t i = 0; i < gout.size(); ++i) {
                    ga[i] += gout[i];
                }
            }
            if (pb->requires_grad) {
                auto& gb = grad_of(pb);
                for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t j = 0; j < f; ++j) {
                        gb[j] += gout[r * f + j];
                    }
                }
            }
        };
        return result_of(a->shape, std::move(out), {a, b}, std::move(grad_fn));
    }
    require_same_shape(a, b, "add");
    std::vector<double> out(a->numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a->values[i] + b->values[i];
    }
    Tensor* pa = a.get();
    Tensor* pb = b.get();
    auto grad_fn = [pa, pb](const std::vector<double>& gout, const Tensor::GradBufferOf& grad_of) {
        if (pa->requires_grad) {
            auto& ga = grad_of(pa);
            for (std::size_t i = 0; i < gout.size(); ++i) {
                ga[i] += gout[i];
            }
        }
        if (pb->requires_grad) {
            auto& gb = grad_of(pb);
            for (std::size_t i = 0; i < gout.size(); ++i) {
                gb[i] += gout[i];
            }
        }
    };
    return result_of(a->shape, std::move(out), {a, b}, std::move(grad_fn));
}

TensorPtr subtract(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "subtract");
    std::vector<double> out(a->numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a->values[i] - b->values[i];
    }
    Tensor* pa = a.get();
    Tensor* pb = b.get();
    auto grad_fn = [pa, pb](const std::vector<double>& gout, const Tensor::GradBufferOf& grad_of) {
        if (pa->requires_grad) {
            auto& ga = grad_of(pa);
            for (std::size_t i = 0; i < gout.size(); ++i) {
                ga[i] += gout[i];
            }
        }
        if (pb->requires_grad) {
            auto& gb = grad_of(pb);
            for (std::size_t i = 0; i < gout.size(); ++i) {
                gb[i] -= gout[i];
            }
        }
    };
    return result_of(a->shape, std::move(out), {a, b}, std::move(grad_fn));
}

TensorPtr multiply(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "elementwise_multiply");
    std::vector<double> out(a->numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a->values[i] * b->values[i];
    }
    Tensor* pa = a.get();
    Tensor* pb = b.get();
    auto grad_fn = [pa, pb](const std::vector<double>& gout, const Tensor::GradBufferOf& grad_of) {
        if (pa->requires_grad) {
            auto& ga = grad_of(pa);
            for (std::size_t i = 0; i < gout.size(); ++i) {
                ga[i] += gout[i] * pb->values[i];
            }
        }
        if (pb->requires_grad) {
            auto& gb = grad_of(pb);
            for (std::size_t i = 0; i < gout.size(); ++i) {
                gb[i] += gout[i] * pa->values[i];
            }
        }
    };
    return result_of(a->shape, std::move(out), {a, b}, std::move(grad_fn));
}

TensorPtr sigmoid(const TensorPtr& x) {
    auto out = unary_map(
        x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); }, nullptr);
    Tensor* px = x.get();
    Tensor* pout = out.get();
    if (out->requires_grad) {
        out->grad_fn = [px, pout](const std::vector<double>& gout,
                                  const Tensor::GradBufferOf& grad_of) {
            auto& gx = grad_of(px);
            for (std::size_t i = 0; i < gout.size(); ++i) {
                const double s = pout->values[i];
                gx[i] += gout[i] * s * (1.0 - s);
            }
        };
    }
    return out;
}

TensorPtr tanh(const TensorPtr& x) {
    auto out = unary_map(
        x, [](double v) { return std::tanh(v); }, nullptr);
    Tensor* px = x.get();
    Tensor* pout = out.get();
    if (out->requires_grad) {
        out->grad_fn = [px, pout](const std::vector<double>& gout,
                                  const Tensor::GradBufferOf& grad_of) {
            auto& gx = grad_of(px);
            for (std::size_t i = 0; i < gout.size(); ++i) {
                const double t = pout->values[i];
                gx[i] += gout[i] * (1.0 - t * t);
            }
        };
    }
    return out;
}

TensorPtr relu(const TensorPtr& x) {
    Tensor* px = x.get();
    return unary_map(
        x, [](double v) { return v > 0.0 ? v : 0.0; },
        [px](const std::vector<double>& gout, const Tensor::GradBufferOf& grad_of) {
            auto& gx = grad_of(px);
            for (std::size_t i = 0; i < gout.size(); ++i) {
                if (px->values[i] > 0.0) {
                    gx[i] += gout[i];
                }
            }
        });
}

TensorPtr square(const TensorPtr& x) {
    Tensor* px = x.get();
    return unary_map(
        x, [](double v) { return v * v; },
        [px](const std::vector<double>& gout, const Tensor::GradBufferOf& grad_of) {
            auto& gx = grad_of(px);
            for (std::size_t i = 0; i < gout.size(); ++i) {
                gx[i] += 2.0 * px->values[i] * gout[i];
            }
        });
}

TensorPtr scale_by_constant(const TensorPtr& x, double c) {
    Tensor* px = x.get();
    return unary_map(
        x, [c](double v) { return c * v; },
        [px, c](const std::vector<double>& gout, const Tensor::GradBufferOf& grad_of) {
            auto& gx = grad_of(px);
            for (std::size_t i = 0; i < gout.size(); ++i) {
                gx[i] += c * gout[i];
            }
        });
}

TensorPtr concat_last_dim(const TensorPtr& a, const TensorPtr& b) {
    if (a->shape.size() != b->shape.size() || a->shape.size() < 1) {
        throw ShapeError("concat_last_dim: rank mismatch " + shape_str(a->shape) + " vs " +
                         shape_str(b->shape));
    }
    for (std::size_t i = 0; i + 1 < a->shape.size(); ++i) {
        if (a->shape[i] != b->shape[i]) {
            throw ShapeError("concat_last_dim: leading dims differ, " + shape_str(a->shape) +
                             " vs " + shape_str(b->shape));
        }
    }
    const std::size_t fa = a->shape.back();
    const std::size_t fb = b->shape.back();
    const std::size_t rows = a->numel() / fa;
    std::vector<std::size_t> out_shape = a->shape;
    out_shape.back() = fa + fb;
    std::vector<double> out(rows * (fa + fb));
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(a->values.data() + r * fa, fa, out.data() + r * (fa + fb));
        std::copy_n(b->values.data() + r * fb, fb, out.data() + r * (fa + fb) + fa);
    }
    Tensor* pa = a.get();
    Tensor* pb = b.get();
    auto grad_fn = [pa, pb, rows, fa, fb](const std::vector<double>& gout,
                                          const Tensor::GradBufferOf& grad_of) {
        if (pa->requires_grad) {
            auto& ga = grad_of(pa);
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t j = 0; j < fa; ++j) {
                    ga[r * fa + j] += gout[r * (fa + fb) + j];
                }
            }
        }
        if (pb->requires_grad) {
            auto& gb = grad_of(pb);
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t j = 0; j < fb; ++j) {
                    gb[r * fb + j] += gout[r * (fa + fb) + fa + j];
                }
            }
        }
    };
    return result_of(std::move(out_shape), std::move(out), {a, b}, std::move(grad_fn));
}

TensorPtr reduce_sum(const TensorPtr& x) {
    double s = 0.0;
    for (double v : x->values) {
        s += v;
    }
    Tensor* px = x.get();
    auto grad_fn = [px](const std::vector<double>& gout, const Tensor::GradBufferOf& grad_of) {
        auto& gx = grad_of(px);
        for (std::size_t i = 0; i < gx.size(); ++i) {
            gx[i] += gout[0];
        }
    };
    return result_of({1}, {s}, {x}, std::move(grad_fn));
}

TensorPtr reduce_mean(const TensorPtr& x) {
    double s = 0.0;
    for (double v : x->values) {
        s += v;
    }
    const double inv_n = 1.0 / static_cast<double>(x->numel());
    Tensor* px = x.get();
    auto grad_fn = [px, inv_n](const std::vector<double>& gout,
                               const Tensor::GradBufferOf& grad_of) {
        auto& gx = grad_of(px);
        for (std::size_t i = 0; i < gx.size(); ++i) {
            gx[i] += gout[0] * inv_n;
        }
    };
    return result_of({1}, {s * inv_n}, {x}, std::move(grad_fn));
}

TensorPtr apply_primitive(PrimitiveKind kind, const std::vector<TensorPtr>& operands,
                          double constant) {
    auto want = [&](std::size_t n) {
        if (operands.size() != n) {
            throw UsageError("primitive expects " + std::to_string(n) + " operands, got " +
                             std::to_string(operands.size()));
        }
    };
    switch (kind) {
        case PrimitiveKind::MatMul:
            want(2);
            return matmul(operands[0], operands[1]);
        case PrimitiveKind::Add:
            want(2);
            return add(operands[0], operands[1]);
        case PrimitiveKind::Subtract:
            want(2);
            return subtract(operands[0], operands[1]);
        case PrimitiveKind::ElementwiseMultiply:
            want(2);
            return multiply(operands[0], operands[1]);
        case PrimitiveKind::Sigmoid:
            want(1);
            return sigmoid(operands[0]);
        case PrimitiveKind::Tanh:
            want(1);
            return tanh(operands[0]);
        case PrimitiveKind::Relu:
            want(1);
            return relu(operands[0]);
        case PrimitiveKind::ConcatLastDim:
            want(2);
            return concat_last_dim(operands[0], operands[1]);
        case PrimitiveKind::ScaleByConstant:
            want(1);
            return scale_by_constant(operands[0], constant);
        case PrimitiveKind::Square:
            want(1);
            return square(operands[0]);
        case PrimitiveKind::ReduceSum:
            want(1);
            return reduce_sum(operands[0]);
        case PrimitiveKind::ReduceMean:
            want(1);
            return reduce_mean(operands[0]);
    }
    throw UsageError("unknown primitive kind " + std::to_string(static_cast<int>(kind)));
}

TensorPtr dropout(const TensorPtr& x, double rate, Rng& rng, bool training) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw UsageError("dropout rate must lie in [0,1), got " + std::to_string(rate));
    }
    if (!training || rate == 0.0) {
        // pass-through, but keep the tape connected for uniform call sites
        Tensor* px = x.get();
        return unary_map(
            x, [](double v) { return v; },
            [px](const std::vector<double>& gout, const Tensor::GradBufferOf& grad_of) {
                auto& gx = grad_of(px);
                for (std::size_t i = 0; i < gout.size(); ++i) {
                    gx[i] += gout[i];
                }
            });
    }
    const double keep_scale = 1.0 / (1.0 - rate);
    std::vector<double> mask(x->numel());
    for (auto& m : mask) {
        m = rng.uniform() < rate ? 0.0 : keep_scale;
    }
    std::vector<double> out(x->numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = x->values[i] * mask[i];
    }
    Tensor* px = x.get();
    auto grad_fn = [px, mask = std::move(mask)](const std::vector<double>& gout,
                                                const Tensor::GradBufferOf& grad_of) {
        auto& gx = grad_of(px);
        for (std::size_t i = 0; i < gout.size(); ++i) {
            gx[i] += gout[i] * mask[i];
        }
    };
    return result_of(x->shape, std::move(out), {x}, std::move(grad_fn));
}

GradientMap backward(const TensorPtr& loss, bool write_leaf_grads) {
    if (loss->numel() != 1) {
        throw UsageError("backward requires a scalar loss, got shape " + shape_str(loss->shape));
    }
    if (!loss->grad_fn) {
        throw UsageError(loss->record_consumed
                             ? "computation record already consumed by a previous backward"
                             : "loss was not produced by recorded primitives");
    }

    // Iterative post-order DFS over the tape; reversing it yields an order
    // where every consumer precedes its operands.
    std::vector<Tensor*> order;
    std::unordered_set<Tensor*> visited;
    std::vector<std::pair<Tensor*, std::size_t>> stack;
    stack.emplace_back(loss.get(), 0);
    visited.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Tensor* p = node->parents[idx++].get();
            if (p->requires_grad && p->grad_fn && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    std::unordered_map<const Tensor*, std::vector<double>> buffers;
    auto grad_of = [&buffers](const Tensor* t) -> std::vector<double>& {
        auto& buf = buffers[t];
        if (buf.empty()) {
            buf.assign(t->numel(), 0.0);
        }
        return buf;
    };
    grad_of(loss.get())[0] = 1.0;

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Tensor* node = *it;
        auto found = buffers.find(node);
        if (found == buffers.end()) {
            continue;
        }
        node->grad_fn(found->second, grad_of);
    }

    GradientMap leaf_grads;
    for (auto& [t, buf] : buffers) {
        if (t->requires_grad && t->is_leaf()) {
            if (write_leaf_grads) {
                auto* mut = const_cast<Tensor*>(t);
                if (mut->grad.size() != buf.size()) {
                    mut->grad.assign(buf.size(), 0.0);
                }
                for (std::size_t i = 0; i < buf.size(); ++i) {
                    mut->grad[i] += buf[i];
                }
            }
            leaf_grads.emplace(t, std::move(buf));
        }
    }

    // consume the record
    for (Tensor* node : order) {
        node->parents.clear();
        node->grad_fn = nullptr;
        node->record_consumed = true;
    }
    return leaf_grads;
}

}  // namespace aagc
