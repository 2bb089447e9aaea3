#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "aagc/rng.hpp"

namespace aagc {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// The primitive catalog. Every learnable computation in the project is
// expressed through these plus dropout().
enum class PrimitiveKind {
    MatMul,
    Add,
    Subtract,
    ElementwiseMultiply,
    Sigmoid,
    Tanh,
    Relu,
    ConcatLastDim,
    ScaleByConstant,
    Square,
    ReduceSum,
    ReduceMean,
};

/// Dense row-major 64-bit tensor. Results of primitives carry a backward
/// closure and operand links, forming a dynamic tape; backward() walks it.
///
/// A tape and its intermediate tensors are confined to one thread per
/// forward/backward pass. Leaf tensors (parameters) may be shared across
/// concurrent passes as long as backward() is called with
/// write_leaf_grads=false on all but one of them.
class Tensor : public std::enable_shared_from_this<Tensor> {
public:
    std::vector<std::size_t> shape;
    std::vector<double> values;
    bool requires_grad = false;
    std::vector<double> grad;  // same length as values iff requires_grad

    std::size_t numel() const { return values.size(); }
    bool is_leaf() const { return parents.empty() && !grad_fn; }
    void zero_grad();

    // Tape internals. grad_of hands the closure a mutable, lazily zeroed
    // gradient buffer for an operand; closures accumulate into it.
    using GradBufferOf = std::function<std::vector<double>&(const Tensor*)>;
    using GradFn = std::function<void(const std::vector<double>& gout, const GradBufferOf& grad_of)>;

    std::vector<TensorPtr> parents;
    GradFn grad_fn;
    bool record_consumed = false;
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);

// Leaf constructors. Throws ShapeError when values length does not match the
// shape product or the shape is empty / has a zero dimension.
TensorPtr make_tensor(std::vector<std::size_t> shape, std::vector<double> values,
                      bool requires_grad = false);
TensorPtr zeros(std::vector<std::size_t> shape, bool requires_grad = false);
TensorPtr full(std::vector<std::size_t> shape, double value, bool requires_grad = false);

// Primitives. Shapes must match exactly; the single broadcast exception is
// add(matrix, bias_row) where bias is rank-1 over the matrix's last dim.
TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr subtract(const TensorPtr& a, const TensorPtr& b);
TensorPtr multiply(const TensorPtr& a, const TensorPtr& b);
TensorPtr sigmoid(const TensorPtr& x);
TensorPtr tanh(const TensorPtr& x);
TensorPtr relu(const TensorPtr& x);
TensorPtr concat_last_dim(const TensorPtr& a, const TensorPtr& b);
TensorPtr scale_by_constant(const TensorPtr& x, double c);
TensorPtr square(const TensorPtr& x);
TensorPtr reduce_sum(const TensorPtr& x);   // scalar, shape {1}
TensorPtr reduce_mean(const TensorPtr& x);  // scalar, shape {1}

// Uniform dispatcher over the catalog; `constant` is consumed only by
// ScaleByConstant.
TensorPtr apply_primitive(PrimitiveKind kind, const std::vector<TensorPtr>& operands,
                          double constant = 0.0);

// Inverted dropout: zero entries with probability `rate`, scale survivors by
// 1/(1-rate); identity when !training. 0 <= rate < 1.
TensorPtr dropout(const TensorPtr& x, double rate, Rng& rng, bool training);

// Disables tape recording on the current thread for its lifetime; forward
// values are unchanged. Used for inference over long sequences.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool saved_;
};

bool grad_enabled();

// Leaf tensor -> d(loss)/d(leaf).
using GradientMap = std::unordered_map<const Tensor*, std::vector<double>>;

// Reverse-mode sweep from a scalar loss. Returns gradients for every
// reachable requires_grad leaf and, when write_leaf_grads, also accumulates
// them into leaf.grad. The record is consumed: a second call on the same
// loss throws UsageError.
GradientMap backward(const TensorPtr& loss, bool write_leaf_grads = true);

}  // namespace aagc
