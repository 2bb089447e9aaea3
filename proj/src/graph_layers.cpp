#include "aagc/graph_layers.hpp"

#include <cmath>
#include <string>

#include "aagc/errors.hpp"

namespace aagc {

namespace {

TensorPtr apply_activation(const TensorPtr& x, Activation act) {
    switch (act) {
        case Activation::Identity:
            return x;
        case Activation::Relu:
            return relu(x);
        case Activation::Tanh:
            return tanh(x);
        case Activation::Sigmoid:
            return sigmoid(x);
    }
    throw UsageError("invalid activation");
}

TensorPtr glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::vector<double> v(rows * cols);
    for (auto& e : v) {
        e = rng.uniform(-limit, limit);
    }
    return make_tensor({rows, cols}, std::move(v), true);
}

// Z = A (X W) + b; the graph mixing is applied to the projected features,
// which is the cheaper association of the same product.
TensorPtr graph_affine(const TensorPtr& x, const TensorPtr& adjacency, const TensorPtr& weight,
                       const TensorPtr& bias) {
    auto projected = matmul(x, weight);
    if (adjacency) {
        projected = matmul(adjacency, projected);
    }
    return add(projected, bias);
}

}  // namespace

CellState zero_state(std::size_t node_count, std::size_t hidden_features) {
    CellState st;
    st.hidden = zeros({node_count, hidden_features});
    st.carry = zeros({node_count, hidden_features});
    return st;
}

TensorPtr aagc_forward(const TensorPtr& x, const AagcParams& params, Activation activation) {
    return apply_activation(graph_affine(x, params.adjacency, params.weight, params.bias),
                            activation);
}

std::pair<TensorPtr, CellState> lstm_step(const TensorPtr& x_t, const CellState& state,
                                          const RecurrentCellParams& cell, const StepOptions& opt,
                                          Rng& rng) {
    if (x_t->shape.size() != 2 || x_t->shape[0] != cell.node_count ||
        x_t->shape[1] != cell.input_features) {
        throw ShapeError("cell input must be " + std::to_string(cell.node_count) + "x" +
                         std::to_string(cell.input_features));
    }
    const std::vector<std::size_t> state_shape{cell.node_count, cell.hidden_features};
    if (state.hidden->shape != state_shape || state.carry->shape != state_shape) {
        throw ShapeError("cell state must be " + std::to_string(cell.node_count) + "x" +
                         std::to_string(cell.hidden_features));
    }

    TensorPtr x_in = opt.training ? dropout(x_t, opt.input_dropout, rng, true) : x_t;
    TensorPtr h_in =
        opt.training ? dropout(state.hidden, opt.hidden_dropout, rng, true) : state.hidden;
    if (cell.kind == CellKind::GgruStyle) {
        h_in = graph_affine(h_in, cell.hidden_conv.adjacency, cell.hidden_conv.weight,
                            cell.hidden_conv.bias);
    }
    auto gate_input = concat_last_dim(x_in, h_in);

    auto gate = [&](std::size_t g, Activation act) {
        const AagcParams& p = cell.gates[g];
        const TensorPtr& adjacency =
            cell.kind == CellKind::GcLstm ? cell.fixed_adjacency : p.adjacency;
        return apply_activation(graph_affine(gate_input, adjacency, p.weight, p.bias), act);
    };
    auto gate_i = gate(0, Activation::Sigmoid);
    auto gate_f = gate(1, Activation::Sigmoid);
    auto gate_c = gate(2, Activation::Tanh);
    auto gate_o = gate(3, Activation::Sigmoid);

    // carry update as printed: C_t = C_{t-1} (.) X_i + X_f (.) X_c; the
    // conventional variant swaps the i/f roles on the first term
    TensorPtr carry = opt.eq4_verbatim
                          ? add(multiply(state.carry, gate_i), multiply(gate_f, gate_c))
                          : add(multiply(state.carry, gate_f), multiply(gate_i, gate_c));
    TensorPtr hidden = multiply(tanh(carry), gate_o);
    TensorPtr output = tanh(hidden);

    CellState next;
    next.hidden = hidden;
    next.carry = carry;
    return {output, next};
}

std::vector<TensorPtr> bidirectional_run(const std::vector<TensorPtr>& sequence,
                                         const RecurrentCellParams& fwd,
                                         const RecurrentCellParams& bwd, const StepOptions& opt,
                                         Rng& rng) {
    if (sequence.empty()) {
        throw UsageError("bidirectional run requires a nonempty sequence");
    }
    if (fwd.hidden_features != bwd.hidden_features || fwd.input_features != bwd.input_features ||
        fwd.node_count != bwd.node_count) {
        throw ShapeError("forward and backward cells must share feature sizes");
    }
    const std::size_t frames = sequence.size();

    std::vector<TensorPtr> fwd_out(frames);
    CellState st = zero_state(fwd.node_count, fwd.hidden_features);
    for (std::size_t t = 0; t < frames; ++t) {
        auto [o, next] = lstm_step(sequence[t], st, fwd, opt, rng);
        fwd_out[t] = o;
        st = next;
    }

    std::vector<TensorPtr> bwd_out(frames);
    st = zero_state(bwd.node_count, bwd.hidden_features);
    for (std::size_t t = frames; t-- > 0;) {
        auto [o, next] = lstm_step(sequence[t], st, bwd, opt, rng);
        bwd_out[t] = o;
        st = next;
    }

    std::vector<TensorPtr> merged(frames);
    for (std::size_t t = 0; t < frames; ++t) {
        merged[t] = add(fwd_out[t], bwd_out[t]);
    }
    return merged;
}

AagcParams init_aagc_params(std::size_t node_count, std::size_t f_in, std::size_t f_out,
                            const std::vector<double>& adjacency_init, Rng& rng) {
    if (adjacency_init.size() != node_count * node_count) {
        throw ShapeError("adjacency init must be " + std::to_string(node_count) + "^2 entries");
    }
    AagcParams p;
    p.adjacency = make_tensor({node_count, node_count}, adjacency_init, true);
    p.weight = glorot_uniform(f_in, f_out, rng);
    p.bias = zeros({f_out}, true);
    return p;
}

RecurrentCellParams init_cell(CellKind kind, std::size_t node_count, std::size_t f_in,
                              std::size_t f_h, const std::vector<double>& adjacency_init,
                              const std::vector<double>& fixed_adjacency, Rng& rng) {
    RecurrentCellParams cell;
    cell.kind = kind;
    cell.node_count = node_count;
    cell.input_features = f_in;
    cell.hidden_features = f_h;
    const std::size_t gate_in = f_in + f_h;
    for (auto& g : cell.gates) {
        if (kind == CellKind::AagcLstm) {
            g.adjacency = make_tensor({node_count, node_count}, adjacency_init, true);
        }
        g.weight = glorot_uniform(gate_in, f_h, rng);
        g.bias = zeros({f_h}, true);
    }
    if (kind == CellKind::GcLstm) {
        if (fixed_adjacency.size() != node_count * node_count) {
            throw ShapeError("fixed adjacency must be " + std::to_string(node_count) +
                             "^2 entries");
        }
        cell.fixed_adjacency = make_tensor({node_count, node_count}, fixed_adjacency, false);
    }
    if (kind == CellKind::GgruStyle) {
        cell.hidden_conv.adjacency = make_tensor({node_count, node_count}, adjacency_init, true);
        cell.hidden_conv.weight = glorot_uniform(f_h, f_h, rng);
        cell.hidden_conv.bias = zeros({f_h}, true);
    }
    return cell;
}

void for_each_learnable(const AagcParams& params,
                        const std::function<void(const TensorPtr&)>& fn) {
    for (const auto& t : {params.adjacency, params.weight, params.bias}) {
        if (t && t->requires_grad) {
            fn(t);
        }
    }
}

void for_each_learnable(const RecurrentCellParams& cell,
                        const std::function<void(const TensorPtr&)>& fn) {
    for (const auto& g : cell.gates) {
        for_each_learnable(g, fn);
    }
    for_each_learnable(cell.hidden_conv, fn);
}

std::size_t count_parameters(const AagcParams& params) {
    std::size_t n = 0;
    for_each_learnable(params, [&](const TensorPtr& t) { n += t->numel(); });
    return n;
}

std::size_t count_parameters(const RecurrentCellParams& cell) {
    std::size_t n = 0;
    for_each_learnable(cell, [&](const TensorPtr& t) { n += t->numel(); });
    return n;
}

std::size_t aagc_layer_param_count(std::size_t n, std::size_t f_in, std::size_t f_out) {
    return n * n + f_in * f_out + f_out;
}

std::size_t cell_param_count(CellKind kind, std::size_t n, std::size_t f_in, std::size_t f_h) {
    const std::size_t linear_gate = (f_in + f_h) * f_h + f_h;
    switch (kind) {
        case CellKind::AagcLstm:
            return 4 * (n * n + linear_gate);
        case CellKind::GcLstm:
            return 4 * linear_gate;
        case CellKind::GgruStyle:
            return 4 * linear_gate + n * n + f_h * f_h + f_h;
    }
    throw UsageError("invalid cell kind");
}

}  // namespace aagc
