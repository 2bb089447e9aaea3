#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "aagc/rng.hpp"
#include "aagc/tensor.hpp"

namespace aagc {

enum class Activation { Identity, Relu, Tanh, Sigmoid };

enum class CellKind {
    AagcLstm,   // every gate is a graph convolution with its own learnable adjacency
    GcLstm,     // gates share one constant normalized tree adjacency
    GgruStyle,  // linear gates plus one adjacency-adaptive convolution on the hidden state
};

// One graph-convolution unit: Z = adjacency * X * weight + bias.
// adjacency is null for the linear gates of GcLstm/GgruStyle cells.
struct AagcParams {
    TensorPtr adjacency;  // N x N
    TensorPtr weight;     // F_i x F_o
    TensorPtr bias;       // F_o
};

struct RecurrentCellParams {
    CellKind kind = CellKind::AagcLstm;
    std::size_t node_count = 0;
    std::size_t input_features = 0;
    std::size_t hidden_features = 0;
    // gate order: input, forget, cell, output
    std::array<AagcParams, 4> gates;
    TensorPtr fixed_adjacency;  // GcLstm only; constant, not learnable
    AagcParams hidden_conv;     // GgruStyle only
};

struct CellState {
    TensorPtr hidden;  // N x F_h
    TensorPtr carry;   // N x F_h
};

CellState zero_state(std::size_t node_count, std::size_t hidden_features);

struct StepOptions {
    double input_dropout = 0.2;
    double hidden_dropout = 0.3;
    bool training = false;
    // carry update exactly as printed (C_{t-1} gated by the input gate) vs
    // the conventional role assignment (C_{t-1} gated by the forget gate)
    bool eq4_verbatim = true;
};

TensorPtr aagc_forward(const TensorPtr& x, const AagcParams& params, Activation activation);

// One recurrent step. Dropout (input rate on x_t, hidden rate on H_{t-1}) is
// applied before concatenation, training mode only; fresh masks every step.
std::pair<TensorPtr, CellState> lstm_step(const TensorPtr& x_t, const CellState& state,
                                          const RecurrentCellParams& cell, const StepOptions& opt,
                                          Rng& rng);

// Forward and backward passes from zero states; outputs merged by
// elementwise sum.
std::vector<TensorPtr> bidirectional_run(const std::vector<TensorPtr>& sequence,
                                         const RecurrentCellParams& fwd,
                                         const RecurrentCellParams& bwd, const StepOptions& opt,
                                         Rng& rng);

// Initialization: weights uniform in +-sqrt(6/(fan_in+fan_out)), biases zero,
// adjacencies copied from the provided row-major matrix.
AagcParams init_aagc_params(std::size_t node_count, std::size_t f_in, std::size_t f_out,
                            const std::vector<double>& adjacency_init, Rng& rng);
RecurrentCellParams init_cell(CellKind kind, std::size_t node_count, std::size_t f_in,
                              std::size_t f_h, const std::vector<double>& adjacency_init,
                              const std::vector<double>& fixed_adjacency, Rng& rng);

// Enumeration over stored learnable tensors, declaration order.
void for_each_learnable(const AagcParams& params, const std::function<void(const TensorPtr&)>& fn);
void for_each_learnable(const RecurrentCellParams& cell,
                        const std::function<void(const TensorPtr&)>& fn);

// Exact learnable-entry counts by enumeration.
std::size_t count_parameters(const AagcParams& params);
std::size_t count_parameters(const RecurrentCellParams& cell);

// Closed forms, biases included.
std::size_t aagc_layer_param_count(std::size_t n, std::size_t f_in, std::size_t f_out);
std::size_t cell_param_count(CellKind kind, std::size_t n, std::size_t f_in, std::size_t f_h);

}  // namespace aagc
