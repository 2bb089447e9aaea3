#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aagc/graph_layers.hpp"
#include "aagc/skeleton.hpp"

namespace aagc {

// Defaults reproduce the reference network: 15-node graph, 12 input features
// per node, two bidirectional recurrent layers of width 512, 9 outputs per
// node (row-major rotation-matrix entries).
struct ModelConfig {
    std::size_t node_count = 15;
    std::size_t input_features = 12;
    std::size_t hidden_features = 512;
    std::size_t output_features = 9;
    CellKind cell_kind = CellKind::AagcLstm;
    bool eq4_verbatim = true;
    double input_dropout = 0.2;
    double hidden_dropout = 0.3;
    Activation input_activation = Activation::Relu;
    Activation output_activation = Activation::Identity;
    std::uint64_t seed = 0;
};

struct ModelParams {
    ModelConfig config;
    AagcParams input_layer;  // F_in -> h
    RecurrentCellParams layer1_fwd, layer1_bwd;  // h -> h, gate input 2h
    RecurrentCellParams layer2_fwd, layer2_bwd;  // fed by the summed outputs
    AagcParams output_layer;  // h -> F_out
};

const char* to_string(CellKind kind);
const char* to_string(Activation act);
CellKind cell_kind_from_string(const std::string& s);
Activation activation_from_string(const std::string& s);

// Canonical JSON round-trip of the configuration (sorted keys, fixed field
// set); the digest of this string identifies a configuration in reports.
std::string config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const std::string& json_text);

// Adjacency initialization per configuration: the canonical skeleton's rest
// geometry when node_count == 15, evenly spaced collinear nodes otherwise.
std::vector<double> adjacency_init_for(const ModelConfig& config);
std::vector<double> fixed_adjacency_for(const ModelConfig& config);

// Deterministic in config.seed. Throws ConfigError on non-positive sizes.
ModelParams build_model(const ModelConfig& config);

void for_each_learnable(const ModelParams& params,
                        const std::function<void(const TensorPtr&)>& fn);
std::size_t count_parameters(const ModelParams& params);
std::size_t network_param_count(const ModelConfig& config);  // closed form

// Per-frame inference/training graph: frames of shape N x F_in in, frames of
// shape N x F_out out. Training mode samples fresh dropout masks from rng.
std::vector<TensorPtr> model_forward(const std::vector<TensorPtr>& frames,
                                     const ModelParams& params, bool training, Rng& rng);

// Convenience inference on flat data (T * N * F_in values, row-major) with
// tape recording disabled; returns T * N * F_out values.
std::vector<double> model_forward_values(std::span<const double> frames, std::size_t frame_count,
                                         const ModelParams& params);

// Nearest rotation by orthogonal projection (SVD with determinant
// correction). Rank-deficient input falls back to identity with a warning on
// stderr. Row-major 3x3 in and out; aliasing allowed.
void project_to_rotation(const double* raw9, double* out9);

// Applies the projection to every joint of every frame (values laid out as
// T * N * 9) and returns a MotionSequence.
MotionSequence project_to_rotations(std::span<const double> raw, std::size_t frame_count,
                                    std::size_t joint_count, double frame_rate);

// Checkpoint file: magic "AAGC", u32 version, canonical config JSON, then
// every learnable tensor in declaration order with shape prefixes.
// Little-endian, bit-exact round-trip.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace aagc
